//! Unified-diff hunks and their new-file line ranges.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("hunk {hunk}: {message}")]
    Hunk { hunk: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineTag {
    Context,
    Add,
    Del,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<(LineTag, String)>,
}

impl Hunk {
    /// Inclusive new-file line range the hunk covers. A pure deletion maps to
    /// its insertion-point line.
    pub fn new_range(&self) -> (usize, usize) {
        (self.new_start, self.new_start + self.new_len.max(1) - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UnifiedDiff {
    /// Ordered by `new_start`.
    pub hunks: Vec<Hunk>,
}

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@").unwrap())
}

fn is_file_header(line: &str) -> bool {
    [
        "diff ",
        "--- ",
        "+++ ",
        "index ",
        "new file",
        "deleted file",
        "old mode",
        "new mode",
        "similarity",
        "rename ",
        "Binary files",
    ]
    .iter()
    .any(|p| line.starts_with(p))
}

/// Parse the hunks of a unified diff. File headers and text between hunks are
/// skipped; hunk bodies must match their header counts exactly.
pub fn parse_unified_diff(text: &str) -> Result<UnifiedDiff, DiffError> {
    let mut hunks: Vec<Hunk> = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        if let Some(caps) = header_re().captures(line) {
            let index = hunks.len();
            let num = |i: usize| -> Result<usize, DiffError> {
                caps.get(i).map_or(Ok(1), |m| {
                    m.as_str()
                        .parse()
                        .map_err(|_| DiffError::Hunk { hunk: index, message: "line number out of range".into() })
                })
            };
            let mut hunk =
                Hunk { old_start: num(1)?, old_len: num(2)?, new_start: num(3)?, new_len: num(4)?, lines: Vec::new() };
            let (mut old_seen, mut new_seen) = (0, 0);
            while old_seen < hunk.old_len || new_seen < hunk.new_len {
                let Some(body) = lines.next() else {
                    return Err(DiffError::Hunk {
                        hunk: index,
                        message: format!(
                            "header promises {}/{} lines, body has {old_seen}/{new_seen}",
                            hunk.old_len, hunk.new_len
                        ),
                    });
                };
                let (tag, rest) = match body.chars().next() {
                    Some(' ') => (LineTag::Context, &body[1..]),
                    None => (LineTag::Context, ""),
                    Some('+') => (LineTag::Add, &body[1..]),
                    Some('-') => (LineTag::Del, &body[1..]),
                    Some('\\') => continue,
                    _ => {
                        return Err(DiffError::Hunk {
                            hunk: index,
                            message: format!(
                                "body ended after {old_seen}/{new_seen} of {}/{} lines",
                                hunk.old_len, hunk.new_len
                            ),
                        })
                    }
                };
                match tag {
                    LineTag::Context => {
                        old_seen += 1;
                        new_seen += 1;
                    }
                    LineTag::Add => new_seen += 1,
                    LineTag::Del => old_seen += 1,
                }
                if old_seen > hunk.old_len || new_seen > hunk.new_len {
                    return Err(DiffError::Hunk {
                        hunk: index,
                        message: format!("body exceeds header counts {}/{}", hunk.old_len, hunk.new_len),
                    });
                }
                hunk.lines.push((tag, rest.to_string()));
            }
            while lines.peek().is_some_and(|l| l.starts_with('\\')) {
                lines.next();
            }
            if let Some(next) = lines.peek() {
                if matches!(next.chars().next(), Some('+' | '-' | ' ')) && !is_file_header(next) {
                    return Err(DiffError::Hunk {
                        hunk: index,
                        message: "body is longer than the header counts".into(),
                    });
                }
            }
            hunks.push(hunk);
        }
    }
    hunks.sort_by_key(|h| h.new_start);
    Ok(UnifiedDiff { hunks })
}
