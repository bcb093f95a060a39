//! Vulnerability labels from offline CVE manifests and commit-log exports.
//!
//! A function is vulnerable when some hunk of some fixing commit of some CVE
//! intersects its line span in the post-fix file. Repeated attributions only
//! add evidence; the label itself stays boolean.

pub mod diff;

use std::collections::{BTreeMap, BTreeSet};
use std::io;
use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;
use thiserror::Error;

pub use diff::{parse_unified_diff, DiffError, Hunk, LineTag, UnifiedDiff};

use crate::cparse::FunctionRecord;

#[derive(Debug, Error)]
pub enum MineError {
    #[error("CVE manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("commit log at byte {offset}: {message}")]
    CommitLog { offset: usize, message: String },
    #[error("label table: {0}")]
    Labels(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn cve_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"CVE-[0-9]{4}-[0-9]{4,}").unwrap())
}

pub fn is_cve_id(s: &str) -> bool {
    cve_re().find(s).is_some_and(|m| m.start() == 0 && m.end() == s.len())
}

/// Distinct CVE ids mentioned in `text`, in order of first appearance.
pub fn find_cve_ids(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    cve_re().find_iter(text).map(|m| m.as_str().to_string()).filter(|id| seen.insert(id.clone())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiff {
    pub path: String,
    pub diff: UnifiedDiff,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub commit_id: String,
    pub message: String,
    pub file_diffs: Vec<FileDiff>,
    /// CVE ids found in the message.
    pub cve_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CveRecord {
    pub cve_id: String,
    pub commits: Vec<CommitRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VulnerabilityLabel {
    pub id: String,
    pub vulnerable: bool,
    /// `(cve_id, commit_id)` pairs, sorted and distinct.
    pub evidence: Vec<(String, String)>,
}

fn field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value, MineError> {
    obj.get(key)
        .ok_or_else(|| MineError::Manifest { path: path.to_string(), message: format!("missing field {key:?}") })
}

fn text_field(obj: &Value, key: &str, path: &str) -> Result<String, MineError> {
    field(obj, key, path)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| MineError::Manifest { path: format!("{path}.{key}"), message: "expected a string".into() })
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, MineError> {
    v.as_array().ok_or_else(|| MineError::Manifest { path: path.to_string(), message: "expected an array".into() })
}

/// Parse `[ { cve_id, commits: [ { commit_id, message, files: [ { path, diff } ] } ] } ]`.
pub fn parse_cve_manifest(text: &str) -> Result<Vec<CveRecord>, MineError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| MineError::Manifest { path: "$".into(), message: e.to_string() })?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, cve) in array(&root, "$")?.iter().enumerate() {
        let p = format!("$[{i}]");
        let cve_id = text_field(cve, "cve_id", &p)?;
        if !is_cve_id(&cve_id) {
            return Err(MineError::Manifest {
                path: format!("{p}.cve_id"),
                message: format!("malformed CVE id {cve_id:?}"),
            });
        }
        if !seen.insert(cve_id.clone()) {
            return Err(MineError::Manifest {
                path: format!("{p}.cve_id"),
                message: format!("duplicate CVE id {cve_id}"),
            });
        }
        let mut commits = Vec::new();
        for (j, c) in array(field(cve, "commits", &p)?, &format!("{p}.commits"))?.iter().enumerate() {
            let cp = format!("{p}.commits[{j}]");
            let message = match c.get("message") {
                None | Some(Value::Null) => String::new(),
                Some(_) => text_field(c, "message", &cp)?,
            };
            let mut file_diffs = Vec::new();
            let files = c.get("files").map(|f| array(f, &format!("{cp}.files"))).transpose()?;
            for (k, f) in files.into_iter().flatten().enumerate() {
                let fp = format!("{cp}.files[{k}]");
                let diff = parse_unified_diff(&text_field(f, "diff", &fp)?)
                    .map_err(|e| MineError::Manifest { path: format!("{fp}.diff"), message: e.to_string() })?;
                file_diffs.push(FileDiff { path: text_field(f, "path", &fp)?, diff });
            }
            commits.push(CommitRecord {
                commit_id: text_field(c, "commit_id", &cp)?,
                cve_ids: find_cve_ids(&message),
                message,
                file_diffs,
            });
        }
        out.push(CveRecord { cve_id, commits });
    }
    Ok(out)
}

fn delimiter_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\x00COMMIT (\S+)\x00\r?$").unwrap())
}

/// Split a `git log -p` style body into per-file diffs keyed by the
/// post-image path. Deleted files (`+++ /dev/null`) are dropped.
fn split_file_diffs(body: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut current: Option<(Option<String>, String)> = None;
    for line in body.split_inclusive('\n') {
        if line.starts_with("diff --git ") {
            if let Some((Some(p), text)) = current.take() {
                out.push((p, text));
            }
            current = Some((None, String::new()));
        }
        if let Some((path, text)) = current.as_mut() {
            if let Some(p) = line.strip_prefix("+++ ") {
                if path.is_none() {
                    let p = p.trim_end();
                    if p != "/dev/null" {
                        *path = Some(p.strip_prefix("b/").unwrap_or(p).to_string());
                    }
                }
            }
            text.push_str(line);
        }
    }
    if let Some((Some(p), text)) = current {
        out.push((p, text));
    }
    out
}

/// Scan a commit-log export. Records start with a line `\0COMMIT <id>\0`;
/// message lines follow, optionally followed by `diff --git` sections.
/// Only commits whose message names a CVE are returned.
pub fn scan_commit_log(export: &str) -> Result<Vec<CommitRecord>, MineError> {
    struct Pending {
        id: String,
        message: String,
        diff: String,
        offset: usize,
    }
    let mut records: Vec<Pending> = Vec::new();
    let mut offset = 0;
    for line in export.split_inclusive('\n') {
        let here = offset;
        offset += line.len();
        let bare = line.strip_suffix('\n').unwrap_or(line);
        if bare.starts_with('\0') || bare.contains('\0') {
            let caps = delimiter_re().captures(bare).ok_or_else(|| MineError::CommitLog {
                offset: here,
                message: "malformed record separator (expected \\0COMMIT <id>\\0)".into(),
            })?;
            records.push(Pending {
                id: caps[1].to_string(),
                message: String::new(),
                diff: String::new(),
                offset: here,
            });
            continue;
        }
        match records.last_mut() {
            None if bare.trim().is_empty() => {}
            None => {
                return Err(MineError::CommitLog {
                    offset: here,
                    message: "content before the first record separator".into(),
                })
            }
            Some(r) if !r.diff.is_empty() || line.starts_with("diff --git ") => r.diff.push_str(line),
            Some(r) => r.message.push_str(line),
        }
    }
    let mut out = Vec::new();
    for r in records {
        let cve_ids = find_cve_ids(&r.message);
        if cve_ids.is_empty() {
            continue;
        }
        let mut file_diffs = Vec::new();
        for (path, text) in split_file_diffs(&r.diff) {
            let diff = parse_unified_diff(&text).map_err(|e| MineError::CommitLog {
                offset: r.offset,
                message: format!("commit {} file {path}: {e}", r.id),
            })?;
            file_diffs.push(FileDiff { path, diff });
        }
        out.push(CommitRecord { commit_id: r.id, message: r.message.trim_end().to_string(), file_diffs, cve_ids });
    }
    Ok(out)
}

/// Fold commits found in the log into the manifest's CVE records. A commit
/// already listed for a CVE keeps its manifest diffs unless it had none.
pub fn merge_commit_log(mut cves: Vec<CveRecord>, commits: &[CommitRecord]) -> Vec<CveRecord> {
    for commit in commits {
        for id in &commit.cve_ids {
            let pos = match cves.iter().position(|c| &c.cve_id == id) {
                Some(p) => p,
                None => {
                    cves.push(CveRecord { cve_id: id.clone(), commits: Vec::new() });
                    cves.len() - 1
                }
            };
            let rec = &mut cves[pos];
            match rec.commits.iter_mut().find(|c| c.commit_id == commit.commit_id) {
                Some(existing) if existing.file_diffs.is_empty() => existing.file_diffs = commit.file_diffs.clone(),
                Some(_) => {}
                None => rec.commits.push(commit.clone()),
            }
        }
    }
    cves
}

/// Ids of functions whose span intersects some hunk's new-file range.
pub fn attribute(diff: &UnifiedDiff, functions: &[FunctionRecord]) -> BTreeSet<String> {
    functions
        .iter()
        .filter(|f| {
            diff.hunks.iter().any(|h| {
                let (lo, hi) = h.new_range();
                lo <= f.end_line && f.begin_line <= hi
            })
        })
        .map(|f| f.id.clone())
        .collect()
}

/// One label per function. Diffs for paths outside the corpus and commits
/// without diffs produce warnings.
pub fn label_functions(functions: &[FunctionRecord], cves: &[CveRecord]) -> (Vec<VulnerabilityLabel>, Vec<String>) {
    let mut by_file: BTreeMap<&str, Vec<FunctionRecord>> = BTreeMap::new();
    for f in functions {
        by_file.entry(f.file.as_str()).or_default().push(f.clone());
    }
    let mut evidence: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for cve in cves {
        for commit in &cve.commits {
            if commit.file_diffs.is_empty() {
                warnings
                    .push(format!("{} commit {}: no diff available, nothing attributed", cve.cve_id, commit.commit_id));
            }
            for fd in &commit.file_diffs {
                let Some(fns) = by_file.get(fd.path.as_str()) else {
                    warnings
                        .push(format!("{} commit {}: {} is not in the corpus", cve.cve_id, commit.commit_id, fd.path));
                    continue;
                };
                for id in attribute(&fd.diff, fns) {
                    evidence.entry(id).or_default().insert((cve.cve_id.clone(), commit.commit_id.clone()));
                }
            }
        }
    }
    let labels = functions
        .iter()
        .map(|f| {
            let ev: Vec<(String, String)> =
                evidence.get(&f.id).map(|s| s.iter().cloned().collect()).unwrap_or_default();
            VulnerabilityLabel { id: f.id.clone(), vulnerable: !ev.is_empty(), evidence: ev }
        })
        .collect();
    (labels, warnings)
}

/// `id,vulnerable,evidence_count,cve_ids`, sorted by id.
pub fn write_label_csv<W: io::Write>(labels: &[VulnerabilityLabel], out: W) -> Result<(), MineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "vulnerable", "evidence_count", "cve_ids"])?;
    let mut sorted: Vec<&VulnerabilityLabel> = labels.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for l in sorted {
        let ids: BTreeSet<&str> = l.evidence.iter().map(|(c, _)| c.as_str()).collect();
        w.write_record([
            l.id.clone(),
            l.vulnerable.to_string(),
            l.evidence.len().to_string(),
            ids.into_iter().collect::<Vec<_>>().join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read `id -> vulnerable` from a label table.
pub fn read_label_csv<R: io::Read>(input: R) -> Result<BTreeMap<String, bool>, MineError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("id") || header.get(1).map(String::as_str) != Some("vulnerable") {
        return Err(MineError::Labels("expected columns id,vulnerable,...".into()));
    }
    let mut out = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec?;
        let v = match &rec[1] {
            "true" => true,
            "false" => false,
            other => {
                return Err(MineError::Labels(format!("{}: vulnerable must be true or false, got {other:?}", &rec[0])))
            }
        };
        out.insert(rec[0].to_string(), v);
    }
    Ok(out)
}
