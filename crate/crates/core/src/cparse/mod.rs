//! Variability-aware scanning of unpreprocessed C.
//!
//! Braces are counted across every conditional branch. A function is an
//! identifier, a parenthesized parameter list, and `{` at top-level nesting;
//! its body runs to the matching `}`. Bodies whose braces only balance in some
//! configurations are rejected.

pub mod directives;
pub mod lexer;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use directives::{condition_of, layout, DirectiveEvent, DirectiveKind, Layout};
pub use lexer::{tokenize, Token, TokenKind};

use crate::pcalg::{OptionName, PresenceCondition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("{path}:{line}: lex error: {message}")]
    Lex { path: String, line: usize, message: String },
    #[error("{path}:{line}: {message}")]
    Structural { path: String, line: usize, message: String },
    #[error("{path}:{line}: bad preprocessor condition: {message}")]
    Expression { path: String, line: usize, message: String },
}

impl ScanError {
    pub fn line(&self) -> usize {
        match self {
            ScanError::Lex { line, .. } | ScanError::Structural { line, .. } | ScanError::Expression { line, .. } => {
                *line
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub content: String,
    pub file_pc: PresenceCondition,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        SourceFile { path: path.into(), content: content.into(), file_pc: PresenceCondition::True }
    }

    pub fn with_pc(mut self, pc: PresenceCondition) -> Self {
        self.file_pc = pc;
        self
    }
}

/// Decode raw bytes as UTF-8, falling back to Latin-1.
pub fn decode_source(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_string(),
        Err(_) => bytes.iter().map(|&b| b as char).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSite {
    pub callee_name: String,
    pub line: usize,
    /// Conjunction of the branches opened inside the caller's body.
    pub local_pc: PresenceCondition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    /// `file::name`, or `file::name@begin_line` when the file defines the
    /// name more than once.
    pub id: String,
    pub name: String,
    pub file: String,
    pub begin_line: usize,
    pub end_line: usize,
    /// Enclosing branches at the opening brace; excludes the file condition.
    pub def_pc: PresenceCondition,
    pub size_loc: usize,
    pub internal_ifdef_count: usize,
    pub internal_options: BTreeSet<OptionName>,
    pub call_sites: Vec<CallSite>,
    #[serde(skip)]
    body: Option<(usize, usize)>,
}

impl FunctionRecord {
    /// Token indices of the opening and closing brace, when scanned in-process.
    pub fn body_tokens(&self) -> Option<(usize, usize)> {
        self.body
    }
}

const C_KEYWORDS: &[&str] = &[
    "auto",
    "break",
    "case",
    "char",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extern",
    "float",
    "for",
    "goto",
    "if",
    "inline",
    "int",
    "long",
    "register",
    "restrict",
    "return",
    "short",
    "signed",
    "sizeof",
    "static",
    "struct",
    "switch",
    "typedef",
    "union",
    "unsigned",
    "void",
    "volatile",
    "while",
    "_Alignas",
    "_Alignof",
    "_Atomic",
    "_Bool",
    "_Complex",
    "_Generic",
    "_Imaginary",
    "_Noreturn",
    "_Static_assert",
    "_Thread_local",
    "asm",
    "typeof",
    "__asm__",
    "__attribute__",
    "__attribute",
    "__typeof__",
    "__volatile__",
    "__inline__",
    "__restrict",
    "__extension__",
    "defined",
];

/// Identifiers never treated as callees or function names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stoplist(BTreeSet<String>);

impl Default for Stoplist {
    fn default() -> Self {
        Stoplist(C_KEYWORDS.iter().map(|s| s.to_string()).collect())
    }
}

impl Stoplist {
    pub fn with_extra<I: IntoIterator<Item = S>, S: Into<String>>(extra: I) -> Self {
        let mut s = Stoplist::default();
        s.0.extend(extra.into_iter().map(Into::into));
        s
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }
}

/// Tokens plus their conditional-compilation layout.
#[derive(Debug, Clone)]
pub struct ScannedFile {
    pub path: String,
    pub tokens: Vec<Token>,
    pub layout: Layout,
}

pub fn lex(file: &SourceFile) -> Result<Vec<Token>, ScanError> {
    tokenize(&file.path, &file.content)
}

pub fn scan_directives(path: &str, tokens: &[Token]) -> Result<Vec<DirectiveEvent>, ScanError> {
    layout(path, tokens).map(|l| l.events)
}

pub fn scan(file: &SourceFile) -> Result<ScannedFile, ScanError> {
    let tokens = lex(file)?;
    let layout = layout(&file.path, &tokens)?;
    Ok(ScannedFile { path: file.path.clone(), tokens, layout })
}

impl ScannedFile {
    fn prev_code(&self, mut i: usize) -> Option<usize> {
        while i > 0 {
            i -= 1;
            if !self.tokens[i].is_directive() {
                return Some(i);
            }
        }
        None
    }

    fn matching_open_paren(&self, close: usize) -> Option<usize> {
        let mut depth = 0usize;
        let mut i = close;
        loop {
            let t = &self.tokens[i];
            if t.is_punct(')') {
                depth += 1;
            } else if t.is_punct('(') {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            i = self.prev_code(i)?;
        }
    }

    /// Name token of a definition whose body opens at `brace`, if any.
    fn definition_name(&self, brace: usize, stoplist: &Stoplist) -> Option<usize> {
        let mut close = self.prev_code(brace)?;
        loop {
            if !self.tokens[close].is_punct(')') {
                return None;
            }
            let open = self.matching_open_paren(close)?;
            let name = self.prev_code(open)?;
            let ident = self.tokens[name].ident()?;
            if matches!(ident, "__attribute__" | "__attribute") {
                close = self.prev_code(name)?;
                continue;
            }
            if stoplist.contains(ident) {
                return None;
            }
            return Some(name);
        }
    }

    /// First token of the declaration containing `name`.
    fn declaration_start(&self, name: usize) -> usize {
        let mut start = name;
        while start > 0 {
            let t = &self.tokens[start - 1];
            if t.is_directive() || t.is_punct(';') || t.is_punct('}') || t.is_punct('{') {
                break;
            }
            start -= 1;
        }
        start
    }

    /// Directive groups whose opening directive lies inside `(open, close)`.
    fn internal_groups(&self, open: usize, close: usize) -> impl Iterator<Item = &directives::Group> {
        self.layout.groups.iter().filter(move |g| g.open_token > open && g.open_token < close)
    }
}

/// Number of `#if`/`#ifdef`/`#ifndef` groups opening strictly inside the body.
pub fn count_internal_ifdefs(scanned: &ScannedFile, body: (usize, usize)) -> usize {
    scanned.internal_groups(body.0, body.1).count()
}

/// Union of the options of every branch of every group inside the body.
pub fn internal_option_set(scanned: &ScannedFile, body: (usize, usize)) -> BTreeSet<OptionName> {
    let mut out = BTreeSet::new();
    for g in scanned.internal_groups(body.0, body.1) {
        for &b in &g.branches {
            out.extend(scanned.layout.branches[b].pc.options());
        }
    }
    out
}

/// Call sites in the body of `record`: every identifier directly followed by
/// `(` that is not stoplisted.
pub fn extract_calls(record: &FunctionRecord, scanned: &ScannedFile, stoplist: &Stoplist) -> Vec<CallSite> {
    let Some((open, close)) = record.body else {
        return Vec::new();
    };
    let outer = scanned.layout.context_of(open).len();
    let mut calls = Vec::new();
    for i in open + 1..close {
        let Some(name) = scanned.tokens[i].ident() else { continue };
        if !scanned.tokens.get(i + 1).is_some_and(|t| t.is_punct('(')) || stoplist.contains(name) {
            continue;
        }
        let ctx = scanned.layout.context_of(i);
        calls.push(CallSite {
            callee_name: name.to_string(),
            line: scanned.tokens[i].line,
            local_pc: scanned.layout.context_pc(&ctx[outer..]),
        });
    }
    calls
}

pub fn extract_functions(file: &SourceFile, stoplist: &Stoplist) -> Result<Vec<FunctionRecord>, ScanError> {
    let scanned = scan(file)?;
    extract_from_scanned(&scanned, stoplist)
}

struct OpenBlock {
    brace: usize,
    name: Option<usize>,
}

pub fn extract_from_scanned(scanned: &ScannedFile, stoplist: &Stoplist) -> Result<Vec<FunctionRecord>, ScanError> {
    let path = &scanned.path;
    let structural = |line: usize, message: String| ScanError::Structural { path: path.clone(), line, message };
    let mut records = Vec::new();
    let mut depth = 0usize;
    let mut top: Option<OpenBlock> = None;

    for (i, tok) in scanned.tokens.iter().enumerate() {
        if tok.is_directive() {
            continue;
        }
        if let Some(block) = &top {
            if block.name.is_some() {
                let outer = scanned.layout.context_of(block.brace);
                if !scanned.layout.context_of(i).starts_with(outer) {
                    return Err(structural(
                        tok.line,
                        format!("conditional directive splits the body of function {}", fn_name(scanned, block)),
                    ));
                }
            }
        }
        if tok.is_punct('{') {
            if depth == 0 {
                top = Some(OpenBlock { brace: i, name: scanned.definition_name(i, stoplist) });
            }
            depth += 1;
        } else if tok.is_punct('}') {
            if depth == 0 {
                return Err(structural(tok.line, "unmatched '}'".into()));
            }
            depth -= 1;
            if depth > 0 {
                continue;
            }
            let block = top.take().expect("open top-level block");
            let Some(name_idx) = block.name else { continue };
            if scanned.layout.context_of(i) != scanned.layout.context_of(block.brace) {
                return Err(structural(
                    tok.line,
                    format!("braces of function {} balance only in some configurations", fn_name(scanned, &block)),
                ));
            }
            let begin_line = scanned.tokens[scanned.declaration_start(name_idx)].line;
            let end_line = tok.line;
            let body = (block.brace, i);
            let mut record = FunctionRecord {
                id: String::new(),
                name: scanned.tokens[name_idx].ident().unwrap().to_string(),
                file: path.clone(),
                begin_line,
                end_line,
                def_pc: scanned.layout.context_pc(scanned.layout.context_of(block.brace)),
                size_loc: end_line - begin_line + 1,
                internal_ifdef_count: count_internal_ifdefs(scanned, body),
                internal_options: internal_option_set(scanned, body),
                call_sites: Vec::new(),
                body: Some(body),
            };
            record.call_sites = extract_calls(&record, scanned, stoplist);
            records.push(record);
        }
    }
    if let Some(block) = top {
        let line = scanned.tokens[block.brace].line;
        return Err(match block.name {
            Some(_) => {
                structural(line, format!("unbalanced braces: function {} is never closed", fn_name(scanned, &block)))
            }
            None => structural(line, "unbalanced braces: block is never closed".into()),
        });
    }
    assign_ids(&mut records);
    Ok(records)
}

fn fn_name(scanned: &ScannedFile, block: &OpenBlock) -> String {
    block.name.and_then(|n| scanned.tokens[n].ident()).unwrap_or("<block>").to_string()
}

/// Node identity: `file::name`, disambiguated by begin line for names the
/// file defines more than once (alternative definitions under exclusive
/// conditions).
pub fn function_id(file: &str, name: &str, begin_line: usize, duplicated: bool) -> String {
    if duplicated {
        format!("{file}::{name}@{begin_line}")
    } else {
        format!("{file}::{name}")
    }
}

pub fn assign_ids(records: &mut [FunctionRecord]) {
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for r in records.iter() {
        *counts.entry((r.file.clone(), r.name.clone())).or_default() += 1;
    }
    for r in records.iter_mut() {
        let dup = counts[&(r.file.clone(), r.name.clone())] > 1;
        r.id = function_id(&r.file, &r.name, r.begin_line, dup);
    }
}

/// Scan result for one corpus file; the unit consumed by graph construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScannedSource {
    pub path: String,
    pub file_pc: PresenceCondition,
    pub functions: Vec<FunctionRecord>,
}

pub fn scan_source(file: &SourceFile, stoplist: &Stoplist) -> Result<ScannedSource, ScanError> {
    Ok(ScannedSource {
        path: file.path.clone(),
        file_pc: file.file_pc.clone(),
        functions: extract_functions(file, stoplist)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    #[serde(default = "true_pc")]
    pub file_pc: PresenceCondition,
}

fn true_pc() -> PresenceCondition {
    PresenceCondition::True
}

/// Corpus manifest: either a bare list of entries or `{ "files": [...], "stoplist": [...] }`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CorpusManifest {
    pub files: Vec<ManifestEntry>,
    pub stoplist: Vec<String>,
}

impl<'de> Deserialize<'de> for CorpusManifest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Full {
            files: Vec<ManifestEntry>,
            #[serde(default)]
            stoplist: Vec<String>,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Shape {
            List(Vec<ManifestEntry>),
            Full(Full),
        }
        Ok(match Shape::deserialize(d)? {
            Shape::List(files) => CorpusManifest { files, stoplist: Vec::new() },
            Shape::Full(f) => CorpusManifest { files: f.files, stoplist: f.stoplist },
        })
    }
}

impl CorpusManifest {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn stoplist(&self) -> Stoplist {
        Stoplist::with_extra(self.stoplist.iter().cloned())
    }

    /// Resolve an entry's path against the manifest's directory.
    pub fn resolve(&self, base: &Path, entry: &ManifestEntry) -> PathBuf {
        base.join(&entry.path)
    }
}
