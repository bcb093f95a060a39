//! Conditional-compilation structure of a token stream.

use serde::{Deserialize, Serialize};

use super::lexer::{Token, TokenKind};
use super::ScanError;
use crate::pcalg::{is_identifier, parse_pc, pc_and, pc_not, OptionName, PresenceCondition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectiveKind {
    If,
    Elif,
    Else,
    Endif,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectiveEvent {
    pub kind: DirectiveKind,
    /// Condition under which the branch opened by this directive is taken,
    /// relative to the enclosing context. `True` for `Endif`.
    pub branch_pc: PresenceCondition,
    pub line: usize,
}

/// One `#if … #endif` group.
#[derive(Debug, Clone)]
pub struct Group {
    /// Index of the opening directive in the token stream.
    pub open_token: usize,
    pub line: usize,
    /// Indices into [`Layout::branches`].
    pub branches: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub group: usize,
    pub pc: PresenceCondition,
}

/// Directive structure plus the branch stack active at every token.
#[derive(Debug, Clone, Default)]
pub struct Layout {
    pub events: Vec<DirectiveEvent>,
    pub groups: Vec<Group>,
    pub branches: Vec<Branch>,
    /// Distinct branch stacks; `token_context[i]` indexes into this.
    pub contexts: Vec<Vec<usize>>,
    pub token_context: Vec<usize>,
}

impl Layout {
    pub fn context_of(&self, token: usize) -> &[usize] {
        &self.contexts[self.token_context[token]]
    }

    pub fn context_pc(&self, stack: &[usize]) -> PresenceCondition {
        PresenceCondition::all(stack.iter().map(|&b| self.branches[b].pc.clone()))
    }
}

struct OpenGroup {
    group: usize,
    /// Disjunction of the raw conditions of earlier branches.
    taken: PresenceCondition,
    seen_else: bool,
}

fn split_directive(text: &str) -> (&str, &str) {
    let text = text.trim_start();
    let end = text.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(text.len());
    (&text[..end], text[end..].trim())
}

/// Condition of a `#if`/`#elif`. Expressions outside the boolean grammar
/// (arithmetic, macro calls) become the conjunction of every identifier they
/// reference.
pub fn condition_of(expr: &str) -> Result<PresenceCondition, String> {
    if expr.trim().is_empty() {
        return Err("empty condition".into());
    }
    if let Ok(pc) = parse_pc(expr) {
        return Ok(pc);
    }
    let mut depth = 0i32;
    for c in expr.chars() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(format!("unbalanced parentheses in {expr:?}"));
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(format!("unbalanced parentheses in {expr:?}"));
    }
    let mut atoms = Vec::new();
    let mut rest = expr;
    while !rest.is_empty() {
        let start = match rest.find(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            Some(s) => s,
            None => break,
        };
        let tail = &rest[start..];
        let len = tail.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(tail.len());
        let word = &tail[..len];
        if is_identifier(word) && word != "defined" {
            let atom = PresenceCondition::atom(OptionName::new(word).map_err(|e| e.to_string())?);
            atoms.push(atom);
        }
        rest = &tail[len..];
    }
    atoms.sort_by_key(|a| a.render());
    atoms.dedup();
    Ok(PresenceCondition::all(atoms))
}

fn macro_name(rest: &str, line: usize, path: &str, what: &str) -> Result<PresenceCondition, ScanError> {
    let word = rest.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).next().unwrap_or("");
    let name = OptionName::new(word).map_err(|_| ScanError::Expression {
        path: path.to_string(),
        line,
        message: format!("#{what} requires an identifier"),
    })?;
    Ok(PresenceCondition::atom(name))
}

/// Build the group structure and per-token contexts for a token stream.
pub fn layout(path: &str, tokens: &[Token]) -> Result<Layout, ScanError> {
    let mut out = Layout { contexts: vec![Vec::new()], ..Layout::default() };
    let mut open: Vec<OpenGroup> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut current_ctx = 0usize;
    let structural = |line: usize, message: String| ScanError::Structural { path: path.to_string(), line, message };
    let expression = |line: usize, message: String| ScanError::Expression { path: path.to_string(), line, message };

    for (idx, tok) in tokens.iter().enumerate() {
        let text = match &tok.kind {
            TokenKind::Directive(t) => t,
            _ => {
                out.token_context.push(current_ctx);
                continue;
            }
        };
        let (keyword, rest) = split_directive(text);
        let line = tok.line;
        let changed = match keyword {
            "if" | "ifdef" | "ifndef" => {
                let cond = match keyword {
                    "if" => condition_of(rest).map_err(|m| expression(line, m))?,
                    "ifdef" => macro_name(rest, line, path, "ifdef")?,
                    _ => pc_not(macro_name(rest, line, path, "ifndef")?),
                };
                let group = out.groups.len();
                let branch = out.branches.len();
                out.branches.push(Branch { group, pc: cond.clone() });
                out.groups.push(Group { open_token: idx, line, branches: vec![branch] });
                out.events.push(DirectiveEvent { kind: DirectiveKind::If, branch_pc: cond.clone(), line });
                open.push(OpenGroup { group, taken: cond, seen_else: false });
                stack.push(branch);
                true
            }
            "elif" | "else" => {
                let g = open.last_mut().ok_or_else(|| structural(line, format!("#{keyword} without matching #if")))?;
                if g.seen_else {
                    return Err(structural(line, format!("#{keyword} after #else")));
                }
                let (kind, pc) = if keyword == "elif" {
                    let cond = condition_of(rest).map_err(|m| expression(line, m))?;
                    let pc = pc_and(pc_not(g.taken.clone()), cond.clone());
                    g.taken = PresenceCondition::any([g.taken.clone(), cond]);
                    (DirectiveKind::Elif, pc)
                } else {
                    g.seen_else = true;
                    (DirectiveKind::Else, pc_not(g.taken.clone()))
                };
                let branch = out.branches.len();
                out.branches.push(Branch { group: g.group, pc: pc.clone() });
                out.groups[g.group].branches.push(branch);
                out.events.push(DirectiveEvent { kind, branch_pc: pc, line });
                *stack.last_mut().expect("open group has a branch") = branch;
                true
            }
            "endif" => {
                if open.pop().is_none() {
                    return Err(structural(line, "#endif without matching #if".into()));
                }
                stack.pop();
                out.events.push(DirectiveEvent {
                    kind: DirectiveKind::Endif,
                    branch_pc: PresenceCondition::True,
                    line,
                });
                true
            }
            _ => false,
        };
        if changed {
            current_ctx = out.contexts.len();
            out.contexts.push(stack.clone());
        }
        out.token_context.push(current_ctx);
    }
    if let Some(g) = open.last() {
        return Err(structural(out.groups[g.group].line, "#if without matching #endif".into()));
    }
    Ok(out)
}
