//! `${{ … }}` template extraction and context path normalization.

use super::vocabulary::CONTEXTS;
use super::{line_of_offset, Text, WorkflowModel};

/// Where in the workflow a template was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    RunScript,
    EnvValue,
    WithInput,
    Conditional,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OccurrenceKind {
    /// References at least one context path.
    Context,
    /// A template without a context reference (pure literal or function).
    Literal,
    /// `${{` without a closing `}}`; never fed to checks.
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpressionOccurrence {
    /// First context path referenced, normalized. Empty unless `kind` is
    /// `Context`.
    pub path: String,
    /// Every context path referenced, in order of appearance.
    pub referenced: Vec<String>,
    pub kind: OccurrenceKind,
    pub site: Site,
    /// Empty for workflow-level values.
    pub job_id: String,
    /// 0 for workflow- and job-level values.
    pub step_index: usize,
    pub line: usize,
    /// 1-based byte column within `line`.
    pub column: usize,
    /// Byte offset of `${{` in the source file.
    pub offset: usize,
    pub raw: String,
    /// The value is built from more than this one context path: the
    /// template combines operands or calls a function, or it is joined to
    /// other text. In `env:` and `with:` values any other text counts; in
    /// scripts only text touching the template does, since whitespace and
    /// quotes merely separate shell words.
    pub composed: bool,
}

/// One `${{ … }}` match inside a string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateMatch {
    pub start: usize,
    /// Exclusive end; for unterminated templates, the end of the input.
    pub end: usize,
    pub terminated: bool,
}

impl TemplateMatch {
    pub fn raw<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }

    pub fn interior<'a>(&self, text: &'a str) -> &'a str {
        if self.terminated {
            &text[self.start + 3..self.end - 2]
        } else {
            &text[self.start + 3..self.end]
        }
    }
}

/// Finds templates in a string, left to right, without nesting.
pub fn scan_templates(text: &str) -> Vec<TemplateMatch> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(rel) = text[pos..].find("${{") {
        let start = pos + rel;
        match text[start + 3..].find("}}") {
            Some(close) => {
                let end = start + 3 + close + 2;
                out.push(TemplateMatch {
                    start,
                    end,
                    terminated: true,
                });
                pos = end;
            }
            None => {
                out.push(TemplateMatch {
                    start,
                    end: text.len(),
                    terminated: false,
                });
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextPath {
    pub path: String,
    pub referenced: Vec<String>,
    /// The path is wrapped in a function call or combined with other
    /// operands.
    pub composed: bool,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("expression `{0}` does not reference a context")]
pub struct NotAContextPath(pub String);

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Str(String),
    Number,
    Dot,
    Star,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Op,
}

fn tokenize(expr: &str) -> Vec<Token> {
    let chars: Vec<char> = expr.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '\'' => {
                let mut s = String::new();
                i += 1;
                while i < chars.len() {
                    if chars[i] == '\'' {
                        if chars.get(i + 1) == Some(&'\'') {
                            s.push('\'');
                            i += 2;
                            continue;
                        }
                        i += 1;
                        break;
                    }
                    s.push(chars[i]);
                    i += 1;
                }
                out.push(Token::Str(s));
            }
            '.' => {
                out.push(Token::Dot);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '[' => {
                out.push(Token::LBracket);
                i += 1;
            }
            ']' => {
                out.push(Token::RBracket);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            c if c.is_ascii_digit()
                || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) =>
            {
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.') {
                    i += 1;
                }
                out.push(Token::Number);
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '-')
                {
                    s.push(chars[i]);
                    i += 1;
                }
                out.push(Token::Ident(s));
            }
            _ => {
                out.push(Token::Op);
                i += 1;
            }
        }
    }
    out
}

/// Reads one dotted path starting at `tokens[i]` (an identifier). Returns
/// the normalized path and the index after it.
fn read_path(tokens: &[Token], mut i: usize) -> (String, usize) {
    let Token::Ident(root) = &tokens[i] else {
        unreachable!("read_path called on non-identifier")
    };
    let root = root.to_ascii_lowercase();
    let fold_case = matches!(root.as_str(), "github" | "runner" | "job" | "strategy");
    let mut path = root;
    i += 1;
    loop {
        match (tokens.get(i), tokens.get(i + 1)) {
            (Some(Token::Dot), Some(Token::Ident(seg))) => {
                path.push('.');
                if fold_case {
                    path.push_str(&seg.to_ascii_lowercase());
                } else {
                    path.push_str(seg);
                }
                i += 2;
            }
            (Some(Token::Dot), Some(Token::Star)) => {
                path.push_str("[*]");
                i += 2;
            }
            (Some(Token::LBracket), Some(Token::Str(key)))
                if tokens.get(i + 2) == Some(&Token::RBracket) =>
            {
                path.push('.');
                if fold_case {
                    path.push_str(&key.to_ascii_lowercase());
                } else {
                    path.push_str(key);
                }
                i += 3;
            }
            (Some(Token::LBracket), _) => {
                // Any other index expression is wildcarded.
                let mut depth = 0usize;
                while let Some(t) = tokens.get(i) {
                    match t {
                        Token::LBracket => depth += 1,
                        Token::RBracket => {
                            depth -= 1;
                            if depth == 0 {
                                i += 1;
                                break;
                            }
                        }
                        _ => {}
                    }
                    i += 1;
                }
                path.push_str("[*]");
            }
            _ => break,
        }
    }
    (path, i)
}

/// Normalizes the interior of one template to its context path.
///
/// A bare path yields `composed = false`. Anything else that still
/// references a context (function wrappers, operators, several operands)
/// exposes its first context path with `composed = true`.
pub fn normalize_context_path(raw_expression: &str) -> Result<ContextPath, NotAContextPath> {
    let tokens = tokenize(raw_expression);
    let mut referenced = Vec::new();
    let mut operands = 0usize;
    let mut other = false;
    let mut i = 0;
    while i < tokens.len() {
        match &tokens[i] {
            Token::Ident(name) => {
                if tokens.get(i + 1) == Some(&Token::LParen) {
                    other = true;
                    i += 1;
                } else if CONTEXTS.contains(&name.to_ascii_lowercase().as_str()) {
                    let (path, next) = read_path(&tokens, i);
                    referenced.push(path);
                    operands += 1;
                    i = next;
                } else {
                    // true/false/null or an unknown identifier.
                    other = true;
                    i += 1;
                }
            }
            _ => {
                other = true;
                i += 1;
            }
        }
    }
    let Some(first) = referenced.first().cloned() else {
        return Err(NotAContextPath(raw_expression.trim().to_string()));
    };
    Ok(ContextPath {
        path: first,
        composed: other || operands > 1,
        referenced,
    })
}

fn is_glue(c: Option<char>) -> bool {
    c.is_some_and(|c| !c.is_whitespace() && c != '"' && c != '\'')
}

struct Sink<'m> {
    model: &'m WorkflowModel,
    out: Vec<ExpressionOccurrence>,
}

impl Sink<'_> {
    fn add(&mut self, text: &Text, site: Site, job_id: &str, step_index: usize) {
        let source = &self.model.source;
        let mut cursor = text.start.min(source.len());
        let bound = text.end.clamp(cursor, source.len());
        for m in scan_templates(&text.value) {
            let raw = m.raw(&text.value);
            // Locate the template text in the source; block and quoted
            // scalars preserve templates verbatim.
            let offset = source[cursor..bound]
                .find(raw)
                .map(|o| cursor + o)
                .or_else(|| source[cursor..].find(raw).map(|o| cursor + o))
                .unwrap_or(text.start);
            cursor = (offset + raw.len()).min(source.len());
            let line = line_of_offset(source, offset);
            let line_start = source[..offset].rfind('\n').map(|p| p + 1).unwrap_or(0);

            let before = text.value[..m.start].chars().next_back();
            let after = text.value[m.end..].chars().next();
            let adjacent = match site {
                Site::EnvValue | Site::WithInput => text.value.trim() != raw,
                _ => is_glue(before) || is_glue(after),
            };

            let (kind, path, referenced, composed) = if !m.terminated {
                (OccurrenceKind::Malformed, String::new(), Vec::new(), false)
            } else {
                match normalize_context_path(m.interior(&text.value)) {
                    Ok(cp) => (
                        OccurrenceKind::Context,
                        cp.path,
                        cp.referenced,
                        cp.composed || adjacent,
                    ),
                    Err(_) => (OccurrenceKind::Literal, String::new(), Vec::new(), adjacent),
                }
            };
            let site = if kind == OccurrenceKind::Malformed {
                Site::Other
            } else {
                site
            };
            self.out.push(ExpressionOccurrence {
                path,
                referenced,
                kind,
                site,
                job_id: job_id.to_string(),
                step_index,
                line,
                column: offset - line_start + 1,
                offset,
                raw: raw.to_string(),
                composed,
            });
        }
    }

    fn add_all<'t>(
        &mut self,
        texts: impl IntoIterator<Item = &'t Text>,
        site: Site,
        job_id: &str,
        step_index: usize,
    ) {
        for t in texts {
            self.add(t, site, job_id, step_index);
        }
    }
}

/// Extracts every template in the workflow, ordered by job, step, then
/// position in the file.
pub fn extract_expressions(model: &WorkflowModel) -> Vec<ExpressionOccurrence> {
    let mut sink = Sink {
        model,
        out: Vec::new(),
    };
    sink.add_all(model.env.iter().map(|(_, t)| t), Site::EnvValue, "", 0);
    sink.add_all(&model.other, Site::Other, "", 0);
    for job in &model.jobs {
        let id = job.job_id.as_str();
        sink.add_all(job.env.iter().map(|(_, t)| t), Site::EnvValue, id, 0);
        sink.add_all(
            job.with_inputs.iter().map(|(_, t)| t),
            Site::WithInput,
            id,
            0,
        );
        sink.add_all(&job.conditional, Site::Conditional, id, 0);
        sink.add_all(&job.reusable_text, Site::Other, id, 0);
        sink.add_all(&job.other, Site::Other, id, 0);
        for step in &job.steps {
            let idx = step.index;
            sink.add_all(&step.run_script, Site::RunScript, id, idx);
            sink.add_all(step.env.iter().map(|(_, t)| t), Site::EnvValue, id, idx);
            sink.add_all(
                step.with_inputs.iter().map(|(_, t)| t),
                Site::WithInput,
                id,
                idx,
            );
            sink.add_all(&step.conditional, Site::Conditional, id, idx);
            sink.add_all(&step.uses_text, Site::Other, id, idx);
            sink.add_all(&step.other, Site::Other, id, idx);
        }
    }
    let job_order = |id: &str| {
        if id.is_empty() {
            0
        } else {
            1 + model.jobs.iter().position(|j| j.job_id == id).unwrap_or(0)
        }
    };
    let mut out = sink.out;
    out.sort_by_key(|o| (job_order(&o.job_id), o.step_index, o.line, o.offset));
    out
}
