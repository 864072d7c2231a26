//! Keyword-head SQL gate. This is not a parser: it strips comments and
//! quoted text, then checks statement heads and top-level semicolons.
//! Read-only connections remain the real guarantee.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Empty,
    NotSelect,
    WriteStatement,
    MultiStatement,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Empty => "empty",
            ViolationKind::NotSelect => "not-select",
            ViolationKind::WriteStatement => "write-statement",
            ViolationKind::MultiStatement => "multi-statement",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub token: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::Empty => write!(f, "empty: no SQL statement"),
            ViolationKind::NotSelect => {
                write!(f, "not-select: statement starts with '{}', expected SELECT or WITH", self.token)
            }
            ViolationKind::WriteStatement => {
                write!(f, "write-statement: '{}' is not allowed, only read queries run", self.token)
            }
            ViolationKind::MultiStatement => {
                write!(f, "multi-statement: a second statement starts at '{}'", self.token)
            }
        }
    }
}

impl std::error::Error for Violation {}

const WRITE_KEYWORDS: [&str; 13] = [
    "INSERT", "UPDATE", "DELETE", "DROP", "ALTER", "CREATE", "REPLACE", "ATTACH", "DETACH", "PRAGMA", "VACUUM",
    "REINDEX", "ANALYZE",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Open,
    Close,
    Semi,
    Other(char),
}

/// Replaces comments and quoted strings/identifiers with a space.
fn strip(sql: &str) -> String {
    let chars: Vec<char> = sql.chars().collect();
    let mut out = String::with_capacity(sql.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match c {
            '-' if next == Some('-') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                out.push(' ');
            }
            '/' if next == Some('*') => {
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    i += 1;
                }
                i += 2;
                out.push(' ');
            }
            '\'' | '"' | '`' | '[' => {
                let close = if c == '[' { ']' } else { c };
                i += 1;
                loop {
                    match chars.get(i) {
                        None => break,
                        Some(&ch) if ch == close => {
                            if close != ']' && chars.get(i + 1) == Some(&close) {
                                i += 2;
                                continue;
                            }
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                // a quoted identifier still occupies a word slot
                out.push_str(if c == '\'' { " 'lit' " } else { " ident " });
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

fn tokenize(cleaned: &str) -> Vec<Tok> {
    let mut toks = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, toks: &mut Vec<Tok>| {
        if !word.is_empty() {
            toks.push(Tok::Word(std::mem::take(word)));
        }
    };
    for c in cleaned.chars() {
        if c.is_alphanumeric() || c == '_' || c == '$' {
            word.push(c);
            continue;
        }
        flush(&mut word, &mut toks);
        match c {
            '(' => toks.push(Tok::Open),
            ')' => toks.push(Tok::Close),
            ';' => toks.push(Tok::Semi),
            c if c.is_whitespace() => {}
            c => toks.push(Tok::Other(c)),
        }
    }
    flush(&mut word, &mut toks);
    toks
}

fn is_write(word: &str) -> bool {
    WRITE_KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

fn display(t: &Tok) -> String {
    match t {
        Tok::Word(w) => w.clone(),
        Tok::Open => "(".into(),
        Tok::Close => ")".into(),
        Tok::Semi => ";".into(),
        Tok::Other(c) => c.to_string(),
    }
}

/// Accepts exactly one SELECT or WITH statement (an optional trailing
/// semicolon is fine).
pub fn validate_sql(sql: &str) -> Result<(), Violation> {
    let toks = tokenize(&strip(sql));
    let v = |kind, token: String| Err(Violation { kind, token });

    let Some(first) = toks.iter().find(|t| **t != Tok::Semi) else {
        return v(ViolationKind::Empty, String::new());
    };
    match first {
        Tok::Word(w) if is_write(w) => return v(ViolationKind::WriteStatement, w.to_uppercase()),
        Tok::Word(w) if w.eq_ignore_ascii_case("SELECT") || w.eq_ignore_ascii_case("WITH") => {}
        other => return v(ViolationKind::NotSelect, display(other)),
    }

    let start = toks.iter().position(|t| t == first).unwrap_or(0);
    let mut depth: i64 = 0;
    for (i, t) in toks.iter().enumerate().skip(start) {
        match t {
            Tok::Open => depth += 1,
            Tok::Close => depth -= 1,
            Tok::Semi if depth <= 0 => {
                if let Some(next) = toks[i + 1..].iter().find(|t| **t != Tok::Semi) {
                    return v(ViolationKind::MultiStatement, display(next));
                }
            }
            Tok::Word(w) if is_write(w) => {
                let prev = i.checked_sub(1).map(|p| &toks[p]);
                let next = toks.get(i + 1);
                let is_call = next == Some(&Tok::Open);
                // a write keyword right after "(" or after a closing CTE paren heads a statement
                let heads = matches!(prev, Some(Tok::Open)) || (depth == 0 && matches!(prev, Some(Tok::Close)));
                if heads && !is_call {
                    return v(ViolationKind::WriteStatement, w.to_uppercase());
                }
            }
            _ => {}
        }
    }
    Ok(())
}
