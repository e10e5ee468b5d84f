//! Parser for the model-spec language.
//!
//! ```text
//! # comment
//! model wave-ca
//! object q { globals: position, collapse }
//! law update { reads: cell(-1), cell(0), cell(+1); writes: cell(0); }
//! ```
//!
//! References: `cell(+1)`, `cell(0,-1)`, `cell@(4,2)`, `global(obj.attr)`,
//! `allpaths(obj)`, `space`, `objects`. Whitespace and newlines are free.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::{AccessFootprint, AccessRef, LawDecl, ModelSpec, ObjectDecl};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: unexpected {}, expected {}",
            self.line,
            self.column,
            self.found,
            self.expected.join(" or ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticError {
    #[error("{line}:{column}: duplicate law id `{id}`")]
    DuplicateLaw { id: String, line: usize, column: usize },
    #[error("{line}:{column}: duplicate object id `{id}`")]
    DuplicateObject { id: String, line: usize, column: usize },
    #[error("{line}:{column}: law `{law}` references undeclared object `{object}`")]
    UndeclaredObject {
        law: String,
        object: String,
        line: usize,
        column: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("syntax errors:\n{}", join_lines(.0))]
    Syntax(Vec<ParseError>),
    #[error("semantic errors:\n{}", join_lines(.0))]
    Semantic(Vec<SemanticError>),
}

fn join_lines<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '-')
            {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() || ((c == '+' || c == '-') && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let s: String = chars[start..i].iter().collect();
            let value = s.parse::<i64>().map_err(|_| ParseError {
                line: start_line,
                column: start_col,
                found: format!("`{s}`"),
                expected: vec!["an integer in range".into()],
            })?;
            out.push(Token {
                tok: Tok::Int(value),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if "{}():;,.@".contains(c) {
            i += 1;
            col += 1;
            out.push(Token {
                tok: Tok::Sym(c),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        return Err(ParseError {
            line: start_line,
            column: start_col,
            found: format!("character `{c}`"),
            expected: vec!["a token".into()],
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// Location of an object reference, kept for semantic diagnostics.
struct RefSite {
    law: String,
    object: String,
    line: usize,
    column: usize,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    errors: Vec<ParseError>,
    law_sites: Vec<(String, usize, usize)>,
    object_sites: Vec<(String, usize, usize)>,
    ref_sites: Vec<RefSite>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError {
            line: t.line,
            column: t.column,
            found: t.tok.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.is_sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{c}`")]))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, usize, usize)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                let t = self.bump();
                Ok((s, t.line, t.column))
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.error(&["an integer"])),
        }
    }

    /// Skips to the next top-level `object`/`law` keyword after an error.
    fn recover(&mut self) {
        let mut depth = 0usize;
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                Tok::Sym('{') => depth += 1,
                Tok::Sym('}') => {
                    if depth <= 1 {
                        self.bump();
                        return;
                    }
                    depth -= 1;
                }
                Tok::Ident(s) if depth == 0 && (s == "object" || s == "law") => return,
                _ => {}
            }
            self.bump();
        }
    }

    fn spec(&mut self) -> Option<ModelSpec> {
        let name = match self.expect_keyword("model").and_then(|_| self.ident("a model name")) {
            Ok((name, _, _)) => name,
            Err(e) => {
                self.errors.push(e);
                self.recover();
                String::new()
            }
        };
        let mut objects = Vec::new();
        let mut laws = Vec::new();
        loop {
            let result = if self.is_keyword("object") {
                self.object().map(|o| objects.push(o))
            } else if self.is_keyword("law") {
                self.law().map(|l| laws.push(l))
            } else if self.peek().tok == Tok::Eof {
                break;
            } else {
                Err(self.error(&["`object`", "`law`", "end of input"]))
            };
            if let Err(e) = result {
                self.errors.push(e);
                let before = self.pos;
                self.recover();
                if self.pos == before && self.peek().tok != Tok::Eof {
                    self.bump();
                }
            }
        }
        self.errors.is_empty().then_some(ModelSpec { name, objects, laws })
    }

    fn object(&mut self) -> PResult<ObjectDecl> {
        self.expect_keyword("object")?;
        let (id, line, column) = self.ident("an object id")?;
        self.object_sites.push((id.clone(), line, column));
        self.expect_sym('{')?;
        let mut globals = Vec::new();
        if self.is_keyword("globals") {
            self.bump();
            self.expect_sym(':')?;
            if !self.is_sym('}') {
                loop {
                    globals.push(self.ident("an attribute name")?.0);
                    if self.is_sym(',') {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
        }
        if !self.is_sym('}') {
            return Err(self.error(&["`globals`", "`,`", "`}`"]));
        }
        self.bump();
        Ok(ObjectDecl { id, globals })
    }

    fn law(&mut self) -> PResult<LawDecl> {
        self.expect_keyword("law")?;
        let (id, line, column) = self.ident("a law id")?;
        self.law_sites.push((id.clone(), line, column));
        self.expect_sym('{')?;
        let mut footprint = AccessFootprint::default();
        let (mut seen_reads, mut seen_writes) = (false, false);
        loop {
            if self.is_sym('}') {
                self.bump();
                break;
            }
            let writes = if self.is_keyword("reads") && !seen_reads {
                seen_reads = true;
                false
            } else if self.is_keyword("writes") && !seen_writes {
                seen_writes = true;
                true
            } else {
                let mut expected = Vec::new();
                if !seen_reads {
                    expected.push("`reads`");
                }
                if !seen_writes {
                    expected.push("`writes`");
                }
                expected.push("`}`");
                return Err(self.error(&expected));
            };
            self.bump();
            self.expect_sym(':')?;
            let refs = self.ref_list(&id)?;
            self.expect_sym(';')?;
            if writes {
                footprint.writes = refs;
            } else {
                footprint.reads = refs;
            }
        }
        Ok(LawDecl { id, footprint })
    }

    fn ref_list(&mut self, law: &str) -> PResult<BTreeSet<AccessRef>> {
        let mut refs = BTreeSet::new();
        if self.is_sym(';') {
            return Ok(refs);
        }
        loop {
            refs.insert(self.access_ref(law)?);
            if self.is_sym(',') {
                self.bump();
            } else {
                return Ok(refs);
            }
        }
    }

    fn int_tuple(&mut self) -> PResult<Vec<i64>> {
        self.expect_sym('(')?;
        let mut values = vec![self.int()?];
        while self.is_sym(',') {
            self.bump();
            values.push(self.int()?);
        }
        if values.len() > 3 {
            return Err(self.error(&["at most 3 coordinates"]));
        }
        self.expect_sym(')')?;
        Ok(values)
    }

    fn access_ref(&mut self, law: &str) -> PResult<AccessRef> {
        const EXPECTED: [&str; 5] = ["`cell`", "`global`", "`allpaths`", "`space`", "`objects`"];
        let Tok::Ident(word) = self.peek().tok.clone() else {
            return Err(self.error(&EXPECTED));
        };
        match word.as_str() {
            "cell" => {
                self.bump();
                if self.is_sym('@') {
                    self.bump();
                    Ok(AccessRef::CellAbsolute {
                        point: self.int_tuple()?,
                    })
                } else if self.is_sym('(') {
                    Ok(AccessRef::CellAt {
                        offset: self.int_tuple()?,
                    })
                } else {
                    Err(self.error(&["`(`", "`@`"]))
                }
            }
            "global" => {
                self.bump();
                self.expect_sym('(')?;
                let (object, line, column) = self.ident("an object id")?;
                self.expect_sym('.')?;
                let (attribute, _, _) = self.ident("an attribute name")?;
                self.expect_sym(')')?;
                self.ref_sites.push(RefSite {
                    law: law.into(),
                    object: object.clone(),
                    line,
                    column,
                });
                Ok(AccessRef::ObjectGlobal { object, attribute })
            }
            "allpaths" => {
                self.bump();
                self.expect_sym('(')?;
                let (object, line, column) = self.ident("an object id")?;
                self.expect_sym(')')?;
                self.ref_sites.push(RefSite {
                    law: law.into(),
                    object: object.clone(),
                    line,
                    column,
                });
                Ok(AccessRef::ObjectAllPaths { object })
            }
            "space" => {
                self.bump();
                Ok(AccessRef::WholeSpace)
            }
            "objects" => {
                self.bump();
                Ok(AccessRef::WholeObjectSet)
            }
            _ => Err(self.error(&EXPECTED)),
        }
    }

    fn semantic_errors(&self) -> Vec<SemanticError> {
        let mut errors = Vec::new();
        let mut seen = BTreeMap::new();
        for (id, line, column) in &self.object_sites {
            if seen.insert(id.clone(), ()).is_some() {
                errors.push(SemanticError::DuplicateObject {
                    id: id.clone(),
                    line: *line,
                    column: *column,
                });
            }
        }
        let mut laws = BTreeSet::new();
        for (id, line, column) in &self.law_sites {
            if !laws.insert(id.clone()) {
                errors.push(SemanticError::DuplicateLaw {
                    id: id.clone(),
                    line: *line,
                    column: *column,
                });
            }
        }
        for site in &self.ref_sites {
            if !seen.contains_key(&site.object) {
                errors.push(SemanticError::UndeclaredObject {
                    law: site.law.clone(),
                    object: site.object.clone(),
                    line: site.line,
                    column: site.column,
                });
            }
        }
        errors
    }
}

/// Parses a model spec, reporting every syntax error it can recover from.
pub fn parse_model_spec(text: &str) -> Result<ModelSpec, SpecError> {
    let tokens = lex(text).map_err(|e| SpecError::Syntax(vec![e]))?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        errors: Vec::new(),
        law_sites: Vec::new(),
        object_sites: Vec::new(),
        ref_sites: Vec::new(),
    };
    let spec = parser.spec();
    match spec {
        Some(spec) => {
            let errors = parser.semantic_errors();
            if errors.is_empty() {
                Ok(spec)
            } else {
                Err(SpecError::Semantic(errors))
            }
        }
        None => Err(SpecError::Syntax(parser.errors)),
    }
}
