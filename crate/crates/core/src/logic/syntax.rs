//! Plain-text syntax for atoms, sentences and definitions.
//!
//! `smokes(X), friends(X,Y)`: uppercase-initial tokens are variables,
//! lowercase-initial tokens are predicates or constants.

use std::collections::BTreeMap;

use super::definition::Definition;
use super::sentence::Sentence;
use super::term::{Atom, Term};
use crate::error::{Error, Result};

pub(crate) fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Recursive-descent reader over one line of input. Variable names are
/// numbered in order of first appearance across everything read.
pub(crate) struct Reader<'a> {
    text: &'a str,
    pos: usize,
    vars: BTreeMap<String, u32>,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Reader {
            text,
            pos: 0,
            vars: BTreeMap::new(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    pub(crate) fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.text.len()
    }

    pub(crate) fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, token: &str) -> Result<(), String> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{token}`")))
        }
    }

    pub(crate) fn unexpected(&mut self, wanted: &str) -> String {
        self.skip_ws();
        match self.rest().chars().next() {
            Some(c) => format!("expected {wanted}, found `{c}` at column {}", self.pos + 1),
            None => format!("expected {wanted}, found end of line"),
        }
    }

    pub(crate) fn word(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    pub(crate) fn identifier(&mut self) -> Result<&'a str, String> {
        let save = self.pos;
        match self.word() {
            Some(w) if is_identifier(w) => Ok(w),
            _ => {
                self.pos = save;
                Err(self.unexpected("an identifier"))
            }
        }
    }

    fn term(&mut self) -> Result<Term, String> {
        let save = self.pos;
        let Some(w) = self.word() else {
            return Err(self.unexpected("a term"));
        };
        let first = w.chars().next().unwrap_or('_');
        if first.is_ascii_uppercase() {
            let next = self.vars.len() as u32;
            Ok(Term::Var(*self.vars.entry(w.to_string()).or_insert(next)))
        } else if is_identifier(w) {
            Ok(Term::constant(w))
        } else {
            self.pos = save;
            Err(self.unexpected("a variable or constant"))
        }
    }

    pub(crate) fn atom(&mut self) -> Result<Atom, String> {
        let predicate = self.identifier()?;
        let mut terms = Vec::new();
        if self.eat("(") && !self.eat(")") {
            loop {
                terms.push(self.term()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(Atom::new(predicate, terms))
    }

    /// Comma-separated atoms; stops before `.` or end of line.
    pub(crate) fn conjunction(&mut self) -> Result<Vec<Atom>, String> {
        let mut atoms = vec![self.atom()?];
        while self.eat(",") {
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }
}

fn check_arities(atoms: &[Atom]) -> Result<(), String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for a in atoms {
        if let Some(prev) = seen.insert(&a.predicate, a.arity()) {
            if prev != a.arity() {
                return Err(format!(
                    "predicate `{}` used with arities {prev} and {}",
                    a.predicate,
                    a.arity()
                ));
            }
        }
    }
    Ok(())
}

/// Parses `p(X), q(X,Y)` with an optional trailing `.`. Variables are
/// numbered by first appearance; the result is not canonicalized.
pub fn parse_sentence(text: &str) -> Result<Sentence> {
    parse_sentence_line(text, 1)
}

pub(crate) fn parse_sentence_line(text: &str, line: usize) -> Result<Sentence> {
    let mut r = Reader::new(text);
    let parsed = (|| {
        let atoms = r.conjunction()?;
        r.eat(".");
        if !r.at_end() {
            return Err(r.unexpected("`,` or end of sentence"));
        }
        check_arities(&atoms)?;
        Ok(atoms)
    })();
    parsed
        .map(Sentence::new)
        .map_err(|m| Error::syntax(line, m))
}

/// Parses `h(X,Y) <=> body.`
pub fn parse_definition(text: &str) -> Result<Definition> {
    parse_definition_line(text, 1)
}

pub(crate) fn parse_definition_line(text: &str, line: usize) -> Result<Definition> {
    let mut r = Reader::new(text);
    let parsed = (|| {
        let head = r.atom()?;
        r.expect("<=>")?;
        let body = r.conjunction()?;
        r.eat(".");
        if !r.at_end() {
            return Err(r.unexpected("end of definition"));
        }
        check_arities(&body)?;
        let mut head_vars = Vec::new();
        for t in &head.terms {
            match t {
                Term::Var(v) => head_vars.push(*v),
                Term::Const(c) => return Err(format!("constant `{c}` in definition head")),
            }
        }
        Ok((head, head_vars, body))
    })();
    let (head, head_vars, body) = parsed.map_err(|m| Error::syntax(line, m))?;
    Definition::new(head.predicate, head_vars, Sentence::new(body)).map_err(|e| match e {
        Error::InvalidDefinition(m) => Error::syntax(line, m),
        other => other,
    })
}
