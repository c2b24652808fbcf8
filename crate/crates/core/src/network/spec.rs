//! Text form of a tensor network.
//!
//! ```text
//! # matrix chain
//! A[i,j] B[j,k] -> [i,k]
//! ```
//!
//! Each term `Name[l1,..]` is a node whose legs carry the listed labels. A
//! label shared by two legs is a contracted edge (on one node, a trace). A
//! label used by three or more legs, counting the output list, is a
//! hyperedge and becomes a copy-tensor node when the network is bound. A
//! repeated tensor name denotes the same tensor appearing several times.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub name: String,
    pub legs: Vec<String>,
}

impl Term {
    pub fn new(name: &str, legs: &[&str]) -> Self {
        Term {
            name: name.to_string(),
            legs: legs.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Unbound network: terms, their leg labels and the ordered output labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    terms: Vec<Term>,
    output: Vec<String>,
}

impl NetworkSpec {
    pub fn new(terms: Vec<Term>, output: Vec<String>) -> Result<Self> {
        let spec = NetworkSpec { terms, output };
        spec.validate()?;
        Ok(spec)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).parse()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn output(&self) -> &[String] {
        &self.output
    }

    /// Distinct tensor names in order of first appearance.
    pub fn names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.terms {
            if !out.contains(&t.name.as_str()) {
                out.push(&t.name);
            }
        }
        out
    }

    /// Indices of the terms that use tensor `name`.
    pub fn occurrences(&self, name: &str) -> Vec<usize> {
        self.terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.name == name)
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of legs carrying each label, excluding the output list.
    pub(crate) fn leg_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.terms {
            for l in &t.legs {
                *counts.entry(l.as_str()).or_insert(0) += 1;
            }
        }
        counts
    }

    fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Network("network has no tensors".into()));
        }
        let mut arity: HashMap<&str, usize> = HashMap::new();
        for t in &self.terms {
            check_ident(&t.name)?;
            for l in &t.legs {
                check_ident(l)?;
            }
            if let Some(&a) = arity.get(t.name.as_str()) {
                if a != t.legs.len() {
                    return Err(Error::Network(format!(
                        "tensor `{}` used with {} and {} legs",
                        t.name,
                        a,
                        t.legs.len()
                    )));
                }
            }
            arity.insert(&t.name, t.legs.len());
        }
        let counts = self.leg_counts();
        for (i, l) in self.output.iter().enumerate() {
            check_ident(l)?;
            if self.output[..i].contains(l) {
                return Err(Error::Network(format!("output label `{l}` repeated")));
            }
            if !counts.contains_key(l.as_str()) {
                return Err(Error::Network(format!(
                    "output label `{l}` does not appear on any tensor"
                )));
            }
        }
        for (l, &c) in &counts {
            if c == 1 && !self.output.iter().any(|o| o == l) {
                return Err(Error::Network(format!(
                    "label `{l}` is dangling but not listed in the output"
                )));
            }
        }
        Ok(())
    }
}

fn check_ident(s: &str) -> Result<()> {
    let mut chars = s.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::Network(format!("`{s}` is not a valid identifier")))
    }
}

impl fmt::Display for NetworkSpec {
    /// Canonical single-line form, e.g. `A[i,j] B[j,k] -> [i,k]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            write!(f, "{}[{}] ", t.name, t.legs.join(","))?;
        }
        write!(f, "-> [{}]", self.output.join(","))
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            _src: src,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: self.line,
            column: self.col,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            Some(c) => return self.err(format!("expected {what}, found `{c}`")),
            None => return self.err(format!("expected {what}, found end of input")),
        }
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        Ok(s)
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => self.err(format!("expected `{want}`, found `{c}`")),
            None => self.err(format!("expected `{want}`, found end of input")),
        }
    }

    fn label_list(&mut self) -> Result<Vec<String>> {
        self.expect('[')?;
        let mut labels = Vec::new();
        self.skip_ws();
        if self.peek() == Some(']') {
            self.bump();
            return Ok(labels);
        }
        loop {
            labels.push(self.ident("a label")?);
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some(']') => {
                    self.bump();
                    return Ok(labels);
                }
                Some(c) => return self.err(format!("expected `,` or `]`, found `{c}`")),
                None => return self.err("unterminated label list"),
            }
        }
    }

    fn parse(mut self) -> Result<NetworkSpec> {
        let mut terms = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some('-') => {
                    self.bump();
                    if self.peek() != Some('>') {
                        return self.err("expected `->`");
                    }
                    self.bump();
                    break;
                }
                None => return self.err("missing `-> [..]` output list"),
                _ => {}
            }
            let (line, col) = (self.line, self.col);
            let name = self.ident("a tensor name")?;
            let legs = self.label_list()?;
            terms.push((Term { name, legs }, line, col));
        }
        let output = self.label_list()?;
        self.skip_ws();
        if let Some(c) = self.peek() {
            return self.err(format!("unexpected `{c}` after output list"));
        }
        let (line, col) = terms.first().map(|t| (t.1, t.2)).unwrap_or((self.line, self.col));
        NetworkSpec::new(terms.into_iter().map(|t| t.0).collect(), output).map_err(|e| match e {
            Error::Network(message) => Error::Syntax {
                line,
                column: col,
                message,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_matrix_chain() {
        let s = NetworkSpec::parse("A[i,j] B[j,k] -> [i,k]").unwrap();
        assert_eq!(s.terms().len(), 2);
        assert_eq!(s.terms()[1], Term::new("B", &["j", "k"]));
        assert_eq!(s.output(), &["i".to_string(), "k".to_string()]);
        assert_eq!(s.to_string(), "A[i,j] B[j,k] -> [i,k]");
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "# a comment\n  A [ i , r ]\n\tB[j,r] # trailing\n C[k,r]\n-> [i,j,k]\n";
        let s = NetworkSpec::parse(text).unwrap();
        assert_eq!(s.to_string(), "A[i,r] B[j,r] C[k,r] -> [i,j,k]");
        assert_eq!(s.leg_counts()["r"], 3);
    }

    #[test]
    fn trace_and_scalar_terms() {
        let s = NetworkSpec::parse("A[i,i] -> []").unwrap();
        assert!(s.output().is_empty());
        let s = NetworkSpec::parse("c[] A[i] -> [i]").unwrap();
        assert!(s.terms()[0].legs.is_empty());
    }

    #[test]
    fn repeated_names_share_a_tensor() {
        let s = NetworkSpec::parse("x[i] A[i,j] x[j] -> []").unwrap();
        assert_eq!(s.names(), vec!["x", "A"]);
        assert_eq!(s.occurrences("x"), vec![0, 2]);
        assert!(NetworkSpec::parse("x[i] A[i,j] x[j,k] -> [k]").is_err());
    }

    #[test]
    fn syntax_errors_report_position() {
        match NetworkSpec::parse("A[i,j]\n  B[j k] -> [i,k]") {
            Err(Error::Syntax { line, column, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(column, 7);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(NetworkSpec::parse("A[i,j] B[j,k]").is_err());
        assert!(NetworkSpec::parse("A[i,j] -> [i,j] extra").is_err());
        assert!(NetworkSpec::parse("-> []").is_err());
        assert!(NetworkSpec::parse("1A[i] -> [i]").is_err());
    }

    #[test]
    fn semantic_errors() {
        // output label missing from the network
        assert!(NetworkSpec::parse("A[i,j] -> [i,j,k]").is_err());
        // repeated output label
        assert!(NetworkSpec::parse("A[i,j] -> [i,i]").is_err());
        // dangling label not in the output
        assert!(NetworkSpec::parse("A[i,j] -> [i]").is_err());
    }
}
