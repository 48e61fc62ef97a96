//! Model-formula mini-language.
//!
//! Grammar: `[response] "~" term-expr` where term-expr joins elements with
//! `+`. An element is a variable, an interaction `a:b`, a crossing `a*b`
//! (expanding to `a + b + a:b`), the literal `1` (intercept, present by
//! default) or `0` / `- 1` (remove the intercept). Crossings of k variables
//! expand to all non-empty subsets, mains first.

use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("formula error at position {}: {message}", position + 1)]
pub struct FormulaError {
    pub message: String,
    pub position: usize,
}

fn err<T>(message: impl Into<String>, position: usize) -> Result<T, FormulaError> {
    Err(FormulaError { message: message.into(), position })
}

/// One model term: a main effect (single factor) or an interaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    /// Variable names, in appearance order, no repeats.
    pub factors: Vec<String>,
}

impl Term {
    pub fn main(name: impl Into<String>) -> Self {
        Term { factors: vec![name.into()] }
    }

    pub fn interaction<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Self {
        Term { factors: names.into_iter().map(Into::into).collect() }
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    fn render(&self) -> String {
        self.factors.join(":")
    }
}

/// Parsed formula: optional response, deduplicated terms (mains before
/// interactions), intercept flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub response: Option<String>,
    pub terms: Vec<Term>,
    pub intercept: bool,
}

impl ModelSpec {
    /// All distinct variable names referenced by the terms.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for t in &self.terms {
            for f in &t.factors {
                if seen.insert(f.as_str()) {
                    out.push(f.as_str());
                }
            }
        }
        out
    }

    /// Canonical text form; reparses to an identical spec.
    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(r) = &self.response {
            s.push_str(r);
            s.push(' ');
        }
        s.push('~');
        s.push(' ');
        if self.terms.is_empty() {
            s.push_str(if self.intercept { "1" } else { "0" });
            return s;
        }
        let body: Vec<String> = self.terms.iter().map(Term::render).collect();
        s.push_str(&body.join(" + "));
        if !self.intercept {
            s.push_str(" - 1");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Tilde,
    Plus,
    Minus,
    Star,
    Colon,
    One,
    Zero,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let mut toks = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, ch)) = it.peek() {
        match ch {
            c if c.is_whitespace() => {
                it.next();
            }
            '~' => {
                it.next();
                toks.push((Tok::Tilde, pos));
            }
            '+' => {
                it.next();
                toks.push((Tok::Plus, pos));
            }
            '-' => {
                it.next();
                toks.push((Tok::Minus, pos));
            }
            '*' => {
                it.next();
                toks.push((Tok::Star, pos));
            }
            ':' => {
                it.next();
                toks.push((Tok::Colon, pos));
            }
            '0' | '1' => {
                it.next();
                // a bare digit is the intercept literal; digits inside names
                // are consumed by the identifier arm below
                if let Some(&(_, next)) = it.peek() {
                    if next.is_alphanumeric() || next == '_' || next == '.' {
                        return err(format!("names may not start with a digit: `{ch}{next}...`"), pos);
                    }
                }
                toks.push((if ch == '1' { Tok::One } else { Tok::Zero }, pos));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&(_, c)) = it.peek() {
                    if c.is_alphanumeric() || c == '_' || c == '.' {
                        name.push(c);
                        it.next();
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(name), pos));
            }
            c if c.is_ascii_digit() => {
                return err(format!("unexpected number starting with `{c}`"), pos);
            }
            c => {
                return err(format!("unknown operator or character `{c}`"), pos);
            }
        }
    }
    Ok(toks)
}

/// Parse a formula string into a [`ModelSpec`].
pub fn parse_formula(text: &str) -> Result<ModelSpec, FormulaError> {
    if text.trim().is_empty() {
        return err("empty formula", 0);
    }
    let toks = tokenize(text)?;
    let end = text.len();
    let mut i = 0;

    let response = match (toks.first(), toks.get(1)) {
        (Some((Tok::Ident(name), _)), Some((Tok::Tilde, _))) => {
            i = 1;
            Some(name.clone())
        }
        _ => None,
    };
    match toks.get(i) {
        Some((Tok::Tilde, _)) => i += 1,
        Some((_, pos)) => return err("expected `~`", *pos),
        None => return err("expected `~`", end),
    }
    if i >= toks.len() {
        return err("empty term after `~`", end);
    }

    let mut terms: Vec<Term> = Vec::new();
    let mut intercept = true;
    loop {
        // one element: `1`, `0`, or a crossing of interactions
        match toks.get(i) {
            Some((Tok::One, _)) => {
                intercept = true;
                i += 1;
            }
            Some((Tok::Zero, _)) => {
                intercept = false;
                i += 1;
            }
            Some((Tok::Ident(_), _)) => {
                let expanded = parse_crossing(&toks, &mut i, end)?;
                terms.extend(expanded);
            }
            Some((_, pos)) => return err("expected a variable, `1`, or `0`", *pos),
            None => return err("empty term", end),
        }
        // separator
        match toks.get(i) {
            None => break,
            Some((Tok::Plus, pos)) => {
                i += 1;
                if i >= toks.len() {
                    return err("empty term after `+`", *pos);
                }
            }
            Some((Tok::Minus, pos)) => {
                i += 1;
                match toks.get(i) {
                    Some((Tok::One, _)) => {
                        intercept = false;
                        i += 1;
                    }
                    _ => return err("only `- 1` (intercept removal) may follow `-`", *pos),
                }
                if i >= toks.len() {
                    break;
                }
                match toks.get(i) {
                    Some((Tok::Plus, pos)) => {
                        i += 1;
                        if i >= toks.len() {
                            return err("empty term after `+`", *pos);
                        }
                    }
                    Some((_, pos)) => return err("expected `+` or end of formula", *pos),
                    None => break,
                }
            }
            Some((_, pos)) => return err("expected `+`, `-`, or end of formula", *pos),
        }
    }

    Ok(ModelSpec { response, terms: normalize_terms(terms), intercept })
}

/// Parse `inter (* inter)*` starting at `toks[*i]` and expand the crossing.
fn parse_crossing(
    toks: &[(Tok, usize)],
    i: &mut usize,
    end: usize,
) -> Result<Vec<Term>, FormulaError> {
    let start_pos = toks[*i].1;
    let mut operands: Vec<Vec<String>> = vec![parse_interaction(toks, i, end)?];
    while let Some((Tok::Star, _)) = toks.get(*i) {
        *i += 1;
        operands.push(parse_interaction(toks, i, end)?);
    }
    if operands.len() == 1 {
        let t = make_term(operands.pop().unwrap(), start_pos)?;
        return Ok(vec![t]);
    }
    if operands.len() > 16 {
        return err("too many `*` operands to expand", start_pos);
    }
    // all non-empty subsets, smallest first, appearance order within a size
    let k = operands.len();
    let mut masks: Vec<u32> = (1..(1u32 << k)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut out = Vec::with_capacity(masks.len());
    for m in masks {
        let mut factors = Vec::new();
        for (b, op) in operands.iter().enumerate() {
            if m & (1 << b) != 0 {
                factors.extend(op.iter().cloned());
            }
        }
        out.push(make_term(factors, start_pos)?);
    }
    Ok(out)
}

/// Parse `ident (: ident)*`, returning the raw factor list.
fn parse_interaction(
    toks: &[(Tok, usize)],
    i: &mut usize,
    end: usize,
) -> Result<Vec<String>, FormulaError> {
    let mut factors = Vec::new();
    match toks.get(*i) {
        Some((Tok::Ident(name), _)) => {
            factors.push(name.clone());
            *i += 1;
        }
        Some((_, pos)) => return err("expected a variable name", *pos),
        None => return err("expected a variable name", end),
    }
    while let Some((Tok::Colon, _)) = toks.get(*i) {
        *i += 1;
        match toks.get(*i) {
            Some((Tok::Ident(name), _)) => {
                factors.push(name.clone());
                *i += 1;
            }
            Some((_, pos)) => return err("expected a variable name after `:`", *pos),
            None => return err("expected a variable name after `:`", end),
        }
    }
    Ok(factors)
}

fn make_term(factors: Vec<String>, pos: usize) -> Result<Term, FormulaError> {
    let mut seen = BTreeSet::new();
    for f in &factors {
        if !seen.insert(f.as_str()) {
            return err(format!("variable `{f}` repeated within a term"), pos);
        }
    }
    Ok(Term { factors })
}

/// Deduplicate by factor set, then order mains before interactions
/// (ascending interaction order, appearance order within each order).
fn normalize_terms(terms: Vec<Term>) -> Vec<Term> {
    let mut seen: Vec<BTreeSet<String>> = Vec::new();
    let mut out: Vec<Term> = Vec::new();
    for t in terms {
        let key: BTreeSet<String> = t.factors.iter().cloned().collect();
        if !seen.contains(&key) {
            seen.push(key);
            out.push(t);
        }
    }
    out.sort_by_key(Term::order); // stable: preserves appearance within an order
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_formula() {
        let spec = parse_formula("~ Age10 + Base4 * Trt").unwrap();
        assert_eq!(spec.response, None);
        assert!(spec.intercept);
        let names: Vec<String> = spec.terms.iter().map(Term::render).collect();
        assert_eq!(names, vec!["Age10", "Base4", "Trt", "Base4:Trt"]);
    }

    #[test]
    fn intercept_only() {
        let spec = parse_formula("~ 1").unwrap();
        assert!(spec.terms.is_empty());
        assert!(spec.intercept);
    }

    #[test]
    fn intercept_removal() {
        let spec = parse_formula("y ~ a + b - 1").unwrap();
        assert_eq!(spec.response.as_deref(), Some("y"));
        assert!(!spec.intercept);
        let names: Vec<String> = spec.terms.iter().map(Term::render).collect();
        assert_eq!(names, vec!["a", "b"]);

        let spec = parse_formula("~ 0 + a").unwrap();
        assert!(!spec.intercept);
    }

    #[test]
    fn three_way_crossing_expands_by_order() {
        let spec = parse_formula("~ a*b*c").unwrap();
        let names: Vec<String> = spec.terms.iter().map(Term::render).collect();
        assert_eq!(names, vec!["a", "b", "c", "a:b", "a:c", "b:c", "a:b:c"]);
    }

    #[test]
    fn pure_interaction_and_dedup() {
        let spec = parse_formula("~ a:b + b:a + a").unwrap();
        let names: Vec<String> = spec.terms.iter().map(Term::render).collect();
        // b:a duplicates a:b as a set; main `a` sorts before the interaction
        assert_eq!(names, vec!["a", "a:b"]);
    }

    #[test]
    fn star_binds_looser_than_colon() {
        let spec = parse_formula("~ a*b:c").unwrap();
        let names: Vec<String> = spec.terms.iter().map(Term::render).collect();
        assert_eq!(names, vec!["a", "b:c", "a:b:c"]);
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_formula("~ a ++ b").unwrap_err();
        assert_eq!(e.position, 5);
        let e = parse_formula("~ a ^ b").unwrap_err();
        assert!(e.message.contains("unknown operator"));
        let e = parse_formula("y ~").unwrap_err();
        assert!(e.message.contains("empty term"));
        let e = parse_formula("~ a - b").unwrap_err();
        assert!(e.message.contains("- 1"));
        let e = parse_formula("~ a:a").unwrap_err();
        assert!(e.message.contains("repeated"));
        let e = parse_formula("").unwrap_err();
        assert!(e.message.contains("empty"));
        let e = parse_formula("~ 2x").unwrap_err();
        assert!(e.message.contains("digit") || e.message.contains("number"));
    }

    #[test]
    fn render_roundtrip_examples() {
        for text in [
            "~ Age10 + Base4 * Trt",
            "~ 1",
            "y ~ a + b - 1",
            "~ a*b*c",
            "~ 0",
            "resp ~ x:z + q",
        ] {
            let spec = parse_formula(text).unwrap();
            let again = parse_formula(&spec.render()).unwrap();
            assert_eq!(spec, again, "roundtrip failed for `{text}`");
        }
    }
}
