//! Parser and renderer for the `.crn` reaction-network DSL.
//!
//! Grammar, one statement per reaction:
//!
//! ```text
//! statement := complex ("->" | "<->") complex "[" rate ("," rate)? "]"
//! complex   := "0" | term ("+" term)*
//! term      := [coefficient] identifier
//! ```
//!
//! Statements are separated by `;` or newlines; `#` starts a line comment.
//! The coefficient defaults to 1 and `0` denotes the empty complex (accepted
//! here, flagged later by conservativity analysis). A reversible arrow
//! expands into two opposite reactions and therefore takes two rate symbols.
//!
//! Species order is first textual appearance; it fixes the coordinate order
//! of every state vector downstream. Rate symbols must be pairwise distinct
//! so that the rate variables stay in bijection with the reactions.

use std::collections::HashMap;
use std::fmt;

use crate::network::{Complex, Reaction, ReactionNetwork};
use crate::poly::SymbolTable;

/// Raw DSL input plus the origin used in diagnostics.
#[derive(Clone, Debug)]
pub struct NetworkSource {
    pub text: String,
    pub origin: String,
}

impl NetworkSource {
    pub fn new(text: impl Into<String>, origin: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            origin: origin.into(),
        }
    }

    pub fn inline(text: impl Into<String>) -> Self {
        Self::new(text, "<inline>")
    }
}

/// Severity of a [`ParseDiagnostic`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// A located parser message; printed as `path:line:col: severity: message`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl ParseDiagnostic {
    fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
            severity: Severity::Error,
        }
    }

    /// Render with the source origin prefix.
    pub fn display(&self, origin: &str) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!(
            "{}:{}:{}: {}: {}",
            origin, self.line, self.column, sev, self.message
        )
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display("<input>"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tok<'a> {
    Ident(&'a str),
    Number(u32),
    Plus,
    Comma,
    LBracket,
    RBracket,
    Arrow,   // ->
    BiArrow, // <->
}

#[derive(Clone, Copy, Debug)]
struct Spanned<'a> {
    tok: Tok<'a>,
    line: usize,
    col: usize,
}

/// Split the input into statements (by `;`/newline, respecting comments) and
/// tokenize each. Tokenizer errors abort only the affected statement.
fn tokenize_statements(text: &str) -> Vec<Result<Vec<Spanned<'_>>, ParseDiagnostic>> {
    let mut statements = Vec::new();
    let mut current: Vec<Spanned> = Vec::new();
    let mut current_err: Option<ParseDiagnostic> = None;

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        let bytes = content.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c == ';' {
                if current_err.is_some() || !current.is_empty() {
                    statements.push(flush(&mut current, &mut current_err));
                }
                i += 1;
            } else if c == '+' {
                current.push(Spanned { tok: Tok::Plus, line, col });
                i += 1;
            } else if c == ',' {
                current.push(Spanned { tok: Tok::Comma, line, col });
                i += 1;
            } else if c == '[' {
                current.push(Spanned { tok: Tok::LBracket, line, col });
                i += 1;
            } else if c == ']' {
                current.push(Spanned { tok: Tok::RBracket, line, col });
                i += 1;
            } else if content[i..].starts_with("<->") {
                current.push(Spanned { tok: Tok::BiArrow, line, col });
                i += 3;
            } else if content[i..].starts_with("->") {
                current.push(Spanned { tok: Tok::Arrow, line, col });
                i += 2;
            } else if c.is_ascii_digit() {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                match content[start..i].parse::<u32>() {
                    Ok(n) => current.push(Spanned { tok: Tok::Number(n), line, col }),
                    Err(_) => {
                        set_err(
                            &mut current_err,
                            ParseDiagnostic::error(line, col, "stoichiometric coefficient too large"),
                        );
                    }
                }
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() {
                    let ch = bytes[i] as char;
                    if ch.is_alphanumeric() || ch == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                current.push(Spanned { tok: Tok::Ident(&content[start..i]), line, col });
            } else {
                set_err(
                    &mut current_err,
                    ParseDiagnostic::error(line, col, format!("unexpected character `{c}`")),
                );
                i += 1;
            }
        }
        // Newline ends a statement unless the line was blank/comment-only.
        if current_err.is_some() || !current.is_empty() {
            statements.push(flush(&mut current, &mut current_err));
        }
    }
    statements
}

fn set_err(slot: &mut Option<ParseDiagnostic>, d: ParseDiagnostic) {
    if slot.is_none() {
        *slot = Some(d);
    }
}

fn flush<'a>(
    current: &mut Vec<Spanned<'a>>,
    err: &mut Option<ParseDiagnostic>,
) -> Result<Vec<Spanned<'a>>, ParseDiagnostic> {
    let toks = std::mem::take(current);
    match err.take() {
        Some(e) => Err(e),
        None => Ok(toks),
    }
}

struct RawTerm {
    coeff: u32,
    species: String,
}

struct RawComplex {
    terms: Vec<RawTerm>, // empty = the zero complex
    line: usize,
    col: usize,
}

struct RawStatement {
    lhs: RawComplex,
    rhs: RawComplex,
    reversible: bool,
    rates: Vec<(String, usize, usize)>, // name, line, col
    line: usize,
    col: usize,
}

struct StatementParser<'a> {
    toks: &'a [Spanned<'a>],
    pos: usize,
}

impl<'a> StatementParser<'a> {
    fn peek(&self) -> Option<&Spanned<'a>> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Spanned<'a>> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or_else(|| self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn parse_complex(&mut self) -> Result<RawComplex, ParseDiagnostic> {
        let (line, col) = self.here();
        // "0" alone denotes the empty complex.
        if let Some(Spanned { tok: Tok::Number(0), .. }) = self.peek() {
            let ahead = self.toks.get(self.pos + 1).map(|s| s.tok);
            let ends_complex = !matches!(ahead, Some(Tok::Ident(_)));
            if ends_complex {
                self.next();
                return Ok(RawComplex { terms: Vec::new(), line, col });
            }
        }
        let mut terms = Vec::new();
        loop {
            let (tline, tcol) = self.here();
            let coeff = match self.peek() {
                Some(Spanned { tok: Tok::Number(n), .. }) => {
                    let n = *n;
                    self.next();
                    if n == 0 {
                        return Err(ParseDiagnostic::error(
                            tline,
                            tcol,
                            "zero coefficient in a non-empty complex",
                        ));
                    }
                    n
                }
                _ => 1,
            };
            match self.next() {
                Some(Spanned { tok: Tok::Ident(name), .. }) => {
                    terms.push(RawTerm { coeff, species: name.to_string() });
                }
                other => {
                    let (l, c) = other.map(|s| (s.line, s.col)).unwrap_or((tline, tcol));
                    return Err(ParseDiagnostic::error(l, c, "expected species identifier"));
                }
            }
            match self.peek() {
                Some(Spanned { tok: Tok::Plus, .. }) => {
                    self.next();
                }
                _ => break,
            }
        }
        Ok(RawComplex { terms, line, col })
    }

    fn parse_statement(&mut self) -> Result<RawStatement, ParseDiagnostic> {
        let (line, col) = self.here();
        let lhs = self.parse_complex()?;
        let reversible = match self.next() {
            Some(Spanned { tok: Tok::Arrow, .. }) => false,
            Some(Spanned { tok: Tok::BiArrow, .. }) => true,
            other => {
                let (l, c) = other.map(|s| (s.line, s.col)).unwrap_or((line, col));
                return Err(ParseDiagnostic::error(l, c, "expected `->` or `<->`"));
            }
        };
        let rhs = self.parse_complex()?;
        match self.next() {
            Some(Spanned { tok: Tok::LBracket, .. }) => {}
            other => {
                let (l, c) = other.map(|s| (s.line, s.col)).unwrap_or(self.here());
                return Err(ParseDiagnostic::error(l, c, "expected `[` before rate list"));
            }
        }
        let mut rates = Vec::new();
        loop {
            match self.next() {
                Some(Spanned { tok: Tok::Ident(name), line: l, col: c }) => {
                    rates.push((name.to_string(), *l, *c));
                }
                other => {
                    let (l, c) = other.map(|s| (s.line, s.col)).unwrap_or(self.here());
                    return Err(ParseDiagnostic::error(l, c, "expected rate identifier"));
                }
            }
            match self.next() {
                Some(Spanned { tok: Tok::Comma, .. }) => {}
                Some(Spanned { tok: Tok::RBracket, .. }) => break,
                other => {
                    let (l, c) = other.map(|s| (s.line, s.col)).unwrap_or(self.here());
                    return Err(ParseDiagnostic::error(l, c, "expected `,` or `]` in rate list"));
                }
            }
        }
        if let Some(t) = self.peek() {
            return Err(ParseDiagnostic::error(
                t.line,
                t.col,
                "unexpected trailing input after reaction",
            ));
        }
        let expected = if reversible { 2 } else { 1 };
        if rates.len() != expected {
            return Err(ParseDiagnostic::error(
                line,
                col,
                format!(
                    "{} rate symbol(s) given, {} expected for this arrow",
                    rates.len(),
                    expected
                ),
            ));
        }
        Ok(RawStatement { lhs, rhs, reversible, rates, line, col })
    }
}

/// Parse a network source. On failure, every error carries a source location;
/// parsing continues past a bad statement so that all diagnostics are
/// collected in one pass.
pub fn parse_network(src: &NetworkSource) -> Result<ReactionNetwork, Vec<ParseDiagnostic>> {
    let mut diags: Vec<ParseDiagnostic> = Vec::new();
    let mut raw: Vec<RawStatement> = Vec::new();
    for stmt in tokenize_statements(&src.text) {
        match stmt {
            Ok(toks) => {
                if toks.is_empty() {
                    continue;
                }
                let mut p = StatementParser { toks: &toks, pos: 0 };
                match p.parse_statement() {
                    Ok(s) => raw.push(s),
                    Err(d) => diags.push(d),
                }
            }
            Err(d) => diags.push(d),
        }
    }

    // Species in first-appearance order.
    let mut species: Vec<String> = Vec::new();
    let mut species_index: HashMap<String, usize> = HashMap::new();
    for s in &raw {
        for cx in [&s.lhs, &s.rhs] {
            for t in &cx.terms {
                if !species_index.contains_key(&t.species) {
                    species_index.insert(t.species.clone(), species.len());
                    species.push(t.species.clone());
                }
            }
        }
    }

    let build = |cx: &RawComplex, n: usize, diags: &mut Vec<ParseDiagnostic>| -> Complex {
        let mut v = vec![0u32; n];
        for t in &cx.terms {
            let idx = species_index[&t.species];
            match v[idx].checked_add(t.coeff) {
                Some(s) => v[idx] = s,
                None => diags.push(ParseDiagnostic::error(
                    cx.line,
                    cx.col,
                    "stoichiometric coefficient overflow",
                )),
            }
        }
        Complex(v)
    };

    let n = species.len();
    let mut symbols = SymbolTable::new();
    let mut reactions: Vec<Reaction> = Vec::new();
    let mut complexes: Vec<Complex> = Vec::new();
    let mut seen_pairs: HashMap<(Complex, Complex), ()> = HashMap::new();

    for s in &raw {
        let lhs = build(&s.lhs, n, &mut diags);
        let rhs = build(&s.rhs, n, &mut diags);
        if lhs == rhs {
            diags.push(ParseDiagnostic::error(s.line, s.col, "reactant equals product"));
            continue;
        }
        let mut directions = vec![(lhs.clone(), rhs.clone(), &s.rates[0])];
        if s.reversible {
            directions.push((rhs.clone(), lhs.clone(), &s.rates[1]));
        }
        for (reactant, product, (name, rline, rcol)) in directions {
            if symbols.index_of(name).is_some() {
                diags.push(ParseDiagnostic::error(
                    *rline,
                    *rcol,
                    format!("rate symbol `{name}` already bound to another reaction"),
                ));
                continue;
            }
            if seen_pairs
                .insert((reactant.clone(), product.clone()), ())
                .is_some()
            {
                diags.push(ParseDiagnostic::error(
                    s.line,
                    s.col,
                    "duplicate reaction (same reactant and product)",
                ));
                continue;
            }
            let rate = symbols.intern(name);
            for cx in [&reactant, &product] {
                if !complexes.contains(cx) {
                    complexes.push(cx.clone());
                }
            }
            reactions.push(Reaction {
                reactant,
                product,
                rate_symbol: name.clone(),
                rate,
            });
        }
    }

    if diags.is_empty() {
        Ok(ReactionNetwork { species, complexes, reactions, symbols })
    } else {
        Err(diags)
    }
}

/// Canonical DSL text: one reaction per line in reaction order, coefficients
/// of 1 omitted, the empty complex written `0`.
pub fn render_network(net: &ReactionNetwork) -> String {
    let complex_text = |c: &Complex| -> String {
        if c.is_empty_complex() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (i, &coeff) in c.0.iter().enumerate() {
            match coeff {
                0 => {}
                1 => parts.push(net.species[i].clone()),
                k => parts.push(format!("{} {}", k, net.species[i])),
            }
        }
        parts.join(" + ")
    };
    let mut lines = Vec::new();
    for r in &net.reactions {
        lines.push(format!(
            "{} -> {} [{}]",
            complex_text(&r.reactant),
            complex_text(&r.product),
            r.rate_symbol
        ));
    }
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ReactionNetwork, Vec<ParseDiagnostic>> {
        parse_network(&NetworkSource::inline(text))
    }

    #[test]
    fn parses_the_two_species_autocatalytic_example() {
        let net = parse("S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]").unwrap();
        assert_eq!(net.species, vec!["S1", "S2"]);
        assert_eq!(net.num_complexes(), 4);
        assert_eq!(net.num_reactions(), 2);
        assert_eq!(net.reactions[0].rate_symbol, "beta");
        assert_eq!(net.reactions[1].reactant, Complex(vec![0, 2]));
        assert_eq!(net.reactions[1].product, Complex(vec![2, 0]));
    }

    #[test]
    fn reversible_arrow_expands_to_two_reactions() {
        let net = parse("S1 <-> S2 [a, b]").unwrap();
        assert_eq!(net.num_reactions(), 2);
        assert_eq!(net.reactions[0].rate_symbol, "a");
        assert_eq!(net.reactions[1].rate_symbol, "b");
        assert_eq!(net.reactions[1].reactant, Complex(vec![0, 1]));
        assert_eq!(net.reactions[1].product, Complex(vec![1, 0]));
    }

    #[test]
    fn rejects_self_loop_reaction() {
        let errs = parse("S1 -> S1 [k]").unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("reactant equals product")));
        assert_eq!(errs[0].line, 1);
    }

    #[test]
    fn rejects_duplicate_rate_symbol_and_duplicate_reaction() {
        let errs = parse("S1 -> S2 [k]; S2 -> S1 [k]").unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("already bound")));
        let errs = parse("S1 -> S2 [k1]\nS1 -> S2 [k2]").unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("duplicate reaction")));
    }

    #[test]
    fn locates_syntax_errors() {
        let errs = parse("S1 -> S2").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("expected `[`"));
        let errs = parse("S1 ->\n2 S2 -> 2 S1 [a]\nS1 => S2 [b]").unwrap_err();
        assert_eq!(errs.len(), 2);
        assert_eq!(errs[1].line, 3);
    }

    #[test]
    fn comments_and_empty_complexes() {
        let net = parse("# creation and decay\n0 -> S1 [birth]\nS1 -> 0 [death]").unwrap();
        assert_eq!(net.num_reactions(), 2);
        assert!(net.reactions[0].reactant.is_empty_complex());
    }

    #[test]
    fn wrong_rate_count_for_arrow() {
        assert!(parse("S1 <-> S2 [a]").is_err());
        assert!(parse("S1 -> S2 [a, b]").is_err());
    }

    #[test]
    fn render_round_trip_is_canonical() {
        let text = "S1 -> S2 [beta]; 2 S2 -> 2 S1 [alpha]";
        let net = parse(text).unwrap();
        assert_eq!(render_network(&net), "S1 -> S2 [beta]\n2 S2 -> 2 S1 [alpha]\n");
        let again = parse(&render_network(&net)).unwrap();
        assert_eq!(again, net);
        // Idempotent rendering.
        assert_eq!(render_network(&again), render_network(&net));
    }

    #[test]
    fn empty_network_renders_empty() {
        let net = parse("").unwrap();
        assert_eq!(render_network(&net), "");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Every input either parses or yields at least one located error;
            /// the parser never panics.
            #[test]
            fn rejection_is_total(text in "[ -~\n]{0,120}") {
                match parse(&text) {
                    Ok(net) => {
                        let rendered = render_network(&net);
                        let reparsed = parse(&rendered).unwrap();
                        prop_assert_eq!(reparsed, net);
                    }
                    Err(diags) => {
                        prop_assert!(!diags.is_empty());
                        for d in diags {
                            prop_assert!(d.line >= 1 && d.column >= 1);
                        }
                    }
                }
            }
        }
    }
}
