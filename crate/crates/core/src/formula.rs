//! Formulas of the knowledge/effort language.
//!
//! The AST only knows the primitive connectives (negation, conjunction, the
//! effort modality `[]` and the knowledge modality `K`) plus the two
//! constants. Everything else (`<>`, `L`, `|`, `->`) is sugar that the parser
//! expands and the renderer folds back.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Words that can never be used as atom names.
pub const RESERVED: [&str; 4] = ["K", "L", "true", "false"];

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Top,
    Bottom,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// `[]f`: f holds however the current open is shrunk around the point.
    Effort(Box<Formula>),
    /// `K f`: f holds at every point of the current open.
    Know(Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn effort(f: Formula) -> Formula {
        Formula::Effort(Box::new(f))
    }

    pub fn know(f: Formula) -> Formula {
        Formula::Know(Box::new(f))
    }

    /// `<>f`, stored as `~[]~f`.
    pub fn diamond(f: Formula) -> Formula {
        Formula::not(Formula::effort(Formula::not(f)))
    }

    /// `L f`, stored as `~K~f`.
    pub fn possible(f: Formula) -> Formula {
        Formula::not(Formula::know(Formula::not(f)))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(l), Formula::not(r)))
    }

    pub fn implies(l: Formula, r: Formula) -> Formula {
        Formula::not(Formula::and(l, Formula::not(r)))
    }

    pub fn iff(l: Formula, r: Formula) -> Formula {
        Formula::and(Formula::implies(l.clone(), r.clone()), Formula::implies(r, l))
    }

    /// Node count of the desugared tree.
    pub fn complexity(&self) -> usize {
        match self {
            Formula::Top | Formula::Bottom | Formula::Atom(_) => 1,
            Formula::Not(f) | Formula::Effort(f) | Formula::Know(f) => 1 + f.complexity(),
            Formula::And(l, r) => 1 + l.complexity() + r.complexity(),
        }
    }

    /// Modal and boolean nesting depth; atoms and constants have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Top | Formula::Bottom | Formula::Atom(_) => 0,
            Formula::Not(f) | Formula::Effort(f) | Formula::Know(f) => 1 + f.depth(),
            Formula::And(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Top | Formula::Bottom => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(f) | Formula::Effort(f) | Formula::Know(f) => f.collect_atoms(out),
            Formula::And(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    pub fn contains_know(&self) -> bool {
        match self {
            Formula::Top | Formula::Bottom | Formula::Atom(_) => false,
            Formula::Know(_) => true,
            Formula::Not(f) | Formula::Effort(f) => f.contains_know(),
            Formula::And(l, r) => l.contains_know() || r.contains_know(),
        }
    }

    /// Distinct subformulas, children before parents; `self` comes last.
    pub fn subformulas(&self) -> Vec<Formula> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.collect_subformulas(&mut out, &mut seen);
        out
    }

    fn collect_subformulas<'a>(&'a self, out: &mut Vec<Formula>, seen: &mut BTreeSet<&'a Formula>) {
        match self {
            Formula::Top | Formula::Bottom | Formula::Atom(_) => {}
            Formula::Not(f) | Formula::Effort(f) | Formula::Know(f) => f.collect_subformulas(out, seen),
            Formula::And(l, r) => {
                l.collect_subformulas(out, seen);
                r.collect_subformulas(out, seen);
            }
        }
        if seen.insert(self) {
            out.push(self.clone());
        }
    }

    /// Replaces atoms by formulas, simultaneously.
    pub fn substitute(&self, map: &dyn Fn(&str) -> Option<Formula>) -> Formula {
        match self {
            Formula::Top => Formula::Top,
            Formula::Bottom => Formula::Bottom,
            Formula::Atom(a) => map(a).unwrap_or_else(|| self.clone()),
            Formula::Not(f) => Formula::not(f.substitute(map)),
            Formula::And(l, r) => Formula::and(l.substitute(map), r.substitute(map)),
            Formula::Effort(f) => Formula::effort(f.substitute(map)),
            Formula::Know(f) => Formula::know(f.substitute(map)),
        }
    }

    /// Indented prefix dump of the primitive tree.
    pub fn ast_dump(&self) -> String {
        let mut out = String::new();
        self.dump_into(0, &mut out);
        out
    }

    fn dump_into(&self, indent: usize, out: &mut String) {
        for _ in 0..indent {
            out.push_str("  ");
        }
        match self {
            Formula::Top => out.push_str("Top\n"),
            Formula::Bottom => out.push_str("Bottom\n"),
            Formula::Atom(a) => {
                out.push_str("Atom ");
                out.push_str(a);
                out.push('\n');
            }
            Formula::Not(f) => {
                out.push_str("Not\n");
                f.dump_into(indent + 1, out);
            }
            Formula::And(l, r) => {
                out.push_str("And\n");
                l.dump_into(indent + 1, out);
                r.dump_into(indent + 1, out);
            }
            Formula::Effort(f) => {
                out.push_str("Box\n");
                f.dump_into(indent + 1, out);
            }
            Formula::Know(f) => {
                out.push_str("K\n");
                f.dump_into(indent + 1, out);
            }
        }
    }
}

pub fn is_valid_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !RESERVED.contains(&name)
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at position {position}: {kind}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected {found}, expected {expected}")]
    Unexpected { found: String, expected: &'static str },
    #[error("reserved word `{0}` cannot be used as an atom")]
    ReservedWord(String),
    #[error("trailing input {0}")]
    Trailing(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Know,
    Possible,
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    BoxOp,
    DiamondOp,
    LParen,
    RParen,
    End,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "atom `{s}`"),
            Token::Know => f.write_str("`K`"),
            Token::Possible => f.write_str("`L`"),
            Token::True => f.write_str("`true`"),
            Token::False => f.write_str("`false`"),
            Token::Not => f.write_str("`~`"),
            Token::And => f.write_str("`&`"),
            Token::Or => f.write_str("`|`"),
            Token::Implies => f.write_str("`->`"),
            Token::BoxOp => f.write_str("`[]`"),
            Token::DiamondOp => f.write_str("`<>`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::End => f.write_str("end of input"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let two = |s: &str| text[i..].starts_with(s);
        let tok = if c.is_ascii_alphabetic() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            out.push((
                start,
                match word {
                    "K" => Token::Know,
                    "L" => Token::Possible,
                    "true" => Token::True,
                    "false" => Token::False,
                    _ => Token::Ident(word.to_string()),
                },
            ));
            continue;
        } else if two("->") {
            i += 2;
            Token::Implies
        } else if two("[]") {
            i += 2;
            Token::BoxOp
        } else if two("<>") {
            i += 2;
            Token::DiamondOp
        } else {
            i += 1;
            match c {
                '~' => Token::Not,
                '&' => Token::And,
                '|' => Token::Or,
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => {
                    let ch = text[start..].chars().next().unwrap_or(c);
                    return Err(ParseError { position: start, kind: ParseErrorKind::UnexpectedChar(ch) });
                }
            }
        };
        out.push((start, tok));
    }
    out.push((text.len(), Token::End));
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].1
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].0
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].1.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        ParseError {
            position: self.offset(),
            kind: ParseErrorKind::Unexpected { found: self.peek().to_string(), expected },
        }
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Token::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conjunction()?;
        while *self.peek() == Token::Or {
            self.bump();
            let rhs = self.conjunction()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while *self.peek() == Token::And {
            self.bump();
            let rhs = self.unary()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let at = self.offset();
        let tok = self.peek().clone();
        if !starts_formula(&tok) {
            return Err(self.unexpected("a formula"));
        }
        self.bump();
        match tok {
            Token::Not => Ok(Formula::not(self.unary()?)),
            Token::BoxOp => Ok(Formula::effort(self.unary()?)),
            Token::DiamondOp => Ok(Formula::diamond(self.unary()?)),
            Token::Know | Token::Possible => {
                // `K` or `L` with nothing to apply to reads as an attempt to use it as an atom.
                if !starts_formula(self.peek()) {
                    let word = if tok == Token::Know { "K" } else { "L" };
                    return Err(ParseError { position: at, kind: ParseErrorKind::ReservedWord(word.into()) });
                }
                let inner = self.unary()?;
                Ok(if tok == Token::Know { Formula::know(inner) } else { Formula::possible(inner) })
            }
            Token::True => Ok(Formula::Top),
            Token::False => Ok(Formula::Bottom),
            Token::Ident(name) => Ok(Formula::Atom(name)),
            Token::LParen => {
                let inner = self.implication()?;
                if *self.peek() != Token::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            Token::And | Token::Or | Token::Implies | Token::RParen | Token::End => unreachable!(),
        }
    }
}

fn starts_formula(tok: &Token) -> bool {
    !matches!(tok, Token::And | Token::Or | Token::Implies | Token::RParen | Token::End)
}

/// Parses the concrete syntax: `~ & | -> [] <> K L true false ( )`.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { tokens: tokenize(text)?, pos: 0 };
    let f = p.implication()?;
    if *p.peek() != Token::End {
        return Err(ParseError {
            position: p.offset(),
            kind: ParseErrorKind::Trailing(p.peek().to_string()),
        });
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Rendering

const PREC_IMP: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

/// Surface view of a primitive node, with sugar folded back.
enum View<'a> {
    Leaf(String),
    Unary(&'static str, &'a Formula),
    Binary(&'static str, u8, &'a Formula, &'a Formula),
}

fn view(f: &Formula) -> View<'_> {
    match f {
        Formula::Top => View::Leaf("true".into()),
        Formula::Bottom => View::Leaf("false".into()),
        Formula::Atom(a) => View::Leaf(a.clone()),
        Formula::Effort(g) => View::Unary("[]", g),
        Formula::Know(g) => View::Unary("K", g),
        Formula::And(l, r) => View::Binary("&", PREC_AND, l, r),
        Formula::Not(g) => match g.as_ref() {
            Formula::Effort(h) => match h.as_ref() {
                Formula::Not(x) => View::Unary("<>", x),
                _ => View::Unary("~", g),
            },
            Formula::Know(h) => match h.as_ref() {
                Formula::Not(x) => View::Unary("L", x),
                _ => View::Unary("~", g),
            },
            Formula::And(l, r) => match (l.as_ref(), r.as_ref()) {
                // ~(~a & ~b) reads as `a | b` unless ~a is itself an implication or disjunction
                (Formula::Not(a), Formula::Not(b)) if !matches!(view(l), View::Binary(..)) => {
                    View::Binary("|", PREC_OR, a, b)
                }
                (_, Formula::Not(b)) => View::Binary("->", PREC_IMP, l, b),
                _ => View::Unary("~", g),
            },
            _ => View::Unary("~", g),
        },
    }
}

fn precedence(f: &Formula) -> u8 {
    match view(f) {
        View::Leaf(_) | View::Unary(..) => PREC_UNARY,
        View::Binary(_, p, _, _) => p,
    }
}

fn render_into(f: &Formula, min_prec: u8, out: &mut String) {
    let wrap = precedence(f) < min_prec;
    if wrap {
        out.push('(');
    }
    match view(f) {
        View::Leaf(s) => out.push_str(&s),
        View::Unary(op, inner) => {
            out.push_str(op);
            // `K A` must not fuse into the identifier `KA`.
            if (op == "K" || op == "L") && starts_with_word(inner) {
                out.push(' ');
            }
            render_into(inner, PREC_UNARY, out);
        }
        View::Binary(op, prec, l, r) => {
            let (lp, rp) = if op == "->" { (prec + 1, prec) } else { (prec, prec + 1) };
            render_into(l, lp, out);
            out.push(' ');
            out.push_str(op);
            out.push(' ');
            render_into(r, rp, out);
        }
    }
    if wrap {
        out.push(')');
    }
}

fn starts_with_word(f: &Formula) -> bool {
    if precedence(f) < PREC_UNARY {
        return false;
    }
    match view(f) {
        View::Leaf(_) => true,
        View::Unary(op, _) => op == "K" || op == "L",
        View::Binary(..) => false,
    }
}

pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    render_into(f, 0, &mut out);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}
