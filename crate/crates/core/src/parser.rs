//! Parsers for the logic-program dialect (`.dsr`), line-delimited dataset
//! files (`.jsonl`), and rule-prior files (`.priors`), plus a canonical
//! program printer.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::logic::{
    AnswerDecl, Atom, Constraint, Gender, ProbFact, Program, RelationId, RelationMeta, Rule,
    RuleTemplate, Sample, TypeDecl, Var, Vocabulary,
};

/// Location of a token or diagnostic inside the source text.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Error, Debug)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError { span, message: message.into() }
    }
}

// ---------------------------------------------------------------- lexer --

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    ColonEq,
    DoubleColon,
    Eq,
    Neq,
    Imply,
    Bang,
    Plus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Float(v) => write!(f, "`{v}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::ColonEq => write!(f, "`:=`"),
            Tok::DoubleColon => write!(f, "`::`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Neq => write!(f, "`!=`"),
            Tok::Imply => write!(f, "`=>`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;
    macro_rules! span {
        ($start:expr, $scol:expr, $end:expr) => {
            SourceSpan { line, column: $scol, start: $start, end: $end }
        };
    }
    while i < bytes.len() {
        let c = bytes[i] as char;
        let (start, scol) = (i, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' | ')' | '{' | '}' | ',' | '+' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ',' => Tok::Comma,
                    _ => Tok::Plus,
                };
                tokens.push(Token { tok, span: span!(start, scol, i + 1) });
                i += 1;
                col += 1;
            }
            ':' => {
                let (tok, len) = match bytes.get(i + 1) {
                    Some(b'=') => (Tok::ColonEq, 2),
                    Some(b':') => (Tok::DoubleColon, 2),
                    _ => (Tok::Colon, 1),
                };
                tokens.push(Token { tok, span: span!(start, scol, i + len) });
                i += len;
                col += len as u32;
            }
            '=' => {
                let (tok, len) = match bytes.get(i + 1) {
                    Some(b'>') => (Tok::Imply, 2),
                    _ => (Tok::Eq, 1),
                };
                tokens.push(Token { tok, span: span!(start, scol, i + len) });
                i += len;
                col += len as u32;
            }
            '!' => {
                let (tok, len) = match bytes.get(i + 1) {
                    Some(b'=') => (Tok::Neq, 2),
                    _ => (Tok::Bang, 1),
                };
                tokens.push(Token { tok, span: span!(start, scol, i + len) });
                i += len;
                col += len as u32;
            }
            c if c.is_ascii_digit()
                || (c == '-' && bytes.get(i + 1).map_or(false, |b| b.is_ascii_digit())) =>
            {
                let mut j = i + 1;
                let mut is_float = false;
                while j < bytes.len()
                    && (bytes[j].is_ascii_digit() || (bytes[j] == b'.' && !is_float))
                {
                    if bytes[j] == b'.' {
                        is_float = true;
                    }
                    j += 1;
                }
                let text = &text[i..j];
                let tok = if is_float {
                    Tok::Float(text.parse().map_err(|_| {
                        ParseError::new(span!(start, scol, j), format!("bad number `{text}`"))
                    })?)
                } else {
                    Tok::Int(text.parse().map_err(|_| {
                        ParseError::new(span!(start, scol, j), format!("bad number `{text}`"))
                    })?)
                };
                tokens.push(Token { tok, span: span!(start, scol, j) });
                col += (j - i) as u32;
                i = j;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i + 1;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                tokens.push(Token {
                    tok: Tok::Ident(text[i..j].to_string()),
                    span: span!(start, scol, j),
                });
                col += (j - i) as u32;
                i = j;
            }
            other => {
                return Err(ParseError::new(
                    span!(start, scol, i + 1),
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan { line, column: col, start: bytes.len(), end: bytes.len() },
    });
    Ok(tokens)
}

// ------------------------------------------------------------ raw items --

#[derive(Clone, Debug)]
enum Term {
    Ident(String),
    Int(i64),
    /// `g1 + g2` inside the generation rule IC.
    Sum(String, String),
}

#[derive(Clone, Debug)]
struct PAtom {
    pred: String,
    args: Vec<Term>,
    span: SourceSpan,
}

#[derive(Clone, Debug)]
enum BodyItem {
    Atom(PAtom),
    Neq(String, String),
}

#[derive(Clone, Debug)]
enum Item {
    Type(TypeDecl),
    Const(Vec<(String, i64)>),
    FactSet { name: String, tuples: Vec<(f64, Vec<Term>)>, span: SourceSpan },
    Rule { head: PAtom, body: Vec<BodyItem>, span: SourceSpan },
    Forall { vars: Vec<String>, premise: Vec<PAtom>, conclusion: Vec<PAtom>, span: SourceSpan },
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::new(
                self.span(),
                format!("expected {tok}, found {}", self.peek()),
            ))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(ParseError::new(self.span(), format!("expected identifier, found {other}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if let Tok::Ident(s) = self.peek() {
            if s == kw {
                self.bump();
                return true;
            }
        }
        false
    }

    fn items(&mut self) -> Result<Vec<Item>, ParseError> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            let span = self.span();
            let kw = self.ident()?;
            match kw.as_str() {
                "type" => items.push(self.type_decl()?),
                "const" => items.push(self.const_decl()?),
                "rel" => items.push(self.rel_item(span)?),
                other => {
                    return Err(ParseError::new(
                        span,
                        format!("expected `type`, `const`, or `rel`, found `{other}`"),
                    ))
                }
            }
        }
        Ok(items)
    }

    fn type_decl(&mut self) -> Result<Item, ParseError> {
        let name = self.ident()?;
        self.expect(&Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let pname = self.ident()?;
                self.expect(&Tok::Colon)?;
                let ptype = self.ident()?;
                params.push((pname, ptype));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(Item::Type(TypeDecl { name, params }))
    }

    fn const_decl(&mut self) -> Result<Item, ParseError> {
        let mut defs = Vec::new();
        loop {
            let name = self.ident()?;
            self.expect(&Tok::Eq)?;
            let value = match self.bump() {
                Tok::Int(v) => v,
                other => {
                    return Err(ParseError::new(
                        self.span(),
                        format!("expected integer constant, found {other}"),
                    ))
                }
            };
            defs.push((name, value));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(Item::Const(defs))
    }

    fn rel_item(&mut self, span: SourceSpan) -> Result<Item, ParseError> {
        let name = self.ident()?;
        if name == "violation" {
            return self.violation_rule(span);
        }
        if *self.peek() == Tok::Eq {
            self.bump();
            return self.fact_set(name, span);
        }
        let head = self.atom_with_pred(name)?;
        self.expect(&Tok::Eq)?;
        let mut body = Vec::new();
        loop {
            body.push(self.body_item()?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(Item::Rule { head, body, span })
    }

    fn fact_set(&mut self, name: String, span: SourceSpan) -> Result<Item, ParseError> {
        self.expect(&Tok::LBrace)?;
        let mut tuples = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let weight = match self.peek().clone() {
                    Tok::Float(w) => {
                        self.bump();
                        self.expect(&Tok::DoubleColon)?;
                        w
                    }
                    Tok::Int(w) if matches!(self.tokens[self.pos + 1].tok, Tok::DoubleColon) => {
                        self.bump();
                        self.bump();
                        w as f64
                    }
                    _ => 1.0,
                };
                self.expect(&Tok::LParen)?;
                let mut terms = Vec::new();
                loop {
                    terms.push(self.term()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(&Tok::RParen)?;
                tuples.push((weight, terms));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(&Tok::RBrace)?;
        Ok(Item::FactSet { name, tuples, span })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.bump() {
            Tok::Ident(a) => {
                if *self.peek() == Tok::Plus {
                    self.bump();
                    let b = self.ident()?;
                    Ok(Term::Sum(a, b))
                } else {
                    Ok(Term::Ident(a))
                }
            }
            Tok::Int(v) => Ok(Term::Int(v)),
            other => Err(ParseError::new(self.span(), format!("expected term, found {other}"))),
        }
    }

    fn atom_with_pred(&mut self, pred: String) -> Result<PAtom, ParseError> {
        let span = self.span();
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(PAtom { pred, args, span })
    }

    fn atom(&mut self) -> Result<PAtom, ParseError> {
        let pred = self.ident()?;
        self.atom_with_pred(pred)
    }

    fn body_item(&mut self) -> Result<BodyItem, ParseError> {
        let first = self.ident()?;
        if *self.peek() == Tok::Neq {
            self.bump();
            let second = self.ident()?;
            Ok(BodyItem::Neq(first, second))
        } else {
            Ok(BodyItem::Atom(self.atom_with_pred(first)?))
        }
    }

    /// `violation(!r) = r := forall(vars: premise => conclusion)`
    fn violation_rule(&mut self, span: SourceSpan) -> Result<Item, ParseError> {
        self.expect(&Tok::LParen)?;
        self.expect(&Tok::Bang)?;
        let bound = self.ident()?;
        self.expect(&Tok::RParen)?;
        self.expect(&Tok::Eq)?;
        let bound2 = self.ident()?;
        if bound2 != bound {
            return Err(ParseError::new(
                self.span(),
                format!("violation binder `{bound2}` does not match `{bound}`"),
            ));
        }
        self.expect(&Tok::ColonEq)?;
        if !self.keyword("forall") {
            return Err(ParseError::new(self.span(), "expected `forall`"));
        }
        self.expect(&Tok::LParen)?;
        let mut vars = Vec::new();
        loop {
            vars.push(self.ident()?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(&Tok::Colon)?;
        let mut premise = vec![self.quantified_atom()?];
        while self.keyword("and") {
            premise.push(self.quantified_atom()?);
        }
        self.expect(&Tok::Imply)?;
        let mut conclusion = Vec::new();
        let parenthesized = *self.peek() == Tok::LParen && self.looks_like_group();
        if parenthesized {
            self.expect(&Tok::LParen)?;
        }
        conclusion.push(self.atom()?);
        while self.keyword("or") {
            conclusion.push(self.atom()?);
        }
        if parenthesized {
            self.expect(&Tok::RParen)?;
        }
        self.expect(&Tok::RParen)?;
        Ok(Item::Forall { vars, premise, conclusion, span })
    }

    fn quantified_atom(&mut self) -> Result<PAtom, ParseError> {
        // Premise atoms may themselves be parenthesized; keep it simple and
        // accept plain atoms only.
        self.atom()
    }

    /// Distinguish `( atom or atom )` from an atom-opening paren: a group
    /// starts with `(` followed by an identifier and another `(`.
    fn looks_like_group(&self) -> bool {
        matches!(
            (&self.tokens[self.pos].tok, &self.tokens.get(self.pos + 1).map(|t| t.tok.clone())),
            (Tok::LParen, Some(Tok::Ident(_)))
        ) && matches!(self.tokens.get(self.pos + 2).map(|t| t.tok.clone()), Some(Tok::LParen))
    }
}

// ------------------------------------------------------ semantic analysis --

const TEMPLATE_KINDS: [(&str, usize); 5] = [
    ("composite", 3),
    ("transitive", 1),
    ("symmetric", 1),
    ("inverse", 2),
    ("implies", 2),
];

const QUERY_ALIASES: [&str; 2] = ["query", "question"];
const KINSHIP_ALIASES: [&str; 2] = ["kinship", "derive"];

struct Analyzer {
    consts: BTreeMap<String, i64>,
    type_arity: BTreeMap<String, usize>,
}

impl Analyzer {
    fn relation_const(&self, name: &str, span: SourceSpan) -> Result<i64, ParseError> {
        self.consts
            .get(name)
            .copied()
            .ok_or_else(|| ParseError::new(span, format!("undeclared constant `{name}`")))
    }
}

/// Parse a logic program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let items = parser.items()?;

    let mut az = Analyzer { consts: BTreeMap::new(), type_arity: BTreeMap::new() };
    let mut type_decls = Vec::new();
    for item in &items {
        match item {
            Item::Type(decl) => {
                az.type_arity.insert(decl.name.clone(), decl.params.len());
                type_decls.push(decl.clone());
            }
            Item::Const(defs) => {
                for (name, value) in defs {
                    az.consts.insert(name.clone(), *value);
                }
            }
            _ => {}
        }
    }

    // Pass 1: gender / gen tables determine the relation vocabulary.
    let mut gender_by_const: BTreeMap<String, Gender> = BTreeMap::new();
    let mut gen_by_const: BTreeMap<String, i8> = BTreeMap::new();
    let mut relation_consts: Vec<String> = Vec::new();
    let note_relation = |name: &str, relation_consts: &mut Vec<String>| {
        if !relation_consts.iter().any(|n| n == name) {
            relation_consts.push(name.to_string());
        }
    };
    for item in &items {
        if let Item::FactSet { name, tuples, span } = item {
            match name.as_str() {
                "gender" => {
                    for (_, terms) in tuples {
                        let [Term::Ident(rel), value] = &terms[..] else {
                            return Err(ParseError::new(*span, "gender entries are (REL, GENDER) pairs"));
                        };
                        let gender = match value {
                            Term::Ident(g) => match g.as_str() {
                                "MALE" => Gender::Male,
                                "FEMALE" => Gender::Female,
                                "NEUTRAL" => Gender::Neutral,
                                other => {
                                    return Err(ParseError::new(
                                        *span,
                                        format!("unknown gender constant `{other}`"),
                                    ))
                                }
                            },
                            Term::Int(0) => Gender::Male,
                            Term::Int(1) => Gender::Female,
                            _ => return Err(ParseError::new(*span, "bad gender value")),
                        };
                        note_relation(rel, &mut relation_consts);
                        gender_by_const.insert(rel.clone(), gender);
                    }
                }
                "gen" => {
                    for (_, terms) in tuples {
                        let [Term::Ident(rel), Term::Int(g)] = &terms[..] else {
                            return Err(ParseError::new(*span, "gen entries are (REL, INT) pairs"));
                        };
                        note_relation(rel, &mut relation_consts);
                        gen_by_const.insert(rel.clone(), *g as i8);
                    }
                }
                _ => {}
            }
        }
    }
    // Also pick up relation constants used anywhere else.
    let note_term = |t: &Term, relation_consts: &mut Vec<String>| {
        if let Term::Ident(name) = t {
            if az.consts.contains_key(name)
                && !matches!(name.as_str(), "MALE" | "FEMALE" | "NEUTRAL")
                && !relation_consts.iter().any(|n| n == name)
            {
                relation_consts.push(name.clone());
            }
        }
    };
    for item in &items {
        match item {
            Item::FactSet { name, tuples, .. }
                if TEMPLATE_KINDS.iter().any(|(k, _)| k == name) =>
            {
                for (_, terms) in tuples {
                    for t in terms {
                        note_term(t, &mut relation_consts);
                    }
                }
            }
            Item::Rule { head, body, .. } => {
                for t in &head.args {
                    note_term(t, &mut relation_consts);
                }
                for b in body {
                    if let BodyItem::Atom(a) = b {
                        for t in &a.args {
                            note_term(t, &mut relation_consts);
                        }
                    }
                }
            }
            Item::Forall { premise, conclusion, .. } => {
                for a in premise.iter().chain(conclusion.iter()) {
                    for t in &a.args {
                        note_term(t, &mut relation_consts);
                    }
                }
            }
            _ => {}
        }
    }

    // Build the vocabulary: relation const values must be 0..n-1.
    let n = relation_consts.len();
    let mut names = vec![String::new(); n];
    for rel in &relation_consts {
        let id = az.relation_const(rel, SourceSpan::default())?;
        if id < 0 || id as usize >= n || !names[id as usize].is_empty() {
            return Err(ParseError::new(
                SourceSpan::default(),
                format!("relation constant ids must be distinct and contiguous from 0 (`{rel}` = {id})"),
            ));
        }
        names[id as usize] = rel.to_lowercase();
    }
    let meta: Vec<RelationMeta> = relation_consts
        .iter()
        .map(|_| RelationMeta { gender: Gender::Neutral, gen: 0 })
        .collect();
    let mut meta = meta;
    for (rel, g) in &gender_by_const {
        let id = az.consts[rel] as usize;
        meta[id].gender = *g;
    }
    for (rel, g) in &gen_by_const {
        let id = az.consts[rel] as usize;
        meta[id].gen = *g;
    }
    let vocab = Vocabulary::new(names, meta);

    let mut program = Program { vocab, type_decls, ..Default::default() };

    // Pass 2: template facts, rules, constraints.
    for item in &items {
        match item {
            Item::FactSet { name, tuples, span } => match name.as_str() {
                "gender" | "gen" => {}
                kind if TEMPLATE_KINDS.iter().any(|(k, _)| *k == kind) => {
                    let arity = TEMPLATE_KINDS.iter().find(|(k, _)| *k == kind).unwrap().1;
                    for (weight, terms) in tuples {
                        if terms.len() != arity {
                            return Err(ParseError::new(
                                *span,
                                format!("`{kind}` takes {arity} relations, found {}", terms.len()),
                            ));
                        }
                        let rels: Vec<RelationId> = terms
                            .iter()
                            .map(|t| match t {
                                Term::Ident(name) => az
                                    .relation_const(name, *span)
                                    .map(|v| RelationId(v as u8)),
                                Term::Int(v) => Ok(RelationId(*v as u8)),
                                Term::Sum(..) => {
                                    Err(ParseError::new(*span, "unexpected sum term"))
                                }
                            })
                            .collect::<Result<_, _>>()?;
                        let template = match kind {
                            "composite" => RuleTemplate::Composite(rels[0], rels[1], rels[2]),
                            "transitive" => RuleTemplate::Transitive(rels[0]),
                            "symmetric" => RuleTemplate::Symmetric(rels[0]),
                            "inverse" => RuleTemplate::Inverse(rels[0], rels[1]),
                            _ => RuleTemplate::Implies(rels[0], rels[1]),
                        };
                        program.template_facts.push((template, *weight));
                    }
                }
                other => {
                    return Err(ParseError::new(*span, format!("unsupported fact set `{other}`")))
                }
            },
            Item::Rule { head, body, span } => {
                analyze_rule(&az, &mut program, head, body, *span)?;
            }
            Item::Forall { vars, premise, conclusion, span } => {
                let c = analyze_constraint(&az, vars, premise, conclusion, *span)?;
                program.constraints.push(c);
            }
            _ => {}
        }
    }
    Ok(program)
}

fn check_declared(az: &Analyzer, atom: &PAtom) -> Result<(), ParseError> {
    // `answer` and `violation` heads are implicitly declared.
    if matches!(atom.pred.as_str(), "answer" | "violation") {
        return Ok(());
    }
    if az.type_arity.is_empty() {
        return Ok(());
    }
    match az.type_arity.get(&atom.pred) {
        Some(&arity) if arity == atom.args.len() => Ok(()),
        Some(&arity) => Err(ParseError::new(
            atom.span,
            format!("`{}` takes {arity} arguments, found {}", atom.pred, atom.args.len()),
        )),
        None => Err(ParseError::new(
            atom.span,
            format!("undeclared predicate `{}`", atom.pred),
        )),
    }
}

fn analyze_rule(
    az: &Analyzer,
    program: &mut Program,
    head: &PAtom,
    body: &[BodyItem],
    span: SourceSpan,
) -> Result<(), ParseError> {
    check_declared(az, head)?;
    for b in body {
        if let BodyItem::Atom(a) = b {
            check_declared(az, a)?;
        }
    }
    // Answer rule: answer(r) = query(s, o), kinship(r, s, o).
    if head.pred == "answer" {
        let mut query_pred = None;
        let mut kinship_pred = None;
        for b in body {
            if let BodyItem::Atom(a) = b {
                if QUERY_ALIASES.contains(&a.pred.as_str()) {
                    query_pred = Some(a.pred.clone());
                } else if KINSHIP_ALIASES.contains(&a.pred.as_str()) {
                    kinship_pred = Some(a.pred.clone());
                }
            }
        }
        let (Some(query_pred), Some(kinship_pred)) = (query_pred, kinship_pred) else {
            return Err(ParseError::new(span, "answer rule needs a query atom and a kinship atom"));
        };
        program.answer = Some(AnswerDecl { query_pred, kinship_pred });
        return Ok(());
    }
    if !KINSHIP_ALIASES.contains(&head.pred.as_str()) {
        return Err(ParseError::new(span, format!("unsupported rule head `{}`", head.pred)));
    }
    // Composite-template deduction rule?
    let template_atom = body.iter().find_map(|b| match b {
        BodyItem::Atom(a) if a.pred == "composite" => Some(a),
        _ => None,
    });
    if let Some(comp) = template_atom {
        return analyze_composite_rule(program, head, body, comp, span);
    }
    // Otherwise a literal horn rule over constant relations.
    let mut var_slots: Vec<String> = Vec::new();
    let slot = |name: &str, var_slots: &mut Vec<String>| -> Var {
        if let Some(i) = var_slots.iter().position(|v| v == name) {
            i as Var
        } else {
            var_slots.push(name.to_string());
            (var_slots.len() - 1) as Var
        }
    };
    let to_atom = |az: &Analyzer, a: &PAtom, var_slots: &mut Vec<String>, slot: &mut dyn FnMut(&str, &mut Vec<String>) -> Var| -> Result<Atom, ParseError> {
        let [Term::Ident(rel), Term::Ident(x), Term::Ident(y)] = &a.args[..] else {
            return Err(ParseError::new(a.span, "kinship atoms are (REL, var, var)"));
        };
        let pred = RelationId(az.relation_const(rel, a.span)? as u8);
        Ok(Atom { pred, args: [slot(x, var_slots), slot(y, var_slots)] })
    };
    let mut slot_fn = |name: &str, vs: &mut Vec<String>| slot(name, vs);
    let head_atom = to_atom(az, head, &mut var_slots, &mut slot_fn)?;
    let mut rule = Rule { head: head_atom, body: Vec::new(), neq_guards: Vec::new() };
    for b in body {
        match b {
            BodyItem::Atom(a) => rule.body.push(to_atom(az, a, &mut var_slots, &mut slot_fn)?),
            BodyItem::Neq(x, y) => {
                let sx = slot(x, &mut var_slots);
                let sy = slot(y, &mut var_slots);
                rule.neq_guards.push((sx, sy));
            }
        }
    }
    // Every head variable must occur in the body.
    for v in rule.head.args {
        if !rule.body.iter().any(|a| a.args.contains(&v)) {
            return Err(ParseError::new(span, "head variable not bound in body"));
        }
    }
    program.fixed_rules.push(rule);
    Ok(())
}

fn term_name(t: &Term) -> Option<&str> {
    match t {
        Term::Ident(s) => Some(s),
        _ => None,
    }
}

fn analyze_composite_rule(
    program: &mut Program,
    head: &PAtom,
    body: &[BodyItem],
    comp: &PAtom,
    span: SourceSpan,
) -> Result<(), ParseError> {
    let err = |msg: &str| Err(ParseError::new(span, format!("composite rule: {msg}")));
    let [r1, r2, r3] = &comp.args[..] else {
        return err("composite takes three relation variables");
    };
    let (Some(r1), Some(r2), Some(r3)) = (term_name(r1), term_name(r2), term_name(r3)) else {
        return err("composite arguments must be variables");
    };
    let [hr, ha, hc] = &head.args[..] else {
        return err("head must be kinship(r, a, c)");
    };
    let (Some(hr), Some(ha), Some(hc)) = (term_name(hr), term_name(ha), term_name(hc)) else {
        return err("head arguments must be variables");
    };
    if hr != r3 {
        return err("head relation must be the composite output r3");
    }
    let kin_atoms: Vec<&PAtom> = body
        .iter()
        .filter_map(|b| match b {
            BodyItem::Atom(a) if KINSHIP_ALIASES.contains(&a.pred.as_str()) => Some(a),
            _ => None,
        })
        .collect();
    if kin_atoms.len() != 2 {
        return err("body must contain exactly two kinship atoms");
    }
    let args =
        |a: &PAtom| -> Option<(String, String, String)> {
            let [x, y, z] = &a.args[..] else { return None };
            Some((term_name(x)?.into(), term_name(y)?.into(), term_name(z)?.into()))
        };
    let (Some(first), Some(second)) = (args(kin_atoms[0]), args(kin_atoms[1])) else {
        return err("kinship atoms must use variables");
    };
    let (b1, b2) = if first.0 == r1 { (first, second) } else { (second, first) };
    if b1.0 != r1 || b2.0 != r2 {
        return err("body atoms must carry r1 and r2");
    }
    if b1.1 != ha || b1.2 != b2.1 || b2.2 != hc {
        return err("body atoms must chain a -> b -> c");
    }
    let has_guard = body.iter().any(|item| {
        matches!(item, BodyItem::Neq(x, y)
            if (x == ha && y == hc) || (x == hc && y == ha))
    });
    if !has_guard {
        return err("missing a != c guard");
    }
    program.has_composite_rule = true;
    Ok(())
}

fn analyze_constraint(
    az: &Analyzer,
    vars: &[String],
    premise: &[PAtom],
    conclusion: &[PAtom],
    span: SourceSpan,
) -> Result<Constraint, ParseError> {
    // Rule ICs mention `composite` in the premise.
    if premise.iter().any(|a| a.pred == "composite") {
        let gender_shaped = premise.iter().any(|a| a.pred == "gender")
            && conclusion.len() == 1
            && conclusion[0].pred == "gender";
        let gen_shaped = premise.iter().filter(|a| a.pred == "gen").count() == 2
            && conclusion.len() == 1
            && conclusion[0].pred == "gen";
        if gender_shaped {
            // forall(r1, r2, r3: composite(r1,r2,r3) and gender(r2, g) => gender(r3, g))
            let comp = premise.iter().find(|a| a.pred == "composite").unwrap();
            let prem_g = premise.iter().find(|a| a.pred == "gender").unwrap();
            let ok = (|| {
                let r2 = term_name(comp.args.get(1)?)?;
                let r3 = term_name(comp.args.get(2)?)?;
                let g = term_name(prem_g.args.get(1)?)?;
                Some(
                    term_name(prem_g.args.first()?)? == r2
                        && term_name(conclusion[0].args.first()?)? == r3
                        && term_name(conclusion[0].args.get(1)?)? == g,
                )
            })()
            .unwrap_or(false);
            if !ok {
                return Err(ParseError::new(span, "unrecognized gender rule IC shape"));
            }
            return Ok(Constraint::RuleGenderIc);
        }
        if gen_shaped {
            // forall(r1, r2, r3: composite(r1,r2,r3) and gen(r1,g1) and gen(r2,g2)
            //   => gen(r3, g1 + g2))
            let comp = premise.iter().find(|a| a.pred == "composite").unwrap();
            let gens: Vec<&PAtom> = premise.iter().filter(|a| a.pred == "gen").collect();
            let ok = (|| {
                let r1 = term_name(comp.args.first()?)?;
                let r2 = term_name(comp.args.get(1)?)?;
                let r3 = term_name(comp.args.get(2)?)?;
                let g1 = term_name(gens[0].args.get(1)?)?;
                let g2 = term_name(gens[1].args.get(1)?)?;
                let Term::Sum(sa, sb) = conclusion[0].args.get(1)? else { return Some(false) };
                Some(
                    term_name(gens[0].args.first()?)? == r1
                        && term_name(gens[1].args.first()?)? == r2
                        && term_name(conclusion[0].args.first()?)? == r3
                        && ((sa == g1 && sb == g2) || (sa == g2 && sb == g1)),
                )
            })()
            .unwrap_or(false);
            if !ok {
                return Err(ParseError::new(span, "unrecognized generation rule IC shape"));
            }
            return Ok(Constraint::RuleGenIc);
        }
        return Err(ParseError::new(span, "unrecognized rule IC shape"));
    }
    // Result IC: forall(a, b: kinship(P, a, b) => kinship(C, b, a) or ...).
    if premise.len() != 1 || !KINSHIP_ALIASES.contains(&premise[0].pred.as_str()) {
        return Err(ParseError::new(span, "result IC premise must be a single kinship atom"));
    }
    let [Term::Ident(p), Term::Ident(pa), Term::Ident(pb)] = &premise[0].args[..] else {
        return Err(ParseError::new(span, "result IC premise must be kinship(REL, a, b)"));
    };
    if !vars.contains(pa) || !vars.contains(pb) {
        return Err(ParseError::new(span, "premise variables must be quantified"));
    }
    let premise_rel = RelationId(az.relation_const(p, premise[0].span)? as u8);
    let mut conclusions = Vec::new();
    for c in conclusion {
        if !KINSHIP_ALIASES.contains(&c.pred.as_str()) {
            return Err(ParseError::new(c.span, "result IC conclusions must be kinship atoms"));
        }
        let [Term::Ident(r), Term::Ident(ca), Term::Ident(cb)] = &c.args[..] else {
            return Err(ParseError::new(c.span, "result IC conclusion must be kinship(REL, b, a)"));
        };
        if ca != pb || cb != pa {
            return Err(ParseError::new(c.span, "result IC conclusions must swap the premise pair"));
        }
        conclusions.push(RelationId(az.relation_const(r, c.span)? as u8));
    }
    Ok(Constraint::ResultIc { premise: premise_rel, conclusions })
}

// ---------------------------------------------------------------- printer --

/// Canonical program printer; `parse_program(print_program(p)) == p` for
/// every well-formed program.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for decl in &p.type_decls {
        out.push_str(&format!(
            "type {}({})\n",
            decl.name,
            decl.params
                .iter()
                .map(|(n, t)| format!("{n}: {t}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    let upper = |r: RelationId| p.vocab.name(r).to_uppercase();
    if !p.vocab.is_empty() {
        let consts: Vec<String> = p
            .vocab
            .ids()
            .map(|r| format!("{} = {}", upper(r), r.index()))
            .collect();
        out.push_str(&format!("const {}\n", consts.join(", ")));
        out.push_str("const MALE = 0, FEMALE = 1, NEUTRAL = 2\n");
        let genders: Vec<String> = p
            .vocab
            .ids()
            .map(|r| format!("({}, {})", upper(r), p.vocab.meta(r).unwrap().gender.name()))
            .collect();
        out.push_str(&format!("rel gender = {{{}}}\n", genders.join(", ")));
        let gens: Vec<String> = p
            .vocab
            .ids()
            .map(|r| format!("({}, {})", upper(r), p.vocab.meta(r).unwrap().gen))
            .collect();
        out.push_str(&format!("rel gen = {{{}}}\n", gens.join(", ")));
    }
    for kind in ["composite", "transitive", "symmetric", "inverse", "implies"] {
        let entries: Vec<String> = p
            .template_facts
            .iter()
            .filter(|(t, _)| t.kind_name() == kind)
            .map(|(t, w)| {
                let args = t.args().iter().map(|&r| upper(r)).collect::<Vec<_>>().join(", ");
                if (*w - 1.0).abs() < f64::EPSILON {
                    format!("({args})")
                } else {
                    format!("{w}::({args})")
                }
            })
            .collect();
        if !entries.is_empty() {
            out.push_str(&format!("rel {kind} = {{{}}}\n", entries.join(", ")));
        }
    }
    if p.has_composite_rule {
        out.push_str(
            "rel kinship(r3, a, c) = composite(r1, r2, r3), kinship(r1, a, b), kinship(r2, b, c), a != c\n",
        );
    }
    for rule in &p.fixed_rules {
        let var = |v: Var| {
            // a, b, c, d, ...
            ((b'a' + v) as char).to_string()
        };
        let atom = |a: &Atom| format!("kinship({}, {}, {})", upper(a.pred), var(a.args[0]), var(a.args[1]));
        let mut parts: Vec<String> = rule.body.iter().map(atom).collect();
        for &(x, y) in &rule.neq_guards {
            parts.push(format!("{} != {}", var(x), var(y)));
        }
        out.push_str(&format!("rel {} = {}\n", atom(&rule.head), parts.join(", ")));
    }
    if let Some(ans) = &p.answer {
        out.push_str(&format!(
            "rel answer(r) = {}(s, o), {}(r, s, o)\n",
            ans.query_pred, ans.kinship_pred
        ));
    }
    for c in &p.constraints {
        match c {
            Constraint::ResultIc { premise, conclusions } => {
                let concl = conclusions
                    .iter()
                    .map(|&r| format!("kinship({}, b, a)", upper(r)))
                    .collect::<Vec<_>>()
                    .join(" or ");
                out.push_str(&format!(
                    "rel violation(!r) = r := forall(a, b: kinship({}, a, b) => ({concl}))\n",
                    upper(*premise)
                ));
            }
            Constraint::RuleGenderIc => {
                out.push_str("rel violation(!r) = r := forall(r1, r2, r3: composite(r1, r2, r3) and gender(r2, g) => gender(r3, g))\n");
            }
            Constraint::RuleGenIc => {
                out.push_str("rel violation(!r) = r := forall(r1, r2, r3: composite(r1, r2, r3) and gen(r1, g1) and gen(r2, g2) => gen(r3, g1 + g2))\n");
            }
        }
    }
    out
}

// ---------------------------------------------------------------- dataset --

#[derive(Error, Debug)]
#[error("line {line}: {message}")]
pub struct DatasetError {
    pub line: usize,
    pub message: String,
}

fn dataset_err(line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError { line, message: message.into() }
}

/// Parse a line-delimited dataset file. Each line is a JSON record with
/// `facts` (arrays `[rel, sub, obj]` or `[rel, sub, obj, prob]`), `query`
/// (a pair), `answer` (a relation name), and `k`.
pub fn parse_dataset(text: &str, vocab: &Vocabulary) -> Result<Vec<Sample>, DatasetError> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| dataset_err(lineno, format!("bad JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| dataset_err(lineno, "record must be a JSON object"))?;
        let facts_json = obj
            .get("facts")
            .and_then(|v| v.as_array())
            .ok_or_else(|| dataset_err(lineno, "missing `facts` array"))?;
        let mut facts = Vec::with_capacity(facts_json.len());
        for f in facts_json {
            let arr = f
                .as_array()
                .filter(|a| a.len() == 3 || a.len() == 4)
                .ok_or_else(|| dataset_err(lineno, "facts are [rel, sub, obj] or [rel, sub, obj, prob]"))?;
            let rel = arr[0]
                .as_str()
                .ok_or_else(|| dataset_err(lineno, "fact relation must be a string"))?;
            let pred = vocab
                .relation(rel)
                .map_err(|_| dataset_err(lineno, format!("unknown relation `{rel}`")))?;
            let sub = arr[1]
                .as_str()
                .ok_or_else(|| dataset_err(lineno, "fact subject must be a string"))?;
            let objn = arr[2]
                .as_str()
                .ok_or_else(|| dataset_err(lineno, "fact object must be a string"))?;
            let prob = if arr.len() == 4 {
                arr[3]
                    .as_f64()
                    .filter(|p| (0.0..=1.0).contains(p))
                    .ok_or_else(|| dataset_err(lineno, "fact probability must be in [0, 1]"))?
            } else {
                1.0
            };
            facts.push(ProbFact { pred, sub: sub.into(), obj: objn.into(), prob });
        }
        let query = obj
            .get("query")
            .and_then(|v| v.as_array())
            .filter(|a| a.len() == 2)
            .and_then(|a| Some((a[0].as_str()?.to_string(), a[1].as_str()?.to_string())))
            .ok_or_else(|| dataset_err(lineno, "missing `query` pair"))?;
        let answer_name = obj
            .get("answer")
            .and_then(|v| v.as_str())
            .ok_or_else(|| dataset_err(lineno, "missing `answer`"))?;
        let answer = vocab
            .relation(answer_name)
            .map_err(|_| dataset_err(lineno, format!("unknown relation `{answer_name}`")))?;
        let k = obj
            .get("k")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| dataset_err(lineno, "missing `k`"))? as u32;
        samples.push(Sample { facts, query, answer, k });
    }
    Ok(samples)
}

// ----------------------------------------------------------------- priors --

/// Parsed rule-prior file: template weights plus composition-oracle entries
/// (`compose` lines).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PriorsFile {
    pub weights: BTreeMap<RuleTemplate, f64>,
    pub compose: Vec<(RelationId, RelationId, RelationId)>,
}

#[derive(Error, Debug)]
#[error("line {line}: {message}")]
pub struct PriorsError {
    pub line: usize,
    pub message: String,
}

fn priors_err(line: usize, message: impl Into<String>) -> PriorsError {
    PriorsError { line, message: message.into() }
}

/// Parse a `.priors` file. Lines are either `composite r1 r2 r3 weight`
/// (and analogous forms for the other template kinds), `compose r1 r2 r3`
/// oracle entries, or exported-rule lines
/// `weight  r3(a,c) <- r1(a,b) ^ r2(b,c)`.
pub fn parse_priors(text: &str, vocab: &Vocabulary) -> Result<PriorsFile, PriorsError> {
    let mut out = PriorsFile::default();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("//") {
            continue;
        }
        let rel = |name: &str| {
            vocab
                .relation(name)
                .map_err(|_| priors_err(lineno, format!("unknown relation `{name}`")))
        };
        // Exported-rule form starts with a number.
        if line.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            let (template, weight) = parse_exported_rule(line, vocab)
                .map_err(|m| priors_err(lineno, m))?;
            out.weights.insert(template, weight);
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let kind = fields[0];
        let parse_weight = |s: &str| -> Result<f64, PriorsError> {
            let w: f64 = s
                .parse()
                .map_err(|_| priors_err(lineno, format!("bad weight `{s}`")))?;
            if w < 0.0 {
                return Err(priors_err(lineno, format!("negative weight {w}")));
            }
            Ok(w)
        };
        match (kind, fields.len()) {
            ("compose", 4) => {
                out.compose.push((rel(fields[1])?, rel(fields[2])?, rel(fields[3])?));
            }
            ("composite", 5) => {
                let t = RuleTemplate::Composite(rel(fields[1])?, rel(fields[2])?, rel(fields[3])?);
                out.weights.insert(t, parse_weight(fields[4])?);
            }
            ("transitive", 3) => {
                let t = RuleTemplate::Transitive(rel(fields[1])?);
                out.weights.insert(t, parse_weight(fields[2])?);
            }
            ("symmetric", 3) => {
                let t = RuleTemplate::Symmetric(rel(fields[1])?);
                out.weights.insert(t, parse_weight(fields[2])?);
            }
            ("inverse", 4) => {
                let t = RuleTemplate::Inverse(rel(fields[1])?, rel(fields[2])?);
                out.weights.insert(t, parse_weight(fields[3])?);
            }
            ("implies", 4) => {
                let t = RuleTemplate::Implies(rel(fields[1])?, rel(fields[2])?);
                out.weights.insert(t, parse_weight(fields[3])?);
            }
            _ => {
                return Err(priors_err(
                    lineno,
                    format!("unrecognized prior line `{line}`"),
                ))
            }
        }
    }
    Ok(out)
}

/// `weight  r3(a,c) <- r1(a,b) ^ r2(b,c)`, ASCII or the unicode arrows.
fn parse_exported_rule(
    line: &str,
    vocab: &Vocabulary,
) -> Result<(RuleTemplate, f64), String> {
    let normalized = line.replace('\u{2190}', "<-").replace('\u{2227}', "^");
    let mut parts = normalized.split_whitespace();
    let weight: f64 = parts
        .next()
        .and_then(|w| w.parse().ok())
        .ok_or("missing weight")?;
    if weight < 0.0 {
        return Err(format!("negative weight {weight}"));
    }
    let rest: String = parts.collect::<Vec<_>>().join(" ");
    let (head, body) = rest.split_once("<-").ok_or("missing `<-`")?;
    let (b1, b2) = body.split_once('^').ok_or("missing `^`")?;
    let atom_rel = |s: &str| -> Result<RelationId, String> {
        let name = s.trim().split('(').next().unwrap_or("").trim();
        vocab
            .relation(name)
            .map_err(|_| format!("unknown relation `{name}`"))
    };
    let r3 = atom_rel(head)?;
    let r1 = atom_rel(b1)?;
    let r2 = atom_rel(b2)?;
    Ok((RuleTemplate::Composite(r1, r2, r3), weight))
}

/// The canonical kinship program shipped with the crate.
pub const KINSHIP_PROGRAM: &str = include_str!("../assets/kinship.dsr");

/// Parse the shipped kinship program.
pub fn kinship_program() -> Program {
    parse_program(KINSHIP_PROGRAM).expect("shipped kinship program must parse")
}
