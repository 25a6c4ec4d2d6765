//! Line-oriented S-expression format for knowledge base files (`.lkb`).
//!
//! A document is a sequence of statements, canonically one per line:
//!
//! ```text
//! ; comment to end of line
//! (genls Dog Mammal)                                  ; ground fact
//! (<= (bornInRegion ?p ?r) (bornIn ?p ?c) (cityInRegion ?c ?r))
//! (template whereBorn (bornInRegion ?P ?R) Physicist ?R)
//! (argIsa bornIn 2 City)                              ; argument constraint
//! ```
//!
//! Plain symbols match `[A-Za-z][A-Za-z0-9_-]*`, variables are symbols
//! prefixed with `?`, and everything is case-sensitive. Facts are ground:
//! a variable in a fact position is an error. Integers appear only as the
//! position argument of `argIsa`. `template`, `argIsa`, and `<=` are
//! reserved statement heads.

use std::fmt;

use thiserror::Error;

use crate::kbstore::{ArgConstraint, Fact};
use crate::qa::QuestionTemplate;
use crate::reasoner::{Atom, HornClause, Term};
use crate::symbol::Symbol;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: unexpected character {ch:?}")]
    UnexpectedChar { line: usize, ch: char },
    #[error("line {line}: unbalanced parentheses")]
    Unbalanced { line: usize },
    #[error("line {line}: empty list")]
    EmptyList { line: usize },
    #[error("line {line}: variable ?{var} is not allowed in a fact")]
    VariableInFact { line: usize, var: String },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

fn malformed(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Malformed { line, msg: msg.into() }
}

/// One parsed statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Fact(Fact),
    Rule(HornClause),
    Template(QuestionTemplate),
    Constraint(ArgConstraint),
}

/// A statement together with the line its opening parenthesis sits on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceStatement {
    pub statement: Statement,
    pub line: usize,
}

// ---------------------------------------------------------------------------
// Lexing and generic S-expression reading
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Sexp {
    List(Vec<Sexp>, usize),
    Sym(String, usize),
    Var(String, usize),
    Int(u64, usize),
    /// The rule head token `<=`.
    Arrow(usize),
}

impl Sexp {
    pub(crate) fn line(&self) -> usize {
        match self {
            Sexp::List(_, l) | Sexp::Sym(_, l) | Sexp::Var(_, l) | Sexp::Int(_, l) | Sexp::Arrow(l) => *l,
        }
    }
}

#[derive(Debug)]
enum Token {
    LParen(usize),
    RParen(usize),
    Sym(String, usize),
    Var(String, usize),
    Int(u64, usize),
    Arrow(usize),
}

fn is_symbol_start(ch: char) -> bool {
    ch.is_ascii_alphabetic()
}

fn is_symbol_continue(ch: char) -> bool {
    ch.is_ascii_alphanumeric() || ch == '_' || ch == '-'
}

fn lex(input: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    let mut line = 1usize;
    while let Some(&ch) = chars.peek() {
        match ch {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                tokens.push(Token::LParen(line));
                chars.next();
            }
            ')' => {
                tokens.push(Token::RParen(line));
                chars.next();
            }
            '?' => {
                chars.next();
                let mut name = String::new();
                if let Some(&c) = chars.peek() {
                    if is_symbol_start(c) {
                        name.push(c);
                        chars.next();
                        while let Some(&c) = chars.peek() {
                            if is_symbol_continue(c) {
                                name.push(c);
                                chars.next();
                            } else {
                                break;
                            }
                        }
                    }
                }
                if name.is_empty() {
                    return Err(ParseError::UnexpectedChar { line, ch: '?' });
                }
                tokens.push(Token::Var(name, line));
            }
            '<' => {
                chars.next();
                match chars.peek() {
                    Some('=') => {
                        chars.next();
                        tokens.push(Token::Arrow(line));
                    }
                    _ => return Err(ParseError::UnexpectedChar { line, ch: '<' }),
                }
            }
            c if c.is_ascii_digit() => {
                let mut n = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        n.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let value = n
                    .parse::<u64>()
                    .map_err(|_| malformed(line, format!("integer {n} out of range")))?;
                tokens.push(Token::Int(value, line));
            }
            c if is_symbol_start(c) => {
                let mut name = String::new();
                name.push(c);
                chars.next();
                while let Some(&c) = chars.peek() {
                    if is_symbol_continue(c) {
                        name.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Sym(name, line));
            }
            c => return Err(ParseError::UnexpectedChar { line, ch: c }),
        }
    }
    Ok(tokens)
}

/// Reads every top-level S-expression in the input. Shared by the statement
/// parser and by the payoff matrix fixture reader.
pub(crate) fn read_sexps(input: &str) -> Result<Vec<Sexp>, ParseError> {
    let tokens = lex(input)?;
    let mut stack: Vec<(Vec<Sexp>, usize)> = Vec::new();
    let mut top = Vec::new();
    let mut last_line = 1;
    for token in tokens {
        match token {
            Token::LParen(line) => {
                stack.push((Vec::new(), line));
                last_line = line;
            }
            Token::RParen(line) => {
                let (items, open_line) = stack
                    .pop()
                    .ok_or(ParseError::Unbalanced { line })?;
                let list = Sexp::List(items, open_line);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
                last_line = line;
            }
            other => {
                let (sexp, line) = match other {
                    Token::Sym(s, l) => (Sexp::Sym(s, l), l),
                    Token::Var(v, l) => (Sexp::Var(v, l), l),
                    Token::Int(n, l) => (Sexp::Int(n, l), l),
                    Token::Arrow(l) => (Sexp::Arrow(l), l),
                    Token::LParen(_) | Token::RParen(_) => unreachable!(),
                };
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(sexp),
                    None => {
                        return Err(malformed(line, "expected ( to start a statement"));
                    }
                }
                last_line = line;
            }
        }
    }
    if let Some((_, open_line)) = stack.last() {
        return Err(ParseError::Unbalanced { line: (*open_line).max(last_line) });
    }
    Ok(top)
}

// ---------------------------------------------------------------------------
// Statement parsing
// ---------------------------------------------------------------------------

fn parse_atom(sexp: &Sexp) -> Result<Atom, ParseError> {
    let Sexp::List(items, line) = sexp else {
        return Err(malformed(sexp.line(), "expected an atom in parentheses"));
    };
    if items.is_empty() {
        return Err(ParseError::EmptyList { line: *line });
    }
    let pred = match &items[0] {
        Sexp::Sym(s, _) => Symbol::new(s),
        other => return Err(malformed(other.line(), "atom must start with a predicate symbol")),
    };
    if items.len() == 1 {
        return Err(malformed(*line, format!("atom ({pred}) needs at least one argument")));
    }
    let mut args = Vec::with_capacity(items.len() - 1);
    for item in &items[1..] {
        match item {
            Sexp::Sym(s, _) => args.push(Term::Const(Symbol::new(s))),
            Sexp::Var(v, _) => args.push(Term::Var(Symbol::new(v))),
            Sexp::Int(_, l) => {
                return Err(malformed(*l, "integer arguments are only allowed in argIsa"));
            }
            Sexp::List(_, l) => return Err(malformed(*l, "nested lists are not allowed in atoms")),
            Sexp::Arrow(l) => return Err(malformed(*l, "<= is only allowed as a rule head")),
        }
    }
    Ok(Atom { predicate: pred, args })
}

fn atom_to_fact(atom: Atom, line: usize) -> Result<Fact, ParseError> {
    let mut args = Vec::with_capacity(atom.args.len());
    for term in atom.args {
        match term {
            Term::Const(c) => args.push(c),
            Term::Var(v) => {
                return Err(ParseError::VariableInFact { line, var: v.as_str().to_string() })
            }
        }
    }
    Ok(Fact { predicate: atom.predicate, args })
}

fn parse_rule(items: &[Sexp], line: usize) -> Result<HornClause, ParseError> {
    if items.len() < 3 {
        return Err(malformed(line, "rule needs a consequent and at least one antecedent"));
    }
    let consequent = parse_atom(&items[1])?;
    let mut antecedents = Vec::with_capacity(items.len() - 2);
    for item in &items[2..] {
        antecedents.push(parse_atom(item)?);
    }
    Ok(HornClause { consequent, antecedents })
}

fn parse_template(items: &[Sexp], line: usize) -> Result<QuestionTemplate, ParseError> {
    if items.len() != 5 {
        return Err(malformed(
            line,
            "template form is (template name (pattern) paramCollection ?answerVar)",
        ));
    }
    let name = match &items[1] {
        Sexp::Sym(s, _) => Symbol::new(s),
        other => return Err(malformed(other.line(), "template name must be a symbol")),
    };
    let pattern = parse_atom(&items[2])?;
    let param_collection = match &items[3] {
        Sexp::Sym(s, _) => Symbol::new(s),
        other => return Err(malformed(other.line(), "parameter collection must be a symbol")),
    };
    let answer_var = match &items[4] {
        Sexp::Var(v, _) => Symbol::new(v),
        other => return Err(malformed(other.line(), "answer variable must be a ?variable")),
    };
    let mut vars = Vec::new();
    for term in &pattern.args {
        if let Term::Var(v) = term {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    }
    if !vars.contains(&answer_var) {
        return Err(malformed(line, format!("answer variable ?{answer_var} does not occur in the pattern")));
    }
    if vars.len() != 2 {
        return Err(malformed(
            line,
            format!("template pattern must contain exactly two distinct variables, found {}", vars.len()),
        ));
    }
    let param_var = vars.into_iter().find(|v| *v != answer_var).expect("two distinct vars");
    Ok(QuestionTemplate { name, pattern, param_var, answer_var, param_collection })
}

fn parse_constraint(items: &[Sexp], line: usize) -> Result<ArgConstraint, ParseError> {
    if items.len() != 4 {
        return Err(malformed(line, "argIsa form is (argIsa predicate position Collection)"));
    }
    let predicate = match &items[1] {
        Sexp::Sym(s, _) => Symbol::new(s),
        other => return Err(malformed(other.line(), "argIsa predicate must be a symbol")),
    };
    let position = match &items[2] {
        Sexp::Int(n, l) => {
            if *n < 1 {
                return Err(malformed(*l, "argIsa position must be at least 1"));
            }
            *n as usize
        }
        other => return Err(malformed(other.line(), "argIsa position must be a positive integer")),
    };
    let collection = match &items[3] {
        Sexp::Sym(s, _) => Symbol::new(s),
        other => return Err(malformed(other.line(), "argIsa collection must be a symbol")),
    };
    Ok(ArgConstraint { predicate, position, collection })
}

/// Parses a complete `.lkb` document.
pub fn parse_kb(input: &str) -> Result<Vec<SourceStatement>, ParseError> {
    let sexps = read_sexps(input)?;
    let mut statements = Vec::with_capacity(sexps.len());
    for sexp in &sexps {
        let Sexp::List(items, line) = sexp else {
            return Err(malformed(sexp.line(), "expected ( to start a statement"));
        };
        if items.is_empty() {
            return Err(ParseError::EmptyList { line: *line });
        }
        let statement = match &items[0] {
            Sexp::Arrow(_) => Statement::Rule(parse_rule(items, *line)?),
            Sexp::Sym(head, _) if head == "template" => Statement::Template(parse_template(items, *line)?),
            Sexp::Sym(head, _) if head == "argIsa" => Statement::Constraint(parse_constraint(items, *line)?),
            Sexp::Sym(_, _) => {
                let atom = parse_atom(sexp)?;
                Statement::Fact(atom_to_fact(atom, *line)?)
            }
            other => return Err(malformed(other.line(), "statement must start with a predicate symbol")),
        };
        statements.push(SourceStatement { statement, line: *line });
    }
    Ok(statements)
}

// ---------------------------------------------------------------------------
// Canonical serialization
// ---------------------------------------------------------------------------

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Fact(fact) => write!(f, "{fact}"),
            Statement::Rule(rule) => write!(f, "{rule}"),
            Statement::Template(t) => {
                write!(f, "(template {} {} {} ?{})", t.name, t.pattern, t.param_collection, t.answer_var)
            }
            Statement::Constraint(c) => {
                write!(f, "(argIsa {} {} {})", c.predicate, c.position, c.collection)
            }
        }
    }
}

/// Writes statements in canonical form: one per line, single spaces, no
/// comments, trailing newline. Distinct statement lists serialize to
/// distinct strings.
pub fn serialize(statements: &[Statement]) -> String {
    let mut out = String::new();
    for statement in statements {
        out.push_str(&statement.to_string());
        out.push('\n');
    }
    out
}

/// Strips source lines, keeping just the statements.
pub fn strip_lines(statements: &[SourceStatement]) -> Vec<Statement> {
    statements.iter().map(|s| s.statement.clone()).collect()
}
