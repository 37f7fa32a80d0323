//! Queries: unions of conjunctive queries under a top-level Boolean
//! combination, their parser, a naive evaluator, and their compilation to
//! bag automata.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::instances::{Fact, Instance, Schema};
use crate::lexer::{tokenize, Cursor, Tok};

mod automaton;

pub use automaton::{
    compile, run, run_with, AutomatonError, BagAutomaton, BagContext, QueryAutomaton, QueryState,
    Token, DEFAULT_MAX_TOKENS,
};
pub(crate) use automaton::{BagFacts, Outcome, Plan};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown relation `{name}` at {pos}")]
    UnknownRelation { name: String, pos: usize },
    #[error("relation `{name}` at {pos} expects {expected} arguments, got {got}")]
    ArityMismatch {
        name: String,
        pos: usize,
        expected: usize,
        got: usize,
    },
    #[error("variable `{name}` at {pos} is quantified twice")]
    DuplicateVariable { name: String, pos: usize },
    #[error("quantified variable `{name}` at {pos} occurs in no atom")]
    UnusedVariable { name: String, pos: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    /// Index into the enclosing query's variable list.
    Var(usize),
    Const(String),
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
    /// Byte offset in the source text (0 for built queries).
    pub pos: usize,
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.relation == other.relation && self.terms == other.terms
    }
}

impl Eq for Atom {}

impl Atom {
    pub fn new(relation: &str, terms: Vec<Term>) -> Self {
        Atom {
            relation: relation.to_string(),
            terms,
            pos: 0,
        }
    }
}

/// A closed conjunctive query: `exists vars. atom & ... & atom`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub vars: Vec<String>,
    pub atoms: Vec<Atom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryExpr {
    True,
    False,
    Cq(usize),
    Not(Box<QueryExpr>),
    And(Box<QueryExpr>, Box<QueryExpr>),
    Or(Box<QueryExpr>, Box<QueryExpr>),
}

impl QueryExpr {
    pub fn eval(&self, cq_holds: &impl Fn(usize) -> bool) -> bool {
        match self {
            QueryExpr::True => true,
            QueryExpr::False => false,
            QueryExpr::Cq(i) => cq_holds(*i),
            QueryExpr::Not(e) => !e.eval(cq_holds),
            QueryExpr::And(a, b) => a.eval(cq_holds) && b.eval(cq_holds),
            QueryExpr::Or(a, b) => a.eval(cq_holds) || b.eval(cq_holds),
        }
    }

    pub fn has_negation(&self) -> bool {
        match self {
            QueryExpr::Not(_) => true,
            QueryExpr::And(a, b) | QueryExpr::Or(a, b) => a.has_negation() || b.has_negation(),
            _ => false,
        }
    }
}

/// A top-level Boolean combination of closed conjunctive queries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    cqs: Vec<ConjunctiveQuery>,
    expr: QueryExpr,
}

impl Query {
    pub fn new(cqs: Vec<ConjunctiveQuery>, expr: QueryExpr) -> Self {
        Query { cqs, expr }
    }

    /// The union of the given conjunctive queries.
    pub fn union(cqs: Vec<ConjunctiveQuery>) -> Self {
        let expr = (0..cqs.len())
            .map(QueryExpr::Cq)
            .reduce(|a, b| QueryExpr::Or(Box::new(a), Box::new(b)))
            .unwrap_or(QueryExpr::False);
        Query { cqs, expr }
    }

    /// Parses the query grammar without checking it against a schema.
    pub fn parse(text: &str) -> Result<Self, QueryError> {
        let toks = tokenize(text).map_err(|(pos, msg)| QueryError::Syntax { pos, msg })?;
        let mut p = Parser {
            cur: Cursor::new(toks, text.len()),
            cqs: Vec::new(),
        };
        let expr = p.or()?;
        if !p.cur.at_end() {
            return Err(p.unexpected());
        }
        Ok(Query { cqs: p.cqs, expr })
    }

    pub fn cqs(&self) -> &[ConjunctiveQuery] {
        &self.cqs
    }

    pub fn expr(&self) -> &QueryExpr {
        &self.expr
    }

    pub fn has_negation(&self) -> bool {
        self.expr.has_negation()
    }

    /// Relation names and arities against `schema`.
    pub fn check(&self, schema: &Schema) -> Result<(), QueryError> {
        for cq in &self.cqs {
            for atom in &cq.atoms {
                let expected =
                    schema
                        .arity(&atom.relation)
                        .ok_or_else(|| QueryError::UnknownRelation {
                            name: atom.relation.clone(),
                            pos: atom.pos,
                        })?;
                if expected != atom.terms.len() {
                    return Err(QueryError::ArityMismatch {
                        name: atom.relation.clone(),
                        pos: atom.pos,
                        expected,
                        got: atom.terms.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Direct evaluation by exhaustive homomorphism search.
    pub fn holds(&self, inst: &Instance) -> bool {
        let mut by_rel: BTreeMap<&str, Vec<&Fact>> = BTreeMap::new();
        for f in inst.facts() {
            by_rel.entry(f.relation.as_str()).or_default().push(f);
        }
        let results: Vec<bool> = self.cqs.iter().map(|cq| cq_holds(cq, &by_rel)).collect();
        self.expr.eval(&|i| results[i])
    }
}

/// Parses and checks against `schema`.
pub fn parse_query(text: &str, schema: &Schema) -> Result<Query, QueryError> {
    let q = Query::parse(text)?;
    q.check(schema)?;
    Ok(q)
}

fn cq_holds(cq: &ConjunctiveQuery, by_rel: &BTreeMap<&str, Vec<&Fact>>) -> bool {
    fn go<'a>(
        cq: &ConjunctiveQuery,
        i: usize,
        binding: &mut Vec<Option<&'a str>>,
        by_rel: &BTreeMap<&str, Vec<&'a Fact>>,
    ) -> bool {
        let Some(atom) = cq.atoms.get(i) else {
            return true;
        };
        let Some(candidates) = by_rel.get(atom.relation.as_str()) else {
            return false;
        };
        for fact in candidates {
            if fact.args.len() != atom.terms.len() {
                continue;
            }
            let saved = binding.clone();
            let ok = atom.terms.iter().zip(&fact.args).all(|(t, a)| match t {
                Term::Const(c) => c == a,
                Term::Var(x) => match binding[*x] {
                    Some(b) => b == a,
                    None => {
                        binding[*x] = Some(a.as_str());
                        true
                    }
                },
            });
            if ok && go(cq, i + 1, binding, by_rel) {
                return true;
            }
            *binding = saved;
        }
        false
    }
    go(cq, 0, &mut alloc::vec![None; cq.vars.len()], by_rel)
}

struct Parser {
    cur: Cursor,
    cqs: Vec<ConjunctiveQuery>,
}

impl Parser {
    fn unexpected(&self) -> QueryError {
        QueryError::Syntax {
            pos: self.cur.pos(),
            msg: match self.cur.peek() {
                Some(t) => alloc::format!("unexpected {}", t.describe()),
                None => "unexpected end of input".to_string(),
            },
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), QueryError> {
        if self.cur.eat(&tok) {
            Ok(())
        } else {
            Err(QueryError::Syntax {
                pos: self.cur.pos(),
                msg: alloc::format!("expected {}", tok.describe()),
            })
        }
    }

    fn or(&mut self) -> Result<QueryExpr, QueryError> {
        let mut lhs = self.and()?;
        while self.cur.eat(&Tok::Or) {
            let rhs = self.and()?;
            lhs = QueryExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<QueryExpr, QueryError> {
        let mut lhs = self.unary()?;
        while self.cur.eat(&Tok::And) {
            let rhs = self.unary()?;
            lhs = QueryExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<QueryExpr, QueryError> {
        match self.cur.peek() {
            Some(Tok::Not) => {
                self.cur.next();
                Ok(QueryExpr::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.cur.next();
                let e = self.or()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(w)) if w == "true" && self.cur.peek2() != Some(&Tok::LParen) => {
                self.cur.next();
                Ok(QueryExpr::True)
            }
            Some(Tok::Ident(w)) if w == "false" && self.cur.peek2() != Some(&Tok::LParen) => {
                self.cur.next();
                Ok(QueryExpr::False)
            }
            Some(Tok::Ident(_)) => self.cq(),
            _ => Err(self.unexpected()),
        }
    }

    fn cq(&mut self) -> Result<QueryExpr, QueryError> {
        let mut vars: Vec<(String, usize)> = Vec::new();
        if matches!(self.cur.peek(), Some(Tok::Ident(w)) if w == "exists")
            && self.cur.peek2() != Some(&Tok::LParen)
        {
            self.cur.next();
            while let Some(Tok::Ident(_)) = self.cur.peek() {
                let pos = self.cur.pos();
                let Some(Tok::Ident(name)) = self.cur.next() else {
                    unreachable!()
                };
                if vars.iter().any(|(v, _)| *v == name) {
                    return Err(QueryError::DuplicateVariable { name, pos });
                }
                vars.push((name, pos));
            }
            if vars.is_empty() {
                return Err(QueryError::Syntax {
                    pos: self.cur.pos(),
                    msg: "expected a variable after `exists`".to_string(),
                });
            }
            self.expect(Tok::Dot)?;
        }
        let mut atoms = alloc::vec![self.atom(&vars)?];
        // `& R(` continues the conjunction; anything else ends the CQ
        while self.cur.peek() == Some(&Tok::And)
            && matches!(self.cur.peek2(), Some(Tok::Ident(w)) if w != "exists")
            && self.cur.peek3() == Some(&Tok::LParen)
        {
            self.cur.next();
            atoms.push(self.atom(&vars)?);
        }
        let mut used = alloc::vec![false; vars.len()];
        for a in &atoms {
            for t in &a.terms {
                if let Term::Var(x) = t {
                    used[*x] = true;
                }
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            let (name, pos) = vars.swap_remove(i);
            return Err(QueryError::UnusedVariable { name, pos });
        }
        self.cqs.push(ConjunctiveQuery {
            vars: vars.into_iter().map(|(v, _)| v).collect(),
            atoms,
        });
        Ok(QueryExpr::Cq(self.cqs.len() - 1))
    }

    fn atom(&mut self, vars: &[(String, usize)]) -> Result<Atom, QueryError> {
        let pos = self.cur.pos();
        let relation = match self.cur.next() {
            Some(Tok::Ident(r)) => r,
            _ => {
                return Err(QueryError::Syntax {
                    pos,
                    msg: "expected a relation name".to_string(),
                })
            }
        };
        self.expect(Tok::LParen)?;
        let mut terms = Vec::new();
        loop {
            let tpos = self.cur.pos();
            let term = match self.cur.next() {
                Some(Tok::Ident(name)) => match vars.iter().position(|(v, _)| *v == name) {
                    Some(i) => Term::Var(i),
                    None => Term::Const(name),
                },
                Some(Tok::Quoted(s)) => Term::Const(s),
                _ => {
                    return Err(QueryError::Syntax {
                        pos: tpos,
                        msg: "expected a term".to_string(),
                    })
                }
            };
            terms.push(term);
            if !self.cur.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(Atom {
            relation,
            terms,
            pos,
        })
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            f.write_str("exists")?;
            for v in &self.vars {
                write!(f, " {v}")?;
            }
            f.write_str(". ")?;
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{}(", a.relation)?;
            for (j, t) in a.terms.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                match t {
                    Term::Var(x) => f.write_str(&self.vars[*x])?,
                    // constants are always quoted so they never collide with variables
                    Term::Const(c) => {
                        f.write_str("\"")?;
                        for ch in c.chars() {
                            if ch == '"' || ch == '\\' {
                                f.write_str("\\")?;
                            }
                            write!(f, "{ch}")?;
                        }
                        f.write_str("\"")?;
                    }
                }
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(q: &Query, e: &QueryExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                QueryExpr::True => f.write_str("true"),
                QueryExpr::False => f.write_str("false"),
                QueryExpr::Cq(i) => write!(f, "({})", q.cqs[*i]),
                QueryExpr::Not(x) => {
                    f.write_str("!")?;
                    go(q, x, f)
                }
                QueryExpr::And(a, b) | QueryExpr::Or(a, b) => {
                    f.write_str("(")?;
                    go(q, a, f)?;
                    f.write_str(if matches!(e, QueryExpr::And(..)) {
                        " & "
                    } else {
                        " | "
                    })?;
                    go(q, b, f)?;
                    f.write_str(")")
                }
            }
        }
        go(self, &self.expr, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rst() -> Schema {
        Schema::new([("R", 1), ("S", 2), ("T", 1)]).unwrap()
    }

    #[test]
    fn parses_the_hard_query() {
        let q = parse_query("exists x y. R(x) & S(x,y) & T(y)", &rst()).unwrap();
        assert_eq!(q.cqs().len(), 1);
        assert_eq!(q.cqs()[0].atoms.len(), 3);
        assert_eq!(q.cqs()[0].atoms[1].terms, vec![Term::Var(0), Term::Var(1)]);
    }

    #[test]
    fn parses_union_and_negation() {
        let q = Query::parse("exists x. R(x) | exists x. T(x)").unwrap();
        assert_eq!(q.cqs().len(), 2);
        assert!(matches!(q.expr(), QueryExpr::Or(..)));
        let n = Query::parse("!(exists x. R(x))").unwrap();
        assert!(n.has_negation());
        assert_eq!(n.cqs().len(), 1);
        let c = Query::parse("exists x. R(x) & exists y. T(y)").unwrap();
        assert_eq!(c.cqs().len(), 2);
    }

    #[test]
    fn constants_and_quotes() {
        let s = Schema::new([("Label", 2)]).unwrap();
        let q = parse_query("exists x. Label(x, \"place of birth\")", &s).unwrap();
        assert_eq!(
            q.cqs()[0].atoms[0].terms[1],
            Term::Const("place of birth".into())
        );
        let q = parse_query("exists x. Label(x, Manning)", &s).unwrap();
        assert_eq!(q.cqs()[0].atoms[0].terms[1], Term::Const("Manning".into()));
        let z = parse_query("Label(a, b)", &s).unwrap();
        assert!(z.cqs()[0].vars.is_empty());
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(
            Query::parse("exists x R(x)"),
            Err(QueryError::Syntax { .. })
        ));
        assert_eq!(
            parse_query("exists x. Q(x)", &rst()),
            Err(QueryError::UnknownRelation {
                name: "Q".into(),
                pos: 10
            })
        );
        assert!(matches!(
            parse_query("exists x. S(x)", &rst()),
            Err(QueryError::ArityMismatch {
                expected: 2,
                got: 1,
                ..
            })
        ));
        assert!(matches!(
            Query::parse("exists x y. R(x)"),
            Err(QueryError::UnusedVariable { .. })
        ));
        assert!(matches!(
            Query::parse("exists x x. R(x)"),
            Err(QueryError::DuplicateVariable { .. })
        ));
        assert!(matches!(
            Query::parse("R(x) &"),
            Err(QueryError::Syntax { pos: 6, .. })
        ));
    }

    #[test]
    fn naive_evaluation() {
        let q = Query::parse("exists x y. R(x) & S(x,y) & T(y)").unwrap();
        let yes = Instance::new([
            Fact::new("R", ["a"]),
            Fact::new("S", ["a", "b"]),
            Fact::new("T", ["b"]),
        ]);
        let no = Instance::new([
            Fact::new("R", ["a"]),
            Fact::new("S", ["b", "a"]),
            Fact::new("T", ["b"]),
        ]);
        assert!(q.holds(&yes));
        assert!(!q.holds(&no));
        assert!(!q.holds(&Instance::default()));
        let loopq = Query::parse("exists x. S(x,x)").unwrap();
        assert!(!loopq.holds(&yes));
        assert!(loopq.holds(&Instance::new([Fact::new("S", ["c", "c"])])));
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "exists x y. R(x) & S(x,y) & T(y)",
            "!(exists x. R(x)) | (S(a, \"b c\") & true)",
            "exists x. R(x) & exists y. T(y)",
        ] {
            let q = Query::parse(text).unwrap();
            assert_eq!(Query::parse(&q.to_string()).unwrap(), q, "{text}");
        }
    }
}
