//! Bag automata and the compilation of queries into them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Debug;

use super::{Query, QueryError, Term};
use crate::instances::Schema;
use crate::treedec::{IncidenceGraph, NodeId, Rooted, TreeDecomposition, Violation};

/// Default cap on the number of partial matches a single bag may hold.
pub const DEFAULT_MAX_TOKENS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonError {
    #[error("invalid decomposition: {0}")]
    Decomposition(#[from] Violation),
    #[error("presence vector has {got} entries for {expected} facts")]
    PresenceLength { expected: usize, got: usize },
    #[error("a bag holds {count} automaton states, over the cap of {cap}")]
    StateExplosion { count: usize, cap: usize },
    #[error("{0} facts are introduced in one bag, too many to enumerate")]
    TooManyIntroduced(usize),
}

/// What a bag automaton sees at one node of a rooted decomposition.
///
/// `bag` and `parent_bag` are sorted vertex ids; the parent bag is empty at
/// the root. `introduced` lists the facts whose topmost bag is this one, in
/// increasing fact order; presence bits are given in the same order.
#[derive(Clone, Copy, Debug)]
pub struct BagContext<'a> {
    pub graph: &'a IncidenceGraph,
    pub node: NodeId,
    pub bag: &'a [usize],
    pub parent_bag: &'a [usize],
    pub introduced: &'a [usize],
}

impl BagContext<'_> {
    pub fn in_bag(&self, v: usize) -> bool {
        self.bag.binary_search(&v).is_ok()
    }

    pub fn in_parent(&self, v: usize) -> bool {
        self.parent_bag.binary_search(&v).is_ok()
    }
}

/// A deterministic bottom-up automaton over rooted tree decompositions.
///
/// Each fact is read once, at its topmost bag, as a presence bit.
pub trait BagAutomaton {
    type State: Clone + Ord + Debug;

    fn transition(
        &self,
        ctx: &BagContext<'_>,
        children: &[&Self::State],
        presence: &[bool],
    ) -> Result<Self::State, AutomatonError>;

    fn accepts(&self, state: &Self::State) -> bool;
}

/// A validated rooted decomposition with per-node automaton inputs.
///
/// Bags are sorted and extended with the arguments of every fact they hold,
/// which keeps them a valid decomposition.
pub(crate) struct Plan {
    pub rooted: Rooted,
    pub bags: Vec<Vec<usize>>,
    pub introduced: Vec<Vec<usize>>,
}

impl Plan {
    pub fn new(t: &TreeDecomposition, g: &IncidenceGraph) -> Result<Plan, Violation> {
        t.validate(g.graph())?;
        let rooted = t.rooted()?;
        let bags: Vec<Vec<usize>> = t
            .bags
            .iter()
            .map(|b| {
                let mut out = b.clone();
                for &v in b {
                    if let Some(f) = g.as_fact(v) {
                        out.extend_from_slice(g.fact_args(f));
                    }
                }
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect();
        let top = t.topmost_nodes(&rooted, g.len());
        let mut introduced = alloc::vec![Vec::new(); t.len()];
        for f in 0..g.facts().len() {
            let node = top[g.fact_vertex(f)].expect("validated decomposition covers every fact");
            introduced[node].push(f);
        }
        Ok(Plan {
            rooted,
            bags,
            introduced,
        })
    }

    pub fn context<'a>(&'a self, g: &'a IncidenceGraph, node: NodeId) -> BagContext<'a> {
        BagContext {
            graph: g,
            node,
            bag: &self.bags[node],
            parent_bag: self.rooted.parent[node].map_or(&[][..], |p| &self.bags[p][..]),
            introduced: &self.introduced[node],
        }
    }
}

/// Runs `a` bottom-up over `t` on the subinstance given by `present` (one
/// bit per fact of `g`) and returns the root state.
pub fn run_with<A: BagAutomaton>(
    a: &A,
    t: &TreeDecomposition,
    g: &IncidenceGraph,
    present: &[bool],
) -> Result<A::State, AutomatonError> {
    if present.len() != g.facts().len() {
        return Err(AutomatonError::PresenceLength {
            expected: g.facts().len(),
            got: present.len(),
        });
    }
    let plan = Plan::new(t, g)?;
    let mut states: Vec<Option<A::State>> = alloc::vec![None; t.len()];
    for &node in &plan.rooted.postorder {
        let kids: Vec<A::State> = plan.rooted.children[node]
            .iter()
            .map(|&c| states[c].take().expect("children precede parents"))
            .collect();
        let refs: Vec<&A::State> = kids.iter().collect();
        let bits: Vec<bool> = plan.introduced[node].iter().map(|&f| present[f]).collect();
        states[node] = Some(a.transition(&plan.context(g, node), &refs, &bits)?);
    }
    Ok(states[plan.rooted.root].take().expect("root visited"))
}

/// Whether `a` accepts the subinstance given by `present`.
pub fn run<A: BagAutomaton>(
    a: &A,
    t: &TreeDecomposition,
    g: &IncidenceGraph,
    present: &[bool],
) -> Result<bool, AutomatonError> {
    Ok(a.accepts(&run_with(a, t, g, present)?))
}

const UNMAPPED: u32 = 0;
const FORGOTTEN: u32 = 1;

fn at(v: usize) -> u32 {
    v as u32 + 2
}

fn vertex_of(slot: u32) -> Option<usize> {
    (slot >= 2).then(|| (slot - 2) as usize)
}

/// A partial match of one conjunctive query.
///
/// There is one slot per atom followed by one slot per variable. A slot is
/// unmapped, mapped to a vertex of the current bag (a fact for atoms, an
/// element for variables), or mapped to a vertex already forgotten.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    cq: u32,
    slots: Vec<u32>,
}

impl Token {
    pub fn cq(&self) -> usize {
        self.cq as usize
    }

    fn is_empty(&self) -> bool {
        self.slots.iter().all(|&s| s == UNMAPPED)
    }
}

/// State of a [`QueryAutomaton`]: live partial matches plus, per
/// conjunctive query, whether a complete match has been seen.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct QueryState {
    tokens: BTreeSet<Token>,
    satisfied: Vec<bool>,
}

impl QueryState {
    pub fn tokens(&self) -> &BTreeSet<Token> {
        &self.tokens
    }

    pub fn satisfied(&self) -> &[bool] {
        &self.satisfied
    }
}

#[derive(Clone, Debug)]
struct Layout {
    n_atoms: usize,
    relations: Vec<String>,
    terms: Vec<Vec<Term>>,
    /// Atoms mentioning each variable.
    var_atoms: Vec<Vec<usize>>,
}

/// Result of pushing a merged partial match through one bag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Live(Token),
    Complete(usize),
}

/// Bag automaton for a query: tracks partial homomorphisms of each
/// conjunctive query into the facts seen so far.
#[derive(Clone, Debug)]
pub struct QueryAutomaton {
    query: Query,
    layouts: Vec<Layout>,
    width: usize,
    max_tokens: usize,
}

/// Compiles `q` (checked against `schema`) for decompositions of width at
/// most `width`. The width only informs [`QueryAutomaton::token_bound`].
pub fn compile(q: &Query, schema: &Schema, width: usize) -> Result<QueryAutomaton, QueryError> {
    q.check(schema)?;
    let layouts = q
        .cqs()
        .iter()
        .map(|cq| {
            let mut var_atoms = alloc::vec![Vec::new(); cq.vars.len()];
            for (i, a) in cq.atoms.iter().enumerate() {
                for t in &a.terms {
                    if let Term::Var(x) = t {
                        if var_atoms[*x].last() != Some(&i) {
                            var_atoms[*x].push(i);
                        }
                    }
                }
            }
            Layout {
                n_atoms: cq.atoms.len(),
                relations: cq.atoms.iter().map(|a| a.relation.clone()).collect(),
                terms: cq.atoms.iter().map(|a| a.terms.clone()).collect(),
                var_atoms,
            }
        })
        .collect();
    Ok(QueryAutomaton {
        query: q.clone(),
        layouts,
        width,
        max_tokens: DEFAULT_MAX_TOKENS,
    })
}

/// Facts of the current bag grouped by relation.
pub(crate) struct BagFacts<'a> {
    by_rel: BTreeMap<&'a str, Vec<usize>>,
}

impl<'a> BagFacts<'a> {
    pub fn new(ctx: &BagContext<'a>) -> Self {
        let mut by_rel: BTreeMap<&'a str, Vec<usize>> = BTreeMap::new();
        for &v in ctx.bag {
            if let Some(f) = ctx.graph.as_fact(v) {
                by_rel
                    .entry(ctx.graph.facts()[f].relation.as_str())
                    .or_default()
                    .push(f);
            }
        }
        BagFacts { by_rel }
    }

    fn count(&self, relation: &str) -> usize {
        self.by_rel.get(relation).map_or(0, Vec::len)
    }
}

impl QueryAutomaton {
    pub fn with_max_tokens(mut self, cap: usize) -> Self {
        self.max_tokens = cap;
        self
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn cq_count(&self) -> usize {
        self.layouts.len()
    }

    /// Upper bound on the partial matches of one bag of width `width` for
    /// facts of arity at most `arity`: every slot is unmapped, forgotten,
    /// or one of the bag's vertices.
    pub fn token_bound(&self, arity: usize) -> u128 {
        let bag = (self.width as u128 + 1) * (arity as u128 + 1);
        self.layouts
            .iter()
            .map(|l| {
                let slots = (l.n_atoms + l.var_atoms.len()) as u32;
                (bag + 2).saturating_pow(slots)
            })
            .fold(0u128, u128::saturating_add)
    }

    /// Whether the Boolean combination holds given per-CQ satisfaction.
    pub fn accepts_flags(&self, satisfied: &[bool]) -> bool {
        self.query.expr().eval(&|i| satisfied[i])
    }

    pub(crate) fn empty(&self, cq: usize) -> Token {
        let l = &self.layouts[cq];
        Token {
            cq: cq as u32,
            slots: alloc::vec![UNMAPPED; l.n_atoms + l.var_atoms.len()],
        }
    }

    /// Combines partial matches of two sibling subtrees, or `None` when they
    /// cannot belong to one homomorphism.
    pub(crate) fn merge(&self, ctx: &BagContext<'_>, a: &Token, b: &Token) -> Option<Token> {
        debug_assert_eq!(a.cq, b.cq);
        let mut slots = Vec::with_capacity(a.slots.len());
        for (&x, &y) in a.slots.iter().zip(&b.slots) {
            slots.push(match (x, y) {
                (UNMAPPED, s) | (s, UNMAPPED) => s,
                (FORGOTTEN, _) | (_, FORGOTTEN) => return None,
                (s, t) if s == t => s,
                _ => return None,
            });
        }
        let tok = Token { cq: a.cq, slots };
        self.consistent(ctx, &tok).then_some(tok)
    }

    /// Every atom mapped to a present fact agrees with its variables.
    fn consistent(&self, ctx: &BagContext<'_>, tok: &Token) -> bool {
        let l = &self.layouts[tok.cq()];
        for i in 0..l.n_atoms {
            let Some(fv) = vertex_of(tok.slots[i]) else {
                continue;
            };
            let f = ctx.graph.as_fact(fv).expect("atoms map to facts");
            let args = ctx.graph.fact_args(f);
            for (pos, t) in l.terms[i].iter().enumerate() {
                if let Term::Var(x) = t {
                    if tok.slots[l.n_atoms + x] != at(args[pos]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn map_atom(&self, ctx: &BagContext<'_>, tok: &mut Token, atom: usize, fact: usize) -> bool {
        let l = &self.layouts[tok.cq()];
        let args = ctx.graph.fact_args(fact);
        for (pos, t) in l.terms[atom].iter().enumerate() {
            let a = args[pos];
            match t {
                Term::Const(c) => {
                    if ctx.graph.element_name(a) != Some(c.as_str()) {
                        return false;
                    }
                }
                Term::Var(x) => {
                    let slot = &mut tok.slots[l.n_atoms + x];
                    match *slot {
                        UNMAPPED => *slot = at(a),
                        s if s == at(a) => {}
                        _ => return false,
                    }
                }
            }
        }
        tok.slots[atom] = at(ctx.graph.fact_vertex(fact));
        true
    }

    fn extend(
        &self,
        ctx: &BagContext<'_>,
        facts: &BagFacts<'_>,
        tok: &mut Token,
        atom: usize,
        out: &mut Vec<Token>,
    ) {
        let l = &self.layouts[tok.cq()];
        if atom == l.n_atoms {
            out.push(tok.clone());
            return;
        }
        self.extend(ctx, facts, tok, atom + 1, out);
        if tok.slots[atom] != UNMAPPED {
            return;
        }
        let Some(candidates) = facts.by_rel.get(l.relations[atom].as_str()) else {
            return;
        };
        for &f in candidates {
            let saved = tok.clone();
            if self.map_atom(ctx, tok, atom, f) {
                self.extend(ctx, facts, tok, atom + 1, out);
            }
            *tok = saved;
        }
    }

    /// All ways to extend `merged` with facts of the bag, each followed by
    /// forgetting the vertices absent from the parent bag. Each outcome
    /// comes with the introduced facts it requires to be present.
    pub(crate) fn derive(
        &self,
        ctx: &BagContext<'_>,
        facts: &BagFacts<'_>,
        merged: &Token,
        out: &mut Vec<(Outcome, Vec<usize>)>,
    ) {
        let l = &self.layouts[merged.cq()];
        let mut extended = Vec::new();
        self.extend(ctx, facts, &mut merged.clone(), 0, &mut extended);
        'next: for mut tok in extended {
            let mut required = Vec::new();
            for (i, slot) in tok.slots.iter_mut().enumerate() {
                if let Some(v) = vertex_of(*slot) {
                    if !ctx.in_parent(v) {
                        *slot = FORGOTTEN;
                        if i < l.n_atoms {
                            required.push(ctx.graph.as_fact(v).expect("atoms map to facts"));
                        }
                    }
                }
            }
            // a forgotten variable can no longer be matched by its other atoms
            for (x, atoms) in l.var_atoms.iter().enumerate() {
                if tok.slots[l.n_atoms + x] == FORGOTTEN
                    && atoms.iter().any(|&i| tok.slots[i] == UNMAPPED)
                {
                    continue 'next;
                }
            }
            required.sort_unstable();
            if tok.slots.iter().all(|&s| s == FORGOTTEN) {
                out.push((Outcome::Complete(tok.cq()), required));
            } else if !tok.is_empty() {
                out.push((Outcome::Live(tok), required));
            }
        }
    }

    /// Number of candidate extensions of one merged token at this bag.
    pub(crate) fn extension_bound(&self, cq: usize, facts: &BagFacts<'_>) -> u128 {
        self.layouts[cq]
            .relations
            .iter()
            .map(|r| facts.count(r) as u128 + 1)
            .fold(1u128, u128::saturating_mul)
    }
}

impl BagAutomaton for QueryAutomaton {
    type State = QueryState;

    fn transition(
        &self,
        ctx: &BagContext<'_>,
        children: &[&QueryState],
        presence: &[bool],
    ) -> Result<QueryState, AutomatonError> {
        let n = self.cq_count();
        let mut satisfied = alloc::vec![false; n];
        for c in children {
            for (s, &b) in satisfied.iter_mut().zip(&c.satisfied) {
                *s |= b;
            }
        }
        let facts = BagFacts::new(ctx);
        let present = |f: &usize| {
            let i = ctx
                .introduced
                .binary_search(f)
                .expect("forgotten facts are introduced here");
            presence[i]
        };
        let mut tokens = BTreeSet::new();
        let mut outcomes = Vec::new();
        for cq in 0..n {
            let mut merged: BTreeSet<Token> = BTreeSet::new();
            merged.insert(self.empty(cq));
            for c in children {
                let mut next = merged.clone();
                for m in &merged {
                    for t in c.tokens.iter().filter(|t| t.cq() == cq) {
                        if let Some(x) = self.merge(ctx, m, t) {
                            next.insert(x);
                        }
                    }
                }
                if next.len() > self.max_tokens {
                    return Err(AutomatonError::StateExplosion {
                        count: next.len(),
                        cap: self.max_tokens,
                    });
                }
                merged = next;
            }
            for m in &merged {
                outcomes.clear();
                self.derive(ctx, &facts, m, &mut outcomes);
                for (outcome, required) in outcomes.drain(..) {
                    if !required.iter().all(present) {
                        continue;
                    }
                    match outcome {
                        Outcome::Live(t) => {
                            tokens.insert(t);
                        }
                        Outcome::Complete(i) => satisfied[i] = true,
                    }
                }
            }
            if tokens.len() > self.max_tokens {
                return Err(AutomatonError::StateExplosion {
                    count: tokens.len(),
                    cap: self.max_tokens,
                });
            }
        }
        Ok(QueryState { tokens, satisfied })
    }

    fn accepts(&self, state: &QueryState) -> bool {
        self.accepts_flags(&state.satisfied)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::Fact;
    use crate::query::parse_query;
    use crate::treedec::{decompose, IncidenceGraph};
    use alloc::vec;

    fn check_all_subsets(text: &str, schema: &Schema, facts: &[Fact]) {
        let q = parse_query(text, schema).unwrap();
        let g = IncidenceGraph::from_facts(facts);
        let t = decompose(g.graph()).root_and_binarize().unwrap();
        let a = compile(&q, schema, t.width()).unwrap();
        for mask in 0u32..(1 << facts.len()) {
            let present: Vec<bool> = (0..facts.len()).map(|i| mask >> i & 1 == 1).collect();
            let world = crate::instances::Instance::new(
                facts
                    .iter()
                    .zip(&present)
                    .filter(|(_, &p)| p)
                    .map(|(f, _)| f.clone()),
            );
            assert_eq!(
                run(&a, &t, &g, &present).unwrap(),
                q.holds(&world),
                "{text} on mask {mask:b}"
            );
        }
    }

    #[test]
    fn path_query_on_all_subinstances() {
        let schema = Schema::new([("R", 1), ("S", 2), ("T", 1)]).unwrap();
        let facts = vec![
            Fact::new("R", ["a"]),
            Fact::new("S", ["a", "b"]),
            Fact::new("T", ["b"]),
            Fact::new("S", ["b", "c"]),
            Fact::new("T", ["c"]),
            Fact::new("R", ["c"]),
            Fact::new("S", ["c", "a"]),
        ];
        check_all_subsets("exists x y. R(x) & S(x,y) & T(y)", &schema, &facts);
        check_all_subsets("exists x y z. S(x,y) & S(y,z) & S(z,x)", &schema, &facts);
        check_all_subsets("exists x. S(x,x) | exists x. R(x) & T(x)", &schema, &facts);
        check_all_subsets("!(exists x. R(x)) & exists y. T(y)", &schema, &facts);
        check_all_subsets("exists y. S(a, y) & T(y)", &schema, &facts);
    }

    #[test]
    fn trip_route() {
        let schema = Schema::new([("Trip", 2)]).unwrap();
        let facts = vec![
            Fact::new("Trip", ["CDG", "MEL"]),
            Fact::new("Trip", ["MEL", "CDG"]),
            Fact::new("Trip", ["MEL", "PDX"]),
            Fact::new("Trip", ["CDG", "PDX"]),
            Fact::new("Trip", ["PDX", "CDG"]),
        ];
        check_all_subsets("exists x. Trip(CDG, x) & Trip(x, PDX)", &schema, &facts);
        check_all_subsets("exists x y. Trip(x, y) & Trip(y, x)", &schema, &facts);
    }

    #[test]
    fn token_cap_is_enforced() {
        let schema = Schema::new([("S", 2)]).unwrap();
        let facts: Vec<Fact> = (0..6)
            .flat_map(|i| {
                (0..6)
                    .map(move |j| Fact::new("S", [alloc::format!("v{i}"), alloc::format!("v{j}")]))
            })
            .collect();
        let q = parse_query("exists x y z. S(x,y) & S(y,z) & S(z,x)", &schema).unwrap();
        let g = IncidenceGraph::from_facts(&facts);
        let t = decompose(g.graph());
        let a = compile(&q, &schema, t.width()).unwrap().with_max_tokens(10);
        let present = vec![true; facts.len()];
        assert!(matches!(
            run(&a, &t, &g, &present),
            Err(AutomatonError::StateExplosion { cap: 10, .. })
        ));
    }

    #[test]
    fn rejects_foreign_decomposition() {
        let schema = Schema::new([("R", 1)]).unwrap();
        let facts = vec![Fact::new("R", ["a"]), Fact::new("R", ["b"])];
        let g = IncidenceGraph::from_facts(&facts);
        let q = parse_query("exists x. R(x)", &schema).unwrap();
        let a = compile(&q, &schema, 1).unwrap();
        let bad = TreeDecomposition::trivial(2);
        assert!(matches!(
            run(&a, &bad, &g, &[true, true]),
            Err(AutomatonError::Decomposition(_))
        ));
        let t = decompose(g.graph());
        assert!(matches!(
            run(&a, &t, &g, &[true]),
            Err(AutomatonError::PresenceLength { .. })
        ));
    }
}
