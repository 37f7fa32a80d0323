//! Lineage circuits: running a bag automaton on a pcc-instance symbolically.
//!
//! The result extends the instance's annotation circuit, so its inputs are
//! the instance's events, and comes with a tree decomposition of its gate
//! graph whose width depends only on the instance width and the automaton.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::{Circuit, CircuitBuilder, Gate, GateId};
use crate::instances::PCCInstance;
use crate::query::{
    AutomatonError, BagAutomaton, BagContext, BagFacts, Outcome, Plan, QueryAutomaton, QueryExpr,
    Token, DEFAULT_MAX_TOKENS,
};
use crate::treedec::{decompose, IncidenceGraph, NodeId, TreeDecomposition};

/// Facts introduced in one bag beyond which the exact-state construction
/// refuses to enumerate presence vectors.
const MAX_INTRODUCED: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LineageError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("incidence graph does not match the instance")]
    GraphMismatch,
}

/// Which construction produced a lineage circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// One gate per partial match; negation-free, used for queries without
    /// negation.
    Monotone,
    /// The same partial-match gates, which together encode the exact
    /// automaton state, combined with negation by the acceptance condition.
    /// Used for queries with negation.
    ExactStates,
    /// One gate per reachable state of an arbitrary bag automaton, with
    /// negated presence literals.
    OneHot,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineageStats {
    pub nodes: usize,
    /// Most partial matches (or automaton states) held by one node.
    pub max_states: usize,
    pub total_states: usize,
    pub derivations: usize,
    pub relay_gates: usize,
    /// Gates added on top of the annotation circuit.
    pub added_gates: usize,
    /// Upper bound on `added_gates` computed from the per-node state counts.
    pub size_bound: u128,
}

#[derive(Debug, Clone)]
pub struct LineageResult {
    pub circuit: Circuit,
    /// Decomposition of `circuit.gate_graph()`.
    pub decomposition: TreeDecomposition,
    /// Width of the decomposition mirroring the instance decomposition;
    /// `decomposition` is this one unless min-fill found a narrower one.
    pub mirrored_width: usize,
    /// Decomposition node each added gate was created at; `None` for gates
    /// of the annotation circuit.
    pub gate_origin: Vec<Option<NodeId>>,
    pub construction: Construction,
    pub stats: LineageStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Lit {
    True,
    Gate(GateId),
}

struct Build {
    b: CircuitBuilder,
    origin: Vec<Option<NodeId>>,
    node: NodeId,
    uses: Vec<BTreeSet<GateId>>,
    created: Vec<Vec<GateId>>,
}

impl Build {
    fn push(&mut self, g: Gate) -> GateId {
        self.uses[self.node].extend(g.inputs().iter().copied());
        let id = self.b.push(g);
        self.origin.push(Some(self.node));
        self.created[self.node].push(id);
        id
    }

    fn and(&mut self, lits: &[Lit]) -> Lit {
        let mut acc = Lit::True;
        for &l in lits {
            acc = match (acc, l) {
                (Lit::True, x) | (x, Lit::True) => x,
                (Lit::Gate(a), Lit::Gate(b)) => Lit::Gate(self.push(Gate::And(alloc::vec![a, b]))),
            };
        }
        acc
    }

    /// Disjunction of `lits`; `None` for an empty disjunction.
    fn or(&mut self, lits: &[Lit]) -> Option<Lit> {
        if lits.contains(&Lit::True) {
            return Some(Lit::True);
        }
        let mut gates: Vec<GateId> = lits
            .iter()
            .map(|l| match l {
                Lit::Gate(g) => *g,
                Lit::True => unreachable!(),
            })
            .collect();
        gates.sort_unstable();
        gates.dedup();
        let (&first, rest) = gates.split_first()?;
        let mut acc = first;
        for &g in rest {
            acc = self.push(Gate::Or(alloc::vec![acc, g]));
        }
        Some(Lit::Gate(acc))
    }

    fn mark_output(&mut self, lit: Lit) {
        if let Lit::Gate(g) = lit {
            self.uses[self.node].insert(g);
        }
    }
}

struct Prepared {
    plan: Plan,
    build: Build,
    /// Gate carrying each fact's presence, usable at its topmost node.
    presence: Vec<GateId>,
    base_len: usize,
}

fn prepare(
    inst: &PCCInstance,
    g: &IncidenceGraph,
    t: &TreeDecomposition,
) -> Result<Prepared, LineageError> {
    let facts = inst.facts();
    if g.facts().len() != facts.len()
        || g.gate_count() != inst.circuit().len()
        || facts
            .iter()
            .enumerate()
            .any(|(i, (f, gate))| g.facts()[i] != *f || g.fact_gate(i) != Some(*gate))
    {
        return Err(LineageError::GraphMismatch);
    }
    let plan = Plan::new(t, g).map_err(AutomatonError::from)?;
    let base_len = inst.circuit().len();
    let mut build = Build {
        b: CircuitBuilder::from_circuit(inst.circuit().clone()),
        origin: alloc::vec![None; base_len],
        node: 0,
        uses: alloc::vec![BTreeSet::new(); t.len()],
        created: alloc::vec![Vec::new(); t.len()],
    };
    let mut presence = Vec::with_capacity(facts.len());
    for (node, intro) in plan.introduced.iter().enumerate() {
        for &f in intro {
            let fv = g.fact_vertex(f);
            let gv = g
                .gate_vertex(facts[f].1)
                .ok_or(LineageError::GraphMismatch)?;
            // nearest bag below holding both the fact and its gate
            let mut parent_of: BTreeMap<NodeId, NodeId> = BTreeMap::new();
            let mut stack = alloc::vec![node];
            let mut found = None;
            while let Some(m) = stack.pop() {
                if plan.bags[m].binary_search(&gv).is_ok() {
                    found = Some(m);
                    break;
                }
                for &c in plan.rooted.children[m].iter().rev() {
                    if plan.bags[c].binary_search(&fv).is_ok() {
                        parent_of.insert(c, m);
                        stack.push(c);
                    }
                }
            }
            let mut m = found.ok_or(LineageError::GraphMismatch)?;
            let mut lit = facts[f].1;
            while m != node {
                build.node = m;
                build.uses[m].insert(lit);
                lit = build.push(Gate::Or(alloc::vec![lit]));
                m = parent_of[&m];
            }
            presence.push((f, lit));
        }
    }
    presence.sort_unstable();
    let presence = presence.into_iter().map(|(_, l)| l).collect();
    Ok(Prepared {
        plan,
        build,
        presence,
        base_len,
    })
}

#[derive(Clone, Copy)]
enum Val {
    False,
    Lit(Lit),
}

fn combine(b: &mut Build, e: &QueryExpr, flags: &[Option<Lit>]) -> Val {
    match e {
        QueryExpr::True => Val::Lit(Lit::True),
        QueryExpr::False => Val::False,
        QueryExpr::Cq(i) => flags[*i].map_or(Val::False, Val::Lit),
        QueryExpr::Not(x) => match combine(b, x, flags) {
            Val::False => Val::Lit(Lit::True),
            Val::Lit(Lit::True) => Val::False,
            Val::Lit(Lit::Gate(g)) => Val::Lit(Lit::Gate(b.push(Gate::Not(g)))),
        },
        QueryExpr::And(x, y) => match (combine(b, x, flags), combine(b, y, flags)) {
            (Val::False, _) | (_, Val::False) => Val::False,
            (Val::Lit(p), Val::Lit(q)) => Val::Lit(b.and(&[p, q])),
        },
        QueryExpr::Or(x, y) => match (combine(b, x, flags), combine(b, y, flags)) {
            (Val::False, v) | (v, Val::False) => v,
            (Val::Lit(p), Val::Lit(q)) => Val::Lit(b.or(&[p, q]).expect("non-empty")),
        },
    }
}

fn expr_size(e: &QueryExpr) -> u128 {
    match e {
        QueryExpr::Not(x) => 1 + expr_size(x),
        QueryExpr::And(x, y) | QueryExpr::Or(x, y) => 1 + expr_size(x) + expr_size(y),
        _ => 1,
    }
}

fn finish(
    mut p: Prepared,
    g: &IncidenceGraph,
    out: Val,
    construction: Construction,
    mut stats: LineageStats,
) -> LineageResult {
    let root = p.plan.rooted.root;
    p.build.node = root;
    let out = match out {
        Val::False => p.build.push(Gate::Or(Vec::new())),
        Val::Lit(Lit::True) => p.build.push(Gate::And(Vec::new())),
        Val::Lit(Lit::Gate(g)) => {
            p.build.uses[root].insert(g);
            g
        }
    };
    let circuit = p.build.b.finish(Some(out));
    let n = p.plan.bags.len();
    let mut bags = Vec::with_capacity(n);
    for node in 0..n {
        let mut bag: Vec<GateId> = p.plan.bags[node]
            .iter()
            .filter_map(|&v| g.as_gate(v))
            .collect();
        bag.extend(p.build.created[node].iter().copied());
        bag.extend(p.build.uses[node].iter().copied());
        bag.sort_unstable();
        bag.dedup();
        bags.push(bag);
    }
    let edges = (0..n)
        .filter_map(|c| p.plan.rooted.parent[c].map(|par| (par, c)))
        .collect();
    let mirrored = TreeDecomposition {
        bags,
        edges,
        root: Some(root),
    };
    let mirrored_width = mirrored.width();
    let minfill = decompose(&circuit.gate_graph());
    let decomposition = if minfill.width() < mirrored_width {
        minfill
    } else {
        mirrored
    };
    stats.nodes = n;
    stats.added_gates = circuit.len() - p.base_len;
    LineageResult {
        circuit,
        decomposition,
        mirrored_width,
        gate_origin: p.build.origin,
        construction,
        stats,
    }
}

/// Lineage of `a` on `inst`, given the joint incidence graph `g` and a
/// decomposition `t` of it. The circuit is negation-free unless the query
/// has negation.
pub fn build_lineage(
    a: &QueryAutomaton,
    inst: &PCCInstance,
    g: &IncidenceGraph,
    t: &TreeDecomposition,
) -> Result<LineageResult, LineageError> {
    let mut p = prepare(inst, g, t)?;
    let mut stats = LineageStats {
        relay_gates: p.build.created.iter().map(Vec::len).sum(),
        ..LineageStats::default()
    };
    let q = a.cq_count();
    let n = p.plan.bags.len();
    let mut tokens: Vec<Option<BTreeMap<Token, Lit>>> = alloc::vec![None; n];
    let mut flags: Vec<Vec<Option<Lit>>> = alloc::vec![Vec::new(); n];
    let mut bound = stats.relay_gates as u128;
    let postorder = p.plan.rooted.postorder.clone();
    for &node in &postorder {
        p.build.node = node;
        let ctx: BagContext<'_> = p.plan.context(g, node);
        let facts = BagFacts::new(&ctx);
        let kids: Vec<BTreeMap<Token, Lit>> = p.plan.rooted.children[node]
            .iter()
            .map(|&c| tokens[c].take().expect("children first"))
            .collect();
        let mut out: BTreeMap<Token, Vec<Lit>> = BTreeMap::new();
        let mut done: Vec<Vec<Lit>> = alloc::vec![Vec::new(); q];
        for &c in &p.plan.rooted.children[node] {
            for (i, f) in flags[c].iter().enumerate() {
                if let Some(l) = f {
                    done[i].push(*l);
                }
            }
        }
        let k = ctx.introduced.len() as u128;
        let mut outcomes = Vec::new();
        for cq in 0..q {
            let mut product: u128 = 1;
            let mut merged: BTreeMap<Token, Lit> = BTreeMap::new();
            merged.insert(a.empty(cq), Lit::True);
            for kid in &kids {
                let mine: Vec<(&Token, &Lit)> = kid.iter().filter(|(t, _)| t.cq() == cq).collect();
                let width = mine.len() as u128 + 1;
                bound += 3 * product * width;
                product = product.saturating_mul(width);
                let mut next: BTreeMap<Token, Vec<Lit>> = BTreeMap::new();
                for (m, &ml) in &merged {
                    next.entry(m.clone()).or_default().push(ml);
                    for &(t, &tl) in &mine {
                        if let Some(x) = a.merge(&ctx, m, t) {
                            let l = p.build.and(&[ml, tl]);
                            next.entry(x).or_default().push(l);
                        }
                    }
                }
                if next.len() > a.max_tokens() {
                    return Err(AutomatonError::StateExplosion {
                        count: next.len(),
                        cap: a.max_tokens(),
                    }
                    .into());
                }
                merged = next
                    .into_iter()
                    .map(|(t, ls)| {
                        let l = p.build.or(&ls).expect("non-empty");
                        (t, l)
                    })
                    .collect();
            }
            bound += product
                .saturating_mul(a.extension_bound(cq, &facts))
                .saturating_mul(k + 3);
            for (m, &ml) in &merged {
                outcomes.clear();
                a.derive(&ctx, &facts, m, &mut outcomes);
                stats.derivations += outcomes.len();
                for (outcome, required) in outcomes.drain(..) {
                    let mut lits = alloc::vec![ml];
                    lits.extend(required.iter().map(|&f| Lit::Gate(p.presence[f])));
                    let term = p.build.and(&lits);
                    match outcome {
                        Outcome::Live(t) => out.entry(t).or_default().push(term),
                        Outcome::Complete(i) => done[i].push(term),
                    }
                }
            }
        }
        bound += q as u128 * (kids.len() as u128 + 1);
        if out.len() > a.max_tokens() {
            return Err(AutomatonError::StateExplosion {
                count: out.len(),
                cap: a.max_tokens(),
            }
            .into());
        }
        let mut mine = BTreeMap::new();
        for (t, ls) in out {
            let l = p.build.or(&ls).expect("non-empty");
            p.build.mark_output(l);
            mine.insert(t, l);
        }
        stats.max_states = stats.max_states.max(mine.len());
        stats.total_states += mine.len();
        tokens[node] = Some(mine);
        let f: Vec<Option<Lit>> = done.iter().map(|ls| p.build.or(ls)).collect();
        for l in f.iter().flatten() {
            p.build.mark_output(*l);
        }
        flags[node] = f;
    }
    let root = p.plan.rooted.root;
    p.build.node = root;
    let root_flags = flags[root].clone();
    let out = combine(&mut p.build, a.query().expr(), &root_flags);
    stats.size_bound = bound + 2 * expr_size(a.query().expr()) + 1;
    let construction = if a.query().has_negation() {
        Construction::ExactStates
    } else {
        Construction::Monotone
    };
    Ok(finish(p, g, out, construction, stats))
}

/// Lineage through the automaton's reachable states: one gate per state and
/// node, true exactly when the run on the subinstance reaches that state.
pub fn build_lineage_one_hot<A: BagAutomaton>(
    a: &A,
    inst: &PCCInstance,
    g: &IncidenceGraph,
    t: &TreeDecomposition,
) -> Result<LineageResult, LineageError> {
    let mut p = prepare(inst, g, t)?;
    let mut stats = LineageStats {
        relay_gates: p.build.created.iter().map(Vec::len).sum(),
        ..LineageStats::default()
    };
    let mut bound = stats.relay_gates as u128;
    let n = p.plan.bags.len();
    let mut states: Vec<Option<BTreeMap<A::State, Lit>>> = alloc::vec![None; n];
    let postorder = p.plan.rooted.postorder.clone();
    for &node in &postorder {
        p.build.node = node;
        let ctx = p.plan.context(g, node);
        let k = ctx.introduced.len();
        if k > MAX_INTRODUCED {
            return Err(AutomatonError::TooManyIntroduced(k).into());
        }
        let kids: Vec<BTreeMap<A::State, Lit>> = p.plan.rooted.children[node]
            .iter()
            .map(|&c| states[c].take().expect("children first"))
            .collect();
        let work = kids
            .iter()
            .fold(1u128 << k, |acc, kd| acc.saturating_mul(kd.len() as u128));
        if work > DEFAULT_MAX_TOKENS as u128 {
            return Err(AutomatonError::StateExplosion {
                count: work.min(usize::MAX as u128) as usize,
                cap: DEFAULT_MAX_TOKENS,
            }
            .into());
        }
        let mut combos: Vec<(Vec<&A::State>, Lit)> = alloc::vec![(Vec::new(), Lit::True)];
        for kid in &kids {
            let mut next = Vec::with_capacity(combos.len() * kid.len());
            for (combo, l) in &combos {
                for (s, &sl) in kid {
                    let mut c = combo.clone();
                    c.push(s);
                    next.push((c, p.build.and(&[*l, sl])));
                }
            }
            combos = next;
        }
        let pos: Vec<Lit> = ctx
            .introduced
            .iter()
            .map(|&f| Lit::Gate(p.presence[f]))
            .collect();
        let mut neg: Vec<Option<Lit>> = alloc::vec![None; k];
        let mut terms: BTreeMap<A::State, Vec<Lit>> = BTreeMap::new();
        for (combo, l) in &combos {
            for mask in 0u32..(1u32 << k) {
                let bits: Vec<bool> = (0..k).map(|i| mask >> i & 1 == 1).collect();
                let s = a.transition(&ctx, combo, &bits)?;
                stats.derivations += 1;
                let mut lits = alloc::vec![*l];
                for i in 0..k {
                    if bits[i] {
                        lits.push(pos[i]);
                    } else {
                        let nl = match neg[i] {
                            Some(nl) => nl,
                            None => {
                                let Lit::Gate(gid) = pos[i] else {
                                    unreachable!()
                                };
                                let nl = Lit::Gate(p.build.push(Gate::Not(gid)));
                                neg[i] = Some(nl);
                                nl
                            }
                        };
                        lits.push(nl);
                    }
                }
                let term = p.build.and(&lits);
                terms.entry(s).or_default().push(term);
            }
        }
        if terms.len() > DEFAULT_MAX_TOKENS {
            return Err(AutomatonError::StateExplosion {
                count: terms.len(),
                cap: DEFAULT_MAX_TOKENS,
            }
            .into());
        }
        let product = combos.len() as u128;
        bound += kids.iter().map(|kd| kd.len() as u128).product::<u128>() * kids.len() as u128
            + product * (1u128 << k) * (k as u128 + 2)
            + k as u128;
        let mut mine = BTreeMap::new();
        for (s, ls) in terms {
            let l = p.build.or(&ls).expect("non-empty");
            p.build.mark_output(l);
            mine.insert(s, l);
        }
        stats.max_states = stats.max_states.max(mine.len());
        stats.total_states += mine.len();
        states[node] = Some(mine);
    }
    let root = p.plan.rooted.root;
    p.build.node = root;
    let accepting: Vec<Lit> = states[root]
        .take()
        .expect("root visited")
        .into_iter()
        .filter(|(s, _)| a.accepts(s))
        .map(|(_, l)| l)
        .collect();
    let out = match p.build.or(&accepting) {
        Some(l) => Val::Lit(l),
        None => Val::False,
    };
    stats.size_bound = bound + 1;
    Ok(finish(p, g, out, Construction::OneHot, stats))
}
