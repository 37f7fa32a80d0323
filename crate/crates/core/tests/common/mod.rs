#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uncertain_core::circuits::{build_lineage, CircuitBuilder, Construction, LineageResult};
use uncertain_core::instances::{
    Annotation, Event, Fact, PCInstance, PossibleWorlds, Schema, TIDInstance,
};
use uncertain_core::porder::LabeledPoset;
use uncertain_core::prxml::{Edge, EdgeLabel, Literal, NodeKind, PrxmlDoc, PrxmlNode};
use uncertain_core::query::{compile, run};
use uncertain_core::treedec::{build_joint_graph, decompose, IncidenceGraph};
use uncertain_core::{Gate, Graph, PCCInstance, Query};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rst() -> Schema {
    Schema::new([("R", 1), ("S", 2), ("T", 1)]).unwrap()
}

pub fn random_graph(r: &mut impl Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if r.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

pub fn random_tree(r: &mut impl Rng, n: usize) -> Graph {
    let edges: Vec<(usize, usize)> = (1..n).map(|v| (r.gen_range(0..v), v)).collect();
    Graph::from_edges(n, edges)
}

/// Probabilities on a coarse grid so that rational checks stay small.
pub fn random_prob(r: &mut impl Rng) -> f64 {
    r.gen_range(0..=8) as f64 / 8.0
}

fn element(r: &mut impl Rng, elems: usize) -> String {
    format!("a{}", r.gen_range(0..elems))
}

/// Distinct random facts over `rst()`.
pub fn random_facts(r: &mut impl Rng, elems: usize, count: usize) -> Vec<Fact> {
    let mut out: Vec<Fact> = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 20 * count {
        attempts += 1;
        let f = match r.gen_range(0..4) {
            0 => Fact::new("R", [element(r, elems)]),
            1 => Fact::new("T", [element(r, elems)]),
            _ => Fact::new("S", [element(r, elems), element(r, elems)]),
        };
        if !out.contains(&f) {
            out.push(f);
        }
    }
    out
}

pub fn random_tid(r: &mut impl Rng, elems: usize, facts: usize) -> TIDInstance {
    let facts = random_facts(r, elems, facts)
        .into_iter()
        .map(|f| (f, random_prob(r)))
        .collect();
    TIDInstance::new(rst(), facts).unwrap()
}

fn random_annotation(r: &mut impl Rng, events: &[String], depth: usize) -> Annotation {
    if depth == 0 || r.gen_bool(0.4) {
        let v = Annotation::var(events.choose(r).unwrap());
        return if r.gen_bool(0.3) {
            Annotation::not(v)
        } else {
            v
        };
    }
    let a = random_annotation(r, events, depth - 1);
    let b = random_annotation(r, events, depth - 1);
    match r.gen_range(0..3) {
        0 => Annotation::and(a, b),
        1 => Annotation::or(a, b),
        _ => Annotation::not(Annotation::and(a, b)),
    }
}

pub fn random_events(r: &mut impl Rng, n: usize) -> Vec<Event> {
    (0..n)
        .map(|i| Event::new(&format!("e{i}"), random_prob(r)))
        .collect()
}

pub fn random_pc(r: &mut impl Rng, elems: usize, facts: usize, events: usize) -> PCInstance {
    let events = random_events(r, events);
    let names: Vec<String> = events.iter().map(|e| e.name.clone()).collect();
    let facts = random_facts(r, elems, facts)
        .into_iter()
        .map(|f| (f, random_annotation(r, &names, 2)))
        .collect();
    PCInstance::new(rst(), facts, events).unwrap()
}

/// Random circuit whose gates are shared between facts.
pub fn random_pcc(r: &mut impl Rng, elems: usize, facts: usize, events: usize) -> PCCInstance {
    let events = random_events(r, events);
    let mut b = CircuitBuilder::new(events.iter().map(|e| e.name.clone()).collect());
    for i in 0..events.len() {
        b.input(i);
    }
    for _ in 0..r.gen_range(0..=2 * events.len()) {
        let n = b.len();
        let x = r.gen_range(0..n);
        let y = r.gen_range(0..n);
        match r.gen_range(0..3) {
            0 => b.push(Gate::And(vec![x, y])),
            1 => b.push(Gate::Or(vec![x, y])),
            _ => b.not(x),
        };
    }
    let n = b.len();
    let facts = random_facts(r, elems, facts)
        .into_iter()
        .map(|f| (f, r.gen_range(0..n)))
        .collect();
    PCCInstance::new(rst(), facts, b.finish(None), events).unwrap()
}

fn random_cq(r: &mut impl Rng, elems: usize) -> String {
    let vars = ["x", "y", "z"];
    let term = |r: &mut ChaCha8Rng| {
        if r.gen_bool(0.15) {
            element(r, elems)
        } else {
            vars[r.gen_range(0..vars.len())].to_string()
        }
    };
    let mut local = ChaCha8Rng::seed_from_u64(r.gen());
    let atoms: Vec<String> = (0..local.gen_range(1..=3))
        .map(|_| match local.gen_range(0..4) {
            0 => format!("R({})", term(&mut local)),
            1 => format!("T({})", term(&mut local)),
            _ => format!("S({}, {})", term(&mut local), term(&mut local)),
        })
        .collect();
    let body = atoms.join(" & ");
    let used: Vec<&str> = vars
        .iter()
        .copied()
        .filter(|v| {
            atoms
                .iter()
                .any(|a| a.contains(&format!("({v}")) || a.contains(&format!(" {v})")))
        })
        .collect();
    if used.is_empty() {
        body
    } else {
        format!("exists {}. {}", used.join(" "), body)
    }
}

/// A union of one or two conjunctive queries over `rst()`.
pub fn random_ucq(r: &mut impl Rng, elems: usize) -> String {
    let n = r.gen_range(1..=2);
    (0..n)
        .map(|_| format!("({})", random_cq(r, elems)))
        .collect::<Vec<_>>()
        .join(" | ")
}

/// A Boolean combination of conjunctive queries with at least one negation.
pub fn random_negated(r: &mut impl Rng, elems: usize) -> String {
    let a = random_cq(r, elems);
    let b = random_cq(r, elems);
    match r.gen_range(0..3) {
        0 => format!("!({a})"),
        1 => format!("({a}) & !({b})"),
        _ => format!("!({a}) | !({b})"),
    }
}

pub fn trips(pods: f64, stoc: f64) -> PCInstance {
    let schema = Schema::new([("Trip", 2)]).unwrap();
    let rows = [
        ("CDG", "MEL", "pods"),
        ("MEL", "CDG", "pods & !stoc"),
        ("MEL", "PDX", "pods & stoc"),
        ("CDG", "PDX", "!pods & stoc"),
        ("PDX", "CDG", "stoc"),
    ];
    let facts = rows
        .iter()
        .map(|(a, b, ann)| (Fact::new("Trip", [*a, *b]), Annotation::parse(ann).unwrap()))
        .collect();
    PCInstance::new(
        schema,
        facts,
        vec![Event::new("pods", pods), Event::new("stoc", stoc)],
    )
    .unwrap()
}

pub fn regular(label: &str, children: &[usize]) -> PrxmlNode {
    PrxmlNode {
        kind: NodeKind::Regular(label.to_string()),
        edges: children
            .iter()
            .map(|&c| Edge {
                child: c,
                label: EdgeLabel::Plain,
            })
            .collect(),
    }
}

pub fn dist(kind: NodeKind, edges: Vec<(usize, EdgeLabel)>) -> PrxmlNode {
    PrxmlNode {
        kind,
        edges: edges
            .into_iter()
            .map(|(child, label)| Edge { child, label })
            .collect(),
    }
}

/// The Chelsea Manning document.
pub fn manning() -> PrxmlDoc {
    let jane = || EdgeLabel::Cond(vec![Literal::pos("e_Jane")]);
    let nodes = vec![
        regular("Q298423", &[1, 5, 8, 11]),
        regular("given name", &[2]),
        dist(
            NodeKind::Mux,
            vec![(3, EdgeLabel::Prob(0.4)), (4, EdgeLabel::Prob(0.6))],
        ),
        regular("Bradley", &[]),
        regular("Chelsea", &[]),
        regular("surname", &[6]),
        dist(NodeKind::Cie, vec![(7, jane())]),
        regular("Manning", &[]),
        regular("place of birth", &[9]),
        dist(NodeKind::Cie, vec![(10, jane())]),
        regular("Crescent", &[]),
        dist(NodeKind::Ind, vec![(12, EdgeLabel::Prob(0.4))]),
        regular("occupation", &[13]),
        regular("musician", &[]),
    ];
    PrxmlDoc::new(nodes, 0, vec![Event::new("e_Jane", 0.9)]).unwrap()
}

/// Random PrXML tree with every kind of node; `events` are shared by cie edges.
pub fn random_prxml(r: &mut impl Rng, size: usize, events: usize) -> PrxmlDoc {
    let events = random_events(r, events);
    let labels = ["a", "b", "c"];
    let mut nodes: Vec<PrxmlNode> = vec![regular("root", &[])];
    let mut regulars = vec![0usize];
    let mut dists: Vec<usize> = Vec::new();
    while nodes.len() < size {
        let id = nodes.len();
        let parent = if !dists.is_empty() && r.gen_bool(0.5) {
            *dists.choose(r).unwrap()
        } else {
            *regulars.choose(r).unwrap()
        };
        let label = match nodes[parent].kind {
            NodeKind::Regular(_) => EdgeLabel::Plain,
            NodeKind::Ind => EdgeLabel::Prob(random_prob(r)),
            NodeKind::Mux => {
                let used: f64 = nodes[parent]
                    .edges
                    .iter()
                    .map(|e| match e.label {
                        EdgeLabel::Prob(p) => p,
                        _ => 0.0,
                    })
                    .sum();
                let room = ((1.0 - used) * 8.0).round() as i32;
                EdgeLabel::Prob(r.gen_range(0..=room) as f64 / 8.0)
            }
            NodeKind::Cie => {
                let k = r.gen_range(1..=2.min(events.len()));
                let lits = events
                    .choose_multiple(r, k)
                    .map(|e| Literal {
                        event: e.name.clone(),
                        positive: r.gen_bool(0.7),
                    })
                    .collect();
                EdgeLabel::Cond(lits)
            }
        };
        nodes[parent].edges.push(Edge { child: id, label });
        let kind = match r.gen_range(0..6) {
            0 => NodeKind::Ind,
            1 => NodeKind::Mux,
            2 if !events.is_empty() => NodeKind::Cie,
            _ => NodeKind::Regular(labels.choose(r).unwrap().to_string()),
        };
        match kind {
            NodeKind::Regular(_) => regulars.push(id),
            _ => dists.push(id),
        }
        nodes.push(PrxmlNode {
            kind,
            edges: Vec::new(),
        });
    }
    PrxmlDoc::new(nodes, 0, events).unwrap()
}

pub fn lineage(inst: &PCCInstance, q: &Query) -> LineageResult {
    let g = build_joint_graph(inst);
    let t = decompose(g.graph()).root_and_binarize().unwrap();
    let a = compile(q, inst.schema(), t.width()).unwrap();
    build_lineage(&a, inst, &g, &t).unwrap()
}

/// Compares the lineage with the automaton and the naive evaluator on every
/// world of `inst`.
pub fn check_every_valuation(inst: &PCCInstance, q: &Query, lr: &LineageResult) {
    let facts: Vec<_> = inst.facts().iter().map(|(f, _)| f.clone()).collect();
    let g = IncidenceGraph::from_facts(&facts);
    let t = decompose(g.graph()).root_and_binarize().unwrap();
    let a = compile(q, inst.schema(), t.width()).unwrap();
    let n = inst.events().len();
    for mask in 0usize..1 << n {
        let bits: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let world = inst.world_bits(&bits);
        let present: Vec<bool> = facts.iter().map(|f| world.contains(f)).collect();
        let by_automaton = run(&a, &t, &g, &present).unwrap();
        assert_eq!(by_automaton, q.holds(&world), "{q} on {bits:?}");
        assert_eq!(
            lr.circuit.evaluate_bits(&bits).unwrap(),
            by_automaton,
            "{q} on {bits:?}"
        );
    }
}

pub fn check_structure(inst: &PCCInstance, q: &Query, lr: &LineageResult) {
    assert_eq!(lr.decomposition.validate(&lr.circuit.gate_graph()), Ok(()));
    assert!(lr.decomposition.width() <= lr.mirrored_width);
    assert!(lr.stats.added_gates as u128 <= lr.stats.size_bound);
    assert_eq!(
        lr.circuit.len(),
        inst.circuit().len() + lr.stats.added_gates
    );
    let added = &lr.circuit.gates()[inst.circuit().len()..];
    if q.has_negation() {
        assert_eq!(lr.construction, Construction::ExactStates);
    } else {
        assert_eq!(lr.construction, Construction::Monotone);
        assert!(added.iter().all(|g| !matches!(g, Gate::Not(_))), "{q}");
    }
}

/// Random poset generated by edges going from lower to higher ids.
pub fn random_poset(r: &mut impl Rng, n: usize, alphabet: usize, density: f64) -> LabeledPoset {
    let ls = (0..n)
        .map(|_| vec![format!("l{}", r.gen_range(0..alphabet))])
        .collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if r.gen_bool(density) {
                edges.push((a, b));
            }
        }
    }
    LabeledPoset::new(1, ls, &edges).unwrap()
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Whether `order` lists every element once and respects the order.
pub fn is_extension(p: &LabeledPoset, order: &[usize]) -> bool {
    let mut pos = vec![usize::MAX; p.len()];
    for (i, &e) in order.iter().enumerate() {
        if e >= p.len() || pos[e] != usize::MAX {
            return false;
        }
        pos[e] = i;
    }
    order.len() == p.len()
        && (0..p.len()).all(|a| (0..p.len()).all(|b| !p.less(a, b) || pos[a] < pos[b]))
}

/// Possible-world test by trying every bijection from positions to
/// elements with matching labels.
pub fn bijection_oracle(p: &LabeledPoset, seq: &[Vec<String>]) -> bool {
    fn go(
        p: &LabeledPoset,
        seq: &[Vec<String>],
        chosen: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if chosen.len() == seq.len() {
            return is_extension(p, chosen);
        }
        let i = chosen.len();
        for e in 0..p.len() {
            if !used[e] && p.label(e) == seq[i].as_slice() {
                used[e] = true;
                chosen.push(e);
                let ok = go(p, seq, chosen, used);
                chosen.pop();
                used[e] = false;
                if ok {
                    return true;
                }
            }
        }
        false
    }
    seq.len() == p.len() && go(p, seq, &mut Vec::new(), &mut vec![false; p.len()])
}

/// Treewidth by dynamic programming over vertex subsets: `tw(S)` is the best
/// width of eliminating `S` first, and eliminating `v` after `S` costs the
/// number of vertices outside `S + v` reachable from `v` through `S`.
pub fn treewidth_oracle(g: &Graph) -> usize {
    let n = g.len();
    if n == 0 {
        return 0;
    }
    let adj: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect();
    let q = |s: u32, v: usize| -> usize {
        let mut seen = 1u32 << v;
        let mut stack = vec![v];
        let mut out = 0u32;
        while let Some(u) = stack.pop() {
            let mut nb = adj[u] & !seen;
            while nb != 0 {
                let w = nb.trailing_zeros() as usize;
                nb &= nb - 1;
                seen |= 1 << w;
                if s >> w & 1 == 1 {
                    stack.push(w);
                } else {
                    out |= 1 << w;
                }
            }
        }
        out.count_ones() as usize
    };
    let full = (1u32 << n) - 1;
    let mut tw = vec![usize::MAX; 1 << n];
    tw[0] = 0;
    for s in 1..=full {
        let mut best = usize::MAX;
        let mut rest = s;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = s & !(1 << v);
            best = best.min(tw[prev as usize].max(q(prev, v)));
        }
        tw[s as usize] = best;
    }
    tw[full as usize]
}

/// Scope by definition: below the lowest common ancestor of the cie nodes
/// using the event, on a path to one of them or under one of them.
pub fn scope_oracle(doc: &PrxmlDoc, event: &str) -> BTreeSet<usize> {
    let users: Vec<usize> = (0..doc.nodes().len())
        .filter(|&n| {
            doc.nodes()[n].edges.iter().any(|e| match &e.label {
                EdgeLabel::Cond(lits) => lits.iter().any(|l| l.event == event),
                _ => false,
            })
        })
        .collect();
    if users.is_empty() {
        return BTreeSet::new();
    }
    let ancestors = |n: usize| {
        let mut out = vec![n];
        let mut cur = n;
        while let Some(p) = doc.parent(cur) {
            out.push(p);
            cur = p;
        }
        out
    };
    let common: BTreeSet<usize> = users
        .iter()
        .map(|&u| ancestors(u).into_iter().collect::<BTreeSet<_>>())
        .reduce(|a, b| a.intersection(&b).copied().collect())
        .unwrap();
    let lca = *ancestors(users[0])
        .iter()
        .find(|a| common.contains(a))
        .unwrap();
    (0..doc.nodes().len())
        .filter(|&n| {
            let up = ancestors(n);
            n != lca
                && up.contains(&lca)
                && users
                    .iter()
                    .any(|&u| up.contains(&u) || ancestors(u).contains(&n))
        })
        .collect()
}

/// A root with `n` items, each guarded by its own event.
pub fn local_family(n: usize) -> PrxmlDoc {
    let mut nodes = vec![regular("root", &[])];
    let mut events = Vec::new();
    for i in 0..n {
        let item = nodes.len();
        nodes[0].edges.push(Edge {
            child: item,
            label: EdgeLabel::Plain,
        });
        let e = format!("e{i}");
        nodes.push(regular("item", &[item + 1, item + 3]));
        nodes.push(dist(
            NodeKind::Cie,
            vec![(item + 2, EdgeLabel::Cond(vec![Literal::pos(&e)]))],
        ));
        nodes.push(regular("a", &[]));
        nodes.push(dist(NodeKind::Ind, vec![(item + 4, EdgeLabel::Prob(0.5))]));
        nodes.push(regular("b", &[]));
        events.push(Event::new(&e, 0.5));
    }
    PrxmlDoc::new(nodes, 0, events).unwrap()
}
