//! Probabilistic XML: trees with `ind`, `mux` and `cie` distributional
//! nodes, their possible worlds, event scopes, and their encoding as
//! pcc-instances over `Label`, `Child` and `Desc` facts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::circuits::{CircuitBuilder, Gate, GateId};
use crate::instances::{Event, Fact, Instance, InstanceError, PCCInstance, Schema};
use crate::prob::{prob_query, Diagnostics, Options, ProbError};
use crate::query::Query;
use crate::weight::Weight;

pub type NodeId = usize;

/// Slack allowed when checking that mux probabilities sum to at most one.
const MUX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrxmlError {
    #[error("the root must be a regular node")]
    RootNotRegular,
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("node {0} has more than one parent or lies on a cycle")]
    NotATree(NodeId),
    #[error("node {0} is not reachable from the root")]
    Unreachable(NodeId),
    #[error("edge {parent}->{child}: {msg}")]
    BadEdge {
        parent: NodeId,
        child: NodeId,
        msg: &'static str,
    },
    #[error("edge {parent}->{child} has probability {prob} outside [0, 1]")]
    BadProbability {
        parent: NodeId,
        child: NodeId,
        prob: f64,
    },
    #[error("mux node {node} has edge probabilities summing to {sum}")]
    MuxOverflow { node: NodeId, sum: f64 },
    #[error("undeclared event `{0}`")]
    UnknownEvent(String),
    #[error(transparent)]
    Events(#[from] InstanceError),
    #[error("{choices} random choices exceed the cap of {cap}")]
    TooManyChoices { choices: usize, cap: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Literal {
    pub event: String,
    pub positive: bool,
}

impl Literal {
    pub fn pos(event: &str) -> Self {
        Literal {
            event: event.to_string(),
            positive: true,
        }
    }

    pub fn neg(event: &str) -> Self {
        Literal {
            event: event.to_string(),
            positive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Regular(String),
    Ind,
    Mux,
    Cie,
}

/// Edge annotation; which one is allowed depends on the parent's kind.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeLabel {
    Plain,
    Prob(f64),
    Cond(Vec<Literal>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub child: NodeId,
    pub label: EdgeLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrxmlNode {
    pub kind: NodeKind,
    pub edges: Vec<Edge>,
}

/// A validated PrXML tree stored as an arena; node 0 need not be the root.
#[derive(Clone, Debug, PartialEq)]
pub struct PrxmlDoc {
    nodes: Vec<PrxmlNode>,
    root: NodeId,
    events: Vec<Event>,
    parent: Vec<Option<NodeId>>,
}

/// A possible world: the regular nodes that survive, with distributional
/// nodes spliced out. Children are ordered by node id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct XmlTree {
    pub node: NodeId,
    pub label: String,
    pub children: Vec<XmlTree>,
}

impl XmlTree {
    /// Relational encoding with the same element names as [`PrxmlDoc::to_pcc`].
    pub fn to_instance(&self) -> Instance {
        fn go(t: &XmlTree, ancestors: &mut Vec<NodeId>, out: &mut Vec<Fact>) {
            let me = node_element(t.node);
            out.push(Fact::new("Label", [me.clone(), t.label.clone()]));
            if let Some(&p) = ancestors.last() {
                out.push(Fact::new("Child", [node_element(p), me.clone()]));
            }
            for &a in ancestors.iter() {
                out.push(Fact::new("Desc", [node_element(a), me.clone()]));
            }
            ancestors.push(t.node);
            for c in &t.children {
                go(c, ancestors, out);
            }
            ancestors.pop();
        }
        let mut facts = Vec::new();
        go(self, &mut Vec::new(), &mut facts);
        Instance::new(facts)
    }

    pub fn nodes(&self) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack = alloc::vec![self];
        while let Some(t) = stack.pop() {
            out.insert(t.node);
            stack.extend(t.children.iter());
        }
        out
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.label == label || self.children.iter().any(|c| c.contains_label(label))
    }
}

impl fmt::Display for XmlTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Element name standing for a document node in relational encodings.
pub fn node_element(n: NodeId) -> String {
    alloc::format!("#{n}")
}

/// Schema of the relational encoding.
pub fn schema() -> Schema {
    Schema::new([("Label", 2), ("Child", 2), ("Desc", 2)]).expect("static schema")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopeReport {
    pub event_scopes: BTreeMap<String, BTreeSet<NodeId>>,
    /// Number of events whose scope contains each node.
    pub node_scope_sizes: Vec<usize>,
    pub max_node_scope: usize,
}

/// Output of [`PrxmlDoc::to_pcc_in`].
#[derive(Clone, Debug)]
pub struct Encoding<W> {
    pub instance: PCCInstance,
    /// Event probabilities aligned with `instance.events()`, computed in `W`.
    pub probs: Vec<W>,
    /// Element naming each regular node; `None` for distributional nodes.
    pub node_elements: Vec<Option<String>>,
}

type Forests<W> = BTreeMap<Vec<XmlTree>, W>;

impl PrxmlDoc {
    pub fn new(
        nodes: Vec<PrxmlNode>,
        root: NodeId,
        events: Vec<Event>,
    ) -> Result<Self, PrxmlError> {
        let n = nodes.len();
        if root >= n {
            return Err(PrxmlError::UnknownNode(root));
        }
        if !matches!(nodes[root].kind, NodeKind::Regular(_)) {
            return Err(PrxmlError::RootNotRegular);
        }
        for e in &events {
            crate::instances::check_prob(&e.name, e.prob)?;
        }
        crate::instances::check_event_names(events.iter().map(|e| e.name.as_str()))?;
        let names: BTreeSet<&str> = events.iter().map(|e| e.name.as_str()).collect();
        let mut parent = alloc::vec![None; n];
        for (p, node) in nodes.iter().enumerate() {
            let mut mux_sum = 0.0;
            for e in &node.edges {
                let c = e.child;
                if c >= n {
                    return Err(PrxmlError::UnknownNode(c));
                }
                if c == root || parent[c].is_some() {
                    return Err(PrxmlError::NotATree(c));
                }
                parent[c] = Some(p);
                let bad = |msg| PrxmlError::BadEdge {
                    parent: p,
                    child: c,
                    msg,
                };
                match (&node.kind, &e.label) {
                    (NodeKind::Regular(_), EdgeLabel::Plain) => {}
                    (NodeKind::Regular(_), _) => {
                        return Err(bad("edges of regular nodes carry no label"))
                    }
                    (NodeKind::Ind | NodeKind::Mux, EdgeLabel::Prob(prob)) => {
                        if !(0.0..=1.0).contains(prob) {
                            return Err(PrxmlError::BadProbability {
                                parent: p,
                                child: c,
                                prob: *prob,
                            });
                        }
                        mux_sum += prob;
                    }
                    (NodeKind::Ind | NodeKind::Mux, _) => {
                        return Err(bad("expected a probability"))
                    }
                    (NodeKind::Cie, EdgeLabel::Cond(lits)) => {
                        if let Some(l) = lits.iter().find(|l| !names.contains(l.event.as_str())) {
                            return Err(PrxmlError::UnknownEvent(l.event.clone()));
                        }
                    }
                    (NodeKind::Cie, _) => return Err(bad("expected a conjunction of literals")),
                }
            }
            if node.kind == NodeKind::Mux && mux_sum > 1.0 + MUX_TOLERANCE {
                return Err(PrxmlError::MuxOverflow {
                    node: p,
                    sum: mux_sum,
                });
            }
        }
        // every node must reach the root through parents
        let mut reach = alloc::vec![false; n];
        reach[root] = true;
        let mut stack = alloc::vec![root];
        while let Some(v) = stack.pop() {
            for e in &nodes[v].edges {
                if !reach[e.child] {
                    reach[e.child] = true;
                    stack.push(e.child);
                }
            }
        }
        if let Some(v) = reach.iter().position(|r| !r) {
            return Err(PrxmlError::Unreachable(v));
        }
        Ok(PrxmlDoc {
            nodes,
            root,
            events,
            parent,
        })
    }

    pub fn nodes(&self) -> &[PrxmlNode] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.parent[n]
    }

    /// Events, ind edges and mux nodes: the independent random choices.
    pub fn choice_count(&self) -> usize {
        self.events.len()
            + self
                .nodes
                .iter()
                .map(|n| match n.kind {
                    NodeKind::Ind => n.edges.len(),
                    NodeKind::Mux => 1,
                    _ => 0,
                })
                .sum::<usize>()
    }

    /// Distribution over possible worlds, with equal worlds merged, sorted
    /// by world.
    pub fn enumerate_documents(&self, cap: usize) -> Result<Vec<(XmlTree, f64)>, PrxmlError> {
        self.enumerate_documents_in::<f64>(cap)
    }

    pub fn enumerate_documents_in<W: Weight>(
        &self,
        cap: usize,
    ) -> Result<Vec<(XmlTree, W)>, PrxmlError> {
        let choices = self.choice_count();
        if choices > cap || self.events.len() >= usize::BITS as usize {
            return Err(PrxmlError::TooManyChoices { choices, cap });
        }
        let mut total: BTreeMap<XmlTree, W> = BTreeMap::new();
        let index: BTreeMap<&str, usize> = self
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.as_str(), i))
            .collect();
        crate::instances::for_each_valuation::<W>(&self.events, cap, |bits, w| {
            let lit = |l: &Literal| bits[index[l.event.as_str()]] == l.positive;
            for (mut forest, pw) in self.forests::<W>(self.root, &lit) {
                let tree = forest.pop().expect("the root is regular");
                let entry = total.entry(tree).or_insert_with(W::zero);
                *entry = entry.add(&w.mul(&pw));
            }
        })?;
        Ok(total.into_iter().filter(|(_, w)| !w.is_zero()).collect())
    }

    /// Distribution of the forest `n` contributes to its nearest regular
    /// ancestor, given the event literals' truth values.
    fn forests<W: Weight>(&self, n: NodeId, lit: &impl Fn(&Literal) -> bool) -> Forests<W> {
        let node = &self.nodes[n];
        let single = |f: Vec<XmlTree>| -> Forests<W> { [(f, W::one())].into_iter().collect() };
        match &node.kind {
            NodeKind::Regular(label) => {
                let mut acc = single(Vec::new());
                for e in &node.edges {
                    acc = product(&acc, &self.forests(e.child, lit));
                }
                acc.into_iter()
                    .map(|(children, w)| {
                        let tree = XmlTree {
                            node: n,
                            label: label.clone(),
                            children,
                        };
                        (alloc::vec![tree], w)
                    })
                    .collect()
            }
            NodeKind::Ind => {
                let mut acc = single(Vec::new());
                for e in &node.edges {
                    let p = W::from_prob(prob_of(&e.label));
                    let mut d = scale(&self.forests(e.child, lit), &p);
                    add_into(&mut d, Vec::new(), p.complement());
                    acc = product(&acc, &d);
                }
                acc
            }
            NodeKind::Mux => {
                let mut acc = Forests::new();
                let mut none = W::one();
                for e in &node.edges {
                    let p = W::from_prob(prob_of(&e.label));
                    none = none.sub(&p);
                    for (f, w) in scale(&self.forests(e.child, lit), &p) {
                        add_into(&mut acc, f, w);
                    }
                }
                if none.to_f64() > 0.0 {
                    add_into(&mut acc, Vec::new(), none);
                }
                acc
            }
            NodeKind::Cie => {
                let mut acc = single(Vec::new());
                for e in &node.edges {
                    let EdgeLabel::Cond(lits) = &e.label else {
                        unreachable!("validated")
                    };
                    if lits.iter().all(lit) {
                        acc = product(&acc, &self.forests(e.child, lit));
                    }
                }
                acc
            }
        }
    }

    /// Event scopes: for each event, the strict descendants of the lowest
    /// common ancestor of the cie nodes using it that are ancestors-or-self
    /// or descendants of one of those cie nodes.
    pub fn compute_scopes(&self) -> ScopeReport {
        let mut occurrences: BTreeMap<&str, BTreeSet<NodeId>> = self
            .events
            .iter()
            .map(|e| (e.name.as_str(), BTreeSet::new()))
            .collect();
        for (id, node) in self.nodes.iter().enumerate() {
            if node.kind == NodeKind::Cie {
                for e in &node.edges {
                    if let EdgeLabel::Cond(lits) = &e.label {
                        for l in lits {
                            occurrences.entry(l.event.as_str()).or_default().insert(id);
                        }
                    }
                }
            }
        }
        let depth = self.depths();
        let mut event_scopes = BTreeMap::new();
        let mut node_scope_sizes = alloc::vec![0; self.nodes.len()];
        for (event, occ) in occurrences {
            let mut scope = BTreeSet::new();
            if let Some(lca) = occ.iter().copied().reduce(|a, b| self.lca(&depth, a, b)) {
                for &o in &occ {
                    let mut v = o;
                    while v != lca {
                        scope.insert(v);
                        v = self.parent[v].expect("lca is an ancestor");
                    }
                    let mut stack: Vec<NodeId> =
                        self.nodes[o].edges.iter().map(|e| e.child).collect();
                    while let Some(d) = stack.pop() {
                        if scope.insert(d) {
                            stack.extend(self.nodes[d].edges.iter().map(|e| e.child));
                        }
                    }
                }
                // a single occurrence is its own lowest common ancestor
                scope.remove(&lca);
            }
            for &n in &scope {
                node_scope_sizes[n] += 1;
            }
            event_scopes.insert(event.to_string(), scope);
        }
        let max_node_scope = node_scope_sizes.iter().copied().max().unwrap_or(0);
        ScopeReport {
            event_scopes,
            node_scope_sizes,
            max_node_scope,
        }
    }

    fn depths(&self) -> Vec<usize> {
        let mut depth = alloc::vec![0; self.nodes.len()];
        let mut stack = alloc::vec![self.root];
        while let Some(v) = stack.pop() {
            for e in &self.nodes[v].edges {
                depth[e.child] = depth[v] + 1;
                stack.push(e.child);
            }
        }
        depth
    }

    fn lca(&self, depth: &[usize], mut a: NodeId, mut b: NodeId) -> NodeId {
        while depth[a] > depth[b] {
            a = self.parent[a].expect("not the root");
        }
        while depth[b] > depth[a] {
            b = self.parent[b].expect("not the root");
        }
        while a != b {
            a = self.parent[a].expect("not the root");
            b = self.parent[b].expect("not the root");
        }
        a
    }

    /// Relational encoding as a pcc-instance with double-precision event
    /// probabilities.
    pub fn to_pcc(&self) -> Encoding<f64> {
        self.to_pcc_in::<f64>()
    }

    /// Relational encoding; fresh events for ind edges and mux chains are
    /// appended after the document's events, with probabilities computed
    /// in `W`.
    pub fn to_pcc_in<W: Weight>(&self) -> Encoding<W> {
        let mut names: Vec<String> = self.events.iter().map(|e| e.name.clone()).collect();
        let mut probs: Vec<W> = self.events.iter().map(|e| W::from_prob(e.prob)).collect();
        let mut taken: BTreeSet<String> = names.iter().cloned().collect();
        let mut fresh = Vec::new();
        let fresh_name = |base: String, taken: &mut BTreeSet<String>| {
            let mut name = base;
            while taken.contains(&name) {
                name.push('\'');
            }
            taken.insert(name.clone());
            name
        };
        // fresh events first, so input gates can be created up front
        let mut edge_event: BTreeMap<(NodeId, usize), usize> = BTreeMap::new();
        for (id, node) in self.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Ind => {
                    for (i, e) in node.edges.iter().enumerate() {
                        let name = fresh_name(alloc::format!("ind{id}.{i}"), &mut taken);
                        edge_event.insert((id, i), names.len() + fresh.len());
                        fresh.push((name, W::from_prob(prob_of(&e.label))));
                    }
                }
                NodeKind::Mux => {
                    let mut remaining = W::one();
                    for (i, e) in node.edges.iter().enumerate() {
                        let p = W::from_prob(prob_of(&e.label));
                        // once the prefix has used up all the mass, later edges are impossible
                        let cond = if remaining.to_f64() <= 0.0 {
                            W::zero()
                        } else {
                            clamp01(p.div(&remaining))
                        };
                        remaining = remaining.sub(&p);
                        let name = fresh_name(alloc::format!("mux{id}.{i}"), &mut taken);
                        edge_event.insert((id, i), names.len() + fresh.len());
                        fresh.push((name, cond));
                    }
                }
                _ => {}
            }
        }
        for (name, p) in fresh {
            names.push(name);
            probs.push(p);
        }
        let mut b = CircuitBuilder::new(names.clone());
        let inputs: Vec<GateId> = (0..names.len()).map(|i| b.input(i)).collect();
        let index: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut negated: BTreeMap<usize, GateId> = BTreeMap::new();
        let mut neg = |b: &mut CircuitBuilder, i: usize| {
            *negated.entry(i).or_insert_with(|| b.not(inputs[i]))
        };
        let mut cond: Vec<Option<GateId>> = alloc::vec![None; self.nodes.len()];
        let mut truth: Option<GateId> = None;
        let mut facts = Vec::new();
        let mut node_elements = alloc::vec![None; self.nodes.len()];
        // (node, condition, regular ancestors)
        let mut stack: Vec<(NodeId, Option<GateId>, Vec<NodeId>)> =
            alloc::vec![(self.root, None, Vec::new())];
        while let Some((n, c, ancestors)) = stack.pop() {
            cond[n] = c;
            let node = &self.nodes[n];
            let mut below = ancestors.clone();
            if let NodeKind::Regular(label) = &node.kind {
                let ann = match c {
                    Some(g) => g,
                    None => *truth.get_or_insert_with(|| b.push(Gate::And(Vec::new()))),
                };
                let me = node_element(n);
                facts.push((Fact::new("Label", [me.clone(), label.clone()]), ann));
                if let Some(&p) = ancestors.last() {
                    facts.push((Fact::new("Child", [node_element(p), me.clone()]), ann));
                }
                for &a in &ancestors {
                    facts.push((Fact::new("Desc", [node_element(a), me.clone()]), ann));
                }
                node_elements[n] = Some(me);
                below.push(n);
            }
            let mut not_before: Option<GateId> = None;
            for (i, e) in node.edges.iter().enumerate() {
                let mut lits: Vec<GateId> = c.into_iter().collect();
                match &node.kind {
                    NodeKind::Regular(_) => {}
                    NodeKind::Ind => lits.push(inputs[edge_event[&(n, i)]]),
                    NodeKind::Mux => {
                        let ev = edge_event[&(n, i)];
                        lits.extend(not_before);
                        lits.push(inputs[ev]);
                        let ne = neg(&mut b, ev);
                        not_before = Some(match not_before {
                            Some(x) => b.and_chain(&[x, ne]),
                            None => ne,
                        });
                    }
                    NodeKind::Cie => {
                        let EdgeLabel::Cond(ls) = &e.label else {
                            unreachable!("validated")
                        };
                        for l in ls {
                            let i = index[l.event.as_str()];
                            lits.push(if l.positive {
                                inputs[i]
                            } else {
                                neg(&mut b, i)
                            });
                        }
                    }
                }
                let child_cond = match lits.len() {
                    0 => None,
                    _ => Some(b.and_chain(&lits)),
                };
                stack.push((e.child, child_cond, below.clone()));
            }
        }
        let circuit = b.finish(None);
        let events: Vec<Event> = names
            .iter()
            .zip(&probs)
            .map(|(n, p)| Event::new(n, p.to_f64().clamp(0.0, 1.0)))
            .collect();
        let instance =
            PCCInstance::new(schema(), facts, circuit, events).expect("encoding is well-formed");
        Encoding {
            instance,
            probs,
            node_elements,
        }
    }

    /// Probability that `q` (over `Label`, `Child`, `Desc`) holds, through
    /// the pcc encoding.
    pub fn query_probability(&self, q: &Query) -> Result<(f64, Diagnostics), ProbError> {
        prob_query::<f64>(&self.to_pcc().instance, q, Options::default())
    }

    /// Same probability by evaluating `q` on every enumerated world.
    pub fn query_probability_bruteforce(&self, q: &Query, cap: usize) -> Result<f64, PrxmlError> {
        Ok(self
            .enumerate_documents(cap)?
            .iter()
            .filter(|(t, _)| q.holds(&t.to_instance()))
            .map(|(_, p)| p)
            .sum())
    }
}

fn prob_of(l: &EdgeLabel) -> f64 {
    match l {
        EdgeLabel::Prob(p) => *p,
        _ => unreachable!("validated"),
    }
}

fn clamp01<W: Weight>(w: W) -> W {
    if w.to_f64() > 1.0 {
        W::one()
    } else {
        w
    }
}

fn add_into<W: Weight>(d: &mut Forests<W>, f: Vec<XmlTree>, w: W) {
    let e = d.entry(f).or_insert_with(W::zero);
    *e = e.add(&w);
}

fn scale<W: Weight>(d: &Forests<W>, p: &W) -> Forests<W> {
    d.iter().map(|(f, w)| (f.clone(), w.mul(p))).collect()
}

fn product<W: Weight>(a: &Forests<W>, b: &Forests<W>) -> Forests<W> {
    let mut out = Forests::new();
    for (fa, wa) in a {
        for (fb, wb) in b {
            let mut f = fa.clone();
            f.extend(fb.iter().cloned());
            f.sort();
            add_into(&mut out, f, wa.mul(wb));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;
    use alloc::vec;
    use num_rational::BigRational;

    fn regular(label: &str, children: &[NodeId]) -> PrxmlNode {
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

    fn dist(kind: NodeKind, edges: Vec<(NodeId, EdgeLabel)>) -> PrxmlNode {
        PrxmlNode {
            kind,
            edges: edges
                .into_iter()
                .map(|(child, label)| Edge { child, label })
                .collect(),
        }
    }

    fn jane() -> EdgeLabel {
        EdgeLabel::Cond(vec![Literal::pos("e_Jane")])
    }

    /// The Chelsea Manning document.
    fn example() -> PrxmlDoc {
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

    fn prob_where(doc: &PrxmlDoc, pred: impl Fn(&XmlTree) -> bool) -> f64 {
        doc.enumerate_documents(20)
            .unwrap()
            .iter()
            .filter(|(t, _)| pred(t))
            .map(|(_, p)| p)
            .sum()
    }

    #[test]
    fn example_worlds() {
        let doc = example();
        let worlds = doc.enumerate_documents(20).unwrap();
        let total: f64 = worlds.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(worlds.len(), 8);
        assert!((prob_where(&doc, |t| t.contains_label("Manning")) - 0.9).abs() < 1e-12);
        assert!((prob_where(&doc, |t| t.contains_label("Chelsea")) - 0.6).abs() < 1e-12);
        assert!((prob_where(&doc, |t| t.contains_label("Bradley")) - 0.4).abs() < 1e-12);
        let both = prob_where(&doc, |t| {
            t.contains_label("Manning") && t.contains_label("Crescent")
        });
        assert!((both - 0.9).abs() < 1e-12);
        let bare = worlds
            .iter()
            .find(|(t, _)| t.to_string() == "Q298423(given name(Bradley), surname, place of birth)")
            .expect("world present");
        assert!((bare.1 - 0.024).abs() < 1e-12);
    }

    #[test]
    fn example_scopes() {
        let r = example().compute_scopes();
        let expected: BTreeSet<NodeId> = [5, 6, 7, 8, 9, 10].into_iter().collect();
        assert_eq!(r.event_scopes["e_Jane"], expected);
        assert_eq!(r.max_node_scope, 1);
        assert_eq!(r.node_scope_sizes[0], 0);
        assert_eq!(r.node_scope_sizes[13], 0);
    }

    #[test]
    fn single_occurrence_scope_is_the_subtree_below() {
        let nodes = vec![
            regular("r", &[1]),
            dist(
                NodeKind::Cie,
                vec![(2, EdgeLabel::Cond(vec![Literal::neg("e")]))],
            ),
            regular("a", &[3]),
            regular("b", &[]),
        ];
        let doc = PrxmlDoc::new(
            nodes,
            0,
            vec![Event::new("e", 0.3), Event::new("unused", 0.5)],
        )
        .unwrap();
        let r = doc.compute_scopes();
        assert_eq!(r.event_scopes["e"], [2, 3].into_iter().collect());
        assert!(r.event_scopes["unused"].is_empty());
        assert!((prob_where(&doc, |t| t.contains_label("a")) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn example_queries_through_the_encoding() {
        let doc = example();
        let s = schema();
        for (text, expected) in [
            ("exists x. Label(x, Manning)", 0.9),
            ("exists x. Label(x, Chelsea)", 0.6),
            (
                "exists x y. Child(x, y) & Label(x, occupation) & Label(y, musician)",
                0.4,
            ),
            ("exists x y. Label(x, Manning) & Label(y, Crescent)", 0.9),
            (
                "exists x y. Desc(x, y) & Label(x, Q298423) & Label(y, musician)",
                0.4,
            ),
        ] {
            let q = parse_query(text, &s).unwrap();
            let (p, _) = doc.query_probability(&q).unwrap();
            assert!((p - expected).abs() < 1e-9, "{text}: {p}");
            let b = doc.query_probability_bruteforce(&q, 20).unwrap();
            assert!((b - expected).abs() < 1e-9, "{text}: {b}");
        }
    }

    #[test]
    fn mux_chain_probabilities() {
        let nodes = vec![
            regular("r", &[1]),
            dist(
                NodeKind::Mux,
                vec![(2, EdgeLabel::Prob(0.4)), (3, EdgeLabel::Prob(0.6))],
            ),
            regular("a", &[]),
            regular("b", &[]),
        ];
        let doc = PrxmlDoc::new(nodes, 0, vec![]).unwrap();
        let enc = doc.to_pcc();
        assert_eq!(enc.probs.len(), 2);
        assert!((enc.probs[0] - 0.4).abs() < 1e-12);
        assert!((enc.probs[1] - 1.0).abs() < 1e-12);
        let exact = doc.to_pcc_in::<BigRational>();
        assert_eq!(exact.probs[1], BigRational::from_integer(1.into()));
    }

    #[test]
    fn no_distributional_nodes() {
        let doc = PrxmlDoc::new(vec![regular("r", &[1]), regular("a", &[])], 0, vec![]).unwrap();
        assert_eq!(doc.enumerate_documents(4).unwrap().len(), 1);
        let enc = doc.to_pcc();
        let g = enc.instance.facts()[0].1;
        assert!(enc.instance.facts().iter().all(|(_, x)| *x == g));
        assert_eq!(enc.instance.circuit().gate(g), &Gate::And(vec![]));
    }

    #[test]
    fn validation() {
        assert_eq!(
            PrxmlDoc::new(vec![dist(NodeKind::Ind, vec![])], 0, vec![]),
            Err(PrxmlError::RootNotRegular)
        );
        let over = vec![
            regular("r", &[1]),
            dist(
                NodeKind::Mux,
                vec![(2, EdgeLabel::Prob(0.7)), (3, EdgeLabel::Prob(0.6))],
            ),
            regular("a", &[]),
            regular("b", &[]),
        ];
        assert!(matches!(
            PrxmlDoc::new(over, 0, vec![]),
            Err(PrxmlError::MuxOverflow { node: 1, .. })
        ));
        let unknown = vec![
            regular("r", &[1]),
            dist(
                NodeKind::Cie,
                vec![(2, EdgeLabel::Cond(vec![Literal::pos("z")]))],
            ),
            regular("a", &[]),
        ];
        assert_eq!(
            PrxmlDoc::new(unknown, 0, vec![]),
            Err(PrxmlError::UnknownEvent("z".into()))
        );
        let dag = vec![regular("r", &[1, 2]), regular("a", &[2]), regular("b", &[])];
        assert_eq!(PrxmlDoc::new(dag, 0, vec![]), Err(PrxmlError::NotATree(2)));
        let orphan = vec![regular("r", &[]), regular("a", &[])];
        assert_eq!(
            PrxmlDoc::new(orphan, 0, vec![]),
            Err(PrxmlError::Unreachable(1))
        );
        assert!(matches!(
            example().enumerate_documents(2),
            Err(PrxmlError::TooManyChoices { .. })
        ));
    }
}
