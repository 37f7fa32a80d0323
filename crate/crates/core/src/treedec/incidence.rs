use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::circuits::GateId;
use crate::graph::Graph;
use crate::instances::{CInstance, Fact, PCCInstance};

/// Vertex kinds of an incidence graph.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Vertex {
    Element(String),
    /// Index into the instance's fact list.
    Fact(usize),
    Gate(GateId),
}

/// Incidence graph of an instance: domain elements, one vertex per fact
/// adjacent to its arguments and, for pcc-instances, circuit gates adjacent to
/// their inputs and to the facts they annotate.
///
/// Vertex ids are dense: elements in lexicographic order, then facts, then
/// gates.
#[derive(Clone, Debug)]
pub struct IncidenceGraph {
    graph: Graph,
    vertices: Vec<Vertex>,
    element_ids: BTreeMap<String, usize>,
    facts: Vec<Fact>,
    fact_vertex: Vec<usize>,
    fact_args: Vec<Vec<usize>>,
    fact_gate: Vec<Option<GateId>>,
    gate_vertex: Vec<usize>,
}

impl IncidenceGraph {
    /// Graph of a certain set of facts (no gate vertices).
    pub fn from_facts(facts: &[Fact]) -> Self {
        Self::build(facts, None)
    }

    fn build(facts: &[Fact], gates: Option<(&[GateId], &crate::circuits::Circuit)>) -> Self {
        let mut names: Vec<&str> = facts
            .iter()
            .flat_map(|f| f.args.iter().map(String::as_str))
            .collect();
        names.sort_unstable();
        names.dedup();
        let mut vertices: Vec<Vertex> = names
            .iter()
            .map(|n| Vertex::Element(n.to_string()))
            .collect();
        let element_ids: BTreeMap<String, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.to_string(), i))
            .collect();
        let mut fact_vertex = Vec::with_capacity(facts.len());
        let mut fact_args = Vec::with_capacity(facts.len());
        for (i, f) in facts.iter().enumerate() {
            fact_vertex.push(vertices.len());
            vertices.push(Vertex::Fact(i));
            fact_args.push(f.args.iter().map(|a| element_ids[a]).collect::<Vec<_>>());
        }
        let mut gate_vertex = Vec::new();
        if let Some((_, circuit)) = gates {
            for g in 0..circuit.len() {
                gate_vertex.push(vertices.len());
                vertices.push(Vertex::Gate(g));
            }
        }
        let mut graph = Graph::new(vertices.len());
        for (i, args) in fact_args.iter().enumerate() {
            for &a in args {
                graph.push_edge(fact_vertex[i], a);
            }
        }
        let mut fact_gate = alloc::vec![None; facts.len()];
        if let Some((links, circuit)) = gates {
            for (i, &g) in links.iter().enumerate() {
                graph.push_edge(fact_vertex[i], gate_vertex[g]);
                fact_gate[i] = Some(g);
            }
            let cg = circuit.gate_graph();
            for (a, b) in cg.edges() {
                graph.push_edge(gate_vertex[a], gate_vertex[b]);
            }
        }
        graph.normalize();
        IncidenceGraph {
            graph,
            vertices,
            element_ids,
            facts: facts.to_vec(),
            fact_vertex,
            fact_args,
            fact_gate,
            gate_vertex,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Vertex {
        &self.vertices[v]
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn element(&self, name: &str) -> Option<usize> {
        self.element_ids.get(name).copied()
    }

    pub fn element_count(&self) -> usize {
        self.element_ids.len()
    }

    pub fn fact_vertex(&self, fact: usize) -> usize {
        self.fact_vertex[fact]
    }

    /// Element vertex at each argument position of `fact`.
    pub fn fact_args(&self, fact: usize) -> &[usize] {
        &self.fact_args[fact]
    }

    pub fn fact_gate(&self, fact: usize) -> Option<GateId> {
        self.fact_gate[fact]
    }

    pub fn gate_vertex(&self, gate: GateId) -> Option<usize> {
        self.gate_vertex.get(gate).copied()
    }

    pub fn gate_count(&self) -> usize {
        self.gate_vertex.len()
    }

    /// Fact index if `v` is a fact vertex.
    pub fn as_fact(&self, v: usize) -> Option<usize> {
        match self.vertices[v] {
            Vertex::Fact(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_gate(&self, v: usize) -> Option<GateId> {
        match self.vertices[v] {
            Vertex::Gate(g) => Some(g),
            _ => None,
        }
    }

    pub fn is_element(&self, v: usize) -> bool {
        matches!(self.vertices[v], Vertex::Element(_))
    }

    /// Name of an element vertex.
    pub fn element_name(&self, v: usize) -> Option<&str> {
        match &self.vertices[v] {
            Vertex::Element(n) => Some(n),
            _ => None,
        }
    }

    /// Human-readable vertex label: element names as is, `f<i>:R(a,b)` for
    /// facts and `g<i>` for gates.
    pub fn label(&self, v: usize) -> String {
        match &self.vertices[v] {
            Vertex::Element(n) => n.clone(),
            Vertex::Fact(i) => alloc::format!("f{i}:{}", self.facts[*i]),
            Vertex::Gate(g) => alloc::format!("g{g}"),
        }
    }
}

/// Incidence graph of the underlying instance of a c-instance (annotations ignored).
pub fn build_graph(inst: &CInstance) -> IncidenceGraph {
    let facts: Vec<Fact> = inst.facts().iter().map(|(f, _)| f.clone()).collect();
    IncidenceGraph::from_facts(&facts)
}

/// Joint incidence graph of a pcc-instance and its annotation circuit.
pub fn build_joint_graph(inst: &PCCInstance) -> IncidenceGraph {
    let facts: Vec<Fact> = inst.facts().iter().map(|(f, _)| f.clone()).collect();
    let links: Vec<GateId> = inst.facts().iter().map(|(_, g)| *g).collect();
    IncidenceGraph::build(&facts, Some((&links, inst.circuit())))
}
