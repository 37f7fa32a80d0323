//! Boolean circuits over event inputs, and lineage construction.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::graph::Graph;
use crate::instances::Valuation;

mod lineage;

pub use lineage::{
    build_lineage, build_lineage_one_hot, Construction, LineageError, LineageResult, LineageStats,
};

pub type GateId = usize;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gate {
    /// Input bound to the event at this index of [`Circuit::events`].
    Input(usize),
    Const(bool),
    And(Vec<GateId>),
    Or(Vec<GateId>),
    Not(GateId),
}

impl Gate {
    pub fn inputs(&self) -> &[GateId] {
        match self {
            Gate::And(xs) | Gate::Or(xs) => xs,
            Gate::Not(x) => core::slice::from_ref(x),
            Gate::Input(_) | Gate::Const(_) => &[],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Gate::Input(_) => "input",
            Gate::Const(_) => "const",
            Gate::And(_) => "and",
            Gate::Or(_) => "or",
            Gate::Not(_) => "not",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("gate {gate} references gate {arg}, which is not an earlier gate")]
    BadReference { gate: GateId, arg: GateId },
    #[error("gate {gate} reads undeclared event index {event}")]
    BadInput { gate: GateId, event: usize },
    #[error("duplicate event `{0}`")]
    DuplicateEvent(String),
    #[error("output gate {0} does not exist")]
    BadOutput(GateId),
    #[error("circuit has no output gate")]
    MissingOutput,
    #[error("valuation does not bind event `{0}`")]
    UnboundEvent(String),
}

/// A Boolean DAG whose gates only reference earlier gates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    events: Vec<String>,
    gates: Vec<Gate>,
    output: Option<GateId>,
}

impl Circuit {
    pub fn new(
        events: Vec<String>,
        gates: Vec<Gate>,
        output: Option<GateId>,
    ) -> Result<Self, CircuitError> {
        let mut seen = BTreeSet::new();
        for e in &events {
            if !seen.insert(e.as_str()) {
                return Err(CircuitError::DuplicateEvent(e.clone()));
            }
        }
        for (id, g) in gates.iter().enumerate() {
            if let Gate::Input(ev) = g {
                if *ev >= events.len() {
                    return Err(CircuitError::BadInput {
                        gate: id,
                        event: *ev,
                    });
                }
            }
            if let Some(&arg) = g.inputs().iter().find(|&&a| a >= id) {
                return Err(CircuitError::BadReference { gate: id, arg });
            }
        }
        if let Some(o) = output {
            if o >= gates.len() {
                return Err(CircuitError::BadOutput(o));
            }
        }
        Ok(Circuit {
            events,
            gates,
            output,
        })
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id]
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn output(&self) -> Option<GateId> {
        self.output
    }

    /// Values of every gate under `bits`, aligned with [`Circuit::events`].
    pub fn evaluate_all(&self, bits: &[bool]) -> Vec<bool> {
        let mut val: Vec<bool> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let v = match g {
                Gate::Input(e) => bits[*e],
                Gate::Const(c) => *c,
                Gate::And(xs) => xs.iter().all(|&x| val[x]),
                Gate::Or(xs) => xs.iter().any(|&x| val[x]),
                Gate::Not(x) => !val[*x],
            };
            val.push(v);
        }
        val
    }

    /// Value of the output gate under `bits`.
    pub fn evaluate_bits(&self, bits: &[bool]) -> Result<bool, CircuitError> {
        let out = self.output.ok_or(CircuitError::MissingOutput)?;
        Ok(self.evaluate_all(bits)[out])
    }

    pub fn evaluate(&self, v: &Valuation) -> Result<bool, CircuitError> {
        let bits = self
            .events
            .iter()
            .map(|e| {
                v.get(e)
                    .ok_or_else(|| CircuitError::UnboundEvent(e.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.evaluate_bits(&bits)
    }

    /// Gates the output depends on (all gates when there is no output).
    pub fn output_cone(&self) -> Vec<bool> {
        let mut live = alloc::vec![self.output.is_none(); self.gates.len()];
        if let Some(o) = self.output {
            live[o] = true;
            for id in (0..self.gates.len()).rev() {
                if live[id] {
                    for &x in self.gates[id].inputs() {
                        live[x] = true;
                    }
                }
            }
        }
        live
    }

    /// True iff no `not` gate and no `const(false)` feeds the output.
    pub fn is_monotone(&self) -> bool {
        let live = self.output_cone();
        self.gates
            .iter()
            .zip(live)
            .all(|(g, l)| !l || !matches!(g, Gate::Not(_) | Gate::Const(false)))
    }

    /// Gate graph: an edge between each gate and each of its inputs, plus
    /// edges between the inputs of a common gate, so that every gate's
    /// neighbourhood scope is a clique.
    pub fn gate_graph(&self) -> Graph {
        let mut g = Graph::new(self.gates.len());
        for (id, gate) in self.gates.iter().enumerate() {
            let ins = gate.inputs();
            for (i, &x) in ins.iter().enumerate() {
                g.push_edge(id, x);
                for &y in &ins[i + 1..] {
                    g.push_edge(x, y);
                }
            }
        }
        g.normalize();
        g
    }

    /// Deterministic DOT rendering; node `g<i>` is gate `i`.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph circuit {\n");
        for (id, g) in self.gates.iter().enumerate() {
            let label = match g {
                Gate::Input(e) => self.events[*e].replace('"', "\\\""),
                Gate::Const(c) => c.to_string(),
                other => other.kind().to_string(),
            };
            let shape = if Some(id) == self.output {
                "doublecircle"
            } else if matches!(g, Gate::Input(_)) {
                "box"
            } else {
                "circle"
            };
            let _ = writeln!(s, "  g{id} [label=\"{label}\", shape={shape}];");
        }
        for (id, g) in self.gates.iter().enumerate() {
            for x in g.inputs() {
                let _ = writeln!(s, "  g{x} -> g{id};");
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Append-only circuit construction; gate ids are assigned in order, so
/// references always point backwards.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    events: Vec<String>,
    gates: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new(events: Vec<String>) -> Self {
        CircuitBuilder {
            events,
            gates: Vec::new(),
        }
    }

    pub fn from_circuit(c: Circuit) -> Self {
        CircuitBuilder {
            events: c.events,
            gates: c.gates,
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) -> GateId {
        debug_assert!(g.inputs().iter().all(|&x| x < self.gates.len()));
        self.gates.push(g);
        self.gates.len() - 1
    }

    pub fn input(&mut self, event: usize) -> GateId {
        self.push(Gate::Input(event))
    }

    pub fn constant(&mut self, value: bool) -> GateId {
        self.push(Gate::Const(value))
    }

    pub fn not(&mut self, x: GateId) -> GateId {
        self.push(Gate::Not(x))
    }

    /// Binary `and` chain over `xs`; a single input is returned as is.
    pub fn and_chain(&mut self, xs: &[GateId]) -> GateId {
        self.chain(xs, Gate::And)
    }

    /// Binary `or` chain over `xs`; a single input is returned as is.
    pub fn or_chain(&mut self, xs: &[GateId]) -> GateId {
        self.chain(xs, Gate::Or)
    }

    fn chain(&mut self, xs: &[GateId], mk: fn(Vec<GateId>) -> Gate) -> GateId {
        match xs {
            [] => self.push(mk(Vec::new())),
            [x] => *x,
            [x, rest @ ..] => {
                let mut acc = *x;
                for &y in rest {
                    acc = self.push(mk(alloc::vec![acc, y]));
                }
                acc
            }
        }
    }

    pub fn finish(self, output: Option<GateId>) -> Circuit {
        Circuit {
            events: self.events,
            gates: self.gates,
            output,
        }
    }
}
