//! JSON file formats for instances, circuits, decompositions, posets and
//! PrXML documents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use uncertain_core::instances::{Annotation, Event, Fact, PCInstance, Schema, TIDInstance};
use uncertain_core::porder::LabeledPoset;
use uncertain_core::prxml::{Edge, EdgeLabel, Literal, NodeKind, PrxmlDoc, PrxmlNode};
use uncertain_core::treedec::IncidenceGraph;
use uncertain_core::{Circuit, Gate, PCCInstance, TreeDecomposition};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationJson {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventJson {
    pub name: String,
    pub prob: f64,
}

/// A fact carries exactly one of `ann` (pc-instances), `prob`
/// (tuple-independent instances) or `gate` (pcc-instances).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactJson {
    pub rel: String,
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ann: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub schema: Vec<RelationJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitJson>,
    pub facts: Vec<FactJson>,
}

/// `input` gates take the event index as their single argument; `const`
/// gates take 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateJson {
    pub id: usize,
    pub kind: String,
    #[serde(default)]
    pub args: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitJson {
    pub gates: Vec<GateJson>,
    #[serde(default)]
    pub output: Option<usize>,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub width: usize,
    pub bags: BTreeMap<usize, Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
    pub root: Option<usize>,
    /// Human-readable name of each vertex.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosetJson {
    pub elements: Vec<u64>,
    pub labels: BTreeMap<u64, Vec<String>>,
    #[serde(default)]
    pub edges: Vec<(u64, u64)>,
}

/// Nested PrXML node; `cond` literals are event names, negated with `!`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrxmlNodeJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<PrxmlEdgeJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrxmlEdgeJson {
    pub child: PrxmlNodeJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cond: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrxmlJson {
    #[serde(default)]
    pub events: Vec<EventJson>,
    pub root: PrxmlNodeJson,
}

/// Any input accepted where an instance is expected.
#[derive(Debug, Clone)]
pub enum Input {
    Instance(PCCInstance),
    Prxml(PrxmlDoc),
}

impl Input {
    /// The pcc-instance queries run on; PrXML documents are encoded.
    pub fn instance(&self) -> PCCInstance {
        match self {
            Input::Instance(i) => i.clone(),
            Input::Prxml(d) => d.to_pcc().instance,
        }
    }
}

fn input_error(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed JSON: {e}")))
}

/// Reads an instance file or a PrXML file (recognized by its `root` key).
pub fn parse_input(text: &str) -> Result<Input, CliError> {
    let value: serde_json::Value = parse_json(text)?;
    if value.get("root").is_some() {
        let doc: PrxmlJson = serde_json::from_value(value)
            .map_err(|e| CliError::Input(format!("bad PrXML file: {e}")))?;
        Ok(Input::Prxml(doc.to_doc()?))
    } else {
        let inst: InstanceJson = serde_json::from_value(value)
            .map_err(|e| CliError::Input(format!("bad instance file: {e}")))?;
        Ok(Input::Instance(inst.to_instance()?))
    }
}

fn events(list: &[EventJson]) -> Vec<Event> {
    list.iter().map(|e| Event::new(&e.name, e.prob)).collect()
}

impl InstanceJson {
    pub fn schema(&self) -> Result<Schema, CliError> {
        Schema::new(self.schema.iter().map(|r| (r.name.clone(), r.arity))).map_err(input_error)
    }

    /// Builds the instance; the kind is decided by which fact field is set.
    pub fn to_instance(&self) -> Result<PCCInstance, CliError> {
        let schema = self.schema()?;
        let kinds = [
            self.facts.iter().filter(|f| f.ann.is_some()).count(),
            self.facts.iter().filter(|f| f.prob.is_some()).count(),
            self.facts.iter().filter(|f| f.gate.is_some()).count(),
        ];
        let n = self.facts.len();
        let fact = |f: &FactJson| Fact::new(&f.rel, f.args.iter().cloned());
        if n > 0 && kinds[1] == n {
            if !self.events.is_empty() || self.circuit.is_some() {
                return Err(CliError::Input(
                    "tuple-independent instances take no events or circuit".into(),
                ));
            }
            let facts = self
                .facts
                .iter()
                .map(|f| (fact(f), f.prob.unwrap()))
                .collect();
            let tid = TIDInstance::new(schema, facts).map_err(input_error)?;
            return Ok(PCCInstance::from(&tid));
        }
        if let (true, Some(c)) = (kinds[2] == n, &self.circuit) {
            let circuit = c.to_circuit()?;
            let facts = self
                .facts
                .iter()
                .map(|f| (fact(f), f.gate.unwrap()))
                .collect();
            return PCCInstance::new(schema, facts, circuit, events(&self.events))
                .map_err(input_error);
        }
        if kinds[0] == n && self.circuit.is_none() {
            let facts = self
                .facts
                .iter()
                .map(|f| {
                    Ok((
                        fact(f),
                        Annotation::parse(f.ann.as_ref().unwrap()).map_err(input_error)?,
                    ))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let pc = PCInstance::new(schema, facts, events(&self.events)).map_err(input_error)?;
            return Ok(pc.to_pcc());
        }
        Err(CliError::Input(
            "every fact needs the same one of `ann`, `prob` or `gate` (`gate` requires a circuit)"
                .into(),
        ))
    }

    pub fn from_instance(inst: &PCCInstance) -> Self {
        InstanceJson {
            schema: inst
                .schema()
                .relations()
                .iter()
                .map(|r| RelationJson {
                    name: r.name.clone(),
                    arity: r.arity,
                })
                .collect(),
            events: inst
                .events()
                .iter()
                .map(|e| EventJson {
                    name: e.name.clone(),
                    prob: e.prob,
                })
                .collect(),
            circuit: Some(CircuitJson::from_circuit(inst.circuit())),
            facts: inst
                .facts()
                .iter()
                .map(|(f, g)| FactJson {
                    rel: f.relation.clone(),
                    args: f.args.clone(),
                    ann: None,
                    prob: None,
                    gate: Some(*g),
                })
                .collect(),
        }
    }
}

impl CircuitJson {
    pub fn from_circuit(c: &Circuit) -> Self {
        let gates = c
            .gates()
            .iter()
            .enumerate()
            .map(|(id, g)| GateJson {
                id,
                kind: g.kind().to_string(),
                args: match g {
                    Gate::Input(e) => vec![*e],
                    Gate::Const(b) => vec![*b as usize],
                    other => other.inputs().to_vec(),
                },
            })
            .collect();
        CircuitJson {
            gates,
            output: c.output(),
            events: c.events().to_vec(),
        }
    }

    pub fn to_circuit(&self) -> Result<Circuit, CliError> {
        let mut gates = Vec::with_capacity(self.gates.len());
        for (i, g) in self.gates.iter().enumerate() {
            if g.id != i {
                return Err(CliError::Input(format!(
                    "gate ids must be 0, 1, 2, ...; found {} at position {i}",
                    g.id
                )));
            }
            let one = || match g.args[..] {
                [x] => Ok(x),
                _ => Err(CliError::Input(format!(
                    "gate {i} ({}) takes exactly one argument",
                    g.kind
                ))),
            };
            gates.push(match g.kind.as_str() {
                "input" => Gate::Input(one()?),
                "const" => match one()? {
                    0 => Gate::Const(false),
                    1 => Gate::Const(true),
                    v => {
                        return Err(CliError::Input(format!(
                            "gate {i}: constant must be 0 or 1, got {v}"
                        )))
                    }
                },
                "not" => Gate::Not(one()?),
                "and" => Gate::And(g.args.clone()),
                "or" => Gate::Or(g.args.clone()),
                other => return Err(CliError::Input(format!("gate {i}: unknown kind `{other}`"))),
            });
        }
        Circuit::new(self.events.clone(), gates, self.output).map_err(input_error)
    }
}

impl DecompositionJson {
    pub fn new(t: &TreeDecomposition, g: Option<&IncidenceGraph>) -> Self {
        DecompositionJson {
            width: t.width(),
            bags: t.bags.iter().cloned().enumerate().collect(),
            edges: t.edges.clone(),
            root: t.root,
            vertices: g
                .map(|g| (0..g.len()).map(|v| g.label(v)).collect())
                .unwrap_or_default(),
        }
    }

    pub fn to_decomposition(&self) -> Result<TreeDecomposition, CliError> {
        let n = self.bags.len();
        if self.bags.keys().copied().ne(0..n) {
            return Err(CliError::Input("bag ids must be 0, 1, 2, ...".into()));
        }
        Ok(TreeDecomposition {
            bags: self.bags.values().cloned().collect(),
            edges: self.edges.clone(),
            root: self.root,
        })
    }
}

impl PosetJson {
    /// Elements are renumbered densely in the order they are listed.
    pub fn to_poset(&self) -> Result<LabeledPoset, CliError> {
        let index: BTreeMap<u64, usize> = self
            .elements
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, i))
            .collect();
        if index.len() != self.elements.len() {
            return Err(CliError::Input("duplicate element id".into()));
        }
        let labels = self
            .elements
            .iter()
            .map(|e| {
                self.labels
                    .get(e)
                    .cloned()
                    .ok_or_else(|| CliError::Input(format!("element {e} has no label")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(extra) = self.labels.keys().find(|k| !index.contains_key(k)) {
            return Err(CliError::Input(format!(
                "label for unknown element {extra}"
            )));
        }
        let edges = self
            .edges
            .iter()
            .map(|(a, b)| match (index.get(a), index.get(b)) {
                (Some(&x), Some(&y)) => Ok((x, y)),
                _ => Err(CliError::Input(format!(
                    "edge ({a}, {b}) mentions an unknown element"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let arity = labels.first().map_or(0, Vec::len);
        LabeledPoset::new(arity, labels, &edges).map_err(input_error)
    }

    /// Element `i` of the poset gets id `i`; edges are its covering pairs.
    pub fn from_poset(p: &LabeledPoset) -> Self {
        PosetJson {
            elements: (0..p.len() as u64).collect(),
            labels: p
                .labels()
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, l)| (i as u64, l))
                .collect(),
            edges: p
                .covers()
                .iter()
                .map(|&(a, b)| (a as u64, b as u64))
                .collect(),
        }
    }
}

impl PrxmlJson {
    /// Arena form with node ids assigned in preorder (the root is 0).
    pub fn to_doc(&self) -> Result<PrxmlDoc, CliError> {
        fn go(n: &PrxmlNodeJson, nodes: &mut Vec<PrxmlNode>) -> Result<usize, CliError> {
            let id = nodes.len();
            let kind = match (n.kind.as_str(), &n.label) {
                ("regular", Some(l)) => NodeKind::Regular(l.clone()),
                ("regular", None) => {
                    return Err(CliError::Input(format!("regular node {id} needs a label")))
                }
                ("ind", None) => NodeKind::Ind,
                ("mux", None) => NodeKind::Mux,
                ("cie", None) => NodeKind::Cie,
                ("ind" | "mux" | "cie", Some(_)) => {
                    return Err(CliError::Input(format!(
                        "distributional node {id} takes no label"
                    )))
                }
                (other, _) => {
                    return Err(CliError::Input(format!(
                        "node {id}: unknown kind `{other}`"
                    )))
                }
            };
            nodes.push(PrxmlNode {
                kind,
                edges: Vec::new(),
            });
            let mut edges = Vec::with_capacity(n.edges.len());
            for e in &n.edges {
                let label = match (e.prob, &e.cond) {
                    (None, None) => EdgeLabel::Plain,
                    (Some(p), None) => EdgeLabel::Prob(p),
                    (None, Some(c)) => EdgeLabel::Cond(
                        c.iter()
                            .map(|l| match l.strip_prefix('!') {
                                Some(ev) => Literal::neg(ev.trim()),
                                None => Literal::pos(l.trim()),
                            })
                            .collect(),
                    ),
                    (Some(_), Some(_)) => {
                        return Err(CliError::Input(format!(
                            "edge below node {id} has both `prob` and `cond`"
                        )))
                    }
                };
                let child = go(&e.child, nodes)?;
                edges.push(Edge { child, label });
            }
            nodes[id].edges = edges;
            Ok(id)
        }
        let mut nodes = Vec::new();
        go(&self.root, &mut nodes)?;
        PrxmlDoc::new(nodes, 0, events(&self.events)).map_err(input_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circuit_round_trip() {
        let c = Circuit::new(
            vec!["x".into(), "y".into()],
            vec![
                Gate::Input(0),
                Gate::Input(1),
                Gate::And(vec![0, 1]),
                Gate::Not(2),
                Gate::Const(true),
                Gate::Or(vec![3, 4]),
            ],
            Some(5),
        )
        .unwrap();
        let json = serde_json::to_string(&CircuitJson::from_circuit(&c)).unwrap();
        let back: CircuitJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_circuit().unwrap(), c);
    }

    #[test]
    fn instance_kinds() {
        let tid =
            r#"{"schema":[{"name":"R","arity":1}],"facts":[{"rel":"R","args":["a"],"prob":0.5}]}"#;
        let Input::Instance(i) = parse_input(tid).unwrap() else {
            panic!()
        };
        assert_eq!(i.events().len(), 1);
        let pc = r#"{"schema":[{"name":"R","arity":1}],"events":[{"name":"e","prob":0.3}],
                     "facts":[{"rel":"R","args":["a"],"ann":"!e"}]}"#;
        let Input::Instance(i) = parse_input(pc).unwrap() else {
            panic!()
        };
        let json = serde_json::to_string(&InstanceJson::from_instance(&i)).unwrap();
        let Input::Instance(j) = parse_input(&json).unwrap() else {
            panic!()
        };
        assert_eq!(i, j);
        let mixed = r#"{"schema":[{"name":"R","arity":1}],"events":[{"name":"e","prob":0.3}],
                        "facts":[{"rel":"R","args":["a"],"ann":"e"},{"rel":"R","args":["b"],"prob":0.5}]}"#;
        assert!(matches!(parse_input(mixed), Err(CliError::Input(_))));
        assert!(matches!(parse_input("{"), Err(CliError::Input(_))));
    }

    #[test]
    fn poset_ids_are_renumbered() {
        let p: PosetJson = serde_json::from_str(
            r#"{"elements":[10,20,30],"labels":{"10":["a"],"20":["b"],"30":["c"]},"edges":[[30,10]]}"#,
        )
        .unwrap();
        let poset = p.to_poset().unwrap();
        assert!(poset.less(2, 0));
        assert_eq!(PosetJson::from_poset(&poset).edges, vec![(2, 0)]);
    }
}
