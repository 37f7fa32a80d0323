//! Query probability: brute-force oracles and the tree-decomposition
//! pipeline (decompose, compile, build lineage, pass messages).

use alloc::vec::Vec;

use crate::circuits::{build_lineage, Construction, LineageError, LineageResult};
use crate::instances::{InstanceError, PCCInstance};
use crate::query::{compile, Query, QueryError, DEFAULT_MAX_TOKENS};
use crate::treedec::{build_joint_graph, decompose, TreeDecomposition};
use crate::weight::Weight;

mod junction;

pub use crate::instances::{query_probability_bruteforce, query_probability_bruteforce_in};
pub use junction::{
    circuit_probability, circuit_probability_bruteforce, JunctionTree, MessageError,
    DEFAULT_MAX_BAG,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Lineage(#[from] LineageError),
    #[error(transparent)]
    Message(#[from] MessageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    /// Largest bag accepted by message passing.
    pub max_bag: usize,
    /// Cap on partial matches per decomposition node.
    pub max_tokens: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            max_bag: DEFAULT_MAX_BAG,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

/// Pipeline stages, reported as they finish.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Decomposition,
    Compilation,
    Lineage,
    MessagePassing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics {
    pub facts: usize,
    pub events: usize,
    /// Width of the joint instance decomposition.
    pub instance_width: usize,
    pub decomposition_nodes: usize,
    /// Width of the decomposition message passing ran on.
    pub circuit_width: usize,
    pub mirrored_width: usize,
    pub lineage_gates: usize,
    pub added_gates: usize,
    pub max_states: usize,
    pub total_states: usize,
    pub derivations: usize,
    pub size_bound: u128,
    pub construction: Construction,
}

pub struct Evaluation<W> {
    pub probability: W,
    pub decomposition: TreeDecomposition,
    pub lineage: LineageResult,
    pub diagnostics: Diagnostics,
}

/// Runs the full pipeline, calling `on_stage` after each stage.
pub fn evaluate_with<W: Weight>(
    inst: &PCCInstance,
    q: &Query,
    opts: Options,
    on_stage: impl FnMut(Stage),
) -> Result<Evaluation<W>, ProbError> {
    let probs = inst.events().iter().map(|e| W::from_prob(e.prob)).collect();
    evaluate_weighted(inst, q, probs, opts, on_stage)
}

/// Like [`evaluate_with`], with event probabilities given in `W` and
/// aligned with `inst.events()`.
pub fn evaluate_weighted<W: Weight>(
    inst: &PCCInstance,
    q: &Query,
    probs: Vec<W>,
    opts: Options,
    mut on_stage: impl FnMut(Stage),
) -> Result<Evaluation<W>, ProbError> {
    q.check(inst.schema())?;
    let g = build_joint_graph(inst);
    let t = decompose(g.graph())
        .root_and_binarize()
        .expect("min-fill yields a tree");
    on_stage(Stage::Decomposition);
    let a = compile(q, inst.schema(), t.width())?.with_max_tokens(opts.max_tokens);
    on_stage(Stage::Compilation);
    let lineage = build_lineage(&a, inst, &g, &t)?;
    on_stage(Stage::Lineage);
    let probability = circuit_probability(
        &lineage.circuit,
        probs,
        &lineage.decomposition,
        opts.max_bag,
    )?;
    on_stage(Stage::MessagePassing);
    let s = &lineage.stats;
    let diagnostics = Diagnostics {
        facts: inst.facts().len(),
        events: inst.events().len(),
        instance_width: t.width(),
        decomposition_nodes: t.len(),
        circuit_width: lineage.decomposition.width(),
        mirrored_width: lineage.mirrored_width,
        lineage_gates: lineage.circuit.len(),
        added_gates: s.added_gates,
        max_states: s.max_states,
        total_states: s.total_states,
        derivations: s.derivations,
        size_bound: s.size_bound,
        construction: lineage.construction,
    };
    Ok(Evaluation {
        probability,
        decomposition: t,
        lineage,
        diagnostics,
    })
}

/// Probability that `q` holds on `inst`, with pipeline diagnostics.
pub fn prob_query<W: Weight>(
    inst: &PCCInstance,
    q: &Query,
    opts: Options,
) -> Result<(W, Diagnostics), ProbError> {
    let e = evaluate_with::<W>(inst, q, opts, |_| {})?;
    Ok((e.probability, e.diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{Annotation, Event, Fact, PCInstance, Schema, TIDInstance};
    use crate::query::parse_query;
    use alloc::vec;
    use num_rational::BigRational;

    fn trips(pods: f64, stoc: f64) -> PCCInstance {
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
        .to_pcc()
    }

    #[test]
    fn trip_queries() {
        let inst = trips(0.5, 0.5);
        let q = parse_query("Trip(CDG, MEL)", inst.schema()).unwrap();
        let (p, d) = prob_query::<f64>(&inst, &q, Options::default()).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert_eq!(d.construction, Construction::Monotone);
        let inst = trips(0.7, 0.4);
        let q = parse_query("exists x. Trip(CDG, x)", inst.schema()).unwrap();
        let (p, _) = prob_query::<f64>(&inst, &q, Options::default()).unwrap();
        assert!((p - 0.82).abs() < 1e-12);
        let nq = parse_query("!(exists x. Trip(CDG, x))", inst.schema()).unwrap();
        let (np, d) = prob_query::<f64>(&inst, &nq, Options::default()).unwrap();
        assert!((np - 0.18).abs() < 1e-12);
        assert_eq!(d.construction, Construction::ExactStates);
    }

    #[test]
    fn exact_rationals_match_bruteforce() {
        let schema = Schema::new([("R", 1), ("S", 2), ("T", 1)]).unwrap();
        let facts = vec![
            (Fact::new("R", ["a"]), 0.5),
            (Fact::new("S", ["a", "b"]), 0.25),
            (Fact::new("T", ["b"]), 0.75),
            (Fact::new("S", ["a", "c"]), 0.5),
            (Fact::new("T", ["c"]), 0.125),
        ];
        let tid = TIDInstance::new(schema, facts).unwrap();
        let inst = PCCInstance::from(&tid);
        let q = parse_query("exists x y. R(x) & S(x,y) & T(y)", inst.schema()).unwrap();
        let (p, _) = prob_query::<BigRational>(&inst, &q, Options::default()).unwrap();
        let oracle = query_probability_bruteforce_in::<BigRational, _>(&inst, &q, 20).unwrap();
        assert_eq!(p, oracle);
    }
}
