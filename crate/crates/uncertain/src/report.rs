//! The timed probability pipeline behind `uncertain prob`.

use std::time::Instant;

use num_rational::BigRational;
use serde::Serialize;
use uncertain_core::circuits::{Construction, LineageResult};
use uncertain_core::prob::{evaluate_weighted, query_probability_bruteforce, Options, Stage};
use uncertain_core::weight::approx_eq;
use uncertain_core::{PCCInstance, Query, TreeDecomposition, Weight};

use crate::error::CliError;
use crate::format::Input;

/// Agreement tolerance between the pipeline and the oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub oracle: bool,
    pub exact_rational: bool,
    /// Largest event count the oracle enumerates.
    pub max_events: usize,
    pub pipeline: Options,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            oracle: false,
            exact_rational: false,
            max_events: uncertain_core::DEFAULT_MAX_EVENTS,
            pipeline: Options::default(),
        }
    }
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub decomposition_ms: f64,
    pub compilation_ms: f64,
    pub lineage_ms: f64,
    pub message_passing_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_ms: Option<f64>,
}

/// Outcome of one run; everything but `timings` is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub query: String,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_probability: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<bool>,
    pub facts: usize,
    pub events: usize,
    pub instance_width: usize,
    pub circuit_width: usize,
    pub mirrored_width: usize,
    pub automaton_states: usize,
    pub total_states: usize,
    pub gate_count: usize,
    pub added_gates: usize,
    pub construction: &'static str,
    pub timings: Timings,
}

/// Report plus the artifacts of the run.
pub struct Run {
    pub report: RunReport,
    pub decomposition: TreeDecomposition,
    pub lineage: LineageResult,
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn construction_name(c: Construction) -> &'static str {
    match c {
        Construction::Monotone => "monotone",
        Construction::ExactStates => "exact-states",
        Construction::OneHot => "one-hot",
    }
}

/// Runs the pipeline on `input`, plus the oracle and the exact-rational
/// pass when requested. An oracle disagreement is an error.
pub fn run_prob(input: &Input, q: &Query, opts: RunOptions) -> Result<Run, CliError> {
    let inst = input.instance();
    let mut timings = Timings::default();
    let mut last = Instant::now();
    let eval =
        evaluate_weighted::<f64>(&inst, q, f64_probs(input, &inst), opts.pipeline, |stage| {
            let t = ms(last);
            match stage {
                Stage::Decomposition => timings.decomposition_ms = t,
                Stage::Compilation => timings.compilation_ms = t,
                Stage::Lineage => timings.lineage_ms = t,
                Stage::MessagePassing => timings.message_passing_ms = t,
            }
            last = Instant::now();
        })?;
    let exact_probability = if opts.exact_rational {
        let probs = rational_probs(input, &inst);
        let e = evaluate_weighted::<BigRational>(&inst, q, probs, opts.pipeline, |_| {})?;
        Some(e.probability.to_string())
    } else {
        None
    };
    let (oracle_probability, agreement) = if opts.oracle {
        let start = Instant::now();
        let p = oracle(input, &inst, q, opts.max_events)?;
        timings.oracle_ms = Some(ms(start));
        (
            Some(p),
            Some(approx_eq(eval.probability, p, ORACLE_TOLERANCE)),
        )
    } else {
        (None, None)
    };
    let d = &eval.diagnostics;
    let report = RunReport {
        query: q.to_string(),
        probability: eval.probability,
        exact_probability,
        oracle_probability,
        agreement,
        facts: d.facts,
        events: d.events,
        instance_width: d.instance_width,
        circuit_width: d.circuit_width,
        mirrored_width: d.mirrored_width,
        automaton_states: d.max_states,
        total_states: d.total_states,
        gate_count: d.lineage_gates,
        added_gates: d.added_gates,
        construction: construction_name(d.construction),
        timings,
    };
    Ok(Run {
        report,
        decomposition: eval.decomposition,
        lineage: eval.lineage,
    })
}

fn f64_probs(input: &Input, inst: &PCCInstance) -> Vec<f64> {
    match input {
        Input::Prxml(d) => d.to_pcc().probs,
        Input::Instance(_) => inst.events().iter().map(|e| e.prob).collect(),
    }
}

fn rational_probs(input: &Input, inst: &PCCInstance) -> Vec<BigRational> {
    match input {
        Input::Prxml(d) => d.to_pcc_in::<BigRational>().probs,
        Input::Instance(_) => inst
            .events()
            .iter()
            .map(|e| BigRational::from_prob(e.prob))
            .collect(),
    }
}

/// Brute force over possible worlds: documents for PrXML input, event
/// valuations otherwise.
pub fn oracle(
    input: &Input,
    inst: &PCCInstance,
    q: &Query,
    max_events: usize,
) -> Result<f64, CliError> {
    match input {
        Input::Prxml(d) => Ok(d.query_probability_bruteforce(q, max_events)?),
        Input::Instance(_) => query_probability_bruteforce(inst, q, max_events).map_err(|e| {
            if matches!(
                e,
                uncertain_core::instances::InstanceError::TooManyEvents { .. }
            ) {
                CliError::limit("oracle", e)
            } else {
                CliError::Input(e.to_string())
            }
        }),
    }
}
