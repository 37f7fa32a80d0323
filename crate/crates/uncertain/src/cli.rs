//! Command-line interface: argument definitions and command handlers.
//! Handlers return the text to print on standard output.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use uncertain_core::circuits::build_lineage;
use uncertain_core::porder::{LabeledPoset, DEFAULT_COUNT_CAP, DEFAULT_LIST_CAP};
use uncertain_core::prob::Options;
use uncertain_core::prxml::PrxmlDoc;
use uncertain_core::query::{compile, parse_query};
use uncertain_core::treedec::{build_joint_graph, decompose, decompose_exact, EXACT_MAX_VERTICES};
use uncertain_core::{PCCInstance, Query};

use crate::error::CliError;
use crate::format::{
    parse_input, parse_json, CircuitJson, DecompositionJson, Input, InstanceJson, PosetJson,
};
use crate::report::{run_prob, RunOptions};

#[derive(Debug, Parser)]
#[command(
    name = "uncertain",
    version,
    about = "Exact query evaluation on tree-like uncertain data"
)]
pub struct Cli {
    /// Largest number of events (or random choices) brute-force
    /// enumeration accepts.
    #[arg(long, global = true, env = "UNCERTAIN_MAX_EVENTS", default_value_t = uncertain_core::DEFAULT_MAX_EVENTS)]
    pub max_events: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability that a query holds on an instance or PrXML file.
    Prob {
        file: PathBuf,
        query: String,
        /// Also compute the probability by enumerating possible worlds.
        #[arg(long)]
        oracle: bool,
        /// Also compute the probability exactly with rational arithmetic.
        #[arg(long)]
        exact_rational: bool,
        /// Write the lineage circuit in DOT format to this file.
        #[arg(long, value_name = "FILE")]
        dot: Option<PathBuf>,
        /// Write the run report as JSON to this file (`-` for stdout).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        /// Largest bag message passing accepts.
        #[arg(long, default_value_t = Options::default().max_bag)]
        max_bag: usize,
        /// Largest number of partial matches per decomposition node.
        #[arg(long, default_value_t = Options::default().max_tokens)]
        max_tokens: usize,
    },
    /// Tree decomposition of an instance's incidence graph, as JSON.
    Decompose {
        file: PathBuf,
        /// Optimal width by exhaustive search (small graphs only).
        #[arg(long)]
        exact: bool,
        /// Print the bag tree in DOT format instead.
        #[arg(long)]
        dot: bool,
    },
    /// Lineage circuit of a query on an instance, as JSON.
    Lineage {
        file: PathBuf,
        query: String,
        /// Print DOT instead of JSON.
        #[arg(long)]
        dot: bool,
    },
    /// Probabilistic XML documents.
    Prxml {
        #[command(subcommand)]
        command: PrxmlCommand,
    },
    /// Labeled partial orders.
    Poset {
        #[command(subcommand)]
        command: PosetCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum PrxmlCommand {
    /// Every possible document with its probability.
    Worlds { file: PathBuf },
    /// Event scopes; node ids number the document in preorder.
    Scopes { file: PathBuf },
    /// Relational pcc-instance encoding, in the instance format.
    Encode { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum PosetCommand {
    /// Disjoint union; the second poset's elements are numbered after the
    /// first's.
    Union { left: PathBuf, right: PathBuf },
    /// Coordinatewise product; pair (a, b) gets id a * |right| + b.
    Product { left: PathBuf, right: PathBuf },
    /// Elements whose label has `value` in column `column`.
    Select {
        file: PathBuf,
        #[arg(long)]
        column: usize,
        #[arg(long)]
        value: String,
    },
    /// Keep the given label columns.
    Project {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<usize>,
    },
    /// Label sequences of all linear extensions.
    Extensions {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LIST_CAP)]
        cap: usize,
    },
    /// Number of linear extensions.
    Count {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_COUNT_CAP)]
        cap: usize,
    },
    /// Whether a label sequence (a JSON array of tuples) is a possible world.
    Member { file: PathBuf, sequence: String },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// `p` to twelve decimals without trailing zeros; the JSON report keeps
/// the full value.
pub fn rounded(p: f64) -> String {
    let s = format!("{p:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn load_input(path: &Path) -> Result<Input, CliError> {
    parse_input(&read(path)?)
}

fn load_prxml(path: &Path) -> Result<PrxmlDoc, CliError> {
    match load_input(path)? {
        Input::Prxml(d) => Ok(d),
        Input::Instance(_) => Err(CliError::Input(format!(
            "{} is not a PrXML file",
            path.display()
        ))),
    }
}

fn load_poset(path: &Path) -> Result<LabeledPoset, CliError> {
    parse_json::<PosetJson>(&read(path)?)?.to_poset()
}

fn query_for(inst: &PCCInstance, text: &str) -> Result<Query, CliError> {
    parse_query(text, inst.schema()).map_err(|e| CliError::Input(format!("query: {e}")))
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Prob {
            file,
            query,
            oracle,
            exact_rational,
            dot,
            report,
            max_bag,
            max_tokens,
        } => {
            let input = load_input(file)?;
            let q = query_for(&input.instance(), query)?;
            let opts = RunOptions {
                oracle: *oracle,
                exact_rational: *exact_rational,
                max_events: cli.max_events,
                pipeline: Options {
                    max_bag: *max_bag,
                    max_tokens: *max_tokens,
                },
            };
            let run = run_prob(&input, &q, opts)?;
            if let Some(path) = dot {
                write(path, &run.lineage.circuit.to_dot())?;
            }
            let r = &run.report;
            let mut out = format!("{}\n", rounded(r.probability));
            if let Some(e) = &r.exact_probability {
                out.push_str(&format!("exact: {e}\n"));
            }
            if let Some(o) = r.oracle_probability {
                out.push_str(&format!("oracle: {}\n", rounded(o)));
            }
            match report.as_deref() {
                Some(p) if p == Path::new("-") => out.push_str(&json(r)),
                Some(p) => write(p, &json(r))?,
                None => {}
            }
            if r.agreement == Some(false) {
                print!("{out}");
                return Err(CliError::Disagreement {
                    pipeline: r.probability,
                    oracle: r.oracle_probability.unwrap_or(f64::NAN),
                });
            }
            Ok(out)
        }
        Command::Decompose { file, exact, dot } => {
            let inst = load_input(file)?.instance();
            let g = build_joint_graph(&inst);
            let t = if *exact {
                decompose_exact(g.graph()).ok_or_else(|| {
                    CliError::limit(
                        "decomposition",
                        format!(
                            "{} vertices exceed the exact-search limit of {EXACT_MAX_VERTICES}",
                            g.len()
                        ),
                    )
                })?
            } else {
                decompose(g.graph())
            };
            if *dot {
                Ok(t.to_dot(|v| g.label(v)))
            } else {
                Ok(json(&DecompositionJson::new(&t, Some(&g))))
            }
        }
        Command::Lineage { file, query, dot } => {
            let inst = load_input(file)?.instance();
            let q = query_for(&inst, query)?;
            let g = build_joint_graph(&inst);
            let t = decompose(g.graph())
                .root_and_binarize()
                .expect("min-fill yields a tree");
            let a = compile(&q, inst.schema(), t.width())
                .map_err(|e| CliError::Input(e.to_string()))?;
            let lr = build_lineage(&a, &inst, &g, &t).map_err(|e| CliError::limit("lineage", e))?;
            if *dot {
                Ok(lr.circuit.to_dot())
            } else {
                Ok(json(&CircuitJson::from_circuit(&lr.circuit)))
            }
        }
        Command::Prxml { command } => prxml(command, cli.max_events),
        Command::Poset { command } => poset(command),
    }
}

#[derive(Serialize)]
struct WorldJson {
    document: String,
    prob: f64,
}

#[derive(Serialize)]
struct ScopesJson {
    event_scopes: std::collections::BTreeMap<String, Vec<usize>>,
    node_scope_sizes: Vec<usize>,
    max_node_scope: usize,
}

fn prxml(command: &PrxmlCommand, max_events: usize) -> Result<String, CliError> {
    match command {
        PrxmlCommand::Worlds { file } => {
            let doc = load_prxml(file)?;
            let worlds: Vec<WorldJson> = doc
                .enumerate_documents(max_events)?
                .into_iter()
                .map(|(t, prob)| WorldJson {
                    document: t.to_string(),
                    prob,
                })
                .collect();
            Ok(json(&worlds))
        }
        PrxmlCommand::Scopes { file } => {
            let r = load_prxml(file)?.compute_scopes();
            Ok(json(&ScopesJson {
                event_scopes: r
                    .event_scopes
                    .into_iter()
                    .map(|(e, s)| (e, s.into_iter().collect()))
                    .collect(),
                node_scope_sizes: r.node_scope_sizes,
                max_node_scope: r.max_node_scope,
            }))
        }
        PrxmlCommand::Encode { file } => {
            let enc = load_prxml(file)?.to_pcc();
            Ok(json(&InstanceJson::from_instance(&enc.instance)))
        }
    }
}

fn poset(command: &PosetCommand) -> Result<String, CliError> {
    let out = match command {
        PosetCommand::Union { left, right } => load_poset(left)?.union(&load_poset(right)?)?,
        PosetCommand::Product { left, right } => load_poset(left)?.product(&load_poset(right)?),
        PosetCommand::Select {
            file,
            column,
            value,
        } => {
            let p = load_poset(file)?;
            if *column >= p.arity() {
                return Err(CliError::Input(format!(
                    "column {column} out of range for arity {}",
                    p.arity()
                )));
            }
            p.select(|l| l[*column] == *value).0
        }
        PosetCommand::Project { file, columns } => load_poset(file)?.project(columns)?,
        PosetCommand::Extensions { file, cap } => {
            return Ok(json(&load_poset(file)?.linear_extensions(*cap)?))
        }
        PosetCommand::Count { file, cap } => {
            return Ok(format!(
                "{}\n",
                load_poset(file)?.count_linear_extensions(*cap)?
            ));
        }
        PosetCommand::Member { file, sequence } => {
            let seq: Vec<Vec<String>> = parse_json(sequence)?;
            return Ok(format!("{}\n", load_poset(file)?.is_possible_world(&seq)?));
        }
    };
    Ok(json(&PosetJson::from_poset(&out)))
}

#[cfg(test)]
mod tests {
    use super::rounded;

    #[test]
    fn rounding_trims_zeros() {
        assert_eq!(rounded(0.9000000000000001), "0.9");
        assert_eq!(rounded(1.0), "1");
        assert_eq!(rounded(0.0), "0");
        assert_eq!(rounded(0.119140625), "0.119140625");
    }
}
