//! Command-line interface: line-oriented JSON in, deterministic text out.
//!
//! Multiset files hold one JSON array of strings per non-empty line; graph
//! files hold one `{"nodes": [...], "edges": [[i, j], ...]}` object per
//! non-empty line. Batch commands emit exactly one output line per input
//! line, in input order, regardless of the worker count. Exit status: 0 on
//! success, 1 when an `eq` command saw a non-equivalent pair (or selfcheck
//! found disagreements), 2 on usage or format errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

use crate::anonymize::anonymize_dataset;
use crate::graph::{
    graph_hash_guarded, graphs_equivalent_guarded, witness_isomorphism_guarded, wl_diff_refinement,
    Graph, GraphError, WlRounds, DEFAULT_NODE_GUARD,
};
use crate::multiset::{multiset_hash, multisets_equivalent, witness_relabeling, Multiset};
use crate::oracle::{self, OracleError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_EQUIVALENT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path_a} has {count_a} entries but {path_b} has {count_b}")]
    LineCountMismatch {
        path_a: PathBuf,
        count_a: usize,
        path_b: PathBuf,
        count_b: usize,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("feature is not valid UTF-8 and cannot be written as JSON")]
    NonUtf8Feature,
    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
    #[error("{0}")]
    Internal(String),
}

fn positive(s: &str) -> Result<usize, String> {
    let value: usize = s.parse().map_err(|e| format!("{e}"))?;
    if value == 0 {
        return Err("must be at least 1".into());
    }
    Ok(value)
}

fn parse_rounds(s: &str) -> Result<WlRounds, String> {
    if s == "stable" {
        return Ok(WlRounds::UntilStable);
    }
    match s.parse::<usize>() {
        Ok(r) if r >= 1 => Ok(WlRounds::Fixed(r)),
        _ => Err("expected a positive round count or \"stable\"".into()),
    }
}

fn selfcheck_nmax(s: &str) -> Result<usize, String> {
    let value = positive(s)?;
    if value > 4 {
        return Err("pair scans above n=4 are not tractable; use --nmax 4 or less".into());
    }
    Ok(value)
}

/// Parsed invocation: one command plus the global knobs.
#[derive(Debug, Parser)]
#[command(
    name = "lexcanon",
    version,
    about = "Canonical hashing and equivalence for multisets and node-attributed graphs"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Node-count limit for exact graph canonicalization.
    #[arg(long, global = true, default_value_t = DEFAULT_NODE_GUARD, value_parser = positive)]
    pub guard: usize,

    /// Worker threads for batch commands.
    #[arg(long, global = true, default_value_t = 1, value_parser = positive)]
    pub jobs: usize,

    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Operations on multisets of strings.
    Multiset {
        #[command(subcommand)]
        command: MultisetCommand,
    },
    /// Operations on node-attributed graphs.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Replace node features by salted digests, one derived salt per graph.
    Anonymize {
        file: PathBuf,
        /// Seed for the per-graph salt stream.
        #[arg(long)]
        seed: u64,
    },
    /// Exhaustive small-instance agreement between fast paths and oracles.
    Selfcheck {
        #[arg(long, default_value_t = 4, value_parser = selfcheck_nmax)]
        nmax: usize,
        #[arg(long, default_value_t = 3)]
        alphabet: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum MultisetCommand {
    /// Relabeling-invariant digest per line, printed as `M:<hex>`.
    Hash { file: PathBuf },
    /// Decide equivalence of paired lines from two files.
    Eq { file_a: PathBuf, file_b: PathBuf },
    /// Emit an explicit relabeling witness per line pair, as JSON.
    Witness { file_a: PathBuf, file_b: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Permutation- and relabeling-invariant digest per line, `G:<hex>`.
    Hash { file: PathBuf },
    /// Decide equivalence of paired lines from two files.
    Eq { file_a: PathBuf, file_b: PathBuf },
    /// Emit a (permutation, relabeling) witness per line pair, as JSON.
    Witness { file_a: PathBuf, file_b: PathBuf },
    /// Color-refinement digest driven by adjacency and feature equality.
    Wl {
        file: PathBuf,
        /// Round count, or "stable" to refine to a fixed point.
        #[arg(long, default_value = "stable", value_parser = parse_rounds)]
        rounds: WlRounds,
    },
}

/// Reads one multiset per non-empty line: a JSON array of strings.
pub fn parse_multiset_file(path: &Path) -> Result<Vec<Multiset>, CliError> {
    let content = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut multisets = Vec::new();
    for (index, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let elements: Vec<String> =
            serde_json::from_str(line).map_err(|e| CliError::Malformed {
                path: path.to_path_buf(),
                line: index + 1,
                message: e.to_string(),
            })?;
        multisets.push(Multiset::from_elements(
            elements.into_iter().map(String::into_bytes),
        ));
    }
    Ok(multisets)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    nodes: Vec<String>,
    edges: Vec<(usize, usize)>,
}

/// Reads one graph per non-empty line: `{"nodes": [...], "edges": [...]}`
/// with 0-based endpoints. Duplicate and reversed edges collapse;
/// self-loops and out-of-range endpoints are line errors.
pub fn parse_graph_file(path: &Path) -> Result<Vec<Graph>, CliError> {
    let content = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut graphs = Vec::new();
    for (index, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CliError::Malformed {
            path: path.to_path_buf(),
            line: index + 1,
            message,
        };
        let record: GraphRecord =
            serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let features = record.nodes.into_iter().map(String::into_bytes).collect();
        graphs.push(Graph::new(features, &record.edges).map_err(|e| malformed(e.to_string()))?);
    }
    Ok(graphs)
}

/// One-line JSON form of a graph; inverse of [`parse_graph_file`] lines.
pub fn graph_to_json_line(g: &Graph) -> Result<String, CliError> {
    let nodes: Vec<String> = g
        .features()
        .iter()
        .map(|f| String::from_utf8(f.clone()).map_err(|_| CliError::NonUtf8Feature))
        .collect::<Result<_, _>>()?;
    let edges: Vec<(usize, usize)> = g.edges();
    Ok(json!({ "nodes": nodes, "edges": edges }).to_string())
}

/// One-line JSON form of a multiset, elements sorted.
pub fn multiset_to_json_line(x: &Multiset) -> Result<String, CliError> {
    let elements: Vec<String> = x
        .iter()
        .flat_map(|(element, count)| std::iter::repeat_n(element.to_vec(), count))
        .map(|e| String::from_utf8(e).map_err(|_| CliError::NonUtf8Feature))
        .collect::<Result<_, _>>()?;
    Ok(json!(elements).to_string())
}

/// Maps items to output lines, optionally on a worker pool. Results keep
/// input order; the first error in input order wins.
fn process<T, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<String>, CliError>
where
    T: Sync,
    F: Fn(&T) -> Result<String, CliError> + Sync + Send,
{
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let results: Vec<Result<String, CliError>> = pool.install(|| items.par_iter().map(f).collect());
    results.into_iter().collect()
}

fn zip_equal<T>(
    a: Vec<T>,
    b: Vec<T>,
    path_a: &Path,
    path_b: &Path,
) -> Result<Vec<(T, T)>, CliError> {
    if a.len() != b.len() {
        return Err(CliError::LineCountMismatch {
            path_a: path_a.to_path_buf(),
            count_a: a.len(),
            path_b: path_b.to_path_buf(),
            count_b: b.len(),
        });
    }
    Ok(a.into_iter().zip(b).collect())
}

fn utf8_string(bytes: &[u8]) -> Result<String, CliError> {
    String::from_utf8(bytes.to_vec()).map_err(|_| CliError::NonUtf8Feature)
}

fn sigma_json(sigma: &crate::multiset::Relabeling) -> Result<serde_json::Value, CliError> {
    let mut object = serde_json::Map::new();
    for (from, to) in sigma.pairs() {
        object.insert(utf8_string(from)?, json!(utf8_string(to)?));
    }
    Ok(serde_json::Value::Object(object))
}

fn write_lines(out: &mut dyn Write, lines: &[String]) -> Result<(), CliError> {
    for line in lines {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Executes the parsed command, writing its output lines to `out`, and
/// returns the process exit code.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let jobs = config.jobs;
    let guard = config.guard;
    match &config.command {
        Command::Multiset { command } => match command {
            MultisetCommand::Hash { file } => {
                let multisets = parse_multiset_file(file)?;
                let lines = process(&multisets, jobs, |x| {
                    Ok(format!("M:{}", hex::encode(multiset_hash(x))))
                })?;
                write_lines(out, &lines)?;
                Ok(EXIT_OK)
            }
            MultisetCommand::Eq { file_a, file_b } => {
                let pairs = zip_equal(
                    parse_multiset_file(file_a)?,
                    parse_multiset_file(file_b)?,
                    file_a,
                    file_b,
                )?;
                let lines = process(&pairs, jobs, |(x1, x2)| {
                    Ok(if multisets_equivalent(x1, x2) {
                        "equivalent".to_string()
                    } else {
                        "not equivalent".to_string()
                    })
                })?;
                write_lines(out, &lines)?;
                Ok(if lines.iter().any(|l| l == "not equivalent") {
                    EXIT_NOT_EQUIVALENT
                } else {
                    EXIT_OK
                })
            }
            MultisetCommand::Witness { file_a, file_b } => {
                let pairs = zip_equal(
                    parse_multiset_file(file_a)?,
                    parse_multiset_file(file_b)?,
                    file_a,
                    file_b,
                )?;
                let lines = process(&pairs, jobs, |(x1, x2)| {
                    let value = match witness_relabeling(x1, x2) {
                        Some(sigma) => json!({
                            "equivalent": true,
                            "sigma": sigma_json(&sigma)?,
                        }),
                        None => json!({ "equivalent": false }),
                    };
                    Ok(value.to_string())
                })?;
                write_lines(out, &lines)?;
                Ok(EXIT_OK)
            }
        },
        Command::Graph { command } => match command {
            GraphCommand::Hash { file } => {
                let graphs = parse_graph_file(file)?;
                let lines = process(&graphs, jobs, |g| {
                    Ok(format!("G:{}", hex::encode(graph_hash_guarded(g, guard)?)))
                })?;
                write_lines(out, &lines)?;
                Ok(EXIT_OK)
            }
            GraphCommand::Eq { file_a, file_b } => {
                let pairs = zip_equal(
                    parse_graph_file(file_a)?,
                    parse_graph_file(file_b)?,
                    file_a,
                    file_b,
                )?;
                let lines = process(&pairs, jobs, |(g1, g2)| {
                    Ok(if graphs_equivalent_guarded(g1, g2, guard)? {
                        "equivalent".to_string()
                    } else {
                        "not equivalent".to_string()
                    })
                })?;
                write_lines(out, &lines)?;
                Ok(if lines.iter().any(|l| l == "not equivalent") {
                    EXIT_NOT_EQUIVALENT
                } else {
                    EXIT_OK
                })
            }
            GraphCommand::Witness { file_a, file_b } => {
                let pairs = zip_equal(
                    parse_graph_file(file_a)?,
                    parse_graph_file(file_b)?,
                    file_a,
                    file_b,
                )?;
                let lines = process(&pairs, jobs, |(g1, g2)| {
                    let value = match witness_isomorphism_guarded(g1, g2, guard)? {
                        Some((pi, sigma)) => json!({
                            "equivalent": true,
                            "pi": pi.as_slice(),
                            "sigma": sigma_json(&sigma)?,
                        }),
                        None => json!({ "equivalent": false }),
                    };
                    Ok(value.to_string())
                })?;
                write_lines(out, &lines)?;
                Ok(EXIT_OK)
            }
            GraphCommand::Wl { file, rounds } => {
                let graphs = parse_graph_file(file)?;
                let lines = process(&graphs, jobs, |g| {
                    let result = wl_diff_refinement(g, *rounds);
                    let histogram: Vec<(usize, usize)> =
                        result.histogram.iter().map(|(&c, &n)| (c, n)).collect();
                    Ok(json!({
                        "digest": hex::encode(result.digest),
                        "histogram": histogram,
                        "rounds": result.rounds,
                    })
                    .to_string())
                })?;
                write_lines(out, &lines)?;
                Ok(EXIT_OK)
            }
        },
        Command::Anonymize { file, seed } => {
            let graphs = parse_graph_file(file)?;
            let anonymized = anonymize_dataset(&graphs, *seed);
            let mut lines = Vec::with_capacity(anonymized.len());
            for g in &anonymized {
                // Digest features are raw bytes; hex keeps the file valid
                // JSON while preserving the equality pattern.
                let printable = g.map_features(|f| hex::encode(f).into_bytes());
                lines.push(graph_to_json_line(&printable)?);
            }
            write_lines(out, &lines)?;
            Ok(EXIT_OK)
        }
        Command::Selfcheck { nmax, alphabet } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let (multisets, graphs, canon) = pool.install(|| {
                (
                    oracle::multiset_agreement(*nmax, *alphabet),
                    oracle::graph_agreement(*nmax, *alphabet),
                    oracle::canon_agreement(*nmax, *alphabet),
                )
            });
            let multisets = multisets?;
            let graphs = graphs?;
            let canon = canon?;

            let mut all_ok = true;
            for (name, report) in [
                ("multiset agreement", &multisets),
                ("graph agreement", &graphs),
                ("canonical minimality", &canon),
            ] {
                all_ok &= report.agrees();
                writeln!(
                    out,
                    "{name}: n<={nmax} alphabet={alphabet} instances={} comparisons={} mismatches={} {}",
                    report.instances,
                    report.comparisons,
                    report.mismatches,
                    if report.agrees() { "ok" } else { "FAIL" },
                )?;
            }
            writeln!(out, "selfcheck {}", if all_ok { "ok" } else { "FAIL" })?;
            Ok(if all_ok { EXIT_OK } else { EXIT_NOT_EQUIVALENT })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_parser_accepts_stable_and_positive_integers() {
        assert_eq!(parse_rounds("stable").unwrap(), WlRounds::UntilStable);
        assert_eq!(parse_rounds("3").unwrap(), WlRounds::Fixed(3));
        assert!(parse_rounds("0").is_err());
        assert!(parse_rounds("-1").is_err());
        assert!(parse_rounds("forever").is_err());
    }

    #[test]
    fn config_parses_commands_and_globals() {
        let config = RunConfig::try_parse_from([
            "lexcanon", "graph", "wl", "g.jsonl", "--rounds", "7", "--jobs", "3",
        ])
        .unwrap();
        assert_eq!(config.jobs, 3);
        match config.command {
            Command::Graph {
                command: GraphCommand::Wl { rounds, .. },
            } => assert_eq!(rounds, WlRounds::Fixed(7)),
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn zero_jobs_is_a_usage_error() {
        assert!(RunConfig::try_parse_from([
            "lexcanon", "multiset", "hash", "m.jsonl", "--jobs", "0",
        ])
        .is_err());
    }
}
