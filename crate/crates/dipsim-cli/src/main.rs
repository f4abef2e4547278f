//! `dipsim run` and `dipsim sweep`.
//!
//! Exit codes: 0 when the experiment completed (whatever the verdict),
//! 2 on a configuration error, 3 on an I/O error.

mod params;
mod registry;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dipsim::engine::{EngineError, Stats};
use dipsim::netmodel::{generate, GraphKind, NetworkGraph};
use serde::Serialize;

use params::Params;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "dipsim", version, about = "Distributed interactive proof simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Monte Carlo run of one protocol on one graph.
    Run {
        protocol: String,
        #[command(flatten)]
        common: Common,
        /// Generator spec, e.g. cycle:8, gnp:20,0.3, planted_clique:8,4.
        #[arg(long, conflicts_with = "graph", default_value = "cycle:8")]
        gen: String,
        /// Edge-list file instead of a generator.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// One row per size: n, max bits per node per round, accept rate.
    Sweep {
        protocol: String,
        /// Ascending comma-separated sizes, e.g. 16,64,256.
        sizes: String,
        #[command(flatten)]
        common: Common,
        /// Graph family; the size is filled in: path, cycle, clique, star,
        /// tree, or gnp:<p>.
        #[arg(long, default_value = "tree")]
        gen: String,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value = "honest")]
    prover: String,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Protocol parameter key=value (repeatable).
    #[arg(long = "param")]
    params: Vec<String>,
    /// Clique size for the clique protocol.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl Common {
    fn params(&self) -> Result<Params, CliError> {
        let mut p = Params::parse(&self.params)?;
        if let Some(k) = self.k {
            p.set("K", k.to_string());
        }
        Ok(p)
    }
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    max_bits_per_node: usize,
    accept_rate: f64,
}

fn load_graph(gen: &str, file: Option<&PathBuf>, seed: u64) -> Result<NetworkGraph, CliError> {
    let g = match file {
        Some(path) => NetworkGraph::parse(&std::fs::read_to_string(path)?),
        None => GraphKind::parse(gen).and_then(|k| generate(&k, seed)),
    };
    g.map_err(|e| CliError::Config(e.to_string()))
}

fn family_spec(family: &str, n: usize) -> Result<String, CliError> {
    let (kind, rest) = family.split_once(':').unwrap_or((family, ""));
    match (kind, rest) {
        ("gnp", p) if !p.is_empty() => Ok(format!("gnp:{n},{p}")),
        ("path" | "cycle" | "clique" | "star" | "tree", "") => Ok(format!("{kind}:{n}")),
        _ => Err(CliError::Config(format!("sweep family `{family}` not understood"))),
    }
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, CliError> {
    let sizes: Vec<usize> = s
        .split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse().map_err(|_| CliError::Config(format!("size `{x}` is not an integer"))))
        .collect::<Result<_, _>>()?;
    if sizes.is_empty() {
        return Err(CliError::Config("no sizes given".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config("sizes must be strictly ascending".into()));
    }
    Ok(sizes)
}

fn write_csv<T: Serialize>(out: &mut impl Write, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

fn emit<T: Serialize>(rows: &[T], single: bool, format: Format) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Json => {
            let text = if single {
                serde_json::to_string_pretty(&rows[0])
            } else {
                serde_json::to_string_pretty(rows)
            };
            writeln!(out, "{}", text.expect("plain data serializes"))?;
        }
        Format::Csv => write_csv(&mut out, rows)?,
    }
    Ok(())
}

fn cmd_run(protocol: &str, c: &Common, gen: &str, graph: Option<&PathBuf>) -> Result<(), CliError> {
    let entry = registry::lookup(protocol, &c.prover)?;
    let params = c.params()?;
    let g = load_graph(gen, graph, c.seed)?;
    let stats: Stats = registry::execute(entry, &g, &c.prover, &params, c.trials.unwrap_or(100), c.seed)?;
    emit(&[stats], true, c.format.unwrap_or(Format::Json))
}

fn cmd_sweep(protocol: &str, sizes: &str, c: &Common, family: &str) -> Result<(), CliError> {
    let entry = registry::lookup(protocol, &c.prover)?;
    let params = c.params()?;
    let sizes = parse_sizes(sizes)?;
    let mut rows = Vec::with_capacity(sizes.len());
    for n in sizes {
        let g = load_graph(&family_spec(family, n)?, None, c.seed)?;
        let s = registry::execute(entry, &g, &c.prover, &params, c.trials.unwrap_or(10), c.seed)?;
        rows.push(SweepRow { n, max_bits_per_node: s.max_bits_per_node_per_round, accept_rate: s.accept_rate });
    }
    emit(&rows, false, c.format.unwrap_or(Format::Csv))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Run { protocol, common, gen, graph } => cmd_run(protocol, common, gen, graph.as_ref()),
        Cmd::Sweep { protocol, sizes, common, gen } => cmd_sweep(protocol, sizes, common, gen),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dipsim: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_must_ascend() {
        assert_eq!(parse_sizes("16,64,256").unwrap(), vec![16, 64, 256]);
        assert!(parse_sizes("").is_err());
        assert!(parse_sizes("64,16").is_err());
        assert!(parse_sizes("a").is_err());
    }

    #[test]
    fn families() {
        assert_eq!(family_spec("gnp:0.3", 10).unwrap(), "gnp:10,0.3");
        assert_eq!(family_spec("tree", 5).unwrap(), "tree:5");
        assert!(family_spec("gnp", 5).is_err());
        assert!(family_spec("wheel", 5).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).code(), 2);
        assert_eq!(CliError::Io(std::io::Error::other("x")).code(), 3);
    }
}
