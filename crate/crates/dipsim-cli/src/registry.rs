//! Named protocols, their provers and parameters, and the instances the
//! front end builds for them.

use dipsim::engine::{monte_carlo, Protocol, Prover, RunOptions, Stats};
use dipsim::fiatshamir::{FiatShamir, FsProver, GrindingForger};
use dipsim::fieldset::{distinctness_adversaries, seteq_adversaries, Distinctness, HonestSetEq, SetEquality};
use dipsim::netmodel::NetworkGraph;
use dipsim::ramcompile::compiler::{CompilerProver, Tamper};
use dipsim::sizeproto::{asym_protocol, DUPLICATE_POSITION, FORGED_DIGEST};
use dipsim::smallproof::blocks::{BlockForgery, BlockProtocol, BlockProver};
use dipsim::smallproof::clique::{CliqueProtocol, CliqueProver};
use dipsim::smallproof::loglog::{
    SetEqLoglogProver, SetEqStrategy, SetEqualityLoglog, SumLoglogProver, SumStrategy, SumUpTreeLoglog,
};
use dipsim::smallproof::o1tree::{O1Tree, TreeProver, DEFAULT_REPS};
use dipsim::treelabel::{CycleForger, HonestLabeler, TreeLabeling, TwoRootForger};

use crate::params::Params;
use crate::CliError;

pub struct Entry {
    pub name: &'static str,
    pub provers: &'static [&'static str],
    pub params: &'static [&'static str],
}

const SEQ_PROVERS: &[&str] = &["honest", "root-forge", "biased-winner", "count-forge"];

pub const PROTOCOLS: &[Entry] = &[
    Entry { name: "set-equality", provers: SEQ_PROVERS, params: &["c", "instance"] },
    Entry { name: "permutation", provers: SEQ_PROVERS, params: &["instance"] },
    Entry { name: "distinctness", provers: &["honest", "sum-forge", "set-forge"], params: &["instance"] },
    Entry {
        name: "set-equality-loglog",
        provers: &["honest", "copy-products", "chosen-point", "root-claim"],
        params: &["b", "instance"],
    },
    Entry { name: "sum-up-tree-loglog", provers: &["honest", "root-claim", "push-down"], params: &["b", "instance"] },
    Entry { name: "tree-labeling", provers: &["honest", "cycle-forger", "two-root"], params: &[] },
    Entry { name: "o1-tree", provers: &["honest", "all-equal", "cycle", "two-roots"], params: &["t"] },
    Entry { name: "blocks", provers: &["honest", "undersized", "inflated"], params: &["b", "t"] },
    Entry { name: "clique", provers: &["honest", "one-extra"], params: &["K"] },
    Entry {
        name: "asymmetry",
        provers: &["honest", "state-tamper", "stale-read", "forged-digest", "duplicate-position"],
        params: &[],
    },
    Entry { name: "fs-set-equality", provers: &["honest", "grind"], params: &["lambda", "key", "queries", "instance"] },
];

/// Resolves names before anything runs.
pub fn lookup(protocol: &str, prover: &str) -> Result<&'static Entry, CliError> {
    let e = PROTOCOLS.iter().find(|e| e.name == protocol).ok_or_else(|| {
        let known: Vec<&str> = PROTOCOLS.iter().map(|e| e.name).collect();
        CliError::Config(format!("unknown protocol `{protocol}` (known: {})", known.join(", ")))
    })?;
    if !e.provers.contains(&prover) {
        return Err(CliError::Config(format!(
            "protocol `{protocol}` has no prover `{prover}` (known: {})",
            e.provers.join(", ")
        )));
    }
    Ok(e)
}

fn holds(p: &Params) -> Result<bool, CliError> {
    match p.str("instance", "yes").as_str() {
        "yes" => Ok(true),
        "no" => Ok(false),
        v => Err(CliError::Config(format!("parameter `instance` must be yes or no, got `{v}`"))),
    }
}

/// One item per node; B is A rotated by one, or has its first item
/// duplicated when the instance should fail.
fn seq_lists(n: usize, yes: bool) -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
    let a: Vec<Vec<u64>> = (0..n as u64).map(|u| vec![u]).collect();
    let mut b: Vec<Vec<u64>> = (0..n as u64).map(|u| vec![(u + 1) % n as u64]).collect();
    if !yes && n > 1 {
        b[0] = b[1].clone();
    }
    (a, b)
}

fn values(n: usize, yes: bool) -> Vec<u64> {
    let mut v: Vec<u64> = (0..n as u64).map(|u| (u + 1) % n as u64 + 1).collect();
    if !yes && n > 1 {
        v[0] = v[1];
    }
    v
}

fn pick<P: ?Sized>(list: Vec<Box<dyn Prover<P>>>, name: &str) -> Box<dyn Prover<P>> {
    list.into_iter().find(|p| p.name() == name).expect("names checked by lookup")
}

fn mc<P: Protocol, Pr: Prover<P> + ?Sized>(p: &P, g: &NetworkGraph, pr: &Pr, trials: u64, seed: u64) -> Result<Stats, CliError> {
    Ok(monte_carlo(p, g, pr, trials, seed, RunOptions::default())?)
}

fn setup<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

/// Builds the instance for `g` and runs `trials` Monte Carlo trials.
pub fn execute(e: &Entry, g: &NetworkGraph, prover: &str, p: &Params, trials: u64, seed: u64) -> Result<Stats, CliError> {
    p.restrict(e.name, e.params)?;
    let n = g.n();
    match e.name {
        "set-equality" => {
            let (a, b) = seq_lists(n, holds(p)?);
            let proto = setup(SetEquality::new(a, b, p.get("c", 4)?))?;
            mc(&proto, g, &pick(seteq_adversaries(), prover), trials, seed)
        }
        "permutation" => {
            let proto = setup(SetEquality::permutation(values(n, holds(p)?)))?;
            mc(&proto, g, &pick(seteq_adversaries(), prover), trials, seed)
        }
        "distinctness" => {
            let proto = setup(Distinctness::new(values(n, holds(p)?)))?;
            mc(&proto, g, &pick(distinctness_adversaries(), prover), trials, seed)
        }
        "set-equality-loglog" => {
            let (a, b) = seq_lists(n, holds(p)?);
            let proto = setup(SetEqualityLoglog::given(a, b, p.opt("b")?))?;
            let strategy = match prover {
                "honest" => SetEqStrategy::Honest,
                "copy-products" => SetEqStrategy::CopyProducts,
                "chosen-point" => SetEqStrategy::ChosenPoint,
                _ => SetEqStrategy::RootClaim,
            };
            mc(&proto, g, &SetEqLoglogProver { root: 0, strategy }, trials, seed)
        }
        "sum-up-tree-loglog" => {
            let vals: Vec<u64> = (1..=n as u64).collect();
            let k = vals.iter().sum::<u64>() + u64::from(!holds(p)?);
            let proto = SumUpTreeLoglog::new(vals, k, p.opt("b")?);
            let strategy = match prover {
                "honest" => SumStrategy::Honest,
                "root-claim" => SumStrategy::RootClaim,
                _ => SumStrategy::PushDown,
            };
            mc(&proto, g, &SumLoglogProver { root: 0, strategy }, trials, seed)
        }
        "tree-labeling" => match prover {
            "honest" => mc(&TreeLabeling, g, &HonestLabeler { root: 0 }, trials, seed),
            "cycle-forger" => mc(&TreeLabeling, g, &CycleForger, trials, seed),
            _ => mc(&TreeLabeling, g, &TwoRootForger, trials, seed),
        },
        "o1-tree" => {
            let proto = O1Tree::new(p.get("t", DEFAULT_REPS)?);
            let pr = match prover {
                "honest" => TreeProver::honest(0),
                "all-equal" => TreeProver::all_equal(n),
                "cycle" => TreeProver::cycle(n),
                _ => TreeProver::two_roots(g, 0, n - 1),
            };
            mc(&proto, g, &pr, trials, seed)
        }
        "blocks" => {
            let base = BlockProtocol::for_graph(n);
            let proto = BlockProtocol::new(p.get("t", base.tree.t)?, p.get("b", base.codec.b)?);
            let forgery = match prover {
                "honest" => BlockForgery::None,
                "undersized" => BlockForgery::Undersized,
                _ => BlockForgery::Inflated,
            };
            mc(&proto, g, &BlockProver { root: 0, forgery }, trials, seed)
        }
        "clique" => {
            let k: usize = p.opt("K")?.ok_or_else(|| CliError::Config("clique needs --K".into()))?;
            let proto = CliqueProtocol::new(k);
            let pr = match prover {
                "honest" => CliqueProver::honest(g, k),
                _ => CliqueProver::one_extra(g, k)
                    .ok_or_else(|| CliError::Config(format!("no {k}-clique with an outside neighbor to mark")))?,
            };
            mc(&proto, g, &pr, trials, seed)
        }
        "asymmetry" => {
            let proto = setup(asym_protocol(g))?;
            let tamper = match prover {
                "honest" => Tamper::None,
                "state-tamper" => Tamper::State,
                "stale-read" => Tamper::StaleRead,
                "forged-digest" => Tamper::Witness(FORGED_DIGEST),
                _ => Tamper::Witness(DUPLICATE_POSITION),
            };
            mc(&proto, g, &CompilerProver { tamper }, trials, seed)
        }
        "fs-set-equality" => {
            let (a, b) = seq_lists(n, holds(p)?);
            let lambda: u8 = p.get("lambda", 40)?;
            if !(1..=64).contains(&lambda) {
                return Err(CliError::Config("lambda must be in 1..=64".into()));
            }
            let proto = FiatShamir::new(setup(SetEquality::new(a, b, 4))?, p.get("key", seed)?, lambda);
            match prover {
                "honest" => mc(&proto, g, &FsProver { inner: HonestSetEq, root: 0 }, trials, seed),
                _ => mc(&proto, g, &GrindingForger { budget: p.get("queries", 4096)? }, trials, seed),
            }
        }
        other => unreachable!("{other} is registered but not dispatched"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dipsim::netmodel::{generate, GraphKind};

    #[test]
    fn every_registered_prover_runs() {
        let g = generate(&GraphKind::PlantedClique { n: 6, k: 3 }, 1).unwrap();
        for e in PROTOCOLS {
            for pr in e.provers {
                let mut p = Params::default();
                if e.name == "clique" {
                    p.set("K", "3".into());
                }
                let s = execute(e, &g, pr, &p, 2, 0).unwrap_or_else(|err| panic!("{} {pr}: {err}", e.name));
                assert_eq!(s.trials, 2);
                assert!(s.prover.contains(pr) || *pr == "grind", "{} vs {pr}", s.prover);
            }
        }
    }

    #[test]
    fn names_checked_up_front() {
        assert!(lookup("set-equality", "honest").is_ok());
        assert!(lookup("set-equality", "no-such").is_err());
        assert!(lookup("no-such", "honest").is_err());
    }

    #[test]
    fn unknown_params_rejected() {
        let g = generate(&GraphKind::Cycle(4), 0).unwrap();
        let p = Params::parse(&["zzz=1".into()]).unwrap();
        let e = lookup("set-equality", "honest").unwrap();
        assert!(matches!(execute(e, &g, "honest", &p, 1, 0), Err(CliError::Config(_))));
    }
}
