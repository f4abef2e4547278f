//! K-clique with O(1) bits per node: one mark bit plus the O(1)-bit tree
//! rooted at a marked leader. Marked nodes need exactly K-1 marked
//! neighbors and must be the leader or adjacent to it.

use crate::engine::{ensure, DecodeError, Msg, MsgReader, Protocol, Prover, ProverCtx, Speaker, Tape, Verdict};
use crate::netmodel::{NetworkGraph, NodeView};

use super::o1tree::{self, Mod3, Mod3Share, Parities, DEFAULT_REPS};

/// A K-clique by exhaustive search, smallest ids first.
pub fn find_clique(g: &NetworkGraph, k: usize) -> Option<Vec<usize>> {
    fn grow(g: &NetworkGraph, k: usize, cur: &mut Vec<usize>, next: usize) -> bool {
        if cur.len() == k {
            return true;
        }
        for v in next..g.n() {
            if cur.iter().all(|&u| g.port_of(u, v).is_some()) {
                cur.push(v);
                if grow(g, k, cur, v + 1) {
                    return true;
                }
                cur.pop();
            }
        }
        false
    }
    let mut cur = Vec::with_capacity(k);
    grow(g, k, &mut cur, 0).then_some(cur)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CliqueProtocol {
    pub tree: Mod3,
    pub k: usize,
}

struct Own {
    d3: u8,
    marked: bool,
    coins: Vec<bool>,
    par: Parities,
}

impl CliqueProtocol {
    pub fn new(k: usize) -> Self {
        Self { tree: Mod3::new(DEFAULT_REPS), k }
    }

    fn read_first(&self, r: &mut MsgReader) -> Result<(u8, bool), DecodeError> {
        Ok((self.tree.read_label(r)?, r.take_bool()?))
    }

    fn read_own(&self, tr: &[Msg]) -> Result<Own, DecodeError> {
        let mut r = tr[0].reader();
        let (d3, marked) = self.read_first(&mut r)?;
        r.finish()?;
        let mut r = tr[1].reader();
        let coins = self.tree.read_coins(&mut r)?;
        r.finish()?;
        let mut r = tr[2].reader();
        let par = self.tree.read_parities(&mut r)?;
        r.finish()?;
        Ok(Own { d3, marked, coins, par })
    }
}

impl Protocol for CliqueProtocol {
    fn name(&self) -> String {
        format!("clique(K={})", self.k)
    }
    fn schedule(&self) -> Vec<Speaker> {
        vec![Speaker::Prover, Speaker::Nodes, Speaker::Prover]
    }
    fn exchange_phases(&self) -> usize {
        2
    }
    fn coins(&self, _: usize, _: &NodeView, tape: &mut Tape) -> Msg {
        let mut m = Msg::new();
        self.tree.draw(tape, &mut m);
        m
    }
    fn share(&self, _: &NodeView, tr: &[Msg], phase: usize, heard: &[Vec<Msg>], _: usize) -> Msg {
        let mut m = Msg::new();
        let Ok(own) = self.read_own(tr) else { return m };
        if phase == 0 {
            self.tree.write_share(&mut m, &Mod3Share { d3: own.d3, par: own.par });
            m.push_bool(own.marked);
        } else {
            let labels = heard[0].iter().map(|x| self.tree.read_label(&mut x.reader()).unwrap_or(3));
            m.push_bool(o1tree::parent_port(own.d3, labels).is_none());
        }
        m
    }
    fn verify(&self, _: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let own = self.read_own(tr)?;
        let mut shares = Vec::with_capacity(heard[0].len());
        let mut marks = Vec::with_capacity(heard[0].len());
        for m in &heard[0] {
            let mut r = m.reader();
            shares.push(self.tree.read_share(&mut r)?);
            marks.push(r.take_bool()?);
            r.finish()?;
        }
        let mut roots = Vec::with_capacity(heard[1].len());
        for m in &heard[1] {
            let mut r = m.reader();
            roots.push(r.take_bool()?);
            r.finish()?;
        }
        let parent = self.tree.check(own.d3, &own.coins, &own.par, &shares)?;
        let is_root = parent.is_none();
        if is_root {
            ensure(own.marked, "the leader is not marked")?;
        }
        if own.marked {
            let count = marks.iter().filter(|&&m| m).count();
            ensure(count + 1 == self.k, "marked node without exactly K-1 marked neighbors")?;
            let near = is_root || marks.iter().zip(&roots).any(|(&m, &r)| m && r);
            ensure(near, "marked node not adjacent to the leader")?;
        }
        Ok(())
    }
}

/// Marks a node set and roots the tree at `leader`.
#[derive(Clone, Debug)]
pub struct CliqueProver {
    pub name: String,
    pub marked: Vec<usize>,
    pub leader: usize,
}

impl CliqueProver {
    /// Marks a K-clique found by search; without one, marks the first K
    /// nodes and hopes.
    pub fn honest(g: &NetworkGraph, k: usize) -> Self {
        let marked = find_clique(g, k).unwrap_or_else(|| (0..k.min(g.n())).collect());
        let leader = marked.first().copied().unwrap_or(0);
        Self { name: "honest".into(), marked, leader }
    }

    pub fn marking(marked: Vec<usize>, leader: usize) -> Self {
        Self { name: "marking".into(), marked, leader }
    }

    /// A K-clique plus one extra neighbor of some clique member.
    pub fn one_extra(g: &NetworkGraph, k: usize) -> Option<Self> {
        let mut marked = find_clique(g, k)?;
        let extra = (0..g.n()).find(|&v| !marked.contains(&v) && marked.iter().any(|&u| g.port_of(u, v).is_some()))?;
        marked.push(extra);
        Some(Self { name: "one-extra".into(), leader: marked[0], marked })
    }
}

impl Prover<CliqueProtocol> for CliqueProver {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn honest(&self) -> bool {
        self.name == "honest"
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, CliqueProtocol>) -> Vec<Msg> {
        let proto = ctx.proto;
        let g = ctx.graph;
        let d3 = o1tree::bfs_labels(g, self.leader);
        if ctx.round == 0 {
            return (0..g.n())
                .map(|u| {
                    let mut m = Msg::new();
                    proto.tree.write_label(&mut m, d3[u]);
                    m.push_bool(self.marked.contains(&u));
                    m
                })
                .collect();
        }
        let tree = o1tree::derived_tree(g, &d3).expect("bfs labels give a tree");
        let coins: Vec<Vec<bool>> = ctx.transcript[1]
            .iter()
            .map(|m| proto.tree.read_coins(&mut m.reader()).unwrap_or_else(|_| vec![false; proto.tree.t]))
            .collect();
        proto
            .tree
            .parities(&tree, &coins)
            .iter()
            .map(|p| {
                let mut m = Msg::new();
                proto.tree.write_parities(&mut m, p);
                m
            })
            .collect()
    }
}

/// Every marking of `g` with 1..=n marked nodes and every marked leader.
pub fn all_markings(g: &NetworkGraph) -> impl Iterator<Item = CliqueProver> + '_ {
    let n = g.n();
    (1u64..1 << n).flat_map(move |mask| {
        let marked: Vec<usize> = (0..n).filter(|&u| mask >> u & 1 == 1).collect();
        marked.clone().into_iter().map(move |l| CliqueProver::marking(marked.clone(), l))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_protocol, RunOptions};
    use crate::netmodel::{generate, GraphKind};

    #[test]
    fn planted_k4_accepts() {
        for seed in 0..10 {
            let g = generate(&GraphKind::PlantedClique { n: 8, k: 4 }, seed).unwrap();
            let pr = CliqueProver::honest(&g, 4);
            let run = run_protocol(&CliqueProtocol::new(4), &g, &pr, seed, RunOptions::default()).unwrap();
            assert!(run.accept, "{:?}", run.rejections());
            assert!(run.max_bits_per_node_per_round() <= 2 * DEFAULT_REPS);
        }
    }

    #[test]
    fn c5_rejects_every_marking() {
        let g = generate(&GraphKind::Cycle(5), 0).unwrap();
        let proto = CliqueProtocol::new(4);
        for pr in all_markings(&g) {
            let run = run_protocol(&proto, &g, &pr, 1, RunOptions::default()).unwrap();
            assert!(!run.accept, "{:?} led by {}", pr.marked, pr.leader);
        }
    }

    #[test]
    fn one_extra_mark_rejected() {
        for seed in 0..10 {
            let g = generate(&GraphKind::PlantedClique { n: 8, k: 4 }, seed).unwrap();
            let Some(pr) = CliqueProver::one_extra(&g, 4) else { continue };
            let run = run_protocol(&CliqueProtocol::new(4), &g, &pr, seed, RunOptions::default()).unwrap();
            assert!(!run.accept);
        }
    }

    #[test]
    fn verdict_matches_exhaustive_search() {
        for seed in 0..30 {
            let g = generate(&GraphKind::Gnp { n: 7, p: 0.5 }, seed).unwrap();
            for k in 2..5 {
                let run = run_protocol(&CliqueProtocol::new(k), &g, &CliqueProver::honest(&g, k), seed, RunOptions::default())
                    .unwrap();
                assert_eq!(run.accept, find_clique(&g, k).is_some(), "seed {seed} k {k}");
            }
        }
    }
}
