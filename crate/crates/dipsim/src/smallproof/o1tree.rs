//! Spanning tree and leader election with O(1) bits per repetition.
//!
//! The prover labels every node with its BFS depth mod 3. A node's parent is
//! its smallest-port neighbor one level up; a node with no such neighbor is a
//! root. Random bits and their prover-supplied path parities expose cycles,
//! and a broadcast of the root's bit exposes a second root.

use crate::engine::{
    ensure, DecodeError, Msg, MsgReader, Protocol, Prover, ProverCtx, Reject, Speaker, Tape, Verdict,
};
use crate::netmodel::{NetworkGraph, NodeView};
use crate::treelabel::{LocalTree, SpanningTree};

pub const DEFAULT_REPS: usize = 8;

/// The parent rule: smallest port whose label is one less mod 3.
pub fn parent_port(d3: u8, neighbor_d3: impl IntoIterator<Item = u8>) -> Option<usize> {
    let up = (d3 + 2) % 3;
    neighbor_d3.into_iter().position(|x| x == up)
}

/// Parent of every node under a labeling.
pub fn derived_parents(g: &NetworkGraph, d3: &[u8]) -> Vec<Option<usize>> {
    (0..g.n())
        .map(|u| {
            parent_port(d3[u], g.neighbors(u).iter().map(|&v| d3[v])).map(|p| g.neighbors(u)[p])
        })
        .collect()
}

/// The tree defined by a labeling, if the parent graph is a spanning tree.
pub fn derived_tree(g: &NetworkGraph, d3: &[u8]) -> Option<SpanningTree> {
    let ports: Vec<Option<usize>> = (0..g.n())
        .map(|u| parent_port(d3[u], g.neighbors(u).iter().map(|&v| d3[v])))
        .collect();
    SpanningTree::from_parent_ports(g, &ports)
}

/// Honest labels: BFS depth mod 3 from `root`.
pub fn bfs_labels(g: &NetworkGraph, root: usize) -> Vec<u8> {
    SpanningTree::bfs(g, root).depth.iter().map(|&d| (d % 3) as u8).collect()
}

/// Path parities and the broadcast root bit, one entry per repetition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Parities {
    pub s: Vec<bool>,
    pub br: Vec<bool>,
}

/// What a neighbor reveals in the exchange.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mod3Share {
    pub d3: u8,
    pub par: Parities,
}

/// The tree gadget with `t` parallel repetitions; other protocols embed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mod3 {
    pub t: usize,
}

impl Mod3 {
    pub fn new(t: usize) -> Self {
        assert!(t >= 1, "at least one repetition");
        Self { t }
    }

    pub fn write_label(&self, m: &mut Msg, d3: u8) {
        m.push(d3 as u64, 2);
    }

    pub fn read_label(&self, r: &mut MsgReader) -> Result<u8, DecodeError> {
        Ok(r.take_below(2, 3)? as u8)
    }

    pub fn draw(&self, tape: &mut Tape, m: &mut Msg) {
        for _ in 0..self.t {
            m.push_bool(tape.bit());
        }
    }

    pub fn read_coins(&self, r: &mut MsgReader) -> Result<Vec<bool>, DecodeError> {
        (0..self.t).map(|_| r.take_bool()).collect()
    }

    pub fn write_parities(&self, m: &mut Msg, p: &Parities) {
        for i in 0..self.t {
            m.push_bool(p.s[i]);
            m.push_bool(p.br[i]);
        }
    }

    pub fn read_parities(&self, r: &mut MsgReader) -> Result<Parities, DecodeError> {
        let mut p = Parities::default();
        for _ in 0..self.t {
            p.s.push(r.take_bool()?);
            p.br.push(r.take_bool()?);
        }
        Ok(p)
    }

    pub fn write_share(&self, m: &mut Msg, sh: &Mod3Share) {
        self.write_label(m, sh.d3);
        self.write_parities(m, &sh.par);
    }

    pub fn read_share(&self, r: &mut MsgReader) -> Result<Mod3Share, DecodeError> {
        Ok(Mod3Share { d3: self.read_label(r)?, par: self.read_parities(r)? })
    }

    /// Checks one node and returns its parent port. Children are not known
    /// from the labels alone; protocols that need them ask in a later phase.
    pub fn check(&self, d3: u8, coins: &[bool], par: &Parities, nbrs: &[Mod3Share]) -> Result<Option<usize>, Reject> {
        let parent = parent_port(d3, nbrs.iter().map(|s| s.d3));
        for i in 0..self.t {
            let up = parent.is_some_and(|p| nbrs[p].par.s[i]);
            ensure(par.s[i] == up ^ coins[i], "path parity broken")?;
            ensure(nbrs.iter().all(|s| s.par.br[i] == par.br[i]), "root bit not a broadcast")?;
            if parent.is_none() {
                ensure(par.br[i] == coins[i], "root bit misreported")?;
            }
        }
        Ok(parent)
    }

    /// Honest parities over a parent graph that is a tree rooted at `root`.
    pub fn parities(&self, tree: &SpanningTree, coins: &[Vec<bool>]) -> Vec<Parities> {
        let n = tree.n();
        let mut s: Vec<Vec<bool>> = vec![vec![false; self.t]; n];
        let mut order = tree.postorder();
        order.reverse();
        for u in order {
            for i in 0..self.t {
                let up = tree.parent[u].is_some_and(|p| s[p][i]);
                s[u][i] = up ^ coins[u][i];
            }
        }
        let br = coins[tree.root].clone();
        s.into_iter().map(|s| Parities { s, br: br.clone() }).collect()
    }
}

/// Children ports from the phase in which every node flags its parent.
pub fn children_from_flags(flags: &[bool]) -> Vec<usize> {
    flags.iter().enumerate().filter(|(_, &f)| f).map(|(p, _)| p).collect()
}

/// Local tree of a node given its parent port and the ports that flagged it.
pub fn local_tree(parent: Option<usize>, child_flags: &[bool]) -> LocalTree {
    LocalTree { parent, children: children_from_flags(child_flags) }
}

/// Standalone tree construction and leader election (dMAM).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct O1Tree {
    pub gadget: Mod3,
}

impl O1Tree {
    pub fn new(t: usize) -> Self {
        Self { gadget: Mod3::new(t) }
    }

    /// Labels as sent in the first message (unparseable labels become 0).
    pub fn labels_of(&self, transcript: &[Vec<Msg>]) -> Vec<u8> {
        transcript[0]
            .iter()
            .map(|m| self.gadget.read_label(&mut m.reader()).unwrap_or(0))
            .collect()
    }

    /// The elected leader of an accepted run: the unique root.
    pub fn leader(&self, g: &NetworkGraph, transcript: &[Vec<Msg>]) -> Option<usize> {
        derived_tree(g, &self.labels_of(transcript)).map(|t| t.root)
    }

    fn read_own(&self, tr: &[Msg]) -> Result<(u8, Vec<bool>, Parities), DecodeError> {
        let mut r = tr[0].reader();
        let d3 = self.gadget.read_label(&mut r)?;
        r.finish()?;
        let mut r = tr[1].reader();
        let coins = self.gadget.read_coins(&mut r)?;
        r.finish()?;
        let mut r = tr[2].reader();
        let par = self.gadget.read_parities(&mut r)?;
        r.finish()?;
        Ok((d3, coins, par))
    }

    pub fn coins_of(&self, transcript: &[Vec<Msg>]) -> Vec<Vec<bool>> {
        transcript[1]
            .iter()
            .map(|m| self.gadget.read_coins(&mut m.reader()).unwrap_or_default())
            .collect()
    }
}

impl Protocol for O1Tree {
    fn name(&self) -> String {
        format!("o1-tree(t={})", self.gadget.t)
    }
    fn schedule(&self) -> Vec<Speaker> {
        vec![Speaker::Prover, Speaker::Nodes, Speaker::Prover]
    }
    fn coins(&self, _: usize, _: &NodeView, tape: &mut Tape) -> Msg {
        let mut m = Msg::new();
        self.gadget.draw(tape, &mut m);
        m
    }
    fn share(&self, _: &NodeView, tr: &[Msg], _: usize, _: &[Vec<Msg>], _: usize) -> Msg {
        let mut m = Msg::new();
        if let Ok((d3, _, par)) = self.read_own(tr) {
            self.gadget.write_share(&mut m, &Mod3Share { d3, par });
        }
        m
    }
    fn verify(&self, _: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let (d3, coins, par) = self.read_own(tr)?;
        let nbrs = heard[0]
            .iter()
            .map(|m| {
                let mut r = m.reader();
                let s = self.gadget.read_share(&mut r)?;
                r.finish()?;
                Ok(s)
            })
            .collect::<Result<Vec<_>, DecodeError>>()?;
        self.gadget.check(d3, &coins, &par, &nbrs).map(|_| ())
    }
}

/// How the prover labels the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Labeling {
    /// BFS from the given root.
    Bfs(usize),
    /// Fixed labels; parities are fitted as well as possible.
    Forged(Vec<u8>),
}

/// Prover for [`O1Tree`]. Forged labelings get parities that satisfy every
/// check the random bits allow: along each parent chain from a root, or
/// around a parent cycle starting from its smallest node.
#[derive(Clone, Debug)]
pub struct TreeProver {
    pub name: String,
    pub labeling: Labeling,
}

impl TreeProver {
    pub fn honest(root: usize) -> Self {
        Self { name: "honest".into(), labeling: Labeling::Bfs(root) }
    }

    /// Every node labeled 0: every node is a root.
    pub fn all_equal(n: usize) -> Self {
        Self { name: "all-equal".into(), labeling: Labeling::Forged(vec![0; n]) }
    }

    /// Labels 0,1,2,... around a cycle whose length is a multiple of 3, so
    /// the parent pointers close a cycle and no node is a root.
    pub fn cycle(n: usize) -> Self {
        Self { name: "cycle".into(), labeling: Labeling::Forged((0..n).map(|i| (i % 3) as u8).collect()) }
    }

    /// BFS labels grown from two roots at once.
    pub fn two_roots(g: &NetworkGraph, a: usize, b: usize) -> Self {
        let da = SpanningTree::bfs(g, a).depth;
        let db = SpanningTree::bfs(g, b).depth;
        let d3 = (0..g.n()).map(|u| (da[u].min(db[u]) % 3) as u8).collect();
        Self { name: "two-roots".into(), labeling: Labeling::Forged(d3) }
    }

    fn labels(&self, g: &NetworkGraph) -> Vec<u8> {
        match &self.labeling {
            Labeling::Bfs(r) => bfs_labels(g, *r),
            Labeling::Forged(d) => d.clone(),
        }
    }
}

/// Best-effort parities for an arbitrary parent function. Nodes on a chain
/// to a root get exact parities; nodes on (or hanging off) a cycle follow
/// the cycle from an arbitrary start. The root bit copies the first root.
pub fn fitted_parities(t: usize, parents: &[Option<usize>], coins: &[Vec<bool>]) -> Vec<Parities> {
    let n = parents.len();
    let mut s: Vec<Option<Vec<bool>>> = vec![None; n];
    for start in 0..n {
        // Walk up until a known value, a root, or a repeat.
        let mut path = Vec::new();
        let mut seen = vec![false; n];
        let mut u = start;
        while s[u].is_none() && !seen[u] {
            seen[u] = true;
            path.push(u);
            match parents[u] {
                Some(p) => u = p,
                None => break,
            }
        }
        let mut above = s[u].clone().unwrap_or_else(|| vec![false; t]);
        for &v in path.iter().rev() {
            let val: Vec<bool> = (0..t).map(|i| above[i] ^ coins[v][i]).collect();
            s[v] = Some(val.clone());
            above = val;
        }
    }
    let br = (0..n)
        .find(|&u| parents[u].is_none())
        .map(|r| coins[r].clone())
        .unwrap_or_else(|| vec![false; t]);
    s.into_iter()
        .map(|s| Parities { s: s.unwrap_or_else(|| vec![false; t]), br: br.clone() })
        .collect()
}

impl Prover<O1Tree> for TreeProver {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn honest(&self) -> bool {
        matches!(self.labeling, Labeling::Bfs(_))
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, O1Tree>) -> Vec<Msg> {
        let g = ctx.graph;
        let gadget = ctx.proto.gadget;
        let d3 = self.labels(g);
        if ctx.round == 0 {
            return d3
                .iter()
                .map(|&d| {
                    let mut m = Msg::new();
                    gadget.write_label(&mut m, d);
                    m
                })
                .collect();
        }
        let coins = ctx.proto.coins_of(ctx.transcript);
        let parents = derived_parents(g, &d3);
        fitted_parities(gadget.t, &parents, &coins)
            .iter()
            .map(|p| {
                let mut m = Msg::new();
                gadget.write_parities(&mut m, p);
                m
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{monte_carlo, run_protocol, RunOptions};
    use crate::netmodel::{generate, GraphKind};

    fn cycle(n: usize) -> NetworkGraph {
        generate(&GraphKind::Cycle(n), 0).unwrap()
    }

    #[test]
    fn honest_path_elects_chosen_end() {
        let g = generate(&GraphKind::Path(5), 0).unwrap();
        let proto = O1Tree::new(DEFAULT_REPS);
        for seed in 0..20 {
            let run = run_protocol(&proto, &g, &TreeProver::honest(0), seed, RunOptions::default()).unwrap();
            assert!(run.accept, "{:?}", run.rejections());
            assert_eq!(proto.leader(&g, &run.transcript), Some(0));
        }
    }

    #[test]
    fn honest_random_graphs_accept_with_small_messages() {
        let proto = O1Tree::new(DEFAULT_REPS);
        for seed in 0..10 {
            let g = generate(&GraphKind::Gnp { n: 30, p: 0.15 }, seed).unwrap();
            let root = seed as usize % 30;
            let run = run_protocol(&proto, &g, &TreeProver::honest(root), seed, RunOptions::default()).unwrap();
            assert!(run.accept);
            assert_eq!(run.max_bits_per_node_per_round(), 2 * DEFAULT_REPS);
            assert_eq!(proto.leader(&g, &run.transcript), Some(root));
        }
    }

    #[test]
    fn every_labeling_of_c4_has_a_root() {
        let g = cycle(4);
        for code in 0..81u32 {
            let d3: Vec<u8> = (0..4).map(|i| ((code / 3u32.pow(i)) % 3) as u8).collect();
            assert!(derived_parents(&g, &d3).iter().any(Option::is_none), "{d3:?}");
        }
    }

    fn detection(g: &NetworkGraph, prover: &TreeProver, t: usize, trials: u64) -> f64 {
        let proto = O1Tree::new(t);
        let stats = monte_carlo(&proto, g, prover, trials, 7, RunOptions::default()).unwrap();
        1.0 - stats.accept_rate
    }

    #[test]
    fn forgeries_are_caught_per_repetition() {
        let c3 = cycle(3);
        let c6 = cycle(6);
        let p5 = generate(&GraphKind::Path(5), 0).unwrap();
        assert!(derived_parents(&c6, &TreeProver::cycle(6).labels(&c6)).iter().all(Option::is_some));
        for (g, pr) in [
            (&c3, TreeProver::all_equal(3)),
            (&c6, TreeProver::cycle(6)),
            (&p5, TreeProver::two_roots(&p5, 0, 4)),
        ] {
            let d = detection(g, &pr, 1, 2000);
            assert!(d >= 0.45, "{} detected {d}", pr.name);
        }
        assert!(detection(&c3, &TreeProver::all_equal(3), DEFAULT_REPS, 500) >= 0.99);
    }

    #[test]
    fn accepted_runs_yield_spanning_trees() {
        let proto = O1Tree::new(2);
        let g = cycle(6);
        for seed in 0..200 {
            let run = run_protocol(&proto, &g, &TreeProver::honest(2), seed, RunOptions::default()).unwrap();
            assert!(run.accept);
            assert!(derived_tree(&g, &proto.labels_of(&run.transcript)).is_some());
        }
        // Forged labelings never describe a tree; they survive only with the
        // soundness error of two repetitions.
        for pr in [TreeProver::cycle(6), TreeProver::two_roots(&g, 0, 3)] {
            let mut accepted = 0;
            for seed in 0..400 {
                let run = run_protocol(&proto, &g, &pr, seed, RunOptions::default()).unwrap();
                assert!(derived_tree(&g, &proto.labels_of(&run.transcript)).is_none());
                accepted += usize::from(run.accept);
            }
            assert!(accepted <= 140, "{} accepted {accepted}/400", pr.name);
        }
    }
}
