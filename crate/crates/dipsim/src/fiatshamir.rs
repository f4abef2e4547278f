//! Random-oracle graph digests and the Fiat-Shamir transform.
//!
//! The oracle is keyed SHA-256 truncated to λ bits. A prover-chosen spanning
//! tree is hashed bottom-up into a Merkle digest of the graph, and every
//! node's coins in round j are expanded from R(y_r, own transcript, j, id).
//! The result is a one-message labeling scheme whose nodes recompute their
//! challenges and run the original checks.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::engine::{
    ensure, DecodeError, EngineError, Msg, MsgReader, Protocol, Prover, ProverCtx, Speaker, Tape, Verdict, Word,
};
use crate::fieldset::{HonestSetEq, SetEquality};
use crate::netmodel::{NetworkGraph, NodeView};
use crate::treelabel::{read_label_shares, SpanningTree, TreeLabel};

const DIGEST_TAG: u64 = 1;
const COIN_TAG: u64 = 2;

/// Keyed digest standing in for the random oracle, with an exact query count.
#[derive(Debug)]
pub struct Oracle {
    key: u64,
    lambda: u8,
    queries: AtomicU64,
}

impl Clone for Oracle {
    fn clone(&self) -> Self {
        Self { key: self.key, lambda: self.lambda, queries: AtomicU64::new(self.queries()) }
    }
}

impl Oracle {
    pub fn new(key: u64, lambda: u8) -> Self {
        assert!((1..=64).contains(&lambda), "output width must be 1..=64 bits");
        Self { key, lambda, queries: AtomicU64::new(0) }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn lambda(&self) -> u8 {
        self.lambda
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    fn hash(&self, data: &[u64]) -> [u8; 32] {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let mut h = Sha256::new();
        h.update(self.key.to_le_bytes());
        h.update((data.len() as u64).to_le_bytes());
        for x in data {
            h.update(x.to_le_bytes());
        }
        h.finalize().into()
    }

    /// One query, answered with λ bits.
    pub fn query(&self, data: &[u64]) -> u64 {
        let out = self.hash(data);
        let v = u64::from_le_bytes(out[..8].try_into().expect("8 bytes"));
        if self.lambda == 64 {
            v
        } else {
            v & ((1 << self.lambda) - 1)
        }
    }

    /// One query whose full answer seeds a coin stream.
    pub fn stream(&self, data: &[u64]) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.hash(data))
    }
}

/// Per-node Merkle values of a graph along a spanning tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphDigest {
    pub y: Vec<u64>,
    pub root: usize,
}

impl GraphDigest {
    pub fn root_value(&self) -> u64 {
        self.y[self.root]
    }
}

/// y_u = R(y of the children in port order, N(u)); leaves hash N(u) alone.
pub fn node_digest(oracle: &Oracle, view: &NodeView, children: &[u64]) -> u64 {
    let mut data = Vec::with_capacity(4 + children.len() + view.degree());
    data.push(DIGEST_TAG);
    data.push(children.len() as u64);
    data.extend_from_slice(children);
    data.push(view.id as u64);
    data.push(view.degree() as u64);
    data.extend(view.neighbors.iter().map(|&v| v as u64));
    oracle.query(&data)
}

/// Bottom-up digest; one query per node.
pub fn merkle_digest(oracle: &Oracle, g: &NetworkGraph, tree: &SpanningTree) -> GraphDigest {
    let mut y = vec![0; g.n()];
    for u in tree.postorder() {
        let kids: Vec<u64> = tree.children[u].iter().map(|&c| y[c]).collect();
        y[u] = node_digest(oracle, &g.view(u), &kids);
    }
    GraphDigest { y, root: tree.root }
}

/// Uniform spanning tree by a random walk from a random start.
pub fn random_spanning_tree(g: &NetworkGraph, rng: &mut impl Rng) -> SpanningTree {
    let n = g.n();
    let root = rng.gen_range(0..n);
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let (mut cur, mut left) = (root, n - 1);
    while left > 0 {
        let &next = g.neighbors(cur).choose(rng).expect("connected graph");
        if !seen[next] {
            seen[next] = true;
            parent[next] = Some(cur);
            left -= 1;
        }
        cur = next;
    }
    SpanningTree::from_parents(g, root, &parent).expect("walk edges form a tree")
}

/// Fiat-Shamir version of a public-coin protocol: one prover message per
/// node carrying the digest tree, y_u, y_r and all inner prover messages.
#[derive(Debug)]
pub struct FiatShamir<P> {
    pub inner: P,
    pub oracle: Oracle,
}

/// Width of the per-round word count in an FS label.
const COUNT_WIDTH: u8 = 16;

struct Label {
    tree: TreeLabel,
    y: u64,
    y_root: u64,
    rounds: Vec<Msg>,
}

impl<P: Protocol> FiatShamir<P> {
    pub fn new(inner: P, key: u64, lambda: u8) -> Self {
        Self { inner, oracle: Oracle::new(key, lambda) }
    }

    fn lambda(&self) -> u8 {
        self.oracle.lambda()
    }

    /// Coins of node `view.id` in inner round `round`, given its earlier
    /// inner messages.
    pub fn derive_coins(&self, view: &NodeView, y_root: u64, round: usize, earlier: &[Msg]) -> Msg {
        let mut data = vec![COIN_TAG, y_root, round as u64, view.id as u64];
        for m in earlier {
            data.push(m.words().len() as u64);
            data.extend(m.words().iter().flat_map(|w| [w.value, w.width as u64]));
        }
        let mut tape = Tape::from_rng(self.oracle.stream(&data));
        self.inner.coins(round, view, &mut tape)
    }

    /// Runs the inner interaction with oracle coins. Returns `transcript[r][u]`.
    pub fn simulate<Pr: Prover<P> + ?Sized>(
        &self,
        g: &NetworkGraph,
        y_root: u64,
        prover: &Pr,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Vec<Msg>> {
        let n = g.n();
        let mut tr: Vec<Vec<Msg>> = Vec::new();
        for (r, sp) in self.inner.schedule().into_iter().enumerate() {
            let msgs = match sp {
                Speaker::Prover => {
                    let mut ctx = ProverCtx { proto: &self.inner, graph: g, round: r, transcript: &tr, rng };
                    let mut out = prover.respond(&mut ctx);
                    out.resize(n, Msg::new());
                    out
                }
                Speaker::Nodes => (0..n)
                    .map(|u| {
                        let earlier: Vec<Msg> = tr.iter().map(|round| round[u].clone()).collect();
                        self.derive_coins(&g.view(u), y_root, r, &earlier)
                    })
                    .collect(),
            };
            tr.push(msgs);
        }
        tr
    }

    /// The labeling: digest tree, Merkle values and inner prover messages.
    pub fn assemble(&self, g: &NetworkGraph, tree: &SpanningTree, digest: &GraphDigest, inner: &[Vec<Msg>]) -> Vec<Msg> {
        let labels = tree.labels();
        let sched = self.inner.schedule();
        (0..g.n())
            .map(|u| {
                let view = g.view(u);
                let mut m = Msg::new();
                labels[u].write(&mut m, &view);
                m.push(digest.y[u], self.lambda());
                m.push(digest.root_value(), self.lambda());
                for (r, sp) in sched.iter().enumerate() {
                    if *sp == Speaker::Prover {
                        let words = inner[r][u].words();
                        m.push(words.len() as u64, COUNT_WIDTH);
                        m.append(&inner[r][u]);
                    }
                }
                m
            })
            .collect()
    }

    fn read_label(&self, msg: &Msg, view: &NodeView) -> Result<Label, DecodeError> {
        let mut r = msg.reader();
        let tree = TreeLabel::read(&mut r, view)?;
        let y = r.take(self.lambda())?;
        let y_root = r.take(self.lambda())?;
        let mut rounds = Vec::new();
        for sp in self.inner.schedule() {
            if sp == Speaker::Prover {
                let k = r.take(COUNT_WIDTH)? as usize;
                let words = take_words(&mut r, k)?;
                rounds.push(Msg::from(words));
            }
        }
        r.finish()?;
        Ok(Label { tree, y, y_root, rounds })
    }

    /// The node's inner transcript, coins recomputed from the oracle.
    fn inner_transcript(&self, view: &NodeView, label: &Label) -> Vec<Msg> {
        let mut tr = Vec::new();
        let mut prover_msgs = label.rounds.iter();
        for (r, sp) in self.inner.schedule().into_iter().enumerate() {
            let m = match sp {
                Speaker::Prover => prover_msgs.next().cloned().unwrap_or_default(),
                Speaker::Nodes => self.derive_coins(view, label.y_root, r, &tr),
            };
            tr.push(m);
        }
        tr
    }

    fn digest_share(&self, m: &mut Msg, view: &NodeView, label: &Label, port: usize) {
        label.tree.write_share(m, view, port);
        m.push(label.y, self.lambda());
        m.push(label.y_root, self.lambda());
    }
}

fn take_words(r: &mut MsgReader, k: usize) -> Result<Vec<Word>, DecodeError> {
    // Widths are not known to the outer layer; every field is taken as is.
    let mut out = Vec::with_capacity(k);
    let rest = r.clone().rest();
    let words = rest.words();
    if words.len() < k {
        return Err(DecodeError::Truncated);
    }
    for w in &words[..k] {
        out.push(*w);
        r.take(w.width)?;
    }
    Ok(out)
}

impl<P: Protocol> Protocol for FiatShamir<P> {
    fn name(&self) -> String {
        format!("fs({})", self.inner.name())
    }
    fn schedule(&self) -> Vec<Speaker> {
        vec![Speaker::Prover]
    }
    fn check(&self, g: &NetworkGraph) -> Result<(), EngineError> {
        if !self.inner.public_coin() {
            return Err(EngineError::Incompatible {
                protocol: self.name(),
                reason: "the inner protocol is not public-coin".into(),
            });
        }
        self.inner.check(g)
    }
    fn exchange_phases(&self) -> usize {
        self.inner.exchange_phases().max(1)
    }
    fn coins(&self, _: usize, _: &NodeView, _: &mut Tape) -> Msg {
        Msg::new()
    }
    fn share(&self, view: &NodeView, tr: &[Msg], phase: usize, heard: &[Vec<Msg>], port: usize) -> Msg {
        let mut m = Msg::new();
        let Ok(label) = self.read_label(&tr[0], view) else { return m };
        let inner_tr = self.inner_transcript(view, &label);
        let inner_heard = strip_digest(self, view, heard);
        if phase == 0 {
            self.digest_share(&mut m, view, &label, port);
        }
        if phase < self.inner.exchange_phases() {
            if let Ok(h) = inner_heard {
                m.append(&self.inner.share(view, &inner_tr, phase, &h, port));
            }
        }
        m
    }
    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let label = self.read_label(&tr[0], view)?;
        let mut readers: Vec<MsgReader> = heard[0].iter().map(Msg::reader).collect();
        let shares = read_label_shares(view, &mut readers)?;
        let local = label.tree.check(view, &shares)?;
        let mut ys = Vec::with_capacity(readers.len());
        for r in readers.iter_mut() {
            let y = r.take(self.lambda())?;
            let yr = r.take(self.lambda())?;
            ensure(yr == label.y_root, "root digest differs from a neighbor")?;
            ys.push(y);
        }
        if local.is_root() {
            ensure(label.y == label.y_root, "root digest is not the root's value")?;
        }
        let kids: Vec<u64> = local.children.iter().map(|&c| ys[c]).collect();
        ensure(label.y == node_digest(&self.oracle, view, &kids), "Merkle value wrong")?;
        let inner_tr = self.inner_transcript(view, &label);
        let mut inner_heard: Vec<Vec<Msg>> = vec![readers.into_iter().map(MsgReader::rest).collect()];
        inner_heard.extend(heard.iter().skip(1).cloned());
        inner_heard.truncate(self.inner.exchange_phases());
        self.inner.verify(view, &inner_tr, &inner_heard)
    }
}

/// Inner parts of what arrived so far (phase 0 carries the digest first).
fn strip_digest<P: Protocol>(fs: &FiatShamir<P>, view: &NodeView, heard: &[Vec<Msg>]) -> Result<Vec<Vec<Msg>>, DecodeError> {
    let mut out = Vec::with_capacity(heard.len());
    for (k, phase) in heard.iter().enumerate() {
        if k == 0 {
            let mut stripped = Vec::with_capacity(phase.len());
            for m in phase {
                let mut r = m.reader();
                TreeLabel::read_share(&mut r, view)?;
                r.take(fs.lambda())?;
                r.take(fs.lambda())?;
                stripped.push(r.rest());
            }
            out.push(stripped);
        } else {
            out.push(phase.clone());
        }
    }
    Ok(out)
}

/// Honest FS prover: digests a BFS tree and runs the inner prover against
/// oracle coins.
#[derive(Clone, Debug)]
pub struct FsProver<Pr> {
    pub inner: Pr,
    pub root: usize,
}

impl<P: Protocol, Pr: Prover<P>> Prover<FiatShamir<P>> for FsProver<Pr> {
    fn name(&self) -> String {
        format!("fs-{}", self.inner.name())
    }
    fn honest(&self) -> bool {
        self.inner.honest()
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, FiatShamir<P>>) -> Vec<Msg> {
        let fs = ctx.proto;
        let g = ctx.graph;
        let tree = SpanningTree::bfs(g, self.root.min(g.n() - 1));
        let digest = merkle_digest(&fs.oracle, g, &tree);
        let inner = fs.simulate(g, digest.root_value(), &self.inner, ctx.rng);
        fs.assemble(g, &tree, &digest, &inner)
    }
}

/// Grinds spanning trees against FS set equality: each attempt digests a
/// fresh random tree, derives the coins and keeps the first attempt whose
/// winner point makes the two products collide. `budget` counts oracle
/// queries; an attempt costs 2n of them (digest plus one challenge per node).
#[derive(Clone, Copy, Debug)]
pub struct GrindingForger {
    pub budget: u64,
}

impl GrindingForger {
    /// Whole attempts that fit in the budget on `n` nodes (at least one).
    pub fn attempts(&self, n: usize) -> u64 {
        (self.budget / (2 * n as u64)).max(1)
    }

    /// Whether the coins of an attempt let the honest proof through.
    fn lucky(fs: &FiatShamir<SetEquality>, g: &NetworkGraph, coins: &[Msg]) -> bool {
        let core = &fs.inner.core;
        let c = fs.inner.coins_of(coins);
        let w = core.alpha_winner(&c);
        let (a, b) = fs.inner.all_lists(g);
        let pa = core.product(c[w].s, c[w].r, a.iter().flatten().map(Vec::as_slice));
        let pb = core.product(c[w].s, c[w].r, b.iter().flatten().map(Vec::as_slice));
        pa == pb
    }
}

impl Prover<FiatShamir<SetEquality>> for GrindingForger {
    fn name(&self) -> String {
        format!("grind({})", self.budget)
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, FiatShamir<SetEquality>>) -> Vec<Msg> {
        let fs = ctx.proto;
        let g = ctx.graph;
        let mut last = None;
        for _ in 0..self.attempts(g.n()) {
            let tree = random_spanning_tree(g, ctx.rng);
            let digest = merkle_digest(&fs.oracle, g, &tree);
            let coins: Vec<Msg> = (0..g.n()).map(|u| fs.derive_coins(&g.view(u), digest.root_value(), 0, &[])).collect();
            let hit = Self::lucky(fs, g, &coins);
            last = Some((tree, digest));
            if hit {
                break;
            }
        }
        let (tree, digest) = last.expect("at least one attempt");
        let inner = fs.simulate(g, digest.root_value(), &HonestSetEq, ctx.rng);
        fs.assemble(g, &tree, &digest, &inner)
    }
}

/// Oracle queries the honest prover makes: one digest pass plus one
/// challenge per node and coin round.
pub fn honest_query_count<P: Protocol>(inner: &P, n: usize) -> u64 {
    let coin_rounds = inner.schedule().iter().filter(|&&s| s == Speaker::Nodes).count();
    (n * (1 + coin_rounds)) as u64
}

/// Width of a label's digest part.
pub fn digest_bits(view: &NodeView, lambda: u8) -> usize {
    TreeLabel::bits(view) + 2 * lambda as usize
}
