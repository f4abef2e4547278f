//! Multiset equality by polynomial identity testing over a prime field, and
//! the protocols built on it: Permutation, Distinctness and DSym.
//!
//! Every node contributes items to two sides. Items are single field
//! elements or, in tuple mode, short tuples fingerprinted by Horner's rule at
//! a random point `r`. A randomly elected node supplies the shared point `s`;
//! the prover proves `prod (a - s) = prod (b - s)` by summing up a labeled
//! spanning tree.

use thiserror::Error;

use crate::engine::{
    ensure, width, DecodeError, EngineError, Msg, MsgReader, Protocol, Prover, ProverCtx, Reject,
    Speaker, Tape, Verdict,
};
use crate::field::{Field, PrimeField};
use crate::netmodel::{NetworkGraph, NodeView};
use crate::treelabel::{label_msgs, read_label_shares, LocalTree, SpanningTree, TreeLabel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SetupError {
    #[error("no prime field of size n^{exp} fits in 63 bits (n = {n})")]
    FieldTooLarge { n: usize, exp: u32 },
    #[error("element {0} does not fit the field")]
    ElementTooLarge(u64),
    #[error("expected {expected} per-node lists, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// How the node supplying the shared point is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WinnerRule {
    /// Every node draws `alpha` below n^3; the unique minimum wins.
    AlphaMin,
    /// The node whose (separately verified) ID is 1 wins.
    IdOne,
}

/// Smallest prime at least `max(n^(c+3), max_elem + 1)`.
pub fn field_for(n: usize, c: u32, max_elem: u64) -> Result<PrimeField, SetupError> {
    let exp = c + 3;
    let size = (n.max(2) as u64)
        .checked_pow(exp)
        .ok_or(SetupError::FieldTooLarge { n, exp })?;
    let min = size.max(max_elem.saturating_add(1));
    if min >= 1 << 62 {
        return Err(SetupError::FieldTooLarge { n, exp });
    }
    PrimeField::at_least(min).ok_or(SetupError::FieldTooLarge { n, exp })
}

/// Node randomness of one set-equality instance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Coins {
    pub alpha: u64,
    pub s: u64,
    pub r: u64,
}

/// The winner's coins as announced by the prover.
pub type Announcement = Coins;

/// Subtree values: winners seen, and both products.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Partial {
    pub q: u64,
    pub a: u64,
    pub b: u64,
}

/// Parameters and local logic of one (possibly tuple-valued) instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SetEqCore {
    pub field: PrimeField,
    pub n: usize,
    pub rule: WinnerRule,
    pub tuples: bool,
}

impl SetEqCore {
    pub fn new(field: PrimeField, n: usize, rule: WinnerRule, tuples: bool) -> Self {
        Self { field, n, rule, tuples }
    }

    /// Exclusive bound on `alpha`.
    pub fn alpha_bound(&self) -> u64 {
        (self.n as u64).pow(3).max(1)
    }

    fn fw(&self) -> u8 {
        self.field.bits()
    }

    fn aw(&self) -> u8 {
        width(self.alpha_bound() - 1)
    }

    fn qw(&self) -> u8 {
        width(self.n as u64)
    }

    pub fn draw(&self, tape: &mut Tape, m: &mut Msg) -> Coins {
        let p = self.field.modulus();
        let mut c = Coins::default();
        if self.rule == WinnerRule::AlphaMin {
            c.alpha = tape.below(self.alpha_bound());
            m.push(c.alpha, self.aw());
        }
        c.s = tape.below(p);
        m.push(c.s, self.fw());
        if self.tuples {
            c.r = tape.below(p);
            m.push(c.r, self.fw());
        }
        c
    }

    pub fn read_coins(&self, r: &mut MsgReader) -> Result<Coins, DecodeError> {
        let mut c = Coins::default();
        if self.rule == WinnerRule::AlphaMin {
            c.alpha = r.take(self.aw())?;
        }
        c.s = r.take(self.fw())?;
        if self.tuples {
            c.r = r.take(self.fw())?;
        }
        Ok(c)
    }

    pub fn coin_bits(&self) -> usize {
        let a = if self.rule == WinnerRule::AlphaMin { self.aw() as usize } else { 0 };
        a + self.fw() as usize * (1 + self.tuples as usize)
    }

    pub fn write_coins(&self, m: &mut Msg, c: &Coins) {
        if self.rule == WinnerRule::AlphaMin {
            m.push(c.alpha, self.aw());
        }
        m.push(c.s, self.fw());
        if self.tuples {
            m.push(c.r, self.fw());
        }
    }

    pub fn write_partial(&self, m: &mut Msg, p: &Partial) {
        m.push(p.q, self.qw());
        m.push(p.a, self.fw());
        m.push(p.b, self.fw());
    }

    pub fn read_partial(&self, r: &mut MsgReader) -> Result<Partial, DecodeError> {
        let bound = self.field.modulus();
        Ok(Partial {
            q: r.take_below(self.qw(), self.n as u64 + 1)?,
            a: r.take_below(self.fw(), bound)?,
            b: r.take_below(self.fw(), bound)?,
        })
    }

    /// Fingerprint of one item. Plain mode uses the element itself.
    pub fn fingerprint(&self, r: u64, item: &[u64]) -> u64 {
        let f = self.field;
        if self.tuples {
            item.iter().fold(f.one(), |acc, &x| f.add(f.mul(acc, r), f.embed(x)))
        } else {
            f.embed(item[0])
        }
    }

    /// `prod (fp(item) - s)`.
    pub fn product<'a>(&self, s: u64, r: u64, items: impl IntoIterator<Item = &'a [u64]>) -> u64 {
        let f = self.field;
        f.product(items.into_iter().map(|t| f.sub(self.fingerprint(r, t), s)))
    }

    /// Whether this node is the one that must confirm the announcement.
    pub fn is_winner(&self, coins: &Coins, ann: &Announcement, id_is_one: bool) -> bool {
        match self.rule {
            WinnerRule::AlphaMin => coins.alpha == ann.alpha,
            WinnerRule::IdOne => id_is_one,
        }
    }

    /// Local checks of one node.
    pub fn check(&self, node: &NodeCheck<'_>) -> Verdict {
        let f = self.field;
        let ann = node.ann;
        ensure(
            node.neighbor_anns.iter().all(|a| a == ann),
            "neighbors disagree on the announced coins",
        )?;
        if self.rule == WinnerRule::AlphaMin {
            ensure(ann.alpha <= node.coins.alpha, "announced alpha is not minimal")?;
        }
        let winner = self.is_winner(node.coins, ann, node.id_is_one);
        if winner {
            ensure(ann.s == node.coins.s && ann.r == node.coins.r, "winner's coins misreported")?;
        }
        let kids = node.child_partials;
        let q = kids.iter().map(|p| p.q).sum::<u64>() + winner as u64;
        ensure(q == node.partial.q, "winner count mismatch")?;
        let a = f.mul(
            self.product(ann.s, ann.r, node.a.iter().map(Vec::as_slice)),
            f.product(kids.iter().map(|p| p.a)),
        );
        let b = f.mul(
            self.product(ann.s, ann.r, node.b.iter().map(Vec::as_slice)),
            f.product(kids.iter().map(|p| p.b)),
        );
        ensure(a == node.partial.a, "subtree product of A mismatch")?;
        ensure(b == node.partial.b, "subtree product of B mismatch")?;
        if node.local.is_root() {
            ensure(node.partial.q == 1, "not exactly one winner")?;
            ensure(node.partial.a == node.partial.b, "products differ at the root")?;
        }
        Ok(())
    }

    /// Honest announcement for a given winner.
    pub fn announce(&self, coins: &[Coins], winner: usize) -> Announcement {
        coins[winner]
    }

    /// Node with the smallest alpha (ties to the smaller index).
    pub fn alpha_winner(&self, coins: &[Coins]) -> usize {
        (0..coins.len()).min_by_key(|&u| (coins[u].alpha, u)).unwrap_or(0)
    }

    /// Honest subtree values over `tree`. `winners[u]` marks nodes that pass
    /// the winner test.
    pub fn partials(
        &self,
        tree: &SpanningTree,
        ann: &Announcement,
        winners: &[bool],
        a: &[Vec<Vec<u64>>],
        b: &[Vec<Vec<u64>>],
    ) -> Vec<Partial> {
        let f = self.field;
        let own: Vec<Partial> = (0..tree.n())
            .map(|u| Partial {
                q: winners[u] as u64,
                a: self.product(ann.s, ann.r, a[u].iter().map(Vec::as_slice)),
                b: self.product(ann.s, ann.r, b[u].iter().map(Vec::as_slice)),
            })
            .collect();
        tree.fold_up(&own, |x, y| Partial {
            q: x.q + y.q,
            a: f.mul(x.a, y.a),
            b: f.mul(x.b, y.b),
        })
    }
}

/// Everything one node checks in a set-equality instance.
pub struct NodeCheck<'a> {
    pub coins: &'a Coins,
    pub ann: &'a Announcement,
    pub partial: &'a Partial,
    pub id_is_one: bool,
    pub local: &'a LocalTree,
    pub neighbor_anns: &'a [Announcement],
    /// In the order of `local.children`.
    pub child_partials: &'a [Partial],
    pub a: &'a [Vec<u64>],
    pub b: &'a [Vec<u64>],
}

/// Source of the per-node lists of a two-message set-equality protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lists {
    Given { a: Vec<Vec<u64>>, b: Vec<Vec<u64>> },
    /// `a_u` must lie in 1..=n; compares A with `{a mod n + 1}`.
    Permutation(Vec<u64>),
    /// Edges of G against edges of pi(G), each contributed by its smaller endpoint.
    DSym(Vec<usize>),
}

/// `u * n + v` for `u < v`.
pub fn edge_code(n: usize, u: usize, v: usize) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    (a * n + b) as u64
}

impl Lists {
    pub fn name(&self) -> &'static str {
        match self {
            Lists::Given { .. } => "set-equality",
            Lists::Permutation(_) => "permutation",
            Lists::DSym(_) => "dsym",
        }
    }

    /// The node's two lists, computed from its own view and input.
    pub fn node_lists(&self, view: &NodeView) -> Result<(Vec<u64>, Vec<u64>), Reject> {
        let u = view.id;
        Ok(match self {
            Lists::Given { a, b } => (a[u].clone(), b[u].clone()),
            Lists::Permutation(vals) => {
                let (x, n) = (vals[u], view.n as u64);
                ensure((1..=n).contains(&x), "value outside 1..=n")?;
                (vec![x], vec![x % n + 1])
            }
            Lists::DSym(pi) => {
                let higher = view.neighbors.iter().copied().filter(|&v| v > u);
                let g: Vec<u64> = higher.clone().map(|v| edge_code(view.n, u, v)).collect();
                let h: Vec<u64> = higher.map(|v| edge_code(view.n, pi[u], pi[v])).collect();
                (g, h)
            }
        })
    }

    pub fn max_elem(&self, n: usize) -> u64 {
        match self {
            Lists::Given { a, b } => a.iter().chain(b).flatten().copied().max().unwrap_or(0),
            Lists::Permutation(_) => n as u64,
            Lists::DSym(_) => (n * n) as u64,
        }
    }
}

/// Two-message set equality: nodes send coins, the prover answers with a
/// labeled tree, the announcement and subtree products.
#[derive(Clone, Debug)]
pub struct SetEquality {
    pub lists: Lists,
    pub core: SetEqCore,
}

impl SetEquality {
    /// Plain multisets with elements below n^c.
    pub fn new(a: Vec<Vec<u64>>, b: Vec<Vec<u64>>, c: u32) -> Result<Self, SetupError> {
        Self::from_lists(Lists::Given { a, b }, c)
    }

    pub fn permutation(values: Vec<u64>) -> Result<Self, SetupError> {
        Self::from_lists(Lists::Permutation(values), 1)
    }

    pub fn dsym(pi: Vec<usize>) -> Result<Self, SetupError> {
        Self::from_lists(Lists::DSym(pi), 2)
    }

    pub fn from_lists(lists: Lists, c: u32) -> Result<Self, SetupError> {
        let n = match &lists {
            Lists::Given { a, b } => {
                if a.len() != b.len() {
                    return Err(SetupError::LengthMismatch { expected: a.len(), got: b.len() });
                }
                a.len()
            }
            Lists::Permutation(v) => v.len(),
            Lists::DSym(pi) => pi.len(),
        };
        let field = field_for(n, c, lists.max_elem(n))?;
        Ok(Self { core: SetEqCore::new(field, n, WinnerRule::AlphaMin, false), lists })
    }

    /// Replaces the field (for experiments on small fields).
    pub fn with_field(mut self, field: PrimeField) -> Result<Self, SetupError> {
        let max = self.lists.max_elem(self.core.n);
        if max >= field.modulus() {
            return Err(SetupError::ElementTooLarge(max));
        }
        self.core.field = field;
        Ok(self)
    }

    fn node_lists_nested(&self, view: &NodeView) -> Result<(Vec<Vec<u64>>, Vec<Vec<u64>>), Reject> {
        let (a, b) = self.lists.node_lists(view)?;
        let wrap = |v: Vec<u64>| v.into_iter().map(|x| vec![x]).collect();
        Ok((wrap(a), wrap(b)))
    }

    fn read_proof(&self, tr: &[Msg], view: &NodeView) -> Result<(TreeLabel, Announcement, Partial), DecodeError> {
        let mut r = tr[1].reader();
        let label = TreeLabel::read(&mut r, view)?;
        let ann = self.core.read_coins(&mut r)?;
        let part = self.core.read_partial(&mut r)?;
        r.finish()?;
        Ok((label, ann, part))
    }

    /// Honest proof given the graph, a tree, coins and the winner.
    pub fn proof_msgs(
        &self,
        g: &NetworkGraph,
        tree: &SpanningTree,
        ann: &Announcement,
        partials: &[Partial],
    ) -> Vec<Msg> {
        let mut msgs = label_msgs(g, &tree.labels());
        for (m, p) in msgs.iter_mut().zip(partials) {
            self.core.write_coins(m, ann);
            self.core.write_partial(m, p);
        }
        msgs
    }

    /// Lists of every node, as the honest prover computes them.
    pub fn all_lists(&self, g: &NetworkGraph) -> (Vec<Vec<Vec<u64>>>, Vec<Vec<Vec<u64>>>) {
        (0..g.n())
            .map(|u| self.node_lists_nested(&g.view(u)).unwrap_or_default())
            .unzip()
    }

    /// Decodes the coins every node sent.
    pub fn coins_of(&self, msgs: &[Msg]) -> Vec<Coins> {
        msgs.iter()
            .map(|m| self.core.read_coins(&mut m.reader()).unwrap_or_default())
            .collect()
    }
}

impl Protocol for SetEquality {
    fn name(&self) -> String {
        self.lists.name().into()
    }
    fn schedule(&self) -> Vec<Speaker> {
        vec![Speaker::Nodes, Speaker::Prover]
    }
    fn check(&self, g: &NetworkGraph) -> Result<(), EngineError> {
        let bad = |reason: String| Err(EngineError::Incompatible { protocol: self.name(), reason });
        if g.n() != self.core.n {
            return bad(format!("built for {} nodes, graph has {}", self.core.n, g.n()));
        }
        if let Lists::Given { a, b } = &self.lists {
            if a.iter().chain(b).any(|l| l.len() > g.n()) {
                return bad("a list is longer than n".into());
            }
        }
        if let Lists::DSym(pi) = &self.lists {
            let mut seen = vec![false; g.n()];
            if pi.iter().any(|&x| x >= g.n() || std::mem::replace(&mut seen[x], true)) {
                return bad("pi is not a permutation".into());
            }
        }
        Ok(())
    }
    fn coins(&self, _: usize, _: &NodeView, tape: &mut Tape) -> Msg {
        let mut m = Msg::new();
        self.core.draw(tape, &mut m);
        m
    }
    fn share(&self, view: &NodeView, tr: &[Msg], _: usize, _: &[Vec<Msg>], port: usize) -> Msg {
        let mut m = Msg::new();
        if let Ok((label, ann, part)) = self.read_proof(tr, view) {
            label.write_share(&mut m, view, port);
            self.core.write_coins(&mut m, &ann);
            if label.parent == Some(port) {
                self.core.write_partial(&mut m, &part);
            }
        }
        m
    }
    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let coins = self.core.read_coins(&mut tr[0].reader())?;
        let (label, ann, partial) = self.read_proof(tr, view)?;
        let mut readers: Vec<MsgReader> = heard[0].iter().map(Msg::reader).collect();
        let shares = read_label_shares(view, &mut readers)?;
        let local = label.check(view, &shares)?;
        let neighbor_anns = readers
            .iter_mut()
            .map(|r| self.core.read_coins(r))
            .collect::<Result<Vec<_>, _>>()?;
        let child_partials = local
            .children
            .iter()
            .map(|&c| self.core.read_partial(&mut readers[c]))
            .collect::<Result<Vec<_>, _>>()?;
        let (a, b) = self.node_lists_nested(view)?;
        self.core.check(&NodeCheck {
            coins: &coins,
            ann: &ann,
            partial: &partial,
            id_is_one: false,
            local: &local,
            neighbor_anns: &neighbor_anns,
            child_partials: &child_partials,
            a: &a,
            b: &b,
        })
    }
}

/// Honest strategy: the true minimum-alpha node wins and all products are
/// computed faithfully. On unequal multisets this is the "honest-on-false"
/// adversary.
#[derive(Clone, Debug, Default)]
pub struct HonestSetEq;

fn honest_parts(ctx: &ProverCtx<'_, SetEquality>) -> (SpanningTree, Vec<Coins>, usize) {
    let tree = SpanningTree::bfs(ctx.graph, 0);
    let coins = ctx.proto.coins_of(ctx.round_msgs(0));
    let w = ctx.proto.core.alpha_winner(&coins);
    (tree, coins, w)
}

fn prove_with(ctx: &ProverCtx<'_, SetEquality>, tree: &SpanningTree, ann: Announcement, coins: &[Coins]) -> (Vec<Msg>, Vec<Partial>) {
    let p = ctx.proto;
    let (a, b) = p.all_lists(ctx.graph);
    let winners: Vec<bool> = coins.iter().map(|c| p.core.is_winner(c, &ann, false)).collect();
    let parts = p.core.partials(tree, &ann, &winners, &a, &b);
    (p.proof_msgs(ctx.graph, tree, &ann, &parts), parts)
}

impl Prover<SetEquality> for HonestSetEq {
    fn name(&self) -> String {
        "honest".into()
    }
    fn honest(&self) -> bool {
        true
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, SetEquality>) -> Vec<Msg> {
        let (tree, coins, w) = honest_parts(ctx);
        prove_with(ctx, &tree, coins[w], &coins).0
    }
}

/// Claims equal products at the root by overwriting the root's A with its B.
#[derive(Clone, Debug, Default)]
pub struct RootForgeSetEq;

impl Prover<SetEquality> for RootForgeSetEq {
    fn name(&self) -> String {
        "root-forge".into()
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, SetEquality>) -> Vec<Msg> {
        let (tree, coins, w) = honest_parts(ctx);
        let ann = coins[w];
        let (_, mut parts) = prove_with(ctx, &tree, ann, &coins);
        parts[tree.root].a = parts[tree.root].b;
        ctx.proto.proof_msgs(ctx.graph, &tree, &ann, &parts)
    }
}

/// Replaces the shared point by one of its own choosing that makes the two
/// products agree, keeping the true winner's alpha.
#[derive(Clone, Debug, Default)]
pub struct BiasedWinnerSetEq;

/// A point where both products agree, if a cheap search finds one: items of
/// either side (which zero a product) first, then a few fixed candidates.
pub fn colliding_point(core: &SetEqCore, a: &[Vec<u64>], b: &[Vec<u64>]) -> Option<u64> {
    let f = core.field;
    let fa: Vec<u64> = a.iter().map(|t| core.fingerprint(0, t)).collect();
    let fb: Vec<u64> = b.iter().map(|t| core.fingerprint(0, t)).collect();
    let eq = |s: u64| {
        f.product(fa.iter().map(|&x| f.sub(x, s))) == f.product(fb.iter().map(|&x| f.sub(x, s)))
    };
    fa.iter()
        .chain(&fb)
        .copied()
        .chain(0..f.modulus().min(4096))
        .find(|&s| eq(s))
}

impl Prover<SetEquality> for BiasedWinnerSetEq {
    fn name(&self) -> String {
        "biased-winner".into()
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, SetEquality>) -> Vec<Msg> {
        let (tree, coins, w) = honest_parts(ctx);
        let mut ann = coins[w];
        if !ctx.proto.core.tuples {
            let (a, b) = ctx.proto.all_lists(ctx.graph);
            let flat = |l: Vec<Vec<Vec<u64>>>| l.into_iter().flatten().collect::<Vec<_>>();
            if let Some(s) = colliding_point(&ctx.proto.core, &flat(a), &flat(b)) {
                ann.s = s;
            }
        }
        prove_with(ctx, &tree, ann, &coins).0
    }
}

/// Picks, among all nodes, the one whose own `s` best serves the prover (a
/// point where the products agree, if any) and announces its coins; the
/// winner counts are then patched so that the root sees exactly one.
#[derive(Clone, Debug, Default)]
pub struct CountForgeSetEq;

impl Prover<SetEquality> for CountForgeSetEq {
    fn name(&self) -> String {
        "count-forge".into()
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, SetEquality>) -> Vec<Msg> {
        let p = ctx.proto;
        let (tree, coins, w) = honest_parts(ctx);
        let (a, b) = p.all_lists(ctx.graph);
        let good = |c: &Coins| {
            let ann = *c;
            let parts = p.core.partials(&tree, &ann, &vec![false; coins.len()], &a, &b);
            parts[tree.root].a == parts[tree.root].b
        };
        let chosen = (0..coins.len()).find(|&u| good(&coins[u])).unwrap_or(w);
        let ann = coins[chosen];
        let (_, mut parts) = prove_with(ctx, &tree, ann, &coins);
        // every ancestor of the chosen node reports exactly one winner below
        for part in parts.iter_mut() {
            part.q = part.q.min(1);
        }
        p.proof_msgs(ctx.graph, &tree, &ann, &parts)
    }
}

/// The registered set-equality adversaries.
pub fn seteq_adversaries() -> Vec<Box<dyn Prover<SetEquality>>> {
    vec![
        Box::new(HonestSetEq),
        Box::new(RootForgeSetEq),
        Box::new(BiasedWinnerSetEq),
        Box::new(CountForgeSetEq),
    ]
}

/// Three messages: the prover names each node's successor value in sorted
/// cyclic order, nodes send coins, the prover proves both that exactly one
/// node descends and that successors are a rearrangement of the values.
#[derive(Clone, Debug)]
pub struct Distinctness {
    pub values: Vec<u64>,
    pub core: SetEqCore,
}

impl Distinctness {
    pub fn new(values: Vec<u64>) -> Result<Self, SetupError> {
        let n = values.len();
        let max = values.iter().copied().max().unwrap_or(0);
        let field = field_for(n, 1, max.saturating_add(1))?;
        Ok(Self { values, core: SetEqCore::new(field, n, WinnerRule::AlphaMin, false) })
    }

    fn vw(&self) -> u8 {
        width(self.values.iter().copied().max().unwrap_or(0).saturating_add(1))
    }

    fn dw(&self) -> u8 {
        width(self.core.n as u64)
    }

    fn read_proof(
        &self,
        tr: &[Msg],
        view: &NodeView,
    ) -> Result<(u64, TreeLabel, Announcement, Partial, u64), DecodeError> {
        let mut r0 = tr[0].reader();
        let y = r0.take(self.vw())?;
        r0.finish()?;
        let mut r = tr[2].reader();
        let label = TreeLabel::read(&mut r, view)?;
        let ann = self.core.read_coins(&mut r)?;
        let part = self.core.read_partial(&mut r)?;
        let d = r.take(self.dw())?;
        r.finish()?;
        Ok((y, label, ann, part, d))
    }

    /// Sorted-cycle successor values, ties by node id.
    pub fn successors(values: &[u64]) -> Vec<u64> {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&u| (values[u], u));
        let mut y = vec![0; n];
        for k in 0..n {
            y[order[k]] = values[order[(k + 1) % n]];
        }
        y
    }

    fn y_msgs(&self, ys: &[u64]) -> Vec<Msg> {
        ys.iter()
            .map(|&y| {
                let mut m = Msg::new();
                m.push(y, self.vw());
                m
            })
            .collect()
    }

    /// Round-2 proof for the given successor claims.
    fn prove(
        &self,
        g: &NetworkGraph,
        ys: &[u64],
        coins: &[Coins],
        forge: impl FnOnce(&SpanningTree, &mut [Partial], &mut [u64]),
    ) -> Vec<Msg> {
        let tree = SpanningTree::bfs(g, 0);
        let ann = coins[self.core.alpha_winner(coins)];
        let winners: Vec<bool> = coins.iter().map(|c| self.core.is_winner(c, &ann, false)).collect();
        let a: Vec<Vec<Vec<u64>>> = self.values.iter().map(|&x| vec![vec![x]]).collect();
        let b: Vec<Vec<Vec<u64>>> = ys.iter().map(|&y| vec![vec![y]]).collect();
        let mut parts = self.core.partials(&tree, &ann, &winners, &a, &b);
        let desc: Vec<u64> = (0..g.n()).map(|u| (ys[u] <= self.values[u]) as u64).collect();
        let mut ds = tree.fold_up(&desc, |x, y| x + y);
        forge(&tree, &mut parts, &mut ds);
        let mut msgs = label_msgs(g, &tree.labels());
        for u in 0..g.n() {
            self.core.write_coins(&mut msgs[u], &ann);
            self.core.write_partial(&mut msgs[u], &parts[u]);
            msgs[u].push(ds[u].min((1 << self.dw()) - 1), self.dw());
        }
        msgs
    }

    fn coins_of(&self, msgs: &[Msg]) -> Vec<Coins> {
        msgs.iter()
            .map(|m| self.core.read_coins(&mut m.reader()).unwrap_or_default())
            .collect()
    }
}

impl Protocol for Distinctness {
    fn name(&self) -> String {
        "distinctness".into()
    }
    fn schedule(&self) -> Vec<Speaker> {
        vec![Speaker::Prover, Speaker::Nodes, Speaker::Prover]
    }
    fn check(&self, g: &NetworkGraph) -> Result<(), EngineError> {
        if g.n() != self.values.len() {
            return Err(EngineError::Incompatible {
                protocol: self.name(),
                reason: "one value per node required".into(),
            });
        }
        Ok(())
    }
    fn coins(&self, _: usize, _: &NodeView, tape: &mut Tape) -> Msg {
        let mut m = Msg::new();
        self.core.draw(tape, &mut m);
        m
    }
    fn share(&self, view: &NodeView, tr: &[Msg], _: usize, _: &[Vec<Msg>], port: usize) -> Msg {
        let mut m = Msg::new();
        if let Ok((_, label, ann, part, d)) = self.read_proof(tr, view) {
            label.write_share(&mut m, view, port);
            self.core.write_coins(&mut m, &ann);
            if label.parent == Some(port) {
                self.core.write_partial(&mut m, &part);
                m.push(d, self.dw());
            }
        }
        m
    }
    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        if view.n <= 1 {
            return Ok(());
        }
        let coins = self.core.read_coins(&mut tr[1].reader())?;
        let (y, label, ann, partial, d) = self.read_proof(tr, view)?;
        let mut readers: Vec<MsgReader> = heard[0].iter().map(Msg::reader).collect();
        let shares = read_label_shares(view, &mut readers)?;
        let local = label.check(view, &shares)?;
        let neighbor_anns = readers
            .iter_mut()
            .map(|r| self.core.read_coins(r))
            .collect::<Result<Vec<_>, _>>()?;
        let mut child_partials = Vec::new();
        let mut dsum = 0;
        for &c in &local.children {
            child_partials.push(self.core.read_partial(&mut readers[c])?);
            dsum += readers[c].take(self.dw())?;
        }
        let a = self.values[view.id];
        dsum += (y <= a) as u64;
        ensure(dsum == d, "descent count mismatch")?;
        if local.is_root() {
            ensure(d == 1, "not exactly one descent")?;
        }
        self.core.check(&NodeCheck {
            coins: &coins,
            ann: &ann,
            partial: &partial,
            id_is_one: false,
            local: &local,
            neighbor_anns: &neighbor_anns,
            child_partials: &child_partials,
            a: &[vec![a]],
            b: &[vec![y]],
        })
    }
}

/// Honest strategy; with repeated values ties are broken by node id, which
/// yields an extra descent ("ties-honest").
#[derive(Clone, Debug, Default)]
pub struct HonestDistinct;

impl Prover<Distinctness> for HonestDistinct {
    fn name(&self) -> String {
        "honest".into()
    }
    fn honest(&self) -> bool {
        true
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, Distinctness>) -> Vec<Msg> {
        let p = ctx.proto;
        let ys = Distinctness::successors(&p.values);
        if ctx.round == 0 {
            return p.y_msgs(&ys);
        }
        let coins = p.coins_of(ctx.round_msgs(1));
        p.prove(ctx.graph, &ys, &coins, |_, _, _| {})
    }
}

/// True successors, but the root's descent count is forced to one.
#[derive(Clone, Debug, Default)]
pub struct SumForgeDistinct;

impl Prover<Distinctness> for SumForgeDistinct {
    fn name(&self) -> String {
        "sum-forge".into()
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, Distinctness>) -> Vec<Msg> {
        let p = ctx.proto;
        let ys = Distinctness::successors(&p.values);
        if ctx.round == 0 {
            return p.y_msgs(&ys);
        }
        let coins = p.coins_of(ctx.round_msgs(1));
        p.prove(ctx.graph, &ys, &coins, |t, _, ds| ds[t.root] = 1)
    }
}

/// Successor claims with exactly one descent that are not a rearrangement
/// of the values: every node claims a value one above its own, except one
/// maximal node which claims the minimum.
#[derive(Clone, Debug, Default)]
pub struct SetForgeDistinct;

impl Prover<Distinctness> for SetForgeDistinct {
    fn name(&self) -> String {
        "set-forge".into()
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, Distinctness>) -> Vec<Msg> {
        let p = ctx.proto;
        let vals = &p.values;
        let top = (0..vals.len()).max_by_key(|&u| (vals[u], u)).unwrap_or(0);
        let min = vals.iter().copied().min().unwrap_or(0);
        let ys: Vec<u64> = (0..vals.len())
            .map(|u| if u == top { min } else { vals[u] + 1 })
            .collect();
        if ctx.round == 0 {
            return p.y_msgs(&ys);
        }
        let coins = p.coins_of(ctx.round_msgs(1));
        p.prove(ctx.graph, &ys, &coins, |_, _, _| {})
    }
}

pub fn distinctness_adversaries() -> Vec<Box<dyn Prover<Distinctness>>> {
    vec![Box::new(HonestDistinct), Box::new(SumForgeDistinct), Box::new(SetForgeDistinct)]
}

/// `prod (a - x) - prod (b - x)` at `x`.
pub fn difference_poly(f: PrimeField, a: &[u64], b: &[u64], x: u64) -> u64 {
    let pa = f.product(a.iter().map(|&v| f.sub(f.embed(v), x)));
    let pb = f.product(b.iter().map(|&v| f.sub(f.embed(v), x)));
    f.sub(pa, pb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{monte_carlo, run_protocol, RunOptions};
    use crate::netmodel::{generate, GraphKind};

    fn singletons(v: &[u64]) -> Vec<Vec<u64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    fn rate<Pr: Prover<SetEquality> + ?Sized>(p: &SetEquality, g: &NetworkGraph, pr: &Pr, trials: u64) -> f64 {
        monte_carlo(p, g, pr, trials, 7, RunOptions::default()).unwrap().accept_rate
    }

    #[test]
    fn field_sizes() {
        assert_eq!(field_for(4, 1, 0).unwrap().modulus(), 257);
        assert!(field_for(16, 1, 0).unwrap().modulus() >= 65536);
        assert!(field_for(1 << 20, 3, 0).is_err());
    }

    #[test]
    fn difference_is_zero_iff_equal_multisets() {
        let f = PrimeField::new(101).unwrap();
        let mut multisets = vec![vec![]];
        for len in 1..=4 {
            let mut next = Vec::new();
            for m in multisets.iter().filter(|m: &&Vec<u64>| m.len() == len - 1) {
                let last = m.last().copied().unwrap_or(0);
                for x in last..=4 {
                    let mut e = m.clone();
                    e.push(x);
                    next.push(e);
                }
            }
            multisets.extend(next);
        }
        for a in &multisets {
            for b in &multisets {
                let zero = (0..101).all(|x| difference_poly(f, a, b, x) == 0);
                assert_eq!(zero, a == b, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn root_counts_respect_degree() {
        let f = PrimeField::new(1009).unwrap();
        for (a, b) in [
            (vec![1, 2, 3, 4], vec![1, 2, 3, 5]),
            (vec![1, 1, 2], vec![1, 2, 2]),
            (vec![1, 1, 3], vec![2, 2, 4]),
        ] {
            let roots = (0..1009).filter(|&x| difference_poly(f, &a, &b, x) == 0).count();
            assert!(roots <= a.len().max(b.len()), "{roots}");
        }
    }

    #[test]
    fn honest_equal_multisets_accept() {
        let g = generate(&GraphKind::Cycle(6), 0).unwrap();
        let a = vec![vec![1, 2], vec![3], vec![], vec![4, 4], vec![5], vec![6]];
        let b = vec![vec![6, 5], vec![], vec![4], vec![3, 2], vec![1, 4], vec![]];
        let p = SetEquality::new(a, b, 1).unwrap();
        assert!(rate(&p, &g, &HonestSetEq, 200) >= 1.0 - 1.0 / 12.0);
    }

    #[test]
    fn tampered_multisets_reject() {
        let g = generate(&GraphKind::Path(4), 0).unwrap();
        let p = SetEquality::new(singletons(&[1, 2, 3, 4]), singletons(&[1, 2, 3, 5]), 1).unwrap();
        for adv in seteq_adversaries() {
            assert!(rate(&p, &g, &adv, 300) <= 0.02, "{}", adv.name());
        }
        let p = SetEquality::new(vec![vec![1, 1, 2], vec![], vec![]], vec![vec![1], vec![2, 2], vec![]], 1).unwrap();
        let g3 = generate(&GraphKind::Path(3), 0).unwrap();
        assert!(rate(&p, &g3, &HonestSetEq, 300) <= 0.02);
    }

    #[test]
    fn biased_point_exists_but_is_refused() {
        let p = SetEquality::new(singletons(&[1, 2, 3, 4]), singletons(&[1, 2, 3, 5]), 1).unwrap();
        let flat = |v: &[u64]| singletons(v);
        assert!(colliding_point(&p.core, &flat(&[1, 2, 3, 4]), &flat(&[1, 2, 3, 5])).is_some());
        let g = generate(&GraphKind::Path(4), 0).unwrap();
        let r = run_protocol(&p, &g, &BiasedWinnerSetEq, 3, RunOptions::default()).unwrap();
        assert!(!r.accept);
        assert!(r.rejections().iter().any(|(_, w)| w.contains("winner")));
    }

    #[test]
    fn permutation_examples() {
        let tri = generate(&GraphKind::Cycle(3), 0).unwrap();
        let ok = SetEquality::permutation(vec![2, 3, 1]).unwrap();
        assert!(rate(&ok, &tri, &HonestSetEq, 400) >= 1.0 - 1.0 / 6.0);
        let bad = SetEquality::permutation(vec![1, 1, 3]).unwrap();
        assert!(rate(&bad, &tri, &HonestSetEq, 200) <= 0.02);
        let out_of_range = SetEquality::permutation(vec![1, 2, 4]).unwrap();
        assert_eq!(rate(&out_of_range, &tri, &HonestSetEq, 10), 0.0);
        let one = NetworkGraph::from_edges(1, &[]).unwrap();
        let single = SetEquality::permutation(vec![1]).unwrap();
        assert_eq!(rate(&single, &one, &HonestSetEq, 20), 1.0);
    }

    #[test]
    fn distinctness_examples() {
        let tri = generate(&GraphKind::Path(3), 0).unwrap();
        assert_eq!(Distinctness::successors(&[5, 9, 7]), vec![7, 5, 9]);
        let ok = Distinctness::new(vec![5, 9, 7]).unwrap();
        let s = monte_carlo(&ok, &tri, &HonestDistinct, 100, 1, RunOptions::default()).unwrap();
        assert!(s.accept_rate >= 1.0 - 1.0 / 6.0);
        assert_eq!(s.rounds, 3);
        let dup = Distinctness::new(vec![5, 5, 7]).unwrap();
        for adv in distinctness_adversaries() {
            let s = monte_carlo(&dup, &tri, &adv, 300, 1, RunOptions::default()).unwrap();
            assert!(s.accept_rate <= 0.02, "{}", adv.name());
        }
        let one = NetworkGraph::from_edges(1, &[]).unwrap();
        let single = Distinctness::new(vec![42]).unwrap();
        let r = run_protocol(&single, &one, &HonestDistinct, 0, RunOptions::default()).unwrap();
        assert!(r.accept);
    }

    #[test]
    fn dsym_examples() {
        let c4 = generate(&GraphKind::Cycle(4), 0).unwrap();
        let rot = SetEquality::dsym(vec![1, 2, 3, 0]).unwrap();
        assert!(rate(&rot, &c4, &HonestSetEq, 400) >= 1.0 - 1.0 / 8.0);
        let p3 = generate(&GraphKind::Path(3), 0).unwrap();
        let swap = SetEquality::dsym(vec![2, 1, 0]).unwrap();
        assert!(rate(&swap, &p3, &HonestSetEq, 400) >= 1.0 - 1.0 / 6.0);
        let three = SetEquality::dsym(vec![1, 2, 0]).unwrap();
        assert!(rate(&three, &p3, &HonestSetEq, 200) <= 0.02);
    }

    #[test]
    fn tuple_mode_separates_orderings() {
        let f = PrimeField::new(1_000_003).unwrap();
        let core = SetEqCore::new(f, 4, WinnerRule::AlphaMin, true);
        let r = 12345;
        assert_ne!(core.fingerprint(r, &[1, 2]), core.fingerprint(r, &[2, 1]));
        assert_ne!(core.fingerprint(r, &[0, 5]), core.fingerprint(r, &[5]));
    }

    #[test]
    fn bandwidth_is_logarithmic() {
        let g = generate(&GraphKind::Cycle(16), 0).unwrap();
        let v: Vec<u64> = (1..=16).collect();
        let p = SetEquality::new(singletons(&v), singletons(&v), 1).unwrap();
        let r = run_protocol(&p, &g, &HonestSetEq, 0, RunOptions::default()).unwrap();
        let logp = p.core.field.bits() as usize;
        assert!(r.max_bits_per_node_per_round() <= 6 * logp);
    }
}
