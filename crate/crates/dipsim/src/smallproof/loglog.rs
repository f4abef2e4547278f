//! Applications with O(log b) bits per node for block parameter b, so
//! O(log log n) at the default b = Θ(log n): set equality, DSym and
//! sum-up-tree.
//!
//! All three share one shape. The prover labels the tree and tags the
//! blocks; nodes answer with tree coins and one random limb each; the
//! prover closes with the tree parities and super-protocol shares. Limbs of
//! the root-block members form a shared random value which an equality
//! super protocol spreads to every block.

use crate::engine::{
    ensure, width, DecodeError, EngineError, Msg, MsgReader, Protocol, Prover, ProverCtx, Reject, Speaker, Tape,
    Verdict,
};
use crate::field::{next_prime, Field, PrimeField};
use crate::fieldset::{Lists, SetupError};
use crate::netmodel::{NetworkGraph, NodeView};

use super::blocks::{default_block, BlockDecomposition, BlockProtocol};
use super::o1tree::DEFAULT_REPS;
use super::superproto::{Aggregate, ShardLayout, SuperGadget, SuperNode, SuperShare};

/// Smallest field order the loglog suite uses, so that tiny graphs keep a
/// useful soundness margin.
pub const MIN_FIELD: u64 = 1 << 10;

/// Block-scale field: the first prime above max(b^4, max element, 2^10).
pub fn block_field(b: usize, max_elem: u64) -> Result<PrimeField, SetupError> {
    let b4 = (b as u64).saturating_pow(4);
    let min = b4.max(max_elem.saturating_add(1)).max(MIN_FIELD);
    next_prime(min).and_then(PrimeField::new).ok_or(SetupError::ElementTooLarge(max_elem))
}

/// A random value sampled by the root block, one limb per member, and
/// spread to all blocks by an equality super protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SharedCoin {
    pub gadget: SuperGadget,
}

impl SharedCoin {
    /// `bits` random bits reduced mod `modulus`.
    pub fn new(bits: u8, min_members: usize, modulus: u64) -> Self {
        Self { gadget: SuperGadget::new(Aggregate::Equal, bits, min_members, modulus) }
    }

    pub fn draw(&self, tape: &mut Tape, m: &mut Msg) {
        let l = self.gadget.layout.limb;
        m.push(tape.bits(l), l);
    }

    pub fn read_coin(&self, r: &mut MsgReader) -> Result<u64, DecodeError> {
        r.take(self.gadget.layout.limb)
    }

    /// The value the root block drew, from every node's coin limb.
    pub fn value(&self, dec: &BlockDecomposition, coins: &[u64]) -> u64 {
        let lay = self.gadget.layout;
        let mut limbs = vec![0; lay.limbs()];
        for &x in &dec.blocks[dec.root_block].members {
            let pos = dec.tags[x].pos as usize;
            if pos < limbs.len() {
                limbs[pos] = coins[x];
            }
        }
        lay.join(&limbs) as u64
    }

    /// Honest shares spreading `value`.
    pub fn shares(&self, dec: &BlockDecomposition, value: u64) -> Vec<SuperShare> {
        self.gadget.shares(dec, &vec![value; dec.blocks.len()], &vec![0; dec.n()])
    }

    /// Root-block members must shard exactly their own coins.
    pub fn check(&self, node: &SuperNode, coin: u64) -> Result<u64, Reject> {
        if node.tags.root_block && node.lb.parent.is_some() && (node.tags.pos as usize) < self.gadget.layout.limbs() {
            ensure(node.own.limb == coin, "root block shard differs from the member's coin")?;
        }
        self.gadget.check(node)
    }
}

/// Everything a loglog node parses besides the frame.
struct Parsed<T> {
    own: T,
    nbr: Vec<T>,
}

fn parse_all<T>(
    own_parts: (&Msg, &Msg),
    nbr: &[Msg],
    read: impl Fn(&mut MsgReader, &mut MsgReader) -> Result<T, DecodeError>,
    split: impl Fn(&mut MsgReader) -> Result<(Msg, Msg), DecodeError>,
) -> Result<Parsed<T>, DecodeError> {
    let (mut a, mut b) = (own_parts.0.reader(), own_parts.1.reader());
    let own = read(&mut a, &mut b)?;
    a.finish()?;
    b.finish()?;
    let nbr = nbr
        .iter()
        .map(|m| {
            let (x, y) = split(&mut m.reader())?;
            let (mut a, mut b) = (x.reader(), y.reader());
            let t = read(&mut a, &mut b)?;
            a.finish()?;
            b.finish()?;
            Ok(t)
        })
        .collect::<Result<Vec<_>, DecodeError>>()?;
    Ok(Parsed { own, nbr })
}

/// Set equality with O(log b) bits per node. Node u holds the multisets
/// `a_u` and `b_u`; the tree root accepts iff the products of (s - a) and
/// (s - b) over all nodes agree at the shared random s.
#[derive(Clone, Debug)]
pub struct SetEqualityLoglog {
    pub lists: Lists,
    pub frame: BlockProtocol,
    pub field: PrimeField,
    pub coin: SharedCoin,
    pub prod: SuperGadget,
}

/// Per-node data of [`SetEqualityLoglog`] after the frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SetEqShares {
    pub s: SuperShare,
    pub a: SuperShare,
    pub b: SuperShare,
}

impl SetEqualityLoglog {
    pub fn new(lists: Lists, n: usize, b: Option<usize>) -> Result<Self, SetupError> {
        if let Lists::Given { a, b } = &lists {
            if a.len() != n || b.len() != n {
                return Err(SetupError::LengthMismatch { expected: n, got: a.len().min(b.len()) });
            }
        }
        let b = b.unwrap_or_else(|| default_block(n)).max(2);
        let field = block_field(b, lists.max_elem(n))?;
        let q = field.modulus();
        let members = b.min(n).saturating_sub(1);
        // Extra coin bits keep s close to uniform after reduction.
        let coin = SharedCoin::new(width(q - 1) + 8, members, q);
        let prod = SuperGadget::new(Aggregate::Product, width(q - 1), members, q);
        Ok(Self { lists, frame: BlockProtocol::new(DEFAULT_REPS, b), field, coin, prod })
    }

    /// Plain multisets.
    pub fn given(a: Vec<Vec<u64>>, b: Vec<Vec<u64>>, block: Option<usize>) -> Result<Self, SetupError> {
        let n = a.len();
        Self::new(Lists::Given { a, b }, n, block)
    }

    /// Edges of G against edges of pi(G).
    pub fn dsym(pi: Vec<usize>, block: Option<usize>) -> Result<Self, SetupError> {
        let n = pi.len();
        Self::new(Lists::DSym(pi), n, block)
    }

    pub fn block(&self) -> usize {
        self.frame.codec.b
    }

    /// Π (s - x) over a list.
    pub fn poly(&self, s: u64, items: &[u64]) -> u64 {
        let f = self.field;
        f.product(items.iter().map(|&x| f.sub(s, f.embed(x))))
    }

    fn write_shares(&self, m: &mut Msg, sh: &SetEqShares) {
        self.coin.gadget.write(m, &sh.s);
        self.prod.write(m, &sh.a);
        self.prod.write(m, &sh.b);
    }

    fn read_shares(&self, r: &mut MsgReader) -> Result<SetEqShares, DecodeError> {
        Ok(SetEqShares { s: self.coin.gadget.read(r)?, a: self.prod.read(r)?, b: self.prod.read(r)? })
    }

    /// Honest shares for decomposition `dec` and the nodes' coin limbs.
    pub fn honest_shares(&self, g: &NetworkGraph, dec: &BlockDecomposition, coins: &[u64]) -> Vec<SetEqShares> {
        let s_raw = self.coin.value(dec, coins);
        let s = s_raw % self.field.modulus();
        let (xa, xb): (Vec<u64>, Vec<u64>) = (0..g.n())
            .map(|u| {
                let (a, b) = self.lists.node_lists(&g.view(u)).unwrap_or_default();
                (self.poly(s, &a), self.poly(s, &b))
            })
            .unzip();
        let q = self.field.modulus();
        let ya = SuperGadget::fold_blocks(Aggregate::Product, dec, &xa, q).0;
        let yb = SuperGadget::fold_blocks(Aggregate::Product, dec, &xb, q).0;
        let ss = self.coin.shares(dec, s_raw);
        let sa = self.prod.shares(dec, &ya, &xa);
        let sb = self.prod.shares(dec, &yb, &xb);
        (0..g.n()).map(|u| SetEqShares { s: ss[u], a: sa[u], b: sb[u] }).collect()
    }

    fn coin_limbs(&self, rest: &[Msg]) -> Vec<u64> {
        rest.iter().map(|m| self.coin.read_coin(&mut m.reader()).unwrap_or(0)).collect()
    }
}

impl Protocol for SetEqualityLoglog {
    fn name(&self) -> String {
        format!("{}-loglog", self.lists.name())
    }
    fn schedule(&self) -> Vec<Speaker> {
        self.frame.schedule()
    }
    fn exchange_phases(&self) -> usize {
        2
    }
    fn check(&self, g: &NetworkGraph) -> Result<(), EngineError> {
        let n = match &self.lists {
            Lists::Given { a, .. } => a.len(),
            Lists::Permutation(v) => v.len(),
            Lists::DSym(pi) => pi.len(),
        };
        if n != g.n() {
            return Err(EngineError::Incompatible {
                protocol: self.name(),
                reason: format!("inputs for {n} nodes, graph has {}", g.n()),
            });
        }
        Ok(())
    }
    fn coins(&self, _: usize, _: &NodeView, tape: &mut Tape) -> Msg {
        self.frame.layered_coins(tape, |t, m| self.coin.draw(t, m))
    }
    fn share(&self, _: &NodeView, tr: &[Msg], phase: usize, heard: &[Vec<Msg>], port: usize) -> Msg {
        self.frame.layered_share(tr, phase, heard, port)
    }
    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let (nb, lb, ex) = self.frame.layered_verify(view, tr, heard)?;
        ensure(ex.first.is_empty(), "unexpected trailing fields")?;
        let mut cr = ex.coins.reader();
        let coin = self.coin.read_coin(&mut cr)?;
        cr.finish()?;
        let empty = Msg::new();
        let parsed = parse_all(
            (&empty, &ex.last),
            &ex.nbr,
            |_, b| self.read_shares(b),
            |r| Ok((Msg::new(), r.clone().rest())),
        )?;
        let pick = |f: fn(&SetEqShares) -> SuperShare| -> Vec<SuperShare> { parsed.nbr.iter().map(f).collect() };
        let (ns, na, nbs) = (pick(|x| x.s), pick(|x| x.a), pick(|x| x.b));
        let node = |own, nbr, input| SuperNode { lb: &lb, tags: &nb.tags, own, nbr, input };
        let s = self.coin.check(&node(parsed.own.s, &ns, 0), coin)?;
        let (la, lbb) = self.lists.node_lists(view)?;
        let ya = self.prod.check(&node(parsed.own.a, &na, self.poly(s, &la)))?;
        let yb = self.prod.check(&node(parsed.own.b, &nbs, self.poly(s, &lbb)))?;
        if lb.parent.is_none() {
            ensure(ya == yb, "products differ at the root")?;
        }
        Ok(())
    }
}

/// Provers for the loglog set equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetEqStrategy {
    Honest,
    /// Copies the A shares into the B shares everywhere.
    CopyProducts,
    /// Ignores the coins and shards a point where both products vanish.
    ChosenPoint,
    /// Honest below the root block; the root block claims B's product equals A's.
    RootClaim,
}

#[derive(Clone, Copy, Debug)]
pub struct SetEqLoglogProver {
    pub root: usize,
    pub strategy: SetEqStrategy,
}

impl SetEqLoglogProver {
    pub fn honest(root: usize) -> Self {
        Self { root, strategy: SetEqStrategy::Honest }
    }

    pub fn adversaries() -> Vec<Self> {
        [SetEqStrategy::Honest, SetEqStrategy::CopyProducts, SetEqStrategy::ChosenPoint, SetEqStrategy::RootClaim]
            .into_iter()
            .map(|strategy| Self { root: 0, strategy })
            .collect()
    }
}

impl Prover<SetEqualityLoglog> for SetEqLoglogProver {
    fn name(&self) -> String {
        match self.strategy {
            SetEqStrategy::Honest => "honest",
            SetEqStrategy::CopyProducts => "copy-products",
            SetEqStrategy::ChosenPoint => "chosen-point",
            SetEqStrategy::RootClaim => "root-claim",
        }
        .into()
    }
    fn honest(&self) -> bool {
        self.strategy == SetEqStrategy::Honest
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, SetEqualityLoglog>) -> Vec<Msg> {
        let proto = ctx.proto;
        let g = ctx.graph;
        let root = self.root.min(g.n() - 1);
        let (d3, dec) = proto.frame.honest_frame(g, root);
        if ctx.round == 0 {
            return proto.frame.first_msgs(&d3, &dec.tags, |_, _| ());
        }
        let (tree_coins, rest) = proto.frame.split_coins(&ctx.transcript[1]);
        let mut coins = proto.coin_limbs(&rest);
        if self.strategy == SetEqStrategy::ChosenPoint {
            // Any element of some list zeroes that side's product.
            let (a, _) = proto.lists.node_lists(&g.view(0)).unwrap_or_default();
            let (_, b) = proto.lists.node_lists(&g.view(g.n() - 1)).unwrap_or_default();
            let target = a.first().or(b.first()).copied().unwrap_or(0);
            let lay = proto.coin.gadget.layout;
            for &x in &dec.blocks[dec.root_block].members {
                coins[x] = lay.limb_at(target, dec.tags[x].pos as usize);
            }
        }
        let mut sh = proto.honest_shares(g, &dec, &coins);
        match self.strategy {
            SetEqStrategy::CopyProducts => sh.iter_mut().for_each(|x| x.b = x.a),
            SetEqStrategy::RootClaim => {
                let rb = dec.root_block;
                for &x in &dec.blocks[rb].members {
                    sh[x].b = sh[x].a;
                }
            }
            _ => {}
        }
        proto.frame.last_msgs(&dec.tree, &tree_coins, |u, m| proto.write_shares(m, &sh[u]))
    }
}

/// Sum-up-tree with O(log b) bits per node: node i holds a_i and all nodes
/// know K. Block sums are committed as integers in the first message; a
/// random prime p drawn by the root block then checks every link mod p.
#[derive(Clone, Debug)]
pub struct SumUpTreeLoglog {
    pub values: Vec<u64>,
    pub k: u64,
    pub frame: BlockProtocol,
    /// Primes are drawn from [base, 2 base); base is a power of two.
    pub base: u64,
    pub coin: SharedCoin,
    pub sums: ShardLayout,
}

/// Per-node data of [`SumUpTreeLoglog`] after the frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SumShares {
    pub r: SuperShare,
    pub sum: SuperShare,
}

impl SumUpTreeLoglog {
    pub fn new(values: Vec<u64>, k: u64, block: Option<usize>) -> Self {
        let n = values.len();
        let b = block.unwrap_or_else(|| default_block(n)).max(2);
        let base = ((b as u64).saturating_pow(4).max(MIN_FIELD)).next_power_of_two();
        let members = b.min(n).saturating_sub(1);
        let coin = SharedCoin::new(width(base - 1), members, base);
        let sums = ShardLayout::new(width(k), members);
        Self { values, k, frame: BlockProtocol::new(DEFAULT_REPS, b), base, coin, sums }
    }

    /// The prime selected by the shared value r.
    pub fn prime(&self, r: u64) -> u64 {
        let p = next_prime(self.base + r % self.base).unwrap_or(u64::MAX);
        if p < 2 * self.base {
            p
        } else {
            next_prime(self.base).expect("a prime exists above base")
        }
    }

    fn sum_gadget(&self, p: u64) -> SuperGadget {
        SuperGadget { agg: Aggregate::Sum, layout: self.sums, modulus: p }
    }

    fn pw(&self) -> u8 {
        width(2 * self.base - 1)
    }

    fn write_last(&self, m: &mut Msg, sh: &SumShares) {
        self.coin.gadget.write(m, &sh.r);
        m.push(sh.sum.recon, self.pw());
        m.push(sh.sum.carry, self.pw());
    }

    fn read_first_limb(&self, r: &mut MsgReader) -> Result<u64, DecodeError> {
        r.take(self.sums.limb)
    }

    fn read_last(&self, r: &mut MsgReader, limb: u64) -> Result<SumShares, DecodeError> {
        let rs = self.coin.gadget.read(r)?;
        let recon = r.take(self.pw())?;
        let carry = r.take(self.pw())?;
        Ok(SumShares { r: rs, sum: SuperShare { limb, recon, carry } })
    }

    /// Exact block sums of an honest run.
    pub fn block_sums(&self, dec: &BlockDecomposition) -> Vec<u64> {
        SuperGadget::fold_blocks(Aggregate::Sum, dec, &self.values, u64::MAX).0
    }
}

impl Protocol for SumUpTreeLoglog {
    fn name(&self) -> String {
        "sum-up-tree-loglog".into()
    }
    fn schedule(&self) -> Vec<Speaker> {
        self.frame.schedule()
    }
    fn exchange_phases(&self) -> usize {
        2
    }
    fn check(&self, g: &NetworkGraph) -> Result<(), EngineError> {
        if self.values.len() != g.n() {
            return Err(EngineError::Incompatible {
                protocol: self.name(),
                reason: format!("{} values for {} nodes", self.values.len(), g.n()),
            });
        }
        Ok(())
    }
    fn coins(&self, _: usize, _: &NodeView, tape: &mut Tape) -> Msg {
        self.frame.layered_coins(tape, |t, m| self.coin.draw(t, m))
    }
    fn share(&self, _: &NodeView, tr: &[Msg], phase: usize, heard: &[Vec<Msg>], port: usize) -> Msg {
        self.frame.layered_share(tr, phase, heard, port)
    }
    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let (nb, lb, ex) = self.frame.layered_verify(view, tr, heard)?;
        let mut cr = ex.coins.reader();
        let coin = self.coin.read_coin(&mut cr)?;
        cr.finish()?;
        let parsed = parse_all(
            (&ex.first, &ex.last),
            &ex.nbr,
            |a, b| {
                let limb = self.read_first_limb(a)?;
                self.read_last(b, limb)
            },
            |r| {
                let limb = self.read_first_limb(r)?;
                let mut first = Msg::new();
                first.push(limb, self.sums.limb);
                Ok((first, r.clone().rest()))
            },
        )?;
        let rs: Vec<SuperShare> = parsed.nbr.iter().map(|x| x.r).collect();
        let node = SuperNode { lb: &lb, tags: &nb.tags, own: parsed.own.r, nbr: &rs, input: 0 };
        let r = self.coin.check(&node, coin)?;
        let p = self.prime(r);
        let gadget = self.sum_gadget(p);
        ensure(parsed.own.sum.recon < p && parsed.own.sum.carry < p, "partial out of range")?;
        let sums: Vec<SuperShare> = parsed.nbr.iter().map(|x| x.sum).collect();
        let node = SuperNode { lb: &lb, tags: &nb.tags, own: parsed.own.sum, nbr: &sums, input: self.values[view.id] };
        let total = gadget.check(&node)?;
        if lb.parent.is_none() {
            ensure(total == self.k % p, "total differs from K")?;
        }
        Ok(())
    }
}

/// Provers for the loglog sum-up-tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumStrategy {
    Honest,
    /// Shards K as the root block's sum, everything else honest.
    RootClaim,
    /// Shifts the discrepancy into the deepest block and patches all sums
    /// above it.
    PushDown,
}

#[derive(Clone, Copy, Debug)]
pub struct SumLoglogProver {
    pub root: usize,
    pub strategy: SumStrategy,
}

impl SumLoglogProver {
    pub fn honest(root: usize) -> Self {
        Self { root, strategy: SumStrategy::Honest }
    }

    pub fn adversaries() -> Vec<Self> {
        [SumStrategy::Honest, SumStrategy::RootClaim, SumStrategy::PushDown]
            .into_iter()
            .map(|strategy| Self { root: 0, strategy })
            .collect()
    }

    /// Block sums the prover commits to.
    fn claimed(&self, proto: &SumUpTreeLoglog, dec: &BlockDecomposition) -> Vec<u64> {
        let mut sums = proto.block_sums(dec);
        let delta = proto.k as i128 - sums[dec.root_block] as i128;
        let shift = |x: u64| (x as i128 + delta).max(0) as u64;
        match self.strategy {
            SumStrategy::Honest => {}
            SumStrategy::RootClaim => sums[dec.root_block] = proto.k,
            SumStrategy::PushDown => {
                let mut k = (0..dec.blocks.len()).max_by_key(|&k| chain_len(dec, k)).unwrap_or(dec.root_block);
                loop {
                    sums[k] = shift(sums[k]);
                    match dec.parent_block(k) {
                        Some(p) => k = p,
                        None => break,
                    }
                }
            }
        }
        sums
    }
}

fn chain_len(dec: &BlockDecomposition, mut k: usize) -> usize {
    let mut d = 0;
    while let Some(p) = dec.parent_block(k) {
        k = p;
        d += 1;
    }
    d
}

impl Prover<SumUpTreeLoglog> for SumLoglogProver {
    fn name(&self) -> String {
        match self.strategy {
            SumStrategy::Honest => "honest",
            SumStrategy::RootClaim => "root-claim",
            SumStrategy::PushDown => "push-down",
        }
        .into()
    }
    fn honest(&self) -> bool {
        self.strategy == SumStrategy::Honest
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, SumUpTreeLoglog>) -> Vec<Msg> {
        let proto = ctx.proto;
        let g = ctx.graph;
        let (d3, dec) = proto.frame.honest_frame(g, self.root.min(g.n() - 1));
        let sums = self.claimed(proto, &dec);
        if ctx.round == 0 {
            return proto.frame.first_msgs(&d3, &dec.tags, |u, m| {
                let limb = dec.home[u].map_or(0, |h| proto.sums.limb_at(sums[h], dec.tags[u].pos as usize));
                m.push(limb, proto.sums.limb);
            });
        }
        let (tree_coins, rest) = proto.frame.split_coins(&ctx.transcript[1]);
        let coins: Vec<u64> = rest.iter().map(|m| proto.coin.read_coin(&mut m.reader()).unwrap_or(0)).collect();
        let r = proto.coin.value(&dec, &coins);
        let rs = proto.coin.shares(&dec, r);
        let p = proto.prime(r % proto.base);
        let gadget = proto.sum_gadget(p);
        let mut sh = gadget.shares(&dec, &sums, &proto.values);
        if self.strategy != SumStrategy::Honest {
            // Make each block's partials consistent with its claimed sum
            // wherever a single node can absorb the difference.
            patch_carries(&gadget, &dec, &sums, &mut sh);
        }
        proto.frame.last_msgs(&dec.tree, &tree_coins, |u, m| {
            proto.write_last(m, &SumShares { r: rs[u], sum: sh[u] })
        })
    }
}

/// Adds the gap between a block's claimed value and its aggregate to the
/// carry of its first child, so only cross-block checks can notice.
fn patch_carries(g: &SuperGadget, dec: &BlockDecomposition, claimed: &[u64], sh: &mut [SuperShare]) {
    let m = g.modulus;
    for (k, bl) in dec.blocks.iter().enumerate() {
        if k == dec.root_block {
            continue;
        }
        let kids: Vec<usize> = dec.tree.children[bl.root].iter().copied().filter(|&c| dec.home[c] == Some(k)).collect();
        let have = kids.iter().fold(0, |a, &c| (a + sh[c].carry) % m);
        let want = claimed[k] % m;
        if let Some(&c) = kids.first() {
            sh[c].carry = (sh[c].carry + want + m - have) % m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{monte_carlo, run_protocol, RunOptions};
    use crate::fieldset::{HonestSetEq, SetEquality};
    use crate::netmodel::{generate, GraphKind};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn equal_instance(n: usize, rng: &mut ChaCha8Rng, max: u64) -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
        let a: Vec<Vec<u64>> = (0..n).map(|_| (0..rng.gen_range(0..3)).map(|_| rng.gen_range(0..max)).collect()).collect();
        let mut flat: Vec<u64> = a.iter().flatten().copied().collect();
        flat.shuffle(rng);
        let mut b = vec![Vec::new(); n];
        for x in flat {
            b[rng.gen_range(0..n)].push(x);
        }
        (a, b)
    }

    #[test]
    fn block_field_floor() {
        assert_eq!(block_field(2, 0).unwrap().modulus(), 1031);
        assert_eq!(block_field(6, 0).unwrap().modulus(), 1297);
        assert!(block_field(3, 5000).unwrap().modulus() > 5000);
    }

    /// Majority verdict over five seeds.
    fn verdict<P: Protocol, Pr: Prover<P>>(proto: &P, g: &NetworkGraph, pr: &Pr, seed: u64) -> bool {
        let st = monte_carlo(proto, g, pr, 5, seed, RunOptions::default()).unwrap();
        st.accept_rate > 0.5
    }

    #[test]
    fn honest_runs_agree_with_log_set_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..100u64 {
            let n = rng.gen_range(2..40);
            let g = generate(&GraphKind::Gnp { n, p: 0.3 }, i).unwrap();
            let (a, mut b) = equal_instance(n, &mut rng, 1000);
            let equal = i % 5 != 0;
            if !equal {
                b[0].push(7);
            }
            let ll = SetEqualityLoglog::given(a.clone(), b.clone(), None).unwrap();
            let log = SetEquality::new(a, b, 1).unwrap();
            let v1 = verdict(&ll, &g, &SetEqLoglogProver::honest(i as usize % n), i);
            let v2 = verdict(&log, &g, &HonestSetEq, i);
            assert_eq!(v1, equal, "instance {i}");
            assert_eq!(v1, v2, "instance {i}");
        }
    }

    #[test]
    fn tampered_element_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 64;
        let g = generate(&GraphKind::Gnp { n, p: 0.08 }, 3).unwrap();
        let (a, mut b) = equal_instance(n, &mut rng, 1000);
        let u = (0..n).find(|&u| !b[u].is_empty()).unwrap();
        b[u][0] = (b[u][0] + 1) % 1000;
        let proto = SetEqualityLoglog::given(a, b, Some(6)).unwrap();
        for pr in SetEqLoglogProver::adversaries() {
            let st = monte_carlo(&proto, &g, &pr, 300, 9, RunOptions::default()).unwrap();
            assert!(st.accept_rate <= 0.1, "{} accepted {}", pr.name(), st.accept_rate);
        }
    }

    #[test]
    fn dsym_on_c8() {
        let g = generate(&GraphKind::Cycle(8), 0).unwrap();
        let rot: Vec<usize> = (0..8).map(|i| (i + 1) % 8).collect();
        let proto = SetEqualityLoglog::dsym(rot, None).unwrap();
        let st = monte_carlo(&proto, &g, &SetEqLoglogProver::honest(0), 50, 1, RunOptions::default()).unwrap();
        assert_eq!(st.accept_rate, 1.0);
        let mut bad: Vec<usize> = (0..8).collect();
        bad.swap(0, 2);
        let proto = SetEqualityLoglog::dsym(bad, None).unwrap();
        let st = monte_carlo(&proto, &g, &SetEqLoglogProver::honest(0), 200, 1, RunOptions::default()).unwrap();
        assert!(st.accept_rate <= 0.05, "{}", st.accept_rate);
    }

    #[test]
    fn sum_up_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..20 {
            let n = rng.gen_range(2..60);
            let g = generate(&GraphKind::Gnp { n, p: 0.3 }, seed).unwrap();
            let ones = SumUpTreeLoglog::new(vec![1; n], n as u64, None);
            let run = run_protocol(&ones, &g, &SumLoglogProver::honest(0), seed, RunOptions::default()).unwrap();
            assert!(run.accept, "{:?}", run.rejections());
            let vals: Vec<u64> = (0..n).map(|_| rng.gen_range(0..100)).collect();
            let total = vals.iter().sum();
            let proto = SumUpTreeLoglog::new(vals.clone(), total, None);
            let run = run_protocol(&proto, &g, &SumLoglogProver::honest(seed as usize % n), seed, RunOptions::default())
                .unwrap();
            assert!(run.accept, "{:?}", run.rejections());
            let off = SumUpTreeLoglog::new(vals, total + 1, None);
            for pr in SumLoglogProver::adversaries() {
                let run = run_protocol(&off, &g, &pr, seed, RunOptions::default()).unwrap();
                assert!(!run.accept, "{} seed {seed}", pr.name());
            }
        }
    }

    #[test]
    fn bits_grow_slowly() {
        let mut prev = 0;
        for n in [64, 1024] {
            let g = generate(&GraphKind::RandomTree(n), 1).unwrap();
            let (a, b) = equal_instance(n, &mut ChaCha8Rng::seed_from_u64(0), 500);
            let proto = SetEqualityLoglog::given(a, b, None).unwrap();
            let run = run_protocol(&proto, &g, &SetEqLoglogProver::honest(0), 1, RunOptions::default()).unwrap();
            assert!(run.accept);
            let bits = run.max_bits_per_node_per_round();
            assert!(bits > prev && bits < 200, "{bits}");
            prev = bits;
        }
    }
}
