//! Super protocols: every block of a decomposition holds one logical value,
//! sharded over its members by within-block position. Members also carry
//! two partials: the reconstruction of their block's value over their
//! within-block subtree, and an aggregate partial (the block value itself
//! for equality, a running sum or product otherwise). A block root
//! reconstructs the value of every block rooted at it and checks the link
//! to its own block.

use crate::engine::{
    ensure, width, DecodeError, Msg, MsgReader, Protocol, Prover, ProverCtx, Reject, Speaker, Tape, Verdict,
};
use crate::netmodel::{NetworkGraph, NodeView};

use super::blocks::{default_block, BlockDecomposition, BlockProtocol, BlockTags, LocalBlocks};
use super::o1tree::DEFAULT_REPS;

/// How block values relate along the super-tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Aggregate {
    /// Every block holds the same value.
    Equal,
    /// A block holds the sum of the inputs below it.
    Sum,
    /// A block holds the product of the inputs below it.
    Product,
}

impl Aggregate {
    pub fn identity(self) -> u64 {
        match self {
            Aggregate::Product => 1,
            _ => 0,
        }
    }

    pub fn combine(self, a: u64, b: u64, m: u64) -> u64 {
        let (a, b, m) = (a as u128, b as u128, m as u128);
        (match self {
            Aggregate::Equal => a,
            Aggregate::Sum => (a + b) % m,
            Aggregate::Product => a * b % m,
        }) as u64
    }

    pub fn fold(self, items: impl IntoIterator<Item = u64>, m: u64) -> u64 {
        items.into_iter().fold(self.identity() % m, |acc, x| self.combine(acc, x, m))
    }
}

/// Splits a `width`-bit value into limbs of `limb` bits, one per member.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShardLayout {
    pub width: u8,
    pub limb: u8,
}

impl ShardLayout {
    /// Layout for blocks with at least `members` non-root nodes.
    pub fn new(width: u8, members: usize) -> Self {
        let m = members.max(1);
        let limb = (width as usize).div_ceil(m).max(1) as u8;
        Self { width, limb }
    }

    pub fn limbs(&self) -> usize {
        (self.width as usize).div_ceil(self.limb as usize)
    }

    pub fn limb_at(&self, value: u64, pos: usize) -> u64 {
        if pos >= self.limbs() {
            return 0;
        }
        ((value as u128 >> (pos * self.limb as usize)) & ((1u128 << self.limb) - 1)) as u64
    }

    /// Contribution of a limb at `pos` to the value, reduced mod `m`.
    pub fn place(&self, limb: u64, pos: usize, m: u64) -> u64 {
        if pos >= self.limbs() {
            return 0;
        }
        let shift = (pos * self.limb as usize) as u32;
        let mut x = limb as u128 % m as u128;
        for _ in 0..shift {
            x = (x << 1) % m as u128;
        }
        x as u64
    }

    /// Concatenates limbs given in position order.
    pub fn join(&self, limbs: &[u64]) -> u128 {
        limbs
            .iter()
            .take(self.limbs())
            .enumerate()
            .map(|(j, &l)| (l as u128) << (j * self.limb as usize))
            .sum()
    }
}

/// One node's super-protocol data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SuperShare {
    pub limb: u64,
    /// Reconstruction of the home block's value over the node's
    /// within-block subtree.
    pub recon: u64,
    /// Equality: the home block's value. Sum and product: the aggregate of
    /// everything below the node that belongs to its home block's subtree.
    pub carry: u64,
}

/// Node-side inputs of a super-protocol check.
pub struct SuperNode<'a> {
    pub lb: &'a LocalBlocks,
    pub tags: &'a BlockTags,
    pub own: SuperShare,
    /// Shares of all neighbors, by port.
    pub nbr: &'a [SuperShare],
    pub input: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuperGadget {
    pub agg: Aggregate,
    pub layout: ShardLayout,
    /// Partials live in Z_modulus.
    pub modulus: u64,
}

impl SuperGadget {
    pub fn new(agg: Aggregate, value_width: u8, min_members: usize, modulus: u64) -> Self {
        assert!(modulus >= 2);
        Self { agg, layout: ShardLayout::new(value_width, min_members), modulus }
    }

    fn mw(&self) -> u8 {
        width(self.modulus - 1)
    }

    pub fn bits(&self) -> usize {
        self.layout.limb as usize + 2 * self.mw() as usize
    }

    pub fn write_limb(&self, m: &mut Msg, limb: u64) {
        m.push(limb, self.layout.limb);
    }

    pub fn read_limb(&self, r: &mut MsgReader) -> Result<u64, DecodeError> {
        r.take(self.layout.limb)
    }

    pub fn write_partials(&self, m: &mut Msg, sh: &SuperShare) {
        m.push(sh.recon, self.mw());
        m.push(sh.carry, self.mw());
    }

    /// Reads the partials into `sh`.
    pub fn read_partials(&self, r: &mut MsgReader, sh: &mut SuperShare) -> Result<(), DecodeError> {
        sh.recon = r.take_below(self.mw(), self.modulus)?;
        sh.carry = r.take_below(self.mw(), self.modulus)?;
        Ok(())
    }

    pub fn write(&self, m: &mut Msg, sh: &SuperShare) {
        self.write_limb(m, sh.limb);
        self.write_partials(m, sh);
    }

    pub fn read(&self, r: &mut MsgReader) -> Result<SuperShare, DecodeError> {
        let mut sh = SuperShare { limb: self.read_limb(r)?, ..Default::default() };
        self.read_partials(r, &mut sh)?;
        Ok(sh)
    }

    fn add(&self, a: u64, b: u64) -> u64 {
        Aggregate::Sum.combine(a, b, self.modulus)
    }

    /// Local checks. Returns the node's view of the aggregate: the common
    /// value for equality, the overall total at the tree root, and the
    /// node's own carry elsewhere.
    pub fn check(&self, v: &SuperNode) -> Result<u64, Reject> {
        let (m, agg) = (self.modulus, self.agg);
        let lb = v.lb;
        let is_root = lb.parent.is_none();
        let pos = v.tags.pos as usize;
        if is_root {
            ensure(v.own.limb == 0 && v.own.recon == 0 && v.own.carry == 0, "the tree root holds no shard")?;
        } else {
            ensure(pos < self.layout.limbs() || v.own.limb == 0, "shard beyond the value width")?;
            let below = lb.cont_kids.iter().map(|&d| v.nbr[d].recon);
            let want = below.fold(self.layout.place(v.own.limb, pos, m), |a, x| self.add(a, x));
            ensure(v.own.recon == want, "reconstruction partial wrong")?;
        }
        let values: Vec<u64> = lb
            .groups
            .iter()
            .map(|g| g.iter().fold(0, |a, &c| self.add(a, v.nbr[c].recon)))
            .collect();
        let declared = if is_root { values.len().saturating_sub(1) } else { values.len() };
        match agg {
            Aggregate::Equal => {
                if v.tags.cont && !lb.parent_is_root {
                    let p = lb.parent.expect("continuation has a parent");
                    ensure(v.own.carry == v.nbr[p].carry, "block value differs inside a block")?;
                }
                for (g, &y) in lb.groups.iter().zip(&values) {
                    ensure(g.iter().all(|&c| v.nbr[c].carry == y), "block value differs from its shards")?;
                }
                let mine = if is_root { values.last().copied().unwrap_or(0) } else { v.own.carry };
                ensure(values[..declared].iter().all(|&y| y == mine), "blocks disagree across a link")?;
                Ok(mine)
            }
            Aggregate::Sum | Aggregate::Product => {
                for (g, &y) in lb.groups.iter().zip(&values).take(declared) {
                    let z = agg.fold(g.iter().map(|&c| v.nbr[c].carry), m);
                    ensure(y == z, "block value does not aggregate its block")?;
                }
                let cont: &[usize] = if is_root { lb.groups.get(declared).map_or(&[], Vec::as_slice) } else { &lb.cont_kids };
                let acc = agg.fold(
                    std::iter::once(v.input % m)
                        .chain(values[..declared].iter().copied())
                        .chain(cont.iter().map(|&d| v.nbr[d].carry)),
                    m,
                );
                if is_root {
                    if let Some(&y) = values.get(declared) {
                        ensure(y == acc, "root block value wrong")?;
                    }
                    Ok(acc)
                } else {
                    ensure(v.own.carry == acc, "aggregate partial wrong")?;
                    Ok(acc)
                }
            }
        }
    }

    /// First-level children of block `k`.
    fn block_kids(dec: &BlockDecomposition, k: usize) -> impl Iterator<Item = usize> + '_ {
        let r = dec.blocks[k].root;
        dec.tree.children[r].iter().copied().filter(move |&c| dec.home[c] == Some(k))
    }

    /// Block values and per-node aggregate partials of an honest run (sum and
    /// product only), reduced mod `m`.
    pub fn fold_blocks(agg: Aggregate, dec: &BlockDecomposition, inputs: &[u64], m: u64) -> (Vec<u64>, Vec<u64>) {
        let n = dec.n();
        let mut z = vec![agg.identity() % m; n];
        let mut y = vec![agg.identity() % m; dec.blocks.len()];
        for x in dec.tree.postorder() {
            let is_root = x == dec.tree.root;
            let mut declared = agg.identity() % m;
            for &k in &dec.rooted[x] {
                y[k] = agg.fold(Self::block_kids(dec, k).map(|c| z[c]), m);
                if k != dec.root_block {
                    declared = agg.combine(declared, y[k], m);
                }
            }
            let cont = dec.tree.children[x].iter().filter(|&&c| dec.tags[c].cont).map(|&c| z[c]);
            let acc = agg.fold(std::iter::once(inputs[x] % m).chain(std::iter::once(declared)).chain(cont), m);
            if is_root {
                y[dec.root_block] = acc;
            } else {
                z[x] = acc;
            }
        }
        (y, z)
    }

    /// Honest shares when block `k` holds `values[k]` (sharded as given,
    /// before reduction) and nodes hold `inputs`.
    pub fn shares(&self, dec: &BlockDecomposition, values: &[u64], inputs: &[u64]) -> Vec<SuperShare> {
        let n = dec.n();
        let m = self.modulus;
        let mut out = vec![SuperShare::default(); n];
        let z = match self.agg {
            Aggregate::Equal => None,
            agg => Some(Self::fold_blocks(agg, dec, inputs, m).1),
        };
        for x in dec.tree.postorder() {
            let Some(h) = dec.home[x] else { continue };
            let pos = dec.tags[x].pos as usize;
            let limb = self.layout.limb_at(values[h], pos);
            let below = dec.tree.children[x].iter().filter(|&&c| dec.tags[c].cont).map(|&c| out[c].recon);
            let recon = below.fold(self.layout.place(limb, pos, m), |a, b| self.add(a, b));
            let carry = match &z {
                None => values[h] % m,
                Some(z) => z[x],
            };
            out[x] = SuperShare { limb, recon, carry };
        }
        out
    }
}

/// A standalone super protocol over a block decomposition: tree labels and
/// tags, tree coins, then parities and super shares. The tree root accepts
/// only if the aggregate equals `expected`.
#[derive(Clone, Debug)]
pub struct SuperProtocol {
    pub frame: BlockProtocol,
    pub gadget: SuperGadget,
    pub inputs: Vec<u64>,
    pub expected: Option<u64>,
}

impl SuperProtocol {
    /// Aggregates over Z_modulus with values of `width(modulus - 1)` bits.
    pub fn new(agg: Aggregate, n: usize, modulus: u64, inputs: Vec<u64>, expected: Option<u64>) -> Self {
        let b = default_block(n);
        Self::with_block(agg, n, b, modulus, inputs, expected)
    }

    pub fn with_block(agg: Aggregate, n: usize, b: usize, modulus: u64, inputs: Vec<u64>, expected: Option<u64>) -> Self {
        let frame = BlockProtocol::new(DEFAULT_REPS, b);
        let gadget = SuperGadget::new(agg, width(modulus - 1), b.min(n).saturating_sub(1), modulus);
        Self { frame, gadget, inputs, expected }
    }

    fn input(&self, u: usize) -> u64 {
        self.inputs.get(u).copied().unwrap_or(0)
    }
}

impl Protocol for SuperProtocol {
    fn name(&self) -> String {
        format!("super-{:?}", self.gadget.agg).to_lowercase()
    }
    fn schedule(&self) -> Vec<Speaker> {
        self.frame.schedule()
    }
    fn exchange_phases(&self) -> usize {
        2
    }
    fn check(&self, g: &NetworkGraph) -> Result<(), crate::engine::EngineError> {
        if !self.inputs.is_empty() && self.inputs.len() != g.n() {
            return Err(crate::engine::EngineError::Incompatible {
                protocol: self.name(),
                reason: format!("{} inputs for {} nodes", self.inputs.len(), g.n()),
            });
        }
        Ok(())
    }
    fn coins(&self, _: usize, _: &NodeView, tape: &mut Tape) -> Msg {
        self.frame.layered_coins(tape, |_, _| ())
    }
    fn share(&self, _: &NodeView, tr: &[Msg], phase: usize, heard: &[Vec<Msg>], port: usize) -> Msg {
        self.frame.layered_share(tr, phase, heard, port)
    }
    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let (nb, lb, ex) = self.frame.layered_verify(view, tr, heard)?;
        ensure(ex.first.is_empty() && ex.coins.is_empty(), "unexpected trailing fields")?;
        let mut r = ex.last.reader();
        let own = self.gadget.read(&mut r)?;
        r.finish()?;
        let nbr = ex
            .nbr
            .iter()
            .map(|m| {
                let mut r = m.reader();
                let sh = self.gadget.read(&mut r)?;
                r.finish()?;
                Ok(sh)
            })
            .collect::<Result<Vec<_>, DecodeError>>()?;
        let node = SuperNode { lb: &lb, tags: &nb.tags, own, nbr: &nbr, input: self.input(view.id) };
        let value = self.gadget.check(&node)?;
        if lb.parent.is_none() {
            if let Some(e) = self.expected {
                ensure(value == e % self.gadget.modulus, "aggregate differs from the expected value")?;
            }
        }
        Ok(())
    }
}

/// Prover for [`SuperProtocol`]. For equality every block holds `value`.
/// With `flip`, one shard bit of a non-root block is flipped and the
/// reconstruction partials inside that block are patched to match.
#[derive(Clone, Copy, Debug)]
pub struct SuperProver {
    pub root: usize,
    pub value: u64,
    pub flip: bool,
}

impl SuperProver {
    pub fn honest(root: usize, value: u64) -> Self {
        Self { root, value, flip: false }
    }

    pub fn flipper(root: usize, value: u64) -> Self {
        Self { root, value, flip: true }
    }

    pub fn shares(&self, proto: &SuperProtocol, dec: &BlockDecomposition) -> Vec<SuperShare> {
        let g = &proto.gadget;
        let n = dec.n();
        let inputs: Vec<u64> = (0..n).map(|u| proto.input(u)).collect();
        let values = match g.agg {
            Aggregate::Equal => vec![self.value % g.modulus; dec.blocks.len()],
            agg => SuperGadget::fold_blocks(agg, dec, &inputs, g.modulus).0,
        };
        let mut sh = g.shares(dec, &values, &inputs);
        if self.flip {
            flip_shard(g, dec, &mut sh);
        }
        sh
    }
}

/// Flips the lowest bit of the first shard that matters in a block other
/// than the root block, then repairs the reconstruction chain above it.
pub fn flip_shard(g: &SuperGadget, dec: &BlockDecomposition, sh: &mut [SuperShare]) -> Option<usize> {
    let x = (0..dec.n()).find(|&x| {
        dec.home[x].is_some_and(|h| h != dec.root_block) && (dec.tags[x].pos as usize) < g.layout.limbs()
    })?;
    let pos = dec.tags[x].pos as usize;
    let old = g.place(sh[x].limb, pos);
    sh[x].limb ^= 1;
    let new = g.place(sh[x].limb, pos);
    let delta = (new + g.modulus - old) % g.modulus;
    let h = dec.home[x];
    let mut y = x;
    loop {
        sh[y].recon = (sh[y].recon + delta) % g.modulus;
        match dec.tree.parent[y] {
            Some(p) if dec.home[p] == h => y = p,
            _ => break,
        }
    }
    Some(x)
}

impl SuperGadget {
    fn place(&self, limb: u64, pos: usize) -> u64 {
        self.layout.place(limb, pos, self.modulus)
    }
}

impl Prover<SuperProtocol> for SuperProver {
    fn name(&self) -> String {
        if self.flip { "flip-shard".into() } else { "honest".into() }
    }
    fn honest(&self) -> bool {
        !self.flip
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, SuperProtocol>) -> Vec<Msg> {
        let proto = ctx.proto;
        let (d3, dec) = proto.frame.honest_frame(ctx.graph, self.root);
        if ctx.round == 0 {
            return proto.frame.first_msgs(&d3, &dec.tags, |_, _| ());
        }
        let (coins, _) = proto.frame.split_coins(&ctx.transcript[1]);
        let sh = self.shares(proto, &dec);
        proto.frame.last_msgs(&dec.tree, &coins, |u, m| proto.gadget.write(m, &sh[u]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_protocol, RunOptions};
    use crate::netmodel::{generate, GraphKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const Q: u64 = 1031;

    fn graphs() -> Vec<NetworkGraph> {
        let mut out = vec![
            generate(&GraphKind::Path(2), 0).unwrap(),
            generate(&GraphKind::Path(9), 0).unwrap(),
            generate(&GraphKind::Star(9), 0).unwrap(),
        ];
        for seed in 0..6 {
            out.push(generate(&GraphKind::Gnp { n: 30 + 5 * seed as usize, p: 0.1 }, seed).unwrap());
            out.push(generate(&GraphKind::RandomTree(50), seed).unwrap());
        }
        out
    }

    #[test]
    fn layout_round_trips() {
        let l = ShardLayout::new(11, 5);
        assert_eq!((l.limb, l.limbs()), (3, 4));
        let v = 1500;
        let limbs: Vec<u64> = (0..6).map(|j| l.limb_at(v, j)).collect();
        assert_eq!(l.join(&limbs), v as u128);
        let placed: u64 = (0..6).map(|j| l.place(limbs[j], j, Q)).sum::<u64>() % Q;
        assert_eq!(placed, v % Q);
    }

    #[test]
    fn equal_blocks_accept() {
        for g in graphs() {
            let proto = SuperProtocol::with_block(Aggregate::Equal, g.n(), 3, Q, vec![], Some(777));
            let run = run_protocol(&proto, &g, &SuperProver::honest(0, 777), 1, RunOptions::default()).unwrap();
            assert!(run.accept, "n={}: {:?}", g.n(), run.rejections());
            let wrong = SuperProtocol { expected: Some(778), ..proto };
            let run = run_protocol(&wrong, &g, &SuperProver::honest(0, 777), 1, RunOptions::default()).unwrap();
            assert!(!run.accept);
        }
    }

    #[test]
    fn block_products_combine_to_global_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in graphs() {
            let inputs: Vec<u64> = (0..g.n()).map(|_| rng.gen_range(1..Q)).collect();
            let product = inputs.iter().fold(1u64, |a, &x| a * x % Q);
            for b in [2, 3, 5] {
                let proto = SuperProtocol::with_block(Aggregate::Product, g.n(), b, Q, inputs.clone(), Some(product));
                let root = rng.gen_range(0..g.n());
                let run = run_protocol(&proto, &g, &SuperProver::honest(root, 0), 2, RunOptions::default()).unwrap();
                assert!(run.accept, "n={} b={b}: {:?}", g.n(), run.rejections());
                let (_, dec) = proto.frame.honest_frame(&g, root);
                let (y, _) = SuperGadget::fold_blocks(Aggregate::Product, &dec, &inputs, Q);
                assert_eq!(y[dec.root_block], product);
            }
        }
    }

    #[test]
    fn sums_match_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for g in graphs() {
            let inputs: Vec<u64> = (0..g.n()).map(|_| rng.gen_range(0..20)).collect();
            let total: u64 = inputs.iter().sum();
            let proto = SuperProtocol::with_block(Aggregate::Sum, g.n(), 3, Q, inputs, Some(total));
            let run = run_protocol(&proto, &g, &SuperProver::honest(0, 0), 3, RunOptions::default()).unwrap();
            assert!(run.accept, "{:?}", run.rejections());
        }
    }

    #[test]
    fn flipped_shard_bit_is_rejected() {
        for agg in [Aggregate::Equal, Aggregate::Sum, Aggregate::Product] {
            for seed in 0..20 {
                let g = generate(&GraphKind::Gnp { n: 40, p: 0.1 }, seed).unwrap();
                let inputs: Vec<u64> = (0..40).map(|u| u as u64 + 1).collect();
                let proto = SuperProtocol::with_block(agg, 40, 3, Q, inputs, None);
                let run = run_protocol(&proto, &g, &SuperProver::flipper(0, 99), seed, RunOptions::default()).unwrap();
                assert!(!run.accept, "{agg:?} seed {seed}");
                let why = run.rejections().into_iter().map(|r| r.1).collect::<Vec<_>>().join(",");
                assert!(!why.contains("reconstruction partial"), "{why}");
            }
        }
    }
}
