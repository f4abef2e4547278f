//! Set-size lower bounds by hashing: graph asymmetry, and graph
//! non-isomorphism for rigid inputs.
//!
//! The prover claims some relabeling `H = pi(G)` hashes to zero under
//! `g_K(h(H))`. Each node hashes its own row of `H` with the local hash of
//! the row's position, so `h` is fixed before the prover speaks. The
//! remaining work (that `pi` is a permutation, that every node used the
//! right seed, and that `g_K` vanishes) runs as a RAM program through the
//! compiler. A larger set of relabelings means more chances to hit zero.

use thiserror::Error;

use crate::engine::{ensure, width, Verdict};
use crate::field::{BinaryField, Field};
use crate::netmodel::{automorphisms, permutations, EdgeLabel, NetworkGraph, NodeView};
use crate::ramcompile::compiler::CompileError;
use crate::ramcompile::programs::emit_eq;
use crate::ramcompile::{InnerVerifier, Instr, Layout, RamCompiler, RamProgram, Reg, WitnessEdit};

/// Word modulus of the verifier program and field of the word hash.
pub const WORD_PRIME: u64 = (1 << 61) - 1;

/// Largest n the exhaustive prover handles.
pub const MAX_N: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SizeError {
    #[error("n = {0} outside 2..={MAX_N}")]
    Size(usize),
    #[error("digest has {got} words, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("non-isomorphism needs a graph with G0/G1 edge labels")]
    Unlabeled,
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Input outside the rigid promise, found by brute force.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("promise violated: G{layer} has {automorphisms} automorphisms")]
pub struct PromiseViolation {
    pub layer: u8,
    pub automorphisms: usize,
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % WORD_PRIME as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeParams {
    pub n: usize,
    /// `2^ell` is the smallest power of two at least this.
    pub set_bound: u64,
    pub ell: u32,
    /// `g_K(y)` counts as zero when below this.
    pub threshold: u64,
    /// Output bits of the local hash.
    pub row_bits: u32,
    /// Bits of each key chunk a node contributes to the word hash.
    pub key_bits: u32,
}

impl SizeParams {
    pub fn new(n: usize, set_bound: u64) -> Result<Self, SizeError> {
        if !(2..=MAX_N).contains(&n) {
            return Err(SizeError::Size(n));
        }
        let ell = 64 - (set_bound.max(2) - 1).leading_zeros();
        let row_bits = 3 * (usize::BITS - (n - 1).leading_zeros());
        Ok(Self {
            n,
            set_bound,
            ell,
            threshold: WORD_PRIME.div_ceil(1 << ell),
            row_bits,
            key_bits: 64u32.div_ceil(n as u32),
        })
    }

    /// `2^ell >= 2 n!`: separates `n!` relabelings from at most `n!/2`.
    pub fn asym(n: usize) -> Result<Self, SizeError> {
        Self::new(n, 2 * factorial(n))
    }

    /// `2^ell >= 4 n!`: separates `2 n!` relabelings from `n!`.
    pub fn gni(n: usize) -> Result<Self, SizeError> {
        Self::new(n, 4 * factorial(n))
    }

    pub fn p(&self) -> f64 {
        self.set_bound as f64 / (1u64 << self.ell) as f64
    }

    pub fn alpha(&self) -> f64 {
        let p = self.p();
        p / 2.0 * (1.0 - p / 8.0)
    }

    pub fn beta(&self) -> f64 {
        self.p() / 4.0
    }

    /// Probability that one fixed digest hashes to zero.
    pub fn zero_rate(&self) -> f64 {
        self.threshold as f64 / WORD_PRIME as f64
    }

    pub fn row_field(&self) -> BinaryField {
        BinaryField::new(self.row_bits).expect("row field degree is small")
    }

    /// Row words (chunks of `row_bits`) per row.
    pub fn row_chunks(&self) -> usize {
        self.n.div_ceil(self.row_bits as usize)
    }
}

/// Bounds on `Pr[some H in S hashes to zero]` for `|S| = size`, under exact
/// pairwise independence.
pub fn sandwich(size: u64, ell: u32) -> (f64, f64) {
    let r = size as f64 / (1u64 << ell) as f64;
    (r * (1.0 - r / 2.0), r)
}

/// Seed of one position's local hash `b + sum_j c_j a^(j+1)` over
/// GF(2^row_bits), where `c_j` are the row's chunks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LocalHashSeed {
    pub a: u64,
    pub b: u64,
}

impl LocalHashSeed {
    pub fn hash(&self, params: &SizeParams, row: u64) -> u64 {
        let f = params.row_field();
        let k = params.row_bits;
        let mask = (1u64 << k) - 1;
        let mut acc = f.zero();
        for j in (0..params.row_chunks()).rev() {
            acc = f.mul(f.add(acc, (row >> (j as u32 * k)) & mask), self.a);
        }
        f.add(acc, self.b)
    }
}

/// Bitmask rows of an adjacency matrix.
pub fn rows_of(m: &[Vec<bool>]) -> Vec<u64> {
    m.iter()
        .map(|r| r.iter().enumerate().filter(|(_, &e)| e).fold(0, |acc, (v, _)| acc | 1 << v))
        .collect()
}

/// `h(H) = h_1(x_1) ... h_n(x_n)`: row `p` hashed with the seed of position `p`.
pub fn local_graph_hash(params: &SizeParams, seeds: &[LocalHashSeed], rows: &[u64]) -> Result<Vec<u64>, SizeError> {
    if seeds.len() != params.n || rows.len() != params.n {
        return Err(SizeError::Length { got: rows.len().min(seeds.len()), expected: params.n });
    }
    Ok(seeds.iter().zip(rows).map(|(s, &r)| s.hash(params, r)).collect())
}

/// Key of the word hash `g(y) = b + sum_p y_p a^(p+1) mod q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WordHashSeed {
    pub a: u64,
    pub b: u64,
}

impl WordHashSeed {
    /// Chunks in ID order, chunk `i` weighted by `2^(key_bits * i)`.
    pub fn from_chunks(ka: &[u64], kb: &[u64], key_bits: u32) -> Self {
        let join = |k: &[u64]| {
            k.iter()
                .rev()
                .fold(0, |acc, &c| (mulmod(acc, 1 << key_bits) + c) % WORD_PRIME)
        };
        Self { a: join(ka), b: join(kb) }
    }

    pub fn eval(&self, y: &[u64]) -> u64 {
        let acc = y.iter().rev().fold(0, |acc, &w| mulmod((acc + w) % WORD_PRIME, self.a));
        (acc + self.b) % WORD_PRIME
    }
}

/// The `ell`-bit output of the word hash: the bucket of width `threshold`
/// that `g(y)` falls in. Zero means a hit.
pub fn word_hash(params: &SizeParams, seed: &WordHashSeed, y: &[u64]) -> Result<u64, SizeError> {
    if y.len() != params.n {
        return Err(SizeError::Length { got: y.len(), expected: params.n });
    }
    Ok(seed.eval(y) / params.threshold)
}

/// Rows of `pi(m)` where `pi` need not be injective.
fn image_rows(m: &[Vec<bool>], pi: &[usize]) -> Vec<u64> {
    let n = m.len();
    let mut rows = vec![0u64; n];
    for u in 0..n {
        for v in 0..n {
            if m[u][v] {
                rows[pi[u]] |= 1 << pi[v];
            }
        }
    }
    rows
}

/// First `(layer, pi)` in a fixed order with `g(h(pi(layer))) = 0`.
pub fn search(
    params: &SizeParams,
    seeds: &[LocalHashSeed],
    key: &WordHashSeed,
    layers: &[Vec<Vec<bool>>],
) -> Option<(usize, Vec<usize>)> {
    let perms = permutations(params.n);
    for (b, m) in layers.iter().enumerate() {
        for pi in &perms {
            let y = local_graph_hash(params, seeds, &image_rows(m, pi)).ok()?;
            if key.eval(&y) < params.threshold {
                return Some((b, pi.clone()));
            }
        }
    }
    None
}

/// `(|S|, |h(S)|)` for `S` the relabelings of the given layers.
pub fn set_sizes(params: &SizeParams, seeds: &[LocalHashSeed], layers: &[Vec<Vec<bool>>]) -> (usize, usize) {
    let mut graphs = std::collections::HashSet::new();
    let mut digests = std::collections::HashSet::new();
    for m in layers {
        for pi in permutations(params.n) {
            let rows = image_rows(m, &pi);
            if graphs.insert(rows.clone()) {
                digests.insert(local_graph_hash(params, seeds, &rows).expect("sizes match"));
            }
        }
    }
    (graphs.len(), digests.len())
}

/// Number of relabelings of `m`.
pub fn orbit_size(m: &[Vec<bool>]) -> u64 {
    factorial(m.len()) / automorphisms(m).len() as u64
}

/// Brute-force check that both layers of a union graph are rigid.
pub fn check_rigid_promise(g: &NetworkGraph) -> Result<(), PromiseViolation> {
    for layer in 0..2u8 {
        let count = automorphisms(&g.layer_matrix(layer)).len();
        if count != 1 {
            return Err(PromiseViolation { layer, automorphisms: count });
        }
    }
    Ok(())
}

// coin words
const KA: usize = 0;
const KB: usize = 1;
const HA: usize = 2;
const HB: usize = 3;

/// The centralized hashing verifier run through the compiler.
#[derive(Clone, Debug)]
pub struct SizeInner {
    pub params: SizeParams,
    /// Whether the prover picks one of two edge layers.
    pub gni: bool,
}

impl SizeInner {
    fn w_bit(&self) -> Option<usize> {
        self.gni.then_some(1)
    }
    fn w_seed(&self) -> usize {
        1 + self.gni as usize
    }
    fn w_y(&self) -> usize {
        self.w_seed() + 2
    }

    fn layers(&self, g: &NetworkGraph) -> Vec<Vec<Vec<bool>>> {
        if self.gni {
            vec![g.layer_matrix(0), g.layer_matrix(1)]
        } else {
            vec![g.matrix()]
        }
    }

    /// Hash seeds by position and the word-hash key, given IDs and coins.
    pub fn keys(&self, ids: &[u64], coins: &[Vec<u64>]) -> (Vec<LocalHashSeed>, WordHashSeed) {
        let n = self.params.n;
        let mut by_id = vec![0; n];
        for (u, &id) in ids.iter().enumerate() {
            by_id[(id as usize).clamp(1, n) - 1] = u;
        }
        let seeds = by_id.iter().map(|&u| LocalHashSeed { a: coins[u][HA], b: coins[u][HB] }).collect();
        let ka: Vec<u64> = by_id.iter().map(|&u| coins[u][KA]).collect();
        let kb: Vec<u64> = by_id.iter().map(|&u| coins[u][KB]).collect();
        (seeds, WordHashSeed::from_chunks(&ka, &kb, self.params.key_bits))
    }

    /// Witness words for the map `pi` (node to position) on layer `bit`.
    pub fn fill_witness(&self, g: &NetworkGraph, seeds: &[LocalHashSeed], bit: usize, pi: &[usize]) -> Vec<Vec<u64>> {
        let m = &self.layers(g)[bit];
        let rows = image_rows(m, pi);
        (0..g.n())
            .map(|u| {
                let p = pi[u];
                let s = seeds[p];
                let mut w = vec![p as u64];
                if self.gni {
                    w.push(bit as u64);
                }
                w.extend([s.a, s.b, s.hash(&self.params, rows[p])]);
                w
            })
            .collect()
    }
}

fn in_layer(label: Option<EdgeLabel>, bit: u64) -> bool {
    match label {
        None => true,
        Some(l) => (bit == 0 && l.in_g0()) || (bit == 1 && l.in_g1()),
    }
}

const R0: Reg = Reg(0);
const R1: Reg = Reg(1);
const R2: Reg = Reg(2);
const R3: Reg = Reg(3);

/// `ok *= reg`, with `R3 == 0` on entry and exit.
fn and_into_ok(code: &mut Vec<Instr>, reg: Reg, tmp: Reg, ok: u64) {
    code.push(Instr::Load { rd: tmp, ra: R3, off: ok });
    code.push(Instr::Mul { rd: tmp, ra: tmp, rb: reg });
    code.push(Instr::Store { rs: tmp, ra: R3, off: ok });
}

impl InnerVerifier for SizeInner {
    fn name(&self) -> String {
        if self.gni { "gni" } else { "asym" }.into()
    }

    fn verifier_first(&self) -> bool {
        true
    }

    fn input_words(&self) -> usize {
        0
    }

    fn coin_bounds(&self) -> Vec<u64> {
        let k = 1 << self.params.key_bits;
        let h = 1 << self.params.row_bits;
        vec![k, k, h, h]
    }

    fn witness_words(&self) -> usize {
        self.w_y() + 1
    }

    /// Position, and the layer bit for non-isomorphism.
    fn public_words(&self) -> usize {
        1 + self.gni as usize
    }

    fn local_check(&self, view: &NodeView, _coins: &[u64], w: &[u64], nbrs: &[Vec<u64>]) -> Verdict {
        let n = self.params.n as u64;
        let bit = self.w_bit().map_or(0, |i| w[i]);
        ensure(bit < 2, "layer bit")?;
        if let Some(i) = self.w_bit() {
            ensure(nbrs.iter().all(|x| x[i] == bit), "neighbors picked another layer")?;
        }
        let mut row = 0u64;
        for (port, x) in nbrs.iter().enumerate() {
            if in_layer(view.labels.map(|l| l[port]), bit) {
                ensure(x[0] < n, "neighbor position out of range")?;
                row |= 1 << x[0];
            }
        }
        let seed = LocalHashSeed { a: w[self.w_seed()], b: w[self.w_seed() + 1] };
        let h = 1 << self.params.row_bits;
        ensure(seed.a < h && seed.b < h, "hash seed out of range")?;
        ensure(w[self.w_y()] == seed.hash(&self.params, row), "row digest")
    }

    fn node_input(&self, _view: &NodeView) -> Vec<u64> {
        Vec::new()
    }

    fn program(&self, layout: &Layout) -> RamProgram {
        let n = layout.n;
        let block = layout.block as u64;
        let base = |id: usize| layout.base(id) as u64;
        let wit = layout.input + layout.coins;
        let (pos, sa, sb, y) = (wit, wit + self.w_seed(), wit + self.w_seed() + 1, wit + self.w_y());
        let mark = base(n + 1);
        let yarr = mark + n as u64;
        let ok = yarr + n as u64;
        let (ac, bc) = (ok + 1, ok + 2);
        let mem = (bc + 1) as usize;

        let mut code = vec![
            Instr::LoadI { rd: R3, imm: 0 },
            Instr::LoadI { rd: R0, imm: 1 },
            Instr::Store { rs: R0, ra: R3, off: ok },
        ];
        for id in 1..=n {
            let b = base(id);
            // p = pos_i must be fresh and in range
            code.push(Instr::Load { rd: R0, ra: R3, off: b + pos as u64 });
            code.push(Instr::LoadI { rd: R1, imm: n as u64 });
            code.push(Instr::CmpLt { rd: R1, ra: R0, rb: R1 });
            and_into_ok(&mut code, R1, R2, ok);
            code.push(Instr::Load { rd: R1, ra: R0, off: mark });
            code.push(Instr::LoadI { rd: R2, imm: 1 });
            code.push(Instr::Sub { rd: R1, ra: R2, rb: R1 });
            and_into_ok(&mut code, R1, R2, ok);
            code.push(Instr::LoadI { rd: R2, imm: 1 });
            code.push(Instr::Store { rs: R2, ra: R0, off: mark });
            // the digest word lands at its position
            code.push(Instr::Load { rd: R1, ra: R3, off: b + y as u64 });
            code.push(Instr::Store { rs: R1, ra: R0, off: yarr });
            // the seed used must be the one drawn by ID p + 1
            code.push(Instr::LoadI { rd: R1, imm: block });
            code.push(Instr::Mul { rd: R1, ra: R0, rb: R1 });
            for (coin, claimed) in [(HA, sa), (HB, sb)] {
                code.push(Instr::Load { rd: R2, ra: R1, off: base(1) + (layout.input + coin) as u64 });
                code.push(Instr::Load { rd: R0, ra: R3, off: b + claimed as u64 });
                emit_eq(&mut code, R0, R0, R2, R3);
                code.push(Instr::LoadI { rd: R3, imm: 0 });
                and_into_ok(&mut code, R0, R2, ok);
            }
        }
        // key halves, ID n first
        for (coin, cell) in [(KA, ac), (KB, bc)] {
            let off = |id: usize| base(id) + (layout.input + coin) as u64;
            code.push(Instr::Load { rd: R0, ra: R3, off: off(n) });
            for id in (1..n).rev() {
                code.push(Instr::LoadI { rd: R1, imm: 1 << self.params.key_bits });
                code.push(Instr::Mul { rd: R0, ra: R0, rb: R1 });
                code.push(Instr::Load { rd: R1, ra: R3, off: off(id) });
                code.push(Instr::Add { rd: R0, ra: R0, rb: R1 });
            }
            code.push(Instr::Store { rs: R0, ra: R3, off: cell });
        }
        // g = b + sum_p y_p a^(p+1)
        code.push(Instr::Load { rd: R0, ra: R3, off: ac });
        code.push(Instr::LoadI { rd: R1, imm: 0 });
        for p in (0..n as u64).rev() {
            code.push(Instr::Load { rd: R2, ra: R3, off: yarr + p });
            code.push(Instr::Add { rd: R1, ra: R1, rb: R2 });
            code.push(Instr::Mul { rd: R1, ra: R1, rb: R0 });
        }
        code.push(Instr::Load { rd: R2, ra: R3, off: bc });
        code.push(Instr::Add { rd: R1, ra: R1, rb: R2 });
        code.push(Instr::LoadI { rd: R2, imm: self.params.threshold });
        code.push(Instr::CmpLt { rd: R2, ra: R1, rb: R2 });
        and_into_ok(&mut code, R2, R1, ok);
        code.push(Instr::Load { rd: R0, ra: R3, off: ok });
        code.push(Instr::Halt01 { ra: R0 });
        RamProgram::new(code, WORD_PRIME, mem)
    }

    /// Exhaustive search; without a hit, the identity by ID order (which the
    /// program then rejects).
    fn honest_witness(&self, g: &NetworkGraph, ids: &[u64], coins: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let (seeds, key) = self.keys(ids, coins);
        let (bit, pi) = search(&self.params, &seeds, &key, &self.layers(g)).unwrap_or_else(|| {
            let n = self.params.n;
            (0, ids.iter().map(|&i| (i as usize).clamp(1, n) - 1).collect())
        });
        self.fill_witness(g, &seeds, bit, &pi)
    }
}

pub type SizeProtocol = RamCompiler<SizeInner>;

/// The asymmetry protocol on the communication graph itself.
pub fn asym_protocol(g: &NetworkGraph) -> Result<SizeProtocol, SizeError> {
    let inner = SizeInner { params: SizeParams::asym(g.n())?, gni: false };
    Ok(RamCompiler::new(inner, g.n())?)
}

/// Non-isomorphism of the two layers of a labeled union graph, assuming
/// both are rigid.
pub fn gni_protocol(g: &NetworkGraph) -> Result<SizeProtocol, SizeError> {
    if !g.is_labeled() {
        return Err(SizeError::Unlabeled);
    }
    let inner = SizeInner { params: SizeParams::gni(g.n())?, gni: true };
    Ok(RamCompiler::new(inner, g.n())?)
}

fn size_inner(g: &NetworkGraph, w: &[Vec<u64>]) -> SizeInner {
    let gni = w.first().is_some_and(|x| x.len() == 5);
    let n = g.n();
    let params = if gni { SizeParams::gni(n) } else { SizeParams::asym(n) };
    SizeInner { params: params.expect("protocol was built for this n"), gni }
}

/// Rewrites the digest word at position 0 so that `g` vanishes. The program
/// is satisfied, but that node's row no longer matches.
pub const FORGED_DIGEST: WitnessEdit = WitnessEdit {
    name: "forged-digest",
    edit: |g, ids, coins, w| {
        let inner = size_inner(g, w);
        let (_, key) = inner.keys(ids, coins);
        let wy = inner.w_y();
        let mut y = vec![0; g.n()];
        for x in w.iter() {
            y[(x[0] as usize).min(g.n() - 1)] = x[wy];
        }
        if key.a == 0 {
            return;
        }
        y[0] = 0;
        let rest = key.eval(&y);
        // b + rest' + y0 * a = 0 where rest already includes b
        let y0 = mulmod(WORD_PRIME - rest, powmod(key.a, WORD_PRIME - 2));
        if let Some(x) = w.iter_mut().find(|x| x[0] == 0) {
            x[wy] = y0;
        }
    },
};

/// Sends the node with ID 2 to the position of ID 1. All rows and digests
/// are recomputed consistently; only the permutation check can object.
pub const DUPLICATE_POSITION: WitnessEdit = WitnessEdit {
    name: "duplicate-position",
    edit: |g, ids, coins, w| {
        let inner = size_inner(g, w);
        let (seeds, _) = inner.keys(ids, coins);
        let mut pi: Vec<usize> = w.iter().map(|x| x[0] as usize).collect();
        let (Some(u1), Some(u2)) = (ids.iter().position(|&i| i == 1), ids.iter().position(|&i| i == 2)) else {
            return;
        };
        pi[u2] = pi[u1];
        let bit = inner.w_bit().map_or(0, |i| w[0][i] as usize);
        w.clone_from_slice(&inner.fill_witness(g, &seeds, bit, &pi));
    },
};

/// Width of one witness word, for bandwidth reports.
pub fn word_bits() -> u8 {
    width(WORD_PRIME - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{monte_carlo, run_protocol, RunOptions};
    use crate::netmodel::{generate, union_edges, GraphKind};
    use crate::ramcompile::{CompilerProver, Tamper};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn asym6() -> NetworkGraph {
        generate(&GraphKind::SmallestAsymmetric, 0).unwrap()
    }

    fn random_seeds(params: &SizeParams, rng: &mut ChaCha8Rng) -> Vec<LocalHashSeed> {
        let h = 1 << params.row_bits;
        (0..params.n)
            .map(|_| LocalHashSeed { a: rng.gen_range(0..h), b: rng.gen_range(0..h) })
            .collect()
    }

    #[test]
    fn parameters_at_six() {
        let p = SizeParams::asym(6).unwrap();
        assert_eq!((p.ell, p.row_bits, p.key_bits), (11, 9, 11));
        assert!((p.p() - 1440.0 / 2048.0).abs() < 1e-12);
        assert!((p.alpha() - 0.3207).abs() < 1e-3);
        assert!(p.alpha() - p.beta() >= 0.1);
        assert_eq!(SizeParams::gni(6).unwrap().ell, 12);
        assert_eq!(SizeParams::asym(9), Err(SizeError::Size(9)));
        assert_eq!(SizeParams::asym(1), Err(SizeError::Size(1)));
    }

    #[test]
    fn hashes_are_deterministic_and_checked() {
        let p = SizeParams::asym(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seeds = random_seeds(&p, &mut rng);
        let rows = rows_of(&asym6().matrix());
        assert_eq!(
            local_graph_hash(&p, &seeds, &rows).unwrap(),
            local_graph_hash(&p, &seeds, &rows).unwrap()
        );
        let key = WordHashSeed { a: 12345, b: 678 };
        let y = vec![1, 2, 3, 4, 5, 6];
        assert_eq!(word_hash(&p, &key, &y), word_hash(&p, &key, &y));
        assert!(word_hash(&p, &key, &y).unwrap() < 1 << p.ell);
        assert_eq!(word_hash(&p, &key, &[]), Err(SizeError::Length { got: 0, expected: 6 }));
    }

    #[test]
    fn local_hash_pairs_collide_rarely() {
        let p = SizeParams::asym(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 20_000;
        let bound = 1.0 / (1u64 << p.row_bits) as f64;
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let x = rng.gen_range(0..64u64);
            let x2 = (x + rng.gen_range(1..64)) % 64;
            let hits = (0..trials)
                .filter(|_| {
                    let s = random_seeds(&p, &mut rng)[0];
                    s.hash(&p, x) == s.hash(&p, x2)
                })
                .count();
            worst = worst.max(hits as f64 / trials as f64);
        }
        let sigma = (bound / trials as f64).sqrt();
        assert!(worst <= bound * (1.0 + 1.0 / 6.0) + 3.0 * sigma, "{worst}");
    }

    #[test]
    fn word_hash_pairs_collide_at_rate_two_to_minus_ell() {
        let p = SizeParams::asym(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|_| {
                let key = WordHashSeed { a: rng.gen_range(0..WORD_PRIME), b: rng.gen_range(0..WORD_PRIME) };
                let y: Vec<u64> = (0..6).map(|_| rng.gen_range(0..512)).collect();
                let y2: Vec<u64> = (0..6).map(|_| rng.gen_range(0..512)).collect();
                word_hash(&p, &key, &y).unwrap() == word_hash(&p, &key, &y2).unwrap()
            })
            .count();
        let rate = 1.0 / (1u64 << p.ell) as f64;
        let sigma = (rate * (1.0 - rate) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - rate).abs() <= 3.0 * sigma, "{hits}");
    }

    #[test]
    fn digests_keep_the_set_size() {
        let p = SizeParams::asym(6).unwrap();
        let m = asym6().matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 300;
        let shrunk = (0..trials)
            .filter(|_| {
                let (s, s2) = set_sizes(&p, &random_seeds(&p, &mut rng), std::slice::from_ref(&m));
                assert_eq!(s, 720);
                s2 != s
            })
            .count();
        assert!((shrunk as f64 / trials as f64) <= 1.0 / 6.0, "{shrunk}");
    }

    #[test]
    fn orbit_sizes() {
        assert_eq!(orbit_size(&asym6().matrix()), 720);
        assert_eq!(orbit_size(&generate(&GraphKind::Cycle(6), 0).unwrap().matrix()), 60);
    }

    #[test]
    fn program_matches_direct_evaluation() {
        let g = asym6();
        let proto = asym_protocol(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut hits = 0;
        for _ in 0..60 {
            let coins: Vec<Vec<u64>> = (0..6)
                .map(|_| proto.inner.coin_bounds().iter().map(|&b| rng.gen_range(0..b)).collect())
                .collect();
            let ids: Vec<u64> = {
                let mut v: Vec<u64> = (1..=6).collect();
                v.rotate_left(rng.gen_range(0..6));
                v
            };
            let w = proto.inner.honest_witness(&g, &ids, &coins);
            let (seeds, key) = proto.inner.keys(&ids, &coins);
            let expect = search(&proto.inner.params, &seeds, &key, &[g.matrix()]).is_some();
            let inputs = vec![Vec::new(); 6];
            assert_eq!(proto.centralized(&ids, &inputs, &coins, &w).unwrap(), expect);
            hits += expect as usize;
        }
        assert!(hits > 5 && hits < 40, "{hits}");
    }

    #[test]
    fn single_runs_accept_only_with_a_hit() {
        let g = asym6();
        let proto = asym_protocol(&g).unwrap();
        let stats = monte_carlo(&proto, &g, &CompilerProver::honest(), 300, 6, RunOptions::default()).unwrap();
        assert!(
            stats.accept_rate > 0.2 && stats.accept_rate < 0.4,
            "{}",
            stats.accept_rate
        );
    }

    #[test]
    fn cheating_witnesses_are_caught() {
        let g = asym6();
        let proto = asym_protocol(&g).unwrap();
        for edit in [FORGED_DIGEST, DUPLICATE_POSITION] {
            let prover = CompilerProver { tamper: Tamper::Witness(edit) };
            for seed in 0..40 {
                let run = run_protocol(&proto, &g, &prover, seed, RunOptions::default()).unwrap();
                assert!(!run.accept, "{} seed {seed}", edit.name);
            }
        }
    }

    #[test]
    fn forged_digest_satisfies_the_program() {
        let g = asym6();
        let proto = asym_protocol(&g).unwrap();
        let coins: Vec<Vec<u64>> = (0..6).map(|u| vec![u + 3, u + 7, u + 1, u + 2]).collect();
        let ids: Vec<u64> = (1..=6).collect();
        let mut w = proto.inner.honest_witness(&g, &ids, &coins);
        (FORGED_DIGEST.edit)(&g, &ids, &coins, &mut w);
        let inputs = vec![Vec::new(); 6];
        assert!(proto.centralized(&ids, &inputs, &coins, &w).unwrap());
    }

    fn rigid_partner() -> Vec<(usize, usize)> {
        // path 0..5 with chords 1-3 and 1-4
        vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 3), (1, 4)]
    }

    #[test]
    fn rigid_promise_is_checked() {
        let e0: Vec<_> = asym6().edges().collect();
        let g = union_edges(6, &e0, &rigid_partner()).unwrap();
        assert_eq!(check_rigid_promise(&g), Ok(()));
        let cycle: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let bad = union_edges(6, &e0, &cycle).unwrap();
        assert_eq!(check_rigid_promise(&bad), Err(PromiseViolation { layer: 1, automorphisms: 12 }));
        assert_eq!(gni_protocol(&asym6()).err(), Some(SizeError::Unlabeled));
    }

    #[test]
    fn gni_bands() {
        let e0: Vec<_> = asym6().edges().collect();
        let relabel = [3, 0, 5, 1, 4, 2];
        let e_iso: Vec<_> = e0.iter().map(|&(u, v)| (relabel[u], relabel[v])).collect();
        let params = SizeParams::gni(6).unwrap();
        let trials = 400;
        let mut rates = Vec::new();
        for e1 in [rigid_partner(), e_iso] {
            let g = union_edges(6, &e0, &e1).unwrap();
            assert_eq!(check_rigid_promise(&g), Ok(()));
            let proto = gni_protocol(&g).unwrap();
            let s = monte_carlo(&proto, &g, &CompilerProver::honest(), trials, 7, RunOptions::default()).unwrap();
            rates.push(s.accept_rate);
        }
        let f = factorial(6);
        for (rate, size) in rates.iter().zip([2 * f, f]) {
            let (lo, hi) = sandwich(size, params.ell);
            let sigma = (hi * (1.0 - hi) / trials as f64).sqrt();
            assert!(*rate >= lo - 3.0 * sigma && *rate <= hi + 3.0 * sigma, "{rate} vs [{lo}, {hi}]");
        }
    }
}
