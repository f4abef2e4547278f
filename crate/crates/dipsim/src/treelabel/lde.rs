//! Distributed evaluation of the low-degree extension of a function on H^m.
//!
//! Input positions are points of H^m, owned in contiguous chunks by node id.
//! The prover broadcasts a query point z and a value v; every node computes
//! its local share `S_u = sum over owned x of tau_x(z) * phi(x)` and the shares
//! are summed up a labeled spanning tree. The root compares the total with v.

use crate::engine::{
    ensure, DecodeError, EngineError, Msg, MsgReader, Protocol, Prover, ProverCtx, Speaker, Tape,
    Verdict,
};
use crate::field::{Field, PrimeField};
use crate::netmodel::{NetworkGraph, NodeView};

use super::{label_msgs, read_label_shares, SpanningTree, TreeLabel};

/// Base set size, dimension and field for an extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LdeParams {
    /// `H = {0, .., h-1}` inside the field.
    pub h: u64,
    pub m: u32,
    pub field: PrimeField,
}

impl LdeParams {
    pub fn new(h: u64, m: u32, field: PrimeField) -> Option<Self> {
        (h >= 1 && h < field.modulus() && m >= 1 && h.checked_pow(m).is_some())
            .then_some(Self { h, m, field })
    }

    /// Defaults for `positions` inputs spread over `n` nodes: |H| the next
    /// power of two at least log2(positions), m just large enough to cover
    /// every position, and a prime above |H|^2 * m * n.
    pub fn for_positions(positions: usize, n: usize) -> Self {
        let positions = positions.max(2) as u64;
        let log = 64 - (positions - 1).leading_zeros() as u64;
        let h = log.next_power_of_two().max(2);
        let mut m = 1u32;
        while h.pow(m) < positions {
            m += 1;
        }
        let min = h * h * m as u64 * n.max(1) as u64 + 1;
        let field = PrimeField::at_least(min).expect("field fits in 63 bits");
        Self { h, m, field }
    }

    /// `|H|^m`.
    pub fn grid_size(&self) -> usize {
        self.h.pow(self.m) as usize
    }

    /// Coordinates of grid point `i`, least significant first.
    pub fn point(&self, mut i: usize) -> Vec<u64> {
        (0..self.m)
            .map(|_| {
                let d = i as u64 % self.h;
                i /= self.h as usize;
                d
            })
            .collect()
    }

    /// Lagrange basis polynomial of `a` in H, evaluated at `t`.
    pub fn lagrange(&self, a: u64, t: u64) -> u64 {
        let f = self.field;
        (0..self.h).filter(|&b| b != a).fold(f.one(), |acc, b| {
            let num = f.sub(t, b);
            let den = f.inv(f.sub(a, b)).expect("H elements are distinct");
            f.mul(acc, f.mul(num, den))
        })
    }

    /// `tau_x(z) = prod_j L_{x_j}(z_j)`.
    pub fn tau(&self, x: &[u64], z: &[u64]) -> u64 {
        let f = self.field;
        f.product(x.iter().zip(z).map(|(&a, &t)| self.lagrange(a, t)))
    }
}

/// Contiguous block of positions owned by node `u`.
pub fn owned_positions(total: usize, n: usize, u: usize) -> std::ops::Range<usize> {
    let chunk = total.div_ceil(n.max(1));
    (u * chunk).min(total)..((u + 1) * chunk).min(total)
}

/// `S_u` for the given owned positions.
pub fn local_share(params: &LdeParams, phi: &[u64], owned: std::ops::Range<usize>, z: &[u64]) -> u64 {
    let f = params.field;
    f.sum(owned.map(|i| f.mul(params.tau(&params.point(i), z), f.embed(phi[i]))))
}

/// Centralized oracle: interpolates one coordinate at a time (Neville's
/// scheme), never forming the basis polynomials.
pub fn lde_oracle(params: &LdeParams, phi: &[u64], z: &[u64]) -> u64 {
    let f = params.field;
    let mut table: Vec<u64> = (0..params.grid_size())
        .map(|i| phi.get(i).map_or(0, |&v| f.embed(v)))
        .collect();
    let h = params.h as usize;
    for &t in z {
        table = table
            .chunks(h)
            .map(|line| neville(f, line, t))
            .collect();
    }
    table[0]
}

fn neville(f: PrimeField, ys: &[u64], t: u64) -> u64 {
    // p[i] holds the interpolant through points i..=i+k at t
    let mut p = ys.to_vec();
    for k in 1..ys.len() {
        for i in 0..ys.len() - k {
            let (xi, xj) = (i as u64, (i + k) as u64);
            let num = f.sub(f.mul(f.sub(t, xi), p[i + 1]), f.mul(f.sub(t, xj), p[i]));
            p[i] = f.mul(num, f.inv(f.sub(xj, xi)).expect("distinct nodes"));
        }
    }
    p[0]
}

/// Verifies `phi_hat(z) = v` by summing local shares up the tree.
#[derive(Clone, Debug)]
pub struct LdeProtocol {
    pub params: LdeParams,
    /// One value per position; positions past the end are zero.
    pub phi: Vec<u64>,
    /// Query point the honest prover announces.
    pub query: Vec<u64>,
    /// When set, the root also checks the announced value against it.
    pub claim: Option<u64>,
}

/// Decoded prover message of one node.
#[derive(Clone, Debug, PartialEq, Eq)]
struct LdeMsg {
    label: TreeLabel,
    z: Vec<u64>,
    v: u64,
    sum: u64,
}

impl LdeProtocol {
    pub fn new(phi: Vec<u64>, n: usize, query: Vec<u64>) -> Self {
        let params = LdeParams::for_positions(phi.len(), n);
        Self { params, phi, query, claim: None }
    }

    fn fw(&self) -> u8 {
        self.params.field.bits()
    }

    fn read(&self, tr: &[Msg], view: &NodeView) -> Result<LdeMsg, DecodeError> {
        let mut r = tr[0].reader();
        let p = self.params.field.modulus();
        let label = TreeLabel::read(&mut r, view)?;
        let z = (0..self.params.m)
            .map(|_| r.take_below(self.fw(), p))
            .collect::<Result<_, _>>()?;
        let v = r.take_below(self.fw(), p)?;
        let sum = r.take_below(self.fw(), p)?;
        r.finish()?;
        Ok(LdeMsg { label, z, v, sum })
    }

    fn read_point(&self, r: &mut MsgReader) -> Result<(Vec<u64>, u64), DecodeError> {
        let z = (0..self.params.m)
            .map(|_| r.take(self.fw()))
            .collect::<Result<_, _>>()?;
        Ok((z, r.take(self.fw())?))
    }

    /// Value announced to node 0 in a finished run.
    pub fn announced_value(&self, g: &NetworkGraph, transcript: &[Vec<Msg>]) -> Option<u64> {
        let tr: Vec<Msg> = transcript.iter().map(|r| r[0].clone()).collect();
        self.read(&tr, &g.view(0)).ok().map(|m| m.v)
    }

    fn encode(&self, g: &NetworkGraph, labels: &[TreeLabel], zs: &[Vec<u64>], vs: &[u64], sums: &[u64]) -> Vec<Msg> {
        let mut msgs = label_msgs(g, labels);
        for (u, m) in msgs.iter_mut().enumerate() {
            for &zj in &zs[u] {
                m.push(zj, self.fw());
            }
            m.push(vs[u], self.fw());
            m.push(sums[u], self.fw());
        }
        msgs
    }
}

impl Protocol for LdeProtocol {
    fn name(&self) -> String {
        "lde-eval".into()
    }
    fn schedule(&self) -> Vec<Speaker> {
        vec![Speaker::Prover]
    }
    fn check(&self, _g: &NetworkGraph) -> Result<(), EngineError> {
        let bad = |reason: &str| {
            Err(EngineError::Incompatible { protocol: self.name(), reason: reason.into() })
        };
        if self.phi.len() > self.params.grid_size() {
            return bad("more positions than grid points");
        }
        if self.query.len() != self.params.m as usize {
            return bad("query point has the wrong dimension");
        }
        Ok(())
    }
    fn coins(&self, _: usize, _: &NodeView, _: &mut Tape) -> Msg {
        Msg::new()
    }
    fn share(&self, view: &NodeView, tr: &[Msg], _: usize, _: &[Vec<Msg>], port: usize) -> Msg {
        let mut m = Msg::new();
        if let Ok(x) = self.read(tr, view) {
            x.label.write_share(&mut m, view, port);
            for &zj in &x.z {
                m.push(zj, self.fw());
            }
            m.push(x.v, self.fw());
            if x.label.parent == Some(port) {
                m.push(x.sum, self.fw());
            }
        }
        m
    }
    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let f = self.params.field;
        let mine = self.read(tr, view)?;
        let mut readers: Vec<MsgReader> = heard[0].iter().map(Msg::reader).collect();
        let shares = read_label_shares(view, &mut readers)?;
        let local = mine.label.check(view, &shares)?;
        for r in readers.iter_mut() {
            let (z, v) = self.read_point(r)?;
            ensure(z == mine.z && v == mine.v, "neighbors disagree on the query")?;
        }
        let owned = owned_positions(self.phi.len(), view.n, view.id);
        let mut acc = local_share(&self.params, &self.phi, owned, &mine.z);
        for &c in &local.children {
            acc = f.add(acc, readers[c].take(self.fw())?);
        }
        ensure(acc == mine.sum, "subtree share sum mismatch")?;
        if local.is_root() {
            ensure(mine.sum == mine.v, "root sum differs from the announced value")?;
            if let Some(c) = self.claim {
                ensure(mine.v == c, "announced value differs from the claim")?;
            }
        }
        Ok(())
    }
}

/// Announces the query and the true partial sums over a BFS tree from 0.
#[derive(Clone, Debug, Default)]
pub struct HonestLde;

impl Prover<LdeProtocol> for HonestLde {
    fn name(&self) -> String {
        "honest".into()
    }
    fn honest(&self) -> bool {
        true
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, LdeProtocol>) -> Vec<Msg> {
        let (p, g) = (ctx.proto, ctx.graph);
        let f = p.params.field;
        let t = SpanningTree::bfs(g, 0);
        let shares: Vec<u64> = (0..g.n())
            .map(|u| local_share(&p.params, &p.phi, owned_positions(p.phi.len(), g.n(), u), &p.query))
            .collect();
        let sums = t.fold_up(&shares, |a, b| f.add(*a, *b));
        let v = sums[t.root];
        p.encode(g, &t.labels(), &vec![p.query.clone(); g.n()], &vec![v; g.n()], &sums)
    }
}

/// Honest partial sums, but announces `v + delta` everywhere and shifts the
/// root's sum to match.
#[derive(Clone, Debug)]
pub struct ShiftedLde {
    pub delta: u64,
}

impl Prover<LdeProtocol> for ShiftedLde {
    fn name(&self) -> String {
        "shifted-value".into()
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, LdeProtocol>) -> Vec<Msg> {
        let (p, g) = (ctx.proto, ctx.graph);
        let f = p.params.field;
        let t = SpanningTree::bfs(g, 0);
        let shares: Vec<u64> = (0..g.n())
            .map(|u| local_share(&p.params, &p.phi, owned_positions(p.phi.len(), g.n(), u), &p.query))
            .collect();
        let mut sums = t.fold_up(&shares, |a, b| f.add(*a, *b));
        sums[t.root] = f.add(sums[t.root], f.embed(self.delta));
        let v = sums[t.root];
        p.encode(g, &t.labels(), &vec![p.query.clone(); g.n()], &vec![v; g.n()], &sums)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_protocol, RunOptions};
    use crate::netmodel::{generate, GraphKind};
    use rand::{Rng, SeedableRng};

    #[test]
    fn defaults() {
        let p = LdeParams::for_positions(16, 4);
        assert_eq!((p.h, p.m), (4, 2));
        assert!(p.field.modulus() > 4 * 4 * 2 * 4);
        let p = LdeParams::for_positions(1000, 10);
        assert_eq!(p.h, 16);
        assert!(p.grid_size() >= 1000);
    }

    #[test]
    fn basis_is_an_indicator_on_the_grid() {
        let p = LdeParams::new(4, 2, PrimeField::new(101).unwrap()).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let want = (i == j) as u64;
                assert_eq!(p.tau(&p.point(i), &p.point(j)), want);
            }
        }
    }

    #[test]
    fn tau_matches_interpolation_through_grid_values() {
        let p = LdeParams::new(4, 2, PrimeField::new(1_000_003).unwrap()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for x in 0..16 {
            let mut ind = vec![0; 16];
            ind[x] = 1;
            let z: Vec<u64> = (0..2).map(|_| rng.gen_range(0..1_000_003)).collect();
            assert_eq!(p.tau(&p.point(x), &z), lde_oracle(&p, &ind, &z));
        }
    }

    fn run(proto: &LdeProtocol, g: &NetworkGraph) -> crate::engine::ProtocolRun {
        run_protocol(proto, g, &HonestLde, 0, RunOptions::default()).unwrap()
    }

    #[test]
    fn zero_function_evaluates_to_zero() {
        let g = generate(&GraphKind::Path(4), 0).unwrap();
        let mut proto = LdeProtocol::new(vec![0; 16], 4, vec![17, 29]);
        proto.claim = Some(0);
        let r = run(&proto, &g);
        assert!(r.accept);
        assert_eq!(proto.announced_value(&g, &r.transcript), Some(0));
    }

    #[test]
    fn point_indicator_at_its_own_point() {
        let g = generate(&GraphKind::Cycle(5), 0).unwrap();
        let mut phi = vec![0; 16];
        phi[6] = 1;
        let params = LdeParams::for_positions(16, 5);
        let x0 = params.point(6);
        let proto = LdeProtocol::new(phi, 5, x0);
        let r = run(&proto, &g);
        assert!(r.accept);
        assert_eq!(proto.announced_value(&g, &r.transcript), Some(1));
    }

    #[test]
    fn shifted_value_rejected() {
        let g = generate(&GraphKind::Star(5), 0).unwrap();
        let mut proto = LdeProtocol::new((0..16).collect(), 5, vec![3, 8]);
        let truth = lde_oracle(&proto.params, &proto.phi, &proto.query);
        proto.claim = Some(truth);
        assert!(run(&proto, &g).accept);
        let r = run_protocol(&proto, &g, &ShiftedLde { delta: 1 }, 0, RunOptions::default()).unwrap();
        assert!(!r.accept);
    }

    #[test]
    fn distributed_value_matches_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for i in 0..20 {
            let n = rng.gen_range(2..9);
            let g = generate(&GraphKind::RandomTree(n), i).unwrap();
            let mut proto = LdeProtocol::new(vec![0; 16], n, vec![0, 0]);
            let q = proto.params.field.modulus();
            proto.phi = (0..16).map(|_| rng.gen_range(0..q)).collect();
            proto.query = (0..2).map(|_| rng.gen_range(0..q)).collect();
            let r = run(&proto, &g);
            assert!(r.accept);
            let want = lde_oracle(&proto.params, &proto.phi, &proto.query);
            assert_eq!(proto.announced_value(&g, &r.transcript), Some(want));
        }
    }
}
