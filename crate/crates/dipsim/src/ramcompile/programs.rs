//! Hand-written verifier programs and a random program generator.

use rand::Rng;

use super::compiler::{InnerVerifier, Layout};
use super::isa::{Instr, RamProgram, Reg};
use crate::engine::width;
use crate::netmodel::{NetworkGraph, NodeView};

const R0: Reg = Reg(0);
const R1: Reg = Reg(1);
const R2: Reg = Reg(2);
const R3: Reg = Reg(3);

/// Appends `rd = (ra == rb)` using `scratch` as a temporary; clobbers `ra`.
pub fn emit_eq(code: &mut Vec<Instr>, rd: Reg, ra: Reg, rb: Reg, scratch: Reg) {
    code.push(Instr::CmpLt { rd: scratch, ra, rb });
    code.push(Instr::CmpLt { rd: ra, ra: rb, rb: ra });
    code.push(Instr::Add { rd: scratch, ra: scratch, rb: ra });
    code.push(Instr::LoadI { rd, imm: 1 });
    code.push(Instr::Sub { rd, ra: rd, rb: scratch });
}

/// Outputs 1 iff the words at `base + i * stride` (i < count) sum to `k`.
/// Straight-line, so the step count does not depend on the data.
pub fn sum_equals(count: usize, base: usize, stride: usize, k: u64, modulus: u64, mem: usize) -> RamProgram {
    let mut code = vec![Instr::LoadI { rd: R0, imm: 0 }, Instr::LoadI { rd: R1, imm: 0 }];
    for i in 0..count {
        code.push(Instr::Load { rd: R2, ra: R1, off: (base + i * stride) as u64 });
        code.push(Instr::Add { rd: R0, ra: R0, rb: R2 });
    }
    code.push(Instr::LoadI { rd: R3, imm: k % modulus });
    emit_eq(&mut code, R1, R0, R3, R2);
    code.push(Instr::Halt01 { ra: R1 });
    RamProgram::new(code, modulus, mem)
}

/// Outputs 1 iff the words at `base + i * stride` are strictly increasing.
pub fn strictly_increasing(count: usize, base: usize, stride: usize, modulus: u64, mem: usize) -> RamProgram {
    let mut code = vec![Instr::LoadI { rd: R0, imm: 1 }, Instr::LoadI { rd: R3, imm: 0 }];
    for i in 1..count {
        code.push(Instr::Load { rd: R1, ra: R3, off: (base + (i - 1) * stride) as u64 });
        code.push(Instr::Load { rd: R2, ra: R3, off: (base + i * stride) as u64 });
        code.push(Instr::CmpLt { rd: R1, ra: R1, rb: R2 });
        code.push(Instr::Mul { rd: R0, ra: R0, rb: R1 });
    }
    code.push(Instr::Halt01 { ra: R0 });
    RamProgram::new(code, modulus, mem)
}

/// Random straight-line program of `len` instructions that stays in bounds.
pub fn random_straight_line(rng: &mut impl Rng, len: usize, modulus: u64, mem: usize) -> RamProgram {
    let reg = |rng: &mut dyn rand::RngCore| Reg(rng.gen_range(0..4));
    let mut code = Vec::with_capacity(len + 1);
    while code.len() < len {
        match rng.gen_range(0..7) {
            0 => code.push(Instr::LoadI { rd: reg(rng), imm: rng.gen_range(0..modulus) }),
            op @ (1 | 2) => {
                let ra = reg(rng);
                code.push(Instr::LoadI { rd: ra, imm: 0 });
                let off = rng.gen_range(0..mem as u64);
                code.push(if op == 1 {
                    Instr::Load { rd: reg(rng), ra, off }
                } else {
                    Instr::Store { rs: reg(rng), ra, off }
                });
            }
            op => {
                let (rd, ra, rb) = (reg(rng), reg(rng), reg(rng));
                code.push(match op {
                    3 => Instr::Add { rd, ra, rb },
                    4 => Instr::Sub { rd, ra, rb },
                    5 => Instr::Mul { rd, ra, rb },
                    _ => Instr::CmpLt { rd, ra, rb },
                });
            }
        }
    }
    code.push(Instr::Halt01 { ra: reg(rng) });
    RamProgram::new(code, modulus, mem)
}

/// NP-style inner verifier: node inputs sum to a common target `k`.
/// The transcript carries no witness, only the execution itself.
#[derive(Clone, Debug)]
pub struct SumToK {
    pub values: Vec<u64>,
    pub k: u64,
}

impl SumToK {
    /// Word modulus: a power of two above every partial sum and the target.
    pub fn modulus(&self) -> u64 {
        let max = self.values.iter().copied().max().unwrap_or(0).max(1);
        let bound = max.saturating_mul(self.values.len().max(1) as u64).max(self.k);
        1u64 << (width(bound) + 1).min(62)
    }
}

impl InnerVerifier for SumToK {
    fn name(&self) -> String {
        "sum-to-k".into()
    }
    fn input_words(&self) -> usize {
        1
    }
    fn node_input(&self, view: &NodeView) -> Vec<u64> {
        vec![self.values[view.id]]
    }
    fn program(&self, layout: &Layout) -> RamProgram {
        let n = layout.n;
        sum_equals(n, layout.base(1), layout.block, self.k, self.modulus(), layout.base(n + 1))
    }
    fn honest_witness(&self, g: &NetworkGraph, _ids: &[u64], _coins: &[Vec<u64>]) -> Vec<Vec<u64>> {
        vec![Vec::new(); g.n()]
    }
}

#[cfg(test)]
mod tests {
    use super::super::machine::{memory_multisets, state_multisets, trace};
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn sortedness_checker() {
        let p = strictly_increasing(3, 1, 1, 16, 4);
        assert!(trace(&p, &[0, 1, 2, 3], 100).unwrap().y);
        assert!(!trace(&p, &[0, 1, 3, 2], 100).unwrap().y);
    }

    #[test]
    fn sum_checker() {
        let p = sum_equals(3, 1, 2, 12, 64, 8);
        assert!(trace(&p, &[0, 3, 9, 4, 0, 5], 100).unwrap().y);
        assert!(!trace(&p, &[0, 3, 0, 4, 0, 6], 100).unwrap().y);
        let fixed = trace(&p, &[], 100).unwrap().steps.len();
        assert_eq!(trace(&p, &[0, 3, 9, 4, 0, 5], 100).unwrap().steps.len(), fixed);
    }

    #[test]
    fn random_programs_balance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mem = rng.gen_range(1..20);
            let m = [2, 7, 256, 65521][rng.gen_range(0..4)];
            let len = rng.gen_range(0..60);
            let p = random_straight_line(&mut rng, len, m, mem);
            let input: Vec<u64> = (0..mem).map(|_| rng.gen_range(0..m)).collect();
            let t = trace(&p, &input, 1000).unwrap();
            let (r, w) = memory_multisets(&t, &input, mem);
            assert_eq!(r, w);
            let (s, s2) = state_multisets(&p, &t);
            assert_eq!(s, s2);
        }
    }
}
