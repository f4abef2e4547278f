//! Canonical-form execution: every step reads one cell together with the
//! time it was last written, then writes that cell again with the current
//! time. On an honest run the multiset of read triples equals the multiset
//! of write triples (counting initial contents as writes at time 0 and final
//! contents as reads).

use thiserror::Error;

use super::isa::{Instr, RamProgram, Reg};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RamError {
    #[error("address {addr} out of bounds (memory has {size} cells)")]
    AddressOutOfBounds { addr: u64, size: usize },
    #[error("step budget of {0} exceeded")]
    StepBudgetExceeded(usize),
    #[error("program counter {0} outside the program")]
    PcOutOfRange(u64),
    #[error("machine already halted")]
    Halted,
    #[error("register value out of range")]
    BadState,
}

/// Which cell a canonical instruction touches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    /// Cell 0, read and rewritten unchanged by register-only instructions.
    Scratch,
    Indirect { ra: Reg, off: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Read `(v, t)`, write `(v, now)`.
    ReadRewrite,
    /// Read `(v', t')`, write `(v, now)` with a new value.
    ReadWrite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CanonicalInstr {
    pub instr: Instr,
    pub cell: Cell,
    pub flavor: Flavor,
}

/// Instruments every instruction so that it touches exactly one cell.
pub fn canonicalize(prog: &RamProgram) -> Vec<CanonicalInstr> {
    prog.instrs.iter().map(|&i| canonical(i)).collect()
}

pub fn canonical(instr: Instr) -> CanonicalInstr {
    let (cell, flavor) = match instr {
        Instr::Load { ra, off, .. } => (Cell::Indirect { ra, off }, Flavor::ReadRewrite),
        Instr::Store { ra, off, .. } => (Cell::Indirect { ra, off }, Flavor::ReadWrite),
        _ => (Cell::Scratch, Flavor::ReadRewrite),
    };
    CanonicalInstr { instr, cell, flavor }
}

/// Registers, program counter, halt flag and output bit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct RamState {
    pub regs: [u64; 4],
    pub pc: u64,
    pub halted: bool,
    pub out: bool,
}

impl RamState {
    /// Words of the state in a fixed order.
    pub fn words(&self) -> [u64; 7] {
        let [a, b, c, d] = self.regs;
        [a, b, c, d, self.pc, self.halted as u64, self.out as u64]
    }
}

/// One canonical step: the state before it and the memory access.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RamStep {
    pub pre: RamState,
    pub addr: u64,
    pub read_v: u64,
    pub read_t: u64,
    pub write_v: u64,
}

/// Address touched from state `s`.
pub fn address(prog: &RamProgram, s: &RamState) -> Result<u64, RamError> {
    let instr = fetch(prog, s)?;
    let addr = match canonical(instr).cell {
        Cell::Scratch => 0,
        Cell::Indirect { ra, off } => s.regs[ra.0 as usize].saturating_add(off),
    };
    if addr as usize >= prog.mem_size || addr >= 1 << 62 {
        return Err(RamError::AddressOutOfBounds { addr, size: prog.mem_size });
    }
    Ok(addr)
}

fn fetch(prog: &RamProgram, s: &RamState) -> Result<Instr, RamError> {
    if s.halted {
        return Err(RamError::Halted);
    }
    if s.regs.iter().any(|&r| r >= prog.modulus) {
        return Err(RamError::BadState);
    }
    prog.instrs
        .get(s.pc as usize)
        .copied()
        .ok_or(RamError::PcOutOfRange(s.pc))
}

/// Applies one instruction given the value read. Returns the next state,
/// the address touched and the value written back.
pub fn transition(prog: &RamProgram, s: &RamState, read_v: u64) -> Result<(RamState, u64, u64), RamError> {
    let instr = fetch(prog, s)?;
    let addr = address(prog, s)?;
    let m = prog.modulus;
    let mut t = *s;
    t.pc += 1;
    let r = |x: Reg| s.regs[x.0 as usize];
    let mut write_v = read_v;
    let mut set = |x: Reg, v: u64| t.regs[x.0 as usize] = v % m;
    match instr {
        Instr::LoadI { rd, imm } => set(rd, imm),
        Instr::Load { rd, .. } => set(rd, read_v),
        Instr::Store { rs, .. } => write_v = r(rs),
        Instr::Add { rd, ra, rb } => set(rd, ((r(ra) as u128 + r(rb) as u128) % m as u128) as u64),
        Instr::Sub { rd, ra, rb } => set(rd, ((r(ra) as u128 + m as u128 - r(rb) as u128) % m as u128) as u64),
        Instr::Mul { rd, ra, rb } => set(rd, ((r(ra) as u128 * r(rb) as u128) % m as u128) as u64),
        Instr::CmpLt { rd, ra, rb } => set(rd, (r(ra) < r(rb)) as u64),
        Instr::Jnz { ra, target } => {
            if r(ra) != 0 {
                t.pc = target as u64;
            }
        }
        Instr::Halt01 { ra } => {
            t.halted = true;
            t.out = r(ra) == 1;
        }
    }
    Ok((t, addr, write_v))
}

/// A complete canonical execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<RamStep>,
    /// Final `(value, time)` of every cell.
    pub finals: Vec<(u64, u64)>,
    pub y: bool,
}

impl Trace {
    /// State after the last step.
    pub fn final_state(&self, prog: &RamProgram) -> RamState {
        self.steps
            .last()
            .and_then(|s| transition(prog, &s.pre, s.read_v).ok())
            .map_or(RamState::default(), |t| t.0)
    }
}

/// Runs `prog` on `memory` (padded with zeros) until it halts.
pub fn trace(prog: &RamProgram, memory: &[u64], budget: usize) -> Result<Trace, RamError> {
    trace_with(prog, memory, budget, |_, _, _| {})
}

/// Like [`trace`], but `hook(step, addr, &mut (v, t))` may alter what a step
/// reads. The rest of the execution stays locally consistent with the
/// altered value.
pub fn trace_with(
    prog: &RamProgram,
    memory: &[u64],
    budget: usize,
    mut hook: impl FnMut(usize, u64, &mut (u64, u64)),
) -> Result<Trace, RamError> {
    if memory.len() > prog.mem_size {
        return Err(RamError::AddressOutOfBounds { addr: memory.len() as u64 - 1, size: prog.mem_size });
    }
    let mut mem: Vec<(u64, u64)> = (0..prog.mem_size)
        .map(|a| (memory.get(a).map_or(0, |&v| v % prog.modulus), 0))
        .collect();
    let mut s = RamState::default();
    let mut steps = Vec::new();
    if prog.instrs.is_empty() {
        return Ok(Trace { steps, finals: mem, y: false });
    }
    while !s.halted {
        if steps.len() >= budget {
            return Err(RamError::StepBudgetExceeded(budget));
        }
        let j = steps.len() + 1;
        let addr = address(prog, &s)?;
        let mut read = mem[addr as usize];
        hook(j, addr, &mut read);
        let (next, _, write_v) = transition(prog, &s, read.0)?;
        steps.push(RamStep { pre: s, addr, read_v: read.0, read_t: read.1, write_v });
        mem[addr as usize] = (write_v, j as u64);
        s = next;
    }
    Ok(Trace { steps, finals: mem, y: s.out })
}

/// Memory-checking multisets `(R, W)` of a trace over `memory`: reads
/// (including final contents) against writes (including initial contents).
pub fn memory_multisets(trace: &Trace, memory: &[u64], mem_size: usize) -> (Vec<[u64; 3]>, Vec<[u64; 3]>) {
    let mut reads: Vec<[u64; 3]> = trace
        .steps
        .iter()
        .map(|s| [s.read_v, s.addr, s.read_t])
        .collect();
    reads.extend(trace.finals.iter().enumerate().map(|(a, &(v, t))| [v, a as u64, t]));
    let mut writes: Vec<[u64; 3]> = (0..mem_size)
        .map(|a| [memory.get(a).copied().unwrap_or(0), a as u64, 0])
        .collect();
    writes.extend(
        trace
            .steps
            .iter()
            .enumerate()
            .map(|(j, s)| [s.write_v, s.addr, j as u64 + 1]),
    );
    reads.sort_unstable();
    writes.sort_unstable();
    (reads, writes)
}

/// State multisets `(S, S')`: pre-states tagged with their step index, and
/// post-states tagged with the next index, the final one replaced by the
/// initial state tagged 1.
pub fn state_multisets(prog: &RamProgram, trace: &Trace) -> (Vec<(u64, [u64; 7])>, Vec<(u64, [u64; 7])>) {
    let mut s: Vec<_> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(j, st)| (j as u64 + 1, st.pre.words()))
        .collect();
    let tau = trace.steps.len();
    let mut s2: Vec<_> = trace
        .steps
        .iter()
        .enumerate()
        .map(|(j, st)| {
            if j + 1 == tau {
                (1, RamState::default().words())
            } else {
                let post = transition(prog, &st.pre, st.read_v).expect("honest step").0;
                (j as u64 + 2, post.words())
            }
        })
        .collect();
    s.sort_unstable();
    s2.sort_unstable();
    (s, s2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(text: &str) -> RamProgram {
        RamProgram::parse(text).unwrap()
    }

    #[test]
    fn store_becomes_read_then_write() {
        let p = prog("LOADI r0 5\nLOADI r1 0\nSTORE r0 r1 3\nHALT01 r0");
        let c = canonicalize(&p);
        assert_eq!(c[2].flavor, Flavor::ReadWrite);
        assert_eq!(c[2].cell, Cell::Indirect { ra: Reg(1), off: 3 });
        assert_eq!(c[0].cell, Cell::Scratch);
        let t = trace(&p, &[0, 0, 0, 9], 100).unwrap();
        // reads the old (9, 0), writes (5, 3)
        assert_eq!((t.steps[2].read_v, t.steps[2].read_t, t.steps[2].write_v), (9, 0, 5));
        assert_eq!(t.finals[3], (5, 3));
        assert!(canonicalize(&RamProgram::new(vec![], 2, 1)).is_empty());
    }

    #[test]
    fn write_then_read_balances() {
        let p = prog("LOADI r0 5\nLOADI r1 0\nSTORE r0 r1 0\nLOAD r2 r1 0\nLOADI r3 1\nHALT01 r3");
        let t = trace(&p, &[], 100).unwrap();
        assert!(t.y);
        let (r, w) = memory_multisets(&t, &[], p.mem_size);
        assert_eq!(r, w);
        let (s, s2) = state_multisets(&p, &t);
        assert_eq!(s, s2);
    }

    #[test]
    fn errors() {
        let p = prog(".mem 4\nLOADI r0 9\nLOAD r1 r0 0\nHALT01 r1");
        assert!(matches!(trace(&p, &[], 10), Err(RamError::AddressOutOfBounds { addr: 9, .. })));
        let spin = prog("LOADI r0 1\nl:\nJNZ r0 l\nHALT01 r0");
        assert_eq!(trace(&spin, &[], 50), Err(RamError::StepBudgetExceeded(50)));
    }

    #[test]
    fn stale_read_breaks_balance() {
        let p = prog("LOADI r0 5\nLOADI r1 0\nSTORE r0 r1 2\nLOAD r2 r1 2\nHALT01 r2");
        let t = trace_with(&p, &[0, 0, 7], 100, |j, _, read| {
            if j == 4 {
                *read = (7, 0);
            }
        })
        .unwrap();
        let (r, w) = memory_multisets(&t, &[0, 0, 7], p.mem_size);
        assert_ne!(r, w);
    }
}
