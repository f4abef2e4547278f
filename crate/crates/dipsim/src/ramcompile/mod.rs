//! Canonical-form RAM machines and the compiler from centralized RAM
//! verifiers to distributed protocols.

pub mod compiler;
pub mod isa;
pub mod machine;
pub mod programs;

pub use compiler::{CompilerProver, InnerVerifier, Layout, RamCompiler, Tamper, TreeMode, WitnessEdit};
pub use isa::{Instr, RamProgram, Reg};
pub use machine::{canonicalize, trace, RamError, RamState, RamStep, Trace};
