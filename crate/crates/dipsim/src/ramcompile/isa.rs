//! A four-register RAM with word arithmetic modulo a fixed modulus, and a
//! small text assembler.
//!
//! ```text
//! .mod 65536        # word modulus (default 2^16)
//! .mem 32           # memory cells (default 64)
//! start:
//!   LOADI r0 7
//!   LOAD  r1 r0 2   # r1 = mem[r0 + 2]
//!   STORE r1 r0 3   # mem[r0 + 3] = r1
//!   ADD   r2 r0 r1  # also SUB, MUL, CMPLT
//!   JNZ   r2 start
//!   HALT01 r1       # output 1 iff r1 == 1
//! ```

use std::fmt;

use thiserror::Error;

pub const REGS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Reg(pub u8);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    LoadI { rd: Reg, imm: u64 },
    Load { rd: Reg, ra: Reg, off: u64 },
    Store { rs: Reg, ra: Reg, off: u64 },
    Add { rd: Reg, ra: Reg, rb: Reg },
    Sub { rd: Reg, ra: Reg, rb: Reg },
    Mul { rd: Reg, ra: Reg, rb: Reg },
    CmpLt { rd: Reg, ra: Reg, rb: Reg },
    Jnz { ra: Reg, target: usize },
    Halt01 { ra: Reg },
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instr::LoadI { rd, imm } => write!(f, "LOADI {rd} {imm}"),
            Instr::Load { rd, ra, off } => write!(f, "LOAD {rd} {ra} {off}"),
            Instr::Store { rs, ra, off } => write!(f, "STORE {rs} {ra} {off}"),
            Instr::Add { rd, ra, rb } => write!(f, "ADD {rd} {ra} {rb}"),
            Instr::Sub { rd, ra, rb } => write!(f, "SUB {rd} {ra} {rb}"),
            Instr::Mul { rd, ra, rb } => write!(f, "MUL {rd} {ra} {rb}"),
            Instr::CmpLt { rd, ra, rb } => write!(f, "CMPLT {rd} {ra} {rb}"),
            Instr::Jnz { ra, target } => write!(f, "JNZ {ra} {target}"),
            Instr::Halt01 { ra } => write!(f, "HALT01 {ra}"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AsmError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("word modulus must be at least 2")]
    Modulus,
}

/// A program together with its word modulus and memory size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RamProgram {
    pub instrs: Vec<Instr>,
    pub modulus: u64,
    pub mem_size: usize,
}

impl RamProgram {
    pub fn new(instrs: Vec<Instr>, modulus: u64, mem_size: usize) -> Self {
        assert!(modulus >= 2, "word modulus must be at least 2");
        Self { instrs, modulus, mem_size }
    }

    pub fn parse(text: &str) -> Result<Self, AsmError> {
        let mut modulus = 1 << 16;
        let mut mem_size = 64;
        let mut labels = std::collections::HashMap::new();
        let mut body = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |msg: &str| AsmError::Syntax { line: i + 1, msg: msg.into() };
            if let Some(name) = line.strip_suffix(':') {
                labels.insert(name.trim().to_string(), body.len());
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |t: &str| t.parse::<u64>().map_err(|_| syntax("expected a number"));
            match toks[0] {
                ".mod" => modulus = num(toks.get(1).ok_or_else(|| syntax("missing value"))?)?,
                ".mem" => mem_size = num(toks.get(1).ok_or_else(|| syntax("missing value"))?)? as usize,
                _ => body.push((i + 1, toks.iter().map(|s| s.to_string()).collect::<Vec<_>>())),
            }
        }
        if modulus < 2 {
            return Err(AsmError::Modulus);
        }
        let instrs = body
            .into_iter()
            .map(|(line, toks)| parse_instr(line, &toks, &labels))
            .collect::<Result<_, _>>()?;
        Ok(Self { instrs, modulus, mem_size })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(".mod {}\n.mem {}\n", self.modulus, self.mem_size);
        for i in &self.instrs {
            s.push_str(&format!("{i}\n"));
        }
        s
    }
}

fn parse_instr(
    line: usize,
    toks: &[String],
    labels: &std::collections::HashMap<String, usize>,
) -> Result<Instr, AsmError> {
    let syntax = |msg: &str| AsmError::Syntax { line, msg: msg.into() };
    let reg = |i: usize| -> Result<Reg, AsmError> {
        let t = toks.get(i).ok_or_else(|| syntax("missing operand"))?;
        t.strip_prefix('r')
            .and_then(|d| d.parse::<u8>().ok())
            .filter(|&r| (r as usize) < REGS)
            .map(Reg)
            .ok_or_else(|| syntax("expected a register r0..r3"))
    };
    let num = |i: usize| -> Result<u64, AsmError> {
        toks.get(i)
            .ok_or_else(|| syntax("missing operand"))?
            .parse()
            .map_err(|_| syntax("expected a number"))
    };
    let arity = |k: usize| {
        if toks.len() == k + 1 {
            Ok(())
        } else {
            Err(syntax(&format!("{} takes {k} operands", toks[0])))
        }
    };
    let op = toks[0].to_ascii_uppercase();
    Ok(match op.as_str() {
        "LOADI" => {
            arity(2)?;
            Instr::LoadI { rd: reg(1)?, imm: num(2)? }
        }
        "LOAD" => {
            arity(3)?;
            Instr::Load { rd: reg(1)?, ra: reg(2)?, off: num(3)? }
        }
        "STORE" => {
            arity(3)?;
            Instr::Store { rs: reg(1)?, ra: reg(2)?, off: num(3)? }
        }
        "ADD" | "SUB" | "MUL" | "CMPLT" => {
            arity(3)?;
            let (rd, ra, rb) = (reg(1)?, reg(2)?, reg(3)?);
            match op.as_str() {
                "ADD" => Instr::Add { rd, ra, rb },
                "SUB" => Instr::Sub { rd, ra, rb },
                "MUL" => Instr::Mul { rd, ra, rb },
                _ => Instr::CmpLt { rd, ra, rb },
            }
        }
        "JNZ" => {
            arity(2)?;
            let t = &toks[2];
            let target = match t.parse() {
                Ok(n) => n,
                Err(_) => *labels.get(t).ok_or_else(|| AsmError::UnknownLabel(t.clone()))?,
            };
            Instr::Jnz { ra: reg(1)?, target }
        }
        "HALT01" => {
            arity(1)?;
            Instr::Halt01 { ra: reg(1)? }
        }
        _ => return Err(syntax("unknown instruction")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assembles_with_labels() {
        let p = RamProgram::parse(
            ".mod 97\n.mem 8\nLOADI r0 3\nloop:\n  SUB r0 r0 r1 # dec\n  JNZ r0 loop\nHALT01 r0\n",
        )
        .unwrap();
        assert_eq!(p.modulus, 97);
        assert_eq!(p.instrs[2], Instr::Jnz { ra: Reg(0), target: 1 });
        assert_eq!(RamProgram::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(RamProgram::parse("LOADI r9 1"), Err(AsmError::Syntax { line: 1, .. })));
        assert!(matches!(RamProgram::parse("JNZ r0 nowhere"), Err(AsmError::UnknownLabel(_))));
        assert!(matches!(RamProgram::parse("ADD r0 r1"), Err(AsmError::Syntax { .. })));
        assert_eq!(RamProgram::parse(".mod 1"), Err(AsmError::Modulus));
    }
}
