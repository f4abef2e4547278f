//! Compiles a centralized public-coin protocol whose verifier is a RAM
//! program into a distributed protocol.
//!
//! The prover assigns IDs 1..=n, hands node i its share of the transcript
//! (input block i of the verifier's memory) and a contiguous run of canonical
//! execution steps, together with the final contents of the cells it owns.
//! Nodes recheck their steps locally; one tuple-mode set-equality instance
//! then checks, under distinct tags, that IDs form a permutation, that reads
//! match writes, and that the step states chain from the initial state to a
//! halting state with output 1.

use thiserror::Error;

use super::isa::RamProgram;
use super::machine::{trace, trace_with, transition, RamError, RamState, RamStep, Trace};
use crate::engine::{
    ensure, width, DecodeError, EngineError, Msg, MsgReader, Protocol, Prover, ProverCtx, Reject,
    Speaker, Tape, Verdict,
};
use crate::field::PrimeField;
use crate::fieldset::{Coins, NodeCheck, Partial, SetEqCore, WinnerRule};
use crate::netmodel::{NetworkGraph, NodeView};
use crate::treelabel::{label_msgs, read_label_shares, LocalTree, SpanningTree, TreeLabel};

pub const TAG_ID: u64 = 1;
pub const TAG_MEM: u64 = 2;
pub const TAG_STATE: u64 = 3;

/// Longest tuple fed to the multiset check.
const MAX_TUPLE: u64 = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("verifier program fails on the dry run: {0}")]
    DryRun(#[from] RamError),
    #[error("memory of {mem} cells cannot hold {n} input blocks of {block} words")]
    Memory { mem: usize, n: usize, block: usize },
    #[error("no suitable field")]
    Field,
}

/// The centralized protocol being compiled.
pub trait InnerVerifier: Send + Sync {
    fn name(&self) -> String;

    /// Whether nodes send coins before the prover speaks.
    fn verifier_first(&self) -> bool {
        false
    }

    /// Words of private input per node.
    fn input_words(&self) -> usize;

    /// Exclusive bound of each coin word a node draws.
    fn coin_bounds(&self) -> Vec<u64> {
        Vec::new()
    }

    /// Prover words per node.
    fn witness_words(&self) -> usize {
        0
    }

    /// How many leading witness words every node shows its neighbors.
    fn public_words(&self) -> usize {
        0
    }

    /// Extra local check against the neighbors' public witness words (in
    /// port order).
    fn local_check(&self, _view: &NodeView, _coins: &[u64], _witness: &[u64], _neighbors: &[Vec<u64>]) -> Verdict {
        Ok(())
    }

    fn node_input(&self, view: &NodeView) -> Vec<u64>;

    /// Verifier program for the given memory layout. Control flow must not
    /// depend on memory contents, so the dry run fixes the step count.
    fn program(&self, layout: &Layout) -> RamProgram;

    /// Honest witness words, indexed by node. `ids[u]` is node u's ID and
    /// `coins[u]` its coin words.
    fn honest_witness(&self, g: &NetworkGraph, ids: &[u64], coins: &[Vec<u64>]) -> Vec<Vec<u64>>;
}

/// Memory map: cell 0 is scratch, then one block per ID holding input, coin
/// and witness words, then work cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub input: usize,
    pub coins: usize,
    pub witness: usize,
    pub block: usize,
}

impl Layout {
    pub fn new(n: usize, input: usize, coins: usize, witness: usize) -> Self {
        Self { n, input, coins, witness, block: input + coins + witness }
    }

    /// First cell of the block of ID `id` (1-based).
    pub fn base(&self, id: usize) -> usize {
        1 + (id - 1) * self.block
    }

    /// Cells owned by `id`: its block and a round-robin share of the rest.
    pub fn owned_cells(&self, id: usize, mem: usize) -> Vec<usize> {
        let blocks_end = self.base(self.n + 1);
        let mut cells: Vec<usize> = (self.base(id)..self.base(id) + self.block).collect();
        cells.extend(
            std::iter::once(0)
                .chain(blocks_end..mem)
                .filter(|&a| a % self.n == id - 1),
        );
        cells
    }
}

/// Where nodes learn the spanning tree used for the products.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeMode {
    /// The prover sends tree labels with the final proof.
    Labeled,
    /// The tree is common knowledge.
    Given(SpanningTree),
}

/// Everything the prover tells one node in the main round.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeData {
    pub id: u64,
    pub alpha_succ: u64,
    pub witness: Vec<u64>,
    pub steps: Vec<RamStep>,
    pub finals: Vec<(u64, u64)>,
}

/// A multiset item.
pub type Item = Vec<u64>;

/// The distributed protocol produced by the compiler.
#[derive(Clone, Debug)]
pub struct RamCompiler<V> {
    pub inner: V,
    pub n: usize,
    pub layout: Layout,
    pub program: RamProgram,
    pub tau: usize,
    /// Steps per ID.
    pub k: usize,
    pub core: SetEqCore,
    pub tree: TreeMode,
}

impl<V: InnerVerifier> RamCompiler<V> {
    pub fn new(inner: V, n: usize) -> Result<Self, CompileError> {
        Self::with_tree(inner, n, TreeMode::Labeled)
    }

    pub fn with_tree(inner: V, n: usize, tree: TreeMode) -> Result<Self, CompileError> {
        let layout = Layout::new(n, inner.input_words(), inner.coin_bounds().len(), inner.witness_words());
        let program = inner.program(&layout);
        if program.mem_size < layout.base(n + 1) {
            return Err(CompileError::Memory { mem: program.mem_size, n, block: layout.block });
        }
        let budget = 64 * program.instrs.len().max(1) + (1 << 20);
        let tau = trace(&program, &[], budget)?.steps.len();
        let k = tau.div_ceil(n.max(1)).max(1);
        let items = 2 * (tau + program.mem_size + n) as u64;
        let max_elem = [program.modulus, program.mem_size as u64, tau as u64 + 2, (n as u64).pow(3)]
            .into_iter()
            .max()
            .unwrap_or(0);
        let size = (n.max(2) as u64)
            .checked_pow(6)
            .unwrap_or(u64::MAX)
            .max(items.saturating_mul(MAX_TUPLE) << 16)
            .max(max_elem + 1);
        if size >= 1 << 62 {
            return Err(CompileError::Field);
        }
        let field = PrimeField::at_least(size).ok_or(CompileError::Field)?;
        Ok(Self {
            core: SetEqCore::new(field, n, WinnerRule::IdOne, true),
            inner,
            n,
            layout,
            program,
            tau,
            k,
            tree,
        })
    }

    /// Replaces the set-equality field.
    pub fn with_field(mut self, field: PrimeField) -> Self {
        self.core.field = field;
        self
    }

    pub fn inner_rounds(&self) -> usize {
        if self.inner.verifier_first() {
            2
        } else {
            1
        }
    }

    fn vf(&self) -> bool {
        self.inner.verifier_first()
    }

    fn ww(&self) -> u8 {
        width(self.program.modulus - 1)
    }
    fn aw(&self) -> u8 {
        width(self.program.mem_size as u64 - 1)
    }
    fn tw(&self) -> u8 {
        width(self.tau as u64)
    }
    fn pcw(&self) -> u8 {
        width(self.program.instrs.len() as u64)
    }
    fn idw(&self) -> u8 {
        width(self.n as u64)
    }
    fn alpha_bound(&self) -> u64 {
        (self.n as u64).pow(3).max(1)
    }
    fn alw(&self) -> u8 {
        width(self.alpha_bound() - 1)
    }

    /// Steps owned by `id`, 1-based.
    pub fn steps_of(&self, id: usize) -> std::ops::Range<usize> {
        let lo = ((id - 1) * self.k + 1).min(self.tau + 1);
        let hi = (id * self.k + 1).min(self.tau + 1);
        lo..hi
    }

    fn round_main(&self) -> usize {
        self.inner_rounds() - 1
    }
    fn round_coins(&self) -> usize {
        self.inner_rounds()
    }
    fn round_proof(&self) -> usize {
        self.inner_rounds() + 1
    }

    pub fn write_main(&self, m: &mut Msg, d: &NodeData) {
        m.push(d.id, self.idw());
        if self.vf() {
            m.push(d.alpha_succ, self.alw());
        }
        for &w in &d.witness {
            m.push(w, self.ww());
        }
        for s in &d.steps {
            self.write_state(m, &s.pre);
            m.push(s.addr, self.aw());
            m.push(s.read_v, self.ww());
            m.push(s.read_t, self.tw());
            m.push(s.write_v, self.ww());
        }
        for &(v, t) in &d.finals {
            m.push(v, self.ww());
            m.push(t, self.tw());
        }
    }

    fn write_state(&self, m: &mut Msg, s: &RamState) {
        for &r in &s.regs {
            m.push(r, self.ww());
        }
        m.push(s.pc, self.pcw());
        m.push_bool(s.halted);
        m.push_bool(s.out);
    }

    fn read_state(&self, r: &mut MsgReader) -> Result<RamState, DecodeError> {
        let mut s = RamState::default();
        for reg in s.regs.iter_mut() {
            *reg = r.take_below(self.ww(), self.program.modulus)?;
        }
        s.pc = r.take(self.pcw())?;
        s.halted = r.take_bool()?;
        s.out = r.take_bool()?;
        Ok(s)
    }

    pub fn read_main(&self, r: &mut MsgReader) -> Result<NodeData, DecodeError> {
        let n = self.n as u64;
        let id = r.take(self.idw())?;
        if !(1..=n).contains(&id) {
            return Err(DecodeError::Range { value: id });
        }
        let alpha_succ = if self.vf() { r.take_below(self.alw(), self.alpha_bound())? } else { 0 };
        let m = self.program.modulus;
        let witness = (0..self.layout.witness)
            .map(|_| r.take_below(self.ww(), m))
            .collect::<Result<_, _>>()?;
        let steps = self
            .steps_of(id as usize)
            .map(|_| {
                Ok(RamStep {
                    pre: self.read_state(r)?,
                    addr: r.take(self.aw())?,
                    read_v: r.take_below(self.ww(), m)?,
                    read_t: r.take(self.tw())?,
                    write_v: r.take_below(self.ww(), m)?,
                })
            })
            .collect::<Result<_, DecodeError>>()?;
        let finals = (0..self.layout.owned_cells(id as usize, self.program.mem_size).len())
            .map(|_| Ok((r.take_below(self.ww(), m)?, r.take(self.tw())?)))
            .collect::<Result<_, DecodeError>>()?;
        Ok(NodeData { id, alpha_succ, witness, steps, finals })
    }

    /// Initial contents of the block of a node.
    fn block_words(&self, input: &[u64], coins: &[u64], witness: &[u64]) -> Vec<u64> {
        let m = self.program.modulus;
        input.iter().chain(coins).chain(witness).map(|&x| x % m).collect()
    }

    /// Rechecks the node's steps and returns its two sides of the multiset
    /// check. `alpha` is the node's own ordering coin (verifier-first only).
    pub fn node_items(
        &self,
        input: &[u64],
        coins: &[u64],
        alpha: u64,
        d: &NodeData,
    ) -> Result<(Vec<Item>, Vec<Item>), Reject> {
        let (n, id) = (self.n as u64, d.id);
        let mut a: Vec<Item> = Vec::new();
        let mut b: Vec<Item> = Vec::new();
        if self.vf() {
            ensure(id == n || alpha <= d.alpha_succ, "IDs out of alpha order")?;
            a.push(vec![TAG_ID, alpha, id]);
            b.push(vec![TAG_ID, d.alpha_succ, id % n + 1]);
        } else {
            a.push(vec![TAG_ID, id]);
            b.push(vec![TAG_ID, id % n + 1]);
        }
        ensure(input.len() == self.layout.input, "input has the wrong length")?;
        let block = self.block_words(input, coins, &d.witness);
        let mem = self.program.mem_size;
        let cells = self.layout.owned_cells(id as usize, mem);
        let base = self.layout.base(id as usize);
        for (&cell, &(v, t)) in cells.iter().zip(&d.finals) {
            let init = if (base..base + self.layout.block).contains(&cell) {
                block[cell - base]
            } else {
                0
            };
            a.push(vec![TAG_MEM, init, cell as u64, 0]);
            b.push(vec![TAG_MEM, v, cell as u64, t]);
        }
        let state = |j: u64, s: &RamState| {
            let mut t = vec![TAG_STATE, j];
            t.extend(s.words());
            t
        };
        for (j, st) in self.steps_of(id as usize).zip(&d.steps) {
            let j = j as u64;
            let (post, addr, write_v) =
                transition(&self.program, &st.pre, st.read_v).map_err(|_| Reject::Check("illegal step"))?;
            ensure(addr == st.addr, "step touches the wrong address")?;
            ensure(write_v == st.write_v, "step writes the wrong value")?;
            ensure(st.read_t < j, "read from the future")?;
            a.push(vec![TAG_MEM, st.write_v, st.addr, j]);
            b.push(vec![TAG_MEM, st.read_v, st.addr, st.read_t]);
            b.push(state(j, &st.pre));
            if j == self.tau as u64 {
                ensure(post.halted && post.out, "verifier program does not output 1")?;
                a.push(state(1, &RamState::default()));
            } else {
                a.push(state(j + 1, &post));
            }
        }
        Ok((a, b))
    }

    fn node_coins(&self, tr: &[Msg]) -> Result<(u64, Vec<u64>), DecodeError> {
        if !self.vf() {
            return Ok((0, Vec::new()));
        }
        let mut r = tr[0].reader();
        let alpha = r.take_below(self.alw(), self.alpha_bound())?;
        let coins = self
            .inner
            .coin_bounds()
            .into_iter()
            .map(|b| r.take_below(width(b - 1), b))
            .collect::<Result<_, _>>()?;
        r.finish()?;
        Ok((alpha, coins))
    }

    fn read_proof(&self, tr: &[Msg], view: &NodeView) -> Result<(Option<TreeLabel>, Coins, Partial), DecodeError> {
        let mut r = tr[self.round_proof()].reader();
        let label = match self.tree {
            TreeMode::Labeled => Some(TreeLabel::read(&mut r, view)?),
            TreeMode::Given(_) => None,
        };
        let ann = self.core.read_coins(&mut r)?;
        let part = self.core.read_partial(&mut r)?;
        r.finish()?;
        Ok((label, ann, part))
    }

    fn given_local(&self, view: &NodeView) -> LocalTree {
        match &self.tree {
            TreeMode::Given(t) => LocalTree {
                parent: t.parent_port[view.id],
                children: t.children[view.id]
                    .iter()
                    .filter_map(|&c| view.port_of(c))
                    .collect(),
            },
            TreeMode::Labeled => LocalTree::default(),
        }
    }

    /// Assembles the verifier's memory from per-node blocks.
    pub fn memory(&self, ids: &[u64], inputs: &[Vec<u64>], coins: &[Vec<u64>], witness: &[Vec<u64>]) -> Vec<u64> {
        let mut mem = vec![0; self.program.mem_size];
        for u in 0..ids.len() {
            let base = self.layout.base(ids[u] as usize);
            let block = self.block_words(&inputs[u], &coins[u], &witness[u]);
            mem[base..base + block.len()].copy_from_slice(&block);
        }
        mem
    }

    /// Runs the inner verifier directly on the assembled memory.
    pub fn centralized(&self, ids: &[u64], inputs: &[Vec<u64>], coins: &[Vec<u64>], witness: &[Vec<u64>]) -> Result<bool, RamError> {
        let mem = self.memory(ids, inputs, coins, witness);
        Ok(trace(&self.program, &mem, self.tau + 1)?.y)
    }

    /// Per-node main messages for a given execution.
    pub fn node_data(&self, ids: &[u64], alpha_succ: &[u64], witness: &[Vec<u64>], t: &Trace) -> Vec<NodeData> {
        (0..ids.len())
            .map(|u| {
                let id = ids[u] as usize;
                NodeData {
                    id: ids[u],
                    alpha_succ: alpha_succ.get(u).copied().unwrap_or(0),
                    witness: witness[u].clone(),
                    steps: self
                        .steps_of(id)
                        .filter_map(|j| t.steps.get(j - 1).copied())
                        .collect(),
                    finals: self
                        .layout
                        .owned_cells(id, self.program.mem_size)
                        .into_iter()
                        .map(|c| t.finals[c])
                        .collect(),
                }
            })
            .collect()
    }

    fn decoded_coins(&self, g: &NetworkGraph, transcript: &[Vec<Msg>]) -> (Vec<u64>, Vec<Vec<u64>>) {
        (0..g.n())
            .map(|u| {
                let tr: Vec<Msg> = transcript.iter().map(|r| r[u].clone()).collect();
                self.node_coins(&tr).unwrap_or_default()
            })
            .unzip()
    }
}

impl<V: InnerVerifier> Protocol for RamCompiler<V> {
    fn name(&self) -> String {
        format!("ram-compiler({})", self.inner.name())
    }
    fn schedule(&self) -> Vec<Speaker> {
        let mut s = Vec::new();
        if self.vf() {
            s.push(Speaker::Nodes);
        }
        s.extend([Speaker::Prover, Speaker::Nodes, Speaker::Prover]);
        s
    }
    fn check(&self, g: &NetworkGraph) -> Result<(), EngineError> {
        if g.n() != self.n {
            return Err(EngineError::Incompatible {
                protocol: self.name(),
                reason: format!("compiled for {} nodes, graph has {}", self.n, g.n()),
            });
        }
        Ok(())
    }
    fn coins(&self, round: usize, _: &NodeView, tape: &mut Tape) -> Msg {
        let mut m = Msg::new();
        if round == self.round_coins() {
            self.core.draw(tape, &mut m);
        } else {
            m.push(tape.below(self.alpha_bound()), self.alw());
            for b in self.inner.coin_bounds() {
                m.push(tape.below(b), width(b - 1));
            }
        }
        m
    }
    fn share(&self, view: &NodeView, tr: &[Msg], _: usize, _: &[Vec<Msg>], port: usize) -> Msg {
        let mut m = Msg::new();
        let main = self.read_main(&mut tr[self.round_main()].reader());
        if let (Ok((label, ann, part)), Ok(main)) = (self.read_proof(tr, view), main) {
            let to_parent = match &label {
                Some(l) => {
                    l.write_share(&mut m, view, port);
                    l.parent == Some(port)
                }
                None => self.given_local(view).parent == Some(port),
            };
            self.core.write_coins(&mut m, &ann);
            for &w in &main.witness[..self.inner.public_words()] {
                m.push(w, self.ww());
            }
            if to_parent {
                self.core.write_partial(&mut m, &part);
            }
        }
        m
    }
    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let (alpha, inner_coins) = self.node_coins(tr)?;
        let mut r = tr[self.round_main()].reader();
        let data = self.read_main(&mut r)?;
        r.finish()?;
        let coins = self.core.read_coins(&mut tr[self.round_coins()].reader())?;
        let (label, ann, partial) = self.read_proof(tr, view)?;
        let mut readers: Vec<MsgReader> = heard[0].iter().map(Msg::reader).collect();
        let local = match label {
            Some(l) => l.check(view, &read_label_shares(view, &mut readers)?)?,
            None => self.given_local(view),
        };
        let mut neighbor_anns = Vec::with_capacity(readers.len());
        let mut public = Vec::with_capacity(readers.len());
        for r in readers.iter_mut() {
            neighbor_anns.push(self.core.read_coins(r)?);
            public.push(
                (0..self.inner.public_words())
                    .map(|_| r.take(self.ww()))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        let child_partials = local
            .children
            .iter()
            .map(|&c| self.core.read_partial(&mut readers[c]))
            .collect::<Result<Vec<_>, _>>()?;
        self.inner.local_check(view, &inner_coins, &data.witness, &public)?;
        let input = self.inner.node_input(view);
        let (a, b) = self.node_items(&input, &inner_coins, alpha, &data)?;
        self.core.check(&NodeCheck {
            coins: &coins,
            ann: &ann,
            partial: &partial,
            id_is_one: data.id == 1,
            local: &local,
            neighbor_anns: &neighbor_anns,
            child_partials: &child_partials,
            a: &a,
            b: &b,
        })
    }
}

/// How a prover deviates from the honest execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tamper {
    None,
    /// Bumps a register in the pre-state of the middle step and replays the
    /// rest of the run from there.
    State,
    /// Has the first step that reads a cell written during the run read the
    /// cell's initial contents instead.
    StaleRead,
    /// Rewrites the inner witness, then executes faithfully on it.
    Witness(WitnessEdit),
}

/// A named edit `(graph, ids, coins, &mut witness)` of the inner witness.
/// Edits compare by name.
#[derive(Clone, Copy, Debug)]
pub struct WitnessEdit {
    pub name: &'static str,
    pub edit: fn(&NetworkGraph, &[u64], &[Vec<u64>], &mut [Vec<u64>]),
}

impl PartialEq for WitnessEdit {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for WitnessEdit {}

/// Honest compiler prover, optionally with one deviation.
#[derive(Clone, Debug)]
pub struct CompilerProver {
    pub tamper: Tamper,
}

impl CompilerProver {
    pub fn honest() -> Self {
        Self { tamper: Tamper::None }
    }
}

/// IDs and successor alphas as the honest prover picks them.
pub fn honest_ids(vf: bool, alphas: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let n = alphas.len();
    if !vf {
        return ((1..=n as u64).collect(), vec![0; n]);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&u| (alphas[u], u));
    let mut ids = vec![0; n];
    let mut succ = vec![0; n];
    for (rank, &u) in order.iter().enumerate() {
        ids[u] = rank as u64 + 1;
        succ[u] = alphas[order[(rank + 1) % n]];
    }
    (ids, succ)
}

impl<V: InnerVerifier> Prover<RamCompiler<V>> for CompilerProver {
    fn name(&self) -> String {
        match self.tamper {
            Tamper::None => "honest",
            Tamper::State => "state-tamper",
            Tamper::StaleRead => "stale-read",
            Tamper::Witness(w) => w.name,
        }
        .into()
    }
    fn honest(&self) -> bool {
        self.tamper == Tamper::None
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, RamCompiler<V>>) -> Vec<Msg> {
        let (p, g) = (ctx.proto, ctx.graph);
        let n = g.n();
        let (alphas, inner_coins) = p.decoded_coins(g, &ctx.transcript[..ctx.round.min(p.round_main())]);
        let (ids, succ) = honest_ids(p.vf(), &alphas);
        let inputs: Vec<Vec<u64>> = (0..n).map(|u| p.inner.node_input(&g.view(u))).collect();
        let mut witness = p.inner.honest_witness(g, &ids, &inner_coins);
        if let Tamper::Witness(w) = self.tamper {
            (w.edit)(g, &ids, &inner_coins, &mut witness);
        }
        let mem = p.memory(&ids, &inputs, &inner_coins, &witness);
        let budget = p.tau + 1;
        let run = match self.tamper {
            Tamper::StaleRead => {
                let mut done = false;
                trace_with(&p.program, &mem, budget, |_, addr, read| {
                    if !done && read.1 > 0 {
                        *read = (mem[addr as usize], 0);
                        done = true;
                    }
                })
            }
            _ => trace(&p.program, &mem, budget),
        };
        let Ok(mut t) = run else {
            return vec![Msg::new(); n];
        };
        if self.tamper == Tamper::State && !t.steps.is_empty() {
            let mid = t.steps.len() / 2;
            let m = p.program.modulus;
            let s = &mut t.steps[mid];
            s.pre.regs[3] = (s.pre.regs[3] + 1) % m;
            if let Ok((_, addr, w)) = transition(&p.program, &s.pre, s.read_v) {
                s.addr = addr;
                s.write_v = w;
            }
        }
        let data = p.node_data(&ids, &succ, &witness, &t);
        if ctx.round == p.round_main() {
            return data
                .iter()
                .map(|d| {
                    let mut m = Msg::new();
                    p.write_main(&mut m, d);
                    m
                })
                .collect();
        }
        // final proof
        let coins: Vec<Coins> = ctx
            .round_msgs(p.round_coins())
            .iter()
            .map(|m| p.core.read_coins(&mut m.reader()).unwrap_or_default())
            .collect();
        let winner = ids.iter().position(|&i| i == 1).unwrap_or(0);
        let ann = coins[winner];
        let (a, b): (Vec<Vec<Item>>, Vec<Vec<Item>>) = (0..n)
            .map(|u| p.node_items(&inputs[u], &inner_coins[u], alphas[u], &data[u]).unwrap_or_default())
            .unzip();
        let tree = match &p.tree {
            TreeMode::Labeled => SpanningTree::bfs(g, 0),
            TreeMode::Given(t) => t.clone(),
        };
        let winners: Vec<bool> = ids.iter().map(|&i| i == 1).collect();
        let parts = p.core.partials(&tree, &ann, &winners, &a, &b);
        let mut msgs = match p.tree {
            TreeMode::Labeled => label_msgs(g, &tree.labels()),
            TreeMode::Given(_) => vec![Msg::new(); n],
        };
        for (m, part) in msgs.iter_mut().zip(&parts) {
            p.core.write_coins(m, &ann);
            p.core.write_partial(m, part);
        }
        msgs
    }
}

#[cfg(test)]
mod tests {
    use super::super::programs::SumToK;
    use super::*;
    use crate::engine::{monte_carlo, run_protocol, RunOptions};
    use crate::netmodel::{generate, GraphKind};
    use rand::{Rng, SeedableRng};

    /// Verifier-first toy: the prover must return each node's coin plus its
    /// input; the program checks the sum of all witness words against the
    /// sum of coins plus the common target.
    #[derive(Clone, Debug)]
    struct CoinEcho {
        values: Vec<u64>,
        k: u64,
    }

    impl InnerVerifier for CoinEcho {
        fn name(&self) -> String {
            "coin-echo".into()
        }
        fn verifier_first(&self) -> bool {
            true
        }
        fn input_words(&self) -> usize {
            1
        }
        fn coin_bounds(&self) -> Vec<u64> {
            vec![16]
        }
        fn witness_words(&self) -> usize {
            1
        }
        fn node_input(&self, view: &NodeView) -> Vec<u64> {
            vec![self.values[view.id]]
        }
        fn program(&self, l: &Layout) -> RamProgram {
            use super::super::isa::{Instr, Reg};
            let mut code = vec![Instr::LoadI { rd: Reg(0), imm: 0 }, Instr::LoadI { rd: Reg(1), imm: 0 }];
            for id in 1..=l.n {
                let b = l.base(id) as u64;
                code.push(Instr::Load { rd: Reg(2), ra: Reg(1), off: b + 2 });
                code.push(Instr::Add { rd: Reg(0), ra: Reg(0), rb: Reg(2) });
                code.push(Instr::Load { rd: Reg(2), ra: Reg(1), off: b + 1 });
                code.push(Instr::Sub { rd: Reg(0), ra: Reg(0), rb: Reg(2) });
            }
            code.push(Instr::LoadI { rd: Reg(3), imm: self.k });
            super::super::programs::emit_eq(&mut code, Reg(1), Reg(0), Reg(3), Reg(2));
            code.push(Instr::Halt01 { ra: Reg(1) });
            RamProgram::new(code, 1 << 12, l.base(l.n + 1) + 3)
        }
        fn honest_witness(&self, g: &NetworkGraph, _ids: &[u64], coins: &[Vec<u64>]) -> Vec<Vec<u64>> {
            (0..g.n()).map(|u| vec![coins[u][0] + self.values[u]]).collect()
        }
    }

    fn sum_instance(n: usize, seed: u64, correct: bool) -> (NetworkGraph, RamCompiler<SumToK>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<u64> = (0..n).map(|_| rng.gen_range(0..10)).collect();
        let k = values.iter().sum::<u64>() + (!correct) as u64;
        let g = generate(&GraphKind::Gnp { n, p: 0.4 }, seed).unwrap();
        (g, RamCompiler::new(SumToK { values, k }, n).unwrap())
    }

    #[test]
    fn rounds_are_inner_plus_two() {
        let (_, c) = sum_instance(5, 0, true);
        assert_eq!(c.schedule().len(), c.inner_rounds() + 2);
        let echo = RamCompiler::new(CoinEcho { values: vec![1; 4], k: 4 }, 4).unwrap();
        assert_eq!(echo.schedule().len(), 4);
    }

    #[test]
    fn honest_sum_accepts_and_wrong_target_rejects() {
        for seed in 0..10 {
            let (g, c) = sum_instance(6, seed, true);
            let r = run_protocol(&c, &g, &CompilerProver::honest(), seed, RunOptions::default()).unwrap();
            assert!(r.accept, "{:?}", r.rejections());
            let (g, c) = sum_instance(6, seed, false);
            let r = run_protocol(&c, &g, &CompilerProver::honest(), seed, RunOptions::default()).unwrap();
            assert!(!r.accept);
        }
    }

    #[test]
    fn owned_cells_partition_memory() {
        let l = Layout::new(5, 2, 1, 0);
        let mem = l.base(6) + 7;
        let mut all: Vec<usize> = (1..=5).flat_map(|id| l.owned_cells(id, mem)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..mem).collect::<Vec<_>>());
    }

    #[test]
    fn tampering_is_caught() {
        let (g, c) = sum_instance(8, 3, true);
        for tamper in [Tamper::State, Tamper::StaleRead] {
            let s = monte_carlo(&c, &g, &CompilerProver { tamper }, 200, 1, RunOptions::default()).unwrap();
            assert!(s.accept_rate <= 0.02, "{tamper:?}: {}", s.accept_rate);
        }
    }

    #[test]
    fn verifier_first_inner() {
        let g = generate(&GraphKind::Cycle(5), 0).unwrap();
        let c = RamCompiler::new(CoinEcho { values: vec![1, 2, 3, 4, 5], k: 15 }, 5).unwrap();
        let s = monte_carlo(&c, &g, &CompilerProver::honest(), 50, 2, RunOptions::default()).unwrap();
        assert!(s.accept_rate >= 0.9, "{}", s.accept_rate);
        let bad = RamCompiler::new(CoinEcho { values: vec![1, 2, 3, 4, 5], k: 16 }, 5).unwrap();
        let s = monte_carlo(&bad, &g, &CompilerProver::honest(), 50, 2, RunOptions::default()).unwrap();
        assert_eq!(s.accept_rate, 0.0);
    }

    #[test]
    fn matches_centralized_verdict() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for i in 0..30 {
            let (g, c) = sum_instance(rng.gen_range(1..9), i, rng.gen_bool(0.5));
            let ids: Vec<u64> = (1..=g.n() as u64).collect();
            let inputs: Vec<Vec<u64>> = (0..g.n()).map(|u| c.inner.node_input(&g.view(u))).collect();
            let empty = vec![Vec::new(); g.n()];
            let want = c.centralized(&ids, &inputs, &empty, &empty).unwrap();
            let r = run_protocol(&c, &g, &CompilerProver::honest(), i, RunOptions::default()).unwrap();
            assert_eq!(r.accept, want);
        }
    }
}
