//! Synchronous round engine with exact bit accounting.
//!
//! A protocol is a finite schedule of message rounds. In a prover round every
//! node receives one message from the prover; in a node round every node sends
//! one message to the prover. After the last round nodes run a fixed number of
//! neighbor-exchange phases and then decide locally. The run accepts iff every
//! node accepts.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::netmodel::{NetworkGraph, NodeView};

/// Bits needed to write every value in `0..=max_value` (at least one).
pub fn width(max_value: u64) -> u8 {
    (64 - max_value.leading_zeros()).max(1) as u8
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("protocol `{protocol}` cannot run on this graph: {reason}")]
    Incompatible { protocol: String, reason: String },
    #[error("monte carlo needs at least one trial")]
    ZeroTrials,
    #[error("prover `{prover}` produced {got} messages in round {round}, expected {expected}")]
    ProverShape {
        prover: String,
        round: usize,
        got: usize,
        expected: usize,
    },
    #[error("node {node} in round {round} sent a message that is not a slice of its random tape")]
    CoinDiscipline { node: usize, round: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("message ended early")]
    Truncated,
    #[error("expected a {expected}-bit field, found {found} bits")]
    Width { expected: u8, found: u8 },
    #[error("value {value} outside the allowed range")]
    Range { value: u64 },
    #[error("{0} unread fields at end of message")]
    Trailing(usize),
}

/// Why a node rejected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Reject {
    #[error("malformed message: {0}")]
    Decode(#[from] DecodeError),
    #[error("{0}")]
    Check(&'static str),
    #[error("message exceeds the bandwidth cap")]
    Overflow,
}

pub type Verdict = Result<(), Reject>;

/// Turns a failed local check into a rejection.
pub fn ensure(cond: bool, why: &'static str) -> Verdict {
    if cond {
        Ok(())
    } else {
        Err(Reject::Check(why))
    }
}

/// A fixed-width field of a message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Word {
    pub value: u64,
    pub width: u8,
}

impl Word {
    /// Panics if `value` does not fit; encoders never truncate silently.
    pub fn new(value: u64, width: u8) -> Self {
        assert!(
            (1..=64).contains(&width) && (width == 64 || value >> width == 0),
            "value {value} does not fit in {width} bits"
        );
        Self { value, width }
    }
}

/// A message: a sequence of fixed-width fields. Its length in bits is exact.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Msg(Vec<Word>);

impl Msg {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: u64, width: u8) -> &mut Self {
        self.0.push(Word::new(value, width));
        self
    }

    pub fn push_bool(&mut self, b: bool) -> &mut Self {
        self.push(b as u64, 1)
    }

    pub fn append(&mut self, other: &Msg) -> &mut Self {
        self.0.extend_from_slice(&other.0);
        self
    }

    pub fn words(&self) -> &[Word] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> usize {
        self.0.iter().map(|w| w.width as usize).sum()
    }

    /// Bit string encoding, most significant bit of each field first.
    pub fn encode(&self) -> Vec<bool> {
        self.0
            .iter()
            .flat_map(|w| (0..w.width).rev().map(move |i| (w.value >> i) & 1 == 1))
            .collect()
    }

    pub fn reader(&self) -> MsgReader<'_> {
        MsgReader {
            words: &self.0,
            pos: 0,
        }
    }
}

impl From<Vec<Word>> for Msg {
    fn from(w: Vec<Word>) -> Self {
        Self(w)
    }
}

/// Sequential decoder that checks every field width.
#[derive(Clone, Debug)]
pub struct MsgReader<'a> {
    words: &'a [Word],
    pos: usize,
}

impl MsgReader<'_> {
    pub fn take(&mut self, width: u8) -> Result<u64, DecodeError> {
        let w = self.words.get(self.pos).ok_or(DecodeError::Truncated)?;
        if w.width != width {
            return Err(DecodeError::Width {
                expected: width,
                found: w.width,
            });
        }
        self.pos += 1;
        Ok(w.value)
    }

    /// Reads a field and requires `value < bound`.
    pub fn take_below(&mut self, width: u8, bound: u64) -> Result<u64, DecodeError> {
        let v = self.take(width)?;
        if v < bound {
            Ok(v)
        } else {
            Err(DecodeError::Range { value: v })
        }
    }

    pub fn take_bool(&mut self) -> Result<bool, DecodeError> {
        Ok(self.take(1)? == 1)
    }

    pub fn remaining(&self) -> usize {
        self.words.len() - self.pos
    }

    /// The unread fields as a message of their own.
    pub fn rest(self) -> Msg {
        Msg(self.words[self.pos..].to_vec())
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            k => Err(DecodeError::Trailing(k)),
        }
    }
}

/// A node's private random tape. Every draw is recorded so that public-coin
/// messages can be replayed against it.
#[derive(Clone, Debug)]
pub struct Tape {
    rng: ChaCha8Rng,
    drawn: Vec<Word>,
}

impl Tape {
    /// Stream `stream` of the generator seeded with `seed`.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            drawn: Vec::new(),
        }
    }

    pub fn from_rng(rng: ChaCha8Rng) -> Self {
        Self {
            rng,
            drawn: Vec::new(),
        }
    }

    /// Uniform `width`-bit value.
    pub fn bits(&mut self, width: u8) -> u64 {
        let v = if width == 64 {
            self.rng.next_u64()
        } else {
            self.rng.next_u64() & ((1u64 << width) - 1)
        };
        self.drawn.push(Word::new(v, width));
        v
    }

    pub fn bit(&mut self) -> bool {
        self.bits(1) == 1
    }

    /// Uniform value in `0..bound` by rejection sampling; only the accepted
    /// value is recorded.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let w = width(bound - 1);
        loop {
            let v = if w == 64 {
                self.rng.next_u64()
            } else {
                self.rng.gen::<u64>() & ((1u64 << w) - 1)
            };
            if v < bound {
                self.drawn.push(Word::new(v, w));
                return v;
            }
        }
    }

    pub fn drawn(&self) -> &[Word] {
        &self.drawn
    }
}

/// Who speaks in a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Speaker {
    Prover,
    Nodes,
}

/// Compact schedule name, e.g. `dMAM` for prover, nodes, prover.
pub fn schedule_name(schedule: &[Speaker]) -> String {
    let body: String = schedule
        .iter()
        .map(|s| match s {
            Speaker::Prover => 'M',
            Speaker::Nodes => 'A',
        })
        .collect();
    format!("d{body}")
}

/// Node-side behaviour of a distributed protocol.
///
/// Per-node protocol inputs live in the implementing type and must only be
/// indexed by `view.id`.
pub trait Protocol: Send + Sync {
    fn name(&self) -> String;

    fn schedule(&self) -> Vec<Speaker>;

    /// Whether every node message is a verbatim slice of the node's tape.
    fn public_coin(&self) -> bool {
        true
    }

    /// Rejects graphs the protocol cannot run on.
    fn check(&self, _graph: &NetworkGraph) -> Result<(), EngineError> {
        Ok(())
    }

    fn exchange_phases(&self) -> usize {
        1
    }

    /// Message of a node in a [`Speaker::Nodes`] round.
    fn coins(&self, round: usize, view: &NodeView, tape: &mut Tape) -> Msg;

    /// Message to the neighbor behind `port` in exchange phase `phase`.
    /// `heard[k][p]` is what arrived on port `p` in an earlier phase `k`.
    fn share(
        &self,
        view: &NodeView,
        transcript: &[Msg],
        phase: usize,
        heard: &[Vec<Msg>],
        port: usize,
    ) -> Msg;

    /// Local decision from the node's transcript and everything it heard.
    fn verify(&self, view: &NodeView, transcript: &[Msg], heard: &[Vec<Msg>]) -> Verdict;
}

/// Everything a prover may look at when composing a round.
pub struct ProverCtx<'a, P: ?Sized> {
    pub proto: &'a P,
    pub graph: &'a NetworkGraph,
    pub round: usize,
    /// `transcript[r][u]`: message exchanged with node `u` in round `r < round`.
    pub transcript: &'a [Vec<Msg>],
    pub rng: &'a mut ChaCha8Rng,
}

impl<P: ?Sized> ProverCtx<'_, P> {
    /// Messages of every node in an earlier round.
    pub fn round_msgs(&self, r: usize) -> &[Msg] {
        &self.transcript[r]
    }
}

pub trait Prover<P: ?Sized>: Send + Sync {
    fn name(&self) -> String;

    fn honest(&self) -> bool {
        false
    }

    /// One message per node for the current prover round.
    fn respond(&self, ctx: &mut ProverCtx<'_, P>) -> Vec<Msg>;
}

impl<P: ?Sized, T: Prover<P> + ?Sized> Prover<P> for Box<T> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn honest(&self) -> bool {
        (**self).honest()
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, P>) -> Vec<Msg> {
        (**self).respond(ctx)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunOptions {
    /// Per-node per-round cap on message bits; larger messages are flagged
    /// and the receiving node rejects.
    pub cap_bits: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub speaker: Speaker,
    pub bits: Vec<usize>,
}

/// Complete record of one execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProtocolRun {
    pub protocol: String,
    pub prover: String,
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    /// Bits each node sent to neighbors, over all exchange phases.
    pub neighbor_bits: Vec<usize>,
    pub verdicts: Vec<bool>,
    pub reasons: Vec<Option<String>>,
    pub accept: bool,
    pub overflow: bool,
    /// `transcript[r][u]`.
    pub transcript: Vec<Vec<Msg>>,
}

impl ProtocolRun {
    pub fn max_bits_per_node_per_round(&self) -> usize {
        self.rounds
            .iter()
            .flat_map(|r| r.bits.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn max_neighbor_bits(&self) -> usize {
        self.neighbor_bits.iter().copied().max().unwrap_or(0)
    }

    /// Mean over nodes of bits exchanged with the prover.
    pub fn mean_bits(&self) -> f64 {
        let n = self.verdicts.len().max(1);
        let total: usize = self.rounds.iter().flat_map(|r| r.bits.iter()).sum();
        total as f64 / n as f64
    }

    pub fn total_bits(&self) -> usize {
        self.rounds.iter().flat_map(|r| r.bits.iter()).sum()
    }

    /// Nodes that rejected, with reasons.
    pub fn rejections(&self) -> Vec<(usize, String)> {
        self.reasons
            .iter()
            .enumerate()
            .filter_map(|(u, r)| r.clone().map(|r| (u, r)))
            .collect()
    }
}

/// Executes one run. Deterministic in `(proto, graph, prover, seed)`.
pub fn run_protocol<P, Pr>(
    proto: &P,
    graph: &NetworkGraph,
    prover: &Pr,
    seed: u64,
    opts: RunOptions,
) -> Result<ProtocolRun, EngineError>
where
    P: Protocol + ?Sized,
    Pr: Prover<P> + ?Sized,
{
    proto.check(graph)?;
    let n = graph.n();
    let views: Vec<NodeView> = (0..n).map(|u| graph.view(u)).collect();
    let mut tapes: Vec<Tape> = (0..n).map(|u| Tape::new(seed, u as u64 + 1)).collect();
    let mut prover_rng = ChaCha8Rng::seed_from_u64(seed);
    prover_rng.set_stream(0);

    let mut transcript: Vec<Vec<Msg>> = Vec::new();
    let mut rounds = Vec::new();
    let mut overflowed = vec![false; n];
    for (r, speaker) in proto.schedule().into_iter().enumerate() {
        let msgs = match speaker {
            Speaker::Prover => {
                let mut ctx = ProverCtx {
                    proto,
                    graph,
                    round: r,
                    transcript: &transcript,
                    rng: &mut prover_rng,
                };
                let msgs = prover.respond(&mut ctx);
                if msgs.len() != n {
                    return Err(EngineError::ProverShape {
                        prover: prover.name(),
                        round: r,
                        got: msgs.len(),
                        expected: n,
                    });
                }
                msgs
            }
            Speaker::Nodes => {
                let mut msgs = Vec::with_capacity(n);
                for (u, tape) in tapes.iter_mut().enumerate() {
                    let before = tape.drawn().len();
                    let m = proto.coins(r, &views[u], tape);
                    if proto.public_coin() && m.words() != &tape.drawn()[before..] {
                        return Err(EngineError::CoinDiscipline { node: u, round: r });
                    }
                    msgs.push(m);
                }
                msgs
            }
        };
        let bits: Vec<usize> = msgs.iter().map(Msg::bits).collect();
        if let Some(cap) = opts.cap_bits {
            for (u, &b) in bits.iter().enumerate() {
                overflowed[u] |= b > cap;
            }
        }
        rounds.push(RoundRecord { speaker, bits });
        transcript.push(msgs);
    }

    let (results, neighbor_bits) = decide(proto, graph, &transcript, &overflowed);
    let verdicts: Vec<bool> = results.iter().map(Result::is_ok).collect();
    let reasons = results
        .iter()
        .map(|r| r.as_ref().err().map(ToString::to_string))
        .collect();
    Ok(ProtocolRun {
        protocol: proto.name(),
        prover: prover.name(),
        seed,
        rounds,
        neighbor_bits,
        accept: verdicts.iter().all(|&v| v),
        verdicts,
        reasons,
        overflow: overflowed.iter().any(|&o| o),
        transcript,
    })
}

/// Runs the neighbor exchange and every node's decision on a finished
/// transcript. Nodes flagged in `overflowed` reject outright. Also returns
/// the bits each node sent to its neighbors.
pub fn decide<P: Protocol + ?Sized>(
    proto: &P,
    graph: &NetworkGraph,
    transcript: &[Vec<Msg>],
    overflowed: &[bool],
) -> (Vec<Verdict>, Vec<usize>) {
    let n = graph.n();
    let views: Vec<NodeView> = (0..n).map(|u| graph.view(u)).collect();
    let own: Vec<Vec<Msg>> = (0..n)
        .map(|u| transcript.iter().map(|round| round[u].clone()).collect())
        .collect();
    // heard[u][phase][port]
    let mut heard: Vec<Vec<Vec<Msg>>> = vec![Vec::new(); n];
    let mut neighbor_bits = vec![0usize; n];
    for phase in 0..proto.exchange_phases() {
        let outgoing: Vec<Vec<Msg>> = (0..n)
            .map(|u| {
                (0..graph.degree(u))
                    .map(|p| proto.share(&views[u], &own[u], phase, &heard[u], p))
                    .collect()
            })
            .collect();
        for (u, out) in outgoing.iter().enumerate() {
            neighbor_bits[u] += out.iter().map(Msg::bits).sum::<usize>();
        }
        for (v, inbox) in heard.iter_mut().enumerate() {
            let arrived = graph
                .neighbors(v)
                .iter()
                .enumerate()
                .map(|(p, &u)| outgoing[u][graph.back_port(v, p)].clone())
                .collect();
            inbox.push(arrived);
        }
    }
    let results = (0..n)
        .map(|u| {
            if overflowed.get(u).copied().unwrap_or(false) {
                Err(Reject::Overflow)
            } else {
                proto.verify(&views[u], &own[u], &heard[u])
            }
        })
        .collect();
    (results, neighbor_bits)
}

/// Seed of trial `i` under `master`.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    splitmix(master ^ splitmix(i.wrapping_add(0x632b_e59b_d9b4_e019)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Aggregate of a Monte Carlo experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub protocol: String,
    pub prover: String,
    pub n: usize,
    pub trials: u64,
    pub accepted: u64,
    pub accept_rate: f64,
    pub max_bits_per_node_per_round: usize,
    pub max_neighbor_bits: usize,
    pub mean_bits: f64,
    pub rounds: usize,
    pub seed: u64,
}

impl Stats {
    /// Standard error of the acceptance estimate.
    pub fn sigma(&self) -> f64 {
        let p = self.accept_rate;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Runs `trials` independent executions in parallel.
pub fn monte_carlo<P, Pr>(
    proto: &P,
    graph: &NetworkGraph,
    prover: &Pr,
    trials: u64,
    master_seed: u64,
    opts: RunOptions,
) -> Result<Stats, EngineError>
where
    P: Protocol + ?Sized,
    Pr: Prover<P> + ?Sized,
{
    if trials == 0 {
        return Err(EngineError::ZeroTrials);
    }
    #[derive(Default)]
    struct Acc {
        accepted: u64,
        max_bits: usize,
        max_nb: usize,
        sum_mean: f64,
    }
    let acc = (0..trials)
        .into_par_iter()
        .map(|i| {
            let run = run_protocol(proto, graph, prover, trial_seed(master_seed, i), opts)?;
            Ok(Acc {
                accepted: run.accept as u64,
                max_bits: run.max_bits_per_node_per_round(),
                max_nb: run.max_neighbor_bits(),
                sum_mean: run.mean_bits(),
            })
        })
        .collect::<Result<Vec<Acc>, EngineError>>()?
        // Sequential fold: the float sum must not depend on work stealing.
        .into_iter()
        .fold(Acc::default(), |a, b| Acc {
            accepted: a.accepted + b.accepted,
            max_bits: a.max_bits.max(b.max_bits),
            max_nb: a.max_nb.max(b.max_nb),
            sum_mean: a.sum_mean + b.sum_mean,
        });
    Ok(Stats {
        protocol: proto.name(),
        prover: prover.name(),
        n: graph.n(),
        trials,
        accepted: acc.accepted,
        accept_rate: acc.accepted as f64 / trials as f64,
        max_bits_per_node_per_round: acc.max_bits,
        max_neighbor_bits: acc.max_nb,
        mean_bits: acc.sum_mean / trials as f64,
        rounds: proto.schedule().len(),
        seed: master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{generate, GraphKind};

    /// Every node sends one coin; the prover echoes it back; nodes check the
    /// echo and that neighbors agree on a constant.
    struct Echo;

    impl Protocol for Echo {
        fn name(&self) -> String {
            "echo".into()
        }
        fn schedule(&self) -> Vec<Speaker> {
            vec![Speaker::Nodes, Speaker::Prover]
        }
        fn coins(&self, _r: usize, _v: &NodeView, tape: &mut Tape) -> Msg {
            let mut m = Msg::new();
            m.push(tape.below(1000), width(999));
            m
        }
        fn share(&self, _v: &NodeView, _t: &[Msg], _ph: usize, _h: &[Vec<Msg>], _p: usize) -> Msg {
            let mut m = Msg::new();
            m.push(5, 3);
            m
        }
        fn verify(&self, _v: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
            let mine = tr[0].reader().take(10)?;
            let mut r = tr[1].reader();
            ensure(r.take(10)? == mine, "echo mismatch")?;
            r.finish()?;
            for m in &heard[0] {
                ensure(m.reader().take(3)? == 5, "neighbor")?;
            }
            Ok(())
        }
    }

    struct Echoer {
        flip: Option<usize>,
    }

    impl Prover<Echo> for Echoer {
        fn name(&self) -> String {
            "echoer".into()
        }
        fn respond(&self, ctx: &mut ProverCtx<'_, Echo>) -> Vec<Msg> {
            ctx.round_msgs(0)
                .iter()
                .enumerate()
                .map(|(u, m)| {
                    let mut out = m.clone();
                    if self.flip == Some(u) {
                        let v = m.words()[0].value ^ 1;
                        out = Msg::new();
                        out.push(v, 10);
                    }
                    out
                })
                .collect()
        }
    }

    #[test]
    fn widths() {
        assert_eq!(width(0), 1);
        assert_eq!(width(1), 1);
        assert_eq!(width(2), 2);
        assert_eq!(width(255), 8);
        assert_eq!(width(256), 9);
        assert_eq!(width(u64::MAX), 64);
    }

    #[test]
    fn reader_checks_widths() {
        let mut m = Msg::new();
        m.push(3, 2).push_bool(true);
        assert_eq!(m.bits(), 3);
        assert_eq!(m.encode(), vec![true, true, true]);
        let mut r = m.reader();
        assert_eq!(r.take(3), Err(DecodeError::Width { expected: 3, found: 2 }));
        assert_eq!(r.take_below(2, 3), Err(DecodeError::Range { value: 3 }));
        let mut r = m.reader();
        r.take(2).unwrap();
        assert_eq!(r.clone().finish(), Err(DecodeError::Trailing(1)));
        assert!(r.take_bool().unwrap());
        assert_eq!(r.take(1), Err(DecodeError::Truncated));
    }

    #[test]
    #[should_panic]
    fn words_never_truncate() {
        Word::new(8, 3);
    }

    #[test]
    fn deterministic_and_conjunctive() {
        let g = generate(&GraphKind::Cycle(5), 0).unwrap();
        let a = run_protocol(&Echo, &g, &Echoer { flip: None }, 9, RunOptions::default()).unwrap();
        let b = run_protocol(&Echo, &g, &Echoer { flip: None }, 9, RunOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.accept);
        assert_eq!(a.total_bits(), a.transcript.iter().flatten().map(|m| m.encode().len()).sum());
        assert_eq!(a.neighbor_bits, vec![6; 5]);
        let c = run_protocol(&Echo, &g, &Echoer { flip: Some(3) }, 9, RunOptions::default()).unwrap();
        assert!(!c.accept);
        assert_eq!(c.verdicts.iter().filter(|&&v| !v).count(), 1);
        assert!(!c.verdicts[3]);
    }

    #[test]
    fn cap_flags_overflow() {
        let g = generate(&GraphKind::Path(3), 0).unwrap();
        let opts = RunOptions { cap_bits: Some(9) };
        let run = run_protocol(&Echo, &g, &Echoer { flip: None }, 1, opts).unwrap();
        assert!(run.overflow);
        assert!(!run.accept);
        assert_eq!(run.reasons[0].as_deref(), Some("message exceeds the bandwidth cap"));
    }

    #[test]
    fn public_coin_replay() {
        let g = generate(&GraphKind::Path(4), 0).unwrap();
        let run = run_protocol(&Echo, &g, &Echoer { flip: None }, 3, RunOptions::default()).unwrap();
        for u in 0..4 {
            let mut tape = Tape::new(3, u as u64 + 1);
            tape.below(1000);
            assert_eq!(run.transcript[0][u].words(), tape.drawn());
        }
    }

    #[test]
    fn monte_carlo_basics() {
        let g = generate(&GraphKind::Path(3), 0).unwrap();
        let s = monte_carlo(&Echo, &g, &Echoer { flip: None }, 50, 1, RunOptions::default()).unwrap();
        assert_eq!(s.accept_rate, 1.0);
        assert_eq!(s.rounds, 2);
        assert_eq!(s.max_bits_per_node_per_round, 10);
        assert_eq!(
            monte_carlo(&Echo, &g, &Echoer { flip: None }, 0, 1, RunOptions::default()),
            Err(EngineError::ZeroTrials)
        );
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_eq!(schedule_name(&Echo.schedule()), "dAM");
    }
}
