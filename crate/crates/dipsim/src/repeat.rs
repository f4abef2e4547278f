//! Parallel repetition with a threshold.
//!
//! All repetitions run side by side. In its last message the prover names a
//! set `J` of repetitions; every node checks that `J` agrees with its
//! neighbors' copy and has at least `threshold` members, and verifies only the
//! repetitions in `J`. The overall run therefore accepts iff the prover can
//! make at least `threshold` repetitions pass.

use crate::engine::{
    decide, ensure, DecodeError, EngineError, Msg, Prover, ProverCtx, Protocol, Speaker, Tape, Verdict, Word,
};
use crate::netmodel::{NetworkGraph, NodeView};

/// Width of the word-count prefix in front of each repetition's segment.
const LEN_W: u8 = 24;

#[derive(Clone, Debug)]
pub struct Repeated<P> {
    pub inner: P,
    pub reps: usize,
    pub threshold: usize,
}

/// A node's transcript cut into repetitions.
struct Split {
    chosen: Vec<bool>,
    /// `per_rep[i][r]`
    per_rep: Vec<Vec<Msg>>,
}

fn prefixed(m: &mut Msg, seg: &Msg) {
    m.push(seg.words().len() as u64, LEN_W);
    m.append(seg);
}

fn split_prefixed(words: &[Word], reps: usize) -> Result<Vec<Msg>, DecodeError> {
    let mut out = Vec::with_capacity(reps);
    let mut pos = 0;
    for _ in 0..reps {
        let head = words.get(pos).ok_or(DecodeError::Truncated)?;
        if head.width != LEN_W {
            return Err(DecodeError::Width { expected: LEN_W, found: head.width });
        }
        let len = head.value as usize;
        let body = words.get(pos + 1..pos + 1 + len).ok_or(DecodeError::Truncated)?;
        out.push(Msg::from(body.to_vec()));
        pos += 1 + len;
    }
    if pos != words.len() {
        return Err(DecodeError::Trailing(words.len() - pos));
    }
    Ok(out)
}

fn read_set(words: &[Word], reps: usize) -> Result<Vec<bool>, DecodeError> {
    let bits = words.get(..reps).ok_or(DecodeError::Truncated)?;
    bits.iter()
        .map(|w| match (w.width, w.value) {
            (1, v) => Ok(v == 1),
            (w, _) => Err(DecodeError::Width { expected: 1, found: w }),
        })
        .collect()
}

impl<P: Protocol> Repeated<P> {
    pub fn new(inner: P, reps: usize, threshold: usize) -> Self {
        assert!(reps >= 1 && threshold <= reps, "need 1 <= reps and threshold <= reps");
        Self { inner, reps, threshold }
    }

    fn last_prover_round(&self) -> Option<usize> {
        self.inner.schedule().iter().rposition(|&s| s == Speaker::Prover)
    }

    /// Coin words each repetition contributes in node round `r`. The inner
    /// protocol must draw a fixed number of words per round.
    fn coin_counts(&self, r: usize, view: &NodeView) -> usize {
        self.inner.coins(r, view, &mut Tape::new(0, 0)).words().len()
    }

    fn split(&self, view: &NodeView, tr: &[Msg]) -> Result<Split, DecodeError> {
        let schedule = self.inner.schedule();
        let last = self.last_prover_round();
        let mut per_rep = vec![Vec::with_capacity(tr.len()); self.reps];
        let mut chosen = Vec::new();
        for (r, m) in tr.iter().enumerate() {
            let segs = match schedule[r] {
                Speaker::Nodes => {
                    let c = self.coin_counts(r, view);
                    if m.words().len() != c * self.reps {
                        return Err(DecodeError::Truncated);
                    }
                    (0..self.reps)
                        .map(|i| Msg::from(m.words()[i * c..(i + 1) * c].to_vec()))
                        .collect()
                }
                Speaker::Prover => {
                    let mut words = m.words();
                    if Some(r) == last {
                        chosen = read_set(words, self.reps)?;
                        words = &words[self.reps..];
                    }
                    split_prefixed(words, self.reps)?
                }
            };
            for (i, s) in segs.into_iter().enumerate() {
                per_rep[i].push(s);
            }
        }
        Ok(Split { chosen, per_rep })
    }

    /// `heard[k][p]` cut into `out[i][k][p]`, dropping the set in phase 0.
    fn split_heard(&self, heard: &[Vec<Msg>]) -> Result<(Vec<Vec<bool>>, Vec<Vec<Vec<Msg>>>), DecodeError> {
        let mut sets = Vec::new();
        let mut out = vec![Vec::with_capacity(heard.len()); self.reps];
        for (k, phase) in heard.iter().enumerate() {
            let mut cols = vec![Vec::with_capacity(phase.len()); self.reps];
            for m in phase {
                let mut words = m.words();
                if k == 0 {
                    sets.push(read_set(words, self.reps)?);
                    words = &words[self.reps..];
                }
                for (i, s) in split_prefixed(words, self.reps)?.into_iter().enumerate() {
                    cols[i].push(s);
                }
            }
            for (i, c) in cols.into_iter().enumerate() {
                out[i].push(c);
            }
        }
        Ok((sets, out))
    }

    fn try_share(
        &self,
        view: &NodeView,
        tr: &[Msg],
        phase: usize,
        heard: &[Vec<Msg>],
        port: usize,
    ) -> Result<Msg, DecodeError> {
        let split = self.split(view, tr)?;
        let (_, rep_heard) = self.split_heard(heard)?;
        let mut m = Msg::new();
        if phase == 0 {
            for &b in &split.chosen {
                m.push_bool(b);
            }
        }
        for (i, rep_tr) in split.per_rep.iter().enumerate() {
            let h = rep_heard.get(i).map_or(&[][..], |h| &h[..]);
            prefixed(&mut m, &self.inner.share(view, rep_tr, phase, h, port));
        }
        Ok(m)
    }
}

impl<P: Protocol> Protocol for Repeated<P> {
    fn name(&self) -> String {
        format!("{}x{}>={}", self.inner.name(), self.reps, self.threshold)
    }

    fn schedule(&self) -> Vec<Speaker> {
        self.inner.schedule()
    }

    fn public_coin(&self) -> bool {
        self.inner.public_coin()
    }

    fn check(&self, graph: &NetworkGraph) -> Result<(), EngineError> {
        if self.inner.schedule().last() != Some(&Speaker::Prover) {
            return Err(EngineError::Incompatible {
                protocol: self.name(),
                reason: "repetition needs the prover to speak last".into(),
            });
        }
        self.inner.check(graph)
    }

    fn exchange_phases(&self) -> usize {
        self.inner.exchange_phases()
    }

    fn coins(&self, round: usize, view: &NodeView, tape: &mut Tape) -> Msg {
        let mut m = Msg::new();
        for _ in 0..self.reps {
            m.append(&self.inner.coins(round, view, tape));
        }
        m
    }

    fn share(&self, view: &NodeView, tr: &[Msg], phase: usize, heard: &[Vec<Msg>], port: usize) -> Msg {
        self.try_share(view, tr, phase, heard, port).unwrap_or_default()
    }

    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let split = self.split(view, tr)?;
        let (sets, rep_heard) = self.split_heard(heard)?;
        ensure(sets.iter().all(|s| *s == split.chosen), "neighbors disagree on counted repetitions")?;
        let count = split.chosen.iter().filter(|&&b| b).count();
        ensure(count >= self.threshold, "too few counted repetitions")?;
        for (i, rep_tr) in split.per_rep.iter().enumerate() {
            if split.chosen[i] {
                let h = rep_heard.get(i).map_or(&[][..], |h| &h[..]);
                self.inner.verify(view, rep_tr, h)?;
            }
        }
        Ok(())
    }
}

/// Runs an inner prover in every repetition. In the last round it counts
/// exactly the repetitions that its own simulation of the nodes accepts.
#[derive(Clone, Debug)]
pub struct RepeatedProver<Pr>(pub Pr);

impl<P: Protocol, Pr: Prover<P>> Prover<Repeated<P>> for RepeatedProver<Pr> {
    fn name(&self) -> String {
        self.0.name()
    }

    fn honest(&self) -> bool {
        self.0.honest()
    }

    fn respond(&self, ctx: &mut ProverCtx<'_, Repeated<P>>) -> Vec<Msg> {
        let proto = ctx.proto;
        let g = ctx.graph;
        let n = g.n();
        let reps = proto.reps;
        // rep_tr[i][r][u]
        let mut rep_tr: Vec<Vec<Vec<Msg>>> = vec![vec![Vec::with_capacity(n); ctx.round]; reps];
        for u in 0..n {
            let view = g.view(u);
            let own: Vec<Msg> = ctx.transcript.iter().map(|round| round[u].clone()).collect();
            let split = proto.split(&view, &own).expect("transcript built by this prover");
            for (i, rounds) in split.per_rep.into_iter().enumerate() {
                for (r, m) in rounds.into_iter().enumerate() {
                    rep_tr[i][r].push(m);
                }
            }
        }
        let mut out: Vec<Vec<Msg>> = Vec::with_capacity(reps);
        for tr in &mut rep_tr {
            let mut inner_ctx = ProverCtx {
                proto: &proto.inner,
                graph: g,
                round: ctx.round,
                transcript: tr,
                rng: ctx.rng,
            };
            let msgs = self.0.respond(&mut inner_ctx);
            tr.push(msgs.clone());
            out.push(msgs);
        }
        let last = Some(ctx.round) == proto.last_prover_round();
        let chosen: Vec<bool> = if last {
            rep_tr
                .iter()
                .map(|tr| decide(&proto.inner, g, tr, &[]).0.iter().all(Result::is_ok))
                .collect()
        } else {
            Vec::new()
        };
        (0..n)
            .map(|u| {
                let mut m = Msg::new();
                for &b in &chosen {
                    m.push_bool(b);
                }
                for rep in &out {
                    prefixed(&mut m, rep.get(u).cloned().as_ref().unwrap_or(&Msg::new()));
                }
                m
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_protocol, RunOptions};
    use crate::netmodel::{generate, GraphKind};

    /// Each node flips a coin; the prover must echo it but only knows how to
    /// when told to cheat with probability about one half.
    struct Echo;
    impl Protocol for Echo {
        fn name(&self) -> String {
            "echo".into()
        }
        fn schedule(&self) -> Vec<Speaker> {
            vec![Speaker::Nodes, Speaker::Prover]
        }
        fn coins(&self, _: usize, _: &NodeView, tape: &mut Tape) -> Msg {
            let mut m = Msg::new();
            m.push(tape.bits(4), 4);
            m
        }
        fn share(&self, _: &NodeView, tr: &[Msg], _: usize, _: &[Vec<Msg>], _: usize) -> Msg {
            tr[0].clone()
        }
        fn verify(&self, _: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
            ensure(tr[1] == tr[0], "echo")?;
            ensure(heard[0].iter().all(|m| m.bits() == 4), "neighbor")
        }
    }

    /// Echoes correctly only when node 0's coin is even.
    struct Lucky;
    impl Prover<Echo> for Lucky {
        fn name(&self) -> String {
            "lucky".into()
        }
        fn respond(&self, ctx: &mut ProverCtx<'_, Echo>) -> Vec<Msg> {
            let coins = ctx.round_msgs(0);
            if coins[0].words()[0].value.is_multiple_of(2) {
                coins.to_vec()
            } else {
                vec![Msg::new(); coins.len()]
            }
        }
    }

    #[test]
    fn threshold_counts_passing_repetitions() {
        let g = generate(&GraphKind::Cycle(5), 0).unwrap();
        let mut accepted = [0usize; 3];
        let trials = 400;
        for (slot, t) in [0, 2, 4].into_iter().enumerate() {
            let proto = Repeated::new(Echo, 4, t);
            for s in 0..trials {
                let run = run_protocol(&proto, &g, &RepeatedProver(Lucky), s as u64, RunOptions::default()).unwrap();
                accepted[slot] += run.accept as usize;
            }
        }
        assert_eq!(accepted[0], trials as usize);
        // P[Bin(4, 1/2) >= 2] = 11/16, P[= 4] = 1/16
        let rate = |a: usize| a as f64 / trials as f64;
        assert!((rate(accepted[1]) - 11.0 / 16.0).abs() < 0.08, "{}", rate(accepted[1]));
        assert!((rate(accepted[2]) - 1.0 / 16.0).abs() < 0.04, "{}", rate(accepted[2]));
    }

    #[test]
    fn mismatched_sets_reject() {
        let g = generate(&GraphKind::Path(3), 0).unwrap();
        let proto = Repeated::new(Echo, 2, 0);
        let mut run = run_protocol(&proto, &g, &RepeatedProver(Lucky), 1, RunOptions::default()).unwrap();
        let mut tr = run.transcript.clone();
        let mut m = Msg::new();
        let first = tr[1][0].words()[0].value == 1;
        m.push_bool(!first);
        m.append(&Msg::from(tr[1][0].words()[1..].to_vec()));
        tr[1][0] = m;
        run.transcript = tr;
        let (v, _) = decide(&proto, &g, &run.transcript, &[]);
        assert!(v[0].is_err() || v[1].is_err());
    }
}
