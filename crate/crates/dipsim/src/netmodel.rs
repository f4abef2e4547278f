//! Port-numbered network graphs, local node views, generators and the
//! edge-list file format.
//!
//! File format: the first meaningful line is `n=<int>`, followed by one edge
//! per line as `u v [g0|g1|both]`. Lines may also be separated by `;`, and
//! `#` starts a comment. Port numbers follow the order in which edges appear.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for n={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("vertex sets differ: {0} vs {1}")]
    VertexMismatch(usize, usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Which of the two underlying graphs an edge of a union graph belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeLabel {
    G0,
    G1,
    Both,
}

impl EdgeLabel {
    pub fn in_g0(self) -> bool {
        matches!(self, EdgeLabel::G0 | EdgeLabel::Both)
    }
    pub fn in_g1(self) -> bool {
        matches!(self, EdgeLabel::G1 | EdgeLabel::Both)
    }
}

/// A connected undirected graph with port numbering.
///
/// `adj[u][i]` is the neighbor behind port `i` of `u`; `back[u][i]` is the
/// port of `u` at that neighbor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NetworkGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
    back: Vec<Vec<usize>>,
    labels: Option<Vec<Vec<EdgeLabel>>>,
    inputs: Option<Vec<Vec<u8>>>,
}

impl NetworkGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        Self::build(n, edges.iter().map(|&(u, v)| (u, v, None)))
    }

    pub fn from_labeled_edges(
        n: usize,
        edges: &[(usize, usize, EdgeLabel)],
    ) -> Result<Self, GraphError> {
        Self::build(n, edges.iter().map(|&(u, v, l)| (u, v, Some(l))))
    }

    fn build(
        n: usize,
        edges: impl Iterator<Item = (usize, usize, Option<EdgeLabel>)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj = vec![Vec::new(); n];
        let mut back = vec![Vec::new(); n];
        let mut lab = vec![Vec::new(); n];
        let mut any_label = false;
        let mut seen = HashSet::new();
        for (u, v, l) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
            }
            any_label |= l.is_some();
            let l = l.unwrap_or(EdgeLabel::Both);
            back[u].push(adj[v].len());
            back[v].push(adj[u].len());
            adj[u].push(v);
            adj[v].push(u);
            lab[u].push(l);
            lab[v].push(l);
        }
        let g = Self {
            n,
            adj,
            back,
            labels: any_label.then_some(lab),
            inputs: None,
        };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Parses the edge-list format described in the module docs.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut n = None;
        let mut edges = Vec::new();
        let lines = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split(';').map(move |part| (i + 1, part)));
        for (line, raw) in lines {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |msg: &str| GraphError::Parse {
                line,
                msg: msg.to_string(),
            };
            let Some(count) = n else {
                let rest = body
                    .strip_prefix("n=")
                    .ok_or_else(|| err("expected header n=<int>"))?;
                n = Some(rest.trim().parse::<usize>().map_err(|_| err("bad vertex count"))?);
                continue;
            };
            let toks: Vec<&str> = body.split_whitespace().collect();
            if !(2..=3).contains(&toks.len()) {
                return Err(err("expected `u v [label]`"));
            }
            let u = toks[0].parse::<usize>().map_err(|_| err("bad vertex"))?;
            let v = toks[1].parse::<usize>().map_err(|_| err("bad vertex"))?;
            let l = match toks.get(2).copied() {
                None | Some("both") => EdgeLabel::Both,
                Some("g0") => EdgeLabel::G0,
                Some("g1") => EdgeLabel::G1,
                Some(_) => return Err(err("label must be g0, g1 or both")),
            };
            if u >= count || v >= count {
                return Err(GraphError::VertexOutOfRange {
                    vertex: u.max(v),
                    n: count,
                });
            }
            edges.push((u, v, l));
        }
        let n = n.ok_or(GraphError::Parse {
            line: 0,
            msg: "missing header n=<int>".into(),
        })?;
        let mut g = Self::from_labeled_edges(n, &edges)?;
        if g.labels.as_ref().is_some_and(|ls| ls.iter().flatten().all(|&l| l == EdgeLabel::Both)) {
            g.labels = None;
        }
        Ok(g)
    }

    /// Serializes to the edge-list format (round-trips through [`parse`](Self::parse)).
    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for (u, v) in self.edges() {
            match self.label(u, self.port_of(u, v).unwrap_or(0)) {
                Some(EdgeLabel::G0) => out.push_str(&format!("{u} {v} g0\n")),
                Some(EdgeLabel::G1) => out.push_str(&format!("{u} {v} g1\n")),
                _ => out.push_str(&format!("{u} {v}\n")),
            }
        }
        out
    }

    pub fn with_inputs(mut self, inputs: Vec<Vec<u8>>) -> Result<Self, GraphError> {
        if inputs.len() != self.n {
            return Err(GraphError::InvalidParams(format!(
                "{} inputs for {} vertices",
                inputs.len(),
                self.n
            )));
        }
        self.inputs = Some(inputs);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Port of `u` leading to `v`.
    pub fn port_of(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].iter().position(|&w| w == v)
    }

    /// Port at `adj[u][port]` that leads back to `u`.
    pub fn back_port(&self, u: usize, port: usize) -> usize {
        self.back[u][port]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(&v)
    }

    pub fn label(&self, u: usize, port: usize) -> Option<EdgeLabel> {
        self.labels.as_ref().map(|l| l[u][port])
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    pub fn input(&self, u: usize) -> &[u8] {
        self.inputs.as_ref().map_or(&[], |i| &i[u])
    }

    /// Edges as `(u, v)` with `u < v`, in order of first appearance at `u`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.adj[u]
                .iter()
                .filter(move |&&v| u < v)
                .map(move |&v| (u, v))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Dense adjacency matrix.
    pub fn matrix(&self) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.n]; self.n];
        for (u, v) in self.edges() {
            m[u][v] = true;
            m[v][u] = true;
        }
        m
    }

    /// Sub-graph of edges present in G0 (`which = 0`) or G1 (`which = 1`),
    /// as a plain adjacency matrix. Unlabeled graphs return themselves.
    pub fn layer_matrix(&self, which: u8) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.n]; self.n];
        for u in 0..self.n {
            for (p, &v) in self.adj[u].iter().enumerate() {
                let l = self.label(u, p).unwrap_or(EdgeLabel::Both);
                if (which == 0 && l.in_g0()) || (which == 1 && l.in_g1()) {
                    m[u][v] = true;
                }
            }
        }
        m
    }

    /// The local view of node `u`.
    pub fn view(&self, u: usize) -> NodeView<'_> {
        NodeView {
            id: u,
            n: self.n,
            neighbors: &self.adj[u],
            labels: self.labels.as_ref().map(|l| l[u].as_slice()),
            input: self.input(u),
        }
    }
}

/// What a single node knows about the network: its own identity, the size of
/// the network, and its ports.
#[derive(Clone, Copy, Debug)]
pub struct NodeView<'g> {
    pub id: usize,
    pub n: usize,
    pub neighbors: &'g [usize],
    pub labels: Option<&'g [EdgeLabel]>,
    pub input: &'g [u8],
}

impl NodeView<'_> {
    pub fn degree(&self) -> usize {
        self.neighbors.len()
    }

    pub fn port_of(&self, v: usize) -> Option<usize> {
        self.neighbors.iter().position(|&w| w == v)
    }
}

/// Generator families. Vertex 0..n-1 in every family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GraphKind {
    Path(usize),
    Cycle(usize),
    Clique(usize),
    Star(usize),
    /// Erdős–Rényi G(n, p), resampled until connected.
    Gnp { n: usize, p: f64 },
    /// Uniform random recursive tree with shuffled labels.
    RandomTree(usize),
    /// The 6-vertex rigid graph: a triangle with pendant paths of length 2 and 1.
    SmallestAsymmetric,
    /// G(n, 1/2) with a K-clique planted on vertices 0..K-1.
    PlantedClique { n: usize, k: usize },
}

impl GraphKind {
    /// Parses `kind:params`, e.g. `cycle:8`, `gnp:20,0.3`, `planted_clique:8,4`.
    pub fn parse(spec: &str) -> Result<Self, GraphError> {
        let bad = |m: &str| GraphError::InvalidParams(format!("{spec}: {m}"));
        let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
        let nums: Vec<&str> = params.split(',').filter(|s| !s.is_empty()).collect();
        let int = |i: usize| -> Result<usize, GraphError> {
            nums.get(i)
                .ok_or_else(|| bad("missing parameter"))?
                .trim()
                .parse()
                .map_err(|_| bad("parameter is not an integer"))
        };
        let arity = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(bad(&format!("expected {k} parameter(s)")))
            }
        };
        Ok(match kind {
            "path" => {
                arity(1)?;
                GraphKind::Path(int(0)?)
            }
            "cycle" => {
                arity(1)?;
                GraphKind::Cycle(int(0)?)
            }
            "clique" => {
                arity(1)?;
                GraphKind::Clique(int(0)?)
            }
            "star" => {
                arity(1)?;
                GraphKind::Star(int(0)?)
            }
            "tree" | "random_tree" => {
                arity(1)?;
                GraphKind::RandomTree(int(0)?)
            }
            "gnp" => {
                arity(2)?;
                let p = nums[1].trim().parse().map_err(|_| bad("p is not a number"))?;
                GraphKind::Gnp { n: int(0)?, p }
            }
            "smallest_asymmetric" => {
                arity(0)?;
                GraphKind::SmallestAsymmetric
            }
            "planted_clique" => {
                arity(2)?;
                GraphKind::PlantedClique { n: int(0)?, k: int(1)? }
            }
            _ => return Err(bad("unknown graph kind")),
        })
    }
}

/// Builds a graph deterministically from `(kind, seed)`.
pub fn generate(kind: &GraphKind, seed: u64) -> Result<NetworkGraph, GraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let need = |ok: bool, m: &str| {
        if ok {
            Ok(())
        } else {
            Err(GraphError::InvalidParams(m.to_string()))
        }
    };
    match *kind {
        GraphKind::Path(n) => {
            need(n >= 1, "path needs n >= 1")?;
            let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            NetworkGraph::from_edges(n, &e)
        }
        GraphKind::Cycle(n) => {
            need(n >= 3, "cycle needs n >= 3")?;
            let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            NetworkGraph::from_edges(n, &e)
        }
        GraphKind::Clique(n) => {
            need(n >= 1, "clique needs n >= 1")?;
            let e: Vec<_> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .collect();
            NetworkGraph::from_edges(n, &e)
        }
        GraphKind::Star(n) => {
            need(n >= 1, "star needs n >= 1")?;
            let e: Vec<_> = (1..n).map(|i| (0, i)).collect();
            NetworkGraph::from_edges(n, &e)
        }
        GraphKind::RandomTree(n) => {
            need(n >= 1, "tree needs n >= 1")?;
            let mut label: Vec<usize> = (0..n).collect();
            label.shuffle(&mut rng);
            let e: Vec<_> = (1..n)
                .map(|i| (label[rng.gen_range(0..i)], label[i]))
                .collect();
            NetworkGraph::from_edges(n, &e)
        }
        GraphKind::Gnp { n, p } => {
            need(n >= 1, "gnp needs n >= 1")?;
            need(p > 0.0 && p <= 1.0, "gnp needs 0 < p <= 1")?;
            need(n == 1 || p * n as f64 >= 0.5, "gnp edge probability too small to connect")?;
            loop {
                let e: Vec<_> = (0..n)
                    .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                    .filter(|_| rng.gen_bool(p))
                    .collect();
                match NetworkGraph::from_edges(n, &e) {
                    Err(GraphError::Disconnected) => continue,
                    other => return other,
                }
            }
        }
        GraphKind::SmallestAsymmetric => {
            NetworkGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (2, 5), (3, 5)])
        }
        GraphKind::PlantedClique { n, k } => {
            need(k >= 1 && k <= n, "clique size must be in 1..=n")?;
            loop {
                let e: Vec<_> = (0..n)
                    .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                    .filter(|&(_, v)| v < k || rng.gen_bool(0.5))
                    .collect();
                match NetworkGraph::from_edges(n, &e) {
                    Err(GraphError::Disconnected) => continue,
                    other => return other,
                }
            }
        }
    }
}

/// Union of two graphs on the same vertex set; each edge remembers its origin.
pub fn union_graph(g0: &NetworkGraph, g1: &NetworkGraph) -> Result<NetworkGraph, GraphError> {
    if g0.n() != g1.n() {
        return Err(GraphError::VertexMismatch(g0.n(), g1.n()));
    }
    let e0: Vec<_> = g0.edges().collect();
    let e1: Vec<_> = g1.edges().collect();
    union_edges(g0.n(), &e0, &e1)
}

/// Union of two edge sets on `0..n`. The layers may be disconnected on
/// their own; the union may not.
pub fn union_edges(
    n: usize,
    e0: &[(usize, usize)],
    e1: &[(usize, usize)],
) -> Result<NetworkGraph, GraphError> {
    let key = |(u, v): (usize, usize)| (u.min(v), u.max(v));
    let mut edges: Vec<(usize, usize, EdgeLabel)> = Vec::new();
    for &e in e0 {
        let (u, v) = key(e);
        if !edges.iter().any(|x| (x.0, x.1) == (u, v)) {
            edges.push((u, v, EdgeLabel::G0));
        }
    }
    for &e in e1 {
        let (u, v) = key(e);
        match edges.iter_mut().find(|x| (x.0, x.1) == (u, v)) {
            Some(x) => x.2 = EdgeLabel::Both,
            None => edges.push((u, v, EdgeLabel::G1)),
        }
    }
    NetworkGraph::from_labeled_edges(n, &edges)
}

/// All vertex permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap_or(i);
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Image of an adjacency matrix under `pi` (vertex `u` becomes `pi[u]`).
pub fn permute_matrix(m: &[Vec<bool>], pi: &[usize]) -> Vec<Vec<bool>> {
    let n = m.len();
    let mut out = vec![vec![false; n]; n];
    for u in 0..n {
        for v in 0..n {
            out[pi[u]][pi[v]] = m[u][v];
        }
    }
    out
}

/// Brute-force automorphism group (with degree pruning). Desk scale only.
pub fn automorphisms(m: &[Vec<bool>]) -> Vec<Vec<usize>> {
    isomorphisms(m, m)
}

/// All bijections `pi` with `b[pi[u]][pi[v]] == a[u][v]`.
pub fn isomorphisms(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = a.len();
    if b.len() != n {
        return Vec::new();
    }
    let deg = |m: &[Vec<bool>], u: usize| m[u].iter().filter(|&&x| x).count();
    let mut out = Vec::new();
    let mut pi = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn extend(
        u: usize,
        a: &[Vec<bool>],
        b: &[Vec<bool>],
        deg: &dyn Fn(&[Vec<bool>], usize) -> usize,
        pi: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let n = a.len();
        if u == n {
            out.push(pi.clone());
            return;
        }
        for cand in 0..n {
            if used[cand] || deg(a, u) != deg(b, cand) {
                continue;
            }
            if (0..u).any(|w| a[u][w] != b[cand][pi[w]]) {
                continue;
            }
            pi[u] = cand;
            used[cand] = true;
            extend(u + 1, a, b, deg, pi, used, out);
            used[cand] = false;
        }
        pi[u] = usize::MAX;
    }
    extend(0, a, b, &deg, &mut pi, &mut used, &mut out);
    out
}

pub fn is_isomorphic(a: &[Vec<bool>], b: &[Vec<bool>]) -> bool {
    !isomorphisms(a, b).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_examples() {
        let p3 = NetworkGraph::parse("n=3; 0 1; 1 2").unwrap();
        assert_eq!((0..3).map(|u| p3.degree(u)).collect::<Vec<_>>(), vec![1, 2, 1]);
        assert_eq!(NetworkGraph::parse("n=3; 0 1"), Err(GraphError::Disconnected));
        let c4 = NetworkGraph::parse("n=4; 0 1; 1 2; 2 3; 3 0").unwrap();
        assert!((0..4).all(|u| c4.degree(u) == 2));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(NetworkGraph::parse("n=2\n0 0"), Err(GraphError::SelfLoop(0))));
        assert!(matches!(
            NetworkGraph::parse("n=2\n0 1\n1 0"),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
        assert!(matches!(NetworkGraph::parse("0 1"), Err(GraphError::Parse { .. })));
        assert!(matches!(NetworkGraph::parse("n=2\n0 5"), Err(GraphError::VertexOutOfRange { .. })));
        assert!(matches!(NetworkGraph::parse("n=2\n0 1 g7"), Err(GraphError::Parse { .. })));
    }

    #[test]
    fn ports_follow_edge_order_and_back_ports_agree() {
        let g = NetworkGraph::parse("# star\nn=4\n0 2\n0 1 # c\n3 0").unwrap();
        assert_eq!(g.neighbors(0), &[2, 1, 3]);
        for u in 0..g.n() {
            for (p, &v) in g.neighbors(u).iter().enumerate() {
                assert_eq!(g.neighbors(v)[g.back_port(u, p)], u);
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let g = generate(&GraphKind::Gnp { n: 9, p: 0.4 }, 3).unwrap();
        assert_eq!(NetworkGraph::parse(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn generators() {
        assert_eq!(generate(&GraphKind::Clique(4), 0).unwrap().edge_count(), 6);
        let pc = generate(&GraphKind::PlantedClique { n: 8, k: 4 }, 7).unwrap();
        for u in 0..4 {
            for v in u + 1..4 {
                assert!(pc.has_edge(u, v));
            }
        }
        assert!(generate(&GraphKind::PlantedClique { n: 3, k: 4 }, 0).is_err());
        let a = generate(&GraphKind::Gnp { n: 12, p: 0.3 }, 5).unwrap();
        let b = generate(&GraphKind::Gnp { n: 12, p: 0.3 }, 5).unwrap();
        assert_eq!(a, b);
        let t = generate(&GraphKind::RandomTree(30), 1).unwrap();
        assert_eq!(t.edge_count(), 29);
    }

    #[test]
    fn smallest_asymmetric_is_rigid() {
        let g = generate(&GraphKind::SmallestAsymmetric, 0).unwrap();
        let m = g.matrix();
        let autos = permutations(6)
            .into_iter()
            .filter(|pi| permute_matrix(&m, pi) == m)
            .count();
        assert_eq!(autos, 1);
        assert_eq!(automorphisms(&m).len(), 1);
    }

    #[test]
    fn cycle_automorphisms() {
        let c6 = generate(&GraphKind::Cycle(6), 0).unwrap().matrix();
        assert_eq!(automorphisms(&c6).len(), 12);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn unions() {
        let p = generate(&GraphKind::Path(3), 0).unwrap();
        let u = union_graph(&p, &p).unwrap();
        assert!(!u.is_labeled() || (0..3).all(|v| (0..u.degree(v)).all(|q| u.label(v, q) == Some(EdgeLabel::Both))));
        let q = NetworkGraph::from_edges(3, &[(0, 2), (2, 1)]).unwrap();
        let t = union_graph(&p, &q).unwrap();
        assert_eq!(t.edge_count(), 3);
        assert_eq!(t.label(0, t.port_of(0, 1).unwrap()), Some(EdgeLabel::G0));
        assert_eq!(t.label(0, t.port_of(0, 2).unwrap()), Some(EdgeLabel::G1));
        assert_eq!(t.label(1, t.port_of(1, 2).unwrap()), Some(EdgeLabel::Both));
        let big = generate(&GraphKind::Path(4), 0).unwrap();
        assert!(matches!(union_graph(&p, &big), Err(GraphError::VertexMismatch(3, 4))));
        assert_eq!(union_edges(4, &[(0, 1)], &[(2, 3)]), Err(GraphError::Disconnected));
    }
}
