//! Decomposition of a spanning tree into edge-disjoint blocks of Θ(b) nodes.
//!
//! The prover packs the tree bottom-up: a node whose residual subtree reaches
//! b becomes the root of a block; when it overshoots 2b the children are
//! grouped in port order. Leftovers at the top join the last block, which
//! becomes the root block. Nodes learn their blocks from per-node tags
//! (continuation bit, first-of-group bit, trinary root type) and verify the
//! sizes with within-block subtree counts.

use crate::engine::{
    ensure, width, DecodeError, Msg, MsgReader, Protocol, Prover, ProverCtx, Reject, Speaker, Tape, Verdict,
};
use crate::netmodel::{NetworkGraph, NodeView};
use crate::treelabel::SpanningTree;

use super::o1tree::{self, Mod3, Mod3Share, Parities, DEFAULT_REPS};

/// Block parameter for n nodes: max(2, ⌈log2 n⌉).
pub fn default_block(n: usize) -> usize {
    (usize::BITS - n.saturating_sub(1).leading_zeros()).max(2) as usize
}

/// One block: its root and non-root members in within-block preorder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub root: usize,
    pub members: Vec<usize>,
}

impl Block {
    pub fn size(&self) -> usize {
        self.members.len() + 1
    }
}

/// What the prover tells each node about the decomposition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BlockTags {
    /// The parent edge lies in the parent's own block.
    pub cont: bool,
    /// First child of a block rooted at the parent.
    pub first: bool,
    /// Number of blocks rooted here, capped at 2.
    pub kind: u8,
    /// Size of the node's subtree inside its block.
    pub sigma: u64,
    /// Within-block preorder index.
    pub pos: u64,
    /// The node's block is the last one rooted at its root.
    pub last: bool,
    pub root_block: bool,
}

/// Tag encoding for block parameter b.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TagCodec {
    pub b: usize,
}

impl TagCodec {
    pub fn max_size(&self) -> u64 {
        3 * self.b as u64
    }

    fn sw(&self) -> u8 {
        width(self.max_size())
    }

    pub fn bits(&self) -> usize {
        6 + 2 * self.sw() as usize
    }

    pub fn write(&self, m: &mut Msg, t: &BlockTags) {
        m.push_bool(t.cont);
        m.push_bool(t.first);
        m.push(t.kind as u64, 2);
        m.push(t.sigma, self.sw());
        m.push(t.pos, self.sw());
        m.push_bool(t.last);
        m.push_bool(t.root_block);
    }

    pub fn read(&self, r: &mut MsgReader) -> Result<BlockTags, DecodeError> {
        Ok(BlockTags {
            cont: r.take_bool()?,
            first: r.take_bool()?,
            kind: r.take_below(2, 3)? as u8,
            sigma: r.take_below(self.sw(), self.max_size() + 1)?,
            pos: r.take_below(self.sw(), self.max_size() + 1)?,
            last: r.take_bool()?,
            root_block: r.take_bool()?,
        })
    }
}

/// Result of the greedy packing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDecomposition {
    pub b: usize,
    pub tree: SpanningTree,
    pub blocks: Vec<Block>,
    /// Block containing the node's parent edge; `None` for the tree root.
    pub home: Vec<Option<usize>>,
    /// Blocks rooted at each node, in order; at the tree root the root block
    /// comes last.
    pub rooted: Vec<Vec<usize>>,
    pub root_block: usize,
    pub tags: Vec<BlockTags>,
}

/// Packs `tree` into blocks.
pub fn decompose(tree: &SpanningTree, b: usize) -> BlockDecomposition {
    assert!(b >= 2, "block parameter must be at least 2");
    let n = tree.n();
    let rho = tree.root;
    let mut resid = vec![1usize; n];
    let mut cont = vec![false; n];
    // Declared groups: (root, first-level children), in declaration order.
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for u in tree.postorder() {
        let kids = &tree.children[u];
        let total: usize = 1 + kids.iter().map(|&c| resid[c]).sum::<usize>();
        if total < b {
            kids.iter().for_each(|&c| cont[c] = true);
            resid[u] = total;
        } else if total <= 2 * b {
            groups.push((u, kids.clone()));
        } else {
            let mut cur = Vec::new();
            let mut size = 1;
            for &c in kids {
                cur.push(c);
                size += resid[c];
                if size >= b {
                    groups.push((u, std::mem::take(&mut cur)));
                    size = 1;
                }
            }
            cur.iter().for_each(|&c| cont[c] = true);
            resid[u] = size;
        }
    }
    // The leftover at the top absorbs the last declared group.
    if let Some((_, kids)) = groups.pop() {
        kids.iter().for_each(|&c| cont[c] = true);
    }
    let mut rooted: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    for (r, kids) in groups {
        rooted[r].push(kids);
    }
    let root_kids: Vec<usize> = tree.children[rho].iter().copied().filter(|&c| cont[c]).collect();

    let mut blocks = Vec::new();
    let mut home = vec![None; n];
    let mut sigma = vec![1u64; n];
    for u in tree.postorder() {
        for &c in &tree.children[u] {
            if cont[c] {
                sigma[u] += sigma[c];
            }
        }
    }
    let mut pos = vec![0u64; n];
    let mut rooted_ids: Vec<Vec<usize>> = vec![Vec::new(); n];
    // Preorder through a block starting from its first-level children.
    let fill = |kids: &[usize], id: usize, home: &mut Vec<Option<usize>>, pos: &mut Vec<u64>| {
        let mut members = Vec::new();
        let mut stack: Vec<(usize, u64)> = Vec::new();
        let mut next = 0;
        for &c in kids {
            stack.push((c, next));
            next += sigma[c];
        }
        stack.reverse();
        while let Some((x, p)) = stack.pop() {
            members.push(x);
            home[x] = Some(id);
            pos[x] = p;
            let mut q = p + 1;
            let mut sub = Vec::new();
            for &d in tree.children[x].iter().filter(|&&d| cont[d]) {
                sub.push((d, q));
                q += sigma[d];
            }
            stack.extend(sub.into_iter().rev());
        }
        members
    };
    for u in 0..n {
        for kids in &rooted[u] {
            let id = blocks.len();
            let members = fill(kids, id, &mut home, &mut pos);
            blocks.push(Block { root: u, members });
            rooted_ids[u].push(id);
        }
    }
    // Continuation subtrees of non-root nodes belong to their home blocks
    // and were visited above; the root's continuation is the root block.
    let root_block = blocks.len();
    let members = fill(&root_kids, root_block, &mut home, &mut pos);
    blocks.push(Block { root: rho, members });
    rooted_ids[rho].push(root_block);

    let tags = (0..n)
        .map(|u| {
            let declared = rooted[u].len();
            let (last, rb) = match home[u] {
                Some(h) => {
                    let r = blocks[h].root;
                    (rooted_ids[r].last() == Some(&h), h == root_block)
                }
                None => (false, false),
            };
            let first = !cont[u]
                && tree.parent[u].is_some()
                && rooted[tree.parent[u].unwrap()].iter().any(|k| k[0] == u);
            BlockTags {
                cont: cont[u],
                first,
                kind: declared.min(2) as u8,
                sigma: sigma[u],
                pos: pos[u],
                last,
                root_block: rb,
            }
        })
        .collect();
    BlockDecomposition { b, tree: tree.clone(), blocks, home, rooted: rooted_ids, root_block, tags }
}

impl BlockDecomposition {
    pub fn n(&self) -> usize {
        self.tree.n()
    }

    /// Parent of a block in the super-tree: the home block of its root, or
    /// the root block for the other blocks rooted at the tree root.
    pub fn parent_block(&self, k: usize) -> Option<usize> {
        if k == self.root_block {
            return None;
        }
        Some(self.home[self.blocks[k].root].unwrap_or(self.root_block))
    }

    /// Nodes of a block, root first.
    pub fn nodes(&self, k: usize) -> Vec<usize> {
        let bl = &self.blocks[k];
        std::iter::once(bl.root).chain(bl.members.iter().copied()).collect()
    }

    /// The structural properties every honest decomposition has.
    pub fn invariants(&self) -> Result<(), String> {
        let (n, b) = (self.n(), self.b);
        for (k, bl) in self.blocks.iter().enumerate() {
            let s = bl.size();
            let ok = if k == self.root_block { s >= b.min(n) && s <= 3 * b } else { s >= b && s <= 2 * b };
            if !ok {
                return Err(format!("block {k} has size {s}"));
            }
        }
        // Edge-disjoint and covering: every non-root node has exactly one home.
        let mut count = vec![0usize; n];
        for bl in &self.blocks {
            for &x in &bl.members {
                count[x] += 1;
            }
        }
        for u in 0..n {
            let want = usize::from(u != self.tree.root);
            if count[u] != want {
                return Err(format!("node {u} is a member of {} blocks", count[u]));
            }
        }
        // Blocks meet only at roots.
        for (i, a) in self.blocks.iter().enumerate() {
            for bl in &self.blocks[i + 1..] {
                let shared: Vec<usize> = self.nodes_of(a).into_iter().filter(|x| self.nodes_of(bl).contains(x)).collect();
                if shared.len() > 1 || shared.iter().any(|&x| x != a.root && x != bl.root) {
                    return Err(format!("blocks rooted at {} and {} share {shared:?}", a.root, bl.root));
                }
            }
        }
        // Each block is a subtree hanging from its root.
        for bl in &self.blocks {
            for &x in &bl.members {
                let p = self.tree.parent[x].ok_or("member without parent")?;
                if p != bl.root && !bl.members.contains(&p) {
                    return Err(format!("member {x} detached from its block"));
                }
            }
        }
        // The super-tree reaches the root block from everywhere without cycles,
        // and a block's root sits in its parent block.
        for k in 0..self.blocks.len() {
            let mut cur = k;
            for _ in 0..=self.blocks.len() {
                match self.parent_block(cur) {
                    Some(p) => {
                        if !self.nodes(p).contains(&self.blocks[cur].root) {
                            return Err(format!("block {cur} does not touch its parent"));
                        }
                        cur = p;
                    }
                    None => break,
                }
            }
            if cur != self.root_block {
                return Err(format!("block {k} does not reach the root block"));
            }
        }
        Ok(())
    }

    fn nodes_of(&self, bl: &Block) -> Vec<usize> {
        std::iter::once(bl.root).chain(bl.members.iter().copied()).collect()
    }
}

/// What a node learns about its surroundings once the checks pass.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalBlocks {
    pub parent: Option<usize>,
    pub parent_is_root: bool,
    /// Children (ports) continuing this node's home block.
    pub cont_kids: Vec<usize>,
    /// First-level children of each block rooted here, in order. At the
    /// tree root the last entry is the root block.
    pub groups: Vec<Vec<usize>>,
}

/// A neighbor's tags as seen locally.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KidTags {
    pub port: usize,
    pub tags: BlockTags,
}

/// Local decomposition checks of one node. `kids` are the children in port
/// order; `parent` is the parent's tags and whether it is the tree root.
pub fn check_local(
    b: usize,
    n: usize,
    own: &BlockTags,
    parent: Option<(usize, &BlockTags, bool)>,
    kids: &[KidTags],
) -> Result<LocalBlocks, Reject> {
    let max = 3 * b as u64;
    let sum: u64 = 1 + kids.iter().filter(|k| k.tags.cont).map(|k| k.tags.sigma).sum::<u64>();
    ensure(own.sigma == sum, "within-block subtree size wrong")?;
    ensure(own.sigma <= max, "block too large")?;
    let is_root = parent.is_none();
    match parent {
        None => ensure(!own.cont && !own.first, "the root has no parent edge")?,
        Some((_, ptags, p_root)) => {
            ensure(!(own.cont && own.first), "continuation marked first")?;
            if own.cont && !p_root {
                ensure(
                    own.last == ptags.last && own.root_block == ptags.root_block,
                    "block flags differ inside a block",
                )?;
            }
        }
    }
    // Positions inside the home block continue from this node.
    let cont: Vec<&KidTags> = kids.iter().filter(|k| k.tags.cont).collect();
    let mut next = if is_root { 0 } else { own.pos + 1 };
    for k in &cont {
        ensure(k.tags.pos == next, "within-block positions inconsistent")?;
        next += k.tags.sigma;
    }
    // Blocks rooted here: maximal runs of non-continuation children.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut sizes: Vec<u64> = Vec::new();
    let mut flags: Vec<BlockTags> = Vec::new();
    for k in kids.iter().filter(|k| !k.tags.cont) {
        if k.tags.first {
            groups.push(Vec::new());
            sizes.push(1);
            flags.push(k.tags);
        }
        ensure(!groups.is_empty(), "block without a first child")?;
        let i = groups.len() - 1;
        ensure(k.tags.pos == sizes[i] - 1, "within-block positions inconsistent")?;
        ensure(
            k.tags.last == flags[i].last && k.tags.root_block == flags[i].root_block,
            "block flags differ inside a block",
        )?;
        groups[i].push(k.port);
        sizes[i] += k.tags.sigma;
    }
    ensure(own.kind as usize == groups.len().min(2), "root type tag wrong")?;
    let m = groups.len();
    for (i, (&s, f)) in sizes.iter().zip(&flags).enumerate() {
        ensure(s >= b as u64 && s <= 2 * b as u64, "block size out of range")?;
        ensure(!f.root_block, "declared block flagged as root block")?;
        ensure(f.last == (!is_root && i + 1 == m), "last-block flag wrong")?;
    }
    if is_root {
        let size = 1 + cont.iter().map(|k| k.tags.sigma).sum::<u64>();
        ensure(n <= 1 || !cont.is_empty(), "no root block")?;
        ensure(size >= b.min(n) as u64 && size <= max, "root block size out of range")?;
        ensure(cont.iter().all(|k| k.tags.last && k.tags.root_block), "root block flags wrong")?;
        if !cont.is_empty() {
            groups.push(cont.iter().map(|k| k.port).collect());
        }
    }
    Ok(LocalBlocks {
        parent: parent.map(|p| p.0),
        parent_is_root: parent.is_some_and(|p| p.2),
        cont_kids: if is_root { Vec::new() } else { cont.iter().map(|k| k.port).collect() },
        groups,
    })
}

/// Tree construction plus a verified block decomposition (dMAM). Exchange
/// phase 0 carries labels, parities and tags; phase 1 tells each parent
/// which neighbors are its children and whether it is the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockProtocol {
    pub tree: Mod3,
    pub codec: TagCodec,
}

/// Own and neighbor data after both exchange phases.
pub struct Neighborhood {
    pub d3: u8,
    pub coins: Vec<bool>,
    pub par: Parities,
    pub tags: BlockTags,
    pub shares: Vec<Mod3Share>,
    pub nbr_tags: Vec<BlockTags>,
    pub parent: Option<usize>,
    /// Ports whose neighbor named this node as its parent.
    pub kid_flags: Vec<bool>,
    pub nbr_is_root: Vec<bool>,
}

impl BlockProtocol {
    pub fn new(t: usize, b: usize) -> Self {
        Self { tree: Mod3::new(t), codec: TagCodec { b } }
    }

    pub fn for_graph(n: usize) -> Self {
        Self::new(DEFAULT_REPS, default_block(n))
    }

    pub fn write_first(&self, m: &mut Msg, d3: u8, tags: &BlockTags) {
        self.tree.write_label(m, d3);
        self.codec.write(m, tags);
    }

    pub fn read_first(&self, r: &mut MsgReader) -> Result<(u8, BlockTags), DecodeError> {
        Ok((self.tree.read_label(r)?, self.codec.read(r)?))
    }

    /// Phase-0 share: label, parities and tags.
    pub fn write_phase0(&self, m: &mut Msg, d3: u8, par: &Parities, tags: &BlockTags) {
        self.tree.write_share(m, &Mod3Share { d3, par: par.clone() });
        self.codec.write(m, tags);
    }

    pub fn read_phase0(&self, r: &mut MsgReader) -> Result<(Mod3Share, BlockTags), DecodeError> {
        Ok((self.tree.read_share(r)?, self.codec.read(r)?))
    }

    /// Phase-1 share: "you are my parent" and "I am the root".
    pub fn write_phase1(&self, m: &mut Msg, parent: Option<usize>, port: usize) {
        m.push_bool(parent == Some(port));
        m.push_bool(parent.is_none());
    }

    /// Parent port from phase-0 shares.
    pub fn parent_from(&self, d3: u8, heard0: &[Msg]) -> Option<usize> {
        let labels = heard0.iter().map(|m| self.tree.read_label(&mut m.reader()).unwrap_or(3));
        o1tree::parent_port(d3, labels)
    }

    /// Checks tree and decomposition.
    pub fn check(
        &self,
        view: &NodeView,
        nb: &Neighborhood,
    ) -> Result<LocalBlocks, Reject> {
        let parent = self.tree.check(nb.d3, &nb.coins, &nb.par, &nb.shares)?;
        ensure(parent == nb.parent, "parent rule mismatch")?;
        if let Some(p) = parent {
            ensure(!nb.kid_flags[p], "parent claims this node as its child")?;
        }
        let kids: Vec<KidTags> = (0..view.degree())
            .filter(|&p| nb.kid_flags[p])
            .map(|port| KidTags { port, tags: nb.nbr_tags[port] })
            .collect();
        check_local(
            self.codec.b,
            view.n,
            &nb.tags,
            parent.map(|p| (p, &nb.nbr_tags[p], nb.nbr_is_root[p])),
            &kids,
        )
    }

    /// Parses the frame part of the own messages and of every share.
    fn gather(&self, tr: &[Msg], heard: &[Vec<Msg>]) -> Result<(Neighborhood, Extras), DecodeError> {
        let (mut first, mut coins, mut last) = (tr[0].reader(), tr[1].reader(), tr[2].reader());
        let (d3, tags) = self.read_first(&mut first)?;
        let coin_bits = self.tree.read_coins(&mut coins)?;
        let par = self.tree.read_parities(&mut last)?;
        let mut shares = Vec::with_capacity(heard[0].len());
        let mut nbr_tags = Vec::with_capacity(heard[0].len());
        let mut nbr = Vec::with_capacity(heard[0].len());
        for m in &heard[0] {
            let mut r = m.reader();
            let (s, t) = self.read_phase0(&mut r)?;
            shares.push(s);
            nbr_tags.push(t);
            nbr.push(r.rest());
        }
        let mut kid_flags = Vec::with_capacity(heard[1].len());
        let mut nbr_is_root = Vec::with_capacity(heard[1].len());
        for m in &heard[1] {
            let mut r = m.reader();
            kid_flags.push(r.take_bool()?);
            nbr_is_root.push(r.take_bool()?);
            r.finish()?;
        }
        let parent = o1tree::parent_port(d3, shares.iter().map(|s| s.d3));
        let nb = Neighborhood { d3, coins: coin_bits, par, tags, shares, nbr_tags, parent, kid_flags, nbr_is_root };
        let ex = Extras { first: first.rest(), coins: coins.rest(), last: last.rest(), nbr };
        Ok((nb, ex))
    }

    /// Node coins: the tree coins followed by `extra`.
    pub fn layered_coins(&self, tape: &mut Tape, extra: impl FnOnce(&mut Tape, &mut Msg)) -> Msg {
        let mut m = Msg::new();
        self.tree.draw(tape, &mut m);
        extra(tape, &mut m);
        m
    }

    /// Phase 0 forwards the frame data plus whatever a layered protocol
    /// appended to the first and last prover messages; phase 1 carries the
    /// parent flags.
    pub fn layered_share(&self, tr: &[Msg], phase: usize, heard: &[Vec<Msg>], port: usize) -> Msg {
        let mut m = Msg::new();
        let mut first = tr[0].reader();
        let Ok((d3, tags)) = self.read_first(&mut first) else { return m };
        if phase == 0 {
            let mut last = tr[2].reader();
            if let Ok(par) = self.tree.read_parities(&mut last) {
                self.write_phase0(&mut m, d3, &par, &tags);
                m.append(&first.rest());
                m.append(&last.rest());
            }
        } else {
            self.write_phase1(&mut m, self.parent_from(d3, &heard[0]), port);
        }
        m
    }

    /// Verifies tree and decomposition and hands back the layered parts.
    pub fn layered_verify(
        &self,
        view: &NodeView,
        tr: &[Msg],
        heard: &[Vec<Msg>],
    ) -> Result<(Neighborhood, LocalBlocks, Extras), Reject> {
        let (nb, ex) = self.gather(tr, heard)?;
        let lb = self.check(view, &nb)?;
        Ok((nb, lb, ex))
    }

    /// Honest labels, tree and decomposition rooted at `root`.
    pub fn honest_frame(&self, g: &NetworkGraph, root: usize) -> (Vec<u8>, BlockDecomposition) {
        let d3 = o1tree::bfs_labels(g, root);
        let tree = o1tree::derived_tree(g, &d3).expect("honest labels give a tree");
        (d3, decompose(&tree, self.codec.b))
    }

    /// First prover message of every node: label, tags, then `extra(u)`.
    pub fn first_msgs(&self, d3: &[u8], tags: &[BlockTags], extra: impl Fn(usize, &mut Msg)) -> Vec<Msg> {
        (0..d3.len())
            .map(|u| {
                let mut m = Msg::new();
                self.write_first(&mut m, d3[u], &tags[u]);
                extra(u, &mut m);
                m
            })
            .collect()
    }

    /// Tree coins and the layered rest of every node's coin message.
    pub fn split_coins(&self, msgs: &[Msg]) -> (Vec<Vec<bool>>, Vec<Msg>) {
        msgs.iter()
            .map(|m| {
                let mut r = m.reader();
                let c = self.tree.read_coins(&mut r).unwrap_or_else(|_| vec![false; self.tree.t]);
                (c, r.rest())
            })
            .unzip()
    }

    /// Last prover message: parities for `tree`, then `extra(u)`.
    pub fn last_msgs(&self, tree: &SpanningTree, coins: &[Vec<bool>], extra: impl Fn(usize, &mut Msg)) -> Vec<Msg> {
        self.tree
            .parities(tree, coins)
            .iter()
            .enumerate()
            .map(|(u, p)| {
                let mut m = Msg::new();
                self.tree.write_parities(&mut m, p);
                extra(u, &mut m);
                m
            })
            .collect()
    }
}

/// Parts of a node's messages beyond the tree and decomposition data.
#[derive(Clone, Debug, Default)]
pub struct Extras {
    pub first: Msg,
    pub coins: Msg,
    pub last: Msg,
    /// Per port: the neighbor's forwarded first and last extras.
    pub nbr: Vec<Msg>,
}

impl Protocol for BlockProtocol {
    fn name(&self) -> String {
        format!("blocks(b={}, t={})", self.codec.b, self.tree.t)
    }
    fn schedule(&self) -> Vec<Speaker> {
        vec![Speaker::Prover, Speaker::Nodes, Speaker::Prover]
    }
    fn exchange_phases(&self) -> usize {
        2
    }
    fn coins(&self, _: usize, _: &NodeView, tape: &mut Tape) -> Msg {
        self.layered_coins(tape, |_, _| ())
    }
    fn share(&self, _: &NodeView, tr: &[Msg], phase: usize, heard: &[Vec<Msg>], port: usize) -> Msg {
        self.layered_share(tr, phase, heard, port)
    }
    fn verify(&self, view: &NodeView, tr: &[Msg], heard: &[Vec<Msg>]) -> Verdict {
        let (_, _, ex) = self.layered_verify(view, tr, heard)?;
        ensure(
            ex.first.is_empty() && ex.coins.is_empty() && ex.last.is_empty() && ex.nbr.iter().all(Msg::is_empty),
            "unexpected trailing fields",
        )
    }
}

/// How a block prover departs from the honest packing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockForgery {
    None,
    /// Splits a continuation child off as its own undersized block.
    Undersized,
    /// The same, with the child's subtree count inflated to look legal.
    Inflated,
}

#[derive(Clone, Copy, Debug)]
pub struct BlockProver {
    pub root: usize,
    pub forgery: BlockForgery,
}

impl BlockProver {
    pub fn honest(root: usize) -> Self {
        Self { root, forgery: BlockForgery::None }
    }

    /// Honest labels and tags, then the forgery.
    pub fn plan(&self, g: &NetworkGraph, b: usize) -> (Vec<u8>, SpanningTree, Vec<BlockTags>) {
        let d3 = o1tree::bfs_labels(g, self.root);
        let tree = o1tree::derived_tree(g, &d3).expect("honest labels give a tree");
        let mut tags = decompose(&tree, b).tags;
        if self.forgery != BlockForgery::None {
            // A continuation child of a non-root node.
            if let Some(c) = (0..g.n()).find(|&c| tags[c].cont && tree.parent[c] != Some(tree.root)) {
                tags[c].cont = false;
                tags[c].first = true;
                if self.forgery == BlockForgery::Inflated {
                    tags[c].sigma = b as u64 - 1;
                }
            }
        }
        (d3, tree, tags)
    }
}

impl Prover<BlockProtocol> for BlockProver {
    fn name(&self) -> String {
        match self.forgery {
            BlockForgery::None => "honest".into(),
            BlockForgery::Undersized => "undersized".into(),
            BlockForgery::Inflated => "inflated".into(),
        }
    }
    fn honest(&self) -> bool {
        self.forgery == BlockForgery::None
    }
    fn respond(&self, ctx: &mut ProverCtx<'_, BlockProtocol>) -> Vec<Msg> {
        let proto = ctx.proto;
        let (d3, tree, tags) = self.plan(ctx.graph, proto.codec.b);
        if ctx.round == 0 {
            return proto.first_msgs(&d3, &tags, |_, _| ());
        }
        let (coins, _) = proto.split_coins(&ctx.transcript[1]);
        proto.last_msgs(&tree, &coins, |_, _| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_protocol, RunOptions};
    use crate::netmodel::{generate, GraphKind};

    fn tree_of(kind: GraphKind, seed: u64) -> (NetworkGraph, SpanningTree) {
        let g = generate(&kind, seed).unwrap();
        let t = SpanningTree::bfs(&g, 0);
        (g, t)
    }

    #[test]
    fn default_block_parameter() {
        assert_eq!(default_block(1), 2);
        assert_eq!(default_block(64), 6);
        assert_eq!(default_block(65), 7);
        assert_eq!(default_block(16384), 14);
    }

    #[test]
    fn path_of_nine() {
        let (_, t) = tree_of(GraphKind::Path(9), 0);
        let d = decompose(&t, 3);
        d.invariants().unwrap();
        let sizes: Vec<usize> = d.blocks.iter().map(Block::size).collect();
        // Blocks share their roots, so nine nodes give four blocks of three.
        assert_eq!(sizes, vec![3, 3, 3, 3]);
    }

    #[test]
    fn star_center_roots_several_blocks() {
        let (_, t) = tree_of(GraphKind::Star(9), 0);
        let d = decompose(&t, 3);
        d.invariants().unwrap();
        assert!(d.rooted[0].len() >= 2);
        assert!(d.blocks.iter().all(|bl| bl.root == 0));
    }

    #[test]
    fn invariants_on_random_trees() {
        for b in [2, 3, 5] {
            for seed in 0..200 {
                let (_, t) = tree_of(GraphKind::RandomTree(1 + (seed as usize * 7) % 60), seed);
                let d = decompose(&t, b);
                d.invariants().unwrap_or_else(|e| panic!("b={b} seed={seed}: {e}"));
            }
        }
    }

    #[test]
    fn protocol_accepts_honest_and_rejects_forgeries() {
        for seed in 0..20 {
            let g = generate(&GraphKind::Gnp { n: 40, p: 0.08 }, seed).unwrap();
            let proto = BlockProtocol::new(4, 3);
            let run = run_protocol(&proto, &g, &BlockProver::honest(seed as usize % 40), seed, RunOptions::default())
                .unwrap();
            assert!(run.accept, "{:?}", run.rejections());
            for forgery in [BlockForgery::Undersized, BlockForgery::Inflated] {
                let pr = BlockProver { root: 0, forgery };
                let run = run_protocol(&proto, &g, &pr, seed, RunOptions::default()).unwrap();
                assert!(!run.accept);
            }
        }
    }

    #[test]
    fn tiny_graphs() {
        for n in 1..5 {
            let g = generate(&GraphKind::Path(n), 0).unwrap();
            let proto = BlockProtocol::for_graph(n);
            let run = run_protocol(&proto, &g, &BlockProver::honest(0), 1, RunOptions::default()).unwrap();
            assert!(run.accept, "n={n}: {:?}", run.rejections());
        }
    }
}
