//! Degree-proportional payloads on a tree.
//!
//! A node with Δ children may need a payload of Δ·β bits. Its children carry
//! one β-bit fragment each and forward it in the exchange; a leaf carries its
//! own single fragment. Every node then receives at most 2β bits from the
//! prover: its parent's fragment, plus its own when it is a leaf.

use thiserror::Error;

use crate::treelabel::SpanningTree;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("payload of node {node} has {bits} bits, capacity is {cap}")]
    TooLarge { node: usize, bits: usize, cap: usize },
    #[error("expected {expected} payloads, got {got}")]
    Length { expected: usize, got: usize },
}

/// One piece of a node's payload and the node that physically receives it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub owner: usize,
    pub index: usize,
    pub carrier: usize,
    /// Bit range `[start, end)` of the owner's payload.
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliveryPlan {
    pub beta: usize,
    pub fragments: Vec<Fragment>,
}

/// Capacity of a node's logical payload.
pub fn capacity(tree: &SpanningTree, u: usize, beta: usize) -> usize {
    tree.children[u].len().max(1) * beta
}

/// Splits every payload into β-bit fragments: fragment i of a non-leaf goes
/// to its i-th child in port order, a leaf keeps its only fragment.
pub fn plan(tree: &SpanningTree, payload_bits: &[usize], beta: usize) -> Result<DeliveryPlan, PlanError> {
    let n = tree.n();
    if payload_bits.len() != n {
        return Err(PlanError::Length { expected: n, got: payload_bits.len() });
    }
    let mut fragments = Vec::new();
    for (u, &bits) in payload_bits.iter().enumerate() {
        let cap = capacity(tree, u, beta);
        if bits > cap {
            return Err(PlanError::TooLarge { node: u, bits, cap });
        }
        let kids = &tree.children[u];
        for (index, start) in (0..bits).step_by(beta.max(1)).enumerate() {
            let carrier = if kids.is_empty() { u } else { kids[index] };
            fragments.push(Fragment { owner: u, index, carrier, start, end: (start + beta).min(bits) });
        }
    }
    Ok(DeliveryPlan { beta, fragments })
}

impl DeliveryPlan {
    /// Bits each node receives from the prover under the plan.
    pub fn physical_bits(&self, n: usize) -> Vec<usize> {
        let mut bits = vec![0; n];
        for f in &self.fragments {
            bits[f.carrier] += f.end - f.start;
        }
        bits
    }

    /// What each carrier receives: `(owner, index, bits)`.
    pub fn deliver(&self, payloads: &[Vec<bool>]) -> Vec<Vec<(usize, usize, Vec<bool>)>> {
        let n = payloads.len();
        let mut out = vec![Vec::new(); n];
        for f in &self.fragments {
            out[f.carrier].push((f.owner, f.index, payloads[f.owner][f.start..f.end].to_vec()));
        }
        out
    }

    /// Each owner's payload rebuilt from what its carriers forward.
    pub fn reassemble(&self, delivered: &[Vec<(usize, usize, Vec<bool>)>]) -> Vec<Vec<bool>> {
        let n = delivered.len();
        let mut parts: Vec<Vec<(usize, Vec<bool>)>> = vec![Vec::new(); n];
        for got in delivered {
            for (owner, index, bits) in got {
                parts[*owner].push((*index, bits.clone()));
            }
        }
        parts
            .into_iter()
            .map(|mut p| {
                p.sort_by_key(|(i, _)| *i);
                p.into_iter().flat_map(|(_, b)| b).collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{generate, GraphKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn star_center_payload_rides_on_children() {
        let g = generate(&GraphKind::Star(7), 0).unwrap();
        let tree = SpanningTree::bfs(&g, 0);
        let mut bits = vec![0; 7];
        bits[0] = 24;
        let plan = plan(&tree, &bits, 4).unwrap();
        let carriers: Vec<usize> = plan.fragments.iter().map(|f| f.carrier).collect();
        assert_eq!(carriers, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(plan.physical_bits(7)[0], 0);
        assert!(matches!(
            super::plan(&tree, &[25, 0, 0, 0, 0, 0, 0], 4),
            Err(PlanError::TooLarge { node: 0, .. })
        ));
    }

    #[test]
    fn path_plan_is_identity_plus_parent() {
        let g = generate(&GraphKind::Path(5), 0).unwrap();
        let tree = SpanningTree::bfs(&g, 0);
        let plan = plan(&tree, &[3; 5], 3).unwrap();
        for f in &plan.fragments {
            let expect = if f.owner == 4 { 4 } else { f.owner + 1 };
            assert_eq!(f.carrier, expect);
        }
        assert_eq!(plan.physical_bits(5), vec![0, 3, 3, 3, 6]);
    }

    #[test]
    fn random_trees_stay_within_two_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let beta = 5;
        for seed in 0..100 {
            let g = generate(&GraphKind::RandomTree(40), seed).unwrap();
            let tree = SpanningTree::bfs(&g, 0);
            let bits: Vec<usize> = (0..40).map(|u| rng.gen_range(0..=capacity(&tree, u, beta))).collect();
            let payloads: Vec<Vec<bool>> = bits.iter().map(|&b| (0..b).map(|_| rng.gen()).collect()).collect();
            let plan = plan(&tree, &bits, beta).unwrap();
            assert!(plan.physical_bits(40).iter().all(|&b| b <= 2 * beta));
            assert_eq!(plan.reassemble(&plan.deliver(&payloads)), payloads);
        }
    }
}
