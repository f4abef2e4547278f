//! Protocols below the logarithmic barrier: an O(1)-bit spanning tree,
//! degree-proportional payloads, block decompositions, and the
//! applications built on them.

pub mod blocks;
pub mod clique;
pub mod loglog;
pub mod o1tree;
pub mod redistribute;
pub mod superproto;
