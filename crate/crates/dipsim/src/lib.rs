//! Simulator for distributed interactive proofs on port-numbered networks.

pub mod engine;
pub mod fiatshamir;
pub mod field;
pub mod fieldset;
pub mod netmodel;
pub mod ramcompile;
pub mod repeat;
pub mod sizeproto;
pub mod smallproof;
pub mod treelabel;
