//! Sliding-window random linear network coding over GF(2^8), an on-the-fly
//! recoder for intermediate nodes, and a slotted two-hop erasure-channel
//! simulator comparing coding against selective-repeat ARQ.

pub mod channel;
pub mod cli;
pub mod codec;
pub mod gf256;
pub mod linalg;
pub mod metrics;
pub mod protocols;
pub mod recoder;
pub mod wire;
