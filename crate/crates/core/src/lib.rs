//! Link-level Monte Carlo simulator for the uplink of a cooperative DS-CDMA
//! network. Decode-and-forward relays hold decoded blocks in finite FIFO
//! buffers, and a selected relay pair forwards them to the destination with
//! a distributed Alamouti code.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`]: spreading codes, flat-fading channels, noise and the
//!   chip-rate receive equations for both hops.
//! * [`detector`]: RAKE and linear MMSE receive filters and the BPSK slicer.
//! * [`dstc`]: Alamouti encoding at a relay pair and block detection at the
//!   destination.
//! * [`selection`]: pair SINR evaluation, the link table and the pluggable
//!   relay-pair selectors (exhaustive, greedy, random, fixed).
//! * [`buffer`]: relay buffers and the fixed / SNR-driven / power-driven
//!   capacity policies.
//! * [`protocol`]: the epoch state machine, the registered transmission
//!   schemes and the BER/delay sweep harness.
//! * [`config`] and [`report`]: the key=value configuration format and the
//!   CSV/JSON result encoders used by the `bufdstc` binary.

pub mod buffer;
pub mod config;
pub mod detector;
pub mod dstc;
pub mod linalg;
pub mod protocol;
pub mod report;
pub mod selection;
pub mod signal;

pub use num_complex::Complex64;

/// Complex chip-rate vector.
pub type CVec = Vec<Complex64>;
