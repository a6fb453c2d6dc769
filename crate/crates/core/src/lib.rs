//! Decoding-order selection for downlink power-domain NOMA with untrusted users.
//!
//! Every user in the cell is treated as a potential eavesdropper on every
//! other user. The crate evaluates per-user secrecy rates under arbitrary SIC
//! decoding orders, enumerates and filters the secure orders, builds the
//! sort-based policy orders, and drives seeded Monte Carlo studies comparing
//! the policy against exhaustive search and the secure-set average.
//!
//! Module map:
//!
//! - [`system`]: parameters, channel sampling, power allocation, SINR and
//!   secrecy-rate evaluation.
//! - [`orders`]: the decoding-order matrix, ranking, enumeration and the
//!   secure / favourable predicates.
//! - [`optimizer`]: max-min search, the benchmark average and beta sweeps.
//! - [`experiments`]: the seeded trial harness and CSV/JSON export.
//! - [`cli`]: the command-line front end.
//!
//! User indices are zero-based throughout the library (user `0` is the
//! strongest). One-based labels appear only when parsing or printing a
//! decoding-order matrix.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod optimizer;
pub mod orders;
pub mod system;

pub use error::{Error, Result};
pub use orders::{DecodingOrder, OrderId};
pub use system::{ChannelRealization, PowerAllocation, SecrecyEvaluation, SystemParams};
