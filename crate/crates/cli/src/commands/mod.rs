//! Command implementations.
//!
//! Every command follows the same life cycle: load and validate the config,
//! derive all randomness from the master seed, compute rows (possibly in
//! parallel over a fixed index range), and emit CSV tables whose bytes
//! depend only on (config, seed).

pub mod lower_bound;
pub mod mse;
pub mod rates;
pub mod risk;
pub mod verify_lemmas;
