//! Label smoothing through the information-bottleneck lens.
//!
//! A classifier's output distribution `p(T|X)` is treated as a bottleneck
//! representation of the input. Everything here works on finite alphabets
//! and empirical joints, so information quantities are computed exactly:
//!
//! - [`dist`]: entropy, KL, mutual information and information-plane points.
//! - [`dataset`]: count-based empirical joints, generators and CSV formats.
//! - [`objectives`]: CE, label smoothing, confidence penalty and VIB losses.
//! - [`curve`]: the empirical IB curve and the erasure construction.
//! - [`solver`]: direct IB-Lagrangian minimization with a brute-force oracle.
//! - [`trainer`]: tabular softmax models trained under CE / LS / CP.
//! - [`probe`]: a small MLP and linear probes for factor leakage.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod curve;
pub mod dataset;
pub mod dist;
pub mod error;
pub mod objectives;
pub mod optim;
pub mod probe;
pub mod solver;
pub mod trainer;

pub use channel::Channel;
pub use dataset::Dataset;
pub use dist::{Dist, InfoPoint, Joint};
pub use error::{Error, Result};
