//! Kernel-based graph convolutional networks.
//!
//! Convolutional filters are expansions over learnable support vectors in the
//! feature space of a positive definite kernel; evaluating a filter on a node
//! only needs kernel values, never the feature map itself. The crate also
//! carries the baseline spatial GCN fed with kernel PCA features, a
//! skeleton-sequence featurizer, and the training harness.

pub mod error;
pub mod graph;
pub mod kernels;
pub mod kpca;
pub mod model;
pub mod numcore;
pub mod par;
pub mod skeleton;
pub mod train;

pub use error::{Error, ErrorClass, Result};
