//! Losses, Bayes risk, limiting linear classifiers and diagnostics for
//! binary classification when the minority prior is vanishingly small.

mod error;

pub mod bayes;
pub mod diagnostics;
pub mod gaussmix;
pub mod limits;
pub mod loss;
pub mod math;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
pub use gaussmix::{Dataset, Gaussian, GaussianMixture, LabeledSample, Task};
pub use limits::LinearClassifier;
pub use loss::{Label, Link, LossFamily, LossSpec};
