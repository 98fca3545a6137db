//! Benchmarking engine for graph self-supervised learning.
//!
//! The crate bundles everything needed to compare graph contrastive learning
//! against simple baselines as a function of dataset size:
//!
//! - [`autodiff`]: dense-tensor reverse-mode differentiation and Adam
//! - [`data`]: graph containers, TU / OGB-CSV parsers, subsampling, folds
//! - [`synth`]: motif-plus-background synthetic dataset generator
//! - [`encoder`]: GIN / GINE message-passing encoders and the MolFingerprint MLP
//! - [`gcl`]: GraphCL (augmentations + InfoNCE) and InfoGraph training
//! - [`baselines`]: handcrafted graph statistics and the random-feature control
//! - [`probe`]: linear-SVM and logistic-regression embedding probes
//! - [`harness`]: sweep orchestration, delta tables, crossover and log fits
//!
//! All randomness flows through named deterministic streams ([`rng`]), so
//! every run is reproducible from its seed and labels alone.

pub mod autodiff;
pub mod baselines;
pub mod data;
pub mod encoder;
pub mod gcl;
pub mod harness;
pub mod probe;
pub mod rng;
pub mod synth;
