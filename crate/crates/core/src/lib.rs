//! Edge-enhanced Bayesian graph convolutional network for classifying rumor
//! cascades.
//!
//! A claim's cascade is turned into a top-down and a bottom-up adjacency
//! over per-post features. Before each of two graph convolutions, every edge
//! gets a learned gate from the absolute difference of its endpoint
//! features, so unreliable edges can be weakened. A variational head over the
//! latent relation types ties the gates to a consistency term in the loss.
//! Gradients come from the small reverse-mode tape in [`tape`].
//!
//! Runnable entry points live in `examples/`:
//!
//! - `generate_cascades`: synthetic corpus with class-dependent cascades
//! - `tfidf_features`: vocabulary fitting and TF-IDF rows
//! - `gradient_check`: tape gradients against central differences
//! - `train_ebgcn`: hold-out training and per-class scores
//! - `cross_validation`: five-fold and leave-one-event-out runs
//! - `early_detection`: accuracy on truncated cascades
//! - `robustness`: EBGCN and the gate-free ablation under rewired edges
//! - `edge_weights`: learned gates of test cascades
//! - `sweep`: accuracy over `T` and `γ`
//! - `convert_ma_tree`: tree directories to canonical JSON lines
//!
//! The `ebgcn` binary wraps the same operations as subcommands; see [`cli`].

pub mod cascade;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod features;
pub mod gradcheck;
pub mod io;
pub mod model;
pub mod objective;
pub mod params;
pub mod seed;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
