//! Desk-scale digital-twin pipeline for LoS/NLoS classification.
//!
//! The crate builds a synthetic urban scene, traces specular multipath with
//! the image method, synthesizes massive-MIMO OFDM channel responses, turns
//! them into angle-delay channel power matrices, and trains/evaluates four
//! classifier families (linear/RBF SVM, random forest, a residual CNN, and an
//! autoencoder CNN) on the LoS/NLoS labels the twin provides. Training runs
//! on twin ground truth; evaluation runs on least-squares channel estimates
//! from a simulated noisy uplink, swept over SNR.
//!
//! Modules follow the processing chain:
//!
//! * [`geometry`] - scene, ray/box tests, image-method path tracing, UE grid
//! * [`channel`] - array response, OFDM channel synthesis, uplink + LS estimate
//! * [`adcpm`] - angle-delay transform, channel power matrix, max-pooling
//! * [`features`] - hand-crafted multipath features and MPC recovery
//! * [`classic_ml`] - SVM (SMO) and random forest, k-fold utilities
//! * [`deepnet`] - from-scratch CNN stack: layers, autodiff, training, AWGN
//!   augmentation
//! * [`evalkit`] - accuracy, ROC/AUC, analytic FLOPs, SNR sweeps
//! * [`model`] - unified trained-model artifact with checkpoint i/o
//! * [`pipeline`] - dataset container, manifests, experiment orchestration

pub mod adcpm;
pub mod channel;
pub mod classic_ml;
pub mod deepnet;
pub mod error;
pub mod evalkit;
pub mod features;
pub mod geometry;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::Vec3;
