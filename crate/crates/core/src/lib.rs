//! Rank-1 canonically decomposed classifiers for tensor-valued samples.
//!
//! * [`tensor`]: dense tensors in first-index-fastest order, matricization,
//!   Kronecker and Khatri-Rao products, CP factor sets and the transformed
//!   inputs that reduce a rank-1 block to an ordinary regression.
//! * [`linear`]: multinomial logistic regression with rank-1 class weights
//!   (and the vectorized baseline), trained block by block.
//! * [`fnn`]: one-hidden-layer sigmoid network with rank-1 hidden weights
//!   (and the dense reference network).
//! * [`bands`]: spectral band ranking from a trained linear model.
//! * [`data`]: hyperspectral cubes, labels, patches, splits and file formats.
//! * [`synthetic`]: planted-signal generators with known answers.

pub mod bands;
pub mod data;
pub mod error;
pub mod fnn;
pub mod linear;
pub mod preprocess;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::{CpFactors, DenseTensor};
pub use train::{TrainConfig, TrainTrace};
