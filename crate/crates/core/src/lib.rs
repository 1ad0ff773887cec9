//! Quantile regression for positive responses with log-symmetric laws.
//!
//! [`regress::RegressionModel`] fits `ln Q_i = x_iᵀβ` and `ln φ_i = w_iᵀτ` by
//! maximum likelihood. Hypothesis tests live in [`inference`], residuals in
//! [`diagnostics`].

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod kernels;
pub mod montecarlo;
pub mod optim;
pub mod parallel;
pub mod qls;
pub mod quadrature;
pub mod regress;
pub mod special;
