//! Summation of divergent series of fuzzy numbers by (φ)-methods, with
//! Tauberian diagnostics and level-wise Fourier tools.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod accel;
pub mod expr;
pub mod fourier;
pub mod fuzzy;
pub mod harness;
pub mod methods;
pub mod series;
pub mod special;
pub mod tauberian;

pub use fuzzy::{AlphaGrid, FuzzyError, FuzzyNumber, Interval};
pub use methods::{
    phi_limit, phi_transform, validate_phi, Accel, Extrapolate, LambdaSeq, LimitOptions, MethodError, MethodKind,
    MethodSpec, PhiMethod, Status, SummationResult, TransformOptions,
};
pub use series::{FuzzySeries, SeriesError};
