//! Kernel sum-of-squares densities `p_B(x) = k̃_xᵀ B k̃_x` fitted to samples by
//! minimizing a projected maximum mean discrepancy.
//!
//! The pipeline is: pick support points, compute the moment matrix `W` and
//! tensor `u` of the kernel sections ([`moments`]), then minimize over the
//! trace-one spectrahedron ([`optim`], [`psdproj`]) and read the result back
//! as a normalized [`SosDensityModel`].

pub mod counterexample;
pub mod data;
pub mod error;
pub mod kernel;
pub mod moments;
pub mod optim;
pub mod psdproj;
pub mod quadrature;
pub mod sosmodel;

pub use error::{Error, Result};
pub use kernel::{EmpiricalDistribution, Kernel, KernelFamily, PointSet};
pub use moments::{MomentCache, MomentData, MomentOptions, ReferenceMeasure};
pub use optim::{fit, fit_with, FitConfig, FitContext, FitReport, StepSize};
pub use sosmodel::{select_support, EmbeddingTarget, SosDensityModel, SupportSet};
