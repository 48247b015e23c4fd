//! Wavelet-based functional ANOVA: transform replicate-averaged treatment
//! contrasts, hard-threshold the coefficients and test the pooled energy κ
//! against its null law.

pub mod dist;
pub mod dwt;
pub mod error;
pub mod kappa;
pub mod mc;
pub mod profiles;
pub mod shrink;

pub use dist::{KappaDist, NullLaw};
pub use dwt::{dwt_forward, dwt_inverse, Decomposition, Wavelet};
pub use error::{Error, Result};
pub use kappa::{compute_kappa, run_test, KappaStatistic, TestConfig, TestMethod, TestReport};
pub use profiles::{load_profiles, PadMode, ProfileSet, RhoPolicy};
