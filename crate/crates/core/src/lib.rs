//! Takagi power class `S_p(x) = sum_{n>=0} (T_0(2^n x) / 2^n)^p`.
//!
//! Certified evaluation with explicit error radii, exact closed forms at
//! rational points, machine checks of the functional equations and
//! inequalities the family satisfies, and three independent ways to locate
//! its global maximum for `0 < p < 1`.

pub mod certified;
pub mod error;
pub mod exact_rational;
pub mod holder_cert;
pub mod identities;
pub mod maximizer;
pub mod par;
pub mod precision;
pub mod rational;
pub mod sampling;
pub mod takagi_core;

pub use certified::CertifiedValue;
pub use error::{Error, Result};
pub use precision::{PrecisionCtx, Real};
pub use rational::{Point, RationalPoint};
pub use takagi_core::{eval_sp, t0, tail_bound, PowerParam, Regime};
