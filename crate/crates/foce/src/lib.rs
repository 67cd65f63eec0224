//! Numerical toolkit for first-order (coarse) correlated equilibria of smooth games.
//!
//! The crate covers the full experimental loop:
//!
//! - [`geometry`]: compact convex action sets (boxes, simplices, balls, bounded
//!   polyhedra) with Euclidean projection, tangent/normal cone decomposition,
//!   acuteness classification and curvature metadata.
//! - [`games`]: smooth game data (gradient evaluators with magnitude/Lipschitz
//!   bounds), built-in games, and the multilinear extension of finite
//!   normal-form games.
//! - [`dynamics`]: projected gradient ascent with equal adaptive step sizes,
//!   the piecewise interpolating curve through the iterates, uniform sampling
//!   from the curve, and the partial-adversarial restricted curve.
//! - [`deviations`]: vector-field deviation families (affine, gradient-of-quadratic,
//!   named builders, custom), tangentiality checks and combination.
//! - [`regret`]: stationary and local first-order regret of distributions and
//!   trajectories against fields, plus the closed-form guarantee formulas.
//! - [`phi_regret`]: regret matching driven by fixed-point oracles, with the
//!   convex-quadratic oracle for affine families.
//! - [`certify`]: numerical verification of generalized Lyapunov dual
//!   certificates, normal-form equilibrium constraint checking, equivalence
//!   maps, smoothness parameters and a small dense LP for worst-case
//!   expectations over (C)CE.
//!
//! All values are immutable after construction and evaluation is pure, so
//! everything here is safe to share across threads.

pub mod certify;
pub mod deviations;
pub mod dynamics;
pub mod error;
pub mod games;
pub mod geometry;
pub(crate) mod lp;
pub mod phi_regret;
pub mod regret;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits, enough to round-trip f64.
///
/// Every artifact writer goes through this so that repeated runs with the
/// same inputs produce bit-identical files.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Compensated (Kahan) summation; keeps the error of long weight sums at the
/// order of one rounding step so 1e-12 normalization checks stay meaningful
/// for millions of terms.
pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}
