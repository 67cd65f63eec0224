//! Numerical verification of generalized Lyapunov dual certificates,
//! normal-form equilibrium constraint checking, equivalence maps between
//! first-order local regret and normal-form constraints, smoothness
//! parameters, and a small dense LP for worst-case expectations over (C)CE.
//!
//! Certificates are audited on grids plus seeded random samples, never proven
//! symbolically; a report states its resolution, so a failure at a finer
//! resolution remains possible. All four dual programs are normalized to
//! "margin(x) >= 0 everywhere <=> feasible" and reports carry the program id.

use crate::deviations::{FieldFamily, VectorField};
use crate::dynamics::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::games::{NormalFormGame, SmoothGame, StrategyProfile};
use crate::geometry::SetKind;
use crate::lp;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::sync::Arc;

pub type ValueFn = Arc<dyn Fn(&StrategyProfile) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&StrategyProfile) -> Vec<DVector<f64>> + Send + Sync>;

/// A registered analytic function with a gradient evaluator and a declared
/// gradient magnitude bound.
#[derive(Clone)]
pub struct AnalyticFunction {
    pub label: String,
    pub value: ValueFn,
    pub gradient: GradFn,
    pub grad_bound: f64,
}

impl std::fmt::Debug for AnalyticFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticFunction")
            .field("label", &self.label)
            .field("grad_bound", &self.grad_bound)
            .finish()
    }
}

/// Which dual program the certificate claims feasibility for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualProgram {
    /// Coarse stationary: `gamma + Σ_i <∇_i h, Π_TC ∇_i u_i> <= q(x)`.
    StationaryCoarse,
    /// Coarse local (tangential h): `gamma - Σ_i <∇_i h, ∇_i u_i> <= q(x)`.
    LocalCoarse,
    /// Field stationary: `gamma + Σ_{f,i} mu_f <f_i, Π_TC ∇_i u_i> <= q(x)`.
    StationaryField,
    /// Field local (`mu >= 0`): `-gamma + Σ_{f,i} mu_f <f_i, ∇_i u_i> >= -q(x)`.
    LocalField,
}

impl DualProgram {
    pub fn as_str(&self) -> &'static str {
        match self {
            DualProgram::StationaryCoarse => "stationary-coarse",
            DualProgram::LocalCoarse => "local-coarse",
            DualProgram::StationaryField => "stationary-field",
            DualProgram::LocalField => "local-field",
        }
    }
}

/// Deviation part of a certificate: a single function's gradient field, or a
/// weighted combination over a family.
#[derive(Clone, Debug)]
pub enum CertificateKind {
    /// A gradient field given as a coarse [`VectorField`].
    CoarseField(VectorField),
    /// A registered analytic function.
    CoarseAnalytic(AnalyticFunction),
    /// `Σ_f mu_f f`; local programs require `mu >= 0`.
    FieldCombination {
        family: FieldFamily,
        weights: Vec<f64>,
    },
}

/// A dual solution `(gamma, deviation)` to be audited against a performance
/// metric `q`.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub gamma: f64,
    pub program: DualProgram,
}

/// Performance metric `q : X -> R` with a declared Lipschitz bound.
#[derive(Clone)]
pub struct PerformanceMetric {
    pub label: String,
    pub eval: ValueFn,
    pub lipschitz: f64,
}

impl std::fmt::Debug for PerformanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PerformanceMetric")
            .field("label", &self.label)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

/// Grid specification: a per-dimension resolution (box products only) plus
/// seeded random samples.
#[derive(Clone, Debug)]
pub struct GridSpec {
    pub resolution: Option<usize>,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub program: DualProgram,
    pub gamma: f64,
    pub min_margin: f64,
    pub argmin: Vec<f64>,
    pub grid_desc: String,
    pub points_checked: usize,
}

impl CertificateReport {
    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "program = {}", self.program.as_str())?;
        writeln!(w, "gamma = {}", crate::fmt_f64(self.gamma))?;
        writeln!(w, "min_margin = {}", crate::fmt_f64(self.min_margin))?;
        let coords: Vec<String> = self.argmin.iter().map(|v| crate::fmt_f64(*v)).collect();
        writeln!(w, "argmin = {}", coords.join(","))?;
        writeln!(w, "grid = {}", self.grid_desc)?;
        writeln!(w, "points_checked = {}", self.points_checked)?;
        Ok(())
    }
}

fn deviation_blocks(kind: &CertificateKind, x: &StrategyProfile) -> Result<Vec<DVector<f64>>> {
    match kind {
        CertificateKind::CoarseField(f) => Ok(f.evaluate(x)),
        CertificateKind::CoarseAnalytic(a) => Ok((a.gradient)(x)),
        CertificateKind::FieldCombination { family, weights } => {
            if weights.len() != family.len() {
                return Err(Error::DimensionMismatch {
                    expected: family.len(),
                    got: weights.len(),
                });
            }
            let dims = family.fields()[0].dims().to_vec();
            let mut acc: Vec<DVector<f64>> = dims.iter().map(|&d| DVector::zeros(d)).collect();
            for (f, &w) in family.fields().iter().zip(weights) {
                if w != 0.0 {
                    for (i, b) in f.evaluate(x).into_iter().enumerate() {
                        acc[i] += b * w;
                    }
                }
            }
            Ok(acc)
        }
    }
}

/// Pointwise margin of the certificate's dual constraint at `x`; the
/// certificate is feasible at the audited resolution iff all margins are
/// nonnegative (within the caller's tolerance).
pub fn certificate_margin(
    game: &SmoothGame,
    cert: &Certificate,
    q: &PerformanceMetric,
    x: &StrategyProfile,
) -> Result<f64> {
    if let (DualProgram::LocalField | DualProgram::LocalCoarse, CertificateKind::FieldCombination { weights, .. }) =
        (cert.program, &cert.kind)
    {
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidInput(
                "local-program certificates need nonnegative weights".into(),
            ));
        }
    }
    match (cert.program, &cert.kind) {
        (DualProgram::StationaryCoarse | DualProgram::LocalCoarse, CertificateKind::FieldCombination { .. }) => {
            return Err(Error::InvalidInput(
                "coarse programs take a single function, not a field combination".into(),
            ));
        }
        (DualProgram::StationaryField | DualProgram::LocalField, CertificateKind::CoarseField(_) | CertificateKind::CoarseAnalytic(_)) => {
            return Err(Error::InvalidInput(
                "field programs take a field combination".into(),
            ));
        }
        _ => {}
    }
    let dev = deviation_blocks(&cert.kind, x)?;
    let mut pairing = 0.0;
    for (i, set) in game.sets().iter().enumerate() {
        let g = game.gradient(i, x);
        match cert.program {
            DualProgram::StationaryCoarse | DualProgram::StationaryField => {
                let tang = set.cone_decompose(x.block(i), &g)?.tangent;
                pairing += dev[i].dot(&tang);
            }
            DualProgram::LocalCoarse | DualProgram::LocalField => {
                pairing -= dev[i].dot(&g);
            }
        }
    }
    Ok((q.eval)(x) - cert.gamma - pairing)
}

/// Evaluates the margin over a deterministic grid (box products) plus seeded
/// random samples and returns the worst point found.
pub fn check_certificate(
    game: &SmoothGame,
    cert: &Certificate,
    q: &PerformanceMetric,
    grid: &GridSpec,
) -> Result<CertificateReport> {
    let mut min_margin = f64::INFINITY;
    let mut argmin: Option<StrategyProfile> = None;
    let mut points = 0usize;
    let consider = |x: StrategyProfile,
                        min_margin: &mut f64,
                        argmin: &mut Option<StrategyProfile>|
     -> Result<()> {
        let m = certificate_margin(game, cert, q, &x)?;
        if m < *min_margin {
            *min_margin = m;
            *argmin = Some(x);
        }
        Ok(())
    };

    let all_boxes = game
        .sets()
        .iter()
        .all(|s| matches!(s.kind(), SetKind::Box { .. }));
    let mut grid_desc = String::new();
    if let Some(res) = grid.resolution {
        if res < 2 {
            return Err(Error::InvalidInput("grid resolution must be >= 2".into()));
        }
        if !all_boxes {
            return Err(Error::InvalidInput(
                "deterministic grids need box action sets; use samples".into(),
            ));
        }
        let dims = game.block_dims();
        let total_dim: usize = dims.iter().sum();
        let total_points = (res as f64).powi(total_dim as i32);
        if total_points > 2e7 {
            return Err(Error::InvalidInput(format!(
                "grid of {res}^{total_dim} points is too large"
            )));
        }
        let mut lows = Vec::new();
        let mut highs = Vec::new();
        for set in game.sets() {
            if let SetKind::Box { lower, upper } = set.kind() {
                lows.extend(lower.iter().copied());
                highs.extend(upper.iter().copied());
            }
        }
        let mut idx = vec![0usize; total_dim];
        loop {
            let flat = DVector::from_fn(total_dim, |j, _| {
                lows[j] + (highs[j] - lows[j]) * idx[j] as f64 / (res - 1) as f64
            });
            let x = StrategyProfile::from_flat(&dims, &flat)?;
            consider(x, &mut min_margin, &mut argmin)?;
            points += 1;
            let mut carry = 0;
            while carry < total_dim {
                idx[carry] += 1;
                if idx[carry] < res {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
            if carry == total_dim {
                break;
            }
        }
        grid_desc.push_str(&format!("{res}^{total_dim}"));
    }
    if grid.samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
        for k in 0..grid.samples {
            let x = StrategyProfile::new(
                game.sets()
                    .iter()
                    .map(|s| {
                        if k % 2 == 0 {
                            s.sample_boundary(&mut rng)
                        } else {
                            s.sample_interior(&mut rng)
                        }
                    })
                    .collect(),
            );
            consider(x, &mut min_margin, &mut argmin)?;
            points += 1;
        }
        if !grid_desc.is_empty() {
            grid_desc.push('+');
        }
        grid_desc.push_str(&format!("{}r(seed={})", grid.samples, grid.seed));
    }
    if points == 0 {
        return Err(Error::InvalidInput("empty grid specification".into()));
    }
    Ok(CertificateReport {
        program: cert.program,
        gamma: cert.gamma,
        min_margin,
        argmin: argmin
            .map(|x| x.flatten().iter().copied().collect())
            .unwrap_or_default(),
        grid_desc,
        points_checked: points,
    })
}

/// The three-branch radius certificate function for the rotation game on
/// `[-1,1]^2`: zero on the unit disc, and outside it
/// `-(m1 (r-1)^2 / (1 + m1 (r-1))) * 10 * angle-branch`, where the branch is
/// `arctan(x1/x2)` when `x1 x2 > 0` and `arctan(-x2/x1)` otherwise. The
/// factor `(r-1)^2` makes it continuously differentiable across the `r = 1`
/// seam, and its derivative along the free rotational flow is
/// `10 m1 (r-1)^2 / (1 + m1 (r-1))`, independent of the angular branch.
pub fn pennies_lyapunov(m1: f64) -> AnalyticFunction {
    const M2: f64 = 10.0;
    let rho = move |r: f64| m1 * (r - 1.0).powi(2) / (1.0 + m1 * (r - 1.0));
    let rho_prime = move |r: f64| {
        let s = m1 * (r - 1.0);
        m1 * (r - 1.0) * (2.0 + s) / (1.0 + s).powi(2)
    };
    let branch = |x1: f64, x2: f64| {
        if x1 * x2 > 0.0 {
            (x1 / x2).atan()
        } else {
            (-x2 / x1).atan()
        }
    };
    let value: ValueFn = Arc::new(move |x: &StrategyProfile| {
        let (x1, x2) = (x.block(0)[0], x.block(1)[0]);
        let r = x1.hypot(x2);
        if r <= 1.0 {
            0.0
        } else {
            -rho(r) * M2 * branch(x1, x2)
        }
    });
    let gradient: GradFn = Arc::new(move |x: &StrategyProfile| {
        let (x1, x2) = (x.block(0)[0], x.block(1)[0]);
        let r = x1.hypot(x2);
        if r <= 1.0 {
            return vec![DVector::zeros(1), DVector::zeros(1)];
        }
        let a = branch(x1, x2);
        let rp = rho_prime(r);
        let rh = rho(r);
        // ∇r = x/r; the angular branches share ∇A = (x2, -x1)/r^2.
        let g1 = -M2 * (rp * a * x1 / r + rh * x2 / (r * r));
        let g2 = -M2 * (rp * a * x2 / r + rh * (-x1) / (r * r));
        vec![DVector::from_element(1, g1), DVector::from_element(1, g2)]
    });
    AnalyticFunction {
        label: format!("pennies_lyapunov(m1={m1})"),
        value,
        gradient,
        grad_bound: M2 * (std::f64::consts::FRAC_PI_2 + std::f64::consts::SQRT_2 - 1.0),
    }
}

/// The radius bound the certificate proves: `delta = 2 / (5 m1 - 2)`.
pub fn pennies_lyapunov_delta(m1: f64) -> f64 {
    2.0 / (5.0 * m1 - 2.0)
}

/// Rotational-invariance certificate for the rotation game: for a metric
/// `q(x) = p(r) sin(k θ + φ)` the function `ℓ = -p(r) cos(k θ + φ) / k` has
/// `dℓ/dτ = q` along the free flow, and adding `a · pennies_lyapunov(m1)`
/// compensates the edge regions. Returns the combined function and the
/// metric; a feasible `gamma` for the pair comes out of a grid audit rather
/// than the asymptotic large-`m1` argument.
///
/// `p` must vanish at 0 so the gradient stays finite at the origin;
/// `p_prime` is its derivative and `p_prime_bound` a magnitude bound for it
/// over `r in [0, sqrt(2)]`.
#[allow(clippy::too_many_arguments)]
pub fn pennies_rotational_certificate(
    p: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    p_prime: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    p_prime_bound: f64,
    k: i32,
    phi: f64,
    m1: f64,
    a: f64,
) -> (AnalyticFunction, PerformanceMetric) {
    if k == 0 {
        panic!("frequency k must be nonzero");
    }
    let base = pennies_lyapunov(m1);
    let base_value = base.value.clone();
    let base_grad = base.gradient.clone();
    let kf = k as f64;

    let p_v = p.clone();
    let value: ValueFn = Arc::new(move |x: &StrategyProfile| {
        let (x1, x2) = (x.block(0)[0], x.block(1)[0]);
        let r = x1.hypot(x2);
        let theta = x2.atan2(x1);
        -p_v(r) * (kf * theta + phi).cos() / kf + a * base_value(x)
    });
    let p_g = p.clone();
    let pp_g = p_prime.clone();
    let gradient: GradFn = Arc::new(move |x: &StrategyProfile| {
        let (x1, x2) = (x.block(0)[0], x.block(1)[0]);
        let r = x1.hypot(x2);
        let mut out = base_grad(x);
        if r > 0.0 {
            let theta = x2.atan2(x1);
            let (s, c) = (kf * theta + phi).sin_cos();
            // ∇ℓ = -p' cos(kθ+φ)/k (x/r) + p sin(kθ+φ) ∇θ, ∇θ = (-x2, x1)/r².
            let radial = -pp_g(r) * c / kf;
            let angular = p_g(r) * s / (r * r);
            out[0][0] = a * out[0][0] + radial * x1 / r + angular * (-x2);
            out[1][0] = a * out[1][0] + radial * x2 / r + angular * x1;
        } else {
            out[0][0] *= a;
            out[1][0] *= a;
        }
        vec![
            DVector::from_element(1, out[0][0]),
            DVector::from_element(1, out[1][0]),
        ]
    });
    // p(0) = 0 gives p(r)/r <= sup|p'| by the mean value theorem, which
    // bounds the angular gradient parts.
    let combined = AnalyticFunction {
        label: format!("rotational(k={k},phi={phi},m1={m1},a={a})"),
        value,
        gradient,
        grad_bound: p_prime_bound / kf.abs() + p_prime_bound + a.abs() * base.grad_bound,
    };
    let p_q = p.clone();
    let metric = PerformanceMetric {
        label: format!("rotational_q(k={k},phi={phi})"),
        eval: Arc::new(move |x: &StrategyProfile| {
            let (x1, x2) = (x.block(0)[0], x.block(1)[0]);
            let r = x1.hypot(x2);
            let theta = x2.atan2(x1);
            p_q(r) * (kf * theta + phi).sin()
        }),
        lipschitz: p_prime_bound * (1.0 + kf.abs()),
    };
    (combined, metric)
}

/// Probability distribution over pure action profiles (row-major order).
#[derive(Clone, Debug)]
pub struct ActionDistribution {
    action_counts: Vec<usize>,
    probs: Vec<f64>,
}

impl ActionDistribution {
    pub fn new(action_counts: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let total: usize = action_counts.iter().product();
        if probs.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: probs.len(),
            });
        }
        if probs.iter().any(|p| *p < -1e-12) {
            return Err(Error::InvalidInput("negative probability".into()));
        }
        let sum = crate::kahan_sum(probs.iter().copied());
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, expected 1 within 1e-12"
            )));
        }
        Ok(Self {
            action_counts,
            probs,
        })
    }

    pub fn prob(&self, profile: &[usize]) -> f64 {
        let mut idx = 0;
        for (i, &a) in profile.iter().enumerate() {
            idx = idx * self.action_counts[i] + a;
        }
        self.probs[idx]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }
}

/// Pushes an empirical distribution over mixed profiles to an action
/// distribution: `sigma'(a) = Σ_samples w Π_j x_j(a_j)`.
pub fn induce_action_distribution(
    dist: &EmpiricalDistribution,
    nf: &NormalFormGame,
) -> Result<ActionDistribution> {
    let counts = nf.action_counts().to_vec();
    for (x, _) in dist.atoms() {
        for (i, &c) in counts.iter().enumerate() {
            let b = x.block(i);
            if b.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: b.len(),
                });
            }
            if b.iter().any(|v| *v < -1e-9) || (b.sum() - 1.0).abs() > 1e-9 {
                return Err(Error::Infeasible(format!(
                    "sample block {i} is not on the simplex"
                )));
            }
        }
    }
    let mut probs = vec![0.0f64; nf.num_profiles()];
    for (x, w) in dist.atoms() {
        for (idx, profile) in nf.profiles().enumerate() {
            let mut p = *w;
            for (j, &aj) in profile.iter().enumerate() {
                p *= x.block(j)[aj].max(0.0);
            }
            probs[idx] += p;
        }
    }
    // Normalize away sampling round-off before validating.
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Numerical(format!(
            "induced probabilities sum to {sum}"
        )));
    }
    for p in &mut probs {
        *p /= sum;
    }
    ActionDistribution::new(nf.action_counts().to_vec(), probs)
}

#[derive(Clone, Debug)]
pub enum EquilibriumMode {
    Cce,
    Ce,
    /// Aggregated constraint against one reference profile.
    AverageCce(Vec<usize>),
}

impl EquilibriumMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EquilibriumMode::Cce => "cce",
            EquilibriumMode::Ce => "ce",
            EquilibriumMode::AverageCce(_) => "average-cce",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ViolationReport {
    pub max_violation: f64,
    pub worst_constraint: String,
    pub passes: bool,
}

/// CCE constraint value for `(i, a')`:
/// `Σ_a sigma'(a) (U_i(a', a_{-i}) - U_i(a))`.
pub fn cce_constraint_value(
    nf: &NormalFormGame,
    dist: &ActionDistribution,
    player: usize,
    deviation: usize,
) -> f64 {
    let mut v = 0.0;
    for profile in nf.profiles() {
        let p = dist.prob(&profile);
        if p == 0.0 {
            continue;
        }
        let mut dev = profile.clone();
        dev[player] = deviation;
        v += p * (nf.payoff(player, &dev) - nf.payoff(player, &profile));
    }
    v
}

/// CE constraint value for `(i, a, a')`:
/// `Σ_{a_{-i}} sigma'(a, a_{-i}) (U_i(a', a_{-i}) - U_i(a, a_{-i}))`.
pub fn ce_constraint_value(
    nf: &NormalFormGame,
    dist: &ActionDistribution,
    player: usize,
    from: usize,
    to: usize,
) -> f64 {
    let mut v = 0.0;
    for profile in nf.profiles() {
        if profile[player] != from {
            continue;
        }
        let p = dist.prob(&profile);
        if p == 0.0 {
            continue;
        }
        let mut dev = profile.clone();
        dev[player] = to;
        v += p * (nf.payoff(player, &dev) - nf.payoff(player, &profile));
    }
    v
}

/// Aggregated average-CCE constraint value against `a*`:
/// `Σ_i Σ_a sigma'(a) (U_i(a*_i, a_{-i}) - U_i(a))`.
pub fn acce_constraint_value(
    nf: &NormalFormGame,
    dist: &ActionDistribution,
    reference: &[usize],
) -> f64 {
    (0..nf.players())
        .map(|i| cce_constraint_value(nf, dist, i, reference[i]))
        .sum()
}

/// Enumerates the mode's equilibrium constraints exactly; passes iff the
/// maximum violation is at most `tol`.
pub fn check_equilibrium(
    nf: &NormalFormGame,
    dist: &ActionDistribution,
    mode: &EquilibriumMode,
    tol: f64,
) -> Result<ViolationReport> {
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst = String::new();
    match mode {
        EquilibriumMode::Cce => {
            for i in 0..nf.players() {
                for a2 in 0..nf.action_counts()[i] {
                    let v = cce_constraint_value(nf, dist, i, a2);
                    if v > max_violation {
                        max_violation = v;
                        worst = format!("cce(p{i},->{a2})");
                    }
                }
            }
        }
        EquilibriumMode::Ce => {
            for i in 0..nf.players() {
                for a in 0..nf.action_counts()[i] {
                    for a2 in 0..nf.action_counts()[i] {
                        if a == a2 {
                            continue;
                        }
                        let v = ce_constraint_value(nf, dist, i, a, a2);
                        if v > max_violation {
                            max_violation = v;
                            worst = format!("ce(p{i},{a}->{a2})");
                        }
                    }
                }
            }
        }
        EquilibriumMode::AverageCce(reference) => {
            if reference.len() != nf.players() {
                return Err(Error::InvalidInput(
                    "average-cce needs a reference profile a*".into(),
                ));
            }
            max_violation = acce_constraint_value(nf, dist, reference);
            worst = "acce".into();
        }
    }
    Ok(ViolationReport {
        max_violation,
        worst_constraint: worst,
        passes: max_violation <= tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintSet {
    Cce,
    Ce,
}

#[derive(Clone, Debug)]
pub struct WorstCaseOutcome {
    pub value: f64,
    pub distribution: ActionDistribution,
    /// Multipliers of the equilibrium constraints, then the normalization row.
    pub duals: Vec<f64>,
    pub cs_residual: f64,
}

/// Optimizes `E_{a ~ sigma'} q(a)` over the polytope of (C)CE distributions
/// by the dense tableau method. Optimality is certified through the returned
/// duals' complementary-slackness residual (<= 1e-8, else an error carrying
/// the best value found).
pub fn worst_case_expectation(
    nf: &NormalFormGame,
    q: &[f64],
    constraints: ConstraintSet,
    sense: Sense,
) -> Result<WorstCaseOutcome> {
    let n = nf.num_profiles();
    if q.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.len(),
        });
    }
    if n > 10_000 {
        return Err(Error::InvalidInput(format!(
            "dense solver capped at 1e4 profiles, got {n}"
        )));
    }
    // Build constraint rows: one per deviation, <= 0.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    match constraints {
        ConstraintSet::Cce => {
            for i in 0..nf.players() {
                for a2 in 0..nf.action_counts()[i] {
                    let mut row = vec![0.0; n];
                    for (idx, profile) in nf.profiles().enumerate() {
                        let mut dev = profile.clone();
                        dev[i] = a2;
                        row[idx] = nf.payoff(i, &dev) - nf.payoff(i, &profile);
                    }
                    rows.push(row);
                }
            }
        }
        ConstraintSet::Ce => {
            for i in 0..nf.players() {
                for a in 0..nf.action_counts()[i] {
                    for a2 in 0..nf.action_counts()[i] {
                        if a == a2 {
                            continue;
                        }
                        let mut row = vec![0.0; n];
                        for (idx, profile) in nf.profiles().enumerate() {
                            if profile[i] != a {
                                continue;
                            }
                            let mut dev = profile.clone();
                            dev[i] = a2;
                            row[idx] = nf.payoff(i, &dev) - nf.payoff(i, &profile);
                        }
                        rows.push(row);
                    }
                }
            }
        }
    }
    if rows.len() > 1_000 {
        return Err(Error::InvalidInput(format!(
            "dense solver capped at 1e3 constraints, got {}",
            rows.len()
        )));
    }
    let m = rows.len();
    let mut a_ub = DMatrix::zeros(m, n);
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            a_ub[(r, c)] = *v;
        }
    }
    let objective = DVector::from_fn(n, |j, _| match sense {
        Sense::Min => q[j],
        Sense::Max => -q[j],
    });
    let problem = lp::Problem {
        objective,
        a_ub,
        b_ub: DVector::zeros(m),
        a_eq: DMatrix::from_element(1, n, 1.0),
        b_eq: DVector::from_element(1, 1.0),
    };
    let sol = lp::solve(&problem)?;
    if sol.cs_residual > 1e-8 {
        return Err(Error::Numerical(format!(
            "optimality certificate failed (cs residual {:.3e}); best feasible value {}",
            sol.cs_residual,
            match sense {
                Sense::Min => sol.objective,
                Sense::Max => -sol.objective,
            }
        )));
    }
    let mut probs: Vec<f64> = sol.x.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    let mut duals: Vec<f64> = sol.dual_ub.iter().copied().collect();
    duals.extend(sol.dual_eq.iter());
    Ok(WorstCaseOutcome {
        value: match sense {
            Sense::Min => sol.objective,
            Sense::Max => -sol.objective,
        },
        distribution: ActionDistribution::new(nf.action_counts().to_vec(), probs)?,
        duals,
        cs_residual: sol.cs_residual,
    })
}

/// Smoothness parameters for a cost-minimization game.
#[derive(Clone, Debug)]
pub struct SmoothnessParams {
    pub lambda: f64,
    pub mu: f64,
    /// Reference outcome a*; the social-cost argmin when absent.
    pub reference: Option<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct SmoothnessReport {
    pub holds: bool,
    pub worst_slack: f64,
    pub reference: Vec<usize>,
}

/// Checks `Σ_i C_i(a*_i, a_{-i}) <= lambda C(a*) + mu C(a)` over all pure
/// profiles. `costs` holds per-player cost tensors (row-major, nonnegative).
pub fn check_smoothness(
    nf: &NormalFormGame,
    costs: &[Vec<f64>],
    params: &SmoothnessParams,
) -> Result<SmoothnessReport> {
    if params.mu >= 1.0 {
        return Err(Error::InvalidInput("smoothness needs mu < 1".into()));
    }
    if costs.len() != nf.players() {
        return Err(Error::DimensionMismatch {
            expected: nf.players(),
            got: costs.len(),
        });
    }
    for c in costs {
        if c.len() != nf.num_profiles() {
            return Err(Error::DimensionMismatch {
                expected: nf.num_profiles(),
                got: c.len(),
            });
        }
        if c.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidInput("costs must be nonnegative".into()));
        }
    }
    let social = |profile: &[usize]| -> f64 {
        let idx = nf.flat_index(profile);
        costs.iter().map(|c| c[idx]).sum()
    };
    let reference = match &params.reference {
        Some(r) => {
            if r.len() != nf.players() {
                return Err(Error::InvalidInput("reference profile length".into()));
            }
            r.clone()
        }
        None => nf
            .profiles()
            .min_by(|a, b| social(a).partial_cmp(&social(b)).unwrap())
            .expect("nonempty game"),
    };
    let c_star = social(&reference);
    let mut worst = f64::NEG_INFINITY;
    for profile in nf.profiles() {
        let mut lhs = 0.0;
        for i in 0..nf.players() {
            let mut dev = profile.clone();
            dev[i] = reference[i];
            lhs += costs[i][nf.flat_index(&dev)];
        }
        let slack = lhs - params.lambda * c_star - params.mu * social(&profile);
        worst = worst.max(slack);
    }
    Ok(SmoothnessReport {
        holds: worst <= 1e-9,
        worst_slack: worst,
        reference,
    })
}

/// Price-of-anarchy bound implied by `(lambda, mu)`-smoothness.
pub fn poa_bound(params: &SmoothnessParams) -> Result<f64> {
    if params.mu >= 1.0 {
        return Err(Error::InvalidInput("smoothness needs mu < 1".into()));
    }
    Ok(params.lambda / (1.0 - params.mu))
}
