//! Regret matching for stationary and local first-order correlated
//! equilibria, driven by fixed-point oracles.
//!
//! Each iteration computes a fixed point of the regret-weighted combination
//! of the deviation fields (rectified weights in local mode), mixes a point
//! mass on it into the running distribution, and updates per-field average
//! regrets incrementally. With the harmonic mixing rule the cumulative-regret
//! recursion `(t+1) mu_{t+1,f} = t mu_{t,f} + r_f(x_{t+1})` holds exactly,
//! and `max_f |mu_{t,f}| <= sqrt(|F|/(t+1)) (Σ_i G_i)(max_f G_f)` at every
//! iterate; that bound is asserted as a hard invariant.
//!
//! For affine families, fixed points come from minimizing the convex
//! quadratic `||Σ_f mu_f f(x)||^2` by projected gradient descent. When the
//! weights are not conical the quadratic's argmin can fail to be a fixed
//! point of the projected field; over box products the oracle then falls
//! back to exact enumeration of clamp patterns.

use crate::deviations::{check_tangential, combine, FieldFamily};
use crate::dynamics::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::games::{SmoothGame, StrategyProfile};
use crate::geometry::{ConvexSet, SetKind};
use nalgebra::{DMatrix, DVector};
use std::io::Write;

/// Outcome of one fixed-point query: a feasible point, the norm of the
/// combined field's tangent part there, and the work it took.
#[derive(Clone, Debug)]
pub struct FixedPointResult {
    pub point: StrategyProfile,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Pluggable oracle: given weights over the family, produce a point where
/// the weighted combination lies in the normal cone.
pub trait FixedPointOracle {
    fn fixed_point(
        &self,
        family: &FieldFamily,
        weights: &[f64],
        sets: &[ConvexSet],
    ) -> Result<FixedPointResult>;
}

/// The convex-quadratic oracle for affine-representable families.
#[derive(Clone, Debug)]
pub struct AffineOracle {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AffineOracle {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 20_000,
        }
    }
}

impl FixedPointOracle for AffineOracle {
    fn fixed_point(
        &self,
        family: &FieldFamily,
        weights: &[f64],
        sets: &[ConvexSet],
    ) -> Result<FixedPointResult> {
        fixed_point_affine(family, weights, sets, self.tol, self.max_iter)
    }
}

fn tangent_norm(sets: &[ConvexSet], x: &StrategyProfile, blocks: &[DVector<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for (i, set) in sets.iter().enumerate() {
        total += set
            .cone_decompose(x.block(i), &blocks[i])?
            .tangent
            .norm_squared();
    }
    Ok(total.sqrt())
}

/// Minimizes `||Σ_f mu_f f(x)||^2` over the product set by projected gradient
/// descent with step `1/(2 λ_max)`, `λ_max` estimated by power iteration on
/// `P' P`. Stops when the objective gradient's tangent part is at most `tol`.
/// The returned residual is the tangent-part norm of the combined field at
/// the point, so callers can validate it before trusting the oracle.
pub fn fixed_point_affine(
    family: &FieldFamily,
    weights: &[f64],
    sets: &[ConvexSet],
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    let combined = combine(family, weights, false)?;
    let Some((p, q)) = combined.as_affine() else {
        return Err(Error::InvalidInput(
            "fixed_point_affine needs affine-representable members".into(),
        ));
    };
    let dims: Vec<usize> = sets.iter().map(|s| s.dim()).collect();
    let centroid = StrategyProfile::new(sets.iter().map(|s| s.centroid()).collect());
    if weights.iter().all(|w| *w == 0.0) {
        return Ok(FixedPointResult {
            point: centroid,
            residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let lambda_max = power_iteration_sq(&p);
    let step = if lambda_max > 1e-30 {
        1.0 / (2.0 * lambda_max)
    } else {
        0.0
    };

    let mut x = centroid.flatten();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let phi = &p * &x + &q;
        let grad = p.transpose() * &phi * 2.0;
        let prof = StrategyProfile::from_flat(&dims, &x)?;
        let gblocks = split(&dims, &grad);
        let descent: Vec<DVector<f64>> = gblocks.iter().map(|b| -b).collect();
        if tangent_norm(sets, &prof, &descent)? <= tol {
            converged = true;
            break;
        }
        if step == 0.0 {
            break;
        }
        let mut next = DVector::zeros(x.len());
        let mut off = 0;
        for (i, set) in sets.iter().enumerate() {
            let d = dims[i];
            let y = DVector::from_fn(d, |j, _| x[off + j] - step * grad[off + j]);
            let pr = set.project(&y)?;
            next.rows_mut(off, d).copy_from(&pr);
            off += d;
        }
        x = next;
        iterations += 1;
    }

    let mut point = StrategyProfile::from_flat(&dims, &x)?;
    let phi_blocks = |pt: &StrategyProfile| -> Vec<DVector<f64>> {
        split(&dims, &(&p * pt.flatten() + &q))
    };
    let mut residual = tangent_norm(sets, &point, &phi_blocks(&point))?;

    // The quadratic's argmin need not be a projected fixed point when the
    // minimum is positive. Over small box products, enumerate clamp patterns
    // and solve the free subsystem exactly.
    if residual > tol {
        if let Some(alt) = enumerate_box_fixed_point(&p, &q, sets, &dims)? {
            let alt_res = tangent_norm(sets, &alt, &phi_blocks(&alt))?;
            if alt_res < residual {
                point = alt;
                residual = alt_res;
                converged = residual <= tol;
            }
        }
    }

    Ok(FixedPointResult {
        point,
        residual,
        iterations,
        converged,
    })
}

fn split(dims: &[usize], flat: &DVector<f64>) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(dims.len());
    let mut k = 0;
    for &d in dims {
        out.push(DVector::from_fn(d, |j, _| flat[k + j]));
        k += d;
    }
    out
}

fn power_iteration_sq(p: &DMatrix<f64>) -> f64 {
    let n = p.ncols();
    let mut v = DVector::from_fn(n, |j, _| 1.0 + 0.01 * j as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = p.transpose() * (p * &v);
        let norm = w.norm();
        if norm < 1e-300 {
            return 0.0;
        }
        lambda = norm;
        v = w / norm;
    }
    lambda
}

/// Exact fixed points of `x -> project(x + P x + q)` over a box product:
/// every coordinate is clamped low, clamped high, or free (`phi = 0`); solve
/// the free subsystem per pattern and keep patterns whose clamped
/// coordinates have the right field sign. Capped at 12 total dimensions.
fn enumerate_box_fixed_point(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    sets: &[ConvexSet],
    dims: &[usize],
) -> Result<Option<StrategyProfile>> {
    let total: usize = dims.iter().sum();
    if total > 12 {
        return Ok(None);
    }
    let mut lower = Vec::with_capacity(total);
    let mut upper = Vec::with_capacity(total);
    for set in sets {
        match set.kind() {
            SetKind::Box { lower: l, upper: u } => {
                lower.extend(l.iter());
                upper.extend(u.iter());
            }
            _ => return Ok(None),
        }
    }
    let patterns = 3usize.pow(total as u32);
    for code in 0..patterns {
        let mut state = Vec::with_capacity(total);
        let mut c = code;
        for _ in 0..total {
            state.push(c % 3); // 0 free, 1 low, 2 high
            c /= 3;
        }
        let free: Vec<usize> = (0..total).filter(|&j| state[j] == 0).collect();
        let mut x = DVector::zeros(total);
        for j in 0..total {
            if state[j] == 1 {
                x[j] = lower[j];
            } else if state[j] == 2 {
                x[j] = upper[j];
            }
        }
        if !free.is_empty() {
            let k = free.len();
            let mut a = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for (r, &jr) in free.iter().enumerate() {
                let mut b = -q[jr];
                for jc in 0..total {
                    if state[jc] == 0 {
                        continue;
                    }
                    b -= p[(jr, jc)] * x[jc];
                }
                rhs[r] = b;
                for (cidx, &jc) in free.iter().enumerate() {
                    a[(r, cidx)] = p[(jr, jc)];
                }
            }
            let Some(sol) = a.lu().solve(&rhs) else {
                continue;
            };
            for (r, &jr) in free.iter().enumerate() {
                x[jr] = sol[r];
            }
        }
        // Verify: free coords in range, clamped coords with outward field.
        let phi = p * &x + q;
        let mut ok = true;
        for j in 0..total {
            match state[j] {
                0 => {
                    if x[j] < lower[j] - 1e-9 || x[j] > upper[j] + 1e-9 {
                        ok = false;
                    }
                }
                1 => {
                    if phi[j] > 1e-9 {
                        ok = false;
                    }
                }
                _ => {
                    if phi[j] < -1e-9 {
                        ok = false;
                    }
                }
            }
            if !ok {
                break;
            }
        }
        if ok {
            return Ok(Some(StrategyProfile::from_flat(dims, &x)?));
        }
    }
    Ok(None)
}

/// Per-field differential stationarity regret at one profile:
/// `r_f = Σ_i <f_i(x), Π_TC(x_i)[∇_i u_i(x)]>`.
pub fn instantaneous_regret(
    game: &SmoothGame,
    x: &StrategyProfile,
    family: &FieldFamily,
) -> Result<Vec<f64>> {
    let mut tangents = Vec::with_capacity(game.players());
    for (i, set) in game.sets().iter().enumerate() {
        let g = game.gradient(i, x);
        tangents.push(set.cone_decompose(x.block(i), &g)?.tangent);
    }
    family
        .fields()
        .iter()
        .map(|f| {
            let blocks = f.evaluate(x);
            Ok((0..game.players())
                .map(|i| blocks[i].dot(&tangents[i]))
                .sum())
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlphaRule {
    /// `alpha_t = 1/(t+1)`.
    Harmonic,
    /// The closed-form minimizer of the (rectified) squared-regret potential,
    /// never worse than harmonic.
    LineSearch,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Converged,
    MaxIter,
    OracleFailure(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatchMode {
    Stationary,
    Local,
}

/// One matcher iteration for the run log.
#[derive(Clone, Debug)]
pub struct MatcherLogRow {
    pub t: usize,
    pub max_mu: f64,
    pub alpha: f64,
    pub oracle_residual: f64,
    pub oracle_iterations: usize,
}

/// State of the regret matcher after a run.
#[derive(Clone, Debug)]
pub struct MatcherState {
    pub mode: MatchMode,
    pub t: usize,
    sigma: Vec<(StrategyProfile, f64)>,
    /// Unrectified per-field average regrets of sigma.
    avg_regret: Vec<f64>,
    pub alphas: Vec<f64>,
    pub log: Vec<MatcherLogRow>,
    pub termination: Termination,
}

impl MatcherState {
    pub fn sigma(&self) -> Result<EmpiricalDistribution> {
        // The mixing recursion keeps the weight total at 1 algebraically;
        // rescaling every atom each iteration leaves O(t eps) float dust,
        // which is divided out here.
        let total: f64 = self.sigma.iter().map(|(_, w)| w).sum();
        EmpiricalDistribution::new(
            self.sigma
                .iter()
                .map(|(x, w)| (x.clone(), w / total))
                .collect(),
        )
    }

    /// Per-field regrets: signed in stationary mode, rectified (`max(., 0)`)
    /// in local mode.
    pub fn mu(&self) -> Vec<f64> {
        match self.mode {
            MatchMode::Stationary => self.avg_regret.clone(),
            MatchMode::Local => self.avg_regret.iter().map(|m| m.max(0.0)).collect(),
        }
    }

    pub fn raw_regret(&self) -> &[f64] {
        &self.avg_regret
    }

    fn metric(&self) -> f64 {
        self.mu().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn write_log_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "t,max_mu,alpha,oracle_residual,oracle_iterations")?;
        for row in &self.log {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.t,
                crate::fmt_f64(row.max_mu),
                crate::fmt_f64(row.alpha),
                crate::fmt_f64(row.oracle_residual),
                row.oracle_iterations
            )?;
        }
        Ok(())
    }
}

/// Theorem bound at iterate `t`: `sqrt(|F|/(t+1)) (Σ_i G_i)(max_f G_f)`.
pub fn matcher_bound(game: &SmoothGame, family: &FieldFamily, t: usize) -> f64 {
    let sum_g: f64 = game.grad_bounds().iter().sum();
    (family.len() as f64 / (t + 1) as f64).sqrt() * sum_g * family.max_g_bound()
}

fn average_regret(
    game: &SmoothGame,
    dist: &EmpiricalDistribution,
    family: &FieldFamily,
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0f64; family.len()];
    for (x, w) in dist.atoms() {
        for (k, r) in instantaneous_regret(game, x, family)?.iter().enumerate() {
            acc[k] += w * r;
        }
    }
    Ok(acc)
}

fn potential(mu: &[f64], mode: MatchMode) -> f64 {
    mu.iter()
        .map(|m| match mode {
            MatchMode::Stationary => m * m,
            MatchMode::Local => m.max(0.0).powi(2),
        })
        .sum()
}

/// Minimizes `potential((1-a) mu + a r)` over `a in (0, 1)`; the harmonic
/// value is always among the candidates so line search never does worse.
fn line_search_alpha(mu: &[f64], r: &[f64], t: usize, mode: MatchMode) -> f64 {
    let lo = 1e-9;
    let hi = 1.0 - 1e-9;
    let harmonic = 1.0 / (t + 1) as f64;
    let mut candidates = vec![lo, hi, harmonic];
    let d: Vec<f64> = mu.iter().zip(r).map(|(m, rf)| rf - m).collect();
    match mode {
        MatchMode::Stationary => {
            let num: f64 = mu.iter().zip(&d).map(|(m, df)| m * df).sum();
            let den: f64 = d.iter().map(|df| df * df).sum();
            if den > 0.0 {
                candidates.push((-num / den).clamp(lo, hi));
            }
        }
        MatchMode::Local => {
            // Piecewise quadratic: breakpoints where a rectified entry
            // crosses zero, plus each interval's unconstrained vertex.
            let mut edges = vec![lo, hi];
            for (m, df) in mu.iter().zip(&d) {
                if df.abs() > 0.0 {
                    let a = -m / df;
                    if a > lo && a < hi {
                        edges.push(a);
                    }
                }
            }
            edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
            candidates.extend(edges.iter().copied());
            for win in edges.windows(2) {
                let mid = 0.5 * (win[0] + win[1]);
                let active: Vec<usize> = (0..mu.len())
                    .filter(|&k| mu[k] + mid * d[k] > 0.0)
                    .collect();
                let num: f64 = active.iter().map(|&k| mu[k] * d[k]).sum();
                let den: f64 = active.iter().map(|&k| d[k] * d[k]).sum();
                if den > 0.0 {
                    candidates.push((-num / den).clamp(win[0], win[1]));
                }
            }
        }
    }
    let value = |a: f64| {
        let mixed: Vec<f64> = mu.iter().zip(r).map(|(m, rf)| (1.0 - a) * m + a * rf).collect();
        potential(&mixed, mode)
    };
    let mut best = harmonic;
    let mut best_v = value(harmonic);
    for a in candidates {
        let v = value(a);
        if v < best_v {
            best = a;
            best_v = v;
        }
    }
    best
}

struct MatcherConfig<'a> {
    epsilon: f64,
    max_iter: usize,
    rule: AlphaRule,
    oracle: &'a dyn FixedPointOracle,
}

fn regret_match(
    game: &SmoothGame,
    family: &FieldFamily,
    sigma1: &EmpiricalDistribution,
    cfg: MatcherConfig<'_>,
    mode: MatchMode,
) -> Result<MatcherState> {
    if family.is_empty() {
        return Err(Error::InvalidInput("empty deviation family".into()));
    }
    if !sigma1.all_feasible(game, 1e-9) {
        return Err(Error::Infeasible("sigma_1 has infeasible support".into()));
    }
    let mut state = MatcherState {
        mode,
        t: 1,
        sigma: sigma1.atoms().to_vec(),
        avg_regret: average_regret(game, sigma1, family)?,
        alphas: Vec::new(),
        log: Vec::new(),
        termination: Termination::Converged,
    };
    let check_bound = |state: &MatcherState| -> Result<()> {
        let bound = matcher_bound(game, family, state.t);
        let metric = state.metric();
        if metric > bound + 1e-9 {
            return Err(Error::TheoremViolation(format!(
                "matcher regret {metric} exceeds sqrt(|F|/(t+1)) bound {bound} at t = {}",
                state.t
            )));
        }
        Ok(())
    };
    check_bound(&state)?;

    loop {
        let exceeds = match mode {
            MatchMode::Stationary => state.avg_regret.iter().any(|m| m.abs() > cfg.epsilon),
            MatchMode::Local => state.avg_regret.iter().any(|m| *m > cfg.epsilon),
        };
        if !exceeds {
            state.termination = Termination::Converged;
            break;
        }
        if state.t >= cfg.max_iter {
            state.termination = Termination::MaxIter;
            break;
        }
        let weights: Vec<f64> = match mode {
            MatchMode::Stationary => state.avg_regret.clone(),
            MatchMode::Local => state.avg_regret.iter().map(|m| m.max(0.0)).collect(),
        };
        let fp = match cfg.oracle.fixed_point(family, &weights, game.sets()) {
            Ok(fp) => fp,
            Err(e) => {
                state.termination = Termination::OracleFailure(e.to_string());
                break;
            }
        };
        // Never trust a reported residual: recompute the combined field's
        // tangent-part norm at the returned point before logging it.
        let combined = combine(family, &weights, mode == MatchMode::Local)?;
        let residual = tangent_norm(game.sets(), &fp.point, &combined.evaluate(&fp.point))?;
        if residual > 10.0 * fp.residual + 1e-9 {
            log::warn!(
                "oracle reported residual {} but the recomputed value is {residual} at t = {}",
                fp.residual,
                state.t
            );
        }
        let r = instantaneous_regret(game, &fp.point, family)?;
        let alpha = match cfg.rule {
            AlphaRule::Harmonic => 1.0 / (state.t + 1) as f64,
            AlphaRule::LineSearch => line_search_alpha(&state.avg_regret, &r, state.t, mode),
        };
        for (_, w) in &mut state.sigma {
            *w *= 1.0 - alpha;
        }
        state.sigma.push((fp.point, alpha));
        for (m, rf) in state.avg_regret.iter_mut().zip(&r) {
            *m = (1.0 - alpha) * *m + alpha * rf;
        }
        state.t += 1;
        state.alphas.push(alpha);
        state.log.push(MatcherLogRow {
            t: state.t,
            max_mu: state.metric(),
            alpha,
            oracle_residual: residual,
            oracle_iterations: fp.iterations,
        });
        check_bound(&state)?;
    }
    Ok(state)
}

/// Regret matching against signed stationarity regrets. Needs a fixed-point
/// oracle for arbitrary real weight vectors over the family.
pub fn regret_match_stationary(
    game: &SmoothGame,
    family: &FieldFamily,
    sigma1: &EmpiricalDistribution,
    epsilon: f64,
    max_iter: usize,
    rule: AlphaRule,
    oracle: &dyn FixedPointOracle,
) -> Result<MatcherState> {
    regret_match(
        game,
        family,
        sigma1,
        MatcherConfig {
            epsilon,
            max_iter,
            rule,
            oracle,
        },
        MatchMode::Stationary,
    )
}

/// Regret matching with rectified weights; requires a tangential family
/// (enforced by sampling; `allow_nontangential` downgrades the failure to a
/// warning) and a fixed-point oracle for conical weight vectors.
#[allow(clippy::too_many_arguments)]
pub fn regret_match_local(
    game: &SmoothGame,
    family: &FieldFamily,
    sigma1: &EmpiricalDistribution,
    epsilon: f64,
    max_iter: usize,
    rule: AlphaRule,
    oracle: &dyn FixedPointOracle,
    allow_nontangential: bool,
) -> Result<MatcherState> {
    for f in family.fields() {
        let rep = check_tangential(f, game.sets(), 10_000, 0x7A17)?;
        if !rep.tangential {
            if allow_nontangential {
                log::warn!(
                    "field '{}' is not tangential (worst normal norm {}); proceeding on request",
                    f.label(),
                    rep.worst_normal_norm
                );
            } else {
                return Err(Error::InvalidInput(format!(
                    "field '{}' is not tangential (worst normal norm {})",
                    f.label(),
                    rep.worst_normal_norm
                )));
            }
        }
    }
    regret_match(
        game,
        family,
        sigma1,
        MatcherConfig {
            epsilon,
            max_iter,
            rule,
            oracle,
        },
        MatchMode::Local,
    )
}
