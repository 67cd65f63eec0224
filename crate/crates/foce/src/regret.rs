//! Stationary and local first-order regret of distributions and trajectories
//! against deviation fields, plus the closed-form guarantee bounds they are
//! compared against.
//!
//! Conventions:
//! - stationary pairing: `Σ_i <f_i(x), Π_TC(x_i)[∇_i u_i(x)]>` (signed; the
//!   guarantee is on its absolute value),
//! - local pairing: `Σ_i <Π_TC(x_i)[f_i(x)], ∇_i u_i(x)>`.
//!
//! Curve integrals decompose each segment at its exact clamp breakpoints
//! (boxes/simplices; sphere crossings for balls) and apply `m`-point midpoint
//! quadrature per smooth piece. Reports carry both raw values and values
//! normalized by the guarantee's polynomial factor, because conventions for
//! that factor differ between settings.

use crate::deviations::{FieldFamily, VectorField};
use crate::dynamics::{EmpiricalDistribution, StepSchedule, Trajectory};
use crate::error::{Error, Result};
use crate::games::{SmoothGame, StrategyProfile};
use crate::geometry::{Acuteness, SetKind};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegretMode {
    Stationary,
    Local,
}

impl RegretMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegretMode::Stationary => "stationary",
            RegretMode::Local => "local",
        }
    }
}

/// Guarantee class of one player's action set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlayerClass {
    Acute,
    /// Smooth boundary with principal curvature at most K.
    Curved(f64),
    /// Non-acute polyhedron: projection works, no bound is asserted.
    NoGuarantee,
}

pub fn player_class(set: &crate::geometry::ConvexSet) -> PlayerClass {
    match set.kind() {
        SetKind::Box { .. } | SetKind::Simplex { .. } => PlayerClass::Acute,
        SetKind::Ball { .. } => PlayerClass::Curved(set.curvature_bound()),
        SetKind::Polyhedron { .. } => match set.acuteness() {
            Acuteness::Acute => PlayerClass::Acute,
            _ => PlayerClass::NoGuarantee,
        },
    }
}

fn pairing(
    game: &SmoothGame,
    x: &StrategyProfile,
    field_blocks: &[nalgebra::DVector<f64>],
    grads: &[nalgebra::DVector<f64>],
    mode: RegretMode,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, set) in game.sets().iter().enumerate() {
        match mode {
            RegretMode::Stationary => {
                let d = set.cone_decompose(x.block(i), &grads[i])?;
                total += field_blocks[i].dot(&d.tangent);
            }
            RegretMode::Local => {
                let d = set.cone_decompose(x.block(i), &field_blocks[i])?;
                total += d.tangent.dot(&grads[i]);
            }
        }
    }
    Ok(total)
}

/// `Σ_samples w Σ_i <f_i(x), Π_TC ∇_i u_i(x)>` (signed).
pub fn stationary_regret(
    dist: &EmpiricalDistribution,
    game: &SmoothGame,
    field: &VectorField,
) -> Result<f64> {
    distribution_regret(dist, game, field, RegretMode::Stationary)
}

/// `Σ_samples w Σ_i <Π_TC f_i(x), ∇_i u_i(x)>`.
pub fn local_regret(
    dist: &EmpiricalDistribution,
    game: &SmoothGame,
    field: &VectorField,
) -> Result<f64> {
    distribution_regret(dist, game, field, RegretMode::Local)
}

pub fn distribution_regret(
    dist: &EmpiricalDistribution,
    game: &SmoothGame,
    field: &VectorField,
    mode: RegretMode,
) -> Result<f64> {
    let mut total = 0.0;
    for (x, w) in dist.atoms() {
        let grads: Vec<_> = (0..game.players()).map(|i| game.gradient(i, x)).collect();
        let blocks = field.evaluate(x);
        total += w * pairing(game, x, &blocks, &grads, mode)?;
    }
    Ok(total)
}

/// Curve regret `(1/tau_end) Σ_segments ∫ pairing dtau` for every field in
/// one pass (curve points, gradients and cone decompositions are shared
/// across fields). Stationary mode requires gradient (coarse) fields.
pub fn curve_regret_batch(
    traj: &Trajectory,
    game: &SmoothGame,
    fields: &[&VectorField],
    mode: RegretMode,
    quadrature_m: usize,
) -> Result<Vec<f64>> {
    if quadrature_m == 0 {
        return Err(Error::InvalidInput("quadrature order m must be >= 1".into()));
    }
    if mode == RegretMode::Stationary {
        if let Some(f) = fields.iter().find(|f| !f.is_coarse()) {
            return Err(Error::InvalidInput(format!(
                "curve stationary regret needs gradient fields; '{}' is not one",
                f.label()
            )));
        }
    }
    let mut totals = vec![0.0f64; fields.len()];
    for t in 0..traj.steps() {
        let seg = &traj.segments()[t];
        if seg.span == 0.0 {
            continue;
        }
        let mut edges = vec![seg.tau_start];
        edges.extend(traj.segment_breakpoints(game, t)?);
        edges.push(seg.tau_start + seg.span);
        for piece in edges.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            let width = b - a;
            if width <= 0.0 {
                continue;
            }
            let h = width / quadrature_m as f64;
            for k in 0..quadrature_m {
                let tau = a + (k as f64 + 0.5) * h;
                let x = traj.eval(game, tau)?;
                let grads: Vec<_> =
                    (0..game.players()).map(|i| game.gradient(i, &x)).collect();
                match mode {
                    RegretMode::Stationary => {
                        // Decompose the utility gradients once, pair per field.
                        let tangents: Vec<_> = game
                            .sets()
                            .iter()
                            .enumerate()
                            .map(|(i, set)| {
                                set.cone_decompose(x.block(i), &grads[i]).map(|d| d.tangent)
                            })
                            .collect::<Result<_>>()?;
                        for (fi, f) in fields.iter().enumerate() {
                            let blocks = f.evaluate(&x);
                            let v: f64 = (0..game.players())
                                .map(|i| blocks[i].dot(&tangents[i]))
                                .sum();
                            totals[fi] += v * h;
                        }
                    }
                    RegretMode::Local => {
                        for (fi, f) in fields.iter().enumerate() {
                            let blocks = f.evaluate(&x);
                            totals[fi] += pairing(game, &x, &blocks, &grads, mode)? * h;
                        }
                    }
                }
            }
        }
    }
    for v in &mut totals {
        *v /= traj.tau_end();
    }
    Ok(totals)
}

/// Single-field curve stationary regret (the measured left-hand side of the
/// guarantee). The field must be a gradient field.
pub fn curve_stationary_regret(
    traj: &Trajectory,
    game: &SmoothGame,
    field: &VectorField,
    quadrature_m: usize,
) -> Result<f64> {
    Ok(curve_regret_batch(traj, game, &[field], RegretMode::Stationary, quadrature_m)?[0])
}

pub fn curve_local_regret(
    traj: &Trajectory,
    game: &SmoothGame,
    field: &VectorField,
    quadrature_m: usize,
) -> Result<f64> {
    Ok(curve_regret_batch(traj, game, &[field], RegretMode::Local, quadrature_m)?[0])
}

/// Sums over a schedule needed by the guarantee formulas.
#[derive(Clone, Copy, Debug)]
pub struct ScheduleSums {
    pub tau_end: f64,
    pub sum_eta_sq_mu: f64,
    pub sum_eta: f64,
    pub mu_first: f64,
    pub mu_last: f64,
    pub eta_first: f64,
    pub eta_last: f64,
    pub steps: usize,
}

impl ScheduleSums {
    pub fn from_schedule(sched: &StepSchedule, steps: usize) -> Self {
        let mut tau_end = 0.0;
        let mut sum_eta_sq_mu = 0.0;
        let mut sum_eta = 0.0;
        for t in 0..steps {
            tau_end += sched.span(t);
            sum_eta_sq_mu += sched.eta(t) * sched.eta(t) * sched.mu(t);
            sum_eta += sched.eta(t);
        }
        Self {
            tau_end,
            sum_eta_sq_mu,
            sum_eta,
            mu_first: sched.mu(0),
            mu_last: sched.mu(steps - 1),
            eta_first: sched.eta(0),
            eta_last: sched.eta(steps - 1),
            steps,
        }
    }

    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let segs = traj.segments();
        Self {
            tau_end: traj.tau_end(),
            sum_eta_sq_mu: segs.iter().map(|s| s.eta * s.eta * s.mu).sum(),
            sum_eta: segs.iter().map(|s| s.eta).sum(),
            mu_first: segs[0].mu,
            mu_last: segs[segs.len() - 1].mu,
            eta_first: segs[0].eta,
            eta_last: segs[segs.len() - 1].eta,
            steps: segs.len(),
        }
    }
}

/// Guarantee on `|curve stationary regret|` of a gradient field with
/// magnitude bound `g_h`:
///
/// `2 d(X) g_h (mu_last + mu_first) / tau_end
///  + (Σ eta_t^2 mu_t) / (2 tau_end) * g_h * Σ_i (K_i G_i^2 + L_i Σ_j G_j)`
///
/// with `K_i = 0` on acute sets. Returns `None` when any player's set is a
/// non-acute polyhedron (no guarantee is asserted there).
pub fn theorem_bound(game: &SmoothGame, sums: &ScheduleSums, g_h: f64) -> Option<f64> {
    let classes: Vec<PlayerClass> = game.sets().iter().map(player_class).collect();
    if classes.contains(&PlayerClass::NoGuarantee) {
        return None;
    }
    let sum_g: f64 = game.grad_bounds().iter().sum();
    let mut drift = 0.0;
    for (i, class) in classes.iter().enumerate() {
        let k = match class {
            PlayerClass::Curved(k) => *k,
            _ => 0.0,
        };
        drift += k * game.grad_bound(i).powi(2) + game.lipschitz(i) * sum_g;
    }
    Some(
        2.0 * game.diameter() * g_h * (sums.mu_last + sums.mu_first) / sums.tau_end
            + sums.sum_eta_sq_mu / (2.0 * sums.tau_end) * g_h * drift,
    )
}

/// Normalization factor `1 + Σ_i g_h (K_i G_i^2 + L_i Σ_j G_j)`; on acute
/// sets the curvature terms vanish and this is `1 + Σ_i g_h L_i Σ_j G_j`.
pub fn poly_factor(game: &SmoothGame, g_h: f64) -> f64 {
    let sum_g: f64 = game.grad_bounds().iter().sum();
    let mut total = 1.0;
    for (i, set) in game.sets().iter().enumerate() {
        let k = match player_class(set) {
            PlayerClass::Curved(k) => k,
            _ => 0.0,
        };
        total += g_h * (k * game.grad_bound(i).powi(2) + game.lipschitz(i) * sum_g);
    }
    total
}

/// Discrete-time guarantee for tangential gradient fields supported on the
/// learner set under the restricted (partially adversarial) curve:
///
/// `2 d(X) g_h (1/eta_last + 1/eta_first) / T
///  + (Σ eta_t)/(2T) g_h Σ_{i in N'} (K_i G_i^2 + L_i Σ_{j in N'} G_j)
///  + (Σ eta_t)/(2T) (Σ_{i in N} (l_h G_i + g_h L_i)) (Σ_{i in N'} G_i)`.
///
/// No normalization factor is defined for this bound; it is reported raw.
pub fn adversarial_bound(
    game: &SmoothGame,
    learners: &[usize],
    sums: &ScheduleSums,
    g_h: f64,
    l_h: f64,
) -> Option<f64> {
    for &i in learners {
        if player_class(&game.sets()[i]) == PlayerClass::NoGuarantee {
            return None;
        }
    }
    let t = sums.steps as f64;
    let sum_g_learners: f64 = learners.iter().map(|&i| game.grad_bound(i)).sum();
    let mut drift = 0.0;
    for &i in learners {
        let k = match player_class(&game.sets()[i]) {
            PlayerClass::Curved(k) => k,
            _ => 0.0,
        };
        drift += k * game.grad_bound(i).powi(2) + game.lipschitz(i) * sum_g_learners;
    }
    let cross: f64 = (0..game.players())
        .map(|i| l_h * game.grad_bound(i) + g_h * game.lipschitz(i))
        .sum();
    Some(
        2.0 * game.diameter() * g_h * (1.0 / sums.eta_last + 1.0 / sums.eta_first) / t
            + sums.sum_eta / (2.0 * t) * g_h * drift
            + sums.sum_eta / (2.0 * t) * cross * sum_g_learners,
    )
}

/// One field's measured regret with its normalization and guarantee.
#[derive(Clone, Debug)]
pub struct ReportEntry {
    pub field_id: String,
    pub raw: f64,
    /// Raw value divided by the poly factor for the field's magnitude bound.
    pub epsilon: f64,
    /// Guarantee when one applies (trajectory source, guaranteed set class).
    pub bound: Option<f64>,
    /// Set in local mode for fields that are neither gradient fields nor
    /// certified tangential; their values are measurements without a theorem.
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct RegretReport {
    pub mode: RegretMode,
    pub entries: Vec<ReportEntry>,
    /// Max over entries of |raw|.
    pub family_max: f64,
    pub metadata: ReportMeta,
}

#[derive(Clone, Debug, Default)]
pub struct ReportMeta {
    pub steps: Option<usize>,
    pub mu_mode: Option<String>,
    pub set_classes: String,
    pub source: String,
}

pub enum RegretSource<'a> {
    Trajectory(&'a Trajectory),
    Distribution(&'a EmpiricalDistribution),
}

/// Per-field regret of a trajectory or distribution against a family, with
/// normalized values and (for trajectories on guaranteed set classes) bounds.
/// A bound violation is a theorem failure and surfaces as an error.
pub fn regret_report(
    source: RegretSource<'_>,
    game: &SmoothGame,
    family: &FieldFamily,
    mode: RegretMode,
    quadrature_m: usize,
) -> Result<RegretReport> {
    let classes: Vec<String> = game
        .sets()
        .iter()
        .map(|s| format!("{:?}", player_class(s)))
        .collect();
    let mut entries = Vec::with_capacity(family.len());
    let refs: Vec<&VectorField> = family.fields().iter().collect();
    let (values, meta) = match &source {
        RegretSource::Trajectory(traj) => {
            let values = curve_regret_batch(traj, game, &refs, mode, quadrature_m)?;
            let mu_mode = if traj.segments().iter().all(|s| s.span == 1.0) {
                "inverse_eta"
            } else if traj.segments().iter().all(|s| s.mu == 1.0) {
                "unit"
            } else {
                "custom"
            };
            let meta = ReportMeta {
                steps: Some(traj.steps()),
                mu_mode: Some(mu_mode.into()),
                set_classes: classes.join(","),
                source: "trajectory".into(),
            };
            (values, meta)
        }
        RegretSource::Distribution(dist) => {
            let values = refs
                .iter()
                .map(|f| distribution_regret(dist, game, f, mode))
                .collect::<Result<Vec<_>>>()?;
            let meta = ReportMeta {
                steps: None,
                mu_mode: None,
                set_classes: classes.join(","),
                source: "distribution".into(),
            };
            (values, meta)
        }
    };
    let sums = match &source {
        RegretSource::Trajectory(traj) => Some(ScheduleSums::from_trajectory(traj)),
        RegretSource::Distribution(_) => None,
    };
    let mut family_max = 0.0f64;
    let mut violation: Option<String> = None;
    for (f, raw) in family.fields().iter().zip(values) {
        let bound = match (&sums, f.is_coarse()) {
            (Some(s), true) => theorem_bound(game, s, f.g_bound()),
            _ => None,
        };
        if let Some(b) = bound {
            if mode == RegretMode::Stationary && raw.abs() > b + 1e-6 && violation.is_none() {
                violation = Some(format!(
                    "field '{}': |{raw}| exceeds its guarantee {b}",
                    f.label()
                ));
            }
        }
        family_max = family_max.max(raw.abs());
        entries.push(ReportEntry {
            field_id: f.label().to_string(),
            raw,
            epsilon: raw / poly_factor(game, f.g_bound()),
            bound,
            flagged: mode == RegretMode::Local && !f.is_coarse(),
        });
    }
    if let Some(msg) = violation {
        return Err(Error::TheoremViolation(msg));
    }
    Ok(RegretReport {
        mode,
        entries,
        family_max,
        metadata: meta,
    })
}

impl RegretReport {
    /// Stable-key-order text document: one `field.<k>.*` block per entry.
    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "mode = {}", self.mode.as_str())?;
        writeln!(w, "source = {}", self.metadata.source)?;
        if let Some(t) = self.metadata.steps {
            writeln!(w, "steps = {t}")?;
        }
        if let Some(m) = &self.metadata.mu_mode {
            writeln!(w, "mu_mode = {m}")?;
        }
        writeln!(w, "set_classes = {}", self.metadata.set_classes)?;
        for (k, e) in self.entries.iter().enumerate() {
            writeln!(w, "field.{k}.id = {}", e.field_id)?;
            writeln!(w, "field.{k}.raw = {}", crate::fmt_f64(e.raw))?;
            writeln!(w, "field.{k}.epsilon = {}", crate::fmt_f64(e.epsilon))?;
            match e.bound {
                Some(b) => writeln!(w, "field.{k}.bound = {}", crate::fmt_f64(b))?,
                None => writeln!(w, "field.{k}.bound = no guarantee")?,
            }
            if e.flagged {
                writeln!(w, "field.{k}.flagged = true")?;
            }
        }
        writeln!(w, "family_max = {}", crate::fmt_f64(self.family_max))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deviations::{combine, extension_family_2x2, pull_to_point_family, radial_field};
    use crate::dynamics::{run_pga, MuMode, StepRule, StepSchedule};
    use crate::games::matching_pennies;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn pennies_profile(a: f64, b: f64) -> StrategyProfile {
        StrategyProfile::new(vec![
            DVector::from_element(1, a),
            DVector::from_element(1, b),
        ])
    }

    #[test]
    fn point_mass_at_equilibrium_has_zero_regret() {
        let game = matching_pennies();
        let dist = EmpiricalDistribution::point_mass(pennies_profile(0.0, 0.0));
        for f in extension_family_2x2().fields() {
            assert_eq!(stationary_regret(&dist, &game, f).unwrap(), 0.0);
            assert_eq!(local_regret(&dist, &game, f).unwrap(), 0.0);
        }
    }

    #[test]
    fn circle_distribution_values() {
        let game = matching_pennies();
        let n = 128;
        let atoms: Vec<_> = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (pennies_profile(th.cos(), th.sin()), 1.0 / n as f64)
            })
            .collect();
        let dist = EmpiricalDistribution::new(atoms).unwrap();
        // Radial field is orthogonal to the rotational flow.
        let radial = radial_field(game.sets());
        let r = stationary_regret(&dist, &game, &radial).unwrap();
        assert!(r.abs() < 1e-12, "rotational flow ⊥ radial field: {r}");
        // g1- + g2+ pairs to x1^2 + x2^2 = 1 on the circle.
        let fam = extension_family_2x2();
        let mut w = vec![0.0; 8];
        w[fam.fields().iter().position(|f| f.label() == "g1-").unwrap()] = 1.0;
        w[fam.fields().iter().position(|f| f.label() == "g2+").unwrap()] = 1.0;
        let g_comb = combine(&fam, &w, true).unwrap();
        let r = stationary_regret(&dist, &game, &g_comb).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn local_regret_pointwise_example() {
        let game = matching_pennies();
        let dist = EmpiricalDistribution::point_mass(pennies_profile(0.5, 0.5));
        let fam = extension_family_2x2();
        let f1p = fam.fields().iter().find(|f| f.label() == "f1+").unwrap();
        let r = local_regret(&dist, &game, f1p).unwrap();
        assert_abs_diff_eq!(r, -0.25, epsilon = 1e-15);
    }

    #[test]
    fn local_equals_stationary_in_interior_for_gradient_fields() {
        let game = matching_pennies();
        let dist = EmpiricalDistribution::point_mass(pennies_profile(0.3, -0.6));
        let radial = radial_field(game.sets());
        let s = stationary_regret(&dist, &game, &radial).unwrap();
        let l = local_regret(&dist, &game, &radial).unwrap();
        assert_abs_diff_eq!(s, l, epsilon = 1e-15);
    }

    #[test]
    fn stationary_point_trajectory_integrates_to_zero() {
        let game = matching_pennies();
        let sched = StepSchedule::new(StepRule::Constant { eta: 0.1 }, MuMode::Unit).unwrap();
        let traj = run_pga(&game, &pennies_profile(0.0, 0.0), 5, &sched).unwrap();
        let radial = radial_field(game.sets());
        let v = curve_stationary_regret(&traj, &game, &radial, 16).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn quadrature_converges_on_boxes() {
        let game = matching_pennies();
        let sched =
            StepSchedule::new(StepRule::InverseSqrt { c: 0.5 }, MuMode::InverseEta).unwrap();
        let traj = run_pga(&game, &pennies_profile(1.0, 1.0), 200, &sched).unwrap();
        let fam = pull_to_point_family(&game).unwrap();
        for f in fam.fields() {
            let v16 = curve_stationary_regret(&traj, &game, f, 16).unwrap();
            let v64 = curve_stationary_regret(&traj, &game, f, 64).unwrap();
            assert!(
                (v16 - v64).abs() <= 1e-6 * (1.0 + v16.abs()),
                "{}: m=16 {} vs m=64 {}",
                f.label(),
                v16,
                v64
            );
        }
    }

    #[test]
    fn telescoping_cross_check() {
        // ∫ mu <∇h, dx/dtau> dtau telescopes to Σ mu (h(x^{t+1}) - h(x^t)).
        let game = matching_pennies();
        let sched =
            StepSchedule::new(StepRule::InverseSqrt { c: 0.5 }, MuMode::InverseEta).unwrap();
        let steps = 100;
        let traj = run_pga(&game, &pennies_profile(0.95, 0.9), steps, &sched).unwrap();
        let fam = pull_to_point_family(&game).unwrap();
        let m = 32;
        for f in fam.fields() {
            let mut integral = 0.0;
            for t in 0..traj.steps() {
                let seg = &traj.segments()[t];
                let mut edges = vec![seg.tau_start];
                edges.extend(traj.segment_breakpoints(&game, t).unwrap());
                edges.push(seg.tau_start + seg.span);
                for piece in edges.windows(2) {
                    let h = (piece[1] - piece[0]) / m as f64;
                    if h <= 0.0 {
                        continue;
                    }
                    for k in 0..m {
                        let tau = piece[0] + (k as f64 + 0.5) * h;
                        let x = traj.eval(&game, tau).unwrap();
                        let blocks = f.evaluate(&x);
                        // mu * dx/dtau = tangent part of the cached gradient
                        let mut v = 0.0;
                        for (i, set) in game.sets().iter().enumerate() {
                            let d = set
                                .cone_decompose(x.block(i), &seg.gradient[i])
                                .unwrap();
                            v += blocks[i].dot(&d.tangent);
                        }
                        integral += v * h;
                    }
                }
            }
            let hval = |x: &StrategyProfile| f.generating_value(x).unwrap();
            let mut telescoped = 0.0;
            for t in 0..traj.steps() {
                telescoped += traj.segments()[t].mu
                    * (hval(traj.iterate(t + 1)) - hval(traj.iterate(t)));
            }
            assert!(
                (integral - telescoped).abs() <= 1e-6 * steps as f64,
                "{}: integral {} vs telescoped {}",
                f.label(),
                integral,
                telescoped
            );
        }
    }

    #[test]
    fn bound_formula_matches_hand_arithmetic() {
        let game = matching_pennies();
        let sched =
            StepSchedule::new(StepRule::InverseSqrt { c: 0.5 }, MuMode::InverseEta).unwrap();
        let steps = 10_000;
        let sums = ScheduleSums::from_schedule(&sched, steps);
        // Hand-built: tau_end = T, mu ends = (sqrt(T) + 1)/C, drift = 4.
        let c = 0.5;
        let t = steps as f64;
        let sum_eta: f64 = (0..steps).map(|k| c / ((k + 1) as f64).sqrt()).sum();
        let d_x = 2.0 * std::f64::consts::SQRT_2;
        for g_h in [2.0, std::f64::consts::SQRT_2] {
            let expect =
                2.0 * d_x * g_h * ((t.sqrt() + 1.0) / c) / t + sum_eta / (2.0 * t) * g_h * 4.0;
            let got = theorem_bound(&game, &sums, g_h).unwrap();
            assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
        }
        // Quadrupling T roughly halves the bound.
        let sums4 = ScheduleSums::from_schedule(&sched, 4 * steps);
        let ratio =
            theorem_bound(&game, &sums4, 2.0).unwrap() / theorem_bound(&game, &sums, 2.0).unwrap();
        assert!(ratio > 0.45 && ratio < 0.55, "ratio {ratio}");
    }

    #[test]
    fn no_guarantee_on_non_acute_polyhedra() {
        use crate::geometry::ConvexSet;
        use nalgebra::DMatrix;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rows =
            DMatrix::from_row_slice(4, 2, &[1.0, 0.0, s, s, -1.0, 0.0, 0.0, -1.0]);
        let poly = ConvexSet::polyhedron(rows, DVector::from_element(4, 1.0)).unwrap();
        let game = crate::games::zero_game(&[2], 1.0)
            .unwrap()
            .with_sets(vec![poly])
            .unwrap();
        let sched = StepSchedule::new(StepRule::Constant { eta: 0.1 }, MuMode::Unit).unwrap();
        let sums = ScheduleSums::from_schedule(&sched, 10);
        assert!(theorem_bound(&game, &sums, 1.0).is_none());
    }

    #[test]
    fn curved_with_zero_curvature_equals_acute() {
        // poly factor over a box game has no curvature contribution.
        let game = matching_pennies();
        let sum_g = 2.0;
        let expect = 1.0 + 2.0 * (1.0 * sum_g) * 2.0; // 1 + Σ_i g_h L_i Σ G_j, g_h = 2
        assert_abs_diff_eq!(poly_factor(&game, 2.0), expect, epsilon = 1e-12);
    }

    #[test]
    fn report_shapes_and_zero_field() {
        let game = matching_pennies();
        let dist = EmpiricalDistribution::point_mass(pennies_profile(0.2, 0.2));
        let zero = VectorField::gradient_quadratic(
            "zero",
            vec![1, 1],
            vec![None, None],
            0.0,
        )
        .unwrap();
        let fam = FieldFamily::new(vec![zero]);
        let rep = regret_report(
            RegretSource::Distribution(&dist),
            &game,
            &fam,
            RegretMode::Stationary,
            16,
        )
        .unwrap();
        assert_eq!(rep.entries.len(), 1);
        assert_eq!(rep.entries[0].raw, 0.0);
        assert_eq!(rep.family_max, 0.0);

        let empty = FieldFamily::new(Vec::new());
        let rep = regret_report(
            RegretSource::Distribution(&dist),
            &game,
            &empty,
            RegretMode::Local,
            16,
        )
        .unwrap();
        assert!(rep.entries.is_empty());
        assert_eq!(rep.family_max, 0.0);
    }
}
