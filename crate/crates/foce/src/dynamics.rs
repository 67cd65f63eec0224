//! Projected gradient ascent with equal adaptive step sizes, the piecewise
//! curve interpolating its iterates, uniform sampling from the curve, and the
//! partial-adversarial restricted curve.
//!
//! The curve caches one gradient per discrete step: segment `t` covers
//! `tau in [tau_t, tau_t + mu_t eta_t]` and evaluates to
//! `project(x_i^t + ((tau - tau_t)/mu_t) g_i^t)` per player. Gradients are
//! never re-evaluated along a segment, which is what makes the velocity of
//! the curve exactly the tangent-cone projection of the cached gradient on
//! acute sets. Weights `mu_t = 1/eta_t` give every segment unit length in
//! `tau`, so uniform sampling matches the time-averaged distribution of play.

use crate::error::{Error, Result};
use crate::games::{SmoothGame, StrategyProfile};
use crate::geometry::{Acuteness, SetKind};
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;

/// Step-size rule. `eta_t` must be positive and non-increasing; custom lists
/// may contain zero steps (identity updates) unless the schedule runs in
/// `InverseEta` mode.
#[derive(Clone, Debug)]
pub enum StepRule {
    /// `eta_t = c / sqrt(t + 1)`.
    InverseSqrt { c: f64 },
    Constant { eta: f64 },
    Custom(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MuMode {
    /// `mu_t = 1`: curve time tracks the dynamics' proper time.
    Unit,
    /// `mu_t = 1/eta_t`: every segment spans exactly 1 in curve time.
    InverseEta,
}

#[derive(Clone, Debug)]
pub struct StepSchedule {
    pub rule: StepRule,
    pub mu_mode: MuMode,
}

impl StepSchedule {
    pub fn new(rule: StepRule, mu_mode: MuMode) -> Result<Self> {
        match &rule {
            // NaN fails these guards too.
            StepRule::InverseSqrt { c } if !c.is_finite() || *c <= 0.0 => {
                return Err(Error::InvalidInput("inverse_sqrt needs c > 0".into()));
            }
            StepRule::Constant { eta } if !eta.is_finite() || *eta <= 0.0 => {
                return Err(Error::InvalidInput("constant schedule needs eta > 0".into()));
            }
            StepRule::Custom(list) => {
                if list.is_empty() {
                    return Err(Error::InvalidInput("custom schedule is empty".into()));
                }
                if list.iter().any(|e| *e < 0.0 || !e.is_finite()) {
                    return Err(Error::InvalidInput(
                        "custom schedule needs finite eta >= 0".into(),
                    ));
                }
                if list.windows(2).any(|w| w[1] > w[0] + 1e-15) {
                    return Err(Error::InvalidInput(
                        "custom schedule must be non-increasing".into(),
                    ));
                }
                if mu_mode == MuMode::InverseEta && list.contains(&0.0) {
                    return Err(Error::InvalidInput(
                        "inverse_eta weights need strictly positive steps".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(Self { rule, mu_mode })
    }

    pub fn eta(&self, t: usize) -> f64 {
        match &self.rule {
            StepRule::InverseSqrt { c } => c / ((t + 1) as f64).sqrt(),
            StepRule::Constant { eta } => *eta,
            StepRule::Custom(list) => list[t.min(list.len() - 1)],
        }
    }

    pub fn mu(&self, t: usize) -> f64 {
        match self.mu_mode {
            MuMode::Unit => 1.0,
            MuMode::InverseEta => 1.0 / self.eta(t),
        }
    }

    /// Curve-time length of segment `t` (`mu_t eta_t`, exactly 1 for
    /// `InverseEta`).
    pub fn span(&self, t: usize) -> f64 {
        match self.mu_mode {
            MuMode::Unit => self.eta(t),
            MuMode::InverseEta => 1.0,
        }
    }
}

/// One curve segment: the iterate, the cached gradient, and step metadata.
#[derive(Clone, Debug)]
pub struct Segment {
    pub start: StrategyProfile,
    pub gradient: Vec<DVector<f64>>,
    pub eta: f64,
    pub mu: f64,
    pub span: f64,
    pub tau_start: f64,
}

/// The interpolating curve `x(tau) : [0, tau_end] -> X` through the iterates.
#[derive(Clone, Debug)]
pub struct Trajectory {
    segments: Vec<Segment>,
    end: StrategyProfile,
    tau_end: f64,
    /// Which players move continuously (all, except adversary blocks of the
    /// restricted curve, which jump at segment joints).
    learner_mask: Vec<bool>,
}

impl Trajectory {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn steps(&self) -> usize {
        self.segments.len()
    }

    pub fn tau_end(&self) -> f64 {
        self.tau_end
    }

    pub fn end(&self) -> &StrategyProfile {
        &self.end
    }

    pub fn learner_mask(&self) -> &[bool] {
        &self.learner_mask
    }

    /// The discrete iterate `x^t`, `t = 0..=T`.
    pub fn iterate(&self, t: usize) -> &StrategyProfile {
        if t == self.segments.len() {
            &self.end
        } else {
            &self.segments[t].start
        }
    }

    /// Index of the segment containing `tau` (the last one whose start is
    /// at or before `tau`).
    pub fn segment_index(&self, tau: f64) -> Result<usize> {
        if tau < -1e-12 || tau > self.tau_end + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "tau = {tau} outside [0, {}]",
                self.tau_end
            )));
        }
        let idx = self
            .segments
            .partition_point(|s| s.tau_start <= tau)
            .saturating_sub(1);
        Ok(idx)
    }

    /// Evaluates the curve. Segment boundaries return the discrete iterates
    /// exactly.
    pub fn eval(&self, game: &SmoothGame, tau: f64) -> Result<StrategyProfile> {
        let idx = self.segment_index(tau)?;
        let seg = &self.segments[idx];
        if tau >= self.tau_end {
            return Ok(self.end.clone());
        }
        let dt = tau - seg.tau_start;
        if dt == 0.0 {
            return Ok(seg.start.clone());
        }
        let s = dt / seg.mu;
        let mut blocks = Vec::with_capacity(seg.start.players());
        for (i, set) in game.sets().iter().enumerate() {
            let y = seg.start.block(i) + &seg.gradient[i] * s;
            blocks.push(set.project(&y)?);
        }
        Ok(StrategyProfile::new(blocks))
    }

    /// Curve-time breakpoints (active-set changes) strictly inside segment
    /// `t`, merged over all players.
    pub fn segment_breakpoints(&self, game: &SmoothGame, t: usize) -> Result<Vec<f64>> {
        let seg = &self.segments[t];
        let mut taus: Vec<f64> = Vec::new();
        for (i, set) in game.sets().iter().enumerate() {
            let bps = set.path_breakpoints(seg.start.block(i), &seg.gradient[i], seg.eta)?;
            taus.extend(bps.into_iter().map(|s| seg.tau_start + s * seg.mu));
        }
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        taus.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * self.tau_end.max(1.0));
        Ok(taus)
    }

    /// `dx/dtau` at `tau`. Exact (tangent-cone projection of the cached
    /// gradient, scaled by `1/mu`) on boxes, simplices and acute polyhedra;
    /// central finite differences with step 1e-6 on balls and non-acute
    /// polyhedra. Errors within 1e-9 of a segment joint or breakpoint.
    pub fn velocity(&self, game: &SmoothGame, tau: f64) -> Result<Vec<DVector<f64>>> {
        let idx = self.segment_index(tau)?;
        let seg = &self.segments[idx];
        let seg_end = seg.tau_start + seg.span;
        if (tau - seg.tau_start).abs() < 1e-9 || (seg_end - tau).abs() < 1e-9 {
            return Err(Error::Breakpoint(tau));
        }
        for bp in self.segment_breakpoints(game, idx)? {
            if (tau - bp).abs() < 1e-9 {
                return Err(Error::Breakpoint(tau));
            }
        }
        let x_tau = self.eval(game, tau)?;
        let mut out = Vec::with_capacity(game.players());
        for (i, set) in game.sets().iter().enumerate() {
            if !self.learner_mask[i] {
                out.push(DVector::zeros(set.dim()));
                continue;
            }
            let exact = match set.kind() {
                SetKind::Box { .. } | SetKind::Simplex { .. } => true,
                SetKind::Polyhedron { .. } => set.acuteness() == Acuteness::Acute,
                SetKind::Ball { .. } => false,
            };
            if exact {
                let d = set.cone_decompose(x_tau.block(i), &seg.gradient[i])?;
                out.push(d.tangent / seg.mu);
            } else {
                let h = 1e-6;
                let plus = self.eval(game, (tau + h).min(seg_end))?;
                let minus = self.eval(game, (tau - h).max(seg.tau_start))?;
                let dt = (tau + h).min(seg_end) - (tau - h).max(seg.tau_start);
                out.push((plus.block(i) - minus.block(i)) / dt);
            }
        }
        Ok(out)
    }

    /// `n` equal-weight samples `x(tau_k)` with `tau_k` i.i.d. uniform on
    /// `[0, tau_end]` from a seeded generator.
    pub fn sample_uniform(
        &self,
        game: &SmoothGame,
        n: usize,
        seed: u64,
    ) -> Result<EmpiricalDistribution> {
        if n == 0 {
            return Err(Error::InvalidInput("need n >= 1 samples".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let taus: Vec<f64> = (0..n)
            .map(|_| rng.random::<f64>() * self.tau_end)
            .collect();
        self.sample_at(game, &taus)
    }

    /// Point masses at the given curve times, equally weighted.
    pub fn sample_at(&self, game: &SmoothGame, taus: &[f64]) -> Result<EmpiricalDistribution> {
        let w = 1.0 / taus.len() as f64;
        let atoms = taus
            .iter()
            .map(|&tau| Ok((self.eval(game, tau)?, w)))
            .collect::<Result<Vec<_>>>()?;
        EmpiricalDistribution::new(atoms)
    }

    /// Writes the discrete iterates as CSV: header
    /// `step,tau_start,eta,mu,coord_0,...,coord_{D-1}`, one row per iterate.
    /// The terminal iterate has no outgoing step; its eta and mu print as 0.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let d: usize = self.iterate(0).dim();
        write!(w, "step,tau_start,eta,mu")?;
        for j in 0..d {
            write!(w, ",coord_{j}")?;
        }
        writeln!(w)?;
        for t in 0..=self.steps() {
            let (tau, eta, mu) = if t < self.steps() {
                let s = &self.segments[t];
                (s.tau_start, s.eta, s.mu)
            } else {
                (self.tau_end, 0.0, 0.0)
            };
            write!(
                w,
                "{t},{},{},{}",
                crate::fmt_f64(tau),
                crate::fmt_f64(eta),
                crate::fmt_f64(mu)
            )?;
            let flat = self.iterate(t).flatten();
            for j in 0..d {
                write!(w, ",{}", crate::fmt_f64(flat[j]))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Weighted point masses over profiles; weights sum to 1.
#[derive(Clone, Debug)]
pub struct EmpiricalDistribution {
    atoms: Vec<(StrategyProfile, f64)>,
}

impl EmpiricalDistribution {
    pub fn new(atoms: Vec<(StrategyProfile, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if atoms.iter().any(|(_, w)| *w <= 0.0 || !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        let total = crate::kahan_sum(atoms.iter().map(|(_, w)| *w));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(Self { atoms })
    }

    pub fn point_mass(x: StrategyProfile) -> Self {
        Self {
            atoms: vec![(x, 1.0)],
        }
    }

    pub fn atoms(&self) -> &[(StrategyProfile, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Weighted mean profile.
    pub fn mean(&self) -> StrategyProfile {
        let mut blocks: Vec<DVector<f64>> = self.atoms[0]
            .0
            .blocks()
            .iter()
            .map(|b| DVector::zeros(b.len()))
            .collect();
        for (x, w) in &self.atoms {
            for (i, b) in x.blocks().iter().enumerate() {
                blocks[i] += b * *w;
            }
        }
        StrategyProfile::new(blocks)
    }

    /// Weighted expectation of a function of the profile.
    pub fn expect(&self, f: impl Fn(&StrategyProfile) -> f64) -> f64 {
        self.atoms.iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn all_feasible(&self, game: &SmoothGame, tol: f64) -> bool {
        self.atoms
            .iter()
            .all(|(x, _)| x.is_feasible(game.sets(), tol))
    }
}

/// Projected gradient ascent with equal adaptive step sizes:
/// `x_i^{t+1} = project(x_i^t + eta_t grad_i u_i(x^t))`, all players sharing
/// the schedule. Gradients are evaluated once per step and cached.
pub fn run_pga(
    game: &SmoothGame,
    x0: &StrategyProfile,
    steps: usize,
    sched: &StepSchedule,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidInput("need at least one step".into()));
    }
    if !x0.is_feasible(game.sets(), 1e-9) {
        return Err(Error::Infeasible("initial profile is outside X".into()));
    }
    if let StepRule::Custom(list) = &sched.rule {
        if list.len() < steps {
            return Err(Error::InvalidInput(format!(
                "custom schedule has {} entries, need {steps}",
                list.len()
            )));
        }
    }
    let mut segments = Vec::with_capacity(steps);
    let mut x = x0.clone();
    let mut tau = 0.0f64;
    for t in 0..steps {
        let eta = sched.eta(t);
        let mu = sched.mu(t);
        let span = sched.span(t);
        let gradient: Vec<DVector<f64>> =
            (0..game.players()).map(|i| game.gradient(i, &x)).collect();
        let mut next_blocks = Vec::with_capacity(game.players());
        for (i, set) in game.sets().iter().enumerate() {
            next_blocks.push(set.project(&(x.block(i) + &gradient[i] * eta))?);
        }
        segments.push(Segment {
            start: x,
            gradient,
            eta,
            mu,
            span,
            tau_start: tau,
        });
        tau += span;
        x = StrategyProfile::new(next_blocks);
    }
    let learner_mask = vec![true; game.players()];
    Ok(Trajectory {
        segments,
        end: x,
        tau_end: tau,
        learner_mask,
    })
}

/// The restricted time-averaged curve: players in `learners` run projected
/// gradient ascent and interpolate over unit-length segments; the remaining
/// players' strategies come from `adversary(t, history)` and stay constant on
/// `[t, t+1)`. An infeasible adversary choice is projected with a warning.
pub fn run_partial_adversarial(
    game: &SmoothGame,
    learners: &[usize],
    mut adversary: impl FnMut(usize, &[StrategyProfile]) -> Vec<DVector<f64>>,
    x0: &StrategyProfile,
    steps: usize,
    sched: &StepSchedule,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidInput("need at least one step".into()));
    }
    if !x0.is_feasible(game.sets(), 1e-9) {
        return Err(Error::Infeasible("initial profile is outside X".into()));
    }
    let n = game.players();
    let mut is_learner = vec![false; n];
    for &i in learners {
        if i >= n {
            return Err(Error::InvalidInput(format!("no player {i}")));
        }
        is_learner[i] = true;
    }
    let others: Vec<usize> = (0..n).filter(|i| !is_learner[*i]).collect();

    let mut history: Vec<StrategyProfile> = vec![x0.clone()];
    let mut segments = Vec::with_capacity(steps);
    let mut x = x0.clone();
    for t in 0..steps {
        let eta = sched.eta(t);
        let mu = 1.0 / eta; // unit-length segments in curve time
        let gradient: Vec<DVector<f64>> = (0..n)
            .map(|i| {
                if is_learner[i] {
                    game.gradient(i, &x)
                } else {
                    DVector::zeros(game.sets()[i].dim())
                }
            })
            .collect();
        let mut next_blocks: Vec<DVector<f64>> = Vec::with_capacity(n);
        for (i, set) in game.sets().iter().enumerate() {
            if is_learner[i] {
                next_blocks.push(set.project(&(x.block(i) + &gradient[i] * eta))?);
            } else {
                next_blocks.push(x.block(i).clone());
            }
        }
        // The adversary fixes the non-learner blocks played over [t+1, t+2).
        if !others.is_empty() {
            let picks = adversary(t + 1, &history);
            if picks.len() != others.len() {
                return Err(Error::InvalidInput(format!(
                    "adversary returned {} blocks, expected {}",
                    picks.len(),
                    others.len()
                )));
            }
            for (&i, pick) in others.iter().zip(picks) {
                let set = &game.sets()[i];
                if set.contains(&pick, 1e-9) {
                    next_blocks[i] = pick;
                } else {
                    log::warn!(
                        "adversary strategy for player {i} at step {} infeasible; projecting",
                        t + 1
                    );
                    next_blocks[i] = set.project(&pick)?;
                }
            }
        }
        segments.push(Segment {
            start: x,
            gradient,
            eta,
            mu,
            span: 1.0,
            tau_start: t as f64,
        });
        x = StrategyProfile::new(next_blocks);
        history.push(x.clone());
    }
    Ok(Trajectory {
        segments,
        end: x,
        tau_end: steps as f64,
        learner_mask: is_learner,
    })
}
