//! Smooth game data: players, action sets, utility gradients with magnitude
//! and Lipschitz bounds. Includes built-in games and the multilinear
//! extension of finite normal-form games.
//!
//! Only gradients are required of a game; utility values are optional and
//! enable finite-difference audits. Custom gradient evaluators must be pure
//! and reentrant — games are shared immutably across threads.

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Block vector of per-player action vectors `x = (x_1, ..., x_N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyProfile {
    blocks: Vec<DVector<f64>>,
}

impl StrategyProfile {
    pub fn new(blocks: Vec<DVector<f64>>) -> Self {
        Self { blocks }
    }

    pub fn players(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &DVector<f64> {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[DVector<f64>] {
        &self.blocks
    }

    pub fn block_mut(&mut self, i: usize) -> &mut DVector<f64> {
        &mut self.blocks[i]
    }

    /// Total dimension D = Σ D_i.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    pub fn flatten(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        let mut k = 0;
        for b in &self.blocks {
            out.rows_mut(k, b.len()).copy_from(b);
            k += b.len();
        }
        out
    }

    pub fn from_flat(dims: &[usize], flat: &DVector<f64>) -> Result<Self> {
        let total: usize = dims.iter().sum();
        if flat.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: flat.len(),
            });
        }
        let mut blocks = Vec::with_capacity(dims.len());
        let mut k = 0;
        for &d in dims {
            blocks.push(DVector::from_fn(d, |j, _| flat[k + j]));
            k += d;
        }
        Ok(Self { blocks })
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(other.blocks.iter())
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_feasible(&self, sets: &[ConvexSet], tol: f64) -> bool {
        self.blocks.len() == sets.len()
            && self
                .blocks
                .iter()
                .zip(sets.iter())
                .all(|(b, s)| s.contains(b, tol))
    }
}

pub type GradientFn = Arc<dyn Fn(usize, &StrategyProfile) -> DVector<f64> + Send + Sync>;
pub type UtilityFn = Arc<dyn Fn(usize, &StrategyProfile) -> f64 + Send + Sync>;

/// A smooth game: compact convex action sets and per-player gradient
/// evaluators with declared bounds `||∇_i u_i|| <= G_i` and Lipschitz moduli
/// `L_i`. Declared bounds feed the guarantee formulas, so they are verified
/// by sampling (warn, not error) rather than trusted blindly.
#[derive(Clone)]
pub struct SmoothGame {
    sets: Vec<ConvexSet>,
    gradient: GradientFn,
    utility: Option<UtilityFn>,
    grad_bounds: Vec<f64>,
    lipschitz: Vec<f64>,
    name: String,
}

impl std::fmt::Debug for SmoothGame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothGame")
            .field("name", &self.name)
            .field("players", &self.sets.len())
            .field("grad_bounds", &self.grad_bounds)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl SmoothGame {
    pub fn new(
        name: impl Into<String>,
        sets: Vec<ConvexSet>,
        gradient: GradientFn,
        utility: Option<UtilityFn>,
        grad_bounds: Vec<f64>,
        lipschitz: Vec<f64>,
    ) -> Result<Self> {
        let n = sets.len();
        if n == 0 {
            return Err(Error::Construction("a game needs at least one player".into()));
        }
        if grad_bounds.len() != n || lipschitz.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: grad_bounds.len().min(lipschitz.len()),
            });
        }
        let game = Self {
            sets,
            gradient,
            utility,
            grad_bounds,
            lipschitz,
            name: name.into(),
        };
        // Declared bounds feed the guarantee formulas: audit them by
        // sampling at registration and warn (never error) on violation.
        game.verify_bounds_by_sampling(64, 0);
        Ok(game)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn players(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[ConvexSet] {
        &self.sets
    }

    /// Replaces the action sets (dimensions must match). Lets experiments run
    /// the same gradient field over ball or polyhedron geometry.
    pub fn with_sets(mut self, sets: Vec<ConvexSet>) -> Result<Self> {
        if sets.len() != self.sets.len() {
            return Err(Error::DimensionMismatch {
                expected: self.sets.len(),
                got: sets.len(),
            });
        }
        for (old, new) in self.sets.iter().zip(sets.iter()) {
            if old.dim() != new.dim() {
                return Err(Error::DimensionMismatch {
                    expected: old.dim(),
                    got: new.dim(),
                });
            }
        }
        self.sets = sets;
        // Re-audit the declared bounds over the new geometry.
        self.verify_bounds_by_sampling(64, 0);
        Ok(self)
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.sets.iter().map(|s| s.dim()).collect()
    }

    /// `∇_i u_i(x)`.
    pub fn gradient(&self, i: usize, x: &StrategyProfile) -> DVector<f64> {
        (self.gradient)(i, x)
    }

    pub fn has_utility(&self) -> bool {
        self.utility.is_some()
    }

    pub fn utility(&self, i: usize, x: &StrategyProfile) -> Result<f64> {
        match &self.utility {
            Some(u) => Ok(u(i, x)),
            None => Err(Error::NotAuditable),
        }
    }

    pub fn grad_bound(&self, i: usize) -> f64 {
        self.grad_bounds[i]
    }

    pub fn grad_bounds(&self) -> &[f64] {
        &self.grad_bounds
    }

    pub fn lipschitz(&self, i: usize) -> f64 {
        self.lipschitz[i]
    }

    pub fn lipschitz_bounds(&self) -> &[f64] {
        &self.lipschitz
    }

    /// Diameter of the product set: sqrt(Σ d(X_i)^2).
    pub fn diameter(&self) -> f64 {
        self.sets
            .iter()
            .map(|s| s.diameter().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn centroid_profile(&self) -> StrategyProfile {
        StrategyProfile::new(self.sets.iter().map(|s| s.centroid()).collect())
    }

    pub fn sample_profile(&self, rng: &mut impl Rng) -> StrategyProfile {
        StrategyProfile::new(self.sets.iter().map(|s| s.sample_interior(rng)).collect())
    }

    /// Samples feasible profiles (and pairs) and logs a warning when a
    /// declared bound is exceeded; returns the worst observed gradient norm
    /// and Lipschitz ratio per player.
    pub fn verify_bounds_by_sampling(&self, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_norm = vec![0.0f64; self.players()];
        let mut worst_ratio = vec![0.0f64; self.players()];
        for _ in 0..n {
            let x = self.sample_profile(&mut rng);
            let y = self.sample_profile(&mut rng);
            let dist = x.distance(&y);
            for i in 0..self.players() {
                let gx = self.gradient(i, &x);
                worst_norm[i] = worst_norm[i].max(gx.norm());
                if dist > 1e-9 {
                    let gy = self.gradient(i, &y);
                    worst_ratio[i] = worst_ratio[i].max((gx - gy).norm() / dist);
                }
            }
        }
        for i in 0..self.players() {
            if worst_norm[i] > self.grad_bounds[i] + 1e-9 {
                log::warn!(
                    "game {}: sampled gradient norm {} exceeds declared G_{} = {}",
                    self.name,
                    worst_norm[i],
                    i,
                    self.grad_bounds[i]
                );
            }
            if worst_ratio[i] > self.lipschitz[i] + 1e-9 {
                log::warn!(
                    "game {}: sampled Lipschitz ratio {} exceeds declared L_{} = {}",
                    self.name,
                    worst_ratio[i],
                    i,
                    self.lipschitz[i]
                );
            }
        }
        (worst_norm, worst_ratio)
    }
}

/// Two players on `[-1, 1]` with `u_1 = -x_1 x_2`, `u_2 = x_1 x_2`.
/// The gradient dynamics rotate around the unique equilibrium at the origin.
pub fn matching_pennies() -> SmoothGame {
    let sets = vec![
        ConvexSet::symmetric_box(1, 1.0).expect("static bounds"),
        ConvexSet::symmetric_box(1, 1.0).expect("static bounds"),
    ];
    let gradient: GradientFn = Arc::new(|i, x: &StrategyProfile| {
        let (x1, x2) = (x.block(0)[0], x.block(1)[0]);
        DVector::from_element(1, if i == 0 { -x2 } else { x1 })
    });
    let utility: UtilityFn = Arc::new(|i, x: &StrategyProfile| {
        let p = x.block(0)[0] * x.block(1)[0];
        if i == 0 {
            -p
        } else {
            p
        }
    });
    SmoothGame::new(
        "matching_pennies",
        sets,
        gradient,
        Some(utility),
        vec![1.0, 1.0],
        vec![1.0, 1.0],
    )
    .expect("static construction")
}

/// A game with identically zero utilities over symmetric boxes; useful for
/// exercising set geometry without payoff effects.
pub fn zero_game(dims: &[usize], half_width: f64) -> Result<SmoothGame> {
    let sets = dims
        .iter()
        .map(|&d| ConvexSet::symmetric_box(d, half_width))
        .collect::<Result<Vec<_>>>()?;
    let dims_owned: Vec<usize> = dims.to_vec();
    let gradient: GradientFn =
        Arc::new(move |i, _x: &StrategyProfile| DVector::zeros(dims_owned[i]));
    let utility: UtilityFn = Arc::new(|_i, _x| 0.0);
    let n = dims.len();
    SmoothGame::new(
        "zero",
        sets,
        gradient,
        Some(utility),
        vec![0.0; n],
        vec![0.0; n],
    )
}

/// Finite normal-form game: per-player payoff tensors over pure profiles,
/// stored row-major (first player's action index varies slowest).
#[derive(Clone, Debug)]
pub struct NormalFormGame {
    action_counts: Vec<usize>,
    /// payoffs[i][flat_index(a)] = U_i(a)
    payoffs: Vec<Vec<f64>>,
    name: String,
}

impl NormalFormGame {
    pub fn new(
        name: impl Into<String>,
        action_counts: Vec<usize>,
        payoffs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = action_counts.len();
        if n == 0 || action_counts.contains(&0) {
            return Err(Error::Construction(
                "normal-form game needs players with nonempty action sets".into(),
            ));
        }
        let total: usize = action_counts.iter().product();
        if payoffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: payoffs.len(),
            });
        }
        for (i, p) in payoffs.iter().enumerate() {
            if p.len() != total {
                return Err(Error::DimensionMismatch {
                    expected: total,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Construction(format!(
                    "player {i} payoff tensor has a non-finite entry"
                )));
            }
        }
        Ok(Self {
            action_counts,
            payoffs,
            name: name.into(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_profiles(&self) -> usize {
        self.action_counts.iter().product()
    }

    pub fn flat_index(&self, profile: &[usize]) -> usize {
        let mut idx = 0;
        for (i, &a) in profile.iter().enumerate() {
            idx = idx * self.action_counts[i] + a;
        }
        idx
    }

    pub fn profile_of_index(&self, mut idx: usize) -> Vec<usize> {
        let n = self.players();
        let mut profile = vec![0usize; n];
        for i in (0..n).rev() {
            profile[i] = idx % self.action_counts[i];
            idx /= self.action_counts[i];
        }
        profile
    }

    pub fn payoff(&self, player: usize, profile: &[usize]) -> f64 {
        self.payoffs[player][self.flat_index(profile)]
    }

    pub fn payoff_tensor(&self, player: usize) -> &[f64] {
        &self.payoffs[player]
    }

    pub fn max_abs_payoff(&self, player: usize) -> f64 {
        self.payoffs[player].iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Iterates over all pure profiles in row-major order.
    pub fn profiles(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.num_profiles()).map(|idx| self.profile_of_index(idx))
    }
}

/// Mixed extension on simplex products: `u_i(x) = Σ_a Π_j x_j(a_j) U_i(a)`,
/// with gradients `∇_i u_i(x)_{a_i} = Σ_{a_{-i}} Π_{j≠i} x_j(a_j) U_i(a_i, a_{-i})`.
///
/// Bounds are conservative closed forms:
/// `G_i = sqrt(|A_i|) max|U_i|` and
/// `L_i = (N-1) sqrt(|A_i| max_j |A_j|) max|U_i|`.
pub fn multilinear_extension(nf: &NormalFormGame) -> SmoothGame {
    let nf = Arc::new(nf.clone());
    let n = nf.players();
    let sets: Vec<ConvexSet> = nf
        .action_counts()
        .iter()
        .map(|&c| ConvexSet::simplex(c).expect("action counts are positive"))
        .collect();

    let nf_g = Arc::clone(&nf);
    let gradient: GradientFn = Arc::new(move |i, x: &StrategyProfile| {
        let counts = nf_g.action_counts();
        let mut grad = DVector::zeros(counts[i]);
        for profile in nf_g.profiles() {
            let mut w = 1.0;
            for (j, &aj) in profile.iter().enumerate() {
                if j != i {
                    w *= x.block(j)[aj];
                }
            }
            if w != 0.0 {
                grad[profile[i]] += w * nf_g.payoff(i, &profile);
            }
        }
        grad
    });

    let nf_u = Arc::clone(&nf);
    let utility: UtilityFn = Arc::new(move |i, x: &StrategyProfile| {
        let mut total = 0.0;
        for profile in nf_u.profiles() {
            let mut w = 1.0;
            for (j, &aj) in profile.iter().enumerate() {
                w *= x.block(j)[aj];
            }
            if w != 0.0 {
                total += w * nf_u.payoff(i, &profile);
            }
        }
        total
    });

    let max_count = *nf.action_counts().iter().max().expect("players >= 1") as f64;
    let grad_bounds: Vec<f64> = (0..n)
        .map(|i| (nf.action_counts()[i] as f64).sqrt() * nf.max_abs_payoff(i))
        .collect();
    let lipschitz: Vec<f64> = (0..n)
        .map(|i| {
            (n as f64 - 1.0)
                * (nf.action_counts()[i] as f64 * max_count).sqrt()
                * nf.max_abs_payoff(i)
        })
        .collect();

    SmoothGame::new(
        format!("multilinear({})", nf.name()),
        sets,
        gradient,
        Some(utility),
        grad_bounds,
        lipschitz,
    )
    .expect("construction from a valid normal-form game")
}

/// Max over players and coordinates of the relative error between the
/// declared gradient and a central finite difference of the utility:
/// `|(u(x + h e) - u(x - h e)) / 2h - grad| / max(1, |grad|)`.
pub fn finite_difference_audit(game: &SmoothGame, x: &StrategyProfile, h: f64) -> Result<f64> {
    if !game.has_utility() {
        return Err(Error::NotAuditable);
    }
    let mut worst = 0.0f64;
    for i in 0..game.players() {
        let grad = game.gradient(i, x);
        for j in 0..grad.len() {
            let mut plus = x.clone();
            plus.block_mut(i)[j] += h;
            let mut minus = x.clone();
            minus.block_mut(i)[j] -= h;
            let fd = (game.utility(i, &plus)? - game.utility(i, &minus)?) / (2.0 * h);
            let err = (fd - grad[j]).abs() / grad[j].abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

// Bundled 2x2 normal-form games (payoffs are utilities; costs, where a module
// needs them, are the negated tensors or supplied separately).

/// Matching pennies with ±1 payoffs: u_1 = +1 on a match, u_2 = -u_1.
pub fn matching_pennies_nf() -> NormalFormGame {
    NormalFormGame::new(
        "matching_pennies_nf",
        vec![2, 2],
        vec![
            vec![1.0, -1.0, -1.0, 1.0],
            vec![-1.0, 1.0, 1.0, -1.0],
        ],
    )
    .expect("static payoffs")
}

/// Prisoner's dilemma. Action 0 = cooperate, action 1 = defect; utilities are
/// the negated classic sentence costs, so defection strictly dominates.
pub fn prisoners_dilemma() -> NormalFormGame {
    NormalFormGame::new(
        "prisoners_dilemma",
        vec![2, 2],
        vec![
            vec![-1.0, -3.0, -0.0, -2.0],
            vec![-1.0, -0.0, -3.0, -2.0],
        ],
    )
    .expect("static payoffs")
}

/// Sentence costs for the prisoner's dilemma (C_i = -u_i), used by the
/// smoothness and worst-case-expectation checks.
pub fn prisoners_dilemma_costs() -> Vec<Vec<f64>> {
    vec![vec![1.0, 3.0, 0.0, 2.0], vec![1.0, 0.0, 3.0, 2.0]]
}

/// Pure coordination: both players get 1 when actions match.
pub fn coordination() -> NormalFormGame {
    NormalFormGame::new(
        "coordination",
        vec![2, 2],
        vec![
            vec![1.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 1.0],
        ],
    )
    .expect("static payoffs")
}

/// Chicken / hawk-dove.
pub fn chicken() -> NormalFormGame {
    NormalFormGame::new(
        "chicken",
        vec![2, 2],
        vec![
            vec![0.0, -1.0, 1.0, -10.0],
            vec![0.0, 1.0, -1.0, -10.0],
        ],
    )
    .expect("static payoffs")
}

/// Seeded random normal-form game with payoffs uniform in [-1, 1].
pub fn random_nf(action_counts: Vec<usize>, seed: u64) -> NormalFormGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = action_counts.iter().product();
    let payoffs = (0..action_counts.len())
        .map(|_| (0..total).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    NormalFormGame::new(format!("random({seed})"), action_counts, payoffs)
        .expect("generated payoffs are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn profile(coords: &[&[f64]]) -> StrategyProfile {
        StrategyProfile::new(coords.iter().map(|c| DVector::from_row_slice(c)).collect())
    }

    #[test]
    fn pennies_gradients() {
        let g = matching_pennies();
        let x = profile(&[&[0.5], &[0.25]]);
        assert_abs_diff_eq!(g.gradient(0, &x)[0], -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(g.gradient(1, &x)[0], 0.5, epsilon = 1e-15);
        let origin = profile(&[&[0.0], &[0.0]]);
        assert_eq!(g.gradient(0, &origin)[0], 0.0);
        assert_eq!(g.gradient(1, &origin)[0], 0.0);
    }

    #[test]
    fn multilinear_gradient_matches_brute_force() {
        let nf = random_nf(vec![2, 2], 5);
        let game = multilinear_extension(&nf);
        // Pure profile (a1 = 0, a2 = 0): gradient of player 0 is the payoff slice.
        let pure = profile(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let g0 = game.gradient(0, &pure);
        assert_abs_diff_eq!(g0[0], nf.payoff(0, &[0, 0]), epsilon = 1e-15);
        assert_abs_diff_eq!(g0[1], nf.payoff(0, &[1, 0]), epsilon = 1e-15);
        // Opponent uniform: each entry is the average over the opponent action.
        let mixed = profile(&[&[1.0, 0.0], &[0.5, 0.5]]);
        let g0 = game.gradient(0, &mixed);
        for a in 0..2 {
            let expect = 0.5 * (nf.payoff(0, &[a, 0]) + nf.payoff(0, &[a, 1]));
            assert_abs_diff_eq!(g0[a], expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_tensor_has_zero_gradient() {
        let nf = NormalFormGame::new("z", vec![2, 2], vec![vec![0.0; 4], vec![0.0; 4]]).unwrap();
        let game = multilinear_extension(&nf);
        let x = profile(&[&[0.3, 0.7], &[0.6, 0.4]]);
        assert_eq!(game.gradient(0, &x).norm(), 0.0);
        assert_eq!(game.gradient(1, &x).norm(), 0.0);
    }

    #[test]
    fn multilinear_identity_and_bounds() {
        let nf = random_nf(vec![3, 2], 9);
        let game = multilinear_extension(&nf);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = game.sample_profile(&mut rng);
            for i in 0..2 {
                // Degree-1 homogeneity in the own strategy.
                let u = game.utility(i, &x).unwrap();
                let g = game.gradient(i, &x);
                assert_abs_diff_eq!(u, x.block(i).dot(&g), epsilon = 1e-12);
                assert!(g.norm() <= game.grad_bound(i) + 1e-9);
            }
        }
    }

    #[test]
    fn audit_pennies_is_exact() {
        let game = matching_pennies();
        let x = profile(&[&[0.3], &[-0.4]]);
        let err = finite_difference_audit(&game, &x, 1e-5).unwrap();
        assert!(err <= 1e-8, "bilinear utility should audit to rounding: {err}");
    }

    #[test]
    fn audit_multilinear_uniform() {
        let nf = random_nf(vec![2, 2], 3);
        let game = multilinear_extension(&nf);
        let x = profile(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let err = finite_difference_audit(&game, &x, 1e-5).unwrap();
        assert!(err <= 1e-6, "audit error {err}");
    }

    #[test]
    fn audit_requires_utility() {
        let sets = vec![ConvexSet::symmetric_box(1, 1.0).unwrap()];
        let gradient: GradientFn = Arc::new(|_, _| DVector::zeros(1));
        let game = SmoothGame::new("g", sets, gradient, None, vec![0.0], vec![0.0]).unwrap();
        let x = profile(&[&[0.0]]);
        assert!(matches!(
            finite_difference_audit(&game, &x, 1e-5),
            Err(Error::NotAuditable)
        ));
    }

    #[test]
    fn flat_roundtrip() {
        let x = profile(&[&[0.1, 0.2], &[0.3]]);
        let flat = x.flatten();
        let back = StrategyProfile::from_flat(&[2, 1], &flat).unwrap();
        assert_eq!(x, back);
    }

    #[test]
    fn row_major_indexing() {
        let nf = prisoners_dilemma();
        assert_eq!(nf.flat_index(&[0, 1]), 1);
        assert_eq!(nf.flat_index(&[1, 0]), 2);
        assert_eq!(nf.profile_of_index(3), vec![1, 1]);
        // Defection dominates cooperate for both.
        assert!(nf.payoff(0, &[1, 0]) > nf.payoff(0, &[0, 0]));
        assert!(nf.payoff(0, &[1, 1]) > nf.payoff(0, &[0, 1]));
    }
}
