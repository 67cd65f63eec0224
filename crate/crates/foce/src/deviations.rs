//! Vector-field deviation families: construction, evaluation, bounds,
//! tangentiality checks, and linear/conical combination.
//!
//! A deviation field `f : X -> R^D` assigns every profile a block vector of
//! per-player directions. A family is *coarse* when every member is the
//! gradient field of some function; it is *tangential* when every member lies
//! in the tangent cone at every feasible point, which is what makes cone
//! projection commute with conical combination.

use crate::error::{Error, Result};
use crate::games::{SmoothGame, StrategyProfile};
use crate::geometry::{ConvexSet, SetKind};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub type FieldEval = Arc<dyn Fn(&StrategyProfile) -> Vec<DVector<f64>> + Send + Sync>;

#[derive(Clone)]
pub enum FieldKind {
    /// `f(x) = P x + q` on the flattened profile.
    Affine { p: DMatrix<f64>, q: DVector<f64> },
    /// Per-player `f_i(x) = Q_i x_i + c_i`, the gradient field of
    /// `h(x) = Σ_i (x_i' Q_i x_i / 2 + c_i' x_i)` with symmetric `Q_i`.
    GradientQuadratic {
        blocks: Vec<Option<(DMatrix<f64>, DVector<f64>)>>,
    },
    /// User-supplied evaluator; `coarse` must be declared.
    Custom { eval: FieldEval, coarse: bool },
}

/// One deviation vector field with declared magnitude and Lipschitz bounds.
#[derive(Clone)]
pub struct VectorField {
    label: String,
    kind: FieldKind,
    dims: Vec<usize>,
    g_bound: f64,
    l_bound: f64,
    support: Vec<bool>,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("label", &self.label)
            .field("g_bound", &self.g_bound)
            .field("l_bound", &self.l_bound)
            .finish()
    }
}

fn split_blocks(dims: &[usize], flat: &DVector<f64>) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(dims.len());
    let mut k = 0;
    for &d in dims {
        out.push(DVector::from_fn(d, |j, _| flat[k + j]));
        k += d;
    }
    out
}

impl VectorField {
    pub fn affine(
        label: impl Into<String>,
        dims: Vec<usize>,
        p: DMatrix<f64>,
        q: DVector<f64>,
        g_bound: f64,
        l_bound: f64,
    ) -> Result<Self> {
        let total: usize = dims.iter().sum();
        if p.nrows() != total || p.ncols() != total || q.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: p.nrows().max(q.len()),
            });
        }
        let mut support = Vec::with_capacity(dims.len());
        let mut row = 0;
        for &d in &dims {
            let mut nonzero = false;
            for r in row..row + d {
                if q[r] != 0.0 || (0..total).any(|c| p[(r, c)] != 0.0) {
                    nonzero = true;
                    break;
                }
            }
            support.push(nonzero);
            row += d;
        }
        Ok(Self {
            label: label.into(),
            kind: FieldKind::Affine { p, q },
            dims,
            g_bound,
            l_bound,
            support,
        })
    }

    /// Affine field with bounds computed by interval arithmetic over `sets`.
    pub fn affine_over_sets(
        label: impl Into<String>,
        sets: &[ConvexSet],
        p: DMatrix<f64>,
        q: DVector<f64>,
    ) -> Result<Self> {
        let dims: Vec<usize> = sets.iter().map(|s| s.dim()).collect();
        let g = affine_magnitude_bound(&p, &q, sets);
        let l = spectral_norm(&p);
        Self::affine(label, dims, p, q, g, l)
    }

    pub fn gradient_quadratic(
        label: impl Into<String>,
        dims: Vec<usize>,
        blocks: Vec<Option<(DMatrix<f64>, DVector<f64>)>>,
        g_bound: f64,
    ) -> Result<Self> {
        if blocks.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                got: blocks.len(),
            });
        }
        let mut l_bound = 0.0f64;
        for (i, b) in blocks.iter().enumerate() {
            if let Some((qm, cv)) = b {
                if qm.nrows() != dims[i] || qm.ncols() != dims[i] || cv.len() != dims[i] {
                    return Err(Error::DimensionMismatch {
                        expected: dims[i],
                        got: qm.nrows().max(cv.len()),
                    });
                }
                if (qm - qm.transpose()).abs().max() > 1e-12 {
                    return Err(Error::Construction(format!(
                        "gradient-quadratic block {i} must be symmetric"
                    )));
                }
                l_bound = l_bound.max(spectral_norm(qm));
            }
        }
        let support = blocks.iter().map(|b| b.is_some()).collect();
        Ok(Self {
            label: label.into(),
            kind: FieldKind::GradientQuadratic { blocks },
            dims,
            g_bound,
            l_bound,
            support,
        })
    }

    pub fn custom(
        label: impl Into<String>,
        dims: Vec<usize>,
        eval: FieldEval,
        coarse: bool,
        g_bound: f64,
        l_bound: f64,
    ) -> Self {
        let support = vec![true; dims.len()];
        Self {
            label: label.into(),
            kind: FieldKind::Custom { eval, coarse },
            dims,
            g_bound,
            l_bound,
            support,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn g_bound(&self) -> f64 {
        self.g_bound
    }

    pub fn l_bound(&self) -> f64 {
        self.l_bound
    }

    pub fn player_support(&self) -> &[bool] {
        &self.support
    }

    /// Evaluates the field as per-player blocks.
    pub fn evaluate(&self, x: &StrategyProfile) -> Vec<DVector<f64>> {
        match &self.kind {
            FieldKind::Affine { p, q } => {
                let flat = p * x.flatten() + q;
                split_blocks(&self.dims, &flat)
            }
            FieldKind::GradientQuadratic { blocks } => blocks
                .iter()
                .enumerate()
                .map(|(i, b)| match b {
                    Some((qm, cv)) => qm * x.block(i) + cv,
                    None => DVector::zeros(self.dims[i]),
                })
                .collect(),
            FieldKind::Custom { eval, .. } => eval(x),
        }
    }

    /// True iff this field is a gradient field. For an affine field that
    /// means a symmetric matrix; gradient-quadratic blocks are symmetric by
    /// construction.
    pub fn is_coarse(&self) -> bool {
        match &self.kind {
            FieldKind::Affine { p, .. } => (p - p.transpose()).abs().max() <= 1e-12,
            FieldKind::GradientQuadratic { .. } => true,
            FieldKind::Custom { coarse, .. } => *coarse,
        }
    }

    /// Value of the generating function, defined for gradient-quadratic
    /// fields (`h(x) = Σ_i x_i' Q_i x_i / 2 + c_i' x_i`).
    pub fn generating_value(&self, x: &StrategyProfile) -> Option<f64> {
        match &self.kind {
            FieldKind::GradientQuadratic { blocks } => {
                let mut total = 0.0;
                for (i, b) in blocks.iter().enumerate() {
                    if let Some((qm, cv)) = b {
                        let xi = x.block(i);
                        total += 0.5 * xi.dot(&(qm * xi)) + cv.dot(xi);
                    }
                }
                Some(total)
            }
            _ => None,
        }
    }

    /// Full-dimension affine form `(P, q)` when one exists.
    pub fn as_affine(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let total: usize = self.dims.iter().sum();
        match &self.kind {
            FieldKind::Affine { p, q } => Some((p.clone(), q.clone())),
            FieldKind::GradientQuadratic { blocks } => {
                let mut p = DMatrix::zeros(total, total);
                let mut q = DVector::zeros(total);
                let mut off = 0;
                for (i, b) in blocks.iter().enumerate() {
                    let d = self.dims[i];
                    if let Some((qm, cv)) = b {
                        p.view_mut((off, off), (d, d)).copy_from(qm);
                        q.rows_mut(off, d).copy_from(cv);
                    }
                    off += d;
                }
                Some((p, q))
            }
            FieldKind::Custom { .. } => None,
        }
    }
}

/// Interval-arithmetic magnitude bound for `||P x + q||` over a product set.
fn affine_magnitude_bound(p: &DMatrix<f64>, q: &DVector<f64>, sets: &[ConvexSet]) -> f64 {
    let (lo, hi) = coordinate_bounds(sets);
    let mut total = 0.0;
    for r in 0..p.nrows() {
        let mut row_lo = q[r];
        let mut row_hi = q[r];
        for c in 0..p.ncols() {
            let a = p[(r, c)] * lo[c];
            let b = p[(r, c)] * hi[c];
            row_lo += a.min(b);
            row_hi += a.max(b);
        }
        total += row_lo.abs().max(row_hi.abs()).powi(2);
    }
    total.sqrt()
}

fn coordinate_bounds(sets: &[ConvexSet]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for s in sets {
        match s.kind() {
            SetKind::Box { lower, upper } => {
                lo.extend(lower.iter());
                hi.extend(upper.iter());
            }
            SetKind::Simplex { dim } => {
                lo.extend(std::iter::repeat_n(0.0, *dim));
                hi.extend(std::iter::repeat_n(1.0, *dim));
            }
            SetKind::Ball { center, radius } => {
                lo.extend(center.iter().map(|c| c - radius));
                hi.extend(center.iter().map(|c| c + radius));
            }
            SetKind::Polyhedron {
                coord_lo, coord_hi, ..
            } => {
                lo.extend(coord_lo.iter());
                hi.extend(coord_hi.iter());
            }
        }
    }
    (lo, hi)
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn max_block_norm(set: &ConvexSet) -> f64 {
    match set.kind() {
        SetKind::Box { lower, upper } => lower
            .iter()
            .zip(upper.iter())
            .map(|(l, u)| l.abs().max(u.abs()).powi(2))
            .sum::<f64>()
            .sqrt(),
        SetKind::Simplex { .. } => 1.0,
        SetKind::Ball { center, radius } => center.norm() + radius,
        SetKind::Polyhedron {
            coord_lo, coord_hi, ..
        } => coord_lo
            .iter()
            .zip(coord_hi.iter())
            .map(|(l, u)| l.abs().max(u.abs()).powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

/// A finite list of deviation fields. `coarse` is true iff every member is a
/// gradient field.
#[derive(Clone, Debug)]
pub struct FieldFamily {
    fields: Vec<VectorField>,
    coarse: bool,
}

impl FieldFamily {
    pub fn new(fields: Vec<VectorField>) -> Self {
        let coarse = fields.iter().all(|f| f.is_coarse());
        Self { fields, coarse }
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn is_coarse(&self) -> bool {
        self.coarse
    }

    pub fn max_g_bound(&self) -> f64 {
        self.fields.iter().fold(0.0, |m, f| m.max(f.g_bound()))
    }

    pub fn extend(mut self, other: FieldFamily) -> Self {
        self.fields.extend(other.fields);
        self.coarse = self.fields.iter().all(|f| f.is_coarse());
        self
    }
}

/// Vertices of a player's set where pull-to-point deviations anchor.
fn vertices(set: &ConvexSet) -> Result<Vec<DVector<f64>>> {
    match set.kind() {
        SetKind::Simplex { dim } => Ok((0..*dim)
            .map(|j| {
                let mut e = DVector::zeros(*dim);
                e[j] = 1.0;
                e
            })
            .collect()),
        SetKind::Box { lower, upper } => {
            let d = lower.len();
            if d > 20 {
                return Err(Error::InvalidInput(format!(
                    "box vertex enumeration capped at 20 dims, got {d}"
                )));
            }
            let mut out = Vec::with_capacity(1 << d);
            for mask in 0..(1usize << d) {
                out.push(DVector::from_fn(d, |j, _| {
                    if mask >> j & 1 == 1 {
                        upper[j]
                    } else {
                        lower[j]
                    }
                }));
            }
            Ok(out)
        }
        _ => Err(Error::NotApplicable(
            "pull-to-point families need simplex or box sets".into(),
        )),
    }
}

/// One gradient field per (player, vertex): block `f_i = v - x_i`, zero
/// elsewhere; the gradient of `-||x_i - v||^2 / 2`. The induced constraints
/// over simplex products are the usual coarse-equilibrium constraints.
pub fn pull_to_point_family(game: &SmoothGame) -> Result<FieldFamily> {
    let dims = game.block_dims();
    let mut fields = Vec::new();
    for (i, set) in game.sets().iter().enumerate() {
        for (k, v) in vertices(set)?.into_iter().enumerate() {
            let d = set.dim();
            let mut blocks = vec![None; dims.len()];
            blocks[i] = Some((-DMatrix::identity(d, d), v));
            fields.push(VectorField::gradient_quadratic(
                format!("pull(p{i},v{k})"),
                dims.clone(),
                blocks,
                set.diameter(),
            )?);
        }
    }
    Ok(FieldFamily::new(fields))
}

/// One aggregated pull field toward a fixed pure profile across all players:
/// block `f_i = e_{a*_i} - x_i` for every `i`.
pub fn aggregate_pull_field(dims: &[usize], targets: &[DVector<f64>]) -> Result<VectorField> {
    if targets.len() != dims.len() {
        return Err(Error::DimensionMismatch {
            expected: dims.len(),
            got: targets.len(),
        });
    }
    let blocks = targets
        .iter()
        .enumerate()
        .map(|(i, t)| Some((-DMatrix::identity(dims[i], dims[i]), t.clone())))
        .collect();
    let g = (dims.iter().map(|&d| d as f64).sum::<f64>()).sqrt() * 2.0;
    VectorField::gradient_quadratic("pull(aggregate)", dims.to_vec(), blocks, g)
}

/// The correlated-equilibrium family on simplex products: one affine field
/// `x_i(a_i) (e_{a'_i} - e_{a_i})` per (player, ordered action pair).
/// These fields are tangential but not gradient fields.
pub fn ce_field_family(action_counts: &[usize]) -> FieldFamily {
    let dims: Vec<usize> = action_counts.to_vec();
    let total: usize = dims.iter().sum();
    let mut fields = Vec::new();
    let mut offset = 0;
    for (i, &c) in action_counts.iter().enumerate() {
        for a in 0..c {
            for a2 in 0..c {
                if a == a2 {
                    continue;
                }
                let mut p = DMatrix::zeros(total, total);
                p[(offset + a2, offset + a)] = 1.0;
                p[(offset + a, offset + a)] = -1.0;
                let f = VectorField::affine(
                    format!("ce(p{i},{a}->{a2})"),
                    dims.clone(),
                    p,
                    DVector::zeros(total),
                    std::f64::consts::SQRT_2,
                    std::f64::consts::SQRT_2,
                )
                .expect("static shapes");
                fields.push(f);
            }
        }
        offset += c;
    }
    FieldFamily::new(fields)
}

/// Eight affine fields on `[-1,1]^2`: the four pull-to-corner gradient
/// fields plus four rotational fields with nonzero curl. The rotational
/// members rule out cycling distributions in two-player bilinear games.
pub fn extension_family_2x2() -> FieldFamily {
    let dims = vec![1usize, 1usize];
    let mk = |label: &str, p: [f64; 4], q: [f64; 2]| {
        VectorField::affine(
            label,
            dims.clone(),
            DMatrix::from_row_slice(2, 2, &p),
            DVector::from_row_slice(&q),
            2.0,
            spectral_norm(&DMatrix::from_row_slice(2, 2, &p)),
        )
        .expect("static shapes")
    };
    FieldFamily::new(vec![
        mk("f1+", [-1.0, 0.0, 0.0, 0.0], [1.0, 0.0]),
        mk("f1-", [-1.0, 0.0, 0.0, 0.0], [-1.0, 0.0]),
        mk("f2+", [0.0, 0.0, 0.0, -1.0], [0.0, 1.0]),
        mk("f2-", [0.0, 0.0, 0.0, -1.0], [0.0, -1.0]),
        mk("g1-", [-1.0, -1.0, 0.0, 0.0], [0.0, 0.0]),
        mk("g1+", [-1.0, 1.0, 0.0, 0.0], [0.0, 0.0]),
        mk("g2-", [0.0, 0.0, -1.0, -1.0], [0.0, 0.0]),
        mk("g2+", [0.0, 0.0, 1.0, -1.0], [0.0, 0.0]),
    ])
}

/// The constant field `f_i = v` on one player, zero elsewhere: the gradient
/// of the linear function `<x_i, v>`. Finite sets of directions are how the
/// (infinite) unit-ball family of linear deviations is exposed.
pub fn direction_field(dims: &[usize], player: usize, v: DVector<f64>) -> Result<VectorField> {
    if player >= dims.len() {
        return Err(Error::InvalidInput(format!("no player {player}")));
    }
    if v.len() != dims[player] {
        return Err(Error::DimensionMismatch {
            expected: dims[player],
            got: v.len(),
        });
    }
    let g = v.norm();
    let mut blocks = vec![None; dims.len()];
    blocks[player] = Some((DMatrix::zeros(v.len(), v.len()), v));
    VectorField::gradient_quadratic(format!("dir(p{player})"), dims.to_vec(), blocks, g)
}

/// The gradient field of `||x||^2 / 2`: identity on every player block.
pub fn radial_field(sets: &[ConvexSet]) -> VectorField {
    let dims: Vec<usize> = sets.iter().map(|s| s.dim()).collect();
    let blocks = dims
        .iter()
        .map(|&d| Some((DMatrix::identity(d, d), DVector::zeros(d))))
        .collect();
    let g = sets
        .iter()
        .map(|s| max_block_norm(s).powi(2))
        .sum::<f64>()
        .sqrt();
    VectorField::gradient_quadratic("radial", dims, blocks, g).expect("identity blocks")
}

#[derive(Clone, Debug)]
pub struct TangentialityReport {
    pub tangential: bool,
    pub worst_normal_norm: f64,
}

/// Certifies tangentiality numerically on boundary-biased samples (every
/// other sample puts each player on a face of their set). Tangential iff
/// every normal-part norm is at most 1e-8; the worst violation is reported
/// so a failure is auditable.
pub fn check_tangential(
    field: &VectorField,
    sets: &[ConvexSet],
    n_samples: usize,
    seed: u64,
) -> Result<TangentialityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in 0..n_samples {
        let x = StrategyProfile::new(
            sets.iter()
                .map(|s| {
                    if k % 2 == 0 {
                        s.sample_boundary(&mut rng)
                    } else {
                        s.sample_interior(&mut rng)
                    }
                })
                .collect(),
        );
        let blocks = field.evaluate(&x);
        let mut norm_sq = 0.0;
        for (i, set) in sets.iter().enumerate() {
            let d = set.cone_decompose(x.block(i), &blocks[i])?;
            norm_sq += d.normal.norm_squared();
        }
        worst = worst.max(norm_sq.sqrt());
    }
    Ok(TangentialityReport {
        tangential: worst <= 1e-8,
        worst_normal_norm: worst,
    })
}

/// Weighted combination `Σ_f μ_f f`. When every member is affine-representable
/// the result is a single affine field; otherwise a summed evaluator.
/// `conical` requires `μ >= 0`.
pub fn combine(family: &FieldFamily, weights: &[f64], conical: bool) -> Result<VectorField> {
    if weights.len() != family.len() {
        return Err(Error::DimensionMismatch {
            expected: family.len(),
            got: weights.len(),
        });
    }
    if conical {
        if let Some(w) = weights.iter().find(|w| **w < 0.0) {
            return Err(Error::InvalidInput(format!(
                "conical combination requires nonnegative weights, got {w}"
            )));
        }
    }
    if family.is_empty() {
        return Err(Error::InvalidInput("cannot combine an empty family".into()));
    }
    let dims = family.fields()[0].dims().to_vec();
    let g_bound: f64 = family
        .fields()
        .iter()
        .zip(weights)
        .map(|(f, w)| w.abs() * f.g_bound())
        .sum();
    let l_bound: f64 = family
        .fields()
        .iter()
        .zip(weights)
        .map(|(f, w)| w.abs() * f.l_bound())
        .sum();

    let affines: Option<Vec<(DMatrix<f64>, DVector<f64>)>> =
        family.fields().iter().map(|f| f.as_affine()).collect();
    if let Some(parts) = affines {
        let total: usize = dims.iter().sum();
        let mut p = DMatrix::zeros(total, total);
        let mut q = DVector::zeros(total);
        for ((pf, qf), &w) in parts.iter().zip(weights) {
            if w != 0.0 {
                p += pf * w;
                q += qf * w;
            }
        }
        return VectorField::affine("combine", dims, p, q, g_bound, l_bound);
    }
    let members: Vec<(VectorField, f64)> = family
        .fields()
        .iter()
        .cloned()
        .zip(weights.iter().copied())
        .filter(|(_, w)| *w != 0.0)
        .collect();
    let dims_for_eval = dims.clone();
    let eval: FieldEval = Arc::new(move |x: &StrategyProfile| {
        let mut acc: Vec<DVector<f64>> =
            dims_for_eval.iter().map(|&d| DVector::zeros(d)).collect();
        for (f, w) in &members {
            for (i, b) in f.evaluate(x).into_iter().enumerate() {
                acc[i] += b * *w;
            }
        }
        acc
    });
    let coarse = family.is_coarse();
    Ok(VectorField::custom(
        "combine", dims, eval, coarse, g_bound, l_bound,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{matching_pennies, multilinear_extension, random_nf};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn profile2(a: f64, b: f64) -> StrategyProfile {
        StrategyProfile::new(vec![
            DVector::from_element(1, a),
            DVector::from_element(1, b),
        ])
    }

    fn field_by_label<'a>(fam: &'a FieldFamily, label: &str) -> &'a VectorField {
        fam.fields()
            .iter()
            .find(|f| f.label() == label)
            .expect("label present")
    }

    #[test]
    fn extension_fields_match_printed_forms() {
        let fam = extension_family_2x2();
        assert_eq!(fam.len(), 8);
        let x = profile2(0.5, 0.3);
        let f1p = field_by_label(&fam, "f1+").evaluate(&x);
        assert_abs_diff_eq!(f1p[0][0], 0.5, epsilon = 1e-15);
        assert_eq!(f1p[1][0], 0.0);
        let g1m = field_by_label(&fam, "g1-").evaluate(&x);
        assert_abs_diff_eq!(g1m[0][0], -0.8, epsilon = 1e-15);
        let g2p = field_by_label(&fam, "g2+").evaluate(&profile2(0.4, -0.2));
        assert_abs_diff_eq!(g2p[1][0], 0.6, epsilon = 1e-15);
        // f1- vanishes at x1 = -1.
        let f1m = field_by_label(&fam, "f1-").evaluate(&profile2(-1.0, 0.9));
        assert_eq!(f1m[0][0], 0.0);
        // All members are declared with G_f = 2.
        assert!(fam.fields().iter().all(|f| f.g_bound() == 2.0));
        // The f fields are gradient fields, the g fields are not.
        assert!(field_by_label(&fam, "f2-").is_coarse());
        assert!(!field_by_label(&fam, "g1+").is_coarse());
        assert!(!fam.is_coarse());
    }

    #[test]
    fn rotational_sum_identity_in_pennies() {
        // <g1- + g2+, gradient> = x1^2 + x2^2 for the pennies gradient field.
        let fam = extension_family_2x2();
        let game = matching_pennies();
        let x = profile2(0.6, 0.8);
        let g1m = field_by_label(&fam, "g1-").evaluate(&x);
        let g2p = field_by_label(&fam, "g2+").evaluate(&x);
        let mut total = 0.0;
        for i in 0..2 {
            total += (g1m[i][0] + g2p[i][0]) * game.gradient(i, &x)[0];
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pull_family_counts_and_values() {
        let nf = random_nf(vec![2, 2], 1);
        let game = multilinear_extension(&nf);
        let fam = pull_to_point_family(&game).unwrap();
        assert_eq!(fam.len(), 4);
        assert!(fam.is_coarse());
        // Pull to self vanishes.
        let e1 = DVector::from_row_slice(&[1.0, 0.0]);
        let x = StrategyProfile::new(vec![e1.clone(), DVector::from_row_slice(&[0.5, 0.5])]);
        let f = field_by_label(&fam, "pull(p0,v0)").evaluate(&x);
        assert!(f[0].norm() < 1e-15);
        assert!(f[1].norm() < 1e-15, "unsupported player block must be zero");
        // At the barycenter the pull toward e_1 is (2/3, -1/3).
        let nf3 = random_nf(vec![3, 2], 2);
        let game3 = multilinear_extension(&nf3);
        let fam3 = pull_to_point_family(&game3).unwrap();
        let bary = StrategyProfile::new(vec![
            DVector::from_element(3, 1.0 / 3.0),
            DVector::from_row_slice(&[0.5, 0.5]),
        ]);
        let f = field_by_label(&fam3, "pull(p0,v0)").evaluate(&bary);
        assert_abs_diff_eq!(f[0][0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f[0][1], -1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn ce_family_counts_and_values() {
        let fam = ce_field_family(&[2, 2]);
        assert_eq!(fam.len(), 4);
        assert!(!fam.is_coarse());
        let x = StrategyProfile::new(vec![
            DVector::from_row_slice(&[0.3, 0.7]),
            DVector::from_row_slice(&[0.5, 0.5]),
        ]);
        let f = field_by_label(&fam, "ce(p0,0->1)").evaluate(&x);
        assert_abs_diff_eq!(f[0][0], -0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(f[0][1], 0.3, epsilon = 1e-15);
        // Vanishes when the source action has no mass.
        let e2 = StrategyProfile::new(vec![
            DVector::from_row_slice(&[0.0, 1.0]),
            DVector::from_row_slice(&[0.5, 0.5]),
        ]);
        let f = field_by_label(&fam, "ce(p0,0->1)").evaluate(&e2);
        assert!(f[0].norm() < 1e-15);
    }

    #[test]
    fn tangentiality_checks() {
        let simplex_sets = vec![
            ConvexSet::simplex(2).unwrap(),
            ConvexSet::simplex(2).unwrap(),
        ];
        for f in ce_field_family(&[2, 2]).fields() {
            let rep = check_tangential(f, &simplex_sets, 2000, 3).unwrap();
            assert!(rep.tangential, "{} worst {}", f.label(), rep.worst_normal_norm);
        }
        let box_sets = vec![
            ConvexSet::symmetric_box(1, 1.0).unwrap(),
            ConvexSet::symmetric_box(1, 1.0).unwrap(),
        ];
        let fam = extension_family_2x2();
        let rep = check_tangential(field_by_label(&fam, "f1+"), &box_sets, 2000, 4).unwrap();
        assert!(rep.tangential);
        // A constant outward field is not tangential at the face it points out of.
        let outward = VectorField::affine(
            "outward",
            vec![1, 1],
            DMatrix::zeros(2, 2),
            DVector::from_row_slice(&[1.0, 0.0]),
            1.0,
            0.0,
        )
        .unwrap();
        let rep = check_tangential(&outward, &box_sets, 2000, 5).unwrap();
        assert!(!rep.tangential);
        assert!(rep.worst_normal_norm > 0.5);
    }

    #[test]
    fn combine_affine_and_linearity() {
        let fam = extension_family_2x2();
        let zero = combine(&fam, &[0.0; 8], false).unwrap();
        let x = profile2(0.3, -0.9);
        assert!(zero.evaluate(&x).iter().all(|b| b.norm() == 0.0));

        let mut one_hot = [0.0; 8];
        let idx = fam.fields().iter().position(|f| f.label() == "g1-").unwrap();
        one_hot[idx] = 1.0;
        let g1m = combine(&fam, &one_hot, true).unwrap();
        let direct = field_by_label(&fam, "g1-").evaluate(&x);
        let combined = g1m.evaluate(&x);
        assert!((combined[0].clone() - direct[0].clone()).norm() < 1e-15);

        // g1- + g2+ = (-x1 - x2, x1 - x2)
        let mut w = [0.0; 8];
        w[fam.fields().iter().position(|f| f.label() == "g1-").unwrap()] = 1.0;
        w[fam.fields().iter().position(|f| f.label() == "g2+").unwrap()] = 1.0;
        let sum = combine(&fam, &w, true).unwrap();
        let v = sum.evaluate(&profile2(0.2, 0.5));
        assert_abs_diff_eq!(v[0][0], -0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1][0], -0.3, epsilon = 1e-15);

        // Linearity: combine(mu + nu) = combine(mu) + combine(nu) pointwise.
        let mu = [0.3, -0.2, 0.0, 0.5, 1.0, 0.0, -0.7, 0.25];
        let nu = [0.1, 0.9, -0.4, 0.0, -1.0, 0.6, 0.0, 0.5];
        let both: Vec<f64> = mu.iter().zip(nu.iter()).map(|(a, b)| a + b).collect();
        let fa = combine(&fam, &mu, false).unwrap();
        let fb = combine(&fam, &nu, false).unwrap();
        let fc = combine(&fam, &both, false).unwrap();
        for pt in [profile2(0.0, 0.0), profile2(-1.0, 1.0), profile2(0.4, 0.6)] {
            let va = fa.evaluate(&pt);
            let vb = fb.evaluate(&pt);
            let vc = fc.evaluate(&pt);
            for i in 0..2 {
                assert_abs_diff_eq!(vc[i][0], va[i][0] + vb[i][0], epsilon = 1e-12);
            }
        }

        assert!(matches!(
            combine(&fam, &[-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], true),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn direction_field_is_constant_on_one_player() {
        let f = direction_field(&[2, 3], 1, DVector::from_row_slice(&[0.6, -0.8, 0.0])).unwrap();
        assert!(f.is_coarse());
        assert_abs_diff_eq!(f.g_bound(), 1.0, epsilon = 1e-15);
        let x = StrategyProfile::new(vec![
            DVector::from_row_slice(&[0.5, 0.5]),
            DVector::from_row_slice(&[0.2, 0.3, 0.5]),
        ]);
        let blocks = f.evaluate(&x);
        assert_eq!(blocks[0].norm(), 0.0);
        assert_abs_diff_eq!(blocks[1][0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(blocks[1][1], -0.8, epsilon = 1e-15);
        assert!(direction_field(&[2], 3, DVector::zeros(2)).is_err());
    }

    #[test]
    fn gradient_quadratic_matches_finite_differences() {
        let nf = random_nf(vec![2, 2], 8);
        let game = multilinear_extension(&nf);
        let fam = pull_to_point_family(&game).unwrap();
        let x = StrategyProfile::new(vec![
            DVector::from_row_slice(&[0.4, 0.6]),
            DVector::from_row_slice(&[0.25, 0.75]),
        ]);
        let h = 1e-6;
        for f in fam.fields() {
            let blocks = f.evaluate(&x);
            for (i, block) in blocks.iter().enumerate() {
                for j in 0..block.len() {
                    let mut plus = x.clone();
                    plus.block_mut(i)[j] += h;
                    let mut minus = x.clone();
                    minus.block_mut(i)[j] -= h;
                    let fd = (f.generating_value(&plus).unwrap()
                        - f.generating_value(&minus).unwrap())
                        / (2.0 * h);
                    assert_abs_diff_eq!(fd, block[j], epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn declared_magnitude_bounds_hold_on_samples() {
        let nf = random_nf(vec![3, 2], 31);
        let ext = multilinear_extension(&nf);
        let pennies = matching_pennies();
        let families: Vec<(&crate::games::SmoothGame, Vec<VectorField>)> = vec![
            (&ext, pull_to_point_family(&ext).unwrap().fields().to_vec()),
            (&ext, ce_field_family(nf.action_counts()).fields().to_vec()),
            (&ext, vec![radial_field(ext.sets())]),
            (&pennies, extension_family_2x2().fields().to_vec()),
            (&pennies, vec![radial_field(pennies.sets())]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for (game, fields) in &families {
            for _ in 0..500 {
                let x = StrategyProfile::new(
                    game.sets()
                        .iter()
                        .map(|s| {
                            if rng.random::<bool>() {
                                s.sample_boundary(&mut rng)
                            } else {
                                s.sample_interior(&mut rng)
                            }
                        })
                        .collect(),
                );
                for f in fields {
                    let norm: f64 = f
                        .evaluate(&x)
                        .iter()
                        .map(|b| b.norm_squared())
                        .sum::<f64>()
                        .sqrt();
                    assert!(
                        norm <= f.g_bound() + 1e-9,
                        "{}: sampled norm {} exceeds declared {}",
                        f.label(),
                        norm,
                        f.g_bound()
                    );
                }
            }
        }
    }

    #[test]
    fn tangent_part_of_conical_combination_is_additive() {
        let sets = [ConvexSet::simplex(2).unwrap(),
            ConvexSet::simplex(2).unwrap()];
        let fam = ce_field_family(&[2, 2]);
        let w = [0.5, 1.25, 0.0, 2.0];
        let comb = combine(&fam, &w, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let x = StrategyProfile::new(vec![
                sets[0].sample_boundary(&mut rng),
                sets[1].sample_interior(&mut rng),
            ]);
            let combined = comb.evaluate(&x);
            for (i, set) in sets.iter().enumerate() {
                let lhs = set.cone_decompose(x.block(i), &combined[i]).unwrap().tangent;
                let mut rhs = DVector::zeros(2);
                for (f, &wf) in fam.fields().iter().zip(w.iter()) {
                    let b = f.evaluate(&x);
                    rhs += set.cone_decompose(x.block(i), &b[i]).unwrap().tangent * wf;
                }
                assert!((lhs - rhs).norm() < 1e-10);
            }
        }
    }
}
