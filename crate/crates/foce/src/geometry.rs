//! Compact convex action sets with Euclidean projection, tangent/normal cone
//! decomposition, acuteness classification, and curvature metadata.
//!
//! Supported kinds: axis-aligned boxes, probability simplices, Euclidean
//! balls, and bounded polyhedra `{x : <a_j, x> <= b_j}` with unit rows.
//! A constraint is active at `x` iff its slack is at most [`ACTIVE_TOL`];
//! acuteness uses [`ACUTE_TOL`] on pairwise row inner products, and
//! borderline values classify as not acute (forfeiting the stronger
//! polyhedral guarantee rather than claiming it falsely).
//!
//! All values are immutable after construction; every operation is pure.

use crate::error::{Error, Result};
use crate::lp;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Slack below which a constraint counts as active (Ball: distance to the
/// sphere). One global tolerance, used consistently.
pub const ACTIVE_TOL: f64 = 1e-9;
/// Pairwise row inner products at or below this make a polyhedron acute.
pub const ACUTE_TOL: f64 = 1e-12;
/// Polyhedron rows must be unit length within this.
pub const UNIT_ROW_TOL: f64 = 1e-12;

/// Tri-state acuteness classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Acuteness {
    Acute,
    NotAcute,
    /// Acuteness is not defined for this kind (balls).
    Unknown,
}

#[derive(Clone, Debug)]
pub enum SetKind {
    Box {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
    Simplex {
        dim: usize,
    },
    Ball {
        center: DVector<f64>,
        radius: f64,
    },
    Polyhedron {
        /// m x d matrix of unit rows a_j.
        rows: DMatrix<f64>,
        offsets: DVector<f64>,
        /// Per-coordinate bounds established at construction (boundedness proof).
        coord_lo: DVector<f64>,
        coord_hi: DVector<f64>,
    },
}

/// A nonempty compact convex set with projection and cone-projection support.
#[derive(Clone, Debug)]
pub struct ConvexSet {
    kind: SetKind,
    acute: Acuteness,
}

/// Moreau decomposition of a vector at a point of a set: `v = tangent + normal`
/// with `tangent = Π_TC(v)`, `normal = Π_NC(v)` and `<tangent, normal> = 0`.
#[derive(Clone, Debug)]
pub struct ConeDecomposition {
    pub tangent: DVector<f64>,
    pub normal: DVector<f64>,
}

impl ConvexSet {
    pub fn box_set(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::Construction(
                "box requires lower <= upper componentwise".into(),
            ));
        }
        Ok(Self {
            kind: SetKind::Box { lower, upper },
            acute: Acuteness::Acute,
        })
    }

    /// `[-w, w]^d`.
    pub fn symmetric_box(dim: usize, half_width: f64) -> Result<Self> {
        Self::box_set(
            DVector::from_element(dim, -half_width),
            DVector::from_element(dim, half_width),
        )
    }

    /// Probability simplex over `dim` coordinates.
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Construction("simplex needs dim >= 1".into()));
        }
        Ok(Self {
            kind: SetKind::Simplex { dim },
            acute: Acuteness::Acute,
        })
    }

    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::Construction("ball needs radius > 0".into()));
        }
        Ok(Self {
            kind: SetKind::Ball { center, radius },
            acute: Acuteness::Unknown,
        })
    }

    /// `{ x : <a_j, x> <= b_j }` with unit rows. Verified nonempty and bounded
    /// at construction by solving the coordinate-bounding linear programs.
    pub fn polyhedron(rows: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self> {
        let (m, d) = (rows.nrows(), rows.ncols());
        if offsets.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: offsets.len(),
            });
        }
        if m == 0 || d == 0 {
            return Err(Error::Construction("polyhedron needs rows".into()));
        }
        for j in 0..m {
            let n = rows.row(j).norm();
            if (n - 1.0).abs() > UNIT_ROW_TOL {
                return Err(Error::Construction(format!(
                    "polyhedron row {j} has norm {n}, expected 1 within {UNIT_ROW_TOL:e}"
                )));
            }
        }
        let mut coord_lo = DVector::zeros(d);
        let mut coord_hi = DVector::zeros(d);
        for k in 0..d {
            let mut c = DVector::zeros(d);
            c[k] = 1.0;
            let hi = lp::max_linear_over_polyhedron(&rows, &offsets, &c).map_err(|e| {
                Error::Construction(format!("coordinate {k} upper bound: {e}"))
            })?;
            c[k] = -1.0;
            let lo = -lp::max_linear_over_polyhedron(&rows, &offsets, &c).map_err(|e| {
                Error::Construction(format!("coordinate {k} lower bound: {e}"))
            })?;
            coord_lo[k] = lo;
            coord_hi[k] = hi;
        }
        let mut acute = Acuteness::Acute;
        'outer: for j in 0..m {
            for j2 in (j + 1)..m {
                if rows.row(j).dot(&rows.row(j2)) > ACUTE_TOL {
                    acute = Acuteness::NotAcute;
                    break 'outer;
                }
            }
        }
        Ok(Self {
            kind: SetKind::Polyhedron {
                rows,
                offsets,
                coord_lo,
                coord_hi,
            },
            acute,
        })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SetKind::Box { lower, .. } => lower.len(),
            SetKind::Simplex { dim } => *dim,
            SetKind::Ball { center, .. } => center.len(),
            SetKind::Polyhedron { rows, .. } => rows.ncols(),
        }
    }

    /// Curvature bound K of the boundary: 1/radius for balls, 0 for the
    /// polyhedral kinds.
    pub fn curvature_bound(&self) -> f64 {
        match &self.kind {
            SetKind::Ball { radius, .. } => 1.0 / radius,
            _ => 0.0,
        }
    }

    pub fn acuteness(&self) -> Acuteness {
        self.acute
    }

    /// True iff all pairwise constraint-row inner products are at most
    /// [`ACUTE_TOL`]. Boxes and simplices are always acute; balls are not a
    /// polyhedral kind and return an error.
    pub fn is_acute(&self) -> Result<bool> {
        match self.acute {
            Acuteness::Acute => Ok(true),
            Acuteness::NotAcute => Ok(false),
            Acuteness::Unknown => Err(Error::NotApplicable(
                "acuteness is only defined for polyhedral sets".into(),
            )),
        }
    }

    /// Diameter; for general polyhedra an upper bound from the coordinate
    /// bounding box (valid wherever it feeds an upper-bound formula).
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            SetKind::Box { lower, upper } => (upper - lower).norm(),
            SetKind::Simplex { dim } => {
                if *dim <= 1 {
                    0.0
                } else {
                    std::f64::consts::SQRT_2
                }
            }
            SetKind::Ball { radius, .. } => 2.0 * radius,
            SetKind::Polyhedron {
                coord_lo, coord_hi, ..
            } => (coord_hi - coord_lo).norm(),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match &self.kind {
            SetKind::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper.iter()))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            SetKind::Simplex { .. } => {
                x.iter().all(|v| *v >= -tol) && (x.sum() - 1.0).abs() <= tol
            }
            SetKind::Ball { center, radius } => (x - center).norm() <= radius + tol,
            SetKind::Polyhedron { rows, offsets, .. } => {
                let slack = offsets - rows * x;
                slack.iter().all(|s| *s >= -tol)
            }
        }
    }

    /// Euclidean projection `argmin_{p in set} ||p - y||`.
    pub fn project(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        Ok(match &self.kind {
            SetKind::Box { lower, upper } => DVector::from_fn(y.len(), |j, _| {
                y[j].clamp(lower[j], upper[j])
            }),
            SetKind::Simplex { .. } => project_simplex(y),
            SetKind::Ball { center, radius } => {
                let diff = y - center;
                let n = diff.norm();
                if n <= *radius {
                    y.clone()
                } else {
                    center + diff * (*radius / n)
                }
            }
            SetKind::Polyhedron { rows, offsets, .. } => {
                project_polyhedron(rows, offsets, y)?
            }
        })
    }

    /// Moreau decomposition of `v` at `x`: tangent-cone and normal-cone
    /// projections. `x` must lie in the set within [`ACTIVE_TOL`].
    pub fn cone_decompose(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<ConeDecomposition> {
        if v.len() != self.dim() || x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len().max(x.len()),
            });
        }
        if !self.contains(x, ACTIVE_TOL) {
            return Err(Error::Infeasible(format!(
                "cone_decompose: point is outside the set beyond {ACTIVE_TOL:e}"
            )));
        }
        match &self.kind {
            SetKind::Box { lower, upper } => {
                let mut tangent = v.clone();
                let mut normal = DVector::zeros(v.len());
                for j in 0..v.len() {
                    let at_upper = upper[j] - x[j] <= ACTIVE_TOL;
                    let at_lower = x[j] - lower[j] <= ACTIVE_TOL;
                    if at_upper && at_lower {
                        tangent[j] = 0.0;
                        normal[j] = v[j];
                    } else if at_upper {
                        tangent[j] = v[j].min(0.0);
                        normal[j] = v[j].max(0.0);
                    } else if at_lower {
                        tangent[j] = v[j].max(0.0);
                        normal[j] = v[j].min(0.0);
                    }
                }
                Ok(ConeDecomposition { tangent, normal })
            }
            SetKind::Ball { center, radius } => {
                let diff = x - center;
                let dist = diff.norm();
                if radius - dist <= ACTIVE_TOL && dist > 0.0 {
                    let unit = diff / dist;
                    let coeff = v.dot(&unit).max(0.0);
                    let normal = unit * coeff;
                    Ok(ConeDecomposition {
                        tangent: v - &normal,
                        normal,
                    })
                } else {
                    Ok(ConeDecomposition {
                        tangent: v.clone(),
                        normal: DVector::zeros(v.len()),
                    })
                }
            }
            SetKind::Simplex { dim } => {
                let mut gens: Vec<DVector<f64>> = Vec::new();
                let ones = DVector::from_element(*dim, 1.0);
                gens.push(ones.clone());
                gens.push(-ones);
                for j in 0..*dim {
                    if x[j] <= ACTIVE_TOL {
                        let mut e = DVector::zeros(*dim);
                        e[j] = -1.0;
                        gens.push(e);
                    }
                }
                let normal = nnls_cone_projection(&gens, v);
                Ok(ConeDecomposition {
                    tangent: v - &normal,
                    normal,
                })
            }
            SetKind::Polyhedron { rows, offsets, .. } => {
                let mut gens: Vec<DVector<f64>> = Vec::new();
                for j in 0..rows.nrows() {
                    if offsets[j] - rows.row(j).dot(&x.transpose()) <= ACTIVE_TOL {
                        gens.push(rows.row(j).transpose());
                    }
                }
                if gens.is_empty() {
                    return Ok(ConeDecomposition {
                        tangent: v.clone(),
                        normal: DVector::zeros(v.len()),
                    });
                }
                let normal = nnls_cone_projection(&gens, v);
                Ok(ConeDecomposition {
                    tangent: v - &normal,
                    normal,
                })
            }
        }
    }

    /// A feasible reference point: box midpoint, barycenter, ball center, or
    /// the projected center of the polyhedron's coordinate bounding box.
    pub fn centroid(&self) -> DVector<f64> {
        match &self.kind {
            SetKind::Box { lower, upper } => (lower + upper) / 2.0,
            SetKind::Simplex { dim } => DVector::from_element(*dim, 1.0 / *dim as f64),
            SetKind::Ball { center, .. } => center.clone(),
            SetKind::Polyhedron {
                coord_lo, coord_hi, ..
            } => {
                let mid = (coord_lo + coord_hi) / 2.0;
                self.project(&mid).expect("dimension is consistent")
            }
        }
    }

    /// Parameters `s` in `(0, span)` where `s -> project(x0 + s g)` changes
    /// smooth piece (a clamp starts, the active set changes, or the path
    /// crosses a sphere). Exact closed forms for boxes, simplices and balls;
    /// adaptive affine-piece subdivision for general polyhedra.
    pub fn path_breakpoints(
        &self,
        x0: &DVector<f64>,
        g: &DVector<f64>,
        span: f64,
    ) -> Result<Vec<f64>> {
        if span <= 0.0 {
            return Ok(Vec::new());
        }
        let tol = 1e-12 * span.max(1.0);
        let mut out: Vec<f64> = Vec::new();
        match &self.kind {
            SetKind::Box { lower, upper } => {
                for j in 0..x0.len() {
                    if g[j] > 0.0 {
                        let s = (upper[j] - x0[j]) / g[j];
                        if s > tol && s < span - tol {
                            out.push(s);
                        }
                    } else if g[j] < 0.0 {
                        let s = (lower[j] - x0[j]) / g[j];
                        if s > tol && s < span - tol {
                            out.push(s);
                        }
                    }
                }
            }
            SetKind::Simplex { dim } => {
                trace_simplex_breakpoints(*dim, x0, g, span, &mut out);
            }
            SetKind::Ball { center, radius } => {
                let diff = x0 - center;
                let a = g.norm_squared();
                if a > 0.0 {
                    let b = 2.0 * diff.dot(g);
                    let c = diff.norm_squared() - radius * radius;
                    let disc = b * b - 4.0 * a * c;
                    if disc > 0.0 {
                        let sq = disc.sqrt();
                        for s in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                            if s > tol && s < span - tol {
                                out.push(s);
                            }
                        }
                    }
                }
            }
            SetKind::Polyhedron { .. } => {
                let p_of = |s: f64| self.project(&(x0 + g * s));
                let polish = 1e-4 * span;
                subdivide_affine_pieces(&p_of, 0.0, span, 0, polish, &mut out)?;
                out.retain(|s| *s > tol && *s < span - tol);
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() <= tol);
        Ok(out)
    }

    /// Draws a feasible point; used for audits and tangentiality sampling.
    pub fn sample_interior(&self, rng: &mut impl Rng) -> DVector<f64> {
        match &self.kind {
            SetKind::Box { lower, upper } => DVector::from_fn(lower.len(), |j, _| {
                lower[j] + (upper[j] - lower[j]) * rng.random::<f64>()
            }),
            SetKind::Simplex { dim } => sample_simplex(*dim, rng),
            SetKind::Ball { center, radius } => {
                let d = center.len();
                let dir = gaussian_vector(d, rng);
                let n = dir.norm().max(1e-300);
                let u: f64 = rng.random::<f64>();
                center + dir * (radius * u.powf(1.0 / d as f64) / n)
            }
            SetKind::Polyhedron {
                coord_lo, coord_hi, ..
            } => {
                let d = coord_lo.len();
                let scale = (coord_hi - coord_lo).norm().max(1.0);
                let y = self.centroid() + gaussian_vector(d, rng) * (0.25 * scale);
                self.project(&y).expect("dimension is consistent")
            }
        }
    }

    /// Draws a point on (or, for degenerate kinds, in) the boundary.
    pub fn sample_boundary(&self, rng: &mut impl Rng) -> DVector<f64> {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                let mut x = self.sample_interior(rng);
                let j = rng.random_range(0..x.len());
                x[j] = if rng.random::<bool>() { upper[j] } else { lower[j] };
                x
            }
            SetKind::Simplex { dim } => {
                if *dim == 1 {
                    return DVector::from_element(1, 1.0);
                }
                let mut x = sample_simplex(*dim - 1, rng);
                let j = rng.random_range(0..*dim);
                let mut full = DVector::zeros(*dim);
                let mut k = 0;
                for i in 0..*dim {
                    if i == j {
                        continue;
                    }
                    full[i] = x[k];
                    k += 1;
                }
                x = full;
                x
            }
            SetKind::Ball { center, radius } => {
                let dir = gaussian_vector(center.len(), rng);
                let n = dir.norm().max(1e-300);
                center + dir * (*radius / n)
            }
            SetKind::Polyhedron {
                coord_lo, coord_hi, ..
            } => {
                let d = coord_lo.len();
                let scale = (coord_hi - coord_lo).norm().max(1.0);
                let y = self.centroid() + gaussian_vector(d, rng) * (4.0 * scale);
                self.project(&y).expect("dimension is consistent")
            }
        }
    }
}

fn gaussian_vector(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    // Box-Muller; avoids pinning a distributions-crate API for two lines.
    DVector::from_fn(d, |_, _| {
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    })
}

fn sample_simplex(dim: usize, rng: &mut impl Rng) -> DVector<f64> {
    // Normalized exponentials give the uniform (Dirichlet(1)) distribution.
    let mut x = DVector::from_fn(dim, |_, _| -rng.random::<f64>().max(1e-300).ln());
    let s = x.sum();
    x /= s;
    x
}

/// Sort-and-threshold projection onto the probability simplex.
fn project_simplex(y: &DVector<f64>) -> DVector<f64> {
    let d = y.len();
    let mut sorted: Vec<f64> = y.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let cand = (cumsum - 1.0) / (k + 1) as f64;
        if u - cand > 0.0 {
            theta = cand;
        } else {
            break;
        }
    }
    DVector::from_fn(d, |j, _| (y[j] - theta).max(0.0))
}

/// Active-set projection onto `{x : rows x <= offsets}`. Iterates: project
/// onto the working set's equality system through the Gram matrix, drop rows
/// with negative multipliers, add the most violated row. Capped at `100 m`.
fn project_polyhedron(
    rows: &DMatrix<f64>,
    offsets: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    let m = rows.nrows();
    let mut working: Vec<usize> = Vec::new();
    for _ in 0..(100 * m.max(1)) {
        let x;
        if !working.is_empty() {
            let k = working.len();
            let mut bmat = DMatrix::zeros(k, rows.ncols());
            let mut bvec = DVector::zeros(k);
            for (i, &j) in working.iter().enumerate() {
                bmat.row_mut(i).copy_from(&rows.row(j));
                bvec[i] = offsets[j];
            }
            let gram = &bmat * bmat.transpose();
            let rhs = &bmat * y - &bvec;
            let svd = gram.svd(true, true);
            let lambda = svd
                .solve(&rhs, 1e-12)
                .map_err(|e| Error::Numerical(format!("polyhedron projection solve: {e}")))?;
            if let Some((drop_pos, _)) = lambda
                .iter()
                .enumerate()
                .filter(|(_, l)| **l < -1e-11)
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            {
                working.remove(drop_pos);
                continue;
            }
            x = y - bmat.transpose() * lambda;
        } else {
            x = y.clone();
        }
        // Most violated constraint outside the working set.
        let mut worst: Option<(usize, f64)> = None;
        for j in 0..m {
            if working.contains(&j) {
                continue;
            }
            let v = rows.row(j).dot(&x.transpose()) - offsets[j];
            if v > 1e-11 && worst.map(|(_, w)| v > w).unwrap_or(true) {
                worst = Some((j, v));
            }
        }
        match worst {
            Some((j, _)) => working.push(j),
            None => return Ok(x),
        }
    }
    Err(Error::Numerical(
        "polyhedron projection did not settle within 100 m iterations".into(),
    ))
}

/// Lawson-Hanson nonnegative least squares specialized to cone projection:
/// returns `argmin_{z in cone(gens)} ||z - v||`, i.e. `Σ λ_j gens_j` with
/// `λ >= 0`. The passive-set subproblem is solved by SVD so duplicate or
/// opposite generators (the simplex equality written as two rays) are fine.
fn nnls_cone_projection(gens: &[DVector<f64>], v: &DVector<f64>) -> DVector<f64> {
    let k = gens.len();
    let d = v.len();
    if k == 0 {
        return DVector::zeros(d);
    }
    let scale = v.norm().max(1.0);
    let tol = 1e-13 * scale;
    let mut lambda = DVector::zeros(k);
    let mut passive: Vec<usize> = Vec::new();
    let mut z = DVector::zeros(d); // current cone point = Σ λ g

    for _ in 0..(8 * k + 32) {
        // Gradient of 0.5||Σλg - v||^2 in λ is G (z - v); descend where λ can grow.
        let resid = v - &z;
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gens.iter().enumerate() {
            if passive.contains(&j) {
                continue;
            }
            let w = g.dot(&resid);
            if w > tol && best.map(|(_, bw)| w > bw).unwrap_or(true) {
                best = Some((j, w));
            }
        }
        let Some((enter, _)) = best else {
            break;
        };
        passive.push(enter);

        // Inner loop: solve the unconstrained LS on the passive set and clip.
        loop {
            let p = passive.len();
            let mut gmat = DMatrix::zeros(d, p);
            for (col, &j) in passive.iter().enumerate() {
                gmat.column_mut(col).copy_from(&gens[j]);
            }
            let svd = gmat.clone().svd(true, true);
            let s = match svd.solve(v, 1e-12) {
                Ok(s) => s,
                Err(_) => {
                    passive.pop();
                    break;
                }
            };
            if s.iter().all(|si| *si >= -1e-12) {
                lambda.fill(0.0);
                for (col, &j) in passive.iter().enumerate() {
                    lambda[j] = s[col].max(0.0);
                }
                z = &gmat * &s;
                break;
            }
            // Step from current λ toward s until the first coordinate hits 0.
            let cur = DVector::from_fn(p, |col, _| lambda[passive[col]]);
            let mut alpha = 1.0f64;
            for col in 0..p {
                if s[col] < 0.0 {
                    let denom = cur[col] - s[col];
                    if denom > 0.0 {
                        alpha = alpha.min(cur[col] / denom);
                    }
                }
            }
            let stepped = &cur + (s - &cur) * alpha;
            lambda.fill(0.0);
            let mut removed = false;
            let mut col = 0;
            passive.retain(|&j| {
                let val = stepped[col];
                col += 1;
                if val.abs() <= 1e-12 && !removed {
                    removed = true;
                    false
                } else {
                    lambda[j] = val.max(0.0);
                    true
                }
            });
            z.fill(0.0);
            for &j in &passive {
                z += &gens[j] * lambda[j];
            }
            if !removed {
                break;
            }
        }
    }
    z
}

/// Exact event tracing for the projected path on the simplex: the threshold
/// is affine in `s` on a fixed support, so support entries/exits are roots of
/// affine functions.
fn trace_simplex_breakpoints(
    dim: usize,
    x0: &DVector<f64>,
    g: &DVector<f64>,
    span: f64,
    out: &mut Vec<f64>,
) {
    let tol = 1e-12 * span.max(1.0);
    let mut s_cur = 0.0f64;
    for _ in 0..(8 * dim + 16) {
        let probe = s_cur + (span - s_cur).min(1e-9);
        let p = project_simplex(&(x0 + g * probe));
        let support: Vec<usize> = (0..dim).filter(|&j| p[j] > 1e-13).collect();
        if support.is_empty() {
            break;
        }
        let inv = 1.0 / support.len() as f64;
        let sum_x: f64 = support.iter().map(|&j| x0[j]).sum();
        let sum_g: f64 = support.iter().map(|&j| g[j]).sum();
        // theta(s) = (sum_x + s sum_g - 1) / |support|
        let mut s_next = span;
        for j in 0..dim {
            let val0 = x0[j] - (sum_x - 1.0) * inv;
            let slope = g[j] - sum_g * inv;
            if slope.abs() < 1e-15 {
                continue;
            }
            let root = -val0 / slope;
            let crossing = if support.contains(&j) {
                slope < 0.0 // coordinate leaving the support
            } else {
                slope > 0.0 // coordinate entering
            };
            if crossing && root > s_cur + tol && root < s_next - tol {
                s_next = root;
            }
        }
        if s_next >= span - tol {
            break;
        }
        out.push(s_next);
        s_cur = s_next;
    }
}

/// Recursively splits `[lo, hi]` until the projected path is affine on each
/// piece; records the junctions. Probes at the midpoint and a golden-ratio
/// point so symmetric kinks cannot cancel.
///
/// Once a still-non-affine interval is narrow, plain bisection can lose the
/// kink (its chord deviation shrinks linearly with the width, and a kink
/// sitting on a subdivision boundary makes both children affine). Instead,
/// the kink is located directly: the deviation from the interval's chord is
/// unimodal and peaks at the junction, so a ternary search pins it down.
fn subdivide_affine_pieces(
    p_of: &impl Fn(f64) -> Result<DVector<f64>>,
    lo: f64,
    hi: f64,
    depth: usize,
    polish_width: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    let width = hi - lo;
    let p_lo = p_of(lo)?;
    let p_hi = p_of(hi)?;
    let scale = 1.0 + p_lo.norm().max(p_hi.norm());
    let deviation = |t: f64, pt: &DVector<f64>| -> f64 {
        let lin = &p_lo + (&p_hi - &p_lo) * ((t - lo) / width);
        (pt - lin).norm()
    };
    let mid = 0.5 * (lo + hi);
    let gold = lo + 0.618_033_988_749_895 * width;
    let p_mid = p_of(mid)?;
    let p_gold = p_of(gold)?;
    let tol = 1e-10 * scale;
    if deviation(mid, &p_mid) <= tol && deviation(gold, &p_gold) <= tol {
        return Ok(());
    }
    if width <= polish_width || depth >= 40 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..100 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if deviation(m1, &p_of(m1)?) < deviation(m2, &p_of(m2)?) {
                a = m1;
            } else {
                b = m2;
            }
            if b - a <= 1e-12 * width.max(1.0) {
                break;
            }
        }
        out.push(0.5 * (a + b));
        return Ok(());
    }
    subdivide_affine_pieces(p_of, lo, mid, depth + 1, polish_width, out)?;
    subdivide_affine_pieces(p_of, mid, hi, depth + 1, polish_width, out)
}
