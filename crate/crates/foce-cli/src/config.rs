//! Flat key-value experiment configuration.
//!
//! A config is a text file of `key = value` lines with `#` comments; keys use
//! dotted namespaces (`schedule.c`, `certify.grid.resolution`). Vectors are
//! comma-separated, matrix rows semicolon-separated. Every validation error
//! names the offending key.

use foce::certify::{ConstraintSet, DualProgram, EquilibriumMode, Sense};
use foce::deviations::{
    ce_field_family, extension_family_2x2, pull_to_point_family, radial_field, FieldFamily,
    VectorField,
};
use foce::dynamics::{MuMode, StepRule, StepSchedule};
use foce::games::{
    matching_pennies, multilinear_extension, zero_game, NormalFormGame, SmoothGame,
    StrategyProfile,
};
use foce::geometry::ConvexSet;
use foce::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
    path: PathBuf,
}

impl KeyValues {
    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text, path.to_path_buf())
    }

    pub fn parse(text: &str, path: PathBuf) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidInput(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries, path })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::InvalidInput(format!("missing config key `{key}`")))
    }

    pub fn f64_of(&self, key: &str) -> Result<f64> {
        self.require(key)?
            .parse()
            .map_err(|_| Error::InvalidInput(format!("key `{key}` is not a number")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.f64_of(key),
        }
    }

    pub fn usize_of(&self, key: &str) -> Result<usize> {
        self.require(key)?
            .parse()
            .map_err(|_| Error::InvalidInput(format!("key `{key}` is not an integer")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.usize_of(key),
        }
    }

    pub fn u64_of(&self, key: &str) -> Result<u64> {
        self.require(key)?
            .parse()
            .map_err(|_| Error::InvalidInput(format!("key `{key}` is not an integer")))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::InvalidInput(format!(
                "key `{key}` must be true or false, got `{v}`"
            ))),
        }
    }

    pub fn vector_of(&self, key: &str) -> Result<Vec<f64>> {
        parse_float_list(self.require(key)?)
            .map_err(|e| Error::InvalidInput(format!("key `{key}`: {e}")))
    }

    pub fn usize_list_of(&self, key: &str) -> Result<Vec<usize>> {
        self.require(key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("key `{key}`: bad integer `{s}`")))
            })
            .collect()
    }

    pub fn dir(&self) -> &Path {
        self.path.parent().unwrap_or_else(|| Path::new("."))
    }
}

fn parse_float_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{tok}`"))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Dynamics,
    Regret,
    MatchStationary,
    MatchLocal,
    Certify,
    NfAudit,
}

impl Mode {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "dynamics" => Mode::Dynamics,
            "regret" => Mode::Regret,
            "match-stationary" => Mode::MatchStationary,
            "match-local" => Mode::MatchLocal,
            "certify" => Mode::Certify,
            "nf-audit" => Mode::NfAudit,
            other => {
                return Err(Error::InvalidInput(format!(
                    "key `mode`: unknown mode `{other}`"
                )))
            }
        })
    }
}

/// Fully resolved experiment: game, schedule, family, and mode parameters.
pub struct Experiment {
    pub mode: Mode,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub game: SmoothGame,
    /// Present when the game is a normal-form game (file or built-in).
    pub normal_form: Option<NormalFormGame>,
    pub start: StrategyProfile,
    pub schedule: Option<StepSchedule>,
    pub steps: usize,
    pub family: Option<FieldFamily>,
    pub kv: KeyValues,
}

/// Reads a normal-form game file: `players`, `actions` (comma list), and one
/// `payoffs.<i>` row-major tensor per player (0-based).
pub fn parse_normal_form(path: &Path) -> Result<NormalFormGame> {
    let kv = KeyValues::parse_file(path)?;
    let players = kv.usize_of("players")?;
    let actions = kv.usize_list_of("actions")?;
    if actions.len() != players {
        return Err(Error::InvalidInput(format!(
            "key `actions`: {} entries for {players} players",
            actions.len()
        )));
    }
    let mut payoffs = Vec::with_capacity(players);
    for i in 0..players {
        payoffs.push(kv.vector_of(&format!("payoffs.{i}"))?);
    }
    NormalFormGame::new(
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "nf".into()),
        actions,
        payoffs,
    )
}

fn parse_set_override(kv: &KeyValues, idx: usize, dim: usize) -> Result<Option<ConvexSet>> {
    let key = format!("set.{idx}.kind");
    let Some(kind) = kv.get(&key) else {
        return Ok(None);
    };
    let set = match kind {
        "box" => {
            let lower = kv.vector_of(&format!("set.{idx}.lower"))?;
            let upper = kv.vector_of(&format!("set.{idx}.upper"))?;
            ConvexSet::box_set(
                DVector::from_row_slice(&lower),
                DVector::from_row_slice(&upper),
            )?
        }
        "simplex" => ConvexSet::simplex(dim)?,
        "ball" => {
            let center = kv.vector_of(&format!("set.{idx}.center"))?;
            let radius = kv.f64_of(&format!("set.{idx}.radius"))?;
            ConvexSet::ball(DVector::from_row_slice(&center), radius)?
        }
        "polyhedron" => {
            let rows_raw = kv.require(&format!("set.{idx}.rows"))?;
            let rows: Vec<Vec<f64>> = rows_raw
                .split(';')
                .map(|r| {
                    parse_float_list(r).map_err(|e| {
                        Error::InvalidInput(format!("key `set.{idx}.rows`: {e}"))
                    })
                })
                .collect::<Result<_>>()?;
            let offsets = kv.vector_of(&format!("set.{idx}.offsets"))?;
            let m = rows.len();
            let d = rows.first().map(|r| r.len()).unwrap_or(0);
            let mut mat = DMatrix::zeros(m, d);
            for (r, row) in rows.iter().enumerate() {
                if row.len() != d {
                    return Err(Error::InvalidInput(format!(
                        "key `set.{idx}.rows`: ragged rows"
                    )));
                }
                for (c, v) in row.iter().enumerate() {
                    mat[(r, c)] = *v;
                }
            }
            ConvexSet::polyhedron(mat, DVector::from_row_slice(&offsets))?
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "key `set.{idx}.kind`: unknown kind `{other}`"
            )))
        }
    };
    if set.dim() != dim {
        return Err(Error::InvalidInput(format!(
            "key `set.{idx}.kind`: dimension {} does not match the game's {dim}",
            set.dim()
        )));
    }
    Ok(Some(set))
}

fn resolve_game(kv: &KeyValues) -> Result<(SmoothGame, Option<NormalFormGame>)> {
    let (game, nf) = match (kv.get("game.builtin"), kv.get("game.file")) {
        (Some(name), None) => match name {
            "matching_pennies" => (matching_pennies(), None),
            "matching_pennies_nf" => {
                let nf = foce::games::matching_pennies_nf();
                (multilinear_extension(&nf), Some(nf))
            }
            "prisoners_dilemma" => {
                let nf = foce::games::prisoners_dilemma();
                (multilinear_extension(&nf), Some(nf))
            }
            "coordination" => {
                let nf = foce::games::coordination();
                (multilinear_extension(&nf), Some(nf))
            }
            "chicken" => {
                let nf = foce::games::chicken();
                (multilinear_extension(&nf), Some(nf))
            }
            "zero" => {
                let dims = kv.usize_list_of("game.dims")?;
                let width = kv.f64_or("game.half_width", 1.0)?;
                (zero_game(&dims, width)?, None)
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "key `game.builtin`: unknown game `{other}`"
                )))
            }
        },
        (None, Some(file)) => {
            let path = kv.dir().join(file);
            let nf = parse_normal_form(&path)?;
            (multilinear_extension(&nf), Some(nf))
        }
        _ => {
            return Err(Error::InvalidInput(
                "exactly one of `game.builtin` / `game.file` is required".into(),
            ))
        }
    };
    // Optional per-player set overrides.
    let mut sets: Vec<ConvexSet> = game.sets().to_vec();
    let mut any = false;
    for (i, set) in sets.iter_mut().enumerate() {
        if let Some(over) = parse_set_override(kv, i, set.dim())? {
            *set = over;
            any = true;
        }
    }
    let game = if any { game.with_sets(sets)? } else { game };
    Ok((game, nf))
}

fn resolve_schedule(kv: &KeyValues) -> Result<Option<StepSchedule>> {
    let Some(kind) = kv.get("schedule.kind") else {
        return Ok(None);
    };
    let rule = match kind {
        "inverse_sqrt" => StepRule::InverseSqrt {
            c: kv.f64_of("schedule.c")?,
        },
        "constant" => StepRule::Constant {
            eta: kv.f64_of("schedule.eta")?,
        },
        "custom" => StepRule::Custom(kv.vector_of("schedule.etas")?),
        other => {
            return Err(Error::InvalidInput(format!(
                "key `schedule.kind`: unknown kind `{other}`"
            )))
        }
    };
    let mu_mode = match kv.get("schedule.mu").unwrap_or("inverse_eta") {
        "unit" => MuMode::Unit,
        "inverse_eta" => MuMode::InverseEta,
        other => {
            return Err(Error::InvalidInput(format!(
                "key `schedule.mu`: unknown mode `{other}`"
            )))
        }
    };
    Ok(Some(StepSchedule::new(rule, mu_mode)?))
}

fn resolve_family(kv: &KeyValues, game: &SmoothGame) -> Result<Option<FieldFamily>> {
    let mut fields: Vec<VectorField> = Vec::new();
    if let Some(builtins) = kv.get("family.builtins") {
        for name in builtins.split(',').map(|s| s.trim()) {
            match name {
                "pull_to_point" => {
                    fields.extend(pull_to_point_family(game)?.fields().iter().cloned())
                }
                "ce_fields" => {
                    let counts: Vec<usize> = game.block_dims();
                    fields.extend(ce_field_family(&counts).fields().iter().cloned());
                }
                "extension_2x2" => {
                    fields.extend(extension_family_2x2().fields().iter().cloned())
                }
                "radial" => fields.push(radial_field(game.sets())),
                other => {
                    return Err(Error::InvalidInput(format!(
                        "key `family.builtins`: unknown builder `{other}`"
                    )))
                }
            }
        }
    }
    // Inline affine fields: field.<k>.p (row-major D x D), field.<k>.q.
    let total: usize = game.block_dims().iter().sum();
    for k in 0.. {
        let pkey = format!("field.{k}.p");
        if kv.get(&pkey).is_none() {
            break;
        }
        let p = kv.vector_of(&pkey)?;
        if p.len() != total * total {
            return Err(Error::InvalidInput(format!(
                "key `{pkey}`: expected {} entries",
                total * total
            )));
        }
        let q = match kv.get(&format!("field.{k}.q")) {
            Some(_) => kv.vector_of(&format!("field.{k}.q"))?,
            None => vec![0.0; total],
        };
        fields.push(VectorField::affine_over_sets(
            format!("inline{k}"),
            game.sets(),
            DMatrix::from_row_slice(total, total, &p),
            DVector::from_row_slice(&q),
        )?);
    }
    if fields.is_empty() {
        Ok(None)
    } else {
        Ok(Some(FieldFamily::new(fields)))
    }
}

pub fn load(path: &Path, seed_override: Option<u64>, out_override: Option<PathBuf>) -> Result<Experiment> {
    let kv = KeyValues::parse_file(path)?;
    let mode = Mode::parse(kv.require("mode")?)?;
    let seed = match seed_override {
        Some(s) => s,
        None => kv.u64_of("seed")?, // no wall-clock defaults
    };
    let out_dir = out_override
        .or_else(|| kv.get("out.dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let (game, normal_form) = resolve_game(&kv)?;
    let start = match kv.get("start") {
        Some(_) => {
            let flat = kv.vector_of("start")?;
            let profile =
                StrategyProfile::from_flat(&game.block_dims(), &DVector::from_row_slice(&flat))
                    .map_err(|_| {
                        Error::InvalidInput(format!(
                            "key `start`: expected {} coordinates",
                            game.block_dims().iter().sum::<usize>()
                        ))
                    })?;
            if !profile.is_feasible(game.sets(), 1e-9) {
                return Err(Error::InvalidInput("key `start`: infeasible profile".into()));
            }
            profile
        }
        None => game.centroid_profile(),
    };
    let schedule = resolve_schedule(&kv)?;
    let steps = kv.usize_or("schedule.steps", 0)?;
    let needs_schedule = matches!(mode, Mode::Dynamics | Mode::Regret);
    if needs_schedule {
        if schedule.is_none() {
            return Err(Error::InvalidInput(
                "key `schedule.kind` is required for this mode".into(),
            ));
        }
        if steps == 0 {
            return Err(Error::InvalidInput(
                "key `schedule.steps` must be >= 1".into(),
            ));
        }
    }
    let family = resolve_family(&kv, &game)?;
    Ok(Experiment {
        mode,
        seed,
        out_dir,
        game,
        normal_form,
        start,
        schedule,
        steps,
        family,
        kv,
    })
}

/// Deviation and metric builders for certify mode, resolved from config keys.
pub fn resolve_certificate(
    exp: &Experiment,
) -> Result<(foce::certify::Certificate, foce::certify::PerformanceMetric)> {
    let kv = &exp.kv;
    let program = match kv.require("certify.program")? {
        "stationary-coarse" => DualProgram::StationaryCoarse,
        "local-coarse" => DualProgram::LocalCoarse,
        "stationary-field" => DualProgram::StationaryField,
        "local-field" => DualProgram::LocalField,
        other => {
            return Err(Error::InvalidInput(format!(
                "key `certify.program`: unknown program `{other}`"
            )))
        }
    };
    let gamma = kv.f64_of("certify.gamma")?;
    let kind = match program {
        DualProgram::StationaryCoarse | DualProgram::LocalCoarse => {
            let scale = kv.f64_or("certify.h_scale", 1.0)?;
            match kv.require("certify.h")? {
                "pennies_lyapunov" => {
                    let m1 = kv.f64_of("certify.m1")?;
                    let base = foce::certify::pennies_lyapunov(m1);
                    let value = base.value.clone();
                    let gradient = base.gradient.clone();
                    let scaled = foce::certify::AnalyticFunction {
                        label: format!("{}*{scale}", base.label),
                        value: std::sync::Arc::new(move |x| scale * (value)(x)),
                        gradient: std::sync::Arc::new(move |x| {
                            gradient(x).into_iter().map(|b| b * scale).collect()
                        }),
                        grad_bound: base.grad_bound * scale.abs(),
                    };
                    foce::certify::CertificateKind::CoarseAnalytic(scaled)
                }
                "radial" => {
                    let f = radial_field(exp.game.sets());
                    let g = f.g_bound() * scale.abs();
                    let dims = exp.game.block_dims();
                    let blocks = dims
                        .iter()
                        .map(|&d| Some((DMatrix::identity(d, d) * scale, DVector::zeros(d))))
                        .collect();
                    foce::certify::CertificateKind::CoarseField(
                        VectorField::gradient_quadratic("radial", dims, blocks, g)?,
                    )
                }
                // Rotational-symmetry certificate with p(r) = r^power; the
                // paired metric comes from `certify.q = rotational`.
                "pennies_rotational" => {
                    let (h, _) = resolve_rotational(kv)?;
                    let value = h.value.clone();
                    let gradient = h.gradient.clone();
                    let scaled = foce::certify::AnalyticFunction {
                        label: format!("{}*{scale}", h.label),
                        value: std::sync::Arc::new(move |x| scale * (value)(x)),
                        gradient: std::sync::Arc::new(move |x| {
                            gradient(x).into_iter().map(|b| b * scale).collect()
                        }),
                        grad_bound: h.grad_bound * scale.abs(),
                    };
                    foce::certify::CertificateKind::CoarseAnalytic(scaled)
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "key `certify.h`: unknown function `{other}`"
                    )))
                }
            }
        }
        DualProgram::StationaryField | DualProgram::LocalField => {
            let family = exp.family.clone().ok_or_else(|| {
                Error::InvalidInput("field-program certificates need a family".into())
            })?;
            let weights = kv.vector_of("certify.mu")?;
            foce::certify::CertificateKind::FieldCombination { family, weights }
        }
    };
    let cert = foce::certify::Certificate {
        kind,
        gamma,
        program,
    };
    let max_norm = radial_field(exp.game.sets()).g_bound();
    let q = match kv.require("certify.q")? {
        "square_radius" => foce::certify::PerformanceMetric {
            label: "square_radius".into(),
            eval: std::sync::Arc::new(|x: &StrategyProfile| {
                x.blocks().iter().map(|b| b.norm_squared()).sum()
            }),
            lipschitz: 2.0 * max_norm,
        },
        "neg_square_radius" => foce::certify::PerformanceMetric {
            label: "neg_square_radius".into(),
            eval: std::sync::Arc::new(|x: &StrategyProfile| {
                -x.blocks().iter().map(|b| b.norm_squared()).sum::<f64>()
            }),
            lipschitz: 2.0 * max_norm,
        },
        "neg_half_sq_dist" => {
            let target = kv.vector_of("certify.q.target")?;
            let dims = exp.game.block_dims();
            let target =
                StrategyProfile::from_flat(&dims, &DVector::from_row_slice(&target))
                    .map_err(|_| Error::InvalidInput("key `certify.q.target`: bad length".into()))?;
            foce::certify::PerformanceMetric {
                label: "neg_half_sq_dist".into(),
                eval: std::sync::Arc::new(move |x: &StrategyProfile| {
                    -0.5 * x
                        .blocks()
                        .iter()
                        .zip(target.blocks())
                        .map(|(a, b)| (a - b).norm_squared())
                        .sum::<f64>()
                }),
                lipschitz: 2.0 * max_norm,
            }
        }
        "rotational" => resolve_rotational(kv)?.1,
        other => {
            return Err(Error::InvalidInput(format!(
                "key `certify.q`: unknown metric `{other}`"
            )))
        }
    };
    // Optional sign/scale on the metric, so sup-side programs can be written
    // in the canonical min-form (flip both the function and the metric).
    let q_scale = kv.f64_or("certify.q_scale", 1.0)?;
    let q = if q_scale == 1.0 {
        q
    } else {
        let eval = q.eval.clone();
        foce::certify::PerformanceMetric {
            label: format!("{}*{q_scale}", q.label),
            eval: std::sync::Arc::new(move |x| q_scale * (eval)(x)),
            lipschitz: q.lipschitz * q_scale.abs(),
        }
    };
    Ok((cert, q))
}

/// `ℓ + a·h` and `q = r^power sin(kθ + φ)` from the `certify.*` keys
/// (power >= 1, defaults: power 2, k 2, phi 0, a 10).
fn resolve_rotational(
    kv: &KeyValues,
) -> Result<(foce::certify::AnalyticFunction, foce::certify::PerformanceMetric)> {
    let power = kv.usize_or("certify.p_power", 2)?;
    if power < 1 {
        return Err(Error::InvalidInput(
            "key `certify.p_power` must be >= 1".into(),
        ));
    }
    let k = kv.usize_or("certify.k", 2)?;
    if k == 0 {
        return Err(Error::InvalidInput("key `certify.k` must be >= 1".into()));
    }
    let k = k as i32;
    let phi = kv.f64_or("certify.phi", 0.0)?;
    let m1 = kv.f64_of("certify.m1")?;
    let a = kv.f64_or("certify.a", 10.0)?;
    let p: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync> =
        std::sync::Arc::new(move |r: f64| r.powi(power as i32));
    let p_prime: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync> =
        std::sync::Arc::new(move |r: f64| power as f64 * r.powi(power as i32 - 1));
    let p_prime_bound = power as f64 * std::f64::consts::SQRT_2.powi(power as i32 - 1);
    Ok(foce::certify::pennies_rotational_certificate(
        p,
        p_prime,
        p_prime_bound,
        k,
        phi,
        m1,
        a,
    ))
}

pub fn resolve_nf_mode(kv: &KeyValues) -> Result<EquilibriumMode> {
    Ok(match kv.require("nf.check")? {
        "cce" => EquilibriumMode::Cce,
        "ce" => EquilibriumMode::Ce,
        "average-cce" => EquilibriumMode::AverageCce(kv.usize_list_of("nf.reference")?),
        other => {
            return Err(Error::InvalidInput(format!(
                "key `nf.check`: unknown mode `{other}`"
            )))
        }
    })
}

/// Objective values per profile, the constraint family, and which senses to
/// solve.
pub type LpRequest = (Vec<f64>, ConstraintSet, Vec<Sense>);

pub fn resolve_lp(kv: &KeyValues, nf: &NormalFormGame) -> Result<Option<LpRequest>> {
    let Some(which) = kv.get("nf.lp") else {
        return Ok(None);
    };
    let senses = match which {
        "none" => return Ok(None),
        "min" => vec![Sense::Min],
        "max" => vec![Sense::Max],
        "both" => vec![Sense::Min, Sense::Max],
        other => {
            return Err(Error::InvalidInput(format!(
                "key `nf.lp`: expected none|min|max|both, got `{other}`"
            )))
        }
    };
    let constraints = match kv.get("nf.lp.constraints").unwrap_or("cce") {
        "cce" => ConstraintSet::Cce,
        "ce" => ConstraintSet::Ce,
        other => {
            return Err(Error::InvalidInput(format!(
                "key `nf.lp.constraints`: expected cce|ce, got `{other}`"
            )))
        }
    };
    let q = match kv.get("nf.lp.q").unwrap_or("social_utility") {
        "social_utility" => (0..nf.num_profiles())
            .map(|idx| {
                let profile = nf.profile_of_index(idx);
                (0..nf.players()).map(|i| nf.payoff(i, &profile)).sum()
            })
            .collect(),
        "neg_social_utility" => (0..nf.num_profiles())
            .map(|idx| {
                let profile = nf.profile_of_index(idx);
                -(0..nf.players()).map(|i| nf.payoff(i, &profile)).sum::<f64>()
            })
            .collect(),
        _ => kv.vector_of("nf.lp.q")?,
    };
    if q.len() != nf.num_profiles() {
        return Err(Error::InvalidInput(format!(
            "key `nf.lp.q`: expected {} entries",
            nf.num_profiles()
        )));
    }
    Ok(Some((q, constraints, senses)))
}
