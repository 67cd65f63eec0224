//! Mode dispatch: runs the experiment and writes its artifacts.

use crate::config::{self, Experiment, Mode};
use foce::certify::{check_certificate, check_equilibrium, induce_action_distribution, GridSpec};
use foce::dynamics::{run_pga, EmpiricalDistribution};
use foce::fmt_f64;
use foce::phi_regret::{
    regret_match_local, regret_match_stationary, AffineOracle, AlphaRule, MatcherState,
    Termination,
};
use foce::regret::{regret_report, RegretMode, RegretSource};
use foce::{Error, Result};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

fn artifact(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidInput(format!("write failed: {e}"))
}

pub fn run(exp: &Experiment) -> Result<()> {
    match exp.mode {
        Mode::Dynamics => run_dynamics(exp),
        Mode::Regret => run_regret(exp),
        Mode::MatchStationary | Mode::MatchLocal => run_match(exp),
        Mode::Certify => run_certify(exp),
        Mode::NfAudit => run_nf_audit(exp),
    }
}

fn run_dynamics(exp: &Experiment) -> Result<()> {
    let sched = exp.schedule.as_ref().expect("validated at load");
    let traj = run_pga(&exp.game, &exp.start, exp.steps, sched)?;
    let mut w = artifact(&exp.out_dir, "trajectory.csv")?;
    traj.write_csv(&mut w).map_err(io_err)?;
    println!(
        "dynamics: {} steps, tau_end = {}, wrote trajectory.csv",
        traj.steps(),
        fmt_f64(traj.tau_end())
    );
    Ok(())
}

fn run_regret(exp: &Experiment) -> Result<()> {
    let sched = exp.schedule.as_ref().expect("validated at load");
    let family = exp
        .family
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("regret mode needs `family.builtins` or inline fields".into()))?;
    let mode = match exp.kv.get("regret.mode").unwrap_or("stationary") {
        "stationary" => RegretMode::Stationary,
        "local" => RegretMode::Local,
        other => {
            return Err(Error::InvalidInput(format!(
                "key `regret.mode`: expected stationary|local, got `{other}`"
            )))
        }
    };
    let m = exp.kv.usize_or("quadrature.m", 16)?;
    if m == 0 {
        return Err(Error::InvalidInput("key `quadrature.m` must be >= 1".into()));
    }
    let traj = run_pga(&exp.game, &exp.start, exp.steps, sched)?;
    let report = regret_report(RegretSource::Trajectory(&traj), &exp.game, family, mode, m)?;
    let mut w = artifact(&exp.out_dir, "regret_report.txt")?;
    report.write(&mut w).map_err(io_err)?;
    println!(
        "regret: {} fields, family max {}, wrote regret_report.txt",
        report.entries.len(),
        fmt_f64(report.family_max)
    );
    Ok(())
}

fn write_match_artifacts(exp: &Experiment, state: &MatcherState) -> Result<()> {
    let mut w = artifact(&exp.out_dir, "matcher_log.csv")?;
    state.write_log_csv(&mut w).map_err(io_err)?;

    let sigma = state.sigma()?;
    let mut w = artifact(&exp.out_dir, "terminal_distribution.csv")?;
    let d: usize = exp.game.block_dims().iter().sum();
    write!(w, "weight").map_err(io_err)?;
    for j in 0..d {
        write!(w, ",coord_{j}").map_err(io_err)?;
    }
    writeln!(w).map_err(io_err)?;
    for (x, weight) in sigma.atoms() {
        write!(w, "{}", fmt_f64(*weight)).map_err(io_err)?;
        let flat = x.flatten();
        for j in 0..d {
            write!(w, ",{}", fmt_f64(flat[j])).map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }

    if let Some(nf) = &exp.normal_form {
        let induced = induce_action_distribution(&sigma, nf)?;
        let mut w = artifact(&exp.out_dir, "induced_action_distribution.txt")?;
        for (idx, p) in induced.probs().iter().enumerate() {
            let profile = nf.profile_of_index(idx);
            let label: Vec<String> = profile.iter().map(|a| a.to_string()).collect();
            writeln!(w, "sigma.{} = {}", label.join(","), fmt_f64(*p)).map_err(io_err)?;
        }
    }
    Ok(())
}

fn run_match(exp: &Experiment) -> Result<()> {
    let family = exp
        .family
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("match mode needs `family.builtins` or inline fields".into()))?;
    let epsilon = exp.kv.f64_or("match.epsilon", 1e-3)?;
    let max_iter = exp.kv.usize_or("match.max_iter", 10_000)?;
    let rule = match exp.kv.get("match.alpha").unwrap_or("harmonic") {
        "harmonic" => AlphaRule::Harmonic,
        "line_search" => AlphaRule::LineSearch,
        other => {
            return Err(Error::InvalidInput(format!(
                "key `match.alpha`: expected harmonic|line_search, got `{other}`"
            )))
        }
    };
    let oracle = AffineOracle::default();
    let sigma1 = EmpiricalDistribution::point_mass(exp.start.clone());
    let state = match exp.mode {
        Mode::MatchStationary => regret_match_stationary(
            &exp.game, family, &sigma1, epsilon, max_iter, rule, &oracle,
        )?,
        Mode::MatchLocal => {
            let allow = exp.kv.bool_or("match.allow_nontangential", false)?;
            regret_match_local(
                &exp.game, family, &sigma1, epsilon, max_iter, rule, &oracle, allow,
            )?
        }
        _ => unreachable!(),
    };
    write_match_artifacts(exp, &state)?;
    let status = match &state.termination {
        Termination::Converged => "converged".to_string(),
        Termination::MaxIter => "max-iter".to_string(),
        Termination::OracleFailure(msg) => format!("oracle-failure: {msg}"),
    };
    println!(
        "match: t = {}, max regret {}, {status}, wrote matcher_log.csv",
        state.t,
        fmt_f64(state.mu().iter().fold(0.0f64, |m, v| m.max(v.abs())))
    );
    if let Termination::OracleFailure(msg) = &state.termination {
        return Err(Error::OracleFailure(msg.clone()));
    }
    Ok(())
}

fn run_certify(exp: &Experiment) -> Result<()> {
    let (cert, q) = config::resolve_certificate(exp)?;
    let grid = GridSpec {
        resolution: match exp.kv.get("certify.grid.resolution") {
            Some(_) => Some(exp.kv.usize_of("certify.grid.resolution")?),
            None => None,
        },
        samples: exp.kv.usize_or("certify.grid.samples", 1000)?,
        seed: exp.seed,
    };
    let report = check_certificate(&exp.game, &cert, &q, &grid)?;
    let mut w = artifact(&exp.out_dir, "certificate_report.txt")?;
    report.write(&mut w).map_err(io_err)?;
    println!(
        "certify: min margin {} over {} points, wrote certificate_report.txt",
        fmt_f64(report.min_margin),
        report.points_checked
    );
    let tol = exp.kv.f64_or("certify.tol", 1e-6)?;
    if report.min_margin < -tol {
        return Err(Error::TheoremViolation(format!(
            "certificate infeasible at the audited resolution: min margin {}",
            report.min_margin
        )));
    }
    Ok(())
}

fn run_nf_audit(exp: &Experiment) -> Result<()> {
    let nf = exp
        .normal_form
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("nf-audit needs a normal-form game".into()))?;
    let mode = config::resolve_nf_mode(&exp.kv)?;
    let tol = exp.kv.f64_or("nf.tol", 1e-9)?;
    let dist = if exp.kv.get("nf.point_mass").is_some() {
        let profile = exp.kv.usize_list_of("nf.point_mass")?;
        if profile.len() != nf.players() {
            return Err(Error::InvalidInput(
                "key `nf.point_mass`: one action per player".into(),
            ));
        }
        let mut probs = vec![0.0; nf.num_profiles()];
        probs[nf.flat_index(&profile)] = 1.0;
        foce::certify::ActionDistribution::new(nf.action_counts().to_vec(), probs)?
    } else {
        let probs = exp.kv.vector_of("nf.distribution")?;
        foce::certify::ActionDistribution::new(nf.action_counts().to_vec(), probs)?
    };
    let report = check_equilibrium(nf, &dist, &mode, tol)?;
    let mut w = artifact(&exp.out_dir, "nf_audit.txt")?;
    writeln!(w, "mode = {}", mode.as_str()).map_err(io_err)?;
    writeln!(w, "max_violation = {}", fmt_f64(report.max_violation)).map_err(io_err)?;
    writeln!(w, "worst_constraint = {}", report.worst_constraint).map_err(io_err)?;
    writeln!(w, "passes = {}", report.passes).map_err(io_err)?;
    if let Some((qvals, constraints, senses)) = config::resolve_lp(&exp.kv, nf)? {
        for sense in senses {
            let out = foce::certify::worst_case_expectation(nf, &qvals, constraints, sense)?;
            let tag = match sense {
                foce::certify::Sense::Min => "lp_min",
                foce::certify::Sense::Max => "lp_max",
            };
            writeln!(w, "{tag} = {}", fmt_f64(out.value)).map_err(io_err)?;
            writeln!(w, "{tag}.cs_residual = {}", fmt_f64(out.cs_residual)).map_err(io_err)?;
        }
    }
    println!(
        "nf-audit: max violation {}, passes = {}, wrote nf_audit.txt",
        fmt_f64(report.max_violation),
        report.passes
    );
    Ok(())
}
