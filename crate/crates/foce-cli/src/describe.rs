//! Dry run: prints the resolved experiment plan without executing anything.

use crate::config::Experiment;
use foce::fmt_f64;
use foce::regret::{player_class, poly_factor, theorem_bound, PlayerClass, ScheduleSums};
use foce::Result;

pub fn describe(exp: &Experiment) -> Result<()> {
    let game = &exp.game;
    println!("game = {}", game.name());
    println!("players = {}", game.players());
    let dims: Vec<String> = game.block_dims().iter().map(|d| d.to_string()).collect();
    println!("dims = {}", dims.join(","));
    let g: Vec<String> = game.grad_bounds().iter().map(|v| fmt_f64(*v)).collect();
    println!("grad_bounds = {}", g.join(","));
    let l: Vec<String> = game
        .lipschitz_bounds()
        .iter()
        .map(|v| fmt_f64(*v))
        .collect();
    println!("lipschitz = {}", l.join(","));
    println!("diameter = {}", fmt_f64(game.diameter()));

    let classes: Vec<PlayerClass> = game.sets().iter().map(player_class).collect();
    for (i, c) in classes.iter().enumerate() {
        let desc = match c {
            PlayerClass::Acute => "acute".to_string(),
            PlayerClass::Curved(k) => format!("curved (K = {})", fmt_f64(*k)),
            PlayerClass::NoGuarantee => "non-acute polyhedron".to_string(),
        };
        println!("set.{i}.class = {desc}");
    }
    let guarantee = if classes.contains(&PlayerClass::NoGuarantee) {
        "no guarantee".to_string()
    } else if classes.iter().any(|c| matches!(c, PlayerClass::Curved(_))) {
        let k = classes
            .iter()
            .filter_map(|c| match c {
                PlayerClass::Curved(k) => Some(*k),
                _ => None,
            })
            .fold(0.0f64, f64::max);
        format!("curved boundary (max K = {})", fmt_f64(k))
    } else {
        "acute polyhedra".to_string()
    };
    println!("guarantee = {guarantee}");

    if let (Some(sched), true) = (&exp.schedule, exp.steps > 0) {
        let sums = ScheduleSums::from_schedule(sched, exp.steps);
        println!("schedule.steps = {}", exp.steps);
        println!("schedule.tau_end = {}", fmt_f64(sums.tau_end));
        println!("schedule.sum_eta = {}", fmt_f64(sums.sum_eta));
        println!("schedule.sum_eta_sq_mu = {}", fmt_f64(sums.sum_eta_sq_mu));
        println!(
            "schedule.mu_ends = {}",
            fmt_f64(sums.mu_first + sums.mu_last)
        );
        match &exp.family {
            Some(family) => {
                for (k, f) in family.fields().iter().enumerate() {
                    let line = match theorem_bound(game, &sums, f.g_bound()) {
                        Some(b) if f.is_coarse() => fmt_f64(b),
                        _ => "no guarantee".to_string(),
                    };
                    println!("field.{k}.id = {}", f.label());
                    println!("field.{k}.g_bound = {}", fmt_f64(f.g_bound()));
                    println!("field.{k}.bound = {line}");
                    println!(
                        "field.{k}.poly_factor = {}",
                        fmt_f64(poly_factor(game, f.g_bound()))
                    );
                }
            }
            None => {
                let line = match theorem_bound(game, &sums, 1.0) {
                    Some(b) => fmt_f64(b),
                    None => "no guarantee".to_string(),
                };
                println!("bound_per_unit_g = {line}");
            }
        }
    }
    Ok(())
}
