//! Executors: one function per command tag, each producing a table from
//! a fully resolved config.
//!
//! Everything here is deterministic in the config alone.  Monte Carlo
//! commands derive per-replicate streams from the embedded master seed
//! (multi-row commands offset the seed by the row index), so re-running
//! `execute` on an embedded config reproduces the output byte for byte
//! regardless of thread count.

use hypercut::bounds::{
    alpha_time, azuma_lower_bound, coupling_tail_bound, coupon_moments,
    distinguishing_lower_bound, theta_n_cutoff_time,
};
use hypercut::coupling::{coupon_statistics, estimate_coupling_tail};
use hypercut::mixing::{
    auto_t_grid, distance_profile, mixing_time, predicted_cutoff, worst_start_profile,
};
use hypercut::model::{gibbs_row, metropolis_row, FULL_ENUMERATION_CAP};
use hypercut::projection::kernel_2d;
use hypercut::verify;
use hypercut::{CouplingSpec, HypercubeState, ModelParams, Start2D};

use crate::config::{CommandTag, CoupleMode, ExperimentConfig, TGrid, ThetaSpec, VerifyLevel};
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

/// Runs the experiment a config describes and returns the rendered
/// output.  A failing verification suite comes back as
/// [`CliError::Verification`] still carrying the rendered report.
pub fn execute(config: &ExperimentConfig) -> Result<String> {
    let table = match config.command {
        CommandTag::Profile => profile_table(config)?,
        CommandTag::Worst => worst_table(config)?,
        CommandTag::MixingTime => mixing_time_table(config)?,
        CommandTag::Bounds => bounds_table(config)?,
        CommandTag::Couple => couple_table(config)?,
        CommandTag::Coupon => coupon_table(config)?,
        CommandTag::Equiv => equiv_table(config)?,
        CommandTag::ThetaN => theta_n_table(config)?,
        CommandTag::Verify => return verify_rendered(config),
    };
    table.render(config)
}

/// The cutoff-time prediction the configured schedule implies at this
/// model's size.  Constant bias uses the fixed-bias scale; shrinking
/// schedules use the schedule-aware scale.
pub fn predicted_time(spec: &ThetaSpec, model: &ModelParams) -> Result<f64> {
    match spec {
        ThetaSpec::Constant { .. } => Ok(predicted_cutoff(model)),
        _ => Ok(theta_n_cutoff_time(model.n(), model.theta())?),
    }
}

fn single_n(config: &ExperimentConfig) -> Result<usize> {
    match config.n.as_slice() {
        [n] => Ok(*n),
        other => Err(CliError::Config(format!(
            "this command takes exactly one dimension, got {other:?}"
        ))),
    }
}

fn model_at(config: &ExperimentConfig, n: usize) -> Result<ModelParams> {
    Ok(ModelParams::half_lazy(n, config.theta.at(n))?)
}

fn horizon_grid(config: &ExperimentConfig, model: &ModelParams) -> Result<Vec<u64>> {
    match &config.t_grid {
        TGrid::UpTo { t_max } => Ok(auto_t_grid(model, *t_max)),
        _ => Err(CliError::Config("this command needs a time horizon (t-grid kind up-to)".into())),
    }
}

fn explicit_times(config: &ExperimentConfig) -> Result<&[u64]> {
    match &config.t_grid {
        TGrid::Explicit { times } if !times.is_empty() => Ok(times),
        _ => Err(CliError::Config("this command needs an explicit time list (t-grid kind explicit)".into())),
    }
}

/// Cells hold no commas or quotes; fold any that sneak in from free-text
/// detail strings into harmless stand-ins.
fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            ',' => ';',
            '"' => '\'',
            '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

fn profile_table(config: &ExperimentConfig) -> Result<Table> {
    let n = single_n(config)?;
    let model = model_at(config, n)?;
    let &[start_k] = config.k.as_slice() else {
        return Err(CliError::Config(format!(
            "profile takes exactly one start weight, got {:?}",
            config.k
        )));
    };
    let grid = horizon_grid(config, &model)?;
    let profile = distance_profile(&model, start_k, &grid)?;
    let mut table = Table::new(vec!["t", "distance"]);
    for (t, d) in profile.points {
        table.push(vec![Cell::U(t), Cell::F(d)])?;
    }
    Ok(table)
}

fn worst_table(config: &ExperimentConfig) -> Result<Table> {
    let n = single_n(config)?;
    let model = model_at(config, n)?;
    if config.k.is_empty() {
        return Err(CliError::Config("worst needs a resolved start-weight grid".into()));
    }
    let grid = horizon_grid(config, &model)?;
    let profile = worst_start_profile(&model, &grid, Some(&config.k))?;
    let mut table = Table::new(vec!["t", "distance"]);
    for (t, d) in profile.points {
        table.push(vec![Cell::U(t), Cell::F(d)])?;
    }
    Ok(table)
}

fn mixing_time_table(config: &ExperimentConfig) -> Result<Table> {
    let n = single_n(config)?;
    let model = model_at(config, n)?;
    if config.eps.is_empty() {
        return Err(CliError::Config("mixing-time needs at least one eps".into()));
    }
    let grid = horizon_grid(config, &model)?;
    let profile = match config.k.as_slice() {
        [] => return Err(CliError::Config("mixing-time needs a resolved start".into())),
        [k] => distance_profile(&model, *k, &grid)?,
        ks => worst_start_profile(&model, &grid, Some(ks))?,
    };
    let mut table = Table::new(vec!["eps", "t_mix"]);
    for &eps in &config.eps {
        let t = mixing_time(&profile, eps)?;
        table.push(vec![Cell::F(eps), Cell::U(t)])?;
    }
    Ok(table)
}

fn bounds_table(config: &ExperimentConfig) -> Result<Table> {
    let n = single_n(config)?;
    let theta = config.theta.at(n);
    ModelParams::half_lazy(n, theta)?;
    if config.alpha.is_empty() {
        return Err(CliError::Config("bounds needs at least one alpha".into()));
    }
    let mut table = Table::new(vec!["alpha", "route", "t", "value", "valid", "detail"]);
    for &alpha in &config.alpha {
        let t = alpha_time(n, theta, alpha);
        for (route, report) in [
            ("distinguishing", distinguishing_lower_bound(n, theta, alpha)),
            ("azuma", azuma_lower_bound(n, theta, alpha)),
        ] {
            table.push(vec![
                Cell::F(alpha),
                Cell::S(route.into()),
                t.map_or(Cell::Missing, Cell::U),
                if report.valid { Cell::F(report.value) } else { Cell::Missing },
                Cell::S(if report.valid { "valid" } else { "invalid" }.into()),
                Cell::S(sanitize(report.precondition_detail)),
            ])?;
        }
    }
    Ok(table)
}

fn couple_table(config: &ExperimentConfig) -> Result<Table> {
    let n = single_n(config)?;
    let model = model_at(config, n)?;
    let times = explicit_times(config)?;
    let mode = config
        .mode
        .ok_or_else(|| CliError::Config("couple needs a coupling mode".into()))?;
    let spec = match mode {
        CoupleMode::Coordinatewise => CouplingSpec::Coordinatewise {
            x0: HypercubeState::all_zeros(n),
            y0: HypercubeState::all_ones(n),
        },
        CoupleMode::Independence => {
            let &[k] = config.k.as_slice() else {
                return Err(CliError::Config(format!(
                    "independence mode takes exactly one base weight, got {:?}",
                    config.k
                )));
            };
            let kernel = kernel_2d(&model, k)?;
            let lattice = kernel.lattice();
            let a0 = lattice.state_at(0, 0);
            let b0 = if config.stationary_start {
                Start2D::Stationary
            } else {
                Start2D::At(lattice.state_at(k, n - k))
            };
            CouplingSpec::Independence2D { k, a0, b0 }
        }
    };
    let summary = estimate_coupling_tail(&model, &spec, config.replicates, config.seed, times)?;
    let mut table =
        Table::new(vec!["threshold", "p_hat", "se", "replicates", "capped", "cap"]);
    for est in &summary.estimates {
        table.push(vec![
            Cell::U(est.threshold),
            Cell::F(est.p_hat),
            Cell::F(est.se),
            Cell::U(est.replicates as u64),
            Cell::U(summary.capped as u64),
            Cell::U(summary.cap),
        ])?;
    }
    Ok(table)
}

fn coupon_table(config: &ExperimentConfig) -> Result<Table> {
    let n = single_n(config)?;
    let model = model_at(config, n)?;
    let times = explicit_times(config)?;
    let mut table =
        Table::new(vec!["t", "mean", "variance", "mean_predicted", "variance_ceiling"]);
    // Row i draws from master seed + i so rows are independent while the
    // whole table replays from the one embedded seed.
    for (idx, &t) in times.iter().enumerate() {
        let seed = config.seed.wrapping_add(idx as u64);
        let (mean, var) = coupon_statistics(&model, t, config.replicates, seed)?;
        let (mean_pred, var_ceil) = coupon_moments(n, model.theta(), t);
        table.push(vec![
            Cell::U(t),
            Cell::F(mean),
            Cell::F(var),
            Cell::F(mean_pred),
            Cell::F(var_ceil),
        ])?;
    }
    Ok(table)
}

fn equiv_table(config: &ExperimentConfig) -> Result<Table> {
    let n = single_n(config)?;
    if n > FULL_ENUMERATION_CAP {
        return Err(CliError::Config(format!(
            "equiv enumerates all 2^n states; n = {n} exceeds the cap of {FULL_ENUMERATION_CAP}"
        )));
    }
    let theta = config.theta.at(n);
    let metro = ModelParams::half_lazy(n, theta)?;
    let gibbs = ModelParams::new(n, theta, (1.0 - theta) / 2.0)?;
    let mut worst = 0.0f64;
    for idx in 0..(1u64 << n) {
        let x = HypercubeState::from_index(n, idx)?;
        let diff = metropolis_row(&metro, &x)?.max_abs_diff(&gibbs_row(&gibbs, &x)?)?;
        worst = worst.max(diff);
    }
    let mut table = Table::new(vec!["n", "theta", "max_abs_diff"]);
    table.push(vec![Cell::U(n as u64), Cell::F(theta), Cell::F(worst)])?;
    Ok(table)
}

fn theta_n_table(config: &ExperimentConfig) -> Result<Table> {
    if config.n.is_empty() {
        return Err(CliError::Config("theta-n needs at least one dimension".into()));
    }
    if config.alpha.is_empty() {
        return Err(CliError::Config("theta-n needs at least one alpha".into()));
    }
    let mut table = Table::new(vec![
        "n",
        "theta",
        "alpha",
        "t",
        "predicted",
        "closed_bound",
        "p_hat",
        "se",
    ]);
    for &n in &config.n {
        let model = model_at(config, n)?;
        let theta_n = model.theta();
        let predicted = predicted_time(&config.theta, &model)?;
        let times: Vec<u64> = config
            .alpha
            .iter()
            .map(|&alpha| (predicted + alpha * n as f64).round() as u64)
            .collect();
        // One replicate set per dimension serves every alpha; the seed
        // offsets by n so dimensions stay independent.
        let spec = CouplingSpec::Coordinatewise {
            x0: HypercubeState::all_zeros(n),
            y0: HypercubeState::all_ones(n),
        };
        let summary = estimate_coupling_tail(
            &model,
            &spec,
            config.replicates,
            config.seed.wrapping_add(n as u64),
            &times,
        )?;
        for (&alpha, &t) in config.alpha.iter().zip(&times) {
            let est = summary
                .estimates
                .iter()
                .find(|e| e.threshold == t)
                .expect("every requested threshold is estimated");
            table.push(vec![
                Cell::U(n as u64),
                Cell::F(theta_n),
                Cell::F(alpha),
                Cell::U(t),
                Cell::F(predicted),
                Cell::F(coupling_tail_bound(n, theta_n, t)),
                Cell::F(est.p_hat),
                Cell::F(est.se),
            ])?;
        }
    }
    Ok(table)
}

fn verify_rendered(config: &ExperimentConfig) -> Result<String> {
    let level = config.level.unwrap_or(VerifyLevel::Full);
    let report = match level {
        VerifyLevel::Quick => verify::quick()?,
        VerifyLevel::Full => verify::full()?,
    };
    let mut table = Table::new(vec!["status", "module", "name", "observed", "expected"]);
    for c in &report.checks {
        table.push(vec![
            Cell::S(if c.passed { "PASS" } else { "FAIL" }.into()),
            Cell::S(sanitize(c.module)),
            Cell::S(sanitize(&c.name)),
            Cell::S(sanitize(&c.observed)),
            Cell::S(sanitize(&c.expected)),
        ])?;
    }
    let rendered = table.render(config)?;
    if report.passed() {
        Ok(rendered)
    } else {
        Err(CliError::Verification { rendered })
    }
}
