//! One function per subcommand: resolved config in, table out.

use serde::Serialize;

use pcd_epp::pcd::pcd_average_figures;
use pcd_epp::planner::{crossover_fidelity, efficiency_after_n, fidelity_after_n, figure4_table, Figure4Row};
use pcd_epp::purification::{PurificationMc, TrialRecord};
use pcd_epp::rng::derive_seed;
use pcd_epp::{minimal_plan, BellMixture, CavityParams, Error, Plan, ScatterCoefficients, ThresholdQuery};

use crate::config::{CavityPoint, ErrorModel, Fig4Config, Fig5Config, PlanConfig, PurifyConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub fn fig4(cfg: &Fig4Config) -> Result<Table, CliError> {
    let grid = cfg.fidelity.values();
    if let Some(f) = grid.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(CliError::Config(format!("fidelity grid value {f} is outside [0, 1]")));
    }
    let mut table = Table::new(&Figure4Row::COLUMNS);
    for row in figure4_table(&grid)? {
        table.push(row.values().into_iter().map(Cell::from).collect());
    }
    Ok(table)
}

pub const FIG5_COLUMNS: [&str; 10] = [
    "g_over_kappa",
    "kappas_over_kappa",
    "Fbar_e",
    "Fbar_o",
    "etabar_e",
    "etabar_o",
    "Fbar_e_stderr",
    "Fbar_o_stderr",
    "etabar_e_stderr",
    "etabar_o_stderr",
];

fn coefficients_at(p: CavityPoint) -> Result<ScatterCoefficients, CliError> {
    Ok(CavityParams::new(p.g, p.kappa_s, p.gamma)?.coefficients()?)
}

/// Averaged figures at one grid point; grid point `index` draws from its
/// own derived seed.
fn averaged_row(point: CavityPoint, samples: usize, seed: u64, index: u64) -> Result<Vec<Cell>, CliError> {
    let coeffs = coefficients_at(point)?;
    let avg = pcd_average_figures(&coeffs, samples, derive_seed(seed, index))?;
    let finite = |e: pcd_epp::stats::Estimate| if e.count == 0 { None } else { Some(e.mean) };
    let stderr = |e: pcd_epp::stats::Estimate| if e.count == 0 { None } else { Some(e.stderr) };
    Ok(vec![
        point.g.into(),
        point.kappa_s.into(),
        finite(avg.f_even).into(),
        finite(avg.f_odd).into(),
        avg.eta_even.mean.into(),
        avg.eta_odd.mean.into(),
        stderr(avg.f_even).into(),
        stderr(avg.f_odd).into(),
        avg.eta_even.stderr.into(),
        avg.eta_odd.stderr.into(),
    ])
}

pub fn fig5(cfg: &Fig5Config) -> Result<Table, CliError> {
    let mut table = Table::new(&FIG5_COLUMNS);
    let mut index = 0;
    for g in cfg.g.values() {
        for kappa_s in cfg.kappa_s.values() {
            let point = CavityPoint {
                g,
                kappa_s,
                gamma: cfg.gamma,
            };
            table.push(averaged_row(point, cfg.samples, cfg.seed, index)?);
            index += 1;
        }
    }
    Ok(table)
}

/// One cavity point: coefficients plus the averaged figures. Matches the
/// row a single-point fig5 grid would produce.
pub fn pcd_point(point: CavityPoint, samples: usize, seed: u64) -> Result<Table, CliError> {
    let coeffs = coefficients_at(point)?;
    let mut cols = vec!["gamma_over_kappa", "r", "t", "r0", "t0"];
    cols.extend(FIG5_COLUMNS);
    let mut table = Table::new(&cols);
    let mut row: Vec<Cell> = [point.gamma, coeffs.r, coeffs.t, coeffs.r0, coeffs.t0]
        .into_iter()
        .map(Cell::from)
        .collect();
    row.extend(averaged_row(point, samples, seed, 0)?);
    table.push(row);
    Ok(table)
}

pub const PURIFY_COLUMNS: [&str; 14] = [
    "trials",
    "kept",
    "lost",
    "kept_fraction",
    "kept_fraction_stderr",
    "p_phi_plus",
    "p_phi_minus",
    "p_psi_plus",
    "p_psi_minus",
    "p_phi_plus_stderr",
    "p_phi_minus_stderr",
    "p_psi_plus_stderr",
    "p_psi_minus_stderr",
    "discarded_p_phi_plus",
];

pub fn purify_mc(cfg: &PurifyConfig, with_log: bool) -> Result<(Table, Option<Table>), CliError> {
    let input = match cfg.error {
        ErrorModel::Bit => BellMixture::bit_flip(cfg.fidelity)?,
        ErrorModel::Phase => BellMixture::phase_flip(cfg.fidelity)?,
    };
    let coeffs = match cfg.cavity {
        Some(p) => coefficients_at(p)?,
        None => ScatterCoefficients::IDEAL,
    };
    let mut mc = PurificationMc::new(coeffs, cfg.trials, cfg.seed);
    mc.hadamard_first = cfg.hadamard_first;
    let (summary, log) = mc.run_with_log(&input, &input)?;

    let mut table = Table::new(&PURIFY_COLUMNS);
    let weights = summary.output_estimate.map(|m| m.weights());
    let mut row: Vec<Cell> = vec![
        summary.trials.into(),
        summary.kept.into(),
        summary.lost.into(),
        summary.kept_fraction.mean.into(),
        summary.kept_fraction.stderr.into(),
    ];
    row.extend((0..4).map(|k| Cell::from(weights.map(|w| w[k]))));
    row.extend((0..4).map(|k| Cell::from(weights.map(|_| summary.output_stderr[k]))));
    row.push(summary.discarded_estimate.map(|m| m.fidelity()).into());
    table.push(row);

    let log_table = with_log.then(|| trial_table(&log));
    Ok((table, log_table))
}

fn trial_table(log: &[TrialRecord]) -> Table {
    let mut t = Table::new(&[
        "index",
        "pair_ab",
        "pair_cd",
        "alice",
        "bob",
        "kept",
        "w_phi_plus",
        "w_phi_minus",
        "w_psi_plus",
        "w_psi_minus",
    ]);
    for r in log {
        let mut row = vec![
            r.index.into(),
            tag(&r.pair_ab),
            tag(&r.pair_cd),
            tag(&r.alice),
            tag(&r.bob),
            r.kept.into(),
        ];
        row.extend((0..4).map(|k| Cell::from(r.ab_weights.map(|w| w[k]))));
        t.push(row);
    }
    t
}

/// Serde name of a unit enum variant.
fn tag<T: Serialize>(v: &T) -> Cell {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => Cell::Text(s),
        other => Cell::Text(format!("{other:?}")),
    }
}

pub const PLAN_COLUMNS: [&str; 7] = [
    "leaves",
    "crossover",
    "final_fidelity",
    "cumulative_efficiency",
    "expected_raw_pairs",
    "meets_threshold",
    "selected",
];

/// Outcome of `plan`: the minimal arrangement and its crossover table, or
/// the reason no plan exists.
pub enum PlanOutcome {
    Found(Table),
    Unpurifiable(String),
}

pub fn plan(cfg: &PlanConfig) -> Result<PlanOutcome, CliError> {
    if cfg.max_leaves == 0 {
        return Err(CliError::Config("max_leaves must be at least 1".into()));
    }
    let query = ThresholdQuery::new(cfg.initial, cfg.threshold);
    let plan: Plan = match minimal_plan(&query) {
        Ok(p) => p,
        Err(e @ Error::Unpurifiable(_)) => return Ok(PlanOutcome::Unpurifiable(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let mut table = Table::new(&PLAN_COLUMNS);
    for n in 1..=cfg.max_leaves.max(plan.leaves) {
        let f = fidelity_after_n(cfg.initial, n)?;
        let eta = efficiency_after_n(cfg.initial, n)?;
        table.push(vec![
            n.into(),
            crossover_fidelity(cfg.threshold, n)?.into(),
            f.into(),
            eta.into(),
            (n as f64 / eta).into(),
            (f >= cfg.threshold).into(),
            (n == plan.leaves).into(),
        ]);
    }
    Ok(PlanOutcome::Found(table))
}
