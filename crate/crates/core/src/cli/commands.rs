use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use super::config::RunConfig;
use super::output::{identity_table, num, time_series_csv, write_file, KeyValues};
use crate::diagnostics::{fit_decay_rate, fit_phase_drift, DiagnosticsRecord};
use crate::dynamics::{Model, NoObserver, SimParams, SimState};
use crate::error::Error;
use crate::fields::Sphere;
use crate::geometry::{ChristoffelTable, Grid};
use crate::scenario::InitSpec;
use crate::verification::{run_identity_suite_on, IdentityReport, MIN_DEGREE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Failure(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } => CliError::Divergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Result of a completed simulation.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub alpha: f64,
    pub r_squared: f64,
    pub wall_time_s: f64,
}

impl RunOutcome {
    pub fn summary(&self) -> String {
        let first = self.records.first().expect("at least one record");
        let last = self.records.last().expect("at least one record");
        let mut kv = KeyValues::default();
        kv.float("t_final", last.t)
            .int("records", self.records.len())
            .float("initial_c_z", first.c_z)
            .float("final_c_z", last.c_z)
            .float("initial_residual", first.residual)
            .float("final_residual", last.residual)
            .float("alpha", self.alpha)
            .float("r_squared", self.r_squared)
            .float("final_amp_l1_m1", last.amp_l1[0])
            .float("final_amp_l1_0", last.amp_l1[1])
            .float("final_amp_l1_p1", last.amp_l1[2])
            .float("final_energy", last.energy)
            .float("wall_time_s", self.wall_time_s);
        kv.render()
    }
}

/// Runs one configured simulation without touching the filesystem.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    cfg.validate().map_err(CliError::Config)?;
    let start = Instant::now();
    let model = Model::new(cfg.degree, cfg.params())?;
    let init = cfg.init.build(cfg.degree, cfg.radius)?;
    let records = model.run(&init, cfg.cadence, &mut NoObserver)?;
    let (alpha, r_squared) = match fit_decay_rate(&records, None) {
        Ok(fit) => (fit.alpha, fit.r_squared),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(RunOutcome {
        records,
        alpha,
        r_squared,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let outcome = simulate(cfg)?;
    write_file(out, &cfg.output.time_series, &time_series_csv(&outcome.records)).map_err(CliError::Config)?;
    write_file(out, &cfg.output.summary, &outcome.summary()).map_err(CliError::Config)?;
    Ok(outcome)
}

pub fn cmd_verify(degree: usize, radius: f64, seed: u64, flip_christoffel: bool) -> Result<Vec<IdentityReport>, CliError> {
    if degree < MIN_DEGREE {
        return Err(CliError::Config(format!("verify needs L >= {MIN_DEGREE}, got {degree}")));
    }
    let grid = Grid::new(degree, radius, true)?;
    let mut sphere = Sphere::new(grid.clone());
    if flip_christoffel {
        sphere = sphere.with_christoffel(ChristoffelTable::new(&grid).with_flipped_sign());
    }
    let reports = run_identity_suite_on(&sphere, seed)?;
    print!("{}", identity_table(&reports));
    if reports.iter().all(|r| r.pass) {
        Ok(reports)
    } else {
        Err(CliError::Failure("identity suite has failing rows".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RossbyRequest {
    pub l: usize,
    pub m: i64,
    pub omega: f64,
    pub t_end: f64,
    pub degree: usize,
    pub dt: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RossbyOutcome {
    pub measured: f64,
    pub predicted: f64,
    pub pass: bool,
}

/// Linear drift prediction `-2 omega / (l(l+1))`.
pub fn rossby_prediction(l: usize, omega: f64) -> f64 {
    -2.0 * omega / (l * (l + 1)) as f64
}

pub fn cmd_rossby(req: &RossbyRequest) -> Result<RossbyOutcome, CliError> {
    let am = req.m.unsigned_abs() as usize;
    if req.l < 1 || req.l > req.degree || am == 0 || am > req.l {
        return Err(CliError::Config(format!(
            "need 1 <= l <= L = {} and 0 < |m| <= l, got l = {}, m = {}",
            req.degree, req.l, req.m
        )));
    }
    let params = SimParams {
        mu_s: 0.0,
        omega: req.omega,
        radius: 1.0,
        dt: req.dt,
        t_end: req.t_end,
        dealias: true,
    };
    let model = Model::new(req.degree, params)?;
    let init = InitSpec::Mode {
        l: req.l,
        m: req.m,
        amplitude: req.amplitude,
    }
    .build(req.degree, 1.0)?;
    let mut times = Vec::new();
    let mut coeffs: Vec<Complex64> = Vec::new();
    let mut failure = None;
    let mut observe = |s: &SimState, _: &DiagnosticsRecord| match s.stream() {
        Ok(psi) => {
            times.push(s.t);
            coeffs.push(psi.psi().get_signed(req.l, req.m));
        }
        Err(e) => failure = Some(e),
    };
    model.run(&init, 1, &mut observe)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let measured = fit_phase_drift(&times, &coeffs, req.m)?;
    let predicted = rossby_prediction(req.l, req.omega);
    let pass = if predicted == 0.0 {
        measured.abs() <= 1e-6
    } else {
        ((measured - predicted) / predicted).abs() <= 0.01
    };
    println!(
        "mode ({}, {}) omega = {}: measured drift {} predicted {} -> {}",
        req.l,
        req.m,
        num(req.omega),
        num(measured),
        num(predicted),
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(RossbyOutcome {
        measured,
        predicted,
        pass,
    })
}

/// One sweep cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub omega: f64,
    pub mu_s: f64,
    pub outcome: Result<RunOutcome, CliError>,
}

pub fn sweep_file_name(omega: f64, mu_s: f64) -> String {
    format!("timeseries_omega_{}_mu_s_{}.csv", num(omega), num(mu_s))
}

pub fn sweep_summary(cells: &[SweepCell]) -> String {
    let mut s = String::from(
        "omega,mu_s,status,final_c_z,final_residual,alpha,r_squared,amp_l1_m1,amp_l1_0,amp_l1_p1\n",
    );
    for c in cells {
        match &c.outcome {
            Ok(o) => {
                let last = o.records.last().expect("at least one record");
                let cols = [
                    last.c_z,
                    last.residual,
                    o.alpha,
                    o.r_squared,
                    last.amp_l1[0],
                    last.amp_l1[1],
                    last.amp_l1[2],
                ];
                let cols: Vec<String> = cols.iter().map(|v| num(*v)).collect();
                s.push_str(&format!("{},{},ok,{}\n", num(c.omega), num(c.mu_s), cols.join(",")));
            }
            Err(e) => {
                let status = match e {
                    CliError::Divergence(_) => "diverged",
                    _ => "error",
                };
                s.push_str(&format!(
                    "{},{},{status},nan,nan,nan,nan,nan,nan,nan\n",
                    num(c.omega),
                    num(c.mu_s)
                ));
            }
        }
    }
    s
}

/// Runs every `(omega, mu_s)` cell independently; rows sorted by
/// `(omega, mu_s)`.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepCell>, CliError> {
    let grid = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] table with omega and mu_s lists".into()))?;
    let mut points: Vec<(f64, f64)> = grid
        .omega
        .iter()
        .flat_map(|&o| grid.mu_s.iter().map(move |&m| (o, m)))
        .collect();
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite sweep values"));
    let cells = points
        .par_iter()
        .map(|&(omega, mu_s)| {
            let mut cell_cfg = cfg.clone();
            cell_cfg.omega = omega;
            cell_cfg.mu_s = mu_s;
            cell_cfg.sweep = None;
            SweepCell {
                omega,
                mu_s,
                outcome: simulate(&cell_cfg),
            }
        })
        .collect();
    Ok(cells)
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<SweepCell>, CliError> {
    if let Some(g) = &cfg.sweep {
        if g.omega.iter().chain(&g.mu_s).any(|v| !v.is_finite()) {
            return Err(CliError::Config("sweep values must be finite".into()));
        }
    }
    let cells = run_sweep(cfg)?;
    for c in &cells {
        if let Ok(o) = &c.outcome {
            write_file(out, &sweep_file_name(c.omega, c.mu_s), &time_series_csv(&o.records))
                .map_err(CliError::Config)?;
        }
    }
    write_file(out, "sweep_summary.csv", &sweep_summary(&cells)).map_err(CliError::Config)?;
    if let Some(bad) = cells.iter().find(|c| c.outcome.is_err()) {
        let e = bad.outcome.as_ref().err().cloned().expect("checked");
        return Err(CliError::Failure(format!(
            "sweep cell omega = {}, mu_s = {} failed: {e}",
            num(bad.omega),
            num(bad.mu_s)
        )));
    }
    Ok(cells)
}
