//! Observables along trajectories and post-processing fits.

use num_complex::Complex64;

use crate::dynamics::{Model, SimState};
use crate::error::{Error, Result};
use crate::fields::{Sphere, StreamFunction, VelocityGrid};
use crate::geometry::GridScalar;
use crate::harmonics::{invert_laplacian, SpectralScalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `||u||^2` in L2.
    pub energy: f64,
    /// `||zeta||^2` in L2.
    pub enstrophy: f64,
    /// Zonal rotation rate `(u|z_z) / (z_z|z_z)`.
    pub c_z: f64,
    /// `|psi_{1,-1}|, |psi_{1,0}|, |psi_{1,1}|`.
    pub amp_l1: [f64; 3],
    /// `||D_u||^2` in L2.
    pub deformation: f64,
    /// `||u - c_z z_z||` in L2.
    pub residual: f64,
    pub div_max: f64,
}

impl DiagnosticsRecord {
    pub const HEADER: [&'static str; 10] = [
        "t",
        "energy",
        "enstrophy",
        "c_z",
        "amp_l1_m1",
        "amp_l1_0",
        "amp_l1_p1",
        "deformation",
        "residual",
        "div_max",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.energy,
            self.enstrophy,
            self.c_z,
            self.amp_l1[0],
            self.amp_l1[1],
            self.amp_l1[2],
            self.deformation,
            self.residual,
            self.div_max,
        ]
    }
}

/// `||D_u||^2` for `u = K grad psi`.
pub fn deformation_of_stream(sphere: &Sphere, psi: &StreamFunction) -> Result<f64> {
    let jets = sphere.jets(psi.psi(), &sphere.transform().zeros())?;
    let cg = sphere.covariant_gradient_of_jets(&jets, sphere.christoffel());
    let d = sphere.deformation_frame(&cg);
    let values: Vec<f64> = d.iter().map(|m| m.iter().flatten().map(|x| x * x).sum()).collect();
    Ok(sphere.grid().integrate(&values))
}

/// `||K grad psi||^2 = sum l(l+1) |psi_lm|^2` with `m > 0` counted twice.
pub fn spectral_energy(psi: &SpectralScalar) -> f64 {
    let mut total = 0.0;
    for l in 1..=psi.degree() {
        let lam = (l * (l + 1)) as f64;
        total += lam * psi.get(l, 0).norm_sqr();
        for m in 1..=l {
            total += 2.0 * lam * psi.get(l, m).norm_sqr();
        }
    }
    total
}

/// All observables of `state`.
pub fn record(model: &Model, state: &SimState) -> Result<DiagnosticsRecord> {
    let sphere = model.sphere();
    let grid = sphere.grid();
    let a2 = grid.radius() * grid.radius();
    let psi = state.stream()?;
    let u = sphere.velocity_from_stream(&psi)?;
    let energy = sphere.inner_product(&u, &u)?;
    let (c_z, rest) = sphere.project_onto_e(&u)?;
    let residual = sphere.inner_product(&rest, &rest)?.max(0.0).sqrt();
    let p = psi.psi();
    let amp_l1 = if p.degree() >= 1 {
        [p.get_signed(1, -1).norm(), p.get(1, 0).norm(), p.get(1, 1).norm()]
    } else {
        [0.0; 3]
    };
    let div = sphere.transform().synthesize(&sphere.divergence(&u))?;
    Ok(DiagnosticsRecord {
        t: state.t,
        energy,
        enstrophy: a2 * state.zeta.power(),
        c_z,
        amp_l1,
        deformation: deformation_of_stream(sphere, &psi)?,
        residual,
        div_max: div.max_abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub alpha: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `log r` against `t`, negated.
pub fn fit_log_linear(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::DegenerateFit("time and value series differ in length".into()));
    }
    if times.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 samples, got {}",
            times.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::DegenerateFit(format!("nonpositive residual {bad} in window")));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, r_squared) = least_squares(times, &logs)?;
    Ok(DecayFit {
        alpha: -slope,
        r_squared,
    })
}

/// Slope and coefficient of determination of the line through `(x, y)`.
fn least_squares(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all samples at the same time".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    // an exactly flat series is fitted perfectly
    let r2 = if ss_tot <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((slope, r2))
}

/// Samples of the trailing half of a series (at least two).
pub fn trailing_window(records: &[DiagnosticsRecord]) -> &[DiagnosticsRecord] {
    let n = records.len();
    let keep = (n / 2).max(2).min(n);
    &records[n - keep..]
}

/// Decay rate of the equilibrium residual over `window` (inclusive times),
/// or over the trailing half of the samples.
pub fn fit_decay_rate(records: &[DiagnosticsRecord], window: Option<(f64, f64)>) -> Result<DecayFit> {
    let selected: Vec<&DiagnosticsRecord> = match window {
        Some((t1, t2)) => records.iter().filter(|r| r.t >= t1 && r.t <= t2).collect(),
        None => trailing_window(records).iter().collect(),
    };
    let t: Vec<f64> = selected.iter().map(|r| r.t).collect();
    let r: Vec<f64> = selected.iter().map(|r| r.residual).collect();
    fit_log_linear(&t, &r)
}

/// Longitudinal drift rate of a mode: least-squares slope of the unwrapped
/// phase of its coefficient, divided by `m`.
pub fn fit_phase_drift(times: &[f64], coeffs: &[Complex64], m: i64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("phase drift needs m != 0".into()));
    }
    if coeffs.iter().any(|c| c.norm() == 0.0) {
        return Err(Error::DegenerateFit("mode amplitude vanished".into()));
    }
    let mut phases = Vec::with_capacity(coeffs.len());
    let mut prev = 0.0;
    for (i, c) in coeffs.iter().enumerate() {
        let mut p = c.arg();
        if i > 0 {
            let two_pi = 2.0 * std::f64::consts::PI;
            p += two_pi * ((prev - p) / two_pi).round();
        }
        phases.push(p);
        prev = p;
    }
    let (slope, _) = least_squares(times, &phases)?;
    Ok(slope / m as f64)
}

/// Mean-zero pressure solving `Laplacian pi = -div(nabla_u u + C u - mu_s (Delta + kappa) u)`.
pub fn recover_pressure(model: &Model, state: &SimState) -> Result<GridScalar> {
    let sphere = model.sphere();
    let v = model.momentum_terms(state)?;
    let mut div = sphere.divergence(&v);
    div.set(0, 0, Complex64::new(0.0, 0.0));
    let pi = invert_laplacian(&div)?.scale(-1.0);
    sphere.transform().synthesize(&pi)
}

/// `(||u||^2 + ||grad u||^2) / ||D_u||^2`, infinite when the deformation
/// vanishes. Requires `u` orthogonal to `z_z`.
pub fn korn_quotient(sphere: &Sphere, u: &VelocityGrid) -> Result<f64> {
    let z = &sphere.killing().z_z;
    let uz = sphere.inner_product(u, z)?;
    let uu = sphere.inner_product(u, u)?;
    let zz = sphere.inner_product(z, z)?;
    if uz.abs() > 1e-10 * (uu * zz).sqrt().max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition(format!(
            "field is not orthogonal to z_z: (u|z_z) = {uz:e}"
        )));
    }
    let d = sphere.deformation_norm_sq(u)?;
    if d <= 1e-14 {
        return Ok(f64::INFINITY);
    }
    Ok((uu + sphere.gradient_norm_sq(u)?) / d)
}
