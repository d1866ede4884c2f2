//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are still run and reported with
//! their measured values; they do not change the exit status. Any other
//! failure exits nonzero.

use std::time::Instant;

use coriolis_sphere::cli::commands::{cmd_rossby, RossbyRequest};
use coriolis_sphere::diagnostics::{fit_decay_rate, fit_log_linear, recover_pressure, DiagnosticsRecord};
use coriolis_sphere::dynamics::{diffusion_symbol, Model, NoObserver, SimParams, SimState};
use coriolis_sphere::fields::{rotation_stream, StreamFunction};
use coriolis_sphere::geometry::GridScalar;
use coriolis_sphere::harmonics::SpectralScalar;
use coriolis_sphere::scenario::InitSpec;
use coriolis_sphere::verification::{random_scalar, run_identity_suite};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Criterion 8 asks the equilibrium residual to fall by 1e-3 from a generic
/// random start. The l = 1, |m| = 1 stream modes (rotations about horizontal
/// axes) have zero viscous decay and are untouched by advection, so their
/// amplitude is an exact invariant and the residual is bounded below by it.
const KNOWN_UNATTAINABLE: &[u32] = &[8];

struct Line {
    id: u32,
    pass: bool,
}

fn report(lines: &mut Vec<Line>, id: u32, title: &str, pass: bool, detail: String) {
    println!(
        "criterion {id}: {} {title} [{detail}]",
        if pass { "PASS" } else { "FAIL" }
    );
    lines.push(Line { id, pass });
}

fn params(mu_s: f64, omega: f64, dt: f64, t_end: f64) -> SimParams {
    SimParams {
        mu_s,
        omega,
        radius: 1.0,
        dt,
        t_end,
        dealias: true,
    }
}

fn run_states(model: &Model, init: &StreamFunction, cadence: usize) -> (Vec<DiagnosticsRecord>, Vec<SimState>) {
    let mut states = Vec::new();
    let mut keep = |s: &SimState, _: &DiagnosticsRecord| states.push(s.clone());
    let records = model.run(init, cadence, &mut keep).expect("run completes");
    (records, states)
}

fn criterion_1(lines: &mut Vec<Line>) {
    let reports = run_identity_suite(15, 1.0, 7).expect("suite runs");
    let failing: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    let worst = reports.iter().map(|r| r.max_error).fold(0.0, f64::max);
    report(
        lines,
        1,
        "identity suite at L=15, a=1",
        failing.is_empty() && reports.len() == 9,
        format!("{} checks, worst error {worst:.2e}, failing {failing:?}", reports.len()),
    );
}

fn criterion_2(lines: &mut Vec<Line>) {
    let model = Model::new(10, params(0.01, 1.0, 1e-2, 10.0)).unwrap();
    let init = InitSpec::Equilibrium { c: 1.0 }.build(10, 1.0).unwrap();
    let (_, states) = run_states(&model, &init, 1000);
    let z0 = &states[0].zeta;
    let zt = &states.last().unwrap().zeta;
    let drift = (zt - z0).max_abs() / z0.max_abs();

    let pressure = recover_pressure(&model, states.last().unwrap()).unwrap();
    let grid = model.sphere().grid();
    let exact = GridScalar::from_fn(grid, |p, _| 0.5 * p.sin().powi(2) + p.cos().powi(2));
    let mean = exact.mean(grid);
    let perr = pressure.zip_map(&exact, |x, y| x - (y - mean)).max_abs();
    report(
        lines,
        2,
        "equilibrium stationarity and pressure",
        drift <= 1e-6 && perr <= 1e-6,
        format!("zeta drift {drift:.2e}, pressure error {perr:.2e}"),
    );
}

fn criterion_3(lines: &mut Vec<Line>) {
    let p = params(0.01, 1.0, 1e-2, 0.0);
    let model = Model::new(15, p).unwrap();
    let d1 = diffusion_symbol(&p, 1);
    let zz = StreamFunction::new(rotation_stream([0.0, 0.0, 1.0], 1.0, 15, 1.0)).unwrap();
    let zx = StreamFunction::new(rotation_stream([1.0, 0.0, 0.0], 1.0, 15, 1.0)).unwrap();
    let on_zz = model.rhs_velocity_oracle(&model.state_from_stream(&zz)).unwrap().max_norm();
    let on_zx = model.rhs_velocity_oracle(&model.state_from_stream(&zx)).unwrap().max_norm();
    report(
        lines,
        3,
        "kernel is the zonal rotation only",
        d1 == 0.0 && on_zz <= 1e-8 && on_zx > 1e-3,
        format!("d_1 = {d1}, |rhs(z_z)| = {on_zz:.2e}, |rhs(z_x)| = {on_zx:.3}"),
    );
}

fn criteria_4_5(lines: &mut Vec<Line>) {
    let mu = 0.05;
    let dt = 0.01;
    let model = Model::new(15, params(mu, 1.0, dt, 40.0)).unwrap();
    let init = InitSpec::Random {
        seed: 1,
        spectrum_slope: -1.0,
        amplitude: 0.2,
        l_max: 5,
    }
    .build(15, 1.0)
    .unwrap();
    let records = model.run(&init, 1, &mut NoObserver).unwrap();
    let u0 = records[0].energy.sqrt();
    let c0 = records[0].c_z;
    let drift = records.iter().map(|r| (r.c_z - c0).abs()).fold(0.0, f64::max);
    report(
        lines,
        4,
        "zonal projection conserved",
        drift <= 1e-5 * u0,
        format!("max |c_z(t) - c_z(0)| = {drift:.2e}, bound {:.2e}", 1e-5 * u0),
    );

    let zz = {
        let k = &model.sphere().killing().z_z;
        model.sphere().inner_product(k, k).unwrap()
    };
    // ||u - c0 z_z||^2 from the recorded energy and projection
    let dist: Vec<f64> = records
        .iter()
        .map(|r| r.energy - 2.0 * c0 * r.c_z * zz + c0 * c0 * zz)
        .collect();
    let mut worst = 0.0f64;
    for i in 1..records.len() - 1 {
        let ddt = (dist[i + 1] - dist[i - 1]) / (records[i + 1].t - records[i - 1].t);
        let law = -4.0 * mu * records[i].deformation;
        worst = worst.max((ddt - law).abs() / law.abs());
    }
    let monotone = records.windows(2).all(|w| w[1].residual <= w[0].residual + 1e-10);
    report(
        lines,
        5,
        "energy law d/dt||v||^2 = -4 mu ||D||^2",
        worst <= 1e-3 && monotone,
        format!("worst relative mismatch {worst:.2e} over {} samples, residual monotone {monotone}", records.len() - 2),
    );
}

fn criterion_6(lines: &mut Vec<Line>) {
    let mu = 0.01;
    let mut details = Vec::new();
    let mut ok = true;
    for (l, m) in [(2usize, 0i64), (3, 2), (5, 3)] {
        let model = Model::new(10, params(mu, 1.0, 0.01, 20.0)).unwrap();
        let init = InitSpec::Mode { l, m, amplitude: 1e-4 }.build(10, 1.0).unwrap();
        let records = model.run(&init, 10, &mut NoObserver).unwrap();
        let fit = fit_decay_rate(&records, None).unwrap();
        let predicted = mu * ((l * (l + 1)) as f64 - 2.0);
        let rel = (fit.alpha - predicted).abs() / predicted;
        ok &= rel <= 0.05;
        details.push(format!("({l},{m}) alpha {:.5} vs {predicted:.5}", fit.alpha));
    }
    report(lines, 6, "linear decay rates", ok, details.join("; "));
}

fn criterion_7(lines: &mut Vec<Line>) {
    let mut details = Vec::new();
    let mut ok = true;
    for (l, m) in [(2usize, 1i64), (1, 1)] {
        let out = cmd_rossby(&RossbyRequest {
            l,
            m,
            omega: 1.0,
            t_end: 20.0,
            degree: 10,
            dt: 0.01,
            amplitude: 1e-4,
        })
        .unwrap();
        ok &= out.pass;
        details.push(format!("({l},{m}) {:.6} vs {:.6}", out.measured, out.predicted));
    }
    report(lines, 7, "mode precession", ok, details.join("; "));
}

fn convergence_run(init: &StreamFunction) -> (Vec<DiagnosticsRecord>, Vec<SimState>) {
    let model = Model::new(15, params(0.1, 1.0, 0.01, 100.0)).unwrap();
    run_states(&model, init, 100)
}

fn criterion_8(lines: &mut Vec<Line>) {
    let init = InitSpec::Random {
        seed: 1,
        spectrum_slope: -1.0,
        amplitude: 0.2,
        l_max: 5,
    }
    .build(15, 1.0)
    .unwrap();
    let (records, _) = convergence_run(&init);
    let first = &records[0];
    let last = records.last().unwrap();
    let ratio = last.residual / first.residual;
    let c_err = (last.c_z - first.c_z).abs();
    report(
        lines,
        8,
        "convergence to the zonal projection",
        ratio <= 1e-3 && c_err <= 1e-4,
        format!("residual ratio {ratio:.3e}, |c_z(T) - c_z(0)| = {c_err:.2e}"),
    );

    let tail: Vec<&DiagnosticsRecord> = records[records.len() / 2..].iter().collect();
    let t: Vec<f64> = tail.iter().map(|r| r.t).collect();
    for (k, label) in [(0usize, "m=-1"), (2, "m=+1")] {
        let amp: Vec<f64> = tail.iter().map(|r| r.amp_l1[k]).collect();
        let rate = fit_log_linear(&t, &amp).map(|f| f.alpha).unwrap_or(f64::NAN);
        println!(
            "  l=1 {label} amplitude: t=0 {:.10}, t=T {:.10}, end-window decay rate {rate:.3e}",
            first.amp_l1[k], last.amp_l1[k]
        );
    }
    println!("  l=1 amplitude history (t, |psi_1,-1|, |psi_1,0|, |psi_1,1|):");
    for r in records.iter().step_by(10) {
        println!("    {:6.1} {:.10} {:.10} {:.10}", r.t, r.amp_l1[0], r.amp_l1[1], r.amp_l1[2]);
    }

    // same start with the l=1, |m|=1 content removed
    let mut psi = init.psi().clone();
    psi.set(1, 1, Complex64::new(0.0, 0.0));
    let (records, _) = convergence_run(&StreamFunction::new(psi).unwrap());
    let ratio = records.last().unwrap().residual / records[0].residual;
    println!("  info: without the l=1, |m|=1 modes the residual ratio is {ratio:.3e}");
}

fn criterion_9(lines: &mut Vec<Line>) {
    let model = Model::new(15, params(0.05, 1.0, 0.01, 0.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut psi: SpectralScalar = random_scalar(&mut rng, 15, 7, 1.0).scale(0.2);
        psi.set(0, 0, Complex64::new(0.0, 0.0));
        let state = model.state_from_stream(&StreamFunction::new(psi).unwrap());
        let spectral = model.rhs_vorticity(&state).unwrap();
        let oracle = model.sphere().rot(&model.rhs_velocity_oracle(&state).unwrap());
        worst = worst.max((&spectral - &oracle).max_abs() / spectral.max_abs());
    }
    report(
        lines,
        9,
        "velocity-form and vorticity-form tendencies agree",
        worst <= 1e-8,
        format!("worst relative error {worst:.2e} over 20 states"),
    );
}

fn main() {
    let start = Instant::now();
    let mut lines = Vec::new();
    criterion_1(&mut lines);
    criterion_2(&mut lines);
    criterion_3(&mut lines);
    criteria_4_5(&mut lines);
    criterion_6(&mut lines);
    criterion_7(&mut lines);
    criterion_8(&mut lines);
    criterion_9(&mut lines);

    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    let unexpected: Vec<u32> = failed.iter().copied().filter(|id| !KNOWN_UNATTAINABLE.contains(id)).collect();
    println!(
        "acceptance: {}/{} criteria pass; failing {failed:?} (known unattainable {KNOWN_UNATTAINABLE:?}); {:.1}s",
        lines.len() - failed.len(),
        lines.len(),
        start.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
