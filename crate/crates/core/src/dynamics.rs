//! Vorticity/stream-function evolution with an integrating-factor RK4 step.
//!
//! `d zeta/dt = -J(psi, zeta + f_c) + d_l zeta`, `f_c = 2 omega cos(phi)`,
//! `d_l = -mu_s (l(l+1) - 2) / a^2`.

use num_complex::Complex64;

use crate::diagnostics::{record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::fields::{apply_k, Sphere, StreamFunction, VelocityGrid};
use crate::geometry::{Grid, GridScalar};
use crate::harmonics::SpectralScalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Surface shear viscosity; zero gives the inviscid equations.
    pub mu_s: f64,
    pub omega: f64,
    pub radius: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Alias-free grid (`n_theta >= 3L+1`) when on, minimal grid otherwise.
    pub dealias: bool,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.mu_s >= 0.0 && self.mu_s.is_finite()) {
            return bad("mu_s must be finite and >= 0");
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return bad("radius must be > 0");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be > 0");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be >= 0");
        }
        if !self.omega.is_finite() {
            return bad("omega must be finite");
        }
        Ok(())
    }

    /// Number of whole steps needed to reach `t_end`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub zeta: SpectralScalar,
    pub params: SimParams,
}

impl SimState {
    /// State with vorticity `-Laplacian psi` at `t = 0`.
    pub fn from_stream(psi: &StreamFunction, params: SimParams) -> Self {
        Self {
            t: 0.0,
            zeta: crate::fields::vorticity_from_stream(psi),
            params,
        }
    }

    pub fn stream(&self) -> Result<StreamFunction> {
        StreamFunction::from_vorticity(&self.zeta)
    }
}

/// Vorticity-space viscous decay rate of degree `l`.
pub fn diffusion_symbol(params: &SimParams, l: usize) -> f64 {
    if l == 1 {
        return 0.0;
    }
    let lam = (l * (l + 1)) as f64;
    -params.mu_s * (lam - 2.0) / (params.radius * params.radius)
}

/// `J(A, B) = (1/(a^2 sin phi)) (A_phi B_theta - A_theta B_phi)`, evaluated
/// pseudospectrally and truncated at degree `L`.
pub fn jacobian(sphere: &Sphere, a: &SpectralScalar, b: &SpectralScalar) -> Result<SpectralScalar> {
    let t = sphere.transform();
    let a_t = t.synthesize_derivative(a, 1, 0)?;
    let a_p = t.synthesize_derivative(a, 0, 1)?;
    let b_t = t.synthesize_derivative(b, 1, 0)?;
    let b_p = t.synthesize_derivative(b, 0, 1)?;
    Ok(t.analyze(&product_jacobian(sphere.grid(), &a_t, &a_p, &b_t, &b_p)))
}

fn product_jacobian(
    grid: &Grid,
    a_t: &GridScalar,
    a_p: &GridScalar,
    b_t: &GridScalar,
    b_p: &GridScalar,
) -> GridScalar {
    let a2 = grid.radius() * grid.radius();
    let n_theta = grid.n_theta();
    let values = (0..grid.len())
        .map(|n| {
            let s = grid.sin_phi()[n / n_theta];
            (a_p.values()[n] * b_t.values()[n] - a_t.values()[n] * b_p.values()[n]) / (a2 * s)
        })
        .collect();
    GridScalar::from_values(grid, values).expect("layout fixed by grid")
}

/// Spectral coefficients of `f_c = 2 omega cos(phi)`.
pub fn coriolis_spectral(degree: usize, radius: f64, omega: f64) -> SpectralScalar {
    let mut f = SpectralScalar::zeros(degree, radius);
    f.set(1, 0, Complex64::new(2.0 * omega * (4.0 * std::f64::consts::PI / 3.0).sqrt(), 0.0));
    f
}

/// Discretized model: grid operators plus parameters.
#[derive(Debug, Clone)]
pub struct Model {
    sphere: Sphere,
    params: SimParams,
    coriolis: SpectralScalar,
    decay: Vec<f64>,
}

impl Model {
    pub fn new(degree: usize, params: SimParams) -> Result<Self> {
        params.validate()?;
        let grid = Grid::new(degree, params.radius, params.dealias)?;
        Ok(Self::with_sphere(Sphere::new(grid), params))
    }

    /// Model on an existing sphere; `params.radius` is taken from the grid.
    pub fn with_sphere(sphere: Sphere, params: SimParams) -> Self {
        let params = SimParams {
            radius: sphere.radius(),
            ..params
        };
        let degree = sphere.degree();
        let decay = (0..=degree).map(|l| diffusion_symbol(&params, l)).collect();
        Self {
            coriolis: coriolis_spectral(degree, params.radius, params.omega),
            sphere,
            params,
            decay,
        }
    }

    pub fn sphere(&self) -> &Sphere {
        &self.sphere
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn degree(&self) -> usize {
        self.sphere.degree()
    }

    pub fn state_from_stream(&self, psi: &StreamFunction) -> SimState {
        SimState::from_stream(psi, self.params)
    }

    /// Nonlinear plus Coriolis tendency `-J(psi, zeta + f_c)` and the
    /// largest grid speed of the flow.
    fn advective(&self, zeta: &SpectralScalar) -> Result<(SpectralScalar, f64)> {
        let t = self.sphere.transform();
        let psi = StreamFunction::from_vorticity(zeta)?;
        let q = zeta + &self.coriolis;
        let psi_t = t.synthesize_derivative(psi.psi(), 1, 0)?;
        let psi_p = t.synthesize_derivative(psi.psi(), 0, 1)?;
        let q_t = t.synthesize_derivative(&q, 1, 0)?;
        let q_p = t.synthesize_derivative(&q, 0, 1)?;
        let grid = self.sphere.grid();
        let a = grid.radius();
        let n_theta = grid.n_theta();
        let mut speed2 = 0.0f64;
        for n in 0..grid.len() {
            let s = grid.sin_phi()[n / n_theta];
            let east = psi_p.values()[n] / a;
            let south = psi_t.values()[n] / (a * s);
            speed2 = speed2.max(east * east + south * south);
        }
        let mut out = t.analyze(&product_jacobian(grid, &psi_t, &psi_p, &q_t, &q_p));
        out = out.scale(-1.0);
        out.set(0, 0, Complex64::new(0.0, 0.0));
        Ok((out, speed2.sqrt()))
    }

    fn apply_decay(&self, s: &SpectralScalar, tau: f64) -> SpectralScalar {
        s.scale_by_degree(|l| (self.decay[l] * tau).exp())
    }

    /// Vorticity tendency.
    pub fn rhs_vorticity(&self, state: &SimState) -> Result<SpectralScalar> {
        let (nl, _) = self.advective(&state.zeta)?;
        let diff = state.zeta.scale_by_degree(|l| self.decay[l]);
        let mut out = &nl + &diff;
        out.set(0, 0, Complex64::new(0.0, 0.0));
        Ok(out)
    }

    /// Velocity-form tendency `-P_H(nabla_u u + C u - mu_s (Delta + kappa) u)`
    /// assembled from covariant derivatives, with `C u = -2 omega cos(phi) K u`
    /// and the viscous term taken as `2 div D_u`.
    pub fn rhs_velocity_oracle(&self, state: &SimState) -> Result<VelocityGrid> {
        let v = self.momentum_terms(state)?;
        Ok(self.sphere.helmholtz_project(&v)?.scale(-1.0))
    }

    /// `v = nabla_u u + C u - mu_s (Delta + kappa) u` on the grid.
    pub fn momentum_terms(&self, state: &SimState) -> Result<VelocityGrid> {
        let sphere = &self.sphere;
        let psi = state.stream()?;
        let u = sphere.velocity_from_stream(&psi)?;
        let jets = sphere.jets(psi.psi(), &sphere.transform().zeros())?;
        let cg = sphere.covariant_gradient_of_jets(&jets, sphere.christoffel());
        let advection = sphere.covariant_derivative_along(&u, &cg)?;
        let viscous = sphere.twice_div_deformation(&cg)?;
        let coriolis = self.coriolis_force(&u);
        Ok((&advection + &coriolis).axpy(-self.params.mu_s, &viscous))
    }

    /// `C u = f K u` with `f = -2 omega cos(phi)`.
    pub fn coriolis_force(&self, u: &VelocityGrid) -> VelocityGrid {
        let grid = self.sphere.grid();
        let f = GridScalar::from_fn(grid, |p, _| -2.0 * self.params.omega * p.cos());
        let ku = apply_k(u);
        VelocityGrid {
            u_theta_hat: ku.u_theta_hat.zip_map(&f, |x, y| x * y),
            u_phi_hat: ku.u_phi_hat.zip_map(&f, |x, y| x * y),
        }
    }

    /// Largest stable step for a flow with peak speed `max_speed`.
    pub fn admissible_dt(&self, max_speed: f64) -> f64 {
        let grid = self.sphere.grid();
        let a = grid.radius();
        let sin_min = grid.sin_phi().iter().cloned().fold(f64::INFINITY, f64::min);
        let h = (a * grid.min_dphi()).min(a * sin_min * grid.dtheta());
        if max_speed > 0.0 {
            0.5 * h / max_speed
        } else {
            f64::INFINITY
        }
    }

    /// One integrating-factor RK4 step of size `params.dt`.
    pub fn step(&self, state: &SimState) -> Result<SimState> {
        let dt = self.params.dt;
        let zeta = &state.zeta;
        let (k1, speed) = self.advective(zeta)?;
        let admissible = self.admissible_dt(speed);
        if dt > admissible {
            return Err(Error::StepSize { dt, admissible });
        }
        let half = |s: &SpectralScalar| self.apply_decay(s, 0.5 * dt);
        let full = |s: &SpectralScalar| self.apply_decay(s, dt);

        let e2z = half(zeta);
        let (k2, _) = self.advective(&half(&zeta.axpy(0.5 * dt, &k1)))?;
        let (k3, _) = self.advective(&e2z.axpy(0.5 * dt, &k2))?;
        let (k4, _) = self.advective(&full(zeta).axpy(dt, &half(&k3)))?;

        let combo = full(&k1)
            .axpy(2.0, &half(&(&k2 + &k3)))
            .axpy(1.0, &k4);
        let mut next = full(zeta).axpy(dt / 6.0, &combo);
        next.set(0, 0, Complex64::new(0.0, 0.0));
        Ok(SimState {
            t: state.t + dt,
            zeta: next,
            params: state.params,
        })
    }

    /// Advances `init` to `t_end`, recording diagnostics every `cadence`
    /// steps (and at `t = 0`).
    pub fn run(
        &self,
        init: &StreamFunction,
        cadence: usize,
        observer: &mut dyn Observer,
    ) -> Result<Vec<DiagnosticsRecord>> {
        if cadence == 0 {
            return Err(Error::InvalidParameter("cadence must be >= 1".into()));
        }
        let mut state = self.state_from_stream(init);
        let mut records = Vec::new();
        let first = record(self, &state)?;
        observer.observe(&state, &first);
        records.push(first);
        let n_steps = self.params.n_steps();
        for n in 1..=n_steps {
            let mut next = self.step(&state)?;
            if !next.zeta.is_finite() {
                return Err(Error::Divergence {
                    last_good_time: state.t,
                });
            }
            next.t = n as f64 * self.params.dt;
            state = next;
            if n % cadence == 0 {
                let rec = record(self, &state)?;
                observer.observe(&state, &rec);
                records.push(rec);
            }
        }
        Ok(records)
    }
}

/// Callback invoked at every diagnostics sample.
pub trait Observer {
    fn observe(&mut self, state: &SimState, record: &DiagnosticsRecord);
}

impl<F: FnMut(&SimState, &DiagnosticsRecord)> Observer for F {
    fn observe(&mut self, state: &SimState, record: &DiagnosticsRecord) {
        self(state, record)
    }
}

/// Observer that ignores everything.
pub struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _: &SimState, _: &DiagnosticsRecord) {}
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::rotation_stream;

    fn params(mu: f64, omega: f64) -> SimParams {
        SimParams {
            mu_s: mu,
            omega,
            radius: 1.0,
            dt: 1e-2,
            t_end: 1.0,
            dealias: true,
        }
    }

    #[test]
    fn diffusion_symbol_values() {
        let p = params(1.0, 0.0);
        assert_eq!(diffusion_symbol(&p, 1), 0.0);
        assert_eq!(diffusion_symbol(&p, 2), -4.0);
        assert_eq!(diffusion_symbol(&p, 0), 2.0);
    }

    #[test]
    fn jacobian_basic_identities() {
        let m = Model::new(8, params(0.0, 1.0)).unwrap();
        let mut a = SpectralScalar::zeros(8, 1.0);
        a.set(3, 1, Complex64::new(0.4, -0.2));
        a.set(2, 0, Complex64::new(0.7, 0.0));
        assert!(jacobian(m.sphere(), &a, &a).unwrap().max_abs() <= 1e-10);
        let c = SpectralScalar::zeros(8, 1.0);
        assert!(jacobian(m.sphere(), &a, &c).unwrap().max_abs() <= 1e-14);
        let zz = rotation_stream([0.0, 0.0, 1.0], 1.0, 8, 1.0);
        let fc = coriolis_spectral(8, 1.0, 1.0);
        assert!(jacobian(m.sphere(), &zz, &fc).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn zero_state_is_fixed() {
        let m = Model::new(6, params(0.1, 1.0)).unwrap();
        let s = m.state_from_stream(&StreamFunction::new(SpectralScalar::zeros(6, 1.0)).unwrap());
        assert_eq!(m.rhs_vorticity(&s).unwrap().max_abs(), 0.0);
        let next = m.step(&s).unwrap();
        assert_eq!(next.zeta.max_abs(), 0.0);
    }

    #[test]
    fn step_rejects_large_dt() {
        let mut p = params(0.0, 0.0);
        p.dt = 1.0;
        let m = Model::new(10, p).unwrap();
        let psi = StreamFunction::new(rotation_stream([0.0, 0.0, 1.0], 1.0, 10, 1.0)).unwrap();
        match m.step(&m.state_from_stream(&psi)) {
            Err(Error::StepSize { admissible, .. }) => assert!(admissible < 1.0),
            other => panic!("expected step-size error, got {other:?}"),
        }
    }

    #[test]
    fn params_validation() {
        let mut p = params(0.0, 0.0);
        assert!(p.validate().is_ok());
        p.dt = 0.0;
        assert!(p.validate().is_err());
        let mut p = params(-1.0, 0.0);
        assert!(p.validate().is_err());
        p.mu_s = 0.1;
        p.radius = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn n_steps_is_robust_to_rounding() {
        let mut p = params(0.0, 0.0);
        p.t_end = 10.0;
        p.dt = 0.1;
        assert_eq!(p.n_steps(), 100);
        p.t_end = 0.0;
        assert_eq!(p.n_steps(), 0);
    }
}
