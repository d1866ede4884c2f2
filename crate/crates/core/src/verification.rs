//! Randomized checks of the differential-geometric identities the solver
//! relies on. Every check compares two independently assembled quantities
//! over at least [`TRIALS`] random band-limited fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{Model, SimParams};
use crate::error::{Error, Result};
use crate::fields::{apply_k, pointwise_dot, rotation_stream, Sphere, StreamFunction, VelocityGrid};
use crate::geometry::{Grid, GridScalar};
use crate::harmonics::SpectralScalar;

pub const TRIALS: usize = 20;

/// Smallest truncation the suite accepts.
pub const MIN_DEGREE: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub name: String,
    pub max_error: f64,
    pub trials: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityReport {
    fn new(name: &str, errors: &[f64], tolerance: f64) -> Self {
        // NaN must fail, so fold with an explicit check
        let max_error = errors
            .iter()
            .fold(0.0f64, |m, &e| if e.is_nan() || m.is_nan() { f64::NAN } else { m.max(e) });
        Self {
            name: name.to_string(),
            max_error,
            trials: errors.len(),
            tolerance,
            pass: max_error <= tolerance,
        }
    }
}

/// Tolerances `(first-order, second-derivative)` for a truncation.
pub fn tolerances(degree: usize) -> (f64, f64) {
    if degree < 10 {
        (1e-6, 1e-6)
    } else {
        (1e-8, 1e-6)
    }
}

/// Runs all nine checks on a fresh dealiased grid.
pub fn run_identity_suite(degree: usize, radius: f64, seed: u64) -> Result<Vec<IdentityReport>> {
    if degree < MIN_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "identity suite needs L >= {MIN_DEGREE}, got {degree}"
        )));
    }
    let sphere = Sphere::new(Grid::new(degree, radius, true)?);
    run_identity_suite_on(&sphere, seed)
}

/// Runs all nine checks on `sphere`, including its connection table.
pub fn run_identity_suite_on(sphere: &Sphere, seed: u64) -> Result<Vec<IdentityReport>> {
    let degree = sphere.degree();
    if degree < MIN_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "identity suite needs L >= {MIN_DEGREE}, got {degree}"
        )));
    }
    let (tol, tol2) = tolerances(degree);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = Ctx { sphere };
    Ok(vec![
        IdentityReport::new("rotation operator K", &ctx.check_k(&mut rng)?, tol),
        IdentityReport::new("rot grad h = 0", &ctx.check_rot_grad(&mut rng)?, tol),
        IdentityReport::new("divergence theorem", &ctx.check_divergence_theorem(&mut rng)?, tol),
        IdentityReport::new("deformation form", &ctx.check_deformation_form(&mut rng)?, tol2),
        IdentityReport::new("Killing equations", &ctx.check_killing(&mut rng)?, tol),
        IdentityReport::new("Coriolis gradient", &ctx.check_coriolis_gradient(&mut rng)?, tol),
        IdentityReport::new("Helmholtz projection", &ctx.check_helmholtz(&mut rng)?, tol),
        IdentityReport::new("Killing gradient", &ctx.check_killing_gradient(&mut rng)?, tol),
        IdentityReport::new("equilibrium stationarity", &ctx.check_equilibrium(&mut rng)?, tol2),
    ])
}

/// Random real field with Gaussian coefficients on degrees `1..=l_max`.
pub fn random_scalar(rng: &mut impl Rng, degree: usize, l_max: usize, radius: f64) -> SpectralScalar {
    let mut s = SpectralScalar::zeros(degree, radius);
    for l in 1..=l_max.min(degree) {
        let w = 1.0 / l as f64;
        for m in 0..=l {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if m == 0 { 0.0 } else { rng.sample(StandardNormal) };
            s.set(l, m, Complex64::new(re * w, im * w));
        }
    }
    s
}

struct Ctx<'a> {
    sphere: &'a Sphere,
}

fn sup(g: &GridScalar) -> f64 {
    g.max_abs()
}

fn sum_abs(g: &GridScalar) -> GridScalar {
    g.map(f64::abs)
}

impl Ctx<'_> {
    fn grid(&self) -> &Grid {
        self.sphere.grid()
    }

    fn scalar(&self, rng: &mut ChaCha8Rng) -> SpectralScalar {
        random_scalar(rng, self.sphere.degree(), self.sphere.degree() / 2, self.sphere.radius())
    }

    fn field(&self, rng: &mut ChaCha8Rng) -> Result<(SpectralScalar, SpectralScalar, VelocityGrid)> {
        let psi = self.scalar(rng);
        let chi = self.scalar(rng);
        let u = self.sphere.velocity_from_potentials(&psi, &chi)?;
        Ok((psi, chi, u))
    }

    fn integral(&self, g: &GridScalar) -> f64 {
        self.grid().integrate(g.values())
    }

    fn norm(&self, u: &VelocityGrid) -> f64 {
        self.integral(&u.norm_sq()).sqrt()
    }

    /// `K^2 = -id`, `(Ku|u)_g = 0`, `(Ku|v)_g = -(u|Kv)_g`.
    fn check_k(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let mut errs = Vec::new();
        for _ in 0..TRIALS {
            let (_, _, u) = self.field(rng)?;
            let (_, _, v) = self.field(rng)?;
            let (su, sv) = (u.max_norm(), v.max_norm());
            let twice = (&apply_k(&apply_k(&u)) + &u).max_norm() / su;
            let orth = sup(&pointwise_dot(&apply_k(&u), &u)) / (su * su);
            let skew = sup(&pointwise_dot(&apply_k(&u), &v).zip_map(&pointwise_dot(&u, &apply_k(&v)), |x, y| x + y))
                / (su * sv);
            errs.push(twice.max(orth).max(skew));
        }
        Ok(errs)
    }

    /// `rot grad h = div(K grad h) = 0`, pointwise through the connection and
    /// spectrally through the weak form.
    fn check_rot_grad(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let zero = self.sphere.transform().zeros();
        let mut errs = Vec::new();
        for _ in 0..TRIALS {
            let h = self.scalar(rng);
            let scale = sup(&self.sphere.transform().synthesize(&crate::harmonics::laplacian(&h))?);
            let pointwise = self.sphere.pointwise_divergence(&self.sphere.jets(&h, &zero)?)?;
            let weak = self.sphere.rot(&self.sphere.gradient(&h)?);
            let weak = sup(&self.sphere.transform().synthesize(&weak)?);
            errs.push(sup(&pointwise).max(weak) / scale);
        }
        Ok(errs)
    }

    /// `int (div u) h = -int (u|grad h)` and
    /// `(div(u (x) v) | w) = -(u (x) v_flat | grad w)`.
    fn check_divergence_theorem(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let s = self.sphere;
        let mut errs = Vec::new();
        for _ in 0..TRIALS {
            let (psi, chi, u) = self.field(rng)?;
            let h = self.scalar(rng);
            let h_grid = s.transform().synthesize(&h)?;
            let grad_h = s.gradient(&h)?;
            let div_u = s.pointwise_divergence(&s.jets(&psi, &chi)?)?;
            let lhs = div_u.zip_map(&h_grid, |x, y| x * y);
            let rhs = pointwise_dot(&u, &grad_h);
            let scale = self.integral(&sum_abs(&lhs)) + self.integral(&sum_abs(&rhs));
            let part_a = (self.integral(&lhs) + self.integral(&rhs)).abs() / scale;

            let (vpsi, vchi, v) = self.field(rng)?;
            let (wpsi, wchi, w) = self.field(rng)?;
            let cg_u = s.covariant_gradient_of_jets(&s.jets(&psi, &chi)?, s.christoffel());
            let jets_v = s.jets(&vpsi, &vchi)?;
            let div_v = s.pointwise_divergence(&jets_v)?;
            let cg_w = s.covariant_gradient_of_jets(&s.jets(&wpsi, &wchi)?, s.christoffel());
            let nabla_v_u = s.covariant_derivative_along(&v, &cg_u)?;
            let div_uv = VelocityGrid {
                u_theta_hat: nabla_v_u.u_theta_hat.zip_map(&u.u_theta_hat.zip_map(&div_v, |x, y| x * y), |x, y| x + y),
                u_phi_hat: nabla_v_u.u_phi_hat.zip_map(&u.u_phi_hat.zip_map(&div_v, |x, y| x * y), |x, y| x + y),
            };
            let nabla_v_w = s.covariant_derivative_along(&v, &cg_w)?;
            let lhs = pointwise_dot(&div_uv, &w);
            let rhs = pointwise_dot(&u, &nabla_v_w);
            let scale = self.integral(&sum_abs(&lhs)) + self.integral(&sum_abs(&rhs));
            let part_b = (self.integral(&lhs) + self.integral(&rhs)).abs() / scale;
            errs.push(part_a.max(part_b));
        }
        Ok(errs)
    }

    /// `((Delta + kappa) u | v) = -2 (D_u | D_v)` on divergence-free fields,
    /// with `(Delta + kappa)` taken spectrally, plus the pointwise identity
    /// `2 div D_u = (Delta + kappa) u`.
    fn check_deformation_form(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let s = self.sphere;
        let zero = s.transform().zeros();
        let mut errs = Vec::new();
        for _ in 0..TRIALS {
            let psi_u = self.scalar(rng);
            let psi_v = self.scalar(rng);
            let u = s.velocity_from_potentials(&psi_u, &zero)?;
            let v = s.velocity_from_potentials(&psi_v, &zero)?;
            let lap_u = s.laplacian_plus_curvature(&u)?;
            let lhs = s.inner_product(&lap_u, &v)?;
            let rhs = -2.0 * s.deformation_inner(&u, &v)?;
            let weak = (lhs - rhs).abs() / (self.norm(&lap_u) * self.norm(&v));
            let cg = s.covariant_gradient_of_jets(&s.jets(&psi_u, &zero)?, s.christoffel());
            let strong = (&s.twice_div_deformation(&cg)? - &lap_u).max_norm() / lap_u.max_norm();
            errs.push(weak.max(strong));
        }
        Ok(errs)
    }

    /// `g^{jk} u^i_{|k} + g^{ik} u^j_{|k} = 0` for the rotation generators and
    /// random combinations of them.
    fn check_killing(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let s = self.sphere;
        let k = s.killing();
        let a = s.radius();
        let mut errs = Vec::new();
        for z in k.all() {
            errs.push(s.killing_defect(z)?);
        }
        while errs.len() < TRIALS {
            let w: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let combo = k.z_x.scale(w[0]).axpy(w[1], &k.z_y).axpy(w[2], &k.z_z);
            let scale = combo.max_norm() / a;
            errs.push(s.killing_defect(&combo)? / scale);
        }
        Ok(errs)
    }

    /// `C(c z_z) = grad h*` with `h* = -a^2 c omega cos^2 phi`.
    fn check_coriolis_gradient(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let s = self.sphere;
        let a = s.radius();
        let mut errs = Vec::new();
        for _ in 0..TRIALS {
            let c: f64 = rng.gen_range(-2.0..2.0);
            let omega: f64 = rng.gen_range(-2.0..2.0);
            let u = s.killing().z_z.scale(c);
            let f = GridScalar::from_fn(self.grid(), |p, _| -2.0 * omega * p.cos());
            let ku = apply_k(&u);
            let cu = VelocityGrid {
                u_theta_hat: ku.u_theta_hat.zip_map(&f, |x, y| x * y),
                u_phi_hat: ku.u_phi_hat.zip_map(&f, |x, y| x * y),
            };
            let h_star = GridScalar::from_fn(self.grid(), |p, _| -a * a * c * omega * p.cos().powi(2));
            let grad_h = s.gradient(&s.transform().analyze(&h_star))?;
            errs.push((&cu - &grad_h).max_norm() / cu.max_norm().max(f64::MIN_POSITIVE));
        }
        Ok(errs)
    }

    /// Reconstruction `u = K grad psi + grad chi`, idempotence and symmetry of
    /// the projection.
    fn check_helmholtz(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let s = self.sphere;
        let mut errs = Vec::new();
        for _ in 0..TRIALS {
            let (_, _, u) = self.field(rng)?;
            let (_, _, v) = self.field(rng)?;
            let (psi, chi) = s.helmholtz_decompose(&u)?;
            let rebuilt = s.velocity_from_potentials(psi.psi(), &chi)?;
            let recon = (&rebuilt - &u).max_norm() / u.max_norm();
            let pu = s.helmholtz_project(&u)?;
            let ppu = s.helmholtz_project(&pu)?;
            let idem = (&ppu - &pu).max_norm() / pu.max_norm();
            let pv = s.helmholtz_project(&v)?;
            let sym = (s.inner_product(&pu, &v)? - s.inner_product(&u, &pv)?).abs()
                / (self.norm(&u) * self.norm(&v));
            errs.push(recon.max(idem).max(sym));
        }
        Ok(errs)
    }

    /// `nabla_{z_i} z_j + nabla_{z_j} z_i = -grad (z_i|z_j)_g`, all pairs,
    /// also for random Killing combinations.
    fn check_killing_gradient(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let s = self.sphere;
        let k = s.killing();
        let a = s.radius();
        let mut pairs: Vec<(VelocityGrid, VelocityGrid)> = Vec::new();
        for i in 0..3 {
            for j in i..3 {
                pairs.push((k.all()[i].clone(), k.all()[j].clone()));
            }
        }
        let combo = |rng: &mut ChaCha8Rng| {
            let w: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            k.z_x.scale(w[0]).axpy(w[1], &k.z_y).axpy(w[2], &k.z_z)
        };
        while pairs.len() < TRIALS {
            let p = (combo(rng), combo(rng));
            pairs.push(p);
        }
        let mut errs = Vec::new();
        for (u, v) in &pairs {
            let cg_u = s.covariant_gradient(u, s.christoffel())?;
            let cg_v = s.covariant_gradient(v, s.christoffel())?;
            let lhs = &s.covariant_derivative_along(u, &cg_v)? + &s.covariant_derivative_along(v, &cg_u)?;
            let dot = s.transform().analyze(&pointwise_dot(u, v));
            let rhs = s.gradient(&dot)?.scale(-1.0);
            let scale = u.max_norm() * v.max_norm() / a;
            errs.push((&lhs - &rhs).max_norm() / scale);
        }
        Ok(errs)
    }

    /// The velocity-form tendency vanishes at `c z_z` for any `omega`, `mu_s`.
    fn check_equilibrium(&self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let s = self.sphere;
        let degree = s.degree();
        let a = s.radius();
        let mut errs = Vec::new();
        for _ in 0..TRIALS {
            let params = SimParams {
                mu_s: rng.gen_range(0.0..0.5),
                omega: rng.gen_range(-2.0..2.0),
                radius: a,
                dt: 1e-3,
                t_end: 0.0,
                dealias: true,
            };
            let c: f64 = rng.gen_range(0.1..2.0);
            let model = Model::with_sphere(s.clone(), params);
            let psi = StreamFunction::new(rotation_stream([0.0, 0.0, 1.0], c, degree, a))?;
            let state = model.state_from_stream(&psi);
            let v = model.momentum_terms(&state)?;
            let tendency = model.rhs_velocity_oracle(&state)?;
            errs.push(tendency.max_norm() / v.max_norm().max(f64::MIN_POSITIVE));
        }
        Ok(errs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_degree() {
        assert!(matches!(run_identity_suite(3, 1.0, 7), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn report_pass_flag() {
        let r = IdentityReport::new("x", &[1e-9, 2e-9], 1e-8);
        assert!(r.pass);
        assert_eq!(r.trials, 2);
        let r = IdentityReport::new("x", &[1e-9, f64::NAN], 1e-8);
        assert!(!r.pass);
    }
}
