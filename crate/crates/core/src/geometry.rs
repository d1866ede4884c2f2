//! The discrete sphere of radius `a`.
//!
//! Colatitude `phi` runs from 0 at the north pole to pi at the south pole and
//! longitude `theta` covers `[0, 2pi)`. Coordinate indices follow
//! `theta <-> 0`, `phi <-> 1`, so the metric is `diag(a^2 sin^2 phi, a^2)`.
//! Colatitude nodes are Gauss-Legendre points in `cos phi`; no node sits on a
//! pole, so every `1/sin phi` factor is finite.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tensor-product quadrature grid on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    degree: usize,
    radius: f64,
    phi: Vec<f64>,
    cos_phi: Vec<f64>,
    sin_phi: Vec<f64>,
    weights: Vec<f64>,
    theta: Vec<f64>,
}

/// Builds the dealiased grid for spectral truncation `degree` on a sphere of
/// radius `radius`.
///
/// Longitudes: the smallest 2,3,5-smooth count `>= 3L+1`.
/// Colatitudes: `ceil((3L+1)/2)` Gauss nodes. Quadratic products of
/// degree-`L` fields are then projected back onto degree `<= L` without
/// aliasing.
pub fn build_grid(degree: usize, radius: f64) -> Result<Grid> {
    Grid::new(degree, radius, true)
}

impl Grid {
    /// `dealias = false` gives the minimal grid that is only exact for
    /// linear transforms (`2L+2` longitudes, `L+1` colatitudes).
    pub fn new(degree: usize, radius: f64, dealias: bool) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParameter(format!(
                "spectral degree must be >= 2, got {degree}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        let (n_phi, n_theta) = if dealias {
            ((3 * degree + 2) / 2, smooth_at_least(3 * degree + 1))
        } else {
            (degree + 1, smooth_at_least(2 * degree + 2))
        };
        let (x, weights) = gauss_legendre(n_phi)?;
        let mut phi = vec![0.0; n_phi];
        for j in 0..n_phi.div_ceil(2) {
            phi[j] = x[j].acos();
            phi[n_phi - 1 - j] = PI - phi[j];
        }
        let sin_phi = x.iter().map(|&c| ((1.0 - c) * (1.0 + c)).sqrt()).collect();
        let theta = (0..n_theta)
            .map(|k| 2.0 * PI * k as f64 / n_theta as f64)
            .collect();
        Ok(Self {
            degree,
            radius,
            phi,
            cos_phi: x,
            sin_phi,
            weights,
            theta,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Gaussian curvature `1/a^2`.
    pub fn curvature(&self) -> f64 {
        1.0 / (self.radius * self.radius)
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    pub fn len(&self) -> usize {
        self.n_phi() * self.n_theta()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn cos_phi(&self) -> &[f64] {
        &self.cos_phi
    }

    pub fn sin_phi(&self) -> &[f64] {
        &self.sin_phi
    }

    /// Gauss weights on `cos phi`; they sum to 2.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta() as f64
    }

    /// Smallest gap between neighbouring colatitude nodes.
    pub fn min_dphi(&self) -> f64 {
        self.phi
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Quadrature of a node-major field (`values[j * n_theta + k]`) against
    /// the surface measure `a^2 sin phi dphi dtheta`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let nt = self.n_theta();
        let ring_sum: f64 = values
            .chunks_exact(nt)
            .zip(&self.weights)
            .map(|(ring, w)| w * ring.iter().sum::<f64>())
            .sum();
        self.radius * self.radius * self.dtheta() * ring_sum
    }

    /// Discrete surface area; equals `4 pi a^2` up to roundoff.
    pub fn area(&self) -> f64 {
        self.radius * self.radius * self.dtheta() * self.weights.iter().sum::<f64>() * self.n_theta() as f64
    }

    /// Same node layout (used to reject mixing fields from different grids).
    pub fn same_layout(&self, n_phi: usize, n_theta: usize) -> bool {
        self.n_phi() == n_phi && self.n_theta() == n_theta
    }
}

fn smooth_at_least(n: usize) -> usize {
    (n..)
        .find(|&c| {
            let mut r = c;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .expect("2,3,5-smooth numbers are unbounded")
}

/// Gauss-Legendre nodes (descending, so colatitude ascends) and weights on
/// `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one node".into()));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() <= 1e-16 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        let (p, dp) = legendre_with_derivative(n, z);
        if !converged && p.abs() > 1e-14 {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Legendre root {i} of {n} did not converge (residual {p:e})"
            )));
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, dp)
}

/// Real scalar field sampled on grid nodes, node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScalar {
    n_phi: usize,
    n_theta: usize,
    values: Vec<f64>,
}

impl GridScalar {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            n_phi: grid.n_phi(),
            n_theta: grid.n_theta(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &p in grid.phi() {
            for &t in grid.theta() {
                values.push(f(p, t));
            }
        }
        Self {
            n_phi: grid.n_phi(),
            n_theta: grid.n_theta(),
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            n_phi: grid.n_phi(),
            n_theta: grid.n_theta(),
            values,
        })
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n_theta + k]
    }

    pub fn ring(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_theta..(j + 1) * self.n_theta]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "grid mismatch");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..*self
        }
    }

    /// Quadrature mean over the sphere.
    pub fn mean(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.values) / (4.0 * PI * grid.radius() * grid.radius())
    }
}

/// Coriolis parameter `f_c = 2 omega cos phi` at every node.
pub fn coriolis_parameter(grid: &Grid, omega: f64) -> GridScalar {
    GridScalar::from_fn(grid, |phi, _| 2.0 * omega * phi.cos())
}

/// Levi-Civita connection of the round sphere in `(theta, phi)` coordinates.
///
/// The symbols depend on colatitude only, so they are tabulated per ring.
/// Nonzero entries: `G^0_{01} = G^0_{10} = cot phi` and
/// `G^1_{00} = -sin phi cos phi`. `dgamma` holds their `phi`-derivatives,
/// which the tensor divergence needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelTable {
    gamma: Vec<[[[f64; 2]; 2]; 2]>,
    dgamma_dphi: Vec<[[[f64; 2]; 2]; 2]>,
}

impl ChristoffelTable {
    pub fn new(grid: &Grid) -> Self {
        let mut gamma = Vec::with_capacity(grid.n_phi());
        let mut dgamma_dphi = Vec::with_capacity(grid.n_phi());
        for (&s, &c) in grid.sin_phi().iter().zip(grid.cos_phi()) {
            let mut g = [[[0.0; 2]; 2]; 2];
            let mut dg = [[[0.0; 2]; 2]; 2];
            g[0][0][1] = c / s;
            g[0][1][0] = c / s;
            g[1][0][0] = -s * c;
            dg[0][0][1] = -1.0 / (s * s);
            dg[0][1][0] = -1.0 / (s * s);
            dg[1][0][0] = s * s - c * c;
            gamma.push(g);
            dgamma_dphi.push(dg);
        }
        Self { gamma, dgamma_dphi }
    }

    /// Table with the sign of `G^1_{00}` flipped. Only useful as a negative
    /// control for the identity suite.
    pub fn with_flipped_sign(mut self) -> Self {
        for (g, dg) in self.gamma.iter_mut().zip(self.dgamma_dphi.iter_mut()) {
            g[1][0][0] = -g[1][0][0];
            dg[1][0][0] = -dg[1][0][0];
        }
        self
    }

    /// `G^i_{jk}` on ring `j_ring`, indexed `[i][j][k]`.
    pub fn at(&self, ring: usize) -> &[[[f64; 2]; 2]; 2] {
        &self.gamma[ring]
    }

    /// `d/dphi G^i_{jk}` on ring `ring`.
    pub fn dphi_at(&self, ring: usize) -> &[[[f64; 2]; 2]; 2] {
        &self.dgamma_dphi[ring]
    }

    pub fn n_rings(&self) -> usize {
        self.gamma.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_grid(1, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_grid(4, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_grid(4, -2.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn weights_sum_to_two() {
        let g = build_grid(2, 1.0).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - 2.0).abs() <= 1e-14, "{s}");
    }

    #[test]
    fn discrete_area_is_exact() {
        let g = build_grid(15, 2.0).unwrap();
        let area = g.area();
        assert!((area - 16.0 * PI).abs() / (16.0 * PI) <= 1e-12);
        let ones = vec![1.0; g.len()];
        assert!((g.integrate(&ones) - 16.0 * PI).abs() / (16.0 * PI) <= 1e-12);
    }

    #[test]
    fn nodes_are_symmetric_about_equator() {
        let g = build_grid(31, 1.0).unwrap();
        let n = g.n_phi();
        for j in 0..n {
            assert!((g.phi()[j] - (PI - g.phi()[n - 1 - j])).abs() <= 1e-14);
        }
    }

    #[test]
    fn invariants_hold_over_degree_range() {
        for l in 2..=63 {
            let g = build_grid(l, 1.3).unwrap();
            assert!(g.n_theta() >= 3 * l + 1);
            assert!(2 * g.n_phi() >= 3 * l + 1);
            let s: f64 = g.weights().iter().sum();
            assert!((s - 2.0).abs() <= 1e-13, "L={l}: {s}");
            assert!((g.area() - 4.0 * PI * 1.69).abs() / (4.0 * PI * 1.69) <= 1e-12);
            assert!(g.phi().windows(2).all(|w| w[1] > w[0]));
            assert!(g.phi()[0] > 0.0 && *g.phi().last().unwrap() < PI);
        }
    }

    #[test]
    fn legendre_roots_have_small_residual() {
        for n in [3, 10, 47, 95] {
            let (x, _) = gauss_legendre(n).unwrap();
            for &xi in &x {
                // Newton step size bounds the distance to the true root
                let (p, dp) = legendre_with_derivative(n, xi);
                assert!((p / dp).abs() <= 1e-15, "n={n} x={xi} p={p}");
            }
        }
    }

    #[test]
    fn coriolis_parameter_profile() {
        let g = build_grid(8, 1.0).unwrap();
        let f = coriolis_parameter(&g, 1.0);
        for j in 0..g.n_phi() {
            let expected = 2.0 * g.phi()[j].cos();
            for k in 0..g.n_theta() {
                assert!((f.get(j, k) - expected).abs() <= 1e-15);
            }
        }
        // equator -> 0, pole -> 2
        let at = |phi: f64| 2.0 * phi.cos();
        assert!(at(PI / 2.0).abs() < 1e-15);
        assert!((at(1e-9) - 2.0).abs() < 1e-12);
        assert_eq!(coriolis_parameter(&g, 0.0).max_abs(), 0.0);
    }

    #[test]
    fn christoffel_closed_forms() {
        let g = build_grid(10, 1.0).unwrap();
        let table = ChristoffelTable::new(&g);
        for j in 0..g.n_phi() {
            let phi = g.phi()[j];
            let gam = table.at(j);
            assert!((gam[0][0][1] - 1.0 / phi.tan()).abs() <= 1e-13);
            assert_eq!(gam[0][0][1], gam[0][1][0]);
            assert!((gam[1][0][0] + phi.sin() * phi.cos()).abs() <= 1e-15);
            assert_eq!(gam[0][0][0], 0.0);
            assert_eq!(gam[0][1][1], 0.0);
            assert_eq!(gam[1][0][1], 0.0);
            assert_eq!(gam[1][1][0], 0.0);
            assert_eq!(gam[1][1][1], 0.0);
        }
    }
}
