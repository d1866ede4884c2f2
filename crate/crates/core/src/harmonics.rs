//! Scalar spherical-harmonic transforms on a [`Grid`].
//!
//! Basis: orthonormal Condon-Shortley harmonics on the unit sphere,
//! `Y_lm(phi, theta) = P_lm(cos phi) e^{i m theta}` with
//! `int |Y_lm|^2 dOmega = 1`. A real field is
//! `h = sum_l [c_l0 Y_l0 + 2 Re sum_{m>0} c_lm Y_lm]`, so only `m >= 0` is
//! stored. Coefficients are unit-sphere projections,
//! `c_lm = (1/a^2) int h conj(Y_lm) dmu`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Grid, GridScalar};

/// Number of stored `(l, m >= 0)` pairs up to degree `degree`.
pub fn table_len(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Triangular index of `(l, m)`, `0 <= m <= l`.
#[inline]
pub fn idx(l: usize, m: usize) -> usize {
    debug_assert!(m <= l);
    l * (l + 1) / 2 + m
}

/// Spectral coefficients of a real scalar field, truncated at degree `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalar {
    degree: usize,
    radius: f64,
    coeffs: Vec<Complex64>,
}

impl SpectralScalar {
    pub fn zeros(degree: usize, radius: f64) -> Self {
        Self {
            degree,
            radius,
            coeffs: vec![Complex64::new(0.0, 0.0); table_len(degree)],
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, l: usize, m: usize) -> Complex64 {
        self.coeffs[idx(l, m)]
    }

    /// Coefficient for any signed `m`, using `c_{l,-m} = (-1)^m conj(c_lm)`.
    pub fn get_signed(&self, l: usize, m: i64) -> Complex64 {
        let c = self.get(l, m.unsigned_abs() as usize);
        if m >= 0 {
            c
        } else if m % 2 == 0 {
            c.conj()
        } else {
            -c.conj()
        }
    }

    /// Sets `c_lm`. For `m = 0` the imaginary part is dropped so the field
    /// stays real.
    pub fn set(&mut self, l: usize, m: usize, value: Complex64) {
        self.coeffs[idx(l, m)] = if m == 0 {
            Complex64::new(value.re, 0.0)
        } else {
            value
        };
    }

    /// Multiplies every degree-`l` block by `f(l)`.
    pub fn scale_by_degree(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..=self.degree {
            let s = f(l);
            for m in 0..=l {
                out.coeffs[idx(l, m)] *= s;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            ..self.clone()
        }
    }

    /// Coefficient-wise `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree, "truncation mismatch");
        Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * s)
                .collect(),
            ..self.clone()
        }
    }

    /// `sum |c_lm|^2` with `m > 0` counted twice, i.e. `(1/a^2) int h^2 dmu`.
    pub fn power(&self) -> f64 {
        let mut total = 0.0;
        for l in 0..=self.degree {
            total += self.get(l, 0).norm_sqr();
            for m in 1..=l {
                total += 2.0 * self.get(l, m).norm_sqr();
            }
        }
        total
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Copy with coefficients of degree `> max_degree` zeroed.
    pub fn truncated(&self, max_degree: usize) -> Self {
        let mut out = self.clone();
        for l in (max_degree + 1)..=self.degree {
            for m in 0..=l {
                out.coeffs[idx(l, m)] = Complex64::new(0.0, 0.0);
            }
        }
        out
    }
}

impl Add for &SpectralScalar {
    type Output = SpectralScalar;
    fn add(self, rhs: Self) -> SpectralScalar {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralScalar {
    type Output = SpectralScalar;
    fn sub(self, rhs: Self) -> SpectralScalar {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for &SpectralScalar {
    type Output = SpectralScalar;
    fn neg(self) -> SpectralScalar {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &SpectralScalar {
    type Output = SpectralScalar;
    fn mul(self, rhs: f64) -> SpectralScalar {
        self.scale(rhs)
    }
}

/// Spectral symbol of the Laplace-Beltrami operator, `-l(l+1)/a^2`.
pub fn laplacian(s: &SpectralScalar) -> SpectralScalar {
    let a2 = s.radius * s.radius;
    s.scale_by_degree(|l| -((l * (l + 1)) as f64) / a2)
}

/// Mean-zero inverse of [`laplacian`]; the output `(0,0)` coefficient is 0.
pub fn invert_laplacian(s: &SpectralScalar) -> Result<SpectralScalar> {
    let mean = s.get(0, 0).norm();
    if mean > 1e-10 {
        return Err(Error::GaugeViolation { magnitude: mean });
    }
    let a2 = s.radius * s.radius;
    let mut out = s.scale_by_degree(|l| if l == 0 { 0.0 } else { -a2 / (l * (l + 1)) as f64 });
    out.set(0, 0, Complex64::new(0.0, 0.0));
    Ok(out)
}

/// Precomputed Legendre and Fourier tables for one grid.
///
/// `legendre[b]` holds `d^b/dphi^b P_lm(cos phi_j)` for `b = 0..=3`, laid out
/// as `[idx(l, m) * n_phi + j]`.
#[derive(Debug, Clone)]
pub struct Transform {
    grid: Grid,
    legendre: [Vec<f64>; 4],
    cos_mt: Vec<f64>,
    sin_mt: Vec<f64>,
}

impl Transform {
    pub fn new(grid: Grid) -> Self {
        let degree = grid.degree();
        let n_phi = grid.n_phi();
        let n_theta = grid.n_theta();
        let len = table_len(degree) * n_phi;
        let mut legendre = [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]];

        let mut column = vec![0.0; table_len(degree)];
        for j in 0..n_phi {
            let x = grid.cos_phi()[j];
            let s = grid.sin_phi()[j];
            normalized_legendre(degree, x, s, &mut column);
            for m in 0..=degree {
                let mf = m as f64;
                for l in m..=degree {
                    let lf = l as f64;
                    let p = column[idx(l, m)];
                    let p_prev = if l > m { column[idx(l - 1, m)] } else { 0.0 };
                    let d1 = (lf * x * p
                        - ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt()
                            * p_prev)
                        / s;
                    let lam = lf * (lf + 1.0);
                    let d2 = -(x / s) * d1 + (mf * mf / (s * s) - lam) * p;
                    let d3 = d1 / (s * s) - (x / s) * d2 - 2.0 * mf * mf * x / (s * s * s) * p
                        + (mf * mf / (s * s) - lam) * d1;
                    let at = idx(l, m) * n_phi + j;
                    legendre[0][at] = p;
                    legendre[1][at] = if l == 0 { 0.0 } else { d1 };
                    legendre[2][at] = d2;
                    legendre[3][at] = d3;
                }
            }
        }

        let mut cos_mt = vec![0.0; (degree + 1) * n_theta];
        let mut sin_mt = vec![0.0; (degree + 1) * n_theta];
        for m in 0..=degree {
            for k in 0..n_theta {
                // reduce the angle index first so large m*k stays exact
                let arg = 2.0 * PI * ((m * k) % n_theta) as f64 / n_theta as f64;
                cos_mt[m * n_theta + k] = arg.cos();
                sin_mt[m * n_theta + k] = arg.sin();
            }
        }
        Self {
            grid,
            legendre,
            cos_mt,
            sin_mt,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.grid.degree()
    }

    pub fn radius(&self) -> f64 {
        self.grid.radius()
    }

    /// `d^order/dphi^order P_lm(cos phi)` at ring `j`.
    pub fn legendre(&self, order: usize, l: usize, m: usize, j: usize) -> f64 {
        self.legendre[order][idx(l, m) * self.grid.n_phi() + j]
    }

    pub fn zeros(&self) -> SpectralScalar {
        SpectralScalar::zeros(self.degree(), self.radius())
    }

    fn check(&self, s: &SpectralScalar) -> Result<()> {
        if s.degree != self.degree() {
            return Err(Error::InvalidParameter(format!(
                "truncation mismatch: coefficients have L={}, grid has L={}",
                s.degree,
                self.degree()
            )));
        }
        Ok(())
    }

    /// Fourier coefficients `(1/n) sum_k h_jk e^{-i m theta_k}` for each ring.
    fn ring_fourier(&self, h: &[f64]) -> Vec<Complex64> {
        let n_theta = self.grid.n_theta();
        let degree = self.degree();
        let mut out = vec![Complex64::new(0.0, 0.0); (degree + 1) * self.grid.n_phi()];
        for (j, ring) in h.chunks_exact(n_theta).enumerate() {
            for m in 0..=degree {
                let c = &self.cos_mt[m * n_theta..(m + 1) * n_theta];
                let s = &self.sin_mt[m * n_theta..(m + 1) * n_theta];
                let mut re = 0.0;
                let mut im = 0.0;
                for k in 0..n_theta {
                    re += ring[k] * c[k];
                    im -= ring[k] * s[k];
                }
                out[m * self.grid.n_phi() + j] = Complex64::new(re, im) / n_theta as f64;
            }
        }
        out
    }

    /// Quadrature projection onto the harmonics.
    pub fn analyze(&self, h: &GridScalar) -> SpectralScalar {
        assert!(
            self.grid.same_layout(h.n_phi(), h.n_theta()),
            "grid mismatch in analyze"
        );
        let n_phi = self.grid.n_phi();
        let fourier = self.ring_fourier(h.values());
        let mut out = self.zeros();
        let w = self.grid.weights();
        for m in 0..=self.degree() {
            let f = &fourier[m * n_phi..(m + 1) * n_phi];
            for l in m..=self.degree() {
                let p = &self.legendre[0][idx(l, m) * n_phi..(idx(l, m) + 1) * n_phi];
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n_phi {
                    acc += f[j] * (w[j] * p[j]);
                }
                out.coeffs[idx(l, m)] = acc * (2.0 * PI);
            }
        }
        for l in 0..=self.degree() {
            out.coeffs[idx(l, 0)].im = 0.0;
        }
        out
    }

    /// Evaluates the field on the grid.
    pub fn synthesize(&self, s: &SpectralScalar) -> Result<GridScalar> {
        self.synthesize_derivative(s, 0, 0)
    }

    /// Evaluates `d^a/dtheta^a d^b/dphi^b` of the field on the grid, `b <= 3`.
    pub fn synthesize_derivative(
        &self,
        s: &SpectralScalar,
        d_theta: u32,
        d_phi: usize,
    ) -> Result<GridScalar> {
        self.check(s)?;
        if d_phi > 3 {
            return Err(Error::InvalidParameter(format!(
                "phi-derivatives are tabulated up to order 3, requested {d_phi}"
            )));
        }
        let n_phi = self.grid.n_phi();
        let n_theta = self.grid.n_theta();
        let degree = self.degree();
        let table = &self.legendre[d_phi];
        let mut values = vec![0.0; n_phi * n_theta];
        let mut ring_coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        for j in 0..n_phi {
            for m in 0..=degree {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in m..=degree {
                    acc += s.coeffs[idx(l, m)] * table[idx(l, m) * n_phi + j];
                }
                // (i m)^a
                let factor = Complex64::new(0.0, m as f64).powu(d_theta);
                ring_coeffs[m] = if d_theta == 0 { acc } else { acc * factor };
            }
            let ring = &mut values[j * n_theta..(j + 1) * n_theta];
            for (k, v) in ring.iter_mut().enumerate() {
                let mut acc = ring_coeffs[0].re;
                for (m, c) in ring_coeffs.iter().enumerate().skip(1) {
                    acc += 2.0
                        * (c.re * self.cos_mt[m * n_theta + k] - c.im * self.sin_mt[m * n_theta + k]);
                }
                *v = acc;
            }
        }
        GridScalar::from_values(&self.grid, values)
    }

    /// Weak projection of a tangent field onto unit-sphere gradients:
    /// `int (f | grad_1 conj(Y_lm)) dOmega` where `f` is given by its
    /// orthonormal-frame components and `grad_1` is the unit-sphere gradient.
    ///
    /// Integration by parts turns this into divergence and vorticity
    /// coefficients (see `fields`).
    pub fn analyze_weak(&self, f_theta: &GridScalar, f_phi: &GridScalar) -> SpectralScalar {
        let n_phi = self.grid.n_phi();
        let ft = self.ring_fourier(f_theta.values());
        let fp = self.ring_fourier(f_phi.values());
        let w = self.grid.weights();
        let sin = self.grid.sin_phi();
        let mut out = self.zeros();
        for m in 0..=self.degree() {
            let mf = m as f64;
            let ftm = &ft[m * n_phi..(m + 1) * n_phi];
            let fpm = &fp[m * n_phi..(m + 1) * n_phi];
            for l in m..=self.degree() {
                let base = idx(l, m) * n_phi;
                let p = &self.legendre[0][base..base + n_phi];
                let dp = &self.legendre[1][base..base + n_phi];
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n_phi {
                    // conj(Y) carries e^{-i m theta}: d/dtheta -> -i m
                    let t = ftm[j] * Complex64::new(0.0, -mf * p[j] / sin[j]);
                    acc += (t + fpm[j] * dp[j]) * w[j];
                }
                out.coeffs[idx(l, m)] = acc * (2.0 * PI);
            }
        }
        for l in 0..=self.degree() {
            out.coeffs[idx(l, 0)].im = 0.0;
        }
        out
    }
}

/// Fully normalized associated Legendre functions `P_lm(x)` for
/// `0 <= m <= l <= degree`, with the Condon-Shortley phase, by the standard
/// three-term recurrence in `l`. `s = sqrt(1 - x^2)`.
pub fn normalized_legendre(degree: usize, x: f64, s: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= table_len(degree));
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=degree {
        if m > 0 {
            let mf = m as f64;
            pmm *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        out[idx(m, m)] = pmm;
        if m < degree {
            out[idx(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
        }
        for l in (m + 2)..=degree {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            out[idx(l, m)] = a * (x * out[idx(l - 1, m)] - b * out[idx(l - 2, m)]);
        }
    }
}
