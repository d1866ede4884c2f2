//! Tangent vector fields on the sphere.
//!
//! Storage is the orthonormal frame `e_theta = (1/(a sin phi)) d_theta`,
//! `e_phi = (1/a) d_phi`. Coordinate components are `u^theta = u_theta_hat /
//! (a sin phi)` and `u^phi = u_phi_hat / a`. Derivatives of vector fields are
//! always taken spectrally: a field is split into `K grad psi + grad chi` and
//! the two potentials are differentiated up to third order.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ChristoffelTable, Grid, GridScalar};
use crate::harmonics::{invert_laplacian, laplacian, SpectralScalar, Transform};

/// Tangent field in the orthonormal frame (eastward, southward).
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub u_theta_hat: GridScalar,
    pub u_phi_hat: GridScalar,
}

impl VelocityGrid {
    pub fn new(u_theta_hat: GridScalar, u_phi_hat: GridScalar) -> Result<Self> {
        if u_theta_hat.n_phi() != u_phi_hat.n_phi() || u_theta_hat.n_theta() != u_phi_hat.n_theta() {
            return Err(Error::InvalidParameter("velocity components differ in shape".into()));
        }
        Ok(Self {
            u_theta_hat,
            u_phi_hat,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            u_theta_hat: GridScalar::zeros(grid),
            u_phi_hat: GridScalar::zeros(grid),
        }
    }

    /// Samples `f(phi, theta) -> (u_theta_hat, u_phi_hat)` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        Self {
            u_theta_hat: GridScalar::from_fn(grid, |p, t| f(p, t).0),
            u_phi_hat: GridScalar::from_fn(grid, |p, t| f(p, t).1),
        }
    }

    pub fn n_phi(&self) -> usize {
        self.u_theta_hat.n_phi()
    }

    pub fn n_theta(&self) -> usize {
        self.u_theta_hat.n_theta()
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.n_phi() == other.n_phi() && self.n_theta() == other.n_theta()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            u_theta_hat: self.u_theta_hat.map(|v| v * s),
            u_phi_hat: self.u_phi_hat.map(|v| v * s),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self {
            u_theta_hat: self.u_theta_hat.zip_map(&other.u_theta_hat, |a, b| a + s * b),
            u_phi_hat: self.u_phi_hat.zip_map(&other.u_phi_hat, |a, b| a + s * b),
        }
    }

    /// Pointwise metric norm squared, `u_theta_hat^2 + u_phi_hat^2`.
    pub fn norm_sq(&self) -> GridScalar {
        self.u_theta_hat.zip_map(&self.u_phi_hat, |a, b| a * a + b * b)
    }

    /// Largest pointwise speed.
    pub fn max_norm(&self) -> f64 {
        self.norm_sq().values().iter().fold(0.0f64, |m, v| m.max(v.sqrt()))
    }

    pub fn is_finite(&self) -> bool {
        self.u_theta_hat
            .values()
            .iter()
            .chain(self.u_phi_hat.values())
            .all(|v| v.is_finite())
    }
}

impl Add for &VelocityGrid {
    type Output = VelocityGrid;
    fn add(self, rhs: Self) -> VelocityGrid {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &VelocityGrid {
    type Output = VelocityGrid;
    fn sub(self, rhs: Self) -> VelocityGrid {
        self.axpy(-1.0, rhs)
    }
}

/// Quarter turn `(u_theta_hat, u_phi_hat) -> (u_phi_hat, -u_theta_hat)`, so
/// that `K d_theta = -sin(phi) d_phi` and `K d_phi = d_theta / sin(phi)`.
pub fn apply_k(u: &VelocityGrid) -> VelocityGrid {
    VelocityGrid {
        u_theta_hat: u.u_phi_hat.clone(),
        u_phi_hat: u.u_theta_hat.map(|v| -v),
    }
}

/// Pointwise metric inner product `(u|v)_g`.
pub fn pointwise_dot(u: &VelocityGrid, v: &VelocityGrid) -> GridScalar {
    let a = u.u_theta_hat.zip_map(&v.u_theta_hat, |x, y| x * y);
    let b = u.u_phi_hat.zip_map(&v.u_phi_hat, |x, y| x * y);
    a.zip_map(&b, |x, y| x + y)
}

/// Mean-zero stream function `psi` with `u = K grad psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamFunction {
    psi: SpectralScalar,
}

impl StreamFunction {
    /// Wraps `psi`, rejecting a nonzero mean.
    pub fn new(psi: SpectralScalar) -> Result<Self> {
        let mean = psi.get(0, 0).norm();
        if mean > 1e-10 {
            return Err(Error::GaugeViolation { magnitude: mean });
        }
        let mut psi = psi;
        psi.set(0, 0, Complex64::new(0.0, 0.0));
        Ok(Self { psi })
    }

    /// `psi_lm = a^2 zeta_lm / (l(l+1))`.
    pub fn from_vorticity(zeta: &SpectralScalar) -> Result<Self> {
        Self::new(invert_laplacian(&(-zeta))?)
    }

    pub fn psi(&self) -> &SpectralScalar {
        &self.psi
    }

    pub fn into_inner(self) -> SpectralScalar {
        self.psi
    }
}

/// Vorticity `zeta = rot(K grad psi) = -Laplacian psi`.
pub fn vorticity_from_stream(psi: &StreamFunction) -> SpectralScalar {
    -&laplacian(psi.psi())
}

/// Unit-sphere coefficients of `-radius^2 (n . r_hat)` for a unit axis `n`,
/// the stream function of the rotation `n x r`.
pub fn rotation_stream(axis: [f64; 3], rate: f64, degree: usize, radius: f64) -> SpectralScalar {
    let a2 = radius * radius;
    let mut psi = SpectralScalar::zeros(degree, radius);
    psi.set(1, 0, Complex64::new(-a2 * rate * axis[2] * (4.0 * PI / 3.0).sqrt(), 0.0));
    let k = a2 * rate * (2.0 * PI / 3.0).sqrt();
    psi.set(1, 1, Complex64::new(k * axis[0], -k * axis[1]));
    psi
}

/// The three rotation generators `e_i x r`, sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingBasis {
    pub z_x: VelocityGrid,
    pub z_y: VelocityGrid,
    pub z_z: VelocityGrid,
}

impl KillingBasis {
    pub fn new(grid: &Grid) -> Self {
        let a = grid.radius();
        Self {
            z_x: VelocityGrid::from_fn(grid, |p, t| (-a * p.cos() * t.cos(), -a * t.sin())),
            z_y: VelocityGrid::from_fn(grid, |p, t| (-a * p.cos() * t.sin(), a * t.cos())),
            z_z: VelocityGrid::from_fn(grid, |p, _| (a * p.sin(), 0.0)),
        }
    }

    pub fn all(&self) -> [&VelocityGrid; 3] {
        [&self.z_x, &self.z_y, &self.z_z]
    }
}

/// Value, gradient and Hessian of a scalar at one node, in `(theta, phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub d: [f64; 2],
    pub dd: [[f64; 2]; 2],
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            ..Self::default()
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        let mut out = self;
        out.v += o.v;
        for i in 0..2 {
            out.d[i] += o.d[i];
            for j in 0..2 {
                out.dd[i][j] += o.dd[i][j];
            }
        }
        out
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self * -1.0
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        let mut out = self;
        out.v *= s;
        for i in 0..2 {
            out.d[i] *= s;
            for j in 0..2 {
                out.dd[i][j] *= s;
            }
        }
        out
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let mut out = Jet2::constant(self.v * o.v);
        for i in 0..2 {
            out.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in 0..2 {
                out.dd[i][j] = self.dd[i][j] * o.v
                    + self.d[i] * o.d[j]
                    + self.d[j] * o.d[i]
                    + self.v * o.dd[i][j];
            }
        }
        out
    }
}

/// Coordinate components `u^theta, u^phi` with their first and second
/// coordinate derivatives, one entry per node (ring-major).
#[derive(Debug, Clone)]
pub struct VectorJets {
    pub nodes: Vec<[Jet2; 2]>,
}

/// Covariant gradient data at one node: coordinate components `u`, the
/// mixed tensor `grad[i][j] = u^i_{|j}` and `dgrad[i][j][l] = d_l u^i_{|j}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CovariantGradient {
    pub u: [f64; 2],
    pub grad: [[f64; 2]; 2],
    pub dgrad: [[[f64; 2]; 2]; 2],
}

/// Grid, transform, connection and Killing basis bundled for field operators.
#[derive(Debug, Clone)]
pub struct Sphere {
    transform: Transform,
    christoffel: ChristoffelTable,
    killing: KillingBasis,
}

impl Sphere {
    pub fn new(grid: Grid) -> Self {
        let christoffel = ChristoffelTable::new(&grid);
        let killing = KillingBasis::new(&grid);
        Self {
            transform: Transform::new(grid),
            christoffel,
            killing,
        }
    }

    /// Replaces the connection table (used by the negative control).
    pub fn with_christoffel(mut self, table: ChristoffelTable) -> Self {
        self.christoffel = table;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.transform.grid()
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn christoffel(&self) -> &ChristoffelTable {
        &self.christoffel
    }

    pub fn killing(&self) -> &KillingBasis {
        &self.killing
    }

    pub fn degree(&self) -> usize {
        self.grid().degree()
    }

    pub fn radius(&self) -> f64 {
        self.grid().radius()
    }

    /// Multiplies each ring `j` by `f(j)`.
    fn ring_scaled(&self, h: &GridScalar, f: impl Fn(usize) -> f64) -> GridScalar {
        let n_theta = h.n_theta();
        let mut out = h.clone();
        for (j, ring) in out.values_mut().chunks_exact_mut(n_theta).enumerate() {
            let s = f(j);
            ring.iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    /// `K grad psi + grad chi` on the grid.
    pub fn velocity_from_potentials(
        &self,
        psi: &SpectralScalar,
        chi: &SpectralScalar,
    ) -> Result<VelocityGrid> {
        let t = &self.transform;
        let a = self.radius();
        let sin = self.grid().sin_phi();
        let psi_t = t.synthesize_derivative(psi, 1, 0)?;
        let psi_p = t.synthesize_derivative(psi, 0, 1)?;
        let chi_t = t.synthesize_derivative(chi, 1, 0)?;
        let chi_p = t.synthesize_derivative(chi, 0, 1)?;
        let east = psi_p
            .map(|v| v / a)
            .zip_map(&self.ring_scaled(&chi_t, |j| 1.0 / (a * sin[j])), |x, y| x + y);
        let south = self
            .ring_scaled(&psi_t, |j| -1.0 / (a * sin[j]))
            .zip_map(&chi_p.map(|v| v / a), |x, y| x + y);
        VelocityGrid::new(east, south)
    }

    /// `u = K grad psi`: `u_theta_hat = psi_phi / a`,
    /// `u_phi_hat = -psi_theta / (a sin phi)`.
    pub fn velocity_from_stream(&self, psi: &StreamFunction) -> Result<VelocityGrid> {
        self.velocity_from_potentials(psi.psi(), &self.transform.zeros())
    }

    /// `grad h` on the grid.
    pub fn gradient(&self, h: &SpectralScalar) -> Result<VelocityGrid> {
        self.velocity_from_potentials(&self.transform.zeros(), h)
    }

    /// Spectral divergence by integration by parts against `grad conj(Y_lm)`.
    pub fn divergence(&self, u: &VelocityGrid) -> SpectralScalar {
        let a = self.radius();
        self.transform
            .analyze_weak(&u.u_theta_hat, &u.u_phi_hat)
            .scale(-1.0 / a)
    }

    /// Spectral vorticity `rot u = div(K u)`.
    pub fn rot(&self, u: &VelocityGrid) -> SpectralScalar {
        self.divergence(&apply_k(u))
    }

    /// Splits `u = K grad psi + grad chi`, both potentials mean-zero.
    pub fn helmholtz_decompose(&self, u: &VelocityGrid) -> Result<(StreamFunction, SpectralScalar)> {
        let mut rot = self.rot(u);
        let mut div = self.divergence(u);
        // the (0,0) parts vanish analytically; drop quadrature roundoff
        rot.set(0, 0, Complex64::new(0.0, 0.0));
        div.set(0, 0, Complex64::new(0.0, 0.0));
        let psi = StreamFunction::new(invert_laplacian(&(-&rot))?)?;
        let chi = invert_laplacian(&div)?;
        Ok((psi, chi))
    }

    /// Helmholtz projection: the divergence-free part `K grad psi`.
    pub fn helmholtz_project(&self, u: &VelocityGrid) -> Result<VelocityGrid> {
        let (psi, _) = self.helmholtz_decompose(u)?;
        self.velocity_from_stream(&psi)
    }

    /// Coordinate-component jets of `K grad psi + grad chi`.
    pub fn jets(&self, psi: &SpectralScalar, chi: &SpectralScalar) -> Result<VectorJets> {
        let bank = |s: &SpectralScalar| -> Result<Vec<Vec<Option<GridScalar>>>> {
            let mut table = vec![vec![None; 4]; 4];
            for a in 0..=3usize {
                for b in 0..=(3 - a) {
                    if a + b >= 1 {
                        table[a][b] = Some(self.transform.synthesize_derivative(s, a as u32, b)?);
                    }
                }
            }
            Ok(table)
        };
        let pb = bank(psi)?;
        let cb = bank(chi)?;
        let jet = |t: &Vec<Vec<Option<GridScalar>>>, a: usize, b: usize, n: usize| {
            let g = |x: usize, y: usize| t[x][y].as_ref().map_or(0.0, |h| h.values()[n]);
            Jet2 {
                v: g(a, b),
                d: [g(a + 1, b), g(a, b + 1)],
                dd: [
                    [g(a + 2, b), g(a + 1, b + 1)],
                    [g(a + 1, b + 1), g(a, b + 2)],
                ],
            }
        };
        let a2 = self.radius() * self.radius();
        let grid = self.grid();
        let n_theta = grid.n_theta();
        let mut nodes = Vec::with_capacity(grid.len());
        for j in 0..grid.n_phi() {
            let s = grid.sin_phi()[j];
            let c = grid.cos_phi()[j];
            let inv_s = Jet2 {
                v: 1.0 / s,
                d: [0.0, -c / (s * s)],
                dd: [[0.0, 0.0], [0.0, (s * s + 2.0 * c * c) / (s * s * s)]],
            };
            let inv_s2 = Jet2 {
                v: 1.0 / (s * s),
                d: [0.0, -2.0 * c / (s * s * s)],
                dd: [[0.0, 0.0], [0.0, 2.0 * (s * s + 3.0 * c * c) / (s * s * s * s)]],
            };
            for k in 0..n_theta {
                let n = j * n_theta + k;
                let u_theta = (jet(&pb, 0, 1, n) * inv_s + jet(&cb, 1, 0, n) * inv_s2) * (1.0 / a2);
                let u_phi = (jet(&cb, 0, 1, n) - jet(&pb, 1, 0, n) * inv_s) * (1.0 / a2);
                nodes.push([u_theta, u_phi]);
            }
        }
        Ok(VectorJets { nodes })
    }

    /// Jets of an arbitrary grid field via its Helmholtz potentials.
    pub fn jets_of(&self, u: &VelocityGrid) -> Result<VectorJets> {
        let (psi, chi) = self.helmholtz_decompose(u)?;
        self.jets(psi.psi(), &chi)
    }

    /// `u^i_{|j} = d_j u^i + G^i_{jk} u^k` and its first derivatives.
    pub fn covariant_gradient_of_jets(
        &self,
        jets: &VectorJets,
        christoffels: &ChristoffelTable,
    ) -> Vec<CovariantGradient> {
        let n_theta = self.grid().n_theta();
        jets.nodes
            .iter()
            .enumerate()
            .map(|(n, du)| {
                let ring = n / n_theta;
                let g = christoffels.at(ring);
                let dg = christoffels.dphi_at(ring);
                let mut out = CovariantGradient {
                    u: [du[0].v, du[1].v],
                    ..Default::default()
                };
                for i in 0..2 {
                    for j in 0..2 {
                        let mut t = du[i].d[j];
                        for k in 0..2 {
                            t += g[i][j][k] * du[k].v;
                        }
                        out.grad[i][j] = t;
                        for l in 0..2 {
                            let mut dt = du[i].dd[j][l];
                            for k in 0..2 {
                                if l == 1 {
                                    dt += dg[i][j][k] * du[k].v;
                                }
                                dt += g[i][j][k] * du[k].d[l];
                            }
                            out.dgrad[i][j][l] = dt;
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// Covariant gradient of a grid field with an explicit connection table.
    pub fn covariant_gradient(
        &self,
        u: &VelocityGrid,
        christoffels: &ChristoffelTable,
    ) -> Result<Vec<CovariantGradient>> {
        Ok(self.covariant_gradient_of_jets(&self.jets_of(u)?, christoffels))
    }

    /// Frame components `h_a u^a_{|b} / h_b` with `h = (a sin phi, a)`.
    pub fn frame_tensor(&self, cg: &[CovariantGradient]) -> Vec<[[f64; 2]; 2]> {
        let a = self.radius();
        let n_theta = self.grid().n_theta();
        cg.iter()
            .enumerate()
            .map(|(n, c)| {
                let h = [a * self.grid().sin_phi()[n / n_theta], a];
                let mut t = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        t[i][j] = h[i] * c.grad[i][j] / h[j];
                    }
                }
                t
            })
            .collect()
    }

    /// Frame components of `D_u = (grad u + (grad u)^T) / 2`.
    pub fn deformation_frame(&self, cg: &[CovariantGradient]) -> Vec<[[f64; 2]; 2]> {
        self.frame_tensor(cg)
            .into_iter()
            .map(|t| {
                let mut d = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        d[i][j] = 0.5 * (t[i][j] + t[j][i]);
                    }
                }
                d
            })
            .collect()
    }

    /// `(D_u | D_v)_M` by quadrature.
    pub fn deformation_inner(&self, u: &VelocityGrid, v: &VelocityGrid) -> Result<f64> {
        let du = self.deformation_frame(&self.covariant_gradient(u, &self.christoffel)?);
        let dv = self.deformation_frame(&self.covariant_gradient(v, &self.christoffel)?);
        let values: Vec<f64> = du
            .iter()
            .zip(&dv)
            .map(|(x, y)| (0..2).flat_map(|i| (0..2).map(move |j| x[i][j] * y[i][j])).sum())
            .collect();
        Ok(self.grid().integrate(&values))
    }

    /// `||D_u||^2_{L2}`.
    pub fn deformation_norm_sq(&self, u: &VelocityGrid) -> Result<f64> {
        self.deformation_inner(u, u)
    }

    /// `||grad u||^2_{L2}` (full covariant gradient).
    pub fn gradient_norm_sq(&self, u: &VelocityGrid) -> Result<f64> {
        let t = self.frame_tensor(&self.covariant_gradient(u, &self.christoffel)?);
        let values: Vec<f64> = t.iter().map(|m| m.iter().flatten().map(|x| x * x).sum()).collect();
        Ok(self.grid().integrate(&values))
    }

    /// Largest pointwise violation of `g^{jk} u^i_{|k} + g^{ik} u^j_{|k} = 0`,
    /// measured in the orthonormal frame.
    pub fn killing_defect(&self, u: &VelocityGrid) -> Result<f64> {
        let t = self.frame_tensor(&self.covariant_gradient(u, &self.christoffel)?);
        Ok(t.iter().fold(0.0f64, |m, x| {
            let mut worst = m;
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((x[i][j] + x[j][i]).abs());
                }
            }
            worst
        }))
    }

    fn coordinate_to_frame(&self, comps: &[[f64; 2]]) -> Result<VelocityGrid> {
        let a = self.radius();
        let n_theta = self.grid().n_theta();
        let sin = self.grid().sin_phi();
        let east = comps
            .iter()
            .enumerate()
            .map(|(n, c)| a * sin[n / n_theta] * c[0])
            .collect();
        let south = comps.iter().map(|c| a * c[1]).collect();
        VelocityGrid::new(
            GridScalar::from_values(self.grid(), east)?,
            GridScalar::from_values(self.grid(), south)?,
        )
    }

    /// `nabla_u v` with `v` given through its covariant gradient.
    pub fn covariant_derivative_along(
        &self,
        u: &VelocityGrid,
        grad_v: &[CovariantGradient],
    ) -> Result<VelocityGrid> {
        let a = self.radius();
        let n_theta = self.grid().n_theta();
        let sin = self.grid().sin_phi();
        let comps: Vec<[f64; 2]> = grad_v
            .iter()
            .enumerate()
            .map(|(n, g)| {
                let w = [
                    u.u_theta_hat.values()[n] / (a * sin[n / n_theta]),
                    u.u_phi_hat.values()[n] / a,
                ];
                [
                    g.grad[0][0] * w[0] + g.grad[0][1] * w[1],
                    g.grad[1][0] * w[0] + g.grad[1][1] * w[1],
                ]
            })
            .collect();
        self.coordinate_to_frame(&comps)
    }

    /// Pointwise `2 div D_u` from the covariant tensor divergence
    /// `d_k S^{ik} + G^i_{kl} S^{lk} + G^k_{kl} S^{il}`, `S^{ij} = 2 D^{ij}`.
    pub fn twice_div_deformation(&self, cg: &[CovariantGradient]) -> Result<VelocityGrid> {
        let a2 = self.radius() * self.radius();
        let n_theta = self.grid().n_theta();
        let comps: Vec<[f64; 2]> = cg
            .iter()
            .enumerate()
            .map(|(n, c)| {
                let ring = n / n_theta;
                let s = self.grid().sin_phi()[ring];
                let co = self.grid().cos_phi()[ring];
                let g = self.christoffel.at(ring);
                let ginv = [1.0 / (a2 * s * s), 1.0 / a2];
                // d/dphi of the inverse metric diagonal
                let dginv = [-2.0 * co / (a2 * s * s * s), 0.0];
                let mut sten = [[0.0; 2]; 2];
                let mut dsten = [[[0.0; 2]; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        sten[i][j] = ginv[j] * c.grad[i][j] + ginv[i] * c.grad[j][i];
                        for l in 0..2 {
                            let mut v = ginv[j] * c.dgrad[i][j][l] + ginv[i] * c.dgrad[j][i][l];
                            if l == 1 {
                                v += dginv[j] * c.grad[i][j] + dginv[i] * c.grad[j][i];
                            }
                            dsten[i][j][l] = v;
                        }
                    }
                }
                let mut w = [0.0; 2];
                for i in 0..2 {
                    let mut acc = 0.0;
                    for k in 0..2 {
                        acc += dsten[i][k][k];
                        for l in 0..2 {
                            acc += g[i][k][l] * sten[l][k] + g[k][k][l] * sten[i][l];
                        }
                    }
                    w[i] = acc;
                }
                w
            })
            .collect();
        self.coordinate_to_frame(&comps)
    }

    /// Spectral `(Laplacian + kappa) u` through
    /// `(Delta + kappa) (K grad psi + grad chi) = K grad((Delta + 2 kappa) psi) + grad((Delta + 2 kappa) chi)`.
    pub fn laplacian_plus_curvature(&self, u: &VelocityGrid) -> Result<VelocityGrid> {
        let (psi, chi) = self.helmholtz_decompose(u)?;
        let kappa = self.grid().curvature();
        let shift = |s: &SpectralScalar| laplacian(s).axpy(2.0 * kappa, s);
        self.velocity_from_potentials(&shift(psi.psi()), &shift(&chi))
    }

    /// Pointwise divergence `d_i u^i + G^i_{ik} u^k` from jets.
    pub fn pointwise_divergence(&self, jets: &VectorJets) -> Result<GridScalar> {
        let n_theta = self.grid().n_theta();
        let values = jets
            .nodes
            .iter()
            .enumerate()
            .map(|(n, du)| {
                let g = self.christoffel.at(n / n_theta);
                let mut acc = du[0].d[0] + du[1].d[1];
                for i in 0..2 {
                    for k in 0..2 {
                        acc += g[i][i][k] * du[k].v;
                    }
                }
                acc
            })
            .collect();
        GridScalar::from_values(self.grid(), values)
    }

    /// `(u|v)_M` by quadrature.
    pub fn inner_product(&self, u: &VelocityGrid, v: &VelocityGrid) -> Result<f64> {
        if !u.same_shape(v) || !self.grid().same_layout(u.n_phi(), u.n_theta()) {
            return Err(Error::InvalidParameter("velocity fields live on different grids".into()));
        }
        Ok(self.grid().integrate(pointwise_dot(u, v).values()))
    }

    /// `u = c z_z + residual` with `c = (u|z_z)_M / (z_z|z_z)_M`.
    pub fn project_onto_e(&self, u: &VelocityGrid) -> Result<(f64, VelocityGrid)> {
        let z = &self.killing.z_z;
        let c = self.inner_product(u, z)? / self.inner_product(z, z)?;
        Ok((c, u.axpy(-c, z)))
    }
}
