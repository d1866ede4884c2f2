//! Initial conditions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diagnostics::spectral_energy;
use crate::error::{Error, Result};
use crate::fields::{rotation_stream, StreamFunction};
use crate::harmonics::SpectralScalar;

fn default_l_max() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// Rigid rotation `c z_z`.
    Equilibrium { c: f64 },
    /// Rigid rotation at rate `c` about a unit-normalized `axis`.
    TiltedRotation { axis: [f64; 3], c: f64 },
    /// Single stream-function mode; `amplitude` is the coefficient `psi_lm`.
    Mode { l: usize, m: i64, amplitude: f64 },
    /// Gaussian coefficients on degrees `1..=l_max` with degree energy
    /// proportional to `l^spectrum_slope`, scaled to RMS speed `amplitude`.
    Random {
        seed: u64,
        spectrum_slope: f64,
        amplitude: f64,
        #[serde(default = "default_l_max")]
        l_max: usize,
    },
}

impl InitSpec {
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            InitSpec::Random {
                spectrum_slope,
                amplitude,
                l_max,
                ..
            } => InitSpec::Random {
                seed,
                spectrum_slope: *spectrum_slope,
                amplitude: *amplitude,
                l_max: *l_max,
            },
            other => other.clone(),
        }
    }

    /// Stream function on a truncation of degree `degree`.
    pub fn build(&self, degree: usize, radius: f64) -> Result<StreamFunction> {
        let mut psi = SpectralScalar::zeros(degree, radius);
        match *self {
            InitSpec::Equilibrium { c } => {
                psi = rotation_stream([0.0, 0.0, 1.0], c, degree, radius);
            }
            InitSpec::TiltedRotation { axis, c } => {
                let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
                if !(n > 0.0) {
                    return Err(Error::InvalidParameter("rotation axis must be nonzero".into()));
                }
                psi = rotation_stream([axis[0] / n, axis[1] / n, axis[2] / n], c, degree, radius);
            }
            InitSpec::Mode { l, m, amplitude } => {
                let am = m.unsigned_abs() as usize;
                if l == 0 || l > degree || am > l {
                    return Err(Error::InvalidParameter(format!(
                        "mode ({l},{m}) outside 1 <= l <= {degree}, |m| <= l"
                    )));
                }
                // psi_{l,-m} = (-1)^m conj(psi_{l,m})
                let sign = if m < 0 && am % 2 == 1 { -1.0 } else { 1.0 };
                psi.set(l, am, Complex64::new(sign * amplitude, 0.0));
            }
            InitSpec::Random {
                seed,
                spectrum_slope,
                amplitude,
                l_max,
            } => {
                if l_max == 0 || l_max > degree {
                    return Err(Error::InvalidParameter(format!(
                        "random l_max must be in 1..={degree}, got {l_max}"
                    )));
                }
                if !(amplitude >= 0.0) {
                    return Err(Error::InvalidParameter("random amplitude must be >= 0".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
                for l in 1..=l_max {
                    let mut block = Vec::with_capacity(l + 1);
                    for m in 0..=l {
                        let re = draw();
                        let im = if m == 0 { 0.0 } else { draw() };
                        block.push(Complex64::new(re, im));
                    }
                    let lam = (l * (l + 1)) as f64;
                    let block_energy: f64 = block
                        .iter()
                        .enumerate()
                        .map(|(m, c)| if m == 0 { 1.0 } else { 2.0 } * lam * c.norm_sqr())
                        .sum();
                    let scale = if block_energy > 0.0 {
                        ((l as f64).powf(spectrum_slope) / block_energy).sqrt()
                    } else {
                        0.0
                    };
                    for (m, c) in block.into_iter().enumerate() {
                        psi.set(l, m, c * scale);
                    }
                }
                let target = amplitude * amplitude * 4.0 * PI * radius * radius;
                let current = spectral_energy(&psi);
                if current > 0.0 {
                    psi = psi.scale((target / current).sqrt());
                }
            }
        }
        StreamFunction::new(psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_init_has_requested_rms_speed() {
        let spec = InitSpec::Random {
            seed: 3,
            spectrum_slope: -1.0,
            amplitude: 0.4,
            l_max: 5,
        };
        let psi = spec.build(10, 2.0).unwrap();
        let e = spectral_energy(psi.psi());
        assert!((e - 0.16 * 4.0 * PI * 4.0).abs() / e < 1e-12);
        assert_eq!(psi.psi().truncated(5), *psi.psi());
        assert_eq!(spec.build(10, 2.0).unwrap(), psi);
    }

    #[test]
    fn mode_validation() {
        assert!(InitSpec::Mode { l: 3, m: 4, amplitude: 1.0 }.build(5, 1.0).is_err());
        assert!(InitSpec::Mode { l: 6, m: 1, amplitude: 1.0 }.build(5, 1.0).is_err());
        let psi = InitSpec::Mode { l: 2, m: -1, amplitude: 1.0 }.build(5, 1.0).unwrap();
        assert_eq!(psi.psi().get_signed(2, -1).re, 1.0);
    }

    #[test]
    fn zero_axis_rejected() {
        assert!(InitSpec::TiltedRotation { axis: [0.0; 3], c: 1.0 }.build(4, 1.0).is_err());
    }
}
