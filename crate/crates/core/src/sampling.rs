//! Deterministic sampling of stress/rate points on radius shells.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RheoError};
use crate::tensor::Element;

/// How directions are drawn on each shell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Isotropic Gaussian directions, normalized.
    GaussianShell,
    /// Deterministic lattice directions with entries in {-1, 0, 1}.
    Grid,
}

/// Sampling plan: `count` points per shell for each radius of the schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub seed: u64,
    pub count: usize,
    pub radius_schedule: Vec<f64>,
    pub distribution: Distribution,
    /// Spatial dimension of the sampled tensors/vectors.
    pub dim: usize,
}

impl Sampler {
    pub fn new(
        seed: u64,
        count: usize,
        radius_schedule: Vec<f64>,
        distribution: Distribution,
        dim: usize,
    ) -> Result<Self> {
        if count == 0 {
            return Err(RheoError::param("count", "must be >= 1"));
        }
        if dim != 2 && dim != 3 {
            return Err(RheoError::UnsupportedDimension(dim));
        }
        if radius_schedule.is_empty() {
            return Err(RheoError::param("radius_schedule", "must not be empty"));
        }
        if radius_schedule.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(RheoError::param("radius_schedule", "radii must be positive and finite"));
        }
        if radius_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RheoError::param("radius_schedule", "radii must be strictly increasing"));
        }
        Ok(Sampler {
            seed,
            count,
            radius_schedule,
            distribution,
            dim,
        })
    }

    /// Gaussian shells at radii 10^-2 .. 10^2 (one per half decade) in 3D.
    pub fn standard(seed: u64, count: usize) -> Self {
        let radii = (0..9).map(|k| 10f64.powf(-2.0 + 0.5 * k as f64)).collect();
        Sampler::new(seed, count, radii, Distribution::GaussianShell, 3).expect("valid default sampler")
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(RheoError::UnsupportedDimension(dim));
        }
        self.dim = dim;
        Ok(self)
    }

    /// Independent deterministic stream for a named purpose.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Unit direction number `index` for element type `E`.
    pub fn direction<E: Element>(&self, rng: &mut ChaCha8Rng, index: usize) -> E {
        let template = E::zero_in(self.dim);
        let (_, n) = template.coords();
        let mut c = [0.0; 6];
        match self.distribution {
            Distribution::GaussianShell => loop {
                for ci in c.iter_mut().take(n) {
                    *ci = rng.sample(StandardNormal);
                }
                let norm: f64 = c[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    for ci in c.iter_mut().take(n) {
                        *ci /= norm;
                    }
                    break;
                }
            },
            Distribution::Grid => {
                // Enumerate the non-zero vectors of {-1,0,1}^n in base-3 order.
                let total = 3usize.pow(n as u32) - 1;
                let mut k = index % total + 1;
                for ci in c.iter_mut().take(n) {
                    *ci = (k % 3) as f64 - 1.0;
                    k /= 3;
                }
                let norm: f64 = c[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    c[0] = 1.0;
                } else {
                    for ci in c.iter_mut().take(n) {
                        *ci /= norm;
                    }
                }
            }
        }
        template.with_coords(&c[..n])
    }

    /// Point of magnitude `radius` in direction number `index`.
    pub fn point<E: Element>(&self, rng: &mut ChaCha8Rng, index: usize, radius: f64) -> E {
        self.direction::<E>(rng, index) * radius
    }

    pub fn max_radius(&self) -> f64 {
        *self.radius_schedule.last().expect("non-empty schedule")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{SlipVector, SymTensor2};

    #[test]
    fn rejects_bad_plans() {
        assert!(Sampler::new(1, 0, vec![1.0], Distribution::GaussianShell, 2).is_err());
        assert!(Sampler::new(1, 4, vec![1.0, 1.0], Distribution::GaussianShell, 2).is_err());
        assert!(Sampler::new(1, 4, vec![2.0, 1.0], Distribution::GaussianShell, 2).is_err());
        assert!(Sampler::new(1, 4, vec![-1.0], Distribution::GaussianShell, 2).is_err());
        assert!(Sampler::new(1, 4, vec![1.0], Distribution::GaussianShell, 4).is_err());
    }

    #[test]
    fn directions_are_unit_and_deterministic() {
        for dist in [Distribution::GaussianShell, Distribution::Grid] {
            let s = Sampler::new(7, 4, vec![1.0], dist, 3).unwrap();
            let mut a = s.rng(3);
            let mut b = s.rng(3);
            for i in 0..50 {
                let x: SymTensor2 = s.direction(&mut a, i);
                let y: SymTensor2 = s.direction(&mut b, i);
                assert_eq!(x, y);
                assert!((x.frobenius_norm() - 1.0).abs() < 1e-14);
                let v: SlipVector = s.point(&mut a, i, 2.5);
                let _ = s.point::<SlipVector>(&mut b, i, 2.5);
                assert!((v.norm() - 2.5).abs() < 1e-13);
            }
        }
    }
}
