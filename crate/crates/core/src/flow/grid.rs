//! Staggered (MAC) grid on the channel `[0, lx) x [-ly/2, ly/2]`, periodic in
//! x with walls at `y = +-ly/2`.
//!
//! Placement:
//! * `u` on x-faces `(i hx, y0 + (j + 1/2) hy)`, `i < nx`, `j < ny`;
//! * `v` on y-faces `((i + 1/2) hx, y0 + j hy)`, `j <= ny`; rows `0` and `ny`
//!   lie on the walls and are identically zero;
//! * pressure and normal stresses at cell centres;
//! * shear stress at nodes `(i hx, y0 + j hy)`, `j <= ny`.

use crate::error::{Result, RheoError};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(RheoError::Config(format!("grid needs nx, ny >= 4 (got {nx} x {ny})")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(RheoError::Config("grid lengths must be positive and finite".into()));
        }
        Ok(Grid { nx, ny, lx, ly })
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    /// Larger of the two cell sizes.
    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn cell_volume(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Half channel width.
    pub fn half_width(&self) -> f64 {
        0.5 * self.ly
    }

    pub fn y0(&self) -> f64 {
        -0.5 * self.ly
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of stored u values.
    pub fn n_u(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of stored v values (including the two wall rows).
    pub fn n_v(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn u_idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn v_idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ip(&self, i: usize) -> usize {
        if i + 1 == self.nx {
            0
        } else {
            i + 1
        }
    }

    #[inline]
    pub fn im(&self, i: usize) -> usize {
        if i == 0 {
            self.nx - 1
        } else {
            i - 1
        }
    }

    pub fn x_face(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx()
    }

    pub fn y_center(&self, j: usize) -> f64 {
        self.y0() + (j as f64 + 0.5) * self.hy()
    }

    pub fn y_node(&self, j: usize) -> f64 {
        self.y0() + j as f64 * self.hy()
    }

    /// Discrete divergence at cell centres.
    pub fn divergence(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let (hx, hy) = (self.hx(), self.hy());
        let mut out = vec![0.0; self.n_cells()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                out[self.cell(i, j)] = (u[self.u_idx(self.ip(i), j)] - u[self.u_idx(i, j)]) / hx
                    + (v[self.v_idx(i, j + 1)] - v[self.v_idx(i, j)]) / hy;
            }
        }
        out
    }

    /// Discrete gradient of a cell field onto faces; wall v-rows stay zero.
    pub fn gradient(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (hx, hy) = (self.hx(), self.hy());
        let mut gu = vec![0.0; self.n_u()];
        let mut gv = vec![0.0; self.n_v()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                gu[self.u_idx(i, j)] = (p[self.cell(i, j)] - p[self.cell(self.im(i), j)]) / hx;
            }
        }
        for j in 1..self.ny {
            for i in 0..self.nx {
                gv[self.v_idx(i, j)] = (p[self.cell(i, j)] - p[self.cell(i, j - 1)]) / hy;
            }
        }
        (gu, gv)
    }

    /// Interpolate the face velocities to cell centres.
    pub fn velocity_at_centers(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut uc = vec![0.0; self.n_cells()];
        let mut vc = vec![0.0; self.n_cells()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.cell(i, j);
                uc[c] = 0.5 * (u[self.u_idx(i, j)] + u[self.u_idx(self.ip(i), j)]);
                vc[c] = 0.5 * (v[self.v_idx(i, j)] + v[self.v_idx(i, j + 1)]);
            }
        }
        (uc, vc)
    }

    /// `max |u|, |v|` over all faces.
    pub fn max_speed(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().chain(v.iter()).fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::new(3, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 0.0, 1.0).is_err());
    }

    #[test]
    fn divergence_and_gradient_are_negative_adjoints() {
        let g = Grid::new(7, 5, 1.3, 2.0).unwrap();
        let p = pseudo(g.n_cells(), 1);
        let u = pseudo(g.n_u(), 2);
        let mut v = pseudo(g.n_v(), 3);
        for i in 0..g.nx {
            v[g.v_idx(i, 0)] = 0.0;
            v[g.v_idx(i, g.ny)] = 0.0;
        }
        let div = g.divergence(&u, &v);
        let (gu, gv) = g.gradient(&p);
        let lhs: f64 = div.iter().zip(&p).map(|(a, b)| a * b).sum();
        let rhs: f64 =
            u.iter().zip(&gu).map(|(a, b)| a * b).sum::<f64>() + v.iter().zip(&gv).map(|(a, b)| a * b).sum::<f64>();
        assert!((lhs + rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}
