//! Exact discrete pressure projection: Fourier transform in the periodic
//! direction, tridiagonal solve in the wall-normal direction.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::Grid;
use crate::error::{Result, RheoError};

pub struct Projector {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Fourier symbol of the periodic second difference, per wavenumber.
    lambda_x: Vec<f64>,
}

impl Projector {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let nx = grid.nx;
        let hx = grid.hx();
        let lambda_x = (0..nx)
            .map(|k| (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / nx as f64).cos()) / (hx * hx))
            .collect();
        Projector {
            grid: grid.clone(),
            forward: planner.plan_fft_forward(nx),
            inverse: planner.plan_fft_inverse(nx),
            lambda_x,
        }
    }

    /// Solve `L phi = rhs` for the discrete Neumann-periodic Laplacian
    /// `L = div grad`; the result has zero mean. `rhs` must have zero sum.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_poisson(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let hy2 = g.hy() * g.hy();
        let mut spectrum: Vec<Vec<Complex<f64>>> = (0..ny)
            .map(|j| {
                let mut row: Vec<Complex<f64>> = (0..nx).map(|i| Complex::new(rhs[g.cell(i, j)], 0.0)).collect();
                self.forward.process(&mut row);
                row
            })
            .collect();

        let mut col = vec![Complex::new(0.0, 0.0); ny];
        let mut cp = vec![0.0; ny];
        let mut dp = vec![Complex::new(0.0, 0.0); ny];
        for k in 0..nx {
            for j in 0..ny {
                col[j] = spectrum[j][k];
            }
            let lx = self.lambda_x[k];
            if k == 0 {
                // Singular mode: pin the first value and solve the remaining
                // rows; the dropped row holds by compatibility.
                let sol = thomas_pinned(&col, hy2)?;
                col.copy_from_slice(&sol);
            } else {
                // Rows: (phi[j-1] - 2 phi[j] + phi[j+1]) / hy^2 - lx phi[j],
                // with Neumann closure at both ends.
                let sub = 1.0 / hy2;
                for j in 0..ny {
                    let mut diag = -lx - 2.0 / hy2;
                    if j == 0 || j + 1 == ny {
                        diag += 1.0 / hy2;
                    }
                    let sup = if j + 1 < ny { 1.0 / hy2 } else { 0.0 };
                    let low = if j > 0 { sub } else { 0.0 };
                    let denom = diag - low * if j > 0 { cp[j - 1] } else { 0.0 };
                    if denom.abs() < 1e-300 {
                        return Err(RheoError::LinearSolver("singular projection system".into()));
                    }
                    cp[j] = sup / denom;
                    let prev = if j > 0 { dp[j - 1] } else { Complex::new(0.0, 0.0) };
                    dp[j] = (col[j] - prev * low) / denom;
                }
                col[ny - 1] = dp[ny - 1];
                for j in (0..ny - 1).rev() {
                    col[j] = dp[j] - col[j + 1] * cp[j];
                }
            }
            for j in 0..ny {
                spectrum[j][k] = col[j];
            }
        }

        let mut out = vec![0.0; g.n_cells()];
        let scale = 1.0 / nx as f64;
        for (j, row) in spectrum.iter_mut().enumerate() {
            self.inverse.process(row);
            for i in 0..nx {
                out[g.cell(i, j)] = row[i].re * scale;
            }
        }
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        for x in &mut out {
            *x -= mean;
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(RheoError::LinearSolver("non-finite projection solution".into()));
        }
        Ok(out)
    }

    /// Project `(u, v)` onto discretely divergence-free fields in place and
    /// return the potential `phi` with `(u, v) -= grad phi`.
    pub fn project(&self, u: &mut [f64], v: &mut [f64]) -> Result<Vec<f64>> {
        let g = &self.grid;
        let mut div = g.divergence(u, v);
        // Remove the round-off mean so the Neumann problem is compatible.
        let mean = div.iter().sum::<f64>() / div.len() as f64;
        for d in &mut div {
            *d -= mean;
        }
        let phi = self.solve_poisson(&div)?;
        let (gu, gv) = g.gradient(&phi);
        for (a, b) in u.iter_mut().zip(&gu) {
            *a -= b;
        }
        for (a, b) in v.iter_mut().zip(&gv) {
            *a -= b;
        }
        Ok(phi)
    }
}

/// Neumann second-difference system with `phi[0] = 0`, solved for rows
/// `1..n` (zero-mode of the projection).
fn thomas_pinned(rhs: &[Complex<f64>], hy2: f64) -> Result<Vec<Complex<f64>>> {
    let n = rhs.len();
    let mut out = vec![Complex::new(0.0, 0.0); n];
    let m = n - 1;
    if m == 0 {
        return Ok(out);
    }
    let mut cp = vec![0.0; m];
    let mut dp = vec![Complex::new(0.0, 0.0); m];
    for r in 0..m {
        let j = r + 1;
        let diag = if j + 1 == n { -1.0 / hy2 } else { -2.0 / hy2 };
        let low = if r > 0 { 1.0 / hy2 } else { 0.0 };
        let sup = if j + 1 < n { 1.0 / hy2 } else { 0.0 };
        let denom = diag - low * if r > 0 { cp[r - 1] } else { 0.0 };
        if denom.abs() < 1e-300 {
            return Err(RheoError::LinearSolver("singular zero-mode system".into()));
        }
        cp[r] = sup / denom;
        let prev = if r > 0 { dp[r - 1] } else { Complex::new(0.0, 0.0) };
        dp[r] = (rhs[j] - prev * low) / denom;
    }
    out[m] = dp[m - 1];
    for r in (0..m - 1).rev() {
        out[r + 1] = dp[r] - out[r + 2] * cp[r];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_removes_divergence() {
        let g = Grid::new(16, 12, 2.0, 2.0).unwrap();
        let pr = Projector::new(&g);
        let mut u: Vec<f64> = (0..g.n_u()).map(|k| ((k * 37 % 11) as f64).sin()).collect();
        let mut v: Vec<f64> = (0..g.n_v()).map(|k| ((k * 13 % 7) as f64).cos()).collect();
        for i in 0..g.nx {
            v[g.v_idx(i, 0)] = 0.0;
            v[g.v_idx(i, g.ny)] = 0.0;
        }
        pr.project(&mut u, &mut v).unwrap();
        let div = g.divergence(&u, &v);
        let vmax = g.max_speed(&u, &v);
        let dmax = div.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(dmax <= 1e-12 * vmax / g.h(), "{dmax}");
        for i in 0..g.nx {
            assert_eq!(v[g.v_idx(i, 0)], 0.0);
            assert_eq!(v[g.v_idx(i, g.ny)], 0.0);
        }
    }

    #[test]
    fn gradient_field_projects_to_zero() {
        let g = Grid::new(8, 8, 1.0, 2.0).unwrap();
        let pr = Projector::new(&g);
        let phi: Vec<f64> = (0..g.n_cells()).map(|c| ((c as f64) * 0.37).sin()).collect();
        let (mut u, mut v) = g.gradient(&phi);
        pr.project(&mut u, &mut v).unwrap();
        assert!(g.max_speed(&u, &v) < 1e-11);
    }

    #[test]
    fn translation_is_unchanged() {
        let g = Grid::new(8, 8, 1.0, 2.0).unwrap();
        let pr = Projector::new(&g);
        let mut u = vec![1.5; g.n_u()];
        let mut v = vec![0.0; g.n_v()];
        pr.project(&mut u, &mut v).unwrap();
        assert!(u.iter().all(|x| (*x - 1.5).abs() < 1e-14));
        assert!(v.iter().all(|x| x.abs() < 1e-14));
    }
}
