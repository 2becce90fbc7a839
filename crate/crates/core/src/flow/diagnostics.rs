//! Consistency diagnostics: the time-integrated weak-form residual of the
//! momentum balance over a fixed bank of test fields, and the pressure
//! integrability ratio.
//!
//! Test bank (all divergence-free with `w.n = 0` on the walls; `eta = y/H`,
//! `k = 2 pi / lx`):
//! 0. `w = (1, 0)`;
//! 1. `w = (1 - eta^2, 0)`;
//! 2. `w = (cos(pi y / (2H)), 0)`;
//! 3. `w = curl psi`, `psi = sin(k x) (1 - eta^2)^2`;
//! 4. `w = curl psi`, `psi = cos(k x) (1 - eta^2)^2`.
//!
//! With `w = (d_y psi, -d_x psi)` the residual of one step is
//! `(v^{n+1} - v^n, w) + dt [ -(v (x) v, grad w) + (S, grad w)
//!  + int_walls s.w - (b, w) ]`, evaluated with the discrete fields and the
//! exact derivatives of `w`.

use std::f64::consts::PI;

use super::grid::Grid;
use super::solver::FlowState;

/// Value and gradient `(wx, wy, dx wx, dy wx, dx wy, dy wy)` of test field
/// `m` at `(x, y)`.
pub fn test_field(m: usize, grid: &Grid, x: f64, y: f64) -> [f64; 6] {
    let h = grid.half_width();
    let eta = y / h;
    match m {
        0 => [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        1 => [1.0 - eta * eta, 0.0, 0.0, -2.0 * y / (h * h), 0.0, 0.0],
        2 => {
            let a = PI / (2.0 * h);
            [(a * y).cos(), 0.0, 0.0, -a * (a * y).sin(), 0.0, 0.0]
        }
        3 | 4 => {
            let k = 2.0 * PI / grid.lx;
            let (s, s1, s2) = if m == 3 {
                ((k * x).sin(), k * (k * x).cos(), -k * k * (k * x).sin())
            } else {
                ((k * x).cos(), -k * (k * x).sin(), -k * k * (k * x).cos())
            };
            let w = (1.0 - eta * eta).powi(2);
            let w1 = -4.0 * eta * (1.0 - eta * eta) / h;
            let w2 = (-4.0 + 12.0 * eta * eta) / (h * h);
            [s * w1, -s1 * w, s1 * w1, s * w2, -s2 * w, -s1 * w1]
        }
        _ => panic!("test field index out of range"),
    }
}

pub const BANK_SIZE: usize = 5;

/// Accumulates the weak residual of every bank member over a run.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakResidual {
    residual: [f64; BANK_SIZE],
    /// Accumulated magnitudes of the individual terms, for normalization.
    scale: [f64; BANK_SIZE],
}

impl Default for WeakResidual {
    fn default() -> Self {
        WeakResidual {
            residual: [0.0; BANK_SIZE],
            scale: [0.0; BANK_SIZE],
        }
    }
}

impl WeakResidual {
    /// Add the step `prev -> next` of length `dt` under body force `b`.
    pub fn accumulate(&mut self, grid: &Grid, prev: &FlowState, next: &FlowState, dt: f64, force: [f64; 2]) {
        let g = grid;
        let vol = g.cell_volume();
        let (uc, vc) = g.velocity_at_centers(&next.u, &next.v);
        for m in 0..BANK_SIZE {
            let mut time_term = 0.0;
            let mut force_term = 0.0;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let w = test_field(m, g, g.x_face(i), g.y_center(j));
                    let k = g.u_idx(i, j);
                    time_term += (next.u[k] - prev.u[k]) * w[0] * vol;
                    force_term += force[0] * w[0] * vol;
                }
            }
            for j in 1..g.ny {
                for i in 0..g.nx {
                    let w = test_field(m, g, g.x_center(i), g.y_node(j));
                    let k = g.v_idx(i, j);
                    time_term += (next.v[k] - prev.v[k]) * w[1] * vol;
                    force_term += force[1] * w[1] * vol;
                }
            }
            let mut stress_term = 0.0;
            let mut conv_term = 0.0;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let w = test_field(m, g, g.x_center(i), g.y_center(j));
                    let c = g.cell(i, j);
                    stress_term += (next.s_xx[c] * w[2] + next.s_yy[c] * w[5]) * vol;
                    conv_term += (uc[c] * uc[c] * w[2] + vc[c] * vc[c] * w[5]) * vol;
                }
            }
            for j in 0..=g.ny {
                let weight = if j == 0 || j == g.ny { 0.5 } else { 1.0 };
                for i in 0..g.nx {
                    let w = test_field(m, g, g.x_face(i), g.y_node(j));
                    let n = g.node(i, j);
                    stress_term += next.s_xy[n] * (w[3] + w[4]) * vol * weight;
                    if j > 0 && j < g.ny {
                        let un = 0.5 * (next.u[g.u_idx(i, j - 1)] + next.u[g.u_idx(i, j)]);
                        let vn = 0.5 * (next.v[g.v_idx(g.im(i), j)] + next.v[g.v_idx(i, j)]);
                        conv_term += un * vn * (w[3] + w[4]) * vol;
                    }
                }
            }
            let mut wall_term = 0.0;
            for (wi, y) in [(0usize, g.y0()), (1usize, -g.y0())] {
                for i in 0..g.nx {
                    let w = test_field(m, g, g.x_face(i), y);
                    wall_term += next.wall_s[wi][i] * w[0] * g.hx();
                }
            }
            let r = time_term + dt * (-conv_term + stress_term + wall_term - force_term);
            self.residual[m] += r;
            self.scale[m] +=
                time_term.abs() + dt * (conv_term.abs() + stress_term.abs() + wall_term.abs() + force_term.abs());
        }
    }

    /// Residual per bank member.
    pub fn per_field(&self) -> [f64; BANK_SIZE] {
        self.residual
    }

    /// `max_m |r_m|`.
    pub fn max_abs(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// `max_m |r_m| / max(scale_m)`, zero when nothing happened.
    pub fn relative(&self) -> f64 {
        let s = self.scale.iter().copied().fold(0.0, f64::max);
        if s == 0.0 {
            0.0
        } else {
            self.max_abs() / s
        }
    }
}

/// Discrete `L^p` norm of a cell field.
fn lp_norm(values: impl Iterator<Item = f64>, measure: f64, p: f64) -> f64 {
    let s: f64 = values.map(|x| x.abs().powf(p)).sum::<f64>() * measure;
    s.powf(1.0 / p)
}

/// Pressure bound check: `|p|_{z'}` against the surrogate
/// `|v (x) v|_{z'} + |S|_{z'} + |s|_{z', walls} + |b|_{z'}`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PressureDiagnostic {
    pub pressure_norm: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn pressure_diagnostic(grid: &Grid, st: &FlowState, z: f64, force: [f64; 2]) -> PressureDiagnostic {
    let g = grid;
    let zp = z / (z - 1.0);
    let vol = g.cell_volume();
    let (uc, vc) = g.velocity_at_centers(&st.u, &st.v);
    let pn = lp_norm(st.p.iter().copied(), vol, zp);
    let conv = lp_norm((0..g.n_cells()).map(|c| uc[c] * uc[c] + vc[c] * vc[c]), vol, zp);
    let stress = lp_norm(
        (0..g.n_cells()).map(|c| {
            let (i, j) = (c % g.nx, c / g.nx);
            let sxy = 0.25
                * (st.s_xy[g.node(i, j)]
                    + st.s_xy[g.node(g.ip(i), j)]
                    + st.s_xy[g.node(i, j + 1)]
                    + st.s_xy[g.node(g.ip(i), j + 1)]);
            (st.s_xx[c].powi(2) + st.s_yy[c].powi(2) + 2.0 * sxy * sxy).sqrt()
        }),
        vol,
        zp,
    );
    let wall = lp_norm(st.wall_s[0].iter().chain(st.wall_s[1].iter()).copied(), g.hx(), zp);
    let b = (force[0] * force[0] + force[1] * force[1]).sqrt() * (g.lx * g.ly).powf(1.0 / zp);
    let bound = conv + stress + wall + b;
    let ratio = if bound > 0.0 { pn / bound } else { 0.0 };
    PressureDiagnostic {
        pressure_norm: pn,
        bound,
        ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_is_divergence_free_and_tangential() {
        let g = Grid::new(8, 8, 1.5, 2.0).unwrap();
        for m in 0..BANK_SIZE {
            for &(x, y) in &[(0.1, 0.3), (0.7, -0.9), (1.2, 0.0)] {
                let w = test_field(m, &g, x, y);
                assert!((w[2] + w[5]).abs() < 1e-12, "field {m}");
            }
            for x in [0.0, 0.4, 1.1] {
                assert!(test_field(m, &g, x, 1.0)[1].abs() < 1e-12);
                assert!(test_field(m, &g, x, -1.0)[1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bank_gradients_match_differences() {
        let g = Grid::new(8, 8, 1.5, 2.0).unwrap();
        let h = 1e-6;
        for m in 0..BANK_SIZE {
            let (x, y) = (0.37, 0.41);
            let w = test_field(m, &g, x, y);
            let wxp = test_field(m, &g, x + h, y);
            let wxm = test_field(m, &g, x - h, y);
            let wyp = test_field(m, &g, x, y + h);
            let wym = test_field(m, &g, x, y - h);
            let fd = [
                (wxp[0] - wxm[0]) / (2.0 * h),
                (wyp[0] - wym[0]) / (2.0 * h),
                (wxp[1] - wxm[1]) / (2.0 * h),
                (wyp[1] - wym[1]) / (2.0 * h),
            ];
            for (a, b) in fd.iter().zip(&w[2..]) {
                assert!((a - b).abs() < 1e-6, "field {m}: {a} vs {b}");
            }
        }
    }
}
