//! Time stepping of the regularized, cut-off channel problem.
//!
//! One step from `v^n`:
//! 1. explicit convective flux `-div(phi_delta(|v|^2) v (x) v)` from `v^n`;
//! 2. implicit viscous solve `(v* - v^n)/dt = div S + b + conv` with
//!    `S = 2 mu D(v*)`, where `mu` is the secant coefficient of the
//!    eps-resolvent evaluated at the previous Picard iterate (`picard`
//!    sweeps, the first from `v^n`); the wall shear is the Robin flux
//!    `kappa (u_1 - U)` built from the wall resolvent weighted by
//!    `phi_delta(|v|^2)` at the wall;
//! 3. projection `v^{n+1} = v* - grad p` onto discretely divergence-free
//!    fields.
//!
//! The energy terms of each step are evaluated on `v*` with the same
//! coefficients as the solve, so the discrete budget telescopes.

use rayon::prelude::*;

use super::config::{Linearization, SimConfig, V0Kind};
use super::cutoff::cutoff;
use super::grid::Grid;
use super::projection::Projector;
use super::secant::{brent, BulkLaw, WallLaw};
use crate::error::{Result, RheoError};

/// Wall index: `0` bottom (`y = -H`), `1` top (`y = +H`).
pub const WALLS: [usize; 2] = [0, 1];

/// Frozen coefficients of one linear solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficients {
    /// Secant viscosity at cell centres.
    pub mu_c: Vec<f64>,
    sig_c: Vec<f64>,
    /// Secant viscosity at nodes (rows `0..=ny`, wall rows included).
    pub mu_n: Vec<f64>,
    sig_n: Vec<f64>,
    /// Wall secant slip coefficient per wall face.
    pub gamma: [Vec<f64>; 2],
    sig_w: [Vec<f64>; 2],
    /// Cutoff weight at the wall.
    pub phi: [Vec<f64>; 2],
    /// Effective Robin coefficient of the first cell row.
    pub kappa: [Vec<f64>; 2],
    /// Viscosity of the implicit operator at cell centres (the secant value,
    /// or the tangent value under tangent linearization).
    pub op_c: Vec<f64>,
    /// Viscosity of the implicit operator at nodes.
    pub op_n: Vec<f64>,
    /// Lagged stress `2 (mu - op) D_k` at cell centres as `[xx, yy, xy]`.
    pub lag_c: [Vec<f64>; 3],
    /// Lagged stress at nodes as `[xx, yy, xy]`.
    pub lag_n: [Vec<f64>; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub step: usize,
    /// x-face velocities.
    pub u: Vec<f64>,
    /// y-face velocities; wall rows are exactly zero.
    pub v: Vec<f64>,
    /// Cell pressure (potential of the last projection).
    pub p: Vec<f64>,
    /// Normal stresses at cell centres.
    pub s_xx: Vec<f64>,
    pub s_yy: Vec<f64>,
    /// Shear stress at nodes (wall rows hold the wall shear).
    pub s_xy: Vec<f64>,
    /// Fluid tangential velocity at the wall per wall face.
    pub wall_u: [Vec<f64>; 2],
    /// Applied wall traction `s` (paired with the slip `wall_u - U`).
    pub wall_s: [Vec<f64>; 2],
    pub coeffs: Coefficients,
}

/// Per-step quantities. Rates are evaluated at the end of the step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub kinetic: f64,
    pub bulk_power: f64,
    pub boundary_power: f64,
    pub work_power: f64,
    /// `min S:D / (|S||D|)` over stress points (1 when all vanish).
    pub min_bulk_cos: f64,
    /// `min s.v / (|s||v|)` over wall faces.
    pub min_wall_cos: f64,
    /// `max|div v| h / |v|_inf` after projection.
    pub div_ratio: f64,
    pub max_wall_normal: f64,
    /// `max |v^{n+1} - v^n| / dt`.
    pub rate_of_change: f64,
    pub cg_iterations: usize,
}

pub struct FlowSolver {
    pub config: SimConfig,
    grid: Grid,
    projector: Projector,
    bulk: BulkLaw,
    wall: WallLaw,
}

struct Rates {
    dxx: Vec<f64>,
    dyy: Vec<f64>,
    dxy_c: Vec<f64>,
    dxx_n: Vec<f64>,
    dyy_n: Vec<f64>,
    dxy_n: Vec<f64>,
}

fn cell_err(what: &str, i: usize, j: usize, e: RheoError) -> RheoError {
    RheoError::Cell {
        location: format!("{what} ({i}, {j})"),
        source: Box::new(e),
    }
}

impl FlowSolver {
    pub fn new(config: SimConfig) -> Result<Self> {
        let grid = config.grid.clone();
        let projector = Projector::new(&grid);
        let bulk = BulkLaw::bulk(config.bulk.clone(), config.eps)?;
        let wall = WallLaw::wall(config.wall.clone(), config.eps)?;
        Ok(FlowSolver {
            config,
            grid,
            projector,
            bulk,
            wall,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bulk_law(&self) -> &BulkLaw {
        &self.bulk
    }

    pub fn wall_law(&self) -> &WallLaw {
        &self.wall
    }

    /// Linear viscosity and slip coefficient at rest (exact for linear laws).
    pub fn rest_coefficients(&self) -> (f64, f64) {
        (self.bulk.mu_floor(), self.wall.mu_floor())
    }

    // -----------------------------------------------------------------
    // Initial data

    fn sample_v0(&self) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let h_half = g.half_width();
        let mut u = vec![0.0; g.n_u()];
        let mut v = vec![0.0; g.n_v()];
        let two_pi = 2.0 * std::f64::consts::PI;
        for &(kind, amp) in &self.config.v0 {
            match kind {
                V0Kind::Uniform => u.iter_mut().for_each(|x| *x += amp),
                V0Kind::Shear => {
                    for j in 0..g.ny {
                        let eta = g.y_center(j) / h_half;
                        for i in 0..g.nx {
                            u[g.u_idx(i, j)] += amp * (1.0 - eta * eta);
                        }
                    }
                }
                V0Kind::DecayMode => {
                    let (mu, gamma) = self.rest_coefficients();
                    let k = crate::oracle::robin_wavenumber(mu, gamma, h_half);
                    for j in 0..g.ny {
                        let val = amp * (k * g.y_center(j)).cos();
                        for i in 0..g.nx {
                            u[g.u_idx(i, j)] += val;
                        }
                    }
                }
                V0Kind::Vortex => {
                    let psi = |i: usize, j: usize| {
                        let eta = g.y_node(j) / h_half;
                        let w = (1.0 - eta * eta).powi(2);
                        amp * (two_pi * g.x_face(i) / g.lx).sin() * w
                    };
                    for j in 0..g.ny {
                        for i in 0..g.nx {
                            u[g.u_idx(i, j)] += (psi(i, j + 1) - psi(i, j)) / g.hy();
                        }
                    }
                    for j in 1..g.ny {
                        for i in 0..g.nx {
                            v[g.v_idx(i, j)] -= (psi(g.ip(i), j) - psi(i, j)) / g.hx();
                        }
                    }
                }
                V0Kind::Gradient => {
                    let phi: Vec<f64> = (0..g.n_cells())
                        .map(|c| {
                            let (i, j) = (c % g.nx, c / g.nx);
                            amp * (two_pi * g.x_center(i) / g.lx).cos()
                                * (std::f64::consts::PI * g.y_center(j) / g.ly).cos()
                        })
                        .collect();
                    let (gu, gv) = g.gradient(&phi);
                    u.iter_mut().zip(&gu).for_each(|(a, b)| *a += b);
                    v.iter_mut().zip(&gv).for_each(|(a, b)| *a += b);
                }
            }
        }
        (u, v)
    }

    /// Initial state: sampled `v0`, projected; `p = 0`; stresses and wall
    /// data resolved consistently from the projected field.
    pub fn init(&self) -> Result<FlowState> {
        let g = &self.grid;
        let (mut u, mut v) = self.sample_v0();
        self.projector.project(&mut u, &mut v)?;
        let mut wall_u = [
            (0..g.nx).map(|i| u[g.u_idx(i, 0)]).collect::<Vec<_>>(),
            (0..g.nx).map(|i| u[g.u_idx(i, g.ny - 1)]).collect::<Vec<_>>(),
        ];
        let empty = Coefficients {
            mu_c: vec![0.0; g.n_cells()],
            sig_c: vec![0.0; g.n_cells()],
            mu_n: vec![0.0; g.n_nodes()],
            sig_n: vec![0.0; g.n_nodes()],
            gamma: [vec![0.0; g.nx], vec![0.0; g.nx]],
            sig_w: [vec![0.0; g.nx], vec![0.0; g.nx]],
            phi: [vec![1.0; g.nx], vec![1.0; g.nx]],
            kappa: [vec![0.0; g.nx], vec![0.0; g.nx]],
            op_c: vec![0.0; g.n_cells()],
            op_n: vec![0.0; g.n_nodes()],
            lag_c: [vec![0.0; g.n_cells()], vec![0.0; g.n_cells()], vec![0.0; g.n_cells()]],
            lag_n: [vec![0.0; g.n_nodes()], vec![0.0; g.n_nodes()], vec![0.0; g.n_nodes()]],
        };
        let mut coeffs = empty;
        for _ in 0..4 {
            coeffs = self.coefficients(&u, &v, &wall_u, &coeffs, false)?;
            wall_u = self.wall_velocity(&u, &coeffs);
        }
        let mut state = FlowState {
            t: 0.0,
            step: 0,
            p: vec![0.0; g.n_cells()],
            s_xx: Vec::new(),
            s_yy: Vec::new(),
            s_xy: Vec::new(),
            wall_s: [Vec::new(), Vec::new()],
            u,
            v,
            wall_u,
            coeffs,
        };
        self.fill_stresses(&mut state);
        Ok(state)
    }

    // -----------------------------------------------------------------
    // Rates and coefficients

    fn rates(&self, u: &[f64], v: &[f64], wall_u: &[Vec<f64>; 2]) -> Rates {
        let g = &self.grid;
        let (hx, hy) = (g.hx(), g.hy());
        let (nx, ny) = (g.nx, g.ny);
        let mut dxx = vec![0.0; g.n_cells()];
        let mut dyy = vec![0.0; g.n_cells()];
        for j in 0..ny {
            for i in 0..nx {
                let c = g.cell(i, j);
                dxx[c] = (u[g.u_idx(g.ip(i), j)] - u[g.u_idx(i, j)]) / hx;
                dyy[c] = (v[g.v_idx(i, j + 1)] - v[g.v_idx(i, j)]) / hy;
            }
        }
        let mut dxy_n = vec![0.0; g.n_nodes()];
        for i in 0..nx {
            dxy_n[g.node(i, 0)] = (u[g.u_idx(i, 0)] - wall_u[0][i]) / hy;
            dxy_n[g.node(i, ny)] = (wall_u[1][i] - u[g.u_idx(i, ny - 1)]) / hy;
        }
        for j in 1..ny {
            for i in 0..nx {
                dxy_n[g.node(i, j)] = 0.5
                    * ((u[g.u_idx(i, j)] - u[g.u_idx(i, j - 1)]) / hy
                        + (v[g.v_idx(i, j)] - v[g.v_idx(g.im(i), j)]) / hx);
            }
        }
        let mut dxy_c = vec![0.0; g.n_cells()];
        for j in 0..ny {
            for i in 0..nx {
                dxy_c[g.cell(i, j)] = 0.25
                    * (dxy_n[g.node(i, j)]
                        + dxy_n[g.node(g.ip(i), j)]
                        + dxy_n[g.node(i, j + 1)]
                        + dxy_n[g.node(g.ip(i), j + 1)]);
            }
        }
        let mut dxx_n = vec![0.0; g.n_nodes()];
        let mut dyy_n = vec![0.0; g.n_nodes()];
        for j in 0..=ny {
            for i in 0..nx {
                let rows: &[usize] = if j == 0 {
                    &[0]
                } else if j == ny {
                    &[ny - 1]
                } else {
                    &[j - 1, j]
                };
                let mut ax = 0.0;
                let mut ay = 0.0;
                for &jr in rows {
                    for ic in [g.im(i), i] {
                        ax += dxx[g.cell(ic, jr)];
                        ay += dyy[g.cell(ic, jr)];
                    }
                }
                let w = 1.0 / (2 * rows.len()) as f64;
                dxx_n[g.node(i, j)] = ax * w;
                dyy_n[g.node(i, j)] = ay * w;
            }
        }
        Rates {
            dxx,
            dyy,
            dxy_c,
            dxx_n,
            dyy_n,
            dxy_n,
        }
    }

    /// Fluid velocity at one wall face from the nonlinear flux balance of
    /// the half cell, `2 mu(|D|) (u1 - uw) / hy = phi(uw^2) s(uw - U)`,
    /// with the normal rates `dxx`, `dyy` of the wall node held fixed. The
    /// residual decreases in `uw`, so the root is bracketed by `U` and `u1`.
    fn wall_balance(&self, u1: f64, speed: f64, dxx: f64, dyy: f64) -> Result<f64> {
        if u1 == speed {
            return Ok(speed);
        }
        let hy = self.grid.hy();
        let delta = self.config.delta;
        let residual = |uw: f64| -> Result<f64> {
            let dxy = (u1 - uw) / hy;
            let d = (dxx * dxx + dyy * dyy + 2.0 * dxy * dxy).sqrt();
            let (mu, _) = self.bulk.secant(d, None)?;
            let slip = uw - speed;
            let (gm, _) = self.wall.secant(slip.abs(), None)?;
            Ok(2.0 * mu * dxy - cutoff(uw * uw, delta) * gm * slip)
        };
        let (a, b) = (u1.max(speed), u1.min(speed));
        let (fa, fb) = (residual(a)?, residual(b)?);
        brent(residual, a, b, fa, fb)
    }

    /// Wall velocities balancing the half-cell fluxes for velocity `(u, v)`.
    fn balanced_wall_velocity(&self, u: &[f64], r: &Rates) -> Result<[Vec<f64>; 2]> {
        let g = &self.grid;
        let mut out = [vec![0.0; g.nx], vec![0.0; g.nx]];
        for w in WALLS {
            let (row_u, row_n) = if w == 0 { (0, 0) } else { (g.ny - 1, g.ny) };
            out[w] = (0..g.nx)
                .into_par_iter()
                .map(|i| {
                    let n = g.node(i, row_n);
                    self.wall_balance(u[g.u_idx(i, row_u)], self.config.wall_speed[w], r.dxx_n[n], r.dyy_n[n])
                        .map_err(|e| cell_err("wall face", i, row_n, e))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(out)
    }

    fn coefficients(
        &self,
        u: &[f64],
        v: &[f64],
        wall_u: &[Vec<f64>; 2],
        prev: &Coefficients,
        tangent: bool,
    ) -> Result<Coefficients> {
        let g = &self.grid;
        // The normal rates at the wall nodes do not depend on the wall
        // velocity, so the balance can use a first rate evaluation.
        let r0 = self.rates(u, v, wall_u);
        let wall_u = &self.balanced_wall_velocity(u, &r0)?;
        let r = self.rates(u, v, wall_u);
        let nx = g.nx;
        // (secant, stress magnitude, operator viscosity) at one stress point.
        let resolve = |d: f64, guess: f64, use_tangent: bool| -> Result<(f64, f64, f64)> {
            let (mu, sig) = self.bulk.secant(d, (guess > 0.0).then_some(guess))?;
            let op = if use_tangent { self.bulk.tangent(d, sig)? } else { mu };
            Ok((mu, sig, op))
        };
        let cells: Vec<(f64, f64, f64)> = (0..g.n_cells())
            .into_par_iter()
            .map(|c| {
                let d = (r.dxx[c].powi(2) + r.dyy[c].powi(2) + 2.0 * r.dxy_c[c].powi(2)).sqrt();
                resolve(d, prev.sig_c[c], tangent).map_err(|e| cell_err("cell", c % nx, c / nx, e))
            })
            .collect::<Result<Vec<_>>>()?;
        let nodes: Vec<(f64, f64, f64)> = (0..g.n_nodes())
            .into_par_iter()
            .map(|n| {
                let d = (r.dxx_n[n].powi(2) + r.dyy_n[n].powi(2) + 2.0 * r.dxy_n[n].powi(2)).sqrt();
                let interior = n >= nx && n < g.ny * nx;
                resolve(d, prev.sig_n[n], tangent && interior).map_err(|e| cell_err("node", n % nx, n / nx, e))
            })
            .collect::<Result<Vec<_>>>()?;
        let mu_c: Vec<f64> = cells.iter().map(|x| x.0).collect();
        let sig_c: Vec<f64> = cells.iter().map(|x| x.1).collect();
        let op_c: Vec<f64> = cells.iter().map(|x| x.2).collect();
        let mu_n: Vec<f64> = nodes.iter().map(|x| x.0).collect();
        let sig_n: Vec<f64> = nodes.iter().map(|x| x.1).collect();
        let op_n: Vec<f64> = nodes.iter().map(|x| x.2).collect();
        let lag = |mu: &[f64], op: &[f64], dd: &[f64]| -> Vec<f64> {
            mu.iter().zip(op).zip(dd).map(|((m, o), d)| 2.0 * (m - o) * d).collect()
        };
        let lag_c = [
            lag(&mu_c, &op_c, &r.dxx),
            lag(&mu_c, &op_c, &r.dyy),
            lag(&mu_c, &op_c, &r.dxy_c),
        ];
        let lag_n = [
            lag(&mu_n, &op_n, &r.dxx_n),
            lag(&mu_n, &op_n, &r.dyy_n),
            lag(&mu_n, &op_n, &r.dxy_n),
        ];

        let hy = g.hy();
        let mut gamma = [vec![0.0; nx], vec![0.0; nx]];
        let mut sig_w = [vec![0.0; nx], vec![0.0; nx]];
        let mut phi = [vec![0.0; nx], vec![0.0; nx]];
        let mut kappa = [vec![0.0; nx], vec![0.0; nx]];
        for w in WALLS {
            let row = if w == 0 { 0 } else { g.ny };
            for i in 0..nx {
                let uw = wall_u[w][i];
                let slip = (uw - self.config.wall_speed[w]).abs();
                let guess = (prev.sig_w[w][i] > 0.0).then_some(prev.sig_w[w][i]);
                let (gm, sg) = self
                    .wall
                    .secant(slip, guess)
                    .map_err(|e| cell_err("wall face", i, row, e))?;
                let ph = cutoff(uw * uw, self.config.delta);
                let mu_w = mu_n[g.node(i, row)];
                let gp = gm * ph;
                let k = if gp > 0.0 && mu_w > 0.0 {
                    gp / (1.0 + gp * hy / (2.0 * mu_w))
                } else {
                    0.0
                };
                gamma[w][i] = gm;
                sig_w[w][i] = sg;
                phi[w][i] = ph;
                kappa[w][i] = k;
            }
        }
        Ok(Coefficients {
            mu_c,
            sig_c,
            mu_n,
            sig_n,
            gamma,
            sig_w,
            phi,
            kappa,
            op_c,
            op_n,
            lag_c,
            lag_n,
        })
    }

    /// Fluid velocity at the wall from flux continuity of the half cell.
    fn wall_velocity(&self, u: &[f64], c: &Coefficients) -> [Vec<f64>; 2] {
        let g = &self.grid;
        let hy = g.hy();
        let mut out = [vec![0.0; g.nx], vec![0.0; g.nx]];
        for w in WALLS {
            let (row_u, row_n) = if w == 0 { (0, 0) } else { (g.ny - 1, g.ny) };
            for i in 0..g.nx {
                let a = 2.0 * c.mu_n[g.node(i, row_n)] / hy;
                let gp = c.gamma[w][i] * c.phi[w][i];
                let u1 = u[g.u_idx(i, row_u)];
                out[w][i] = if a + gp > 0.0 {
                    (a * u1 + gp * self.config.wall_speed[w]) / (a + gp)
                } else {
                    u1
                };
            }
        }
        out
    }

    // -----------------------------------------------------------------
    // Linear operator

    /// Shear stress at nodes for velocity `(u, v)` with frozen
    /// coefficients; the wall rows carry only the part linear in `u`.
    fn apply(&self, c: &Coefficients, u: &[f64], v: &[f64], out_u: &mut [f64], out_v: &mut [f64]) {
        let g = &self.grid;
        let (hx, hy) = (g.hx(), g.hy());
        let (nx, ny) = (g.nx, g.ny);
        let inv_dt = 1.0 / self.config.dt;
        let mut sxx = vec![0.0; g.n_cells()];
        let mut syy = vec![0.0; g.n_cells()];
        for j in 0..ny {
            for i in 0..nx {
                let cc = g.cell(i, j);
                let m2 = 2.0 * c.op_c[cc];
                sxx[cc] = m2 * (u[g.u_idx(g.ip(i), j)] - u[g.u_idx(i, j)]) / hx;
                syy[cc] = m2 * (v[g.v_idx(i, j + 1)] - v[g.v_idx(i, j)]) / hy;
            }
        }
        let mut sxy = vec![0.0; g.n_nodes()];
        for i in 0..nx {
            sxy[g.node(i, 0)] = c.kappa[0][i] * u[g.u_idx(i, 0)];
            sxy[g.node(i, ny)] = -c.kappa[1][i] * u[g.u_idx(i, ny - 1)];
        }
        for j in 1..ny {
            for i in 0..nx {
                let n = g.node(i, j);
                sxy[n] = c.op_n[n]
                    * ((u[g.u_idx(i, j)] - u[g.u_idx(i, j - 1)]) / hy
                        + (v[g.v_idx(i, j)] - v[g.v_idx(g.im(i), j)]) / hx);
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                let k = g.u_idx(i, j);
                let div_s = (sxx[g.cell(i, j)] - sxx[g.cell(g.im(i), j)]) / hx
                    + (sxy[g.node(i, j + 1)] - sxy[g.node(i, j)]) / hy;
                out_u[k] = u[k] * inv_dt - div_s;
            }
        }
        for i in 0..nx {
            out_v[g.v_idx(i, 0)] = 0.0;
            out_v[g.v_idx(i, ny)] = 0.0;
        }
        for j in 1..ny {
            for i in 0..nx {
                let k = g.v_idx(i, j);
                let div_s = (sxy[g.node(g.ip(i), j)] - sxy[g.node(i, j)]) / hx
                    + (syy[g.cell(i, j)] - syy[g.cell(i, j - 1)]) / hy;
                out_v[k] = v[k] * inv_dt - div_s;
            }
        }
    }

    fn diagonal(&self, c: &Coefficients) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let (hx2, hy2) = (g.hx() * g.hx(), g.hy() * g.hy());
        let (nx, ny) = (g.nx, g.ny);
        let inv_dt = 1.0 / self.config.dt;
        let mut du = vec![0.0; g.n_u()];
        let mut dv = vec![1.0; g.n_v()];
        for j in 0..ny {
            for i in 0..nx {
                let below = if j == 0 {
                    c.kappa[0][i] * g.hy()
                } else {
                    c.op_n[g.node(i, j)]
                };
                let above = if j + 1 == ny {
                    c.kappa[1][i] * g.hy()
                } else {
                    c.op_n[g.node(i, j + 1)]
                };
                du[g.u_idx(i, j)] =
                    inv_dt + 2.0 * (c.op_c[g.cell(i, j)] + c.op_c[g.cell(g.im(i), j)]) / hx2 + (below + above) / hy2;
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                dv[g.v_idx(i, j)] = inv_dt
                    + (c.op_n[g.node(i, j)] + c.op_n[g.node(g.ip(i), j)]) / hx2
                    + 2.0 * (c.op_c[g.cell(i, j)] + c.op_c[g.cell(i, j - 1)]) / hy2;
            }
        }
        (du, dv)
    }

    /// Preconditioned conjugate gradients on the stacked `(u, v)` vector.
    fn solve(&self, c: &Coefficients, rhs_u: &[f64], rhs_v: &[f64], u: &mut [f64], v: &mut [f64]) -> Result<usize> {
        let nu = u.len();
        let (diag_u, diag_v) = self.diagonal(c);
        let inv_diag: Vec<f64> = diag_u.iter().chain(diag_v.iter()).map(|d| 1.0 / d).collect();
        let b: Vec<f64> = rhs_u.iter().chain(rhs_v.iter()).copied().collect();
        let bnorm = dot(&b, &b).sqrt();
        if bnorm == 0.0 {
            u.iter_mut().for_each(|x| *x = 0.0);
            v.iter_mut().for_each(|x| *x = 0.0);
            return Ok(0);
        }
        let mut x: Vec<f64> = u.iter().chain(v.iter()).copied().collect();
        let mut ax = vec![0.0; x.len()];
        let apply = |x: &[f64], out: &mut [f64]| {
            let (xu, xv) = x.split_at(nu);
            let (ou, ov) = out.split_at_mut(nu);
            self.apply(c, xu, xv, ou, ov);
        };
        apply(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let tol = self.config.cg_tol * bnorm;
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut iters = 0;
        while dot(&r, &r).sqrt() > tol {
            if iters >= self.config.cg_max_iter {
                return Err(RheoError::LinearSolver(format!(
                    "implicit solve did not reach tolerance in {iters} iterations (residual {:e})",
                    dot(&r, &r).sqrt() / bnorm
                )));
            }
            apply(&p, &mut ax);
            let pap = dot(&p, &ax);
            if !(pap > 0.0) {
                return Err(RheoError::LinearSolver("implicit operator lost positivity".into()));
            }
            let alpha = rz / pap;
            for k in 0..x.len() {
                x[k] += alpha * p[k];
                r[k] -= alpha * ax[k];
            }
            for k in 0..x.len() {
                z[k] = r[k] * inv_diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..x.len() {
                p[k] = z[k] + beta * p[k];
            }
            iters += 1;
        }
        u.copy_from_slice(&x[..nu]);
        v.copy_from_slice(&x[nu..]);
        Ok(iters)
    }

    // -----------------------------------------------------------------
    // Convection

    /// `-div(phi_delta(|v|^2) v (x) v)` at faces.
    pub fn convection(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let (hx, hy) = (g.hx(), g.hy());
        let (nx, ny) = (g.nx, g.ny);
        let delta = self.config.delta;
        let (uc, vc) = g.velocity_at_centers(u, v);
        let mut fuu = vec![0.0; g.n_cells()];
        let mut fvv = vec![0.0; g.n_cells()];
        for k in 0..g.n_cells() {
            let w = cutoff(uc[k] * uc[k] + vc[k] * vc[k], delta);
            fuu[k] = w * uc[k] * uc[k];
            fvv[k] = w * vc[k] * vc[k];
        }
        let mut fuv = vec![0.0; g.n_nodes()];
        for j in 1..ny {
            for i in 0..nx {
                let un = 0.5 * (u[g.u_idx(i, j - 1)] + u[g.u_idx(i, j)]);
                let vn = 0.5 * (v[g.v_idx(g.im(i), j)] + v[g.v_idx(i, j)]);
                fuv[g.node(i, j)] = cutoff(un * un + vn * vn, delta) * un * vn;
            }
        }
        let mut cu = vec![0.0; g.n_u()];
        let mut cv = vec![0.0; g.n_v()];
        for j in 0..ny {
            for i in 0..nx {
                cu[g.u_idx(i, j)] = -((fuu[g.cell(i, j)] - fuu[g.cell(g.im(i), j)]) / hx
                    + (fuv[g.node(i, j + 1)] - fuv[g.node(i, j)]) / hy);
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                cv[g.v_idx(i, j)] = -((fuv[g.node(g.ip(i), j)] - fuv[g.node(i, j)]) / hx
                    + (fvv[g.cell(i, j)] - fvv[g.cell(i, j - 1)]) / hy);
            }
        }
        (cu, cv)
    }

    // -----------------------------------------------------------------
    // Stresses and energy

    /// Stresses `S = 2 op D + lag` with the state's coefficients and wall
    /// data (`S = 2 mu D` under secant linearization).
    fn fill_stresses(&self, st: &mut FlowState) {
        let g = &self.grid;
        let r = self.rates(&st.u, &st.v, &st.wall_u);
        let c = &st.coeffs;
        st.s_xx = (0..g.n_cells())
            .map(|k| 2.0 * c.op_c[k] * r.dxx[k] + c.lag_c[0][k])
            .collect();
        st.s_yy = (0..g.n_cells())
            .map(|k| 2.0 * c.op_c[k] * r.dyy[k] + c.lag_c[1][k])
            .collect();
        st.s_xy = (0..g.n_nodes())
            .map(|k| 2.0 * c.op_n[k] * r.dxy_n[k] + c.lag_n[2][k])
            .collect();
        for w in WALLS {
            st.wall_s[w] = (0..g.nx)
                .map(|i| c.gamma[w][i] * c.phi[w][i] * (st.wall_u[w][i] - self.config.wall_speed[w]))
                .collect();
        }
    }

    /// Bulk, boundary and work power for velocity `(u, v)` with the wall
    /// data and coefficients of `st`, plus pointwise sign measures.
    fn powers(&self, u: &[f64], v: &[f64], wall_u: &[Vec<f64>; 2], c: &Coefficients) -> (f64, f64, f64, f64, f64) {
        let g = &self.grid;
        let vol = g.cell_volume();
        let r = self.rates(u, v, wall_u);
        let mut bulk = 0.0;
        let mut min_cos: f64 = 1.0;
        // Scheme stress S = 2 op D + lag at a point; returns S.
        let stress = |op: f64, lag: [f64; 3], d: [f64; 3]| {
            [
                2.0 * op * d[0] + lag[0],
                2.0 * op * d[1] + lag[1],
                2.0 * op * d[2] + lag[2],
            ]
        };
        let mut point_cos = |s: [f64; 3], d: [f64; 3]| {
            let sd = s[0] * d[0] + s[1] * d[1] + 2.0 * s[2] * d[2];
            let ns = (s[0] * s[0] + s[1] * s[1] + 2.0 * s[2] * s[2]).sqrt();
            let nd = (d[0] * d[0] + d[1] * d[1] + 2.0 * d[2] * d[2]).sqrt();
            if ns > 0.0 && nd > 0.0 {
                min_cos = min_cos.min(sd / (ns * nd));
            }
        };
        for k in 0..g.n_cells() {
            let d = [r.dxx[k], r.dyy[k], r.dxy_c[k]];
            let s = stress(c.op_c[k], [c.lag_c[0][k], c.lag_c[1][k], c.lag_c[2][k]], d);
            bulk += (s[0] * d[0] + s[1] * d[1]) * vol;
            point_cos(s, d);
        }
        for j in 0..=g.ny {
            let w = if j == 0 || j == g.ny { 0.5 } else { 1.0 };
            for i in 0..g.nx {
                let n = g.node(i, j);
                let d = [r.dxx_n[n], r.dyy_n[n], r.dxy_n[n]];
                let s = stress(c.op_n[n], [c.lag_n[0][n], c.lag_n[1][n], c.lag_n[2][n]], d);
                bulk += 2.0 * s[2] * d[2] * vol * w;
                point_cos(s, d);
            }
        }
        let mut boundary = 0.0;
        let mut work = 0.0;
        let mut min_wall: f64 = 1.0;
        for w in WALLS {
            let speed = self.config.wall_speed[w];
            let row_u = if w == 0 { 0 } else { g.ny - 1 };
            for i in 0..g.nx {
                let gp = c.gamma[w][i] * c.phi[w][i];
                let slip = wall_u[w][i] - speed;
                let s = gp * slip;
                boundary += s * slip * g.hx();
                if s != 0.0 && slip != 0.0 {
                    min_wall = min_wall.min(s * slip / (s.abs() * slip.abs()));
                }
                // Power of the moving wall on the fluid.
                work -= c.kappa[w][i] * (u[g.u_idx(i, row_u)] - speed) * speed * g.hx();
            }
        }
        let [bx, by] = self.config.force;
        let su: f64 = u.iter().sum();
        let sv: f64 = v.iter().sum();
        work += (bx * su + by * sv) * vol;
        (bulk, boundary, work, min_cos, min_wall)
    }

    pub fn kinetic(&self, u: &[f64], v: &[f64]) -> f64 {
        0.5 * (dot(u, u) + dot(v, v)) * self.grid.cell_volume()
    }

    // -----------------------------------------------------------------
    // Step

    pub fn step(&self, st: &FlowState) -> Result<(FlowState, StepRecord)> {
        let g = &self.grid;
        let dt = self.config.dt;
        let inv_dt = 1.0 / dt;
        let (cu, cv) = self.convection(&st.u, &st.v);
        let [bx, by] = self.config.force;
        let mut rhs_u: Vec<f64> = st.u.iter().zip(&cu).map(|(u, c)| u * inv_dt + bx + c).collect();
        let mut rhs_v: Vec<f64> = st.v.iter().zip(&cv).map(|(v, c)| v * inv_dt + by + c).collect();
        for i in 0..g.nx {
            rhs_v[g.v_idx(i, 0)] = 0.0;
            rhs_v[g.v_idx(i, g.ny)] = 0.0;
        }
        let base_u = rhs_u.clone();
        let mut u = st.u.clone();
        let mut v = st.v.clone();
        let mut wall_u = st.wall_u.clone();
        let mut coeffs = st.coeffs.clone();
        let base_v = rhs_v.clone();
        let mut cg_iterations = 0;
        let (hx, hy) = (g.hx(), g.hy());
        // Tangent linearization runs Newton-type sweeps and always closes the
        // step with a secant sweep, whose stress is collinear with the rate
        // and hence dissipative even when the Newton sweeps stopped short.
        let tangent = self.config.linearization == Linearization::Tangent;
        let sweeps = if tangent {
            self.config.picard + 1
        } else {
            self.config.picard
        };
        let mut newton_done = false;
        for sweep in 0..sweeps {
            let last = sweep + 1 == sweeps;
            let use_tangent = tangent && !last && !newton_done;
            coeffs = self.coefficients(&u, &v, &wall_u, &coeffs, use_tangent)?;
            rhs_u.copy_from_slice(&base_u);
            rhs_v.copy_from_slice(&base_v);
            for i in 0..g.nx {
                rhs_u[g.u_idx(i, 0)] += coeffs.kappa[0][i] * self.config.wall_speed[0] / hy;
                rhs_u[g.u_idx(i, g.ny - 1)] += coeffs.kappa[1][i] * self.config.wall_speed[1] / hy;
            }
            if use_tangent {
                let [lxx, lyy, _] = &coeffs.lag_c;
                let lxy = &coeffs.lag_n[2];
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        rhs_u[g.u_idx(i, j)] += (lxx[g.cell(i, j)] - lxx[g.cell(g.im(i), j)]) / hx
                            + (lxy[g.node(i, j + 1)] - lxy[g.node(i, j)]) / hy;
                    }
                }
                for j in 1..g.ny {
                    for i in 0..g.nx {
                        rhs_v[g.v_idx(i, j)] += (lxy[g.node(g.ip(i), j)] - lxy[g.node(i, j)]) / hx
                            + (lyy[g.cell(i, j)] - lyy[g.cell(i, j - 1)]) / hy;
                    }
                }
            }
            let (prev_u, prev_v) = (u.clone(), v.clone());
            cg_iterations += self.solve(&coeffs, &rhs_u, &rhs_v, &mut u, &mut v)?;
            wall_u = self.wall_velocity(&u, &coeffs);
            if self.config.picard_tol > 0.0 {
                let change = u
                    .iter()
                    .zip(&prev_u)
                    .chain(v.iter().zip(&prev_v))
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if change <= self.config.picard_tol * g.max_speed(&u, &v) {
                    if !tangent || newton_done || last {
                        break;
                    }
                    newton_done = true;
                }
            }
        }
        let (bulk_power, boundary_power, work_power, min_bulk_cos, min_wall_cos) =
            self.powers(&u, &v, &wall_u, &coeffs);

        let mut star = FlowState {
            t: st.t + dt,
            step: st.step + 1,
            u: u.clone(),
            v: v.clone(),
            p: Vec::new(),
            s_xx: Vec::new(),
            s_yy: Vec::new(),
            s_xy: Vec::new(),
            wall_u,
            wall_s: [Vec::new(), Vec::new()],
            coeffs,
        };
        self.fill_stresses(&mut star);

        let phi = self.projector.project(&mut u, &mut v)?;
        star.p = phi.iter().map(|x| x * inv_dt).collect();
        star.u = u;
        star.v = v;

        let div = g.divergence(&star.u, &star.v);
        let vmax = g.max_speed(&star.u, &star.v);
        let dmax = div.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let div_ratio = if vmax > 0.0 { dmax * g.h() / vmax } else { dmax };
        let max_wall_normal = (0..g.nx)
            .map(|i| star.v[g.v_idx(i, 0)].abs().max(star.v[g.v_idx(i, g.ny)].abs()))
            .fold(0.0, f64::max);
        let rate_of_change = star
            .u
            .iter()
            .zip(&st.u)
            .chain(star.v.iter().zip(&st.v))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            * inv_dt;
        let rec = StepRecord {
            t: star.t,
            kinetic: self.kinetic(&star.u, &star.v),
            bulk_power,
            boundary_power,
            work_power,
            min_bulk_cos,
            min_wall_cos,
            div_ratio,
            max_wall_normal,
            rate_of_change,
            cg_iterations,
        };
        Ok((star, rec))
    }

    /// Largest relative gap between the lagged secant coefficients of a
    /// state and fresh ones evaluated at its velocity (zero at a fixed
    /// point of the Picard iteration).
    pub fn picard_gap(&self, st: &FlowState) -> Result<f64> {
        let fresh = self.coefficients(&st.u, &st.v, &st.wall_u, &st.coeffs, false)?;
        let rel = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
                .fold(0.0, f64::max)
        };
        Ok(rel(&fresh.mu_c, &st.coeffs.mu_c).max(rel(&fresh.mu_n, &st.coeffs.mu_n)))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
