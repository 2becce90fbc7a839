//! Scenario files and the scenario runner.
//!
//! A scenario file is a simulation config (see [`crate::flow::config`]) plus
//! the harness keys
//!
//! ```text
//! name = poiseuille_NS_navier
//! oracle = poiseuille_power_slip   # none | poiseuille_power_slip | bingham_channel
//!                                  # | couette_stick_slip | stokes_decay
//! tol.profile_l2 = 0.01            # relative L2 profile error
//! tol.plug_cells = 1               # plug half-width error, in cells
//! tol.c_scheme = 0.5               # defect <= c_scheme (dt + h)
//! tol.pressure_ratio = 10          # pressure bound ratio
//! tol.divergence = 1e-10           # max |div v| h / |v|_inf
//! tol.dissipation = 1e-12          # pointwise sign tolerance (normalized)
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RheoError};
use crate::flow::diagnostics::{pressure_diagnostic, WeakResidual};
use crate::flow::ledger::EnergyLedger;
use crate::flow::output;
use crate::flow::{FlowSolver, FlowState, SimConfig, V0Kind};
use crate::oracle::{self, OracleInputs, OracleKind, Profile};
use crate::relation::kv::{parse_f64, parse_kv, KvEntry};

/// Acceptance tolerances of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub profile_l2: f64,
    pub plug_cells: f64,
    pub c_scheme: f64,
    pub pressure_ratio: f64,
    pub divergence: f64,
    pub dissipation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            profile_l2: 0.01,
            plug_cells: 1.0,
            c_scheme: 1.0,
            pressure_ratio: 10.0,
            divergence: 1e-10,
            dissipation: 1e-12,
        }
    }
}

pub const TOL_KEYS: [&str; 6] = [
    "profile_l2",
    "plug_cells",
    "c_scheme",
    "pressure_ratio",
    "divergence",
    "dissipation",
];

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub oracle: OracleKind,
    pub config: SimConfig,
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_kv(text)?;
        if entries.is_empty() {
            return Err(RheoError::Parse {
                line: 1,
                msg: "empty scenario file".into(),
            });
        }
        let mut name = None;
        let mut oracle_kind = OracleKind::None;
        let mut tol = Tolerances::default();
        let mut rest: Vec<KvEntry> = Vec::new();
        for e in &entries {
            if e.key == "name" {
                name = Some(e.value.clone());
            } else if e.key == "oracle" {
                oracle_kind = OracleKind::parse(&e.value).ok_or_else(|| RheoError::Parse {
                    line: e.line,
                    msg: format!(
                        "unknown oracle `{}` (expected one of: {})",
                        e.value,
                        OracleKind::ALL.map(|k| k.as_str()).join(", ")
                    ),
                })?;
            } else if let Some(k) = e.key.strip_prefix("tol.") {
                let v = parse_f64(e)?;
                if v < 0.0 {
                    return Err(RheoError::Parse {
                        line: e.line,
                        msg: format!("`{}` must be non-negative", e.key),
                    });
                }
                match k {
                    "profile_l2" => tol.profile_l2 = v,
                    "plug_cells" => tol.plug_cells = v,
                    "c_scheme" => tol.c_scheme = v,
                    "pressure_ratio" => tol.pressure_ratio = v,
                    "divergence" => tol.divergence = v,
                    "dissipation" => tol.dissipation = v,
                    _ => {
                        return Err(RheoError::Parse {
                            line: e.line,
                            msg: format!(
                                "unknown tolerance `{}` (expected one of: {})",
                                e.key,
                                TOL_KEYS.map(|k| format!("tol.{k}")).join(", ")
                            ),
                        })
                    }
                }
            } else {
                rest.push(e.clone());
            }
        }
        let config = SimConfig::from_entries(&rest)?;
        let scenario = Scenario {
            name: name.unwrap_or_else(|| "scenario".into()),
            oracle: oracle_kind,
            config,
            tolerances: tol,
        };
        scenario.check_oracle().map_err(|msg| RheoError::Parse {
            line: entries.iter().find(|e| e.key == "oracle").map(|e| e.line).unwrap_or(1),
            msg,
        })?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn check_oracle(&self) -> std::result::Result<(), String> {
        let c = &self.config;
        let moving = c.wall_speed != [0.0, 0.0];
        match self.oracle {
            OracleKind::None => Ok(()),
            OracleKind::PoiseuillePowerSlip | OracleKind::BinghamChannel => {
                if moving || c.force[1] != 0.0 {
                    Err("pressure-driven oracle needs walls at rest and force along the channel".into())
                } else {
                    Ok(())
                }
            }
            OracleKind::CouetteStickSlip => {
                if c.force != [0.0, 0.0] {
                    Err("shear-driven oracle needs zero body force".into())
                } else {
                    Ok(())
                }
            }
            OracleKind::StokesDecay => {
                let only_mode = c.v0.iter().all(|(k, _)| *k == V0Kind::DecayMode);
                if moving || c.force != [0.0, 0.0] || !only_mode {
                    Err("decay oracle needs no forcing and a pure decay-mode initial field".into())
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Oracle inputs at time `t`.
    pub fn oracle_inputs(&self, t: f64) -> OracleInputs {
        let c = &self.config;
        OracleInputs {
            bulk: c.bulk.clone(),
            wall: c.wall.clone(),
            half_width: c.grid.half_width(),
            force: c.force[0],
            wall_speed: c.wall_speed,
            amplitude: c
                .v0
                .iter()
                .filter(|(k, _)| *k == V0Kind::DecayMode)
                .map(|(_, a)| a)
                .sum(),
            t,
        }
    }

    /// Oracle profile at the cell-centre heights and time `t`.
    pub fn oracle_profile(&self, t: f64) -> Result<Option<Profile>> {
        let g = &self.config.grid;
        let ys: Vec<f64> = (0..g.ny).map(|j| g.y_center(j)).collect();
        oracle::evaluate(self.oracle, &self.oracle_inputs(t), &ys)
    }
}

/// Options of a run.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Artifacts go to `out_dir/<name>/` when set.
    pub out_dir: Option<PathBuf>,
}

/// Metrics of a run; serialized as the metrics JSON (field order fixed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub name: String,
    pub seed: u64,
    pub oracle: OracleKind,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub eps: f64,
    pub delta: f64,
    pub steps: usize,
    pub t_final: f64,
    pub steady_reached: bool,
    pub profile_l2_error: Option<f64>,
    pub profile_max_error: Option<f64>,
    pub plug_half_width: Option<f64>,
    pub plug_half_width_oracle: Option<f64>,
    pub plug_error_cells: Option<f64>,
    pub max_div_ratio: f64,
    pub max_wall_normal_velocity: f64,
    pub bulk_dissipation_violation: f64,
    pub wall_dissipation_violation: f64,
    pub kinetic_initial: f64,
    pub kinetic_final: f64,
    pub bulk_diss: f64,
    pub boundary_diss: f64,
    pub work: f64,
    pub final_defect: f64,
    pub max_defect: f64,
    pub defect_bound: f64,
    pub weak_residual: f64,
    pub weak_residual_rel: f64,
    pub pressure_ratio_max: f64,
    pub picard_gap: f64,
    pub checks: BTreeMap<String, bool>,
    pub passed: bool,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub metrics: Metrics,
    pub ledger: EnergyLedger,
    pub final_state: FlowState,
    /// Column-averaged numerical profile at the cell-centre heights.
    pub profile: Vec<f64>,
    pub oracle: Option<Profile>,
}

/// Average of `u` over each cell row.
pub fn row_profile(st: &FlowState, cfg: &SimConfig) -> Vec<f64> {
    let g = &cfg.grid;
    (0..g.ny)
        .map(|j| (0..g.nx).map(|i| st.u[g.u_idx(i, j)]).sum::<f64>() / g.nx as f64)
        .collect()
}

/// Relative discrete L2 distance `|a - b| / |b|` (absolute when `b = 0`).
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Yield-surface location: where `|S|` at the nodes of the first column
/// crosses `tau` moving out from the centreline (linear interpolation).
fn plug_from_stress(st: &FlowState, cfg: &SimConfig, tau: f64) -> Option<f64> {
    let g = &cfg.grid;
    let mag = |j: usize| -> f64 {
        // Nodal |S| with normal stresses averaged from the adjacent cells.
        let n = g.node(0, j);
        let rows: Vec<usize> = if j == 0 {
            vec![0]
        } else if j == g.ny {
            vec![g.ny - 1]
        } else {
            vec![j - 1, j]
        };
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for &r in &rows {
            for i in [g.nx - 1, 0] {
                sxx += st.s_xx[g.cell(i, r)];
                syy += st.s_yy[g.cell(i, r)];
            }
        }
        let w = 1.0 / (2 * rows.len()) as f64;
        let (sxx, syy) = (sxx * w, syy * w);
        (sxx * sxx + syy * syy + 2.0 * st.s_xy[n] * st.s_xy[n]).sqrt()
    };
    // Walk the upper half from the centreline.
    let mid = g.ny / 2;
    if mag(mid) > tau {
        return None;
    }
    for j in mid..g.ny {
        let (a, b) = (mag(j), mag(j + 1));
        if a <= tau && b > tau {
            let t = (tau - a) / (b - a);
            return Some(g.y_node(j) + t * g.hy());
        }
    }
    Some(g.half_width())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Run a scenario to `t_end` (or to steady state), evaluating every metric
/// and writing artifacts when an output directory is given.
pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> Result<RunOutcome> {
    let cfg = &sc.config;
    let solver = FlowSolver::new(cfg.clone())?;
    let grid = solver.grid().clone();
    let dir = match &opts.out_dir {
        Some(d) => {
            let d = d.join(&sc.name);
            std::fs::create_dir_all(&d)?;
            Some(d)
        }
        None => None,
    };

    let mut st = solver.init()?;
    let kinetic0 = solver.kinetic(&st.u, &st.v);
    let mut ledger = EnergyLedger::new(kinetic0);
    let mut weak = WeakResidual::default();
    let mut max_div: f64 = 0.0;
    let mut max_wall_normal: f64 = 0.0;
    let mut min_bulk_cos: f64 = 1.0;
    let mut min_wall_cos: f64 = 1.0;
    let mut pressure_max: f64 = 0.0;
    let mut steady = false;
    let n_steps = cfg.n_steps();
    let mut steps = 0;
    for n in 0..n_steps {
        let (next, rec) = solver.step(&st)?;
        ledger.push(&rec, cfg.dt);
        weak.accumulate(&grid, &st, &next, cfg.dt, cfg.force);
        max_div = max_div.max(rec.div_ratio);
        max_wall_normal = max_wall_normal.max(rec.max_wall_normal);
        min_bulk_cos = min_bulk_cos.min(rec.min_bulk_cos);
        min_wall_cos = min_wall_cos.min(rec.min_wall_cos);
        pressure_max = pressure_max.max(pressure_diagnostic(&grid, &next, cfg.z(), cfg.force).ratio);
        steps = n + 1;
        st = next;
        if let Some(d) = &dir {
            if cfg.snapshot_every > 0 && steps % cfg.snapshot_every == 0 {
                output::save_csv(&grid, &st, &d.join(format!("snapshot_{steps:06}.csv")))?;
                output::save_vtk(&grid, &st, &d.join(format!("snapshot_{steps:06}.vtk")), &sc.name)?;
            }
        }
        if cfg.steady_tol > 0.0 && rec.rate_of_change < cfg.steady_tol {
            steady = true;
            break;
        }
    }

    let profile = row_profile(&st, cfg);
    let oracle_profile = sc.oracle_profile(st.t)?;
    let (l2, linf) = match &oracle_profile {
        Some(p) => {
            let linf = profile.iter().zip(&p.u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            (Some(relative_l2(&profile, &p.u)), Some(linf))
        }
        None => (None, None),
    };
    let tau = cfg.bulk.param("tau_star");
    let plug = match (tau, &oracle_profile) {
        (Some(tau), Some(p)) if p.plug_half_width.is_some() => plug_from_stress(&st, cfg, tau),
        _ => None,
    };
    let plug_oracle = oracle_profile.as_ref().and_then(|p| p.plug_half_width);
    let plug_cells = match (plug, plug_oracle) {
        (Some(a), Some(b)) => Some((a - b).abs() / grid.hy()),
        _ => None,
    };

    let last = ledger.last();
    let h = grid.h();
    let defect_bound = sc.tolerances.c_scheme * (cfg.dt + h);
    let max_defect = ledger.max_defect();
    let bulk_violation = (-min_bulk_cos).max(0.0);
    let wall_violation = (-min_wall_cos).max(0.0);
    let picard_gap = if steps > 0 { solver.picard_gap(&st)? } else { 0.0 };
    let tol = &sc.tolerances;

    let mut checks = BTreeMap::new();
    if let Some(e) = l2 {
        checks.insert("profile_l2".to_string(), e <= tol.profile_l2);
    }
    if let Some(c) = plug_cells {
        checks.insert("plug_half_width".to_string(), c <= tol.plug_cells);
    }
    checks.insert("incompressibility".to_string(), max_div <= tol.divergence);
    checks.insert("impermeability".to_string(), max_wall_normal == 0.0);
    checks.insert("bulk_dissipation_sign".to_string(), bulk_violation <= tol.dissipation);
    checks.insert("wall_dissipation_sign".to_string(), wall_violation <= tol.dissipation);
    checks.insert("energy_inequality".to_string(), max_defect <= defect_bound);
    checks.insert("pressure_bound".to_string(), pressure_max <= tol.pressure_ratio);
    let passed = checks.values().all(|b| *b);

    let metrics = Metrics {
        name: sc.name.clone(),
        seed: opts.seed,
        oracle: sc.oracle,
        nx: grid.nx,
        ny: grid.ny,
        dt: cfg.dt,
        eps: cfg.eps,
        delta: cfg.delta,
        steps,
        t_final: st.t,
        steady_reached: steady,
        profile_l2_error: l2,
        profile_max_error: linf,
        plug_half_width: plug,
        plug_half_width_oracle: plug_oracle,
        plug_error_cells: plug_cells,
        max_div_ratio: max_div,
        max_wall_normal_velocity: max_wall_normal,
        bulk_dissipation_violation: bulk_violation,
        wall_dissipation_violation: wall_violation,
        kinetic_initial: kinetic0,
        kinetic_final: last.kinetic,
        bulk_diss: last.bulk_diss,
        boundary_diss: last.boundary_diss,
        work: last.work,
        final_defect: last.defect,
        max_defect,
        defect_bound,
        weak_residual: weak.max_abs(),
        weak_residual_rel: weak.relative(),
        pressure_ratio_max: pressure_max,
        picard_gap,
        checks,
        passed,
    };

    if let Some(d) = &dir {
        output::save_csv(&grid, &st, &d.join("final.csv"))?;
        output::save_vtk(&grid, &st, &d.join("final.vtk"), &sc.name)?;
        ledger.save(&d.join("ledger.csv"))?;
        let ys: Vec<f64> = (0..grid.ny).map(|j| grid.y_center(j)).collect();
        let file = std::fs::File::create(d.join("profile.csv"))?;
        match &oracle_profile {
            Some(p) => output::write_columns(file, &[("y", &ys), ("u", &profile), ("u_oracle", &p.u)])?,
            None => output::write_columns(file, &[("y", &ys), ("u", &profile)])?,
        }
        write_json(&d.join("metrics.json"), &metrics)?;
    }

    Ok(RunOutcome {
        metrics,
        ledger,
        final_state: st,
        profile,
        oracle: oracle_profile,
    })
}

/// Write the oracle profile of a scenario on a fine grid of heights.
pub fn write_oracle(sc: &Scenario, samples: usize, t: Option<f64>, path: &Path) -> Result<Profile> {
    if sc.oracle == OracleKind::None {
        return Err(RheoError::Config(format!("scenario `{}` has no oracle", sc.name)));
    }
    let h = sc.config.grid.half_width();
    let n = samples.max(2);
    let ys: Vec<f64> = (0..n).map(|k| -h + 2.0 * h * k as f64 / (n - 1) as f64).collect();
    let t = t.unwrap_or(sc.config.t_end);
    let p = oracle::evaluate(sc.oracle, &sc.oracle_inputs(t), &ys)?.expect("oracle present");
    output::write_columns(std::fs::File::create(path)?, &[("y", &p.y), ("u", &p.u)])?;
    Ok(p)
}
