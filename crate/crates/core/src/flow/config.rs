//! Simulation configuration and its key-value file format.
//!
//! ```text
//! nx = 64                 # cells along the channel (periodic direction)
//! ny = 64                 # cells across the channel
//! lx = 1.0                # channel period
//! ly = 2.0                # channel width (walls at y = +-ly/2)
//! dim = 2                 # space dimension used for exponent validation
//! eps = 1e-6              # relation regularization, 0 < eps < 1
//! delta = 1e-3            # convective cutoff, 0 <= delta <= 1 (0 = limit)
//! dt = 0.05
//! t_end = 20.0
//! force_x = 1.0           # constant body force
//! force_y = 0.0
//! wall_speed_bottom = 0.0 # tangential wall velocities
//! wall_speed_top = 0.0
//! v0.uniform = 0.0        # initial velocity, sum of named fields
//! picard = 2              # Picard sweeps per step
//! cg_tol = 1e-12          # relative tolerance of the implicit solve
//! cg_max_iter = 20000
//! steady_tol = 0.0        # stop once max |du/dt| < steady_tol (0 = off)
//! snapshot_every = 0      # extra snapshots every n steps (0 = final only)
//! bulk.kind = navier_stokes
//! bulk.nu = 0.5
//! wall.kind = navier_slip
//! wall.gamma = 1.0
//! ```
//!
//! Relation keys take the `bulk.` / `wall.` prefix followed by the keys of
//! the relation file format.

use super::grid::Grid;
use crate::error::{Result, RheoError};
use crate::relation::kv::{boundary_from_entries, bulk_from_entries, parse_f64, KvEntry};
use crate::relation::{BoundaryRelation, BulkRelation, Relation};

/// Named initial velocity fields; amplitudes add up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum V0Kind {
    /// `u = A`.
    Uniform,
    /// `u = A (1 - (y/H)^2)`.
    Shear,
    /// `u = A cos(k y)`, the slowest linear decay mode of the channel.
    DecayMode,
    /// Discrete curl of `A sin(2 pi x / lx) (1 - (y/H)^2)^2`.
    Vortex,
    /// Discrete gradient of `A cos(2 pi x / lx) cos(pi y / ly)`.
    Gradient,
}

impl V0Kind {
    pub const ALL: [V0Kind; 5] = [
        V0Kind::Uniform,
        V0Kind::Shear,
        V0Kind::DecayMode,
        V0Kind::Vortex,
        V0Kind::Gradient,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            V0Kind::Uniform => "uniform",
            V0Kind::Shear => "shear",
            V0Kind::DecayMode => "decay_mode",
            V0Kind::Vortex => "vortex",
            V0Kind::Gradient => "gradient",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// How the stress is linearized in each sweep of a step.
///
/// * `secant`: `S = 2 mu_s(D_k) D_{k+1}` with the secant viscosity of the
///   previous iterate (Picard lagging).
/// * `tangent`: `S = 2 mu_t(D_k) D_{k+1} + 2 (mu_s - mu_t)(D_k) D_k` with
///   the tangent viscosity in the implicit operator; a Newton-type sweep for
///   laws whose secant viscosity degenerates (activation thresholds). Wall
///   rows always use the secant form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Linearization {
    Secant,
    Tangent,
}

impl Linearization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Linearization::Secant => "secant",
            Linearization::Tangent => "tangent",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Linearization::Secant, Linearization::Tangent]
            .into_iter()
            .find(|l| l.as_str() == s)
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub grid: Grid,
    pub dim: usize,
    pub bulk: BulkRelation,
    pub wall: BoundaryRelation,
    pub eps: f64,
    pub delta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub force: [f64; 2],
    /// Tangential wall velocities `[bottom, top]`.
    pub wall_speed: [f64; 2],
    pub v0: Vec<(V0Kind, f64)>,
    /// Maximum number of linearization sweeps per step.
    pub picard: usize,
    /// Sweeps stop early once `max |v_k - v_{k-1}| <= picard_tol max |v_k|`
    /// (0 runs every sweep).
    pub picard_tol: f64,
    pub linearization: Linearization,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub steady_tol: f64,
    pub snapshot_every: usize,
}

/// Keys accepted by [`SimConfig::from_entries`] besides `bulk.*`, `wall.*`
/// and `v0.*`.
pub const SIM_KEYS: [&str; 20] = [
    "nx",
    "ny",
    "lx",
    "ly",
    "dim",
    "eps",
    "delta",
    "dt",
    "t_end",
    "force_x",
    "force_y",
    "wall_speed_bottom",
    "wall_speed_top",
    "picard",
    "picard_tol",
    "linearization",
    "cg_tol",
    "cg_max_iter",
    "steady_tol",
    "snapshot_every",
];

fn parse_usize(e: &KvEntry) -> Result<usize> {
    e.value.parse().map_err(|_| RheoError::Parse {
        line: e.line,
        msg: format!("`{}` expects a non-negative integer, got `{}`", e.key, e.value),
    })
}

fn bad(e: &KvEntry, msg: impl Into<String>) -> RheoError {
    RheoError::Parse {
        line: e.line,
        msg: msg.into(),
    }
}

fn strip(entries: &[KvEntry], prefix: &str) -> Vec<KvEntry> {
    entries
        .iter()
        .filter_map(|e| {
            e.key.strip_prefix(prefix).map(|k| KvEntry {
                line: e.line,
                key: k.to_string(),
                value: e.value.clone(),
            })
        })
        .collect()
}

/// Lower bound of admissible growth exponents in dimension `d`.
pub fn critical_exponent(d: usize) -> f64 {
    2.0 * d as f64 / (d as f64 + 2.0)
}

/// `z = max{r, q, (d+2) r / ((d+2) r - 2d)}`.
pub fn z_exponent(r: f64, q: f64, d: usize) -> f64 {
    let dd = d as f64;
    r.max(q).max((dd + 2.0) * r / ((dd + 2.0) * r - 2.0 * dd))
}

impl SimConfig {
    /// Build from parsed entries. Unknown keys are errors carrying their
    /// line number.
    pub fn from_entries(entries: &[KvEntry]) -> Result<Self> {
        let mut nx = 32;
        let mut ny = 32;
        let mut lx = 1.0;
        let mut ly = 2.0;
        let mut dim = 2;
        let mut eps = 1e-3;
        let mut delta = 1e-3;
        let mut dt = None;
        let mut t_end = None;
        let mut force = [0.0; 2];
        let mut wall_speed = [0.0; 2];
        let mut v0 = Vec::new();
        let mut picard = 2;
        let mut picard_tol = 0.0;
        let mut linearization = Linearization::Secant;
        let mut cg_tol = 1e-12;
        let mut cg_max_iter = 20000;
        let mut steady_tol = 0.0;
        let mut snapshot_every = 0;
        let mut line_of = std::collections::BTreeMap::new();

        for e in entries {
            line_of.insert(e.key.clone(), e.line);
            if e.key.starts_with("bulk.") || e.key.starts_with("wall.") {
                continue;
            }
            if let Some(name) = e.key.strip_prefix("v0.") {
                let kind = V0Kind::parse(name).ok_or_else(|| {
                    bad(
                        e,
                        format!(
                            "unknown initial field `{name}` (expected one of: {})",
                            V0Kind::ALL.map(|k| k.as_str()).join(", ")
                        ),
                    )
                })?;
                v0.push((kind, parse_f64(e)?));
                continue;
            }
            match e.key.as_str() {
                "nx" => nx = parse_usize(e)?,
                "ny" => ny = parse_usize(e)?,
                "lx" => lx = parse_f64(e)?,
                "ly" => ly = parse_f64(e)?,
                "dim" => {
                    dim = parse_usize(e)?;
                    if dim != 2 && dim != 3 {
                        return Err(bad(e, "`dim` must be 2 or 3"));
                    }
                }
                "eps" => {
                    eps = parse_f64(e)?;
                    if !(eps > 0.0 && eps < 1.0) {
                        return Err(bad(e, "`eps` must lie in (0, 1)"));
                    }
                }
                "delta" => {
                    delta = parse_f64(e)?;
                    if !(0.0..=1.0).contains(&delta) {
                        return Err(bad(e, "`delta` must lie in [0, 1]"));
                    }
                }
                "dt" => {
                    let v = parse_f64(e)?;
                    if v <= 0.0 {
                        return Err(bad(e, "`dt` must be positive"));
                    }
                    dt = Some(v);
                }
                "t_end" => {
                    let v = parse_f64(e)?;
                    if v < 0.0 {
                        return Err(bad(e, "`t_end` must be non-negative"));
                    }
                    t_end = Some(v);
                }
                "force_x" => force[0] = parse_f64(e)?,
                "force_y" => force[1] = parse_f64(e)?,
                "wall_speed_bottom" => wall_speed[0] = parse_f64(e)?,
                "wall_speed_top" => wall_speed[1] = parse_f64(e)?,
                "picard" => {
                    picard = parse_usize(e)?;
                    if picard == 0 {
                        return Err(bad(e, "`picard` must be at least 1"));
                    }
                }
                "picard_tol" => {
                    picard_tol = parse_f64(e)?;
                    if picard_tol < 0.0 {
                        return Err(bad(e, "`picard_tol` must be non-negative"));
                    }
                }
                "linearization" => {
                    linearization = Linearization::parse(&e.value)
                        .ok_or_else(|| bad(e, "`linearization` must be `secant` or `tangent`"))?;
                }
                "cg_tol" => {
                    cg_tol = parse_f64(e)?;
                    if cg_tol <= 0.0 {
                        return Err(bad(e, "`cg_tol` must be positive"));
                    }
                }
                "cg_max_iter" => cg_max_iter = parse_usize(e)?,
                "steady_tol" => {
                    steady_tol = parse_f64(e)?;
                    if steady_tol < 0.0 {
                        return Err(bad(e, "`steady_tol` must be non-negative"));
                    }
                }
                "snapshot_every" => snapshot_every = parse_usize(e)?,
                _ => {
                    return Err(bad(
                        e,
                        format!(
                            "unknown key `{}` (expected one of: {}, bulk.*, wall.*, v0.*)",
                            e.key,
                            SIM_KEYS.join(", ")
                        ),
                    ))
                }
            }
        }
        let first_line = entries.first().map(|e| e.line).unwrap_or(1);
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| RheoError::Parse {
                line: first_line,
                msg: format!("missing required key `{name}`"),
            })
        };
        let dt = need("dt", dt)?;
        let t_end = need("t_end", t_end)?;

        let bulk_entries = strip(entries, "bulk.");
        if bulk_entries.is_empty() {
            return Err(RheoError::Parse {
                line: first_line,
                msg: "missing `bulk.kind`".into(),
            });
        }
        let wall_entries = strip(entries, "wall.");
        if wall_entries.is_empty() {
            return Err(RheoError::Parse {
                line: first_line,
                msg: "missing `wall.kind`".into(),
            });
        }
        let prefix_err = |prefix: &str, err: RheoError| match err {
            RheoError::Parse { line, msg } => RheoError::Parse {
                line,
                msg: format!("{prefix}: {msg}"),
            },
            other => other,
        };
        let bulk = bulk_from_entries(&bulk_entries).map_err(|e| prefix_err("bulk", e))?;
        let wall = boundary_from_entries(&wall_entries).map_err(|e| prefix_err("wall", e))?;

        let grid = Grid::new(nx, ny, lx, ly).map_err(|e| RheoError::Parse {
            line: line_of.get("nx").or(line_of.get("lx")).copied().unwrap_or(first_line),
            msg: e.to_string(),
        })?;

        let r = bulk.growth_exponent();
        let crit = critical_exponent(dim);
        if !(r > crit) {
            let line = ["bulk.r", "bulk.n", "bulk.m", "bulk.kind"]
                .iter()
                .find_map(|k| line_of.get(*k))
                .copied()
                .unwrap_or(first_line);
            return Err(RheoError::Parse {
                line,
                msg: format!("bulk growth exponent r = {r} must exceed 2d/(d+2) = {crit} for d = {dim}"),
            });
        }
        let q = wall.growth_exponent();
        if !(q > 1.0) {
            let line = ["wall.q", "wall.kind"]
                .iter()
                .find_map(|k| line_of.get(*k))
                .copied()
                .unwrap_or(first_line);
            return Err(RheoError::Parse {
                line,
                msg: format!("wall growth exponent q = {q} must exceed 1"),
            });
        }
        if !bulk.is_isotropic() || !wall.is_isotropic() {
            return Err(RheoError::Parse {
                line: first_line,
                msg: "the channel solver requires isotropic relations".into(),
            });
        }
        v0.sort_by_key(|(k, _)| *k);

        Ok(SimConfig {
            grid,
            dim,
            bulk,
            wall,
            eps,
            delta,
            dt,
            t_end,
            force,
            wall_speed,
            v0,
            picard,
            picard_tol,
            linearization,
            cg_tol,
            cg_max_iter,
            steady_tol,
            snapshot_every,
        })
    }

    pub fn r(&self) -> f64 {
        self.bulk.growth_exponent()
    }

    pub fn q(&self) -> f64 {
        self.wall.growth_exponent()
    }

    pub fn z(&self) -> f64 {
        z_exponent(self.r(), self.q(), self.dim)
    }

    /// Number of time steps to reach `t_end` (the last step is shortened).
    pub fn n_steps(&self) -> usize {
        let n = (self.t_end / self.dt - 1e-9).ceil();
        if n <= 0.0 {
            0
        } else {
            n as usize
        }
    }

    /// Replace the cell size keeping the domain: `nx = lx/h`, `ny = ly/h`.
    pub fn with_cell_size(mut self, h: f64) -> Result<Self> {
        let nx = (self.grid.lx / h).round();
        let ny = (self.grid.ly / h).round();
        if (nx * h - self.grid.lx).abs() > 1e-9 * self.grid.lx || (ny * h - self.grid.ly).abs() > 1e-9 * self.grid.ly {
            return Err(RheoError::Config(format!("cell size {h} does not divide the channel")));
        }
        self.grid = Grid::new(nx as usize, ny as usize, self.grid.lx, self.grid.ly)?;
        Ok(self)
    }
}
