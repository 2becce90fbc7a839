use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{checked_residual, invert_increasing, pos, viscosity_form, Orientation, Relation};
use crate::error::{Result, RheoError};
use crate::tensor::{Element, SymTensor2};

/// User-supplied residual `G(S, D)`.
pub type BulkClosure = Arc<dyn Fn(&SymTensor2, &SymTensor2) -> SymTensor2 + Send + Sync>;

/// Catalog of bulk relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BulkKind {
    NavierStokes,
    PowerLaw,
    Carreau,
    CarreauYasuda,
    Cross,
    Eyring,
    Sisko,
    Ellis,
    Seely,
    Glen,
    Blatter,
    Bingham,
    HerschelBulkley,
    ActivatedEuler,
    Custom,
}

impl BulkKind {
    pub const ALL: [BulkKind; 15] = [
        BulkKind::NavierStokes,
        BulkKind::PowerLaw,
        BulkKind::Carreau,
        BulkKind::CarreauYasuda,
        BulkKind::Cross,
        BulkKind::Eyring,
        BulkKind::Sisko,
        BulkKind::Ellis,
        BulkKind::Seely,
        BulkKind::Glen,
        BulkKind::Blatter,
        BulkKind::Bingham,
        BulkKind::HerschelBulkley,
        BulkKind::ActivatedEuler,
        BulkKind::Custom,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BulkKind::NavierStokes => "navier_stokes",
            BulkKind::PowerLaw => "power_law",
            BulkKind::Carreau => "carreau",
            BulkKind::CarreauYasuda => "carreau_yasuda",
            BulkKind::Cross => "cross",
            BulkKind::Eyring => "eyring",
            BulkKind::Sisko => "sisko",
            BulkKind::Ellis => "ellis",
            BulkKind::Seely => "seely",
            BulkKind::Glen => "glen",
            BulkKind::Blatter => "blatter",
            BulkKind::Bingham => "bingham",
            BulkKind::HerschelBulkley => "herschel_bulkley",
            BulkKind::ActivatedEuler => "activated_euler",
            BulkKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.as_str() == s)
    }

    /// Numeric parameter keys, all required.
    pub fn param_keys(&self) -> &'static [&'static str] {
        match self {
            BulkKind::NavierStokes => &["nu"],
            BulkKind::PowerLaw => &["nu0", "r"],
            BulkKind::Carreau => &["nu0", "nu_inf", "A", "n"],
            BulkKind::CarreauYasuda => &["nu0", "nu_inf", "A", "a", "n"],
            BulkKind::Cross => &["nu0", "nu_inf", "A", "n"],
            BulkKind::Eyring => &["nu0", "nu_inf", "A"],
            BulkKind::Sisko => &["nu_inf", "A", "n"],
            BulkKind::Ellis => &["nu0", "A", "n"],
            BulkKind::Seely => &["nu0", "nu_inf", "tau0"],
            BulkKind::Glen => &["A", "m"],
            BulkKind::Blatter => &["A", "tau0", "n"],
            BulkKind::Bingham => &["nu", "tau_star"],
            BulkKind::HerschelBulkley => &["nu", "tau_star", "r"],
            BulkKind::ActivatedEuler => &["nu", "delta_star"],
            // Depends on the custom law; see `CustomLaw::param_keys`.
            BulkKind::Custom => &[],
        }
    }

    /// Canonical orientation (the one with `dG/dS >= 0` and a Lipschitz
    /// residual near the origin).
    fn default_orientation(&self, params: &BTreeMap<String, f64>) -> Orientation {
        match self {
            BulkKind::PowerLaw => {
                if params.get("r").copied().unwrap_or(2.0) >= 2.0 {
                    Orientation::Stress
                } else {
                    Orientation::Rate
                }
            }
            BulkKind::Ellis | BulkKind::Seely | BulkKind::Glen | BulkKind::Blatter | BulkKind::Bingham => {
                Orientation::Rate
            }
            _ => Orientation::Stress,
        }
    }

    fn allowed_orientations(&self) -> &'static [Orientation] {
        match self {
            BulkKind::PowerLaw | BulkKind::Ellis | BulkKind::Seely | BulkKind::Glen | BulkKind::Blatter => {
                &[Orientation::Stress, Orientation::Rate]
            }
            BulkKind::Bingham => &[Orientation::Rate],
            _ => &[Orientation::Stress],
        }
    }
}

impl fmt::Display for BulkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Built-in laws for `kind = custom`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CustomLaw {
    /// `G = 0` everywhere.
    Zero,
    /// `S = (1 + |D|)^(r-2) D`, or `D = (1 + |S|)^(r'-2) S` in rate form.
    ShiftedPower,
    /// `S = (1 + |D|^2)^((r-2)/2) D`, or the dual-exponent rate form.
    SmoothPower,
}

impl CustomLaw {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "zero" => Some(CustomLaw::Zero),
            "shifted_power" => Some(CustomLaw::ShiftedPower),
            "smooth_power" => Some(CustomLaw::SmoothPower),
            _ => None,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            CustomLaw::Zero => "zero",
            CustomLaw::ShiftedPower => "shifted_power",
            CustomLaw::SmoothPower => "smooth_power",
        }
    }

    fn param_keys(&self) -> &'static [&'static str] {
        &["r"]
    }
}

/// Names of the built-in custom laws, for documentation and error messages.
pub const CUSTOM_BULK_LAWS: [&str; 3] = ["zero", "shifted_power", "smooth_power"];

#[derive(Clone)]
#[allow(clippy::enum_variant_names)]
enum Law {
    NavierStokes {
        nu: f64,
    },
    PowerLaw {
        nu0: f64,
        r: f64,
    },
    Carreau {
        nu0: f64,
        nu_inf: f64,
        a_coef: f64,
        n: f64,
    },
    CarreauYasuda {
        nu0: f64,
        nu_inf: f64,
        a_coef: f64,
        a: f64,
        n: f64,
    },
    Cross {
        nu0: f64,
        nu_inf: f64,
        a_coef: f64,
        n: f64,
    },
    Eyring {
        nu0: f64,
        nu_inf: f64,
        a_coef: f64,
    },
    Sisko {
        nu_inf: f64,
        a_coef: f64,
        n: f64,
    },
    Ellis {
        nu0: f64,
        a_coef: f64,
        n: f64,
    },
    Seely {
        nu0: f64,
        nu_inf: f64,
        tau0: f64,
    },
    Glen {
        a_coef: f64,
        m: f64,
    },
    Blatter {
        a_coef: f64,
        tau0: f64,
        n: f64,
    },
    Bingham {
        nu: f64,
        tau: f64,
    },
    HerschelBulkley {
        nu: f64,
        tau: f64,
        r: f64,
    },
    ActivatedEuler {
        nu: f64,
        delta: f64,
    },
    Custom {
        law: CustomLaw,
        r: f64,
    },
    Closure {
        name: String,
        f: BulkClosure,
        isotropic: bool,
    },
}

/// An implicit bulk relation `G(S, D) = 0` with validated parameters.
#[derive(Clone)]
pub struct BulkRelation {
    kind: BulkKind,
    params: BTreeMap<String, f64>,
    law: Law,
    orientation: Orientation,
    growth: f64,
}

impl fmt::Debug for BulkRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BulkRelation")
            .field("kind", &self.kind)
            .field("law", &self.custom_law_name())
            .field("params", &self.params)
            .field("orientation", &self.orientation)
            .field("growth", &self.growth)
            .finish()
    }
}

/// The power-law dissipation identity `S:D = (2 nu0 / r)|D|^r + c |S|^r'`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationSplit {
    pub total: f64,
    pub rate_part: f64,
    pub stress_part: f64,
}

fn require(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = params
        .get(key)
        .copied()
        .ok_or_else(|| RheoError::param(key, "missing"))?;
    if !v.is_finite() {
        return Err(RheoError::param(key, "must be finite"));
    }
    Ok(v)
}

fn positive(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = require(params, key)?;
    if v <= 0.0 {
        return Err(RheoError::param(key, format!("must be > 0, got {v}")));
    }
    Ok(v)
}

fn non_negative(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = require(params, key)?;
    if v < 0.0 {
        return Err(RheoError::param(key, format!("must be >= 0, got {v}")));
    }
    Ok(v)
}

fn exponent(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = require(params, key)?;
    if v <= 1.0 {
        return Err(RheoError::param(key, format!("must be > 1, got {v}")));
    }
    Ok(v)
}

fn check_keys(allowed: &[&str], params: &BTreeMap<String, f64>, what: &str) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(RheoError::param(
                key,
                format!("unknown parameter for {what} (expected one of: {})", allowed.join(", ")),
            ));
        }
    }
    Ok(())
}

/// Conjugate exponent `r' = r / (r - 1)`.
pub fn conjugate(r: f64) -> f64 {
    r / (r - 1.0)
}

impl BulkRelation {
    /// Build a catalog member from named parameters. `orientation = None`
    /// selects the canonical one. Use [`BulkRelation::custom`] for
    /// `kind = custom`.
    pub fn new(kind: BulkKind, params: &BTreeMap<String, f64>, orientation: Option<Orientation>) -> Result<Self> {
        if kind == BulkKind::Custom {
            return Err(RheoError::param(
                "kind",
                "custom relations need a law; use BulkRelation::custom",
            ));
        }
        check_keys(kind.param_keys(), params, kind.as_str())?;
        let law = match kind {
            BulkKind::NavierStokes => Law::NavierStokes {
                nu: positive(params, "nu")?,
            },
            BulkKind::PowerLaw => Law::PowerLaw {
                nu0: positive(params, "nu0")?,
                r: exponent(params, "r")?,
            },
            BulkKind::Carreau => Law::Carreau {
                nu0: positive(params, "nu0")?,
                nu_inf: positive(params, "nu_inf")?,
                a_coef: positive(params, "A")?,
                n: require(params, "n")?,
            },
            BulkKind::CarreauYasuda => Law::CarreauYasuda {
                nu0: positive(params, "nu0")?,
                nu_inf: positive(params, "nu_inf")?,
                a_coef: positive(params, "A")?,
                a: positive(params, "a")?,
                n: require(params, "n")?,
            },
            BulkKind::Cross => Law::Cross {
                nu0: positive(params, "nu0")?,
                nu_inf: positive(params, "nu_inf")?,
                a_coef: positive(params, "A")?,
                n: positive(params, "n")?,
            },
            BulkKind::Eyring => Law::Eyring {
                nu0: positive(params, "nu0")?,
                nu_inf: positive(params, "nu_inf")?,
                a_coef: positive(params, "A")?,
            },
            BulkKind::Sisko => {
                let n = require(params, "n")?;
                if n < 1.0 {
                    return Err(RheoError::param("n", format!("sisko needs n >= 1, got {n}")));
                }
                Law::Sisko {
                    nu_inf: positive(params, "nu_inf")?,
                    a_coef: positive(params, "A")?,
                    n,
                }
            }
            BulkKind::Ellis => {
                let n = require(params, "n")?;
                if n < 1.0 {
                    return Err(RheoError::param("n", format!("ellis needs n >= 1, got {n}")));
                }
                Law::Ellis {
                    nu0: positive(params, "nu0")?,
                    a_coef: positive(params, "A")?,
                    n,
                }
            }
            BulkKind::Seely => {
                let tau0 = require(params, "tau0")?;
                if tau0 == 0.0 {
                    return Err(RheoError::param("tau0", "must be non-zero"));
                }
                Law::Seely {
                    nu0: positive(params, "nu0")?,
                    nu_inf: positive(params, "nu_inf")?,
                    tau0,
                }
            }
            BulkKind::Glen => Law::Glen {
                a_coef: positive(params, "A")?,
                m: positive(params, "m")?,
            },
            BulkKind::Blatter => Law::Blatter {
                a_coef: positive(params, "A")?,
                tau0: require(params, "tau0")?,
                n: positive(params, "n")?,
            },
            BulkKind::Bingham => Law::Bingham {
                nu: positive(params, "nu")?,
                tau: non_negative(params, "tau_star")?,
            },
            BulkKind::HerschelBulkley => Law::HerschelBulkley {
                nu: positive(params, "nu")?,
                tau: non_negative(params, "tau_star")?,
                r: exponent(params, "r")?,
            },
            BulkKind::ActivatedEuler => Law::ActivatedEuler {
                nu: positive(params, "nu")?,
                delta: non_negative(params, "delta_star")?,
            },
            BulkKind::Custom => unreachable!(),
        };
        let orientation = orientation.unwrap_or_else(|| kind.default_orientation(params));
        if !kind.allowed_orientations().contains(&orientation) {
            return Err(RheoError::param(
                "form",
                format!("{} cannot be evaluated in {} form", kind, orientation.as_str()),
            ));
        }
        let mut rel = BulkRelation {
            kind,
            params: params.clone(),
            law,
            orientation,
            growth: 0.0,
        };
        rel.growth = rel.compute_growth();
        Ok(rel)
    }

    /// Build from `(key, value)` pairs with the canonical orientation.
    pub fn from_pairs(kind: BulkKind, pairs: &[(&str, f64)]) -> Result<Self> {
        let params = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Self::new(kind, &params, None)
    }

    /// A built-in custom law (`zero`, `shifted_power`, `smooth_power`).
    /// Custom relations must state their orientation. Exponents `0 < r <= 1`
    /// are accepted in stress form only, to build non-monotone negative
    /// fixtures for the admissibility checks.
    pub fn custom(law: &str, params: &BTreeMap<String, f64>, orientation: Orientation) -> Result<Self> {
        let custom = CustomLaw::parse(law).ok_or_else(|| {
            RheoError::param(
                "law",
                format!(
                    "unknown custom law `{law}` (expected one of: {})",
                    CUSTOM_BULK_LAWS.join(", ")
                ),
            )
        })?;
        check_keys(custom.param_keys(), params, &format!("custom law {law}"))?;
        let r = positive(params, "r")?;
        if r <= 1.0 && orientation == Orientation::Rate {
            return Err(RheoError::param("r", format!("rate form needs r > 1, got {r}")));
        }
        Ok(BulkRelation {
            kind: BulkKind::Custom,
            params: params.clone(),
            law: Law::Custom { law: custom, r },
            orientation,
            growth: r,
        })
    }

    /// A relation given by an arbitrary residual closure. The closure must
    /// follow the sign convention of `orientation` and vanish at the origin.
    pub fn from_closure(
        name: impl Into<String>,
        growth: f64,
        orientation: Orientation,
        isotropic: bool,
        f: impl Fn(&SymTensor2, &SymTensor2) -> SymTensor2 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(growth > 1.0 && growth.is_finite()) {
            return Err(RheoError::param(
                "r",
                format!("growth exponent must be > 1, got {growth}"),
            ));
        }
        Ok(BulkRelation {
            kind: BulkKind::Custom,
            params: BTreeMap::new(),
            law: Law::Closure {
                name: name.into(),
                f: Arc::new(f),
                isotropic,
            },
            orientation,
            growth,
        })
    }

    pub fn navier_stokes(nu: f64) -> Result<Self> {
        Self::from_pairs(BulkKind::NavierStokes, &[("nu", nu)])
    }

    pub fn power_law(nu0: f64, r: f64) -> Result<Self> {
        Self::from_pairs(BulkKind::PowerLaw, &[("nu0", nu0), ("r", r)])
    }

    pub fn bingham(nu: f64, tau_star: f64) -> Result<Self> {
        Self::from_pairs(BulkKind::Bingham, &[("nu", nu), ("tau_star", tau_star)])
    }

    pub fn herschel_bulkley(nu: f64, tau_star: f64, r: f64) -> Result<Self> {
        Self::from_pairs(
            BulkKind::HerschelBulkley,
            &[("nu", nu), ("tau_star", tau_star), ("r", r)],
        )
    }

    pub fn activated_euler(nu: f64, delta_star: f64) -> Result<Self> {
        Self::from_pairs(BulkKind::ActivatedEuler, &[("nu", nu), ("delta_star", delta_star)])
    }

    pub fn kind(&self) -> BulkKind {
        self.kind
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    /// Name of the custom law or closure, if any.
    pub fn custom_law_name(&self) -> Option<&str> {
        match &self.law {
            Law::Custom { law, .. } => Some(law.as_str()),
            Law::Closure { name, .. } => Some(name.as_str()),
            _ => None,
        }
    }

    /// Whether this relation can be written back to the key-value format.
    pub fn is_serializable(&self) -> bool {
        !matches!(self.law, Law::Closure { .. })
    }

    fn compute_growth(&self) -> f64 {
        match &self.law {
            Law::PowerLaw { r, .. } | Law::HerschelBulkley { r, .. } => *r,
            Law::Sisko { n, .. } => n + 1.0,
            Law::Ellis { n, .. } => {
                if *n > 1.0 {
                    (n + 1.0) / n
                } else {
                    2.0
                }
            }
            Law::Glen { m, .. } => (m + 1.0) / m,
            Law::Blatter { n, .. } => (n + 1.0) / n,
            Law::Custom { r, .. } => *r,
            Law::Closure { .. } => self.growth,
            _ => 2.0,
        }
    }

    /// `|S*(D)|` as a function of `|D|`, for members with an explicit
    /// stress law.
    fn stress_mag(&self, x: f64) -> Option<f64> {
        let v = match &self.law {
            Law::NavierStokes { nu } => 2.0 * nu * x,
            Law::PowerLaw { nu0, r } => 2.0 * nu0 * x.powf(r - 1.0),
            Law::Carreau { nu0, nu_inf, a_coef, n } => {
                2.0 * (nu_inf + (nu0 - nu_inf) * (1.0 + a_coef * x * x).powf(-n / 2.0)) * x
            }
            Law::CarreauYasuda {
                nu0,
                nu_inf,
                a_coef,
                a,
                n,
            } => 2.0 * (nu_inf + (nu0 - nu_inf) * (1.0 + a_coef * x.powf(*a)).powf(-n / a)) * x,
            Law::Cross { nu0, nu_inf, a_coef, n } => 2.0 * (nu_inf + (nu0 - nu_inf) / (1.0 + a_coef * x.powf(*n))) * x,
            Law::Eyring { nu0, nu_inf, a_coef } => 2.0 * (nu_inf * x + (nu0 - nu_inf) * (a_coef * x).asinh() / a_coef),
            Law::Sisko { nu_inf, a_coef, n } => 2.0 * (nu_inf * x + a_coef * x.powf(*n)),
            Law::HerschelBulkley { nu, tau, r } => {
                if x > 0.0 {
                    tau + 2.0 * nu * (1.0 + x * x).powf((r - 2.0) / 2.0) * x
                } else {
                    0.0
                }
            }
            Law::ActivatedEuler { nu, delta } => 2.0 * nu * pos(x - delta),
            Law::Custom { law, r } => match law {
                CustomLaw::Zero => return None,
                CustomLaw::ShiftedPower if self.orientation == Orientation::Stress => (1.0 + x).powf(r - 2.0) * x,
                CustomLaw::SmoothPower if self.orientation == Orientation::Stress => {
                    (1.0 + x * x).powf((r - 2.0) / 2.0) * x
                }
                _ => return None,
            },
            _ => return None,
        };
        Some(v)
    }

    /// `|D*(S)|` as a function of `|S|`, for members with an explicit rate
    /// law.
    fn rate_mag(&self, y: f64) -> Option<f64> {
        let v = match &self.law {
            Law::NavierStokes { nu } => y / (2.0 * nu),
            Law::PowerLaw { nu0, r } => (y / (2.0 * nu0)).powf(1.0 / (r - 1.0)),
            Law::Glen { a_coef, m } => a_coef * y.powf(*m),
            Law::Blatter { a_coef, tau0, n } => a_coef * (y * y + tau0 * tau0).powf((n - 1.0) / 2.0) * y,
            Law::Ellis { nu0, a_coef, n } => (1.0 + a_coef * y.powf(n - 1.0)) * y / (2.0 * nu0),
            Law::Seely { nu0, nu_inf, tau0 } => y / (2.0 * (nu_inf + (nu0 - nu_inf) * (-y / (tau0 * tau0)).exp())),
            Law::Bingham { nu, tau } => pos(y - tau) / (2.0 * nu),
            Law::HerschelBulkley { nu, tau, r } => {
                let excess = pos(y - tau);
                let (nu, r) = (*nu, *r);
                invert_increasing(|x| 2.0 * nu * (1.0 + x * x).powf((r - 2.0) / 2.0) * x, excess)
            }
            Law::Custom { law, r, .. } => {
                let rc = conjugate(*r);
                match law {
                    CustomLaw::ShiftedPower if self.orientation == Orientation::Rate => (1.0 + y).powf(rc - 2.0) * y,
                    CustomLaw::SmoothPower if self.orientation == Orientation::Rate => {
                        (1.0 + y * y).powf((rc - 2.0) / 2.0) * y
                    }
                    _ => return None,
                }
            }
            _ => return None,
        };
        Some(v)
    }

    /// Scalar rate magnitude on the graph for a given stress magnitude,
    /// inverting the stress law when only that one is explicit. `None` when
    /// the relation is not radial or not invertible.
    pub fn rate_magnitude(&self, stress_mag: f64) -> Option<f64> {
        if let Some(v) = self.rate_mag(stress_mag) {
            return Some(v);
        }
        match &self.law {
            Law::ActivatedEuler { nu, delta } => {
                // Smallest rate on the graph; the rest state D = 0 for S = 0.
                if stress_mag > 0.0 {
                    Some(delta + stress_mag / (2.0 * nu))
                } else {
                    Some(0.0)
                }
            }
            Law::Closure { .. }
            | Law::Custom {
                law: CustomLaw::Zero, ..
            } => None,
            Law::Custom { r, .. } if *r <= 1.0 => None,
            _ => {
                let this = self;
                Some(invert_increasing(
                    |x| this.stress_mag(x).unwrap_or(f64::NAN),
                    stress_mag,
                ))
            }
        }
    }

    /// Scalar stress magnitude on the graph for a given rate magnitude.
    pub fn stress_magnitude(&self, rate_mag: f64) -> Option<f64> {
        if let Some(v) = self.stress_mag(rate_mag) {
            return Some(v);
        }
        match &self.law {
            Law::Bingham { nu, tau } => {
                if rate_mag > 0.0 {
                    Some(tau + 2.0 * nu * rate_mag)
                } else {
                    Some(0.0)
                }
            }
            Law::Glen { .. } | Law::Blatter { .. } | Law::Ellis { .. } | Law::Seely { .. } => {
                let this = self;
                Some(invert_increasing(|y| this.rate_mag(y).unwrap_or(f64::NAN), rate_mag))
            }
            Law::Custom { .. } => {
                let this = self;
                self.rate_mag(1.0)?;
                Some(invert_increasing(|y| this.rate_mag(y).unwrap_or(f64::NAN), rate_mag))
            }
            _ => None,
        }
    }

    fn raw_residual(&self, s: &SymTensor2, d: &SymTensor2) -> SymTensor2 {
        match &self.law {
            Law::Closure { f, .. } => return f(s, d),
            Law::Custom {
                law: CustomLaw::Zero, ..
            } => return SymTensor2::zero(s.dim()),
            Law::HerschelBulkley { nu, tau, r } => {
                let p = s.scaled_to(pos(s.frobenius_norm() - tau));
                let dn = d.frobenius_norm();
                let h = *d * (2.0 * nu * (1.0 + dn * dn).powf((r - 2.0) / 2.0));
                return p - h;
            }
            _ => {}
        }
        match self.orientation {
            Orientation::Stress => {
                if let Some(m) = self.stress_mag(d.frobenius_norm()) {
                    *s - d.scaled_to(m)
                } else {
                    let y = s.frobenius_norm();
                    let rm = self.rate_mag(y).unwrap_or(f64::NAN);
                    viscosity_form(s, d, rm)
                }
            }
            Orientation::Rate => {
                let m = self.rate_mag(s.frobenius_norm()).unwrap_or(f64::NAN);
                s.scaled_to(m) - *d
            }
        }
    }

    /// Power-law dissipation split at a graph point.
    pub fn dissipation_split(&self, s: &SymTensor2, d: &SymTensor2) -> Result<DissipationSplit> {
        let (nu0, r) = match self.law {
            Law::PowerLaw { nu0, r } => (nu0, r),
            _ => {
                return Err(RheoError::Unavailable {
                    kind: self.kind.as_str().to_string(),
                    what: "dissipation split",
                })
            }
        };
        let res = self.residual(s, d)?;
        let scale = 1.0 + s.frobenius_norm() + d.frobenius_norm();
        let tol = 1e-8 * scale;
        let rn = res.frobenius_norm();
        if rn > tol {
            return Err(RheoError::NotGraphPoint { residual: rn, tol });
        }
        let rc = conjugate(r);
        let total = s.inner(d)?;
        let rate_part = 2.0 * nu0 / r * d.frobenius_norm().powf(r);
        let stress_part = (r - 1.0) / (r * (2.0 * nu0).powf(1.0 / (r - 1.0))) * s.frobenius_norm().powf(rc);
        Ok(DissipationSplit {
            total,
            rate_part,
            stress_part,
        })
    }
}

impl Relation for BulkRelation {
    type Elem = SymTensor2;

    fn kind_name(&self) -> &str {
        self.kind.as_str()
    }

    fn growth_exponent(&self) -> f64 {
        self.growth
    }

    fn orientation(&self) -> Orientation {
        self.orientation
    }

    fn residual(&self, stress: &SymTensor2, rate: &SymTensor2) -> Result<SymTensor2> {
        checked_residual(stress, rate, "bulk relation", || self.raw_residual(stress, rate))
    }

    fn explicit_stress(&self, rate: &SymTensor2) -> Result<SymTensor2> {
        if !rate.is_finite() {
            return Err(RheoError::NonFinite("explicit stress"));
        }
        let m = self
            .stress_mag(rate.frobenius_norm())
            .ok_or_else(|| RheoError::Unavailable {
                kind: self.kind.as_str().to_string(),
                what: "explicit stress law",
            })?;
        Ok(rate.scaled_to(m))
    }

    fn explicit_rate(&self, stress: &SymTensor2) -> Result<SymTensor2> {
        if !stress.is_finite() {
            return Err(RheoError::NonFinite("explicit rate"));
        }
        let m = self
            .rate_mag(stress.frobenius_norm())
            .ok_or_else(|| RheoError::Unavailable {
                kind: self.kind.as_str().to_string(),
                what: "explicit rate law",
            })?;
        Ok(stress.scaled_to(m))
    }

    fn kink_distance(&self, stress: &SymTensor2, rate: &SymTensor2) -> f64 {
        let ds = stress.frobenius_norm();
        let dd = rate.frobenius_norm();
        let nonlinear_origin = match self.orientation {
            Orientation::Stress => dd,
            Orientation::Rate => ds,
        };
        match &self.law {
            Law::Bingham { tau, .. } => (ds - tau).abs(),
            Law::HerschelBulkley { tau, .. } => (ds - tau).abs(),
            Law::ActivatedEuler { delta, .. } => (dd - delta).abs(),
            Law::NavierStokes { .. } | Law::Eyring { .. } | Law::Carreau { .. } => f64::INFINITY,
            Law::Seely { .. } => ds,
            Law::Custom {
                law: CustomLaw::SmoothPower | CustomLaw::Zero,
                ..
            } => f64::INFINITY,
            Law::Closure { .. } => f64::INFINITY,
            _ => nonlinear_origin,
        }
    }

    fn is_isotropic(&self) -> bool {
        match &self.law {
            Law::Closure { isotropic, .. } => *isotropic,
            _ => true,
        }
    }
}
