use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bulk::conjugate;
use super::{checked_residual, pos, Orientation, Relation};
use crate::error::{Result, RheoError};
use crate::tensor::{Element, SlipVector};

/// User-supplied residual `g(s, v)`.
pub type BoundaryClosure = Arc<dyn Fn(&SlipVector, &SlipVector) -> SlipVector + Send + Sync>;

/// Catalog of wall relations between traction `s` and slip velocity `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    NavierSlip,
    PowerSlip,
    RegularizedPowerSlip,
    StickSlip,
    ActivatedNavierSlip,
    Custom,
}

impl BoundaryKind {
    pub const ALL: [BoundaryKind; 6] = [
        BoundaryKind::NavierSlip,
        BoundaryKind::PowerSlip,
        BoundaryKind::RegularizedPowerSlip,
        BoundaryKind::StickSlip,
        BoundaryKind::ActivatedNavierSlip,
        BoundaryKind::Custom,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryKind::NavierSlip => "navier_slip",
            BoundaryKind::PowerSlip => "power_slip",
            BoundaryKind::RegularizedPowerSlip => "regularized_power_slip",
            BoundaryKind::StickSlip => "stick_slip",
            BoundaryKind::ActivatedNavierSlip => "activated_navier_slip",
            BoundaryKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.as_str() == s)
    }

    /// Required numeric keys.
    pub fn param_keys(&self) -> &'static [&'static str] {
        match self {
            BoundaryKind::NavierSlip => &["gamma"],
            BoundaryKind::PowerSlip => &["gamma", "q"],
            BoundaryKind::RegularizedPowerSlip => &["gamma", "q"],
            BoundaryKind::StickSlip => &["sigma_star"],
            BoundaryKind::ActivatedNavierSlip => &["gamma", "beta_star"],
            BoundaryKind::Custom => &["q"],
        }
    }

    /// Optional numeric keys.
    pub fn optional_keys(&self) -> &'static [&'static str] {
        match self {
            BoundaryKind::StickSlip => &["gamma"],
            _ => &[],
        }
    }
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Names of the built-in custom wall laws.
pub const CUSTOM_BOUNDARY_LAWS: [&str; 3] = ["zero", "shifted_power", "smooth_power"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CustomLaw {
    Zero,
    ShiftedPower,
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
}

#[derive(Clone)]
enum Law {
    NavierSlip {
        gamma: f64,
    },
    PowerSlip {
        gamma: f64,
        q: f64,
    },
    RegularizedPowerSlip {
        gamma: f64,
        q: f64,
    },
    StickSlip {
        gamma: f64,
        sigma: f64,
    },
    ActivatedNavierSlip {
        gamma: f64,
        beta: f64,
    },
    Custom {
        law: CustomLaw,
        q: f64,
    },
    Closure {
        name: String,
        f: BoundaryClosure,
        isotropic: bool,
    },
}

/// An implicit wall relation `g(s, v) = 0`.
#[derive(Clone)]
pub struct BoundaryRelation {
    kind: BoundaryKind,
    params: BTreeMap<String, f64>,
    law: Law,
    orientation: Orientation,
    growth: f64,
}

impl fmt::Debug for BoundaryRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryRelation")
            .field("kind", &self.kind)
            .field("law", &self.custom_law_name())
            .field("params", &self.params)
            .field("orientation", &self.orientation)
            .field("growth", &self.growth)
            .finish()
    }
}

fn get(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = params
        .get(key)
        .copied()
        .ok_or_else(|| RheoError::param(key, "missing"))?;
    if !v.is_finite() {
        return Err(RheoError::param(key, "must be finite"));
    }
    Ok(v)
}

fn positive(v: f64, key: &str) -> Result<f64> {
    if v <= 0.0 {
        return Err(RheoError::param(key, format!("must be > 0, got {v}")));
    }
    Ok(v)
}

fn non_negative(v: f64, key: &str) -> Result<f64> {
    if v < 0.0 {
        return Err(RheoError::param(key, format!("must be >= 0, got {v}")));
    }
    Ok(v)
}

fn exponent(v: f64, key: &str) -> Result<f64> {
    if v <= 1.0 {
        return Err(RheoError::param(key, format!("must be > 1, got {v}")));
    }
    Ok(v)
}

impl BoundaryRelation {
    /// Build a catalog member; `orientation = None` picks the canonical one.
    pub fn new(kind: BoundaryKind, params: &BTreeMap<String, f64>, orientation: Option<Orientation>) -> Result<Self> {
        if kind == BoundaryKind::Custom {
            return Err(RheoError::param(
                "kind",
                "custom relations need a law; use BoundaryRelation::custom",
            ));
        }
        for key in params.keys() {
            if !kind.param_keys().contains(&key.as_str()) && !kind.optional_keys().contains(&key.as_str()) {
                return Err(RheoError::param(
                    key,
                    format!(
                        "unknown parameter for {kind} (expected one of: {})",
                        kind.param_keys().join(", ")
                    ),
                ));
            }
        }
        let (law, canonical, allowed): (Law, Orientation, &[Orientation]) = match kind {
            BoundaryKind::NavierSlip => (
                Law::NavierSlip {
                    gamma: positive(get(params, "gamma")?, "gamma")?,
                },
                Orientation::Stress,
                &[Orientation::Stress, Orientation::Rate],
            ),
            BoundaryKind::PowerSlip => {
                let q = exponent(get(params, "q")?, "q")?;
                let canonical = if q >= 2.0 {
                    Orientation::Stress
                } else {
                    Orientation::Rate
                };
                (
                    Law::PowerSlip {
                        gamma: positive(get(params, "gamma")?, "gamma")?,
                        q,
                    },
                    canonical,
                    &[Orientation::Stress, Orientation::Rate],
                )
            }
            BoundaryKind::RegularizedPowerSlip => (
                Law::RegularizedPowerSlip {
                    gamma: positive(get(params, "gamma")?, "gamma")?,
                    q: exponent(get(params, "q")?, "q")?,
                },
                Orientation::Stress,
                &[Orientation::Stress],
            ),
            BoundaryKind::StickSlip => {
                let gamma = match params.get("gamma") {
                    Some(_) => positive(get(params, "gamma")?, "gamma")?,
                    None => 1.0,
                };
                (
                    Law::StickSlip {
                        gamma,
                        sigma: non_negative(get(params, "sigma_star")?, "sigma_star")?,
                    },
                    Orientation::Rate,
                    &[Orientation::Rate],
                )
            }
            BoundaryKind::ActivatedNavierSlip => (
                Law::ActivatedNavierSlip {
                    gamma: positive(get(params, "gamma")?, "gamma")?,
                    beta: non_negative(get(params, "beta_star")?, "beta_star")?,
                },
                Orientation::Stress,
                &[Orientation::Stress],
            ),
            BoundaryKind::Custom => unreachable!(),
        };
        let orientation = orientation.unwrap_or(canonical);
        if !allowed.contains(&orientation) {
            return Err(RheoError::param(
                "form",
                format!("{kind} cannot be evaluated in {} form", orientation.as_str()),
            ));
        }
        let growth = match &law {
            Law::PowerSlip { q, .. } | Law::RegularizedPowerSlip { q, .. } => *q,
            _ => 2.0,
        };
        Ok(BoundaryRelation {
            kind,
            params: params.clone(),
            law,
            orientation,
            growth,
        })
    }

    pub fn from_pairs(kind: BoundaryKind, pairs: &[(&str, f64)]) -> Result<Self> {
        let params = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Self::new(kind, &params, None)
    }

    /// Built-in custom wall law with explicit orientation.
    pub fn custom(law: &str, params: &BTreeMap<String, f64>, orientation: Orientation) -> Result<Self> {
        let custom = CustomLaw::parse(law).ok_or_else(|| {
            RheoError::param(
                "law",
                format!(
                    "unknown custom law `{law}` (expected one of: {})",
                    CUSTOM_BOUNDARY_LAWS.join(", ")
                ),
            )
        })?;
        for key in params.keys() {
            if key != "q" {
                return Err(RheoError::param(
                    key,
                    format!("unknown parameter for custom law {law} (expected: q)"),
                ));
            }
        }
        let q = exponent(get(params, "q")?, "q")?;
        Ok(BoundaryRelation {
            kind: BoundaryKind::Custom,
            params: params.clone(),
            law: Law::Custom { law: custom, q },
            orientation,
            growth: q,
        })
    }

    pub fn from_closure(
        name: impl Into<String>,
        growth: f64,
        orientation: Orientation,
        isotropic: bool,
        f: impl Fn(&SlipVector, &SlipVector) -> SlipVector + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(growth > 1.0 && growth.is_finite()) {
            return Err(RheoError::param(
                "q",
                format!("growth exponent must be > 1, got {growth}"),
            ));
        }
        Ok(BoundaryRelation {
            kind: BoundaryKind::Custom,
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

    pub fn navier_slip(gamma: f64) -> Result<Self> {
        Self::from_pairs(BoundaryKind::NavierSlip, &[("gamma", gamma)])
    }

    pub fn power_slip(gamma: f64, q: f64) -> Result<Self> {
        Self::from_pairs(BoundaryKind::PowerSlip, &[("gamma", gamma), ("q", q)])
    }

    pub fn stick_slip(sigma_star: f64) -> Result<Self> {
        Self::from_pairs(BoundaryKind::StickSlip, &[("sigma_star", sigma_star)])
    }

    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn custom_law_name(&self) -> Option<&str> {
        match &self.law {
            Law::Custom { law, .. } => Some(law.as_str()),
            Law::Closure { name, .. } => Some(name.as_str()),
            _ => None,
        }
    }

    pub fn is_serializable(&self) -> bool {
        !matches!(self.law, Law::Closure { .. })
    }

    /// `|s|` as a function of `|v|` when the traction law is explicit.
    fn stress_mag(&self, x: f64) -> Option<f64> {
        Some(match &self.law {
            Law::NavierSlip { gamma } => gamma * x,
            Law::PowerSlip { gamma, q } => gamma * x.powf(q - 1.0),
            Law::RegularizedPowerSlip { gamma, q } => gamma * (1.0 + x * x).powf((q - 2.0) / 2.0) * x,
            Law::ActivatedNavierSlip { gamma, beta } => gamma * pos(x - beta),
            Law::Custom {
                law: CustomLaw::ShiftedPower,
                q,
            } if self.orientation == Orientation::Stress => (1.0 + x).powf(q - 2.0) * x,
            Law::Custom {
                law: CustomLaw::SmoothPower,
                q,
            } if self.orientation == Orientation::Stress => (1.0 + x * x).powf((q - 2.0) / 2.0) * x,
            _ => return None,
        })
    }

    /// `|v|` as a function of `|s|` when the slip law is explicit.
    fn rate_mag(&self, y: f64) -> Option<f64> {
        Some(match &self.law {
            Law::NavierSlip { gamma } => y / gamma,
            Law::PowerSlip { gamma, q } => (y / gamma).powf(1.0 / (q - 1.0)),
            Law::StickSlip { gamma, sigma } => pos(y - sigma) / gamma,
            Law::Custom {
                law: CustomLaw::ShiftedPower,
                q,
            } if self.orientation == Orientation::Rate => (1.0 + y).powf(conjugate(*q) - 2.0) * y,
            Law::Custom {
                law: CustomLaw::SmoothPower,
                q,
            } if self.orientation == Orientation::Rate => (1.0 + y * y).powf((conjugate(*q) - 2.0) / 2.0) * y,
            _ => return None,
        })
    }

    /// Slip speed on the graph for a given traction magnitude.
    pub fn rate_magnitude(&self, stress_mag: f64) -> Option<f64> {
        if let Some(v) = self.rate_mag(stress_mag) {
            return Some(v);
        }
        match &self.law {
            Law::ActivatedNavierSlip { gamma, beta } => {
                if stress_mag > 0.0 {
                    Some(beta + stress_mag / gamma)
                } else {
                    Some(0.0)
                }
            }
            Law::RegularizedPowerSlip { .. }
            | Law::Custom {
                law: CustomLaw::ShiftedPower | CustomLaw::SmoothPower,
                ..
            } => {
                let this = self;
                Some(super::invert_increasing(
                    |x| this.stress_mag(x).unwrap_or(f64::NAN),
                    stress_mag,
                ))
            }
            _ => None,
        }
    }

    /// Traction magnitude on the graph for a given slip speed.
    pub fn stress_magnitude(&self, rate_mag: f64) -> Option<f64> {
        if let Some(v) = self.stress_mag(rate_mag) {
            return Some(v);
        }
        match &self.law {
            Law::StickSlip { gamma, sigma } => {
                if rate_mag > 0.0 {
                    Some(sigma + gamma * rate_mag)
                } else {
                    Some(0.0)
                }
            }
            Law::Custom {
                law: CustomLaw::ShiftedPower | CustomLaw::SmoothPower,
                ..
            } => {
                let this = self;
                Some(super::invert_increasing(
                    |y| this.rate_mag(y).unwrap_or(f64::NAN),
                    rate_mag,
                ))
            }
            _ => None,
        }
    }

    fn raw_residual(&self, s: &SlipVector, v: &SlipVector) -> SlipVector {
        match &self.law {
            Law::Closure { f, .. } => return f(s, v),
            Law::Custom {
                law: CustomLaw::Zero, ..
            } => return SlipVector::zero(s.dim()),
            _ => {}
        }
        match self.orientation {
            Orientation::Stress => {
                let m = self.stress_mag(v.norm()).unwrap_or(f64::NAN);
                *s - v.scaled_to(m)
            }
            Orientation::Rate => {
                let m = self.rate_mag(s.norm()).unwrap_or(f64::NAN);
                s.scaled_to(m) - *v
            }
        }
    }
}

impl Relation for BoundaryRelation {
    type Elem = SlipVector;

    fn kind_name(&self) -> &str {
        self.kind.as_str()
    }

    fn growth_exponent(&self) -> f64 {
        self.growth
    }

    fn orientation(&self) -> Orientation {
        self.orientation
    }

    fn residual(&self, stress: &SlipVector, rate: &SlipVector) -> Result<SlipVector> {
        checked_residual(stress, rate, "boundary relation", || self.raw_residual(stress, rate))
    }

    fn explicit_stress(&self, rate: &SlipVector) -> Result<SlipVector> {
        if !rate.is_finite() {
            return Err(RheoError::NonFinite("explicit traction"));
        }
        let m = self.stress_mag(rate.norm()).ok_or_else(|| RheoError::Unavailable {
            kind: self.kind.as_str().to_string(),
            what: "explicit traction law",
        })?;
        Ok(rate.scaled_to(m))
    }

    fn explicit_rate(&self, stress: &SlipVector) -> Result<SlipVector> {
        if !stress.is_finite() {
            return Err(RheoError::NonFinite("explicit slip"));
        }
        let m = self.rate_mag(stress.norm()).ok_or_else(|| RheoError::Unavailable {
            kind: self.kind.as_str().to_string(),
            what: "explicit slip law",
        })?;
        Ok(stress.scaled_to(m))
    }

    fn kink_distance(&self, stress: &SlipVector, rate: &SlipVector) -> f64 {
        let ds = stress.norm();
        let dv = rate.norm();
        match &self.law {
            Law::NavierSlip { .. } | Law::RegularizedPowerSlip { .. } => f64::INFINITY,
            Law::PowerSlip { .. }
            | Law::Custom {
                law: CustomLaw::ShiftedPower,
                ..
            } => match self.orientation {
                Orientation::Stress => dv,
                Orientation::Rate => ds,
            },
            Law::StickSlip { sigma, .. } => (ds - sigma).abs(),
            Law::ActivatedNavierSlip { beta, .. } => (dv - beta).abs(),
            _ => f64::INFINITY,
        }
    }

    fn is_isotropic(&self) -> bool {
        match &self.law {
            Law::Closure { isotropic, .. } => *isotropic,
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn navier_slip_identity() {
        let n = BoundaryRelation::navier_slip(1.0).unwrap();
        let r = n
            .residual(&SlipVector::new2(1.0, 0.0), &SlipVector::new2(1.0, 0.0))
            .unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn stick_slip_example() {
        let st = BoundaryRelation::stick_slip(1.0).unwrap();
        let r = st
            .residual(&SlipVector::new2(2.0, 0.0), &SlipVector::new2(1.0, 0.0))
            .unwrap();
        assert_eq!(r.norm(), 0.0);
        // Stuck below the threshold.
        let v = st.explicit_rate(&SlipVector::new2(0.5, 0.3)).unwrap();
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn origin_is_on_every_graph() {
        for rel in crate::catalog::default_boundary_catalog() {
            for dim in [2, 3] {
                let z = SlipVector::zero(dim);
                assert_eq!(rel.residual(&z, &z).unwrap().norm(), 0.0, "{:?}", rel);
            }
        }
    }

    #[test]
    fn power_slip_duality() {
        let p = BoundaryRelation::power_slip(2.0, 3.0).unwrap();
        let v = SlipVector::new2(0.7, -1.1);
        let s = p.explicit_stress(&v).unwrap();
        let back = p.explicit_rate(&s).unwrap();
        assert!((back - v).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BoundaryRelation::navier_slip(0.0).is_err());
        assert!(BoundaryRelation::stick_slip(-1.0).is_err());
        assert!(BoundaryRelation::power_slip(1.0, 1.0).is_err());
        assert!(BoundaryRelation::from_pairs(BoundaryKind::NavierSlip, &[("gamma", 1.0), ("q", 2.0)]).is_err());
    }
}
