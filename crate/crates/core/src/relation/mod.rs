//! Implicit constitutive relations `G(S, D) = 0` (bulk) and `g(s, v) = 0`
//! (wall), evaluated pointwise.
//!
//! Every catalog member has one canonical sign convention: the residual is
//! non-decreasing in its stress-like argument and non-increasing in its
//! rate-like argument. Members given by an explicit law `S = S*(D)` use
//! `G = S - S*(D)`; members given by `D = D*(S)` use `G = D*(S) - D`.

mod boundary;
mod bulk;
pub mod kv;

pub use boundary::{BoundaryKind, BoundaryRelation};
pub use bulk::{BulkKind, BulkRelation, DissipationSplit};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RheoError};
use crate::tensor::Element;

/// Which residual form a relation is evaluated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `G = S - S*(D)`, or the viscosity form `S - D / psi(|S|)` for
    /// members that only have a fluidity law.
    Stress,
    /// `G = D*(S) - D`.
    Rate,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::Stress => "stress",
            Orientation::Rate => "rate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stress" => Some(Orientation::Stress),
            "rate" => Some(Orientation::Rate),
            _ => None,
        }
    }
}

/// Interface shared by bulk and wall relations. The first argument of
/// `residual` is the stress-like quantity (`S` or `s`), the second the
/// rate-like one (`D` or `v`).
pub trait Relation: Send + Sync {
    type Elem: Element;

    fn kind_name(&self) -> &str;

    /// Coercivity exponent (`r` for bulk, `q` for the wall).
    fn growth_exponent(&self) -> f64;

    fn orientation(&self) -> Orientation;

    fn residual(&self, stress: &Self::Elem, rate: &Self::Elem) -> Result<Self::Elem>;

    fn explicit_stress(&self, rate: &Self::Elem) -> Result<Self::Elem>;

    fn explicit_rate(&self, stress: &Self::Elem) -> Result<Self::Elem>;

    /// Distance from `(stress, rate)` to the set where the residual is not
    /// differentiable, measured on the magnitude of the offending argument.
    fn kink_distance(&self, stress: &Self::Elem, rate: &Self::Elem) -> f64;

    /// Whether the residual commutes with rotations (true for every catalog
    /// member; closures may opt out).
    fn is_isotropic(&self) -> bool;
}

/// Checked evaluation: matching dimensions and finite inputs.
pub(crate) fn checked_residual<E: Element>(
    stress: &E,
    rate: &E,
    what: &'static str,
    f: impl FnOnce() -> E,
) -> Result<E> {
    if stress.space_dim() != rate.space_dim() {
        return Err(RheoError::DimensionMismatch {
            left: stress.space_dim(),
            right: rate.space_dim(),
        });
    }
    if !stress.is_finite() || !rate.is_finite() {
        return Err(RheoError::NonFinite(what));
    }
    let out = f();
    if !out.is_finite() {
        return Err(RheoError::NonFinite(what));
    }
    Ok(out)
}

/// `S - D / psi(|S|)`, the viscosity form of a fluidity law `D = psi(|S|) S`.
/// The ratio `|S| / rate_mag(|S|)` is the secant viscosity `2 nu`.
pub(crate) fn viscosity_form<E: Element>(stress: &E, rate: &E, rate_mag: f64) -> E {
    let sn = stress.norm();
    if rate.norm() == 0.0 {
        return *stress;
    }
    let two_nu = if rate_mag > 0.0 { sn / rate_mag } else { f64::INFINITY };
    *stress - *rate * two_nu
}

/// Positive part.
pub(crate) fn pos(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Invert a continuous strictly increasing map `f: [0, inf) -> [0, inf)` with
/// `f(0) = 0` by bracketed bisection.
pub(crate) fn invert_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0_f64.max(target);
    let mut guard = 0;
    while f(hi) < target && guard < 400 {
        hi *= 2.0;
        guard += 1;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_increasing_cubic() {
        let x = invert_increasing(|x| x * x * x + x, 10.0);
        assert!((x * x * x + x - 10.0).abs() < 1e-12);
        assert_eq!(invert_increasing(|x| x, 0.0), 0.0);
    }

    #[test]
    fn orientation_round_trip() {
        for o in [Orientation::Stress, Orientation::Rate] {
            assert_eq!(Orientation::parse(o.as_str()), Some(o));
        }
        assert_eq!(Orientation::parse("sideways"), None);
    }
}
