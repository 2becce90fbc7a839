//! Shifted relations `G_eps(S, D) = G(S - eps D, D - eps S)` and their
//! single-valued resolvents `S*_eps(D)` (bulk) and `s*_eps(v)` (wall).
//!
//! For `0 < eps < 1` the map `S -> G_eps(S, D)` is strongly monotone and
//! Lipschitz, so its root is unique; it is computed by damped Newton with a
//! finite-difference Jacobian, Armijo backtracking on `|G_eps|^2`, and a
//! monotone contraction step as fallback at kinks.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RheoError};
use crate::relation::{BoundaryRelation, BulkRelation, Relation};
use crate::sampling::Sampler;
use crate::tensor::{Element, SlipVector, SymTensor2};

/// Root-finder settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    pub max_iter: usize,
    pub tol_abs: f64,
    pub tol_rel: f64,
    /// Initial step length of each line search, in (0, 1].
    pub damping: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            max_iter: 400,
            tol_abs: 1e-13,
            tol_rel: 1e-13,
            damping: 1.0,
        }
    }
}

impl NewtonSettings {
    fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(RheoError::param("max_iter", "must be >= 1"));
        }
        if !(self.tol_abs > 0.0 && self.tol_abs.is_finite()) {
            return Err(RheoError::param("tol_abs", "must be > 0"));
        }
        if !(self.tol_rel >= 0.0 && self.tol_rel.is_finite()) {
            return Err(RheoError::param("tol_rel", "must be >= 0"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(RheoError::param("damping", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// A relation shifted by `eps`, with resolvent settings.
#[derive(Clone, Debug)]
pub struct EpsRelation<R: Relation> {
    base: R,
    eps: f64,
    newton: NewtonSettings,
}

pub type EpsBulkRelation = EpsRelation<BulkRelation>;
pub type EpsBoundaryRelation = EpsRelation<BoundaryRelation>;

/// Result of one resolvent solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolveOutcome<E> {
    pub value: E,
    pub iterations: usize,
    pub residual: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(RheoError::EpsOutOfRange(eps))
    }
}

pub fn make_eps_bulk(base: BulkRelation, eps: f64) -> Result<EpsBulkRelation> {
    EpsRelation::new(base, eps)
}

pub fn make_eps_boundary(base: BoundaryRelation, eps: f64) -> Result<EpsBoundaryRelation> {
    EpsRelation::new(base, eps)
}

type Vec6 = SVector<f64, 6>;
type Mat6 = SMatrix<f64, 6, 6>;

impl<R: Relation> EpsRelation<R> {
    pub fn new(base: R, eps: f64) -> Result<Self> {
        Self::with_settings(base, eps, NewtonSettings::default())
    }

    pub fn with_settings(base: R, eps: f64, newton: NewtonSettings) -> Result<Self> {
        check_eps(eps)?;
        newton.validate()?;
        Ok(EpsRelation { base, eps, newton })
    }

    pub fn base(&self) -> &R {
        &self.base
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn settings(&self) -> &NewtonSettings {
        &self.newton
    }

    /// `G(stress - eps rate, rate - eps stress)`.
    pub fn eval(&self, stress: &R::Elem, rate: &R::Elem) -> Result<R::Elem> {
        let e = self.eps;
        self.base.residual(&(*stress - *rate * e), &(*rate - *stress * e))
    }

    fn tolerance(&self, stress: &R::Elem, rate: &R::Elem) -> f64 {
        self.newton.tol_abs + self.newton.tol_rel * (1.0 + stress.norm() + rate.norm())
    }

    /// Resolve from the default initial guess: the base explicit stress when
    /// available, else zero.
    pub fn resolve(&self, rate: &R::Elem) -> Result<R::Elem> {
        let guess = match self.base.explicit_stress(rate) {
            Ok(s) if s.is_finite() => s,
            _ => rate.zero_like(),
        };
        self.resolve_from(rate, &guess).map(|o| o.value)
    }

    /// Resolve starting from `guess` (e.g. the previous time step).
    pub fn resolve_from(&self, rate: &R::Elem, guess: &R::Elem) -> Result<ResolveOutcome<R::Elem>> {
        if !rate.is_finite() {
            return Err(RheoError::NonFinite("resolvent input"));
        }
        if rate.dot_with(rate) == 0.0 {
            // The root at the origin is exact for every admissible relation.
            let zero = rate.zero_like();
            let r = self.eval(&zero, rate)?.norm();
            if r == 0.0 {
                return Ok(ResolveOutcome {
                    value: zero,
                    iterations: 0,
                    residual: 0.0,
                });
            }
        }
        let guess = if guess.is_finite() { *guess } else { rate.zero_like() };
        self.newton_solve(rate, guess)
    }

    fn residual_vec(&self, s: &R::Elem, rate: &R::Elem) -> Result<(R::Elem, f64)> {
        let r = self.eval(s, rate)?;
        Ok((r, r.norm()))
    }

    fn jacobian(&self, s: &R::Elem, rate: &R::Elem, n: usize) -> Result<Mat6> {
        let (c, _) = s.coords();
        let h = 1e-7 * (1.0 + s.norm() + rate.norm());
        let mut jac = Mat6::identity();
        for j in 0..n {
            let mut cp = c;
            let mut cm = c;
            cp[j] += h;
            cm[j] -= h;
            let rp = self.eval(&s.with_coords(&cp[..n]), rate)?.coords().0;
            let rm = self.eval(&s.with_coords(&cm[..n]), rate)?.coords().0;
            for i in 0..n {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// Up to two extra undamped Newton steps after convergence, each kept only
    /// if it lowers the residual. Removes the error the absolute tolerance
    /// still allows at small magnitudes; harmless at kinks.
    fn polish(&self, rate: &R::Elem, mut s: R::Elem, mut r: R::Elem, mut rn: f64, n: usize) -> (R::Elem, f64) {
        for _ in 0..2 {
            if rn == 0.0 {
                break;
            }
            let Ok(jac) = self.jacobian(&s, rate, n) else { break };
            let rc = r.coords().0;
            let mut rhs = Vec6::zeros();
            for i in 0..n {
                rhs[i] = -rc[i];
            }
            let Some(dir) = jac.lu().solve(&rhs) else { break };
            let (mut tc, _) = s.coords();
            for i in 0..n {
                tc[i] += dir[i];
            }
            let trial = s.with_coords(&tc[..n]);
            match self.residual_vec(&trial, rate) {
                Ok((tr, trn)) if trn < rn => {
                    s = trial;
                    r = tr;
                    rn = trn;
                }
                _ => break,
            }
        }
        (s, rn)
    }

    fn newton_solve(&self, rate: &R::Elem, guess: R::Elem) -> Result<ResolveOutcome<R::Elem>> {
        let n = guess.coords().1;
        let mut s = guess;
        let (mut r, mut rn) = match self.residual_vec(&s, rate) {
            Ok(v) => v,
            Err(_) => {
                s = rate.zero_like();
                self.residual_vec(&s, rate)?
            }
        };
        let armijo = 1e-4;
        for it in 0..self.newton.max_iter {
            if rn <= self.tolerance(&s, rate) {
                let (s, rn) = self.polish(rate, s, r, rn, n);
                return Ok(ResolveOutcome {
                    value: s,
                    iterations: it,
                    residual: rn,
                });
            }
            let jac = self.jacobian(&s, rate, n)?;
            let rc = r.coords().0;
            let mut rhs = Vec6::zeros();
            for i in 0..n {
                rhs[i] = -rc[i];
            }
            let mut accepted = false;
            if let Some(dir) = jac.lu().solve(&rhs) {
                if dir.iter().all(|x| x.is_finite()) {
                    let (sc, _) = s.coords();
                    let mut lambda = self.newton.damping;
                    for _ in 0..40 {
                        let mut tc = sc;
                        for i in 0..n {
                            tc[i] += lambda * dir[i];
                        }
                        let trial = s.with_coords(&tc[..n]);
                        if let Ok((tr, trn)) = self.residual_vec(&trial, rate) {
                            if trn * trn <= (1.0 - 2.0 * armijo * lambda) * rn * rn {
                                s = trial;
                                r = tr;
                                rn = trn;
                                accepted = true;
                                break;
                            }
                        }
                        lambda *= 0.5;
                    }
                }
            }
            if !accepted {
                // Monotone contraction S <- S - lambda G_eps(S, D) with
                // lambda ~ 1/L from the Jacobian norm.
                let lip = jac.norm().max(1e-300);
                let mut lambda = 1.0 / lip;
                for _ in 0..60 {
                    let trial = s - r * lambda;
                    if let Ok((tr, trn)) = self.residual_vec(&trial, rate) {
                        if trn < rn {
                            s = trial;
                            r = tr;
                            rn = trn;
                            accepted = true;
                            break;
                        }
                    }
                    lambda *= 0.5;
                }
            }
            if !accepted {
                break;
            }
        }
        if rn <= self.tolerance(&s, rate) {
            return Ok(ResolveOutcome {
                value: s,
                iterations: self.newton.max_iter,
                residual: rn,
            });
        }
        Err(RheoError::NoConvergence {
            iterations: self.newton.max_iter,
            residual: rn,
        })
    }
}

pub fn resolve_stress(rel: &EpsBulkRelation, rate: &SymTensor2) -> Result<SymTensor2> {
    rel.resolve(rate)
}

pub fn resolve_slip(rel: &EpsBoundaryRelation, slip: &SlipVector) -> Result<SlipVector> {
    rel.resolve(slip)
}

/// Scalar reference solve for radial relations: with `S = sigma e`,
/// `D = magnitude e`, find `sigma >= 0` with `<G_eps(sigma e, D), e> = 0` by
/// bisection. Uses the first coordinate direction in 2D.
pub fn scalar_oracle_resolve<R: Relation>(rel: &EpsRelation<R>, magnitude: f64) -> Result<f64> {
    let mut c = [0.0; 6];
    c[0] = 1.0;
    let template = R::Elem::zero_in(2);
    let n = template.coords().1;
    let e = template.with_coords(&c[..n]);
    scalar_oracle_resolve_along(rel, magnitude, &e)
}

/// As [`scalar_oracle_resolve`] along a given unit direction.
pub fn scalar_oracle_resolve_along<R: Relation>(
    rel: &EpsRelation<R>,
    magnitude: f64,
    direction: &R::Elem,
) -> Result<f64> {
    if !(magnitude.is_finite() && magnitude >= 0.0) {
        return Err(RheoError::param("magnitude", "must be finite and >= 0"));
    }
    let norm = direction.norm();
    if norm == 0.0 {
        return Err(RheoError::param("direction", "must be non-zero"));
    }
    let e = *direction * (1.0 / norm);
    let d = e * magnitude;
    let f = |sigma: f64| -> Result<f64> { Ok(rel.eval(&(e * sigma), &d)?.dot_with(&e)) };
    let f0 = f(0.0)?;
    if f0 == 0.0 {
        return Ok(0.0);
    }
    if f0 > 0.0 {
        return Err(RheoError::BracketFailure(0.0));
    }
    let mut hi = 1.0_f64.max(magnitude);
    let mut grow = 0;
    while f(hi)? <= 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 1100 || !hi.is_finite() {
            return Err(RheoError::BracketFailure(hi));
        }
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of an eps-continuation.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationOutcome<E> {
    pub value: E,
    /// Norm of the last increment `|S_k - S_{k-1}|`.
    pub cauchy_indicator: f64,
    /// All increments along the schedule.
    pub increments: Vec<f64>,
    /// Whether the increments decay (non-increasing up to round-off).
    pub cauchy_trend: bool,
}

/// Geometric schedule `1e-1, 1e-2, ..., 1e-6`.
pub fn default_eps_schedule() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(-k)).collect()
}

/// Solve along a decreasing eps schedule, warm-starting each stage from the
/// previous one.
pub fn continuation_resolve<R: Relation + Clone>(
    base: &R,
    rate: &R::Elem,
    eps_schedule: &[f64],
) -> Result<ContinuationOutcome<R::Elem>> {
    if eps_schedule.is_empty() {
        return Err(RheoError::param("eps_schedule", "must not be empty"));
    }
    for &e in eps_schedule {
        check_eps(e)?;
    }
    if eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(RheoError::param("eps_schedule", "must be strictly decreasing"));
    }
    if *eps_schedule.last().unwrap() < 1e-8 {
        return Err(RheoError::param("eps_schedule", "smallest eps must be >= 1e-8"));
    }
    let mut current: Option<R::Elem> = None;
    let mut increments = Vec::new();
    for &e in eps_schedule {
        let rel = EpsRelation::new(base.clone(), e)?;
        let next = match current {
            None => rel.resolve(rate)?,
            Some(prev) => rel.resolve_from(rate, &prev)?.value,
        };
        if let Some(prev) = current {
            increments.push((next - prev).norm());
        }
        current = Some(next);
    }
    let cauchy_trend = increments.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6) + 1e-12);
    Ok(ContinuationOutcome {
        value: current.unwrap(),
        cauchy_indicator: increments.last().copied().unwrap_or(0.0),
        increments,
        cauchy_trend,
    })
}

/// Sampled constants of a resolvent: Lipschitz bound `C1(eps)`,
/// monotonicity `C2(eps)`, and a coercivity pair `(C~1, C~2)` with
/// exponents `min(2, r)` and `min(2, r')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventConstants {
    pub eps: f64,
    pub lipschitz: f64,
    pub monotone: f64,
    pub coercivity_c1: f64,
    pub coercivity_c2: f64,
}

/// Estimate [`ResolventConstants`] over the sampler's shells.
pub fn estimate_resolvent_constants<R: Relation>(rel: &EpsRelation<R>, sampler: &Sampler) -> Result<ResolventConstants>
where
    R::Elem: Send + Sync,
{
    let mut rng = sampler.rng(0x5EED_0001);
    let mut rates: Vec<R::Elem> = Vec::new();
    let mut idx = 0;
    for &radius in &sampler.radius_schedule {
        for _ in 0..sampler.count {
            rates.push(sampler.point::<R::Elem>(&mut rng, idx, radius));
            idx += 1;
        }
    }
    let stresses: Vec<R::Elem> = rates.par_iter().map(|d| rel.resolve(d)).collect::<Result<Vec<_>>>()?;

    // Pairs: consecutive samples (same or adjacent shell) and a shuffled
    // partner, in fixed order.
    let m = rates.len();
    let mut lip: f64 = 0.0;
    let mut mono = f64::INFINITY;
    let mut partner_rng = sampler.rng(0x5EED_0002);
    use rand::Rng;
    for i in 0..m {
        for j in [(i + 1) % m, partner_rng.random_range(0..m)] {
            let dd = rates[i] - rates[j];
            let dn2 = dd.dot_with(&dd);
            if dn2 == 0.0 {
                continue;
            }
            let ds = stresses[i] - stresses[j];
            lip = lip.max(ds.norm() / dn2.sqrt());
            mono = mono.min(ds.dot_with(&dd) / dn2);
        }
    }
    if !mono.is_finite() {
        mono = 0.0;
    }

    let r = rel.base().growth_exponent();
    let a = r.min(2.0);
    let b = if r > 1.0 { (r / (r - 1.0)).min(2.0) } else { 2.0 };
    let (c1, c2) = young_split(&stresses, &rates, a, b, 0.5, 0.5);
    Ok(ResolventConstants {
        eps: rel.eps(),
        lipschitz: lip,
        monotone: mono,
        coercivity_c1: c1,
        coercivity_c2: c2,
    })
}

/// Coercivity fit `S:D >= C1 (|S|^b + |D|^a) - C2` by splitting
/// `S:D = wd S:D + ws S:D` and bounding each part on the outer samples.
/// Returns `(C1, C2)`.
pub(crate) fn young_split<E: Element>(stresses: &[E], rates: &[E], a: f64, b: f64, wd: f64, ws: f64) -> (f64, f64) {
    let (cd, cs) = outer_ratios(stresses, rates, a, b);
    let cd = floor_sig(cd, 3);
    let cs = floor_sig(cs, 3);
    let mut ed: f64 = 0.0;
    let mut es: f64 = 0.0;
    for (s, d) in stresses.iter().zip(rates) {
        let sd = s.dot_with(d);
        ed = ed.max(cd * d.norm().powf(a) - sd);
        es = es.max(cs * s.norm().powf(b) - sd);
    }
    ((wd * cd).min(ws * cs), wd * ed + ws * es)
}

/// Minimum of `S:D/|D|^a` over samples with `|D|` in the upper half of the
/// sampled range, and of `S:D/|S|^b` likewise for `|S|`.
pub(crate) fn outer_ratios<E: Element>(stresses: &[E], rates: &[E], a: f64, b: f64) -> (f64, f64) {
    let dmax = rates.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let smax = stresses.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let mut cd = f64::INFINITY;
    let mut cs = f64::INFINITY;
    for (s, d) in stresses.iter().zip(rates) {
        let sd = s.dot_with(d);
        let dn = d.norm();
        let sn = s.norm();
        if dn > 0.0 && dn >= 0.5 * dmax {
            cd = cd.min(sd / dn.powf(a));
        }
        if sn > 0.0 && sn >= 0.5 * smax {
            cs = cs.min(sd / sn.powf(b));
        }
    }
    if !cd.is_finite() {
        cd = 0.0;
    }
    if !cs.is_finite() {
        cs = 0.0;
    }
    (cd, cs)
}

/// Round `x` down to `digits` significant digits (towards -inf).
pub(crate) fn floor_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - exp);
    (x * scale).floor() / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Distribution;

    #[test]
    fn shifted_navier_stokes_formula() {
        let rel = make_eps_bulk(BulkRelation::navier_stokes(1.0).unwrap(), 0.1).unwrap();
        let s = SymTensor2::new2(0.3, -0.7, 1.1);
        let d = SymTensor2::new2(-0.2, 0.4, 0.9);
        let g = rel.eval(&s, &d).unwrap();
        let expected = s * 1.2 - d * 2.1;
        assert!((g - expected).frobenius_norm() < 1e-14);
        let z = SymTensor2::zero(2);
        assert_eq!(rel.eval(&z, &z).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn eps_range_enforced() {
        let ns = BulkRelation::navier_stokes(1.0).unwrap();
        for eps in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(
                make_eps_bulk(ns.clone(), eps),
                Err(RheoError::EpsOutOfRange(_))
            ));
        }
    }

    #[test]
    fn small_eps_close_to_base() {
        let ns = BulkRelation::power_law(0.5, 3.0).unwrap();
        let rel = make_eps_bulk(ns.clone(), 1e-8).unwrap();
        let s = SymTensor2::new2(0.3, -0.5, 0.1);
        let d = SymTensor2::new2(-0.2, 0.4, 0.6);
        let diff = rel.eval(&s, &d).unwrap() - ns.residual(&s, &d).unwrap();
        assert!(diff.frobenius_norm() < 1e-6);
    }

    #[test]
    fn navier_stokes_resolvent() {
        let rel = make_eps_bulk(BulkRelation::navier_stokes(1.0).unwrap(), 0.1).unwrap();
        let d = SymTensor2::diag(&[1.0, -1.0]);
        let s = resolve_stress(&rel, &d).unwrap();
        assert!((s - d * 1.75).frobenius_norm() < 1e-9);
        let oracle = scalar_oracle_resolve(&rel, 2f64.sqrt()).unwrap();
        assert!((oracle - 1.75 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(scalar_oracle_resolve(&rel, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn origin_resolves_to_zero() {
        for base in crate::catalog::default_bulk_catalog() {
            let rel = make_eps_bulk(base, 0.1).unwrap();
            let s = resolve_stress(&rel, &SymTensor2::zero(2)).unwrap();
            assert_eq!(s.frobenius_norm(), 0.0);
        }
        for base in crate::catalog::default_boundary_catalog() {
            let rel = make_eps_boundary(base, 0.1).unwrap();
            assert_eq!(resolve_slip(&rel, &SlipVector::zero(2)).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn power_law_close_to_explicit() {
        let rel = make_eps_bulk(BulkRelation::power_law(0.5, 3.0).unwrap(), 1e-3).unwrap();
        let d = SymTensor2::new2(0.6, 0.0, -0.6) * (1.0 / (0.72f64).sqrt());
        let s = resolve_stress(&rel, &d).unwrap();
        assert!((s - d).frobenius_norm() <= 5e-3);
    }

    #[test]
    fn navier_slip_resolvent() {
        let rel = make_eps_boundary(BoundaryRelation::navier_slip(2.0).unwrap(), 0.1).unwrap();
        let s = resolve_slip(&rel, &SlipVector::new2(1.0, 0.0)).unwrap();
        assert!((s - SlipVector::new2(1.75, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn stick_slip_matches_oracle() {
        let rel = make_eps_boundary(BoundaryRelation::stick_slip(1.0).unwrap(), 0.01).unwrap();
        let v = SlipVector::new2(2.0, 0.0);
        let s = resolve_slip(&rel, &v).unwrap();
        assert!(s.norm() > 1.0 && s.norm() < 1.0 + 2.0 * 1.01);
        let oracle = scalar_oracle_resolve(&rel, 2.0).unwrap();
        assert!((s.norm() - oracle).abs() <= 1e-8 * oracle);
    }

    #[test]
    fn bingham_plug_and_flow() {
        let b = BulkRelation::bingham(0.5, 1.0).unwrap();
        let rel = make_eps_bulk(b.clone(), 0.1).unwrap();
        assert_eq!(scalar_oracle_resolve(&rel, 0.0).unwrap(), 0.0);
        let d = SymTensor2::diag(&[1.0, -1.0]);
        let out = continuation_resolve(&b, &d, &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]).unwrap();
        assert!(b.residual(&out.value, &d).unwrap().frobenius_norm() < 1e-5);
        assert!(out.value.frobenius_norm() > 1.0);
        let zero = continuation_resolve(&b, &SymTensor2::zero(2), &[1e-1, 1e-2]).unwrap();
        assert_eq!(zero.value.frobenius_norm(), 0.0);
    }

    #[test]
    fn continuation_navier_stokes() {
        let ns = BulkRelation::navier_stokes(1.0).unwrap();
        let d = SymTensor2::new2(0.5, 0.25, -0.5);
        let out = continuation_resolve(&ns, &d, &[1e-1, 1e-2, 1e-3]).unwrap();
        assert!((out.value - d * 2.0).frobenius_norm() <= 3e-3 * d.frobenius_norm());
        assert!(out.cauchy_trend);
        assert!(continuation_resolve(&ns, &d, &[1e-2, 1e-1]).is_err());
        assert!(continuation_resolve(&ns, &d, &[1e-9]).is_err());
    }

    #[test]
    fn navier_stokes_constants() {
        let rel = make_eps_bulk(BulkRelation::navier_stokes(1.0).unwrap(), 0.1).unwrap();
        let sampler = Sampler::new(3, 16, vec![0.1, 1.0, 10.0], Distribution::GaussianShell, 2).unwrap();
        let c = estimate_resolvent_constants(&rel, &sampler).unwrap();
        assert!((c.lipschitz - 1.75).abs() < 1e-8, "{c:?}");
        assert!((c.monotone - 1.75).abs() < 1e-8, "{c:?}");
        assert!(c.coercivity_c1 > 0.0);
    }

    #[test]
    fn floor_sig_rounds_down() {
        assert_eq!(floor_sig(0.25000000001, 3), 0.25);
        assert_eq!(floor_sig(1.23456, 3), 1.23);
        assert_eq!(floor_sig(0.0, 3), 0.0);
    }
}
