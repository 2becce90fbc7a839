//! Secant coefficients of the regularized relations used by the solver.
//!
//! For an isotropic relation the resolvent `S = S*_eps(D)` is collinear with
//! `D`, so `|S|` solves the monotone scalar equation
//! `<G_eps(sigma e, d e), e> = 0` along any unit direction `e`. The solver
//! uses the secant coefficient `mu = |S| / (factor |D|)` (`factor = 2` for
//! the bulk, `1` for the wall), which reproduces the resolvent exactly at the
//! evaluation point.

use crate::error::{Result, RheoError};
use crate::regularization::EpsRelation;
use crate::relation::{BoundaryRelation, BulkRelation, Relation};
use crate::tensor::{Element, SlipVector, SymTensor2};

/// Below this rate magnitude the secant coefficient is frozen at its value at
/// the threshold (the regularized law is linear near the origin).
pub const RATE_FLOOR: f64 = 1e-12;

pub struct ScalarLaw<R: Relation> {
    rel: EpsRelation<R>,
    dir: R::Elem,
    factor: f64,
    mu_floor: f64,
}

pub type BulkLaw = ScalarLaw<BulkRelation>;
pub type WallLaw = ScalarLaw<BoundaryRelation>;

impl BulkLaw {
    pub fn bulk(base: BulkRelation, eps: f64) -> Result<Self> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ScalarLaw::new(base, eps, SymTensor2::new2(0.0, s, 0.0), 2.0)
    }
}

impl WallLaw {
    pub fn wall(base: BoundaryRelation, eps: f64) -> Result<Self> {
        ScalarLaw::new(base, eps, SlipVector::new2(1.0, 0.0), 1.0)
    }
}

impl<R: Relation> ScalarLaw<R> {
    fn new(base: R, eps: f64, dir: R::Elem, factor: f64) -> Result<Self> {
        if !base.is_isotropic() {
            return Err(RheoError::Config(format!(
                "relation `{}` is not isotropic; the channel solver needs isotropic laws",
                base.kind_name()
            )));
        }
        let rel = EpsRelation::new(base, eps)?;
        let mut law = ScalarLaw {
            rel,
            dir,
            factor,
            mu_floor: 0.0,
        };
        let sigma = law.stress_mag(RATE_FLOOR, None)?;
        law.mu_floor = sigma / (factor * RATE_FLOOR);
        Ok(law)
    }

    pub fn eps(&self) -> f64 {
        self.rel.eps()
    }

    pub fn relation(&self) -> &EpsRelation<R> {
        &self.rel
    }

    fn g(&self, sigma: f64, d: f64) -> Result<f64> {
        Ok(self.rel.eval(&(self.dir * sigma), &(self.dir * d))?.dot_with(&self.dir))
    }

    /// `|S*_eps(D)|` for `|D| = d`; `guess` warm-starts the bracket.
    pub fn stress_mag(&self, d: f64, guess: Option<f64>) -> Result<f64> {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(RheoError::NonFinite("rate magnitude"));
        }
        if d == 0.0 {
            return Ok(0.0);
        }
        let f0 = self.g(0.0, d)?;
        if f0 >= 0.0 {
            if f0 == 0.0 {
                return Ok(0.0);
            }
            return Err(RheoError::BracketFailure(d));
        }
        let (mut lo, mut flo) = (0.0, f0);
        let mut hi = match guess {
            Some(g) if g > 0.0 && g.is_finite() => {
                let a = 0.9 * g;
                let fa = self.g(a, d)?;
                if fa <= 0.0 {
                    lo = a;
                    flo = fa;
                }
                1.1 * g
            }
            _ => d.max(1e-300) * self.factor.max(1.0) + d,
        };
        let mut fhi = self.g(hi, d)?;
        let mut expansions = 0;
        while fhi < 0.0 {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            fhi = self.g(hi, d)?;
            expansions += 1;
            if expansions > 2000 || !hi.is_finite() {
                return Err(RheoError::BracketFailure(d));
            }
        }
        brent(|s| self.g(s, d), lo, hi, flo, fhi)
    }

    /// Secant coefficient and stress magnitude at `|D| = d`.
    pub fn secant(&self, d: f64, guess: Option<f64>) -> Result<(f64, f64)> {
        if d <= RATE_FLOOR {
            return Ok((self.mu_floor, self.mu_floor * self.factor * d));
        }
        let sigma = self.stress_mag(d, guess)?;
        Ok((sigma / (self.factor * d), sigma))
    }

    /// Tangent coefficient `(d|S|/d|D|) / factor` at `|D| = d`, where
    /// `sigma = |S*_eps|` has already been resolved. Obtained by implicit
    /// differentiation of the scalar equation; falls back to the secant
    /// coefficient where the difference quotients degenerate.
    pub fn tangent(&self, d: f64, sigma: f64) -> Result<f64> {
        if d <= RATE_FLOOR {
            return Ok(self.mu_floor);
        }
        let secant = sigma / (self.factor * d);
        let hs = 1e-6 * sigma.max(self.mu_floor * self.factor * d).max(1e-300);
        let hd = 1e-6 * d;
        let (lo, hi) = if sigma > hs {
            (sigma - hs, sigma + hs)
        } else {
            (sigma, sigma + hs)
        };
        let g_sigma = (self.g(hi, d)? - self.g(lo, d)?) / (hi - lo);
        let g_d = (self.g(sigma, d + hd)? - self.g(sigma, d - hd)?) / (2.0 * hd);
        let slope = -g_d / g_sigma;
        if slope.is_finite() && slope >= 0.0 {
            Ok(slope / self.factor)
        } else {
            Ok(secant)
        }
    }

    /// Coefficient used at (near) zero rate.
    pub fn mu_floor(&self) -> f64 {
        self.mu_floor
    }
}

/// Brent's method on a bracket with `f(a) <= 0 <= f(b)`.
pub(crate) fn brent(f: impl Fn(f64) -> Result<f64>, a0: f64, b0: f64, fa0: f64, fb0: f64) -> Result<f64> {
    let (mut a, mut b, mut fa, mut fb) = (a0, b0, fa0, fb0);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(RheoError::NoConvergence {
        iterations: 300,
        residual: fb.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_bulk_catalog;
    use crate::regularization::resolve_stress;

    #[test]
    fn navier_stokes_secant_is_closed_form() {
        let law = BulkLaw::bulk(BulkRelation::navier_stokes(0.5).unwrap(), 0.1).unwrap();
        let expect = (2.0 * 0.5 + 0.1) / (1.0 + 2.0 * 0.5 * 0.1) / 2.0;
        for d in [1e-14, 1e-3, 1.0, 1e3] {
            let (mu, _) = law.secant(d, None).unwrap();
            assert!((mu - expect).abs() < 1e-12, "{d}: {mu}");
        }
    }

    #[test]
    fn matches_tensor_resolvent() {
        for rel in default_bulk_catalog() {
            let eps = 1e-2;
            let law = BulkLaw::bulk(rel.clone(), eps).unwrap();
            let e = crate::regularization::make_eps_bulk(rel, eps).unwrap();
            for d in [SymTensor2::new2(0.3, 0.2, -0.3), SymTensor2::new2(-2.0, 1.0, 2.0)] {
                let s = resolve_stress(&e, &d).unwrap();
                let (mu, sigma) = law.secant(d.norm(), None).unwrap();
                let s2 = d * (2.0 * mu);
                assert!(
                    (s - s2).norm() <= 1e-8 * (1.0 + s.norm()),
                    "{}",
                    law.relation().base().kind_name()
                );
                assert!((sigma - s.norm()).abs() <= 1e-8 * (1.0 + sigma));
            }
        }
    }

    #[test]
    fn warm_start_agrees() {
        let law = BulkLaw::bulk(BulkRelation::bingham(0.5, 1.0).unwrap(), 1e-3).unwrap();
        let cold = law.stress_mag(0.7, None).unwrap();
        let warm = law.stress_mag(0.7, Some(cold * 3.0)).unwrap();
        assert!((cold - warm).abs() <= 1e-12 * cold);
    }

    #[test]
    fn wall_secant_navier() {
        let law = WallLaw::wall(BoundaryRelation::navier_slip(2.0).unwrap(), 0.1).unwrap();
        let (k, _) = law.secant(0.5, None).unwrap();
        assert!((k - 2.1 / 1.2).abs() < 1e-12);
    }
}
