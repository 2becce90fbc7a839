//! Semi-analytic steady and decaying channel profiles, computed from the
//! relations alone (this module does not depend on the flow solver).
//!
//! Conventions: walls at `y = +-H`, flow along x, `S = S_xy (e_x (x) e_y +
//! e_y (x) e_x)` so that `|S| = sqrt(2) |S_xy|` and `du/dy = 2 D_xy`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RheoError};
use crate::relation::{BoundaryRelation, BulkRelation};

/// Oracle families attached to scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    None,
    PoiseuillePowerSlip,
    CouetteStickSlip,
    BinghamChannel,
    StokesDecay,
}

impl OracleKind {
    pub const ALL: [OracleKind; 5] = [
        OracleKind::None,
        OracleKind::PoiseuillePowerSlip,
        OracleKind::CouetteStickSlip,
        OracleKind::BinghamChannel,
        OracleKind::StokesDecay,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            OracleKind::None => "none",
            OracleKind::PoiseuillePowerSlip => "poiseuille_power_slip",
            OracleKind::CouetteStickSlip => "couette_stick_slip",
            OracleKind::BinghamChannel => "bingham_channel",
            OracleKind::StokesDecay => "stokes_decay",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Data an oracle needs, copied out of a scenario.
#[derive(Clone, Debug)]
pub struct OracleInputs {
    pub bulk: BulkRelation,
    pub wall: BoundaryRelation,
    pub half_width: f64,
    pub force: f64,
    /// Tangential wall velocities `[bottom, top]`.
    pub wall_speed: [f64; 2],
    /// Amplitude of the initial decay mode.
    pub amplitude: f64,
    pub t: f64,
}

/// Velocity profile `u(y)` at the requested heights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    /// Slip velocity `u(H) - U` at the walls (bottom, top).
    pub slip: [f64; 2],
    /// Half-width of the unyielded core, when there is one.
    pub plug_half_width: Option<f64>,
}

/// Tolerance of the adaptive quadrature.
pub const QUAD_TOL: f64 = 1e-10;

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

fn bulk_rate(bulk: &BulkRelation, stress_mag: f64) -> Result<f64> {
    bulk.rate_magnitude(stress_mag).ok_or(RheoError::Unavailable {
        kind: bulk.kind().as_str().to_string(),
        what: "rate magnitude map",
    })
}

fn wall_rate(wall: &BoundaryRelation, traction: f64) -> Result<f64> {
    wall.rate_magnitude(traction).ok_or(RheoError::Unavailable {
        kind: wall.kind().as_str().to_string(),
        what: "slip magnitude map",
    })
}

/// `|du/dy|` where the shear stress magnitude is `tau = |S_xy|`.
fn shear_rate(bulk: &BulkRelation, tau: f64) -> Result<f64> {
    Ok(std::f64::consts::SQRT_2 * bulk_rate(bulk, std::f64::consts::SQRT_2 * tau)?)
}

/// Largest `y` in `[0, h]` with zero shear rate at `|S_xy| = f y`.
fn plug_edge(bulk: &BulkRelation, f: f64, h: f64) -> Result<Option<f64>> {
    if shear_rate(bulk, f * h * 1e-12)? > 0.0 {
        return Ok(None);
    }
    if shear_rate(bulk, f * h)? == 0.0 {
        return Ok(Some(h));
    }
    let (mut lo, mut hi) = (h * 1e-12, h);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shear_rate(bulk, f * mid)? == 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * h {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Steady pressure-driven profile: `S_xy(y) = -f y`,
/// `u(y) = U + v_slip + int_{|y|}^{H} |du/dy|(f s) ds` with
/// `v_slip` from the wall relation at traction `f H`. Both walls must be at
/// rest relative to each other.
pub fn analytic_poiseuille(
    bulk: &BulkRelation,
    wall: &BoundaryRelation,
    half_width: f64,
    force: f64,
    ys: &[f64],
) -> Result<Profile> {
    if !(half_width > 0.0) {
        return Err(RheoError::Config("channel half-width must be positive".into()));
    }
    let f = force.abs();
    let sign = force.signum();
    if f == 0.0 {
        return Ok(Profile {
            y: ys.to_vec(),
            u: vec![0.0; ys.len()],
            slip: [0.0; 2],
            plug_half_width: None,
        });
    }
    let v_slip = wall_rate(wall, f * half_width)?;
    let integrand = |s: f64| shear_rate(bulk, f * s);
    let plug = plug_edge(bulk, f, half_width)?;
    let mut u = Vec::with_capacity(ys.len());
    for &y in ys {
        let a = y.abs().min(half_width);
        // Split at the plug edge so the kink sits on a panel boundary.
        let val = match plug {
            Some(p) if p > a && p < half_width => adaptive_simpson(&integrand, p, half_width, QUAD_TOL)?,
            _ => adaptive_simpson(&integrand, a, half_width, QUAD_TOL)?,
        };
        u.push(sign * (v_slip + val));
    }
    Ok(Profile {
        y: ys.to_vec(),
        u,
        slip: [sign * v_slip; 2],
        plug_half_width: plug,
    })
}

/// Steady shear-driven profile between walls moving at `[U_b, U_t]`
/// without body force: constant shear stress `tau` fixed by
/// `U_t - U_b = sign (2 w(|tau|) + 2 H |du/dy|(|tau|))`.
pub fn analytic_couette(
    bulk: &BulkRelation,
    wall: &BoundaryRelation,
    half_width: f64,
    wall_speed: [f64; 2],
    ys: &[f64],
) -> Result<Profile> {
    let du = wall_speed[1] - wall_speed[0];
    let sign = du.signum();
    let target = du.abs();
    let total =
        |tau: f64| -> Result<f64> { Ok(2.0 * wall_rate(wall, tau)? + 2.0 * half_width * shear_rate(bulk, tau)?) };
    let tau = if target == 0.0 {
        0.0
    } else {
        let mut hi = 1.0;
        let mut guard = 0;
        while total(hi)? < target {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(RheoError::BracketFailure(target));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let slip = wall_rate(wall, tau)?;
    let rate = shear_rate(bulk, tau)?;
    let u = ys
        .iter()
        .map(|&y| wall_speed[0] + sign * (slip + rate * (y + half_width)))
        .collect();
    Ok(Profile {
        y: ys.to_vec(),
        u,
        slip: [sign * slip, -sign * slip],
        plug_half_width: None,
    })
}

/// Smallest positive root of `mu k tan(k H) = gamma` (slowest decay mode of
/// a linear fluid with linear slip); `pi/(2H)` in the no-slip limit.
pub fn robin_wavenumber(mu: f64, gamma: f64, half_width: f64) -> f64 {
    let upper = std::f64::consts::FRAC_PI_2 / half_width;
    if !(mu > 0.0) || !gamma.is_finite() {
        return upper;
    }
    if gamma <= 0.0 {
        return 0.0;
    }
    let f = |k: f64| mu * k * (k * half_width).tan() - gamma;
    let (mut lo, mut hi) = (0.0, upper * (1.0 - 1e-15));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Linear coefficients `(mu, gamma)` with `S = 2 mu D`, `s = gamma v`.
pub fn linear_coefficients(bulk: &BulkRelation, wall: &BoundaryRelation) -> Result<(f64, f64)> {
    let mu = bulk.stress_magnitude(1.0).ok_or(RheoError::Unavailable {
        kind: bulk.kind().as_str().to_string(),
        what: "stress magnitude map",
    })? / 2.0;
    let gamma = wall.stress_magnitude(1.0).ok_or(RheoError::Unavailable {
        kind: wall.kind().as_str().to_string(),
        what: "traction magnitude map",
    })?;
    for (scale, name) in [(0.1, "bulk"), (10.0, "bulk")] {
        let m = bulk.stress_magnitude(scale).unwrap_or(f64::NAN) / (2.0 * scale);
        if (m - mu).abs() > 1e-12 * mu {
            return Err(RheoError::Config(format!("{name} relation is not linear")));
        }
    }
    for scale in [0.1, 10.0] {
        let gm = wall.stress_magnitude(scale).unwrap_or(f64::NAN) / scale;
        if (gm - gamma).abs() > 1e-12 * gamma {
            return Err(RheoError::Config("wall relation is not linear".into()));
        }
    }
    Ok((mu, gamma))
}

/// `u(y, t) = A exp(-mu k^2 t) cos(k y)` for linear bulk and wall laws.
pub fn stokes_decay(
    bulk: &BulkRelation,
    wall: &BoundaryRelation,
    half_width: f64,
    amplitude: f64,
    t: f64,
    ys: &[f64],
) -> Result<Profile> {
    let (mu, gamma) = linear_coefficients(bulk, wall)?;
    let k = robin_wavenumber(mu, gamma, half_width);
    let a = amplitude * (-mu * k * k * t).exp();
    let u = ys.iter().map(|&y| a * (k * y).cos()).collect();
    let uw = a * (k * half_width).cos();
    Ok(Profile {
        y: ys.to_vec(),
        u,
        slip: [uw, uw],
        plug_half_width: None,
    })
}

/// Evaluate the oracle of `kind`; `None` yields `Ok(None)`.
pub fn evaluate(kind: OracleKind, inputs: &OracleInputs, ys: &[f64]) -> Result<Option<Profile>> {
    let h = inputs.half_width;
    match kind {
        OracleKind::None => Ok(None),
        OracleKind::PoiseuillePowerSlip | OracleKind::BinghamChannel => {
            if inputs.wall_speed != [0.0, 0.0] {
                return Err(RheoError::Config("pressure-driven oracle needs walls at rest".into()));
            }
            analytic_poiseuille(&inputs.bulk, &inputs.wall, h, inputs.force, ys).map(Some)
        }
        OracleKind::CouetteStickSlip => {
            if inputs.force != 0.0 {
                return Err(RheoError::Config("shear-driven oracle needs zero body force".into()));
            }
            analytic_couette(&inputs.bulk, &inputs.wall, h, inputs.wall_speed, ys).map(Some)
        }
        OracleKind::StokesDecay => {
            if inputs.force != 0.0 || inputs.wall_speed != [0.0, 0.0] {
                return Err(RheoError::Config("decay oracle needs no forcing".into()));
            }
            stokes_decay(&inputs.bulk, &inputs.wall, h, inputs.amplitude, inputs.t, ys).map(Some)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ys(n: usize) -> Vec<f64> {
        (0..n).map(|j| -1.0 + (j as f64 + 0.5) * 2.0 / n as f64).collect()
    }

    #[test]
    fn simpson_polynomials_and_kinks() {
        let f = |x: f64| Ok(x * x * x - x);
        assert!((adaptive_simpson(&f, 0.0, 2.0, 1e-12).unwrap() - 2.0).abs() < 1e-12);
        let g = |x: f64| Ok((x - 0.3f64).max(0.0));
        assert!((adaptive_simpson(&g, 0.0, 1.0, 1e-12).unwrap() - 0.245).abs() < 1e-9);
    }

    #[test]
    fn navier_stokes_navier_slip_closed_form() {
        let bulk = BulkRelation::navier_stokes(1.0).unwrap();
        let wall = BoundaryRelation::navier_slip(1.0).unwrap();
        let y = ys(16);
        let p = analytic_poiseuille(&bulk, &wall, 1.0, 1.0, &y).unwrap();
        for (yy, u) in y.iter().zip(&p.u) {
            let exact = (1.0 - yy * yy) / 2.0 + 1.0;
            assert!((u - exact).abs() < 1e-9, "{yy}: {u} vs {exact}");
        }
        assert_eq!(p.slip, [1.0, 1.0]);
        assert!(p.plug_half_width.is_none());
    }

    #[test]
    fn power_law_closed_form() {
        // S = 2 nu0 |D| D: |du/dy| = sqrt(2) (sqrt(2) f y / (2 nu0))^(1/2).
        let nu0 = 0.5;
        let bulk = BulkRelation::power_law(nu0, 3.0).unwrap();
        let wall = BoundaryRelation::power_slip(1.0, 3.0).unwrap();
        let y = ys(8);
        let p = analytic_poiseuille(&bulk, &wall, 1.0, 1.0, &y).unwrap();
        let c = std::f64::consts::SQRT_2 * (std::f64::consts::SQRT_2 / (2.0 * nu0)).sqrt();
        let slip = wall.rate_magnitude(1.0).unwrap();
        for (yy, u) in y.iter().zip(&p.u) {
            let exact = slip + c * 2.0 / 3.0 * (1.0 - yy.abs().powf(1.5));
            assert!((u - exact).abs() < 1e-8, "{yy}: {u} vs {exact}");
        }
    }

    #[test]
    fn zero_force_is_rest() {
        let bulk = BulkRelation::navier_stokes(1.0).unwrap();
        let wall = BoundaryRelation::navier_slip(1.0).unwrap();
        let p = analytic_poiseuille(&bulk, &wall, 1.0, 0.0, &ys(4)).unwrap();
        assert!(p.u.iter().all(|u| *u == 0.0));
    }

    #[test]
    fn bingham_plug() {
        let bulk = BulkRelation::bingham(0.5, 0.5).unwrap();
        let wall = BoundaryRelation::navier_slip(1.0).unwrap();
        let y = ys(32);
        let p = analytic_poiseuille(&bulk, &wall, 1.0, 1.0, &y).unwrap();
        let yp = p.plug_half_width.unwrap();
        assert!((yp - 0.5 / std::f64::consts::SQRT_2).abs() < 1e-12);
        let core: Vec<f64> = y
            .iter()
            .zip(&p.u)
            .filter(|(y, _)| y.abs() <= yp)
            .map(|(_, u)| *u)
            .collect();
        assert!(core.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
    }

    #[test]
    fn couette_stick_and_slip() {
        let bulk = BulkRelation::navier_stokes(0.5).unwrap();
        let wall = BoundaryRelation::stick_slip(1.0).unwrap();
        let y = ys(8);
        // Small wall speed: traction below threshold, no slip, linear profile.
        let p = analytic_couette(&bulk, &wall, 1.0, [-0.25, 0.25], &y).unwrap();
        assert_eq!(p.slip, [0.0, 0.0]);
        for (yy, u) in y.iter().zip(&p.u) {
            assert!((u - 0.25 * yy).abs() < 1e-12);
        }
        // Large wall speed: slipping.
        let p = analytic_couette(&bulk, &wall, 1.0, [-3.0, 3.0], &y).unwrap();
        assert!(p.slip[0] > 0.0);
        let tau = 0.5 * (p.u[1] - p.u[0]) / (y[1] - y[0]);
        assert!(tau > 1.0);
    }

    #[test]
    fn decay_mode_wavenumber() {
        let k = robin_wavenumber(1.0, 1.0, 1.0);
        assert!((k * k.tan() - 1.0).abs() < 1e-12);
        let k = robin_wavenumber(1.0, 1e12, 1.0);
        assert!((k - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }
}
