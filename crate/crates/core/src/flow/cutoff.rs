//! Convective cutoff `phi_delta(s) = phi(delta s)` with the piecewise-linear
//! profile `phi = 1` on `[0,1)`, `2 - s` on `[1,2)` and `0` beyond.

/// Base profile.
pub fn phi(s: f64) -> f64 {
    if s < 1.0 {
        1.0
    } else if s < 2.0 {
        2.0 - s
    } else {
        0.0
    }
}

/// Weight applied at squared speed `sq_speed`. `delta = 0` is the limit
/// configuration in which the cutoff is inactive.
pub fn cutoff(sq_speed: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        1.0
    } else {
        phi(delta * sq_speed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        assert_eq!(cutoff(0.5, 1.0), 1.0);
        assert_eq!(cutoff(1.5, 1.0), 0.5);
        assert_eq!(cutoff(8.0, 0.25), 0.0);
        assert_eq!(cutoff(4.0, 0.25), 1.0);
        assert_eq!(cutoff(1e300, 0.0), 1.0);
        assert_eq!(cutoff(1e6, 1e-12), 1.0);
    }
}
