//! Resolvent audit: solves `G_eps(S, D) = 0` for many sampled rates and
//! measures residuals, agreement with the scalar bisection reference,
//! monotonicity of the map `D -> S` and the spread over random restarts.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::regularization::{scalar_oracle_resolve_along, EpsRelation};
use crate::relation::Relation;
use crate::sampling::{Distribution, Sampler};
use crate::tensor::Element;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventAudit {
    pub kind: String,
    pub eps: f64,
    pub samples: usize,
    /// `max |G_eps(S, D)|` at the returned stresses.
    pub max_residual: f64,
    /// `max |S - sigma e_D| / max(|S|, sigma)` against the scalar reference.
    pub max_oracle_rel: f64,
    /// `min (S1 - S2):(D1 - D2) / (|S1 - S2| |D1 - D2|)` over consecutive
    /// pairs (1 when every pair coincides).
    pub min_monotone: f64,
    /// `max |S_k - S| / max(|S|, 1)` over the random restarts.
    pub max_restart_spread: f64,
}

fn random_like<E: Element>(rng: &mut impl Rng, template: &E, scale: f64) -> E {
    let (_, n) = template.coords();
    let c: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * scale).collect();
    template.with_coords(&c)
}

/// Audit `rel` shifted by `eps` with `count` rates on each shell of `radii`
/// (2D elements) and `restarts` random initial guesses per rate.
pub fn audit_resolvent<R: Relation + Clone>(
    rel: &R,
    eps: f64,
    radii: &[f64],
    count: usize,
    restarts: usize,
    seed: u64,
) -> Result<ResolventAudit> {
    let er = EpsRelation::new(rel.clone(), eps)?;
    let sampler = Sampler::new(seed, count, radii.to_vec(), Distribution::GaussianShell, 2)?;
    let mut rng = sampler.rng(0);
    let rates: Vec<R::Elem> = radii
        .iter()
        .flat_map(|&r| (0..count).map(move |k| (r, k)))
        .map(|(r, k)| sampler.point::<R::Elem>(&mut rng, k, r))
        .collect();

    struct Point<E> {
        stress: E,
        residual: f64,
        oracle_rel: f64,
        spread: f64,
    }
    let points: Vec<Point<R::Elem>> = rates
        .par_iter()
        .enumerate()
        .map(|(idx, d)| -> Result<Point<R::Elem>> {
            let s = er.resolve(d)?;
            let residual = er.eval(&s, d)?.norm();
            let sigma = scalar_oracle_resolve_along(&er, d.norm(), d)?;
            let reference = d.scaled_to(sigma);
            let oracle_rel = (s - reference).norm() / s.norm().max(sigma).max(f64::MIN_POSITIVE);
            let mut local = sampler.rng(1 + idx as u64);
            let scale = s.norm().max(d.norm()).max(1.0);
            let mut spread: f64 = 0.0;
            for _ in 0..restarts {
                let guess = random_like(&mut local, d, scale);
                let other = er.resolve_from(d, &guess)?.value;
                spread = spread.max((other - s).norm() / s.norm().max(1.0));
            }
            Ok(Point {
                stress: s,
                residual,
                oracle_rel,
                spread,
            })
        })
        .collect::<Result<_>>()?;

    let mut min_monotone: f64 = 1.0;
    for k in 1..rates.len() {
        let ds = points[k].stress - points[k - 1].stress;
        let dd = rates[k] - rates[k - 1];
        let denom = ds.norm() * dd.norm();
        if denom > 0.0 {
            min_monotone = min_monotone.min(ds.dot_with(&dd) / denom);
        }
    }
    Ok(ResolventAudit {
        kind: rel.kind_name().to_string(),
        eps,
        samples: rates.len(),
        max_residual: points.iter().map(|p| p.residual).fold(0.0, f64::max),
        max_oracle_rel: points.iter().map(|p| p.oracle_rel).fold(0.0, f64::max),
        min_monotone,
        max_restart_spread: points.iter().map(|p| p.spread).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::BulkRelation;

    #[test]
    fn navier_stokes_audit_is_clean() {
        let a = audit_resolvent(&BulkRelation::navier_stokes(0.5).unwrap(), 0.1, &[1.0], 20, 2, 3).unwrap();
        assert!(a.max_residual < 1e-12, "{a:?}");
        assert!(a.max_oracle_rel < 1e-12, "{a:?}");
        assert!(a.min_monotone > 0.0 && a.max_restart_spread < 1e-12, "{a:?}");
    }
}
