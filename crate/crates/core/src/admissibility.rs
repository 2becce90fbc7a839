//! Sampling-based verification of the admissibility conditions for bulk and
//! wall relations:
//!
//! * `G1` — Lipschitz continuity and `G(0,0) = 0`;
//! * `G2` — derivative sign conditions at graph points away from kinks;
//! * `G2star` — monotonicity of the graph, `(S1-S2):(D1-D2) >= 0`;
//! * `G3` — asymptotic sign of `G:S` (or `G:D`) along rays;
//! * `G4` — coercivity `S:D >= C1 (|S|^r' + |D|^r) - C2` on the graph.
//!
//! The same code checks wall relations (`g1`–`g4`) in vector algebra. All
//! sampling is deterministic in the sampler seed; parallel evaluation is
//! reduced in sample order.

use std::collections::BTreeMap;

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RheoError};
use crate::regularization::{continuation_resolve, floor_sig, young_split, EpsRelation, ResolventConstants};
use crate::relation::{BoundaryRelation, BulkRelation, Relation};
use crate::sampling::Sampler;
use crate::tensor::Element;

/// Absolute tolerance of every sign test.
pub const SIGN_TOL: f64 = 1e-7;
/// Default relative finite-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Number of random Rayleigh probes per sign test.
pub const PROBES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    G1,
    G2,
    #[serde(rename = "G2star")]
    G2Star,
    G3,
    G4,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::G1 => "G1",
            Condition::G2 => "G2",
            Condition::G2Star => "G2star",
            Condition::G3 => "G3",
            Condition::G4 => "G4",
        }
    }
}

/// A sampled `(stress, rate)` point, stored as raw components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessPoint {
    pub stress: Vec<f64>,
    pub rate: Vec<f64>,
}

impl WitnessPoint {
    fn of<E: Element>(s: &E, d: &E) -> Self {
        WitnessPoint {
            stress: s.raw(),
            rate: d.raw(),
        }
    }

    /// Rebuild the sampled elements.
    pub fn elements<E: Element>(&self, dim: usize) -> (E, E) {
        (E::from_raw(dim, &self.stress), E::from_raw(dim, &self.rate))
    }
}

/// The sample achieving the worst margin of a check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Which inequality the margin refers to.
    pub description: String,
    /// Signed margin; negative means violated (for `>=`-type tests).
    pub margin: f64,
    pub points: Vec<WitnessPoint>,
    /// Probe direction (orthonormal coordinates) for derivative tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Vec<f64>>,
}

/// Outcome of one admissibility check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub condition: Condition,
    pub passed: bool,
    /// Set when a finite sample cannot decide (asymptotic checks only).
    pub inconclusive: bool,
    pub estimated_constants: BTreeMap<String, f64>,
    pub worst_witness: Option<Witness>,
    /// Non-fatal observations, e.g. `superlinear_growth`.
    pub flags: Vec<String>,
    /// Per-shell series backing the constants.
    pub details: BTreeMap<String, Vec<f64>>,
    pub samples: usize,
}

impl AdmissibilityReport {
    fn new(condition: Condition) -> Self {
        AdmissibilityReport {
            condition,
            passed: false,
            inconclusive: false,
            estimated_constants: BTreeMap::new(),
            worst_witness: None,
            flags: Vec::new(),
            details: BTreeMap::new(),
            samples: 0,
        }
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.estimated_constants.get(key).copied()
    }
}

// ---------------------------------------------------------------------------
// Graph points

/// Graph points laid out as `dirs` directions times the radius schedule, so
/// that consecutive entries of one direction form radial pairs.
struct GraphSet<E> {
    points: Vec<(E, E)>,
    radii: usize,
}

fn graph_point<R: Relation + Clone>(rel: &R, input: R::Elem, rate_input: bool) -> Result<(R::Elem, R::Elem)> {
    let from_rate = |d: R::Elem| rel.explicit_stress(&d).map(|s| (s, d));
    let from_stress = |s: R::Elem| rel.explicit_rate(&s).map(|d| (s, d));
    let first = if rate_input {
        from_rate(input)
    } else {
        from_stress(input)
    };
    if let Ok(p) = first {
        return Ok(p);
    }
    let second = if rate_input {
        from_stress(input)
    } else {
        from_rate(input)
    };
    if let Ok(p) = second {
        return Ok(p);
    }
    // Implicit-only relation: approach the graph through the regularized
    // resolvents.
    let out = continuation_resolve(rel, &input, &[1e-2, 1e-4, 1e-6])?;
    let s = out.value;
    let res = rel.residual(&s, &input)?.norm();
    let tol = 1e-5 * (1.0 + s.norm() + input.norm());
    if res > tol {
        return Err(RheoError::NotGraphPoint { residual: res, tol });
    }
    Ok((s, input))
}

fn graph_set<R: Relation + Clone>(rel: &R, sampler: &Sampler, stream: u64) -> Result<GraphSet<R::Elem>> {
    let mut rng = sampler.rng(stream);
    let dirs: Vec<R::Elem> = (0..sampler.count).map(|j| sampler.direction(&mut rng, j)).collect();
    let radii = &sampler.radius_schedule;
    let rows: Vec<Vec<(R::Elem, R::Elem)>> = dirs
        .par_iter()
        .enumerate()
        .map(|(j, dir)| {
            radii
                .iter()
                .map(|&rho| graph_point(rel, *dir * rho, j % 2 == 0))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphSet {
        points: rows.into_iter().flatten().collect(),
        radii: radii.len(),
    })
}

// ---------------------------------------------------------------------------
// (G1)

/// Lipschitz estimate over perturbation pairs on each shell.
pub fn check_lipschitz<R: Relation>(rel: &R, sampler: &Sampler) -> AdmissibilityReport {
    let mut rep = AdmissibilityReport::new(Condition::G1);
    let zero = R::Elem::zero_in(sampler.dim);
    match rel.residual(&zero, &zero) {
        Ok(g) if g.norm() == 0.0 => {}
        Ok(g) => {
            rep.worst_witness = Some(Witness {
                description: "G(0,0) = 0".into(),
                margin: -g.norm(),
                points: vec![WitnessPoint::of(&zero, &zero)],
                probe: None,
            });
            rep.flags.push("origin_not_on_graph".into());
            return rep;
        }
        Err(_) => {
            rep.worst_witness = Some(Witness {
                description: "finite evaluation at the origin".into(),
                margin: f64::NEG_INFINITY,
                points: vec![WitnessPoint::of(&zero, &zero)],
                probe: None,
            });
            return rep;
        }
    }

    let mut rng = sampler.rng(0xA1);
    let mut shell_l = Vec::new();
    let mut best: Option<(f64, Witness)> = None;
    let mut samples = 0;
    for &rho in &sampler.radius_schedule {
        let mut l_shell: f64 = 0.0;
        for i in 0..sampler.count {
            let a: f64 = rng.random::<f64>();
            let b: f64 = rng.random::<f64>();
            let s = sampler.point::<R::Elem>(&mut rng, 2 * i, rho * a);
            let d = sampler.point::<R::Elem>(&mut rng, 2 * i + 1, rho * b);
            let x = sampler.direction::<R::Elem>(&mut rng, 3 * i);
            let y = sampler.direction::<R::Elem>(&mut rng, 3 * i + 1);
            let g0 = match rel.residual(&s, &d) {
                Ok(g) => g,
                Err(_) => {
                    rep.worst_witness = Some(Witness {
                        description: "finite evaluation".into(),
                        margin: f64::NEG_INFINITY,
                        points: vec![WitnessPoint::of(&s, &d)],
                        probe: None,
                    });
                    rep.samples = samples;
                    return rep;
                }
            };
            for &hf in &[1e-3, 1e-1, 1.0] {
                let h = hf * rho;
                for (ds, dd) in [(x * h, d.zero_like()), (s.zero_like(), y * h), (x * h, y * h)] {
                    samples += 1;
                    let s2 = s + ds;
                    let d2 = d + dd;
                    let g1 = match rel.residual(&s2, &d2) {
                        Ok(g) => g,
                        Err(_) => {
                            rep.worst_witness = Some(Witness {
                                description: "finite evaluation".into(),
                                margin: f64::NEG_INFINITY,
                                points: vec![WitnessPoint::of(&s2, &d2)],
                                probe: None,
                            });
                            rep.samples = samples;
                            return rep;
                        }
                    };
                    let dx = (ds.dot_with(&ds) + dd.dot_with(&dd)).sqrt();
                    let ratio = (g1 - g0).norm() / dx;
                    if ratio > l_shell {
                        l_shell = ratio;
                    }
                    if best.as_ref().is_none_or(|(r, _)| ratio > *r) {
                        best = Some((
                            ratio,
                            Witness {
                                description: "|G(x1) - G(x2)| / |x1 - x2|".into(),
                                margin: ratio,
                                points: vec![WitnessPoint::of(&s, &d), WitnessPoint::of(&s2, &d2)],
                                probe: None,
                            },
                        ));
                    }
                }
            }
        }
        shell_l.push(l_shell);
    }
    let l = shell_l.iter().copied().fold(0.0, f64::max);
    rep.samples = samples;
    rep.passed = l.is_finite();
    rep.estimated_constants.insert("L".into(), l);
    if shell_l.len() >= 3 {
        let first = shell_l[0].max(1e-300);
        let last = *shell_l.last().unwrap();
        let tail = &shell_l[shell_l.len() - 3..];
        let increasing = tail.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-3));
        if last > 2.0 * first && increasing {
            rep.flags.push("superlinear_growth".into());
        }
    }
    rep.details.insert("radius".into(), sampler.radius_schedule.clone());
    rep.details.insert("L_per_shell".into(), shell_l);
    rep.worst_witness = best.map(|(_, w)| w);
    rep
}

// ---------------------------------------------------------------------------
// (G2)

type Mat6 = SMatrix<f64, 6, 6>;
type Vec6 = SVector<f64, 6>;

/// Central-difference Jacobians of the residual in orthonormal coordinates.
fn jacobians<R: Relation>(rel: &R, s: &R::Elem, d: &R::Elem, h: f64) -> Result<(Mat6, Mat6, usize)> {
    let (sc, n) = s.coords();
    let (dc, _) = d.coords();
    let mut js = Mat6::zeros();
    let mut jd = Mat6::zeros();
    for j in 0..n {
        let mut p = sc;
        let mut m = sc;
        p[j] += h;
        m[j] -= h;
        let gp = rel.residual(&s.with_coords(&p[..n]), d)?.coords().0;
        let gm = rel.residual(&s.with_coords(&m[..n]), d)?.coords().0;
        let mut p = dc;
        let mut m = dc;
        p[j] += h;
        m[j] -= h;
        let hp = rel.residual(s, &d.with_coords(&p[..n]))?.coords().0;
        let hm = rel.residual(s, &d.with_coords(&m[..n]))?.coords().0;
        for i in 0..n {
            js[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            jd[(i, j)] = (hp[i] - hm[i]) / (2.0 * h);
        }
    }
    Ok((js, jd, n))
}

fn probes(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec6> {
    let mut out = Vec::with_capacity(PROBES + n);
    for i in 0..n {
        let mut e = Vec6::zeros();
        e[i] = 1.0;
        out.push(e);
    }
    while out.len() < PROBES + n {
        let mut x = Vec6::zeros();
        for i in 0..n {
            x[i] = rng.sample(StandardNormal);
        }
        let norm = x.norm();
        if norm > 1e-8 {
            out.push(x / norm);
        }
    }
    out
}

/// `(min, argmin)` of the Rayleigh quotient of the symmetric part of `m`.
fn min_quotient(m: &Mat6, probes: &[Vec6]) -> (f64, usize) {
    let sym = (m + m.transpose()) * 0.5;
    let mut best = (f64::INFINITY, 0);
    for (k, x) in probes.iter().enumerate() {
        let q = x.dot(&(sym * x));
        if q < best.0 {
            best = (q, k);
        }
    }
    best
}

struct SignSample {
    min_s: (f64, usize),
    max_d: (f64, usize),
    min_diff: (f64, usize),
    max_prod: (f64, usize),
}

/// Derivative sign conditions at graph points, excluding a neighbourhood of
/// the kink set of radius `10 * h` (resampled with bounded retries).
pub fn check_derivative_signs<R: Relation + Clone>(rel: &R, sampler: &Sampler, fd_step: f64) -> AdmissibilityReport {
    let mut rep = AdmissibilityReport::new(Condition::G2);
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        rep.flags.push("invalid_fd_step".into());
        return rep;
    }
    let graph = match graph_set(rel, sampler, 0xB2) {
        Ok(g) => g,
        Err(e) => {
            rep.flags.push(format!("graph_points_unavailable: {e}"));
            return rep;
        }
    };
    let n = R::Elem::zero_in(sampler.dim).coords().1;
    let probe_set = probes(&mut sampler.rng(0xB3), n);
    let mut retry_rng = sampler.rng(0xB4);
    let mut points: Vec<(R::Elem, R::Elem)> = Vec::with_capacity(graph.points.len());
    let mut skipped = 0usize;
    let mut max_exclusion: f64 = 0.0;
    for (k, &(s, d)) in graph.points.iter().enumerate() {
        let mut cand = (s, d);
        let mut ok = false;
        for attempt in 0..8 {
            let h = fd_step * (1.0 + (cand.0.dot_with(&cand.0) + cand.1.dot_with(&cand.1)).sqrt());
            if rel.kink_distance(&cand.0, &cand.1) > 10.0 * h {
                max_exclusion = max_exclusion.max(10.0 * h);
                ok = true;
                break;
            }
            // Resample on the same shell with a fresh direction.
            let rho = sampler.radius_schedule[k % graph.radii] * (1.0 + 0.1 * (attempt + 1) as f64);
            let dir: R::Elem = sampler.direction(&mut retry_rng, k + attempt);
            match graph_point(rel, dir * rho, (k + attempt) % 2 == 0) {
                Ok(p) => cand = p,
                Err(_) => break,
            }
        }
        if ok {
            points.push(cand);
        } else {
            skipped += 1;
        }
    }

    let evals: Vec<Result<SignSample>> = points
        .par_iter()
        .map(|(s, d)| {
            let h = fd_step * (1.0 + (s.dot_with(s) + d.dot_with(d)).sqrt());
            let (js, jd, _) = jacobians(rel, s, d, h)?;
            let min_s = min_quotient(&js, &probe_set);
            let neg_d = min_quotient(&(-jd), &probe_set);
            let min_diff = min_quotient(&(js - jd), &probe_set);
            let neg_p = min_quotient(&(-(jd * js.transpose())), &probe_set);
            Ok(SignSample {
                min_s,
                max_d: (-neg_d.0, neg_d.1),
                min_diff,
                max_prod: (-neg_p.0, neg_p.1),
            })
        })
        .collect();

    let mut min_s = (f64::INFINITY, 0, 0);
    let mut max_d = (f64::NEG_INFINITY, 0, 0);
    let mut min_diff = (f64::INFINITY, 0, 0);
    let mut max_prod = (f64::NEG_INFINITY, 0, 0);
    for (i, ev) in evals.into_iter().enumerate() {
        let ev = match ev {
            Ok(ev) => ev,
            Err(_) => {
                let (s, d) = points[i];
                rep.worst_witness = Some(Witness {
                    description: "finite evaluation".into(),
                    margin: f64::NEG_INFINITY,
                    points: vec![WitnessPoint::of(&s, &d)],
                    probe: None,
                });
                rep.samples = i;
                return rep;
            }
        };
        if ev.min_s.0 < min_s.0 {
            min_s = (ev.min_s.0, i, ev.min_s.1);
        }
        if ev.max_d.0 > max_d.0 {
            max_d = (ev.max_d.0, i, ev.max_d.1);
        }
        if ev.min_diff.0 < min_diff.0 {
            min_diff = (ev.min_diff.0, i, ev.min_diff.1);
        }
        if ev.max_prod.0 > max_prod.0 {
            max_prod = (ev.max_prod.0, i, ev.max_prod.1);
        }
    }
    rep.samples = points.len();
    if points.is_empty() {
        rep.flags.push("no_points_away_from_kinks".into());
        return rep;
    }
    rep.estimated_constants.insert("min_dG_dS".into(), min_s.0);
    rep.estimated_constants.insert("max_dG_dD".into(), max_d.0);
    rep.estimated_constants
        .insert("min_dG_dS_minus_dG_dD".into(), min_diff.0);
    rep.estimated_constants.insert("max_dG_dD_dG_dS_T".into(), max_prod.0);
    rep.estimated_constants.insert("exclusion_radius".into(), max_exclusion);
    rep.estimated_constants.insert("fd_step".into(), fd_step);
    rep.estimated_constants
        .insert("skipped_near_kinks".into(), skipped as f64);

    // Margins normalized so that negative means violated.
    let checks = [
        ("dG/dS >= 0", min_s.0 + SIGN_TOL, min_s),
        ("dG/dD <= 0", SIGN_TOL - max_d.0, max_d),
        ("dG/dS - dG/dD > 0", min_diff.0 - SIGN_TOL, min_diff),
        ("dG/dD (dG/dS)^T <= 0", SIGN_TOL - max_prod.0, max_prod),
    ];
    let worst = checks.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("four checks");
    rep.passed = checks.iter().all(|c| c.1 > 0.0);
    let (s, d) = points[worst.2 .1];
    rep.worst_witness = Some(Witness {
        description: worst.0.to_string(),
        margin: worst.1,
        points: vec![WitnessPoint::of(&s, &d)],
        probe: Some(probe_set[worst.2 .2].iter().take(n).copied().collect()),
    });
    rep
}

// ---------------------------------------------------------------------------
// (G2*)

/// Monotonicity of the graph over radial and random pairs of graph points.
pub fn check_graph_monotone<R: Relation + Clone>(rel: &R, sampler: &Sampler) -> AdmissibilityReport {
    let mut rep = AdmissibilityReport::new(Condition::G2Star);
    let graph = match graph_set(rel, sampler, 0xC2) {
        Ok(g) => g,
        Err(e) => {
            rep.flags.push(format!("graph_points_unavailable: {e}"));
            return rep;
        }
    };
    let pts = &graph.points;
    let m = pts.len();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..m {
        if (i + 1) % graph.radii != 0 {
            pairs.push((i, i + 1));
        }
    }
    let mut rng = sampler.rng(0xC3);
    for i in 0..m {
        for _ in 0..4 {
            pairs.push((i, rng.random_range(0..m)));
        }
    }
    let mut worst = (f64::INFINITY, 0usize, 0usize);
    for &(i, j) in &pairs {
        let (s1, d1) = pts[i];
        let (s2, d2) = pts[j];
        let prod = (s1 - s2).dot_with(&(d1 - d2));
        if prod < worst.0 {
            worst = (prod, i, j);
        }
    }
    rep.samples = pairs.len();
    rep.passed = worst.0 >= -SIGN_TOL;
    rep.estimated_constants.insert("min_product".into(), worst.0);
    let (s1, d1) = pts[worst.1];
    let (s2, d2) = pts[worst.2];
    rep.worst_witness = Some(Witness {
        description: "(S1 - S2):(D1 - D2) >= 0".into(),
        margin: worst.0,
        points: vec![WitnessPoint::of(&s1, &d1), WitnessPoint::of(&s2, &d2)],
        probe: None,
    });
    rep
}

// ---------------------------------------------------------------------------
// (G3)

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RayTrend {
    Positive,
    NonPositive,
    Unclear,
}

fn classify(values: &[f64]) -> RayTrend {
    let k = values.len();
    if k >= 3 && values[k - 3..].iter().all(|v| *v > SIGN_TOL) {
        return RayTrend::Positive;
    }
    let non_pos = values.iter().all(|v| *v <= SIGN_TOL);
    let non_increasing = values.windows(2).all(|w| w[1] <= w[0] + SIGN_TOL);
    if non_pos && non_increasing {
        RayTrend::NonPositive
    } else {
        RayTrend::Unclear
    }
}

/// Asymptotic trends of `G(S,D):S` along S-rays (fixed D) and of
/// `-G(S,D):D` along D-rays (fixed S). The sampler's `count` is the number
/// of rays; its schedule must span at least three decades.
pub fn check_asymptotics<R: Relation>(rel: &R, sampler: &Sampler) -> AdmissibilityReport {
    let mut rep = AdmissibilityReport::new(Condition::G3);
    let radii = &sampler.radius_schedule;
    let span = radii.last().unwrap() / radii[0];
    if span < 1e3 * (1.0 - 1e-12) {
        rep.flags.push("radius_schedule_spans_less_than_three_decades".into());
        rep.inconclusive = true;
        return rep;
    }
    let mut rng = sampler.rng(0xD3);
    let fixed_mags = [0.1, 1.0, 10.0];
    let mut s_trends = Vec::new();
    let mut d_trends = Vec::new();
    let mut s_last = Vec::new();
    let mut d_last = Vec::new();
    let mut worst: Option<(f64, Witness)> = None;
    for i in 0..sampler.count {
        let fixed = sampler.point::<R::Elem>(&mut rng, 2 * i, fixed_mags[i % 3]);
        let ray = sampler.direction::<R::Elem>(&mut rng, 2 * i + 1);
        for branch in 0..2 {
            let mut vals = Vec::with_capacity(radii.len());
            let mut last_pt = (fixed, fixed);
            for &rho in radii {
                let x = ray * rho;
                let (s, d) = if branch == 0 { (x, fixed) } else { (fixed, x) };
                let v = match rel.residual(&s, &d) {
                    Ok(g) => {
                        if branch == 0 {
                            g.dot_with(&s)
                        } else {
                            -g.dot_with(&d)
                        }
                    }
                    Err(_) => f64::NAN,
                };
                vals.push(v);
                last_pt = (s, d);
            }
            rep.samples += vals.len();
            let trend = if vals.iter().all(|v| v.is_finite()) {
                classify(&vals)
            } else {
                RayTrend::Unclear
            };
            let last = *vals.last().unwrap();
            if worst.as_ref().is_none_or(|(w, _)| last < *w || last.is_nan()) {
                worst = Some((
                    last,
                    Witness {
                        description: if branch == 0 {
                            "G(S,D):S at the largest radius (S-ray)".into()
                        } else {
                            "-G(S,D):D at the largest radius (D-ray)".into()
                        },
                        margin: last,
                        points: vec![WitnessPoint::of(&last_pt.0, &last_pt.1)],
                        probe: None,
                    },
                ));
            }
            if branch == 0 {
                s_trends.push(trend);
                s_last.push(last);
            } else {
                d_trends.push(trend);
                d_last.push(last);
            }
        }
    }
    let s_pos = s_trends.iter().all(|t| *t == RayTrend::Positive);
    let d_pos = d_trends.iter().all(|t| *t == RayTrend::Positive);
    let s_neg = s_trends.iter().all(|t| *t == RayTrend::NonPositive);
    let d_neg = d_trends.iter().all(|t| *t == RayTrend::NonPositive);
    rep.passed = s_pos || d_pos;
    rep.inconclusive = !rep.passed && !(s_neg && d_neg);
    if s_pos {
        rep.flags.push("stress_branch_positive".into());
    }
    if d_pos {
        rep.flags.push("rate_branch_negative".into());
    }
    let count = |v: &[RayTrend], t: RayTrend| v.iter().filter(|x| **x == t).count() as f64;
    rep.estimated_constants
        .insert("stress_rays_positive".into(), count(&s_trends, RayTrend::Positive));
    rep.estimated_constants
        .insert("rate_rays_negative".into(), count(&d_trends, RayTrend::Positive));
    rep.estimated_constants.insert("rays".into(), sampler.count as f64);
    rep.details.insert("stress_branch_final".into(), s_last);
    rep.details.insert("rate_branch_final".into(), d_last);
    if !rep.passed {
        rep.worst_witness = worst.map(|(_, w)| w);
    }
    rep
}

// ---------------------------------------------------------------------------
// (G4)

/// Coercivity fit on graph points. `c_D = min S:D/|D|^r` and
/// `c_S = min S:D/|S|^r'` over the outer samples (rounded down to three
/// significant digits); splitting `S:D = S:D/r + S:D/r'` yields
/// `C1 = min(c_D/r, c_S/r')` and `C2` from the worst deficits.
pub fn check_coercivity<R: Relation + Clone>(rel: &R, sampler: &Sampler) -> AdmissibilityReport {
    let mut rep = AdmissibilityReport::new(Condition::G4);
    let r = rel.growth_exponent();
    rep.estimated_constants.insert("r".into(), r);
    if !(r > 1.0) {
        rep.flags.push("growth_exponent_not_above_one".into());
        return rep;
    }
    let rc = r / (r - 1.0);
    let graph = match graph_set(rel, sampler, 0xE4) {
        Ok(g) => g,
        Err(e) => {
            rep.flags.push(format!("graph_points_unavailable: {e}"));
            return rep;
        }
    };
    let stresses: Vec<R::Elem> = graph.points.iter().map(|p| p.0).collect();
    let rates: Vec<R::Elem> = graph.points.iter().map(|p| p.1).collect();
    let (c1, c2) = young_split(&stresses, &rates, r, rc, 1.0 / r, 1.0 / rc);
    rep.samples = stresses.len();
    rep.estimated_constants.insert("C1".into(), c1);
    rep.estimated_constants.insert("C2".into(), c2.max(0.0));
    rep.passed = c1 > 0.0 && c2.is_finite();
    // Witness: the graph point with the smallest S:D relative to the
    // coercive bound with the fitted constants.
    let mut worst = (f64::INFINITY, 0usize);
    for (k, (s, d)) in graph.points.iter().enumerate() {
        let bound = c1.max(0.0) * (s.norm().powf(rc) + d.norm().powf(r)) - c2.max(0.0);
        let margin = s.dot_with(d) - bound;
        let margin = if c1 > 0.0 { margin } else { s.dot_with(d) };
        if margin < worst.0 {
            worst = (margin, k);
        }
    }
    let (s, d) = graph.points[worst.1];
    rep.worst_witness = Some(Witness {
        description: if c1 > 0.0 {
            "S:D - C1 (|S|^r' + |D|^r) + C2".into()
        } else {
            "S:D (no positive C1 admissible)".into()
        },
        margin: worst.0,
        points: vec![WitnessPoint::of(&s, &d)],
        probe: None,
    });
    rep
}

// ---------------------------------------------------------------------------
// Suites

/// Family of the checked relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Bulk,
    Boundary,
}

/// Full report written by `rheo admit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilitySuite {
    pub family: Family,
    pub kind: String,
    pub orientation: String,
    pub growth_exponent: f64,
    pub parameters: BTreeMap<String, f64>,
    pub seed: u64,
    pub samples_per_shell: usize,
    pub dim: usize,
    pub all_passed: bool,
    pub reports: Vec<AdmissibilityReport>,
    #[serde(default)]
    pub resolvent_constants: Vec<ResolventConstants>,
}

impl AdmissibilitySuite {
    pub fn report(&self, condition: Condition) -> Option<&AdmissibilityReport> {
        self.reports.iter().find(|r| r.condition == condition)
    }
}

/// Schedule used for the asymptotic check: 10^-1 .. 10^4.
pub fn asymptotic_sampler(base: &Sampler) -> Sampler {
    let radii = (0..11).map(|k| 10f64.powf(-1.0 + 0.5 * k as f64)).collect();
    Sampler::new(base.seed, base.count.clamp(1, 32), radii, base.distribution, base.dim)
        .expect("valid asymptotic schedule")
}

fn run_all<R: Relation + Clone>(rel: &R, sampler: &Sampler) -> Vec<AdmissibilityReport> {
    vec![
        check_lipschitz(rel, sampler),
        check_derivative_signs(rel, sampler, FD_STEP),
        check_graph_monotone(rel, sampler),
        check_asymptotics(rel, &asymptotic_sampler(sampler)),
        check_coercivity(rel, sampler),
    ]
}

fn resolvent_constants<R: Relation + Clone>(rel: &R, sampler: &Sampler) -> Vec<ResolventConstants> {
    // Moderate shells: the resolvent constants are meant to be uniform in eps.
    let radii: Vec<f64> = sampler.radius_schedule.iter().copied().filter(|r| *r <= 10.0).collect();
    let Ok(small) = Sampler::new(
        sampler.seed,
        sampler.count.min(16),
        radii,
        sampler.distribution,
        sampler.dim,
    ) else {
        return Vec::new();
    };
    [0.1, 0.01]
        .iter()
        .filter_map(|&eps| {
            let e = EpsRelation::new(rel.clone(), eps).ok()?;
            crate::regularization::estimate_resolvent_constants(&e, &small).ok()
        })
        .collect()
}

/// Run every check on a bulk relation.
pub fn check_bulk(rel: &BulkRelation, sampler: &Sampler) -> AdmissibilitySuite {
    let reports = run_all(rel, sampler);
    AdmissibilitySuite {
        family: Family::Bulk,
        kind: rel.kind_name().to_string(),
        orientation: rel.orientation().as_str().to_string(),
        growth_exponent: rel.growth_exponent(),
        parameters: rel.params().clone(),
        seed: sampler.seed,
        samples_per_shell: sampler.count,
        dim: sampler.dim,
        all_passed: reports.iter().all(|r| r.passed),
        resolvent_constants: resolvent_constants(rel, sampler),
        reports,
    }
}

/// Run every check on a wall relation (vector algebra).
pub fn check_boundary(rel: &BoundaryRelation, sampler: &Sampler) -> AdmissibilitySuite {
    let reports = run_all(rel, sampler);
    AdmissibilitySuite {
        family: Family::Boundary,
        kind: rel.kind_name().to_string(),
        orientation: rel.orientation().as_str().to_string(),
        growth_exponent: rel.growth_exponent(),
        parameters: rel.params().clone(),
        seed: sampler.seed,
        samples_per_shell: sampler.count,
        dim: sampler.dim,
        all_passed: reports.iter().all(|r| r.passed),
        resolvent_constants: resolvent_constants(rel, sampler),
        reports,
    }
}

/// Analytic coercivity constant of the power law, `min(2 nu0 / r,
/// (r-1) / (r (2 nu0)^(1/(r-1))))`.
pub fn power_law_c1(nu0: f64, r: f64) -> f64 {
    (2.0 * nu0 / r).min((r - 1.0) / (r * (2.0 * nu0).powf(1.0 / (r - 1.0))))
}

/// Round a reported constant down to three significant digits.
pub fn snap_constant(x: f64) -> f64 {
    floor_sig(x, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{BulkKind, Orientation};
    use crate::sampling::Distribution;
    use crate::tensor::{SlipVector, SymTensor2};

    fn sampler() -> Sampler {
        Sampler::standard(11, 24)
    }

    fn zero_bulk() -> BulkRelation {
        let params = [("r".to_string(), 2.0)].into_iter().collect();
        BulkRelation::custom("zero", &params, Orientation::Stress).unwrap()
    }

    #[test]
    fn navier_stokes_lipschitz() {
        let ns = BulkRelation::navier_stokes(1.0).unwrap();
        let rep = check_lipschitz(&ns, &sampler());
        assert!(rep.passed);
        let l = rep.constant("L").unwrap();
        assert!((2.0..=2.3).contains(&l), "L = {l}");
        assert!(!rep.flags.contains(&"superlinear_growth".to_string()));
    }

    #[test]
    fn power_law_lipschitz_flags_growth() {
        let p = BulkRelation::power_law(0.5, 3.0).unwrap();
        let rep = check_lipschitz(&p, &sampler());
        assert!(rep.passed);
        assert!(rep.flags.contains(&"superlinear_growth".to_string()));
    }

    #[test]
    fn zero_relation_lipschitz_zero() {
        let rep = check_lipschitz(&zero_bulk(), &sampler());
        assert!(rep.passed);
        assert_eq!(rep.constant("L"), Some(0.0));
    }

    #[test]
    fn navier_stokes_signs() {
        let ns = BulkRelation::navier_stokes(1.0).unwrap();
        let rep = check_derivative_signs(&ns, &sampler(), FD_STEP);
        assert!(rep.passed, "{rep:?}");
        assert!((rep.constant("min_dG_dS").unwrap() - 1.0).abs() < 1e-6);
        assert!((rep.constant("max_dG_dD").unwrap() + 2.0).abs() < 1e-6);
    }

    #[test]
    fn nonmonotone_fixture_fails_signs_and_monotonicity() {
        let f = crate::catalog::nonmonotone_fixture();
        let rep = check_derivative_signs(&f, &sampler(), FD_STEP);
        assert!(!rep.passed);
        let rep = check_graph_monotone(&f, &sampler());
        assert!(!rep.passed);
        let w = rep.worst_witness.unwrap();
        let (s1, d1): (SymTensor2, SymTensor2) = w.points[0].elements(3);
        let (s2, d2): (SymTensor2, SymTensor2) = w.points[1].elements(3);
        assert!((s1 - s2).inner(&(d1 - d2)).unwrap() < -SIGN_TOL);
    }

    #[test]
    fn bingham_graph_monotone() {
        let b = BulkRelation::bingham(0.5, 1.0).unwrap();
        let rep = check_graph_monotone(&b, &sampler());
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn asymptotics() {
        let s = asymptotic_sampler(&sampler());
        assert!(check_asymptotics(&BulkRelation::navier_stokes(1.0).unwrap(), &s).passed);
        assert!(check_asymptotics(&BulkRelation::power_law(0.5, 3.0).unwrap(), &s).passed);
        let z = check_asymptotics(&zero_bulk(), &s);
        assert!(!z.passed && !z.inconclusive);
        let short = Sampler::new(1, 4, vec![1.0, 10.0], Distribution::GaussianShell, 2).unwrap();
        let rep = check_asymptotics(&BulkRelation::navier_stokes(1.0).unwrap(), &short);
        assert!(!rep.passed && rep.inconclusive);
    }

    #[test]
    fn coercivity_constants() {
        let ns = BulkRelation::navier_stokes(1.0).unwrap();
        let rep = check_coercivity(&ns, &sampler());
        assert!(rep.passed);
        let c1 = rep.constant("C1").unwrap();
        assert!((0.2375..=0.25).contains(&c1), "C1 = {c1}");
        assert!(rep.constant("C2").unwrap() <= 1e-9);

        for (nu0, r) in [(0.5, 3.0), (1.0, 1.5), (2.0, 2.5)] {
            let p = BulkRelation::power_law(nu0, r).unwrap();
            let rep = check_coercivity(&p, &sampler());
            let c1 = rep.constant("C1").unwrap();
            let exact = power_law_c1(nu0, r);
            assert!(c1 <= exact * 1.05 && c1 >= exact * 0.95, "{nu0} {r}: {c1} vs {exact}");
        }

        let b = BulkRelation::bingham(0.5, 1.0).unwrap();
        let rep = check_coercivity(&b, &sampler());
        assert!(rep.passed);
        assert!(rep.constant("C2").unwrap() > 0.0);

        let rep = check_coercivity(&zero_bulk(), &sampler());
        assert!(!rep.passed);
    }

    #[test]
    fn boundary_suite() {
        let s = sampler();
        let navier = check_boundary(&BoundaryRelation::navier_slip(2.0).unwrap(), &s);
        assert!(navier.all_passed, "{navier:#?}");
        let c1 = navier.report(Condition::G4).unwrap().constant("C1").unwrap();
        assert!((0.2375..=0.25).contains(&c1));
        let stick = check_boundary(&BoundaryRelation::stick_slip(1.0).unwrap(), &s);
        assert!(stick.all_passed, "{stick:#?}");
        assert!(stick.report(Condition::G4).unwrap().constant("C2").unwrap() > 0.0);
        let params = [("q".to_string(), 2.0)].into_iter().collect();
        let zero = BoundaryRelation::custom("zero", &params, Orientation::Stress).unwrap();
        let rep = check_coercivity(&zero, &s);
        assert!(!rep.passed);
        let _ = SlipVector::zero(2);
    }

    #[test]
    fn deterministic_reports() {
        let rel = BulkRelation::from_pairs(
            BulkKind::Carreau,
            &[("nu0", 1.0), ("nu_inf", 0.1), ("A", 1.0), ("n", 0.5)],
        )
        .unwrap();
        let a = check_bulk(&rel, &sampler());
        let b = check_bulk(&rel, &sampler());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
