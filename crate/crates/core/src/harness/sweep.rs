//! Parameter sweeps: rerun a scenario over a list of values of one numerical
//! parameter and collect per-value metrics, successive differences and
//! observed convergence orders.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{relative_l2, run_scenario, RunOptions, RunOutcome, Scenario};
use crate::error::{Result, RheoError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Eps,
    Delta,
    H,
    Dt,
}

impl SweepParam {
    pub const ALL: [SweepParam; 4] = [SweepParam::Eps, SweepParam::Delta, SweepParam::H, SweepParam::Dt];

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Eps => "eps",
            SweepParam::Delta => "delta",
            SweepParam::H => "h",
            SweepParam::Dt => "dt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

/// Which error sequence the observed orders are computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMeasure {
    /// Relative L2 distance of the profile to the oracle.
    Oracle,
    /// Relative L2 distance of the final velocity to the `delta = 0` run.
    Limit,
    /// Relative L2 distance between consecutive runs.
    Successive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub value: f64,
    pub profile_l2_error: Option<f64>,
    /// Distance to the limit run (delta sweeps only).
    pub limit_error: Option<f64>,
    /// Distance to the run with the next value (same grid only).
    pub successive_difference: Option<f64>,
    pub final_defect: f64,
    pub max_defect: f64,
    pub weak_residual: f64,
    pub passed: bool,
    pub runtime_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: String,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub runs: Vec<SweepRun>,
    pub error_measure: ErrorMeasure,
    /// The error sequence the orders are computed from.
    pub errors: Vec<f64>,
    /// `log(e_k / e_{k+1}) / log(x_k / x_{k+1})`; equals `log2(e_k/e_{k+1})`
    /// for halving sequences.
    pub observed_orders: Vec<f64>,
    /// Whether `errors` decrease strictly as the parameter decreases.
    pub monotone_decreasing: bool,
}

impl SweepResult {
    pub fn min_order(&self) -> Option<f64> {
        self.observed_orders.iter().copied().reduce(f64::min)
    }
}

/// Scenario with parameter `param` set to `value`.
pub fn with_param(sc: &Scenario, param: SweepParam, value: f64) -> Result<Scenario> {
    if !(value.is_finite() && (value > 0.0 || (value == 0.0 && param == SweepParam::Delta))) {
        return Err(RheoError::Config(format!("invalid {} value {value}", param.as_str())));
    }
    let mut out = sc.clone();
    match param {
        SweepParam::Eps => out.config.eps = value,
        SweepParam::Delta => out.config.delta = value,
        SweepParam::Dt => out.config.dt = value,
        SweepParam::H => out.config = out.config.clone().with_cell_size(value)?,
    }
    Ok(out)
}

/// Full velocity vector of a state (both components).
fn velocity(o: &RunOutcome) -> Vec<f64> {
    o.final_state.u.iter().chain(o.final_state.v.iter()).copied().collect()
}

fn timed_run(sc: &Scenario, opts: &RunOptions) -> Result<(RunOutcome, f64)> {
    let start = Instant::now();
    let out = run_scenario(sc, opts)?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Observed orders `log(e_k/e_{k+1}) / log(x_k/x_{k+1})` for the values
/// paired with `errors`.
pub fn observed_orders(values: &[f64], errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(values.windows(2))
        .map(|(e, x)| (e[0] / e[1]).ln() / (x[0] / x[1]).ln())
        .collect()
}

/// Run the sweep. Runs are independent and execute in parallel; results are
/// assembled in value order, so the output does not depend on scheduling.
pub fn sweep(sc: &Scenario, param: SweepParam, values: &[f64], opts: &RunOptions) -> Result<SweepResult> {
    if values.len() < 2 {
        return Err(RheoError::Config("a sweep needs at least two values".into()));
    }
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    if !decreasing {
        return Err(RheoError::Config("sweep values must be strictly decreasing".into()));
    }
    let scenarios: Vec<Scenario> = values
        .iter()
        .map(|&v| {
            let mut s = with_param(sc, param, v)?;
            s.name = format!("{}_{}_{:e}", sc.name, param.as_str(), v);
            Ok(s)
        })
        .collect::<Result<_>>()?;
    let outcomes: Vec<(RunOutcome, f64)> = scenarios
        .par_iter()
        .map(|s| timed_run(s, opts))
        .collect::<Result<_>>()?;

    let limit = if param == SweepParam::Delta {
        let mut s = with_param(sc, param, 0.0)?;
        s.name = format!("{}_delta_limit", sc.name);
        Some(run_scenario(&s, opts)?)
    } else {
        None
    };

    let same_grid = param != SweepParam::H;
    let mut runs = Vec::with_capacity(values.len());
    for (k, (o, runtime)) in outcomes.iter().enumerate() {
        let successive = if same_grid && k + 1 < outcomes.len() {
            Some(relative_l2(&velocity(o), &velocity(&outcomes[k + 1].0)))
        } else {
            None
        };
        let limit_error = limit.as_ref().map(|l| relative_l2(&velocity(o), &velocity(l)));
        runs.push(SweepRun {
            value: values[k],
            profile_l2_error: o.metrics.profile_l2_error,
            limit_error,
            successive_difference: successive,
            final_defect: o.metrics.final_defect,
            max_defect: o.metrics.max_defect,
            weak_residual: o.metrics.weak_residual,
            passed: o.metrics.passed,
            runtime_s: *runtime,
        });
    }

    let has_oracle = runs.iter().all(|r| r.profile_l2_error.is_some());
    let (measure, errors, xs): (ErrorMeasure, Vec<f64>, Vec<f64>) = match param {
        SweepParam::Delta => (
            ErrorMeasure::Limit,
            runs.iter().map(|r| r.limit_error.unwrap_or(0.0)).collect(),
            values.to_vec(),
        ),
        SweepParam::H | SweepParam::Dt if has_oracle => (
            ErrorMeasure::Oracle,
            runs.iter().map(|r| r.profile_l2_error.unwrap_or(0.0)).collect(),
            values.to_vec(),
        ),
        SweepParam::H => {
            return Err(RheoError::Config(
                "an h-sweep needs a scenario with an oracle (grids differ between runs)".into(),
            ))
        }
        SweepParam::Eps | SweepParam::Dt => (
            ErrorMeasure::Successive,
            runs.iter().filter_map(|r| r.successive_difference).collect(),
            values[..values.len() - 1].to_vec(),
        ),
    };
    let observed = observed_orders(&xs, &errors);
    let monotone = errors.windows(2).all(|e| e[1] < e[0]);
    Ok(SweepResult {
        scenario: sc.name.clone(),
        param,
        values: values.to_vec(),
        runs,
        error_measure: measure,
        errors,
        observed_orders: observed,
        monotone_decreasing: monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_halving_sequences() {
        let p = observed_orders(&[0.4, 0.2, 0.1], &[1.6, 0.4, 0.1]);
        assert!(p.iter().all(|x| (x - 2.0).abs() < 1e-12));
        let p = observed_orders(&[1e-1, 1e-2], &[1e-1, 1e-2]);
        assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn params_round_trip() {
        for p in SweepParam::ALL {
            assert_eq!(SweepParam::parse(p.as_str()), Some(p));
        }
        assert_eq!(SweepParam::parse("nu"), None);
    }
}
