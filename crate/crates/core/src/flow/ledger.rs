//! Cumulative energy budget of a run.
//!
//! Columns: `t`, `kinetic` (`1/2 sum |v|^2 vol`), `bulk_diss`
//! (`sum S:D vol dt`), `boundary_diss` (`sum s.v_tau area dt`), `work`
//! (body force and moving-wall power, integrated), and
//! `defect = kinetic + bulk_diss + boundary_diss - work - kinetic(0)`.
//! A non-positive defect means the discrete energy inequality holds.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::solver::StepRecord;
use crate::error::{Result, RheoError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub t: f64,
    pub kinetic: f64,
    pub bulk_diss: f64,
    pub boundary_diss: f64,
    pub work: f64,
    pub defect: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyLedger {
    rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    /// Ledger holding only the initial row.
    pub fn new(kinetic0: f64) -> Self {
        EnergyLedger {
            rows: vec![LedgerRow {
                kinetic: kinetic0,
                ..LedgerRow::default()
            }],
        }
    }

    /// Append one step of length `dt`.
    pub fn push(&mut self, rec: &StepRecord, dt: f64) {
        let last = *self.rows.last().expect("ledger has an initial row");
        let k0 = self.rows[0].kinetic;
        let bulk = last.bulk_diss + rec.bulk_power * dt;
        let boundary = last.boundary_diss + rec.boundary_power * dt;
        let work = last.work + rec.work_power * dt;
        self.rows.push(LedgerRow {
            t: rec.t,
            kinetic: rec.kinetic,
            bulk_diss: bulk,
            boundary_diss: boundary,
            work,
            defect: rec.kinetic + bulk + boundary - work - k0,
        });
    }

    /// Ledger of a whole history.
    pub fn from_records(kinetic0: f64, records: &[StepRecord], dt: f64) -> Self {
        let mut l = EnergyLedger::new(kinetic0);
        for r in records {
            l.push(r, dt);
        }
        l
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn last(&self) -> LedgerRow {
        *self.rows.last().expect("ledger has an initial row")
    }

    /// Largest defect over the history.
    pub fn max_defect(&self) -> f64 {
        self.rows.iter().map(|r| r.defect).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Budget increments between rows `a <= b`; increments of adjacent
    /// ranges add up to the increment of their union.
    pub fn increment(&self, a: usize, b: usize) -> Result<LedgerRow> {
        if a > b || b >= self.rows.len() {
            return Err(RheoError::Config(format!("ledger range {a}..{b} out of bounds")));
        }
        let (ra, rb) = (self.rows[a], self.rows[b]);
        Ok(LedgerRow {
            t: rb.t - ra.t,
            kinetic: rb.kinetic - ra.kinetic,
            bulk_diss: rb.bulk_diss - ra.bulk_diss,
            boundary_diss: rb.boundary_diss - ra.boundary_diss,
            work: rb.work - ra.work,
            defect: rb.defect - ra.defect,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<LedgerRow>, _>>()?;
        if rows.is_empty() {
            return Err(RheoError::Config("empty ledger".into()));
        }
        Ok(EnergyLedger { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, k: f64, b: f64) -> StepRecord {
        StepRecord {
            t,
            kinetic: k,
            bulk_power: b,
            ..StepRecord::default()
        }
    }

    #[test]
    fn rest_is_zero_and_additive() {
        let l = EnergyLedger::from_records(0.0, &[rec(0.1, 0.0, 0.0), rec(0.2, 0.0, 0.0)], 0.1);
        assert!(l.rows().iter().all(|r| r.defect == 0.0 && r.bulk_diss == 0.0));
        let l = EnergyLedger::from_records(
            1.0,
            &[rec(0.1, 0.9, 1.0), rec(0.2, 0.8, 0.5), rec(0.3, 0.75, 0.25)],
            0.1,
        );
        let a = l.increment(0, 1).unwrap();
        let b = l.increment(1, 3).unwrap();
        let c = l.increment(0, 3).unwrap();
        assert!((a.bulk_diss + b.bulk_diss - c.bulk_diss).abs() < 1e-15);
        assert!((a.defect + b.defect - c.defect).abs() < 1e-15);
        assert!((l.last().defect - (0.75 + 0.175 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let l = EnergyLedger::from_records(1.0, &[rec(0.1, 0.9, 1.0)], 0.1);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ledger.csv");
        l.save(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,kinetic,bulk_diss,boundary_diss,work,defect\n"));
        assert_eq!(EnergyLedger::read_csv(&p).unwrap(), l);
    }
}
