//! Field snapshots as CSV and legacy-VTK structured grids.
//!
//! Both formats hold cell-centre values: face velocities are averaged to the
//! centre and the nodal shear stress is averaged over the four cell corners.
//! CSV columns: `x,y,u,v,p,S_xx,S_xy,S_yy`, rows ordered by `j` then `i`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::grid::Grid;
use super::solver::FlowState;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellRow {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
    #[serde(rename = "S_xx")]
    pub s_xx: f64,
    #[serde(rename = "S_xy")]
    pub s_xy: f64,
    #[serde(rename = "S_yy")]
    pub s_yy: f64,
}

/// Cell-centre values of a state.
pub fn cell_rows(grid: &Grid, st: &FlowState) -> Vec<CellRow> {
    let g = grid;
    let (uc, vc) = g.velocity_at_centers(&st.u, &st.v);
    let mut out = Vec::with_capacity(g.n_cells());
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            let sxy = 0.25
                * (st.s_xy[g.node(i, j)]
                    + st.s_xy[g.node(g.ip(i), j)]
                    + st.s_xy[g.node(i, j + 1)]
                    + st.s_xy[g.node(g.ip(i), j + 1)]);
            out.push(CellRow {
                x: g.x_center(i),
                y: g.y_center(j),
                u: uc[c],
                v: vc[c],
                p: st.p[c],
                s_xx: st.s_xx[c],
                s_xy: sxy,
                s_yy: st.s_yy[c],
            });
        }
    }
    out
}

pub fn write_csv<W: Write>(grid: &Grid, st: &FlowState, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in cell_rows(grid, st) {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(grid: &Grid, st: &FlowState, path: &Path) -> Result<()> {
    write_csv(grid, st, std::fs::File::create(path)?)
}

/// Legacy-VTK ASCII structured grid with point data `p`, `velocity`,
/// `S_xx`, `S_xy`, `S_yy` at the cell centres.
pub fn vtk_string(grid: &Grid, st: &FlowState, title: &str) -> String {
    let rows = cell_rows(grid, st);
    let n = rows.len();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or("rheo"));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_GRID");
    let _ = writeln!(s, "DIMENSIONS {} {} 1", grid.nx, grid.ny);
    let _ = writeln!(s, "POINTS {n} double");
    for r in &rows {
        let _ = writeln!(s, "{} {} 0", r.x, r.y);
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let scalar = |s: &mut String, name: &str, f: &dyn Fn(&CellRow) -> f64| {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for r in &rows {
            let _ = writeln!(s, "{}", f(r));
        }
    };
    scalar(&mut s, "p", &|r| r.p);
    let _ = writeln!(s, "VECTORS velocity double");
    for r in &rows {
        let _ = writeln!(s, "{} {} 0", r.u, r.v);
    }
    scalar(&mut s, "S_xx", &|r| r.s_xx);
    scalar(&mut s, "S_xy", &|r| r.s_xy);
    scalar(&mut s, "S_yy", &|r| r.s_yy);
    s
}

pub fn save_vtk(grid: &Grid, st: &FlowState, path: &Path, title: &str) -> Result<()> {
    std::fs::write(path, vtk_string(grid, st, title))?;
    Ok(())
}

/// Write named columns of equal length as CSV.
pub fn write_columns<W: Write>(out: W, columns: &[(&str, &[f64])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns.iter().map(|(n, _)| *n))?;
    let len = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
    for k in 0..len {
        w.write_record(columns.iter().map(|(_, c)| c[k].to_string()))?;
    }
    w.flush()?;
    Ok(())
}
