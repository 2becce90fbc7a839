//! Channel-flow solver against closed-form profiles on coarse grids, plus
//! the per-step invariants and the artifact formats.

use rheo_core::flow::{FlowSolver, FlowState};
use rheo_core::harness::{run_scenario, RunOptions, Scenario};
use rheo_core::RheoError;

fn parse(text: &str) -> Scenario {
    Scenario::parse(text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

const POISEUILLE_NS: &str = "
name = coarse_poiseuille
oracle = poiseuille_power_slip
nx = 4
ny = 16
ly = 1
dt = 0.1
t_end = 40
steady_tol = 1e-9
eps = 1e-8
force_x = 1
bulk.kind = navier_stokes
bulk.nu = 1
wall.kind = navier_slip
wall.gamma = 1
";

const VORTEX: &str = "
name = vortex
nx = 16
ny = 16
ly = 1
dt = 0.002
t_end = 0.1
eps = 1e-4
bulk.kind = power_law
bulk.nu0 = 0.05
bulk.r = 1.8
wall.kind = power_slip
wall.gamma = 0.5
wall.q = 2
v0.vortex = 2
v0.shear = 1
";

fn steps(sc: &Scenario, n: usize) -> Vec<FlowState> {
    let solver = FlowSolver::new(sc.config.clone()).unwrap();
    let mut st = solver.init().unwrap();
    let mut out = vec![st.clone()];
    for _ in 0..n {
        st = solver.step(&st).unwrap().0;
        out.push(st.clone());
    }
    out
}

#[test]
fn navier_stokes_poiseuille_matches_closed_form() {
    let out = run_scenario(&parse(POISEUILLE_NS), &RunOptions::default()).unwrap();
    let m = &out.metrics;
    assert!(m.steady_reached);
    // Second order in h = 1/16.
    assert!(m.profile_l2_error.unwrap() < 2e-3, "{m:?}");
    // Centreline u = f H^2 / (2 nu) + f H / gamma = 0.125 + 0.5.
    let u = &out.profile;
    let centre = u[u.len() / 2 - 1].max(u[u.len() / 2]);
    assert!((centre - 0.625).abs() < 5e-3, "{centre}");
    assert!(m.passed, "{:?}", m.checks);
}

#[test]
fn stokes_decay_follows_the_exponential_mode() {
    let text = "
name = decay
oracle = stokes_decay
nx = 4
ny = 32
ly = 1
dt = 1e-3
t_end = 0.1
eps = 1e-8
bulk.kind = navier_stokes
bulk.nu = 1
wall.kind = navier_slip
wall.gamma = 2
v0.decay_mode = 1
";
    let out = run_scenario(&parse(text), &RunOptions::default()).unwrap();
    assert!(out.metrics.profile_l2_error.unwrap() < 5e-3, "{:?}", out.metrics);
}

#[test]
fn every_step_is_divergence_free_and_impermeable() {
    let sc = parse(VORTEX);
    let solver = FlowSolver::new(sc.config.clone()).unwrap();
    let g = solver.grid().clone();
    let mut st = solver.init().unwrap();
    for _ in 0..20 {
        let (next, rec) = solver.step(&st).unwrap();
        assert!(rec.div_ratio <= 1e-10, "div ratio {}", rec.div_ratio);
        assert_eq!(rec.max_wall_normal, 0.0);
        for i in 0..g.nx {
            assert_eq!(next.v[g.v_idx(i, 0)], 0.0);
            assert_eq!(next.v[g.v_idx(i, g.ny)], 0.0);
        }
        assert!(rec.min_bulk_cos >= -1e-12 && rec.min_wall_cos >= -1e-12, "{rec:?}");
        st = next;
    }
}

#[test]
fn unforced_kinetic_energy_never_grows() {
    let sc = parse(VORTEX);
    let solver = FlowSolver::new(sc.config.clone()).unwrap();
    let states = steps(&sc, 30);
    let k: Vec<f64> = states.iter().map(|s| solver.kinetic(&s.u, &s.v)).collect();
    assert!(k[0] > 0.0);
    for w in k.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn energy_defect_is_first_order_in_time() {
    // The only energy source is the explicit convection step, so the defect
    // of the energy inequality shrinks in proportion to dt.
    let defect = |dt: f64| {
        let mut sc = parse(VORTEX);
        sc.config.dt = dt;
        let m = run_scenario(&sc, &RunOptions::default()).unwrap().metrics;
        assert!(m.kinetic_final < m.kinetic_initial);
        assert!(m.bulk_diss > 0.0 && m.boundary_diss > 0.0);
        m.max_defect
    };
    let (d1, d2) = (defect(0.002), defect(0.001));
    assert!(d1 > 0.0 && d2 < 0.6 * d1, "{d1} -> {d2}");
}

#[test]
fn rest_stays_at_rest() {
    let text = "
name = still
nx = 8
ny = 8
dt = 0.1
t_end = 1
bulk.kind = bingham
bulk.nu = 1
bulk.tau_star = 1
wall.kind = stick_slip
wall.sigma_star = 1
";
    for st in steps(&parse(text), 10) {
        assert!(st.u.iter().chain(&st.v).chain(&st.p).all(|x| *x == 0.0));
    }
}

#[test]
fn bingham_plug_is_detected() {
    let text = "
name = plug
oracle = poiseuille_power_slip
nx = 4
ny = 32
ly = 1
dt = 0.1
t_end = 60
steady_tol = 1e-9
eps = 1e-4
force_x = 1
bulk.kind = bingham
bulk.nu = 1
bulk.tau_star = 0.25
wall.kind = navier_slip
wall.gamma = 1
";
    let out = run_scenario(&parse(text), &RunOptions::default()).unwrap();
    let m = &out.metrics;
    let want = 0.25 / std::f64::consts::SQRT_2;
    assert!((m.plug_half_width_oracle.unwrap() - want).abs() < 1e-12);
    assert!(m.plug_error_cells.unwrap() <= 1.0, "{m:?}");
}

#[test]
fn artifacts_have_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut sc = parse(VORTEX);
    sc.config.snapshot_every = 10;
    let opts = RunOptions {
        seed: 3,
        out_dir: Some(dir.path().to_path_buf()),
    };
    run_scenario(&sc, &opts).unwrap();
    let run = dir.path().join("vortex");
    let header = |f: &str| {
        std::fs::read_to_string(run.join(f))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(header("final.csv"), "x,y,u,v,p,S_xx,S_xy,S_yy");
    assert_eq!(header("snapshot_000010.csv"), "x,y,u,v,p,S_xx,S_xy,S_yy");
    assert_eq!(header("ledger.csv"), "t,kinetic,bulk_diss,boundary_diss,work,defect");
    let vtk = std::fs::read_to_string(run.join("final.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
    assert!(vtk.contains("DATASET STRUCTURED_GRID") && vtk.contains("VECTORS velocity double"));
    let rows = std::fs::read_to_string(run.join("final.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 16 * 16);
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["seed"], 3);
    assert!(metrics.get("runtime_s").is_none());
}

#[test]
fn metrics_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sc = parse(VORTEX);
    for d in [&a, &b] {
        let opts = RunOptions {
            seed: 9,
            out_dir: Some(d.path().to_path_buf()),
        };
        run_scenario(&sc, &opts).unwrap();
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join("vortex").join(f)).unwrap();
    assert_eq!(read(&a, "metrics.json"), read(&b, "metrics.json"));
    assert_eq!(read(&a, "ledger.csv"), read(&b, "ledger.csv"));
    assert_eq!(read(&a, "final.csv"), read(&b, "final.csv"));
}

#[test]
fn config_errors_name_the_line() {
    let text = "name = x\nnx = 8\nny = 8\nbogus_key = 1\nbulk.kind = navier_stokes\nbulk.nu = 1\nwall.kind = navier_slip\nwall.gamma = 1\n";
    match Scenario::parse(text) {
        Err(RheoError::Parse { line, msg }) => {
            assert_eq!(line, 4);
            assert!(msg.contains("bogus_key"), "{msg}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
    let dup = "name = x\nnx = 8\nnx = 16\n";
    assert!(matches!(Scenario::parse(dup), Err(RheoError::Parse { line: 3, .. })));
    assert!(matches!(
        Scenario::parse("  \n# only a comment\n"),
        Err(RheoError::Parse { .. })
    ));
}

#[test]
fn growth_exponent_limits_depend_on_dimension() {
    let base = "name = x\nnx = 8\nny = 8\ndt = 0.1\nt_end = 1\nbulk.kind = power_law\nbulk.nu0 = 1\nbulk.r = 1.1\nwall.kind = navier_slip\nwall.gamma = 1\n";
    assert!(Scenario::parse(base).is_ok());
    let err = Scenario::parse(&format!("{base}dim = 3\n")).unwrap_err();
    assert!(err.is_usage(), "{err}");
}
