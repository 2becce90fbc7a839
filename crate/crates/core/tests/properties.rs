//! Property-based invariants of the relations, resolvents, cutoff and file
//! formats.

use proptest::prelude::*;
use rheo_core::flow::cutoff;
use rheo_core::harness::Scenario;
use rheo_core::regularization::{make_eps_boundary, make_eps_bulk, resolve_slip, resolve_stress};
use rheo_core::relation::kv::{boundary_to_kv, bulk_to_kv, parse_relation, AnyRelation};
use rheo_core::{BoundaryRelation, BulkRelation, Element, Relation, RheoError, SlipVector, SymTensor2};

fn rate() -> impl Strategy<Value = SymTensor2> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b, c)| SymTensor2::new2(a, b, c))
}

fn slip() -> impl Strategy<Value = SlipVector> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b)| SlipVector::new2(a, b))
}

fn bulk_relation() -> impl Strategy<Value = BulkRelation> {
    prop_oneof![
        (0.1..3.0f64).prop_map(|nu| BulkRelation::navier_stokes(nu).unwrap()),
        (0.1..3.0f64, 1.2..3.5f64).prop_map(|(nu, r)| BulkRelation::power_law(nu, r).unwrap()),
        (0.1..3.0f64, 0.0..2.0f64).prop_map(|(nu, t)| BulkRelation::bingham(nu, t).unwrap()),
        (0.1..3.0f64, 0.0..2.0f64, 1.5..3.0f64)
            .prop_map(|(nu, t, r)| BulkRelation::herschel_bulkley(nu, t, r).unwrap()),
        (0.1..3.0f64, 0.1..2.0f64).prop_map(|(nu, d)| BulkRelation::activated_euler(nu, d).unwrap()),
    ]
}

fn wall_relation() -> impl Strategy<Value = BoundaryRelation> {
    prop_oneof![
        (0.1..3.0f64).prop_map(|g| BoundaryRelation::navier_slip(g).unwrap()),
        (0.1..3.0f64, 1.5..3.5f64).prop_map(|(g, q)| BoundaryRelation::power_slip(g, q).unwrap()),
        (0.0..2.0f64).prop_map(|s| BoundaryRelation::stick_slip(s).unwrap()),
    ]
}

fn eps() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1e-1), Just(1e-2), Just(1e-3)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bulk_resolvent_solves_and_is_monotone(rel in bulk_relation(), e in eps(), d1 in rate(), d2 in rate()) {
        let er = make_eps_bulk(rel, e).unwrap();
        let s1 = resolve_stress(&er, &d1).unwrap();
        let s2 = resolve_stress(&er, &d2).unwrap();
        prop_assert!(er.eval(&s1, &d1).unwrap().norm() <= 1e-9 * (1.0 + s1.norm()));
        let product = (s1 - s2).ddot(&(d1 - d2));
        let scale = (s1 - s2).norm() * (d1 - d2).norm();
        prop_assert!(product >= -1e-12 * scale.max(1.0), "{product} vs {scale}");
        // Dissipation sign at each point.
        prop_assert!(s1.ddot(&d1) >= -1e-12 * (s1.norm() * d1.norm()).max(1e-300));
    }

    #[test]
    fn wall_resolvent_solves_and_is_monotone(rel in wall_relation(), e in eps(), v1 in slip(), v2 in slip()) {
        let er = make_eps_boundary(rel, e).unwrap();
        let s1 = resolve_slip(&er, &v1).unwrap();
        let s2 = resolve_slip(&er, &v2).unwrap();
        prop_assert!(er.eval(&s1, &v1).unwrap().norm() <= 1e-9 * (1.0 + s1.norm()));
        let product = (s1 - s2).dot(&(v1 - v2));
        prop_assert!(product >= -1e-12 * ((s1 - s2).norm() * (v1 - v2).norm()).max(1.0));
        prop_assert!(s1.dot(&v1) >= -1e-12 * (s1.norm() * v1.norm()).max(1e-300));
    }

    #[test]
    fn isotropic_resolvents_are_collinear(rel in bulk_relation(), e in eps(), d in rate()) {
        prop_assume!(d.norm() > 1e-6);
        let s = resolve_stress(&make_eps_bulk(rel, e).unwrap(), &d).unwrap();
        prop_assert!((s.cosine(&d) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn navier_stokes_closed_form(nu in 0.05..5.0f64, e in 1e-4..0.5f64, d in rate()) {
        let s = resolve_stress(&make_eps_bulk(BulkRelation::navier_stokes(nu).unwrap(), e).unwrap(), &d).unwrap();
        let a = (2.0 * nu + e) / (1.0 + 2.0 * nu * e);
        prop_assert!((s - d * a).norm() <= 1e-12 * (1.0 + a * d.norm()));
    }

    #[test]
    fn navier_slip_closed_form(g in 0.05..5.0f64, e in 1e-4..0.5f64, v in slip()) {
        let s = resolve_slip(&make_eps_boundary(BoundaryRelation::navier_slip(g).unwrap(), e).unwrap(), &v).unwrap();
        let b = (g + e) / (1.0 + g * e);
        prop_assert!((s - v * b).norm() <= 1e-12 * (1.0 + b * v.norm()));
    }

    #[test]
    fn relation_files_round_trip(rel in bulk_relation(), wall in wall_relation()) {
        match parse_relation(&bulk_to_kv(&rel).unwrap()).unwrap() {
            AnyRelation::Bulk(back) => {
                prop_assert_eq!(back.kind_name(), rel.kind_name());
                prop_assert_eq!(back.params(), rel.params());
            }
            AnyRelation::Boundary(_) => prop_assert!(false, "bulk parsed as wall"),
        }
        match parse_relation(&boundary_to_kv(&wall).unwrap()).unwrap() {
            AnyRelation::Boundary(back) => prop_assert_eq!(back.params(), wall.params()),
            AnyRelation::Bulk(_) => prop_assert!(false, "wall parsed as bulk"),
        }
    }

    #[test]
    fn cutoff_is_a_nonincreasing_weight(a in 0.0..100.0f64, b in 0.0..100.0f64, delta in 0.0..2.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (wl, wh) = (cutoff(lo, delta), cutoff(hi, delta));
        prop_assert!((0.0..=1.0).contains(&wl) && (0.0..=1.0).contains(&wh));
        prop_assert!(wh <= wl);
        prop_assert_eq!(cutoff(hi, 0.0), 1.0);
        if delta > 0.0 {
            prop_assert_eq!(cutoff(0.999 / delta, delta), 1.0);
            prop_assert_eq!(cutoff(2.001 / delta, delta), 0.0);
        }
    }

    #[test]
    fn unknown_scenario_keys_report_their_line(pad in 0usize..6, key in "[a-z]{3,8}_zz") {
        let mut text = String::from("name = p\n");
        for _ in 0..pad {
            text.push_str("# comment\n\n");
        }
        text.push_str(&format!("{key} = 1\n"));
        let line = 2 + 2 * pad;
        match Scenario::parse(&text) {
            Err(RheoError::Parse { line: l, msg }) => {
                prop_assert_eq!(l, line);
                prop_assert!(msg.contains(&key));
            }
            other => prop_assert!(false, "unexpected {:?}", other.map(|s| s.name)),
        }
    }
}
