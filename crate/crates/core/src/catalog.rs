//! Reference parameter sets for every catalog member, used by tests,
//! examples and the `admit` command's built-in relation names.

use crate::relation::{BoundaryKind, BoundaryRelation, BulkKind, BulkRelation, Orientation};

fn bulk(kind: BulkKind, pairs: &[(&str, f64)]) -> BulkRelation {
    BulkRelation::from_pairs(kind, pairs).expect("reference parameters are valid")
}

fn boundary(kind: BoundaryKind, pairs: &[(&str, f64)]) -> BoundaryRelation {
    BoundaryRelation::from_pairs(kind, pairs).expect("reference parameters are valid")
}

/// One representative of each bulk catalog kind (plus the power law at
/// several exponents).
pub fn default_bulk_catalog() -> Vec<BulkRelation> {
    vec![
        bulk(BulkKind::NavierStokes, &[("nu", 0.5)]),
        bulk(BulkKind::PowerLaw, &[("nu0", 0.5), ("r", 1.5)]),
        bulk(BulkKind::PowerLaw, &[("nu0", 0.5), ("r", 2.0)]),
        bulk(BulkKind::PowerLaw, &[("nu0", 0.5), ("r", 3.0)]),
        bulk(
            BulkKind::Carreau,
            &[("nu0", 1.0), ("nu_inf", 0.1), ("A", 1.0), ("n", 0.5)],
        ),
        bulk(
            BulkKind::CarreauYasuda,
            &[("nu0", 1.0), ("nu_inf", 0.1), ("A", 1.0), ("a", 2.0), ("n", 0.5)],
        ),
        bulk(
            BulkKind::Cross,
            &[("nu0", 1.0), ("nu_inf", 0.1), ("A", 1.0), ("n", 0.5)],
        ),
        bulk(BulkKind::Eyring, &[("nu0", 1.0), ("nu_inf", 0.1), ("A", 1.0)]),
        bulk(BulkKind::Sisko, &[("nu_inf", 0.5), ("A", 0.5), ("n", 2.0)]),
        bulk(BulkKind::Ellis, &[("nu0", 0.5), ("A", 1.0), ("n", 2.0)]),
        bulk(BulkKind::Seely, &[("nu0", 1.0), ("nu_inf", 0.5), ("tau0", 1.0)]),
        bulk(BulkKind::Glen, &[("A", 1.0), ("m", 3.0)]),
        bulk(BulkKind::Blatter, &[("A", 1.0), ("tau0", 0.5), ("n", 3.0)]),
        bulk(BulkKind::Bingham, &[("nu", 0.5), ("tau_star", 1.0)]),
        bulk(BulkKind::HerschelBulkley, &[("nu", 0.5), ("tau_star", 1.0), ("r", 2.0)]),
        bulk(BulkKind::ActivatedEuler, &[("nu", 0.5), ("delta_star", 1.0)]),
    ]
}

/// One representative of each wall catalog kind.
pub fn default_boundary_catalog() -> Vec<BoundaryRelation> {
    vec![
        boundary(BoundaryKind::NavierSlip, &[("gamma", 1.0)]),
        boundary(BoundaryKind::PowerSlip, &[("gamma", 1.0), ("q", 2.0)]),
        boundary(BoundaryKind::PowerSlip, &[("gamma", 1.0), ("q", 3.0)]),
        boundary(BoundaryKind::PowerSlip, &[("gamma", 1.0), ("q", 1.5)]),
        boundary(BoundaryKind::RegularizedPowerSlip, &[("gamma", 1.0), ("q", 3.0)]),
        boundary(BoundaryKind::StickSlip, &[("sigma_star", 1.0)]),
        boundary(BoundaryKind::ActivatedNavierSlip, &[("gamma", 1.0), ("beta_star", 0.5)]),
    ]
}

/// `S = (1 + |D|)^(r-2) D` with `r = 1/2`: the stress magnitude rises and
/// then falls (past `|D| = 2`), so monotonicity must fail. Negative fixture.
pub fn nonmonotone_fixture() -> BulkRelation {
    let params = [("r".to_string(), 0.5)].into_iter().collect();
    BulkRelation::custom("shifted_power", &params, Orientation::Stress).expect("valid fixture")
}
