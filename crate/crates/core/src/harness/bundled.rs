//! Scenario and relation files shipped with the crate, so the command line
//! can refer to them by name from any working directory.

use std::path::Path;

use crate::error::{Result, RheoError};

/// Bundled scenario files, `(name, text)`.
pub const SCENARIOS: &[(&str, &str)] = &[
    (
        "activated_euler_channel",
        include_str!("../../../../scenarios/activated_euler_channel.conf"),
    ),
    ("bingham_plug", include_str!("../../../../scenarios/bingham_plug.conf")),
    (
        "couette_stick_slip",
        include_str!("../../../../scenarios/couette_stick_slip.conf"),
    ),
    (
        "poiseuille_NS_navier",
        include_str!("../../../../scenarios/poiseuille_NS_navier.conf"),
    ),
    (
        "poiseuille_powerlaw_r3_powerslip",
        include_str!("../../../../scenarios/poiseuille_powerlaw_r3_powerslip.conf"),
    ),
    (
        "powerlaw_channel_fast",
        include_str!("../../../../scenarios/powerlaw_channel_fast.conf"),
    ),
    ("rest", include_str!("../../../../scenarios/rest.conf")),
    ("stokes_decay", include_str!("../../../../scenarios/stokes_decay.conf")),
];

/// Bundled relation files, `(name, text)`.
pub const RELATIONS: &[(&str, &str)] = &[
    (
        "activated_euler",
        include_str!("../../../../relations/activated_euler.conf"),
    ),
    (
        "activated_navier_slip",
        include_str!("../../../../relations/activated_navier_slip.conf"),
    ),
    ("bingham", include_str!("../../../../relations/bingham.conf")),
    ("blatter", include_str!("../../../../relations/blatter.conf")),
    ("carreau", include_str!("../../../../relations/carreau.conf")),
    (
        "carreau_yasuda",
        include_str!("../../../../relations/carreau_yasuda.conf"),
    ),
    ("cross", include_str!("../../../../relations/cross.conf")),
    ("ellis", include_str!("../../../../relations/ellis.conf")),
    ("eyring", include_str!("../../../../relations/eyring.conf")),
    ("glen", include_str!("../../../../relations/glen.conf")),
    (
        "herschel_bulkley",
        include_str!("../../../../relations/herschel_bulkley.conf"),
    ),
    ("navier_slip", include_str!("../../../../relations/navier_slip.conf")),
    (
        "navier_stokes",
        include_str!("../../../../relations/navier_stokes.conf"),
    ),
    (
        "nonmonotone_fixture",
        include_str!("../../../../relations/nonmonotone_fixture.conf"),
    ),
    (
        "power_law_r1.5",
        include_str!("../../../../relations/power_law_r1.5.conf"),
    ),
    ("power_law_r2", include_str!("../../../../relations/power_law_r2.conf")),
    ("power_law_r3", include_str!("../../../../relations/power_law_r3.conf")),
    (
        "power_slip_q1.5",
        include_str!("../../../../relations/power_slip_q1.5.conf"),
    ),
    (
        "power_slip_q2",
        include_str!("../../../../relations/power_slip_q2.conf"),
    ),
    (
        "power_slip_q3",
        include_str!("../../../../relations/power_slip_q3.conf"),
    ),
    (
        "regularized_power_slip",
        include_str!("../../../../relations/regularized_power_slip.conf"),
    ),
    ("seely", include_str!("../../../../relations/seely.conf")),
    ("sisko", include_str!("../../../../relations/sisko.conf")),
    ("stick_slip", include_str!("../../../../relations/stick_slip.conf")),
];

fn lookup(table: &[(&str, &'static str)], name: &str) -> Option<&'static str> {
    table.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn scenario_text(name: &str) -> Option<&'static str> {
    lookup(SCENARIOS, name)
}

pub fn relation_text(name: &str) -> Option<&'static str> {
    lookup(RELATIONS, name)
}

/// Text of `arg`: an existing file path wins, then a bundled name (with or
/// without the `.conf` extension).
pub fn resolve(arg: &str, table: &[(&str, &'static str)], what: &str) -> Result<String> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(std::fs::read_to_string(path)?);
    }
    let name = arg.strip_suffix(".conf").unwrap_or(arg);
    if let Some(t) = lookup(table, name) {
        return Ok(t.to_string());
    }
    let known: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
    Err(RheoError::Config(format!(
        "no {what} file `{arg}` and no bundled {what} of that name (bundled: {})",
        known.join(", ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Scenario;
    use crate::relation::kv::parse_relation;

    #[test]
    fn every_bundled_file_parses() {
        for (name, text) in SCENARIOS {
            let sc = Scenario::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&sc.name, name, "scenario name must match its file name");
        }
        for (name, text) in RELATIONS {
            parse_relation(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn resolves_names_and_rejects_unknown() {
        assert!(resolve("rest", SCENARIOS, "scenario").is_ok());
        assert!(resolve("rest.conf", SCENARIOS, "scenario").is_ok());
        assert!(resolve("no_such_thing", SCENARIOS, "scenario").is_err());
    }
}
