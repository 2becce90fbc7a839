//! Line-oriented `key = value` text format shared by relation and scenario
//! files. `#` starts a comment; blank lines are ignored; keys are unique.
//!
//! A relation file looks like
//!
//! ```text
//! relation = bulk        # or `boundary`; defaults to bulk
//! kind = carreau
//! nu0 = 1.0
//! nu_inf = 0.1
//! A = 1.0
//! n = 0.5
//! form = stress          # optional; canonical orientation when omitted
//! ```
//!
//! `kind = custom` additionally takes `law = <name>` and requires `form`.

use std::collections::BTreeMap;

use super::{BoundaryKind, BoundaryRelation, BulkKind, BulkRelation, Orientation};
use crate::error::{Result, RheoError};

/// One `key = value` line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KvEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parse the text into entries, rejecting malformed lines and duplicates.
pub fn parse_kv(text: &str) -> Result<Vec<KvEntry>> {
    let mut out: Vec<KvEntry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| RheoError::Parse {
            line,
            msg: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(RheoError::Parse {
                line,
                msg: "empty key".into(),
            });
        }
        if value.is_empty() {
            return Err(RheoError::Parse {
                line,
                msg: format!("empty value for `{key}`"),
            });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(RheoError::Parse {
                line,
                msg: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
        out.push(KvEntry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

/// Parse a real number, reporting the line on failure.
pub fn parse_f64(entry: &KvEntry) -> Result<f64> {
    let v: f64 = entry.value.parse().map_err(|_| RheoError::Parse {
        line: entry.line,
        msg: format!("`{}` expects a number, got `{}`", entry.key, entry.value),
    })?;
    if !v.is_finite() {
        return Err(RheoError::Parse {
            line: entry.line,
            msg: format!("`{}` must be finite", entry.key),
        });
    }
    Ok(v)
}

/// A parsed relation of either family.
#[derive(Clone, Debug)]
pub enum AnyRelation {
    Bulk(BulkRelation),
    Boundary(BoundaryRelation),
}

const STRUCTURAL_KEYS: [&str; 4] = ["relation", "kind", "form", "law"];

fn find<'a>(entries: &'a [KvEntry], key: &str) -> Option<&'a KvEntry> {
    entries.iter().find(|e| e.key == key)
}

fn line_of(entries: &[KvEntry], key: &str) -> usize {
    find(entries, key)
        .or_else(|| find(entries, "kind"))
        .map(|e| e.line)
        .or_else(|| entries.first().map(|e| e.line))
        .unwrap_or(0)
}

fn attach_line(entries: &[KvEntry], err: RheoError) -> RheoError {
    match err {
        RheoError::InvalidParameter { name, reason } => RheoError::Parse {
            line: line_of(entries, &name),
            msg: format!("invalid parameter `{name}`: {reason}"),
        },
        other => other,
    }
}

fn check_unknown(entries: &[KvEntry], allowed: &[&str], context: &str) -> Result<()> {
    for e in entries {
        if !STRUCTURAL_KEYS.contains(&e.key.as_str()) && !allowed.contains(&e.key.as_str()) {
            return Err(RheoError::Parse {
                line: e.line,
                msg: format!(
                    "unknown key `{}` for {context} (expected one of: {})",
                    e.key,
                    allowed.join(", ")
                ),
            });
        }
    }
    Ok(())
}

fn numeric_params(entries: &[KvEntry]) -> Result<BTreeMap<String, f64>> {
    let mut params = BTreeMap::new();
    for e in entries {
        if STRUCTURAL_KEYS.contains(&e.key.as_str()) {
            continue;
        }
        params.insert(e.key.clone(), parse_f64(e)?);
    }
    Ok(params)
}

fn orientation_of(entries: &[KvEntry]) -> Result<Option<Orientation>> {
    match find(entries, "form") {
        None => Ok(None),
        Some(e) => Orientation::parse(&e.value).map(Some).ok_or_else(|| RheoError::Parse {
            line: e.line,
            msg: format!("`form` must be `stress` or `rate`, got `{}`", e.value),
        }),
    }
}

fn kind_entry(entries: &[KvEntry]) -> Result<&KvEntry> {
    find(entries, "kind").ok_or_else(|| RheoError::Parse {
        line: entries.first().map(|e| e.line).unwrap_or(1),
        msg: "missing required key `kind`".into(),
    })
}

fn custom_parts(entries: &[KvEntry], kind_line: usize) -> Result<(&KvEntry, Orientation)> {
    let law = find(entries, "law").ok_or_else(|| RheoError::Parse {
        line: kind_line,
        msg: "custom relations need `law`".into(),
    })?;
    let orientation = orientation_of(entries)?.ok_or_else(|| RheoError::Parse {
        line: kind_line,
        msg: "custom relations must declare `form = stress|rate`".into(),
    })?;
    Ok((law, orientation))
}

fn reject_law(entries: &[KvEntry]) -> Result<()> {
    if let Some(e) = find(entries, "law") {
        return Err(RheoError::Parse {
            line: e.line,
            msg: "`law` is only valid for kind = custom".into(),
        });
    }
    Ok(())
}

/// Build a bulk relation from entries (the `relation` key, if present, is
/// ignored here).
pub fn bulk_from_entries(entries: &[KvEntry]) -> Result<BulkRelation> {
    let kind_e = kind_entry(entries)?;
    let kind = BulkKind::parse(&kind_e.value).ok_or_else(|| RheoError::Parse {
        line: kind_e.line,
        msg: format!(
            "unknown bulk kind `{}` (expected one of: {})",
            kind_e.value,
            BulkKind::ALL.map(|k| k.as_str()).join(", ")
        ),
    })?;
    if kind == BulkKind::Custom {
        let (law, orientation) = custom_parts(entries, kind_e.line)?;
        check_unknown(entries, &["r"], &format!("custom law {}", law.value))?;
        let params = numeric_params(entries)?;
        return BulkRelation::custom(&law.value, &params, orientation).map_err(|e| attach_line(entries, e));
    }
    reject_law(entries)?;
    check_unknown(entries, kind.param_keys(), kind.as_str())?;
    let params = numeric_params(entries)?;
    let orientation = orientation_of(entries)?;
    BulkRelation::new(kind, &params, orientation).map_err(|e| attach_line(entries, e))
}

/// Build a wall relation from entries.
pub fn boundary_from_entries(entries: &[KvEntry]) -> Result<BoundaryRelation> {
    let kind_e = kind_entry(entries)?;
    let kind = BoundaryKind::parse(&kind_e.value).ok_or_else(|| RheoError::Parse {
        line: kind_e.line,
        msg: format!(
            "unknown boundary kind `{}` (expected one of: {})",
            kind_e.value,
            BoundaryKind::ALL.map(|k| k.as_str()).join(", ")
        ),
    })?;
    if kind == BoundaryKind::Custom {
        let (law, orientation) = custom_parts(entries, kind_e.line)?;
        check_unknown(entries, &["q"], &format!("custom law {}", law.value))?;
        let params = numeric_params(entries)?;
        return BoundaryRelation::custom(&law.value, &params, orientation).map_err(|e| attach_line(entries, e));
    }
    reject_law(entries)?;
    let allowed: Vec<&str> = kind.param_keys().iter().chain(kind.optional_keys()).copied().collect();
    check_unknown(entries, &allowed, kind.as_str())?;
    let params = numeric_params(entries)?;
    let orientation = orientation_of(entries)?;
    BoundaryRelation::new(kind, &params, orientation).map_err(|e| attach_line(entries, e))
}

/// Parse a complete relation file.
pub fn parse_relation(text: &str) -> Result<AnyRelation> {
    let entries = parse_kv(text)?;
    if entries.is_empty() {
        return Err(RheoError::Parse {
            line: 1,
            msg: "empty relation file".into(),
        });
    }
    match find(&entries, "relation") {
        None => bulk_from_entries(&entries).map(AnyRelation::Bulk),
        Some(e) if e.value == "bulk" => bulk_from_entries(&entries).map(AnyRelation::Bulk),
        Some(e) if e.value == "boundary" => boundary_from_entries(&entries).map(AnyRelation::Boundary),
        Some(e) => Err(RheoError::Parse {
            line: e.line,
            msg: format!("`relation` must be `bulk` or `boundary`, got `{}`", e.value),
        }),
    }
}

fn format_value(v: f64) -> String {
    // `{:?}` prints the shortest representation that round-trips exactly.
    format!("{v:?}")
}

fn write_common(
    family: &str,
    kind: &str,
    law: Option<&str>,
    orientation: Orientation,
    params: &BTreeMap<String, f64>,
) -> String {
    let mut out = format!("relation = {family}\nkind = {kind}\n");
    if let Some(law) = law {
        out.push_str(&format!("law = {law}\n"));
    }
    out.push_str(&format!("form = {}\n", orientation.as_str()));
    for (k, v) in params {
        out.push_str(&format!("{k} = {}\n", format_value(*v)));
    }
    out
}

/// Serialize a bulk relation; closures cannot be written.
pub fn bulk_to_kv(rel: &BulkRelation) -> Result<String> {
    use super::Relation;
    if !rel.is_serializable() {
        return Err(RheoError::Unavailable {
            kind: rel.kind_name().to_string(),
            what: "text serialization of a closure relation",
        });
    }
    Ok(write_common(
        "bulk",
        rel.kind().as_str(),
        rel.custom_law_name(),
        rel.orientation(),
        rel.params(),
    ))
}

/// Serialize a wall relation; closures cannot be written.
pub fn boundary_to_kv(rel: &BoundaryRelation) -> Result<String> {
    use super::Relation;
    if !rel.is_serializable() {
        return Err(RheoError::Unavailable {
            kind: rel.kind_name().to_string(),
            what: "text serialization of a closure relation",
        });
    }
    Ok(write_common(
        "boundary",
        rel.kind().as_str(),
        rel.custom_law_name(),
        rel.orientation(),
        rel.params(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::Relation;
    use crate::tensor::SymTensor2;

    #[test]
    fn parses_carreau() {
        let text = "# a fluid\nkind = carreau\nnu0 = 1.0\nnu_inf=0.1 # trailing\nA = 1\nn = 0.5\n";
        let rel = match parse_relation(text).unwrap() {
            AnyRelation::Bulk(b) => b,
            _ => panic!("expected bulk"),
        };
        assert_eq!(rel.kind(), BulkKind::Carreau);
        assert_eq!(rel.param("nu_inf"), Some(0.1));
        assert_eq!(rel.orientation(), Orientation::Stress);
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = "kind = navier_stokes\nnu = 1\n\nviscosity = 2\n";
        match parse_relation(text) {
            Err(RheoError::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("viscosity"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_value_reports_line() {
        let text = "kind = bingham\nnu = 0.5\ntau_star = -1\n";
        match parse_relation(text) {
            Err(RheoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "kind = bingham\nnu = half\ntau_star = 1\n";
        match parse_relation(text) {
            Err(RheoError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        assert!(matches!(parse_kv("kind navier"), Err(RheoError::Parse { line: 1, .. })));
        assert!(matches!(
            parse_kv("a = 1\na = 2"),
            Err(RheoError::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_kv("a ="), Err(RheoError::Parse { line: 1, .. })));
    }

    #[test]
    fn boundary_and_custom_files() {
        let text = "relation = boundary\nkind = stick_slip\nsigma_star = 1\n";
        assert!(matches!(parse_relation(text).unwrap(), AnyRelation::Boundary(_)));
        let text = "kind = custom\nlaw = shifted_power\nr = 3\n";
        assert!(parse_relation(text).is_err(), "custom needs a form");
        let text = "kind = custom\nlaw = shifted_power\nform = stress\nr = 3\n";
        assert!(parse_relation(text).is_ok());
        let text = "kind = navier_stokes\nlaw = zero\nnu = 1\n";
        assert!(parse_relation(text).is_err());
    }

    #[test]
    fn round_trip_catalog() {
        for rel in crate::catalog::default_bulk_catalog() {
            let text = bulk_to_kv(&rel).unwrap();
            let back = match parse_relation(&text).unwrap() {
                AnyRelation::Bulk(b) => b,
                _ => panic!(),
            };
            assert_eq!(back.kind(), rel.kind());
            assert_eq!(back.params(), rel.params());
            assert_eq!(back.orientation(), rel.orientation());
            let d = SymTensor2::new2(0.3, 0.8, -0.3);
            let s = SymTensor2::new2(1.1, -0.2, -1.1);
            let a = rel.residual(&s, &d).unwrap();
            let b = back.residual(&s, &d).unwrap();
            assert_eq!(a, b);
        }
        for rel in crate::catalog::default_boundary_catalog() {
            let text = boundary_to_kv(&rel).unwrap();
            assert!(matches!(parse_relation(&text).unwrap(), AnyRelation::Boundary(_)));
        }
    }
}
