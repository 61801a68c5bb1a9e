//! Text formats for points, pair sets and transport instances.
//!
//! All formats are line oriented, whitespace separated, and treat `#` as the
//! start of a comment.

use crate::error::{Error, Result};
use crate::group::{GroupModel, GroupPoint, HorizontalVector};
use crate::transport::DiscreteMeasure;

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then_some((k + 1, body))
    })
}

fn numbers(line: usize, body: &str) -> Result<Vec<f64>> {
    body.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_error(line, format!("invalid number '{tok}'")))
        })
        .collect()
}

fn point(model: GroupModel, line: usize, body: &str) -> Result<GroupPoint> {
    let coords = numbers(line, body)?;
    if coords.len() != model.topological_dim() {
        return Err(parse_error(
            line,
            format!(
                "expected {} coordinates for {model}, got {}",
                model.topological_dim(),
                coords.len()
            ),
        ));
    }
    model.point(&coords).map_err(|e| parse_error(line, e.to_string()))
}

/// Parses a single point given as whitespace- or comma-separated
/// coordinates.
pub fn parse_point(text: &str, model: GroupModel) -> Result<GroupPoint> {
    point(model, 1, &text.replace(',', " "))
}

/// One point per line.
pub fn parse_points(text: &str, model: GroupModel) -> Result<Vec<GroupPoint>> {
    records(text).map(|(line, body)| point(model, line, body)).collect()
}

/// One pair per line: `x y t | p1 p2` (four coordinates on Engel).
pub fn parse_pairs(text: &str, model: GroupModel) -> Result<Vec<(GroupPoint, HorizontalVector)>> {
    records(text)
        .map(|(line, body)| {
            let (lhs, rhs) = body
                .split_once('|')
                .ok_or_else(|| parse_error(line, "missing '|' between point and vector"))?;
            let g = point(model, line, lhs)?;
            let p = numbers(line, rhs)?;
            if p.len() != 2 {
                return Err(parse_error(
                    line,
                    format!("expected 2 vector components, got {}", p.len()),
                ));
            }
            Ok((g, HorizontalVector::new(p[0], p[1])))
        })
        .collect()
}

/// Sections `[mu]` and `[nu]`, each line `weight x y t`.
pub fn parse_instance(text: &str) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let model = GroupModel::Heisenberg;
    let mut mu = Vec::new();
    let mut nu = Vec::new();
    let mut section: Option<bool> = None;
    let mut last_line = 0;
    for (line, body) in records(text) {
        last_line = line;
        match body {
            "[mu]" => section = Some(true),
            "[nu]" => section = Some(false),
            _ if body.starts_with('[') => return Err(parse_error(line, format!("unknown section {body}"))),
            _ => {
                let target = match section {
                    Some(true) => &mut mu,
                    Some(false) => &mut nu,
                    None => return Err(parse_error(line, "atom outside a [mu] or [nu] section")),
                };
                let values = numbers(line, body)?;
                if values.len() != 1 + model.topological_dim() {
                    return Err(parse_error(
                        line,
                        format!("expected 'weight x y t', got {} numbers", values.len()),
                    ));
                }
                let g = model
                    .point(&values[1..])
                    .map_err(|e| parse_error(line, e.to_string()))?;
                target.push((line, g, values[0]));
            }
        }
    }
    let build = |atoms: Vec<(usize, GroupPoint, f64)>, name: &str| -> Result<DiscreteMeasure> {
        let first = atoms.first().map_or(last_line, |a| a.0);
        if atoms.is_empty() {
            return Err(parse_error(last_line.max(1), format!("section [{name}] has no atoms")));
        }
        if let Some((line, _, w)) = atoms.iter().find(|a| !(a.2 > 0.0)) {
            return Err(parse_error(*line, format!("weight must be positive, got {w}")));
        }
        DiscreteMeasure::new(atoms.into_iter().map(|(_, g, w)| (g, w)).collect())
            .map_err(|e| parse_error(first, format!("[{name}]: {e}")))
    };
    Ok((build(mu, "mu")?, build(nu, "nu")?))
}

/// Writes a measure pair in the format read by [`parse_instance`].
pub fn format_instance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> String {
    let mut out = String::new();
    for (name, m) in [("mu", mu), ("nu", nu)] {
        out.push_str(&format!("[{name}]\n"));
        for (g, w) in m.atoms() {
            let c = g.coords();
            out.push_str(&format!("{w:e} {:e} {:e} {:e}\n", c[0], c[1], c[2]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_and_pairs() {
        let pts = parse_points("# header\n1 2 3\n\n 0 0 0 # origin\n", GroupModel::Heisenberg).unwrap();
        assert_eq!(pts.len(), 2);
        let pairs = parse_pairs("1 0 0 0 | 2 3\n", GroupModel::Engel).unwrap();
        assert_eq!(pairs[0].1, HorizontalVector::new(2.0, 3.0));
        assert_eq!(parse_point("1,2,3", GroupModel::Heisenberg).unwrap().coord(2), 3.0);
    }

    #[test]
    fn malformed_records_report_line_numbers() {
        let err = parse_pairs("0 0 0 | 1 1\n0 0 | 1 1\n", GroupModel::Heisenberg).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_pairs("\n\n0 0 0 1 1\n", GroupModel::Heisenberg).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_points("1 2 x\n", GroupModel::Heisenberg).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn instances_round_trip() {
        let text = "[mu]\n0.5 0 0 0\n0.5 1 0 0\n[nu]\n1 2 0 0\n";
        let (mu, nu) = parse_instance(text).unwrap();
        assert_eq!((mu.len(), nu.len()), (2, 1));
        let (mu2, nu2) = parse_instance(&format_instance(&mu, &nu)).unwrap();
        assert_eq!(mu2, mu);
        assert_eq!(nu2, nu);
        assert!(matches!(
            parse_instance("0.5 0 0 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_instance("[mu]\n1 0 0 0\n[nu]\n0.7 0 0 0\n"),
            Err(Error::Parse { line: 4, .. })
        ));
    }
}
