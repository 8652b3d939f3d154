//! Trajectory CSV ingestion and serialization.
//!
//! Format: UTF-8, header `traj_id,k,x1,...,xn`, decimal point `.`, one
//! observation per row. Trajectories are grouped by id and sorted by
//! sample index; a trajectory with gaps or duplicate indexes is rejected
//! with a warning rather than resampled, and one with fewer than two
//! points is dropped with a warning.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use anyhow::{bail, Context};
use fieldatlas_core::traj::{Observation, Point, Trajectory};

#[derive(Debug)]
pub struct ParseOutcome {
    pub trajectories: Vec<Trajectory>,
    pub warnings: Vec<String>,
}

/// Parses a trajectory CSV stream. When `expected_dim` is given the header
/// must match it; otherwise the dimension is inferred from the header.
pub fn parse_trajectories<R: Read>(source: R, expected_dim: Option<usize>) -> anyhow::Result<ParseOutcome> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers().context("reading CSV header")?.clone();
    if headers.len() < 3 || headers.get(0) != Some("traj_id") || headers.get(1) != Some("k") {
        bail!("bad header: expected `traj_id,k,x1,...,xn`, got {:?}", headers);
    }
    let dim = headers.len() - 2;
    for (i, h) in headers.iter().skip(2).enumerate() {
        let want = format!("x{}", i + 1);
        if h != want {
            bail!("bad header: column {} should be `{}`, got `{}`", i + 3, want, h);
        }
    }
    if let Some(n) = expected_dim {
        if n != dim {
            bail!("schema error: expected dimension {n}, file has {dim}");
        }
    }

    // BTreeMap keeps the output in deterministic id order.
    let mut groups: BTreeMap<String, Vec<Observation>> = BTreeMap::new();
    for (row_idx, record) in reader.records().enumerate() {
        let line = row_idx + 2; // header is line 1
        let record = record.with_context(|| format!("line {line}: malformed row"))?;
        if record.len() != dim + 2 {
            bail!("line {line}: expected {} fields, got {}", dim + 2, record.len());
        }
        let id = record.get(0).expect("length checked").to_string();
        let k: u64 = record
            .get(1)
            .expect("length checked")
            .parse()
            .with_context(|| format!("line {line}: bad sample index"))?;
        let mut coords = Vec::with_capacity(dim);
        for field in record.iter().skip(2) {
            let v: f64 = field
                .parse()
                .with_context(|| format!("line {line}: bad coordinate `{field}`"))?;
            coords.push(v);
        }
        groups.entry(id).or_default().push(Observation { k, z: Point::new(coords) });
    }

    let mut trajectories = Vec::new();
    let mut warnings = Vec::new();
    for (id, mut obs) in groups {
        obs.sort_by_key(|o| o.k);
        match Trajectory::new(id.clone(), obs) {
            Ok(t) => trajectories.push(t),
            Err(e) => warnings.push(format!("trajectory `{id}` dropped: {e}")),
        }
    }
    Ok(ParseOutcome { trajectories, warnings })
}

/// Writes trajectories back to the ingestion format.
pub fn write_trajectories<W: Write>(out: W, trajectories: &[Trajectory]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = trajectories.first().map_or(2, |t| t.dim());
    let mut header = vec!["traj_id".to_string(), "k".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for t in trajectories {
        for o in &t.observations {
            let mut row = vec![t.id.clone(), o.k.to_string()];
            row.extend(o.z.coords.iter().map(|c| format_float(*c)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that round-trips exactly.
fn format_float(v: f64) -> String {
    let mut s = format!("{v}");
    if s.parse::<f64>().map(|p| p.to_bits()) != Ok(v.to_bits()) {
        s = format!("{v:?}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_valid_input() {
        let csv = "traj_id,k,x1,x2\na,0,0,0\na,1,1,0\n";
        let out = parse_trajectories(csv.as_bytes(), Some(2)).unwrap();
        assert_eq!(out.trajectories.len(), 1);
        assert_eq!(out.trajectories[0].len(), 2);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn empty_file_with_header() {
        let out = parse_trajectories("traj_id,k,x1,x2\n".as_bytes(), None).unwrap();
        assert!(out.trajectories.is_empty());
    }

    #[test]
    fn non_uniform_spacing_rejected_per_trajectory() {
        let csv = "traj_id,k,x1,x2\nA,0,0,0\nA,1,1,0\nA,2,2,0\nB,0,0,0\nB,2,1,0\n";
        let out = parse_trajectories(csv.as_bytes(), None).unwrap();
        assert_eq!(out.trajectories.len(), 1);
        assert_eq!(out.trajectories[0].id, "A");
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("B"));
    }

    #[test]
    fn short_trajectory_dropped_with_warning() {
        let csv = "traj_id,k,x1,x2\nA,0,0,0\n";
        let out = parse_trajectories(csv.as_bytes(), None).unwrap();
        assert!(out.trajectories.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let csv = "traj_id,k,x1,x2\nA,0,0,0\nA,1,zzz,0\n";
        let err = parse_trajectories(csv.as_bytes(), None).unwrap_err();
        assert!(format!("{err:#}").contains("line 3"));
    }

    #[test]
    fn dimension_mismatch_is_schema_error() {
        let csv = "traj_id,k,x1,x2\nA,0,0,0\n";
        assert!(parse_trajectories(csv.as_bytes(), Some(3)).is_err());
    }

    #[test]
    fn parse_serialize_parse_identity() {
        let csv = "traj_id,k,x1,x2\nA,0,0.25,-1.5\nA,1,1.125,0\nB,0,3,4\nB,1,3.5,4.25\n";
        let first = parse_trajectories(csv.as_bytes(), None).unwrap();
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &first.trajectories).unwrap();
        let second = parse_trajectories(buf.as_slice(), None).unwrap();
        assert_eq!(first.trajectories, second.trajectories);
    }
}
