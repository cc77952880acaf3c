//! CSV files: observations `j,m,N,S` (1-based, `S` optional) and scores
//! `item,score`.

use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::{BtlError, BtlObservation, ComparisonGraph, Edge, ScoreVector};

#[derive(Debug, Serialize, Deserialize)]
struct ObservationRow {
    j: usize,
    m: usize,
    #[serde(rename = "N")]
    count: u32,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    wins: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    item: usize,
    score: f64,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BtlError + '_ {
    move |source| BtlError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, msg: String) -> BtlError {
    BtlError::Format {
        path: path.display().to_string(),
        msg,
    }
}

/// Reads an observation file. The item count is the largest index unless
/// `n` is given. Graph-only files (no `S` column) get zero wins and
/// `has_wins = false`.
pub fn read_observation(path: &Path, n: Option<usize>) -> Result<(BtlObservation, bool), BtlError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    for col in ["j", "m", "N"] {
        if !headers.iter().any(|h| h == col) {
            return Err(format_err(path, format!("missing column `{col}`")));
        }
    }
    let has_wins = headers.iter().any(|h| h == "S");
    let mut edges = Vec::new();
    let mut wins = Vec::new();
    for row in rdr.deserialize::<ObservationRow>() {
        let row = row.map_err(csv_err(path))?;
        if row.j == 0 || row.m == 0 {
            return Err(format_err(path, "indices are 1-based".into()));
        }
        if has_wins && row.wins.is_none() {
            return Err(format_err(
                path,
                format!("missing S for edge ({}, {})", row.j, row.m),
            ));
        }
        edges.push(Edge {
            j: row.j - 1,
            m: row.m - 1,
            count: row.count,
        });
        wins.push(row.wins.unwrap_or(0.0));
    }
    let max_idx = edges.iter().map(|e| e.m + 1).max().unwrap_or(0);
    let n = n.unwrap_or(max_idx).max(max_idx);
    let graph = ComparisonGraph::new(n, edges)?;
    Ok((BtlObservation::new(graph, wins)?, has_wins))
}

/// Writes `j,m,N,S` (or `j,m,N` when `with_wins` is false).
pub fn write_observation(
    path: &Path,
    obs: &BtlObservation,
    with_wins: bool,
) -> Result<(), BtlError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for (e, &s) in obs.graph().edges().iter().zip(obs.wins()) {
        w.serialize(ObservationRow {
            j: e.j + 1,
            m: e.m + 1,
            count: e.count,
            wins: with_wins.then_some(s),
        })
        .map_err(csv_err(path))?;
    }
    if obs.graph().edges().is_empty() {
        let header: &[&str] = if with_wins {
            &["j", "m", "N", "S"]
        } else {
            &["j", "m", "N"]
        };
        w.write_record(header).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| BtlError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads `item,score` rows (1-based items, any order, all items present).
pub fn read_scores(path: &Path) -> Result<ScoreVector, BtlError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut rows: Vec<ScoreRow> = Vec::new();
    for row in rdr.deserialize() {
        rows.push(row.map_err(csv_err(path))?);
    }
    let n = rows.len();
    let mut v = Array1::from_elem(n, f64::NAN);
    for r in rows {
        if r.item == 0 || r.item > n {
            return Err(format_err(
                path,
                format!("item {} out of range 1..={n}", r.item),
            ));
        }
        v[r.item - 1] = r.score;
    }
    ScoreVector::new(v).map_err(|_| format_err(path, "missing or non-finite score".into()))
}

/// Writes `item,score` with 17 significant digits.
pub fn write_scores(path: &Path, scores: &Array1<f64>) -> Result<(), BtlError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["item", "score"]).map_err(csv_err(path))?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{s:.16e}")])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| BtlError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn observation_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("obs.csv");
        let g = ComparisonGraph::complete(3, 4).unwrap();
        let obs = BtlObservation::new(g, vec![1.0, 4.0, 0.0]).unwrap();
        write_observation(&p, &obs, true).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("j,m,N,S\n1,2,4,1.0\n"));
        let (back, has) = read_observation(&p, None).unwrap();
        assert!(has);
        assert_eq!(back, obs);
    }

    #[test]
    fn graph_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        std::fs::write(&p, "j,m,N\n1,2,3\n2,4,1\n").unwrap();
        let (obs, has) = read_observation(&p, None).unwrap();
        assert!(!has);
        assert_eq!(obs.graph().n(), 4);
        assert!(!obs.graph().is_connected());
        std::fs::write(&p, "j,m,N,S\n2,1,3,1\n").unwrap();
        assert!(matches!(
            read_observation(&p, None),
            Err(BtlError::InvalidEdge { .. })
        ));
        std::fs::write(&p, "j,N\n1,2\n").unwrap();
        assert!(matches!(
            read_observation(&p, None),
            Err(BtlError::Format { .. })
        ));
    }

    #[test]
    fn scores_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = array![0.1, -1.0 / 3.0, 2.0e-17];
        write_scores(&p, &s).unwrap();
        assert_eq!(read_scores(&p).unwrap().as_array(), &s);
    }
}
