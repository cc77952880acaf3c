use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::ExperimentError;

/// A study row with a fixed column order.
pub trait StudyRecord: Serialize + DeserializeOwned {
    const COLUMNS: &'static [&'static str];
    fn n(&self) -> usize;
    fn rep(&self) -> usize;
    fn seed(&self) -> u64;
    fn cells(&self) -> Vec<String>;
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoRecord {
    pub study: String,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub rho_dual: Option<f64>,
    pub rho_dual_l2: Option<f64>,
    pub connected: bool,
    /// `min_j (F_jj - sum_{m != j} |F_jm|)`.
    pub diag_dom_margin: Option<f64>,
}

impl StudyRecord for RhoRecord {
    const COLUMNS: &'static [&'static str] = &[
        "study",
        "n",
        "rep",
        "seed",
        "rho_dual",
        "rho_dual_l2",
        "connected",
        "diag_dom_margin",
    ];
    fn n(&self) -> usize {
        self.n
    }
    fn rep(&self) -> usize {
        self.rep
    }
    fn seed(&self) -> u64 {
        self.seed
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.study.clone(),
            self.n.to_string(),
            self.rep.to_string(),
            self.seed.to_string(),
            opt(self.rho_dual),
            opt(self.rho_dual_l2),
            self.connected.to_string(),
            opt(self.diag_dom_margin),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub study: String,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    /// `|F^{-1} A|_inf`
    pub lead_fish: Option<f64>,
    /// `|D^{-2} A|_inf`
    pub lead_diag: Option<f64>,
    /// `|v~ - v* + F^{-1} A|_inf`
    pub rem_fish: Option<f64>,
    /// `|v~ - v* + D^{-2} A|_inf`
    pub rem_diag: Option<f64>,
    pub converged: bool,
}

impl StudyRecord for ExpansionRecord {
    const COLUMNS: &'static [&'static str] = &[
        "study",
        "n",
        "rep",
        "seed",
        "lead_fish",
        "lead_diag",
        "rem_fish",
        "rem_diag",
        "converged",
    ];
    fn n(&self) -> usize {
        self.n
    }
    fn rep(&self) -> usize {
        self.rep
    }
    fn seed(&self) -> u64 {
        self.seed
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.study.clone(),
            self.n.to_string(),
            self.rep.to_string(),
            self.seed.to_string(),
            opt(self.lead_fish),
            opt(self.lead_diag),
            opt(self.rem_fish),
            opt(self.rem_diag),
            self.converged.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoRecord {
    pub study: String,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    #[serde(rename = "ppT")]
    pub ppt: Option<f64>,
    pub rate: Option<f64>,
    pub cert_ok: bool,
    /// Steps run; 0 when the replication failed before alternating.
    pub steps: usize,
}

impl StudyRecord for AoRecord {
    const COLUMNS: &'static [&'static str] = &[
        "study", "n", "rep", "seed", "ppT", "rate", "cert_ok", "steps",
    ];
    fn n(&self) -> usize {
        self.n
    }
    fn rep(&self) -> usize {
        self.rep
    }
    fn seed(&self) -> u64 {
        self.seed
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.study.clone(),
            self.n.to_string(),
            self.rep.to_string(),
            self.seed.to_string(),
            opt(self.ppt),
            opt(self.rate),
            self.cert_ok.to_string(),
            self.steps.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(ExperimentError::InvalidConfig(format!(
                "unknown format {other}"
            ))),
        }
    }
}

/// `<path>.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `records` to `path` and `meta` to the sidecar next to it.
pub fn emit<R: StudyRecord>(
    records: &[R],
    format: Format,
    path: &Path,
    meta: &serde_json::Value,
) -> Result<(), ExperimentError> {
    let text = match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| ExperimentError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            };
            w.write_record(R::COLUMNS).map_err(err)?;
            for r in records {
                w.write_record(r.cells()).map_err(err)?;
            }
            w.into_inner().map_err(|e| ExperimentError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        }
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(records).map_err(|e| ExperimentError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            v.push(b'\n');
            v
        }
    };
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&text).map_err(io_err(path))?;
    let side = sidecar_path(path);
    let body = serde_json::to_string_pretty(meta).unwrap_or_default();
    std::fs::write(&side, body + "\n").map_err(io_err(&side))
}

/// Reads records written by [`emit`].
pub fn read_records<R: StudyRecord>(
    format: Format,
    path: &Path,
) -> Result<Vec<R>, ExperimentError> {
    let parse = |e: String| ExperimentError::Io {
        path: path.display().to_string(),
        message: e,
    };
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_path(path).map_err(|e| parse(e.to_string()))?;
            r.deserialize()
                .collect::<Result<Vec<R>, _>>()
                .map_err(|e| parse(e.to_string()))
        }
        Format::Json => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            serde_json::from_str(&text).map_err(|e| parse(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(rep: usize, conn: bool) -> RhoRecord {
        RhoRecord {
            study: "rho".into(),
            n: 10,
            rep,
            seed: 42 + rep as u64,
            rho_dual: Some(0.123_456_789_012_345_68),
            rho_dual_l2: if conn { Some(1.0 / 3.0) } else { None },
            connected: conn,
            diag_dom_margin: Some(-2.5e-7),
        }
    }

    #[test]
    fn empty_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        emit::<AoRecord>(&[], Format::Csv, &p, &serde_json::json!({})).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "study,n,rep,seed,ppT,rate,cert_ok,steps\n"
        );
        assert!(sidecar_path(&p).exists());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![rec(0, true), rec(1, false), rec(2, true)];
        for (fmt, name) in [(Format::Csv, "r.csv"), (Format::Json, "r.json")] {
            let p = dir.path().join(name);
            emit(&recs, fmt, &p, &serde_json::json!({"seed": 1})).unwrap();
            assert_eq!(read_records::<RhoRecord>(fmt, &p).unwrap(), recs);
        }
        let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], RhoRecord::COLUMNS.join(","));
        assert!(lines
            .iter()
            .all(|l| l.split(',').count() == RhoRecord::COLUMNS.len()));
    }
}
