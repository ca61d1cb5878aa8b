//! On-disk formats: exact matrices and correlation expansions as JSON, sampled
//! paths as CSV or JSON.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so every file round-trips exactly.

use iou_core::density::StateVector;
use iou_core::exact::ExactMatrix;
use iou_core::rational::{parse_fraction, to_f64, to_fraction_string};
use iou_core::sampling::PathSample;
use iou_core::spectral::{CorrelationExpansion, CorrelationTerm, CrossCorrelation, HalfInt};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// Shortest round-trip rendering of a finite float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub which: String,
    pub dim: usize,
    /// Row-major `"num/den"` strings.
    pub entries: Vec<Vec<String>>,
}

impl MatrixRecord {
    pub fn new(which: &str, m: &ExactMatrix) -> Self {
        MatrixRecord {
            which: which.to_owned(),
            dim: m.size().saturating_sub(1),
            entries: m.rows().map(|r| r.iter().map(to_fraction_string).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ExactMatrix, FormatError> {
        let rows = self
            .entries
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| parse_fraction(s).ok_or_else(|| FormatError::Malformed(format!("bad fraction {s:?}"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        if rows.len() != self.dim + 1 || rows.iter().any(|r| r.len() != rows.len()) {
            return Err(FormatError::Malformed("matrix is not square of size dim + 1".into()));
        }
        Ok(ExactMatrix::from_rows(rows))
    }
}

/// Matrix rows as CSV of `"num/den"` cells, no header.
pub fn matrix_csv(m: &ExactMatrix) -> Result<String, FormatError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in m.rows() {
        w.write_record(row.iter().map(to_fraction_string))?;
    }
    into_string(w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    /// Exact coefficient as `"num/den"`.
    pub coeff: String,
    pub coeff_f64: f64,
    /// Decay rate written `"k+1/2"`.
    pub rate: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRecord {
    pub terms: Vec<TermRecord>,
}

impl ExpansionRecord {
    pub fn new(e: &CorrelationExpansion) -> Self {
        ExpansionRecord {
            terms: e
                .terms()
                .iter()
                .map(|t| TermRecord {
                    coeff: to_fraction_string(&t.coeff),
                    coeff_f64: to_f64(&t.coeff),
                    rate: t.rate.to_string(),
                })
                .collect(),
        }
    }

    pub fn to_expansion(&self) -> Result<CorrelationExpansion, FormatError> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let coeff = parse_fraction(&t.coeff)
                    .ok_or_else(|| FormatError::Malformed(format!("bad coefficient {:?}", t.coeff)))?;
                let rate =
                    HalfInt::parse(&t.rate).ok_or_else(|| FormatError::Malformed(format!("bad rate {:?}", t.rate)))?;
                Ok(CorrelationTerm { coeff, rate })
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(CorrelationExpansion::from_terms(terms))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub j: u32,
    pub k: u32,
    pub nonnegative_lag: ExpansionRecord,
    pub nonpositive_lag: ExpansionRecord,
}

impl CorrelationRecord {
    pub fn new(c: &CrossCorrelation) -> Self {
        CorrelationRecord {
            j: c.j,
            k: c.k,
            nonnegative_lag: ExpansionRecord::new(&c.nonnegative_lag),
            nonpositive_lag: ExpansionRecord::new(&c.nonpositive_lag),
        }
    }

    pub fn to_correlation(&self) -> Result<CrossCorrelation, FormatError> {
        Ok(CrossCorrelation {
            j: self.j,
            k: self.k,
            nonnegative_lag: self.nonnegative_lag.to_expansion()?,
            nonpositive_lag: self.nonpositive_lag.to_expansion()?,
        })
    }
}

/// Table of `E X_j(t+τ) X_k(t)` over a τ grid; columns `tau,c_j_k,...`.
pub fn correlation_csv(taus: &[f64], correlations: &[CrossCorrelation]) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("tau".to_owned()).chain(correlations.iter().map(|c| format!("c_{}_{}", c.j, c.k)));
    w.write_record(header)?;
    for &tau in taus {
        let row = std::iter::once(fmt_f64(tau)).chain(correlations.iter().map(|c| fmt_f64(c.eval(tau))));
        w.write_record(row)?;
    }
    into_string(w)
}

/// Which process a path file holds; fixes the column prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    W,
    X,
}

impl Process {
    fn prefix(self) -> &'static str {
        match self {
            Process::W => "w",
            Process::X => "x",
        }
    }
}

/// Header `time,w0,...,wn` (or `x0...`), one row per sampled time.
pub fn path_csv(path: &PathSample, process: Process) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("time".to_owned()).chain((0..=path.order()).map(|k| format!("{}{k}", process.prefix())));
    w.write_record(header)?;
    for (t, s) in path.times.iter().zip(&path.states) {
        w.write_record(std::iter::once(fmt_f64(*t)).chain(s.values().iter().map(|v| fmt_f64(*v))))?;
    }
    into_string(w)
}

/// Parses [`path_csv`] output. The seed is not stored in the table.
pub fn parse_path_csv(text: &str, seed: u64) -> Result<(PathSample, Process), FormatError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.get(0) != Some("time") || header.len() < 2 {
        return Err(FormatError::Malformed("header must start with time and name at least one component".into()));
    }
    let process = match header.get(1) {
        Some("w0") => Process::W,
        Some("x0") => Process::X,
        other => return Err(FormatError::Malformed(format!("unexpected column {other:?}"))),
    };
    for (k, name) in header.iter().skip(1).enumerate() {
        if name != format!("{}{k}", process.prefix()) {
            return Err(FormatError::Malformed(format!("unexpected column {name:?}")));
        }
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for record in r.records() {
        let record = record?;
        let mut values = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| FormatError::Malformed(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        times.push(values.remove(0));
        states.push(StateVector::new(values).map_err(|e| FormatError::Malformed(e.to_string()))?);
    }
    Ok((PathSample { times, states, seed }, process))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub process: Process,
    pub order: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl PathRecord {
    pub fn new(path: &PathSample, process: Process) -> Self {
        PathRecord {
            process,
            order: path.order(),
            seed: path.seed,
            times: path.times.clone(),
            states: path.states.iter().map(|s| s.values().to_vec()).collect(),
        }
    }

    pub fn to_path(&self) -> Result<PathSample, FormatError> {
        if self.times.len() != self.states.len() {
            return Err(FormatError::Malformed("one state per time is required".into()));
        }
        let states = self
            .states
            .iter()
            .map(|v| {
                if v.len() != self.order + 1 {
                    return Err(FormatError::Malformed(format!("state of length {} for order {}", v.len(), self.order)));
                }
                StateVector::new(v.clone()).map_err(|e| FormatError::Malformed(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PathSample {
            times: self.times.clone(),
            states,
            seed: self.seed,
        })
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, FormatError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String, FormatError> {
    let bytes = w.into_inner().map_err(|e| FormatError::Malformed(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| FormatError::Malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use iou_core::exact::rho_matrix;
    use iou_core::sampling::{sample_w, sample_x};
    use iou_core::spectral::cross_correlation;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0, -2.5e-300, 1.0 / 3.0, f64::MAX, 5e-324, 123456789.123] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(1.0), "1.0");
    }

    #[test]
    fn rho_record() {
        let rec = MatrixRecord::new("rho", &rho_matrix(2));
        assert_eq!(rec.dim, 2);
        assert_eq!(rec.entries[0], ["9/1", "-36/1", "30/1"]);
        assert_eq!(rec.entries[2][2], "180/1");
        assert_eq!(rec.to_matrix().unwrap(), rho_matrix(2));
        let json = serde_json::to_string(&rec).unwrap();
        let back: MatrixRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
        assert_eq!(matrix_csv(&rho_matrix(1)).unwrap(), "4/1,-6/1\n-6/1,12/1\n");
    }

    #[test]
    fn malformed_matrix_is_rejected() {
        let rec = MatrixRecord {
            which: "x".into(),
            dim: 1,
            entries: vec![vec!["1".into(), "2/0".into()], vec!["0".into(), "1".into()]],
        };
        assert!(rec.to_matrix().is_err());
        let rec = MatrixRecord {
            which: "x".into(),
            dim: 1,
            entries: vec![vec!["1".into()]],
        };
        assert!(rec.to_matrix().is_err());
    }

    #[test]
    fn correlation_record_round_trips() {
        let c = cross_correlation(2, 1);
        let rec = CorrelationRecord::new(&c);
        assert!(rec.nonnegative_lag.terms.iter().all(|t| t.rate.ends_with("+1/2")));
        let json = serde_json::to_string(&rec).unwrap();
        let back: CorrelationRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_correlation().unwrap(), c);
    }

    #[test]
    fn correlation_table_layout() {
        let table = correlation_csv(&[0.0, 1.0], &[cross_correlation(0, 0)]).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "tau,c_0_0");
        assert_eq!(lines[1], "0.0,1.0");
        let at_one: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(at_one, (-0.5f64).exp());
    }

    #[test]
    fn path_csv_round_trips_exactly() {
        let path = sample_w(3, &[0.1, 0.5, 2.0, 7.25], 9).unwrap();
        let text = path_csv(&path, Process::W).unwrap();
        assert!(text.starts_with("time,w0,w1,w2,w3\n"));
        let (back, process) = parse_path_csv(&text, 9).unwrap();
        assert_eq!(process, Process::W);
        assert_eq!(back, path);

        let path = sample_x(1, &[-1.0, 0.0, 1.5], 3).unwrap();
        let text = path_csv(&path, Process::X).unwrap();
        assert!(text.starts_with("time,x0,x1\n"));
        assert_eq!(parse_path_csv(&text, 3).unwrap().0, path);
    }

    #[test]
    fn path_json_round_trips_exactly() {
        let path = sample_w(2, &[0.3, 0.9], 17).unwrap();
        let rec = PathRecord::new(&path, Process::W);
        let json = to_json(&rec).unwrap();
        let back: PathRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_path().unwrap(), path);
    }

    #[test]
    fn bad_path_csv_is_rejected() {
        assert!(parse_path_csv("t,w0\n1.0,2.0\n", 0).is_err());
        assert!(parse_path_csv("time,w0,w2\n1.0,2.0,3.0\n", 0).is_err());
        assert!(parse_path_csv("time,w0\n1.0,abc\n", 0).is_err());
        assert!(parse_path_csv("time,w0\n1.0,NaN\n", 0).is_err());
    }
}
