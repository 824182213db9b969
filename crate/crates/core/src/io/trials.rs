use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::ModelData;

/// One arm of one outcome in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub study: String,
    pub outcome: String,
    pub arm: String,
    pub treat: u8,
    pub events: u64,
    /// Person-years; `None` when the source left it blank.
    pub exposure: Option<f64>,
    pub arm_size: Option<u64>,
}

impl TrialRecord {
    /// Exposure used for the offset, and whether it fell back to arm size.
    pub fn effective_exposure(&self) -> Result<(f64, bool)> {
        match (self.exposure, self.arm_size) {
            (Some(e), _) => Ok((e, false)),
            (None, Some(n)) if n > 0 => Ok((n as f64, true)),
            _ => Err(Error::Domain(format!("{}/{}/{}: no exposure and no arm size", self.study, self.outcome, self.arm))),
        }
    }
}

const REQUIRED: [&str; 6] = ["study", "outcome", "arm", "treat", "events", "exposure"];

/// The two-trial SGLT2 inhibitor dataset shipped with the crate.
pub const SGLT2I_CSV: &str = include_str!("../../data/sglt2i.csv");

pub fn bundled_sglt2i() -> Vec<TrialRecord> {
    parse_trial_reader(SGLT2I_CSV.as_bytes()).expect("bundled dataset parses")
}

pub fn parse_trial_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_trial_reader(f)
}

/// Parse `study,outcome,arm,treat,events,exposure[,arm_size]`; row numbers
/// in errors count the header as row 1.
pub fn parse_trial_reader(reader: impl Read) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { row: 1, msg: e.to_string() })?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Parse { row: 1, msg: "empty file".into() });
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 6];
    for (k, name) in REQUIRED.iter().enumerate() {
        idx[k] = col(name).ok_or_else(|| Error::Parse { row: 1, msg: format!("missing column `{name}`") })?;
    }
    let size_col = col("arm_size");
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize, what: &str| -> Result<f64> {
            field(k).parse::<f64>().map_err(|_| Error::Parse { row, msg: format!("{what} `{}` is not numeric", field(k)) })
        };
        let treat = match field(idx[3]) {
            "0" => 0,
            "1" => 1,
            other => return Err(Error::Parse { row, msg: format!("treat must be 0 or 1, got `{other}`") }),
        };
        let events = field(idx[4])
            .parse::<u64>()
            .map_err(|_| Error::Parse { row, msg: format!("events `{}` is not a non-negative integer", field(idx[4])) })?;
        let exposure = if field(idx[5]).is_empty() {
            None
        } else {
            let e = num(idx[5], "exposure")?;
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Parse { row, msg: format!("exposure must be positive, got {e}") });
            }
            Some(e)
        };
        let arm_size = match size_col.map(field) {
            None | Some("") => None,
            Some(s) => Some(s.parse::<u64>().map_err(|_| Error::Parse { row, msg: format!("arm_size `{s}` is not an integer") })?),
        };
        if exposure.is_none() && arm_size.is_none() {
            return Err(Error::Parse { row, msg: "blank exposure needs an arm_size".into() });
        }
        out.push(TrialRecord {
            study: field(idx[0]).to_string(),
            outcome: field(idx[1]).to_string(),
            arm: field(idx[2]).to_string(),
            treat,
            events,
            exposure,
            arm_size,
        });
    }
    if out.is_empty() {
        return Err(Error::Parse { row: 2, msg: "no data rows".into() });
    }
    Ok(out)
}

/// Poisson design for one study/outcome: intercept plus treatment, offset
/// log(exposure / exposure_scale).
#[derive(Debug, Clone)]
pub struct TrialDesign {
    pub data: ModelData,
    pub rows: Vec<TrialRecord>,
    /// True when any arm's exposure fell back to its size.
    pub exposure_from_arm_size: bool,
}

pub fn trial_design(records: &[TrialRecord], study: &str, outcome: &str, exposure_scale: f64) -> Result<TrialDesign> {
    if !(exposure_scale > 0.0) {
        return Err(Error::Config(format!("exposure scale must be positive, got {exposure_scale}")));
    }
    let rows: Vec<TrialRecord> =
        records.iter().filter(|r| r.study.eq_ignore_ascii_case(study) && r.outcome.eq_ignore_ascii_case(outcome)).cloned().collect();
    if rows.is_empty() {
        return Err(Error::Config(format!("no rows for study `{study}`, outcome `{outcome}`")));
    }
    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut offset = Vec::new();
    let mut flagged = false;
    for r in &rows {
        let (e, fallback) = r.effective_exposure()?;
        flagged |= fallback;
        y.push(r.events as f64);
        x.extend_from_slice(&[1.0, r.treat as f64]);
        offset.push((e / exposure_scale).ln());
    }
    let data = ModelData::new(y, DMatrix::from_row_slice(rows.len(), 2, &x), Some(offset), None)?;
    Ok(TrialDesign { data, rows, exposure_from_arm_size: flagged })
}

/// Distinct (study, outcome) pairs in file order.
pub fn study_outcomes(records: &[TrialRecord]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for r in records {
        if !out.iter().any(|(s, o)| *s == r.study && *o == r.outcome) {
            out.push((r.study.clone(), r.outcome.clone()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_rows() {
        let r = bundled_sglt2i();
        assert_eq!(r.len(), 8);
        let d = trial_design(&r, "CREDENCE", "primary", 1000.0).unwrap();
        assert!((d.data.offset[0] - 5.671_296f64.ln()).abs() < 1e-15);
        assert!((d.data.offset[1] - 5.555_556f64.ln()).abs() < 1e-15);
        assert!(!d.exposure_from_arm_size);
        let dka = trial_design(&r, "DAPA-CKD", "dka", 1000.0).unwrap();
        assert!(dka.exposure_from_arm_size);
        assert!((dka.data.offset[0] - 2.149f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn parse_errors_carry_rows() {
        let e = parse_trial_reader("study,outcome,arm,treat,events,exposure\nA,b,c,2,1,1.0\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 2, .. }));
        let e = parse_trial_reader("study,outcome,arm,treat,events\nA,b,c,1,1\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 1, .. }));
        let e = parse_trial_reader("study,outcome,arm,treat,events,exposure\nA,b,c,1,x,1.0\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { row: 2, .. }));
        assert!(parse_trial_reader("".as_bytes()).is_err());
        assert!(parse_trial_reader("study,outcome,arm,treat,events,exposure\n".as_bytes()).is_err());
    }
}
