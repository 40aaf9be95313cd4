//! Catch and survey CSV files.
//!
//! ```text
//! year,catch_tonnes
//! 1990,5000.0
//! ```
//!
//! ```text
//! year,survey_id,index_tonnes,delta
//! 1995,1,12000,0.5
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use shrimp_core::observation::{ObservationData, SurveyRecord};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const CATCH_HEADER: [&str; 2] = ["year", "catch_tonnes"];
pub const SURVEY_HEADER: [&str; 4] = ["year", "survey_id", "index_tonnes", "delta"];

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let found = rdr.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`", header.join(",")),
        });
    }
    Ok(rdr)
}

/// Rows of a CSV file with their 1-based line numbers.
fn rows(path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader(path, header)?.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("invalid {name} `{raw}`"),
    })
}

fn finite(path: &Path, line: u64, v: f64, name: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{name} must be finite"),
        })
    }
}

pub fn load_catch_csv(path: &Path) -> Result<BTreeMap<i32, f64>> {
    let mut out = BTreeMap::new();
    for (line, rec) in rows(path, &CATCH_HEADER)? {
        let year: i32 = field(path, line, &rec, 0, "year")?;
        let tonnes: f64 = field(path, line, &rec, 1, "catch_tonnes")?;
        let tonnes = finite(path, line, tonnes, "catch_tonnes")?;
        if out.insert(year, tonnes).is_some() {
            return Err(Error::DuplicateYear {
                path: path.to_path_buf(),
                line,
                year,
            });
        }
    }
    Ok(out)
}

/// Survey records; ids outside `survey_ids` are rejected.
pub fn load_survey_csv(path: &Path, survey_ids: &[u32]) -> Result<Vec<SurveyRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, rec) in rows(path, &SURVEY_HEADER)? {
        let year: i32 = field(path, line, &rec, 0, "year")?;
        let id: u32 = field(path, line, &rec, 1, "survey_id")?;
        let index: f64 = field(path, line, &rec, 2, "index_tonnes")?;
        let index = finite(path, line, index, "index_tonnes")?;
        let delta: f64 = field(path, line, &rec, 3, "delta")?;
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("delta {delta} outside [0, 1]"),
            });
        }
        if !survey_ids.contains(&id) {
            return Err(Error::UnknownSurveyId {
                path: path.to_path_buf(),
                line,
                id,
            });
        }
        if !seen.insert((year, id)) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate record for survey {id} in {year}"),
            });
        }
        out.push(SurveyRecord {
            year,
            survey_id: id,
            index_tonnes: index,
            delta,
        });
    }
    Ok(out)
}

/// Data files named in the config; missing entries give no records.
pub fn load_data(config: &RunConfig) -> Result<ObservationData> {
    let mut data = ObservationData::default();
    if let Some(p) = &config.data.catch {
        data.catches = load_catch_csv(p)?;
    }
    if let Some(p) = &config.data.survey {
        data.surveys = load_survey_csv(p, &config.survey_ids)?;
    }
    Ok(data)
}

fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_catch_csv(path: &Path, catches: &BTreeMap<i32, f64>) -> Result<()> {
    let mut w = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{}", CATCH_HEADER.join(","))?;
        for (y, u) in catches {
            writeln!(w, "{y},{u}")?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn write_survey_csv(path: &Path, surveys: &[SurveyRecord]) -> Result<()> {
    let mut w = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{}", SURVEY_HEADER.join(","))?;
        for r in surveys {
            writeln!(w, "{},{},{},{}", r.year, r.survey_id, r.index_tonnes, r.delta)?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
