//! Posterior files.
//!
//! A posterior directory holds
//! - `params.csv`: one row per retained draw, one column per static parameter;
//! - `innovations.csv`: the `eps_<year>` and `ups_<year>` innovations per draw;
//! - `series_biomass.csv`, `series_fmax.csv`, `series_recruits.csv`: draw by year;
//! - `summary.json`: summary table, acceptance, resolved config and seeds.
//!
//! Chains are stored one after the other; `summary.json` records how many
//! draws each contributed. Floats are written in shortest round-trip form,
//! so re-reading is lossless.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shrimp_core::inference::{AcceptanceStats, DerivedSeries, ParameterVector, PosteriorSample, Summary};

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const PARAMS_FILE: &str = "params.csv";
pub const INNOVATIONS_FILE: &str = "innovations.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SERIES_FILES: [(&str, &str); 3] = [
    ("biomass", "series_biomass.csv"),
    ("f_max", "series_fmax.csv"),
    ("recruits", "series_recruits.csv"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainAcceptance {
    pub seed: u64,
    pub draws: usize,
    pub acceptance: AcceptanceStats,
}

#[derive(Serialize)]
struct SummaryFileOut<'a> {
    seed: u64,
    chains: Vec<ChainAcceptance>,
    dropped_records: usize,
    config: &'a RunConfig,
    summary: &'a Summary,
}

#[derive(Deserialize)]
struct SummaryFileIn {
    seed: u64,
    chains: Vec<ChainAcceptance>,
    #[serde(default)]
    dropped_records: usize,
    config: RunConfig,
}

/// Everything needed to write or re-read a posterior directory.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorOutput {
    pub config: RunConfig,
    /// Base seed; chain `k` used `seed + k`.
    pub seed: u64,
    pub samples: Vec<PosteriorSample>,
    pub dropped_records: usize,
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_row(w: &mut dyn Write, values: impl IntoIterator<Item = f64>) -> std::io::Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b",")?;
        }
        write!(w, "{v}")?;
        first = false;
    }
    w.write_all(b"\n")
}

fn year_header(first_year: i32, years: usize, prefix: &str) -> Vec<String> {
    (0..years).map(|t| format!("{prefix}{}", first_year + t as i32)).collect()
}

pub fn write_posterior(dir: &Path, out: &PosteriorOutput, summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let first = out.samples.first().ok_or(shrimp_core::Error::EmptySample)?;
    let years = first.years();
    let draws = || out.samples.iter().flat_map(|s| s.draws.iter());
    let series = || out.samples.iter().flat_map(|s| s.series.iter());

    write_file(&dir.join(PARAMS_FILE), |w| {
        writeln!(w, "{}", first.parameter_names.join(","))?;
        for d in draws() {
            write_row(w, d.statics.iter().copied())?;
        }
        Ok(())
    })?;
    write_file(&dir.join(INNOVATIONS_FILE), |w| {
        let mut header = year_header(first.first_year, years, "eps_");
        header.extend(year_header(first.first_year, years, "ups_"));
        writeln!(w, "{}", header.join(","))?;
        for d in draws() {
            write_row(w, d.xi_innovations.iter().chain(&d.zeta_innovations).copied())?;
        }
        Ok(())
    })?;
    for (name, file) in SERIES_FILES {
        write_file(&dir.join(file), |w| {
            writeln!(w, "{}", year_header(first.first_year, years, "").join(","))?;
            for s in series() {
                write_row(w, select(s, name).iter().copied())?;
            }
            Ok(())
        })?;
    }
    let file = SummaryFileOut {
        seed: out.seed,
        chains: out
            .samples
            .iter()
            .map(|s| ChainAcceptance {
                seed: s.config.seed,
                draws: s.len(),
                acceptance: s.acceptance.clone(),
            })
            .collect(),
        dropped_records: out.dropped_records,
        config: &out.config,
        summary,
    };
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&file).expect("summary serialises");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

fn select<'a>(s: &'a DerivedSeries, name: &str) -> &'a Vec<f64> {
    match name {
        "biomass" => &s.biomass,
        "f_max" => &s.f_max,
        _ => &s.recruits,
    }
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("invalid number `{f}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_posterior(dir: &Path) -> Result<PosteriorOutput> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: SummaryFileIn = serde_json::from_str(&text).map_err(|source| Error::Json { path, source })?;

    let (names, params) = read_table(&dir.join(PARAMS_FILE))?;
    let (_, innovations) = read_table(&dir.join(INNOVATIONS_FILE))?;
    let mut series: Vec<Vec<Vec<f64>>> = Vec::new();
    for (_, file) in SERIES_FILES {
        series.push(read_table(&dir.join(file))?.1);
    }
    let total: usize = meta.chains.iter().map(|c| c.draws).sum();
    let mismatch = |file: &str, got: usize| Error::Parse {
        path: dir.join(file),
        line: 0,
        message: format!("{got} rows, summary records {total} draws"),
    };
    if params.len() != total {
        return Err(mismatch(PARAMS_FILE, params.len()));
    }
    if innovations.len() != total {
        return Err(mismatch(INNOVATIONS_FILE, innovations.len()));
    }
    for ((_, file), rows) in SERIES_FILES.iter().zip(&series) {
        if rows.len() != total {
            return Err(mismatch(file, rows.len()));
        }
    }

    let years = meta.config.years();
    let mut samples = Vec::new();
    let mut at = 0;
    for chain in &meta.chains {
        let range = at..at + chain.draws;
        at += chain.draws;
        let draws = range
            .clone()
            .map(|i| {
                let inn = &innovations[i];
                if inn.len() != 2 * years {
                    return Err(Error::Parse {
                        path: dir.join(INNOVATIONS_FILE),
                        line: i as u64 + 2,
                        message: format!("expected {} columns", 2 * years),
                    });
                }
                Ok(ParameterVector {
                    statics: params[i].clone(),
                    xi_innovations: inn[..years].to_vec(),
                    zeta_innovations: inn[years..].to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let derived = range
            .map(|i| DerivedSeries {
                biomass: series[0][i].clone(),
                f_max: series[1][i].clone(),
                recruits: series[2][i].clone(),
            })
            .collect();
        samples.push(PosteriorSample {
            parameter_names: names.clone(),
            first_year: meta.config.first_year,
            config: meta.config.chain.with_seed(chain.seed),
            draws,
            series: derived,
            acceptance: chain.acceptance.clone(),
        });
    }
    Ok(PosteriorOutput {
        config: meta.config,
        seed: meta.seed,
        samples,
        dropped_records: meta.dropped_records,
    })
}

pub const SUMMARY_PARAMETERS_FILE: &str = "summary_parameters.csv";
pub const SUMMARY_SERIES_FILES: [(&str, &str); 3] = [
    ("biomass", "summary_biomass.csv"),
    ("f_max", "summary_fmax.csv"),
    ("recruits", "summary_recruits.csv"),
];

fn quantile_columns(levels: &[f64]) -> String {
    levels.iter().map(|q| format!(",q{q}")).collect()
}

/// Parameter and per-year series tables as CSV.
pub fn write_summary_tables(dir: &Path, summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let qcols = quantile_columns(&summary.quantile_levels);
    write_file(&dir.join(SUMMARY_PARAMETERS_FILE), |w| {
        writeln!(w, "name,mean,sd{qcols},ess,r_hat")?;
        for p in &summary.parameters {
            write!(w, "{},{},{}", p.name, p.mean, p.sd)?;
            for q in &p.quantiles {
                write!(w, ",{q}")?;
            }
            let r_hat = p.r_hat.map(|r| r.to_string()).unwrap_or_default();
            writeln!(w, ",{},{r_hat}", p.ess)?;
        }
        Ok(())
    })?;
    for (name, file) in SUMMARY_SERIES_FILES {
        let Some(s) = summary.series(name) else { continue };
        write_file(&dir.join(file), |w| {
            writeln!(w, "year,mean{qcols},ess")?;
            for (t, year) in s.years.iter().enumerate() {
                write!(w, "{year},{}", s.mean[t])?;
                for q in &s.quantiles {
                    write!(w, ",{}", q[t])?;
                }
                writeln!(w, ",{}", s.ess[t])?;
            }
            Ok(())
        })?;
    }
    Ok(())
}
