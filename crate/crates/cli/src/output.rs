use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::Context;
use clap::ValueEnum;
use serde::Serialize;

use rcmlab_core::Estimate;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub quantity: String,
    pub t: Option<f64>,
    pub t0: Option<f64>,
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
    /// Mass of truncated explorations behind the value.
    pub censored: f64,
}

impl Record {
    pub fn new(quantity: impl Into<String>, t: Option<f64>, t0: Option<f64>, e: &Estimate) -> Self {
        Self {
            quantity: quantity.into(),
            t,
            t0,
            value: e.value,
            stderr: e.stderr,
            n: e.n,
            censored: e.censored_mass.unwrap_or(0.0),
        }
    }

    pub fn exact(quantity: impl Into<String>, t: Option<f64>, value: f64) -> Self {
        Self::new(quantity, t, None, &Estimate::exact(value))
    }
}

#[derive(Debug, Serialize)]
struct JsonOutput<'a> {
    config: &'a ExperimentConfig,
    config_hash: &'a str,
    seed: u64,
    records: &'a [Record],
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a serde_json::Value>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render(
    format: Format,
    config: &ExperimentConfig,
    seed: u64,
    records: &[Record],
    report: Option<&serde_json::Value>,
) -> anyhow::Result<String> {
    let hash = config.hash();
    match format {
        Format::Csv => {
            let mut out = String::from("quantity,t,t0,value,stderr,n,censored,config_hash,seed\n");
            for r in records {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.quantity,
                    opt(r.t),
                    opt(r.t0),
                    r.value,
                    r.stderr,
                    r.n,
                    r.censored,
                    hash,
                    seed
                )?;
            }
            Ok(out)
        }
        Format::Json => {
            let doc = JsonOutput { config, config_hash: &hash, seed, records, report };
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("results");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
