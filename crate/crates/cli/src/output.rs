use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::Serialize;

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV table for plotting.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

impl OutputArgs {
    pub fn report<T: Serialize>(&self, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        match &self.out {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                io::stdout().lock().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    pub fn table(&self, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
        let Some(path) = &self.plot else {
            return Ok(());
        };
        write_csv(path, header, rows).with_context(|| format!("writing {}", path.display()))
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV cell for an optional float; empty when absent.
pub fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// JSON has no infinities; non-finite values become `null`.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}
