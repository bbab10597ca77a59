use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

/// Everything needed to re-run a command and check its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub config: serde_json::Value,
    /// Effective settings after defaults and config files are applied.
    pub resolved: Option<serde_json::Value>,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub duration_secs: f64,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Vec<PathBuf>, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs,
            config,
            resolved: None,
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            duration_secs: 0.0,
            notes: Vec::new(),
        }
    }

    /// Written to `path`, or to stderr without one.
    pub fn emit(mut self, path: Option<&Path>, took: Duration) -> io::Result<()> {
        self.duration_secs = took.as_secs_f64();
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        match path {
            Some(p) => fs::write(p, text + "\n"),
            None => writeln!(io::stderr(), "{text}"),
        }
    }
}

/// Write to a file or, without a path, to stdout.
pub fn write_artifact(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(p) => fs::write(p, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

/// Nine significant digits, trailing zeros trimmed.
pub fn sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let e = v.abs().log10().floor() as i32;
    if (-5..9).contains(&e) {
        let s = format!("{:.*}", (8 - e).max(0) as usize, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    }
}

/// CSV with a header row and LF line endings; fields never need quoting.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}
