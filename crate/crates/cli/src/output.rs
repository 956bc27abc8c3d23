//! CSV/JSON emission and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use fareylat::Table;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Inputs that determine the output bytes. Their digest is written into the
/// output itself, so it must not depend on time, thread count or paths.
#[derive(Clone, Debug, Serialize)]
pub struct ManifestInputs {
    pub command_line: Vec<String>,
    pub table_limit: u64,
    pub seed: Option<u64>,
    pub versions: Versions,
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub fareylat: &'static str,
    pub manifest_schema: u32,
}

impl ManifestInputs {
    pub fn new(args: &[String], table_limit: u64, seed: Option<u64>) -> Self {
        Self {
            command_line: reproducible_args(args),
            table_limit,
            seed,
            versions: Versions {
                fareylat: env!("CARGO_PKG_VERSION"),
                manifest_schema: 1,
            },
        }
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("manifest inputs serialise");
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub inputs: ManifestInputs,
    pub inputs_digest: String,
    pub timestamp_unix: u64,
    pub outputs: Vec<OutputDigest>,
}

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Drops `--jobs` and `--out` (and their values) from the recorded argv.
fn reproducible_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for (i, a) in args.iter().enumerate() {
        if skip {
            skip = false;
            continue;
        }
        if i == 0 {
            out.push("fareylat".to_string());
            continue;
        }
        if a == "--jobs" || a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--jobs=") || a.starts_with("--out=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

pub fn render_csv(table: &Table, digest: &str) -> Result<String, fareylat::Error> {
    Ok(format!("# manifest-sha256: {digest}\n{}", table.to_csv_string()?))
}

/// Column-keyed records for `--format json`.
pub fn render_json_records(table: &Table, digest: &str) -> String {
    let records: Vec<serde_json::Map<String, serde_json::Value>> = table
        .rows
        .iter()
        .map(|row| {
            table
                .header
                .iter()
                .zip(row)
                .map(|(h, v)| (h.clone(), serde_json::Value::String(v.clone())))
                .collect()
        })
        .collect();
    let doc = serde_json::json!({ "manifest_sha256": digest, "records": records });
    serde_json::to_string_pretty(&doc).expect("json") + "\n"
}

pub fn render_json<T: Serialize>(value: &T, digest: &str) -> String {
    let mut doc = serde_json::to_value(value).expect("json");
    if let serde_json::Value::Object(map) = &mut doc {
        map.insert("manifest_sha256".into(), digest.into());
    }
    serde_json::to_string_pretty(&doc).expect("json") + "\n"
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the payload to `out` (or stdout) and exactly one manifest, beside
/// the output file or on stderr.
pub fn emit(payload: &str, out: Option<&Path>, inputs: ManifestInputs) -> std::io::Result<()> {
    let manifest = RunManifest {
        inputs_digest: inputs.digest(),
        inputs,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        outputs: vec![OutputDigest {
            path: out.map_or("-".into(), |p| p.display().to_string()),
            sha256: hex::encode(Sha256::digest(payload.as_bytes())),
            bytes: payload.len(),
        }],
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("json") + "\n";
    match out {
        Some(path) => {
            fs::write(path, payload)?;
            fs::write(manifest_path(path), manifest_json)?;
        }
        None => {
            std::io::stdout().lock().write_all(payload.as_bytes())?;
            std::io::stderr().lock().write_all(manifest_json.as_bytes())?;
        }
    }
    Ok(())
}
