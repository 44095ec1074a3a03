use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use levelstat_core::{Complex64, Mat, Provenance, Spectrum};
use serde::{Deserialize, Serialize};

use crate::manifest::{manifest_path_for, ManifestBuilder};

/// Rejected user input; reported with exit code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

pub fn read_input(path: &Path, manifest: &mut ManifestBuilder) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    manifest.input(path, &bytes);
    Ok(bytes)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpectrumFile {
    Full(Spectrum),
    Levels(Vec<f64>),
    Wrapped { energies: Vec<f64> },
}

/// Reads a spectrum written by this tool, a bare JSON array of levels, or
/// an object with an `energies` array.
pub fn read_spectrum(path: &Path, manifest: &mut ManifestBuilder) -> Result<Spectrum> {
    let bytes = read_input(path, manifest)?;
    let parsed: SpectrumFile = serde_json::from_slice(&bytes)
        .map_err(|e| invalid(format!("{} is not a spectrum file: {e}", path.display())))?;
    let spectrum = match parsed {
        SpectrumFile::Full(s) => Spectrum::new(s.energies, s.source)?,
        SpectrumFile::Levels(e) | SpectrumFile::Wrapped { energies: e } => Spectrum::new(
            e,
            Provenance::External {
                label: path.display().to_string(),
            },
        )?,
    };
    if spectrum.is_empty() {
        return Err(invalid(format!("{} holds an empty spectrum", path.display())));
    }
    Ok(spectrum)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

/// State amplitudes in the energy eigenbasis: a JSON array of numbers or of
/// `[re, im]` pairs.
pub fn read_state(path: &Path, manifest: &mut ManifestBuilder) -> Result<Vec<Complex64>> {
    let bytes = read_input(path, manifest)?;
    let parsed: Vec<Amplitude> = serde_json::from_slice(&bytes)
        .map_err(|e| invalid(format!("{} is not a state file: {e}", path.display())))?;
    Ok(parsed
        .into_iter()
        .map(|a| match a {
            Amplitude::Real(x) => Complex64::new(x, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        })
        .collect())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ObservableFile {
    Real(Vec<Vec<f64>>),
    Split {
        re: Vec<Vec<f64>>,
        #[serde(default)]
        im: Option<Vec<Vec<f64>>>,
    },
}

/// Observable matrix in the energy eigenbasis: a JSON array of rows, or
/// `{"re": rows, "im": rows}`.
pub fn read_observable(path: &Path, manifest: &mut ManifestBuilder) -> Result<Mat<Complex64>> {
    let bytes = read_input(path, manifest)?;
    let parsed: ObservableFile = serde_json::from_slice(&bytes)
        .map_err(|e| invalid(format!("{} is not an observable file: {e}", path.display())))?;
    let (re, im) = match parsed {
        ObservableFile::Real(re) => (re, None),
        ObservableFile::Split { re, im } => (re, im),
    };
    let d = re.len();
    let square = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|row| row.len() == d);
    if d == 0 || !square(&re) || im.as_ref().is_some_and(|m| !square(m)) {
        return Err(invalid(format!("{}: observable must be a non-empty square matrix", path.display())));
    }
    Ok(Mat::from_fn(d, d, |i, j| {
        Complex64::new(re[i][j], im.as_ref().map_or(0.0, |m| m[i][j]))
    }))
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    manifest: String,
    #[serde(flatten)]
    body: &'a T,
}

fn manifest_name(out: &Path) -> String {
    manifest_path_for(out)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    Ok(())
}

/// Writes `body` as pretty JSON with a `manifest` field naming the manifest
/// that `manifest_for` will receive.
pub fn write_json<T: Serialize>(path: &Path, body: &T, manifest_for: &Path, manifest: &mut ManifestBuilder) -> Result<()> {
    ensure_parent(path)?;
    let tagged = Tagged {
        manifest: manifest_name(manifest_for),
        body,
    };
    let text = serde_json::to_string_pretty(&tagged)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    manifest.output(path);
    Ok(())
}

/// Writes CSV text preceded by a `# manifest: ...` comment line.
pub fn write_csv(path: &Path, csv: &str, manifest_for: &Path, manifest: &mut ManifestBuilder) -> Result<()> {
    ensure_parent(path)?;
    let text = format!("# manifest: {}\n{csv}", manifest_name(manifest_for));
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    manifest.output(path);
    Ok(())
}

/// Stand-in output path whose manifest is `<dir>/run.manifest.json`.
pub fn dir_manifest(dir: &Path) -> PathBuf {
    dir.join("run")
}
