//! Config loading, artifact writing and the run manifest.

use std::path::{Path, PathBuf};

use hdemg::dataio::{read_table, write_table, PromptEvent};
use hdemg::kinematics::{HandSkeleton, JOINT_NAMES, N_JOINTS};
use hdemg::{Error, Result};
use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Parse a JSON config, or take the defaults when no file is given.
pub fn load_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    let Some(p) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
}

pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", dir.display())))
}

pub fn skeleton(path: Option<&Path>) -> Result<HandSkeleton> {
    path.map_or_else(|| Ok(HandSkeleton::default()), HandSkeleton::load)
}

fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    Ok((bytes.len() as u64, digest.iter().map(|b| format!("{b:02x}")).collect()))
}

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

/// Everything needed to reproduce a run; paths are relative to the output directory.
#[derive(Debug, Serialize)]
pub struct Manifest {
    tool: &'static str,
    tool_version: &'static str,
    library_version: &'static str,
    command: String,
    seed: Option<u64>,
    config: serde_json::Value,
    /// Inputs by file name and content hash.
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            tool: "hdemg",
            tool_version: env!("CARGO_PKG_VERSION"),
            library_version: hdemg::VERSION,
            command: command.into(),
            seed,
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        if path.is_dir() {
            let mut files = list_files(path)?;
            files.sort();
            for f in files {
                self.input(&f)?;
            }
            return Ok(());
        }
        let (bytes, sha256) = sha256_file(path)?;
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.inputs.push(FileEntry { path: name, bytes, sha256 });
        Ok(())
    }

    /// Hash every file under `out` and write `manifest.json` there.
    pub fn finish(mut self, out: &Path) -> Result<()> {
        let mut files = list_files(out)?;
        files.retain(|f| f.file_name().is_none_or(|n| n != "manifest.json") || f.parent() != Some(out));
        files.sort();
        for f in files {
            let (bytes, sha256) = sha256_file(&f)?;
            let rel = f.strip_prefix(out).unwrap_or(&f);
            let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            self.outputs.push(FileEntry { path, bytes, sha256 });
        }
        write_json(&out.join("manifest.json"), &self)
    }
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let rd = std::fs::read_dir(dir).map_err(|e| Error::InvalidInput(format!("{}: {e}", dir.display())))?;
    for entry in rd {
        let p = entry.map_err(|e| Error::InvalidInput(e.to_string()))?.path();
        if p.is_dir() {
            out.extend(list_files(&p)?);
        } else {
            out.push(p);
        }
    }
    Ok(out)
}

/// Normalized angles with their timestamps, plus the prompt schedule when one sits next to them.
pub struct AngleTable {
    pub timestamps: Vec<f64>,
    pub angles: Array2<f64>,
    pub schedule: Vec<PromptEvent>,
}

/// Reads `angles_norm.csv` from a dataset directory, or any table with the same header.
pub fn read_angle_table(path: &Path) -> Result<AngleTable> {
    let (csv, dir) = if path.is_dir() { (path.join("angles_norm.csv"), path.to_path_buf()) } else {
        (path.to_path_buf(), path.parent().map(Path::to_path_buf).unwrap_or_default())
    };
    let (header, table) = read_table::<f64>(&csv)?;
    let expected = std::iter::once("t_s").chain(JOINT_NAMES.iter().copied());
    if header.len() != N_JOINTS + 1 || !header.iter().map(String::as_str).eq(expected) {
        return Err(Error::InvalidInput(format!("{}: expected `t_s` and the {N_JOINTS} joint columns", csv.display())));
    }
    let sp = dir.join("schedule.json");
    let schedule = if sp.is_file() {
        let text = std::fs::read_to_string(&sp).map_err(|e| Error::InvalidInput(format!("{}: {e}", sp.display())))?;
        serde_json::from_str(&text)?
    } else {
        Vec::new()
    };
    Ok(AngleTable {
        timestamps: table.column(0).to_vec(),
        angles: table.slice(ndarray::s![.., 1..]).to_owned(),
        schedule,
    })
}

pub fn write_angle_table(path: &Path, timestamps: &[f64], angles: &Array2<f64>) -> Result<()> {
    let mut t = Array2::<f64>::zeros((angles.nrows(), N_JOINTS + 1));
    for (i, &ts) in timestamps.iter().enumerate() {
        t[[i, 0]] = ts;
    }
    t.slice_mut(ndarray::s![.., 1..]).assign(angles);
    let mut header = vec!["t_s".to_string()];
    header.extend(JOINT_NAMES.iter().map(|s| s.to_string()));
    write_table(path, &header, &t)
}

/// Resolve `p` against the directory of a config file.
pub fn relative_to(base: Option<&Path>, p: &Path) -> PathBuf {
    match base.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}
