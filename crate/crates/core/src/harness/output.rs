//! Flat-file persistence: JSON results, CSV trajectories, atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{EntropyTrajectory, Sample};
use crate::error::{Error, Result};

/// A file produced by an experiment, written by the single writer at the end.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Labelled state on the (fidelity, E_R, mixedness) plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub label: String,
    pub fidelity: f64,
    pub er_bits: f64,
    pub mixedness: f64,
}

/// Writes to a sibling temp file and renames it over `path`.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()
    };
    if let Err(e) = write() {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(&tmp, e));
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn csv_error(context: &str, e: csv::Error) -> Error {
    Error::Serialize(format!("{context}: {e}"))
}

fn to_csv<T: Serialize>(records: &[T], context: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| csv_error(context, e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Serialize(format!("{context}: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(format!("{context}: {e}")))
}

fn from_csv<T: for<'de> Deserialize<'de>>(text: &str, context: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(context, e)))
        .collect()
}

/// `t,fidelity,er_bits,mixedness`, one row per sample. Floats use the
/// shortest representation that parses back to the same value.
pub fn trajectory_csv(trajectory: &EntropyTrajectory) -> Result<String> {
    if trajectory.samples.is_empty() {
        return Err(Error::Config("empty trajectory".into()));
    }
    to_csv(&trajectory.samples, "trajectory")
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<Sample>> {
    let header = text.lines().next().unwrap_or("");
    if header != "t,fidelity,er_bits,mixedness" {
        return Err(Error::Serialize(format!("unexpected trajectory header `{header}`")));
    }
    from_csv(text, "trajectory")
}

/// `label,fidelity,er_bits,mixedness`.
pub fn landmarks_csv(points: &[Landmark]) -> Result<String> {
    to_csv(points, "landmarks")
}

pub fn parse_landmarks_csv(text: &str) -> Result<Vec<Landmark>> {
    from_csv(text, "landmarks")
}

/// One CSV per labelled trajectory plus `<prefix>_points.csv`, written atomically.
pub fn emit_flow_data(
    dir: &Path,
    prefix: &str,
    trajectories: &[(String, EntropyTrajectory)],
    landmarks: &[Landmark],
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for file in flow_files(prefix, trajectories, landmarks)? {
        let path = dir.join(&file.name);
        atomic_write(&path, file.contents.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

pub(crate) fn flow_files(
    prefix: &str,
    trajectories: &[(String, EntropyTrajectory)],
    landmarks: &[Landmark],
) -> Result<Vec<OutputFile>> {
    if trajectories.is_empty() {
        return Err(Error::Config("no trajectories to emit".into()));
    }
    let mut files = Vec::new();
    for (label, traj) in trajectories {
        files.push(OutputFile {
            name: format!("{prefix}_{label}.csv"),
            contents: trajectory_csv(traj)?,
        });
    }
    files.push(OutputFile {
        name: format!("{prefix}_points.csv"),
        contents: landmarks_csv(landmarks)?,
    });
    Ok(files)
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
