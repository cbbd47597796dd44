use std::fs;
use std::path::{Path, PathBuf};

use besov_core::{Error, Result};

use crate::manifest::{RunManifest, MANIFEST_FILE};

/// Per-file comparison of a re-run against recorded artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub command: String,
    pub files: Vec<(String, bool)>,
}

impl VerifyReport {
    pub fn identical(&self) -> bool {
        !self.files.is_empty() && self.files.iter().all(|f| f.1)
    }
}

/// Locates the manifest for `artifact` (an output directory, its
/// `manifest.json`, a JSON report or a CSV with a manifest header) and the
/// recorded location its outputs should be compared against.
fn locate(artifact: &Path) -> Result<(RunManifest, PathBuf)> {
    if artifact.is_dir() {
        let text = fs::read_to_string(artifact.join(MANIFEST_FILE))?;
        return Ok((parse_json_manifest(&text)?, artifact.to_path_buf()));
    }
    let text = fs::read_to_string(artifact)?;
    if let Some(m) = RunManifest::from_header(&text) {
        return Ok((m?, artifact.to_path_buf()));
    }
    let manifest = parse_json_manifest(&text)?;
    let job = manifest.job()?;
    let base = if job.writes_dir() {
        artifact
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    } else {
        artifact.to_path_buf()
    };
    Ok((manifest, base))
}

fn parse_json_manifest(text: &str) -> Result<RunManifest> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("not a manifest: {e}")))?;
    let m = if v.get("command").is_some() {
        v
    } else {
        v["manifest"].clone()
    };
    serde_json::from_value(m).map_err(|e| Error::Parse(format!("not a manifest: {e}")))
}

pub fn verify(artifact: &Path, scratch: &Path) -> Result<VerifyReport> {
    let (manifest, recorded) = locate(artifact)?;
    let job = manifest.job()?;
    let mut files = Vec::new();
    if job.writes_dir() {
        let dir = scratch.join("rerun");
        job.retarget(&dir).run()?;
        let mut names: Vec<String> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect::<std::io::Result<_>>()?;
        names.sort();
        for name in names {
            let fresh = fs::read(dir.join(&name))?;
            let same = fs::read(recorded.join(&name)).is_ok_and(|old| old == fresh);
            files.push((name, same));
        }
    } else {
        let out = scratch.join("rerun.out");
        job.retarget(&out).run()?;
        let same = fs::read(&out)? == fs::read(&recorded)?;
        files.push((recorded.display().to_string(), same));
    }
    Ok(VerifyReport {
        command: manifest.command,
        files,
    })
}
