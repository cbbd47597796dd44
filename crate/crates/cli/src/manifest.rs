use serde::{Deserialize, Serialize};

use besov_core::{Error, Result};

use crate::commands::Job;

pub const MANIFEST_FILE: &str = "manifest.json";
const HEADER_PREFIX: &str = "# manifest: ";

/// Conventions in force for a run, recorded next to the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub grid: String,
    pub boundary: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_nodes: Option<usize>,
}

impl Conventions {
    pub fn new(delta_min: Option<f64>, h_nodes: Option<usize>, z_nodes: Option<usize>) -> Self {
        Self {
            grid: "closed uniform, t_i = i/(n-1)".into(),
            boundary: "zero extension outside [0, 1]".into(),
            delta_min,
            h_nodes,
            z_nodes,
        }
    }

    pub fn with_boundary(mut self, boundary: &str) -> Self {
        self.boundary = boundary.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub conventions: Conventions,
}

impl RunManifest {
    pub fn new(job: &Job, seed: Option<u64>, conventions: Conventions) -> Result<Self> {
        let tagged = serde_json::to_value(job).map_err(json_err)?;
        Ok(Self {
            command: job.name().into(),
            params: tagged["params"].clone(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            conventions,
        })
    }

    pub fn job(&self) -> Result<Job> {
        let tagged = serde_json::json!({ "command": self.command, "params": self.params });
        serde_json::from_value(tagged).map_err(|e| Error::Parse(format!("manifest: {e}")))
    }

    /// Single `#` comment line for CSV headers.
    pub fn header_line(&self) -> Result<String> {
        Ok(format!(
            "{HEADER_PREFIX}{}\n",
            serde_json::to_string(self).map_err(json_err)?
        ))
    }

    pub fn from_header(text: &str) -> Option<Result<Self>> {
        text.lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix(HEADER_PREFIX))
            .map(|j| serde_json::from_str(j).map_err(|e| Error::Parse(format!("manifest: {e}"))))
    }

    pub fn to_pretty(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(json_err)
    }
}

pub fn json_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}
