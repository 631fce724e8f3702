use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use qbcharge::DriveConfig;
use serde::Serialize;

#[derive(Debug)]
pub enum Failure {
    Input { stage: &'static str, message: String },
    Numerical { stage: &'static str, message: String },
}

impl Failure {
    pub fn input(stage: &'static str, message: impl fmt::Display) -> Self {
        Failure::Input { stage, message: message.to_string() }
    }

    pub fn numerical(stage: &'static str, message: impl fmt::Display) -> Self {
        Failure::Numerical { stage, message: message.to_string() }
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Input { .. } => 1,
            Failure::Numerical { .. } => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input { stage, message } => write!(f, "input error during {stage}: {message}"),
            Failure::Numerical { stage, message } => write!(f, "numerical error during {stage}: {message}"),
        }
    }
}

/// Classifies a library error by its cause.
pub fn core(stage: &'static str) -> impl Fn(qbcharge::Error) -> Failure {
    move |e| {
        if e.is_input_error() {
            Failure::input(stage, e)
        } else {
            Failure::numerical(stage, e)
        }
    }
}

#[derive(Debug, Default, Serialize)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RowFailure {
    pub family: String,
    pub row: usize,
    pub param: f64,
    pub error: String,
}

/// Everything needed to rerun a command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<DriveConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arguments: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<serde_json::Value>,
    pub settings: Settings,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub row_failures: Vec<RowFailure>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &'static str, config_path: Option<&Path>) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config_path: config_path.map(|p| p.display().to_string()),
            config: None,
            config_hash: None,
            arguments: None,
            spec: None,
            settings: Settings::default(),
            outputs: Vec::new(),
            row_failures: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn with_config(mut self, config: &DriveConfig) -> Self {
        let canonical = config.canonical();
        self.config_hash = Some(canonical.config_hash());
        self.config = Some(canonical);
        self
    }
}

/// Collects files written into the output directory.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::input("creating output directory", format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Failure::input("writing output", format!("{}: {e}", path.display())))?;
        self.written.push(path.display().to_string());
        Ok(())
    }

    /// Writes the manifest last and returns every path written.
    pub fn finish(mut self, mut manifest: RunManifest, started: std::time::Instant) -> Result<Vec<String>, Failure> {
        manifest.outputs = self.written.clone();
        manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.write("manifest.json", &(text + "\n"))?;
        Ok(self.written)
    }
}
