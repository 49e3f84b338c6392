//! Output directories: every command echoes its configuration and leaves a
//! `.failed` marker if it stops part-way.

use std::path::{Path, PathBuf};

use crate::CliError;

pub const FAILED_MARKER: &str = ".failed";

pub struct OutDir {
    pub path: PathBuf,
}

impl OutDir {
    pub fn create(path: &Path, config_json: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(path)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", path.display())))?;
        let out = Self {
            path: path.to_path_buf(),
        };
        out.write(FAILED_MARKER, "incomplete\n")?;
        out.write("run_config.json", config_json)?;
        Ok(out)
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.join(name);
        std::fs::write(&path, contents).map_err(|e| evidet::Error::io(&path, e).into())
    }

    /// Records the failure reason in the marker.
    pub fn fail(&self, err: &CliError) {
        let _ = std::fs::write(self.join(FAILED_MARKER), format!("{err}\n"));
    }

    pub fn complete(self) -> Result<(), CliError> {
        let marker = self.join(FAILED_MARKER);
        std::fs::remove_file(&marker).map_err(|e| evidet::Error::io(&marker, e).into())
    }
}

/// Runs `work` inside `out`, keeping the marker (with the error) on failure.
pub fn run_in(out: OutDir, work: impl FnOnce(&OutDir) -> Result<(), CliError>) -> Result<(), CliError> {
    match work(&out) {
        Ok(()) => out.complete(),
        Err(e) => {
            out.fail(&e);
            Err(e)
        }
    }
}
