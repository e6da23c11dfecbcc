//! JSON container for trained codebooks.

use std::path::Path;

use pvq_core::experiment::InitMethod;
use pvq_core::{Codebook, Error, TrainingReport};
use serde::{Deserialize, Serialize};

const FORMAT: &str = "pvq-codebook/1";

#[derive(Debug, Serialize, Deserialize)]
pub struct CodebookFile {
    format: String,
    /// `conventional` or `modified`.
    pub init: String,
    pub seed: Option<u64>,
    pub report: TrainingReport,
    pub codebook: Codebook,
}

impl CodebookFile {
    pub fn new(
        codebook: Codebook,
        init: InitMethod,
        seed: Option<u64>,
        report: TrainingReport,
    ) -> Self {
        Self {
            format: FORMAT.to_string(),
            init: init.label().to_string(),
            seed,
            report,
            codebook,
        }
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(path.display().to_string()))?;
        let file: CodebookFile = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if file.format != FORMAT {
            return Err(Error::Format(format!(
                "{}: unsupported codebook format {:?}",
                path.display(),
                file.format
            )));
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        let text = serde_json::to_string(self).expect("codebook serializes");
        std::fs::write(path, text)?;
        Ok(())
    }
}
