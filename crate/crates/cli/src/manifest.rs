use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Streams a file through SHA-256.
pub fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let err = |e| urbmag::Error::io(path, e);
    let mut r = BufReader::with_capacity(1 << 20, File::open(path).map_err(err)?);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    let mut bytes = 0u64;
    loop {
        let n = r.read(&mut buf).map_err(err)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
        bytes += n as u64;
    }
    let sha256 = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(FileDigest { path: path.display().to_string(), bytes, sha256 })
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub command: String,
    /// Effective arguments after config merging, program name normalised.
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub created_utc: String,
}

impl Manifest {
    pub fn write(
        out_dir: &Path,
        command: &str,
        argv: &[String],
        parameters: serde_json::Value,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<PathBuf, CliError> {
        let mut input_digests = inputs.iter().map(|p| digest(p)).collect::<Result<Vec<_>, _>>()?;
        input_digests.sort_by(|a, b| a.path.cmp(&b.path));
        input_digests.dedup_by(|a, b| a.path == b.path);
        let output_digests = outputs
            .iter()
            .map(|p| {
                let mut d = digest(p)?;
                d.path = p.strip_prefix(out_dir).unwrap_or(p).display().to_string();
                Ok(d)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut argv = argv.to_vec();
        if let Some(first) = argv.first_mut() {
            *first = "urbmag".into();
        }
        let m = Manifest {
            tool: "urbmag",
            version: env!("CARGO_PKG_VERSION"),
            library_version: urbmag::VERSION,
            command: command.into(),
            argv,
            parameters,
            inputs: input_digests,
            outputs: output_digests,
            created_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        };
        let path = out_dir.join(format!("{command}.manifest.json"));
        crate::output::write_json(&path, &m)?;
        Ok(path)
    }
}
