//! Result emission and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use icct_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub output_dir: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// SHA-256 over the parsed arguments and the bytes of every input file.
    pub config_hash: String,
    pub files: Vec<String>,
}

/// Where results go: JSON to stdout, CSV to an explicit path, and copies of
/// everything into `--out` when given.
pub struct Output {
    subcommand: String,
    out_dir: Option<PathBuf>,
    inputs: Vec<PathBuf>,
    args: String,
    seed: Option<u64>,
    files: Vec<String>,
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

impl Output {
    pub fn new(subcommand: &str, out_dir: Option<PathBuf>, args: String, seed: Option<u64>) -> Result<Self> {
        if let Some(dir) = &out_dir {
            fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        Ok(Output {
            subcommand: subcommand.to_string(),
            out_dir,
            inputs: Vec::new(),
            args,
            seed,
            files: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        stdout(&format!("{text}\n"))?;
        if let Some(dir) = &self.out_dir {
            let path = dir.join(format!("{name}.json"));
            fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
            self.files.push(path.display().to_string());
        }
        Ok(())
    }

    /// Writes CSV rows to `explicit` if given, else into `--out`, else to
    /// stdout when `stdout_fallback` is set.
    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T], explicit: Option<&Path>, stdout_fallback: bool) -> Result<()> {
        let target = explicit
            .map(Path::to_path_buf)
            .or_else(|| self.out_dir.as_ref().map(|d| d.join(format!("{name}.csv"))));
        match target {
            Some(path) => {
                fs::write(&path, to_csv(rows)?).map_err(|e| io(&path, e))?;
                self.files.push(path.display().to_string());
            }
            None if stdout_fallback => stdout(&to_csv(rows)?)?,
            None => {}
        }
        Ok(())
    }

    /// Writes a file at an explicit path and lists it in the manifest.
    pub fn file(&mut self, path: &Path, body: &str) -> Result<()> {
        fs::write(path, body).map_err(|e| io(path, e))?;
        self.files.push(path.display().to_string());
        Ok(())
    }

    /// Plain text file inside `--out`, skipped without one.
    pub fn text(&mut self, file: &str, body: &str) -> Result<()> {
        if let Some(dir) = &self.out_dir {
            let path = dir.join(file);
            fs::write(&path, body).map_err(|e| io(&path, e))?;
            self.files.push(path.display().to_string());
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let Some(dir) = &self.out_dir else {
            return Ok(());
        };
        let mut hasher = Sha256::new();
        hasher.update(self.args.as_bytes());
        for p in &self.inputs {
            hasher.update(fs::read(p).map_err(|e| io(p, e))?);
        }
        let manifest = RunManifest {
            subcommand: self.subcommand.clone(),
            inputs: self.inputs.iter().map(|p| p.display().to_string()).collect(),
            output_dir: dir.display().to_string(),
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: format!("{:x}", hasher.finalize()),
            files: self.files.clone(),
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| io(&path, e))
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
