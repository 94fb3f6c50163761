//! Output directory handling: artifact files, the run manifest and the
//! failure marker.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub struct OutDir {
    dir: PathBuf,
    config_hash: String,
    seed: u64,
    written: Vec<String>,
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl OutDir {
    /// `hashed_text` is the canonical config with the output directory
    /// blanked, so the hash names the computation and not where it went.
    pub fn create(dir: &Path, hashed_text: &str, seed: u64) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        let _ = fs::remove_file(dir.join("FAILED"));
        Ok(Self {
            dir: dir.to_path_buf(),
            config_hash: config_hash(hashed_text),
            seed,
            written: Vec::new(),
        })
    }

    /// Adds `config_hash` and `seed` to a JSON object and writes it.
    pub fn write_json(&mut self, name: &str, mut value: Value) -> std::io::Result<()> {
        if let Value::Object(map) = &mut value {
            map.insert("config_hash".into(), json!(self.config_hash));
            map.insert("seed".into(), json!(self.seed));
        }
        let text = serde_json::to_string_pretty(&value).expect("json");
        fs::write(self.dir.join(name), text + "\n")?;
        self.written.push(name.into());
        Ok(())
    }

    /// Opens a CSV file whose first line is a `#` comment carrying the
    /// config hash and seed (gnuplot skips it).
    pub fn csv(&mut self, name: &str) -> std::io::Result<BufWriter<File>> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        writeln!(w, "# config_hash={} seed={}", self.config_hash, self.seed)?;
        self.written.push(name.into());
        Ok(w)
    }

    pub fn raw(&mut self, name: &str) -> std::io::Result<BufWriter<File>> {
        self.written.push(name.into());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    pub fn finish(&self, command: &str, config_text: &str, error: Option<&str>) -> std::io::Result<()> {
        let manifest = json!({
            "command": command,
            "status": if error.is_none() { "ok" } else { "failed" },
            "error": error,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "artifacts": self.written,
            "config": config_text,
        });
        fs::write(
            self.dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest).expect("json") + "\n",
        )?;
        if let Some(e) = error {
            fs::write(self.dir.join("FAILED"), format!("{e}\n"))?;
        }
        Ok(())
    }
}
