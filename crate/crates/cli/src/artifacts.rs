//! Output files stamped with the run's seed and configuration hash.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{Map, Value};

pub struct Artifacts {
    dir: PathBuf,
    seed: u64,
    config_hash: String,
    written: Vec<PathBuf>,
    failed: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(dir: &Path, seed: u64, config_hash: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            seed,
            config_hash,
            written: Vec::new(),
            failed: Vec::new(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Writes a CSV whose first line is `# seed=<seed> config_hash=<hash>`.
    pub fn csv(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> fdareg::Result<()>) {
        let mut buf =
            format!("# seed={} config_hash={}\n", self.seed, self.config_hash).into_bytes();
        let result = body(&mut buf).map_err(anyhow::Error::from);
        self.finish(name, result.map(|_| buf));
    }

    /// Writes a JSON object with `seed` and `config_hash` ahead of `fields`.
    pub fn json(&mut self, name: &str, fields: Result<Value>) {
        let result = fields.and_then(|v| {
            let mut obj = Map::new();
            obj.insert("seed".into(), self.seed.into());
            obj.insert("config_hash".into(), self.config_hash.clone().into());
            match v {
                Value::Object(m) => obj.extend(m),
                other => {
                    obj.insert("result".into(), other);
                }
            }
            let mut text = serde_json::to_vec_pretty(&Value::Object(obj))?;
            text.push(b'\n');
            Ok(text)
        });
        self.finish(name, result);
    }

    /// Records an artifact that could not be produced.
    pub fn fail(&mut self, name: &str, err: anyhow::Error) {
        self.failed.push((name.to_string(), format!("{err:#}")));
    }

    fn finish(&mut self, name: &str, bytes: Result<Vec<u8>>) {
        let path = self.dir.join(name);
        let result = bytes.and_then(|b| {
            fs::write(&path, b).with_context(|| format!("writing {}", path.display()))
        });
        match result {
            Ok(()) => self.written.push(path),
            Err(e) => self.fail(name, e),
        }
    }

    /// Reports the outcome on standard error; `true` when nothing failed.
    pub fn report(&self) -> bool {
        for p in &self.written {
            eprintln!("wrote {}", p.display());
        }
        for (name, err) in &self.failed {
            eprintln!("FAILED {name}: {err}");
        }
        self.failed.is_empty()
    }
}
