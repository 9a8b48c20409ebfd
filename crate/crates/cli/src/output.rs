use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Output directory that refuses to clobber existing files unless forced.
pub struct OutDir {
    dir: PathBuf,
    force: bool,
}

impl OutDir {
    /// Creates `dir` if needed and checks up front that none of `names`
    /// exist, so a refused run writes nothing.
    pub fn claim(dir: &Path, force: bool, names: &[&str]) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        if !force {
            let taken: Vec<String> = names
                .iter()
                .map(|n| dir.join(n))
                .filter(|p| p.exists())
                .map(|p| p.display().to_string())
                .collect();
            if !taken.is_empty() {
                bail!("refusing to overwrite {} (pass --force)", taken.join(", "));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            force,
        })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if !self.force && path.exists() {
            bail!("refusing to overwrite {} (pass --force)", path.display());
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, &to_json(value)?)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
