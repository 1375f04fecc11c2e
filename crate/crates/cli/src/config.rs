//! `key = value` configuration, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub const CONFIG_ENV: &str = "STONESEP_CONFIG";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub cap: usize,
    pub n_max: u32,
    pub context_bound: usize,
    pub horizon: (u32, u32),
    pub corpus: Option<PathBuf>,
    pub seed: u64,
    pub json: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            cap: 4096,
            n_max: stonesep_core::separation::N_MAX,
            context_bound: stonesep_core::separation::DEFAULT_CONTEXT_BOUND,
            horizon: stonesep_core::separation::DEFAULT_HORIZON,
            corpus: None,
            seed: 0,
            json: false,
        }
    }
}

pub fn parse_horizon(s: &str) -> Result<(u32, u32)> {
    let (a, b) = s.split_once(':').context("horizon must look like 'lo:hi'")?;
    let (a, b) = (a.trim().parse()?, b.trim().parse()?);
    if a == 0 || a > b {
        bail!("horizon {a}:{b} is empty or starts at 0");
    }
    Ok((a, b))
}

impl Config {
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').with_context(|| format!("config line {}: expected key = value", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let at = || format!("config line {}: bad value for '{key}'", i + 1);
            match key {
                "cap" => self.cap = value.parse().with_context(at)?,
                "nmax" | "n_max" => self.n_max = value.parse().with_context(at)?,
                "ctx_bound" | "context_bound" => self.context_bound = value.parse().with_context(at)?,
                "horizon" => self.horizon = parse_horizon(value).with_context(at)?,
                "corpus" => self.corpus = Some(PathBuf::from(value)),
                "seed" => self.seed = value.parse().with_context(at)?,
                "format" => {
                    self.json = match value {
                        "json" => true,
                        "text" => false,
                        _ => bail!(at()),
                    }
                }
                _ => bail!("config line {}: unknown key '{key}'", i + 1),
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut c = Config::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cap == 0 || self.n_max == 0 {
            bail!("caps must be positive");
        }
        if self.horizon.0 == 0 || self.horizon.0 > self.horizon.1 {
            bail!("horizon must be nonempty and start at 1 or later");
        }
        if self.horizon.1 > self.n_max {
            bail!("horizon end {} exceeds n cap {}", self.horizon.1, self.n_max);
        }
        Ok(())
    }
}
