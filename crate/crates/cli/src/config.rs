use std::path::Path;

use anyhow::{bail, Context, Result};
use preptensor::corpus::{DEFAULT_MIN_COUNT, DEFAULT_WINDOW};
use preptensor::factorize::TrainingConfig;
use preptensor::learn::FnnHyper;
use serde::{Deserialize, Serialize};

/// Values a config file may set. Anything left out falls back to the default.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub log_level: Option<String>,
    pub window: Option<usize>,
    pub min_count: Option<u64>,
    pub method: Option<String>,
    pub dim: Option<usize>,
    pub iters: Option<usize>,
    pub ortho_iters: Option<usize>,
    pub xmax: Option<f64>,
    pub alpha: Option<f64>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub context_window: Option<usize>,
    pub top: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Als,
    Wd,
}

impl MethodArg {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "als" => Ok(Self::Als),
            "wd" => Ok(Self::Wd),
            other => bail!("unknown method `{other}` (expected als or wd)"),
        }
    }
}

/// The merged view of flags, config file and defaults.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub threads: usize,
    pub seed: u64,
    pub log_level: String,
    pub window: usize,
    pub min_count: u64,
    pub method: MethodArg,
    pub dim: usize,
    pub iters: usize,
    pub ortho_iters: usize,
    pub xmax: f64,
    pub alpha: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub context_window: usize,
    pub top: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainingConfig::default();
        Self {
            threads: 1,
            seed: t.seed,
            log_level: "info".into(),
            window: DEFAULT_WINDOW,
            min_count: DEFAULT_MIN_COUNT,
            method: MethodArg::Wd,
            dim: t.dim,
            iters: t.iterations,
            ortho_iters: t.ortho_iterations,
            xmax: t.x_max,
            alpha: t.alpha,
            learning_rate: t.learning_rate,
            epochs: FnnHyper::default().epochs,
            context_window: preptensor::select::DEFAULT_CONTEXT_WINDOW,
            top: 50,
        }
    }
}

/// Flag values; `None` means the flag was not given.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub log_level: Option<String>,
    pub window: Option<usize>,
    pub min_count: Option<u64>,
    pub method: Option<MethodArg>,
    pub dim: Option<usize>,
    pub iters: Option<usize>,
    pub ortho_iters: Option<usize>,
    pub xmax: Option<f64>,
    pub alpha: Option<f64>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub context_window: Option<usize>,
    pub top: Option<usize>,
}

pub fn resolve(flags: &Overrides, file: &FileConfig) -> Result<RunConfig> {
    let d = RunConfig::default();
    let method = match (flags.method, &file.method) {
        (Some(m), _) => m,
        (None, Some(s)) => MethodArg::parse(s)?,
        (None, None) => d.method,
    };
    let cfg = RunConfig {
        threads: flags.threads.or(file.threads).unwrap_or(d.threads),
        seed: flags.seed.or(file.seed).unwrap_or(d.seed),
        log_level: flags
            .log_level
            .clone()
            .or_else(|| file.log_level.clone())
            .unwrap_or(d.log_level),
        window: flags.window.or(file.window).unwrap_or(d.window),
        min_count: flags.min_count.or(file.min_count).unwrap_or(d.min_count),
        method,
        dim: flags.dim.or(file.dim).unwrap_or(d.dim),
        iters: flags.iters.or(file.iters).unwrap_or(d.iters),
        ortho_iters: flags.ortho_iters.or(file.ortho_iters).unwrap_or(d.ortho_iters),
        xmax: flags.xmax.or(file.xmax).unwrap_or(d.xmax),
        alpha: flags.alpha.or(file.alpha).unwrap_or(d.alpha),
        learning_rate: flags.learning_rate.or(file.learning_rate).unwrap_or(d.learning_rate),
        epochs: flags.epochs.or(file.epochs).unwrap_or(d.epochs),
        context_window: flags.context_window.or(file.context_window).unwrap_or(d.context_window),
        top: flags.top.or(file.top).unwrap_or(d.top),
    };
    if cfg.threads == 0 {
        bail!("threads must be >= 1");
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn training(&self) -> TrainingConfig {
        TrainingConfig {
            dim: self.dim,
            iterations: self.iters,
            ortho_iterations: self.ortho_iters.min(self.iters),
            x_max: self.xmax,
            alpha: self.alpha,
            learning_rate: self.learning_rate,
            seed: self.seed,
            ..TrainingConfig::default()
        }
    }

    pub fn fnn(&self) -> FnnHyper {
        FnnHyper {
            epochs: self.epochs,
            seed: self.seed,
            ..FnnHyper::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file: FileConfig = toml::from_str("dim = 50\niters = 3\nmethod = \"als\"\n").unwrap();
        let flags = Overrides {
            dim: Some(12),
            ..Overrides::default()
        };
        let cfg = resolve(&flags, &file).unwrap();
        assert_eq!(cfg.dim, 12);
        assert_eq!(cfg.iters, 3);
        assert_eq!(cfg.method, MethodArg::Als);
        assert_eq!(cfg.alpha, 0.75);
        let cfg = resolve(&Overrides::default(), &FileConfig::default()).unwrap();
        assert_eq!((cfg.dim, cfg.iters, cfg.ortho_iters, cfg.window), (200, 20, 5, 3));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("dimension = 4\n").is_err());
        let file: FileConfig = toml::from_str("method = \"svd\"\n").unwrap();
        assert!(resolve(&Overrides::default(), &file).is_err());
    }
}
