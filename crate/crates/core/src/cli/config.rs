use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, StdevMode};
use crate::kv::{parse_sections, Entry};
use crate::occ::{Family, KernelChoice, ModelConfig, ProjectionInit, Psi};

/// Every knob a command can take, filled from defaults, then the
/// `--config` file, then command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub window: f64,
    /// Defaults to the window length (tumbling windows).
    pub stride: Option<f64>,
    pub stdev_mode: StdevMode,
    pub other_bucket: bool,
    pub model: ModelConfig,
    pub kernel: KernelName,
    pub sigma: Option<f64>,
    pub sigma_scale: f64,
    pub seed: u64,
    pub train_fraction: f64,
    pub duration: f64,
    pub jitter: f64,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelName {
    Linear,
    Rbf,
}

impl std::str::FromStr for KernelName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelName::Linear),
            "rbf" | "gaussian" => Ok(KernelName::Rbf),
            _ => Err(Error::invalid(format!("unknown kernel {s:?} (expected linear or rbf)"))),
        }
    }
}

pub fn parse_init(s: &str, seed: u64) -> Result<ProjectionInit> {
    match s.to_ascii_lowercase().as_str() {
        "pca" => Ok(ProjectionInit::Pca),
        "identity" => Ok(ProjectionInit::Identity),
        "random" => Ok(ProjectionInit::Random { seed }),
        _ => Err(Error::invalid(format!("unknown init {s:?} (expected pca, identity or random)"))),
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window: 1.0,
            stride: None,
            stdev_mode: StdevMode::Gaps,
            other_bucket: true,
            model: ModelConfig::default(),
            kernel: KernelName::Linear,
            sigma: None,
            sigma_scale: 1.0,
            seed: 0,
            train_fraction: 0.7,
            duration: 120.0,
            jitter: 0.01,
            input: None,
            out: None,
            model_path: None,
            vocab: None,
            validation: None,
            scenario: None,
        }
    }
}

impl RunConfig {
    pub fn load_file(&mut self, text: &str) -> Result<()> {
        for section in parse_sections(text)? {
            if let Some(name) = &section.name {
                return Err(Error::invalid(format!("run config does not take sections, found [{name}]")));
            }
            for e in &section.entries {
                self.set(e)?;
            }
        }
        Ok(())
    }

    fn set(&mut self, e: &Entry) -> Result<()> {
        let path = || Some(PathBuf::from(&e.value));
        match e.key.as_str() {
            "window" => self.window = e.parse()?,
            "stride" => self.stride = Some(e.parse()?),
            "stdev_mode" => self.stdev_mode = e.parse()?,
            "other_bucket" => self.other_bucket = e.flag()?,
            "family" => self.model.family = e.parse()?,
            "kernel" => self.kernel = e.parse()?,
            "sigma" => self.sigma = Some(e.parse()?),
            "sigma_scale" => self.sigma_scale = e.parse()?,
            "c" => self.model.c = e.parse()?,
            "nu" => self.model.nu = e.parse()?,
            "d" => self.model.d = Some(e.parse()?),
            "beta" => self.model.beta = e.parse()?,
            "psi" => self.model.psi = e.parse::<Psi>()?,
            "eta" => self.model.eta = e.parse()?,
            "eta_decay" => self.model.eta_decay = e.parse()?,
            "iterations" => self.model.iterations = e.parse()?,
            "init" => self.model.init = parse_init(&e.value, self.seed)?,
            "k_neighbors" => self.model.k_neighbors = e.parse()?,
            "epsilon" => self.model.epsilon = e.parse()?,
            "seed" => self.seed = e.parse()?,
            "train_fraction" => self.train_fraction = e.parse()?,
            "duration" => self.duration = e.parse()?,
            "jitter" => self.jitter = e.parse()?,
            "input" => self.input = path(),
            "out" => self.out = path(),
            "model" => self.model_path = path(),
            "vocab" => self.vocab = path(),
            "validation" => self.validation = path(),
            "scenario" => self.scenario = path(),
            _ => return Err(e.error("unknown configuration key")),
        }
        Ok(())
    }

    pub fn features(&self) -> Result<FeatureConfig> {
        let stride = self.stride.unwrap_or(self.window);
        if !(self.window > 0.0 && self.window.is_finite() && stride > 0.0 && stride.is_finite()) {
            return Err(Error::invalid("window and stride must be positive"));
        }
        Ok(FeatureConfig {
            window: self.window,
            stride,
            stdev_mode: self.stdev_mode,
        })
    }

    /// The model configuration with the kernel choice folded in.
    pub fn model_config(&self) -> ModelConfig {
        let kernel = match (self.kernel, self.sigma) {
            (KernelName::Linear, _) => KernelChoice::Linear,
            (KernelName::Rbf, Some(sigma)) => KernelChoice::Rbf { sigma },
            (KernelName::Rbf, None) => KernelChoice::RbfMedian { scale: self.sigma_scale },
        };
        let init = match self.model.init {
            ProjectionInit::Random { .. } => ProjectionInit::Random { seed: self.seed },
            other => other,
        };
        ModelConfig { kernel, init, ..self.model }
    }

    pub fn family(&self) -> Family {
        self.model.family
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let mut c = RunConfig::default();
        c.load_file("window = 0.5\nfamily = ssvdd\npsi = psi3\nkernel = rbf\nsigma-scale = 2\nother_bucket = false\ninit = random\nseed = 9\n").unwrap();
        assert_eq!(c.features().unwrap().stride, 0.5);
        let m = c.model_config();
        assert_eq!(m.family, Family::Ssvdd);
        assert_eq!(m.psi, Psi::Psi3);
        assert_eq!(m.kernel, KernelChoice::RbfMedian { scale: 2.0 });
        assert_eq!(m.init, ProjectionInit::Random { seed: 9 });
        assert!(!c.other_bucket);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert!(RunConfig::default().load_file("colour = red\n").is_err());
        assert!(RunConfig::default().load_file("window = soon\n").is_err());
        assert!(RunConfig::default().load_file("[x]\nwindow = 1\n").is_err());
        let c = RunConfig { window: 0.0, ..Default::default() };
        assert!(c.features().is_err());
    }
}
