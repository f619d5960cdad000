use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::centrality::Gamma;
use crate::error::{Error, Result};

/// Environment variable naming the directory that relative output paths
/// are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "EEFLOW_OUTPUT_ROOT";

/// End-to-end run settings, readable from TOML:
///
/// ```toml
/// manifest = "data/manifest.toml"
/// output_dir = "runs/uniform"
/// gamma = [0.25, 0.25, 0.25, 0.25]
/// top_k = 25
/// monolayer_economies = ["CHN", "USA", "RUS"]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub output_dir: PathBuf,
    pub gamma: Gamma,
    pub leontief_tol: f64,
    pub mdhits_tol: f64,
    pub max_iter: usize,
    pub top_k: usize,
    /// Economies whose intra-layer networks are written as edge lists.
    pub monolayer_economies: Vec<String>,
    /// Also write the Leontief inverse and `W` (large for real data).
    pub write_matrices: bool,
    pub log_level: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: PathBuf::from("manifest.toml"),
            output_dir: PathBuf::from("eeflow-run"),
            gamma: Gamma::uniform(),
            leontief_tol: 1e-9,
            mdhits_tol: 1e-8,
            max_iter: 1000,
            top_k: 25,
            monolayer_economies: Vec::new(),
            write_matrices: false,
            log_level: "info".into(),
        }
    }
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        Gamma::new(self.gamma.values())?;
        for (name, tol) in [
            ("leontief_tol", self.leontief_tol),
            ("mdhits_tol", self.mdhits_tol),
        ] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {tol}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolves a relative `output_dir` against `root`, when given.
    pub fn resolve_output_dir(&mut self, root: Option<&Path>) {
        if let Some(root) = root {
            if self.output_dir.is_relative() {
                self.output_dir = root.join(&self.output_dir);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig {
            gamma: Gamma::new([0.1, 0.2, 0.3, 0.4]).unwrap(),
            monolayer_economies: vec!["CHN".into()],
            ..Default::default()
        };
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg: RunConfig = toml::from_str("top_k = 10\nmanifest = \"x/manifest.toml\"").unwrap();
        assert_eq!(cfg.top_k, 10);
        assert_eq!(cfg.gamma, Gamma::uniform());
        assert!(toml::from_str::<RunConfig>("gamma = [0.5, 0.5, 0.5, 0.5]").is_err());
        assert!(toml::from_str::<RunConfig>("unknown = 1").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        for cfg in [
            RunConfig {
                top_k: 0,
                ..Default::default()
            },
            RunConfig {
                mdhits_tol: 0.0,
                ..Default::default()
            },
            RunConfig {
                leontief_tol: -1.0,
                ..Default::default()
            },
            RunConfig {
                max_iter: 0,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn output_root_applies_to_relative_paths() {
        let mut cfg = RunConfig::default();
        cfg.resolve_output_dir(Some(Path::new("/tmp/root")));
        assert_eq!(cfg.output_dir, Path::new("/tmp/root/eeflow-run"));
        let mut abs = RunConfig {
            output_dir: "/abs".into(),
            ..Default::default()
        };
        abs.resolve_output_dir(Some(Path::new("/tmp/root")));
        assert_eq!(abs.output_dir, Path::new("/abs"));
    }
}
