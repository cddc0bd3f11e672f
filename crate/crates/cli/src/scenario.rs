//! Scenario files: a scene, a pipeline configuration, the attention
//! provider, and optional ground truth.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use activeview_core::attention::{
    FallbackProvider, HeatmapProvider, OracleMode, OracleProvider, RemoteProvider, DEFAULT_SIGMA_PX,
};
use activeview_core::geometry::Vec3;
use activeview_core::pipeline::{ActionHints, PipelineConfig, ViewStrategy};
use activeview_core::scene::{load_cloud, CloudFormat, PointCloud};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ENDPOINT_ENV: &str = "ACTIVEVIEW_ENDPOINT";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Oracle,
    Remote,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    #[default]
    Active,
    Random,
    Fixed,
}

impl StrategyName {
    pub fn label(self) -> &'static str {
        match self {
            StrategyName::Active => "active",
            StrategyName::Random => "random",
            StrategyName::Fixed => "fixed",
        }
    }

    pub fn with_seed(self, seed: u64) -> ViewStrategy {
        match self {
            StrategyName::Active => ViewStrategy::Active,
            StrategyName::Random => ViewStrategy::Random { seed },
            StrategyName::Fixed => ViewStrategy::Fixed,
        }
    }
}

impl std::str::FromStr for StrategyName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "active" => Ok(StrategyName::Active),
            "random" => Ok(StrategyName::Random),
            "fixed" => Ok(StrategyName::Fixed),
            other => Err(CliError::Input(format!(
                "unknown strategy {other:?}; expected active, random or fixed"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttentionConfig {
    pub provider: ProviderKind,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    pub fallback_to_oracle: bool,
    pub sigma_px: f64,
    pub oracle: OracleMode,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Oracle,
            endpoint: None,
            timeout_ms: 30_000,
            fallback_to_oracle: false,
            sigma_px: DEFAULT_SIGMA_PX,
            oracle: OracleMode::Projected,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub target: Vec3<f64>,
    #[serde(default)]
    pub euler_deg: [f64; 3],
    #[serde(default)]
    pub gripper: u8,
    #[serde(default)]
    pub collision: u8,
}

impl GroundTruth {
    pub fn hints(&self) -> ActionHints<f64> {
        ActionHints {
            euler_deg: self.euler_deg,
            gripper: self.gripper,
            collision: self.collision,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Defaults to the scenario file stem.
    #[serde(default)]
    pub id: Option<String>,
    /// Point cloud path, relative to the scenario file.
    pub scene: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strategy: StrategyName,
    #[serde(default)]
    pub config: PipelineConfig<f64>,
    #[serde(default)]
    pub attention: AttentionConfig,
    #[serde(default)]
    pub ground_truth: Option<GroundTruth>,
}

/// A parsed scenario with its scene loaded.
pub struct LoadedScenario {
    pub id: String,
    pub scenario: Scenario,
    pub cloud: PointCloud<f64>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("invalid scenario: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is representable as TOML")
    }

    pub fn load(path: &Path) -> Result<LoadedScenario, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let scenario = Self::from_toml(&text)?;
        scenario
            .config
            .validate()
            .map_err(|e| CliError::Input(format!("invalid config: {e}")))?;
        let scene_path = path.parent().unwrap_or(Path::new(".")).join(&scenario.scene);
        let file = File::open(&scene_path)
            .map_err(|e| CliError::Input(format!("cannot open scene {}: {e}", scene_path.display())))?;
        let cloud = load_cloud(BufReader::new(file), CloudFormat::from_path(&scene_path))
            .map_err(|e| CliError::Input(format!("{}: {e}", scene_path.display())))?;
        if cloud.is_empty() {
            return Err(CliError::Input(format!("{} holds no points", scene_path.display())));
        }
        let id = scenario.id.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into())
        });
        Ok(LoadedScenario { id, scenario, cloud })
    }

    /// Builds the configured provider. The oracle needs a ground-truth
    /// target; `ACTIVEVIEW_ENDPOINT` overrides the remote endpoint.
    pub fn provider(&self, kind: ProviderKind) -> Result<Box<dyn HeatmapProvider<f64>>, CliError> {
        let a = &self.attention;
        let oracle = || -> Result<OracleProvider<f64>, CliError> {
            let gt = self
                .ground_truth
                .ok_or_else(|| CliError::Input("the oracle provider needs [ground_truth] with a target".into()))?;
            if a.sigma_px.is_nan() || a.sigma_px <= 0.0 || a.sigma_px.is_infinite() {
                return Err(CliError::Input(format!("sigma_px = {} must be positive", a.sigma_px)));
            }
            Ok(OracleProvider::new(gt.target)
                .with_sigma(a.sigma_px)
                .with_mode(a.oracle))
        };
        match kind {
            ProviderKind::Oracle => Ok(Box::new(oracle()?)),
            ProviderKind::Remote => {
                let endpoint = std::env::var(ENDPOINT_ENV)
                    .ok()
                    .filter(|e| !e.is_empty())
                    .or_else(|| a.endpoint.clone())
                    .ok_or_else(|| {
                        CliError::Input(format!("remote provider needs attention.endpoint or {ENDPOINT_ENV}"))
                    })?;
                let remote = RemoteProvider::new(&endpoint, Duration::from_millis(a.timeout_ms));
                if a.fallback_to_oracle {
                    Ok(Box::new(FallbackProvider {
                        primary: remote,
                        fallback: oracle()?,
                    }))
                } else {
                    Ok(Box::new(remote))
                }
            }
        }
    }
}
