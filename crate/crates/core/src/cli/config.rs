//! The TOML run configuration. Every key has a default, unknown keys are
//! rejected, and relative paths resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::gradcheck::GradcheckConfig;
use crate::io::{evenly_spaced_beams, LayoutConfig, Obstacle, ScanConfig};
use crate::labels::LabelSpace;
use crate::losses::LossConfig;
use crate::model::{FeatureConfig, ScoringRule, TrainConfig};
use crate::synthesis::SynthesisConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Number of inlier classes `c`.
    pub classes: u32,
    pub paths: PathsConfig,
    pub scan: ScanSection,
    pub synthesis: SynthesisConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub loss: LossConfig,
    pub metrics: MetricsConfig,
    pub gradcheck: GradcheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            classes: 3,
            paths: PathsConfig::default(),
            scan: ScanSection::default(),
            synthesis: SynthesisConfig::default(),
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            loss: LossConfig::default(),
            metrics: MetricsConfig::default(),
            gradcheck: GradcheckConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Input scenes: `velodyne/*.bin` with matching `labels/*.label`.
    pub scenes: Option<PathBuf>,
    /// Directory of `.obj` meshes or ASCII point files.
    pub assets: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { scenes: None, assets: None, checkpoint: None, out: PathBuf::from("out") }
    }
}

/// Serializable form of the scan generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    /// Scenes written by `genscan`.
    pub count: usize,
    pub sensor_height: f64,
    /// Explicit beam elevations in radians; when absent, `beams` elevations
    /// are spread evenly over `elevation_range_deg`.
    pub beam_elevations: Option<Vec<f64>>,
    pub beams: usize,
    pub elevation_range_deg: [f64; 2],
    /// Radians.
    pub azimuth_step: f64,
    pub ground_z: f64,
    pub ground_label: u32,
    pub max_range: f64,
    /// Fixed obstacles present in every scene.
    pub obstacles: Vec<Obstacle>,
    /// Add a random obstacle layout per scene.
    pub random_layout: bool,
    pub layout: LayoutConfig,
}

impl Default for ScanSection {
    fn default() -> Self {
        let base = ScanConfig::default();
        Self {
            count: 10,
            sensor_height: base.sensor_height,
            beam_elevations: None,
            beams: 16,
            elevation_range_deg: [-25.0, 3.0],
            azimuth_step: base.azimuth_step,
            ground_z: base.ground_z,
            ground_label: base.ground_label,
            max_range: base.max_range,
            obstacles: Vec::new(),
            random_layout: true,
            layout: LayoutConfig::default(),
        }
    }
}

impl ScanSection {
    pub fn to_scan_config(&self) -> ScanConfig {
        ScanConfig {
            sensor_height: self.sensor_height,
            beam_elevations: self.beam_elevations.clone().unwrap_or_else(|| {
                evenly_spaced_beams(self.beams, self.elevation_range_deg[0], self.elevation_range_deg[1])
            }),
            azimuth_step: self.azimuth_step,
            ground_z: self.ground_z,
            ground_label: self.ground_label,
            obstacles: self.obstacles.clone(),
            max_range: self.max_range,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.azimuth_step > 0.0 && self.azimuth_step.is_finite()) {
            return Err(CliError::Config(format!("scan.azimuth_step must be > 0, got {}", self.azimuth_step)));
        }
        if self.count == 0 {
            return Err(CliError::Config("scan.count must be >= 1".into()));
        }
        if self.beam_elevations.as_ref().map_or(self.beams == 0, Vec::is_empty) {
            return Err(CliError::Config("scan.beams must be >= 1".into()));
        }
        if !(self.max_range > 0.0) {
            return Err(CliError::Config(format!("scan.max_range must be > 0, got {}", self.max_range)));
        }
        self.to_scan_config().validate().map_err(|e| CliError::Config(format!("scan: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Number of target coverages `k/grid_size` in the curve CSV.
    pub grid_size: usize,
    /// Score ranked by the coverage curves.
    pub curve_rule: ScoringRule,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { grid_size: 100, curve_rule: ScoringRule::OutlierProb }
    }
}

/// Which paths a command reads.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub scenes: bool,
    pub assets: bool,
    pub checkpoint: bool,
}

fn section<T>(name: &str, r: crate::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(format!("{name}: {e}")))
}

impl RunConfig {
    /// Parses TOML text; relative paths are joined onto `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.paths.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn labels(&self) -> Result<LabelSpace, CliError> {
        LabelSpace::new(self.classes).map_err(|e| CliError::Config(format!("classes: {e}")))
    }

    /// Checks every section and that the paths a command reads exist.
    pub fn validate(&self, needs: Needs) -> Result<(), CliError> {
        self.labels()?;
        self.scan.validate()?;
        section("synthesis", self.synthesis.validate())?;
        section("features", self.features.validate())?;
        section("train", self.train.validate())?;
        section("loss", self.loss.validate())?;
        section("gradcheck", self.gradcheck.validate())?;
        if self.metrics.grid_size == 0 {
            return Err(CliError::Config("metrics.grid_size must be >= 1".into()));
        }
        let dir = |key: &str, p: &Option<PathBuf>| -> Result<(), CliError> {
            match p {
                None => Err(CliError::Config(format!("paths.{key} is required for this command"))),
                Some(p) if !p.is_dir() => {
                    Err(CliError::Config(format!("paths.{key} = {} is not a directory", p.display())))
                }
                Some(_) => Ok(()),
            }
        };
        if needs.scenes {
            dir("scenes", &self.paths.scenes)?;
        }
        if needs.assets {
            dir("assets", &self.paths.assets)?;
        }
        if needs.checkpoint {
            match &self.paths.checkpoint {
                None => return Err(CliError::Config("paths.checkpoint is required for this command".into())),
                Some(p) if !p.is_file() => {
                    return Err(CliError::Config(format!("paths.checkpoint = {} does not exist", p.display())))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

impl PathsConfig {
    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.scenes, &mut self.assets, &mut self.checkpoint].into_iter().flatten() {
            join(p);
        }
        join(&mut self.out);
    }
}
