use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose2D;
use crate::kinematics::KinematicParams;
use crate::planner::{ControllerConfig, Platform, PlannerConfig, PlatformMode};
use crate::slamlite::{GnConfig, LogOddsParams, LoopClosureParams, NodePolicy};
use crate::worldsim::{CameraModel, Environment, NoiseConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// Cell size, meters.
    pub resolution: f64,
    /// World position of the bottom-left map corner.
    pub origin: [f64; 2],
    /// Start pose `[x, y, θ]` shared by every trial.
    pub start: [f64; 3],
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { resolution: 0.05, origin: [0.0, 0.0], start: [1.0, 1.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub fov_deg: f64,
    pub max_depth: f64,
    pub encoder_tick_deg: f64,
    pub lrf_range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self { fov_deg: 69.4, max_depth: 4.0, encoder_tick_deg: 0.5, lrf_range: 12.0 }
    }
}

impl SensorConfig {
    pub fn camera(&self) -> CameraModel {
        CameraModel { fov: self.fov_deg.to_radians(), max_depth: self.max_depth }
    }

    pub fn encoder_tick(&self) -> f64 {
        self.encoder_tick_deg.to_radians()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlamConfig {
    pub log_odds: LogOddsParams,
    pub node: NodePolicy,
    #[serde(rename = "loop")]
    pub loop_closure: LoopClosureParams,
    pub gn_max_iterations: usize,
}

impl Default for SlamConfig {
    fn default() -> Self {
        Self {
            log_odds: LogOddsParams::default(),
            node: NodePolicy::default(),
            loop_closure: LoopClosureParams::default(),
            gn_max_iterations: GnConfig::default().max_iterations,
        }
    }
}

impl SlamConfig {
    pub fn gn(&self) -> GnConfig {
        GnConfig { max_iterations: self.gn_max_iterations, ..GnConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Physics step, seconds.
    pub dt: f64,
    pub robot_radius: f64,
    /// A fault or contact lasting longer than this fails the trial, seconds.
    pub fault_timeout: f64,
    /// Map snapshot period in seconds; 0 disables snapshots.
    pub snapshot_every: f64,
    /// Keep the per-step robot estimate for the trace dump.
    pub record_trace: bool,
    /// Stop as soon as no frontier is left.
    pub stop_when_complete: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            robot_radius: 0.2,
            fault_timeout: 5.0,
            snapshot_every: 0.0,
            record_trace: false,
            stop_when_complete: true,
        }
    }
}

/// Everything one experiment needs. Loaded from TOML; command-line flags
/// override individual fields afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Environment file, `.pgm` or ASCII.
    pub env: PathBuf,
    pub mode: PlatformMode,
    pub merged: bool,
    /// Trial length, seconds.
    pub duration: f64,
    pub trials: usize,
    /// Trial `i` uses seed `seed + i`.
    pub seed: u64,
    /// Concurrent trials in a batch.
    pub jobs: usize,
    pub out_dir: PathBuf,
    /// Batch cells such as `"HH"` or `"OC_NC"`; empty runs all eight.
    pub cells: Vec<String>,
    pub map: MapConfig,
    pub kin: KinematicParams,
    pub sensors: SensorConfig,
    pub noise: NoiseConfig,
    pub ctrl: ControllerConfig,
    pub slam: SlamConfig,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: PathBuf::new(),
            mode: PlatformMode::HH,
            merged: true,
            duration: 600.0,
            trials: 20,
            seed: 1,
            jobs: 1,
            out_dir: PathBuf::from("out"),
            cells: Vec::new(),
            map: MapConfig::default(),
            kin: KinematicParams::default(),
            sensors: SensorConfig::default(),
            noise: NoiseConfig::default(),
            ctrl: ControllerConfig::default(),
            slam: SlamConfig::default(),
            planner: PlannerConfig::default(),
            sim: SimConfig::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. A relative `env` path is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if cfg.env.is_relative() && !cfg.env.as_os_str().is_empty() {
            if let Some(dir) = path.parent() {
                cfg.env = dir.join(&cfg.env);
            }
        }
        Ok(cfg)
    }

    pub fn platform(&self) -> Platform {
        Platform { mode: self.mode, merged: self.merged }
    }

    pub fn start_pose(&self) -> Pose2D {
        let [x, y, t] = self.map.start;
        Pose2D::new(x, y, t)
    }

    /// Batch cells in canonical order.
    pub fn platforms(&self) -> Result<Vec<Platform>> {
        if self.cells.is_empty() {
            return Ok(Platform::matrix());
        }
        let mut out = Vec::new();
        for c in &self.cells {
            let p: Platform = c.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
            if !out.contains(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        positive("duration", self.duration)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        positive("map.resolution", self.map.resolution)?;
        positive("sim.dt", self.sim.dt)?;
        positive("sim.robot_radius", self.sim.robot_radius)?;
        positive("sim.fault_timeout", self.sim.fault_timeout)?;
        if !(self.sim.snapshot_every >= 0.0) {
            return Err(Error::Config("sim.snapshot_every must be non-negative".into()));
        }
        positive("sensors.encoder_tick_deg", self.sensors.encoder_tick_deg)?;
        positive("sensors.lrf_range", self.sensors.lrf_range)?;
        if self.sim.dt > self.ctrl.step_dt {
            return Err(Error::Config("sim.dt must not exceed ctrl.step_dt".into()));
        }
        if self.map.start.iter().chain(&self.map.origin).any(|v| !v.is_finite()) {
            return Err(Error::Config("map.start and map.origin must be finite".into()));
        }
        if self.planner.headings == 0 {
            return Err(Error::Config("planner.headings must be at least 1".into()));
        }
        self.ctrl.validate()?;
        self.kin.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.sensors.camera().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.platforms()?;
        Ok(())
    }
}

/// Loads the configured environment and checks that the robot fits at the
/// start pose.
pub fn load_environment(cfg: &ExperimentConfig) -> Result<Environment> {
    if cfg.env.as_os_str().is_empty() {
        return Err(Error::Config("no environment file given".into()));
    }
    let env = Environment::load(&cfg.env, cfg.map.resolution, cfg.map.origin)?;
    let s = cfg.start_pose();
    if env.disc_collides(s.x, s.y, cfg.sim.robot_radius) {
        return Err(Error::StartInObstacle { x: s.x, y: s.y });
    }
    Ok(env)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let mut c = ExperimentConfig::default();
        c.validate().unwrap();
        c.trials = 0;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn parses_sections() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            env = "room.txt"
            mode = "OC"
            merged = false
            [kin]
            D = 0.2
            r = 0.05
            alpha = [0.0, 2.0, 4.0]
            joint_gear = 2.0
            [ctrl]
            horizon_steps = 10
            w_heading = 1.0
            [slam.loop]
            min_overlap = 0.6
            "#,
        )
        .unwrap();
        assert_eq!(c.mode, PlatformMode::OC);
        assert!(!c.merged);
        assert_eq!(c.kin.wheel_center_distance, 0.2);
        assert_eq!(c.kin.joint_gear_ratio, 2.0);
        assert_eq!(c.ctrl.horizon_steps, 10);
        assert_eq!(c.ctrl.v_max, 1.0);
        assert_eq!(c.slam.loop_closure.min_overlap, 0.6);
        assert_eq!(c.platform().label(), "OC_NC");
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let e = ExperimentConfig::from_toml_str("[ctrl]\nbogus = 1\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = ExperimentConfig::from_toml_str("mode = \"Z\"\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn cells_parse() {
        let c = ExperimentConfig { cells: vec!["hh".into(), "OC_NC".into(), "HH".into()], ..Default::default() };
        let p = c.platforms().unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].label(), "OC_NC");
        assert_eq!(ExperimentConfig::default().platforms().unwrap().len(), 8);
    }
}
