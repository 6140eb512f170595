//! Flat `key = value` experiment configuration.
//!
//! The format is a plain text file, one assignment per line, `#` starts a
//! comment. Every key except `world` and `criterion` has a default, and
//! `criterion` is the only key that may repeat (each occurrence appends one
//! stopping criterion). Unknown keys and duplicate scalar keys are errors so
//! a typo cannot silently fall back to a default.
//!
//! ```text
//! # which world to explore and how often
//! world    = bundled:closed_rooms_small
//! seed     = 7
//! trials   = 2
//! step_cap = 150
//! out      = runs/demo
//!
//! criterion = task:2:3
//! criterion = coverage:90
//!
//! # optional start pose (x y theta); defaults to the free cell nearest
//! # the world center
//! start = 2.0 2.0 0.0
//!
//! # model overrides, all optional
//! sensor.fov     = 3.141592653589793
//! sensor.range   = 5.0
//! sensor.beams   = 1500
//! sensor.sigma_r = 0.01
//! motion.v_max     = 0.2
//! motion.omega_max = 0.8
//! motion.sigma     = 0.015 0.015 0.0075
//! explore.alpha         = 1.0
//! explore.loop_radius   = 1.0
//! explore.robot_radius  = 0.15
//! explore.candidate_cap = 10
//! explore.goal_tolerance = 0.2
//! explore.n_stuck       = 150
//! explore.max_ticks     = 6000
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use aslam_core::explore::ExploreParams;
use aslam_core::sensor::SensorModel;
use aslam_core::slam::MotionModel;
use aslam_core::stopping::CriterionSpec;
use aslam_core::world::WorldModel;
use aslam_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum WorldSource {
    /// A world compiled into the library, addressed as `bundled:<name>`.
    Bundled(String),
    File(PathBuf),
}

impl WorldSource {
    pub fn load(&self) -> Result<WorldModel> {
        match self {
            WorldSource::Bundled(name) => WorldModel::bundled(name),
            WorldSource::File(path) => WorldModel::load(path),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            WorldSource::Bundled(name) => format!("bundled:{name}"),
            WorldSource::File(path) => path.display().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub world: WorldSource,
    pub seed: u64,
    pub trials: usize,
    pub step_cap: usize,
    pub out_dir: PathBuf,
    pub criteria: Vec<CriterionSpec>,
    /// Start pose `(x, y, theta)`; `None` picks the free cell nearest the
    /// world center, heading 0.
    pub start: Option<(f64, f64, f64)>,
    pub sensor: SensorModel,
    pub motion: MotionModel,
    pub explore: ExploreParams,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut world = None;
        let mut seed = 1u64;
        let mut trials = 1usize;
        let mut step_cap = 150usize;
        let mut out_dir = PathBuf::from("runs");
        let mut criteria = Vec::new();
        let mut start = None;
        let mut sensor = SensorModel::default();
        let mut motion = MotionModel::default();
        let mut explore = ExploreParams::default();
        let mut seen = HashSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(Error::Config(format!("line {lineno}: `{key}` has no value")));
            }
            // `criterion` accumulates; every other key must appear at most once.
            if key != "criterion" && !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {lineno}: duplicate key `{key}`")));
            }

            let bad = |what: &str| Error::Config(format!("line {lineno}: {what}: `{value}`"));
            match key {
                "world" => {
                    world = Some(match value.strip_prefix("bundled:") {
                        Some(name) => WorldSource::Bundled(name.to_string()),
                        None => WorldSource::File(PathBuf::from(value)),
                    });
                }
                "seed" => seed = value.parse().map_err(|_| bad("bad seed"))?,
                "trials" => trials = value.parse().map_err(|_| bad("bad trial count"))?,
                "step_cap" => step_cap = value.parse().map_err(|_| bad("bad step cap"))?,
                "out" => out_dir = PathBuf::from(value),
                "criterion" => criteria.push(parse_criterion(value)?),
                "start" => {
                    let p = parse_floats(value, 3).map_err(|_| bad("start needs `x y theta`"))?;
                    start = Some((p[0], p[1], p[2]));
                }
                "sensor.fov" => sensor.fov = value.parse().map_err(|_| bad("bad fov"))?,
                "sensor.range" => sensor.range = value.parse().map_err(|_| bad("bad range"))?,
                "sensor.beams" => sensor.beams = value.parse().map_err(|_| bad("bad beams"))?,
                "sensor.sigma_r" => sensor.sigma_r = value.parse().map_err(|_| bad("bad sigma_r"))?,
                "motion.v_max" => motion.v_max = value.parse().map_err(|_| bad("bad v_max"))?,
                "motion.omega_max" => {
                    motion.omega_max = value.parse().map_err(|_| bad("bad omega_max"))?
                }
                "motion.sigma" => {
                    let s = parse_floats(value, 3)
                        .map_err(|_| bad("motion.sigma needs three values"))?;
                    motion.sigma = (s[0], s[1], s[2]);
                }
                "explore.alpha" => explore.alpha = value.parse().map_err(|_| bad("bad alpha"))?,
                "explore.loop_radius" => {
                    explore.loop_radius = value.parse().map_err(|_| bad("bad loop_radius"))?
                }
                "explore.robot_radius" => {
                    explore.robot_radius = value.parse().map_err(|_| bad("bad robot_radius"))?
                }
                "explore.candidate_cap" => {
                    explore.candidate_cap = value.parse().map_err(|_| bad("bad candidate_cap"))?
                }
                "explore.goal_tolerance" => {
                    explore.goal_tolerance = value.parse().map_err(|_| bad("bad goal_tolerance"))?
                }
                "explore.n_stuck" => {
                    explore.n_stuck = value.parse().map_err(|_| bad("bad n_stuck"))?
                }
                "explore.max_ticks" => {
                    explore.max_ticks = value.parse().map_err(|_| bad("bad max_ticks"))?
                }
                _ => return Err(Error::Config(format!("line {lineno}: unknown key `{key}`"))),
            }
        }

        let world = world.ok_or_else(|| Error::Config("missing `world` key".into()))?;
        let cfg = Self {
            world,
            seed,
            trials,
            step_cap,
            out_dir,
            criteria,
            start,
            sensor,
            motion,
            explore,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_cap == 0 {
            return Err(Error::Config("step cap must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trial count must be positive".into()));
        }
        if self.criteria.is_empty() {
            return Err(Error::Config("at least one `criterion` is required".into()));
        }
        for c in &self.criteria {
            c.validate()?;
        }
        self.sensor.validate()?;
        self.motion.validate()?;
        Ok(())
    }

    /// CLI flags win over file contents.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>) {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.out_dir = o;
        }
    }
}

/// Parses the compact criterion labels used both here and in file names:
/// `task[:<gamma_pct>[:<window>]]`, `temporal:<seconds>`, `coverage:<pct>`,
/// `frontier`. The produced spec round-trips through
/// [`CriterionSpec::label`].
pub fn parse_criterion(s: &str) -> Result<CriterionSpec> {
    let mut parts = s.split(':');
    let head = parts.next().unwrap_or("");
    let rest: Vec<&str> = parts.collect();
    let bad = || Error::Config(format!("bad criterion `{s}`"));
    let spec = match head {
        "task" => {
            let gamma_th = match rest.first() {
                Some(v) => v.parse().map_err(|_| bad())?,
                None => aslam_core::stopping::DEFAULT_GAMMA_THRESHOLD,
            };
            let window = match rest.get(1) {
                Some(v) => v.parse().map_err(|_| bad())?,
                None => aslam_core::stopping::DEFAULT_WINDOW,
            };
            if rest.len() > 2 {
                return Err(bad());
            }
            CriterionSpec::TaskDriven { gamma_th, window }
        }
        "temporal" => {
            let [v] = rest.as_slice() else { return Err(bad()) };
            CriterionSpec::Temporal { budget: v.parse().map_err(|_| bad())? }
        }
        "coverage" => {
            let [v] = rest.as_slice() else { return Err(bad()) };
            CriterionSpec::Coverage { target: v.parse().map_err(|_| bad())? }
        }
        "frontier" => {
            if !rest.is_empty() {
                return Err(bad());
            }
            CriterionSpec::FrontierAbsence
        }
        _ => return Err(bad()),
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_floats(value: &str, n: usize) -> std::result::Result<Vec<f64>, ()> {
    let vals = value
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| ()))
        .collect::<std::result::Result<Vec<f64>, ()>>()?;
    if vals.len() == n {
        Ok(vals)
    } else {
        Err(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "world = bundled:closed_rooms_small\ncriterion = task:2:3\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.world, WorldSource::Bundled("closed_rooms_small".into()));
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.step_cap, 150);
        assert_eq!(cfg.out_dir, PathBuf::from("runs"));
        assert_eq!(cfg.criteria.len(), 1);
        assert_eq!(cfg.criteria[0].label(), "task:2:3");
        assert!(cfg.start.is_none());
    }

    #[test]
    fn full_config_round_trips_every_key() {
        let text = "\
            world = maps/office.world\n\
            seed = 42\n\
            trials = 3\n\
            step_cap = 80\n\
            out = /tmp/exp\n\
            criterion = task:5:4\n\
            criterion = temporal:600\n\
            criterion = coverage:70\n\
            criterion = frontier\n\
            start = 1.0 2.0 0.5\n\
            sensor.fov = 6.0\n\
            sensor.range = 3.5\n\
            sensor.beams = 360\n\
            sensor.sigma_r = 0.02\n\
            motion.v_max = 0.5\n\
            motion.omega_max = 1.2\n\
            motion.sigma = 0.01 0.02 0.005\n\
            explore.alpha = 0.5\n\
            explore.loop_radius = 2.0\n\
            explore.robot_radius = 0.2\n\
            explore.candidate_cap = 4\n\
            explore.goal_tolerance = 0.3\n\
            explore.n_stuck = 99\n\
            explore.max_ticks = 1234\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.world, WorldSource::File(PathBuf::from("maps/office.world")));
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.step_cap, 80);
        let labels: Vec<String> = cfg.criteria.iter().map(|c| c.label()).collect();
        assert_eq!(labels, ["task:5:4", "temporal:600", "coverage:70", "frontier"]);
        assert_eq!(cfg.start, Some((1.0, 2.0, 0.5)));
        assert_eq!(cfg.sensor.beams, 360);
        assert_eq!(cfg.motion.sigma, (0.01, 0.02, 0.005));
        assert_eq!(cfg.explore.candidate_cap, 4);
        assert_eq!(cfg.explore.max_ticks, 1234);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\n\nworld = bundled:closed_maze  # inline\n\ncriterion = frontier\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.world, WorldSource::Bundled("closed_maze".into()));
    }

    #[test]
    fn missing_world_or_criterion_is_rejected() {
        assert!(ExperimentConfig::parse("criterion = frontier\n").is_err());
        assert!(ExperimentConfig::parse("world = bundled:closed_maze\n").is_err());
    }

    #[test]
    fn zero_step_cap_and_zero_trials_are_rejected() {
        assert!(ExperimentConfig::parse(&format!("{MINIMAL}step_cap = 0\n")).is_err());
        assert!(ExperimentConfig::parse(&format!("{MINIMAL}trials = 0\n")).is_err());
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let unknown = ExperimentConfig::parse(&format!("{MINIMAL}sede = 3\n"));
        assert!(unknown.unwrap_err().to_string().contains("unknown key"));
        let dup = ExperimentConfig::parse(&format!("{MINIMAL}seed = 1\nseed = 2\n"));
        assert!(dup.unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn criterion_labels_parse_and_round_trip() {
        for label in ["task:2:3", "task:0.5:7", "temporal:600", "coverage:90", "frontier"] {
            assert_eq!(parse_criterion(label).unwrap().label(), label);
        }
        // Bare `task` takes the default threshold and window.
        assert_eq!(parse_criterion("task").unwrap().label(), "task:2:3");
        for bad in ["task:2:3:4", "temporal", "coverage", "frontier:1", "speed:3", ""] {
            assert!(parse_criterion(bad).is_err(), "`{bad}` should not parse");
        }
        // Parsed specs still go through semantic validation.
        assert!(parse_criterion("coverage:101").is_err());
        assert!(parse_criterion("task:-1:3").is_err());
    }

    #[test]
    fn overrides_replace_seed_and_out() {
        let mut cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        cfg.apply_overrides(Some(99), Some(PathBuf::from("elsewhere")));
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.out_dir, PathBuf::from("elsewhere"));
        cfg.apply_overrides(None, None);
        assert_eq!(cfg.seed, 99);
    }
}
