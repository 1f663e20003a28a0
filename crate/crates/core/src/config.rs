//! Run configuration: one JSON document per run. Loading re-runs every module
//! guard the settings will eventually hit (grid resolution, time step against
//! the transverse gap, box width against the transverse profile), so a bad
//! config fails up front with the guard's own message instead of mid-run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics1d::Params1D;
use crate::dynamics2d::Params2D;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, Grid2D};
use crate::groundstate::FlowConfig;
use crate::reduction::build_profile;

/// Initial datum of a dynamical run. In 2D the gaussian and ground_state
/// choices both go through the wave-guide ansatz or flow of the configured
/// system; file loads a snapshot of the run's own dimensionality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Gaussian {
        #[serde(default)]
        center: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
    GroundState,
    File { path: PathBuf },
}

fn default_width() -> f64 {
    1.0
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Gaussian { center: 0.0, width: default_width() }
    }
}

impl InitialState {
    fn validate(&self) -> Result<()> {
        match self {
            InitialState::Gaussian { center, width } => {
                if !center.is_finite() || !(*width > 0.0) || !width.is_finite() {
                    return Err(Error::Config(format!(
                        "initial state guard: gaussian needs finite center and positive width, \
                         got center = {center}, width = {width}"
                    )));
                }
            }
            InitialState::File { path } => {
                if path.as_os_str().is_empty() {
                    return Err(Error::Config(
                        "initial state guard: file path must not be empty".into(),
                    ));
                }
            }
            InitialState::GroundState => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Label stamped into summary.json; not interpreted.
    #[serde(default = "default_experiment")]
    pub experiment: String,
    #[serde(default)]
    pub grid2d: Option<Grid2D>,
    #[serde(default)]
    pub grid1d: Option<Grid1D>,
    #[serde(default)]
    pub params2d: Option<Params2D>,
    #[serde(default)]
    pub params1d: Option<Params1D>,
    /// Confinement sweep: reduce reruns with params2d.eps replaced per leg.
    /// Each leg's transverse half-width is grid2d.ly rescaled by
    /// sqrt(eps / params2d.eps); see [`RunConfig::sweep_y_axis`].
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub initial_state: InitialState,
    /// Diagnostics row cadence in steps.
    #[serde(default = "default_diagnostics_stride")]
    pub diagnostics_stride: u64,
    /// Intermediate snapshot cadence in steps; 0 writes endpoints only.
    #[serde(default)]
    pub snapshot_stride: u64,
    pub output_dir: PathBuf,
    /// Seed for the random fields used by selfcheck.
    #[serde(default)]
    pub seed: u64,
    /// Rotate the evolved 1D state by the phase of its overlap with the
    /// projected 2D state before comparing. Off by default: the projector's
    /// own phase convention is part of what reduce measures.
    #[serde(default)]
    pub align_phase: bool,
    /// Ground-state flow controls, for the groundstate and ground_state paths.
    #[serde(default)]
    pub flow: FlowConfig,
}

fn default_experiment() -> String {
    "run".into()
}

fn default_diagnostics_stride() -> u64 {
    10
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_slice(&fs::read(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply the CLI's top-level key overrides.
    pub fn with_overrides(mut self, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        if let Some(out) = out {
            self.output_dir = out;
        }
        if let Some(seed) = seed {
            self.seed = seed;
        }
        self
    }

    /// Every confinement value the run will touch: the sweep if one is set,
    /// otherwise the single configured eps.
    pub fn all_eps(&self) -> Vec<f64> {
        if self.eps_list.is_empty() {
            self.params2d.map(|p| p.eps).into_iter().collect()
        } else {
            self.eps_list.clone()
        }
    }

    /// Transverse axis for one sweep leg: the configured half-width scaled by
    /// sqrt(eps / params2d.eps), so every leg sees the same box in units of
    /// the profile width. A box shared across legs cannot work at fixed dt:
    /// wide enough to hold the loosest profile, its corner trap values
    /// ly^2/eps^2 overrun the explicit stepper's stability region at the
    /// tightest one.
    pub fn sweep_y_axis(&self, eps: f64) -> Result<Grid1D> {
        let grid = self
            .grid2d
            .ok_or_else(|| Error::Config("sweep axis needs a grid2d block".into()))?;
        let base = self
            .params2d
            .ok_or_else(|| Error::Config("sweep axis needs a params2d block".into()))?;
        Grid1D::new(grid.ny(), grid.ly() * (eps / base.eps).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.is_empty() {
            return Err(Error::Config("config guard: experiment label must not be empty".into()));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::Config("config guard: output_dir must not be empty".into()));
        }
        if self.diagnostics_stride == 0 {
            return Err(Error::Config(
                "config guard: diagnostics_stride must be at least 1".into(),
            ));
        }
        self.initial_state.validate()?;
        self.flow.validate()?;
        // serde fills grids field-wise, bypassing the constructors; rebuild
        // through them so the resolution guards run.
        if let Some(g) = self.grid2d {
            Grid2D::new(g.nx(), g.ny(), g.lx(), g.ly())?;
        }
        if let Some(g) = self.grid1d {
            Grid1D::new(g.n(), g.l())?;
        }
        if let Some(p) = self.params1d {
            p.validate()?;
        }
        if let Some(p) = self.params2d {
            p.validate()?;
            for &eps in &self.eps_list {
                Params2D { eps, ..p }.validate()?;
            }
            // The transverse box must hold every confinement in the run.
            if let Some(g) = self.grid2d {
                let y_axis = Grid1D::new(g.ny(), g.ly())?;
                for eps in self.all_eps() {
                    build_profile(eps, y_axis)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(tag: &str, body: &str) -> PathBuf {
        let path = std::env::temp_dir().join(format!("csslab-cfg-{tag}-{}.json", std::process::id()));
        fs::write(&path, body).unwrap();
        path
    }

    const FULL: &str = r#"{
        "experiment": "slosh",
        "grid2d": {"nx": 64, "ny": 128, "lx": 8.0, "ly": 4.0},
        "params2d": {"beta": 1.0, "g": 0.0, "eps": 0.2, "dt": 0.001, "t_end": 0.01},
        "eps_list": [0.2, 0.1],
        "initial_state": {"kind": "gaussian", "center": 1.0},
        "snapshot_stride": 5,
        "output_dir": "out",
        "seed": 7
    }"#;

    #[test]
    fn full_document_loads_with_defaults_filled() {
        let path = write_tmp("full", FULL);
        let cfg = RunConfig::load(&path).unwrap();
        fs::remove_file(&path).unwrap();
        assert_eq!(cfg.experiment, "slosh");
        assert_eq!(cfg.diagnostics_stride, 10);
        assert_eq!(cfg.snapshot_stride, 5);
        assert!(!cfg.align_phase);
        assert_eq!(cfg.all_eps(), vec![0.2, 0.1]);
        assert_eq!(cfg.initial_state, InitialState::Gaussian { center: 1.0, width: 1.0 });
        assert_eq!(cfg.flow.max_iters, FlowConfig::default().max_iters);
    }

    #[test]
    fn overrides_replace_output_and_seed_only() {
        let path = write_tmp("ovr", FULL);
        let cfg = RunConfig::load(&path)
            .unwrap()
            .with_overrides(Some(PathBuf::from("elsewhere")), Some(99));
        fs::remove_file(&path).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.experiment, "slosh");
    }

    fn expect_config_error(body: &str, needle: &str) {
        let cfg: RunConfig = serde_json::from_str(body).unwrap();
        match cfg.validate() {
            Err(Error::Config(msg)) => {
                assert!(msg.contains(needle), "message {msg:?} does not name {needle:?}")
            }
            other => panic!("expected a config error naming {needle:?}, got {other:?}"),
        }
    }

    #[test]
    fn violations_fail_with_the_guards_own_message() {
        // 48 is not a power of two.
        expect_config_error(
            r#"{"grid2d": {"nx": 48, "ny": 64, "lx": 8.0, "ly": 4.0}, "output_dir": "o"}"#,
            "grid guard",
        );
        // dt/eps = 0.6 leaves the transverse oscillation unresolved.
        expect_config_error(
            r#"{"params2d": {"beta": 0.0, "g": 0.0, "eps": 0.1, "dt": 0.06, "t_end": 0.6},
                "output_dir": "o"}"#,
            "params guard",
        );
        // ly = 1 is under 6*sqrt(0.2).
        expect_config_error(
            r#"{"grid2d": {"nx": 64, "ny": 128, "lx": 8.0, "ly": 1.0},
                "params2d": {"beta": 0.0, "g": 0.0, "eps": 0.2, "dt": 0.001, "t_end": 0.01},
                "output_dir": "o"}"#,
            "profile guard",
        );
        // The sweep is validated leg by leg even when the base eps is fine:
        // at eps = 0.01 this grid's dy = 0.0625 exceeds sqrt(eps)/4 = 0.025.
        expect_config_error(
            r#"{"grid2d": {"nx": 64, "ny": 128, "lx": 8.0, "ly": 4.0},
                "params2d": {"beta": 0.0, "g": 0.0, "eps": 0.2, "dt": 0.001, "t_end": 0.01},
                "eps_list": [0.2, 0.01], "output_dir": "o"}"#,
            "profile guard",
        );
        expect_config_error(
            r#"{"initial_state": {"kind": "gaussian", "width": -1.0}, "output_dir": "o"}"#,
            "initial state guard",
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"output_dir": "o", "sneaky": 1}"#)
            .unwrap_err();
        assert!(err.to_string().contains("sneaky"));
    }

    #[test]
    fn missing_trap_flag_defaults_to_on() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"params1d": {"beta": 0.5, "g_tilde": 0.0, "dt": 0.001, "t_end": 0.01},
                "output_dir": "o"}"#,
        )
        .unwrap();
        assert!(cfg.params1d.unwrap().trap_on);
    }
}
