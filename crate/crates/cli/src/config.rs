//! Run configuration: one JSON document, every block optional.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use obskit_core::empirical_gramian::{PerturbBasis, WingStudySettings};
use obskit_core::neural_encoding::EncoderParams;
use obskit_core::wing::{hawkmoth_veins, parse_veins, Point, StrainKind, StrokeParams, Vein, WingModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Wing model JSON; the built-in forewing when absent.
    pub model: Option<PathBuf>,
    pub encoder: EncoderParams,
    pub kinematics: KinematicsConfig,
    pub steps_per_beat: usize,
    pub grid: GridConfig,
    pub gramian: GramianConfig,
    pub placement: PlacementConfig,
    pub nla_sweep: SweepConfig,
    pub simulate: SimulateConfig,
    pub lie_check: LieCheckConfig,
    pub linear_delay: LinearDelayConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: None,
            encoder: EncoderParams::default(),
            kinematics: KinematicsConfig::default(),
            steps_per_beat: 400,
            grid: GridConfig::default(),
            gramian: GramianConfig::default(),
            placement: PlacementConfig::default(),
            nla_sweep: SweepConfig::default(),
            simulate: SimulateConfig::default(),
            lie_check: LieCheckConfig::default(),
            linear_delay: LinearDelayConfig::default(),
            output_dir: PathBuf::from("obskit-out"),
            seed: 0,
            base_dir: PathBuf::from("."),
        }
    }
}

/// Stroke amplitudes in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinematicsConfig {
    #[serde(rename = "A_psi_deg")]
    pub a_psi_deg: f64,
    #[serde(rename = "A_alpha_deg")]
    pub a_alpha_deg: f64,
    #[serde(rename = "T_beat")]
    pub t_beat: f64,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        Self { a_psi_deg: 45.0, a_alpha_deg: 60.0, t_beat: 0.040 }
    }
}

impl KinematicsConfig {
    pub fn stroke(&self) -> StrokeParams {
        StrokeParams { a_psi: self.a_psi_deg.to_radians(), a_alpha: self.a_alpha_deg.to_radians(), t_beat: self.t_beat }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 17, ny: 7 }
    }
}

impl GridConfig {
    pub const FULL: GridConfig = GridConfig { nx: 51, ny: 21 };
}

/// `"rates"`, `"stroke_axes"` or a list of state indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerturbSpec {
    Named(String),
    Indices(Vec<usize>),
}

impl PerturbSpec {
    pub fn basis(&self) -> anyhow::Result<PerturbBasis> {
        Ok(match self {
            PerturbSpec::Named(s) if s == "rates" => PerturbBasis::PlateRates,
            PerturbSpec::Named(s) if s == "stroke_axes" => PerturbBasis::StrokeAxes,
            PerturbSpec::Named(s) => {
                bail!("unknown perturbation basis {s:?}; use \"rates\", \"stroke_axes\" or an index list")
            }
            PerturbSpec::Indices(idx) => PerturbBasis::Indices(idx.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GramianConfig {
    pub epsilon: f64,
    pub perturb: PerturbSpec,
    pub rank_rtol: f64,
}

impl Default for GramianConfig {
    fn default() -> Self {
        Self { epsilon: 1e-3, perturb: PerturbSpec::Named("rates".into()), rank_rtol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlacementConfig {
    pub r: usize,
    pub w_nu: f64,
    /// Vein polyline file; the built-in veins when absent.
    pub veins: Option<PathBuf>,
    /// Site spacing along veins, m.
    pub spacing: f64,
    pub kinds: Vec<StrainKind>,
    pub restarts: usize,
    pub iterations: usize,
    pub step: f64,
    /// Linkage distance for the reported cluster count, m.
    pub cluster_distance: f64,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        Self {
            r: 20,
            w_nu: 20.0,
            veins: None,
            spacing: 0.002,
            kinds: StrainKind::ALL.to_vec(),
            restarts: 5,
            iterations: 400,
            step: 1.0,
            cluster_distance: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub c_values: Vec<f64>,
    pub d_values: Vec<f64>,
    pub kinds: Vec<StrainKind>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            c_values: merged((0..15).map(|i| 1.0 + 2.0 * f64::from(i)), 10.0),
            d_values: merged((0..11).map(|i| (f64::from(i) * 2.0 - 10.0) / 10.0), 0.5),
            kinds: StrainKind::ALL.to_vec(),
        }
    }
}

/// Sorted grid values with `extra` inserted.
fn merged(grid: impl Iterator<Item = f64>, extra: f64) -> Vec<f64> {
    let mut v: Vec<f64> = grid.chain(std::iter::once(extra)).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// The state that repeats after one beat.
    Periodic,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub probes: Vec<Point>,
    pub initial: InitialState,
    /// Simulated beats.
    pub beats: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { probes: vec![[0.004, 0.005], [0.004, 0.025], [0.004, 0.045]], initial: InitialState::Periodic, beats: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LieSystem {
    DoubleIntegratorTanh,
    WingAutonomous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LieCheckConfig {
    pub system: LieSystem,
    /// States to probe; random states are drawn when empty.
    pub states: Vec<Vec<f64>>,
    pub random_states: usize,
    /// Wing output station and strain kind.
    pub probe: Point,
    pub kind: StrainKind,
    pub fd_step: f64,
    pub rank_rtol: f64,
}

impl Default for LieCheckConfig {
    fn default() -> Self {
        Self {
            system: LieSystem::DoubleIntegratorTanh,
            states: Vec::new(),
            random_states: 25,
            probe: [0.004, 0.025],
            kind: StrainKind::Bending,
            fd_step: 1e-4,
            rank_rtol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearDelayConfig {
    /// System JSON `{A, B, taps}`; the differencing double integrator when absent.
    pub system: Option<PathBuf>,
    pub rank_rtol: f64,
    /// Sample time of the default system.
    pub ts: f64,
}

impl Default for LinearDelayConfig {
    fn default() -> Self {
        Self { system: None, rank_rtol: 1e-10, ts: 0.1 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.encoder.validate()?;
        self.kinematics.stroke().validate()?;
        if self.steps_per_beat < 2 {
            bail!("steps_per_beat must be at least 2");
        }
        if !(self.gramian.epsilon > 0.0) {
            bail!("gramian.epsilon must be positive");
        }
        self.gramian.perturb.basis()?;
        if self.nla_sweep.c_values.is_empty() || self.nla_sweep.d_values.is_empty() {
            bail!("nla_sweep needs at least one c and one d value");
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn wing_model(&self) -> anyhow::Result<WingModel> {
        match &self.model {
            None => Ok(WingModel::hawkmoth()),
            Some(p) => {
                let path = self.resolve(p);
                let text = fs::read_to_string(&path).with_context(|| format!("reading model {}", path.display()))?;
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                Ok(WingModel::from_json(&text, &dir).with_context(|| format!("loading model {}", path.display()))?)
            }
        }
    }

    pub fn veins(&self) -> anyhow::Result<Vec<Vein>> {
        match &self.placement.veins {
            None => Ok(hawkmoth_veins()),
            Some(p) => {
                let path = self.resolve(p);
                let text = fs::read_to_string(&path).with_context(|| format!("reading veins {}", path.display()))?;
                Ok(parse_veins(&text)?)
            }
        }
    }

    pub fn study_settings(&self) -> anyhow::Result<WingStudySettings> {
        Ok(WingStudySettings {
            stroke: self.kinematics.stroke(),
            epsilon: self.gramian.epsilon,
            steps_per_beat: self.steps_per_beat,
            basis: self.gramian.perturb.basis()?,
        })
    }

    pub fn grid(&self, full: bool) -> GridConfig {
        if full {
            GridConfig::FULL
        } else {
            self.grid
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.grid, GridConfig { nx: 17, ny: 7 });
        assert_eq!(cfg.placement.r, 20);
        assert_eq!(cfg.nla_sweep.c_values.len(), 16);
        assert!(cfg.nla_sweep.c_values.contains(&10.0) && cfg.nla_sweep.c_values.contains(&29.0));
        assert_eq!(cfg.nla_sweep.d_values, vec![-1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0]);
        cfg.validate().unwrap();
    }

    #[test]
    fn perturb_spec_forms() {
        let g: GramianConfig = serde_json::from_str(r#"{"perturb": [6, 7]}"#).unwrap();
        assert_eq!(g.perturb.basis().unwrap(), PerturbBasis::Indices(vec![6, 7]));
        let g: GramianConfig = serde_json::from_str(r#"{"perturb": "stroke_axes"}"#).unwrap();
        assert_eq!(g.perturb.basis().unwrap(), PerturbBasis::StrokeAxes);
        let g: GramianConfig = serde_json::from_str(r#"{"perturb": "yaw"}"#).unwrap();
        assert!(g.perturb.basis().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"gird": {"nx": 3, "ny": 3}}"#).is_err());
    }

    #[test]
    fn degrees_convert() {
        let k = KinematicsConfig::default().stroke();
        assert!((k.a_psi - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }
}
