//! JSON run configuration.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use fslm::ensemble::{InitialAngles, ModeSpec};
use fslm::fiber::{offset_launch_weights, ExcitationProfile, FiberSpec};
use fslm::{InputWeighting, OptimizerOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Sweep,
    Ablate,
    Modes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Self::Json | Self::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberBlock {
    pub core_radius_um: f64,
    pub na: f64,
    pub n1: f64,
    pub wavelength_um: f64,
}

impl From<FiberBlock> for FiberSpec {
    fn from(b: FiberBlock) -> Self {
        FiberSpec {
            core_radius: b.core_radius_um,
            numerical_aperture: b.na,
            core_index: b.n1,
            wavelength: b.wavelength_um,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticOffset {
    pub offset_um: f64,
    #[serde(default = "default_mfr")]
    pub smf_mfr_um: f64,
    /// Keep only groups `[first, last]` (1-based, inclusive).
    #[serde(default)]
    pub restrict_groups: Option<[usize; 2]>,
}

fn default_mfr() -> f64 {
    5.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Self::One(v) => vec![*v],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_offset: Option<AnalyticOffset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_modes: Option<OneOrMany>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerBlock {
    pub termination_fraction: Option<f64>,
    pub max_cycles: Option<usize>,
    pub grid_points: Option<usize>,
    pub refine_tolerance: Option<f64>,
}

/// The document as written; validated into [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Command,
    #[serde(default)]
    fiber: Option<FiberBlock>,
    #[serde(default)]
    excitation: Option<ExcitationBlock>,
    #[serde(default)]
    paddles: Option<OneOrMany>,
    #[serde(default)]
    realizations: Option<usize>,
    #[serde(default)]
    baseline_samples: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    delta_rad: Option<f64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    format: Option<Format>,
    #[serde(default)]
    raw: Option<bool>,
    #[serde(default)]
    dump_model: Option<bool>,
    #[serde(default)]
    optimizer: Option<OptimizerBlock>,
    #[serde(default)]
    initial_angles: Option<InitialAngles>,
    #[serde(default)]
    input_weighting: Option<InputWeighting>,
    /// `[[re, im], [re, im]]` for the H and V components.
    #[serde(default)]
    input_field: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    slope_range: Option<[usize; 2]>,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub fiber: Option<FiberBlock>,
    pub excitation: ExcitationBlock,
    pub paddles: Vec<usize>,
    pub realizations: usize,
    pub baseline_samples: usize,
    pub seed: u64,
    pub delta_rad: f64,
    pub output_dir: PathBuf,
    pub format: Format,
    pub raw: bool,
    pub dump_model: bool,
    pub optimizer: OptimizerOptions,
    pub initial_angles: InitialAngles,
    pub input_weighting: InputWeighting,
    pub input_field: [[f64; 2]; 2],
    pub slope_range: Option<[usize; 2]>,
}

fn invalid(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {why}"))
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!(
            "parse error at line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    let seed = raw
        .seed
        .ok_or_else(|| invalid("seed", "required (no default seed is provided)"))?;

    let excitation = raw.excitation.unwrap_or_default();
    let mut sources = Vec::new();
    if excitation.analytic_offset.is_some() {
        sources.push("analytic_offset");
    }
    if excitation.groups.is_some() {
        sources.push("groups");
    }
    if excitation.uniform_modes.is_some() {
        sources.push("uniform_modes");
    }
    if sources.len() > 1 {
        return Err(invalid(
            "excitation",
            format!("`{}` are mutually exclusive; give exactly one", sources.join("` and `")),
        ));
    }
    if sources.is_empty() && raw.command != Command::Modes {
        return Err(invalid(
            "excitation",
            "one of `analytic_offset`, `groups`, `uniform_modes` is required",
        ));
    }
    if raw.command == Command::Modes && excitation.uniform_modes.is_some() {
        return Err(invalid("excitation.uniform_modes", "not meaningful for `modes`"));
    }
    if let Some(modes) = &excitation.uniform_modes {
        let modes = modes.to_vec();
        if modes.is_empty() {
            return Err(invalid("excitation.uniform_modes", "must not be empty"));
        }
        if raw.command != Command::Sweep && modes.len() != 1 {
            return Err(invalid(
                "excitation.uniform_modes",
                "a list of mode counts is only accepted by `sweep`",
            ));
        }
        for n in modes {
            fslm::ensemble::groups_for_modes(n)
                .map_err(|e| invalid("excitation.uniform_modes", e))?;
        }
    }
    if let Some(a) = &excitation.analytic_offset {
        if !(a.offset_um >= 0.0) {
            return Err(invalid("excitation.analytic_offset.offset_um", "must be ≥ 0"));
        }
        if !(a.smf_mfr_um > 0.0) {
            return Err(invalid("excitation.analytic_offset.smf_mfr_um", "must be > 0"));
        }
        if let Some([lo, hi]) = a.restrict_groups {
            if lo == 0 || lo > hi {
                return Err(invalid(
                    "excitation.analytic_offset.restrict_groups",
                    "need 1 ≤ first ≤ last",
                ));
            }
        }
    }
    if let Some(w) = &excitation.groups {
        ExcitationProfile::from_weights(w.clone()).map_err(|e| invalid("excitation.groups", e))?;
        if w.is_empty() {
            return Err(invalid("excitation.groups", "must not be empty"));
        }
    }
    if let Some(f) = raw.fiber {
        FiberSpec::from(f).validate().map_err(|e| invalid("fiber", e))?;
    }

    let paddles = match (&raw.paddles, raw.command) {
        (None, Command::Modes) => Vec::new(),
        (None, _) => return Err(invalid("paddles", "required")),
        (Some(p), cmd) => {
            let p = p.to_vec();
            if p.is_empty() {
                return Err(invalid("paddles", "must not be empty"));
            }
            if cmd == Command::Simulate && p.len() != 1 {
                return Err(invalid("paddles", "`simulate` runs a single paddle count"));
            }
            p
        }
    };

    let realizations = raw.realizations.unwrap_or(500);
    if realizations == 0 {
        return Err(invalid("realizations", "must be ≥ 1"));
    }
    let baseline_samples = raw.baseline_samples.unwrap_or(120);
    if baseline_samples == 0 {
        return Err(invalid("baseline_samples", "must be ≥ 1"));
    }
    let delta_rad = raw.delta_rad.unwrap_or(FRAC_PI_2);
    if !delta_rad.is_finite() {
        return Err(invalid("delta_rad", "must be finite"));
    }
    let defaults = OptimizerOptions::default();
    let block = raw.optimizer.unwrap_or_default();
    let optimizer = OptimizerOptions {
        termination_fraction: block.termination_fraction.unwrap_or(defaults.termination_fraction),
        max_cycles: block.max_cycles.unwrap_or(defaults.max_cycles),
        grid_points: block.grid_points.unwrap_or(defaults.grid_points),
        refine_tolerance: block.refine_tolerance.unwrap_or(defaults.refine_tolerance),
    };
    optimizer.validate().map_err(|e| invalid("optimizer", e))?;
    let input_field = raw.input_field.unwrap_or([[1.0, 0.0], [0.0, 0.0]]);
    if input_field.iter().flatten().any(|v| !v.is_finite())
        || input_field.iter().flatten().all(|&v| v == 0.0)
    {
        return Err(invalid("input_field", "must be finite and nonzero"));
    }
    if let Some([lo, hi]) = raw.slope_range {
        if lo >= hi {
            return Err(invalid("slope_range", "need first < last"));
        }
    }

    Ok(RunConfig {
        command: raw.command,
        fiber: raw.fiber,
        excitation,
        paddles,
        realizations,
        baseline_samples,
        seed,
        delta_rad,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("fslm-out")),
        format: raw.format.unwrap_or_default(),
        raw: raw.raw.unwrap_or(false),
        dump_model: raw.dump_model.unwrap_or(false),
        optimizer,
        initial_angles: raw.initial_angles.unwrap_or_default(),
        input_weighting: raw.input_weighting.unwrap_or_default(),
        input_field,
        slope_range: raw.slope_range,
    })
}

impl RunConfig {
    pub fn fiber_spec(&self) -> FiberSpec {
        self.fiber.map(FiberSpec::from).unwrap_or_default()
    }

    /// Per-group profile for the fiber-based excitations, `None` for
    /// `uniform_modes`.
    pub fn fiber_profile(&self) -> Result<Option<ExcitationProfile>, CliError> {
        let fiber = self.fiber_spec();
        if let Some(a) = &self.excitation.analytic_offset {
            let p = offset_launch_weights(&fiber, a.smf_mfr_um, a.offset_um)
                .map_err(|e| invalid("excitation.analytic_offset", e))?;
            return Ok(Some(match a.restrict_groups {
                Some([lo, hi]) => p.restricted(lo, hi),
                None => p,
            }));
        }
        if let Some(w) = &self.excitation.groups {
            return Ok(Some(
                ExcitationProfile::from_weights(w.clone()).map_err(|e| invalid("excitation.groups", e))?,
            ));
        }
        Ok(None)
    }

    /// Mode specifications to run, one per evenly-excited N or a single
    /// fiber/profile entry.
    pub fn mode_specs(&self) -> Result<Vec<ModeSpec>, CliError> {
        if let Some(n) = &self.excitation.uniform_modes {
            return Ok(n
                .to_vec()
                .into_iter()
                .map(|modes| ModeSpec::EvenlyExcited { modes })
                .collect());
        }
        let profile = self.fiber_profile()?.expect("validated excitation");
        let spec = if self.fiber.is_none() && self.excitation.groups.is_some() {
            let g = profile.per_group_power.len();
            ModeSpec::Profile {
                group_sizes: (1..=g).collect(),
                excitation: profile,
            }
        } else {
            ModeSpec::from_fiber(&self.fiber_spec(), profile).map_err(|e| invalid("excitation", e))?
        };
        Ok(vec![spec])
    }
}
