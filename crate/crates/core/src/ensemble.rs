//! Monte-Carlo ensembles over fiber realizations.
//!
//! Realization `r` draws everything from the seed path `master → r`: its
//! model from `r → MODEL`, its baseline angles for K paddles from
//! `r → BASELINE → K`. One model with the largest requested paddle count is
//! built per realization and truncated for smaller counts, which is
//! bit-identical to building each count separately. Results are merged in
//! realization order, so statistics do not depend on the worker count.

use nalgebra::Vector2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{mode_group_structure, ExcitationProfile, FiberSpec};
use crate::model::{build_model, FslmModel, InputWeighting, ModelSpec, PaddleAngles};
use crate::optimize::{
    baseline_intensity, coordinate_descent, enhancement, OptimizerOptions,
};
use crate::rng::{label, SeedPath};

/// Enhancement gained per phase-only LC-SLM macropixel when both
/// polarizations are detected, `0.5 · π/4` rounded to two places.
pub const LCSLM_SLOPE: f64 = 0.39;

/// Smallest `G` with `G(G+1)/2 = modes`, or the neighbouring valid counts.
pub fn groups_for_modes(modes: usize) -> Result<usize> {
    let mut g = 0usize;
    while g * (g + 1) / 2 < modes {
        g += 1;
    }
    if g * (g + 1) / 2 == modes && modes > 0 {
        Ok(g)
    } else {
        let above = g.max(1) * (g.max(1) + 1) / 2;
        let below = if g == 0 { 0 } else { (g - 1) * g / 2 };
        Err(Error::NotTriangular(modes, below, above))
    }
}

/// Which modes are excited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    /// Uniform power over every channel of complete groups `1..=G`,
    /// `N = G(G+1)/2`.
    EvenlyExcited { modes: usize },
    /// Explicit group sizes with a per-group power profile.
    Profile {
        group_sizes: Vec<usize>,
        excitation: ExcitationProfile,
    },
}

impl ModeSpec {
    /// All guided groups of `fiber` with the given power profile, which is
    /// zero-padded when shorter than the group count.
    pub fn from_fiber(fiber: &FiberSpec, excitation: ExcitationProfile) -> Result<Self> {
        let structure = mode_group_structure(fiber)?;
        let mut excitation = excitation;
        if excitation.per_group_power.len() > structure.group_count {
            return Err(Error::InvalidExcitation(format!(
                "{} group weights for a fiber with {} guided groups",
                excitation.per_group_power.len(),
                structure.group_count
            )));
        }
        excitation.per_group_power.resize(structure.group_count, 0.0);
        Ok(Self::Profile {
            group_sizes: structure.modes_per_group,
            excitation,
        })
    }

    pub fn resolve(&self) -> Result<(Vec<usize>, ExcitationProfile)> {
        match self {
            Self::EvenlyExcited { modes } => {
                let g = groups_for_modes(*modes)?;
                Ok(((1..=g).collect(), ExcitationProfile::uniform_first_groups(g)))
            }
            Self::Profile {
                group_sizes,
                excitation,
            } => Ok((group_sizes.clone(), excitation.clone())),
        }
    }

    /// Spatial mode count `N` of the model (excited or not).
    pub fn mode_count(&self) -> Result<usize> {
        Ok(self.resolve()?.0.iter().sum())
    }
}

/// How each realization's angles start.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialAngles {
    #[default]
    Zero,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub mode_spec: ModeSpec,
    pub paddle_counts: Vec<usize>,
    pub realizations: usize,
    pub baseline_samples: usize,
    pub seed: u64,
    pub delta: f64,
    pub ablate_spatial_coupling: bool,
    pub optimizer: OptimizerOptions,
    pub initial_angles: InitialAngles,
    pub weighting: InputWeighting,
    /// Single-mode input polarization `(E_H, E_V)`.
    pub input_field: [Complex64; 2],
    /// 1-based target speckle.
    pub target: usize,
    /// Explicit K interval for the slope fit; automatic when `None`.
    pub slope_range: Option<(usize, usize)>,
    /// Keep one record per (realization, K).
    pub keep_raw: bool,
    /// Worker threads; rayon's default pool when `None`.
    pub workers: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(mode_spec: ModeSpec, paddle_counts: Vec<usize>, seed: u64) -> Self {
        Self {
            mode_spec,
            paddle_counts,
            realizations: 500,
            baseline_samples: 120,
            seed,
            delta: std::f64::consts::FRAC_PI_2,
            ablate_spatial_coupling: false,
            optimizer: OptimizerOptions::default(),
            initial_angles: InitialAngles::Zero,
            weighting: InputWeighting::PerChannel,
            input_field: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            target: 1,
            slope_range: None,
            keep_raw: false,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("realizations must be ≥ 1".into()));
        }
        if self.paddle_counts.is_empty() {
            return Err(Error::InvalidConfig("paddle_counts must be non-empty".into()));
        }
        if self.baseline_samples == 0 {
            return Err(Error::InvalidConfig("baseline_samples must be ≥ 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be ≥ 1".into()));
        }
        self.optimizer.validate()?;
        self.mode_spec.resolve()?;
        Ok(())
    }
}

/// Outcome of one (realization, K) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub seed_path: SeedPath,
    pub n_modes: usize,
    pub k_paddles: usize,
    pub ablated: bool,
    pub angles: Vec<f64>,
    pub objective: f64,
    pub baseline: f64,
    pub enhancement: f64,
    pub cycles: usize,
    pub converged: bool,
    /// Trajectory never decreased.
    pub monotone: bool,
}

/// Aggregate over realizations for one (N, K).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n_modes: usize,
    pub k_paddles: usize,
    pub mean_enh: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_enh: f64,
    pub stderr: f64,
    /// Realizations that contributed.
    pub realizations: usize,
    /// Realizations that failed and were left out.
    pub excluded: usize,
    pub ablated: bool,
    /// Runs whose trajectory decreased at some step.
    pub monotone_violations: usize,
    pub unconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub n_modes: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_modes: usize,
    pub cells: Vec<CellStats>,
    pub slope: Option<SlopeFit>,
    pub raw: Vec<RealizationRecord>,
}

impl EnsembleStats {
    pub fn cell(&self, k_paddles: usize) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.k_paddles == k_paddles)
    }
}

/// Ordinary least-squares slope of `(K, mean)` points with K in `range`.
pub fn fit_slope(points: &[(f64, f64)], range: (f64, f64)) -> Result<f64> {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(k, _)| *k >= range.0 && *k <= range.1)
        .collect();
    if inside.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} points in [{}, {}]",
            inside.len(),
            range.0,
            range.1
        )));
    }
    let n = inside.len() as f64;
    let mx = inside.iter().map(|p| p.0).sum::<f64>() / n;
    let my = inside.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = inside.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = inside.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all K values equal".into()));
    }
    Ok(sxy / sxx)
}

/// Reference line for an LC-SLM with `count` phase-only macropixels.
pub fn lcslm_comparator(pixel_counts: &[usize]) -> Vec<(usize, f64)> {
    pixel_counts
        .iter()
        .map(|&c| (c, 1.0 + LCSLM_SLOPE * c as f64))
        .collect()
}

/// The fit interval used when none is given: K values whose mean
/// enhancement stays below N/2.
fn automatic_slope_range(cells: &[CellStats], modes: usize) -> Option<(usize, usize)> {
    let limit = modes as f64 / 2.0;
    let mut ks: Vec<usize> = cells
        .iter()
        .filter(|c| c.mean_enh < limit)
        .map(|c| c.k_paddles)
        .collect();
    ks.sort_unstable();
    ks.dedup();
    // stop at the first K that leaves the linear regime
    let mut sorted: Vec<&CellStats> = cells.iter().collect();
    sorted.sort_by_key(|c| c.k_paddles);
    let first_out = sorted.iter().find(|c| c.mean_enh >= limit).map(|c| c.k_paddles);
    let ks: Vec<usize> = ks
        .into_iter()
        .filter(|&k| first_out.is_none_or(|f| k < f))
        .collect();
    (ks.len() >= 2).then(|| (ks[0], *ks.last().unwrap()))
}

type RealizationOutcome = Vec<std::result::Result<RealizationRecord, Error>>;

/// The model of realization `index` with the largest requested paddle
/// count, before any ablation.
pub fn realization_model(config: &EnsembleConfig, index: usize) -> Result<FslmModel> {
    let (group_sizes, excitation) = config.mode_spec.resolve()?;
    build_realization(config, &group_sizes, &excitation, index)
}

fn build_realization(
    config: &EnsembleConfig,
    group_sizes: &[usize],
    excitation: &ExcitationProfile,
    index: usize,
) -> Result<FslmModel> {
    let path = SeedPath::new(config.seed).child(index as u64);
    let max_k = config.paddle_counts.iter().copied().max().unwrap_or(0);
    let spec = ModelSpec {
        weighting: config.weighting,
        delta: config.delta,
        input_field: Vector2::new(config.input_field[0], config.input_field[1]),
        ..ModelSpec::new(group_sizes.to_vec(), max_k, excitation.clone())
    };
    build_model(&spec, &mut path.child(label::MODEL).stream())
}

fn run_realization(
    config: &EnsembleConfig,
    group_sizes: &[usize],
    excitation: &ExcitationProfile,
    index: usize,
) -> RealizationOutcome {
    let path = SeedPath::new(config.seed).child(index as u64);
    let full = match build_realization(config, group_sizes, excitation, index) {
        Ok(m) => m,
        Err(e) => return config.paddle_counts.iter().map(|_| Err(e.clone())).collect(),
    };
    let n_modes = full.mode_count();
    config
        .paddle_counts
        .iter()
        .map(|&k| {
            let mut model = full.truncated(k);
            if config.ablate_spatial_coupling {
                model = model.without_spatial_coupling();
            }
            let initial = match config.initial_angles {
                InitialAngles::Zero => PaddleAngles::zeros(k),
                InitialAngles::Random => PaddleAngles::random(
                    k,
                    &mut path.child(label::INITIAL_ANGLES).child(k as u64).stream(),
                ),
            };
            let result = coordinate_descent(&model, config.target, &config.optimizer, initial)?;
            let baseline = baseline_intensity(
                &model,
                config.target,
                config.baseline_samples,
                &mut path.child(label::BASELINE).child(k as u64).stream(),
            )?;
            let enh = enhancement(result.objective, baseline)?;
            Ok(RealizationRecord {
                seed_path: path.clone(),
                n_modes,
                k_paddles: k,
                ablated: config.ablate_spatial_coupling,
                monotone: result.trajectory.windows(2).all(|w| w[1] >= w[0]),
                angles: result.angles.as_slice().to_vec(),
                objective: result.objective,
                baseline,
                enhancement: enh,
                cycles: result.cycles,
                converged: result.converged,
            })
        })
        .collect()
}

fn summarize(n_modes: usize, k: usize, ablated: bool, records: &[&RealizationRecord], excluded: usize) -> CellStats {
    let n = records.len();
    let mean = if n > 0 {
        records.iter().map(|r| r.enhancement).sum::<f64>() / n as f64
    } else {
        f64::NAN
    };
    let std = if n > 1 {
        (records.iter().map(|r| (r.enhancement - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    CellStats {
        n_modes,
        k_paddles: k,
        mean_enh: mean,
        std_enh: std,
        stderr: if n > 0 { std / (n as f64).sqrt() } else { f64::NAN },
        realizations: n,
        excluded,
        ablated,
        monotone_violations: records.iter().filter(|r| !r.monotone).count(),
        unconverged: records.iter().filter(|r| !r.converged).count(),
    }
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleStats> {
    config.validate()?;
    let (group_sizes, excitation) = config.mode_spec.resolve()?;
    let n_modes: usize = group_sizes.iter().sum();

    let work = || -> Vec<RealizationOutcome> {
        (0..config.realizations)
            .into_par_iter()
            .map(|r| run_realization(config, &group_sizes, &excitation, r))
            .collect()
    };
    let outcomes = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut cells = Vec::with_capacity(config.paddle_counts.len());
    let mut raw = Vec::new();
    for (slot, &k) in config.paddle_counts.iter().enumerate() {
        let mut ok = Vec::with_capacity(outcomes.len());
        let mut excluded = 0;
        for outcome in &outcomes {
            match &outcome[slot] {
                Ok(rec) => ok.push(rec),
                Err(_) => excluded += 1,
            }
        }
        cells.push(summarize(n_modes, k, config.ablate_spatial_coupling, &ok, excluded));
    }
    if config.keep_raw {
        for outcome in &outcomes {
            raw.extend(outcome.iter().filter_map(|o| o.as_ref().ok().cloned()));
        }
    }
    if cells.iter().all(|c| c.realizations == 0) {
        let err = outcomes
            .iter()
            .flat_map(|o| o.iter())
            .find_map(|o| o.as_ref().err().cloned())
            .expect("some realization failed");
        return Err(err);
    }

    let range = config
        .slope_range
        .or_else(|| automatic_slope_range(&cells, n_modes));
    let slope = range.and_then(|(k_min, k_max)| {
        let points: Vec<(f64, f64)> = cells
            .iter()
            .filter(|c| c.realizations > 0)
            .map(|c| (c.k_paddles as f64, c.mean_enh))
            .collect();
        fit_slope(&points, (k_min as f64, k_max as f64))
            .ok()
            .map(|slope| SlopeFit {
                n_modes,
                k_min,
                k_max,
                slope,
            })
    });

    Ok(EnsembleStats {
        n_modes,
        cells,
        slope,
        raw,
    })
}

/// Run the evenly-excited grid `modes × paddles` sharing every other setting
/// with `base`.
pub fn sweep_modes_paddles(
    modes: &[usize],
    paddles: &[usize],
    base: &EnsembleConfig,
) -> Result<Vec<EnsembleStats>> {
    for &n in modes {
        groups_for_modes(n)?;
    }
    modes
        .iter()
        .map(|&n| {
            let config = EnsembleConfig {
                mode_spec: ModeSpec::EvenlyExcited { modes: n },
                paddle_counts: paddles.to_vec(),
                ..base.clone()
            };
            run_ensemble(&config)
        })
        .collect()
}
