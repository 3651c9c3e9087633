//! Command dispatch.

use std::path::PathBuf;
use std::time::Instant;

use fslm::ensemble::{
    lcslm_comparator, realization_model, run_ensemble, EnsembleConfig, EnsembleStats, ModeSpec,
};
use fslm::fiber::{mode_group_structure, offset_launch_weights};
use fslm::SeedPath;
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Command, RunConfig};
use crate::output;
use crate::CliError;

/// Command-line overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub quiet: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub config_sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: Command,
    config_sha256: &'a str,
    seed: u64,
    files: &'a [String],
    wall_time_s: f64,
}

#[derive(Serialize)]
struct ModelDump<'a> {
    seed_path: SeedPath,
    config_sha256: &'a str,
    model: &'a fslm::FslmModel,
}

/// SHA-256 of the validated configuration, excluding the output location.
pub fn config_hash(config: &RunConfig) -> String {
    let mut canonical = config.clone();
    canonical.output_dir = PathBuf::new();
    let text = serde_json::to_string(&canonical).expect("config serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn ensemble_config(config: &RunConfig, spec: ModeSpec, opts: &RunOptions) -> EnsembleConfig {
    let [[hr, hi], [vr, vi]] = config.input_field;
    EnsembleConfig {
        realizations: config.realizations,
        baseline_samples: config.baseline_samples,
        delta: config.delta_rad,
        optimizer: config.optimizer,
        initial_angles: config.initial_angles,
        weighting: config.input_weighting,
        slope_range: config.slope_range.map(|[a, b]| (a, b)),
        keep_raw: config.raw,
        workers: opts.workers,
        input_field: [Complex64::new(hr, hi), Complex64::new(vr, vi)],
        ..EnsembleConfig::new(spec, config.paddles.clone(), config.seed)
    }
}

struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text.into_bytes()
}

fn log(opts: &RunOptions, msg: impl AsRef<str>) {
    if !opts.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn run_specs(
    config: &RunConfig,
    specs: Vec<ModeSpec>,
    ablated: bool,
    opts: &RunOptions,
) -> Result<Vec<EnsembleStats>, CliError> {
    specs
        .into_iter()
        .map(|spec| {
            let mut ec = ensemble_config(config, spec, opts);
            ec.ablate_spatial_coupling = ablated;
            let n = ec.mode_spec.mode_count()?;
            log(
                opts,
                format!(
                    "running N = {n}, K = {:?}, {} realizations{}",
                    ec.paddle_counts,
                    ec.realizations,
                    if ablated { " (spatial coupling removed)" } else { "" }
                ),
            );
            let stats = run_ensemble(&ec)?;
            for c in &stats.cells {
                if c.excluded > 0 {
                    log(opts, format!("N = {n}, K = {}: {} realizations excluded", c.k_paddles, c.excluded));
                }
            }
            Ok(stats)
        })
        .collect()
}

fn ensemble_outputs(config: &RunConfig, runs: &[&EnsembleStats], out: &mut Outputs) {
    let cells: Vec<_> = runs.iter().flat_map(|s| s.cells.iter().cloned()).collect();
    let slopes: Vec<_> = runs
        .iter()
        .filter(|s| s.cells.iter().all(|c| !c.ablated))
        .filter_map(|s| s.slope.clone())
        .collect();
    if config.format.csv() {
        out.add("stats.csv", output::stats_csv(&cells));
        out.add("slopes.csv", output::slopes_csv(&slopes));
    }
    if config.format.json() {
        out.add("stats.json", json(&cells));
        out.add("slopes.json", json(&slopes));
    }
    if config.raw {
        let raw: Vec<_> = runs.iter().flat_map(|s| s.raw.iter().cloned()).collect();
        out.add("raw.jsonl", output::raw_jsonl(&raw));
    }
}

fn dump_model(config: &RunConfig, spec: &ModeSpec, hash: &str, opts: &RunOptions, out: &mut Outputs) -> Result<(), CliError> {
    let ec = ensemble_config(config, spec.clone(), opts);
    let model = realization_model(&ec, 0)?;
    let dump = ModelDump {
        seed_path: SeedPath::new(config.seed).child(0),
        config_sha256: hash,
        model: &model,
    };
    out.add("model.json", serde_json::to_vec(&dump).expect("model serializes"));
    Ok(())
}

fn modes_outputs(config: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let fiber = config.fiber_spec();
    let structure = mode_group_structure(&fiber).map_err(|e| CliError::Config(format!("fiber: {e}")))?;
    let weights = match config.fiber_profile()? {
        Some(p) => p,
        None => offset_launch_weights(&fiber, 5.2, 15.0)?,
    };
    if config.format.csv() {
        out.add("modes.csv", output::modes_csv(&structure, &weights));
        out.add("mode_groups.csv", output::mode_groups_csv(&structure));
    }
    if config.format.json() {
        #[derive(Serialize)]
        struct ModesJson<'a> {
            structure: &'a fslm::ModeGroupStructure,
            excitation: &'a fslm::ExcitationProfile,
        }
        out.add("modes.json", json(&ModesJson { structure: &structure, excitation: &weights }));
    }
    Ok(())
}

pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let hash = config_hash(config);
    let dir = opts.output_dir.clone().unwrap_or_else(|| config.output_dir.clone());
    let mut out = Outputs { files: Vec::new() };

    match config.command {
        Command::Modes => modes_outputs(config, &mut out)?,
        Command::Simulate | Command::Sweep => {
            let specs = config.mode_specs()?;
            let runs = run_specs(config, specs.clone(), false, opts)?;
            ensemble_outputs(config, &runs.iter().collect::<Vec<_>>(), &mut out);
            if config.command == Command::Sweep {
                let max_k = config.paddles.iter().copied().max().unwrap_or(0);
                let counts: Vec<usize> = (0..=max_k).collect();
                out.add("lcslm.csv", output::lcslm_csv(&lcslm_comparator(&counts)));
            }
            if config.dump_model {
                dump_model(config, &specs[0], &hash, opts, &mut out)?;
            }
        }
        Command::Ablate => {
            let specs = config.mode_specs()?;
            let full = run_specs(config, specs.clone(), false, opts)?;
            let ablated = run_specs(config, specs.clone(), true, opts)?;
            let all: Vec<&EnsembleStats> = full.iter().chain(&ablated).collect();
            ensemble_outputs(config, &all, &mut out);
            let (f, a): (Vec<_>, Vec<_>) = (
                full.iter().flat_map(|s| s.cells.iter().cloned()).collect(),
                ablated.iter().flat_map(|s| s.cells.iter().cloned()).collect(),
            );
            if config.format.csv() {
                out.add("ablation.csv", output::ablation_csv(&f, &a));
            }
            if config.format.json() {
                #[derive(Serialize)]
                struct Paired<'a> {
                    full: &'a [fslm::ensemble::CellStats],
                    ablated: &'a [fslm::ensemble::CellStats],
                }
                out.add("ablation.json", json(&Paired { full: &f, ablated: &a }));
            }
            if config.dump_model {
                dump_model(config, &specs[0], &hash, opts, &mut out)?;
            }
        }
    }

    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display())))?;
    let mut names: Vec<String> = out.files.iter().map(|(n, _)| n.clone()).collect();
    for (name, contents) in &out.files {
        output::write_atomic(&dir, name, contents)
            .map_err(|e| CliError::Runtime(format!("writing {name}: {e}")))?;
    }
    names.sort();
    let manifest = Manifest {
        tool: "fslm",
        version: env!("CARGO_PKG_VERSION"),
        command: config.command,
        config_sha256: &hash,
        seed: config.seed,
        files: &names,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    output::write_atomic(&dir, "manifest.json", &json(&manifest))
        .map_err(|e| CliError::Runtime(format!("writing manifest.json: {e}")))?;
    log(opts, format!("wrote {} files to {}", names.len() + 1, dir.display()));
    Ok(RunSummary {
        output_dir: dir,
        files: names,
        config_sha256: hash,
    })
}
