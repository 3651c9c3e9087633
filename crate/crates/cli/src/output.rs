//! Table rendering and atomic file output.
//!
//! Floats use Rust's shortest round-trip formatting, so re-parsing a value
//! yields the identical `f64`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use fslm::ensemble::{CellStats, RealizationRecord, SlopeFit};
use fslm::fiber::{ExcitationProfile, ModeGroupStructure};

pub const STATS_HEADER: &str = "n_modes,k_paddles,mean_enh,std_enh,stderr,realizations,ablated";
pub const SLOPES_HEADER: &str = "n_modes,k_min,k_max,slope";
pub const MODES_HEADER: &str = "group,modes,beta_rad_per_m,weight";
pub const MODE_GROUPS_HEADER: &str = "group,p,modes,beta_rad_per_m";

pub fn stats_csv(cells: &[CellStats]) -> String {
    let mut out = format!("{STATS_HEADER}\n");
    for c in cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.n_modes, c.k_paddles, c.mean_enh, c.std_enh, c.stderr, c.realizations, c.ablated
        )
        .unwrap();
    }
    out
}

pub fn slopes_csv(fits: &[SlopeFit]) -> String {
    let mut out = format!("{SLOPES_HEADER}\n");
    for f in fits {
        writeln!(out, "{},{},{},{}", f.n_modes, f.k_min, f.k_max, f.slope).unwrap();
    }
    out
}

/// Full and ablated cells side by side, matched on (N, K).
pub fn ablation_csv(full: &[CellStats], ablated: &[CellStats]) -> String {
    let mut out =
        String::from("n_modes,k_paddles,mean_full,std_full,mean_ablated,std_ablated,realizations\n");
    for (f, a) in full.iter().zip(ablated) {
        debug_assert_eq!((f.n_modes, f.k_paddles), (a.n_modes, a.k_paddles));
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f.n_modes, f.k_paddles, f.mean_enh, f.std_enh, a.mean_enh, a.std_enh, f.realizations
        )
        .unwrap();
    }
    out
}

pub fn lcslm_csv(line: &[(usize, f64)]) -> String {
    let mut out = String::from("pixels,enhancement\n");
    for (c, e) in line {
        writeln!(out, "{c},{e}").unwrap();
    }
    out
}

pub fn modes_csv(structure: &ModeGroupStructure, weights: &ExcitationProfile) -> String {
    let mut out = format!("{MODES_HEADER}\n");
    for (i, (&n, &beta)) in structure
        .modes_per_group
        .iter()
        .zip(&structure.propagation_constants)
        .enumerate()
    {
        let w = weights.per_group_power.get(i).copied().unwrap_or(0.0);
        writeln!(out, "{},{n},{beta},{w}", i + 1).unwrap();
    }
    out
}

pub fn mode_groups_csv(structure: &ModeGroupStructure) -> String {
    let mut out = format!("{MODE_GROUPS_HEADER}\n");
    for (i, (&n, &beta)) in structure
        .modes_per_group
        .iter()
        .zip(&structure.propagation_constants)
        .enumerate()
    {
        writeln!(out, "{},{},{n},{beta}", i + 1, i + 1).unwrap();
    }
    out
}

pub fn raw_jsonl(records: &[RealizationRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> std::io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}
