//! Graded-index fiber mode groups and offset-launch excitation.
//!
//! Modes are scalar Hermite-Gaussian functions `H_m(x/s) H_n(y/s) exp(-r²/2s²)`
//! grouped by `p = m + n + 1`; all modes of a group share one propagation
//! constant. Lengths are in micrometres, propagation constants in rad/m.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of a parabolic-profile multimode fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    /// Core radius `a` in µm.
    pub core_radius: f64,
    pub numerical_aperture: f64,
    /// Core index `n₁` on axis.
    pub core_index: f64,
    /// Vacuum wavelength in µm.
    pub wavelength: f64,
}

impl Default for FiberSpec {
    /// 62.5 µm core OM1-style fiber at 1550 nm.
    fn default() -> Self {
        Self {
            core_radius: 31.25,
            numerical_aperture: 0.275,
            core_index: 1.49,
            wavelength: 1.55,
        }
    }
}

impl FiberSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.core_radius,
            self.numerical_aperture,
            self.core_index,
            self.wavelength,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidFiber("non-finite parameter".into()));
        }
        if self.core_radius <= 0.0 {
            return Err(Error::InvalidFiber("core_radius must be > 0".into()));
        }
        if self.wavelength <= 0.0 {
            return Err(Error::InvalidFiber("wavelength must be > 0".into()));
        }
        if !(self.numerical_aperture > 0.0 && self.numerical_aperture < self.core_index) {
            return Err(Error::InvalidFiber(
                "numerical aperture must satisfy 0 < NA < n1".into(),
            ));
        }
        let two_delta = 2.0 * self.relative_index_difference();
        if !(two_delta > 0.0 && two_delta < 1.0) {
            return Err(Error::InvalidFiber(format!("2Δ = {two_delta} outside (0, 1)")));
        }
        Ok(())
    }

    /// Vacuum wavenumber `k₀ = 2π/λ` in rad/µm.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// `Δ = NA² / (2 n₁²)`.
    pub fn relative_index_difference(&self) -> f64 {
        self.numerical_aperture.powi(2) / (2.0 * self.core_index.powi(2))
    }

    /// Cladding index `n₂ = n₁ √(1 − 2Δ)`.
    pub fn cladding_index(&self) -> f64 {
        self.core_index * (1.0 - 2.0 * self.relative_index_difference()).sqrt()
    }

    /// `V = k₀ a NA`.
    pub fn normalized_frequency(&self) -> f64 {
        self.wavenumber() * self.core_radius * self.numerical_aperture
    }

    /// Hermite-Gaussian width `s = (a² / (2Δ n₁² k₀²))^{1/4}` in µm.
    pub fn mode_scale(&self) -> f64 {
        let delta = self.relative_index_difference();
        let k0 = self.wavenumber();
        (self.core_radius.powi(2) / (2.0 * delta * self.core_index.powi(2) * k0 * k0)).powf(0.25)
    }

    /// Number of guided groups, `floor(V/2)`.
    pub fn guided_groups(&self) -> usize {
        (self.normalized_frequency() / 2.0).floor() as usize
    }

    /// Propagation constant of group `p` (1-based) in rad/m.
    fn group_beta(&self, p: usize) -> Option<f64> {
        let arg = 1.0
            - 4.0 * self.relative_index_difference() / self.normalized_frequency() * p as f64;
        (arg > 0.0).then(|| self.core_index * self.wavenumber() * arg.sqrt() * 1e6)
    }
}

/// Mode groups derived from a [`FiberSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeGroupStructure {
    pub normalized_frequency: f64,
    pub group_count: usize,
    /// `modes_per_group[p - 1] = p`.
    pub modes_per_group: Vec<usize>,
    /// rad/m, one per group, strictly decreasing.
    pub propagation_constants: Vec<f64>,
    /// µm.
    pub mode_scale: f64,
}

impl ModeGroupStructure {
    /// Total spatial modes `N`.
    pub fn mode_count(&self) -> usize {
        self.modes_per_group.iter().sum()
    }
}

pub fn mode_group_structure(fiber: &FiberSpec) -> Result<ModeGroupStructure> {
    fiber.validate()?;
    let v = fiber.normalized_frequency();
    let mut count = fiber.guided_groups();
    // floor(V/2) keeps 4Δp/V ≤ 2Δ < 1, so this only trims in degenerate cases.
    while count > 0 && fiber.group_beta(count).is_none() {
        count -= 1;
    }
    if count == 0 {
        return Err(Error::InvalidFiber(format!(
            "V = {v} supports no complete mode group"
        )));
    }
    let propagation_constants = (1..=count)
        .map(|p| fiber.group_beta(p).expect("guided group"))
        .collect();
    Ok(ModeGroupStructure {
        normalized_frequency: v,
        group_count: count,
        modes_per_group: (1..=count).collect(),
        propagation_constants,
        mode_scale: fiber.mode_scale(),
    })
}

/// `β_mn` in rad/m.
pub fn propagation_constant(fiber: &FiberSpec, m: usize, n: usize) -> Result<f64> {
    fiber.validate()?;
    let guided = fiber.guided_groups();
    let group = m + n + 1;
    match fiber.group_beta(group) {
        Some(beta) if group <= guided => Ok(beta),
        _ => Err(Error::Unguided {
            m,
            n,
            group,
            guided,
        }),
    }
}

/// Unit-norm 1-D Hermite-Gaussian function `c_m H_m(x/s) exp(-x²/2s²)`.
pub fn hermite_gaussian_1d(order: usize, scale: f64, x: f64) -> f64 {
    // Recurrence on normalized functions avoids factorial overflow:
    // ψ_{k+1} = √(2/(k+1)) u ψ_k − √(k/(k+1)) ψ_{k−1}.
    let u = x / scale;
    let mut prev = 0.0;
    let mut cur = (PI.sqrt() * scale).powf(-0.5) * (-0.5 * u * u).exp();
    for k in 0..order {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * u * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Field of HG mode `(m, n)` at z = 0, normalized to unit L² norm.
pub fn mode_field(fiber: &FiberSpec, m: usize, n: usize, x: f64, y: f64) -> Result<f64> {
    propagation_constant(fiber, m, n)?;
    let s = fiber.mode_scale();
    Ok(hermite_gaussian_1d(m, s, x) * hermite_gaussian_1d(n, s, y))
}

/// How per-group power fractions were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationSource {
    AnalyticOverlap,
    UserFile,
    UniformFirstGroups,
}

/// Fraction of launched power in each mode group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationProfile {
    pub per_group_power: Vec<f64>,
    pub source: ExcitationSource,
}

impl ExcitationProfile {
    /// User-supplied weights; must be non-negative with sum ≤ 1 (within rounding).
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let profile = Self {
            per_group_power: weights,
            source: ExcitationSource::UserFile,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Equal power in each of the first `groups` groups' polarization channels,
    /// i.e. group `p` receives `p / N` with `N = G(G+1)/2`.
    pub fn uniform_first_groups(groups: usize) -> Self {
        let total = (groups * (groups + 1) / 2) as f64;
        Self {
            per_group_power: (1..=groups).map(|p| p as f64 / total).collect(),
            source: ExcitationSource::UniformFirstGroups,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self
            .per_group_power
            .iter()
            .find(|w| !w.is_finite() || **w < 0.0 || **w > 1.0)
        {
            return Err(Error::InvalidExcitation(format!(
                "group weight {w} outside [0, 1]"
            )));
        }
        let sum: f64 = self.per_group_power.iter().sum();
        if sum > 1.0 + 1e-9 {
            return Err(Error::InvalidExcitation(format!(
                "group weights sum to {sum} > 1"
            )));
        }
        Ok(())
    }

    /// Zero every group outside `first..=last` (1-based).
    pub fn restricted(&self, first: usize, last: usize) -> Self {
        let per_group_power = self
            .per_group_power
            .iter()
            .enumerate()
            .map(|(i, &w)| if (first..=last).contains(&(i + 1)) { w } else { 0.0 })
            .collect();
        Self {
            per_group_power,
            source: self.source,
        }
    }

    pub fn total(&self) -> f64 {
        self.per_group_power.iter().sum()
    }
}

/// Overlaps `⟨ψ_k | g_d⟩` for k = 0..=max_order, where `ψ_k` are unit-norm
/// 1-D HG functions of width `scale` and `g_d` is the unit-norm Gaussian
/// `exp(-(x-d)²/w²)` with 1/e² intensity radius `w`.
///
/// Uses the Hermite generating function: the Gaussian integral of
/// `exp(2ut − t²)` against the launch field is `exp(α t − γ t²)` up to a
/// constant, giving a three-term recurrence in the order.
pub fn gaussian_hg_overlaps(scale: f64, radius: f64, offset: f64, max_order: usize) -> Vec<f64> {
    let s = scale;
    let w2 = radius * radius;
    let a = 0.5 + s * s / w2;
    let b = 2.0 * s * offset / w2;
    let alpha = b / a;
    let gamma = 1.0 - 1.0 / a;
    let prefactor = (PI.sqrt() * s).powf(-0.5)
        * (2.0 / (PI * w2)).powf(0.25)
        * s
        * (PI / a).sqrt()
        * (b * b / (4.0 * a) - offset * offset / w2).exp();
    let mut out = Vec::with_capacity(max_order + 1);
    let mut prev = 0.0;
    let mut cur = 1.0;
    out.push(prefactor * cur);
    for k in 0..max_order {
        let kf = k as f64;
        let next = alpha / (2.0 * (kf + 1.0)).sqrt() * cur - gamma * (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out.push(prefactor * cur);
    }
    out
}

/// Per-group power coupled from a single-mode fiber displaced by `offset`
/// along x. `smf_mode_field_radius` is the 1/e² intensity radius of the
/// launch Gaussian. Power outside the guided groups is left unassigned.
pub fn offset_launch_weights(
    fiber: &FiberSpec,
    smf_mode_field_radius: f64,
    offset: f64,
) -> Result<ExcitationProfile> {
    if !(smf_mode_field_radius > 0.0) || !smf_mode_field_radius.is_finite() {
        return Err(Error::InvalidExcitation(
            "SMF mode-field radius must be positive".into(),
        ));
    }
    if !(offset >= 0.0) || !offset.is_finite() {
        return Err(Error::InvalidExcitation("offset must be ≥ 0".into()));
    }
    let structure = mode_group_structure(fiber)?;
    let max_order = structure.group_count - 1;
    let along = gaussian_hg_overlaps(structure.mode_scale, smf_mode_field_radius, offset, max_order);
    let across = gaussian_hg_overlaps(structure.mode_scale, smf_mode_field_radius, 0.0, max_order);
    let per_group_power = (1..=structure.group_count)
        .map(|p| {
            (0..p)
                .map(|m| (along[m] * across[p - 1 - m]).powi(2))
                .sum::<f64>()
                .min(1.0)
        })
        .collect();
    Ok(ExcitationProfile {
        per_group_power,
        source: ExcitationSource::AnalyticOverlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_fiber() -> FiberSpec {
        FiberSpec::default()
    }

    #[test]
    fn structure_of_reference_fiber() {
        let s = mode_group_structure(&reference_fiber()).unwrap();
        assert_relative_eq!(s.normalized_frequency, 34.836_208_860_370_69, epsilon = 1e-10);
        assert_eq!(s.group_count, 17);
        assert_eq!(s.modes_per_group[0], 1);
        assert_eq!(s.mode_count(), 17 * 18 / 2);
        assert_eq!(s.modes_per_group[2..8].iter().sum::<usize>(), 33);
        assert_relative_eq!(s.mode_scale, 5.294_617_354_536_48, epsilon = 1e-10);
        for w in s.propagation_constants.windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn beta_values() {
        let f = reference_fiber();
        let b00 = propagation_constant(&f, 0, 0).unwrap();
        assert_relative_eq!(b00, 6_034_056.300_134_78, max_relative = 1e-12);
        assert_eq!(
            propagation_constant(&f, 1, 0).unwrap(),
            propagation_constant(&f, 0, 1).unwrap()
        );
        let top = propagation_constant(&f, 16, 0).unwrap();
        let n2k0 = f.cladding_index() * f.wavenumber() * 1e6;
        assert!(top > n2k0);
        assert!((top - n2k0) / n2k0 < 1e-3);
        assert!(matches!(
            propagation_constant(&f, 17, 0),
            Err(Error::Unguided { group: 18, .. })
        ));
    }

    #[test]
    fn invalid_fibers() {
        let mut f = reference_fiber();
        f.numerical_aperture = 1.6;
        assert!(f.validate().is_err());
        f = reference_fiber();
        f.core_radius = 0.0;
        assert!(mode_group_structure(&f).is_err());
        f = reference_fiber();
        f.core_radius = 0.5;
        assert!(matches!(mode_group_structure(&f), Err(Error::InvalidFiber(_))));
    }

    #[test]
    fn fundamental_mode_peaks_on_axis() {
        let f = reference_fiber();
        let centre = mode_field(&f, 0, 0, 0.0, 0.0).unwrap();
        assert!(centre > mode_field(&f, 0, 0, 0.5, 0.0).unwrap());
        assert!(centre > mode_field(&f, 0, 0, 0.0, -0.3).unwrap());
    }

    #[test]
    fn matched_launch_is_single_group() {
        let f = reference_fiber();
        let w0 = std::f64::consts::SQRT_2 * f.mode_scale();
        let p = offset_launch_weights(&f, w0, 0.0).unwrap();
        assert_relative_eq!(p.per_group_power[0], 1.0, epsilon = 1e-12);
        assert!(p.per_group_power[1..].iter().all(|&w| w < 1e-20));
        for factor in [0.9, 1.1] {
            let near = offset_launch_weights(&f, factor * w0, 0.0).unwrap();
            assert!(near.per_group_power[0] > 0.9);
            // zero offset excites only even-parity groups
            assert!(near.per_group_power[1] < 1e-20);
        }
    }

    #[test]
    fn weights_bounded() {
        let f = reference_fiber();
        for offset in [0.0, 3.0, 10.0, 15.0, 25.0, 40.0] {
            let p = offset_launch_weights(&f, 5.2, offset).unwrap();
            assert!(p.total() <= 1.0 + 1e-12);
            p.validate().unwrap();
        }
    }

    #[test]
    fn restrict_and_uniform() {
        let u = ExcitationProfile::uniform_first_groups(3);
        assert_eq!(u.per_group_power, vec![1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]);
        let r = u.restricted(2, 2);
        assert_eq!(r.per_group_power, vec![0.0, 2.0 / 6.0, 0.0]);
        assert!(ExcitationProfile::from_weights(vec![0.7, 0.5]).is_err());
        assert!(ExcitationProfile::from_weights(vec![-0.1]).is_err());
    }
}
