//! One random realization of the paddle-fiber transmission model.
//!
//! `E_out = U_out · T_K(θ_K) ⋯ T_1(θ_1) · U_in · E_in` with
//! `T_k(θ) = C2_k · (I_N ⊗ J(θ)) · C1_k`. Section 1 sits nearest the input.

use std::f64::consts::TAU;

use nalgebra::Vector2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::ExcitationProfile;
use crate::randmat::{
    apply_jones, block_diag_coupling, haar_isometry, haar_unitary, jones_matrix,
    right_apply_jones, BlockDiagonal, ComplexMatrix, ComplexVector, Jones, JonesParams,
};

/// Single-mode input polarization `(E_H, E_V)`.
pub type InputField = Vector2<Complex64>;

/// How group powers are spread over the channels of `U_in`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputWeighting {
    /// `U_in = D^{1/2} Q` with each channel weighted by (group power)/(2 n_p);
    /// group powers then match the profile in expectation.
    #[default]
    PerChannel,
    /// Rescale each group's slice of `Q E_in` so launched group powers match
    /// the profile exactly.
    PerGroupExact,
}

/// One fiber section around a paddle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub coupling_in: BlockDiagonal,
    pub coupling_out: BlockDiagonal,
}

/// Paddle rotation angles, one per section, wrapped into `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddleAngles(Vec<f64>);

impl PaddleAngles {
    pub fn new(angles: Vec<f64>) -> Self {
        Self(angles.into_iter().map(|a| a.rem_euclid(TAU)).collect())
    }

    pub fn zeros(count: usize) -> Self {
        Self(vec![0.0; count])
    }

    pub fn random<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Self {
        Self::new((0..count).map(|_| rng.random::<f64>() * TAU).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn set(&mut self, k: usize, angle: f64) {
        self.0[k] = angle.rem_euclid(TAU);
    }
}

/// Output field ordered `(u₁ᴴ, u₁ⱽ, u₂ᴴ, u₂ⱽ, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleField {
    pub components: ComplexVector,
}

impl SpeckleField {
    pub fn speckle_count(&self) -> usize {
        self.components.len() / 2
    }

    pub fn total_power(&self) -> f64 {
        self.components.norm_squared()
    }

    pub fn intensities(&self) -> Vec<f64> {
        (0..self.speckle_count())
            .map(|i| self.components[2 * i].norm_sqr() + self.components[2 * i + 1].norm_sqr())
            .collect()
    }
}

/// `I_m = |u_mᴴ|² + |u_mⱽ|²` for 1-based speckle `m`.
pub fn speckle_intensity(field: &SpeckleField, m: usize) -> Result<f64> {
    let max = field.speckle_count();
    if m == 0 || m > max {
        return Err(Error::IndexOutOfRange { index: m, max });
    }
    Ok(field.components[2 * m - 2].norm_sqr() + field.components[2 * m - 1].norm_sqr())
}

/// Immutable model realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FslmModel {
    /// Spatial modes per group, `n_p`.
    pub group_sizes: Vec<usize>,
    pub sections: Vec<Section>,
    /// `2N × 2`.
    pub input_coupling: ComplexMatrix,
    /// `2N × 2N`.
    pub output_basis: ComplexMatrix,
    pub input_field: InputField,
    pub delta: f64,
    /// Cached `U_in · E_in`, unit norm.
    launched: ComplexVector,
}

impl FslmModel {
    /// Spatial mode count `N`.
    pub fn mode_count(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn channel_count(&self) -> usize {
        2 * self.mode_count()
    }

    pub fn paddle_count(&self) -> usize {
        self.sections.len()
    }

    pub fn launched_field(&self) -> &ComplexVector {
        &self.launched
    }

    pub fn jones(&self, theta: f64) -> Jones {
        jones_matrix(JonesParams::new(theta, self.delta))
    }

    /// The first `paddles` sections of this model, everything else shared.
    pub fn truncated(&self, paddles: usize) -> Self {
        assert!(paddles <= self.paddle_count());
        Self {
            sections: self.sections[..paddles].to_vec(),
            ..self.clone()
        }
    }

    /// Same model with both coupling matrices of every section replaced by
    /// identity, keeping `U_in`, `U_out` and the paddle Jones matrices.
    pub fn without_spatial_coupling(&self) -> Self {
        let sizes: Vec<usize> = self.group_sizes.iter().map(|n| 2 * n).collect();
        let sections = self
            .sections
            .iter()
            .map(|_| Section {
                coupling_in: BlockDiagonal::identity(&sizes),
                coupling_out: BlockDiagonal::identity(&sizes),
            })
            .collect();
        Self {
            sections,
            ..self.clone()
        }
    }

    /// Test hook: replace `U_out` by identity so outputs read in the mode basis.
    pub fn with_identity_output(&self) -> Self {
        let n = self.channel_count();
        Self {
            output_basis: ComplexMatrix::identity(n, n),
            ..self.clone()
        }
    }

    fn check_angles(&self, angles: &PaddleAngles) -> Result<()> {
        if angles.len() != self.paddle_count() {
            return Err(Error::DimensionMismatch {
                expected: self.paddle_count(),
                got: angles.len(),
            });
        }
        Ok(())
    }

    fn check_target(&self, m: usize) -> Result<()> {
        let max = self.mode_count();
        if m == 0 || m > max {
            return Err(Error::IndexOutOfRange { index: m, max });
        }
        Ok(())
    }

    /// `T_k(θ) · v` for 0-based section `k`.
    pub fn apply_section(&self, k: usize, theta: f64, v: &ComplexVector) -> ComplexVector {
        let s = &self.sections[k];
        s.coupling_out
            .apply(&apply_jones(&self.jones(theta), &s.coupling_in.apply(v)))
    }

    /// Field just before the output basis change.
    pub fn fiber_output(&self, angles: &PaddleAngles) -> Result<ComplexVector> {
        self.check_angles(angles)?;
        let mut v = self.launched.clone();
        for (k, &theta) in angles.as_slice().iter().enumerate() {
            v = self.apply_section(k, theta, &v);
        }
        Ok(v)
    }

    pub fn propagate(&self, angles: &PaddleAngles) -> Result<SpeckleField> {
        let v = self.fiber_output(angles)?;
        Ok(SpeckleField {
            components: &self.output_basis * v,
        })
    }

    /// Rows `(2m−1, 2m)` of `U_out` as a `2 × 2N` matrix.
    pub fn target_rows(&self, m: usize) -> Result<ComplexMatrix> {
        self.check_target(m)?;
        Ok(self.output_basis.rows(2 * m - 2, 2).into_owned())
    }

    /// Target-speckle intensity without forming the full output field.
    pub fn target_intensity(&self, angles: &PaddleAngles, m: usize) -> Result<f64> {
        let rows = self.target_rows(m)?;
        let v = self.fiber_output(angles)?;
        Ok((rows * v).norm_squared())
    }

    /// Target-speckle intensity for many angle vectors at once.
    pub fn target_intensities(&self, batch: &[PaddleAngles], m: usize) -> Result<Vec<f64>> {
        let rows = self.target_rows(m)?;
        for angles in batch {
            self.check_angles(angles)?;
        }
        let mut x = ComplexMatrix::from_fn(self.channel_count(), batch.len(), |i, _| self.launched[i]);
        for (k, section) in self.sections.iter().enumerate() {
            x = section.coupling_in.apply_columns(&x);
            for (col, angles) in batch.iter().enumerate() {
                let j = self.jones(angles.as_slice()[k]);
                let mut c = x.column_mut(col);
                for i in (0..c.len()).step_by(2) {
                    let (h, v) = (c[i], c[i + 1]);
                    c[i] = j[(0, 0)] * h + j[(0, 1)] * v;
                    c[i + 1] = j[(1, 0)] * h + j[(1, 1)] * v;
                }
            }
            x = section.coupling_out.apply_columns(&x);
        }
        let out = rows * x;
        Ok(out.column_iter().map(|c| c.norm_squared()).collect())
    }

    /// Split the cascade around 1-based section `k`:
    /// `(u_mᴴ, u_mⱽ) = W_k · (I_N ⊗ J(θ_k)) · V_k` for every `θ_k`.
    pub fn factorize_at(
        &self,
        angles: &PaddleAngles,
        k: usize,
        m: usize,
    ) -> Result<(ComplexVector, ComplexMatrix)> {
        self.check_angles(angles)?;
        let count = self.paddle_count();
        if k == 0 || k > count {
            return Err(Error::IndexOutOfRange { index: k, max: count });
        }
        let theta = angles.as_slice();
        let mut v = self.launched.clone();
        for (i, &t) in theta.iter().enumerate().take(k - 1) {
            v = self.apply_section(i, t, &v);
        }
        let v = self.sections[k - 1].coupling_in.apply(&v);

        let mut w = self.target_rows(m)?;
        for i in (k..count).rev() {
            w = self.left_apply_section(i, theta[i], &w);
        }
        let w = self.sections[k - 1].coupling_out.right_apply(&w);
        Ok((v, w))
    }

    /// `w · T_k(θ)` for 0-based section `k`.
    pub fn left_apply_section(&self, k: usize, theta: f64, w: &ComplexMatrix) -> ComplexMatrix {
        let s = &self.sections[k];
        s.coupling_in
            .right_apply(&right_apply_jones(&s.coupling_out.right_apply(w), &self.jones(theta)))
    }
}

/// Inputs to [`build_model`] besides the random stream.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub group_sizes: Vec<usize>,
    pub paddles: usize,
    pub excitation: ExcitationProfile,
    pub input_field: InputField,
    pub delta: f64,
    pub weighting: InputWeighting,
}

impl ModelSpec {
    /// Horizontal input, δ = π/2, per-channel weighting.
    pub fn new(group_sizes: Vec<usize>, paddles: usize, excitation: ExcitationProfile) -> Self {
        Self {
            group_sizes,
            paddles,
            excitation,
            input_field: Vector2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            delta: std::f64::consts::FRAC_PI_2,
            weighting: InputWeighting::PerChannel,
        }
    }
}

/// Draw one realization.
///
/// Draw order from `rng`: `U_out`, the `U_in` isometry, then `C1_k`, `C2_k`
/// for k = 1..K. A model with fewer paddles built from the same stream is
/// therefore a prefix of one with more.
pub fn build_model<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<FslmModel> {
    let sizes = &spec.group_sizes;
    if sizes.is_empty() || sizes.iter().any(|&n| n == 0) {
        return Err(Error::InvalidConfig("group sizes must be non-empty and ≥ 1".into()));
    }
    let weights = &spec.excitation.per_group_power;
    if weights.len() != sizes.len() {
        return Err(Error::DimensionMismatch {
            expected: sizes.len(),
            got: weights.len(),
        });
    }
    spec.excitation.validate()?;
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidExcitation("all group weights are zero".into()));
    }
    if spec.input_field.norm() == 0.0 || !spec.input_field.iter().all(|z| z.is_finite()) {
        return Err(Error::InvalidConfig("input field must be finite and nonzero".into()));
    }
    if !spec.delta.is_finite() {
        return Err(Error::InvalidConfig("delta must be finite".into()));
    }

    let channels = 2 * sizes.iter().sum::<usize>();
    let output_basis = haar_unitary(channels, rng);
    let q = haar_isometry(channels, 2, rng);
    let sections = (0..spec.paddles)
        .map(|_| Section {
            coupling_in: block_diag_coupling(sizes, rng),
            coupling_out: block_diag_coupling(sizes, rng),
        })
        .collect();

    let e_in = spec.input_field;
    let qe = &q * e_in;
    let mut scale = Vec::with_capacity(channels);
    let mut offset = 0;
    for (&n, &w) in sizes.iter().zip(weights) {
        let c = match spec.weighting {
            InputWeighting::PerChannel => (w / (2 * n) as f64).sqrt(),
            InputWeighting::PerGroupExact => {
                let norm = qe.rows(offset, 2 * n).norm();
                if norm > 0.0 {
                    w.sqrt() / norm
                } else {
                    0.0
                }
            }
        };
        scale.extend(std::iter::repeat_n(c, 2 * n));
        offset += 2 * n;
    }
    let mut input_coupling = q;
    for (i, &c) in scale.iter().enumerate() {
        for j in 0..2 {
            input_coupling[(i, j)] *= c;
        }
    }
    let launched_norm = (&input_coupling * e_in).norm();
    if !(launched_norm > 0.0) {
        return Err(Error::InvalidExcitation("launched field vanishes".into()));
    }
    input_coupling /= Complex64::new(launched_norm, 0.0);
    let launched = &input_coupling * e_in;

    Ok(FslmModel {
        group_sizes: sizes.clone(),
        sections,
        input_coupling,
        output_basis,
        input_field: e_in,
        delta: spec.delta,
        launched,
    })
}
