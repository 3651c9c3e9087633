//! Paddle-angle optimization.
//!
//! With every other angle held fixed, the target-speckle intensity is a
//! degree-4 trigonometric polynomial in one paddle angle. Each coordinate step
//! builds that polynomial from the cascade split at the paddle and maximizes
//! it exactly on `[0, π)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FslmModel, PaddleAngles};
use crate::randmat::{apply_jones, ComplexMatrix, ComplexVector};

/// `I(θ) = Σ_j |a_j cos²θ + b_j sin²θ + c_j cosθ sinθ|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidCoeffs {
    pub a: [Complex64; 2],
    pub b: [Complex64; 2],
    pub c: [Complex64; 2],
    pub delta: f64,
}

impl SinusoidCoeffs {
    /// Per-polarization amplitude as a first-order Fourier series in `2θ`:
    /// `(a+b)/2 + (a−b)/2 · cos 2θ + c/2 · sin 2θ`.
    fn amplitude(&self, j: usize, cos2: f64, sin2: f64) -> Complex64 {
        let (a, b, c) = (self.a[j], self.b[j], self.c[j]);
        (a + b) * 0.5 + (a - b) * (0.5 * cos2) + c * (0.5 * sin2)
    }

    pub fn intensity(&self, theta: f64) -> f64 {
        let (sin2, cos2) = (2.0 * theta).sin_cos();
        self.amplitude(0, cos2, sin2).norm_sqr() + self.amplitude(1, cos2, sin2).norm_sqr()
    }

    /// `dI/dθ`.
    pub fn slope(&self, theta: f64) -> f64 {
        let (sin2, cos2) = (2.0 * theta).sin_cos();
        (0..2)
            .map(|j| {
                let f = self.amplitude(j, cos2, sin2);
                let df = -(self.a[j] - self.b[j]) * sin2 + self.c[j] * cos2;
                2.0 * (f.conj() * df).re
            })
            .sum()
    }
}

/// Coefficients of the single-angle objective for the split
/// `(u_mᴴ, u_mⱽ) = W · (I_N ⊗ J(θ)) · V`.
pub fn sinusoid_coeffs(v: &ComplexVector, w: &ComplexMatrix, delta: f64) -> Result<SinusoidCoeffs> {
    if w.nrows() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: w.nrows(),
        });
    }
    if w.ncols() != v.len() || v.len() % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: w.ncols(),
            got: v.len(),
        });
    }
    let e = Complex64::from_polar(1.0, delta);
    let one = Complex64::new(1.0, 0.0);
    let mut a = [Complex64::new(0.0, 0.0); 2];
    let mut b = a;
    let mut c = a;
    for j in 0..2 {
        let (mut hh, mut vv, mut cross) = (a[j], a[j], a[j]);
        for i in (0..v.len()).step_by(2) {
            hh += w[(j, i)] * v[i];
            vv += w[(j, i + 1)] * v[i + 1];
            cross += w[(j, i)] * v[i + 1] + w[(j, i + 1)] * v[i];
        }
        a[j] = hh + e * vv;
        b[j] = e * hh + vv;
        c[j] = (one - e) * cross;
    }
    Ok(SinusoidCoeffs { a, b, c, delta })
}

/// Knobs for the single-angle and coordinate-descent searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Stop once a full cycle gains less than this fraction of the mean
    /// speckle intensity `1/N`.
    pub termination_fraction: f64,
    pub max_cycles: usize,
    pub grid_points: usize,
    /// Bracket width, in radians, at which local refinement stops.
    pub refine_tolerance: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            termination_fraction: 0.01,
            max_cycles: 50,
            grid_points: 720,
            refine_tolerance: 1e-10,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.termination_fraction > 0.0)
            || self.max_cycles == 0
            || self.grid_points < 3
            || !(self.refine_tolerance > 0.0)
        {
            return Err(Error::InvalidConfig(
                "optimizer options must be positive (grid_points ≥ 3)".into(),
            ));
        }
        Ok(())
    }
}

fn refine(coeffs: &SinusoidCoeffs, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    if coeffs.slope(lo) > 0.0 && coeffs.slope(hi) < 0.0 {
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if coeffs.slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }
    // golden section
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (coeffs.intensity(x1), coeffs.intensity(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = coeffs.intensity(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = coeffs.intensity(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Global maximum of the single-angle objective over `[0, π)`: grid scan,
/// then refinement around the grid optimum and every strict local grid
/// maximum. Ties go to the smallest angle.
pub fn maximize_single_angle(coeffs: &SinusoidCoeffs, opts: &OptimizerOptions) -> (f64, f64) {
    let n = opts.grid_points.max(3);
    let step = PI / n as f64;
    let values: Vec<f64> = (0..n).map(|i| coeffs.intensity(i as f64 * step)).collect();

    let mut best_index = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best_index] {
            best_index = i;
        }
    }
    let mut candidates = vec![best_index];
    for i in 0..n {
        let (left, right) = (values[(i + n - 1) % n], values[(i + 1) % n]);
        if values[i] > left && values[i] > right && i != best_index {
            candidates.push(i);
        }
    }

    let mut best = (best_index as f64 * step, values[best_index]);
    for i in candidates {
        let centre = i as f64 * step;
        let theta = refine(coeffs, centre - step, centre + step, opts.refine_tolerance);
        let value = coeffs.intensity(theta);
        let grid_value = values[i];
        let (theta, value) = if value > grid_value {
            (theta.rem_euclid(PI), value)
        } else {
            (centre, grid_value)
        };
        if value > best.1 || (value == best.1 && theta < best.0) {
            best = (theta, value);
        }
    }
    best
}

/// Outcome of [`coordinate_descent`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub angles: PaddleAngles,
    pub objective: f64,
    /// Initial intensity followed by the intensity after every paddle update.
    pub trajectory: Vec<f64>,
    pub cycles: usize,
    pub converged: bool,
}

/// Sequential single-paddle maximization, cycling k = 1..K.
///
/// A step only moves its angle when the new intensity beats the last recorded
/// one, so the trajectory never decreases.
pub fn coordinate_descent(
    model: &FslmModel,
    target: usize,
    opts: &OptimizerOptions,
    initial: PaddleAngles,
) -> Result<OptimizationResult> {
    opts.validate()?;
    let rows = model.target_rows(target)?;
    let mut angles = initial;
    let initial_value = model.target_intensity(&angles, target)?;
    let mut trajectory = vec![initial_value];
    let paddles = model.paddle_count();
    if paddles == 0 {
        return Ok(OptimizationResult {
            angles,
            objective: initial_value,
            trajectory,
            cycles: 0,
            converged: true,
        });
    }

    let threshold = opts.termination_fraction / model.mode_count() as f64;
    let mut cycles = 0;
    let mut converged = false;
    let mut suffix = vec![ComplexMatrix::zeros(0, 0); paddles];
    while cycles < opts.max_cycles {
        let start = *trajectory.last().unwrap();

        // W_k for every k with the angles as they stand at cycle start.
        let mut s = rows.clone();
        for k in (0..paddles).rev() {
            let section = &model.sections[k];
            let w = section.coupling_out.right_apply(&s);
            s = section
                .coupling_in
                .right_apply(&crate::randmat::right_apply_jones(&w, &model.jones(angles.as_slice()[k])));
            suffix[k] = w;
        }

        let mut v = model.launched_field().clone();
        for k in 0..paddles {
            let section = &model.sections[k];
            let v_k = section.coupling_in.apply(&v);
            let coeffs = sinusoid_coeffs(&v_k, &suffix[k], model.delta)?;
            let (theta, value) = maximize_single_angle(&coeffs, opts);
            let last = *trajectory.last().unwrap();
            let current = coeffs.intensity(angles.as_slice()[k]);
            if value > last && value > current {
                angles.set(k, theta);
                trajectory.push(value);
            } else {
                trajectory.push(last);
            }
            v = section
                .coupling_out
                .apply(&apply_jones(&model.jones(angles.as_slice()[k]), &v_k));
        }
        cycles += 1;
        if *trajectory.last().unwrap() - start < threshold {
            converged = true;
            break;
        }
    }
    Ok(OptimizationResult {
        objective: *trajectory.last().unwrap(),
        angles,
        trajectory,
        cycles,
        converged,
    })
}

/// Mean target intensity over `samples` angle vectors drawn uniformly from
/// `[0, 2π)^K`.
pub fn baseline_intensity<R: Rng + ?Sized>(
    model: &FslmModel,
    target: usize,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidConfig("baseline needs at least one sample".into()));
    }
    if model.paddle_count() == 0 {
        // every sample is the same configuration
        return model.target_intensity(&PaddleAngles::zeros(0), target);
    }
    let batch: Vec<PaddleAngles> = (0..samples)
        .map(|_| PaddleAngles::random(model.paddle_count(), rng))
        .collect();
    let sum: f64 = model.target_intensities(&batch, target)?.iter().sum();
    Ok(sum / samples as f64)
}

pub fn enhancement(optimized: f64, baseline: f64) -> Result<f64> {
    if !(baseline > f64::MIN_POSITIVE) || !baseline.is_finite() {
        return Err(Error::ZeroBaseline(baseline));
    }
    Ok(optimized / baseline)
}
