//! Random and structured unitaries: Haar samples, block-diagonal intra-group
//! coupling, and paddle Jones matrices.
//!
//! Channel ordering is mode-major, polarization-minor: index `2i` is mode `i`
//! horizontal and `2i + 1` is mode `i` vertical (0-based).

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;
pub type Jones = Matrix2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn split(m: &ComplexMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

/// Largest entry of `|U†U − I|`.
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let g = u.adjoint() * u;
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Complex Ginibre matrix with `E|z|² = 1`.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // Column-major fill order, fixed so a seed reproduces the same matrix.
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Orthonormalize the columns of `g` by QR and fix each column's phase by the
/// phase of the matching diagonal entry of R, so a Ginibre input yields a
/// Haar-distributed result.
fn phase_fixed_q(g: ComplexMatrix) -> ComplexMatrix {
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `dim × dim` unitary drawn from the Haar measure.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    assert!(dim >= 1, "haar_unitary needs dim ≥ 1");
    phase_fixed_q(ginibre(dim, dim, rng))
}

/// First `cols` columns of a Haar unitary (a Haar-random isometry).
///
/// Distributed exactly as `haar_unitary(dim)` restricted to its leading
/// columns, at `O(dim · cols²)` cost.
pub fn haar_isometry<R: Rng + ?Sized>(dim: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(cols >= 1 && cols <= dim, "haar_isometry needs 1 ≤ cols ≤ dim");
    phase_fixed_q(ginibre(dim, cols, rng))
}

/// Rotation angle and retardation of one paddle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesParams {
    pub rotation: f64,
    pub retardation: f64,
}

impl JonesParams {
    pub fn new(rotation: f64, retardation: f64) -> Self {
        Self {
            rotation,
            retardation,
        }
    }
}

/// `R(θ) · diag(1, e^{iδ}) · R(−θ)` with `R(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn jones_matrix(params: JonesParams) -> Jones {
    let (s, c) = params.rotation.sin_cos();
    let c = Complex64::new(c, 0.0);
    let s = Complex64::new(s, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let e = Complex64::from_polar(1.0, params.retardation);
    let rot = Matrix2::new(c, -s, s, c);
    let ret = Matrix2::new(one, ZERO, ZERO, e);
    let rot_back = Matrix2::new(c, s, -s, c);
    rot * ret * rot_back
}

/// Block-diagonal unitary with one dense block per mode group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagonal {
    blocks: Vec<ComplexMatrix>,
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<ComplexMatrix>) -> Self {
        assert!(blocks.iter().all(|b| b.is_square()), "blocks must be square");
        Self { blocks }
    }

    /// Identity with the given block sizes.
    pub fn identity(block_sizes: &[usize]) -> Self {
        Self::new(block_sizes.iter().map(|&n| ComplexMatrix::identity(n, n)).collect())
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    /// `self · v`.
    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(v.len(), self.dim());
        let mut out = ComplexVector::zeros(v.len());
        let mut offset = 0;
        for b in &self.blocks {
            let n = b.nrows();
            let seg = b * v.rows(offset, n);
            out.rows_mut(offset, n).copy_from(&seg);
            offset += n;
        }
        out
    }

    /// `self · x` applied to every column of `x`.
    pub fn apply_columns(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.nrows(), self.dim());
        // Real arithmetic lets the products run through the blocked f64 kernel.
        let (xr, xi) = split(x);
        let mut out = ComplexMatrix::zeros(x.nrows(), x.ncols());
        let mut offset = 0;
        for b in &self.blocks {
            let n = b.nrows();
            let (br, bi) = split(b);
            let (sr, si) = (xr.rows(offset, n), xi.rows(offset, n));
            let yr = &br * &sr - &bi * &si;
            let yi = &br * &si + &bi * &sr;
            for c in 0..x.ncols() {
                for r in 0..n {
                    out[(offset + r, c)] = Complex64::new(yr[(r, c)], yi[(r, c)]);
                }
            }
            offset += n;
        }
        out
    }

    /// `m · self` for a matrix with `self.dim()` columns.
    pub fn right_apply(&self, m: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(m.ncols(), self.dim());
        let mut out = ComplexMatrix::zeros(m.nrows(), m.ncols());
        let mut offset = 0;
        for b in &self.blocks {
            let n = b.nrows();
            let seg = m.columns(offset, n) * b;
            out.columns_mut(offset, n).copy_from(&seg);
            offset += n;
        }
        out
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut out = ComplexMatrix::zeros(dim, dim);
        let mut offset = 0;
        for b in &self.blocks {
            let n = b.nrows();
            out.view_mut((offset, offset), (n, n)).copy_from(b);
            offset += n;
        }
        out
    }
}

/// Intra-group coupling: independent Haar blocks of size `2 n_p` for each
/// group size `n_p`, coupling every mode and both polarizations in a group.
pub fn block_diag_coupling<R: Rng + ?Sized>(group_sizes: &[usize], rng: &mut R) -> BlockDiagonal {
    assert!(group_sizes.iter().all(|&n| n >= 1), "group sizes must be ≥ 1");
    BlockDiagonal::new(group_sizes.iter().map(|&n| haar_unitary(2 * n, rng)).collect())
}

/// Dense `I_N ⊗ U^J(θ)`.
pub fn paddle_polarization_matrix(modes: usize, params: JonesParams) -> ComplexMatrix {
    assert!(modes >= 1, "paddle_polarization_matrix needs N ≥ 1");
    let j = jones_matrix(params);
    let mut out = ComplexMatrix::zeros(2 * modes, 2 * modes);
    for i in 0..modes {
        out.view_mut((2 * i, 2 * i), (2, 2)).copy_from(&j);
    }
    out
}

/// `(I_N ⊗ J) · v` without forming the Kronecker product.
pub fn apply_jones(j: &Jones, v: &ComplexVector) -> ComplexVector {
    assert!(v.len() % 2 == 0);
    let mut out = ComplexVector::zeros(v.len());
    for i in (0..v.len()).step_by(2) {
        let (h, vv) = (v[i], v[i + 1]);
        out[i] = j[(0, 0)] * h + j[(0, 1)] * vv;
        out[i + 1] = j[(1, 0)] * h + j[(1, 1)] * vv;
    }
    out
}

/// `m · (I_N ⊗ J)` for a matrix with an even number of columns.
pub fn right_apply_jones(m: &ComplexMatrix, j: &Jones) -> ComplexMatrix {
    assert!(m.ncols() % 2 == 0);
    let mut out = ComplexMatrix::zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in (0..m.ncols()).step_by(2) {
            let (x, y) = (m[(r, c)], m[(r, c + 1)]);
            out[(r, c)] = x * j[(0, 0)] + y * j[(1, 0)];
            out[(r, c + 1)] = x * j[(0, 1)] + y * j[(1, 1)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedPath;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn haar_dim_one_is_a_phase() {
        let mut rng = SeedPath::new(1).stream();
        let u = haar_unitary(1, &mut rng);
        assert_relative_eq!(u[(0, 0)].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn haar_is_unitary_and_deterministic() {
        for dim in [2, 5, 17, 64] {
            let u = haar_unitary(dim, &mut SeedPath::new(9).child(dim as u64).stream());
            assert!(unitarity_error(&u) < 1e-12, "dim {dim}");
            let again = haar_unitary(dim, &mut SeedPath::new(9).child(dim as u64).stream());
            assert_eq!(u, again);
        }
    }

    #[test]
    fn isometry_columns_orthonormal() {
        let q = haar_isometry(30, 2, &mut SeedPath::new(3).stream());
        let g = q.adjoint() * &q;
        assert!(max_abs_diff(&g, &ComplexMatrix::identity(2, 2)) < 1e-13);
    }

    #[test]
    fn jones_special_cases() {
        let delta = 0.37;
        let j = jones_matrix(JonesParams::new(0.0, delta));
        let e = Complex64::from_polar(1.0, delta);
        assert!((j[(0, 0)] - 1.0).norm() < 1e-15);
        assert!((j[(1, 1)] - e).norm() < 1e-15);
        assert!(j[(0, 1)].norm() < 1e-15 && j[(1, 0)].norm() < 1e-15);

        let swap = jones_matrix(JonesParams::new(FRAC_PI_4, PI));
        let expect = [[0.0, 1.0], [1.0, 0.0]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((swap[(r, c)] - expect[r][c]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn coupling_block_structure() {
        let mut rng = SeedPath::new(4).stream();
        let single = block_diag_coupling(&[1], &mut rng);
        assert_eq!(single.dim(), 2);
        assert_eq!(single.to_dense(), single.blocks()[0]);

        let m = block_diag_coupling(&[1, 2], &mut rng).to_dense();
        assert_eq!(m.nrows(), 6);
        // 1-based (row 1, col 3) sits across the group boundary
        assert_eq!(m[(0, 2)], ZERO);
        for r in 0..2 {
            for c in 2..6 {
                assert_eq!(m[(r, c)], ZERO);
                assert_eq!(m[(c, r)], ZERO);
            }
        }
        assert!(unitarity_error(&m) < 1e-12);
    }

    #[test]
    fn paddle_matrix_cases() {
        let p = JonesParams::new(0.8, FRAC_PI_2);
        let one = paddle_polarization_matrix(1, p);
        assert_eq!(one, ComplexMatrix::from_iterator(2, 2, jones_matrix(p).iter().cloned()));
        let flat = paddle_polarization_matrix(4, JonesParams::new(0.0, FRAC_PI_2));
        for i in 0..8 {
            let expect = if i % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::i() };
            assert!((flat[(i, i)] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn block_helpers_match_dense() {
        let mut rng = SeedPath::new(11).stream();
        let bd = block_diag_coupling(&[1, 2, 3], &mut rng);
        let dense = bd.to_dense();
        let v = ginibre(12, 1, &mut rng).column(0).into_owned();
        let m = ginibre(2, 12, &mut rng);
        assert!((bd.apply(&v) - &dense * &v).norm() < 1e-13);
        let x = ginibre(12, 3, &mut rng);
        assert!(max_abs_diff(&bd.apply_columns(&x), &(&dense * &x)) < 1e-13);
        assert!(max_abs_diff(&bd.right_apply(&m), &(&m * &dense)) < 1e-13);

        let j = jones_matrix(JonesParams::new(1.1, 0.4));
        let kron = paddle_polarization_matrix(6, JonesParams::new(1.1, 0.4));
        assert!((apply_jones(&j, &v) - &kron * &v).norm() < 1e-13);
        assert!(max_abs_diff(&right_apply_jones(&m, &j), &(&m * &kron)) < 1e-13);
    }

    proptest! {
        #[test]
        fn jones_unitary_with_det(theta in 0.0..(2.0 * PI), delta in -PI..PI) {
            let j = jones_matrix(JonesParams::new(theta, delta));
            let g = j.adjoint() * j;
            prop_assert!((g - Jones::identity()).iter().all(|z| z.norm() < 1e-14));
            prop_assert!((j.determinant() - Complex64::from_polar(1.0, delta)).norm() < 1e-14);
        }

        #[test]
        fn paddle_matrix_unitary(theta in 0.0..(2.0 * PI), n in 1usize..12) {
            let m = paddle_polarization_matrix(n, JonesParams::new(theta, FRAC_PI_2));
            prop_assert!(unitarity_error(&m) < 1e-12);
        }

        #[test]
        fn coupling_unitary(seed in any::<u64>(), sizes in proptest::collection::vec(1usize..6, 1..5)) {
            let m = block_diag_coupling(&sizes, &mut SeedPath::new(seed).stream()).to_dense();
            prop_assert!(unitarity_error(&m) < 1e-12);
        }
    }
}
