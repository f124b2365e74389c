//! Dense complex tensors with the three kernels everything else is built
//! from: pairwise contraction, singular-value splitting with truncation,
//! and the matrix exponential of anti-Hermitian generators.
//!
//! Tensors are immutable after construction and store their entries in
//! row-major order, so they are cheap to reshape and safe to share across
//! threads. All operations are pure functions of their inputs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Double-precision complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Singular values closer than this are treated as one degenerate group:
/// a truncation cut is never placed inside such a group.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Maximum allowed deviation from `g† = -g` in [`expm_antihermitian`].
pub const ANTI_HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape {shape:?} implies {expected} entries but data has {actual}")]
    DataLengthMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("shape {0:?} contains a zero extent")]
    ZeroExtent(Vec<usize>),

    #[error("axis {axis} out of range for rank-{rank} tensor")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("axis {axis} referenced more than once")]
    DuplicateAxis { axis: usize },

    #[error(
        "contracted extents differ: axis {axis_a} of lhs has {extent_a}, \
         axis {axis_b} of rhs has {extent_b}"
    )]
    ExtentMismatch {
        axis_a: usize,
        extent_a: usize,
        axis_b: usize,
        extent_b: usize,
    },

    #[error("cut must leave at least one axis on each side")]
    EmptyCut,

    #[error("max_rank must be at least 1")]
    ZeroMaxRank,

    #[error("truncation tolerance must be finite and nonnegative, got {0}")]
    BadTolerance(f64),

    #[error("singular value decomposition failed to converge")]
    SvdFailed,

    #[error("eigendecomposition failed to converge")]
    EigenFailed,

    #[error("expected a square matrix, got shape {0:?}")]
    NotSquare(Vec<usize>),

    #[error("matrix is not anti-Hermitian: max |g + g†| = {deviation:.3e}")]
    NotAntiHermitian { deviation: f64 },

    #[error("{0:?} is not a permutation of 0..{1}")]
    BadPermutation(Vec<usize>, usize),

    #[error("cannot reshape {from:?} ({from_len} entries) into {to:?} ({to_len} entries)")]
    BadReshape {
        from: Vec<usize>,
        from_len: usize,
        to: Vec<usize>,
        to_len: usize,
    },
}

pub type TensorResult<T> = Result<T, TensorError>;

/// Dense multi-dimensional complex array with an explicit shape.
///
/// The entry at multi-index `(i_0, ..., i_{r-1})` lives at flat position
/// `i_0 * s_0 + ... + i_{r-1} * s_{r-1}` with row-major strides `s`. A
/// rank-0 tensor (empty shape) holds exactly one entry and represents a
/// scalar, e.g. the result of contracting all axes.
#[derive(Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl std::fmt::Debug for ComplexTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ComplexTensor{:?}", self.shape)?;
        if self.data.len() <= 8 {
            write!(f, " {:?}", self.data)
        } else {
            write!(f, " [{} entries]", self.data.len())
        }
    }
}

impl ComplexTensor {
    /// Wraps row-major `data` in the given shape.
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> TensorResult<Self> {
        if shape.contains(&0) {
            return Err(TensorError::ZeroExtent(shape));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::DataLengthMismatch {
                expected,
                actual: data.len(),
                shape,
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> TensorResult<Self> {
        let len: usize = shape.iter().product();
        Self::new(shape, vec![C64::new(0.0, 0.0); len])
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in
    /// row-major order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> C64) -> TensorResult<Self> {
        if shape.contains(&0) {
            return Err(TensorError::ZeroExtent(shape));
        }
        let len: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Ok(Self { shape, data })
    }

    /// Rank-0 scalar tensor.
    pub fn scalar(z: C64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![z],
        }
    }

    /// The `n`-by-`n` identity matrix.
    pub fn identity(n: usize) -> TensorResult<Self> {
        Self::from_fn(vec![n, n], |ix| {
            if ix[0] == ix[1] {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false // extents are positive, so there is always at least one entry
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.shape.len()];
        for ax in (0..self.shape.len().saturating_sub(1)).rev() {
            s[ax] = s[ax + 1] * self.shape[ax + 1];
        }
        s
    }

    /// Flat row-major position of a multi-index.
    ///
    /// Panics if the index does not match the shape.
    pub fn flat_index(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank mismatch");
        let mut flat = 0usize;
        for (ax, &i) in index.iter().enumerate() {
            assert!(i < self.shape[ax], "index {i} out of extent {}", self.shape[ax]);
            flat = flat * self.shape[ax] + i;
        }
        flat
    }

    /// Entry at a multi-index. Panics on an out-of-shape index.
    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.flat_index(index)]
    }

    /// Reinterprets the entries under a new shape with the same length.
    pub fn reshape(&self, new_shape: Vec<usize>) -> TensorResult<Self> {
        if new_shape.contains(&0) {
            return Err(TensorError::ZeroExtent(new_shape));
        }
        let to_len: usize = new_shape.iter().product();
        if to_len != self.data.len() {
            return Err(TensorError::BadReshape {
                from: self.shape.clone(),
                from_len: self.data.len(),
                to: new_shape,
                to_len,
            });
        }
        Ok(Self {
            shape: new_shape,
            data: self.data.clone(),
        })
    }

    /// Reorders axes: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> TensorResult<Self> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if perm.len() != rank {
            return Err(TensorError::BadPermutation(perm.to_vec(), rank));
        }
        for &p in perm {
            if p >= rank || seen[p] {
                return Err(TensorError::BadPermutation(perm.to_vec(), rank));
            }
            seen[p] = true;
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = self.strides();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; rank];
        for _ in 0..self.data.len() {
            let mut src = 0usize;
            for (ax, &i) in idx.iter().enumerate() {
                src += i * old_strides[perm[ax]];
            }
            data.push(self.data[src]);
            for ax in (0..rank).rev() {
                idx[ax] += 1;
                if idx[ax] < new_shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        ComplexTensor::new(new_shape, data)
    }

    pub fn conjugate(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose of a rank-2 tensor.
    pub fn adjoint(&self) -> TensorResult<Self> {
        if self.rank() != 2 {
            return Err(TensorError::NotSquare(self.shape.clone()));
        }
        self.permute(&[1, 0]).map(|t| t.conjugate())
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|w| w * z).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> TensorResult<f64> {
        if self.shape != other.shape {
            return Err(TensorError::BadReshape {
                from: self.shape.clone(),
                from_len: self.len(),
                to: other.shape.clone(),
                to_len: other.len(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Flattens the tensor into a matrix whose rows enumerate `row_axes`
    /// and whose columns enumerate `col_axes`, each in the given order.
    ///
    /// The two lists must partition the axes; callers validate that.
    pub(crate) fn to_dmatrix(&self, row_axes: &[usize], col_axes: &[usize]) -> DMatrix<C64> {
        let strides = self.strides();
        let rows: usize = row_axes.iter().map(|&a| self.shape[a]).product();
        let cols: usize = col_axes.iter().map(|&a| self.shape[a]).product();
        let mut m = DMatrix::<C64>::zeros(rows, cols);
        // Walk the source once, maintaining the (row, col) ranks digit by digit.
        let mut idx = vec![0usize; self.rank()];
        let row_shape: Vec<usize> = row_axes.iter().map(|&a| self.shape[a]).collect();
        let col_shape: Vec<usize> = col_axes.iter().map(|&a| self.shape[a]).collect();
        let _ = (&strides, &row_shape, &col_shape);
        for &z in &self.data {
            let mut r = 0usize;
            for (k, &a) in row_axes.iter().enumerate() {
                r = r * row_shape[k] + idx[a];
            }
            let mut c = 0usize;
            for (k, &a) in col_axes.iter().enumerate() {
                c = c * col_shape[k] + idx[a];
            }
            m[(r, c)] = z;
            for ax in (0..self.rank()).rev() {
                idx[ax] += 1;
                if idx[ax] < self.shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        m
    }

    /// Inverse of [`to_dmatrix`]: rows spell out `row_shape`, columns spell
    /// out `col_shape`, and the result has shape `row_shape ++ col_shape`.
    pub(crate) fn from_dmatrix(
        m: &DMatrix<C64>,
        row_shape: &[usize],
        col_shape: &[usize],
    ) -> Self {
        let rows: usize = row_shape.iter().product();
        let cols: usize = col_shape.iter().product();
        debug_assert_eq!((m.nrows(), m.ncols()), (rows, cols));
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(m[(r, c)]);
            }
        }
        let mut shape: Vec<usize> = row_shape.to_vec();
        shape.extend_from_slice(col_shape);
        Self { shape, data }
    }
}

fn check_axes_unique(rank: usize, axes: &[usize]) -> TensorResult<()> {
    let mut seen = vec![false; rank];
    for &a in axes {
        if a >= rank {
            return Err(TensorError::AxisOutOfRange { axis: a, rank });
        }
        if seen[a] {
            return Err(TensorError::DuplicateAxis { axis: a });
        }
        seen[a] = true;
    }
    Ok(())
}

fn complement(rank: usize, axes: &[usize]) -> Vec<usize> {
    (0..rank).filter(|a| !axes.contains(a)).collect()
}

/// Contracts `a` and `b` over the given `(axis_of_a, axis_of_b)` pairs.
///
/// The result carries the uncontracted axes of `a` followed by those of
/// `b`, each in their original order. Contracting every axis of both
/// tensors yields a rank-0 scalar.
pub fn contract(
    a: &ComplexTensor,
    b: &ComplexTensor,
    pairs: &[(usize, usize)],
) -> TensorResult<ComplexTensor> {
    let a_axes: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let b_axes: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    check_axes_unique(a.rank(), &a_axes)?;
    check_axes_unique(b.rank(), &b_axes)?;
    for &(ia, ib) in pairs {
        if a.shape[ia] != b.shape[ib] {
            return Err(TensorError::ExtentMismatch {
                axis_a: ia,
                extent_a: a.shape[ia],
                axis_b: ib,
                extent_b: b.shape[ib],
            });
        }
    }
    let free_a = complement(a.rank(), &a_axes);
    let free_b = complement(b.rank(), &b_axes);
    let ma = a.to_dmatrix(&free_a, &a_axes);
    let mb = b.to_dmatrix(&b_axes, &free_b);
    let mc = ma * mb;
    let row_shape: Vec<usize> = free_a.iter().map(|&ax| a.shape[ax]).collect();
    let col_shape: Vec<usize> = free_b.iter().map(|&ax| b.shape[ax]).collect();
    Ok(ComplexTensor::from_dmatrix(&mc, &row_shape, &col_shape))
}

/// Outcome of a singular-value split across a cut.
///
/// Reconstruction reads `left_isometry · diag(singular_values) ·
/// right_isometry` once the bond axes are matched up: the left factor
/// carries the cut's left axes plus a trailing bond axis, the right factor
/// a leading bond axis plus the cut's right axes.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub left_isometry: ComplexTensor,
    /// Kept singular values, sorted descending, all nonnegative.
    pub singular_values: Vec<f64>,
    pub right_isometry: ComplexTensor,
    /// Frobenius norm of the discarded part: the root of the sum of the
    /// squared discarded singular values.
    pub truncation_error: f64,
}

impl SvdResult {
    /// Number of singular values kept.
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }
}

/// Splits `t` across the cut that puts `left_axes` (in the given order) on
/// the left and the remaining axes, in original order, on the right.
///
/// At most `max_rank` singular values are kept, and values below
/// `tol * (largest value)` are discarded. A group of values equal within
/// [`DEGENERACY_TOL`] is never split: if a cut would land inside one, the
/// kept rank is extended to include the whole group, even past `max_rank`.
pub fn svd_split(
    t: &ComplexTensor,
    left_axes: &[usize],
    max_rank: usize,
    tol: f64,
) -> TensorResult<SvdResult> {
    check_axes_unique(t.rank(), left_axes)?;
    let right_axes = complement(t.rank(), left_axes);
    if left_axes.is_empty() || right_axes.is_empty() {
        return Err(TensorError::EmptyCut);
    }
    if max_rank == 0 {
        return Err(TensorError::ZeroMaxRank);
    }
    if !tol.is_finite() || tol < 0.0 {
        return Err(TensorError::BadTolerance(tol));
    }

    if t.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(TensorError::SvdFailed);
    }
    let m = t.to_dmatrix(left_axes, &right_axes);
    let (rows, cols) = (m.nrows(), m.ncols());
    let (u, sigma, v) = jacobi_svd(&m)?;

    let full = sigma.len();
    let cutoff = tol * sigma.first().copied().unwrap_or(0.0);
    let mut keep = sigma.iter().take_while(|&&s| s >= cutoff).count();
    keep = keep.clamp(1, full).min(max_rank);
    // Never split a degenerate group.
    while keep < full && (sigma[keep - 1] - sigma[keep]).abs() < DEGENERACY_TOL {
        keep += 1;
    }

    let truncation_error = sigma[keep..]
        .iter()
        .map(|s| s * s)
        .sum::<f64>()
        .sqrt();

    let mut uk = DMatrix::<C64>::zeros(rows, keep);
    let mut vk = DMatrix::<C64>::zeros(keep, cols);
    for new_col in 0..keep {
        uk.set_column(new_col, &u.column(new_col));
        for c in 0..cols {
            vk[(new_col, c)] = v[(c, new_col)].conj();
        }
    }

    let left_shape: Vec<usize> = left_axes.iter().map(|&a| t.shape[a]).collect();
    let right_shape: Vec<usize> = right_axes.iter().map(|&a| t.shape[a]).collect();
    Ok(SvdResult {
        left_isometry: ComplexTensor::from_dmatrix(&uk, &left_shape, &[keep]),
        singular_values: sigma[..keep].to_vec(),
        right_isometry: ComplexTensor::from_dmatrix(&vk, &[keep], &right_shape),
        truncation_error,
    })
}

/// One-sided Jacobi singular value decomposition: `a = u · diag(s) · v†`
/// with `s` descending, `u` of size `m × k`, `v` of size `n × k`, and
/// `k = min(m, n)` orthonormal columns in both factors.
///
/// Jacobi rotations orthogonalize the columns directly, which keeps every
/// singular value accurate relative to its own magnitude, including on
/// sparse block-structured inputs.
pub(crate) fn jacobi_svd(
    a: &DMatrix<C64>,
) -> TensorResult<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    if a.ncols() > a.nrows() {
        let (u, s, v) = jacobi_svd(&a.adjoint())?;
        return Ok((v, s, u));
    }
    // Tall matrices: reduce to the square factor first, so the rotation
    // sweeps work on length-n columns instead of length-m ones.
    if a.nrows() > 2 * a.ncols() {
        let (q, r) = householder_qr(a);
        let (ur, s, v) = jacobi_svd(&r)?;
        return Ok((q * ur, s, v));
    }
    let (m, n) = (a.nrows(), a.ncols());
    let mut w = a.clone();
    let mut v = DMatrix::<C64>::identity(n, n);

    const MAX_SWEEPS: usize = 100;
    const ORTHO_TOL: f64 = 1e-15;
    let mut worst = 0.0f64;
    for sweep in 0..=MAX_SWEEPS {
        worst = 0.0;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = C64::new(0.0, 0.0);
                for r in 0..m {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)];
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                let scale = (app * aqq).sqrt();
                if scale == 0.0 {
                    continue;
                }
                let rel = apq.norm() / scale;
                worst = worst.max(rel);
                if rel <= ORTHO_TOL || sweep == MAX_SWEEPS {
                    continue;
                }
                // Unitary 2x2 that zeroes the off-diagonal Gram entry.
                let alpha = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sa = alpha.conj() * s;
                let ca = alpha.conj() * c;
                for r in 0..m {
                    let wp = w[(r, p)];
                    let wq = w[(r, q)];
                    w[(r, p)] = wp * c - wq * sa;
                    w[(r, q)] = wp * s + wq * ca;
                }
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * c - vq * sa;
                    v[(r, q)] = vp * s + vq * ca;
                }
            }
        }
        if worst <= ORTHO_TOL {
            break;
        }
    }
    // Quadratic convergence makes the sweep cap generous; anything still
    // far from column-orthogonal is a genuine failure.
    if worst > 1e-10 {
        return Err(TensorError::SvdFailed);
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = DMatrix::<C64>::zeros(m, n);
    let mut v_sorted = DMatrix::<C64>::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (new_col, &old) in order.iter().enumerate() {
        let s = norms[old];
        sigma.push(s);
        v_sorted.set_column(new_col, &v.column(old));
        if s > 0.0 {
            for r in 0..m {
                u[(r, new_col)] = w[(r, old)] / s;
            }
        } else {
            // Null direction: take the standard basis vector with the
            // largest residual against the columns built so far.
            let mut best: Option<(f64, Vec<C64>)> = None;
            for basis in 0..m {
                let mut col = vec![C64::new(0.0, 0.0); m];
                col[basis] = C64::new(1.0, 0.0);
                for prev in 0..new_col {
                    let proj: C64 = (0..m).map(|r| u[(r, prev)].conj() * col[r]).sum();
                    for (r, entry) in col.iter_mut().enumerate() {
                        *entry -= u[(r, prev)] * proj;
                    }
                }
                let norm2: f64 = col.iter().map(|z| z.norm_sqr()).sum();
                if best.as_ref().is_none_or(|(b, _)| norm2 > *b) {
                    best = Some((norm2, col));
                }
            }
            let (norm2, col) = best.expect("m > 0");
            let norm = norm2.sqrt().max(f64::MIN_POSITIVE);
            for r in 0..m {
                u[(r, new_col)] = col[r] / norm;
            }
        }
    }
    Ok((u, sigma, v_sorted))
}

/// Thin Householder QR of a tall matrix (`m >= n`): returns `(q, r)` with
/// `q` of size `m × n` with orthonormal columns and `r` upper triangular
/// `n × n`.
fn householder_qr(a: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let (m, n) = (a.nrows(), a.ncols());
    debug_assert!(m >= n);
    let mut work = a.clone();
    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(n);
    for k in 0..n {
        let norm_x: f64 = (k..m).map(|r| work[(r, k)].norm_sqr()).sum::<f64>().sqrt();
        let mut v = vec![C64::new(0.0, 0.0); m - k];
        if norm_x > 0.0 {
            let x0 = work[(k, k)];
            let phase = if x0.norm() > 0.0 {
                x0 / x0.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            let alpha = -phase * norm_x;
            for (i, entry) in v.iter_mut().enumerate() {
                *entry = work[(k + i, k)];
            }
            v[0] -= alpha;
            let v_norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if v_norm > 0.0 {
                for entry in v.iter_mut() {
                    *entry /= v_norm;
                }
                // work[k.., k..] -= 2 v (v† work[k.., k..])
                for c in k..n {
                    let proj: C64 = (0..m - k).map(|i| v[i].conj() * work[(k + i, c)]).sum();
                    for i in 0..m - k {
                        let vi = v[i];
                        work[(k + i, c)] -= vi * proj * 2.0;
                    }
                }
            } else {
                v[0] = C64::new(0.0, 0.0);
            }
        }
        reflectors.push(v);
    }
    let mut r = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r[(i, j)] = work[(i, j)];
        }
    }
    // q = H_0 · H_1 · ... · H_{n-1} · [I_n; 0]
    let mut q = DMatrix::<C64>::zeros(m, n);
    for i in 0..n {
        q[(i, i)] = C64::new(1.0, 0.0);
    }
    for k in (0..n).rev() {
        let v = &reflectors[k];
        let v_norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if v_norm2 == 0.0 {
            continue;
        }
        for c in 0..n {
            let proj: C64 = (0..m - k).map(|i| v[i].conj() * q[(k + i, c)]).sum();
            for i in 0..m - k {
                let vi = v[i];
                q[(k + i, c)] -= vi * proj * 2.0;
            }
        }
    }
    (q, r)
}

/// Exponential of an anti-Hermitian matrix, computed by eigendecomposing
/// the Hermitian matrix `i·g`, so the result is unitary to round-off.
///
/// Exact zero entries of `g` are respected: the matrix is first split into
/// the connected components of its nonzero pattern and each block is
/// exponentiated separately, so entries that are exactly zero in every
/// power of `g` stay exactly zero.
pub fn expm_antihermitian(g: &ComplexTensor) -> TensorResult<ComplexTensor> {
    if g.rank() != 2 || g.shape[0] != g.shape[1] {
        return Err(TensorError::NotSquare(g.shape.clone()));
    }
    if g.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(TensorError::NotAntiHermitian { deviation: f64::NAN });
    }
    let n = g.shape[0];
    let mut deviation = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let d = (g.get(&[i, j]) + g.get(&[j, i]).conj()).norm();
            deviation = deviation.max(d);
        }
    }
    if deviation > ANTI_HERMITIAN_TOL {
        return Err(TensorError::NotAntiHermitian { deviation });
    }

    // Connected components of the nonzero pattern.
    let mut component = vec![usize::MAX; n];
    let mut num_components = 0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        component[start] = num_components;
        while let Some(i) = stack.pop() {
            #[allow(clippy::needless_range_loop)]
            for j in 0..n {
                if component[j] == usize::MAX
                    && (g.get(&[i, j]) != C64::new(0.0, 0.0)
                        || g.get(&[j, i]) != C64::new(0.0, 0.0))
                {
                    component[j] = num_components;
                    stack.push(j);
                }
            }
        }
        num_components += 1;
    }

    let mut result = ComplexTensor::zeros(vec![n, n])?;
    let minus_i = C64::new(0.0, -1.0);
    let plus_i = C64::new(0.0, 1.0);
    for c in 0..num_components {
        let members: Vec<usize> = (0..n).filter(|&i| component[i] == c).collect();
        let k = members.len();
        if k == 1 {
            let i = members[0];
            result.data[i * n + i] = g.get(&[i, i]).exp();
            continue;
        }
        let h = DMatrix::<C64>::from_fn(k, k, |r, s| plus_i * g.get(&[members[r], members[s]]));
        let eig = h
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or(TensorError::EigenFailed)?;
        let phases = DMatrix::<C64>::from_diagonal(
            &eig.eigenvalues.map(|lambda| (minus_i * lambda).exp()),
        );
        let w = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        for (r, &i) in members.iter().enumerate() {
            for (s, &j) in members.iter().enumerate() {
                result.data[i * n + j] = w[(r, s)];
            }
        }
    }
    Ok(result)
}
