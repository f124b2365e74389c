//! Truncated bosonic Fock operators and coupler unitaries.
//!
//! Every mode lives in a `d`-dimensional Hilbert space spanned by the
//! occupation states `|0>..|d-1>`. A coupler between two modes is the
//! passive hopping unitary `exp(theta (a† b e^{i phi} - a b† e^{-i phi}))`
//! where `a` acts on the first (loop) mode and `b` on the second (time-bin)
//! mode; `cos²(theta)` is the intensity transmission. Since the generator
//! commutes with the total photon number, so does the coupler, and the
//! truncation is exact within any block whose total occupation fits below
//! the cutoff.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::tensor::{contract, expm_antihermitian, ComplexTensor, TensorError};

#[derive(Debug, Error)]
pub enum FockError {
    #[error("local dimension must be at least 2, got {0}")]
    InvalidDim(usize),

    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Local Hilbert-space dimension of a truncated bosonic mode.
///
/// The maximum representable occupation is `d - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(d: usize) -> Result<Self, FockError> {
        if d < 2 {
            return Err(FockError::InvalidDim(d));
        }
        Ok(Self(d))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn max_occupation(self) -> usize {
        self.0 - 1
    }
}

/// Beam-splitter parameters, both in radians.
///
/// `theta` sets the intensity transmission `cos²(theta)` and reflection
/// `sin²(theta)`; `phi` is a relative phase between the output modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerSpec {
    pub theta: f64,
    pub phi: f64,
}

impl CouplerSpec {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Pure-rotation coupler with `phi = 0`.
    pub fn rotation(theta: f64) -> Self {
        Self { theta, phi: 0.0 }
    }

    /// Intensity transmission probability `cos²(theta)`.
    pub fn transmission(&self) -> f64 {
        self.theta.cos().powi(2)
    }
}

/// Two-mode coupler unitary reshaped to rank four.
///
/// Index order is `(o, p, q, r)`: loop output, bin output, loop input,
/// bin input. Viewed as a `d² × d²` matrix with row `(o, p)` and column
/// `(q, r)` it is unitary, and entries with `o + p != q + r` vanish.
#[derive(Debug, Clone)]
pub struct CouplerTensor {
    tensor: ComplexTensor,
    dim: FockDim,
}

impl CouplerTensor {
    pub fn tensor(&self) -> &ComplexTensor {
        &self.tensor
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    /// The coupler as a `d² × d²` matrix, rows `(o, p)`, columns `(q, r)`.
    pub fn as_matrix(&self) -> ComplexTensor {
        let d = self.dim.get();
        self.tensor.reshape(vec![d * d, d * d]).expect("same entry count")
    }

    /// Entry `U_{o,p}^{q,r}`.
    pub fn entry(&self, o: usize, p: usize, q: usize, r: usize) -> C64 {
        self.tensor.get(&[o, p, q, r])
    }
}

/// Truncated annihilation operator: `<n-1| a |n> = sqrt(n)`.
pub fn annihilation(d: FockDim) -> ComplexTensor {
    let n = d.get();
    ComplexTensor::from_fn(vec![n, n], |ix| {
        if ix[0] + 1 == ix[1] {
            C64::new((ix[1] as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .expect("positive extents")
}

/// Truncated creation operator, the adjoint of [`annihilation`].
pub fn creation(d: FockDim) -> ComplexTensor {
    annihilation(d).adjoint().expect("rank 2")
}

/// Number operator `diag(0, 1, ..., d-1)`.
pub fn number_operator(d: FockDim) -> ComplexTensor {
    let n = d.get();
    ComplexTensor::from_fn(vec![n, n], |ix| {
        if ix[0] == ix[1] {
            C64::new(ix[0] as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .expect("positive extents")
}

/// Kronecker product of two matrices, composite index `i_a * d_b + i_b`.
fn kron(a: &ComplexTensor, b: &ComplexTensor) -> ComplexTensor {
    let (ra, ca) = (a.shape()[0], a.shape()[1]);
    let (rb, cb) = (b.shape()[0], b.shape()[1]);
    ComplexTensor::from_fn(vec![ra * rb, ca * cb], |ix| {
        let (r, c) = (ix[0], ix[1]);
        a.get(&[r / rb, c / cb]) * b.get(&[r % rb, c % cb])
    })
    .expect("positive extents")
}

/// Anti-Hermitian generator `theta (a† b e^{i phi} - a b† e^{-i phi})` on
/// the two-mode space, composite index `loop * d + bin`.
pub fn two_mode_generator(spec: CouplerSpec, d: FockDim) -> ComplexTensor {
    let a = annihilation(d);
    let adag = creation(d);
    let hop_up = kron(&adag, &a); // a† ⊗ b
    let hop_dn = kron(&a, &adag); // a ⊗ b†
    let e_up = C64::from_polar(spec.theta, spec.phi);
    let e_dn = C64::from_polar(spec.theta, -spec.phi);
    let n2 = d.get() * d.get();
    ComplexTensor::from_fn(vec![n2, n2], |ix| {
        hop_up.get(ix) * e_up - hop_dn.get(ix) * e_dn
    })
    .expect("positive extents")
}

/// Two-mode coupler unitary on a pair of truncated modes.
pub fn beam_splitter(spec: CouplerSpec, d: FockDim) -> Result<CouplerTensor, FockError> {
    let g = two_mode_generator(spec, d);
    let u = expm_antihermitian(&g)?;
    let n = d.get();
    Ok(CouplerTensor {
        tensor: u.reshape(vec![n, n, n, n])?,
        dim: d,
    })
}

/// Embeds a two-mode unitary (composite index `a * d + b`) into
/// `num_modes` modes, acting on modes `(a_mode, b_mode)` and leaving the
/// rest untouched. Returns a `d^m × d^m` matrix with row-major composite
/// indices over the modes in order.
pub(crate) fn embed_two_mode(
    u: &ComplexTensor,
    num_modes: usize,
    a_mode: usize,
    b_mode: usize,
    d: usize,
) -> ComplexTensor {
    let total: usize = d.pow(num_modes as u32);
    let digits = |mut x: usize| {
        let mut out = vec![0usize; num_modes];
        for k in (0..num_modes).rev() {
            out[k] = x % d;
            x /= d;
        }
        out
    };
    ComplexTensor::from_fn(vec![total, total], |ix| {
        let row = digits(ix[0]);
        let col = digits(ix[1]);
        for m in 0..num_modes {
            if m != a_mode && m != b_mode && row[m] != col[m] {
                return C64::new(0.0, 0.0);
            }
        }
        u.get(&[row[a_mode] * d + row[b_mode], col[a_mode] * d + col[b_mode]])
    })
    .expect("positive extents")
}

/// Three-mode interferometer built from three two-mode couplers applied to
/// mode pairs (1,2), (2,3), (1,3), in that order. In each pair the first
/// mode plays the `a` role of the coupler. Returned as a rank-6 tensor
/// with index order `(o1, o2, o3, i1, i2, i3)`.
pub fn tritter(specs: &[CouplerSpec; 3], d: FockDim) -> Result<ComplexTensor, FockError> {
    let n = d.get();
    let pairs = [(0usize, 1usize), (1, 2), (0, 2)];
    let mut total = ComplexTensor::identity(n * n * n)?;
    for (spec, &(a, b)) in specs.iter().zip(&pairs) {
        let u = beam_splitter(*spec, d)?.as_matrix();
        let step = embed_two_mode(&u, 3, a, b, n);
        // Applied in listed order, so each new coupler multiplies from the left.
        total = contract(&step, &total, &[(1, 0)])?;
    }
    Ok(total.reshape(vec![n, n, n, n, n, n])?)
}
