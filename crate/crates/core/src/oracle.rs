//! Brute-force dense simulator for small instances.
//!
//! Evolves the full state vector over all loop registers and time bins
//! without any factorization. Exponentially expensive, so capped, and
//! intended purely as ground truth for the factorized builders.

use num_complex::Complex64 as C64;

use crate::arch::ArchitectureSpec;
use crate::error::SimError;
use crate::tensor::ComplexTensor;

/// Default cap on the number of amplitudes a dense evolution may allocate.
pub const DEFAULT_AMPLITUDE_CAP: usize = 1 << 24;

/// Exact final state over the loop registers and all emitted bins.
///
/// Site order: loop registers first (loop 1 most significant), then bins
/// in emission order. The amplitude of `|l_1..l_L, n_1..n_N>` sits at flat
/// index `((l_1 d + l_2) d + ...) d + n_N` in row-major order over that
/// site list.
#[derive(Debug, Clone)]
pub struct DenseState {
    amplitudes: Vec<C64>,
    num_loops: usize,
    num_bins: usize,
    dim: usize,
}

impl DenseState {
    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn num_loops(&self) -> usize {
        self.num_loops
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_sites(&self) -> usize {
        self.num_loops + self.num_bins
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Flat index of an outcome given as one occupation per site, in the
    /// documented site order.
    pub fn index_of(&self, outcome: &[usize]) -> Result<usize, SimError> {
        if outcome.len() != self.num_sites() {
            return Err(SimError::LengthMismatch {
                expected: self.num_sites(),
                got: outcome.len(),
            });
        }
        let mut flat = 0usize;
        for &n in outcome {
            if n >= self.dim {
                return Err(SimError::InvalidArgument(format!(
                    "occupation {n} out of range 0..{}",
                    self.dim
                )));
            }
            flat = flat * self.dim + n;
        }
        Ok(flat)
    }

    /// Occupations per site for a flat index.
    pub fn outcome_of(&self, mut index: usize) -> Vec<usize> {
        let sites = self.num_sites();
        let mut out = vec![0usize; sites];
        for k in (0..sites).rev() {
            out[k] = index % self.dim;
            index /= self.dim;
        }
        out
    }

    pub fn amplitude(&self, outcome: &[usize]) -> Result<C64, SimError> {
        Ok(self.amplitudes[self.index_of(outcome)?])
    }

    /// The state reinterpreted as a tensor with one axis per site.
    pub fn as_tensor(&self) -> ComplexTensor {
        ComplexTensor::new(vec![self.dim; self.num_sites()], self.amplitudes.clone())
            .expect("consistent by construction")
    }
}

/// Applies `matrix` (square, composite row-major index over
/// `target_digits` in order) to the listed digit positions of the state.
fn apply_to_digits(
    amplitudes: &mut [C64],
    dims: &[usize],
    matrix: &ComplexTensor,
    target_digits: &[usize],
) {
    let num_sites = dims.len();
    let mut strides = vec![1usize; num_sites];
    for k in (0..num_sites.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let block: usize = target_digits.iter().map(|&t| dims[t]).product();
    let others: Vec<usize> = (0..num_sites).filter(|s| !target_digits.contains(s)).collect();
    let other_count: usize = others.iter().map(|&s| dims[s]).product();

    // Offsets of every assignment of the target digits.
    let mut target_offsets = vec![0usize; block];
    for (b, slot) in target_offsets.iter_mut().enumerate() {
        let mut rem = b;
        let mut off = 0usize;
        for &t in target_digits.iter().rev() {
            off += (rem % dims[t]) * strides[t];
            rem /= dims[t];
        }
        *slot = off;
    }

    let mut input = vec![C64::new(0.0, 0.0); block];
    let mut other_idx = vec![0usize; others.len()];
    for _ in 0..other_count.max(1) {
        let base: usize = others
            .iter()
            .zip(&other_idx)
            .map(|(&s, &i)| i * strides[s])
            .sum();
        for b in 0..block {
            input[b] = amplitudes[base + target_offsets[b]];
        }
        for (r, off) in target_offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c3, &v) in input.iter().enumerate() {
                let m = matrix.get(&[r, c3]);
                if m != C64::new(0.0, 0.0) {
                    acc += m * v;
                }
            }
            amplitudes[base + off] = acc;
        }
        for k in (0..others.len()).rev() {
            other_idx[k] += 1;
            if other_idx[k] < dims[others[k]] {
                break;
            }
            other_idx[k] = 0;
        }
    }
}

pub fn evolve_dense(spec: &ArchitectureSpec) -> Result<DenseState, SimError> {
    evolve_dense_with_cap(spec, DEFAULT_AMPLITUDE_CAP)
}

/// Evolves the input train through the loop network step by step, keeping
/// the complete state vector. Fails if `d^(N + L)` exceeds `cap`.
pub fn evolve_dense_with_cap(
    spec: &ArchitectureSpec,
    cap: usize,
) -> Result<DenseState, SimError> {
    spec.validate()?;
    if !spec.kind.is_state_simulatable() {
        return Err(SimError::InvalidSpec(format!(
            "{} is not state-simulatable",
            spec.kind.as_str()
        )));
    }
    let d = spec.fock_dim;
    let num_loops = spec.num_loops;
    let num_bins = spec.num_time_bins;
    let num_sites = num_loops + num_bins;
    let needed = d.saturating_pow(num_sites as u32);
    if needed > cap {
        return Err(SimError::MemoryCap { needed, cap });
    }

    // Initial product state: vacuum loops, Fock inputs in the bins.
    let mut amplitudes = vec![C64::new(0.0, 0.0); needed];
    let mut start = vec![0usize; num_sites];
    for (i, &n) in spec.photons_per_bin.iter().enumerate() {
        start[num_loops + i] = n;
    }
    let mut flat = 0usize;
    for &n in &start {
        flat = flat * d + n;
    }
    amplitudes[flat] = C64::new(1.0, 0.0);

    let dims = vec![d; num_sites];
    let step = spec.step_unitary()?;
    for i in 0..num_bins {
        let mut targets: Vec<usize> = (0..num_loops).collect();
        targets.push(num_loops + i);
        apply_to_digits(&mut amplitudes, &dims, &step, &targets);
    }

    Ok(DenseState {
        amplitudes,
        num_loops,
        num_bins,
        dim: d,
    })
}

/// The full outcome probability table `|amplitude|²`, indexed like the
/// state's flat amplitudes.
pub fn exact_distribution(state: &DenseState) -> Vec<f64> {
    state.amplitudes.iter().map(|z| z.norm_sqr()).collect()
}

/// Von Neumann entropy in bits of the reduced state on `subsystem` (site
/// indices in the documented order).
///
/// The squared Schmidt coefficients are taken as the eigenvalues of the
/// Gram matrix of the bipartition, so this path shares no code with the
/// SVD used by the factorized builders.
pub fn reduced_entropy(state: &DenseState, subsystem: &[usize]) -> Result<f64, SimError> {
    let sites = state.num_sites();
    for &s in subsystem {
        if s >= sites {
            return Err(SimError::InvalidSite {
                site: s,
                num_sites: sites,
            });
        }
    }
    let mut seen = vec![false; sites];
    for &s in subsystem {
        if seen[s] {
            return Err(SimError::InvalidArgument(format!("site {s} listed twice")));
        }
        seen[s] = true;
    }
    if subsystem.is_empty() || subsystem.len() == sites {
        return Ok(0.0);
    }
    let rest: Vec<usize> = (0..sites).filter(|s| !subsystem.contains(s)).collect();
    let t = state.as_tensor();
    let m = t.to_dmatrix(subsystem, &rest);
    let gram = if m.nrows() <= m.ncols() {
        &m * m.adjoint()
    } else {
        m.adjoint() * &m
    };
    let eig = gram
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(SimError::Tensor(crate::tensor::TensorError::EigenFailed))?;
    let total: f64 = eig.eigenvalues.iter().map(|&x| x.max(0.0)).sum();
    if total <= 0.0 {
        return Err(SimError::ZeroNorm);
    }
    let mut entropy = 0.0;
    for &x in eig.eigenvalues.iter() {
        let p = x.max(0.0) / total;
        if p > 0.0 {
            entropy -= p * p.log2();
        }
    }
    Ok(entropy)
}
