//! Matrix product states generated by loop interferometers.
//!
//! The sequential interaction of a pulse train with a delay loop factorizes
//! the output state exactly: each emitted bin becomes one rank-3 site
//! tensor whose shared bond carries the loop state between steps. Site
//! order is bins in emission order followed by the surviving loop modes,
//! so the single-loop state on `N` bins has `N + 1` sites with every
//! internal bond of extent `d`.
//!
//! [`canonicalize`] rewrites any such state in a Schmidt-gauge form that
//! exposes the Schmidt coefficients of every bipartition, from which
//! entropies and spectra are read off directly (see [`crate::observables`]).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::arch::{ArchKind, ArchitectureSpec};
use crate::error::SimError;
use crate::tensor::{contract, svd_split, ComplexTensor};

/// Relative singular-value floor used when a split must stay exact:
/// only values that vanish at working precision are dropped.
pub const EXACT_SPLIT_TOL: f64 = 1e-14;

/// Cap on dense expansions requested through [`Mps::to_dense_vector`].
pub const DENSE_EXPANSION_CAP: usize = 1 << 24;

/// A chain of rank-3 tensors with extents `(χ_{i-1}, d_i, χ_i)`.
///
/// Boundary bonds have extent 1. The trailing `num_loop_sites` sites hold
/// the final loop modes; the leading sites are emitted time bins.
#[derive(Debug, Clone)]
pub struct Mps {
    sites: Vec<ComplexTensor>,
    num_loop_sites: usize,
}

impl Mps {
    /// Assembles an MPS from raw site tensors, checking bond consistency.
    pub fn from_sites(sites: Vec<ComplexTensor>, num_loop_sites: usize) -> Result<Self, SimError> {
        if sites.is_empty() {
            return Err(SimError::InvalidArgument("an MPS needs at least one site".into()));
        }
        if num_loop_sites > sites.len() {
            return Err(SimError::InvalidArgument(format!(
                "{num_loop_sites} loop sites exceed {} total sites",
                sites.len()
            )));
        }
        for (i, s) in sites.iter().enumerate() {
            if s.rank() != 3 {
                return Err(SimError::InvalidArgument(format!(
                    "site {i} has rank {}, expected 3",
                    s.rank()
                )));
            }
        }
        if sites[0].shape()[0] != 1 || sites[sites.len() - 1].shape()[2] != 1 {
            return Err(SimError::InvalidArgument(
                "boundary bonds must have extent 1".into(),
            ));
        }
        for i in 0..sites.len() - 1 {
            if sites[i].shape()[2] != sites[i + 1].shape()[0] {
                return Err(SimError::InvalidArgument(format!(
                    "bond mismatch between sites {i} and {}: {} vs {}",
                    i + 1,
                    sites[i].shape()[2],
                    sites[i + 1].shape()[0]
                )));
            }
        }
        Ok(Self {
            sites,
            num_loop_sites,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn num_loop_sites(&self) -> usize {
        self.num_loop_sites
    }

    pub fn num_bin_sites(&self) -> usize {
        self.sites.len() - self.num_loop_sites
    }

    pub fn site(&self, i: usize) -> &ComplexTensor {
        &self.sites[i]
    }

    pub fn phys_dim(&self, i: usize) -> usize {
        self.sites[i].shape()[1]
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.shape()[1]).collect()
    }

    /// Internal bond extents; entry `b` sits between sites `b` and `b+1`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1]
            .iter()
            .map(|s| s.shape()[2])
            .collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn norm_squared(&self) -> f64 {
        let mut env = unit_env();
        for s in &self.sites {
            env = transfer_identity(&env, s);
        }
        env[(0, 0)].re
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().max(0.0).sqrt()
    }

    /// `<other|self>`.
    pub fn overlap(&self, other: &Mps) -> Result<C64, SimError> {
        if self.num_sites() != other.num_sites() || self.phys_dims() != other.phys_dims() {
            return Err(SimError::LengthMismatch {
                expected: self.num_sites(),
                got: other.num_sites(),
            });
        }
        let mut env = unit_env();
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let d = a.shape()[1];
            let mut next = DMatrix::<C64>::zeros(a.shape()[2], b.shape()[2]);
            for n in 0..d {
                let sa = site_slice(a, n);
                let sb = site_slice(b, n);
                next += sa.transpose() * &env * sb.conjugate();
            }
            env = next;
        }
        Ok(env[(0, 0)])
    }

    /// `|<other|self>| / (‖self‖·‖other‖)`.
    pub fn fidelity(&self, other: &Mps) -> Result<f64, SimError> {
        let na = self.norm();
        let nb = other.norm();
        if na <= 0.0 || nb <= 0.0 {
            return Err(SimError::ZeroNorm);
        }
        Ok(self.overlap(other)?.norm() / (na * nb))
    }

    /// Fixes `site` to a measured occupation; the site keeps its place in
    /// the chain with physical extent 1, so norms and environments of the
    /// projected (unnormalized) state keep working unchanged.
    pub fn project_site(&self, site: usize, outcome: usize) -> Result<Mps, SimError> {
        if site >= self.num_sites() {
            return Err(SimError::InvalidSite {
                site,
                num_sites: self.num_sites(),
            });
        }
        let t = &self.sites[site];
        let (chi_l, d, chi_r) = (t.shape()[0], t.shape()[1], t.shape()[2]);
        if outcome >= d {
            return Err(SimError::InvalidArgument(format!(
                "outcome {outcome} out of range 0..{d}"
            )));
        }
        let sliced = ComplexTensor::from_fn(vec![chi_l, 1, chi_r], |ix| {
            t.get(&[ix[0], outcome, ix[2]])
        })?;
        let mut sites = self.sites.clone();
        sites[site] = sliced;
        Ok(Mps {
            sites,
            num_loop_sites: self.num_loop_sites,
        })
    }

    /// Contracts the chain into a dense state vector; site 0 is the most
    /// significant factor of the flat index.
    pub fn to_dense_vector(&self) -> Result<Vec<C64>, SimError> {
        let mut total: usize = 1;
        for s in &self.sites {
            total = total.saturating_mul(s.shape()[1]);
        }
        if total > DENSE_EXPANSION_CAP {
            return Err(SimError::MemoryCap {
                needed: total,
                cap: DENSE_EXPANSION_CAP,
            });
        }
        // acc: (phys so far, right bond)
        let first = &self.sites[0];
        let mut acc = first.reshape(vec![first.shape()[1], first.shape()[2]])?;
        for s in &self.sites[1..] {
            let merged = contract(&acc, s, &[(1, 0)])?; // (D, d, χ)
            acc = merged.reshape(vec![merged.shape()[0] * merged.shape()[1], merged.shape()[2]])?;
        }
        Ok(acc.into_data())
    }
}

/// Builds the exact single-loop state: `N` bin sites followed by one loop
/// site, all internal bonds of extent `d`, unit norm.
pub fn build_single_loop(spec: &ArchitectureSpec) -> Result<Mps, SimError> {
    spec.validate()?;
    if spec.kind != ArchKind::SingleLoop {
        return Err(SimError::InvalidSpec(format!(
            "build_single_loop got kind {}",
            spec.kind.as_str()
        )));
    }
    let d = spec.fock_dim;
    let coupler = crate::fock::beam_splitter(spec.couplers[0], spec.fock())?;
    let u = coupler.tensor(); // (o, p, q, r)

    let mut sites = Vec::with_capacity(spec.num_time_bins + 1);
    for (i, &n_in) in spec.photons_per_bin.iter().enumerate() {
        let chi_l = if i == 0 { 1 } else { d };
        // Left bond = loop input q, physical = bin output p, right bond =
        // loop output o. The first step sees the loop in vacuum.
        let site = ComplexTensor::from_fn(vec![chi_l, d, d], |ix| {
            let q = if i == 0 { 0 } else { ix[0] };
            u.get(&[ix[2], ix[1], q, n_in])
        })?;
        sites.push(site);
    }
    // The surviving loop mode becomes an explicit physical site.
    let loop_site = ComplexTensor::from_fn(vec![d, d, 1], |ix| {
        if ix[0] == ix[1] {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })?;
    sites.push(loop_site);
    Mps::from_sites(sites, 1)
}

/// Builds tower and chain states by treating the `L` loop modes as one
/// ancilla register of dimension `d^L`, splitting off one bin site per
/// step with an SVD truncated to the spec's `(max_bond, svd_tol)`. The
/// final register is unzipped into `L` loop sites, loop 1 first.
pub fn build_sequential(spec: &ArchitectureSpec) -> Result<Mps, SimError> {
    spec.validate()?;
    if !matches!(spec.kind, ArchKind::LoopTower | ArchKind::LoopChain) {
        return Err(SimError::InvalidSpec(format!(
            "build_sequential got kind {}",
            spec.kind.as_str()
        )));
    }
    let d = spec.fock_dim;
    let num_loops = spec.num_loops;
    let register_entries = d.saturating_pow(num_loops as u32 + 1);
    if register_entries > crate::arch::STEP_UNITARY_ENTRY_CAP {
        return Err(SimError::MemoryCap {
            needed: register_entries,
            cap: crate::arch::STEP_UNITARY_ENTRY_CAP,
        });
    }
    let register_dim = d.pow(num_loops as u32);

    let step = spec.step_unitary()?;
    let step4 = step.reshape(vec![register_dim, d, register_dim, d])?;

    // Live ancilla register starts in the vacuum.
    let mut tail = ComplexTensor::from_fn(vec![1, register_dim], |ix| {
        if ix[1] == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })?;

    let mut sites = Vec::with_capacity(spec.num_time_bins + num_loops);
    for &n_in in &spec.photons_per_bin {
        // Step unitary with the bin input fixed to its Fock state.
        let applied = ComplexTensor::from_fn(vec![register_dim, d, register_dim], |ix| {
            step4.get(&[ix[0], ix[1], ix[2], n_in])
        })?;
        let merged = contract(&tail, &applied, &[(1, 2)])?; // (χ, reg_out, bin_out)
        let blob = merged.permute(&[0, 2, 1])?; // (χ, bin, reg)
        let svd = svd_split(&blob, &[0, 1], spec.max_bond, spec.svd_tol)?;
        sites.push(svd.left_isometry);
        tail = scale_leading_axis(&svd.right_isometry, &svd.singular_values);
    }

    // Unzip the register into per-loop physical sites, most significant
    // digit (loop 1) first.
    let mut remaining = register_dim;
    for _ in 0..num_loops - 1 {
        remaining /= d;
        let chi = tail.shape()[0];
        let blob = tail.reshape(vec![chi, d, remaining])?;
        let svd = svd_split(&blob, &[0, 1], spec.max_bond, spec.svd_tol)?;
        sites.push(svd.left_isometry);
        tail = scale_leading_axis(&svd.right_isometry, &svd.singular_values);
    }
    let chi = tail.shape()[0];
    sites.push(tail.reshape(vec![chi, d, 1])?);

    Mps::from_sites(sites, num_loops)
}

/// Dispatches to the right builder for the spec's kind.
pub fn build(spec: &ArchitectureSpec) -> Result<Mps, SimError> {
    match spec.kind {
        ArchKind::SingleLoop => build_single_loop(spec),
        ArchKind::LoopTower | ArchKind::LoopChain => build_sequential(spec),
        ArchKind::TritterCylinder => Err(SimError::InvalidSpec(
            "tritter_cylinder supports graph analysis only".into(),
        )),
    }
}

/// Schmidt-gauge form: per-site basis tensors `Γ` and per-bond Schmidt
/// vectors `λ`, each normalized to unit sum of squares. Bond `b` sits
/// between sites `b` and `b+1`; its `λ` holds the Schmidt coefficients of
/// the bipartition at that bond.
#[derive(Debug, Clone)]
pub struct CanonicalMps {
    gammas: Vec<ComplexTensor>,
    lambdas: Vec<Vec<f64>>,
    num_loop_sites: usize,
}

impl CanonicalMps {
    pub fn num_sites(&self) -> usize {
        self.gammas.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.lambdas.len()
    }

    pub fn num_loop_sites(&self) -> usize {
        self.num_loop_sites
    }

    pub fn gamma(&self, i: usize) -> &ComplexTensor {
        &self.gammas[i]
    }

    pub fn lambda(&self, bond: usize) -> Result<&[f64], SimError> {
        self.lambdas
            .get(bond)
            .map(|v| v.as_slice())
            .ok_or(SimError::InvalidBond {
                bond,
                num_bonds: self.lambdas.len(),
            })
    }

    /// Reassembles an ordinary (normalized) MPS with right-orthonormal
    /// sites `Γ_i · λ_i`.
    pub fn to_mps(&self) -> Mps {
        let sites: Vec<ComplexTensor> = self
            .gammas
            .iter()
            .enumerate()
            .map(|(i, g)| {
                if i < self.lambdas.len() {
                    scale_trailing_axis(g, &self.lambdas[i])
                } else {
                    g.clone()
                }
            })
            .collect();
        Mps {
            sites,
            num_loop_sites: self.num_loop_sites,
        }
    }
}

/// Rewrites `m` in Schmidt gauge. The result is normalized; the global
/// phase of the state is preserved.
pub fn canonicalize(m: &Mps) -> Result<CanonicalMps, SimError> {
    let n_sites = m.num_sites();
    let norm = m.norm();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(SimError::ZeroNorm);
    }

    // Left-to-right sweep into left-orthonormal tensors.
    let mut left = Vec::with_capacity(n_sites);
    let mut carry = ComplexTensor::identity(1)?;
    for site in &m.sites {
        let t = contract(&carry, site, &[(1, 0)])?; // (c, d, χr)
        let svd = svd_split(&t, &[0, 1], usize::MAX, EXACT_SPLIT_TOL)?;
        left.push(svd.left_isometry);
        carry = scale_leading_axis(&svd.right_isometry, &svd.singular_values);
    }
    // carry is 1x1 and holds norm·phase; keep the phase, drop the norm.
    let scalar = carry.get(&[0, 0]);
    let phase = if scalar.norm() > 0.0 {
        scalar / scalar.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let last = left.pop().expect("at least one site").scale(phase);
    left.push(last);

    // Right-to-left sweep: extract Schmidt vectors per bond.
    let mut bs: Vec<Option<ComplexTensor>> = vec![None; n_sites];
    let mut lambdas: Vec<Vec<f64>> = vec![Vec::new(); n_sites.saturating_sub(1)];
    let mut carry = ComplexTensor::identity(1)?;
    for i in (0..n_sites).rev() {
        let t = contract(&left[i], &carry, &[(2, 0)])?; // (χl, d, c)
        if i == 0 {
            bs[0] = Some(t);
            break;
        }
        let svd = svd_split(&t, &[0], usize::MAX, EXACT_SPLIT_TOL)?;
        bs[i] = Some(svd.right_isometry); // (k, d, c), right-orthonormal
        let total: f64 = svd.singular_values.iter().map(|s| s * s).sum::<f64>().sqrt();
        lambdas[i - 1] = svd.singular_values.iter().map(|s| s / total).collect();
        carry = scale_trailing_axis(&svd.left_isometry, &svd.singular_values); // (χl, k)
    }

    // Γ_i = B_i with the right bond divided out; values below the split
    // floor were already discarded, so the division is safe.
    let mut gammas = Vec::with_capacity(n_sites);
    for (i, b) in bs.into_iter().enumerate() {
        let b = b.expect("filled by sweep");
        if i < lambdas.len() {
            let inv: Vec<f64> = lambdas[i].iter().map(|&l| 1.0 / l).collect();
            gammas.push(scale_trailing_axis(&b, &inv));
        } else {
            gammas.push(b);
        }
    }

    Ok(CanonicalMps {
        gammas,
        lambdas,
        num_loop_sites: m.num_loop_sites,
    })
}

// ---------------------------------------------------------------------------
// Environment machinery shared with the observable and sampling code.

/// Slice of a rank-3 site tensor at physical value `n`, as a `χl × χr`
/// matrix.
pub(crate) fn site_slice(site: &ComplexTensor, n: usize) -> DMatrix<C64> {
    let (chi_l, chi_r) = (site.shape()[0], site.shape()[2]);
    DMatrix::from_fn(chi_l, chi_r, |a, b| site.get(&[a, n, b]))
}

pub(crate) fn unit_env() -> DMatrix<C64> {
    DMatrix::from_element(1, 1, C64::new(1.0, 0.0))
}

/// One left-to-right transfer step summing over the physical index.
pub(crate) fn transfer_identity(env: &DMatrix<C64>, site: &ComplexTensor) -> DMatrix<C64> {
    transfer_weighted(env, site, |_| 1.0)
}

/// Left-to-right transfer with a diagonal weight on the physical index.
pub(crate) fn transfer_weighted(
    env: &DMatrix<C64>,
    site: &ComplexTensor,
    weight: impl Fn(usize) -> f64,
) -> DMatrix<C64> {
    let d = site.shape()[1];
    let mut next = DMatrix::<C64>::zeros(site.shape()[2], site.shape()[2]);
    for n in 0..d {
        let w = weight(n);
        if w == 0.0 {
            continue;
        }
        let s = site_slice(site, n);
        next += (s.transpose() * env * s.conjugate()).scale(w);
    }
    next
}

/// Left transfer keeping only one physical value.
pub(crate) fn transfer_projected(
    env: &DMatrix<C64>,
    site: &ComplexTensor,
    n: usize,
) -> DMatrix<C64> {
    let s = site_slice(site, n);
    s.transpose() * env * s.conjugate()
}

/// Right environments `R[i]` for `i = 0..=num_sites`: `R[num_sites]` is
/// the unit and `R[i]` sums sites `i..` over their physical indices.
pub(crate) fn right_environments(m: &Mps) -> Vec<DMatrix<C64>> {
    let n = m.num_sites();
    let mut envs = vec![unit_env(); n + 1];
    for i in (0..n).rev() {
        let site = &m.sites[i];
        let d = site.shape()[1];
        let mut acc = DMatrix::<C64>::zeros(site.shape()[0], site.shape()[0]);
        for nn in 0..d {
            let s = site_slice(site, nn);
            acc += &s * &envs[i + 1] * s.adjoint();
        }
        envs[i] = acc;
    }
    envs
}

/// Pairs a left environment with a right environment into a scalar.
pub(crate) fn env_dot(left: &DMatrix<C64>, right: &DMatrix<C64>) -> C64 {
    debug_assert_eq!(left.shape(), right.shape());
    left.iter().zip(right.iter()).map(|(a, b)| a * b).sum()
}

fn scale_leading_axis(t: &ComplexTensor, factors: &[f64]) -> ComplexTensor {
    debug_assert_eq!(t.shape()[0], factors.len());
    let inner: usize = t.shape()[1..].iter().product();
    let data: Vec<C64> = t
        .data()
        .iter()
        .enumerate()
        .map(|(k, z)| z * C64::new(factors[k / inner], 0.0))
        .collect();
    ComplexTensor::new(t.shape().to_vec(), data).expect("same shape")
}

fn scale_trailing_axis(t: &ComplexTensor, factors: &[f64]) -> ComplexTensor {
    let last = *t.shape().last().expect("nonempty shape");
    debug_assert_eq!(last, factors.len());
    let data: Vec<C64> = t
        .data()
        .iter()
        .enumerate()
        .map(|(k, z)| z * C64::new(factors[k % last], 0.0))
        .collect();
    ComplexTensor::new(t.shape().to_vec(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::CouplerSpec;
    use crate::oracle;

    const PI: f64 = std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Reorders an MPS dense vector (bins..., loops...) into the oracle's
    /// site order (loops..., bins...).
    fn mps_dense_in_oracle_order(m: &Mps) -> Vec<C64> {
        let dims = m.phys_dims();
        let v = m.to_dense_vector().unwrap();
        let t = ComplexTensor::new(dims.clone(), v).unwrap();
        let bins = m.num_bin_sites();
        let loops = m.num_loop_sites();
        let mut perm: Vec<usize> = (bins..bins + loops).collect();
        perm.extend(0..bins);
        t.permute(&perm).unwrap().into_data()
    }

    #[test]
    fn single_loop_one_photon_balanced_split() {
        let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 1, 2);
        let m = build_single_loop(&spec).unwrap();
        assert_eq!(m.num_sites(), 2);
        let v = m.to_dense_vector().unwrap();
        // Sites (bin, loop): |bin=1, loop=0> and |bin=0, loop=1>.
        let r = (0.5f64).sqrt();
        let amp_bin1 = v[2]; // bin=1, loop=0
        let amp_loop1 = v[1]; // bin=0, loop=1
        assert!((amp_bin1.norm() - r).abs() < 1e-12);
        assert!((amp_loop1.norm() - r).abs() < 1e-12);
        assert!((m.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_input_gives_product_vacuum() {
        let spec = ArchitectureSpec::uniform_single_loop(0.3 * PI, 0, 2, 3);
        let m = build_single_loop(&spec).unwrap();
        let v = m.to_dense_vector().unwrap();
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(v[1..].iter().all(|z| z.norm() < 1e-12));
        let canon = canonicalize(&m).unwrap();
        for b in 0..canon.num_bonds() {
            let lam = canon.lambda(b).unwrap();
            assert_eq!(lam.len(), 1);
            assert!((lam[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_loop_matches_dense_oracle() {
        let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 3, 4);
        let m = build_single_loop(&spec).unwrap();
        let dense = oracle::evolve_dense(&spec).unwrap();
        let v = mps_dense_in_oracle_order(&m);
        let max_diff = v
            .iter()
            .zip(dense.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(max_diff < 1e-10, "max amplitude deviation {max_diff}");
    }

    #[test]
    fn single_loop_bonds_have_extent_d() {
        let spec = ArchitectureSpec::uniform_single_loop(0.1 * PI, 1, 5, 3);
        let m = build_single_loop(&spec).unwrap();
        assert_eq!(m.bond_dims(), vec![3, 3, 3, 3, 3]);
        assert!((m.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sequential_with_one_loop_degenerates_to_single_loop() {
        let photons = vec![1, 0, 1];
        let tower = ArchitectureSpec::loop_tower(
            vec![CouplerSpec::rotation(0.3)],
            photons.clone(),
            3,
            9,
            1e-13,
        );
        let single = ArchitectureSpec::single_loop(CouplerSpec::rotation(0.3), photons, 3);
        let a = build_sequential(&tower).unwrap();
        let b = build_single_loop(&single).unwrap();
        let f = a.fidelity(&b).unwrap();
        assert!(f > 1.0 - 1e-10, "fidelity {f}");
    }

    #[test]
    fn tower_with_decoupled_second_loop_matches_single_loop_marginals() {
        let tower = ArchitectureSpec::loop_tower(
            vec![CouplerSpec::rotation(0.35), CouplerSpec::rotation(0.0)],
            vec![1, 1, 1],
            3,
            27,
            0.0,
        );
        let single = ArchitectureSpec::uniform_single_loop(0.35, 1, 3, 3);
        let mt = build_sequential(&tower).unwrap();
        let ms = build_single_loop(&single).unwrap();
        for site in 0..3 {
            let et = crate::observables::expectation_number(&mt, site).unwrap();
            let es = crate::observables::expectation_number(&ms, site).unwrap();
            assert!((et - es).abs() < 1e-10, "site {site}: {et} vs {es}");
        }
    }

    #[test]
    fn chain_matches_dense_oracle() {
        let spec = ArchitectureSpec::loop_chain(
            vec![CouplerSpec::rotation(0.3), CouplerSpec::rotation(0.22 * PI)],
            vec![1, 1, 1],
            3,
            64,
            0.0,
        );
        let m = build_sequential(&spec).unwrap();
        let dense = oracle::evolve_dense(&spec).unwrap();
        let v = mps_dense_in_oracle_order(&m);
        let max_diff = v
            .iter()
            .zip(dense.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(max_diff < 1e-8, "max amplitude deviation {max_diff}");
        assert_eq!(m.num_loop_sites(), 2);
        assert_eq!(m.num_sites(), 5);
    }

    #[test]
    fn canonical_form_of_product_state_has_unit_lambdas() {
        let spec = ArchitectureSpec::uniform_single_loop(0.2, 0, 3, 2);
        let canon = canonicalize(&build_single_loop(&spec).unwrap()).unwrap();
        for b in 0..canon.num_bonds() {
            assert_eq!(canon.lambda(b).unwrap(), &[1.0]);
        }
    }

    #[test]
    fn canonical_form_of_bell_like_pair() {
        // (|00> + |11>)/sqrt(2) as a 2-site MPS.
        let site0 = ComplexTensor::from_fn(vec![1, 2, 2], |ix| {
            if ix[1] == ix[2] {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        let site1 = ComplexTensor::from_fn(vec![2, 2, 1], |ix| {
            if ix[0] == ix[1] {
                c((0.5f64).sqrt(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        let m = Mps::from_sites(vec![site0, site1], 0).unwrap();
        let canon = canonicalize(&m).unwrap();
        let lam = canon.lambda(0).unwrap();
        assert_eq!(lam.len(), 2);
        let r = (0.5f64).sqrt();
        assert!((lam[0] - r).abs() < 1e-12);
        assert!((lam[1] - r).abs() < 1e-12);
    }

    fn pseudo_random_mps(num_sites: usize, d: usize, chi: usize, seed: u64) -> Mps {
        let mut state = seed.wrapping_mul(0x2545f4914f6cdd1d).wrapping_add(7);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut sites = Vec::new();
        for i in 0..num_sites {
            let chi_l = if i == 0 { 1 } else { chi };
            let chi_r = if i == num_sites - 1 { 1 } else { chi };
            sites.push(
                ComplexTensor::from_fn(vec![chi_l, d, chi_r], |_| c(next(), next())).unwrap(),
            );
        }
        Mps::from_sites(sites, 0).unwrap()
    }

    #[test]
    fn canonicalize_preserves_the_state() {
        let m = pseudo_random_mps(5, 3, 4, 11);
        let canon = canonicalize(&m).unwrap();
        let back = canon.to_mps();
        let f = m.fidelity(&back).unwrap();
        assert!(f > 1.0 - 1e-10, "fidelity {f}");
        assert!((back.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn canonical_lambdas_are_normalized_and_match_dense_svd() {
        let m = pseudo_random_mps(5, 2, 3, 23);
        let canon = canonicalize(&m).unwrap();
        let dense = m.to_dense_vector().unwrap();
        let dims = m.phys_dims();
        let t = ComplexTensor::new(dims.clone(), dense).unwrap();
        let norm = m.norm();
        for bond in 0..canon.num_bonds() {
            let lam = canon.lambda(bond).unwrap();
            let sumsq: f64 = lam.iter().map(|x| x * x).sum();
            assert!((sumsq - 1.0).abs() < 1e-10);
            assert!(lam.windows(2).all(|w| w[0] >= w[1] - 1e-12), "descending");

            // Dense-state Schmidt values across the same cut.
            let left_axes: Vec<usize> = (0..=bond).collect();
            let svd = svd_split(&t, &left_axes, usize::MAX, 0.0).unwrap();
            let reference: Vec<f64> = svd
                .singular_values
                .iter()
                .map(|s| s / norm)
                .filter(|&s| s > 1e-12)
                .collect();
            assert_eq!(lam.len(), reference.len(), "bond {bond} rank");
            for (a, b) in lam.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-10, "bond {bond}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn canonical_gauge_is_orthonormal_both_ways() {
        let m = pseudo_random_mps(4, 3, 5, 31);
        let canon = canonicalize(&m).unwrap();
        let n_sites = canon.num_sites();
        for i in 0..n_sites {
            let g = canon.gamma(i);
            let d = g.shape()[1];
            // Right-orthonormality of Γ_i λ_i.
            let b = if i < canon.num_bonds() {
                scale_trailing_axis(g, canon.lambda(i).unwrap())
            } else {
                g.clone()
            };
            let mut acc = DMatrix::<C64>::zeros(b.shape()[0], b.shape()[0]);
            for n in 0..d {
                let s = site_slice(&b, n);
                acc += &s * s.adjoint();
            }
            let eye = DMatrix::<C64>::identity(b.shape()[0], b.shape()[0]);
            assert!((acc - eye).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);

            // Left-orthonormality of λ_{i-1} Γ_i.
            let a = if i > 0 {
                scale_leading_axis(g, canon.lambda(i - 1).unwrap())
            } else {
                g.clone()
            };
            let mut acc = DMatrix::<C64>::zeros(a.shape()[2], a.shape()[2]);
            for n in 0..d {
                let s = site_slice(&a, n);
                acc += s.adjoint() * s;
            }
            let eye = DMatrix::<C64>::identity(a.shape()[2], a.shape()[2]);
            assert!((acc - eye).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
        }
    }

    #[test]
    fn canonicalize_rejects_zero_state() {
        let site = ComplexTensor::zeros(vec![1, 2, 1]).unwrap();
        let m = Mps::from_sites(vec![site], 0).unwrap();
        assert!(matches!(canonicalize(&m), Err(SimError::ZeroNorm)));
    }

    #[test]
    fn projection_norm_equals_marginal_probability() {
        let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 2, 3);
        let m = build_single_loop(&spec).unwrap();
        let p = crate::sampler::marginal_distribution(&m, 0, &[]).unwrap();
        for (n, &prob) in p.iter().enumerate() {
            let projected = m.project_site(0, n).unwrap();
            assert!(
                (projected.norm_squared() - prob).abs() < 1e-10,
                "outcome {n}"
            );
        }
    }

    #[test]
    fn truncation_during_sequential_build_respects_max_bond() {
        let spec = ArchitectureSpec::loop_tower(
            vec![CouplerSpec::rotation(0.4), CouplerSpec::rotation(0.5)],
            vec![1; 6],
            3,
            4,
            1e-10,
        );
        let m = build_sequential(&spec).unwrap();
        // Degenerate Schmidt groups may extend a bond slightly past the cap.
        assert!(m.max_bond_dim() <= 6, "bond {}", m.max_bond_dim());
    }
}
