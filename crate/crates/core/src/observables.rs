//! Entanglement, occupation, and correlation observables.
//!
//! Entropies are read off the Schmidt vectors of a [`CanonicalMps`] and are
//! always reported in bits (base-2). Occupation expectations and
//! density-density correlators are exact transfer-matrix contractions over
//! the raw [`Mps`], costing `O(N d χ³)` per sweep.

use crate::arch::{ArchKind, ArchitectureSpec};
use crate::error::SimError;
use crate::mps::{
    env_dot, right_environments, transfer_identity, transfer_weighted, CanonicalMps, Mps,
};

/// Entanglement entropy in bits across `bond` (between sites `bond` and
/// `bond + 1`): the base-2 entropy of the squared Schmidt coefficients.
pub fn entanglement_entropy(canon: &CanonicalMps, bond: usize) -> Result<f64, SimError> {
    let lambda = canon.lambda(bond)?;
    Ok(entropy_of_schmidt(lambda))
}

/// Entropy in bits of a normalized Schmidt vector.
pub(crate) fn entropy_of_schmidt(lambda: &[f64]) -> f64 {
    let mut e = 0.0;
    for &l in lambda {
        let p = l * l;
        if p > 0.0 {
            e -= p * p.log2();
        }
    }
    e.max(0.0)
}

/// Entropy at every bond, left to right.
pub fn entropy_profile(canon: &CanonicalMps) -> Vec<f64> {
    (0..canon.num_bonds())
        .map(|b| entanglement_entropy(canon, b).expect("bond in range"))
        .collect()
}

/// The Schmidt coefficients across `bond`, descending, unit sum of squares.
pub fn schmidt_spectrum(canon: &CanonicalMps, bond: usize) -> Result<Vec<f64>, SimError> {
    Ok(canon.lambda(bond)?.to_vec())
}

/// Entropy ceiling `g(n) = (1+n)·log2(1+n) - n·log2(n)` for a bosonic mode
/// of mean occupation `n`; `g(0) = 0` by the `n·log n → 0` limit.
pub fn area_law_bound(n: f64) -> Result<f64, SimError> {
    if !n.is_finite() || n < 0.0 {
        return Err(SimError::InvalidArgument(format!(
            "mean occupation must be nonnegative, got {n}"
        )));
    }
    if n == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + n) * (1.0 + n).log2() - n * n.log2())
}

/// Thermal Schmidt coefficient `λ_k = sqrt(n^k / (n+1)^{k+1})` of a mode
/// with mean occupation `n`: the maximal-entropy reference spectrum.
pub fn thermal_schmidt(n: f64, k: usize) -> f64 {
    (n.powi(k as i32) / (n + 1.0).powi(k as i32 + 1)).sqrt()
}

/// Mean photon number held by a single loop after `step` couplings, from
/// the recurrence `n(i+1) = cos²θ·n(i) + sin²θ·n_{i+1}` with `n(0) = 0`.
pub fn loop_mean_occupation(spec: &ArchitectureSpec, step: usize) -> Result<f64, SimError> {
    spec.validate()?;
    if spec.kind != ArchKind::SingleLoop {
        return Err(SimError::InvalidSpec(format!(
            "loop_mean_occupation applies to single_loop, got {}",
            spec.kind.as_str()
        )));
    }
    if step > spec.num_time_bins {
        return Err(SimError::InvalidArgument(format!(
            "step {step} exceeds {} time bins",
            spec.num_time_bins
        )));
    }
    let t = spec.couplers[0].transmission();
    let r = 1.0 - t;
    let mut n = 0.0;
    for i in 0..step {
        n = t * n + r * spec.photons_per_bin[i] as f64;
    }
    Ok(n)
}

/// `<n̂_site>` of the normalized state.
pub fn expectation_number(m: &Mps, site: usize) -> Result<f64, SimError> {
    if site >= m.num_sites() {
        return Err(SimError::InvalidSite {
            site,
            num_sites: m.num_sites(),
        });
    }
    let renvs = right_environments(m);
    let norm2 = env_dot(&crate::mps::unit_env(), &renvs[0]).re;
    if norm2 <= 0.0 {
        return Err(SimError::ZeroNorm);
    }
    let mut env = crate::mps::unit_env();
    for i in 0..site {
        env = transfer_identity(&env, m.site(i));
    }
    env = transfer_weighted(&env, m.site(site), |n| n as f64);
    let value = env_dot(&env, &renvs[site + 1]).re;
    Ok((value / norm2).max(0.0))
}

/// `<n̂_i>` for every site in one pass over the chain.
pub fn occupation_profile(m: &Mps) -> Result<Vec<f64>, SimError> {
    let renvs = right_environments(m);
    let norm2 = env_dot(&crate::mps::unit_env(), &renvs[0]).re;
    if norm2 <= 0.0 {
        return Err(SimError::ZeroNorm);
    }
    let mut profile = Vec::with_capacity(m.num_sites());
    let mut env = crate::mps::unit_env();
    for i in 0..m.num_sites() {
        let weighted = transfer_weighted(&env, m.site(i), |n| n as f64);
        profile.push((env_dot(&weighted, &renvs[i + 1]).re / norm2).max(0.0));
        env = transfer_identity(&env, m.site(i));
    }
    Ok(profile)
}

/// Density-density correlator between bins `site` and `site + separation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPoint {
    /// `<n̂_i n̂_{i+x}>`.
    pub raw: f64,
    /// `C(x) = |<n̂_i n̂_{i+x}> - <n̂_i><n̂_{i+x}>|`.
    pub correlation: f64,
    /// `g²(x) = <n̂_i n̂_{i+x}> / <n̂_i>²`, absent when `<n̂_i>` vanishes.
    pub g2: Option<f64>,
}

/// Exact two-point functions on the output bins. Both sites must be bin
/// sites; `separation = 0` gives the on-site moment `<n̂²>`.
pub fn two_point(m: &Mps, site: usize, separation: usize) -> Result<TwoPoint, SimError> {
    let bins = m.num_bin_sites();
    let far = site + separation;
    if site >= bins || far >= bins {
        return Err(SimError::InvalidSite {
            site: far.max(site),
            num_sites: bins,
        });
    }
    let renvs = right_environments(m);
    let norm2 = env_dot(&crate::mps::unit_env(), &renvs[0]).re;
    if norm2 <= 0.0 {
        return Err(SimError::ZeroNorm);
    }

    let mut env = crate::mps::unit_env();
    for i in 0..site {
        env = transfer_identity(&env, m.site(i));
    }
    let raw = if separation == 0 {
        let env = transfer_weighted(&env, m.site(site), |n| (n * n) as f64);
        env_dot(&env, &renvs[site + 1]).re / norm2
    } else {
        let mut env = transfer_weighted(&env, m.site(site), |n| n as f64);
        for i in site + 1..far {
            env = transfer_identity(&env, m.site(i));
        }
        env = transfer_weighted(&env, m.site(far), |n| n as f64);
        env_dot(&env, &renvs[far + 1]).re / norm2
    };

    let mean_near = expectation_number(m, site)?;
    let mean_far = expectation_number(m, far)?;
    let correlation = (raw - mean_near * mean_far).abs();
    let g2 = if mean_near > 0.0 {
        Some(raw / (mean_near * mean_near))
    } else {
        None
    };
    Ok(TwoPoint {
        raw,
        correlation,
        g2,
    })
}

/// Two-point functions at a fixed anchor for every separation
/// `1..=max_separation`, sharing one environment sweep across all of them
/// instead of one per pair.
pub fn correlation_series(
    m: &Mps,
    anchor: usize,
    max_separation: usize,
) -> Result<Vec<(usize, TwoPoint)>, SimError> {
    let bins = m.num_bin_sites();
    if anchor >= bins || anchor + max_separation >= bins {
        return Err(SimError::InvalidSite {
            site: anchor + max_separation,
            num_sites: bins,
        });
    }
    if max_separation == 0 {
        return Ok(Vec::new());
    }
    let renvs = right_environments(m);
    let norm2 = env_dot(&crate::mps::unit_env(), &renvs[0]).re;
    if norm2 <= 0.0 {
        return Err(SimError::ZeroNorm);
    }
    let means = occupation_profile(m)?;

    let mut env = crate::mps::unit_env();
    for i in 0..anchor {
        env = transfer_identity(&env, m.site(i));
    }
    let mut env = transfer_weighted(&env, m.site(anchor), |n| n as f64);
    let mut series = Vec::with_capacity(max_separation);
    for x in 1..=max_separation {
        let site = anchor + x;
        let weighted = transfer_weighted(&env, m.site(site), |n| n as f64);
        let raw = (env_dot(&weighted, &renvs[site + 1]).re / norm2).max(0.0);
        let correlation = (raw - means[anchor] * means[site]).abs();
        let g2 = if means[anchor] > 0.0 {
            Some(raw / (means[anchor] * means[anchor]))
        } else {
            None
        };
        series.push((
            x,
            TwoPoint {
                raw,
                correlation,
                g2,
            },
        ));
        env = transfer_identity(&env, m.site(site));
    }
    Ok(series)
}

/// Least-squares exponential fit through correlation samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationFit {
    /// Magnitude of the fitted log-slope: the inverse correlation length.
    pub zeta_inv: f64,
    /// Fitted amplitude at `x = 0`.
    pub prefactor: f64,
    /// Root-mean-square residual of `ln C` around the fitted line.
    pub residual: f64,
}

/// Fits `C(x) ≈ C₀ · exp(-x/ζ)` by linear least squares on `(x, ln C)`.
/// Points with nonpositive or nonfinite `C` are excluded; at least three
/// usable points are required.
pub fn fit_correlation_length(points: &[(f64, f64)]) -> Result<CorrelationFit, SimError> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, c)| x.is_finite() && c.is_finite() && *c > 0.0)
        .map(|&(x, c)| (x, c.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(SimError::TooFewPoints {
            needed: 3,
            got: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|p| p.0).sum();
    let sy: f64 = usable.iter().map(|p| p.1).sum();
    let sxx: f64 = usable.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = usable.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < f64::EPSILON * n * sxx.max(1.0) {
        return Err(SimError::InvalidArgument(
            "separations are all identical; cannot fit a slope".into(),
        ));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let residual = (usable
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(CorrelationFit {
        zeta_inv: slope.abs(),
        prefactor: intercept.exp(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{build_single_loop, canonicalize};
    use crate::oracle;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn entropy_of_balanced_pair_is_one_bit() {
        let r = (0.5f64).sqrt();
        assert!((entropy_of_schmidt(&[r, r]) - 1.0).abs() < 1e-12);
        assert!(entropy_of_schmidt(&[1.0]).abs() < 1e-15);
    }

    #[test]
    fn single_loop_one_photon_entropy_is_binary_entropy() {
        // theta = pi/4 splits the photon evenly: one bit across the cut.
        let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 1, 2);
        let canon = canonicalize(&build_single_loop(&spec).unwrap()).unwrap();
        let e = entanglement_entropy(&canon, 0).unwrap();
        assert!((e - 1.0).abs() < 1e-10);
    }

    #[test]
    fn area_law_bound_reference_values() {
        assert_eq!(area_law_bound(0.0).unwrap(), 0.0);
        assert!((area_law_bound(1.0).unwrap() - 2.0).abs() < 1e-14);
        let g4 = 5.0 * 5.0f64.log2() - 8.0;
        assert!((area_law_bound(4.0).unwrap() - g4).abs() < 1e-12);
        assert!(area_law_bound(-0.5).is_err());
    }

    #[test]
    fn loop_occupation_recurrence() {
        let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 10, 3);
        assert_eq!(loop_mean_occupation(&spec, 0).unwrap(), 0.0);
        assert!((loop_mean_occupation(&spec, 1).unwrap() - 0.5).abs() < 1e-14);
        // Constant input drives the loop to the fixed point n.
        let long = ArchitectureSpec::uniform_single_loop(0.3, 2, 400, 4);
        let n_final = loop_mean_occupation(&long, 400).unwrap();
        assert!((n_final - 2.0).abs() < 1e-9);
        assert!(loop_mean_occupation(&long, 401).is_err());
    }

    #[test]
    fn occupation_vacuum_and_conservation() {
        let vac = ArchitectureSpec::uniform_single_loop(0.3, 0, 3, 2);
        let m = build_single_loop(&vac).unwrap();
        for site in 0..m.num_sites() {
            assert!(expectation_number(&m, site).unwrap() < 1e-12);
        }

        let spec = ArchitectureSpec::uniform_single_loop(0.2 * PI, 1, 4, 4);
        let m = build_single_loop(&spec).unwrap();
        let total: f64 = (0..m.num_sites())
            .map(|s| expectation_number(&m, s).unwrap())
            .sum();
        assert!((total - 4.0).abs() < 1e-9, "total occupation {total}");
    }

    #[test]
    fn output_bin_occupation_one_step() {
        let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 1, 2);
        let m = build_single_loop(&spec).unwrap();
        let n_bin = expectation_number(&m, 0).unwrap();
        assert!((n_bin - 0.5).abs() < 1e-12);
    }

    #[test]
    fn loop_occupation_matches_mps_bookkeeping() {
        // Photons not yet emitted sit in the loop: n·i − Σ_{j≤i} <n̂_j>.
        // With total photons ≤ d − 1 the truncation is exact.
        let spec = ArchitectureSpec::uniform_single_loop(0.3, 1, 4, 5);
        let m = build_single_loop(&spec).unwrap();
        for i in 1..=4usize {
            let emitted: f64 = (0..i)
                .map(|s| expectation_number(&m, s).unwrap())
                .sum();
            let recurrence = loop_mean_occupation(&spec, i).unwrap();
            assert!(
                ((i as f64 - emitted) - recurrence).abs() < 1e-8,
                "step {i}"
            );
        }
    }

    #[test]
    fn two_point_vacuum_vanishes() {
        let spec = ArchitectureSpec::uniform_single_loop(0.3, 0, 4, 2);
        let m = build_single_loop(&spec).unwrap();
        let tp = two_point(&m, 0, 2).unwrap();
        assert!(tp.raw.abs() < 1e-12);
        assert!(tp.correlation < 1e-12);
        assert!(tp.g2.is_none());
    }

    #[test]
    fn two_point_matches_dense_oracle() {
        let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 4, 4);
        let m = build_single_loop(&spec).unwrap();
        let dense = oracle::evolve_dense(&spec).unwrap();
        let p = oracle::exact_distribution(&dense);
        for (i, x) in [(0usize, 1usize), (0, 3), (1, 2)] {
            let tp = two_point(&m, i, x).unwrap();
            // Dense reference: sum over outcomes of n_i * n_{i+x} * p.
            let mut want = 0.0;
            for (idx, &prob) in p.iter().enumerate() {
                let outcome = dense.outcome_of(idx);
                // Oracle site order is loops first. Bin j = site num_loops + j.
                want += (outcome[1 + i] * outcome[1 + i + x]) as f64 * prob;
            }
            assert!(
                (tp.raw - want).abs() < 1e-10,
                "raw mismatch at ({i},{x}): {} vs {want}",
                tp.raw
            );
        }
    }

    #[test]
    fn two_point_rejects_loop_sites() {
        let spec = ArchitectureSpec::uniform_single_loop(0.3, 1, 3, 3);
        let m = build_single_loop(&spec).unwrap();
        // Site 3 is the loop site; bins are 0..=2.
        assert!(two_point(&m, 2, 1).is_err());
        assert!(two_point(&m, 2, 0).is_ok());
    }

    #[test]
    fn correlation_series_matches_per_pair_calls() {
        let spec = ArchitectureSpec::uniform_single_loop(0.25 * PI, 1, 8, 4);
        let m = build_single_loop(&spec).unwrap();
        let series = correlation_series(&m, 1, 4).unwrap();
        assert_eq!(series.len(), 4);
        for &(x, tp) in &series {
            let direct = two_point(&m, 1, x).unwrap();
            assert!((tp.raw - direct.raw).abs() < 1e-12);
            assert!((tp.correlation - direct.correlation).abs() < 1e-12);
            assert!((tp.g2.unwrap() - direct.g2.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn occupation_profile_matches_per_site_calls() {
        let spec = ArchitectureSpec::uniform_single_loop(0.2 * PI, 1, 5, 3);
        let m = build_single_loop(&spec).unwrap();
        let profile = occupation_profile(&m).unwrap();
        for (site, &value) in profile.iter().enumerate() {
            let direct = expectation_number(&m, site).unwrap();
            assert!((value - direct).abs() < 1e-12, "site {site}");
        }
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let points: Vec<(f64, f64)> = (1..=8)
            .map(|x| (x as f64, 0.3 * (0.5f64).powi(x)))
            .collect();
        let fit = fit_correlation_length(&points).unwrap();
        assert!((fit.zeta_inv - 2f64.ln()).abs() < 1e-12);
        assert!((fit.prefactor - 0.3).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_of_constant_series_has_zero_slope() {
        let points: Vec<(f64, f64)> = (1..=5).map(|x| (x as f64, 0.7)).collect();
        let fit = fit_correlation_length(&points).unwrap();
        assert!(fit.zeta_inv.abs() < 1e-14);
    }

    #[test]
    fn fit_excludes_nonpositive_points() {
        // Zero and negative samples drop out; the rest still fit exactly.
        let mut points: Vec<(f64, f64)> = (1..=6)
            .map(|x| (x as f64, 2.0 * (-0.4 * x as f64).exp()))
            .collect();
        points.push((7.0, 0.0));
        points.push((8.0, -0.3));
        let fit = fit_correlation_length(&points).unwrap();
        assert!((fit.zeta_inv - 0.4).abs() < 1e-12);
    }

    #[test]
    fn fit_needs_three_usable_points() {
        let points = vec![(1.0, 0.5), (2.0, 0.25), (3.0, 0.0), (4.0, -1.0)];
        assert!(matches!(
            fit_correlation_length(&points),
            Err(SimError::TooFewPoints { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn thermal_schmidt_reference() {
        assert!((thermal_schmidt(1.0, 0) - (0.5f64).sqrt()).abs() < 1e-14);
        let ratio = thermal_schmidt(1.0, 3) / thermal_schmidt(1.0, 2);
        assert!((ratio - (0.5f64).sqrt()).abs() < 1e-12);
    }
}
