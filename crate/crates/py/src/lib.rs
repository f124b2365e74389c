//! Python bindings: the loop architectures, their matrix product states,
//! observables, sampling, and the graph-level treewidth analysis.
//!
//! Angles are given as multiples of pi, matching the CLI config format.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use timebin_core::arch::{ArchKind, ArchitectureSpec};
use timebin_core::fock::CouplerSpec;
use timebin_core::graph::{
    build_graph, classify_family, treewidth_upper_bound, EliminationHeuristic, FamilyPoint,
    VertexKind,
};
use timebin_core::mps::{build, canonicalize, CanonicalMps, Mps};
use timebin_core::observables;
use timebin_core::oracle;
use timebin_core::sampler;
use timebin_core::{SimError, TensorError};

const PI: f64 = std::f64::consts::PI;

/// `(separation, raw, C, g2)` rows of a correlation series.
type CorrelationRow = (usize, f64, f64, Option<f64>);

fn sim_err(e: SimError) -> PyErr {
    match &e {
        SimError::Tensor(TensorError::SvdFailed | TensorError::EigenFailed) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A loop network plus its input photon train.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Architecture {
    spec: ArchitectureSpec,
}

#[pymethods]
impl Architecture {
    /// Args:
    ///     kind: "single_loop", "loop_tower", "loop_chain", or
    ///         "tritter_cylinder".
    ///     photons_per_bin: one occupation per time bin.
    ///     fock_dim: local Hilbert-space dimension d (occupations 0..d-1).
    ///     couplers: list of (theta_over_pi, phi_over_pi) pairs.
    ///     max_bond: bond ceiling for multi-loop construction (default d).
    ///     svd_tol: relative singular-value cutoff during construction.
    #[new]
    #[pyo3(signature = (kind, photons_per_bin, fock_dim, couplers, max_bond=None, svd_tol=0.0, num_loops=None))]
    fn new(
        kind: &str,
        photons_per_bin: Vec<usize>,
        fock_dim: usize,
        couplers: Vec<(f64, f64)>,
        max_bond: Option<usize>,
        svd_tol: f64,
        num_loops: Option<usize>,
    ) -> PyResult<Self> {
        let kind = ArchKind::parse(kind)
            .ok_or_else(|| PyValueError::new_err(format!("unknown architecture kind {kind:?}")))?;
        let num_loops = num_loops.unwrap_or(match kind {
            ArchKind::SingleLoop => 1,
            ArchKind::LoopTower | ArchKind::LoopChain => couplers.len(),
            ArchKind::TritterCylinder => couplers.len() / 3,
        });
        let spec = ArchitectureSpec {
            kind,
            num_loops,
            couplers: couplers
                .iter()
                .map(|&(t, p)| CouplerSpec::new(t * PI, p * PI))
                .collect(),
            num_time_bins: photons_per_bin.len(),
            photons_per_bin,
            fock_dim,
            max_bond: max_bond.unwrap_or(fock_dim),
            svd_tol,
        };
        spec.validate().map_err(sim_err)?;
        Ok(Self { spec })
    }

    /// Builds the output state as a matrix product state.
    fn build(&self) -> PyResult<MatrixProductState> {
        Ok(MatrixProductState {
            mps: build(&self.spec).map_err(sim_err)?,
        })
    }

    /// Mean loop occupation after `step` couplings (single loop only).
    fn loop_mean_occupation(&self, step: usize) -> PyResult<f64> {
        observables::loop_mean_occupation(&self.spec, step).map_err(sim_err)
    }

    /// The tensor-network graph in the line-based edge-list format.
    fn graph_edge_list(&self) -> PyResult<String> {
        let g = build_graph(&self.spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(g.to_edge_list())
    }

    /// Greedy treewidth upper bound of the network graph.
    #[pyo3(signature = (heuristic="min_fill"))]
    fn treewidth_bound(&self, heuristic: &str) -> PyResult<usize> {
        let h = EliminationHeuristic::parse(heuristic)
            .ok_or_else(|| PyValueError::new_err(format!("unknown heuristic {heuristic:?}")))?;
        let g = build_graph(&self.spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let (w, _) = treewidth_upper_bound(&g, h).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(w)
    }

    /// Scaling class ("tractable", "quasi-polynomial", "hard") of the
    /// family obtained by scaling the time-bin count up.
    fn family_class(&self) -> PyResult<String> {
        let base = self.spec.num_time_bins.max(2);
        let mut family = Vec::new();
        for factor in [1usize, 2, 4, 8] {
            let mut scaled = self.spec.clone();
            scaled.num_time_bins = base * factor;
            scaled.photons_per_bin = vec![self.spec.max_input_occupation(); base * factor];
            let g = build_graph(&scaled).map_err(|e| PyValueError::new_err(e.to_string()))?;
            let (w, _) = treewidth_upper_bound(&g, EliminationHeuristic::MinFill)
                .map_err(|e| PyValueError::new_err(e.to_string()))?;
            let couplers = g
                .vertices()
                .iter()
                .filter(|v| v.kind == VertexKind::Coupler)
                .count();
            family.push(FamilyPoint {
                num_couplers: couplers,
                treewidth: w,
            });
        }
        let class = classify_family(&family).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(class.as_str().to_string())
    }

    /// Exact outcome distribution from the dense reference simulator,
    /// indexed row-major over (loops..., bins...).
    fn oracle_distribution(&self) -> PyResult<Vec<f64>> {
        let dense = oracle::evolve_dense(&self.spec).map_err(sim_err)?;
        Ok(oracle::exact_distribution(&dense))
    }

    fn __repr__(&self) -> String {
        format!(
            "Architecture(kind={}, bins={}, d={}, loops={})",
            self.spec.kind.as_str(),
            self.spec.num_time_bins,
            self.spec.fock_dim,
            self.spec.num_loops
        )
    }
}

/// The factorized output state of a loop network.
#[pyclass]
struct MatrixProductState {
    mps: Mps,
}

#[pymethods]
impl MatrixProductState {
    fn num_sites(&self) -> usize {
        self.mps.num_sites()
    }

    fn num_bin_sites(&self) -> usize {
        self.mps.num_bin_sites()
    }

    fn num_loop_sites(&self) -> usize {
        self.mps.num_loop_sites()
    }

    fn bond_dims(&self) -> Vec<usize> {
        self.mps.bond_dims()
    }

    fn norm(&self) -> f64 {
        self.mps.norm()
    }

    /// Rewrites the state in Schmidt gauge.
    fn canonicalize(&self) -> PyResult<CanonicalState> {
        Ok(CanonicalState {
            canon: canonicalize(&self.mps).map_err(sim_err)?,
        })
    }

    /// `<n>` at one site.
    fn expectation_number(&self, site: usize) -> PyResult<f64> {
        observables::expectation_number(&self.mps, site).map_err(sim_err)
    }

    /// `<n>` at every site.
    fn occupation_profile(&self) -> PyResult<Vec<f64>> {
        observables::occupation_profile(&self.mps).map_err(sim_err)
    }

    /// Returns `(raw, C, g2)` for bins `site` and `site + separation`;
    /// `g2` is `None` when the anchor occupation vanishes.
    fn two_point(&self, site: usize, separation: usize) -> PyResult<(f64, f64, Option<f64>)> {
        let tp = observables::two_point(&self.mps, site, separation).map_err(sim_err)?;
        Ok((tp.raw, tp.correlation, tp.g2))
    }

    /// `[(x, raw, C, g2), ...]` for separations `1..=max_separation`.
    #[pyo3(signature = (anchor, max_separation))]
    fn correlation_series(
        &self,
        anchor: usize,
        max_separation: usize,
    ) -> PyResult<Vec<CorrelationRow>> {
        let series =
            observables::correlation_series(&self.mps, anchor, max_separation).map_err(sim_err)?;
        Ok(series
            .into_iter()
            .map(|(x, tp)| (x, tp.raw, tp.correlation, tp.g2))
            .collect())
    }

    /// Occupation distribution at `site` given outcomes fixed on the
    /// leading sites.
    #[pyo3(signature = (site, conditioning=Vec::new()))]
    fn marginal_distribution(&self, site: usize, conditioning: Vec<usize>) -> PyResult<Vec<f64>> {
        sampler::marginal_distribution(&self.mps, site, &conditioning).map_err(sim_err)
    }

    /// Draws photon-count samples; returns `(outcomes, log_probabilities)`.
    #[pyo3(signature = (count, seed, include_loop_sites=true))]
    fn sample(
        &self,
        count: usize,
        seed: u64,
        include_loop_sites: bool,
    ) -> PyResult<(Vec<Vec<usize>>, Vec<f64>)> {
        let batch =
            sampler::draw_samples(&self.mps, count, seed, include_loop_sites).map_err(sim_err)?;
        let log_probs = batch.log_probabilities.unwrap_or_default();
        Ok((batch.outcomes, log_probs))
    }

    /// Probability of a complete outcome (all sites, or bins only with the
    /// loop sites summed out).
    fn joint_probability(&self, outcome: Vec<usize>) -> PyResult<f64> {
        sampler::exact_joint_probability(&self.mps, &outcome).map_err(sim_err)
    }

    /// Dense amplitudes, site 0 most significant.
    fn to_dense(&self) -> PyResult<Vec<Complex64>> {
        self.mps.to_dense_vector().map_err(sim_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "MatrixProductState(sites={}, max_bond={})",
            self.mps.num_sites(),
            self.mps.max_bond_dim()
        )
    }
}

/// Schmidt-gauge form exposing the Schmidt coefficients of every cut.
#[pyclass]
struct CanonicalState {
    canon: CanonicalMps,
}

#[pymethods]
impl CanonicalState {
    fn num_bonds(&self) -> usize {
        self.canon.num_bonds()
    }

    /// Entanglement entropy in bits across `bond`.
    fn entropy(&self, bond: usize) -> PyResult<f64> {
        observables::entanglement_entropy(&self.canon, bond).map_err(sim_err)
    }

    /// Entropy at every bond.
    fn entropy_profile(&self) -> Vec<f64> {
        observables::entropy_profile(&self.canon)
    }

    /// Descending Schmidt coefficients across `bond`.
    fn schmidt_spectrum(&self, bond: usize) -> PyResult<Vec<f64>> {
        observables::schmidt_spectrum(&self.canon, bond).map_err(sim_err)
    }
}

/// Entropy ceiling `g(n)` for a mode of mean occupation `n`, in bits.
#[pyfunction]
fn area_law_bound(n: f64) -> PyResult<f64> {
    observables::area_law_bound(n).map_err(sim_err)
}

/// Thermal Schmidt coefficient `sqrt(n^k / (n+1)^(k+1))`.
#[pyfunction]
fn thermal_schmidt(n: f64, k: usize) -> f64 {
    observables::thermal_schmidt(n, k)
}

/// Least-squares exponential fit `C(x) = C0 exp(-x/zeta)` through
/// `(x, C)` points; returns `(zeta_inv, prefactor, rms_residual)`.
#[pyfunction]
fn fit_correlation_length(points: Vec<(f64, f64)>) -> PyResult<(f64, f64, f64)> {
    let fit = observables::fit_correlation_length(&points).map_err(sim_err)?;
    Ok((fit.zeta_inv, fit.prefactor, fit.residual))
}

#[pymodule]
fn timebin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Architecture>()?;
    m.add_class::<MatrixProductState>()?;
    m.add_class::<CanonicalState>()?;
    m.add_function(wrap_pyfunction!(area_law_bound, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_schmidt, m)?)?;
    m.add_function(wrap_pyfunction!(fit_correlation_length, m)?)?;
    Ok(())
}
