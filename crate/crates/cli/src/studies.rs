//! Study drivers and artifact writers.
//!
//! Every artifact starts with the resolved config and the library version
//! as `#` comments, followed by a CSV body (or, for graphs, the edge-list
//! exchange format). Floats print with 17 significant digits and nothing
//! in an artifact depends on wall-clock time, so identical configs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::path::PathBuf;

use timebin_core::arch::{ArchitectureSpec, STEP_UNITARY_ENTRY_CAP};
use timebin_core::graph::{
    build_graph, classify_family, cost_estimate, treewidth_upper_bound, validate,
    EliminationHeuristic, FamilyPoint, TnGraph, VertexKind,
};
use timebin_core::mps::{build, canonicalize, CanonicalMps, Mps};
use timebin_core::observables::{
    area_law_bound, correlation_series, entropy_profile, occupation_profile, schmidt_spectrum,
};
use timebin_core::oracle::{evolve_dense, exact_distribution, reduced_entropy};
use timebin_core::sampler::{draw_samples, exact_joint_probability};
use timebin_core::SimError;

use crate::config::{RunConfig, Study};
use crate::CliError;

pub struct StudyContext {
    pub config: RunConfig,
    pub spec: ArchitectureSpec,
    pub out_dir: PathBuf,
    header: String,
    state: Option<Mps>,
    canonical: Option<CanonicalMps>,
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl StudyContext {
    /// Prepares shared inputs; the state is built once when any requested
    /// study needs it.
    pub fn new(
        config: RunConfig,
        out_dir: PathBuf,
        studies: &[Study],
    ) -> Result<Self, CliError> {
        let spec = config.spec()?;
        config.check_studies_supported(studies)?;
        let mut header = String::new();
        header.push_str(&format!(
            "# library = timebin-core v{}\n# resolved configuration:\n",
            env!("CARGO_PKG_VERSION")
        ));
        for line in config.to_toml().lines() {
            header.push_str("# ");
            header.push_str(line);
            header.push('\n');
        }

        let needs_state = studies.iter().any(|s| s.needs_state());
        let needs_canonical = studies.iter().any(|s| {
            matches!(s, Study::EntropyProfile | Study::Schmidt)
        });
        let state = if needs_state {
            Some(build(&spec).map_err(CliError::from)?)
        } else {
            None
        };
        let canonical = if needs_canonical {
            Some(canonicalize(state.as_ref().expect("state built")).map_err(CliError::from)?)
        } else {
            None
        };
        Ok(Self {
            config,
            spec,
            out_dir,
            header,
            state,
            canonical,
        })
    }

    fn write_artifact(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, format!("{}{}", self.header, body))
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    fn state(&self) -> &Mps {
        self.state.as_ref().expect("study declared its state need")
    }

    fn canonical(&self) -> &CanonicalMps {
        self.canonical.as_ref().expect("study declared its canonical need")
    }

    pub fn run(&self, study: Study) -> Result<Vec<PathBuf>, CliError> {
        match study {
            Study::EntropyProfile => self.entropy_profile(),
            Study::MaxEntropyVsN => self.max_entropy_vs_n(),
            Study::Schmidt => self.schmidt(),
            Study::Correlations => self.correlations(),
            Study::Samples => self.samples(),
            Study::GraphReport => self.graph_report(),
        }
    }

    fn entropy_profile(&self) -> Result<Vec<PathBuf>, CliError> {
        let profile = entropy_profile(self.canonical());
        let mut body = String::from("i,E\n");
        for (bond, e) in profile.iter().enumerate() {
            let _ = writeln!(body, "{},{}", bond + 1, fmt_float(*e));
        }
        Ok(vec![self.write_artifact("entropy_profile.csv", &body)?])
    }

    fn max_entropy_vs_n(&self) -> Result<Vec<PathBuf>, CliError> {
        let mut body = String::from("n,E_max,bound\n");
        for &n in &self.config.max_entropy.n_values {
            let mut spec = self.spec.clone();
            spec.photons_per_bin = vec![n; spec.num_time_bins];
            spec.validate().map_err(CliError::from)?;
            let canon = canonicalize(&build(&spec).map_err(CliError::from)?)
                .map_err(CliError::from)?;
            let e_max = entropy_profile(&canon).into_iter().fold(0.0f64, f64::max);
            let bound = area_law_bound(n as f64).map_err(CliError::from)?;
            let _ = writeln!(body, "{},{},{}", n, fmt_float(e_max), fmt_float(bound));
        }
        Ok(vec![self.write_artifact("max_entropy_vs_n.csv", &body)?])
    }

    fn schmidt(&self) -> Result<Vec<PathBuf>, CliError> {
        let cut = self.config.schmidt.cut.expect("resolved");
        if cut == 0 || cut >= self.canonical().num_sites() {
            return Err(CliError::Config(format!(
                "schmidt cut {cut} out of range 1..{}",
                self.canonical().num_sites() - 1
            )));
        }
        let lambda = schmidt_spectrum(self.canonical(), cut - 1).map_err(CliError::from)?;
        let mut body = String::from("k,lambda\n");
        for (k, l) in lambda.iter().enumerate() {
            let _ = writeln!(body, "{},{}", k, fmt_float(*l));
        }
        Ok(vec![self.write_artifact("schmidt.csv", &body)?])
    }

    fn correlations(&self) -> Result<Vec<PathBuf>, CliError> {
        let anchor = self.config.correlations.anchor.expect("resolved");
        let max_sep = self.config.correlations.max_separation;
        let bins = self.state().num_bin_sites();
        if anchor == 0 || anchor + max_sep > bins {
            return Err(CliError::Config(format!(
                "correlation anchor {anchor} with separation {max_sep} leaves the {bins} bins"
            )));
        }
        let series =
            correlation_series(self.state(), anchor - 1, max_sep).map_err(CliError::from)?;
        let mut body = String::from("x,C,g2\n");
        for (x, tp) in series {
            let g2 = tp.g2.map_or_else(|| "nan".to_string(), fmt_float);
            let _ = writeln!(body, "{},{},{}", x, fmt_float(tp.correlation), g2);
        }
        Ok(vec![self.write_artifact("correlations.csv", &body)?])
    }

    fn samples(&self) -> Result<Vec<PathBuf>, CliError> {
        let sampling = &self.config.sampling;
        let batch = draw_samples(
            self.state(),
            sampling.count,
            self.config.seed,
            sampling.include_loop_sites,
        )
        .map_err(CliError::from)?;
        let log_probs = batch.log_probabilities.as_ref().expect("always filled");
        let mut body = String::from("index,seed,outcome,log_probability\n");
        for (i, (outcome, log_p)) in batch.outcomes.iter().zip(log_probs).enumerate() {
            let outcome_str: Vec<String> = outcome.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(
                body,
                "{},{},{},{}",
                i,
                batch.seed,
                outcome_str.join(" "),
                fmt_float(*log_p)
            );
        }
        Ok(vec![self.write_artifact("samples.csv", &body)?])
    }

    fn graph_report(&self) -> Result<Vec<PathBuf>, CliError> {
        let graph = build_graph(&self.spec)
            .map_err(|e| CliError::Runtime(format!("graph construction failed: {e}")))?;
        let edges_path = self.write_artifact("graph.edges", &graph.to_edge_list())?;

        // Family trend: the same architecture scaled up in N.
        let base_n = self.spec.num_time_bins.max(2);
        let mut family = Vec::new();
        for factor in [1usize, 2, 4, 8] {
            let mut scaled = self.spec.clone();
            scaled.num_time_bins = base_n * factor;
            scaled.photons_per_bin = vec![self.spec.max_input_occupation(); base_n * factor];
            let g = build_graph(&scaled)
                .map_err(|e| CliError::Runtime(format!("graph construction failed: {e}")))?;
            let (w, _) = treewidth_upper_bound(&g, EliminationHeuristic::MinFill)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
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
        let class = classify_family(&family).map_err(|e| CliError::Runtime(e.to_string()))?;

        let body = graph_summary(&graph, Some((&family, class, &self.spec)))?;
        let report_path = self.write_artifact("graph_report.txt", &body)?;
        Ok(vec![edges_path, report_path])
    }
}

/// Summary block shared by spec-driven and edge-list-driven graph reports.
pub fn graph_summary(
    graph: &TnGraph,
    family: Option<(&[FamilyPoint], timebin_core::graph::ComplexityClass, &ArchitectureSpec)>,
) -> Result<String, CliError> {
    let mut body = String::new();
    let _ = writeln!(body, "vertices = {}", graph.num_vertices());
    let _ = writeln!(body, "edges = {}", graph.num_edges());
    let _ = writeln!(body, "open_edges = {}", graph.open_edges().len());
    let _ = writeln!(
        body,
        "cycle_space_dimension = {}",
        graph.cycle_space_dimension()
    );
    for heuristic in [EliminationHeuristic::MinFill, EliminationHeuristic::MinDegree] {
        let (w, td) = treewidth_upper_bound(graph, heuristic)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let report = validate(&td, graph);
        let _ = writeln!(body, "treewidth_bound_{} = {}", heuristic.as_str(), w);
        let _ = writeln!(
            body,
            "decomposition_valid_{} = {}",
            heuristic.as_str(),
            report.is_valid()
        );
    }
    if let Some((family, class, spec)) = family {
        let (w, _) = treewidth_upper_bound(graph, EliminationHeuristic::MinFill)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let couplers = graph
            .vertices()
            .iter()
            .filter(|v| v.kind == VertexKind::Coupler)
            .count();
        let est = cost_estimate(couplers.max(1), spec.total_photons().max(1), w);
        let _ = writeln!(body, "cost_log = {}", fmt_float(est.log_cost));
        for p in family {
            let _ = writeln!(
                body,
                "family_point: couplers = {}, treewidth_bound = {}",
                p.num_couplers, p.treewidth
            );
        }
        let _ = writeln!(body, "family_class = {}", class.as_str());
    }
    Ok(body)
}

/// Compares the factorized state against the dense reference and writes
/// `oracle_check.csv`. The returned flag is `true` when every deviation is
/// below `1e-8`.
pub fn oracle_check(ctx: &StudyContext) -> Result<(PathBuf, bool, f64), CliError> {
    let spec = &ctx.spec;
    let m = build(spec).map_err(CliError::from)?;
    let dense = evolve_dense(spec).map_err(CliError::from)?;

    // Amplitudes, permuted into the oracle's site order.
    let dims = m.phys_dims();
    let vector = m.to_dense_vector().map_err(CliError::from)?;
    let t = timebin_core::ComplexTensor::new(dims, vector)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let bins = m.num_bin_sites();
    let loops = m.num_loop_sites();
    let mut perm: Vec<usize> = (bins..bins + loops).collect();
    perm.extend(0..bins);
    let v = t
        .permute(&perm)
        .map_err(|e| CliError::Runtime(e.to_string()))?
        .into_data();
    let amp_dev = v
        .iter()
        .zip(dense.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);

    // Entropies at every bond against dense reduced entropies.
    let canon = canonicalize(&m).map_err(CliError::from)?;
    let mut entropy_dev = 0.0f64;
    for bond in 0..canon.num_bonds() {
        let e_mps = timebin_core::observables::entanglement_entropy(&canon, bond)
            .map_err(CliError::from)?;
        let subsystem: Vec<usize> = (0..=bond)
            .map(|s| if s < bins { loops + s } else { s - bins })
            .collect();
        let e_dense = reduced_entropy(&dense, &subsystem).map_err(CliError::from)?;
        entropy_dev = entropy_dev.max((e_mps - e_dense).abs());
    }

    // Joint probabilities over the full (or strided) outcome table.
    let table = exact_distribution(&dense);
    let stride = (table.len() / 4096).max(1);
    let mut joint_dev = 0.0f64;
    for idx in (0..table.len()).step_by(stride) {
        let o = dense.outcome_of(idx);
        let mps_outcome: Vec<usize> = o[loops..]
            .iter()
            .copied()
            .chain(o[..loops].iter().copied())
            .collect();
        let got = exact_joint_probability(&m, &mps_outcome).map_err(CliError::from)?;
        joint_dev = joint_dev.max((got - table[idx]).abs());
    }

    // Mean occupations against the distribution.
    let profile = occupation_profile(&m).map_err(CliError::from)?;
    let mut occupation_dev = 0.0f64;
    for (mps_site, &value) in profile.iter().enumerate() {
        let oracle_site = if mps_site < bins {
            loops + mps_site
        } else {
            mps_site - bins
        };
        let mut want = 0.0;
        for (idx, &p) in table.iter().enumerate() {
            want += dense.outcome_of(idx)[oracle_site] as f64 * p;
        }
        occupation_dev = occupation_dev.max((value - want).abs());
    }

    let worst = amp_dev.max(entropy_dev).max(joint_dev).max(occupation_dev);
    let pass = worst < 1e-8;
    let mut body = String::from("quantity,max_abs_deviation\n");
    let _ = writeln!(body, "amplitude,{}", fmt_float(amp_dev));
    let _ = writeln!(body, "entropy,{}", fmt_float(entropy_dev));
    let _ = writeln!(body, "joint_probability,{}", fmt_float(joint_dev));
    let _ = writeln!(body, "mean_occupation,{}", fmt_float(occupation_dev));
    let _ = writeln!(body, "status,{}", if pass { "pass" } else { "fail" });
    let path = ctx.write_artifact("oracle_check.csv", &body)?;
    Ok((path, pass, worst))
}

/// Runs the `(d, chi)` ladder until the tracked observables stop moving.
pub fn convergence_study(ctx: &StudyContext) -> Result<(PathBuf, bool), CliError> {
    let conv = &ctx.config.convergence;
    if !conv.enabled {
        return Err(CliError::Config(
            "convergence.enabled must be true for the converge command".into(),
        ));
    }
    let n_max = ctx.spec.max_input_occupation();
    let mut d = (10 * n_max).max(2);
    let mut chi = (10 * n_max).max(2);
    let mut previous: Option<Vec<f64>> = None;
    let mut body = String::from("rung,d,chi,e_max,occupation_last_bin,lambda0,max_rel_delta,converged\n");
    let mut converged = false;
    let mut capped = false;

    for rung in 0..conv.max_rungs {
        // Memory guard: a single-loop build stores N + 1 rank-3 tensors of
        // d * d * chi entries.
        let entries = ctx
            .spec
            .num_time_bins
            .saturating_add(ctx.spec.num_loops)
            .saturating_mul(d * d * chi.max(d));
        if entries > STEP_UNITARY_ENTRY_CAP * 4 {
            capped = true;
            break;
        }
        let mut spec = ctx.spec.clone();
        spec.fock_dim = d;
        spec.max_bond = chi;
        spec.validate().map_err(CliError::from)?;
        let state = build(&spec).map_err(CliError::from)?;
        let canon = canonicalize(&state).map_err(CliError::from)?;
        let profile = entropy_profile(&canon);
        let e_max = profile.iter().cloned().fold(0.0f64, f64::max);
        let occupations = occupation_profile(&state).map_err(CliError::from)?;
        let last_bin = occupations[state.num_bin_sites() - 1];
        let cut = (ctx.config.schmidt.cut.unwrap_or(1))
            .min(canon.num_bonds())
            .max(1);
        let lambda0 = schmidt_spectrum(&canon, cut - 1).map_err(CliError::from)?[0];

        let observables = vec![e_max, last_bin, lambda0];
        let delta = previous.as_ref().map(|prev| {
            observables
                .iter()
                .zip(prev)
                .map(|(new, old)| (new - old).abs() / old.abs().max(1e-12))
                .fold(0.0f64, f64::max)
        });
        let rung_converged = delta.is_some_and(|x| x < conv.rel_tol);
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{}",
            rung,
            d,
            chi,
            fmt_float(e_max),
            fmt_float(last_bin),
            fmt_float(lambda0),
            delta.map_or_else(|| "nan".into(), fmt_float),
            rung_converged
        );
        previous = Some(observables);
        if rung_converged {
            converged = true;
            break;
        }
        d = (d * 3).div_ceil(2);
        chi *= 2;
    }
    if capped {
        let _ = writeln!(body, "# resource cap reached before convergence");
    }
    let path = ctx.write_artifact("converge.csv", &body)?;
    Ok((path, converged))
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::MemoryCap { .. } => CliError::Resource(e.to_string()),
            SimError::Tensor(ref t) => match t {
                timebin_core::TensorError::SvdFailed | timebin_core::TensorError::EigenFailed => {
                    CliError::Numeric(e.to_string())
                }
                _ => CliError::Runtime(e.to_string()),
            },
            SimError::InvalidSpec(_) | SimError::InvalidArgument(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}
