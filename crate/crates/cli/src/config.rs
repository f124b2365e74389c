//! Config file schema, validation, and resolution.
//!
//! Configs are TOML. Unknown fields are hard errors. Angles are written as
//! multiples of pi (`theta_over_pi`). `resolve` fills every default in and
//! produces a config that serializes to the exact document embedded in the
//! output artifacts; re-running that document reproduces the artifacts
//! byte for byte.

use serde::{Deserialize, Serialize};

use timebin_core::arch::{ArchKind, ArchitectureSpec};
use timebin_core::fock::CouplerSpec;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub architecture: ArchitectureConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub correlations: CorrelationsConfig,
    #[serde(default)]
    pub schmidt: SchmidtConfig,
    #[serde(default)]
    pub max_entropy: MaxEntropyConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub kind: String,
    #[serde(default = "one")]
    pub num_loops: usize,
    pub num_time_bins: usize,
    pub photons_per_bin: PhotonsPerBin,
    pub fock_dim: usize,
    /// Defaults to `fock_dim`.
    #[serde(default)]
    pub max_bond: Option<usize>,
    #[serde(default)]
    pub svd_tol: f64,
    pub couplers: Vec<CouplerConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhotonsPerBin {
    /// The same occupation in every bin.
    Uniform(usize),
    /// One occupation per bin.
    PerBin(Vec<usize>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplerConfig {
    pub theta_over_pi: f64,
    #[serde(default)]
    pub phi_over_pi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub studies: Vec<Study>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    EntropyProfile,
    MaxEntropyVsN,
    Schmidt,
    Correlations,
    Samples,
    GraphReport,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::EntropyProfile => "entropy_profile",
            Study::MaxEntropyVsN => "max_entropy_vs_n",
            Study::Schmidt => "schmidt",
            Study::Correlations => "correlations",
            Study::Samples => "samples",
            Study::GraphReport => "graph_report",
        }
    }

    pub fn needs_state(self) -> bool {
        !matches!(self, Study::GraphReport)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_sample_count")]
    pub count: usize,
    #[serde(default = "yes")]
    pub include_loop_sites: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            count: default_sample_count(),
            include_loop_sites: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CorrelationsConfig {
    /// 1-based anchor bin; defaults to a saturated bin near the end.
    #[serde(default)]
    pub anchor: Option<usize>,
    #[serde(default = "default_max_separation")]
    pub max_separation: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SchmidtConfig {
    /// 1-based bin cut; defaults to the correlations anchor.
    #[serde(default)]
    pub cut: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxEntropyConfig {
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
}

impl Default for MaxEntropyConfig {
    fn default() -> Self {
        Self {
            n_values: default_n_values(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_rungs")]
    pub max_rungs: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            rel_tol: default_rel_tol(),
            max_rungs: default_max_rungs(),
        }
    }
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn default_sample_count() -> usize {
    1000
}

fn default_max_separation() -> usize {
    10
}

fn default_n_values() -> Vec<usize> {
    vec![1, 2, 3, 4]
}

fn default_rel_tol() -> f64 {
    1e-4
}

fn default_max_rungs() -> usize {
    6
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Fills every default with its concrete value and applies the seed
    /// override, so the result re-serializes to a complete document.
    pub fn resolve(mut self, seed_override: Option<u64>) -> Result<RunConfig, CliError> {
        if let Some(seed) = seed_override {
            self.seed = seed;
        }
        let n = self.architecture.num_time_bins;
        self.architecture.photons_per_bin = match self.architecture.photons_per_bin {
            PhotonsPerBin::Uniform(v) => PhotonsPerBin::PerBin(vec![v; n]),
            PhotonsPerBin::PerBin(v) => {
                if v.len() != n {
                    return Err(CliError::Config(format!(
                        "photons_per_bin has {} entries for {} time bins",
                        v.len(),
                        n
                    )));
                }
                PhotonsPerBin::PerBin(v)
            }
        };
        if self.architecture.max_bond.is_none() {
            self.architecture.max_bond = Some(self.architecture.fock_dim);
        }
        let default_anchor = n
            .saturating_sub(self.correlations.max_separation + 40)
            .max(1);
        if self.correlations.anchor.is_none() {
            self.correlations.anchor = Some(default_anchor);
        }
        if self.schmidt.cut.is_none() {
            self.schmidt.cut = Some(self.correlations.anchor.unwrap());
        }
        // Surface bad architecture fields now, as config errors.
        self.spec()?;
        Ok(self)
    }

    /// The architecture this config describes.
    pub fn spec(&self) -> Result<ArchitectureSpec, CliError> {
        let arch = &self.architecture;
        let kind = ArchKind::parse(&arch.kind).ok_or_else(|| {
            CliError::Config(format!(
                "unknown architecture kind {:?} (expected single_loop, loop_tower, \
                 loop_chain, or tritter_cylinder)",
                arch.kind
            ))
        })?;
        let photons = match &arch.photons_per_bin {
            PhotonsPerBin::Uniform(v) => vec![*v; arch.num_time_bins],
            PhotonsPerBin::PerBin(v) => v.clone(),
        };
        let couplers: Vec<CouplerSpec> = arch
            .couplers
            .iter()
            .map(|c| {
                CouplerSpec::new(
                    c.theta_over_pi * std::f64::consts::PI,
                    c.phi_over_pi * std::f64::consts::PI,
                )
            })
            .collect();
        let spec = ArchitectureSpec {
            kind,
            num_loops: arch.num_loops,
            couplers,
            num_time_bins: arch.num_time_bins,
            photons_per_bin: photons,
            fock_dim: arch.fock_dim,
            max_bond: arch.max_bond.unwrap_or(arch.fock_dim),
            svd_tol: arch.svd_tol,
        };
        spec.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    /// The resolved document exactly as embedded in artifacts.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check_studies_supported(&self, studies: &[Study]) -> Result<(), CliError> {
        let spec = self.spec()?;
        for study in studies {
            if study.needs_state() && !spec.kind.is_state_simulatable() {
                return Err(CliError::Config(format!(
                    "study {} requires a state-simulatable architecture, got {}",
                    study.name(),
                    spec.kind.as_str()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7

[architecture]
kind = "single_loop"
num_time_bins = 4
photons_per_bin = 1
fock_dim = 3

[[architecture.couplers]]
theta_over_pi = 0.25
"#;

    #[test]
    fn minimal_config_parses_and_resolves() {
        let cfg = RunConfig::parse(MINIMAL).unwrap().resolve(None).unwrap();
        assert_eq!(cfg.seed, 7);
        let spec = cfg.spec().unwrap();
        assert_eq!(spec.photons_per_bin, vec![1, 1, 1, 1]);
        assert_eq!(spec.max_bond, 3);
        assert!((spec.couplers[0].theta - 0.25 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = MINIMAL.replace("seed = 7", "seed = 7\nbogus_field = 1");
        let err = RunConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn resolution_round_trips() {
        let resolved = RunConfig::parse(MINIMAL).unwrap().resolve(Some(11)).unwrap();
        let text = resolved.to_toml();
        let again = RunConfig::parse(&text).unwrap().resolve(None).unwrap();
        assert_eq!(text, again.to_toml());
        assert_eq!(again.seed, 11);
    }

    #[test]
    fn photon_list_length_is_checked() {
        let bad = MINIMAL.replace("photons_per_bin = 1", "photons_per_bin = [1, 2]");
        let err = RunConfig::parse(&bad).unwrap().resolve(None).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }
}
