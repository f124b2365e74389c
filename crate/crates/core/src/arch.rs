//! Declarative description of a loop network and its input photon train.

use crate::error::SimError;
use crate::fock::{beam_splitter, embed_two_mode, CouplerSpec, FockDim};
use crate::tensor::{contract, ComplexTensor};

/// Largest number of entries allowed in a per-step unitary (`d^{2(L+1)}`).
pub const STEP_UNITARY_ENTRY_CAP: usize = 1 << 24;

/// The loop topologies this crate understands.
///
/// `SingleLoop`, `LoopTower`, and `LoopChain` are state-simulatable;
/// `TritterCylinder` exists for graph-level analysis only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    /// One delay loop fed by the bin train.
    SingleLoop,
    /// A stack of loops: each time step couples the bin to loop 1, then
    /// loop `k` to loop `k+1` going up the stack.
    LoopTower,
    /// Loops in series: the bin passes through every loop's coupler in
    /// turn before being emitted.
    LoopChain,
    /// A ring of tritters, each with a local loop plus one shared loop.
    TritterCylinder,
}

impl ArchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::SingleLoop => "single_loop",
            ArchKind::LoopTower => "loop_tower",
            ArchKind::LoopChain => "loop_chain",
            ArchKind::TritterCylinder => "tritter_cylinder",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single_loop" => Some(ArchKind::SingleLoop),
            "loop_tower" => Some(ArchKind::LoopTower),
            "loop_chain" => Some(ArchKind::LoopChain),
            "tritter_cylinder" => Some(ArchKind::TritterCylinder),
            _ => None,
        }
    }

    /// Whether a state can be built for this topology.
    pub fn is_state_simulatable(self) -> bool {
        !matches!(self, ArchKind::TritterCylinder)
    }
}

/// A loop network plus the Fock-state pulse train driving it.
///
/// `couplers` holds one entry per coupler: a single entry for
/// `SingleLoop`, `num_loops` entries for `LoopTower`/`LoopChain` (entry 0
/// couples the bin to loop 1, entry `k` couples loop `k` to loop `k+1`
/// for a tower, or the bin to loop `k+1` for a chain), and `3·num_loops`
/// entries for `TritterCylinder` (three per tritter).
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureSpec {
    pub kind: ArchKind,
    pub num_loops: usize,
    pub couplers: Vec<CouplerSpec>,
    pub num_time_bins: usize,
    /// Input occupation `n_i` per time bin; length `num_time_bins`.
    pub photons_per_bin: Vec<usize>,
    /// Local Hilbert-space dimension `d`; occupations run over `0..d-1`.
    pub fock_dim: usize,
    /// Bond-dimension ceiling applied during multi-loop construction.
    pub max_bond: usize,
    /// Relative singular-value cutoff applied during multi-loop construction.
    pub svd_tol: f64,
}

impl ArchitectureSpec {
    /// Single loop with one photon pattern; no truncation is ever needed,
    /// so `max_bond` is set to `d`.
    pub fn single_loop(coupler: CouplerSpec, photons_per_bin: Vec<usize>, fock_dim: usize) -> Self {
        Self {
            kind: ArchKind::SingleLoop,
            num_loops: 1,
            couplers: vec![coupler],
            num_time_bins: photons_per_bin.len(),
            photons_per_bin,
            fock_dim,
            max_bond: fock_dim,
            svd_tol: 0.0,
        }
    }

    /// Single loop driven by `num_bins` bins of `n` photons each, `phi = 0`.
    pub fn uniform_single_loop(theta: f64, n: usize, num_bins: usize, fock_dim: usize) -> Self {
        Self::single_loop(CouplerSpec::rotation(theta), vec![n; num_bins], fock_dim)
    }

    pub fn loop_tower(
        couplers: Vec<CouplerSpec>,
        photons_per_bin: Vec<usize>,
        fock_dim: usize,
        max_bond: usize,
        svd_tol: f64,
    ) -> Self {
        Self {
            kind: ArchKind::LoopTower,
            num_loops: couplers.len(),
            num_time_bins: photons_per_bin.len(),
            couplers,
            photons_per_bin,
            fock_dim,
            max_bond,
            svd_tol,
        }
    }

    pub fn loop_chain(
        couplers: Vec<CouplerSpec>,
        photons_per_bin: Vec<usize>,
        fock_dim: usize,
        max_bond: usize,
        svd_tol: f64,
    ) -> Self {
        Self {
            kind: ArchKind::LoopChain,
            num_loops: couplers.len(),
            num_time_bins: photons_per_bin.len(),
            couplers,
            photons_per_bin,
            fock_dim,
            max_bond,
            svd_tol,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.fock_dim < 2 {
            return Err(SimError::InvalidSpec(format!(
                "fock_dim must be at least 2, got {}",
                self.fock_dim
            )));
        }
        if self.num_time_bins == 0 {
            return Err(SimError::InvalidSpec("num_time_bins must be positive".into()));
        }
        if self.num_loops == 0 {
            return Err(SimError::InvalidSpec("num_loops must be positive".into()));
        }
        if self.photons_per_bin.len() != self.num_time_bins {
            return Err(SimError::InvalidSpec(format!(
                "photons_per_bin has {} entries for {} time bins",
                self.photons_per_bin.len(),
                self.num_time_bins
            )));
        }
        if let Some(&bad) = self.photons_per_bin.iter().find(|&&n| n > self.fock_dim - 1) {
            return Err(SimError::InvalidSpec(format!(
                "input occupation {bad} exceeds the maximum {} for fock_dim {}",
                self.fock_dim - 1,
                self.fock_dim
            )));
        }
        let expected_couplers = match self.kind {
            ArchKind::SingleLoop => {
                if self.num_loops != 1 {
                    return Err(SimError::InvalidSpec(
                        "single_loop requires num_loops = 1".into(),
                    ));
                }
                1
            }
            ArchKind::LoopTower | ArchKind::LoopChain => self.num_loops,
            ArchKind::TritterCylinder => 3 * self.num_loops,
        };
        if self.couplers.len() != expected_couplers {
            return Err(SimError::InvalidSpec(format!(
                "{} with {} loops needs {} couplers, got {}",
                self.kind.as_str(),
                self.num_loops,
                expected_couplers,
                self.couplers.len()
            )));
        }
        if self.max_bond == 0 {
            return Err(SimError::InvalidSpec("max_bond must be positive".into()));
        }
        if !self.svd_tol.is_finite() || self.svd_tol < 0.0 || self.svd_tol >= 1.0 {
            return Err(SimError::InvalidSpec(format!(
                "svd_tol must lie in [0, 1), got {}",
                self.svd_tol
            )));
        }
        Ok(())
    }

    pub fn total_photons(&self) -> usize {
        self.photons_per_bin.iter().sum()
    }

    pub fn max_input_occupation(&self) -> usize {
        self.photons_per_bin.iter().copied().max().unwrap_or(0)
    }

    pub(crate) fn fock(&self) -> FockDim {
        FockDim::new(self.fock_dim).expect("validated spec")
    }

    /// The unitary applied at each time step, as a `(D·d) × (D·d)` matrix
    /// over (loop register, bin), `D = d^L`. The composite index is
    /// row-major over the modes `(loop_1, ..., loop_L, bin)`: loops most
    /// significant, bin least. Only meaningful for state-simulatable kinds.
    pub(crate) fn step_unitary(&self) -> Result<ComplexTensor, SimError> {
        self.validate()?;
        if !self.kind.is_state_simulatable() {
            return Err(SimError::InvalidSpec(format!(
                "{} is not state-simulatable",
                self.kind.as_str()
            )));
        }
        let d = self.fock_dim;
        let num_modes = self.num_loops + 1; // loops 0..L-1, bin = mode L
        d.checked_pow(2 * num_modes as u32)
            .filter(|&n| n <= STEP_UNITARY_ENTRY_CAP)
            .ok_or(SimError::MemoryCap {
                needed: d.saturating_pow(2 * num_modes as u32),
                cap: STEP_UNITARY_ENTRY_CAP,
            })?;

        let bin = self.num_loops;
        // Coupler k acts on (a_mode, b_mode); the deeper mode plays the
        // `a` (loop) role of the two-mode coupler.
        let pairs: Vec<(usize, usize)> = match self.kind {
            ArchKind::SingleLoop => vec![(0, bin)],
            ArchKind::LoopTower => (0..self.num_loops)
                .map(|k| if k == 0 { (0, bin) } else { (k, k - 1) })
                .collect(),
            ArchKind::LoopChain => (0..self.num_loops).map(|k| (k, bin)).collect(),
            ArchKind::TritterCylinder => unreachable!(),
        };

        let dim = self.fock();
        let total = d.pow(num_modes as u32);
        let mut step = ComplexTensor::identity(total)?;
        for (spec, &(a, b)) in self.couplers.iter().zip(&pairs) {
            let u = beam_splitter(*spec, dim)?.as_matrix();
            let embedded = embed_two_mode(&u, num_modes, a, b, d);
            step = contract(&embedded, &step, &[(1, 0)])?;
        }
        Ok(step)
    }
}
