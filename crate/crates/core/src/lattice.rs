//! Chain geometry, Hamiltonians and propagators.
//!
//! Everything acts in the one-particle sector, so operators are `L × L`
//! matrices over site amplitudes. The hopping amplitude is 1 and ħ = 1.

use std::fmt;

use ndarray::Array2;

use crate::linalg::{self, CMatrix, C64};
use crate::{Error, Result};

/// Sizes and sites of one run. Site indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    length: usize,
    detector: usize,
    initial: usize,
}

impl LatticeSpec {
    pub fn new(length: usize, detector: usize, initial: usize) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidLattice(format!("need at least 2 sites, got {length}")));
        }
        if !length.is_multiple_of(2) {
            return Err(Error::InvalidLattice(format!("chain length must be even, got {length}")));
        }
        for (name, site) in [("detector", detector), ("initial", initial)] {
            if !(1..=length).contains(&site) {
                return Err(Error::InvalidLattice(format!(
                    "{name} site {site} outside 1..={length}"
                )));
            }
        }
        Ok(Self {
            length,
            detector,
            initial,
        })
    }

    /// Particle starts at `L/2`, detector sits ten sites to its right.
    pub fn centered(length: usize) -> Result<Self> {
        Self::new(length, length / 2 + 10, length / 2)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn detector(&self) -> usize {
        self.detector
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub(crate) fn detector_index(&self) -> usize {
        self.detector - 1
    }
}

/// Which generator drives the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Unitary `e^{−iHτ}` interleaved with projective measurement.
    Exact,
    /// Second-order expansion of `B e^{−iHτ} B`.
    ModelI,
    /// Full chain with imaginary potential `−2i/τ` on the detector.
    ModelII,
}

impl ModelKind {
    pub fn is_effective(self) -> bool {
        !matches!(self, ModelKind::Exact)
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Exact => "exact",
            ModelKind::ModelI => "model1",
            ModelKind::ModelII => "model2",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tau must be positive and finite, got {tau}")))
    }
}

/// Open-chain hopping matrix: ones on the first off-diagonals.
pub fn build_tb_hamiltonian(spec: &LatticeSpec) -> Array2<f64> {
    let n = spec.length();
    let mut h = Array2::zeros((n, n));
    for j in 0..n - 1 {
        h[[j, j + 1]] = 1.0;
        h[[j + 1, j]] = 1.0;
    }
    h
}

/// Model I: the two bonds touching the detector are removed and replaced by
/// `−(iτ/2)` couplings among the detector's neighbours.
pub fn build_model1_heff(spec: &LatticeSpec, tau: f64) -> Result<CMatrix> {
    check_tau(tau)?;
    let s = spec.detector_index();
    if s == 0 || s + 1 >= spec.length() {
        return Err(Error::DetectorAtEdge {
            detector: spec.detector(),
            length: spec.length(),
        });
    }
    let mut m = linalg::to_complex(&build_tb_hamiltonian(spec));
    for j in [s - 1, s + 1] {
        m[[s, j]] = C64::new(0.0, 0.0);
        m[[j, s]] = C64::new(0.0, 0.0);
    }
    let loss = C64::new(0.0, -tau / 2.0);
    for a in [s - 1, s + 1] {
        for b in [s - 1, s + 1] {
            m[[a, b]] = loss;
        }
    }
    Ok(m)
}

/// Model II: `H − (2i/τ)|s⟩⟨s|`.
pub fn build_model2_heff(spec: &LatticeSpec, tau: f64) -> Result<CMatrix> {
    check_tau(tau)?;
    let s = spec.detector_index();
    let mut m = linalg::to_complex(&build_tb_hamiltonian(spec));
    m[[s, s]] = C64::new(0.0, -2.0 / tau);
    Ok(m)
}

/// Generator for `kind`; `tau` only enters the effective models.
pub fn hamiltonian(spec: &LatticeSpec, kind: ModelKind, tau: f64) -> Result<CMatrix> {
    match kind {
        ModelKind::Exact => Ok(linalg::to_complex(&build_tb_hamiltonian(spec))),
        ModelKind::ModelI => build_model1_heff(spec, tau),
        ModelKind::ModelII => build_model2_heff(spec, tau),
    }
}

/// `e^{−iMt}`. The Hermitian path diagonalises `M`; the general path uses
/// scaling and squaring, which stays accurate for the non-normal effective
/// Hamiltonians.
pub fn propagator(m: &CMatrix, t: f64, hermitian_hint: bool) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "propagator needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("propagation time must be >= 0, got {t}")));
    }
    if hermitian_hint {
        linalg::expm_hermitian(m, t)
    } else {
        linalg::expm_pade(m, t)
    }
}

/// A propagator together with what produced it.
#[derive(Debug, Clone)]
pub struct EvolutionOperator {
    matrix: CMatrix,
    dt: f64,
    kind: ModelKind,
    tau: f64,
    is_unitary: bool,
}

impl EvolutionOperator {
    /// Propagator of `kind` over time `dt`. For effective models `tau` is the
    /// measurement interval the Hamiltonian was built for; for the exact
    /// model it is the stroboscopic step the operator will be used with.
    pub fn build(spec: &LatticeSpec, kind: ModelKind, tau: f64, dt: f64) -> Result<Self> {
        check_tau(tau)?;
        let h = hamiltonian(spec, kind, tau)?;
        let is_unitary = !kind.is_effective();
        let matrix = propagator(&h, dt, is_unitary)?;
        Ok(Self {
            matrix,
            dt,
            kind,
            tau,
            is_unitary,
        })
    }

    /// Single measurement-interval propagator, `dt = tau`.
    pub fn step(spec: &LatticeSpec, kind: ModelKind, tau: f64) -> Result<Self> {
        Self::build(spec, kind, tau, tau)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn is_unitary(&self) -> bool {
        self.is_unitary
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Verifies unitarity (`‖U†U − I‖_max ≤ 1e−12`) or, for effective
    /// models, contractivity (largest singular value ≤ 1 + 1e−10).
    /// Costs an `O(L³)` eigensolve.
    pub fn check_invariants(&self) -> Result<()> {
        if self.is_unitary {
            let dev = linalg::unitarity_deviation(&self.matrix);
            if dev > 1e-12 {
                return Err(Error::Numerical(format!("propagator not unitary: {dev:e}")));
            }
        }
        if self.kind.is_effective() {
            let sigma = linalg::max_singular_value(&self.matrix);
            if sigma > 1.0 + 1e-10 {
                return Err(Error::Numerical(format!(
                    "effective propagator amplifies: largest singular value {sigma}"
                )));
            }
        }
        Ok(())
    }
}
