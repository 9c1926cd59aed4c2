//! No-restart engines.
//!
//! All three engines repeatedly apply a cached single-step propagator to a
//! vector; no matrix powers are ever formed.

use ndarray::Array1;

use crate::lattice::{EvolutionOperator, LatticeSpec, ModelKind};
use crate::linalg::{self, CVector, C64};
use crate::{Error, Result};

/// Maximum group velocity of the cosine band, in sites per unit time.
pub const BALLISTIC_SPEED: f64 = 2.0;
/// Extra sites kept between the ballistic front and the boundary.
pub const BOUNDARY_MARGIN: f64 = 5.0;

/// Whether to refuse runs long enough for the wave packet to reflect off
/// the chain ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Reject with [`Error::BoundaryContamination`].
    #[default]
    Guard,
    /// Finite-chain dynamics are intended.
    Ignore,
}

/// Rejects `n_max·τ` long enough for the front launched from the initial
/// site to reach either end of the chain.
pub fn check_bulk(spec: &LatticeSpec, tau: f64, n_max: usize) -> Result<()> {
    let reach = BALLISTIC_SPEED * n_max as f64 * tau;
    let initial = spec.initial() as f64;
    let room = initial.min(spec.length() as f64 - initial) - BOUNDARY_MARGIN;
    if reach < room {
        Ok(())
    } else {
        Err(Error::BoundaryContamination {
            n_max,
            tau,
            reach,
            room,
        })
    }
}

/// One-particle wavefunction over the chain, possibly unnormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// `|site⟩`, 1-based.
    pub fn localized(length: usize, site: usize) -> Self {
        assert!((1..=length).contains(&site), "site {site} outside 1..={length}");
        let mut v = Array1::zeros(length);
        v[site - 1] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn initial(spec: &LatticeSpec) -> Self {
        Self::localized(spec.length(), spec.initial())
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    /// Amplitude at a 1-based site.
    pub fn amplitude(&self, site: usize) -> C64 {
        self.0[site - 1]
    }

    pub fn norm_sqr(&self) -> f64 {
        linalg::norm_sqr(&self.0)
    }

    pub fn evolve(&self, op: &EvolutionOperator) -> Self {
        Self(op.matrix().dot(&self.0))
    }

    /// Applies `B = I − |site⟩⟨site|`.
    pub fn project_out(&mut self, site: usize) {
        self.0[site - 1] = C64::new(0.0, 0.0);
    }
}

impl From<CVector> for StateVector {
    fn from(v: CVector) -> Self {
        Self(v)
    }
}

/// Per-measurement statistics of a no-restart run.
///
/// `p[n − 1]` is `p_n`; `survival[n]` is `P_n` with `survival[0] = P_0 = 1`;
/// `pdet[n]` is `P_det(n) = 1 − P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSeries {
    pub tau: f64,
    pub kind: ModelKind,
    pub p: Vec<f64>,
    pub survival: Vec<f64>,
    pub pdet: Vec<f64>,
}

impl DetectionSeries {
    fn from_parts(tau: f64, kind: ModelKind, p: Vec<f64>, survival: Vec<f64>) -> Self {
        let pdet = survival.iter().map(|s| 1.0 - s).collect();
        Self {
            tau,
            kind,
            p,
            survival,
            pdet,
        }
    }

    pub fn n_max(&self) -> usize {
        self.p.len()
    }

    /// `p_n`, 1-based.
    pub fn p(&self, n: usize) -> f64 {
        self.p[n - 1]
    }

    /// `P_n` for `n ≥ 0`.
    pub fn survival(&self, n: usize) -> f64 {
        self.survival[n]
    }

    /// `P_det(n)` for `n ≥ 0`.
    pub fn pdet(&self, n: usize) -> f64 {
        self.pdet[n]
    }

    /// Measurement times `τ, 2τ, …, n_max·τ`.
    pub fn times(&self) -> Vec<f64> {
        (1..=self.n_max()).map(|n| n as f64 * self.tau).collect()
    }
}

/// First-detection amplitudes `Ψ_n`, `amplitudes[n − 1] = Ψ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalSeries {
    pub tau: f64,
    pub amplitudes: Vec<C64>,
}

impl RenewalSeries {
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max == 0 {
        Err(Error::InvalidArgument("n_max must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_operator(spec: &LatticeSpec, step: &EvolutionOperator, effective: bool) -> Result<()> {
    if step.dim() != spec.length() {
        return Err(Error::LengthMismatch {
            left: step.dim(),
            right: spec.length(),
        });
    }
    if step.kind().is_effective() != effective {
        let want = if effective { "an effective model" } else { "the exact model" };
        return Err(Error::InvalidArgument(format!(
            "engine needs {want}, got {}",
            step.kind()
        )));
    }
    Ok(())
}

/// Exact stroboscopic evolution `|φ⟩ ← B U_τ |φ⟩` from the initial site.
pub fn measured_evolution(
    spec: &LatticeSpec,
    tau: f64,
    n_max: usize,
    boundary: Boundary,
) -> Result<DetectionSeries> {
    check_n_max(n_max)?;
    if boundary == Boundary::Guard {
        check_bulk(spec, tau, n_max)?;
    }
    let step = EvolutionOperator::step(spec, ModelKind::Exact, tau)?;
    measured_evolution_with(spec, &step, n_max, boundary)
}

/// [`measured_evolution`] with a precomputed `U_τ`.
pub fn measured_evolution_with(
    spec: &LatticeSpec,
    step: &EvolutionOperator,
    n_max: usize,
    boundary: Boundary,
) -> Result<DetectionSeries> {
    check_n_max(n_max)?;
    check_operator(spec, step, false)?;
    if boundary == Boundary::Guard {
        check_bulk(spec, step.dt(), n_max)?;
    }
    let s = spec.detector();
    let mut phi = StateVector::initial(spec);
    let mut p = Vec::with_capacity(n_max);
    let mut survival = Vec::with_capacity(n_max + 1);
    survival.push(1.0);
    let mut remaining = 1.0_f64;
    for _ in 0..n_max {
        phi = phi.evolve(step);
        let p_n = phi.amplitude(s).norm_sqr();
        phi.project_out(s);
        // bookkeeping keeps Σp + P_N = 1 independent of rounding in U_τ
        remaining = (remaining - p_n).max(0.0);
        p.push(p_n);
        survival.push(remaining);
    }
    Ok(DetectionSeries::from_parts(step.dt(), ModelKind::Exact, p, survival))
}

/// `Ψ_n = ⟨s|U^n|Ψ₀⟩ − Σ_{m<n} ⟨s|U^{n−m}|s⟩ Ψ_m`.
pub fn renewal_amplitudes(spec: &LatticeSpec, tau: f64, n_max: usize) -> Result<RenewalSeries> {
    check_n_max(n_max)?;
    let step = EvolutionOperator::step(spec, ModelKind::Exact, tau)?;
    renewal_amplitudes_with(spec, &step, n_max)
}

/// [`renewal_amplitudes`] with a precomputed `U_τ`. Only the two scalar
/// sequences `⟨s|U^k|Ψ₀⟩` and `⟨s|U^k|s⟩` are stored.
pub fn renewal_amplitudes_with(
    spec: &LatticeSpec,
    step: &EvolutionOperator,
    n_max: usize,
) -> Result<RenewalSeries> {
    check_n_max(n_max)?;
    check_operator(spec, step, false)?;
    let s = spec.detector();
    let mut from_initial = StateVector::initial(spec);
    let mut from_detector = StateVector::localized(spec.length(), s);
    let mut transition = Vec::with_capacity(n_max);
    let mut ret = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        from_initial = from_initial.evolve(step);
        from_detector = from_detector.evolve(step);
        transition.push(from_initial.amplitude(s));
        ret.push(from_detector.amplitude(s));
    }

    let mut amplitudes: Vec<C64> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let feedback: C64 = (1..n).map(|m| ret[n - m - 1] * amplitudes[m - 1]).sum();
        amplitudes.push(transition[n - 1] - feedback);
    }
    Ok(RenewalSeries {
        tau: step.dt(),
        amplitudes,
    })
}

/// Survival `P_n = ‖(e^{−iH_eff τ})^n |Ψ₀⟩‖²` under an effective model.
pub fn nh_survival_series(
    spec: &LatticeSpec,
    kind: ModelKind,
    tau: f64,
    n_max: usize,
    boundary: Boundary,
) -> Result<DetectionSeries> {
    check_n_max(n_max)?;
    if !kind.is_effective() {
        return Err(Error::InvalidArgument(
            "nh_survival_series needs an effective model".into(),
        ));
    }
    if boundary == Boundary::Guard {
        check_bulk(spec, tau, n_max)?;
    }
    let step = EvolutionOperator::step(spec, kind, tau)?;
    nh_survival_series_with(spec, &step, n_max, boundary)
}

/// [`nh_survival_series`] with a precomputed effective step propagator.
pub fn nh_survival_series_with(
    spec: &LatticeSpec,
    step: &EvolutionOperator,
    n_max: usize,
    boundary: Boundary,
) -> Result<DetectionSeries> {
    check_n_max(n_max)?;
    check_operator(spec, step, true)?;
    if boundary == Boundary::Guard {
        check_bulk(spec, step.dt(), n_max)?;
    }
    let mut phi = StateVector::initial(spec);
    let mut p = Vec::with_capacity(n_max);
    let mut survival = Vec::with_capacity(n_max + 1);
    survival.push(1.0);
    let mut prev = 1.0_f64;
    for _ in 0..n_max {
        phi = phi.evolve(step);
        let norm = phi.norm_sqr();
        if norm > 1.0 + 1e-10 {
            return Err(Error::Numerical(format!("effective evolution gained norm: {norm}")));
        }
        // a contraction cannot raise the norm; clip rounding noise
        let current = norm.min(prev);
        p.push(prev - current);
        survival.push(current);
        prev = current;
    }
    Ok(DetectionSeries::from_parts(step.dt(), step.kind(), p, survival))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn two_site() -> LatticeSpec {
        LatticeSpec::new(2, 2, 1).unwrap()
    }

    #[test]
    fn two_site_closed_form() {
        for tau in [0.3, 0.8, 1.4] {
            let d = measured_evolution(&two_site(), tau, 2, Boundary::Ignore).unwrap();
            let (s2, c2) = (tau.sin().powi(2), tau.cos().powi(2));
            assert!((d.p(1) - s2).abs() < 1e-14);
            assert!((d.survival(1) - c2).abs() < 1e-14);
            assert!((d.p(2) - s2 * c2).abs() < 1e-14);
            assert!((d.survival(2) - c2 * c2).abs() < 1e-14);
        }
    }

    #[test]
    fn half_period_swap_is_certain_detection() {
        let d = measured_evolution(&two_site(), FRAC_PI_2, 3, Boundary::Ignore).unwrap();
        assert!((d.p(1) - 1.0).abs() < 1e-14);
        assert!(d.survival(1) < 1e-14);
        assert!(d.p(2) < 1e-14);
    }

    #[test]
    fn renewal_two_site() {
        for tau in [0.3, 1.1] {
            let r = renewal_amplitudes(&two_site(), tau, 2).unwrap();
            let want1 = C64::new(0.0, -tau.sin());
            let want2 = C64::new(0.0, -tau.sin() * tau.cos());
            assert!((r.amplitudes[0] - want1).norm() < 1e-14);
            assert!((r.amplitudes[1] - want2).norm() < 1e-14);
        }
    }

    #[test]
    fn renewal_first_term_is_free_transition() {
        let spec = LatticeSpec::new(12, 8, 6).unwrap();
        let tau = 0.6;
        let u = EvolutionOperator::step(&spec, ModelKind::Exact, tau).unwrap();
        let r = renewal_amplitudes_with(&spec, &u, 1).unwrap();
        assert_eq!(r.amplitudes[0], u.matrix()[[7, 5]]);
    }

    #[test]
    fn renewal_matches_projection_on_20_sites() {
        let spec = LatticeSpec::new(20, 14, 10).unwrap();
        let u = EvolutionOperator::step(&spec, ModelKind::Exact, 0.3).unwrap();
        let d = measured_evolution_with(&spec, &u, 50, Boundary::Ignore).unwrap();
        let r = renewal_amplitudes_with(&spec, &u, 50).unwrap();
        for (a, b) in r.probabilities().iter().zip(&d.p) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn detector_on_initial_site() {
        let spec = LatticeSpec::new(30, 15, 15).unwrap();
        let tau = 0.4;
        let u = EvolutionOperator::step(&spec, ModelKind::Exact, tau).unwrap();
        let d = measured_evolution_with(&spec, &u, 3, Boundary::Guard).unwrap();
        assert!((d.p(1) - u.matrix()[[14, 14]].norm_sqr()).abs() < 1e-15);
        // Zeno freezing: detection at the first click becomes certain
        let frozen = measured_evolution(&spec, 1e-4, 3, Boundary::Guard).unwrap();
        assert!(frozen.survival(3) < 1e-6);
    }

    #[test]
    fn zeno_freezing_away_from_detector() {
        let spec = LatticeSpec::new(40, 22, 20).unwrap();
        let mut last = 0.0;
        for tau in [0.2, 0.1, 0.05, 0.025] {
            let d = measured_evolution(&spec, tau, 5, Boundary::Guard).unwrap();
            assert!(d.survival(5) > last);
            last = d.survival(5);
        }
        assert!(1.0 - last < 1e-4, "{}", 1.0 - last);
    }

    #[test]
    fn neighbour_detection_is_quadratic_in_tau() {
        let spec = LatticeSpec::new(40, 21, 20).unwrap();
        let loss = |tau: f64| 1.0 - measured_evolution(&spec, tau, 1, Boundary::Guard).unwrap().survival(1);
        for tau in [0.02, 0.01] {
            let ratio = loss(tau) / loss(tau / 2.0);
            assert!((ratio - 4.0).abs() < 0.01, "ratio {ratio}");
        }
        // two sites away the leading term is τ⁴
        let spec2 = LatticeSpec::new(40, 22, 20).unwrap();
        let loss2 = |tau: f64| 1.0 - measured_evolution(&spec2, tau, 1, Boundary::Guard).unwrap().survival(1);
        let ratio = loss2(0.02) / loss2(0.01);
        assert!((ratio - 16.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn boundary_guard() {
        let spec = LatticeSpec::new(40, 25, 20).unwrap();
        // room = 20 − 5 = 15 sites, reach = 2·n·τ
        assert!(check_bulk(&spec, 0.5, 14).is_ok());
        assert!(matches!(
            check_bulk(&spec, 0.5, 15),
            Err(Error::BoundaryContamination { .. })
        ));
        assert!(measured_evolution(&spec, 0.5, 15, Boundary::Guard).is_err());
        assert!(measured_evolution(&spec, 0.5, 15, Boundary::Ignore).is_ok());
        assert!(nh_survival_series(&spec, ModelKind::ModelII, 0.5, 15, Boundary::Guard).is_err());
    }

    #[test]
    fn engines_reject_wrong_operator_kind() {
        let spec = LatticeSpec::new(10, 6, 5).unwrap();
        let exact = EvolutionOperator::step(&spec, ModelKind::Exact, 0.5).unwrap();
        let eff = EvolutionOperator::step(&spec, ModelKind::ModelII, 0.5).unwrap();
        assert!(nh_survival_series_with(&spec, &exact, 3, Boundary::Ignore).is_err());
        assert!(measured_evolution_with(&spec, &eff, 3, Boundary::Ignore).is_err());
        assert!(nh_survival_series(&spec, ModelKind::Exact, 0.5, 3, Boundary::Ignore).is_err());
        assert!(measured_evolution(&spec, 0.5, 0, Boundary::Ignore).is_err());
    }

    #[test]
    fn nh_series_bookkeeping() {
        let spec = LatticeSpec::new(40, 24, 20).unwrap();
        for kind in [ModelKind::ModelI, ModelKind::ModelII] {
            let d = nh_survival_series(&spec, kind, 0.5, 12, Boundary::Guard).unwrap();
            assert_eq!(d.survival(0), 1.0);
            for n in 1..=12 {
                assert!(d.p(n) >= 0.0);
                assert!((d.survival(n - 1) - d.p(n) - d.survival(n)).abs() < 1e-15);
                assert!((d.pdet(n) + d.survival(n) - 1.0).abs() < 1e-15);
            }
        }
    }
}
