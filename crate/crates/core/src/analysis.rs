//! Quantities derived from the engines: the per-window decay exponent α,
//! the survival timescale `T_s = t_r/α`, optimal restart times, the
//! windowed exact-vs-effective discrepancy δP_R and log-linear fits.

use crate::dynamics::{self, Boundary, DetectionSeries, StateVector};
use crate::lattice::{self, LatticeSpec, ModelKind};
use crate::linalg::CMatrix;
use crate::par::grid_map;
use crate::restart;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaResult {
    pub kind: ModelKind,
    pub t_r: f64,
    /// `−ln P_eff(t_r)`.
    pub alpha: f64,
    /// `t_r/α`; infinite for a lossless window.
    pub survival_timescale: f64,
}

impl AlphaResult {
    /// Predicted survival `e^{−αT/t_r}` after total time `t`.
    pub fn predicted_survival(&self, t: f64) -> f64 {
        (-self.alpha * t / self.t_r).exp()
    }
}

fn effective_hamiltonian(kind: ModelKind, spec: &LatticeSpec, tau: f64) -> Result<CMatrix> {
    if !kind.is_effective() {
        return Err(Error::InvalidArgument(
            "alpha is defined through an effective model".into(),
        ));
    }
    lattice::hamiltonian(spec, kind, tau)
}

/// Window survival `P_eff(t_r) = ‖e^{−iH_eff t_r}|Ψ₀⟩‖²` from one
/// exponential at `t_r`, and `α = −ln P_eff(t_r)`.
pub fn alpha(kind: ModelKind, spec: &LatticeSpec, tau: f64, t_r: f64) -> Result<AlphaResult> {
    let h = effective_hamiltonian(kind, spec, tau)?;
    alpha_with(&h, spec, kind, t_r)
}

/// [`alpha`] for a prebuilt effective Hamiltonian.
pub fn alpha_with(h_eff: &CMatrix, spec: &LatticeSpec, kind: ModelKind, t_r: f64) -> Result<AlphaResult> {
    if !(t_r > 0.0 && t_r.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_r must be positive, got {t_r}")));
    }
    let u = lattice::propagator(h_eff, t_r, false)?;
    let psi0 = StateVector::initial(spec);
    let survival = StateVector::from(u.dot(psi0.amplitudes())).norm_sqr();
    if survival > 1.0 + 1e-10 {
        return Err(Error::Numerical(format!(
            "effective window survival {survival} exceeds 1 at t_r = {t_r}"
        )));
    }
    if survival <= 0.0 {
        return Err(Error::InstantAbsorption { t_r });
    }
    let alpha = (-survival.ln()).max(0.0);
    Ok(AlphaResult {
        kind,
        t_r,
        alpha,
        survival_timescale: t_r / alpha,
    })
}

/// Objective values over a restart-time grid and their minimiser.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalTr {
    pub grid: Vec<f64>,
    /// `+∞` marks points excluded from the search.
    pub objective: Vec<f64>,
    pub t_star: f64,
    pub index: usize,
}

impl OptimalTr {
    fn from_objective(grid: Vec<f64>, objective: Vec<f64>) -> Result<Self> {
        let index = argmin(&grid, &objective)?;
        Ok(Self {
            t_star: grid[index],
            index,
            grid,
            objective,
        })
    }

    pub fn best_objective(&self) -> f64 {
        self.objective[self.index]
    }
}

/// Smallest finite objective; exact ties go to the smaller grid value.
fn argmin(grid: &[f64], objective: &[f64]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in objective.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) if v < objective[b] || (v == objective[b] && grid[i] < grid[b]) => Some(i),
            keep => keep,
        };
    }
    best.ok_or(Error::NoFiniteObjective)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty restart-time grid".into()));
    }
    if let Some(bad) = grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("grid value {bad} is not positive")));
    }
    Ok(())
}

/// Minimises `−α(t_r)/t_r` over `grid` (equivalently the survival
/// timescale). Grid points run through [`grid_map`].
pub fn optimal_tr_nh(kind: ModelKind, spec: &LatticeSpec, tau: f64, grid: &[f64]) -> Result<OptimalTr> {
    check_grid(grid)?;
    let h = effective_hamiltonian(kind, spec, tau)?;
    let values = grid_map(grid, |&t_r| match alpha_with(&h, spec, kind, t_r) {
        Ok(a) => Ok(-a.alpha / t_r),
        Err(Error::InstantAbsorption { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    });
    let objective = values.into_iter().collect::<Result<Vec<_>>>()?;
    OptimalTr::from_objective(grid.to_vec(), objective)
}

/// Minimises the exact mean first-detection time over restart periods
/// `r_grid` (in measurements). One measured run of length `max(r_grid)`
/// serves every grid point.
pub fn optimal_tr_exact(
    spec: &LatticeSpec,
    tau: f64,
    r_grid: &[usize],
    boundary: Boundary,
) -> Result<OptimalTr> {
    let n_max = r_grid
        .iter()
        .copied()
        .max()
        .ok_or_else(|| Error::InvalidArgument("empty restart grid".into()))?;
    let base = dynamics::measured_evolution(spec, tau, n_max, boundary)?;
    optimal_tr_exact_from(&base, r_grid)
}

/// [`optimal_tr_exact`] on an existing base series (of any engine).
pub fn optimal_tr_exact_from(base: &DetectionSeries, r_grid: &[usize]) -> Result<OptimalTr> {
    if r_grid.is_empty() {
        return Err(Error::InvalidArgument("empty restart grid".into()));
    }
    let objective = r_grid
        .iter()
        .map(|&r| match restart::mfdt(base, r) {
            Ok(v) => Ok(v),
            Err(Error::NeverDetected { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = r_grid.iter().map(|&r| r as f64 * base.tau).collect();
    OptimalTr::from_objective(grid, objective)
}

/// Minimises `−α/t_r` with the exact window exponent `α = −ln P_r` of
/// `base` over restart periods `r_grid`. A window that detects with
/// certainty (`P_r = 0`) is excluded.
pub fn optimal_tr_exact_rate(base: &DetectionSeries, r_grid: &[usize]) -> Result<OptimalTr> {
    if r_grid.is_empty() {
        return Err(Error::InvalidArgument("empty restart grid".into()));
    }
    let objective = r_grid
        .iter()
        .map(|&r| restart::window_decay(base, r).map(|a| -a / (r as f64 * base.tau)))
        .map(|v| v.map(|o| if o.is_finite() { o } else { f64::INFINITY }))
        .collect::<Result<Vec<_>>>()?;
    let grid = r_grid.iter().map(|&r| r as f64 * base.tau).collect();
    OptimalTr::from_objective(grid, objective)
}

/// Windowed discrepancy between two integrated detection probabilities
/// computed under the same restart protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub tau: f64,
    pub r: usize,
    pub kind: ModelKind,
    /// `delta[R − 1] = δP_R(R)`.
    pub delta: Vec<f64>,
}

impl ComparisonReport {
    pub fn max(&self) -> f64 {
        self.delta.iter().cloned().fold(0.0, f64::max)
    }
}

/// `δP_R(R) = (τ/t_r) Σ_{(R−1)t_r < nτ ≤ R t_r} |P_det^exact − P_det^eff|`.
///
/// Inputs are indexed by measurement, `x[n − 1]` at `T = nτ`.
pub fn delta_p_r(
    exact_pdet_reset: &[f64],
    eff_pdet_reset: &[f64],
    r: usize,
    tau: f64,
    r_max: usize,
    kind: ModelKind,
) -> Result<ComparisonReport> {
    if exact_pdet_reset.len() != eff_pdet_reset.len() {
        return Err(Error::LengthMismatch {
            left: exact_pdet_reset.len(),
            right: eff_pdet_reset.len(),
        });
    }
    if r == 0 {
        return Err(Error::InvalidArgument("restart period r must be >= 1".into()));
    }
    if exact_pdet_reset.len() < r * r_max {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot cover {r_max} windows of {r}",
            exact_pdet_reset.len()
        )));
    }
    let weight = 1.0 / r as f64;
    let delta = exact_pdet_reset
        .chunks_exact(r)
        .zip(eff_pdet_reset.chunks_exact(r))
        .take(r_max)
        .map(|(a, b)| weight * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .collect();
    Ok(ComparisonReport { tau, r, kind, delta })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub slope: f64,
    pub intercept: f64,
    /// `−1/slope`.
    pub survival_timescale: f64,
    /// RMS residual of the line in `ln P`.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares line through `(T, ln P)` for `T` in `[t_min, t_max]`.
pub fn fit_exponential(trajectory: &[f64], times: &[f64], window: (f64, f64)) -> Result<ExpFit> {
    if trajectory.len() != times.len() {
        return Err(Error::LengthMismatch {
            left: trajectory.len(),
            right: times.len(),
        });
    }
    let (t_min, t_max) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&p, &t) in trajectory.iter().zip(times) {
        if t < t_min || t > t_max {
            continue;
        }
        if !(p > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "non-positive survival {p} at T = {t}; trajectory reached numerical zero"
            )));
        }
        xs.push(t);
        ys.push(p.ln());
    }
    let n = xs.len();
    if n < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 points in [{t_min}, {t_max}], got {n}"
        )));
    }
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(ExpFit {
        slope,
        intercept,
        survival_timescale: -1.0 / slope,
        residual: (sse / nf).sqrt(),
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn predicted_survival_hits_window_value() {
        let spec = LatticeSpec::new(30, 17, 15).unwrap();
        let a = alpha(ModelKind::ModelII, &spec, 0.5, 3.0).unwrap();
        assert!((a.predicted_survival(3.0) - (-a.alpha).exp()).abs() < 1e-15);
        assert!((a.predicted_survival(9.0) - (-3.0 * a.alpha).exp()).abs() < 1e-15);
    }

    #[test]
    fn exact_rate_argmin_matches_timescale() {
        let spec = LatticeSpec::new(40, 24, 20).unwrap();
        let base = dynamics::measured_evolution(&spec, 0.25, 30, Boundary::Ignore).unwrap();
        let grid: Vec<usize> = (1..=30).collect();
        let opt = optimal_tr_exact_rate(&base, &grid).unwrap();
        let ts: Vec<f64> = grid
            .iter()
            .map(|&r| r as f64 * 0.25 / restart::window_decay(&base, r).unwrap())
            .collect();
        let best = (0..ts.len()).fold(0, |b, i| if ts[i] < ts[b] { i } else { b });
        assert_eq!(opt.index, best);
    }

    fn taylor_column(m: &CMatrix, t: f64, col: usize) -> Vec<C64> {
        let a = m.mapv(|z| z * C64::new(0.0, -t));
        let n = m.nrows();
        let mut term = ndarray::Array1::<C64>::zeros(n);
        term[col] = C64::new(1.0, 0.0);
        let mut sum = term.clone();
        for k in 1..=80 {
            term = a.dot(&term).mapv(|z| z / k as f64);
            sum += &term;
        }
        sum.to_vec()
    }

    #[test]
    fn decoupled_detector_gives_no_decay() {
        let spec = LatticeSpec::new(100, 90, 30).unwrap();
        for kind in [ModelKind::ModelI, ModelKind::ModelII] {
            let a = alpha(kind, &spec, 0.25, 2.0).unwrap();
            assert!(a.alpha < 1e-8, "{kind}: {}", a.alpha);
        }
    }

    #[test]
    fn two_site_model2_against_taylor() {
        let spec = LatticeSpec::new(2, 2, 1).unwrap();
        let h = lattice::build_model2_heff(&spec, 1.0).unwrap();
        let col = taylor_column(&h, 1.0, 0);
        let want = -col.iter().map(|z| z.norm_sqr()).sum::<f64>().ln();
        let got = alpha(ModelKind::ModelII, &spec, 1.0, 1.0).unwrap();
        assert!((got.alpha - want).abs() < 1e-9);
        assert!((got.survival_timescale - 1.0 / want).abs() < 1e-9);
    }

    #[test]
    fn alpha_rejects_exact_kind_and_bad_time() {
        let spec = LatticeSpec::new(10, 6, 5).unwrap();
        assert!(alpha(ModelKind::Exact, &spec, 0.5, 1.0).is_err());
        assert!(alpha(ModelKind::ModelII, &spec, 0.5, 0.0).is_err());
    }

    #[test]
    fn alpha_agrees_with_stepped_series() {
        let spec = LatticeSpec::new(30, 18, 15).unwrap();
        let tau = 0.25;
        for kind in [ModelKind::ModelI, ModelKind::ModelII] {
            let d = dynamics::nh_survival_series(&spec, kind, tau, 16, Boundary::Ignore).unwrap();
            for r in [4, 9, 16] {
                let a = alpha(kind, &spec, tau, r as f64 * tau).unwrap();
                let stepped = restart::window_decay(&d, r).unwrap();
                assert!((a.alpha - stepped).abs() < 1e-10 * stepped.max(1.0));
            }
        }
    }

    #[test]
    fn argmin_ties_and_infinities() {
        assert_eq!(argmin(&[3.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap(), 1);
        assert_eq!(argmin(&[1.0, 2.0], &[f64::INFINITY, 5.0]).unwrap(), 1);
        assert_eq!(
            argmin(&[1.0, 2.0], &[f64::INFINITY, f64::NAN]),
            Err(Error::NoFiniteObjective)
        );
    }

    #[test]
    fn single_point_grid() {
        let spec = LatticeSpec::new(40, 25, 20).unwrap();
        let opt = optimal_tr_nh(ModelKind::ModelII, &spec, 0.5, &[3.0]).unwrap();
        assert_eq!(opt.t_star, 3.0);
        assert!(optimal_tr_nh(ModelKind::ModelII, &spec, 0.5, &[]).is_err());
        assert!(optimal_tr_nh(ModelKind::ModelII, &spec, 0.5, &[-1.0]).is_err());
    }

    #[test]
    fn two_site_exact_optimum_is_first_step() {
        let spec = LatticeSpec::new(2, 2, 1).unwrap();
        let tau = std::f64::consts::FRAC_PI_2;
        let opt = optimal_tr_exact(&spec, tau, &[1, 2, 3], Boundary::Ignore).unwrap();
        assert_eq!(opt.index, 0);
        assert!((opt.best_objective() - tau).abs() < 1e-12);
    }

    #[test]
    fn small_instance_mfdt_forms_agree_on_argmin() {
        let spec = LatticeSpec::new(16, 11, 8).unwrap();
        let tau = 0.5;
        let r_grid: Vec<usize> = (1..=30).collect();
        let base = dynamics::measured_evolution(&spec, tau, 30, Boundary::Ignore).unwrap();
        let opt = optimal_tr_exact_from(&base, &r_grid).unwrap();
        let direct: Vec<f64> = r_grid
            .iter()
            .map(|&r| restart::mfdt_direct(&base, r, 400).unwrap_or(f64::INFINITY))
            .collect();
        let grid: Vec<f64> = r_grid.iter().map(|&r| r as f64 * tau).collect();
        assert_eq!(argmin(&grid, &direct).unwrap(), opt.index);
    }

    #[test]
    fn delta_trivial_cases() {
        let a: Vec<f64> = (0..12).map(|i| i as f64 / 20.0).collect();
        let rep = delta_p_r(&a, &a, 4, 0.5, 3, ModelKind::ModelI).unwrap();
        assert_eq!(rep.delta, vec![0.0; 3]);
        let b: Vec<f64> = a.iter().map(|x| x + 0.01).collect();
        let rep = delta_p_r(&a, &b, 4, 0.5, 3, ModelKind::ModelI).unwrap();
        assert!(rep.delta.iter().all(|d| (d - 0.01).abs() < 1e-15));
        assert!(matches!(
            delta_p_r(&a, &b[..11], 4, 0.5, 2, ModelKind::ModelI),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(delta_p_r(&a, &b, 4, 0.5, 4, ModelKind::ModelI).is_err());
    }

    #[test]
    fn exact_exponential_fit() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        let traj: Vec<f64> = times.iter().map(|t| (-t / 3.0).exp()).collect();
        let fit = fit_exponential(&traj, &times, (0.0, 10.0)).unwrap();
        assert!((fit.survival_timescale - 3.0).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let times: Vec<f64> = (0..10).map(f64::from).collect();
        let mut traj: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        assert!(fit_exponential(&traj, &times, (0.0, 3.0)).is_err());
        traj[5] = 0.0;
        assert!(fit_exponential(&traj, &times, (0.0, 9.0)).is_err());
        assert!(fit_exponential(&traj[..9], &times, (0.0, 9.0)).is_err());
    }
}
