//! Sharp restart on the stroboscopic grid.
//!
//! With restart period `r` measurements, measurement `n` falls in window
//! `R = ⌊(n − 1)/r⌋` at in-window position `ñ = 1 + (n − 1) mod r`. The
//! r-th measurement of a window is taken before the reset, so every window
//! contributes exactly `r` detection chances.

use ndarray::Array2;

use crate::dynamics::DetectionSeries;
use crate::linalg::{CMatrix, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartSpec {
    r: usize,
    tau: f64,
}

impl RestartSpec {
    pub fn new(r: usize, tau: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument("restart period r must be >= 1".into()));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        Ok(Self { r, tau })
    }

    /// Restart period for `t_r`, which must be a multiple of `tau`.
    pub fn from_time(t_r: f64, tau: f64) -> Result<Self> {
        let r = steps_in(t_r, tau).ok_or_else(|| {
            Error::InvalidArgument(format!("t_r = {t_r} is not a positive multiple of tau = {tau}"))
        })?;
        Self::new(r, tau)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t_r(&self) -> f64 {
        self.r as f64 * self.tau
    }
}

/// `Some(k)` when `t = k·tau` for a positive integer `k` (relative slack 1e−9).
pub fn steps_in(t: f64, tau: f64) -> Option<usize> {
    if !(t > 0.0 && tau > 0.0 && t.is_finite() && tau.is_finite()) {
        return None;
    }
    let k = (t / tau).round();
    if k >= 1.0 && (k * tau - t).abs() <= 1e-9 * t.max(tau) {
        Some(k as usize)
    } else {
        None
    }
}

/// `(R, ñ)` for 1-based measurement `n`.
pub fn decompose(n: usize, r: usize) -> (usize, usize) {
    assert!(n >= 1 && r >= 1);
    ((n - 1) / r, 1 + (n - 1) % r)
}

fn check_window(base: &DetectionSeries, r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("restart period r must be >= 1".into()));
    }
    if r > base.n_max() {
        return Err(Error::RestartTooLong {
            r,
            available: base.n_max(),
        });
    }
    Ok(())
}

/// `P_det(r)` of the base series, the detection probability of one window.
pub fn window_pdet(base: &DetectionSeries, r: usize) -> Result<f64> {
    check_window(base, r)?;
    Ok(base.pdet(r))
}

/// Per-window decay exponent `−ln P_r` of the base series.
pub fn window_decay(base: &DetectionSeries, r: usize) -> Result<f64> {
    check_window(base, r)?;
    Ok(-base.survival(r).ln())
}

/// `p_n^{(r)} = (1 − P_det(r))^R p_ñ` for `n = 1..=n_max`.
pub fn restart_pmf(base: &DetectionSeries, r: usize, n_max: usize) -> Result<Vec<f64>> {
    check_window(base, r)?;
    let stay = base.survival(r);
    Ok((1..=n_max)
        .map(|n| {
            let (windows, pos) = decompose(n, r);
            stay.powi(windows as i32) * base.p(pos)
        })
        .collect())
}

/// Closed-form mean first-detection time
/// `rτ(1 − P_det(r))/P_det(r) + Σ_{ñ≤r} ñτ p_ñ / P_det(r)`.
pub fn mfdt(base: &DetectionSeries, r: usize) -> Result<f64> {
    check_window(base, r)?;
    let pdet = base.pdet(r);
    if pdet <= 0.0 {
        return Err(Error::NeverDetected { r });
    }
    let tau = base.tau;
    let first_moment: f64 = (1..=r).map(|n| n as f64 * base.p(n)).sum();
    Ok(r as f64 * tau * (1.0 - pdet) / pdet + tau * first_moment / pdet)
}

/// Mean first-detection time from the restarted PMF: the explicit sum over
/// the first `k_windows` windows plus the geometric tail summed in closed
/// form. Kept as an independent check on [`mfdt`].
pub fn mfdt_direct(base: &DetectionSeries, r: usize, k_windows: usize) -> Result<f64> {
    check_window(base, r)?;
    if k_windows == 0 {
        return Err(Error::InvalidArgument("k_windows must be >= 1".into()));
    }
    let pdet = base.pdet(r);
    if pdet <= 0.0 {
        return Err(Error::NeverDetected { r });
    }
    let tau = base.tau;
    let pmf = restart_pmf(base, r, k_windows * r)?;
    let head: f64 = pmf
        .iter()
        .enumerate()
        .map(|(i, p)| (i + 1) as f64 * tau * p)
        .sum();

    // Σ_{R≥k} q^R (Rr·P_det + Σ_ñ ñ p_ñ) τ with q = 1 − P_det
    let q = 1.0 - pdet;
    let k = k_windows as f64;
    let qk = q.powi(k_windows as i32);
    let sum_q = qk / pdet;
    let sum_rq = qk * (k * pdet + q) / (pdet * pdet);
    let first_moment: f64 = (1..=r).map(|n| n as f64 * base.p(n)).sum();
    let tail = tau * (r as f64 * pdet * sum_rq + first_moment * sum_q);
    Ok(head + tail)
}

/// Survival under restart at `T = nτ`, `n = 1..=n_max`:
/// `P(nτ) = P_ñ · (P_r)^R`.
pub fn reset_survival(base: &DetectionSeries, r: usize, n_max: usize) -> Result<Vec<f64>> {
    check_window(base, r)?;
    let stay = base.survival(r);
    Ok((1..=n_max)
        .map(|n| {
            let (windows, pos) = decompose(n, r);
            base.survival(pos) * stay.powi(windows as i32)
        })
        .collect())
}

/// Integrated detection probability under restart, `1 − P(nτ)`.
pub fn reset_pdet(base: &DetectionSeries, r: usize, n_max: usize) -> Result<Vec<f64>> {
    Ok(reset_survival(base, r, n_max)?
        .into_iter()
        .map(|s| 1.0 - s)
        .collect())
}

/// `H^R_eff = H⁰_eff − (iRα/2t)·I`: the time-dependent generator that
/// reproduces the survival after `restarts` resets within one window of
/// length `t`.
pub fn build_reset_heff(h0: &CMatrix, alpha: f64, restarts: usize, t: f64) -> Result<CMatrix> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("window time must be positive, got {t}")));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidArgument(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let n = h0.nrows();
    let shift = C64::new(0.0, -(restarts as f64) * alpha / (2.0 * t));
    Ok(h0 + &Array2::from_diag_elem(n, shift))
}

/// Everything derived from one base series and one restart period.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartResult {
    pub spec: RestartSpec,
    pub pmf: Vec<f64>,
    /// `None` when the window never detects.
    pub mfdt: Option<f64>,
    pub pdet_window: f64,
    pub survival_trajectory: Vec<f64>,
}

impl RestartResult {
    pub fn compute(base: &DetectionSeries, r: usize, n_max: usize) -> Result<Self> {
        let spec = RestartSpec::new(r, base.tau)?;
        let mfdt = match mfdt(base, r) {
            Ok(v) => Some(v),
            Err(Error::NeverDetected { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            spec,
            pmf: restart_pmf(base, r, n_max)?,
            mfdt,
            pdet_window: window_pdet(base, r)?,
            survival_trajectory: reset_survival(base, r, n_max)?,
        })
    }
}
