//! Rotation period and anchoring center of a tip path.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::RdError;

/// Fewest whole rotations accepted after the transient cut.
pub const MIN_PERIODS: usize = 5;
/// Drift per period, relative to the tip radius, above which a path is unanchored.
pub const DRIFT_TOL: f64 = 0.05;
/// Share of the non-constant spectral power the rotation peak must carry.
pub const PEAK_SHARE: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorReport {
    pub center: [f64; 2],
    pub period: f64,
    /// Radius of the best-fitting circle.
    pub radius: f64,
    /// Linear drift of per-period centers, per unit time.
    pub drift: [f64; 2],
    pub anchored: bool,
    pub periods_used: usize,
}

impl AnchorReport {
    pub fn drift_per_period(&self) -> f64 {
        self.drift[0].hypot(self.drift[1]) * self.period
    }
}

/// Resamples `(t, x1, x2)` onto a uniform grid at the median spacing.
fn uniform(samples: &[[f64; 3]]) -> (Vec<f64>, Vec<Complex64>) {
    let mut gaps: Vec<f64> = samples.windows(2).map(|w| w[1][0] - w[0][0]).collect();
    gaps.sort_by(f64::total_cmp);
    let dt = gaps[gaps.len() / 2];
    let (t0, t1) = (samples[0][0], samples[samples.len() - 1][0]);
    let n = ((t1 - t0) / dt + 1e-9).floor() as usize + 1;
    let mut t = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let ti = t0 + i as f64 * dt;
        while k + 2 < samples.len() && samples[k + 1][0] < ti {
            k += 1;
        }
        let (a, b) = (samples[k], samples[(k + 1).min(samples.len() - 1)]);
        let w = if b[0] > a[0] { ((ti - a[0]) / (b[0] - a[0])).clamp(0.0, 1.0) } else { 0.0 };
        t.push(ti);
        z.push(Complex64::new(a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2])));
    }
    (t, z)
}

/// Least-squares fit `z ≈ a + b e^{iωt}`, as `(residual, b)`.
fn circle_fit(t: &[f64], z: &[Complex64], omega: f64) -> (f64, Complex64) {
    let n = t.len() as f64;
    let e: Vec<Complex64> = t.iter().map(|ti| Complex64::from_polar(1.0, omega * (ti - t[0]))).collect();
    let s: Complex64 = e.iter().sum();
    let zs: Complex64 = z.iter().sum();
    let w: Complex64 = e.iter().zip(z).map(|(ei, zi)| ei.conj() * zi).sum();
    let det = n * n - s.norm_sqr();
    if det <= 1e-9 * n * n {
        return (f64::INFINITY, Complex64::new(0.0, 0.0));
    }
    let a = (n * zs - s * w) / det;
    let b = (n * w - s.conj() * zs) / det;
    (z.iter().zip(&e).map(|(zi, ei)| (zi - a - b * ei).norm_sqr()).sum(), b)
}

/// Average of the piecewise-linear `z` over `[a, t_end]`.
fn window_mean(t: &[f64], z: &[Complex64], a: f64) -> Complex64 {
    let n = t.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n - 1 {
        let (ta, tb) = (t[k], t[k + 1]);
        if tb <= a {
            continue;
        }
        let (lo, zlo) = if ta < a {
            let w = (a - ta) / (tb - ta);
            (a, z[k] + w * (z[k + 1] - z[k]))
        } else {
            (ta, z[k])
        };
        acc += 0.5 * (tb - lo) * (zlo + z[k + 1]);
    }
    acc / (t[n - 1] - a)
}

/// Rotation period from the dominant Fourier peak, refined by a circle fit;
/// center as the mean over the last whole number of periods.
pub fn anchoring_center(samples: &[[f64; 3]], transient_fraction: f64) -> Result<AnchorReport, RdError> {
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(RdError::InvalidArgument(format!(
            "transient fraction must lie in [0, 1), got {transient_fraction}"
        )));
    }
    let cut = (transient_fraction * samples.len() as f64).floor() as usize;
    let kept = &samples[cut.min(samples.len())..];
    if kept.len() < 4 * MIN_PERIODS {
        return Err(RdError::ShortSeries(format!("{} tip samples after the transient cut", kept.len())));
    }
    let (t, z) = uniform(kept);
    let n = t.len();
    let dt = t[1] - t[0];
    let span = t[n - 1] - t[0];
    // linear trend removed so drift does not mask the rotation peak
    let tm = t.iter().sum::<f64>() / n as f64;
    let mean = z.iter().sum::<Complex64>() / n as f64;
    let slope = t.iter().zip(&z).map(|(ti, zi)| (ti - tm) * (zi - mean)).sum::<Complex64>()
        / t.iter().map(|ti| (ti - tm).powi(2)).sum::<f64>();
    let mut buf: Vec<Complex64> = t.iter().zip(&z).map(|(ti, zi)| zi - mean - slope * (ti - tm)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = power.iter().skip(1).sum();
    let (kpk, ppk) = power
        .iter()
        .enumerate()
        .filter(|(k, _)| (*k).min(n - *k) >= MIN_PERIODS)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, p)| (k, *p))
        .ok_or_else(|| RdError::ShortSeries("no rotation frequency in the spectrum".into()))?;
    let signed = if kpk <= n / 2 { kpk as f64 } else { kpk as f64 - n as f64 };
    let df = TAU / (n as f64 * dt);
    let omega0 = signed * df;

    // golden-section refinement of the peak frequency by a circle fit
    let (mut a, mut b) = (omega0 - df, omega0 + df);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (circle_fit(&t, &z, c).0, circle_fit(&t, &z, d).0);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * omega0.abs().max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = circle_fit(&t, &z, c).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = circle_fit(&t, &z, d).0;
        }
    }
    let omega = 0.5 * (a + b);
    if omega == 0.0 {
        return Err(RdError::ShortSeries("no rotation frequency".into()));
    }
    let period = TAU / omega.abs();
    let whole = (span / period + 1e-9).floor() as usize;
    if whole < MIN_PERIODS {
        return Err(RdError::ShortSeries(format!(
            "{:.2} rotations after the transient cut, need {MIN_PERIODS}",
            span / period
        )));
    }
    let t_end = t[n - 1];
    let start = (t_end - whole as f64 * period).max(t[0]);
    let center = window_mean(&t, &z, start);

    // per-period centers and their linear trend
    let mut pc: Vec<(f64, Complex64)> = Vec::with_capacity(whole);
    for p in 0..whole {
        let lo = t_end - (whole - p) as f64 * period;
        let hi = lo + period;
        let idx: Vec<usize> = (0..n).filter(|&k| t[k] >= lo - 1e-12 && t[k] <= hi + 1e-12).collect();
        if idx.len() < 2 {
            continue;
        }
        let (ts, zs): (Vec<f64>, Vec<Complex64>) = idx.iter().map(|&k| (t[k], z[k])).unzip();
        pc.push((0.5 * (lo + hi), window_mean(&ts, &zs, ts[0])));
    }
    let drift = if pc.len() >= 2 {
        let tm = pc.iter().map(|p| p.0).sum::<f64>() / pc.len() as f64;
        let zm = pc.iter().map(|p| p.1).sum::<Complex64>() / pc.len() as f64;
        let num: Complex64 = pc.iter().map(|(ti, zi)| (ti - tm) * (zi - zm)).sum();
        let den: f64 = pc.iter().map(|(ti, _)| (ti - tm).powi(2)).sum();
        num / den
    } else {
        Complex64::new(0.0, 0.0)
    };
    let radius = circle_fit(&t, &z, omega).1.norm();
    let dominant = ppk >= PEAK_SHARE * total;
    let anchored = dominant && drift.norm() * period <= DRIFT_TOL * radius.max(1e-12);
    Ok(AnchorReport {
        center: [center.re, center.im],
        period,
        radius,
        drift: [drift.re, drift.im],
        anchored,
        periods_used: whole,
    })
}
