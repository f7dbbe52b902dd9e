//! Derived observables: localization fraction and retention time, atomic
//! decay-tail fits, wavepacket centroid velocity, and detector-site spectra.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Probability stored near the coupling region and how long it persists.
#[derive(Debug, Clone)]
pub struct LocalizationMetric {
    pub window_halfwidth: i32,
    pub threshold_fraction: f64,
    pub time: Vec<f64>,
    /// `P_loc(t) = sum_{|m| <= w} |v_m|^2` per snapshot.
    pub p_loc: Vec<f64>,
    pub peak: f64,
    pub peak_time: f64,
    /// Length of the maximal interval after the global peak during which
    /// `P_loc` stays at or above `threshold_fraction * peak`.
    pub retention_time: f64,
}

/// Compute the localization fraction series and its retention time.
pub fn localization_fraction(
    traj: &Trajectory,
    window_halfwidth: i32,
    threshold_fraction: f64,
) -> Result<LocalizationMetric> {
    if traj.is_empty() {
        return Err(Error::Data("empty trajectory".into()));
    }
    let p_loc: Vec<f64> = (0..traj.len())
        .map(|snap| traj.window_prob(snap, window_halfwidth))
        .collect();
    // First global maximum, so retention is measured from when the window
    // first fills.
    let mut peak_idx = 0;
    for (i, &p) in p_loc.iter().enumerate() {
        if p > p_loc[peak_idx] {
            peak_idx = i;
        }
    }
    let peak = p_loc[peak_idx];
    let threshold = threshold_fraction * peak;
    let mut last_ok = peak_idx;
    for j in peak_idx + 1..p_loc.len() {
        if p_loc[j] >= threshold {
            last_ok = j;
        } else {
            break;
        }
    }
    Ok(LocalizationMetric {
        window_halfwidth,
        threshold_fraction,
        time: traj.time.clone(),
        p_loc,
        peak,
        peak_time: traj.time[peak_idx],
        retention_time: traj.time[last_ok] - traj.time[peak_idx],
    })
}

/// Exponential decay rate fitted to the atomic excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub fit_window: (f64, f64),
    /// `-slope` of the log-linear fit to `|xi|^2`, in units of `eta`.
    pub rate: f64,
    /// RMS residual of the fit relative to the spanned log range.
    pub goodness: f64,
}

/// Least-squares line fit to `log |xi|^2` over `[t_start, t_end]`.
pub fn decay_fit(traj: &Trajectory, t_start: f64, t_end: f64) -> Result<DecayFit> {
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (i, &t) in traj.time.iter().enumerate() {
        if t < t_start || t > t_end {
            continue;
        }
        let xi2 = traj.atom_prob[i];
        if xi2 <= 0.0 {
            return Err(Error::Data(format!(
                "|xi|^2 = {xi2} at t = {t} is not positive; cannot fit a log-linear decay"
            )));
        }
        ts.push(t);
        logs.push(xi2.ln());
    }
    if ts.len() < 10 {
        return Err(Error::Data(format!(
            "decay fit window [{t_start}, {t_end}] holds only {} snapshots (need >= 10)",
            ts.len()
        )));
    }
    let (slope, intercept) = linear_fit(&ts, &logs);
    let rms = {
        let sum_sq: f64 = ts
            .iter()
            .zip(&logs)
            .map(|(&t, &y)| {
                let r = y - (slope * t + intercept);
                r * r
            })
            .sum();
        (sum_sq / ts.len() as f64).sqrt()
    };
    let span = {
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min).max(f64::EPSILON)
    };
    Ok(DecayFit {
        fit_window: (t_start, t_end),
        rate: -slope,
        goodness: rms / span,
    })
}

/// Velocity of the probability centroid, from a linear fit of
/// `sum_m m |v_m|^2 / sum_m |v_m|^2` against time over the window.
///
/// The caller is responsible for choosing a window dominated by a single
/// coherent wavepacket; multi-packet windows return the mean drift of the
/// whole distribution.
pub fn centroid_velocity(traj: &Trajectory, t_window: (f64, f64)) -> Result<f64> {
    let mut ts = Vec::new();
    let mut centroids = Vec::new();
    for (snap, &t) in traj.time.iter().enumerate() {
        if t < t_window.0 || t > t_window.1 {
            continue;
        }
        let probs = &traj.site_prob[snap];
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            num += (traj.m_min + i as i32) as f64 * p;
            den += p;
        }
        if den <= 0.0 {
            return Err(Error::Data(format!(
                "zero-norm snapshot at t = {t} inside the centroid window"
            )));
        }
        ts.push(t);
        centroids.push(num / den);
    }
    if ts.len() < 2 {
        return Err(Error::Data(format!(
            "centroid window [{}, {}] holds fewer than 2 snapshots",
            t_window.0, t_window.1
        )));
    }
    let (slope, _) = linear_fit(&ts, &centroids);
    Ok(slope)
}

/// Discrete spectrum of the complex amplitude at one site over `t_range`,
/// with a flat window.
///
/// Returns `(omega, spectral density)` pairs ordered by frequency, normalized
/// so that `sum_j S_j * d_omega` equals the time-integrated `|v|^2` (Parseval
/// with the rectangle rule). Frequencies follow the amplitude convention
/// `v ~ e^{-i omega t}`, so a mode at `omega_k` shows up at `omega = omega_k`.
pub fn detector_spectrum(
    traj: &Trajectory,
    detector_site: i32,
    t_range: (f64, f64),
) -> Result<Vec<(f64, f64)>> {
    if traj.is_empty() {
        return Err(Error::Data("empty trajectory".into()));
    }
    let t_first = traj.time[0];
    let t_last = *traj.time.last().unwrap();
    if t_range.0 < t_first || t_range.1 > t_last || t_range.0 >= t_range.1 {
        return Err(Error::Data(format!(
            "spectrum range [{}, {}] outside trajectory span [{t_first}, {t_last}]",
            t_range.0, t_range.1
        )));
    }
    let series = traj.amp_at_site(detector_site)?;
    let samples: Vec<Complex64> = traj
        .time
        .iter()
        .zip(&series)
        .filter(|(&t, _)| t_range.0 <= t && t <= t_range.1)
        .map(|(_, &a)| a)
        .collect();
    let n = samples.len();
    if n < 4 {
        return Err(Error::Data(format!(
            "spectrum range holds only {n} snapshots (need >= 4)"
        )));
    }
    let times: Vec<f64> = traj
        .time
        .iter()
        .copied()
        .filter(|&t| t_range.0 <= t && t <= t_range.1)
        .collect();
    let dt = times[1] - times[0];

    let mut out = Vec::with_capacity(n);
    let half = (n / 2) as i64;
    let scale = dt * dt / TAU;
    for jj in -half..(n as i64 - half) {
        let omega = TAU * jj as f64 / (n as f64 * dt);
        let mut acc = Complex64::ZERO;
        for (idx, &x) in samples.iter().enumerate() {
            let phase = TAU * jj as f64 * idx as f64 / n as f64;
            acc += x * Complex64::from_polar(1.0, phase);
        }
        out.push((omega, scale * acc.norm_sqr()));
    }
    Ok(out)
}

/// Time-integrated `|v|^2` at a site over `t_range` with the rectangle rule;
/// the quantity the spectrum integrates to.
pub fn integrated_intensity(
    traj: &Trajectory,
    detector_site: i32,
    t_range: (f64, f64),
) -> Result<f64> {
    let series = traj.amp_at_site(detector_site)?;
    let mut total = 0.0;
    let mut dt = None;
    let mut prev: Option<f64> = None;
    for (&t, amp) in traj.time.iter().zip(&series) {
        if t < t_range.0 || t > t_range.1 {
            continue;
        }
        if let Some(p) = prev {
            dt = Some(t - p);
        }
        prev = Some(t);
        total += amp.norm_sqr();
    }
    let dt = dt.ok_or_else(|| Error::Data("fewer than 2 snapshots in range".into()))?;
    Ok(total * dt)
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, mean_y - slope * mean_x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Synthetic trajectory on [-20, 20] with a movable block of probability
    /// and a prescribed atomic series.
    fn synthetic(times: &[f64], center: impl Fn(f64) -> f64, xi2: impl Fn(f64) -> f64) -> Trajectory {
        let mut traj = Trajectory::new(-20);
        for &t in times {
            let c = center(t);
            let mut amps = vec![Complex64::ZERO; 41];
            for (i, a) in amps.iter_mut().enumerate() {
                let m = (i as i32 - 20) as f64;
                let w = (-(m - c) * (m - c) / 8.0).exp();
                *a = Complex64::new(w.sqrt(), 0.0);
            }
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            let scale = (1.0 / norm).sqrt();
            for a in &mut amps {
                *a *= scale;
            }
            let atom = Complex64::new(xi2(t).sqrt(), 0.0);
            traj.push_snapshot(t, &amps, atom);
        }
        traj
    }

    #[test]
    fn retention_measures_the_post_peak_plateau() {
        // P_loc rises, peaks at t = 10, stays above 0.3 * peak until t = 30.
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.5).collect();
        let traj = synthetic(
            &times,
            |t| {
                if t < 10.0 {
                    2.0 * (10.0 - t) // approaches the window
                } else if t <= 30.0 {
                    0.0 // parked at the center
                } else {
                    (t - 30.0) * 30.0 // leaves within one snapshot
                }
            },
            |_| 1e-6,
        );
        let metric = localization_fraction(&traj, 10, 0.3).unwrap();
        assert!((metric.peak_time - 10.0).abs() <= 0.5);
        assert!(
            (metric.retention_time - 20.0).abs() <= 1.0,
            "retention {}",
            metric.retention_time
        );
    }

    #[test]
    fn p_loc_never_exceeds_the_norm() {
        let times: Vec<f64> = (0..=50).map(|i| i as f64).collect();
        let traj = synthetic(&times, |t| 15.0 - t * 0.6, |_| 0.25);
        let metric = localization_fraction(&traj, 10, 0.3).unwrap();
        for (snap, &p) in metric.p_loc.iter().enumerate() {
            assert!(p <= traj.norm[snap] + 1e-12);
        }
    }

    #[test]
    fn empty_trajectory_is_a_data_error() {
        let traj = Trajectory::new(0);
        assert!(matches!(
            localization_fraction(&traj, 10, 0.3),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn exact_exponential_rate_is_recovered() {
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.5).collect();
        let traj = synthetic(&times, |_| 0.0, |t| (-0.1 * t).exp());
        let fit = decay_fit(&traj, 10.0, 90.0).unwrap();
        assert!((fit.rate - 0.1).abs() < 1e-9, "rate {}", fit.rate);
        assert!(fit.goodness < 1e-12);
    }

    #[test]
    fn decay_fit_rejects_bad_windows() {
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.5).collect();
        let traj = synthetic(&times, |_| 0.0, |t| if t > 50.0 { 0.0 } else { 1.0 });
        // Nonpositive values inside the window.
        assert!(matches!(decay_fit(&traj, 10.0, 90.0), Err(Error::Data(_))));
        // Too few snapshots.
        assert!(matches!(decay_fit(&traj, 10.0, 12.0), Err(Error::Data(_))));
    }

    #[test]
    fn centroid_velocity_tracks_uniform_motion() {
        let times: Vec<f64> = (0..=60).map(|i| i as f64 * 0.25).collect();
        let traj = synthetic(&times, |t| -12.0 + 1.4 * t, |_| 1e-8);
        let v = centroid_velocity(&traj, (1.0, 14.0)).unwrap();
        assert!((v - 1.4).abs() < 0.05, "velocity {v}");
    }

    #[test]
    fn spectrum_satisfies_parseval() {
        // A chirped, decaying sample series; the identity is structural.
        let mut traj = Trajectory::new(-2);
        for i in 0..256 {
            let t = i as f64 * 0.2;
            let amps = vec![
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::from_polar((-0.01 * t).exp(), 0.7 * t + 0.01 * t * t),
                Complex64::ZERO,
                Complex64::ZERO,
            ];
            traj.push_snapshot(t, &amps, Complex64::ZERO);
        }
        let range = (0.0, 51.0);
        let spec = detector_spectrum(&traj, 0, range).unwrap();
        let n = spec.len() as f64;
        let d_omega = TAU / (n * 0.2);
        let lhs: f64 = spec.iter().map(|(_, s)| s * d_omega).sum();
        let rhs = integrated_intensity(&traj, 0, range).unwrap();
        assert!((lhs - rhs).abs() < 1e-9 * rhs.max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn spectrum_peaks_at_the_oscillation_frequency() {
        // v(t) = e^{-i w0 t} should peak at omega = w0 under the sign
        // convention used for the band.
        let w0 = 0.8;
        let mut traj = Trajectory::new(0);
        for i in 0..400 {
            let t = i as f64 * 0.1;
            let amps = vec![Complex64::from_polar(1.0, -w0 * t)];
            traj.push_snapshot(t, &amps, Complex64::ZERO);
        }
        let spec = detector_spectrum(&traj, 0, (0.0, 39.9)).unwrap();
        let peak = spec
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert!((peak - w0).abs() < 0.1, "peak at {peak}, expected {w0}");
    }

    #[test]
    fn spectrum_range_outside_trajectory_is_an_error() {
        let mut traj = Trajectory::new(0);
        for i in 0..64 {
            traj.push_snapshot(i as f64, &[Complex64::ONE], Complex64::ZERO);
        }
        assert!(matches!(
            detector_spectrum(&traj, 0, (10.0, 100.0)),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            detector_spectrum(&traj, 5, (0.0, 10.0)),
            Err(Error::Dimension(_))
        ));
    }
}
