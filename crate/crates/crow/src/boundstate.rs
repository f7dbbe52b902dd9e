//! Closed-form stationary solution of the slow sector and its diagnostics.
//!
//! With the propagating sector erased, the slow-sector equations admit a
//! zero-frequency solution with `j_{k,s+} = 0` and
//! `x_s = sqrt(2d)/(2 kappa) (Omega - omega_k) j_{k,s-}` for every label.
//! Normalizing with the conserved reduced-model weighting fixes the state up
//! to a global phase, chosen here so the atomic amplitude is real and
//! positive. The photon part is concentrated near the band edges when
//! `Omega > eta` (the localized modes) and pushed to moving modes when
//! `Omega < eta`, which is why only a narrow window of `Omega` stores light.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::reduced::{rhs_reduced, ReducedState, SectorCoupling};

/// Relative detuning below which the stationary solution is treated as
/// singular.
const RESONANCE_GUARD: f64 = 1e-9;

/// The normalized stationary state of the slow sector.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub d: i32,
    /// Modulation frequency the state was solved at.
    pub omega_mod: f64,
    /// Photon amplitudes `j_{k,s-}` for `k in [0, d/4)`; real with the
    /// global phase fixed by `x_s > 0` (`j_{k,s+} = 0` identically).
    pub j_s_minus: Vec<f64>,
    /// Atomic amplitude, real and positive.
    pub x_s: f64,
    /// `|x_s|^2`.
    pub atom_weight: f64,
    /// Multiplicity-weighted photon probability; `atom_weight +
    /// photon_weight = 1`.
    pub photon_weight: f64,
}

impl BoundState {
    /// Weighted fraction of the photon part in the lowest 10% of labels
    /// (the slowest, most localized modes). Zero when the photon part is
    /// empty.
    pub fn localization_share(&self) -> f64 {
        share_of_lowest(&self.j_s_minus)
    }

    /// Embed into a reduced-model state (propagating sector zero).
    pub fn to_reduced_state(&self) -> ReducedState {
        let nk = self.j_s_minus.len();
        let mut state = ReducedState::zero(self.d).expect("bound state carries a valid d");
        for k in 0..nk {
            state.j_s_minus[k] = Complex64::new(self.j_s_minus[k], 0.0);
        }
        state.chi = Complex64::new(self.x_s, 0.0);
        state
    }
}

fn multiplicity_weight(k: usize) -> f64 {
    if k == 0 {
        0.5
    } else {
        1.0
    }
}

fn share_of_lowest(j: &[f64]) -> f64 {
    let total: f64 = j
        .iter()
        .enumerate()
        .map(|(k, x)| multiplicity_weight(k) * x * x)
        .sum();
    if total == 0.0 {
        return 0.0;
    }
    let n_low = ((j.len() as f64) * 0.1).ceil() as usize;
    let low: f64 = j
        .iter()
        .take(n_low)
        .enumerate()
        .map(|(k, x)| multiplicity_weight(k) * x * x)
        .sum();
    low / total
}

/// Solve the stationary state at the model's `omega_mod`.
///
/// Fails with a resonance error when `Omega` coincides with a slow-sector
/// mode frequency to within `1e-9 eta`.
pub fn solve_bound_state(params: &ModelParams, d: i32) -> Result<BoundState> {
    if d < 8 || d % 4 != 0 {
        return Err(Error::Dimension(format!(
            "bound-state solver requires d >= 8 and d divisible by 4, got d = {d}"
        )));
    }
    let nk = (d / 4) as usize;
    let kappa_norm2 = 2.0 * params.kappa / ((2 * d) as f64).sqrt();
    let mut unnorm = Vec::with_capacity(nk);
    let mut photon_raw = 0.0;
    for k in 0..nk {
        let omega_k = 2.0 * params.eta * (k as f64 * PI / d as f64).cos();
        let detuning = params.omega_mod - omega_k;
        if detuning.abs() < RESONANCE_GUARD * params.eta {
            return Err(Error::Resonance {
                k: k as i32,
                omega_k,
            });
        }
        let u = kappa_norm2 / detuning;
        photon_raw += multiplicity_weight(k) * u * u;
        unnorm.push(u);
    }
    let norm = (1.0 + photon_raw).sqrt();
    let x_s = 1.0 / norm;
    let j_s_minus: Vec<f64> = unnorm.iter().map(|u| u / norm).collect();
    Ok(BoundState {
        d,
        omega_mod: params.omega_mod,
        j_s_minus,
        x_s,
        atom_weight: x_s * x_s,
        photon_weight: photon_raw / (norm * norm),
    })
}

/// One row of an `Omega` scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub omega_mod: f64,
    pub outcome: ScanOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScanOutcome {
    Ok {
        atom_weight: f64,
        photon_weight: f64,
        localization_share: f64,
    },
    Singular {
        k: i32,
        omega_k: f64,
    },
}

/// Solve the stationary state across a list of modulation frequencies.
/// Singular entries are marked and the scan continues.
pub fn atom_weight_scan(params: &ModelParams, d: i32, omegas: &[f64]) -> Vec<ScanRow> {
    omegas
        .iter()
        .map(|&omega_mod| {
            let p = ModelParams {
                omega_mod,
                ..params.clone()
            };
            let outcome = match solve_bound_state(&p, d) {
                Ok(bs) => ScanOutcome::Ok {
                    atom_weight: bs.atom_weight,
                    photon_weight: bs.photon_weight,
                    localization_share: bs.localization_share(),
                },
                Err(Error::Resonance { k, omega_k }) => ScanOutcome::Singular { k, omega_k },
                Err(_) => unreachable!("scan inputs share a validated d"),
            };
            ScanRow { omega_mod, outcome }
        })
        .collect()
}

/// Embed the state into the reduced model with the propagating sector erased
/// and return the largest derivative magnitude. Stationarity contract:
/// `< 1e-12`.
pub fn verify_stationarity(bs: &BoundState, params: &ModelParams) -> Result<f64> {
    let state = bs.to_reduced_state();
    let deriv = rhs_reduced(&state, params, SectorCoupling::Off)?;
    Ok(deriv.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn params(omega_mod: f64, kappa: f64) -> ModelParams {
        ModelParams {
            eta: 1.0,
            omega_mod,
            kappa,
            coupled_sites: vec![-1, 0, 1],
        }
    }

    #[test]
    fn profile_decreases_above_the_band_and_not_below() {
        let d = 500;
        let above = solve_bound_state(&params(2.05, 0.5), d).unwrap();
        for w in above.j_s_minus.windows(2) {
            assert!(w[0].abs() > w[1].abs(), "not strictly decreasing");
        }
        let below = solve_bound_state(&params(0.5, 0.5), d).unwrap();
        let magnitudes: Vec<f64> = below.j_s_minus.iter().map(|j| j.abs()).collect();
        let argmax = magnitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(argmax > 0, "maximum should sit at k > 0 for Omega < eta");
        for w in magnitudes.windows(2) {
            assert!(w[1] > w[0], "not strictly increasing");
        }
    }

    #[test]
    fn amplitude_ratios_follow_the_detuning() {
        let d = 500;
        let p = params(2.05, 0.5);
        let bs = solve_bound_state(&p, d).unwrap();
        for k in [1usize, 40, 124] {
            let omega_k = 2.0 * (k as f64 * PI / d as f64).cos();
            let expected = (p.omega_mod - omega_k) / (p.omega_mod - 2.0);
            let ratio = bs.j_s_minus[0] / bs.j_s_minus[k];
            assert!(
                (ratio - expected).abs() < 1e-10,
                "ratio at k = {k}: {ratio} vs {expected}"
            );
        }
        // At the region edge omega_k = sqrt2 eta the ratio evaluates to
        // ~12.72 for Omega = 2.05 eta.
        let edge_ratio = (2.05 - SQRT_2) / (2.05 - 2.0);
        assert!((edge_ratio - 12.7157).abs() < 1e-3);
    }

    #[test]
    fn normalization_splits_between_atom_and_photon() {
        for &omega in &[0.5, 1.5, 2.05, 3.0] {
            for &d in &[100, 500] {
                let bs = solve_bound_state(&params(omega, 0.5), d).unwrap();
                assert!(
                    (bs.atom_weight + bs.photon_weight - 1.0).abs() < 1e-12,
                    "weights do not sum to 1 at omega = {omega}, d = {d}"
                );
                assert!(bs.x_s > 0.0);
            }
        }
    }

    #[test]
    fn atom_weight_grows_with_omega_above_the_band() {
        let d = 500;
        let rows = atom_weight_scan(&params(2.05, 0.5), d, &[2.05, 2.5, 3.0, 4.0]);
        let weights: Vec<f64> = rows
            .iter()
            .map(|r| match r.outcome {
                ScanOutcome::Ok { atom_weight, .. } => atom_weight,
                _ => panic!("unexpected singularity"),
            })
            .collect();
        for w in weights.windows(2) {
            assert!(w[1] > w[0], "atom weight not monotone: {weights:?}");
        }
        // Far detuning leaves the excitation almost entirely on the atom.
        let far = solve_bound_state(&params(50.0, 0.5), d).unwrap();
        assert!(far.photon_weight < 1e-4);
    }

    #[test]
    fn localization_share_contrasts_the_two_regimes() {
        let d = 500;
        let stored = solve_bound_state(&params(2.05, 0.5), d).unwrap();
        let leaky = solve_bound_state(&params(0.5, 0.5), d).unwrap();
        assert!(
            stored.localization_share() > 5.0 * leaky.localization_share(),
            "shares: {} vs {}",
            stored.localization_share(),
            leaky.localization_share()
        );
    }

    #[test]
    fn solutions_are_stationary() {
        for &omega in &[1.5, 2.05, 3.0] {
            for &d in &[100, 500] {
                let p = params(omega, 0.5);
                let bs = solve_bound_state(&p, d).unwrap();
                let residual = verify_stationarity(&bs, &p).unwrap();
                assert!(
                    residual < 1e-12,
                    "residual {residual} at omega = {omega}, d = {d}"
                );
            }
        }
    }

    #[test]
    fn perturbed_state_leaves_a_detuning_sized_residual() {
        let d = 500;
        let p = params(2.05, 0.5);
        let bs = solve_bound_state(&p, d).unwrap();
        let mut state = bs.to_reduced_state();
        state.j_s_plus[0] = Complex64::new(0.01, 0.0);
        let deriv = rhs_reduced(&state, &p, SectorCoupling::Off).unwrap();
        let expected = (p.omega_mod - 2.0) * 0.01;
        assert!(
            (deriv.max_abs() - expected).abs() < 1e-12,
            "residual {} vs {expected}",
            deriv.max_abs()
        );
    }

    #[test]
    fn zero_state_has_zero_residual() {
        let p = params(2.05, 0.5);
        let state = ReducedState::zero(100).unwrap();
        let deriv = rhs_reduced(&state, &p, SectorCoupling::Off).unwrap();
        assert_eq!(deriv.max_abs(), 0.0);
    }

    #[test]
    fn coupling_scale_leaves_the_profile_shape_invariant() {
        let d = 100;
        let a = solve_bound_state(&params(2.05, 0.5), d).unwrap();
        let b = solve_bound_state(&params(2.05, 1.0), d).unwrap();
        for k in 1..a.j_s_minus.len() {
            let ra = a.j_s_minus[k] / a.j_s_minus[0];
            let rb = b.j_s_minus[k] / b.j_s_minus[0];
            assert!((ra - rb).abs() < 1e-12);
        }
        // x_s / j_0 scales as 1 / kappa.
        let qa = a.x_s / a.j_s_minus[0];
        let qb = b.x_s / b.j_s_minus[0];
        assert!((qa / qb - 2.0).abs() < 1e-10);
    }

    #[test]
    fn exact_resonance_is_a_named_singularity() {
        let d = 500;
        let k_res = 100;
        let omega = 2.0 * (k_res as f64 * PI / d as f64).cos();
        let err = solve_bound_state(&params(omega, 0.5), d).unwrap_err();
        match err {
            Error::Resonance { k, .. } => assert_eq!(k, k_res),
            other => panic!("expected resonance error, got {other:?}"),
        }
        // The scan marks the singular row and keeps going.
        let rows = atom_weight_scan(&params(2.05, 0.5), d, &[omega, 2.05]);
        assert!(matches!(rows[0].outcome, ScanOutcome::Singular { .. }));
        assert!(matches!(rows[1].outcome, ScanOutcome::Ok { .. }));
    }

    #[test]
    fn decoupled_atom_is_the_whole_state() {
        let bs = solve_bound_state(&params(2.05, 0.0), 100).unwrap();
        assert_eq!(bs.atom_weight, 1.0);
        assert_eq!(bs.photon_weight, 0.0);
        assert_eq!(bs.localization_share(), 0.0);
    }
}
