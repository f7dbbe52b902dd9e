//! Cross-validation between the three propagation backends.

use crow::kspace::{run_kspace, CouplingMode};
use crow::model::{ExcitationSpec, IntegratorConfig, LatticeSpec, ModelParams};
use crow::real::run_real;
use crow::reduced::{construct_j, run_reduced};

fn params(omega_mod: f64, kappa: f64) -> ModelParams {
    ModelParams {
        eta: 1.0,
        omega_mod,
        kappa,
        coupled_sites: vec![-1, 0, 1],
    }
}

fn lattice(d: i32) -> LatticeSpec {
    LatticeSpec {
        m_min: -d,
        m_max: d - 1,
        d,
    }
}

fn packet(m0: i32, delta_m: f64) -> ExcitationSpec {
    ExcitationSpec::InitialWavepacket {
        m0,
        delta_m,
        k0: -0.5,
    }
}

/// With the atom decoupled the transform is exact and only the hard-wall vs
/// periodic boundary differs; before any boundary contact the two backends
/// agree per amplitude.
#[test]
fn free_packet_agrees_between_real_and_kspace() {
    let p = params(2.05, 0.0);
    let lat = lattice(64);
    let exc = packet(-30, 5.0);
    let integ = IntegratorConfig {
        dt: 0.005,
        t_end: 10.0,
        snapshot_stride: 200,
    };
    let real = run_real(&p, &lat, &exc, &integ).unwrap();
    let krun = run_kspace(&p, &lat, &exc, &integ, CouplingMode::ModeSeparated).unwrap();
    assert_eq!(real.len(), krun.real.len());
    for snap in 0..real.len() {
        for (a, b) in real.site_amp[snap].iter().zip(&krun.real.site_amp[snap]) {
            assert!(
                (a - b).norm() < 1e-8,
                "amplitude mismatch at t = {}",
                real.time[snap]
            );
        }
    }
}

/// The unapproximated momentum-space coupling is the Bloch transform of the
/// real-space equations, so with the atom coupled the two backends still
/// track each other to integrator precision while the packet is away from
/// the boundaries. This pins every phase convention in the transform and in
/// both couplings at once.
#[test]
fn coupled_dynamics_agree_between_real_and_exact_kspace() {
    let p = params(2.05, 0.5);
    let lat = lattice(64);
    let exc = packet(-30, 5.0);
    let integ = IntegratorConfig {
        dt: 0.005,
        t_end: 25.0,
        snapshot_stride: 200,
    };
    let real = run_real(&p, &lat, &exc, &integ).unwrap();
    let krun = run_kspace(&p, &lat, &exc, &integ, CouplingMode::Exact).unwrap();
    for snap in 0..real.len() {
        for (a, b) in real.site_amp[snap].iter().zip(&krun.real.site_amp[snap]) {
            assert!(
                (a - b).norm() < 1e-7,
                "amplitude mismatch at t = {}: {a} vs {b}",
                real.time[snap]
            );
        }
        assert!(
            (real.atom_prob[snap] - krun.k.chi_prob[snap]).abs() < 1e-9,
            "atom mismatch at t = {}",
            real.time[snap]
        );
    }
    // The atom actually participates in this window.
    let chi_peak = krun.k.chi_prob.iter().cloned().fold(0.0, f64::max);
    assert!(chi_peak > 1e-3, "atom never excited: {chi_peak}");
}

/// Evolving the collective variables directly reproduces the collectives of
/// the mode-separated momentum-space run: the reduction is the same physics
/// in a rotated frame, minus the four region-boundary modes.
#[test]
fn reduced_collectives_track_the_kspace_run() {
    let p = params(2.05, 0.5);
    let d = 128;
    let lat = lattice(d);
    let exc = packet(-64, 8.0);
    let integ = IntegratorConfig {
        dt: 0.005,
        t_end: 60.0,
        snapshot_stride: 400,
    };
    let krun = run_kspace(&p, &lat, &exc, &integ, CouplingMode::ModeSeparated).unwrap();
    let red = run_reduced(&p, &lat, &exc, &integ).unwrap();
    assert_eq!(krun.k.len(), red.reduced.len());

    let mut max_j_diff = 0.0f64;
    let mut max_chi_diff = 0.0f64;
    for snap in 0..krun.k.len() {
        let from_k = construct_j(&krun.k.state_at(snap), &p).unwrap();
        for k in 0..from_k.sector_len() {
            for (a, b) in [
                (from_k.j_s_plus[k].norm_sqr(), red.reduced.j_s_plus[snap][k]),
                (from_k.j_s_minus[k].norm_sqr(), red.reduced.j_s_minus[snap][k]),
                (from_k.j_0_plus[k].norm_sqr(), red.reduced.j_0_plus[snap][k]),
                (from_k.j_0_minus[k].norm_sqr(), red.reduced.j_0_minus[snap][k]),
            ] {
                max_j_diff = max_j_diff.max((a - b).abs());
            }
        }
        max_chi_diff =
            max_chi_diff.max((krun.k.chi_prob[snap] - red.reduced.chi_prob[snap]).abs());
    }
    // The residual is the four region-boundary modes the reduction drops;
    // any wrong rotation rate shows up here at order one.
    assert!(max_j_diff < 1e-3, "collective populations diverged: {max_j_diff}");
    assert!(max_chi_diff < 1e-3, "atom populations diverged: {max_chi_diff}");
}

/// Near the storage resonance the reduced model localizes probability at the
/// coupling region; far below the band it cannot.
#[test]
fn reduced_localization_depends_on_omega() {
    let d = 256;
    let lat = lattice(d);
    let exc = packet(-128, 10.0);
    let integ = IntegratorConfig {
        dt: 0.005,
        t_end: 120.0,
        snapshot_stride: 400,
    };
    let stored = run_reduced(&params(2.05, 0.5), &lat, &exc, &integ).unwrap();
    let leaky = run_reduced(&params(0.5, 0.5), &lat, &exc, &integ).unwrap();

    // Averaging starts after the transit tail (packet width ~3 delta_m)
    // has cleared the window.
    let mean_window = |run: &crow::reduced::ReducedRun| -> f64 {
        let mut total = 0.0;
        let mut count = 0;
        for snap in 0..run.real.len() {
            if run.real.time[snap] >= 90.0 {
                total += run.real.window_prob(snap, 10);
                count += 1;
            }
        }
        total / count as f64
    };
    let p_stored = mean_window(&stored);
    let p_leaky = mean_window(&leaky);
    assert!(
        p_stored > 5.0 * p_leaky,
        "no storage contrast: {p_stored} vs {p_leaky}"
    );

    // Below the band the slow sector piles up at the moving end of its
    // range rather than at the localized k = 0 modes.
    let last = leaky.reduced.len() - 1;
    let profile = &leaky.reduced.j_s_minus[last];
    let argmax = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert!(
        argmax > profile.len() / 2,
        "slow-sector weight should sit at large k, argmax = {argmax}"
    );
}

/// Scattering at the storage resonance populates the band edges; far off
/// resonance it does not.
#[test]
fn band_edge_weight_requires_the_resonance() {
    let d = 256;
    let lat = lattice(d);
    let exc = packet(-128, 10.0);
    let integ = IntegratorConfig {
        dt: 0.005,
        t_end: 120.0,
        snapshot_stride: 2000,
    };
    let edge_weight = |omega: f64| -> f64 {
        let run = run_kspace(
            &params(omega, 0.5),
            &lat,
            &exc,
            &integ,
            CouplingMode::ModeSeparated,
        )
        .unwrap();
        let last = run.k.len() - 1;
        let probs = &run.k.k_prob[last];
        let mut total = 0.0;
        for (i, &pk) in probs.iter().enumerate() {
            let k = i as i32 - d;
            let theta = k as f64 * std::f64::consts::PI / d as f64;
            // Angular distance to the nearest band edge (0 or ±pi).
            let dist_top = theta.abs();
            let dist_bottom = std::f64::consts::PI - theta.abs();
            if dist_top < 0.1 || dist_bottom < 0.1 {
                total += pk;
            }
        }
        total
    };
    let near = edge_weight(2.05);
    let far = edge_weight(3.0);
    assert!(
        near > 5.0 * far,
        "band-edge weight contrast missing: {near} vs {far}"
    );
}

/// Global error against a dt/8 reference scales as dt^4 within a factor of
/// two across successive halvings.
#[test]
fn rk4_global_convergence_is_fourth_order() {
    let p = params(2.05, 0.5);
    let lat = LatticeSpec {
        m_min: -30,
        m_max: 30,
        d: 32,
    };
    let exc = packet(-10, 5.0);
    let run_at = |dt: f64| {
        let integ = IntegratorConfig {
            dt,
            t_end: 5.0,
            snapshot_stride: usize::MAX,
        };
        run_real(&p, &lat, &exc, &integ).unwrap()
    };
    let reference = run_at(0.005 / 8.0);
    let ref_final = reference.site_amp.last().unwrap();

    let error_at = |dt: f64| -> f64 {
        let run = run_at(dt);
        let last = run.site_amp.last().unwrap();
        last.iter()
            .zip(ref_final)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    };
    let e1 = error_at(0.02);
    let e2 = error_at(0.01);
    let e3 = error_at(0.005);
    let r12 = e1 / e2;
    let r23 = e2 / e3;
    assert!(
        (8.0..=32.0).contains(&r12),
        "error ratio {r12} not within 2x of 16 (errors {e1}, {e2})"
    );
    assert!(
        (8.0..=32.0).contains(&r23),
        "error ratio {r23} not within 2x of 16 (errors {e2}, {e3})"
    );
}
