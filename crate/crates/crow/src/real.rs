//! Real-space propagation of the single-excitation amplitudes.
//!
//! The working equations couple the resonator amplitudes `v_m` and the atomic
//! amplitude `xi`:
//!
//! ```text
//! dv_m/dt = -i eta (v_{m+1} + v_{m-1}) - i kappa xi e^{i m Omega t}   (m coupled)
//! dxi/dt  = -i kappa sum_{m coupled} v_m e^{-i m Omega t}
//! ```
//!
//! Amplitudes beyond the stored array are treated as zero (hard wall). An
//! optional boundary drive adds `-i S(t)` to `dv/dt` at the drive site, with
//! `S` the Gaussian pulse from [`crate::model::gaussian_drive`]; reported
//! probabilities for driven runs are normalized by the post-pulse norm
//! measured at `t0 + 6 tau`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{
    gaussian_pulse, ExcitationSpec, IntegratorConfig, LatticeSpec, ModelParams,
};
use crate::ode::{self, Rk4Scratch};
use crate::trajectory::Trajectory;

const NEG_I: Complex64 = Complex64::new(0.0, -1.0);

/// Photon amplitudes per site plus the atomic amplitude, at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealState {
    /// Site index of `v[0]`.
    pub m_min: i32,
    pub v: Vec<Complex64>,
    pub xi: Complex64,
    pub t: f64,
}

impl RealState {
    /// Zero state on `m_min..=m_max`.
    pub fn zero(m_min: i32, m_max: i32) -> Self {
        let n = (m_max - m_min + 1).max(0) as usize;
        Self {
            m_min,
            v: vec![Complex64::ZERO; n],
            xi: Complex64::ZERO,
            t: 0.0,
        }
    }

    pub fn m_max(&self) -> i32 {
        self.m_min + self.v.len() as i32 - 1
    }

    pub fn site_index(&self, m: i32) -> Option<usize> {
        let i = m - self.m_min;
        (i >= 0 && (i as usize) < self.v.len()).then_some(i as usize)
    }

    pub fn amp(&self, m: i32) -> Complex64 {
        self.site_index(m).map_or(Complex64::ZERO, |i| self.v[i])
    }

    /// Total probability `sum_m |v_m|^2 + |xi|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.v.iter().map(|a| a.norm_sqr()).sum::<f64>() + self.xi.norm_sqr()
    }
}

/// Time derivative of a [`RealState`].
#[derive(Debug, Clone)]
pub struct RealDeriv {
    pub dv: Vec<Complex64>,
    pub dxi: Complex64,
}

struct DrivePulse {
    site_index: usize,
    t0: f64,
    tau: f64,
}

/// Precomputed coupling layout for the right-hand side.
struct RealOp {
    eta: f64,
    kappa: f64,
    omega_mod: f64,
    /// (array index, site index) for each coupled site.
    coupled: Vec<(usize, i32)>,
    drive: Option<DrivePulse>,
}

impl RealOp {
    fn new(
        params: &ModelParams,
        m_min: i32,
        n_sites: usize,
        drive: Option<&ExcitationSpec>,
    ) -> Result<Self> {
        let index_of = |m: i32| -> Result<usize> {
            let i = m - m_min;
            if i < 0 || i as usize >= n_sites {
                return Err(Error::Dimension(format!(
                    "site {m} outside state lattice [{m_min}, {}]",
                    m_min + n_sites as i32 - 1
                )));
            }
            Ok(i as usize)
        };
        let coupled = params
            .coupled_sites
            .iter()
            .map(|&m| Ok((index_of(m)?, m)))
            .collect::<Result<Vec<_>>>()?;
        let drive = match drive {
            None => None,
            Some(ExcitationSpec::BoundaryDrive { drive_site, t0, tau }) => Some(DrivePulse {
                site_index: index_of(*drive_site)?,
                t0: *t0,
                tau: *tau,
            }),
            Some(other) => {
                return Err(Error::Config(format!(
                    "real-space drive must be a boundary_drive excitation, got {other:?}"
                )))
            }
        };
        Ok(Self {
            eta: params.eta,
            kappa: params.kappa,
            omega_mod: params.omega_mod,
            coupled,
            drive,
        })
    }

    /// Full right-hand side on the flat layout `[v_0 .. v_{n-1}, xi]`.
    fn apply(&self, amp: &[Complex64], t: f64, out: &mut [Complex64]) {
        let n = amp.len() - 1;
        let (v, xi) = (&amp[..n], amp[n]);

        // Nearest-neighbor hopping with hard-wall boundaries.
        let neg_i_eta = Complex64::new(0.0, -self.eta);
        if n == 1 {
            out[0] = Complex64::ZERO;
        } else {
            out[0] = neg_i_eta * v[1];
            for i in 1..n - 1 {
                out[i] = neg_i_eta * (v[i - 1] + v[i + 1]);
            }
            out[n - 1] = neg_i_eta * v[n - 2];
        }

        // Atom coupling through the coupled sites, with per-site phases
        // e^{+/- i m Omega t}. Only a handful of sites are touched.
        let mut dxi_sum = Complex64::ZERO;
        let wt = self.omega_mod * t;
        for &(i, m) in &self.coupled {
            let phase = Complex64::from_polar(1.0, m as f64 * wt);
            out[i] += NEG_I * self.kappa * xi * phase;
            dxi_sum += v[i] * phase.conj();
        }
        out[n] = NEG_I * self.kappa * dxi_sum;

        if let Some(pulse) = &self.drive {
            let s = gaussian_pulse(t, pulse.t0, pulse.tau);
            out[pulse.site_index] += NEG_I * s;
        }
    }
}

/// Evaluate the equations of motion at time `t`.
///
/// Sites outside the stored array contribute zero amplitude. When `drive`
/// is present its source term is added at the drive site.
pub fn rhs_real(
    state: &RealState,
    t: f64,
    params: &ModelParams,
    drive: Option<&ExcitationSpec>,
) -> Result<RealDeriv> {
    let op = RealOp::new(params, state.m_min, state.v.len(), drive)?;
    let mut amp = Vec::with_capacity(state.v.len() + 1);
    amp.extend_from_slice(&state.v);
    amp.push(state.xi);
    let mut out = vec![Complex64::ZERO; amp.len()];
    op.apply(&amp, t, &mut out);
    let dxi = out.pop().unwrap();
    Ok(RealDeriv { dv: out, dxi })
}

/// Advance the state by one classical RK4 step of size `dt`, evaluating the
/// time-dependent phases at `t`, `t + dt/2`, and `t + dt`.
pub fn step_rk4(
    state: &mut RealState,
    params: &ModelParams,
    drive: Option<&ExcitationSpec>,
    dt: f64,
) -> Result<()> {
    let op = RealOp::new(params, state.m_min, state.v.len(), drive)?;
    let mut amp = Vec::with_capacity(state.v.len() + 1);
    amp.extend_from_slice(&state.v);
    amp.push(state.xi);
    let mut scratch = Rk4Scratch::new(amp.len());
    step_flat(&op, &mut amp, state.t, dt, &mut scratch)?;
    state.xi = amp.pop().unwrap();
    state.v.copy_from_slice(&amp);
    state.t += dt;
    Ok(())
}

fn step_flat(
    op: &RealOp,
    amp: &mut [Complex64],
    t: f64,
    dt: f64,
    scratch: &mut Rk4Scratch,
) -> Result<()> {
    let mut rhs = |a: &[Complex64], time: f64, out: &mut [Complex64]| op.apply(a, time, out);
    ode::rk4_step(&mut rhs, amp, t, dt, scratch)
}

/// Integrate the configured excitation from `t = 0` to `t_end`, recording a
/// snapshot every `snapshot_stride` steps (plus the initial and final states).
pub fn run_real(
    params: &ModelParams,
    lattice: &LatticeSpec,
    exc: &ExcitationSpec,
    integ: &IntegratorConfig,
) -> Result<Trajectory> {
    let (state, drive) = match exc {
        ExcitationSpec::BoundaryDrive { .. } => {
            (RealState::zero(lattice.m_min, lattice.m_max), Some(exc))
        }
        ExcitationSpec::InitialWavepacket { .. } => {
            (crate::model::build_wavepacket(lattice, exc)?, None)
        }
    };
    let op = RealOp::new(params, state.m_min, state.v.len(), drive)?;

    let n = state.v.len();
    let mut amp = Vec::with_capacity(n + 1);
    amp.extend_from_slice(&state.v);
    amp.push(state.xi);
    let mut scratch = Rk4Scratch::new(amp.len());

    let dt = integ.dt;
    let n_steps = integ.n_steps();
    let mut traj = Trajectory::new(lattice.m_min);
    traj.push_snapshot(0.0, &amp[..n], amp[n]);

    let drive_end = match exc {
        ExcitationSpec::BoundaryDrive { t0, tau, .. } => Some(t0 + 6.0 * tau),
        _ => None,
    };

    for step in 0..n_steps {
        let t = step as f64 * dt;
        step_flat(&op, &mut amp, t, dt, &mut scratch)?;
        if (step + 1) % integ.snapshot_stride == 0 || step + 1 == n_steps {
            traj.push_snapshot((step + 1) as f64 * dt, &amp[..n], amp[n]);
        }
    }

    if let Some(t_inj) = drive_end {
        if let Some(snap) = traj.snapshot_at(t_inj) {
            traj.n_inj = Some(traj.norm[snap]);
        } else {
            traj.n_inj = traj.norm.last().copied();
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::wavepacket_on_sites;

    fn params(eta: f64, omega_mod: f64, kappa: f64) -> ModelParams {
        ModelParams {
            eta,
            omega_mod,
            kappa,
            coupled_sites: vec![-1, 0, 1],
        }
    }

    #[test]
    fn hopping_only_spreads_point_source() {
        // kappa = 0, v_0 = 1: dv_{+/-1} = -i eta, dxi = 0.
        let p = params(1.0, 3.0, 0.0);
        let mut state = RealState::zero(-5, 5);
        let i0 = state.site_index(0).unwrap();
        state.v[i0] = Complex64::new(1.0, 0.0);
        let d = rhs_real(&state, 0.0, &p, None).unwrap();
        assert_eq!(d.dv[i0 - 1], Complex64::new(0.0, -1.0));
        assert_eq!(d.dv[i0 + 1], Complex64::new(0.0, -1.0));
        assert_eq!(d.dv[i0], Complex64::ZERO);
        assert_eq!(d.dxi, Complex64::ZERO);
    }

    #[test]
    fn atom_coupling_only_drains_central_site() {
        // eta = 0, v_0 = 1, xi = 0 at t = 0: dxi = -i kappa, dv_0 = 0.
        let p = params(0.0, 3.0, 0.7);
        let mut state = RealState::zero(-5, 5);
        let i0 = state.site_index(0).unwrap();
        state.v[i0] = Complex64::new(1.0, 0.0);
        let d = rhs_real(&state, 0.0, &p, None).unwrap();
        assert!((d.dxi - Complex64::new(0.0, -0.7)).norm() < 1e-15);
        assert_eq!(d.dv[i0], Complex64::ZERO);
    }

    #[test]
    fn side_site_phases_cancel_at_full_modulation_period() {
        // v_{+/-1} = 1 at t = 2 pi / Omega: both phases e^{-/+ i m Omega t}
        // are unity, so dxi = -2 i kappa.
        let omega = 3.0;
        let p = params(1.0, omega, 0.5);
        let mut state = RealState::zero(-5, 5);
        let (left, right) = (state.site_index(-1).unwrap(), state.site_index(1).unwrap());
        state.v[left] = Complex64::new(1.0, 0.0);
        state.v[right] = Complex64::new(1.0, 0.0);
        let t = std::f64::consts::TAU / omega;
        let d = rhs_real(&state, t, &p, None).unwrap();
        assert!((d.dxi - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_generator_step_only_advances_time() {
        let p = params(0.0, 0.0, 0.0);
        let mut state = RealState::zero(-4, 4);
        state.v[2] = Complex64::new(0.3, 0.1);
        let before = state.v.clone();
        step_rk4(&mut state, &p, None, 0.01).unwrap();
        assert_eq!(state.v, before);
        assert!((state.t - 0.01).abs() < 1e-15);
    }

    #[test]
    fn free_wavepacket_moves_at_group_velocity() {
        // k0 = -1/2 gives speed 2 eta; track the centroid over many steps.
        let p = params(1.0, 0.0, 0.0);
        let exc = ExcitationSpec::InitialWavepacket {
            m0: -30,
            delta_m: 6.0,
            k0: -0.5,
        };
        let mut state = wavepacket_on_sites(-80, 80, &exc).unwrap();
        let centroid = |s: &RealState| -> f64 {
            let mut num = 0.0;
            let mut den = 0.0;
            for (i, a) in s.v.iter().enumerate() {
                let w = a.norm_sqr();
                num += (s.m_min + i as i32) as f64 * w;
                den += w;
            }
            num / den
        };
        let c0 = centroid(&state);
        let dt = 0.005;
        let steps = 4000; // 20 time units
        for i in 0..steps {
            step_rk4(&mut state, &p, None, dt).unwrap();
            state.t = (i + 1) as f64 * dt;
        }
        let v_est = (centroid(&state) - c0) / (steps as f64 * dt);
        assert!(
            (v_est - 2.0).abs() < 0.02,
            "centroid velocity {v_est} != 2 eta"
        );
    }

    #[test]
    fn one_step_vs_two_half_steps_is_fifth_order() {
        let p = params(1.0, 2.05, 0.5);
        let exc = ExcitationSpec::InitialWavepacket {
            m0: 0,
            delta_m: 3.0,
            k0: -0.5,
        };
        let base = wavepacket_on_sites(-12, 12, &exc).unwrap();

        let local_diff = |dt: f64| -> f64 {
            let mut full = base.clone();
            step_rk4(&mut full, &p, None, dt).unwrap();
            let mut halves = base.clone();
            step_rk4(&mut halves, &p, None, dt / 2.0).unwrap();
            step_rk4(&mut halves, &p, None, dt / 2.0).unwrap();
            full.v
                .iter()
                .zip(&halves.v)
                .map(|(a, b)| (a - b).norm())
                .fold((full.xi - halves.xi).norm(), f64::max)
        };

        let d1 = local_diff(0.04);
        let d2 = local_diff(0.02);
        let ratio = d1 / d2;
        assert!(
            (10.0..90.0).contains(&ratio),
            "local Richardson ratio {ratio} not ~ 2^5"
        );
    }

    #[test]
    fn decoupled_atom_stays_dark_under_drive() {
        let p = params(1.0, 2.05, 0.0);
        let lattice = LatticeSpec {
            m_min: -40,
            m_max: 40,
            d: 64,
        };
        let exc = ExcitationSpec::BoundaryDrive {
            drive_site: -40,
            t0: 5.0,
            tau: 2.0,
        };
        let integ = IntegratorConfig {
            dt: 0.005,
            t_end: 30.0,
            snapshot_stride: 200,
        };
        let traj = run_real(&p, &lattice, &exc, &integ).unwrap();
        for (i, &xi2) in traj.atom_prob.iter().enumerate() {
            assert!(xi2 < 1e-28, "atom excited at snapshot {i}: {xi2}");
        }
        // The pulse injected a finite amount of probability.
        assert!(traj.norm.last().unwrap() > &1e-3);
        assert!(traj.n_inj.is_some());
    }

    #[test]
    fn hermiticity_of_the_drive_free_generator() {
        // <phi|H psi> == <H phi|psi> with H = i d/dt read off the rhs.
        let p = params(1.0, 2.3, 0.6);
        let inner = |a: &RealState, b: &RealState| -> Complex64 {
            a.v.iter()
                .zip(&b.v)
                .map(|(x, y)| x.conj() * y)
                .sum::<Complex64>()
                + a.xi.conj() * b.xi
        };
        // Deterministic pseudo-random states.
        let mk_state = |seed: u64| -> RealState {
            let mut s = RealState::zero(-8, 8);
            let mut x = seed;
            let mut next = || {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            for a in &mut s.v {
                *a = Complex64::new(next(), next());
            }
            s.xi = Complex64::new(next(), next());
            s
        };
        for seed in 1..6u64 {
            let phi = mk_state(seed);
            let psi = mk_state(seed + 100);
            let t = 0.37 * seed as f64;
            let i = Complex64::new(0.0, 1.0);
            let dphi = rhs_real(&phi, t, &p, None).unwrap();
            let dpsi = rhs_real(&psi, t, &p, None).unwrap();
            let h_phi = RealState {
                m_min: phi.m_min,
                v: dphi.dv.iter().map(|z| i * z).collect(),
                xi: i * dphi.dxi,
                t,
            };
            let h_psi = RealState {
                m_min: psi.m_min,
                v: dpsi.dv.iter().map(|z| i * z).collect(),
                xi: i * dpsi.dxi,
                t,
            };
            let lhs = inner(&phi, &h_psi);
            let rhs = inner(&h_phi, &psi);
            assert!((lhs - rhs).norm() < 1e-12, "hermiticity broken: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn mirror_symmetry_with_reversed_modulation() {
        // Relabeling m -> -m together with Omega -> -Omega maps solutions to
        // solutions.
        let p = params(1.0, 2.05, 0.5);
        let p_rev = params(1.0, -2.05, 0.5);
        let exc = ExcitationSpec::InitialWavepacket {
            m0: -15,
            delta_m: 4.0,
            k0: -0.5,
        };
        let fwd0 = wavepacket_on_sites(-40, 40, &exc).unwrap();
        let mut mir0 = fwd0.clone();
        let n = mir0.v.len();
        for i in 0..n {
            mir0.v[i] = fwd0.v[n - 1 - i];
        }

        let dt = 0.005;
        let steps = 2000;
        let mut fwd = fwd0;
        let mut mir = mir0;
        for i in 0..steps {
            step_rk4(&mut fwd, &p, None, dt).unwrap();
            step_rk4(&mut mir, &p_rev, None, dt).unwrap();
            fwd.t = (i + 1) as f64 * dt;
            mir.t = fwd.t;
        }
        for i in 0..n {
            let diff = (fwd.v[i] - mir.v[n - 1 - i]).norm();
            assert!(diff < 1e-9, "mirror mismatch at column {i}: {diff}");
        }
        assert!((fwd.xi - mir.xi).norm() < 1e-9);
    }

    #[test]
    fn norm_is_conserved_after_the_pulse() {
        let p = params(1.0, 2.05, 0.5);
        let lattice = LatticeSpec {
            m_min: -80,
            m_max: 80,
            d: 128,
        };
        let t0 = 25.0;
        let tau = 5.0 * std::f64::consts::SQRT_2;
        let exc = ExcitationSpec::BoundaryDrive {
            drive_site: -80,
            t0,
            tau,
        };
        let integ = IntegratorConfig {
            dt: 0.005,
            t_end: t0 + 6.0 * tau + 100.0,
            snapshot_stride: 100,
        };
        let traj = run_real(&p, &lattice, &exc, &integ).unwrap();
        let start = traj.snapshot_at(t0 + 6.0 * tau).unwrap();
        let reference = traj.norm[start];
        for snap in start..traj.len() {
            assert!(
                (traj.norm[snap] - reference).abs() < 1e-6,
                "norm drift at t = {}: {} vs {}",
                traj.time[snap],
                traj.norm[snap],
                reference
            );
        }
    }

    #[test]
    fn drive_site_outside_lattice_is_a_dimension_error() {
        let p = params(1.0, 3.0, 0.5);
        let state = RealState::zero(-5, 5);
        let exc = ExcitationSpec::BoundaryDrive {
            drive_site: -20,
            t0: 5.0,
            tau: 2.0,
        };
        assert!(matches!(
            rhs_real(&state, 0.0, &p, Some(&exc)),
            Err(Error::Dimension(_))
        ));
    }
}
