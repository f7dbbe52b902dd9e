//! Collective-variable reduction of the momentum-space model.
//!
//! At each `|omega_k|` four Bloch modes are degenerate. For labels
//! `k in [0, d/4)` the combinations actually driven by the atom are
//!
//! ```text
//! J_{k,s±} = { [C_k e^{-i k pi/d} + C_{-k} e^{i k pi/d}] e^{i Omega t}
//!              ± [C_{d-k} e^{i(pi - k pi/d)} + C_{-(d-k)} e^{-i(pi - k pi/d)}] e^{-i Omega t} } / 2
//! J_{k,0±} = { [C_{d/2-k} + C_{-(d/2-k)}] ± [C_{d/2+k} + C_{-(d/2+k)}] } / 2
//! ```
//!
//! (indices wrap on the periodic lattice, so the `k = 0` label references the
//! band-edge pair `{0, -d}` twice and the band-center pair `{d/2, -d/2}`
//! twice). The slow sector `J_{k,s±}` collects the modes near the band edges
//! `omega_k = ±2 eta`, including the zero-group-velocity localized modes at
//! `k = 0`; the propagating sector `J_{k,0±}` collects the modes near band
//! center moving at speeds up to `2 eta`. Each pair rotates at its detuning
//! from the coupled-site resonance — `Omega - omega_k` for the slow sector
//! and `-v_g(k) = 2 eta sin(k pi / d)` for the propagating sector — and both
//! sectors exchange amplitude only through the atom.
//!
//! The reduction drops the four region-boundary modes `±d/4`, `±3d/4` and the
//! orthogonal mode combinations that do not couple to the atom; the
//! real-space reconstruction here redistributes each collective amplitude
//! equally over its mode slots, which preserves the sector norms exactly but
//! is only faithful for states that entered through the atom or the
//! symmetric construction.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kspace::{bloch_transform, inverse_bloch_transform, KState};
use crate::model::{ExcitationSpec, IntegratorConfig, LatticeSpec, ModelParams};
use crate::ode::{self, Rk4Scratch};
use crate::trajectory::{ReducedTrajectory, Trajectory};

const NEG_I: Complex64 = Complex64::new(0.0, -1.0);

/// Whether the atom talks to the propagating sector.
///
/// `Off` erases the influence of the propagating subsystem entirely: the
/// propagating term is dropped from the atom equation and the atom source is
/// dropped from the propagating-sector equations, leaving that sector in free
/// rotation. Stationary-state checks use `Off`; full dynamics use `On`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SectorCoupling {
    #[default]
    On,
    Off,
}

/// Collective amplitudes `J_{k,s±}`, `J_{k,0±}` for `k in [0, d/4)` plus the
/// atomic amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub d: i32,
    pub j_s_plus: Vec<Complex64>,
    pub j_s_minus: Vec<Complex64>,
    pub j_0_plus: Vec<Complex64>,
    pub j_0_minus: Vec<Complex64>,
    pub chi: Complex64,
    pub t: f64,
}

impl ReducedState {
    pub fn zero(d: i32) -> Result<Self> {
        let nk = sector_len(d)?;
        Ok(Self {
            d,
            j_s_plus: vec![Complex64::ZERO; nk],
            j_s_minus: vec![Complex64::ZERO; nk],
            j_0_plus: vec![Complex64::ZERO; nk],
            j_0_minus: vec![Complex64::ZERO; nk],
            chi: Complex64::ZERO,
            t: 0.0,
        })
    }

    pub fn sector_len(&self) -> usize {
        self.j_s_plus.len()
    }

    /// Multiplicity-weighted norms `(slow, propagating, total)`.
    ///
    /// The label `k = 0` aggregates two modes and every other label four, so
    /// the conserved functional weights `k = 0` once and `k >= 1` twice:
    /// `norm = |chi|^2 + (1/2) sum_k mu_k (|J_{k,+}|^2 + |J_{k,-}|^2)` with
    /// `mu_0 = 1`, `mu_k = 2`. For states assembled by [`construct_j`] this
    /// equals the photon probability carried by the atom-coupled mode
    /// combinations.
    pub fn sector_norms(&self) -> (f64, f64) {
        let weighted = |plus: &[Complex64], minus: &[Complex64]| -> f64 {
            let mut total = 0.0;
            for k in 0..plus.len() {
                let w = if k == 0 { 0.5 } else { 1.0 };
                total += w * (plus[k].norm_sqr() + minus[k].norm_sqr());
            }
            total
        };
        (
            weighted(&self.j_s_plus, &self.j_s_minus),
            weighted(&self.j_0_plus, &self.j_0_minus),
        )
    }

    pub fn norm(&self) -> f64 {
        let (s, z) = self.sector_norms();
        s + z + self.chi.norm_sqr()
    }
}

/// Time derivative of a [`ReducedState`].
#[derive(Debug, Clone)]
pub struct ReducedDeriv {
    pub j_s_plus: Vec<Complex64>,
    pub j_s_minus: Vec<Complex64>,
    pub j_0_plus: Vec<Complex64>,
    pub j_0_minus: Vec<Complex64>,
    pub chi: Complex64,
}

impl ReducedDeriv {
    /// Largest derivative magnitude over every component.
    pub fn max_abs(&self) -> f64 {
        self.j_s_plus
            .iter()
            .chain(&self.j_s_minus)
            .chain(&self.j_0_plus)
            .chain(&self.j_0_minus)
            .map(|z| z.norm())
            .fold(self.chi.norm(), f64::max)
    }
}

fn sector_len(d: i32) -> Result<usize> {
    if d < 8 || d % 4 != 0 {
        return Err(Error::Dimension(format!(
            "reduced model requires d >= 8 and d divisible by 4, got d = {d}"
        )));
    }
    Ok((d / 4) as usize)
}

/// Amplitude of mode `k` with periodic wrapping (`k = d` is `k = -d`).
fn amp_wrapped(kstate: &KState, k: i32) -> Complex64 {
    let n = 2 * kstate.d as i64;
    let i = (k as i64 + kstate.d as i64).rem_euclid(n) as usize;
    kstate.c[i]
}

/// Evaluate the collective amplitudes of a momentum-space state at its
/// current time (the `e^{±i Omega t}` factors use `kstate.t`).
pub fn construct_j(kstate: &KState, params: &ModelParams) -> Result<ReducedState> {
    let d = kstate.d;
    let nk = sector_len(d)?;
    if kstate.c.len() != (2 * d) as usize {
        return Err(Error::Dimension(format!(
            "momentum state has {} amplitudes, expected {}",
            kstate.c.len(),
            2 * d
        )));
    }
    let mut state = ReducedState::zero(d)?;
    state.chi = kstate.chi;
    state.t = kstate.t;
    let rot = Complex64::from_polar(1.0, params.omega_mod * kstate.t);
    for k in 0..nk as i32 {
        let theta = k as f64 * PI / d as f64;
        let edge = Complex64::from_polar(1.0, theta);
        let a = (amp_wrapped(kstate, k) * edge.conj() + amp_wrapped(kstate, -k) * edge) * rot;
        let anti_edge = Complex64::from_polar(1.0, PI - theta);
        let b = (amp_wrapped(kstate, d - k) * anti_edge
            + amp_wrapped(kstate, -(d - k)) * anti_edge.conj())
            * rot.conj();
        state.j_s_plus[k as usize] = (a + b) / 2.0;
        state.j_s_minus[k as usize] = (a - b) / 2.0;

        let p = amp_wrapped(kstate, d / 2 - k) + amp_wrapped(kstate, -(d / 2 - k));
        let q = amp_wrapped(kstate, d / 2 + k) + amp_wrapped(kstate, -(d / 2 + k));
        state.j_0_plus[k as usize] = (p + q) / 2.0;
        state.j_0_minus[k as usize] = (p - q) / 2.0;
    }
    Ok(state)
}

/// Rebuild a momentum-space state from collective amplitudes, distributing
/// each bracket equally over its two mode slots. Modes not covered by the
/// reduction stay zero.
pub fn reconstruct_kstate(state: &ReducedState, params: &ModelParams) -> KState {
    let d = state.d;
    let nk = state.sector_len() as i32;
    let mut kstate = KState::zero(d);
    kstate.chi = state.chi;
    kstate.t = state.t;
    let rot = Complex64::from_polar(1.0, params.omega_mod * state.t);
    let mut set = |k: i32, value: Complex64| {
        let n = 2 * d as i64;
        let i = (k as i64 + d as i64).rem_euclid(n) as usize;
        kstate.c[i] = value;
    };
    for k in 0..nk {
        let i = k as usize;
        let theta = k as f64 * PI / d as f64;
        let edge = Complex64::from_polar(1.0, theta);
        let a = (state.j_s_plus[i] + state.j_s_minus[i]) * rot.conj();
        set(k, a / 2.0 * edge);
        set(-k, a / 2.0 * edge.conj());
        let anti_edge = Complex64::from_polar(1.0, PI - theta);
        let b = (state.j_s_plus[i] - state.j_s_minus[i]) * rot;
        set(d - k, b / 2.0 * anti_edge.conj());
        set(-(d - k), b / 2.0 * anti_edge);

        let p = state.j_0_plus[i] + state.j_0_minus[i];
        set(d / 2 - k, p / 2.0);
        set(-(d / 2 - k), p / 2.0);
        let q = state.j_0_plus[i] - state.j_0_minus[i];
        set(d / 2 + k, q / 2.0);
        set(-(d / 2 + k), q / 2.0);
    }
    kstate
}

struct ReducedOp {
    nk: usize,
    /// Slow-sector rotation rate `Omega - 2 eta cos(k pi / d)` per label.
    delta_s: Vec<f64>,
    /// Propagating-sector rotation rate `v_g(k) = -2 eta sin(k pi / d)`.
    v_g: Vec<f64>,
    kappa_norm: f64,
    coupling: SectorCoupling,
}

impl ReducedOp {
    fn new(params: &ModelParams, d: i32, coupling: SectorCoupling) -> Result<Self> {
        if !params.has_standard_sites() {
            return Err(Error::Config(format!(
                "reduced model requires coupled_sites = [-1, 0, 1], got {:?}",
                params.coupled_sites
            )));
        }
        let nk = sector_len(d)?;
        let mut delta_s = Vec::with_capacity(nk);
        let mut v_g = Vec::with_capacity(nk);
        for k in 0..nk {
            let theta = k as f64 * PI / d as f64;
            delta_s.push(params.omega_mod - 2.0 * params.eta * theta.cos());
            v_g.push(-2.0 * params.eta * theta.sin());
        }
        Ok(Self {
            nk,
            delta_s,
            v_g,
            kappa_norm: params.kappa / ((2 * d) as f64).sqrt(),
            coupling,
        })
    }

    /// Flat layout `[J_s+ | J_s- | J_0+ | J_0- | chi]`.
    fn apply(&self, amp: &[Complex64], out: &mut [Complex64]) {
        let nk = self.nk;
        let (s_plus, rest) = amp.split_at(nk);
        let (s_minus, rest) = rest.split_at(nk);
        let (z_plus, rest) = rest.split_at(nk);
        let (z_minus, rest) = rest.split_at(nk);
        let chi = rest[0];

        let two_kn = 2.0 * self.kappa_norm;
        let chi_src = match self.coupling {
            SectorCoupling::On => chi,
            SectorCoupling::Off => Complex64::ZERO,
        };

        let mut sum_s = Complex64::ZERO;
        let mut sum_0 = Complex64::ZERO;
        for k in 0..nk {
            out[k] = NEG_I * (two_kn * chi - self.delta_s[k] * s_minus[k]);
            out[nk + k] = NEG_I * (-self.delta_s[k] * s_plus[k]);
            out[2 * nk + k] = NEG_I * (two_kn * chi_src - self.v_g[k] * z_minus[k]);
            out[3 * nk + k] = NEG_I * (-self.v_g[k] * z_plus[k]);
            let mu = if k == 0 { 1.0 } else { 2.0 };
            sum_s += s_plus[k] * mu;
            sum_0 += z_plus[k] * mu;
        }
        let atom = match self.coupling {
            SectorCoupling::On => sum_s + sum_0,
            SectorCoupling::Off => sum_s,
        };
        out[4 * nk] = NEG_I * self.kappa_norm * atom;
    }
}

fn pack(state: &ReducedState) -> Vec<Complex64> {
    let mut amp = Vec::with_capacity(4 * state.sector_len() + 1);
    amp.extend_from_slice(&state.j_s_plus);
    amp.extend_from_slice(&state.j_s_minus);
    amp.extend_from_slice(&state.j_0_plus);
    amp.extend_from_slice(&state.j_0_minus);
    amp.push(state.chi);
    amp
}

fn unpack(amp: &[Complex64], d: i32, t: f64) -> ReducedState {
    let nk = amp.len() / 4;
    ReducedState {
        d,
        j_s_plus: amp[..nk].to_vec(),
        j_s_minus: amp[nk..2 * nk].to_vec(),
        j_0_plus: amp[2 * nk..3 * nk].to_vec(),
        j_0_minus: amp[3 * nk..4 * nk].to_vec(),
        chi: amp[4 * nk],
        t,
    }
}

/// Evaluate the reduced equations of motion. The system has no explicit time
/// dependence; the modulation phases are absorbed into the variables.
pub fn rhs_reduced(
    state: &ReducedState,
    params: &ModelParams,
    coupling: SectorCoupling,
) -> Result<ReducedDeriv> {
    let op = ReducedOp::new(params, state.d, coupling)?;
    let amp = pack(state);
    let mut out = vec![Complex64::ZERO; amp.len()];
    op.apply(&amp, &mut out);
    let nk = state.sector_len();
    Ok(ReducedDeriv {
        j_s_plus: out[..nk].to_vec(),
        j_s_minus: out[nk..2 * nk].to_vec(),
        j_0_plus: out[2 * nk..3 * nk].to_vec(),
        j_0_minus: out[3 * nk..4 * nk].to_vec(),
        chi: out[4 * nk],
    })
}

/// Result of a reduced-model run: the collective-amplitude record plus the
/// real-space reconstruction of every snapshot.
#[derive(Debug, Clone)]
pub struct ReducedRun {
    pub reduced: ReducedTrajectory,
    pub real: Trajectory,
}

/// Integrate an initial wavepacket under the reduced model with both sectors
/// coupled through the atom.
pub fn run_reduced(
    params: &ModelParams,
    lattice: &LatticeSpec,
    exc: &ExcitationSpec,
    integ: &IntegratorConfig,
) -> Result<ReducedRun> {
    let d = lattice.d;
    let (lo, hi) = lattice.bloch_bounds();
    let initial = crate::model::wavepacket_on_sites(lo, hi, exc)?;
    let kstate = bloch_transform(&initial, d)?;
    let state0 = construct_j(&kstate, params)?;
    let op = ReducedOp::new(params, d, SectorCoupling::On)?;

    let mut amp = pack(&state0);
    let mut scratch = Rk4Scratch::new(amp.len());

    let mut reduced_traj = ReducedTrajectory::new(d);
    let mut real_traj = Trajectory::new(lo);
    let mut record = |t: f64, amp: &[Complex64]| {
        let state = unpack(amp, d, t);
        let (norm_s, norm_0) = state.sector_norms();
        reduced_traj.time.push(t);
        reduced_traj
            .j_s_plus
            .push(state.j_s_plus.iter().map(|z| z.norm_sqr()).collect());
        reduced_traj
            .j_s_minus
            .push(state.j_s_minus.iter().map(|z| z.norm_sqr()).collect());
        reduced_traj
            .j_0_plus
            .push(state.j_0_plus.iter().map(|z| z.norm_sqr()).collect());
        reduced_traj
            .j_0_minus
            .push(state.j_0_minus.iter().map(|z| z.norm_sqr()).collect());
        reduced_traj.chi_prob.push(state.chi.norm_sqr());
        reduced_traj.norm_s.push(norm_s);
        reduced_traj.norm_0.push(norm_0);
        let projected = inverse_bloch_transform(&reconstruct_kstate(&state, params));
        real_traj.push_snapshot(t, &projected.v, projected.xi);
    };
    record(0.0, &amp);

    let dt = integ.dt;
    let n_steps = integ.n_steps();
    let mut rhs = |a: &[Complex64], _t: f64, out: &mut [Complex64]| op.apply(a, out);
    for step in 0..n_steps {
        let t = step as f64 * dt;
        ode::rk4_step(&mut rhs, &mut amp, t, dt, &mut scratch)?;
        if (step + 1) % integ.snapshot_stride == 0 || step + 1 == n_steps {
            record((step + 1) as f64 * dt, &amp);
        }
    }

    Ok(ReducedRun {
        reduced: reduced_traj,
        real: real_traj,
    })
}
