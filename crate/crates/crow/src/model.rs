//! Physical parameters, lattice geometry, excitation specifications, and the
//! validation rules shared by every propagation backend.
//!
//! All rates are expressed in units of the inter-resonator coupling `eta` and
//! all times in units of `eta⁻¹`; `eta` itself defaults to 1 and acts as a
//! display scale. A single [`ModelParams`] serves every backend so the physics
//! cannot drift between cross-validated runs; backend-specific geometry lives
//! in [`LatticeSpec`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::RealState;

/// Physical constants of the atom-waveguide system.
///
/// The atom couples to the ordered site set `coupled_sites` (default
/// `{-1, 0, +1}`) with strength `kappa`; adjacent resonators are bridged by
/// the modulation at frequency `omega_mod` with induced hopping `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Hopping rate between adjacent resonators; the global rate scale.
    pub eta: f64,
    /// Modulation frequency, in units of `eta`.
    pub omega_mod: f64,
    /// Atom-resonator coupling, in units of `eta`.
    pub kappa: f64,
    /// Lattice sites the atom touches.
    #[serde(default = "default_coupled_sites")]
    pub coupled_sites: Vec<i32>,
}

fn default_coupled_sites() -> Vec<i32> {
    vec![-1, 0, 1]
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            omega_mod: 3.0,
            kappa: 0.5,
            coupled_sites: default_coupled_sites(),
        }
    }
}

impl ModelParams {
    /// True when the coupled-site set is the three-site default `{-1, 0, 1}`
    /// required by the momentum-space and reduced backends.
    pub fn has_standard_sites(&self) -> bool {
        self.coupled_sites == [-1, 0, 1]
    }
}

/// Lattice extents. `m_min..=m_max` bounds real-space runs; `d` is the
/// half-extent of the periodic momentum-space lattice, which spans the sites
/// `-d <= m < d` (2d sites in total).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub m_min: i32,
    pub m_max: i32,
    pub d: i32,
}

impl LatticeSpec {
    pub fn n_sites(&self) -> usize {
        (self.m_max - self.m_min + 1).max(0) as usize
    }

    /// Site bounds of the periodic lattice used by the momentum-space
    /// backends: `(-d, d - 1)`.
    pub fn bloch_bounds(&self) -> (i32, i32) {
        (-self.d, self.d - 1)
    }

    pub fn contains(&self, m: i32) -> bool {
        self.m_min <= m && m <= self.m_max
    }
}

/// How the single excitation enters the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExcitationSpec {
    /// A real Gaussian pulse `exp(-(t - t0)^2 / tau^2)` injected as a source
    /// on a single resonator.
    BoundaryDrive { drive_site: i32, t0: f64, tau: f64 },
    /// A normalized Gaussian wavepacket present at t = 0, centered at site
    /// `m0` with spatial width `delta_m` and a phase advance of `k0 * pi`
    /// per site (`k0 = -1/2` gives a right-mover at speed `2 eta`).
    InitialWavepacket { m0: i32, delta_m: f64, k0: f64 },
}

/// Fixed-step integrator settings, times in units of `eta⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Number of steps between stored snapshots.
    pub snapshot_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.005,
            t_end: 250.0,
            snapshot_stride: 40,
        }
    }
}

impl IntegratorConfig {
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round().max(0.0) as usize
    }
}

/// Which propagation backend a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Real,
    Kspace,
    KspaceExact,
    Reduced,
    Boundstate,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Real => "real",
            Backend::Kspace => "kspace",
            Backend::KspaceExact => "kspace_exact",
            Backend::Reduced => "reduced",
            Backend::Boundstate => "boundstate",
        }
    }

    /// Backends that operate on the periodic Bloch lattice.
    pub fn uses_bloch_lattice(&self) -> bool {
        matches!(
            self,
            Backend::Kspace | Backend::KspaceExact | Backend::Reduced | Backend::Boundstate
        )
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Backend::Real),
            "kspace" => Ok(Backend::Kspace),
            "kspace_exact" => Ok(Backend::KspaceExact),
            "reduced" => Ok(Backend::Reduced),
            "boundstate" => Ok(Backend::Boundstate),
            other => Err(Error::Config(format!(
                "unknown backend `{other}` (expected real, kspace, kspace_exact, reduced, boundstate)"
            ))),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A single violated invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// The rule, stated as the invariant that failed, e.g. `kappa >= 0`.
    pub rule: String,
    /// The offending values.
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} violated ({})", self.rule, self.detail)
    }
}

/// Outcome of [`validate`]: an empty `violations` list means the
/// configuration is runnable. Warnings do not block a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_runnable(&self) -> bool {
        self.violations.is_empty()
    }

    fn violate(&mut self, rule: &str, detail: String) {
        self.violations.push(Violation {
            rule: rule.to_string(),
            detail,
        });
    }

    pub fn into_result(self) -> Result<ValidationReport> {
        if self.is_runnable() {
            Ok(self)
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        Ok(())
    }
}

/// Check every invariant of a configuration against the backend that will
/// run it. Always returns a report; it never fails.
pub fn validate(
    params: &ModelParams,
    lattice: &LatticeSpec,
    exc: &ExcitationSpec,
    integ: &IntegratorConfig,
    backend: Backend,
) -> ValidationReport {
    let mut report = ValidationReport::default();

    if !(params.eta > 0.0) {
        report.violate("eta > 0", format!("eta = {}", params.eta));
    }
    if !(params.kappa >= 0.0) {
        report.violate("kappa >= 0", format!("kappa = {}", params.kappa));
    }
    if !(params.omega_mod >= 0.0) {
        report.violate("omega_mod >= 0", format!("omega_mod = {}", params.omega_mod));
    }
    if params.coupled_sites.is_empty() {
        report.violate("coupled_sites nonempty", "no coupled sites".into());
    }

    // Coupled sites must sit strictly inside the lattice interior, at least
    // two sites from each boundary.
    let (lo, hi) = match backend {
        Backend::Real => (lattice.m_min, lattice.m_max),
        _ => lattice.bloch_bounds(),
    };
    for &s in &params.coupled_sites {
        if s - lo < 2 || hi - s < 2 {
            report.violate(
                "coupled_sites >= 2 sites from each boundary",
                format!("site {s} on lattice [{lo}, {hi}]"),
            );
        }
    }

    match backend {
        Backend::Real => {
            if lattice.n_sites() < 11 {
                report.violate(
                    "m_max - m_min + 1 >= 11",
                    format!("m_min = {}, m_max = {}", lattice.m_min, lattice.m_max),
                );
            }
        }
        _ => {
            if lattice.d < 8 {
                report.violate("d >= 8", format!("d = {}", lattice.d));
            }
            if backend == Backend::Reduced && lattice.d % 4 != 0 {
                report.violate("d divisible by 4", format!("d = {}", lattice.d));
            }
            if !params.has_standard_sites() {
                report.violate(
                    "coupled_sites == [-1, 0, 1] for momentum-space backends",
                    format!("coupled_sites = {:?}", params.coupled_sites),
                );
            }
        }
    }

    match exc {
        ExcitationSpec::BoundaryDrive { drive_site, tau, .. } => {
            if !(*tau > 0.0) {
                report.violate("tau > 0", format!("tau = {tau}"));
            }
            if !(lo <= *drive_site && *drive_site <= hi) {
                report.violate(
                    "drive_site within lattice",
                    format!("drive_site = {drive_site} on [{lo}, {hi}]"),
                );
            }
            if backend.uses_bloch_lattice() && backend != Backend::Boundstate {
                report.violate(
                    "momentum-space backends require an initial_wavepacket excitation",
                    format!("backend = {backend}"),
                );
            }
        }
        ExcitationSpec::InitialWavepacket { m0, delta_m, .. } => {
            if !(*delta_m > 0.0) {
                report.violate("delta_m > 0", format!("delta_m = {delta_m}"));
            }
            if !(lo <= *m0 && *m0 <= hi) {
                report.violate("m0 within lattice", format!("m0 = {m0} on [{lo}, {hi}]"));
            } else if *delta_m > 0.0 {
                let clearance = 5.0 * delta_m;
                if ((m0 - lo) as f64) < clearance || ((hi - m0) as f64) < clearance {
                    report.warnings.push(format!(
                        "wavepacket boundary clearance below 5 delta_m: m0 = {m0}, delta_m = {delta_m} on [{lo}, {hi}]"
                    ));
                }
            }
        }
    }

    if !(integ.dt > 0.0) {
        report.violate("dt > 0", format!("dt = {}", integ.dt));
    } else {
        let fastest = params
            .omega_mod
            .max(2.0 * params.eta)
            .max(params.kappa);
        if integ.dt * fastest >= 0.1 {
            report.violate(
                "dt * max(omega_mod, 2 eta, kappa) < 0.1",
                format!("dt = {}, fastest rate = {fastest}", integ.dt),
            );
        }
    }
    if !(integ.t_end > 0.0) {
        report.violate("t_end > 0", format!("t_end = {}", integ.t_end));
    }
    if integ.snapshot_stride < 1 {
        report.violate(
            "snapshot_stride >= 1",
            format!("snapshot_stride = {}", integ.snapshot_stride),
        );
    }

    report
}

/// Drive pulse amplitude `exp(-(t - t0)^2 / tau^2)`.
pub fn gaussian_drive(t: f64, exc: &ExcitationSpec) -> Result<f64> {
    match exc {
        ExcitationSpec::BoundaryDrive { t0, tau, .. } => {
            let x = (t - t0) / tau;
            Ok((-(x * x)).exp())
        }
        other => Err(Error::Config(format!(
            "gaussian_drive requires a boundary_drive excitation, got {other:?}"
        ))),
    }
}

/// Gaussian drive evaluated from raw pulse parameters.
pub(crate) fn gaussian_pulse(t: f64, t0: f64, tau: f64) -> f64 {
    let x = (t - t0) / tau;
    (-(x * x)).exp()
}

/// Build the initial wavepacket on the real-space lattice `m_min..=m_max`.
///
/// The state has unit norm, zero atomic amplitude, amplitude at site m
/// proportional to `exp(-(m - m0)^2 / (2 delta_m^2))`, and a phase advance of
/// exactly `k0 * pi` per site.
pub fn build_wavepacket(lattice: &LatticeSpec, exc: &ExcitationSpec) -> Result<RealState> {
    wavepacket_on_sites(lattice.m_min, lattice.m_max, exc)
}

/// Same as [`build_wavepacket`] on an explicit site range; the momentum-space
/// backends use this with the periodic bounds `(-d, d - 1)`.
pub fn wavepacket_on_sites(m_min: i32, m_max: i32, exc: &ExcitationSpec) -> Result<RealState> {
    let (m0, delta_m, k0) = match exc {
        ExcitationSpec::InitialWavepacket { m0, delta_m, k0 } => (*m0, *delta_m, *k0),
        other => Err(Error::Config(format!(
            "build_wavepacket requires an initial_wavepacket excitation, got {other:?}"
        )))?,
    };
    if m0 < m_min || m0 > m_max {
        return Err(Error::Config(format!(
            "wavepacket center m0 = {m0} outside lattice [{m_min}, {m_max}]"
        )));
    }
    if !(delta_m > 0.0) {
        return Err(Error::Config(format!("delta_m must be positive, got {delta_m}")));
    }

    let n = (m_max - m_min + 1) as usize;
    let mut v = vec![Complex64::ZERO; n];
    let mut norm_sqr = 0.0;
    for (i, amp) in v.iter_mut().enumerate() {
        let m = m_min + i as i32;
        let x = (m - m0) as f64;
        let envelope = (-(x * x) / (2.0 * delta_m * delta_m)).exp();
        *amp = Complex64::from_polar(envelope, k0 * std::f64::consts::PI * x);
        norm_sqr += envelope * envelope;
    }
    let scale = norm_sqr.sqrt().recip();
    for amp in &mut v {
        *amp *= scale;
    }
    Ok(RealState {
        m_min,
        v,
        xi: Complex64::ZERO,
        t: 0.0,
    })
}
