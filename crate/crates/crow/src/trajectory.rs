//! Time series of observables and raw state snapshots recorded by a run.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real-space trajectory: per-snapshot site probabilities, raw complex
/// amplitudes, atomic excitation, and total norm. Snapshots are immutable
/// once recorded and may be consumed by analysis code concurrently.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Site index of the first column.
    pub m_min: i32,
    pub time: Vec<f64>,
    /// `site_prob[snap][i]` is `|v_m|^2` at `m = m_min + i`.
    pub site_prob: Vec<Vec<f64>>,
    /// Raw complex amplitudes per snapshot.
    pub site_amp: Vec<Vec<Complex64>>,
    pub atom_prob: Vec<f64>,
    pub atom_amp: Vec<Complex64>,
    /// Total norm `sum_m |v_m|^2 + |xi|^2` per snapshot.
    pub norm: Vec<f64>,
    /// Post-pulse injected norm, recorded at `t0 + 6 tau` for driven runs.
    pub n_inj: Option<f64>,
}

impl Trajectory {
    pub fn new(m_min: i32) -> Self {
        Self {
            m_min,
            time: Vec::new(),
            site_prob: Vec::new(),
            site_amp: Vec::new(),
            atom_prob: Vec::new(),
            atom_amp: Vec::new(),
            norm: Vec::new(),
            n_inj: None,
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.site_prob.first().map_or(0, Vec::len)
    }

    pub fn m_max(&self) -> i32 {
        self.m_min + self.n_sites() as i32 - 1
    }

    pub fn site_column(&self, m: i32) -> Result<usize> {
        let i = m - self.m_min;
        if i < 0 || i as usize >= self.n_sites() {
            return Err(Error::Dimension(format!(
                "site {m} outside trajectory lattice [{}, {}]",
                self.m_min,
                self.m_max()
            )));
        }
        Ok(i as usize)
    }

    /// Complex amplitude time series at one site.
    pub fn amp_at_site(&self, m: i32) -> Result<Vec<Complex64>> {
        let col = self.site_column(m)?;
        Ok(self.site_amp.iter().map(|snap| snap[col]).collect())
    }

    /// Probability inside the window `|m| <= halfwidth` at one snapshot.
    pub fn window_prob(&self, snap: usize, halfwidth: i32) -> f64 {
        let probs = &self.site_prob[snap];
        let mut total = 0.0;
        for m in -halfwidth..=halfwidth {
            let i = m - self.m_min;
            if i >= 0 && (i as usize) < probs.len() {
                total += probs[i as usize];
            }
        }
        total
    }

    pub(crate) fn push_snapshot(&mut self, t: f64, amps: &[Complex64], atom: Complex64) {
        let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        let atom_prob = atom.norm_sqr();
        let norm = probs.iter().sum::<f64>() + atom_prob;
        self.time.push(t);
        self.site_prob.push(probs);
        self.site_amp.push(amps.to_vec());
        self.atom_prob.push(atom_prob);
        self.atom_amp.push(atom);
        self.norm.push(norm);
    }

    /// Index of the first snapshot with `time >= t`.
    pub fn snapshot_at(&self, t: f64) -> Option<usize> {
        self.time.iter().position(|&x| x >= t)
    }
}

/// Momentum-space trajectory: `|C_k|^2` per snapshot plus the atomic
/// amplitude and total norm.
#[derive(Debug, Clone)]
pub struct KTrajectory {
    pub d: i32,
    pub time: Vec<f64>,
    /// `k_prob[snap][i]` is `|C_k|^2` at `k = i - d`.
    pub k_prob: Vec<Vec<f64>>,
    /// Raw complex mode amplitudes per snapshot.
    pub k_amp: Vec<Vec<Complex64>>,
    pub chi_prob: Vec<f64>,
    pub chi_amp: Vec<Complex64>,
    pub norm: Vec<f64>,
}

impl KTrajectory {
    pub fn new(d: i32) -> Self {
        Self {
            d,
            time: Vec::new(),
            k_prob: Vec::new(),
            k_amp: Vec::new(),
            chi_prob: Vec::new(),
            chi_amp: Vec::new(),
            norm: Vec::new(),
        }
    }

    /// Rebuild the full momentum-space state at one snapshot.
    pub fn state_at(&self, snap: usize) -> crate::kspace::KState {
        crate::kspace::KState {
            d: self.d,
            c: self.k_amp[snap].clone(),
            chi: self.chi_amp[snap],
            t: self.time[snap],
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }
}

/// Reduced-model trajectory: squared magnitudes of the four collective
/// amplitude families plus the atomic probability and sector norms.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub d: i32,
    pub time: Vec<f64>,
    pub j_s_plus: Vec<Vec<f64>>,
    pub j_s_minus: Vec<Vec<f64>>,
    pub j_0_plus: Vec<Vec<f64>>,
    pub j_0_minus: Vec<Vec<f64>>,
    pub chi_prob: Vec<f64>,
    /// Multiplicity-weighted norm carried by the slow sector.
    pub norm_s: Vec<f64>,
    /// Multiplicity-weighted norm carried by the propagating sector.
    pub norm_0: Vec<f64>,
}

impl ReducedTrajectory {
    pub fn new(d: i32) -> Self {
        Self {
            d,
            time: Vec::new(),
            j_s_plus: Vec::new(),
            j_s_minus: Vec::new(),
            j_0_plus: Vec::new(),
            j_0_minus: Vec::new(),
            chi_prob: Vec::new(),
            norm_s: Vec::new(),
            norm_0: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }
}
