//! Columnar file writers and the run manifest.
//!
//! Trajectory files are plain comma-separated text with a header row naming
//! every column; values are written with ten significant digits so reruns of
//! an identical configuration are byte-identical. The manifest lists every
//! file a run produced together with its content hash.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::LocalizationMetric;
use crate::boundstate::{BoundState, ScanOutcome, ScanRow};
use crate::error::Result;
use crate::kspace::Dispersion;
use crate::trajectory::{KTrajectory, ReducedTrajectory, Trajectory};

fn fmt_float(buf: &mut String, value: f64) {
    write!(buf, "{value:.9e}").expect("string write");
}

/// An output directory that records the name and content hash of every file
/// written into it.
pub struct OutputDir {
    pub path: PathBuf,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

impl OutputDir {
    pub fn create(path: &Path) -> Result<Self> {
        std::fs::create_dir_all(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write_file(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.path.join(name), contents)?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Real-space trajectory table: `t, m_min..m_max, xi2, norm`, one row per
/// snapshot. `scale` divides every probability (used to normalize driven
/// runs by the injected norm).
pub fn real_trajectory_csv(traj: &Trajectory, scale: f64) -> String {
    let n_sites = traj.n_sites();
    let mut buf = String::with_capacity(traj.len() * n_sites * 18);
    buf.push('t');
    for i in 0..n_sites {
        write!(buf, ",{}", traj.m_min + i as i32).unwrap();
    }
    buf.push_str(",xi2,norm\n");
    for snap in 0..traj.len() {
        fmt_float(&mut buf, traj.time[snap]);
        for &p in &traj.site_prob[snap] {
            buf.push(',');
            fmt_float(&mut buf, p * scale);
        }
        buf.push(',');
        fmt_float(&mut buf, traj.atom_prob[snap] * scale);
        buf.push(',');
        fmt_float(&mut buf, traj.norm[snap] * scale);
        buf.push('\n');
    }
    buf
}

/// Momentum-space trajectory table: `t, -d..d-1 (|C_k|^2), chi2, norm`.
pub fn k_trajectory_csv(traj: &KTrajectory) -> String {
    let n = (2 * traj.d) as usize;
    let mut buf = String::with_capacity(traj.len() * n * 18);
    buf.push('t');
    for i in 0..n {
        write!(buf, ",{}", i as i32 - traj.d).unwrap();
    }
    buf.push_str(",chi2,norm\n");
    for snap in 0..traj.len() {
        fmt_float(&mut buf, traj.time[snap]);
        for &p in &traj.k_prob[snap] {
            buf.push(',');
            fmt_float(&mut buf, p);
        }
        buf.push(',');
        fmt_float(&mut buf, traj.chi_prob[snap]);
        buf.push(',');
        fmt_float(&mut buf, traj.norm[snap]);
        buf.push('\n');
    }
    buf
}

/// Reduced trajectory table: the four collective families (d/4 columns
/// each), then `chi2, norm_s, norm_0`.
pub fn reduced_trajectory_csv(traj: &ReducedTrajectory) -> String {
    let nk = (traj.d / 4) as usize;
    let mut buf = String::with_capacity(traj.len() * 4 * nk * 18);
    buf.push('t');
    for family in ["js_plus", "js_minus", "j0_plus", "j0_minus"] {
        for k in 0..nk {
            write!(buf, ",{family}_{k}").unwrap();
        }
    }
    buf.push_str(",chi2,norm_s,norm_0\n");
    for snap in 0..traj.len() {
        fmt_float(&mut buf, traj.time[snap]);
        for family in [
            &traj.j_s_plus[snap],
            &traj.j_s_minus[snap],
            &traj.j_0_plus[snap],
            &traj.j_0_minus[snap],
        ] {
            for &p in family.iter() {
                buf.push(',');
                fmt_float(&mut buf, p);
            }
        }
        buf.push(',');
        fmt_float(&mut buf, traj.chi_prob[snap]);
        buf.push(',');
        fmt_float(&mut buf, traj.norm_s[snap]);
        buf.push(',');
        fmt_float(&mut buf, traj.norm_0[snap]);
        buf.push('\n');
    }
    buf
}

/// Localization series: `t, p_loc`.
pub fn localization_csv(metric: &LocalizationMetric, scale: f64) -> String {
    let mut buf = String::from("t,p_loc\n");
    for (t, p) in metric.time.iter().zip(&metric.p_loc) {
        fmt_float(&mut buf, *t);
        buf.push(',');
        fmt_float(&mut buf, p * scale);
        buf.push('\n');
    }
    buf
}

/// Spectrum table: `omega, density`.
pub fn spectrum_csv(spectrum: &[(f64, f64)]) -> String {
    let mut buf = String::from("omega,density\n");
    for &(omega, density) in spectrum {
        fmt_float(&mut buf, omega);
        buf.push(',');
        fmt_float(&mut buf, density);
        buf.push('\n');
    }
    buf
}

/// Bound-state profile: `k, omega_k, j_s_minus, weighted_prob`.
pub fn boundstate_profile_csv(bs: &BoundState, eta: f64) -> String {
    let disp = Dispersion::new(bs.d, eta);
    let mut buf = String::from("k,omega_k,j_s_minus,weighted_prob\n");
    for (k, &j) in bs.j_s_minus.iter().enumerate() {
        let weight = if k == 0 { 0.5 } else { 1.0 };
        write!(buf, "{k},").unwrap();
        fmt_float(&mut buf, disp.omega_k(k as i32).expect("in range"));
        buf.push(',');
        fmt_float(&mut buf, j);
        buf.push(',');
        fmt_float(&mut buf, weight * j * j);
        buf.push('\n');
    }
    buf
}

/// Scan table: `omega, atom_weight, photon_weight, localization_share`.
/// Singular rows carry NaN columns.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut buf = String::from("omega,atom_weight,photon_weight,localization_share\n");
    for row in rows {
        fmt_float(&mut buf, row.omega_mod);
        match &row.outcome {
            ScanOutcome::Ok {
                atom_weight,
                photon_weight,
                localization_share,
            } => {
                for v in [atom_weight, photon_weight, localization_share] {
                    buf.push(',');
                    fmt_float(&mut buf, *v);
                }
            }
            ScanOutcome::Singular { .. } => buf.push_str(",nan,nan,nan"),
        }
        buf.push('\n');
    }
    buf
}

/// Scalar metrics in `metric,value` rows.
pub fn metrics_csv(metrics: &[(String, f64)]) -> String {
    let mut buf = String::from("metric,value\n");
    for (name, value) in metrics {
        write!(buf, "{name},").unwrap();
        fmt_float(&mut buf, *value);
        buf.push('\n');
    }
    buf
}

/// Record of one completed run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// SHA-256 of the resolved configuration's canonical TOML form.
    pub config_digest: String,
    pub backend: String,
    pub preset: Option<String>,
    pub output_dir: String,
    /// Wall-clock duration in seconds. The only field that varies between
    /// reruns of the same configuration.
    pub timing_secs: f64,
    /// Injected norm for driven runs; probabilities in the data files are
    /// divided by it.
    pub n_inj: Option<f64>,
    pub notes: Vec<String>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}
