//! One-dimensional MUSIC over the slow-time samples of a range bin.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Search grids larger than this are rejected.
const MAX_GRID_POINTS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct MusicParams {
    /// Number of tones assumed per range bin.
    pub model_order: usize,
    /// Search-grid oversampling relative to the Doppler of one velocity
    /// resolution step.
    pub oversample: usize,
    /// Cap on the number of search-grid points.
    pub max_grid_points: usize,
}

impl Default for MusicParams {
    fn default() -> Self {
        Self {
            model_order: 1,
            oversample: 8,
            max_grid_points: 4096,
        }
    }
}

/// Subarray length used for spatial smoothing, `ceil(Q/2) + 1`.
pub fn subarray_len(num_packets: usize) -> usize {
    num_packets.div_ceil(2) + 1
}

/// Forward-backward smoothed covariance of a single slow-time snapshot.
fn smoothed_covariance(x: &[Complex64], sub: usize) -> DMatrix<Complex64> {
    let count = x.len() - sub + 1;
    let mut r = DMatrix::<Complex64>::zeros(sub, sub);
    for start in 0..count {
        let s = &x[start..start + sub];
        for i in 0..sub {
            for j in 0..sub {
                r[(i, j)] += s[i] * s[j].conj();
            }
        }
    }
    r /= Complex64::new(count as f64, 0.0);
    // backward: J conj(R) J
    let mut fb = r.clone();
    for i in 0..sub {
        for j in 0..sub {
            fb[(i, j)] = 0.5 * (r[(i, j)] + r[(sub - 1 - i, sub - 1 - j)].conj());
        }
    }
    fb
}

/// Frequencies `k * step` inside `[-1/(2 T_P), 1/(2 T_P)]`, ascending.
fn search_grid(pulse_rep_interval: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param(format!("MUSIC grid step must be positive, got {step}")));
    }
    let band = 0.5 / pulse_rep_interval;
    let k_max = (band / step * (1.0 + 1e-12)).floor() as usize;
    if 2 * k_max + 1 > MAX_GRID_POINTS {
        return Err(Error::param(format!("MUSIC grid step {step} Hz gives too many points")));
    }
    let k_max = k_max as i64;
    Ok((-k_max..=k_max).map(|k| k as f64 * step).collect())
}

/// MUSIC pseudospectrum `1 / (a^H E_n E_n^H a)` evaluated on the search grid.
///
/// The steering vector is `a(f)[l] = exp(-j 2 pi f l T_P)`, matching the
/// per-packet Doppler rotation of the radar returns. Returns `(frequency,
/// value)` pairs; a vanishing denominator maps to `+inf`.
pub fn music_pseudospectrum(
    slow_time: &[Complex64],
    pulse_rep_interval: f64,
    grid_resolution_hz: f64,
    model_order: usize,
) -> Result<Vec<(f64, f64)>> {
    let q = slow_time.len();
    if model_order == 0 || q < model_order + 2 {
        return Err(Error::param(format!(
            "MUSIC needs at least model_order + 2 = {} packets, got {q}",
            model_order + 2
        )));
    }
    if !(pulse_rep_interval > 0.0) {
        return Err(Error::param("pulse repetition interval must be positive"));
    }
    let sub = subarray_len(q).min(q);
    if sub <= model_order {
        return Err(Error::param("subarray too short for the model order"));
    }
    let grid = search_grid(pulse_rep_interval, grid_resolution_hz)?;

    let cov = smoothed_covariance(slow_time, sub);
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..sub).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let noise_dim = sub - model_order;
    // projector onto the noise subspace
    let mut proj = DMatrix::<Complex64>::zeros(sub, sub);
    for &col in &order[..noise_dim] {
        let v = eig.eigenvectors.column(col);
        for i in 0..sub {
            for j in 0..sub {
                proj[(i, j)] += v[i] * v[j].conj();
            }
        }
    }

    let mut a = vec![Complex64::new(0.0, 0.0); sub];
    Ok(grid
        .into_iter()
        .map(|f| {
            let w = -2.0 * PI * f * pulse_rep_interval;
            for (l, z) in a.iter_mut().enumerate() {
                *z = Complex64::from_polar(1.0, w * l as f64);
            }
            let mut denom = 0.0;
            for i in 0..sub {
                let mut row = Complex64::new(0.0, 0.0);
                for j in 0..sub {
                    row += proj[(i, j)] * a[j];
                }
                denom += (a[i].conj() * row).re;
            }
            let value = if denom > 0.0 { 1.0 / denom } else { f64::INFINITY };
            (f, value)
        })
        .collect())
}

/// Doppler estimate: the grid frequency maximizing the MUSIC pseudospectrum.
/// Ties resolve to the lowest frequency.
pub fn music_doppler(
    slow_time: &[Complex64],
    pulse_rep_interval: f64,
    grid_resolution_hz: f64,
    model_order: usize,
) -> Result<f64> {
    let spectrum = music_pseudospectrum(slow_time, pulse_rep_interval, grid_resolution_hz, model_order)?;
    let mut best = spectrum[0];
    for &(f, v) in &spectrum[1..] {
        if v > best.1 {
            best = (f, v);
        }
    }
    Ok(best.0)
}
