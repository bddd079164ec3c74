//! Ordered-statistics CFAR.
//!
//! A cell is declared a detection when its magnitude is at least `scale`
//! times the `os_rank`-th smallest magnitude among its `num_training`
//! neighbours (guard cells excluded). Near the profile edges the training
//! window slides inward so every cell is compared against the same number of
//! neighbours.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CfarParams {
    pub num_training: usize,
    pub num_guard: usize,
    pub os_rank: usize,
    /// Magnitude multiplier applied to the order statistic.
    pub scale: f64,
}

impl CfarParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_training == 0 || !self.num_training.is_multiple_of(2) {
            return Err(Error::param(format!(
                "CFAR training cells must be a positive even number, got {}",
                self.num_training
            )));
        }
        if self.os_rank == 0 || self.os_rank > self.num_training {
            return Err(Error::param(format!(
                "CFAR order-statistic rank {} outside 1..={}",
                self.os_rank, self.num_training
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::param(format!("CFAR scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }

    /// Parameters whose scale gives false-alarm probability `pfa` on noise
    /// integrated over `integrated` packets.
    pub fn for_pfa(
        pfa: f64,
        num_training: usize,
        num_guard: usize,
        os_rank: usize,
        integrated: usize,
    ) -> Result<Self> {
        let params = Self {
            num_training,
            num_guard,
            os_rank,
            scale: scale_for_pfa(pfa, num_training, os_rank, integrated)?,
        };
        params.validate()?;
        Ok(params)
    }

    /// Shortest profile the detector accepts.
    pub fn min_profile_len(&self) -> usize {
        self.num_training + 2 * self.num_guard + 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarDetection {
    pub bin: usize,
    pub amplitude: f64,
    pub threshold: f64,
}

/// Training cells of `cell`: `num_training / 2` on each side beyond the guard
/// cells, shifted to one side at the edges.
fn training_window(cell: usize, len: usize, params: &CfarParams, out: &mut Vec<usize>) {
    out.clear();
    let half = params.num_training / 2;
    let g = params.num_guard;
    let left_avail = cell.saturating_sub(g);
    let right_avail = len.saturating_sub(cell + g + 1);
    let need = params.num_training;
    let left = half.min(left_avail);
    let right = (need - left).min(right_avail);
    let left = (need - right).min(left_avail);
    for k in 1..=left {
        out.push(cell - g - k);
    }
    for k in 1..=right {
        out.push(cell + g + k);
    }
}

/// The `rank`-th smallest value (1-based) of `values`; reorders `values`.
pub fn ordered_statistic(values: &mut [f64], rank: usize) -> f64 {
    let (_, v, _) = values.select_nth_unstable_by(rank - 1, |a, b| a.total_cmp(b));
    *v
}

/// Runs OS-CFAR over a magnitude profile and returns every detected cell.
pub fn os_cfar(profile: &[f64], params: &CfarParams) -> Result<Vec<CfarDetection>> {
    params.validate()?;
    if profile.len() < params.min_profile_len() {
        return Err(Error::param(format!(
            "profile of {} cells is too short for {} training and {} guard cells",
            profile.len(),
            params.num_training,
            params.num_guard
        )));
    }
    let mut window = Vec::with_capacity(params.num_training);
    let mut values = Vec::with_capacity(params.num_training);
    let mut detections = Vec::new();
    for (cell, &x) in profile.iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        training_window(cell, profile.len(), params, &mut window);
        values.clear();
        values.extend(window.iter().map(|&i| profile[i]));
        let threshold = params.scale * ordered_statistic(&mut values, params.os_rank);
        if x >= threshold {
            detections.push(CfarDetection {
                bin: cell,
                amplitude: x,
                threshold,
            });
        }
    }
    Ok(detections)
}

/// False-alarm probability of OS-CFAR on i.i.d. noise for a power-domain
/// multiplier `power_scale` (the square of the magnitude scale).
///
/// Each cell is the sum of `integrated` unit exponentials (the noncoherent
/// sum of that many complex Gaussian samples). One integrated packet has the
/// closed form `prod_{i<k} (N - i) / (N - i + T)`; otherwise the
/// order-statistic density is integrated numerically.
pub fn false_alarm_probability(power_scale: f64, num_training: usize, os_rank: usize, integrated: usize) -> f64 {
    let n = num_training as f64;
    if integrated == 1 {
        return (0..os_rank)
            .map(|i| (n - i as f64) / (n - i as f64 + power_scale))
            .product();
    }
    order_statistic_integral(power_scale, num_training, os_rank, integrated as f64)
}

fn order_statistic_integral(t: f64, num_training: usize, os_rank: usize, shape: f64) -> f64 {
    let n = num_training as f64;
    let k = os_rank as f64;
    // log of N! / ((k-1)! (N-k)!)
    let ln_coeff = ln_gamma(n + 1.0) - ln_gamma(k) - ln_gamma(n - k + 1.0);
    let ln_gamma_shape = ln_gamma(shape);
    let integrand = |y: f64| -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let cdf = gamma_lr(shape, y);
        let sf = 1.0 - cdf;
        if cdf <= 0.0 || sf <= 0.0 {
            return 0.0;
        }
        let ln_pdf = (shape - 1.0) * y.ln() - y - ln_gamma_shape;
        let ln_density = ln_coeff + (k - 1.0) * cdf.ln() + (n - k) * sf.ln() + ln_pdf;
        ln_density.exp() * gamma_ur(shape, t * y)
    };
    let upper = shape + 14.0 * shape.sqrt() + 40.0;
    let steps = 8000usize;
    let h = upper / steps as f64;
    // composite Simpson
    let mut acc = integrand(0.0) + integrand(upper);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(i as f64 * h);
    }
    acc * h / 3.0
}

/// Magnitude scale giving false-alarm probability `pfa` on i.i.d. noise.
pub fn scale_for_pfa(pfa: f64, num_training: usize, os_rank: usize, integrated: usize) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::param(format!("false-alarm probability must lie in (0, 1), got {pfa}")));
    }
    if os_rank == 0 || os_rank > num_training || integrated == 0 {
        return Err(Error::param("invalid CFAR rank or integration count"));
    }
    let pfa_at = |ln_t: f64| false_alarm_probability(ln_t.exp(), num_training, os_rank, integrated);
    let (mut lo, mut hi) = (-20.0f64, 20.0f64);
    if pfa_at(hi) > pfa {
        return Err(Error::param(format!("false-alarm probability {pfa} is unreachable")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pfa_at(mid) > pfa {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp().sqrt())
}

/// Monte Carlo calibration of the magnitude scale.
///
/// Draws `cells` cells of unit-power complex Gaussian noise, noncoherently
/// integrated over `integrated` packets, computes each cell's ratio to its
/// training order statistic exactly as [`os_cfar`] would, and returns the
/// `1 - pfa` empirical quantile of those ratios.
pub fn calibrate_scale<R: Rng + ?Sized>(
    pfa: f64,
    cells: usize,
    num_training: usize,
    num_guard: usize,
    os_rank: usize,
    integrated: usize,
    rng: &mut R,
) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::param(format!("false-alarm probability must lie in (0, 1), got {pfa}")));
    }
    let params = CfarParams {
        num_training,
        num_guard,
        os_rank,
        scale: 1.0,
    };
    params.validate()?;
    if integrated == 0 {
        return Err(Error::param("at least one packet must be integrated"));
    }
    let exceed = (pfa * cells as f64).floor() as usize;
    if exceed == 0 || cells < params.min_profile_len() {
        return Err(Error::param(format!(
            "{cells} cells are too few to calibrate a false-alarm rate of {pfa}"
        )));
    }
    let profile = noise_profile(cells, integrated, rng);
    let mut window = Vec::with_capacity(num_training);
    let mut values = Vec::with_capacity(num_training);
    let mut ratios: Vec<f64> = (0..cells)
        .map(|cell| {
            training_window(cell, cells, &params, &mut window);
            values.clear();
            values.extend(window.iter().map(|&i| profile[i]));
            profile[cell] / ordered_statistic(&mut values, os_rank)
        })
        .collect();
    // the `exceed`-th largest ratio
    let idx = cells - exceed;
    let (_, v, _) = ratios.select_nth_unstable_by(idx, |a, b| a.total_cmp(b));
    Ok(*v)
}

/// Magnitude profile of unit-power complex Gaussian noise integrated the same
/// way as [`super::integrate_profiles`].
pub(crate) fn noise_profile<R: Rng + ?Sized>(cells: usize, integrated: usize, rng: &mut R) -> Vec<f64> {
    let var = 0.5;
    (0..cells)
        .map(|_| {
            let power: f64 = (0..integrated)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    var * (re * re + im * im)
                })
                .sum();
            (power / integrated as f64).sqrt()
        })
        .collect()
}
