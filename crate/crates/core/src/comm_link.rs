//! Downlink SNR, normalized reward, 16-QAM bit error rate and throughput.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::scene::{linear_to_db, steering_vector, ArrayConfig, Scene, WaveformConfig};
use crate::waveform::{array_response, beamform_weights};

/// BER reported when the selected beam has no path to the user.
pub const NO_PATH_BER: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    /// Reward window lower edge (dB); SNRs at or below map to 0.
    pub reward_lo_db: f64,
    /// Reward window upper edge (dB); SNRs at or above map to 1.
    pub reward_hi_db: f64,
    /// Bits delivered per slot, `D`.
    pub bits_per_slot: f64,
    /// Slot duration `T_d` (s).
    pub slot_duration: f64,
    /// Multiplicative Rayleigh fading on every slot.
    pub fading: bool,
    /// Whether radar processing slots count toward throughput.
    pub charge_gate_slots: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            reward_lo_db: -10.0,
            reward_hi_db: 40.0,
            bits_per_slot: 4096.0,
            slot_duration: 4e-3,
            fading: true,
            charge_gate_slots: true,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reward_lo_db < self.reward_hi_db) || !self.reward_lo_db.is_finite() || !self.reward_hi_db.is_finite() {
            return Err(Error::config(format!(
                "reward window [{}, {}] dB is empty",
                self.reward_lo_db, self.reward_hi_db
            )));
        }
        if !(self.bits_per_slot > 0.0 && self.slot_duration > 0.0) {
            return Err(Error::config("bits per slot and slot duration must be positive"));
        }
        Ok(())
    }

    /// Peak rate `D / T_d` in bits per second.
    pub fn peak_rate(&self) -> f64 {
        self.bits_per_slot / self.slot_duration
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub slot: usize,
    pub beam_index: usize,
    pub snr_linear: f64,
    pub snr_db: f64,
    pub reward: f64,
    pub ber: f64,
}

/// Mean downlink SNR through `beam` before fading, or `None` if the beam has
/// no path to the user.
///
/// `SNR = |w_MU . u_phi|^2 |g|^2 |u_theta . w_BS|^2 E_s / noise`, with both
/// ends matched (the user's receive weights are aligned to its arrival angle).
pub fn mean_snr(scene: &Scene, beam: usize, arrays: &ArrayConfig, waveform: &WaveformConfig) -> Option<f64> {
    let gain = scene.comm_path_gain(beam, waveform.wavelength)?;
    let theta = scene.grid().angle(beam);
    let bs = array_response(
        &beamform_weights(theta, arrays, waveform),
        &steering_vector(theta, arrays.num_elements_bs, arrays.element_spacing_bs, waveform.propagation_const),
    )
    .norm_sqr();
    // user side matched to its own arrival angle
    let mu = (arrays.num_elements_mu as f64).powi(2);
    let signal = mu * gain * gain * bs * waveform.tx_energy;
    Some(if scene.noise_power_comm > 0.0 {
        signal / scene.noise_power_comm
    } else {
        f64::INFINITY
    })
}

/// Instantaneous SNR for one slot: the mean SNR scaled by the slot's fading
/// power. A beam without a user path sits at the noise floor (SNR 0).
pub fn downlink_snr(
    scene: &Scene,
    beam: usize,
    arrays: &ArrayConfig,
    waveform: &WaveformConfig,
    fading_power: f64,
) -> f64 {
    mean_snr(scene, beam, arrays, waveform).map_or(0.0, |s| s * fading_power)
}

/// Unit-mean exponential fading power (Rayleigh amplitude).
pub fn draw_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Clip-then-affine map of `snr_db` from `[lo, hi]` onto `[0, 1]`.
pub fn snr_to_reward(snr_db: f64, lo: f64, hi: f64) -> f64 {
    if snr_db.is_nan() {
        return 0.0;
    }
    (snr_db.clamp(lo, hi) - lo) / (hi - lo)
}

/// Gray-coded 16-QAM bit error rate, `(3/4) Q(sqrt(snr / 5))`, clamped to `[0, 0.5]`.
pub fn ber_16qam(snr_linear: f64) -> f64 {
    if snr_linear.is_infinite() {
        return 0.0;
    }
    let snr = snr_linear.max(0.0);
    (0.75 * q_function((snr / 5.0).sqrt())).clamp(0.0, 0.5)
}

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `(1 - mean(BER)) D / T_d`.
pub fn throughput(bers: &[f64], bits_per_slot: f64, slot_duration: f64) -> Result<f64> {
    if bers.is_empty() {
        return Err(Error::param("throughput needs at least one slot"));
    }
    if !(bits_per_slot > 0.0 && slot_duration > 0.0) {
        return Err(Error::param("bits per slot and slot duration must be positive"));
    }
    let mean = bers.iter().sum::<f64>() / bers.len() as f64;
    Ok((1.0 - mean) * bits_per_slot / slot_duration)
}

/// Reward and BER of one slot given its SNR (`None`: no path to the user).
pub fn observe(slot: usize, beam: usize, snr: Option<f64>, config: &LinkConfig) -> LinkReport {
    let snr_linear = snr.unwrap_or(0.0);
    let snr_db = linear_to_db(snr_linear);
    let reward = match snr {
        Some(_) => snr_to_reward(snr_db, config.reward_lo_db, config.reward_hi_db),
        None => 0.0,
    };
    let ber = match snr {
        Some(s) => ber_16qam(s),
        None => NO_PATH_BER,
    };
    LinkReport {
        slot,
        beam_index: beam,
        snr_linear,
        snr_db,
        reward,
        ber,
    }
}

/// `E[f(mean * X)]` for `X ~ Exp(1)`, by Simpson's rule in `u = ln x`.
fn fading_average(mean: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi) = (-40.0f64, 4.5f64);
    let steps = 20_000usize;
    let h = (hi - lo) / steps as f64;
    let g = |u: f64| {
        let x = u.exp();
        f(mean * x) * (-x).exp() * x
    };
    let mut acc = g(lo) + g(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Expected reward of a beam with mean SNR `snr` under the configured fading.
pub fn expected_reward(snr: Option<f64>, config: &LinkConfig) -> f64 {
    let Some(s) = snr else {
        return 0.0;
    };
    let reward = |x: f64| snr_to_reward(linear_to_db(x), config.reward_lo_db, config.reward_hi_db);
    if !config.fading || s.is_infinite() {
        return reward(s);
    }
    fading_average(s, reward)
}

/// Expected BER of a beam with mean SNR `snr` under the configured fading.
pub fn expected_ber(snr: Option<f64>, config: &LinkConfig) -> f64 {
    let Some(s) = snr else {
        return NO_PATH_BER;
    };
    if !config.fading || s.is_infinite() {
        return ber_16qam(s);
    }
    fading_average(s, ber_16qam)
}
