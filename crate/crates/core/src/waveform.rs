//! Golay sounding sequences, transmit packets and analog beamforming weights.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scene::{steering_vector, ArrayConfig, WaveformConfig};

/// A Golay complementary pair of ±1 sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GolayPair {
    pub seq_a: Vec<i8>,
    pub seq_b: Vec<i8>,
}

impl GolayPair {
    pub fn len(&self) -> usize {
        self.seq_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq_a.is_empty()
    }
}

/// Recursive doubling `a' = a | b`, `b' = a | -b` from the pair `([1, 1], [1, -1])`.
pub fn golay_pair(length: usize) -> Result<GolayPair> {
    if length < 2 || !length.is_power_of_two() {
        return Err(Error::param(format!(
            "Golay length must be a power of two >= 2, got {length}"
        )));
    }
    let mut a = vec![1i8, 1];
    let mut b = vec![1i8, -1];
    while a.len() < length {
        let next_a: Vec<i8> = a.iter().chain(b.iter()).copied().collect();
        let next_b: Vec<i8> = a.iter().copied().chain(b.iter().map(|&x| -x)).collect();
        a = next_a;
        b = next_b;
    }
    Ok(GolayPair { seq_a: a, seq_b: b })
}

/// Full aperiodic autocorrelation, lags `-(n-1)..=(n-1)`, in integer arithmetic.
pub fn autocorrelation(seq: &[i8]) -> Vec<i64> {
    let n = seq.len() as isize;
    (-(n - 1)..n)
        .map(|lag| {
            (0..n)
                .filter_map(|i| {
                    let j = i + lag;
                    (0..n)
                        .contains(&j)
                        .then(|| seq[i as usize] as i64 * seq[j as usize] as i64)
                })
                .sum()
        })
        .collect()
}

/// One transmitted packet `x_q[m] = sqrt(E_s) * g[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub samples: Vec<Complex64>,
    /// 1-based packet index within the train.
    pub packet_index: usize,
    pub amplitude: f64,
}

impl Packet {
    /// Energy of the packet, `sum |x[m]|^2 = M E_s`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Assembles packet `q` (1-based). Every packet in the train carries the same
/// samples; the Doppler rotation between packets happens in the channel.
pub fn build_packet(pair: &GolayPair, q: usize, config: &WaveformConfig, use_a: bool) -> Result<Packet> {
    if q == 0 || q > config.num_packets {
        return Err(Error::param(format!(
            "packet index {q} outside 1..={}",
            config.num_packets
        )));
    }
    let amplitude = config.tx_energy.sqrt();
    let seq = if use_a { &pair.seq_a } else { &pair.seq_b };
    Ok(Packet {
        samples: seq
            .iter()
            .map(|&s| Complex64::new(amplitude * s as f64, 0.0))
            .collect(),
        packet_index: q,
        amplitude,
    })
}

/// Transmit weights `w[p] = exp(-j k_c d p sin(theta))`, the conjugate of the
/// steering vector, so that `w . u(theta) = P_BS`.
pub fn beamform_weights(theta: f64, arrays: &ArrayConfig, config: &WaveformConfig) -> Vec<Complex64> {
    steering_vector(
        theta,
        arrays.num_elements_bs,
        arrays.element_spacing_bs,
        config.propagation_const,
    )
    .into_iter()
    .map(|z| z.conj())
    .collect()
}

/// Unconjugated inner product `sum w[p] u[p]`.
pub fn array_response(weights: &[Complex64], steering: &[Complex64]) -> Complex64 {
    weights.iter().zip(steering).map(|(w, u)| w * u).sum()
}
