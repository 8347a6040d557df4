#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wpirc::model::{ChannelRealization, SystemParams};
use wpirc::sim::sample_channel;

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn small_params(n_c: usize, n_t: usize, mi: f64, rate: f64) -> SystemParams {
    SystemParams {
        n_subcarriers: n_c,
        n_antennas: n_t,
        mi_floor: mi,
        rate_floor: rate,
        ..SystemParams::default()
    }
}

/// Random small instance with floors drawn in `[lo, hi]` bits and 10 dB SNRs.
pub fn random_small(seed: u64, n_c: usize, n_t: usize, lo: f64, hi: f64) -> (SystemParams, ChannelRealization) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mi = rng.random_range(lo..hi);
    let rate = rng.random_range(lo..hi);
    let params = small_params(n_c, n_t, mi, rate);
    let chan = sample_channel(seed, &params, 10.0, 10.0);
    (params, chan)
}

/// Default-sized instance (128 subcarriers, 5 antennas, 150/150 bits).
pub fn full_instance(seed: u64) -> (SystemParams, ChannelRealization) {
    let params = SystemParams::default();
    let chan = sample_channel(seed, &params, 10.0, 10.0);
    (params, chan)
}
