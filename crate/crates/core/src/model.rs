//! Domain types and pure evaluators for the harvest-then-transmit IRC model.
//!
//! Units throughout: seconds, hertz, watts, joules, bits. Per-subcarrier
//! energies `gamma[m] = tau2 * p[m]` are in joules; SNRs are linear.

use std::f64::consts::LN_2;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::real_trace;
use crate::{Error, Result};

/// Static scenario constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Number of OFDM subcarriers.
    pub n_subcarriers: usize,
    /// Antennas at the power station.
    pub n_antennas: usize,
    /// Subcarrier spacing (Hz).
    pub delta_f: f64,
    /// OFDM symbol duration (s).
    pub symbol_duration: f64,
    /// Total frame time shared by the harvest and transmit phases (s).
    pub total_time: f64,
    /// Peak transmit power of the power station (W).
    pub power_cap: f64,
    /// RF-to-DC conversion efficiency.
    pub efficiency: f64,
    /// Radar conditional mutual-information floor (bits).
    pub mi_floor: f64,
    /// Communication data-rate floor (bits).
    pub rate_floor: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            n_subcarriers: 128,
            n_antennas: 5,
            delta_f: 2.5e5,
            symbol_duration: 5e-6,
            total_time: 1e-4,
            power_cap: 50.0,
            efficiency: 0.5,
            mi_floor: 150.0,
            rate_floor: 150.0,
        }
    }
}

impl SystemParams {
    pub fn with_mi_floor(mut self, bits: f64) -> Self {
        self.mi_floor = bits;
        self
    }

    pub fn with_rate_floor(mut self, bits: f64) -> Self {
        self.rate_floor = bits;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || self.n_antennas == 0 {
            return Err(Error::invalid("subcarrier and antenna counts must be positive"));
        }
        let positive = [
            ("delta_f", self.delta_f),
            ("symbol_duration", self.symbol_duration),
            ("total_time", self.total_time),
            ("power_cap", self.power_cap),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("mi_floor", self.mi_floor), ("rate_floor", self.rate_floor)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be nonnegative and finite, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::invalid(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if self.symbol_duration > self.total_time {
            return Err(Error::invalid("symbol_duration exceeds total_time"));
        }
        Ok(())
    }

    /// True when neither the radar nor the communication floor asks for anything.
    pub fn zero_demand(&self) -> bool {
        self.mi_floor <= 0.0 && self.rate_floor <= 0.0
    }
}

/// One random draw of every channel in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Power station to transmitter channel, one entry per antenna.
    pub h: DVector<Complex64>,
    /// Per-subcarrier radar SNR.
    pub radar_snr: Vec<f64>,
    /// Per-subcarrier communication SNR.
    pub comm_snr: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(h: Vec<Complex64>, radar_snr: Vec<f64>, comm_snr: Vec<f64>) -> Self {
        Self {
            h: DVector::from_vec(h),
            radar_snr,
            comm_snr,
        }
    }

    /// `||h||^2`.
    pub fn h_norm_sqr(&self) -> f64 {
        self.h.norm_squared()
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        check_len("channel h", params.n_antennas, self.h.len())?;
        check_len("radar_snr", params.n_subcarriers, self.radar_snr.len())?;
        check_len("comm_snr", params.n_subcarriers, self.comm_snr.len())?;
        if self.h.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("channel h has non-finite entries"));
        }
        for (name, v) in [("radar_snr", &self.radar_snr), ("comm_snr", &self.comm_snr)] {
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    ZeroDemand,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::ZeroDemand => "zero_demand",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A complete allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Energy beamformer `w_e` (sqrt(W)); `||w_e||^2` is the station's transmit power.
    pub beam_vector: DVector<Complex64>,
    /// Harvest phase duration (s).
    pub tau1: f64,
    /// Radar-communication phase duration (s).
    pub tau2: f64,
    /// Per-subcarrier transmit energy `tau2 * p_m` (J).
    pub gamma: Vec<f64>,
    /// Power-station energy `tau1 * ||w_e||^2` (J).
    pub energy: f64,
    /// Energy-scaled beam covariance `tau1 * w_e w_e^H`.
    pub covariance_bar: DMatrix<Complex64>,
}

impl Solution {
    pub fn infeasible(params: &SystemParams) -> Self {
        Self::empty(params, Status::Infeasible, f64::NAN, f64::NAN, f64::NAN)
    }

    /// The all-zero allocation: nothing harvested, the whole frame left to transmission.
    pub fn zero_demand(params: &SystemParams) -> Self {
        Self::empty(params, Status::ZeroDemand, 0.0, params.total_time, 0.0)
    }

    fn empty(params: &SystemParams, status: Status, tau1: f64, tau2: f64, energy: f64) -> Self {
        let n_t = params.n_antennas;
        Self {
            status,
            beam_vector: DVector::zeros(n_t),
            tau1,
            tau2,
            gamma: vec![0.0; params.n_subcarriers],
            energy,
            covariance_bar: DMatrix::zeros(n_t, n_t),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Sum of per-subcarrier energies spent in the transmit phase.
    pub fn irc_energy(&self) -> f64 {
        self.gamma.iter().sum()
    }

    /// Station transmit power `||w_e||^2`.
    pub fn beam_power(&self) -> f64 {
        self.beam_vector.norm_squared()
    }

    /// Number of whole OFDM symbols that fit in the transmit phase.
    pub fn n_symbols(&self, params: &SystemParams) -> u64 {
        if self.tau2.is_finite() && self.tau2 > 0.0 {
            (self.tau2 / params.symbol_duration).round() as u64
        } else {
            0
        }
    }

    /// Per-subcarrier transmit power `p_m = gamma_m / tau2` (W).
    pub fn subcarrier_powers(&self) -> Vec<f64> {
        self.gamma
            .iter()
            .map(|g| if self.tau2 > 0.0 { g / self.tau2 } else { 0.0 })
            .collect()
    }

    pub fn achieved_mi(&self, params: &SystemParams, chan: &ChannelRealization) -> f64 {
        if !self.tau2.is_finite() {
            return f64::NAN;
        }
        0.5 * params.delta_f * perspective_log2(&self.gamma, &chan.radar_snr, self.tau2)
    }

    pub fn achieved_rate(&self, params: &SystemParams, chan: &ChannelRealization) -> f64 {
        if !self.tau2.is_finite() {
            return f64::NAN;
        }
        params.delta_f * perspective_log2(&self.gamma, &chan.comm_snr, self.tau2)
    }
}

/// Energy harvested over `tau1`: `eta * tau1 * |h^H w|^2`.
pub fn harvested_energy(
    h: &DVector<Complex64>,
    w: &DVector<Complex64>,
    tau1: f64,
    eta: f64,
) -> Result<f64> {
    check_len("beam vector", h.len(), w.len())?;
    if tau1 < 0.0 || !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!(
            "harvested_energy needs tau1 >= 0 and eta in [0, 1] (tau1 = {tau1}, eta = {eta})"
        )));
    }
    Ok(eta * tau1 * h.dotc(w).norm_sqr())
}

/// Radar conditional mutual information (bits):
/// `(delta_f * tau2 / 2) * sum log2(1 + gamma_m v_m / tau2)`.
pub fn radar_mi(gamma: &[f64], radar_snr: &[f64], tau2: f64, delta_f: f64) -> Result<f64> {
    check_rate_inputs(gamma, radar_snr, tau2, delta_f)?;
    Ok(0.5 * delta_f * perspective_log2(gamma, radar_snr, tau2))
}

/// Communication data information rate (bits):
/// `delta_f * tau2 * sum log2(1 + gamma_m w_m / tau2)`.
pub fn comm_rate(gamma: &[f64], comm_snr: &[f64], tau2: f64, delta_f: f64) -> Result<f64> {
    check_rate_inputs(gamma, comm_snr, tau2, delta_f)?;
    Ok(delta_f * perspective_log2(gamma, comm_snr, tau2))
}

/// `tau2 * sum log2(1 + gamma_m g_m / tau2)`, the perspective of `log2(1 + g x)`.
/// Zero at `tau2 = 0`.
pub(crate) fn perspective_log2(gamma: &[f64], gains: &[f64], tau2: f64) -> f64 {
    if tau2 <= 0.0 {
        return 0.0;
    }
    let sum: f64 = gamma
        .iter()
        .zip(gains)
        .map(|(&g, &v)| (g * v / tau2).ln_1p())
        .sum();
    tau2 * sum / LN_2
}

fn check_rate_inputs(gamma: &[f64], gains: &[f64], tau2: f64, delta_f: f64) -> Result<()> {
    check_len("subcarrier gains", gamma.len(), gains.len())?;
    if tau2 < 0.0 || delta_f < 0.0 || !tau2.is_finite() {
        return Err(Error::invalid(format!(
            "tau2 and delta_f must be nonnegative (tau2 = {tau2}, delta_f = {delta_f})"
        )));
    }
    if gamma.iter().chain(gains).any(|x| !(*x >= 0.0)) {
        return Err(Error::invalid("subcarrier energies and SNRs must be nonnegative"));
    }
    Ok(())
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { what, expected, found });
    }
    Ok(())
}

/// One row of a [`FeasibilityReport`]. `slack >= 0` means satisfied exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub satisfied: bool,
}

impl ConstraintCheck {
    fn new(name: &'static str, lhs: f64, rhs: f64, slack: f64, tol: f64) -> Self {
        Self {
            name,
            lhs,
            rhs,
            slack,
            satisfied: slack >= -tol * rhs.abs().max(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub checks: Vec<ConstraintCheck>,
}

impl FeasibilityReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn get(&self, name: &str) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn violated(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }
}

/// Evaluates constraints C1 to C6 of the transformed problem for `sol`.
///
/// C1: radar MI >= floor. C2: rate >= floor. C3: transmit energy <= harvested.
/// C4: `trace(Q) <= tau1 * P`. C5: `tau1 + tau2 <= T` with both nonnegative.
/// C6: every `gamma_m >= 0`.
pub fn check_constraints(
    params: &SystemParams,
    chan: &ChannelRealization,
    sol: &Solution,
    tol: f64,
) -> Result<FeasibilityReport> {
    chan.validate(params)?;
    check_len("solution gamma", params.n_subcarriers, sol.gamma.len())?;
    check_len("solution beam", params.n_antennas, sol.beam_vector.len())?;
    check_len("solution covariance", params.n_antennas, sol.covariance_bar.nrows())?;
    check_len("solution covariance", params.n_antennas, sol.covariance_bar.ncols())?;

    let tau1 = sol.tau1.max(0.0);
    let mi = sol.achieved_mi(params, chan);
    let rate = sol.achieved_rate(params, chan);
    let spent = sol.irc_energy();
    let harvested = harvested_energy(&chan.h, &sol.beam_vector, tau1, params.efficiency)?;
    let trace = real_trace(&sol.covariance_bar);
    let budget = sol.tau1 * params.power_cap;
    let frame = sol.tau1 + sol.tau2;
    let min_gamma = sol.gamma.iter().copied().fold(f64::INFINITY, f64::min);
    let min_gamma = if min_gamma.is_finite() { min_gamma } else { 0.0 };

    let checks = vec![
        ConstraintCheck::new("C1", mi, params.mi_floor, mi - params.mi_floor, tol),
        ConstraintCheck::new("C2", rate, params.rate_floor, rate - params.rate_floor, tol),
        ConstraintCheck::new("C3", spent, harvested, harvested - spent, tol),
        ConstraintCheck::new("C4", trace, budget, budget - trace, tol),
        ConstraintCheck::new(
            "C5",
            frame,
            params.total_time,
            (params.total_time - frame).min(sol.tau1).min(sol.tau2),
            tol,
        ),
        ConstraintCheck::new("C6", min_gamma, 0.0, min_gamma, tol),
    ];
    // NaN slacks (e.g. an infeasible placeholder) must not pass.
    let checks = checks
        .into_iter()
        .map(|mut c| {
            if c.slack.is_nan() {
                c.satisfied = false;
            }
            c
        })
        .collect();
    Ok(FeasibilityReport { checks })
}

/// Parameters of the transmitted multicarrier waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSpec {
    /// Carrier frequency (Hz). Not used in complex baseband synthesis.
    pub center_freq: f64,
    pub n_symbols: usize,
    /// Unit-modulus phase codes, `n_subcarriers x n_symbols`.
    pub phase_codes: DMatrix<Complex64>,
    /// Per-subcarrier amplitudes `sqrt(p_m)` (sqrt(W)).
    pub amplitudes: Vec<f64>,
}

impl WaveformSpec {
    pub fn new(
        center_freq: f64,
        phase_codes: DMatrix<Complex64>,
        amplitudes: Vec<f64>,
    ) -> Result<Self> {
        check_len("amplitudes", phase_codes.nrows(), amplitudes.len())?;
        if phase_codes.ncols() == 0 {
            return Err(Error::invalid("waveform needs at least one symbol"));
        }
        if phase_codes.iter().any(|c| (c.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::invalid("phase codes must have unit modulus"));
        }
        if amplitudes.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::invalid("amplitudes must be nonnegative"));
        }
        Ok(Self {
            center_freq,
            n_symbols: phase_codes.ncols(),
            phase_codes,
            amplitudes,
        })
    }

    /// QPSK phase codes drawn from `seed`.
    pub fn qpsk(center_freq: f64, amplitudes: Vec<f64>, n_symbols: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let codes = DMatrix::from_fn(amplitudes.len(), n_symbols, |_, _| {
            let k: u8 = rng.random_range(0..4);
            let re = if k & 1 == 0 { s } else { -s };
            let im = if k & 2 == 0 { s } else { -s };
            Complex64::new(re, im)
        });
        Self::new(center_freq, codes, amplitudes)
    }

    /// Waveform carrying the allocation in `sol`: amplitudes `sqrt(gamma_m / tau2)`
    /// and as many symbols as fit in `tau2` (at least one).
    pub fn from_solution(
        params: &SystemParams,
        sol: &Solution,
        center_freq: f64,
        seed: u64,
    ) -> Result<Self> {
        let amps = sol.subcarrier_powers().into_iter().map(f64::sqrt).collect();
        let n_symbols = sol.n_symbols(params).max(1) as usize;
        Self::qpsk(center_freq, amps, n_symbols, seed)
    }
}

/// Complex-baseband samples of OFDM symbol `symbol_index` over one symbol
/// duration, sampled at `sample_rate`.
pub fn synthesize_ofdm(
    spec: &WaveformSpec,
    params: &SystemParams,
    sample_rate: f64,
    symbol_index: usize,
) -> Result<Vec<Complex64>> {
    check_len("waveform subcarriers", params.n_subcarriers, spec.amplitudes.len())?;
    let bandwidth = params.n_subcarriers as f64 * params.delta_f;
    if !(sample_rate >= bandwidth * (1.0 - 1e-12)) {
        return Err(Error::SampleRateTooLow {
            sample_rate,
            bandwidth,
        });
    }
    if symbol_index >= spec.n_symbols {
        return Err(Error::invalid(format!(
            "symbol index {symbol_index} out of range for {} symbols",
            spec.n_symbols
        )));
    }
    let exact = sample_rate * params.symbol_duration;
    let n_samples = if (exact - exact.round()).abs() < 1e-9 * exact.max(1.0) {
        exact.round() as usize
    } else {
        exact.ceil() as usize
    };
    let weights: Vec<Complex64> = spec
        .amplitudes
        .iter()
        .enumerate()
        .map(|(m, &a)| spec.phase_codes[(m, symbol_index)] * a)
        .collect();
    let step = std::f64::consts::TAU * params.delta_f / sample_rate;
    let samples = (0..n_samples)
        .map(|k| {
            weights
                .iter()
                .enumerate()
                .map(|(m, w)| w * Complex64::from_polar(1.0, step * (m * k) as f64))
                .sum()
        })
        .collect();
    Ok(samples)
}
