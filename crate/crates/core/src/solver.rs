//! Minimum-energy solver.
//!
//! The beamforming block has a closed form: for a fixed transmit-phase
//! energy `S`, the cheapest covariance delivering `S` after conversion is
//! the maximum-ratio matrix `S / (eta ||h||^4) h h^H`, whose trace is
//! `S / (eta ||h||^2)`. What remains is
//!
//! ```text
//! minimize   S*(tau2)                       over tau2 in (0, T]
//! subject to S*(tau2) <= eta ||h||^2 P (T - tau2)
//! ```
//!
//! where `S*(tau2)` is the least total subcarrier energy meeting both rate
//! floors in a transmit phase of length `tau2` (computed by a two-multiplier
//! water-filling). `S*` is convex and strictly decreasing, so the optimum is
//! the largest root of the coupling function `phi(tau2) = S*(tau2) -
//! eta ||h||^2 P (T - tau2)`.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::certify::rank_one_extract;
use crate::linalg::{outer, real_trace};
use crate::model::{ChannelRealization, Solution, Status, SystemParams};
use crate::roots::{brent, expand_up, golden_min};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Normalized constraint residual accepted by the dual search:
    /// `|achieved - floor| / max(1, floor)`.
    pub dual_tol: f64,
    /// Relative tolerance used by post-solve consistency checks.
    pub constraint_tol: f64,
    /// Resolution of the time-split search as a fraction of `T`.
    pub time_tol: f64,
    /// Iteration cap for every scalar search.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dual_tol: 1e-10,
            constraint_tol: 1e-8,
            time_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Multipliers of the radar (C1) and communication (C2) floors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualPair {
    pub lambda_r: f64,
    pub lambda_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveSet {
    /// Both floors are zero; nothing is transmitted.
    Neither,
    RadarOnly,
    CommOnly,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    /// Per-subcarrier energies (J).
    pub gamma: Vec<f64>,
    pub duals: DualPair,
    /// Largest violation of per-subcarrier stationarity / dual feasibility.
    pub stationarity_residual: f64,
    pub active: ActiveSet,
}

impl InnerResult {
    pub fn total_energy(&self) -> f64 {
        self.gamma.iter().sum()
    }
}

/// Normalized power `x = gamma / tau2` on one subcarrier for scaled
/// multipliers `a = lambda_r delta_f v / (2 ln 2)` and `b = lambda_c delta_f w / ln 2`:
/// the nonnegative solution of `1 = a / (1 + x v) + b / (1 + x w)`.
fn stationary_power(a: f64, b: f64, v: f64, w: f64) -> f64 {
    if a + b <= 1.0 {
        return 0.0;
    }
    if v == 0.0 {
        return if w == 0.0 { 0.0 } else { (b - 1.0) / w };
    }
    if w == 0.0 {
        return (a - 1.0) / v;
    }
    // v w x^2 + (v + w - a w - b v) x + (1 - a - b) = 0, larger root.
    let qa = v * w;
    let qb = v + w - a * w - b * v;
    let qc = 1.0 - a - b;
    let scale = qb.abs().max((qa.abs() * qc.abs()).sqrt() * 2.0);
    let sq = scale * ((qb / scale).powi(2) - 4.0 * (qa / scale) * (qc / scale)).sqrt();
    let x = if qb >= 0.0 {
        2.0 * qc / (-qb - sq)
    } else {
        (-qb + sq) / (2.0 * qa)
    };
    x.max(0.0)
}

/// Energy on one subcarrier that minimizes the Lagrangian for `duals`.
pub fn subcarrier_gamma(duals: DualPair, v: f64, w: f64, tau2: f64, delta_f: f64) -> f64 {
    let a = duals.lambda_r * delta_f * v / (2.0 * LN_2);
    let b = duals.lambda_c * delta_f * w / LN_2;
    tau2 * stationary_power(a, b, v, w)
}

/// Water-filling over subcarriers in multiplier units independent of `tau2`:
/// `alpha = lambda_r delta_f / (2 ln 2)`, `beta = lambda_c delta_f / ln 2`.
struct Waterfill<'a> {
    v: &'a [f64],
    w: &'a [f64],
}

impl Waterfill<'_> {
    fn power(&self, m: usize, alpha: f64, beta: f64) -> f64 {
        let (v, w) = (self.v[m], self.w[m]);
        stationary_power(alpha * v, beta * w, v, w)
    }

    /// `(sum log2(1 + x v), sum log2(1 + x w))` at the multipliers.
    fn log_sums(&self, alpha: f64, beta: f64) -> (f64, f64) {
        let mut sr = 0.0;
        let mut sc = 0.0;
        for m in 0..self.v.len() {
            let x = self.power(m, alpha, beta);
            if x > 0.0 {
                sr += (x * self.v[m]).ln_1p();
                sc += (x * self.w[m]).ln_1p();
            }
        }
        (sr / LN_2, sc / LN_2)
    }

    /// Smallest level meeting one floor alone; `None` if no gain is positive.
    fn single_level(
        &self,
        radar: bool,
        target: f64,
        f_tol: f64,
        max_iter: usize,
    ) -> Result<Option<f64>> {
        let gains = if radar { self.v } else { self.w };
        let best = gains.iter().copied().fold(0.0, f64::max);
        if best <= 0.0 {
            return Ok(None);
        }
        let f = |level: f64| -> Result<f64> {
            let (sr, sc) = if radar {
                self.log_sums(level, 0.0)
            } else {
                self.log_sums(0.0, level)
            };
            Ok(if radar { sr } else { sc } - target)
        };
        // Nothing is allocated at or below 1 / best.
        let lo = 1.0 / best;
        let Some((hi, f_hi)) = expand_up(f, 2.0 * lo, 4 * max_iter.max(1100))? else {
            return Ok(None);
        };
        let stage = if radar { "radar water level" } else { "rate water level" };
        let root = brent(stage, f, lo, hi, -target, f_hi, hi * 4.0 * f64::EPSILON, f_tol, max_iter)?;
        Ok(Some(root.x))
    }
}

/// Scaled multipliers and active set of the inner problem in log-sum units.
/// `None` when a positive floor cannot be met by any finite allocation.
fn inner_levels(
    wf: &Waterfill<'_>,
    t_r: f64,
    t_c: f64,
    tol_r: f64,
    tol_c: f64,
    max_iter: usize,
) -> Result<Option<(f64, f64, ActiveSet)>> {
    if t_r <= 0.0 && t_c <= 0.0 {
        return Ok(Some((0.0, 0.0, ActiveSet::Neither)));
    }
    let alpha_r = if t_r > 0.0 {
        match wf.single_level(true, t_r, tol_r, max_iter)? {
            Some(a) => Some(a),
            None => return Ok(None),
        }
    } else {
        None
    };
    if let Some(alpha) = alpha_r {
        if t_c <= 0.0 || wf.log_sums(alpha, 0.0).1 >= t_c {
            return Ok(Some((alpha, 0.0, ActiveSet::RadarOnly)));
        }
    }
    let Some(beta_c) = wf.single_level(false, t_c, tol_c, max_iter)? else {
        return Ok(None);
    };
    let Some(alpha_r) = alpha_r else {
        return Ok(Some((0.0, beta_c, ActiveSet::CommOnly)));
    };
    if wf.log_sums(0.0, beta_c).0 >= t_r {
        return Ok(Some((0.0, beta_c, ActiveSet::CommOnly)));
    }

    // Both floors bind. For each radar level, the rate floor fixes the
    // communication level; the radar log-sum along that curve is monotone.
    let beta_for = |alpha: f64| -> Result<f64> {
        let f0 = wf.log_sums(alpha, 0.0).1 - t_c;
        if f0 >= 0.0 {
            return Ok(0.0);
        }
        let f_hi = wf.log_sums(alpha, beta_c).1 - t_c;
        let f = |beta: f64| Ok(wf.log_sums(alpha, beta).1 - t_c);
        let root = brent(
            "rate multiplier",
            f,
            0.0,
            beta_c,
            f0,
            f_hi,
            beta_c * 4.0 * f64::EPSILON,
            tol_c,
            max_iter,
        )?;
        Ok(root.x)
    };
    let g = |alpha: f64| -> Result<f64> {
        let beta = beta_for(alpha)?;
        Ok(wf.log_sums(alpha, beta).0 - t_r)
    };
    let g_lo = wf.log_sums(0.0, beta_c).0 - t_r;
    let g_hi = g(alpha_r)?;
    let root = brent(
        "radar multiplier",
        g,
        0.0,
        alpha_r,
        g_lo,
        g_hi,
        alpha_r * 4.0 * f64::EPSILON,
        tol_r,
        max_iter,
    )?;
    let beta = beta_for(root.x)?;
    Ok(Some((root.x, beta, ActiveSet::Both)))
}

/// Worst violation of per-subcarrier stationarity for `duals` and `gamma`.
fn stationarity_residual(
    duals: DualPair,
    gamma: &[f64],
    chan: &ChannelRealization,
    tau2: f64,
    delta_f: f64,
) -> f64 {
    gamma
        .iter()
        .zip(chan.radar_snr.iter().zip(&chan.comm_snr))
        .map(|(&g, (&v, &w))| {
            let a = duals.lambda_r * delta_f * v / (2.0 * LN_2);
            let b = duals.lambda_c * delta_f * w / LN_2;
            let x = g / tau2;
            if x > 0.0 {
                (1.0 - a / (1.0 + x * v) - b / (1.0 + x * w)).abs()
            } else {
                (a + b - 1.0).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Least total subcarrier energy `S` for a fixed transmit phase, expressed
/// as a function of `tau2` so it can drive the time-split search.
pub(crate) type Allocator<'a> = dyn FnMut(f64) -> Result<Option<Vec<f64>>> + 'a;

#[derive(Debug, Clone, Default)]
pub struct Solver {
    pub options: SolverOptions,
}

impl Solver {
    pub fn new(options: SolverOptions) -> Self {
        Self { options }
    }

    /// Minimum-energy subcarrier allocation for a transmit phase of `tau2`
    /// seconds, with the multipliers certifying it.
    pub fn inner_allocation(
        &self,
        tau2: f64,
        chan: &ChannelRealization,
        params: &SystemParams,
    ) -> Result<InnerResult> {
        if !(tau2 > 0.0 && tau2.is_finite()) {
            return Err(Error::invalid(format!("inner allocation needs tau2 > 0, got {tau2}")));
        }
        chan.validate(params)?;
        match self.inner_unchecked(tau2, chan, params)? {
            Some(r) => Ok(r),
            None if params.mi_floor > 0.0 && chan.radar_snr.iter().all(|&v| v == 0.0) => {
                Err(Error::UnreachableFloor("radar"))
            }
            None => Err(Error::UnreachableFloor("communication")),
        }
    }

    fn inner_unchecked(
        &self,
        tau2: f64,
        chan: &ChannelRealization,
        params: &SystemParams,
    ) -> Result<Option<InnerResult>> {
        let o = &self.options;
        let df = params.delta_f;
        let t_r = 2.0 * params.mi_floor / (df * tau2);
        let t_c = params.rate_floor / (df * tau2);
        let tol_r = o.dual_tol * params.mi_floor.max(1.0) * 2.0 / (df * tau2);
        let tol_c = o.dual_tol * params.rate_floor.max(1.0) / (df * tau2);
        let wf = Waterfill {
            v: &chan.radar_snr,
            w: &chan.comm_snr,
        };
        let Some((alpha, beta, active)) = inner_levels(&wf, t_r, t_c, tol_r, tol_c, o.max_iter)?
        else {
            return Ok(None);
        };
        let gamma: Vec<f64> = (0..wf.v.len())
            .map(|m| tau2 * wf.power(m, alpha, beta))
            .collect();
        if gamma.iter().any(|g| !g.is_finite()) {
            return Ok(None);
        }
        let duals = DualPair {
            lambda_r: alpha * 2.0 * LN_2 / df,
            lambda_c: beta * LN_2 / df,
        };
        let stationarity_residual = stationarity_residual(duals, &gamma, chan, tau2, df);
        Ok(Some(InnerResult {
            gamma,
            duals,
            stationarity_residual,
            active,
        }))
    }

    /// Value and gradient of the inner dual function
    /// `D(l) = min_gamma sum gamma - l_r (MI - R_r) - l_c (DIR - R_c)`.
    /// The gradient is `(R_r - MI, R_c - DIR)` at the minimizing `gamma`.
    pub fn inner_dual(
        &self,
        tau2: f64,
        chan: &ChannelRealization,
        params: &SystemParams,
        duals: DualPair,
    ) -> Result<(f64, [f64; 2])> {
        if !(tau2 > 0.0) || duals.lambda_r < 0.0 || duals.lambda_c < 0.0 {
            return Err(Error::invalid("inner dual needs tau2 > 0 and nonnegative multipliers"));
        }
        chan.validate(params)?;
        let df = params.delta_f;
        let gamma: Vec<f64> = chan
            .radar_snr
            .iter()
            .zip(&chan.comm_snr)
            .map(|(&v, &w)| subcarrier_gamma(duals, v, w, tau2, df))
            .collect();
        let mi = 0.5 * df * crate::model::perspective_log2(&gamma, &chan.radar_snr, tau2);
        let rate = df * crate::model::perspective_log2(&gamma, &chan.comm_snr, tau2);
        let slack_r = params.mi_floor - mi;
        let slack_c = params.rate_floor - rate;
        let value =
            gamma.iter().sum::<f64>() + duals.lambda_r * slack_r + duals.lambda_c * slack_c;
        Ok((value, [slack_r, slack_c]))
    }

    /// Minimum-energy allocation for one instance.
    pub fn solve(&self, params: &SystemParams, chan: &ChannelRealization) -> Result<Solution> {
        params.validate()?;
        chan.validate(params)?;
        let mut alloc = |tau2: f64| -> Result<Option<Vec<f64>>> {
            Ok(self.inner_unchecked(tau2, chan, params)?.map(|r| r.gamma))
        };
        self.time_split_search(params, chan, &mut alloc)
    }

    /// Whether the instance admits any allocation. Cheaper than [`Solver::solve`]:
    /// stops at the first feasible time split.
    pub fn is_feasible(&self, params: &SystemParams, chan: &ChannelRealization) -> Result<bool> {
        params.validate()?;
        chan.validate(params)?;
        let mut alloc = |tau2: f64| -> Result<Option<Vec<f64>>> {
            Ok(self.inner_unchecked(tau2, chan, params)?.map(|r| r.gamma))
        };
        Ok(self.feasible_split(params, chan, &mut alloc)?.is_some())
    }

    fn coupling<'a, 'b: 'a>(
        params: &'a SystemParams,
        harvest_gain: f64,
        alloc: &'a mut Allocator<'b>,
    ) -> impl FnMut(f64) -> Result<f64> + use<'a, 'b> {
        move |tau2: f64| {
            let s = match alloc(tau2)? {
                Some(g) => g.iter().sum::<f64>(),
                None => f64::INFINITY,
            };
            if s.is_nan() {
                return Ok(f64::INFINITY);
            }
            Ok(s - harvest_gain * (params.total_time - tau2))
        }
    }

    /// Some `tau2` with `phi(tau2) <= 0`, or `None` if `min phi > 0`.
    pub(crate) fn feasible_split(
        &self,
        params: &SystemParams,
        chan: &ChannelRealization,
        alloc: &mut Allocator<'_>,
    ) -> Result<Option<(f64, f64)>> {
        if params.zero_demand() {
            return Ok(Some((params.total_time, 0.0)));
        }
        let gain = params.efficiency * chan.h_norm_sqr() * params.power_cap;
        if !(gain > 0.0) {
            return Ok(None);
        }
        let t = params.total_time;
        let phi = Self::coupling(params, gain, alloc);
        let (x, fx) = golden_min(
            phi,
            t * 1e-9,
            t,
            t * self.options.time_tol.max(1e-15),
            0.0,
            self.options.max_iter,
        )?;
        Ok((fx <= 0.0).then_some((x, fx)))
    }

    /// Shared outer search: largest root of the coupling function, then
    /// beamforming assembly. Used by the optimal and equal-power schemes.
    pub(crate) fn time_split_search(
        &self,
        params: &SystemParams,
        chan: &ChannelRealization,
        alloc: &mut Allocator<'_>,
    ) -> Result<Solution> {
        if params.zero_demand() {
            return Ok(Solution::zero_demand(params));
        }
        let Some((x_feas, phi_feas)) = self.feasible_split(params, chan, alloc)? else {
            return Ok(Solution::infeasible(params));
        };
        let t = params.total_time;
        let gain = params.efficiency * chan.h_norm_sqr() * params.power_cap;
        let tau2 = {
            let mut phi = Self::coupling(params, gain, alloc);
            let phi_t = phi(t)?;
            if phi_t <= 0.0 {
                // Demand so small that it underflows: no harvest time needed.
                return Ok(Solution::zero_demand(params));
            }
            let neg_phi = |x: f64| phi(x).map(|v| -v);
            brent(
                "time split",
                neg_phi,
                x_feas,
                t,
                -phi_feas,
                -phi_t,
                t * self.options.time_tol,
                0.0,
                self.options.max_iter,
            )?
            .x
        };
        let gamma = alloc(tau2)?.ok_or_else(|| {
            Error::invalid("allocation became unreachable at a feasible time split")
        })?;
        let tau1 = t - tau2;
        let total: f64 = gamma.iter().sum();
        let (covariance_bar, energy) = mrt_covariance(&chan.h, total, params.efficiency)?;
        let beam_vector = rank_one_extract(&covariance_bar, tau1)?;
        Ok(Solution {
            status: Status::Optimal,
            beam_vector,
            tau1,
            tau2,
            gamma,
            energy,
            covariance_bar,
        })
    }
}

/// See [`Solver::inner_allocation`]; default options.
pub fn inner_allocation(
    tau2: f64,
    chan: &ChannelRealization,
    params: &SystemParams,
) -> Result<InnerResult> {
    Solver::default().inner_allocation(tau2, chan, params)
}

/// See [`Solver::solve`]; default options.
pub fn solve(params: &SystemParams, chan: &ChannelRealization) -> Result<Solution> {
    Solver::default().solve(params, chan)
}

/// Cheapest energy-scaled covariance that delivers `total_irc_energy` joules
/// after conversion: `S / (eta ||h||^4) h h^H`. Returns the matrix and its trace.
pub fn mrt_covariance(
    h: &nalgebra::DVector<Complex64>,
    total_irc_energy: f64,
    eta: f64,
) -> Result<(DMatrix<Complex64>, f64)> {
    let n = h.len();
    if !(total_irc_energy >= 0.0) {
        return Err(Error::invalid(format!(
            "transmit-phase energy must be nonnegative, got {total_irc_energy}"
        )));
    }
    if total_irc_energy == 0.0 {
        return Ok((DMatrix::zeros(n, n), 0.0));
    }
    let norm_sqr = h.norm_squared();
    if !(norm_sqr > 0.0 && eta > 0.0) {
        return Err(Error::NoHarvestPath {
            demand: total_irc_energy,
        });
    }
    let scale = total_irc_energy / (eta * norm_sqr * norm_sqr);
    let q = outer(h, h) * Complex64::new(scale, 0.0);
    let trace = real_trace(&q);
    Ok((q, trace))
}
