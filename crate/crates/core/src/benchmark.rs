//! Equal-power baseline and feasibility frontiers.
//!
//! The baseline keeps the optimal time split and beamformer but forces one
//! common energy on every subcarrier, so it is a restriction of the optimal
//! scheme and can never need less energy.

use std::fmt;
use std::str::FromStr;

use crate::model::{ChannelRealization, Solution, SystemParams};
use crate::roots::{brent, expand_up};
use crate::solver::Solver;
use crate::{Error, Result};

/// Subcarrier allocation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Jointly optimal allocation.
    Op,
    /// Equal energy on every subcarrier.
    Eq,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Op => "op",
            Scheme::Eq => "eq",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "op" => Ok(Scheme::Op),
            "eq" => Ok(Scheme::Eq),
            other => Err(Error::invalid(format!("unknown scheme {other:?} (expected op or eq)"))),
        }
    }
}

/// Which floor a frontier probe raises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontierTarget {
    Mi,
    Rate,
}

/// Resolution of [`feasibility_frontier`] in bits.
pub const FRONTIER_TOL_BITS: f64 = 0.1;

/// Least common per-subcarrier energy meeting both floors in a transmit
/// phase of `tau2`. `None` when a positive floor has no usable subcarrier.
fn equal_allocation(
    solver: &Solver,
    params: &SystemParams,
    chan: &ChannelRealization,
    tau2: f64,
) -> Result<Option<Vec<f64>>> {
    let o = &solver.options;
    let df = params.delta_f;
    let mut x = 0.0f64;
    for (floor, gains, bits_per_sum) in [
        (params.mi_floor, &chan.radar_snr, 0.5 * df * tau2),
        (params.rate_floor, &chan.comm_snr, df * tau2),
    ] {
        if floor <= 0.0 {
            continue;
        }
        let best = gains.iter().copied().fold(0.0, f64::max);
        if best <= 0.0 {
            return Ok(None);
        }
        let target = floor / bits_per_sum;
        let f_tol = o.dual_tol * floor.max(1.0) / bits_per_sum;
        // sum log2(1 + x g) - target, increasing in the common power x
        let f = |p: f64| -> Result<f64> {
            let sum: f64 = gains.iter().map(|&g| (p * g).ln_1p()).sum();
            Ok(sum / std::f64::consts::LN_2 - target)
        };
        let Some((hi, f_hi)) = expand_up(f, 1.0 / best, 4 * o.max_iter.max(1100))? else {
            return Ok(None);
        };
        let root = brent(
            "equal-power level",
            f,
            0.0,
            hi,
            -target,
            f_hi,
            hi * 4.0 * f64::EPSILON,
            f_tol,
            o.max_iter,
        )?;
        x = x.max(root.x);
    }
    Ok(Some(vec![tau2 * x; params.n_subcarriers]))
}

/// Minimum-energy allocation restricted to equal subcarrier energies.
pub fn eq_solve(params: &SystemParams, chan: &ChannelRealization) -> Result<Solution> {
    eq_solve_with(&Solver::default(), params, chan)
}

pub fn eq_solve_with(solver: &Solver, params: &SystemParams, chan: &ChannelRealization) -> Result<Solution> {
    params.validate()?;
    chan.validate(params)?;
    let mut alloc = |tau2: f64| equal_allocation(solver, params, chan, tau2);
    solver.time_split_search(params, chan, &mut alloc)
}

pub fn eq_is_feasible(solver: &Solver, params: &SystemParams, chan: &ChannelRealization) -> Result<bool> {
    params.validate()?;
    chan.validate(params)?;
    let mut alloc = |tau2: f64| equal_allocation(solver, params, chan, tau2);
    Ok(solver.feasible_split(params, chan, &mut alloc)?.is_some())
}

/// Solves one instance with the given scheme.
pub fn solve_scheme(
    solver: &Solver,
    scheme: Scheme,
    params: &SystemParams,
    chan: &ChannelRealization,
) -> Result<Solution> {
    match scheme {
        Scheme::Op => solver.solve(params, chan),
        Scheme::Eq => eq_solve_with(solver, params, chan),
    }
}

fn is_feasible(
    solver: &Solver,
    scheme: Scheme,
    params: &SystemParams,
    chan: &ChannelRealization,
) -> Result<bool> {
    match scheme {
        Scheme::Op => solver.is_feasible(params, chan),
        Scheme::Eq => eq_is_feasible(solver, params, chan),
    }
}

/// Largest floor (bits) for `target` that keeps the instance feasible under
/// `scheme`, with the other floor unchanged. Accurate to
/// [`FRONTIER_TOL_BITS`] from below; zero when even a zero floor is infeasible.
pub fn feasibility_frontier(
    params: &SystemParams,
    chan: &ChannelRealization,
    target: FrontierTarget,
    scheme: Scheme,
) -> Result<f64> {
    feasibility_frontier_with(&Solver::default(), params, chan, target, scheme)
}

pub fn feasibility_frontier_with(
    solver: &Solver,
    params: &SystemParams,
    chan: &ChannelRealization,
    target: FrontierTarget,
    scheme: Scheme,
) -> Result<f64> {
    let at = |bits: f64| -> Result<bool> {
        let p = match target {
            FrontierTarget::Mi => params.clone().with_mi_floor(bits),
            FrontierTarget::Rate => params.clone().with_rate_floor(bits),
        };
        is_feasible(solver, scheme, &p, chan)
    };
    if !at(0.0)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while at(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::invalid("feasibility frontier is unbounded"));
        }
    }
    while hi - lo > FRONTIER_TOL_BITS {
        let mid = 0.5 * (lo + hi);
        if at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
