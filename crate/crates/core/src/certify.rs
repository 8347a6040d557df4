//! Runtime optimality certificates for the beamforming block, rank-one
//! beam recovery, and an exhaustive grid oracle for tiny instances.
//!
//! For a fixed transmit-phase energy `S`, the beamforming subproblem is
//!
//! ```text
//! minimize trace(Q)  subject to  eta trace(h h^H Q) >= S,  Q >= 0
//! ```
//!
//! with Lagrangian `trace(Q) - trace(Q Y) + mu (S / eta - trace(h h^H Q))`.
//! Stationarity gives `Y = I - mu h h^H`; complementary slackness `Y Q = 0`
//! forces `Q` into the null space of `Y`, which has dimension one exactly
//! when `mu = 1 / ||h||^2`. The certificate recovers `mu` from the returned
//! `Q` and checks each of those conditions numerically.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::{hermitian_eigen, numerical_rank, outer, real_trace};
use crate::model::{check_constraints, ChannelRealization, FeasibilityReport, Solution, Status, SystemParams};
use crate::solver::mrt_covariance;
use crate::{Error, Result};

/// Eigenvalues below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// Acceptance thresholds for [`Certificate::valid`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateTolerances {
    /// Relative error allowed between the recovered `mu` and `1 / ||h||^2`.
    pub mu_rel: f64,
    /// `||Y Q||_F` allowed as a fraction of `trace(Q)`.
    pub complementary_rel: f64,
    /// Largest accepted `lambda_2(Q) / lambda_1(Q)`.
    pub rank_one_ratio: f64,
    /// Relative tolerance on the harvest constraint being tight.
    pub harvest_rel: f64,
    /// Tolerance passed to [`check_constraints`].
    pub feasibility: f64,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        Self {
            mu_rel: 1e-8,
            complementary_rel: 1e-6,
            rank_one_ratio: 1e-8,
            harvest_rel: 1e-8,
            feasibility: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    /// Multiplier of the harvest constraint, recovered as `trace(Q) / (h^H Q h)`.
    pub mu: f64,
    /// Required harvested energy divided by efficiency (J).
    pub rho: f64,
    /// Dual matrix `I - mu h h^H`.
    pub y_matrix: DMatrix<Complex64>,
    /// `||Y Q||_F`.
    pub complementary_residual: f64,
    pub rank_y: usize,
    /// Smallest eigenvalue of `Y` (dual feasibility needs it nonnegative).
    pub y_min_eigenvalue: f64,
    /// `lambda_2(Q) / lambda_1(Q)`; zero for a single antenna.
    pub rank_one_ratio: f64,
    /// `eta trace(h h^H Q) - sum gamma` (J).
    pub harvest_gap: f64,
    pub feasibility_residuals: FeasibilityReport,
    /// Names of the checks that failed; empty iff `valid`.
    pub failed_checks: Vec<&'static str>,
    pub valid: bool,
}

/// `I - mu h h^H`.
pub fn dual_matrix(h: &DVector<Complex64>, mu: f64) -> DMatrix<Complex64> {
    let n = h.len();
    DMatrix::identity(n, n) - outer(h, h) * Complex64::new(mu, 0.0)
}

/// Builds and checks the KKT certificate of the beamforming block of `sol`.
pub fn kkt_certificate(
    params: &SystemParams,
    chan: &ChannelRealization,
    sol: &Solution,
) -> Result<Certificate> {
    kkt_certificate_with(params, chan, sol, &CertificateTolerances::default())
}

pub fn kkt_certificate_with(
    params: &SystemParams,
    chan: &ChannelRealization,
    sol: &Solution,
    tol: &CertificateTolerances,
) -> Result<Certificate> {
    if sol.status != Status::Optimal {
        return Err(Error::NotOptimal(sol.status.as_str()));
    }
    let feasibility_residuals = check_constraints(params, chan, sol, tol.feasibility)?;
    let h = &chan.h;
    let q = &sol.covariance_bar;
    let h_norm_sqr = chan.h_norm_sqr();
    let trace = real_trace(q);
    let delivered = (h.adjoint() * q * h)[(0, 0)].re;
    let mu = if delivered > 0.0 { trace / delivered } else { f64::INFINITY };

    let y_matrix = if mu.is_finite() {
        dual_matrix(h, mu)
    } else {
        DMatrix::from_element(h.len(), h.len(), Complex64::new(f64::NAN, 0.0))
    };
    let complementary_residual = (&y_matrix * q).norm();
    let (y_eigs, _) = hermitian_eigen(&y_matrix);
    let rank_y = numerical_rank(&y_eigs, RANK_THRESHOLD);
    let y_min_eigenvalue = y_eigs.last().copied().unwrap_or(0.0);

    let (q_eigs, _) = hermitian_eigen(q);
    let rank_one_ratio = match q_eigs.as_slice() {
        [l1, l2, ..] if *l1 > 0.0 => l2.max(0.0) / l1,
        [l1] if *l1 > 0.0 => 0.0,
        _ => f64::INFINITY,
    };

    let rho = sol.irc_energy() / params.efficiency;
    let harvest_gap = params.efficiency * delivered - sol.irc_energy();

    let mut failed_checks = Vec::new();
    let mu_expect = 1.0 / h_norm_sqr;
    if !((mu - mu_expect).abs() <= tol.mu_rel * mu_expect) {
        failed_checks.push("mu");
    }
    if rank_y + 1 != h.len() {
        failed_checks.push("rank_y");
    }
    if !(y_min_eigenvalue >= -RANK_THRESHOLD) {
        failed_checks.push("dual_feasibility");
    }
    if !(complementary_residual <= tol.complementary_rel * trace) {
        failed_checks.push("complementary_slackness");
    }
    if !(rank_one_ratio <= tol.rank_one_ratio) {
        failed_checks.push("rank_one");
    }
    if !(harvest_gap.abs() <= tol.harvest_rel * sol.irc_energy()) {
        failed_checks.push("harvest_tight");
    }
    if !feasibility_residuals.all_satisfied() {
        failed_checks.push("feasibility");
    }

    Ok(Certificate {
        mu,
        rho,
        y_matrix,
        complementary_residual,
        rank_y,
        y_min_eigenvalue,
        rank_one_ratio,
        harvest_gap,
        feasibility_residuals,
        valid: failed_checks.is_empty(),
        failed_checks,
    })
}

/// Leading-eigenvector beam for an energy-scaled covariance:
/// `w = sqrt(lambda_1 / tau1) u_1`, phase fixed so the first nonzero entry
/// is real and nonnegative.
pub fn rank_one_extract(covariance_bar: &DMatrix<Complex64>, tau1: f64) -> Result<DVector<Complex64>> {
    let n = covariance_bar.nrows();
    if covariance_bar.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "covariance columns",
            expected: n,
            found: covariance_bar.ncols(),
        });
    }
    if !(tau1 > 0.0) {
        return Err(Error::invalid(format!("rank-one extraction needs tau1 > 0, got {tau1}")));
    }
    let (vals, vecs) = hermitian_eigen(covariance_bar);
    let Some(&lead) = vals.first() else {
        return Ok(DVector::zeros(0));
    };
    let smallest = *vals.last().unwrap();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if smallest < -RANK_THRESHOLD * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: smallest,
        });
    }
    if lead <= 0.0 {
        return Ok(DVector::zeros(n));
    }
    let mut u = vecs.column(0).into_owned();
    let peak = u.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if let Some(first) = u.iter().find(|z| z.norm() > 1e-12 * peak).copied() {
        let phase = first.conj() / first.norm();
        u *= phase;
    }
    Ok(u * Complex64::new((lead / tau1).sqrt(), 0.0))
}

/// Resolution of the grid oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    /// `tau2` takes the values `k T / tau2_steps`, `k = 1..=tau2_steps`.
    pub tau2_steps: usize,
    /// Each `gamma_m` takes `gamma_steps` evenly spaced values in `[0, gamma_max]`.
    pub gamma_steps: usize,
    pub gamma_max: f64,
}

pub const ORACLE_MAX_SUBCARRIERS: usize = 3;

/// Exhaustive search over a grid of `(tau2, gamma)` for the cheapest point
/// meeting both floors and the harvest/peak-power coupling. Beamforming is
/// assembled through [`mrt_covariance`].
pub fn brute_force_oracle(
    params: &SystemParams,
    chan: &ChannelRealization,
    grid: OracleGrid,
) -> Result<Solution> {
    params.validate()?;
    chan.validate(params)?;
    let n_c = params.n_subcarriers;
    if n_c > ORACLE_MAX_SUBCARRIERS {
        return Err(Error::OracleTooLarge {
            max: ORACLE_MAX_SUBCARRIERS,
            found: n_c,
        });
    }
    if grid.tau2_steps == 0 || grid.gamma_steps < 2 || !(grid.gamma_max > 0.0) {
        return Err(Error::invalid("oracle grid needs tau2_steps >= 1, gamma_steps >= 2, gamma_max > 0"));
    }
    if params.zero_demand() {
        return Ok(Solution::zero_demand(params));
    }
    let t = params.total_time;
    let df = params.delta_f;
    let gain = params.efficiency * chan.h_norm_sqr() * params.power_cap;
    let levels: Vec<f64> = (0..grid.gamma_steps)
        .map(|j| grid.gamma_max * j as f64 / (grid.gamma_steps - 1) as f64)
        .collect();

    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    let mut radar = vec![vec![0.0; grid.gamma_steps]; n_c];
    let mut comm = vec![vec![0.0; grid.gamma_steps]; n_c];
    let mut idx = vec![0usize; n_c];
    for k in 1..=grid.tau2_steps {
        let tau2 = t * k as f64 / grid.tau2_steps as f64;
        let budget = gain * (t - tau2);
        for m in 0..n_c {
            for (j, &g) in levels.iter().enumerate() {
                radar[m][j] = 0.5 * df * tau2 * (1.0 + g * chan.radar_snr[m] / tau2).log2();
                comm[m][j] = df * tau2 * (1.0 + g * chan.comm_snr[m] / tau2).log2();
            }
        }
        idx.iter_mut().for_each(|i| *i = 0);
        'odometer: loop {
            let mut s = 0.0;
            let mut mi = 0.0;
            let mut rate = 0.0;
            for m in 0..n_c {
                s += levels[idx[m]];
                mi += radar[m][idx[m]];
                rate += comm[m][idx[m]];
            }
            if mi >= params.mi_floor
                && rate >= params.rate_floor
                && s <= budget
                && best.as_ref().is_none_or(|b| s < b.0)
            {
                best = Some((s, tau2, idx.clone()));
            }
            for i in idx.iter_mut() {
                *i += 1;
                if *i < grid.gamma_steps {
                    continue 'odometer;
                }
                *i = 0;
            }
            break;
        }
    }

    let Some((s, tau2, idx)) = best else {
        return Ok(Solution::infeasible(params));
    };
    let gamma: Vec<f64> = idx.iter().map(|&j| levels[j]).collect();
    let tau1 = t - tau2;
    let (covariance_bar, energy) = mrt_covariance(&chan.h, s, params.efficiency)?;
    let beam_vector = if tau1 > 0.0 {
        rank_one_extract(&covariance_bar, tau1)?
    } else {
        DVector::zeros(params.n_antennas)
    };
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

/// Two-pass grid oracle that needs no prior knowledge of the solution scale.
///
/// The first pass uses `gamma_max = eta ||h||^2 P T`, the most energy that
/// can ever be harvested. Every optimal `gamma_m` is at most the optimal
/// total, which the first pass bounds from above, so the second pass
/// shrinks `gamma_max` to that bound. The cheaper of the two passes wins.
pub fn brute_force_oracle_auto(
    params: &SystemParams,
    chan: &ChannelRealization,
    tau2_steps: usize,
    gamma_steps: usize,
) -> Result<Solution> {
    let harvest_cap = params.efficiency * chan.h_norm_sqr() * params.power_cap * params.total_time;
    if !(harvest_cap > 0.0) {
        if params.zero_demand() {
            return Ok(Solution::zero_demand(params));
        }
        return Ok(Solution::infeasible(params));
    }
    let coarse = brute_force_oracle(
        params,
        chan,
        OracleGrid {
            tau2_steps,
            gamma_steps,
            gamma_max: harvest_cap,
        },
    )?;
    if coarse.status != Status::Optimal {
        return Ok(coarse);
    }
    let bound = coarse.irc_energy() * (1.0 + 1e-9);
    if !(bound > 0.0) {
        return Ok(coarse);
    }
    let fine = brute_force_oracle(
        params,
        chan,
        OracleGrid {
            tau2_steps,
            gamma_steps,
            gamma_max: bound,
        },
    )?;
    Ok(if fine.is_optimal() && fine.energy < coarse.energy {
        fine
    } else {
        coarse
    })
}
