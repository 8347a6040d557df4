//! Random channel generation, Monte-Carlo sweeps and CSV persistence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::benchmark::{feasibility_frontier_with, solve_scheme, FrontierTarget, Scheme};
use crate::model::{ChannelRealization, Status, SystemParams};
use crate::solver::Solver;
use crate::{Error, Result};

/// Variance of each power-station antenna gain.
pub const STATION_CHANNEL_VARIANCE: f64 = 0.2;

/// How nominal SNRs are anchored to the drawn frequency responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrNormalization {
    /// Divide by the realization's own mean `|G_m|^2`, so the per-draw
    /// average SNR equals the nominal value exactly.
    #[default]
    Empirical,
    /// Use the unit ensemble mean of `|G_m|^2`.
    Ensemble,
}

impl FromStr for SnrNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empirical" => Ok(Self::Empirical),
            "ensemble" => Ok(Self::Ensemble),
            other => Err(Error::invalid(format!("unknown SNR normalization {other:?}"))),
        }
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Draws one realization: `h_i ~ CN(0, 0.2)`; radar and communication
/// frequency responses `~ CN(0, 1)`, scaled to the nominal SNRs.
/// The generator is ChaCha8 seeded from `seed`; draws are consumed in the
/// order h, radar responses, communication responses.
pub fn sample_channel(
    seed: u64,
    params: &SystemParams,
    radar_snr_db: f64,
    comm_snr_db: f64,
) -> ChannelRealization {
    sample_channel_with(seed, params, radar_snr_db, comm_snr_db, SnrNormalization::Empirical)
}

pub fn sample_channel_with(
    seed: u64,
    params: &SystemParams,
    radar_snr_db: f64,
    comm_snr_db: f64,
    normalization: SnrNormalization,
) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let station = Normal::new(0.0, (STATION_CHANNEL_VARIANCE / 2.0).sqrt()).unwrap();
    let h: Vec<Complex64> = (0..params.n_antennas)
        .map(|_| Complex64::new(station.sample(&mut rng), station.sample(&mut rng)))
        .collect();

    let response_power = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..params.n_subcarriers)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                0.5 * (re * re + im * im)
            })
            .collect()
    };
    let radar = response_power(&mut rng);
    let comm = response_power(&mut rng);

    let scale = |powers: Vec<f64>, snr_db: f64| -> Vec<f64> {
        let snr = db_to_linear(snr_db);
        let norm = match normalization {
            SnrNormalization::Empirical => powers.iter().sum::<f64>() / powers.len() as f64,
            SnrNormalization::Ensemble => 1.0,
        };
        powers.into_iter().map(|p| snr * p / norm).collect()
    };
    ChannelRealization {
        h: DVector::from_vec(h),
        radar_snr: scale(radar, radar_snr_db),
        comm_snr: scale(comm, comm_snr_db),
    }
}

/// SplitMix64 finalizer over `(master_seed, trial)`.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(trial.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    MiFloor,
    RateFloor,
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mi_floor" => Ok(Self::MiFloor),
            "rate_floor" => Ok(Self::RateFloor),
            other => Err(Error::invalid(format!("unknown sweep variable {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: SystemParams,
    pub radar_snr_db: f64,
    pub comm_snr_db: f64,
    pub sweep_variable: SweepVariable,
    /// Floor values in bits, strictly increasing.
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    pub normalization: SnrNormalization,
}

impl Default for SweepConfig {
    /// Radar MI sweep with a 150-bit rate floor at 10 dB communication SNR.
    fn default() -> Self {
        Self {
            base: SystemParams::default(),
            radar_snr_db: 10.0,
            comm_snr_db: 10.0,
            sweep_variable: SweepVariable::MiFloor,
            sweep_values: (1..=10).map(|k| 40.0 * k as f64).collect(),
            trials: 200,
            master_seed: 1,
            schemes: vec![Scheme::Op, Scheme::Eq],
            normalization: SnrNormalization::Empirical,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.sweep_values.is_empty() {
            return Err(Error::invalid("sweep_values must not be empty"));
        }
        if self.sweep_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("sweep_values must be strictly increasing"));
        }
        if self.sweep_values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("sweep_values must be finite and nonnegative"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("at least one scheme is required"));
        }
        Ok(())
    }

    /// Scenario parameters at one sweep point.
    pub fn params_at(&self, value: f64) -> SystemParams {
        match self.sweep_variable {
            SweepVariable::MiFloor => self.base.clone().with_mi_floor(value),
            SweepVariable::RateFloor => self.base.clone().with_rate_floor(value),
        }
    }

    pub fn channel_for_trial(&self, trial: usize) -> (u64, ChannelRealization) {
        let seed = trial_seed(self.master_seed, trial as u64);
        let chan = sample_channel_with(
            seed,
            &self.base,
            self.radar_snr_db,
            self.comm_snr_db,
            self.normalization,
        );
        (seed, chan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowStatus {
    Optimal,
    Infeasible,
    ZeroDemand,
    Error,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Optimal => "optimal",
            RowStatus::Infeasible => "infeasible",
            RowStatus::ZeroDemand => "zero_demand",
            RowStatus::Error => "error",
        }
    }
}

impl From<Status> for RowStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Optimal => RowStatus::Optimal,
            Status::Infeasible => RowStatus::Infeasible,
            Status::ZeroDemand => RowStatus::ZeroDemand,
        }
    }
}

impl FromStr for RowStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(RowStatus::Optimal),
            "infeasible" => Ok(RowStatus::Infeasible),
            "zero_demand" => Ok(RowStatus::ZeroDemand),
            "error" => Ok(RowStatus::Error),
            other => Err(Error::invalid(format!("unknown row status {other:?}"))),
        }
    }
}

/// One Monte-Carlo record. Non-optimal rows carry NaN numeric fields,
/// except zero-demand rows which are exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub status: RowStatus,
    pub energy: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub achieved_mi: f64,
    pub achieved_rate: f64,
}

pub const CSV_HEADER: [&str; 10] = [
    "scheme",
    "sweep_value",
    "trial",
    "seed",
    "status",
    "energy",
    "tau1",
    "tau2",
    "achieved_mi",
    "achieved_rate",
];

/// Runs every `(sweep value, trial, scheme)` combination on the global
/// thread pool. Rows come back sorted by sweep value, trial, then scheme.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    run_sweep_with(&Solver::default(), config)
}

/// As [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_threads(config: &SweepConfig, threads: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

pub fn run_sweep_with(solver: &Solver, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut rows: Vec<(usize, SweepRow)> = (0..config.trials)
        .into_par_iter()
        .flat_map_iter(|trial| {
            let (seed, chan) = config.channel_for_trial(trial);
            let mut out = Vec::with_capacity(config.sweep_values.len() * config.schemes.len());
            for (k, &value) in config.sweep_values.iter().enumerate() {
                let params = config.params_at(value);
                for &scheme in &config.schemes {
                    let row = match solve_scheme(solver, scheme, &params, &chan) {
                        Ok(sol) => {
                            let status = RowStatus::from(sol.status);
                            let (mi, rate) = match sol.status {
                                Status::Infeasible => (f64::NAN, f64::NAN),
                                _ => (sol.achieved_mi(&params, &chan), sol.achieved_rate(&params, &chan)),
                            };
                            SweepRow {
                                scheme,
                                sweep_value: value,
                                trial,
                                seed,
                                status,
                                energy: sol.energy,
                                tau1: sol.tau1,
                                tau2: sol.tau2,
                                achieved_mi: mi,
                                achieved_rate: rate,
                            }
                        }
                        Err(_) => SweepRow {
                            scheme,
                            sweep_value: value,
                            trial,
                            seed,
                            status: RowStatus::Error,
                            energy: f64::NAN,
                            tau1: f64::NAN,
                            tau2: f64::NAN,
                            achieved_mi: f64::NAN,
                            achieved_rate: f64::NAN,
                        },
                    };
                    out.push((k, row));
                }
            }
            out
        })
        .collect();
    rows.sort_by(|(ka, a), (kb, b)| (ka, a.trial, a.scheme).cmp(&(kb, b.trial, b.scheme)));
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes rows with a header, 12 significant digits per float.
pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    write_csv_to(rows, &mut out).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    out.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_csv_to<W: Write>(rows: &[SweepRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.as_str().to_string(),
            fmt_float(r.sweep_value),
            r.trial.to_string(),
            r.seed.to_string(),
            r.status.as_str().to_string(),
            fmt_float(r.energy),
            fmt_float(r.tau1),
            fmt_float(r.tau2),
            fmt_float(r.achieved_mi),
            fmt_float(r.achieved_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a file produced by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::invalid(format!("unexpected CSV header in {}", path.display())));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let float = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| Error::invalid(format!("bad number {:?} in column {}", field(i), CSV_HEADER[i])))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)
                .parse()
                .map_err(|_| Error::invalid(format!("bad integer {:?} in column {}", field(i), CSV_HEADER[i])))
        };
        rows.push(SweepRow {
            scheme: field(0).parse()?,
            sweep_value: float(1)?,
            trial: int(2)? as usize,
            seed: int(3)?,
            status: field(4).parse()?,
            energy: float(5)?,
            tau1: float(6)?,
            tau2: float(7)?,
            achieved_mi: float(8)?,
            achieved_rate: float(9)?,
        });
    }
    Ok(rows)
}

/// Feasibility frontier of the swept floor for one trial and scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierRow {
    pub scheme: Scheme,
    pub trial: usize,
    pub seed: u64,
    /// Largest feasible value of the swept floor (bits); NaN on solver error.
    pub frontier: f64,
}

/// Frontiers of the swept floor for every `(trial, scheme)`, with the other
/// floor at its base value. Sorted by trial, then scheme.
pub fn run_frontiers(config: &SweepConfig) -> Result<Vec<FrontierRow>> {
    config.validate()?;
    let solver = Solver::default();
    let target = match config.sweep_variable {
        SweepVariable::MiFloor => FrontierTarget::Mi,
        SweepVariable::RateFloor => FrontierTarget::Rate,
    };
    let rows = (0..config.trials)
        .into_par_iter()
        .flat_map_iter(|trial| {
            let (seed, chan) = config.channel_for_trial(trial);
            config
                .schemes
                .iter()
                .map(|&scheme| FrontierRow {
                    scheme,
                    trial,
                    seed,
                    frontier: feasibility_frontier_with(&solver, &config.base, &chan, target, scheme)
                        .unwrap_or(f64::NAN),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(rows)
}

pub fn write_frontier_csv(rows: &[FrontierRow], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(["scheme", "trial", "seed", "frontier"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.scheme.as_str().to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            fmt_float(r.frontier),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Per `(scheme, sweep value)` aggregate over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub scheme: Scheme,
    pub sweep_value: f64,
    /// Trials that were optimal (or zero-demand) at every sweep value for
    /// this scheme; the means below are taken over these.
    pub paired_trials: usize,
    pub mean_energy: f64,
    pub mean_tau1: f64,
    pub mean_tau2: f64,
    pub infeasible: usize,
    pub errors: usize,
}

/// Means over trials that are solvable across the whole sweep, so that
/// successive points average the same channel draws.
pub fn summarize(rows: &[SweepRow], sweep_values: &[f64], schemes: &[Scheme]) -> Vec<SweepSummary> {
    let solved = |r: &SweepRow| matches!(r.status, RowStatus::Optimal | RowStatus::ZeroDemand);
    let mut out = Vec::new();
    for &scheme in schemes {
        let rows_s: Vec<&SweepRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
        let max_trial = rows_s.iter().map(|r| r.trial + 1).max().unwrap_or(0);
        let mut good = vec![true; max_trial];
        for r in &rows_s {
            if !solved(r) {
                good[r.trial] = false;
            }
        }
        for &value in sweep_values {
            let at: Vec<&&SweepRow> = rows_s.iter().filter(|r| r.sweep_value == value).collect();
            let paired: Vec<&&&SweepRow> = at.iter().filter(|r| good[r.trial]).collect();
            let n = paired.len();
            let mean = |f: fn(&SweepRow) -> f64| {
                if n == 0 {
                    f64::NAN
                } else {
                    paired.iter().map(|r| f(r)).sum::<f64>() / n as f64
                }
            };
            out.push(SweepSummary {
                scheme,
                sweep_value: value,
                paired_trials: n,
                mean_energy: mean(|r| r.energy),
                mean_tau1: mean(|r| r.tau1),
                mean_tau2: mean(|r| r.tau2),
                infeasible: at.iter().filter(|r| r.status == RowStatus::Infeasible).count(),
                errors: at.iter().filter(|r| r.status == RowStatus::Error).count(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_is_deterministic() {
        let p = SystemParams::default();
        assert_eq!(sample_channel(42, &p, 10.0, 15.0), sample_channel(42, &p, 10.0, 15.0));
        assert_ne!(sample_channel(42, &p, 10.0, 15.0), sample_channel(43, &p, 10.0, 15.0));
    }

    #[test]
    fn empirical_normalization_is_exact() {
        let p = SystemParams::default();
        let ch = sample_channel(7, &p, 10.0, 15.0);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&ch.radar_snr) - 10.0).abs() < 1e-12);
        assert!((mean(&ch.comm_snr) - db_to_linear(15.0)).abs() < 1e-11);
        assert_eq!(ch.h.len(), 5);
    }

    #[test]
    fn ensemble_normalization_keeps_draw_spread() {
        let p = SystemParams::default();
        let a = sample_channel_with(7, &p, 10.0, 10.0, SnrNormalization::Ensemble);
        let b = sample_channel_with(7, &p, 10.0, 10.0, SnrNormalization::Empirical);
        assert_eq!(a.h, b.h);
        let ratio = a.radar_snr[0] / b.radar_snr[0];
        assert!(a.radar_snr.iter().zip(&b.radar_snr).all(|(x, y)| (x / y - ratio).abs() < 1e-12));
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| trial_seed(5, t)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(trial_seed(5, 0), trial_seed(6, 0));
    }

    #[test]
    fn config_validation() {
        let mut c = SweepConfig::default();
        c.validate().unwrap();
        c.sweep_values = vec![3.0, 2.0];
        assert!(c.validate().is_err());
        c.sweep_values = vec![];
        assert!(c.validate().is_err());
        c.sweep_values = vec![1.0];
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn empty_rows_write_header_only() {
        let mut buf = Vec::new();
        write_csv_to(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scheme,sweep_value,trial,seed,status,energy,tau1,tau2,achieved_mi,achieved_rate\n"
        );
    }

    #[test]
    fn floats_print_twelve_significant_digits() {
        assert_eq!(fmt_float(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_float(0.0), "0.00000000000e0");
        assert_eq!(fmt_float(f64::NAN), "NaN");
    }
}
