//! TOML run configuration. Every key is optional; missing keys take the
//! defaults of the single-instance scenario (128 subcarriers, 5 antennas,
//! 150-bit floors, 10 dB SNRs).

use std::path::{Path, PathBuf};

use serde::Deserialize;
use wpirc::benchmark::Scheme;
use wpirc::certify::CertificateTolerances;
use wpirc::model::{ChannelRealization, SystemParams};
use wpirc::sim::{sample_channel_with, SnrNormalization, SweepConfig, SweepVariable};
use wpirc::solver::SolverOptions;
use wpirc::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl From<wpirc::Error> for ConfigError {
    fn from(e: wpirc::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // system, in Hz, s, W and bits
    pub n_subcarriers: usize,
    pub n_antennas: usize,
    pub delta_f: f64,
    pub symbol_duration: f64,
    pub total_time: f64,
    pub power_cap: f64,
    pub efficiency: f64,
    pub mi_floor: f64,
    pub rate_floor: f64,

    // channel
    pub radar_snr_db: f64,
    pub comm_snr_db: f64,
    /// Channel seed for single instances; master seed for sweeps.
    pub seed: u64,
    pub normalization: String,
    /// Explicit channel; when `h_re` is set the seed is not used.
    pub h_re: Option<Vec<f64>>,
    pub h_im: Option<Vec<f64>>,
    pub radar_snr: Option<Vec<f64>>,
    pub comm_snr: Option<Vec<f64>>,

    // sweep
    pub sweep_variable: String,
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<String>,
    /// Worker threads for sweeps; 0 uses every core.
    pub threads: usize,
    pub output: PathBuf,
    pub frontier_output: Option<PathBuf>,

    // solver
    pub dual_tol: f64,
    pub constraint_tol: f64,
    pub time_tol: f64,
    pub max_iter: usize,

    // certificate
    pub mu_rel: f64,
    pub complementary_rel: f64,
    pub rank_one_ratio: f64,
    pub harvest_rel: f64,
    pub feasibility_tol: f64,

    // oracle
    pub oracle_tau2_steps: usize,
    pub oracle_gamma_steps: usize,
    pub oracle_rel_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = SystemParams::default();
        let s = SweepConfig::default();
        let o = SolverOptions::default();
        let c = CertificateTolerances::default();
        Self {
            n_subcarriers: p.n_subcarriers,
            n_antennas: p.n_antennas,
            delta_f: p.delta_f,
            symbol_duration: p.symbol_duration,
            total_time: p.total_time,
            power_cap: p.power_cap,
            efficiency: p.efficiency,
            mi_floor: p.mi_floor,
            rate_floor: p.rate_floor,
            radar_snr_db: s.radar_snr_db,
            comm_snr_db: s.comm_snr_db,
            seed: s.master_seed,
            normalization: "empirical".into(),
            h_re: None,
            h_im: None,
            radar_snr: None,
            comm_snr: None,
            sweep_variable: "mi_floor".into(),
            sweep_values: s.sweep_values,
            trials: s.trials,
            schemes: vec!["op".into(), "eq".into()],
            threads: 0,
            output: PathBuf::from("sweep.csv"),
            frontier_output: None,
            dual_tol: o.dual_tol,
            constraint_tol: o.constraint_tol,
            time_tol: o.time_tol,
            max_iter: o.max_iter,
            mu_rel: c.mu_rel,
            complementary_rel: c.complementary_rel,
            rank_one_ratio: c.rank_one_ratio,
            harvest_rel: c.harvest_rel,
            feasibility_tol: c.feasibility,
            oracle_tau2_steps: 200,
            oracle_gamma_steps: 200,
            oracle_rel_tol: 0.02,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: PathBuf::new(),
            source,
        })?;
        cfg.params()?;
        cfg.sweep_variable()?;
        cfg.schemes()?;
        cfg.normalization()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<SystemParams, ConfigError> {
        let p = SystemParams {
            n_subcarriers: self.n_subcarriers,
            n_antennas: self.n_antennas,
            delta_f: self.delta_f,
            symbol_duration: self.symbol_duration,
            total_time: self.total_time,
            power_cap: self.power_cap,
            efficiency: self.efficiency,
            mi_floor: self.mi_floor,
            rate_floor: self.rate_floor,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn normalization(&self) -> Result<SnrNormalization, ConfigError> {
        Ok(self.normalization.parse()?)
    }

    pub fn sweep_variable(&self) -> Result<SweepVariable, ConfigError> {
        Ok(self.sweep_variable.parse()?)
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>, ConfigError> {
        let mut out = self
            .schemes
            .iter()
            .map(|s| s.parse::<Scheme>())
            .collect::<Result<Vec<_>, _>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// The configured channel: explicit arrays if given, otherwise sampled
    /// from `seed`.
    pub fn channel(&self) -> Result<ChannelRealization, ConfigError> {
        let params = self.params()?;
        let explicit = [&self.h_re, &self.h_im, &self.radar_snr, &self.comm_snr];
        let chan = if explicit.iter().all(|v| v.is_none()) {
            sample_channel_with(
                self.seed,
                &params,
                self.radar_snr_db,
                self.comm_snr_db,
                self.normalization()?,
            )
        } else {
            let (Some(re), Some(v), Some(w)) = (&self.h_re, &self.radar_snr, &self.comm_snr) else {
                return Err(ConfigError::Invalid(
                    "an explicit channel needs h_re, radar_snr and comm_snr".into(),
                ));
            };
            let im = self.h_im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
            if im.len() != re.len() {
                return Err(ConfigError::Invalid("h_re and h_im differ in length".into()));
            }
            let h = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            ChannelRealization::new(h, v.clone(), w.clone())
        };
        chan.validate(&params)?;
        Ok(chan)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            dual_tol: self.dual_tol,
            constraint_tol: self.constraint_tol,
            time_tol: self.time_tol,
            max_iter: self.max_iter,
        }
    }

    pub fn certificate_tolerances(&self) -> CertificateTolerances {
        CertificateTolerances {
            mu_rel: self.mu_rel,
            complementary_rel: self.complementary_rel,
            rank_one_ratio: self.rank_one_ratio,
            harvest_rel: self.harvest_rel,
            feasibility: self.feasibility_tol,
        }
    }

    pub fn sweep(&self) -> Result<SweepConfig, ConfigError> {
        let cfg = SweepConfig {
            base: self.params()?,
            radar_snr_db: self.radar_snr_db,
            comm_snr_db: self.comm_snr_db,
            sweep_variable: self.sweep_variable()?,
            sweep_values: self.sweep_values.clone(),
            trials: self.trials,
            master_seed: self.seed,
            schemes: self.schemes()?,
            normalization: self.normalization()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
