use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{Grid, SparsityConfig, SparsityModel};
use crate::daft::{select_chirp_rate, AfdmParams, ChirpSign};
use crate::hihtp::{HierarchicalLevels, DEFAULT_MAX_ITERATIONS};
use crate::sensing::{OverlapMode, PilotScheme};
use crate::subnyquist::RadarConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Receiver {
    #[default]
    Fullrate,
    Subnyquist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Hihtp,
    Htp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    /// Evenly spread over the frame.
    #[default]
    Uniform,
    /// Packed into one interval starting at index 0.
    Contiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSection {
    pub n: usize,
    /// Chirp-rate numerator; derived from the mean sparsity levels if absent.
    #[serde(default)]
    pub chirp_rate: Option<usize>,
    #[serde(default)]
    pub c1_sign: ChirpSign,
    #[serde(default)]
    pub c2: f64,
    /// Prefix length; `L - 1` if absent.
    #[serde(default)]
    pub cpp_len: Option<usize>,
}

fn default_epsilon() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub model: SparsityModel,
    pub delay_taps: usize,
    pub max_doppler: usize,
    pub p_delay: f64,
    /// Required except for `type3`, where it follows from `cluster_len`.
    #[serde(default)]
    pub p_doppler: Option<f64>,
    #[serde(default)]
    pub cluster_len: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotSection {
    /// Pilot counts to sweep.
    pub n_pilots: Vec<usize>,
    #[serde(default)]
    pub overlap: OverlapMode,
    #[serde(default)]
    pub placement: Placement,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub kind: Solver,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Overrides for the `(1+ε)`-inflated levels.
    #[serde(default)]
    pub s_delay: Option<usize>,
    #[serde(default)]
    pub s_doppler: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            kind: Solver::Hihtp,
            k_max: DEFAULT_MAX_ITERATIONS,
            s_delay: None,
            s_doppler: None,
        }
    }
}

fn default_k_max() -> usize {
    DEFAULT_MAX_ITERATIONS
}

fn default_bandwidth() -> f64 {
    30e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarSection {
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub include_cpp: bool,
}

impl Default for RadarSection {
    fn default() -> Self {
        Self {
            bandwidth_hz: default_bandwidth(),
            include_cpp: false,
        }
    }
}

/// One Monte-Carlo experiment: a sweep over pilot counts and SNRs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub trials: usize,
    pub master_seed: u64,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub receiver: Receiver,
    pub waveform: WaveformSection,
    pub channel: ChannelSection,
    pub pilots: PilotSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub radar: RadarSection,
}

/// Everything derived from an [`ExperimentConfig`] that does not depend on
/// the pilot count.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub sparsity: SparsityConfig,
    pub params: AfdmParams,
    pub levels: HierarchicalLevels,
    pub radar: RadarConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be positive"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("snr_db must list finite values"));
        }
        if self.pilots.n_pilots.is_empty() || self.pilots.n_pilots.contains(&0) {
            return Err(Error::invalid("n_pilots must list positive counts"));
        }
        if !(self.pilots.amplitude.is_finite() && self.pilots.amplitude > 0.0) {
            return Err(Error::invalid("pilot amplitude must be positive"));
        }
        if self.solver.k_max == 0 {
            return Err(Error::invalid("k_max must be at least 1"));
        }
        let resolved = self.resolve()?;
        for &np in &self.pilots.n_pilots {
            self.pilot_scheme(np, &resolved)?;
        }
        Ok(())
    }

    pub fn sparsity(&self) -> Result<SparsityConfig> {
        let c = &self.channel;
        let cfg = match (c.model, c.cluster_len) {
            (SparsityModel::Type3, Some(len)) => {
                let cfg = SparsityConfig::clustered(c.delay_taps, c.max_doppler, c.p_delay, len)?;
                if c.p_doppler
                    .is_some_and(|p| (p - cfg.p_doppler).abs() > 1e-12)
                {
                    return Err(Error::invalid(
                        "type3 needs p_doppler = cluster_len / (2Q+1)",
                    ));
                }
                cfg
            }
            (SparsityModel::Type3, None) => return Err(Error::MissingParameter("cluster_len")),
            (_, Some(_)) => return Err(Error::invalid("cluster_len is only meaningful for type3")),
            (model, None) => {
                let p_d = c.p_doppler.ok_or(Error::MissingParameter("p_doppler"))?;
                SparsityConfig::new(model, c.delay_taps, c.max_doppler, c.p_delay, p_d)?
            }
        }
        .with_epsilon(c.epsilon);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.channel.delay_taps, self.channel.max_doppler)
    }

    /// Resolves the derived quantities: chirp rate, prefix and sparsity levels.
    pub fn resolve(&self) -> Result<Resolved> {
        let sparsity = self.sparsity()?;
        let w = &self.waveform;
        let l = self.channel.delay_taps;
        let p = match w.chirp_rate {
            Some(p) => p,
            None => select_chirp_rate(
                l,
                self.channel.max_doppler,
                sparsity.mean_delay_sparsity(),
                sparsity.mean_doppler_sparsity(),
            )?,
        };
        let cpp = w.cpp_len.unwrap_or(l.saturating_sub(1));
        let params = AfdmParams::new(w.n, p)?
            .with_c1_sign(w.c1_sign)
            .with_c2(w.c2)
            .with_cpp_len(cpp);
        params.validate()?;
        let s_d = self
            .solver
            .s_delay
            .unwrap_or_else(|| sparsity.delay_sparsity());
        let s_dd = self
            .solver
            .s_doppler
            .unwrap_or_else(|| sparsity.doppler_sparsity());
        let levels = HierarchicalLevels::new(l, sparsity.doppler_bins(), s_d, s_dd)?;
        let radar = RadarConfig::new(self.radar.bandwidth_hz, w.n)?
            .with_prefix(cpp, self.radar.include_cpp);
        Ok(Resolved {
            sparsity,
            params,
            levels,
            radar,
        })
    }

    pub fn pilot_scheme(&self, n_pilots: usize, resolved: &Resolved) -> Result<PilotScheme> {
        let grid = self.grid();
        let params = &resolved.params;
        // The low-rate receiver needs one contiguous observation interval.
        let scheme = match (self.pilots.placement, self.receiver) {
            (Placement::Uniform, Receiver::Fullrate) => {
                PilotScheme::uniform_with(n_pilots, self.pilots.overlap, params, grid)?
            }
            _ => PilotScheme::contiguous(n_pilots, self.pilots.overlap, params, grid, 0)?,
        };
        Ok(scheme.with_amplitude(self.pilots.amplitude))
    }

    /// First 16 hex digits of the SHA-256 of the configuration, restricted
    /// to one pilot count, as canonical JSON.
    pub fn point_hash(&self, n_pilots: usize) -> Result<String> {
        let mut point = self.clone();
        point.pilots.n_pilots = vec![n_pilots];
        point.snr_db.clear();
        let json = serde_json::to_string(&point)?;
        let digest = Sha256::digest(json.as_bytes());
        Ok(hex::encode(&digest[..8]))
    }
}
