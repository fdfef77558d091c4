//! Doubly-sparse linear time-varying channels.
//!
//! A channel lives on an `L × (2Q+1)` delay-Doppler grid. Each delay tap `l`
//! is switched on by `I_l ~ Bernoulli(p_d)` and each Doppler bin of an active
//! tap by `I_q^{(l)}`, whose joint law depends on the sparsity model:
//!
//! - `Type1`: one Bernoulli(p_D) pattern shared by every active tap;
//! - `Type2`: an independent Bernoulli(p_D) pattern per tap;
//! - `Type3`: per tap, one cluster of fixed length at a uniform circular start.
//!
//! Active gains are circular complex Gaussian with variance
//! `σ_α² = 1 / (L p_d (2Q+1) p_D)`, which gives unit expected channel power.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::daft::{cis_ratio, AfdmParams};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsityModel {
    Type1,
    Type2,
    Type3,
}

/// Size of the delay-Doppler grid: `L` taps by `2Q+1` Doppler bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    pub delay_taps: usize,
    pub max_doppler: usize,
}

impl Grid {
    pub fn new(delay_taps: usize, max_doppler: usize) -> Self {
        Self {
            delay_taps,
            max_doppler,
        }
    }

    pub fn doppler_bins(&self) -> usize {
        2 * self.max_doppler + 1
    }

    /// Number of unknowns `L(2Q+1)`.
    pub fn len(&self) -> usize {
        self.delay_taps * self.doppler_bins()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index `l(2Q+1) + Q + q`.
    pub fn index(&self, l: usize, q: i64) -> usize {
        l * self.doppler_bins() + (q + self.max_doppler as i64) as usize
    }

    pub fn grid_point(&self, idx: usize) -> (usize, i64) {
        let b = self.doppler_bins();
        (idx / b, (idx % b) as i64 - self.max_doppler as i64)
    }

    /// All `(l, q)` in flat-index order.
    pub fn points(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        (0..self.len()).map(|i| self.grid_point(i))
    }
}

/// `⌈x⌉` that ignores floating-point dust just above an integer.
pub(crate) fn ceil_tolerant(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityConfig {
    pub model: SparsityModel,
    pub delay_taps: usize,
    pub max_doppler: usize,
    pub p_delay: f64,
    pub p_doppler: f64,
    /// Cluster length for `Type3`; ignored otherwise.
    pub cluster_len: Option<usize>,
    /// Margin used for the high-probability sparsity levels.
    pub epsilon: f64,
}

impl SparsityConfig {
    pub const DEFAULT_EPSILON: f64 = 0.5;

    pub fn new(
        model: SparsityModel,
        delay_taps: usize,
        max_doppler: usize,
        p_delay: f64,
        p_doppler: f64,
    ) -> Result<Self> {
        let cfg = Self {
            model,
            delay_taps,
            max_doppler,
            p_delay,
            p_doppler,
            cluster_len: None,
            epsilon: Self::DEFAULT_EPSILON,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `Type3` configuration; `p_D` follows from the cluster length.
    pub fn clustered(
        delay_taps: usize,
        max_doppler: usize,
        p_delay: f64,
        cluster_len: usize,
    ) -> Result<Self> {
        let bins = 2 * max_doppler + 1;
        if cluster_len == 0 || cluster_len > bins {
            return Err(Error::ClusterTooLong { cluster_len, bins });
        }
        let cfg = Self {
            model: SparsityModel::Type3,
            delay_taps,
            max_doppler,
            p_delay,
            p_doppler: cluster_len as f64 / bins as f64,
            cluster_len: Some(cluster_len),
            epsilon: Self::DEFAULT_EPSILON,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.delay_taps == 0 {
            return Err(Error::invalid("need at least one delay tap"));
        }
        for (name, p) in [("p_d", self.p_delay), ("p_D", self.p_doppler)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!("{name} = {p} outside (0, 1]")));
            }
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::invalid("epsilon must be non-negative"));
        }
        if self.model == SparsityModel::Type3 {
            let bins = self.doppler_bins();
            let len = self
                .cluster_len
                .ok_or(Error::MissingParameter("cluster_len"))?;
            if len == 0 || len > bins {
                return Err(Error::ClusterTooLong {
                    cluster_len: len,
                    bins,
                });
            }
            if (self.p_doppler - len as f64 / bins as f64).abs() > 1e-12 {
                return Err(Error::invalid("Type3 needs p_D = cluster_len / (2Q+1)"));
            }
        }
        Ok(())
    }

    pub fn doppler_bins(&self) -> usize {
        2 * self.max_doppler + 1
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.delay_taps, self.max_doppler)
    }

    /// `s_d = ⌈(1+ε) p_d L⌉`, clamped to `[1, L]`.
    pub fn delay_sparsity(&self) -> usize {
        ceil_tolerant((1.0 + self.epsilon) * self.p_delay * self.delay_taps as f64)
            .clamp(1, self.delay_taps)
    }

    /// `s_D = ⌈(1+ε) p_D (2Q+1)⌉`, clamped to `[1, 2Q+1]`.
    pub fn doppler_sparsity(&self) -> usize {
        let bins = self.doppler_bins();
        ceil_tolerant((1.0 + self.epsilon) * self.p_doppler * bins as f64).clamp(1, bins)
    }

    /// Mean delay sparsity `⌈p_d L⌉`.
    pub fn mean_delay_sparsity(&self) -> usize {
        ceil_tolerant(self.p_delay * self.delay_taps as f64).clamp(1, self.delay_taps)
    }

    /// Mean Doppler sparsity `⌈p_D (2Q+1)⌉`.
    pub fn mean_doppler_sparsity(&self) -> usize {
        let bins = self.doppler_bins();
        ceil_tolerant(self.p_doppler * bins as f64).clamp(1, bins)
    }

    /// Per-gain variance `σ_α²` giving unit expected channel power.
    pub fn gain_variance(&self) -> f64 {
        1.0 / (self.delay_taps as f64 * self.p_delay * self.doppler_bins() as f64 * self.p_doppler)
    }
}

/// Gains `α_{l,q}` and indicators `I_{l,q}` on the delay-Doppler grid,
/// stored row-major with column `q + Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDopplerProfile {
    delay_taps: usize,
    max_doppler: usize,
    gains: Vec<C64>,
    mask: Vec<bool>,
    taps: Vec<bool>,
    gain_variance: f64,
}

impl DelayDopplerProfile {
    pub fn zeros(delay_taps: usize, max_doppler: usize) -> Self {
        let len = delay_taps * (2 * max_doppler + 1);
        Self {
            delay_taps,
            max_doppler,
            gains: vec![C64::new(0.0, 0.0); len],
            mask: vec![false; len],
            taps: vec![false; delay_taps],
            gain_variance: 0.0,
        }
    }

    pub fn delay_taps(&self) -> usize {
        self.delay_taps
    }

    pub fn max_doppler(&self) -> usize {
        self.max_doppler
    }

    pub fn doppler_bins(&self) -> usize {
        2 * self.max_doppler + 1
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.delay_taps, self.max_doppler)
    }

    pub fn gain_variance(&self) -> f64 {
        self.gain_variance
    }

    pub fn with_gain_variance(mut self, v: f64) -> Self {
        self.gain_variance = v;
        self
    }

    /// Flat index `l(2Q+1) + Q + q` of grid point `(l, q)`.
    pub fn index(&self, l: usize, q: i64) -> usize {
        assert!(l < self.delay_taps && q.unsigned_abs() as usize <= self.max_doppler);
        l * self.doppler_bins() + (q + self.max_doppler as i64) as usize
    }

    /// Inverse of [`index`](Self::index).
    pub fn grid_point(&self, idx: usize) -> (usize, i64) {
        let b = self.doppler_bins();
        (idx / b, (idx % b) as i64 - self.max_doppler as i64)
    }

    pub fn gain(&self, l: usize, q: i64) -> C64 {
        self.gains[self.index(l, q)]
    }

    pub fn is_active(&self, l: usize, q: i64) -> bool {
        self.mask[self.index(l, q)]
    }

    /// Switches `(l, q)` on with gain `alpha`.
    pub fn set_path(&mut self, l: usize, q: i64, alpha: C64) {
        let i = self.index(l, q);
        self.gains[i] = alpha;
        self.mask[i] = true;
        self.taps[l] = true;
    }

    /// Active paths as `(l, q, α)`.
    pub fn active_paths(&self) -> impl Iterator<Item = (usize, i64, C64)> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(move |(i, _)| {
                let (l, q) = self.grid_point(i);
                (l, q, self.gains[i])
            })
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Delay-tap indicators `I_l`. A tap can be on with an empty Doppler row.
    pub fn tap_indicators(&self) -> &[bool] {
        &self.taps
    }

    /// Number of blocks with at least one active Doppler bin.
    pub fn nonzero_blocks(&self) -> usize {
        self.mask
            .chunks(self.doppler_bins())
            .filter(|row| row.iter().any(|&m| m))
            .count()
    }

    /// Rows concatenated: block `l` holds `q = -Q..=Q`.
    pub fn vectorize(&self) -> Vec<C64> {
        self.gains
            .iter()
            .zip(&self.mask)
            .map(|(&g, &m)| if m { g } else { C64::new(0.0, 0.0) })
            .collect()
    }

    /// Rebuilds a profile from a vectorised one; non-zero entries are active.
    pub fn devectorize(alpha: &[C64], delay_taps: usize, max_doppler: usize) -> Result<Self> {
        let len = delay_taps * (2 * max_doppler + 1);
        if alpha.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: alpha.len(),
            });
        }
        let mut p = Self::zeros(delay_taps, max_doppler);
        for (i, &a) in alpha.iter().enumerate() {
            if a != C64::new(0.0, 0.0) {
                let (l, q) = p.grid_point(i);
                p.set_path(l, q, a);
            }
        }
        Ok(p)
    }

    /// Channel power `Σ |α_{l,q}|² I_{l,q}`.
    pub fn power(&self) -> f64 {
        self.active_paths().map(|(_, _, a)| a.norm_sqr()).sum()
    }

    pub fn to_record(&self) -> ProfileRecord {
        ProfileRecord {
            delay_taps: self.delay_taps,
            max_doppler: self.max_doppler,
            gain_variance: self.gain_variance,
            paths: self
                .active_paths()
                .map(|(l, q, a)| PathRecord {
                    l,
                    q,
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &ProfileRecord) -> Result<Self> {
        let mut p =
            Self::zeros(rec.delay_taps, rec.max_doppler).with_gain_variance(rec.gain_variance);
        for path in &rec.paths {
            if path.l >= rec.delay_taps || path.q.unsigned_abs() as usize > rec.max_doppler {
                return Err(Error::Parse(format!(
                    "path ({}, {}) outside the {}x{} grid",
                    path.l,
                    path.q,
                    rec.delay_taps,
                    2 * rec.max_doppler + 1
                )));
            }
            p.set_path(path.l, path.q, C64::new(path.re, path.im));
        }
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(&serde_json::from_str(s)?)
    }
}

/// Serialised form of a profile: grid size plus the list of active paths.
///
/// ```json
/// { "delay_taps": 30, "max_doppler": 7, "gain_variance": 0.0556,
///   "paths": [ { "l": 3, "q": -2, "re": 0.12, "im": -0.4 } ] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub delay_taps: usize,
    pub max_doppler: usize,
    pub gain_variance: f64,
    pub paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub l: usize,
    pub q: i64,
    pub re: f64,
    pub im: f64,
}

/// Circular complex Gaussian sample with variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

fn doppler_pattern<R: Rng + ?Sized>(cfg: &SparsityConfig, rng: &mut R) -> Vec<bool> {
    let bins = cfg.doppler_bins();
    match cfg.model {
        SparsityModel::Type1 | SparsityModel::Type2 => {
            (0..bins).map(|_| rng.random_bool(cfg.p_doppler)).collect()
        }
        SparsityModel::Type3 => {
            let len = cfg.cluster_len.unwrap_or(1);
            let start = rng.random_range(0..bins);
            let mut row = vec![false; bins];
            for k in 0..len {
                row[(start + k) % bins] = true;
            }
            row
        }
    }
}

/// Draws one delay-Doppler profile.
pub fn sample_profile<R: Rng + ?Sized>(
    cfg: &SparsityConfig,
    rng: &mut R,
) -> Result<DelayDopplerProfile> {
    cfg.validate()?;
    let bins = cfg.doppler_bins();
    let var = cfg.gain_variance();
    let taps: Vec<bool> = (0..cfg.delay_taps)
        .map(|_| rng.random_bool(cfg.p_delay))
        .collect();
    let shared = match cfg.model {
        SparsityModel::Type1 => Some(doppler_pattern(cfg, rng)),
        _ => None,
    };
    let mut profile =
        DelayDopplerProfile::zeros(cfg.delay_taps, cfg.max_doppler).with_gain_variance(var);
    profile.taps.clone_from(&taps);
    for (l, &on) in taps.iter().enumerate() {
        // Every tap consumes its pattern so draws do not depend on I_l.
        let row = match &shared {
            Some(p) => p.clone(),
            None => doppler_pattern(cfg, rng),
        };
        if !on {
            continue;
        }
        for (col, &active) in row.iter().enumerate() {
            if active {
                let q = col as i64 - cfg.max_doppler as i64;
                profile.set_path(l, q, complex_gaussian(rng, var));
            }
        }
    }
    debug_assert_eq!(profile.gains.len(), cfg.delay_taps * bins);
    Ok(profile)
}

/// Additive white noise `z_n ~ CN(0, σ_w²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub variance: f64,
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self { variance: 0.0 }
    }

    pub fn from_variance(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::invalid("noise variance must be non-negative"));
        }
        Ok(Self { variance })
    }

    /// `σ_w² = 10^{-SNR/10}` for unit-power symbols and channel.
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self {
            variance: 10f64.powf(-snr_db / 10.0),
        }
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.variance.log10()
    }
}

/// Runs `r_n = Σ_l s_{n-l} h_{l,n} + z_n` for `n = 0..N-1`, where
/// `h_{l,n} = Σ_q α_{l,q} I_{l,q} e^{i2πnq/N}` and `s` carries its prefix.
pub fn apply_channel<R: Rng + ?Sized>(
    s_cpp: &[C64],
    profile: &DelayDopplerProfile,
    params: &AfdmParams,
    noise: &NoiseConfig,
    rng: &mut R,
) -> Result<Vec<C64>> {
    let mut r = apply_channel_noiseless(s_cpp, profile, params)?;
    add_noise(&mut r, noise, rng);
    Ok(r)
}

/// Noise-free part of [`apply_channel`].
pub fn apply_channel_noiseless(
    s_cpp: &[C64],
    profile: &DelayDopplerProfile,
    params: &AfdmParams,
) -> Result<Vec<C64>> {
    let n = params.n();
    let cpp = params.cpp_len();
    if s_cpp.len() != n + cpp {
        return Err(Error::LengthMismatch {
            expected: n + cpp,
            got: s_cpp.len(),
        });
    }
    if profile.delay_taps() > cpp + 1 {
        return Err(Error::PrefixTooShort {
            needed: profile.delay_taps() - 1,
            got: cpp,
        });
    }
    let roots: Vec<C64> = (0..n).map(|j| cis_ratio(j as i128, n as i128)).collect();
    let mut r = vec![C64::new(0.0, 0.0); n];
    for (l, q, alpha) in profile.active_paths() {
        let step = q.rem_euclid(n as i64) as usize;
        let mut phase_idx = 0usize;
        for (t, out) in r.iter_mut().enumerate() {
            *out += alpha * roots[phase_idx] * s_cpp[cpp + t - l];
            phase_idx += step;
            if phase_idx >= n {
                phase_idx -= n;
            }
        }
    }
    Ok(r)
}

pub fn add_noise<R: Rng + ?Sized>(r: &mut [C64], noise: &NoiseConfig, rng: &mut R) {
    if noise.variance > 0.0 {
        for z in r.iter_mut() {
            *z += complex_gaussian(rng, noise.variance);
        }
    }
}

/// Chernoff bound `P[B(n, p) > s] ≤ (p/(s/n))^s ((1-p)/(1-s/n))^{n-s}`,
/// valid (and below one) when `s/n > p`; one otherwise.
pub fn chernoff_bound(trials: usize, p: f64, s: usize) -> f64 {
    let n = trials as f64;
    let s_f = s as f64;
    let ratio = s_f / n;
    if ratio <= p {
        return 1.0;
    }
    if s >= trials {
        return 0.0;
    }
    let v = (p / ratio).powf(s_f) * ((1.0 - p) / (1.0 - ratio)).powf(n - s_f);
    v.min(1.0)
}

/// Monte-Carlo estimate of the sparsity-level exceedance events together
/// with their Chernoff bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityStats {
    pub trials: usize,
    pub s_delay: usize,
    pub s_doppler: usize,
    /// Frequency of `S_d > s_d`.
    pub prob_delay_exceed: f64,
    pub delay_std_err: f64,
    pub chernoff_delay_bound: f64,
    /// Frequency of `∃ l: I_l = 1, S_{D,l} > s_D`.
    pub prob_doppler_exceed_joint: f64,
    pub doppler_std_err: f64,
    /// Union bound `min(1, L p_d · Chernoff(2Q+1, p_D, s_D))`; zero for `Type3`
    /// whenever the cluster fits in `s_D`.
    pub chernoff_doppler_bound: f64,
    /// Frequency of the vector being `(s_d, s_D)`-hierarchically sparse.
    pub prob_hierarchical: f64,
}

impl SparsityStats {
    /// Lower bound on the hierarchical-sparsity frequency implied by the two
    /// tail bounds.
    pub fn predicted_hierarchical_floor(&self) -> f64 {
        (1.0 - self.chernoff_delay_bound - self.chernoff_doppler_bound).max(0.0)
    }
}

/// Draws `trials` indicator patterns and counts how often the sparsity levels
/// of `cfg` are exceeded. Gains are not sampled.
pub fn empirical_sparsity_stats<R: Rng + ?Sized>(
    cfg: &SparsityConfig,
    trials: usize,
    rng: &mut R,
) -> Result<SparsityStats> {
    cfg.validate()?;
    if trials < 1000 {
        return Err(Error::invalid("need at least 1000 trials"));
    }
    let s_d = cfg.delay_sparsity();
    let s_dd = cfg.doppler_sparsity();
    let (mut delay_hits, mut doppler_hits, mut hier) = (0usize, 0usize, 0usize);
    for _ in 0..trials {
        let taps: Vec<bool> = (0..cfg.delay_taps)
            .map(|_| rng.random_bool(cfg.p_delay))
            .collect();
        let shared = match cfg.model {
            SparsityModel::Type1 => Some(doppler_pattern(cfg, rng)),
            _ => None,
        };
        let active = taps.iter().filter(|&&t| t).count();
        let mut doppler_exceed = false;
        for &on in &taps {
            let count = match &shared {
                Some(p) => p.iter().filter(|&&b| b).count(),
                None => doppler_pattern(cfg, rng).iter().filter(|&&b| b).count(),
            };
            if on && count > s_dd {
                doppler_exceed = true;
            }
        }
        delay_hits += usize::from(active > s_d);
        doppler_hits += usize::from(doppler_exceed);
        hier += usize::from(active <= s_d && !doppler_exceed);
    }
    let t = trials as f64;
    let freq = |k: usize| k as f64 / t;
    let se = |p: f64| (p * (1.0 - p) / t).sqrt();
    let p_delay = freq(delay_hits);
    let p_doppler = freq(doppler_hits);
    let doppler_bound = match cfg.model {
        SparsityModel::Type3 if cfg.cluster_len.unwrap_or(0) <= s_dd => 0.0,
        _ => (cfg.delay_taps as f64
            * cfg.p_delay
            * chernoff_bound(cfg.doppler_bins(), cfg.p_doppler, s_dd))
        .min(1.0),
    };
    Ok(SparsityStats {
        trials,
        s_delay: s_d,
        s_doppler: s_dd,
        prob_delay_exceed: p_delay,
        delay_std_err: se(p_delay),
        chernoff_delay_bound: chernoff_bound(cfg.delay_taps, cfg.p_delay, s_d),
        prob_doppler_exceed_joint: p_doppler,
        doppler_std_err: se(p_doppler),
        chernoff_doppler_bound: doppler_bound,
        prob_hierarchical: freq(hier),
    })
}
