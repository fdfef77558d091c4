//! Low-rate sensing receiver for pilot-only frames.
//!
//! After de-chirping with the first DAFT chirp, the response of a contiguous
//! pilot block occupies only `|𝒫|` of the `N` DFT bins. Sampling at `K/T`
//! (`K ≥ |𝒫|` dividing `N`) folds those bins onto the `K` aliased bins
//! without collision, so the full-rate observations are recovered from `K`
//! samples. The analog mixer and ADC are emulated by a sample-wise product
//! at rate `BW` followed by ideal decimation.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::channel::Grid;
use crate::daft::AfdmParams;
use crate::sensing::{is_cyclic_interval, observation_index_set, PilotScheme};
use crate::{Error, Result, C64};

/// Radar-side timing of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub bandwidth_hz: f64,
    /// Samples per frame `N`.
    pub frame_len: usize,
    pub cpp_len: usize,
    /// Count the prefix in the frame duration `T`.
    pub include_cpp: bool,
}

impl RadarConfig {
    pub fn new(bandwidth_hz: f64, frame_len: usize) -> Result<Self> {
        let cfg = Self {
            bandwidth_hz,
            frame_len,
            cpp_len: 0,
            include_cpp: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Adds a prefix of `cpp_len` samples, counted in `T` when `include`.
    pub fn with_prefix(mut self, cpp_len: usize, include: bool) -> Self {
        self.cpp_len = cpp_len;
        self.include_cpp = include;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        if self.frame_len == 0 {
            return Err(Error::invalid("frame length must be positive"));
        }
        Ok(())
    }

    /// `Δt = 1/BW`.
    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    /// `T = N·Δt`, plus `L_cpp·Δt` when the prefix is included.
    pub fn frame_duration_s(&self) -> f64 {
        let samples = self.frame_len + if self.include_cpp { self.cpp_len } else { 0 };
        samples as f64 * self.sample_period_s()
    }

    /// `τ_max = (L-1)Δt`.
    pub fn tau_max_s(&self, delay_taps: usize) -> f64 {
        delay_taps.saturating_sub(1) as f64 * self.sample_period_s()
    }

    /// `T_cpp = L_cpp·Δt`.
    pub fn prefix_duration_s(&self) -> f64 {
        self.cpp_len as f64 * self.sample_period_s()
    }
}

/// Sampling-rate accounting for the low-rate receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingRate {
    /// `N_p((L-1)P+1)/T`.
    pub f_s_hz: f64,
    /// `N_p((L-1)P+1)/N`.
    pub ratio: f64,
    /// Samples per frame actually taken once `K` is rounded up to a divisor
    /// of `N`, and the matching rate `K/T`.
    pub samples_per_frame: usize,
    pub effective_hz: f64,
}

/// Minimum de-chirped sampling rate for `n_pilots` pilots.
pub fn sampling_rate(
    n_pilots: usize,
    delay_taps: usize,
    p: usize,
    cfg: &RadarConfig,
) -> Result<SamplingRate> {
    cfg.validate()?;
    if delay_taps == 0 {
        return Err(Error::invalid("need at least one delay tap"));
    }
    let needed = n_pilots * ((delay_taps - 1) * p + 1);
    let t = cfg.frame_duration_s();
    let (k, _) = decimation(cfg.frame_len, needed.max(1)).unwrap_or((cfg.frame_len, 1));
    Ok(SamplingRate {
        f_s_hz: needed as f64 / t,
        ratio: needed as f64 / cfg.frame_len as f64,
        samples_per_frame: k,
        effective_hz: k as f64 / t,
    })
}

/// Smallest divisor `K` of `n` with `K ≥ needed`, and `D = n/K`.
pub fn decimation(n: usize, needed: usize) -> Result<(usize, usize)> {
    if needed > n || n == 0 {
        return Err(Error::DecimationInfeasible { needed, n });
    }
    let k = (needed.max(1)..=n).find(|k| n.is_multiple_of(*k)).unwrap_or(n);
    Ok((k, n / k))
}

/// De-chirp, decimate and fold back onto the observation set.
#[derive(Clone)]
pub struct SubNyquistReceiver {
    params: AfdmParams,
    scheme: PilotScheme,
    rows: Vec<usize>,
    k: usize,
    d: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SubNyquistReceiver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubNyquistReceiver")
            .field("rows", &self.rows.len())
            .field("k", &self.k)
            .field("d", &self.d)
            .finish()
    }
}

impl SubNyquistReceiver {
    pub fn new(scheme: &PilotScheme, params: &AfdmParams, grid: Grid) -> Result<Self> {
        params.validate()?;
        let rows = observation_index_set(scheme, params, grid)?;
        let n = params.n();
        if !is_cyclic_interval(&rows, n) {
            return Err(Error::NotContiguous);
        }
        let (k, d) = decimation(n, rows.len())?;
        Ok(Self {
            params: params.clone(),
            scheme: scheme.clone(),
            rows,
            k,
            d,
            fft: FftPlanner::new().plan_fft_forward(k),
        })
    }

    /// The observation set; outputs follow this order.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Samples taken per frame.
    pub fn samples_per_frame(&self) -> usize {
        self.k
    }

    pub fn decimation_factor(&self) -> usize {
        self.d
    }

    /// Returns the observations on `𝒫` from `K` low-rate samples of the
    /// received frame `r` (prefix already discarded). `frame` is the
    /// transmitted DAFT-domain frame and must carry nothing but the pilots.
    pub fn receive(&self, r: &[C64], frame: &[C64]) -> Result<Vec<C64>> {
        let n = self.params.n();
        for len in [r.len(), frame.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        let mut is_pilot = vec![false; n];
        for &m in &self.scheme.positions {
            is_pilot[m] = true;
        }
        if let Some(i) = (0..n).find(|&i| !is_pilot[i] && frame[i].norm() > 0.0) {
            return Err(Error::DataInFrame(i));
        }
        let mut v: Vec<C64> = (0..self.k)
            .map(|m| {
                let t = m * self.d;
                r[t] * self.params.chirp1(t)
            })
            .collect();
        self.fft.process(&mut v);
        let scale = self.d as f64 / (n as f64).sqrt();
        Ok(self
            .rows
            .iter()
            .map(|&k| self.params.chirp2(k) * v[k % self.k] * scale)
            .collect())
    }
}

/// One-shot form of [`SubNyquistReceiver::receive`].
pub fn dechirp_decimate_receive(
    r: &[C64],
    frame: &[C64],
    scheme: &PilotScheme,
    params: &AfdmParams,
    grid: Grid,
) -> Result<Vec<C64>> {
    SubNyquistReceiver::new(scheme, params, grid)?.receive(r, frame)
}
