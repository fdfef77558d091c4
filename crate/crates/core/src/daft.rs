//! Discrete affine Fourier transform (DAFT) machinery.
//!
//! The DAFT matrix is `Φ = Λ_{c2} F_N Λ_{c1}` with `Λ_c = diag(e^{-i2πcn²})`
//! and `F_N` the unitary DFT. AFDM modulation applies `Φᴴ`, demodulation
//! applies `Φ`; both run as one FFT between two chirp multiplications.
//!
//! The first chirp rate is always `c1 = ±P / (2N)` with `N` even, so
//! `2·c1·N` is an integer and the chirp-periodic prefix degenerates into a
//! cyclic prefix.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

/// `e^{i2πt}`, reducing `t` to `[0, 1)` first.
pub(crate) fn cis_turns(t: f64) -> C64 {
    let f = t - t.floor();
    C64::from_polar(1.0, 2.0 * PI * f)
}

/// `e^{i2π·num/den}` for integer phases, reduced exactly.
pub(crate) fn cis_ratio(num: i128, den: i128) -> C64 {
    let r = num.rem_euclid(den);
    C64::from_polar(1.0, 2.0 * PI * (r as f64) / (den as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChirpSign {
    #[default]
    Positive,
    Negative,
}

impl ChirpSign {
    pub fn as_i64(self) -> i64 {
        match self {
            ChirpSign::Positive => 1,
            ChirpSign::Negative => -1,
        }
    }
}

/// Waveform geometry of one AFDM frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AfdmParams {
    n: usize,
    p: usize,
    c1_sign: ChirpSign,
    c2: f64,
    cpp_len: usize,
}

impl AfdmParams {
    /// `N` samples per frame with `c1 = P / (2N)`, `c2 = 0` and no prefix.
    ///
    /// `P = 0` is accepted and gives `c1 = 0` (plain OFDM-like DFT).
    pub fn new(n: usize, p: usize) -> Result<Self> {
        let params = Self {
            n,
            p,
            c1_sign: ChirpSign::Positive,
            c2: 0.0,
            cpp_len: 0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_c2(mut self, c2: f64) -> Self {
        self.c2 = c2;
        self
    }

    pub fn with_c1_sign(mut self, sign: ChirpSign) -> Self {
        self.c1_sign = sign;
        self
    }

    pub fn with_cpp_len(mut self, cpp_len: usize) -> Self {
        self.cpp_len = cpp_len;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !self.n.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "frame length N = {} must be a positive even integer",
                self.n
            )));
        }
        if !self.c2.is_finite() {
            return Err(Error::invalid("c2 must be finite"));
        }
        if self.cpp_len > self.n {
            return Err(Error::invalid(format!(
                "prefix length {} exceeds N = {}",
                self.cpp_len, self.n
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn c1_sign(&self) -> ChirpSign {
        self.c1_sign
    }

    pub fn c1(&self) -> f64 {
        self.c1_sign.as_i64() as f64 * self.p as f64 / (2.0 * self.n as f64)
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn cpp_len(&self) -> usize {
        self.cpp_len
    }

    /// `2·c1·N = ±P`: how far one delay tap moves a pilot in the DAFT domain.
    pub fn delay_shift(&self) -> i64 {
        self.c1_sign.as_i64() * self.p as i64
    }

    /// DAFT-domain offset of a path at delay `l`, Doppler `q`:
    /// an impulse at `m` lands at `(m + q - 2·c1·N·l)_N`.
    pub fn path_offset(&self, l: usize, q: i64) -> i64 {
        q - self.delay_shift() * l as i64
    }

    /// `e^{-i2π c1 n²}`, evaluated with exact integer reduction.
    pub(crate) fn chirp1(&self, n: usize) -> C64 {
        let num = -(self.c1_sign.as_i64() as i128) * self.p as i128 * (n as i128) * (n as i128);
        cis_ratio(num, 2 * self.n as i128)
    }

    /// `e^{-i2π c2 k²}`.
    pub(crate) fn chirp2(&self, k: usize) -> C64 {
        let k2 = (k as f64) * (k as f64);
        cis_turns(-self.c2 * k2)
    }
}

impl fmt::Display for AfdmParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} c1={}{}/(2N) c2={} L_cpp={}",
            self.n,
            if self.c1_sign == ChirpSign::Negative {
                "-"
            } else {
                ""
            },
            self.p,
            self.c2,
            self.cpp_len
        )
    }
}

/// Precomputed DAFT: FFT plans and both chirp tables. Immutable once built,
/// so one instance can be shared across threads.
#[derive(Clone)]
pub struct Daft {
    params: AfdmParams,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    chirp1: Vec<C64>,
    chirp2: Vec<C64>,
    scale: f64,
}

impl fmt::Debug for Daft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Daft")
            .field("params", &self.params)
            .finish()
    }
}

impl Daft {
    pub fn new(params: &AfdmParams) -> Result<Self> {
        params.validate()?;
        let n = params.n();
        let mut planner = FftPlanner::new();
        Ok(Self {
            params: params.clone(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            chirp1: (0..n).map(|i| params.chirp1(i)).collect(),
            chirp2: (0..n).map(|k| params.chirp2(k)).collect(),
            scale: 1.0 / (n as f64).sqrt(),
        })
    }

    pub fn params(&self) -> &AfdmParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    /// IDAFT: `s = Φᴴ x`.
    pub fn modulate(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.n(), x.len())?;
        let mut buf = x.to_vec();
        self.modulate_in_place(&mut buf);
        Ok(buf)
    }

    /// DAFT: `y = Φ r`.
    pub fn demodulate(&self, r: &[C64]) -> Result<Vec<C64>> {
        check_len(self.n(), r.len())?;
        let mut buf = r.to_vec();
        self.demodulate_in_place(&mut buf);
        Ok(buf)
    }

    pub(crate) fn modulate_in_place(&self, buf: &mut [C64]) {
        for (z, c) in buf.iter_mut().zip(&self.chirp2) {
            *z *= c.conj();
        }
        self.inverse.process(buf);
        for (z, c) in buf.iter_mut().zip(&self.chirp1) {
            *z *= c.conj() * self.scale;
        }
    }

    pub(crate) fn demodulate_in_place(&self, buf: &mut [C64]) {
        for (z, c) in buf.iter_mut().zip(&self.chirp1) {
            *z *= c;
        }
        self.forward.process(buf);
        for (z, c) in buf.iter_mut().zip(&self.chirp2) {
            *z *= c * self.scale;
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// `s_n = (1/√N) Σ_k x_k e^{i2π(c2k² + kn/N + c1n²)}`.
pub fn idaft_modulate(x: &[C64], params: &AfdmParams) -> Result<Vec<C64>> {
    Daft::new(params)?.modulate(x)
}

/// `y_k = (1/√N) Σ_n r_n e^{-i2π(c2k² + kn/N + c1n²)}` on a prefix-free frame.
pub fn daft_demodulate(r: &[C64], params: &AfdmParams) -> Result<Vec<C64>> {
    Daft::new(params)?.demodulate(r)
}

/// Dense `Φ`, evaluated entry by entry from the DAFT kernel.
///
/// Only meant for tests and diagnostics; the transforms never materialise it.
pub fn build_daft_operator(params: &AfdmParams) -> Result<CMatrix> {
    params.validate()?;
    let n = params.n();
    let scale = 1.0 / (n as f64).sqrt();
    Ok(CMatrix::from_fn(n, n, |k, col| {
        let dft = cis_ratio(-((k * col) as i128), n as i128);
        params.chirp2(k) * dft * params.chirp1(col) * scale
    }))
}

/// Prepends the chirp-periodic prefix
/// `s_n = s_{N+n} e^{-i2π c1 (N² + 2Nn)}` for `n = -L_cpp..-1`.
pub fn cpp_extend(s: &[C64], params: &AfdmParams) -> Result<Vec<C64>> {
    let n = params.n();
    check_len(n, s.len())?;
    let cpp = params.cpp_len();
    let mut out = Vec::with_capacity(n + cpp);
    for i in 0..cpp {
        let idx = i as i128 - cpp as i128;
        out.push(s[(n as i128 + idx) as usize] * cpp_phase(params, idx));
    }
    out.extend_from_slice(s);
    Ok(out)
}

/// Removes the prefix added by [`cpp_extend`].
pub fn cpp_strip(r: &[C64], params: &AfdmParams) -> Result<Vec<C64>> {
    let n = params.n();
    check_len(n + params.cpp_len(), r.len())?;
    Ok(r[params.cpp_len()..].to_vec())
}

/// Prefix phase `e^{-i2π c1 (N² + 2Nn)}`. With `c1 = ±P/(2N)` the exponent
/// is `∓P(N/2 + n)`, an integer for even `N`, so this is exactly one.
pub fn cpp_phase(params: &AfdmParams, n_idx: i128) -> C64 {
    let big_n = params.n() as i128;
    let num = -(params.c1_sign().as_i64() as i128)
        * params.p() as i128
        * (big_n * big_n + 2 * big_n * n_idx);
    if num % (2 * big_n) == 0 {
        C64::new(1.0, 0.0)
    } else {
        cis_ratio(num, 2 * big_n)
    }
}

/// Smallest chirp-rate numerator `P ≥ 1` with `(L-1)P + 2Q + 1 ≥ s_d·s_D`,
/// capped at the full-diversity value `2Q + 1`.
pub fn select_chirp_rate(
    delay_taps: usize,
    max_doppler: usize,
    s_delay: usize,
    s_doppler: usize,
) -> Result<usize> {
    let bins = 2 * max_doppler + 1;
    if delay_taps == 0 {
        return Err(Error::invalid("need at least one delay tap"));
    }
    if s_delay == 0 || s_delay > delay_taps {
        return Err(Error::invalid(format!(
            "delay sparsity {s_delay} outside [1, {delay_taps}]"
        )));
    }
    if s_doppler == 0 || s_doppler > bins {
        return Err(Error::invalid(format!(
            "Doppler sparsity {s_doppler} outside [1, {bins}]"
        )));
    }
    let unknowns = s_delay * s_doppler;
    if unknowns <= bins || delay_taps == 1 {
        return Ok(1);
    }
    let p = (unknowns - bins).div_ceil(delay_taps - 1);
    Ok(p.clamp(1, bins))
}
