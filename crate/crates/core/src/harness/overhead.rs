//! Pilot overhead, in samples, of the three waveforms being compared.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Afdm,
    Ofdm,
    Otfs,
}

/// Inputs for [`pilot_overhead`]; each waveform reads its own subset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverheadInputs {
    pub delay_taps: Option<usize>,
    pub max_doppler: Option<usize>,
    /// AFDM pilot count and chirp-rate numerator.
    pub n_pilots: Option<usize>,
    pub chirp_rate: Option<usize>,
    /// OFDM pilots per symbol (time) and pilot symbols (frequency), and
    /// symbols per frame.
    pub pilots_td: Option<usize>,
    pub pilots_fd: Option<usize>,
    pub ofdm_symbols: Option<usize>,
    /// OTFS grid: Doppler bins `N` and delay bins `M`.
    pub otfs_n: Option<usize>,
    pub otfs_m: Option<usize>,
}

fn need(v: Option<usize>, name: &'static str) -> Result<usize> {
    v.ok_or(Error::MissingParameter(name))
}

/// Samples spent on pilots and guards:
///
/// * AFDM: `N_p((L-1)P+1) + (L-1)P + 4Q`
/// * OFDM: `N_td·N_fd + (N_sym - 1)(L-1)`
/// * OTFS: `min(4Q+1, N)·min(2L-1, M)`
pub fn pilot_overhead(waveform: Waveform, p: &OverheadInputs) -> Result<usize> {
    let l = need(p.delay_taps, "delay_taps")?;
    if l == 0 {
        return Err(Error::invalid("need at least one delay tap"));
    }
    Ok(match waveform {
        Waveform::Afdm => {
            let q = need(p.max_doppler, "max_doppler")?;
            let np = need(p.n_pilots, "n_pilots")?;
            let spread = (l - 1) * need(p.chirp_rate, "chirp_rate")?;
            np * (spread + 1) + spread + 4 * q
        }
        Waveform::Ofdm => {
            let td = need(p.pilots_td, "pilots_td")?;
            let fd = need(p.pilots_fd, "pilots_fd")?;
            let sym = need(p.ofdm_symbols, "ofdm_symbols")?;
            td * fd + sym.saturating_sub(1) * (l - 1)
        }
        Waveform::Otfs => {
            let q = need(p.max_doppler, "max_doppler")?;
            let n = need(p.otfs_n, "otfs_n")?;
            let m = need(p.otfs_m, "otfs_m")?;
            (4 * q + 1).min(n) * (2 * l - 1).min(m)
        }
    })
}
