//! Pilot frames and the compressed-sensing measurement model.
//!
//! A DAFT-domain pilot at index `m` reaches the receiver, through a path at
//! delay `l` and Doppler `q`, at index `(m + q - 2·c1·N·l)_N`. The set of those
//! indices is the pilot's observation window; the union over all pilots is the
//! observation set `𝒫`. Gathering the demodulated frame on `𝒫` gives
//! `y_p = M_p α + w_p` where column `l(2Q+1) + Q + q` of `M_p` is
//! `Φ Δ_q Πˡ Φᴴ x_p` restricted to `𝒫`.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::channel::{ceil_tolerant, Grid};
use crate::daft::{cis_ratio, cis_turns, AfdmParams, Daft};
use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    /// Observation windows of different pilots never share an index.
    #[default]
    Disjoint,
    /// Neighbouring windows may share their `2Q` Doppler edges; pilots must be
    /// at least `(L-1)P + 1` apart.
    Reduced,
}

/// Offsets `q - 2·c1·N·l` reachable from a pilot, as a sorted set.
fn offsets(params: &AfdmParams, grid: Grid) -> Vec<i64> {
    let set: BTreeSet<i64> = grid
        .points()
        .map(|(l, q)| params.path_offset(l, q))
        .collect();
    set.into_iter().collect()
}

/// Smallest and largest reachable offset.
pub fn offset_range(params: &AfdmParams, grid: Grid) -> (i64, i64) {
    let o = offsets(params, grid);
    (o[0], o[o.len() - 1])
}

/// Number of DAFT indices one pilot occupies: `(L-1)P + 2Q + 1` for
/// `P ≤ 2Q + 1`.
pub fn window_len(params: &AfdmParams, grid: Grid) -> usize {
    offsets(params, grid).len()
}

fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

fn cyclic_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// DAFT-domain pilots and their guard layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotScheme {
    pub positions: Vec<usize>,
    pub values: Vec<C64>,
    pub overlap: OverlapMode,
    /// `𝒫` is required to be a single cyclic interval.
    pub contiguous: bool,
}

impl PilotScheme {
    /// Unit pilots at explicit positions.
    pub fn at_positions(positions: Vec<usize>, overlap: OverlapMode) -> Self {
        let values = vec![C64::new(1.0, 0.0); positions.len()];
        Self {
            positions,
            values,
            overlap,
            contiguous: false,
        }
    }

    /// `n_pilots` unit pilots spread evenly over the frame with disjoint
    /// windows, the first starting at index 0.
    pub fn uniform(n_pilots: usize, params: &AfdmParams, grid: Grid) -> Result<Self> {
        Self::uniform_with(n_pilots, OverlapMode::Disjoint, params, grid)
    }

    /// [`PilotScheme::uniform`] with a chosen guard layout.
    pub fn uniform_with(
        n_pilots: usize,
        overlap: OverlapMode,
        params: &AfdmParams,
        grid: Grid,
    ) -> Result<Self> {
        if n_pilots == 0 {
            return Err(Error::invalid("need at least one pilot"));
        }
        let n = params.n();
        let spacing = n / n_pilots;
        let (o_min, _) = offset_range(params, grid);
        let positions = (0..n_pilots)
            .map(|p| wrap(p as i64 * spacing as i64 - o_min, n))
            .collect();
        let scheme = Self::at_positions(positions, overlap);
        scheme.validate(params, grid)?;
        Ok(scheme)
    }

    /// Pilots packed so that all windows form one interval starting at
    /// `start`. Disjoint windows are laid end to end; reduced windows overlap
    /// by their Doppler edges.
    pub fn contiguous(
        n_pilots: usize,
        overlap: OverlapMode,
        params: &AfdmParams,
        grid: Grid,
        start: usize,
    ) -> Result<Self> {
        if n_pilots == 0 {
            return Err(Error::invalid("need at least one pilot"));
        }
        let n = params.n();
        let spacing = match overlap {
            OverlapMode::Disjoint => window_len(params, grid),
            OverlapMode::Reduced => min_reduced_spacing(params, grid),
        };
        let (o_min, _) = offset_range(params, grid);
        let positions = (0..n_pilots)
            .map(|p| wrap(start as i64 + (p * spacing) as i64 - o_min, n))
            .collect();
        let mut scheme = Self::at_positions(positions, overlap);
        scheme.contiguous = true;
        scheme.validate(params, grid)?;
        Ok(scheme)
    }

    pub fn with_values(mut self, values: Vec<C64>) -> Result<Self> {
        if values.len() != self.positions.len() {
            return Err(Error::LengthMismatch {
                expected: self.positions.len(),
                got: values.len(),
            });
        }
        self.values = values;
        Ok(self)
    }

    /// Every pilot set to the real amplitude `a`.
    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.values = vec![C64::new(a, 0.0); self.positions.len()];
        self
    }

    pub fn n_pilots(&self) -> usize {
        self.positions.len()
    }

    /// Observation window of pilot `p`, in offset order.
    pub fn window(&self, p: usize, params: &AfdmParams, grid: Grid) -> Vec<usize> {
        offsets(params, grid)
            .into_iter()
            .map(|o| wrap(self.positions[p] as i64 + o, params.n()))
            .collect()
    }

    /// Checks positions, values and the guard layout against the waveform.
    pub fn validate(&self, params: &AfdmParams, grid: Grid) -> Result<()> {
        let n = params.n();
        if self.positions.is_empty() {
            return Err(Error::invalid("need at least one pilot"));
        }
        if self.values.len() != self.positions.len() {
            return Err(Error::LengthMismatch {
                expected: self.positions.len(),
                got: self.values.len(),
            });
        }
        if let Some(&bad) = self.positions.iter().find(|&&m| m >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        if self
            .values
            .iter()
            .any(|v| v.norm() == 0.0 || !v.is_finite())
        {
            return Err(Error::invalid("pilot values must be finite and non-zero"));
        }
        let w = window_len(params, grid);
        if w > n {
            return Err(Error::invalid(format!(
                "observation window of {w} samples does not fit in N = {n}"
            )));
        }
        let min_gap = match self.overlap {
            OverlapMode::Disjoint => w,
            OverlapMode::Reduced => min_reduced_spacing(params, grid),
        };
        for a in 0..self.positions.len() {
            for b in a + 1..self.positions.len() {
                let (ma, mb) = (self.positions[a], self.positions[b]);
                if cyclic_distance(ma, mb, n) >= min_gap {
                    continue;
                }
                return Err(match self.overlap {
                    OverlapMode::Disjoint => Error::OverlappingWindows {
                        first: ma,
                        second: mb,
                    },
                    OverlapMode::Reduced => Error::PilotInGuard {
                        pilot: mb,
                        owner: ma,
                    },
                });
            }
        }
        if self.contiguous && !is_cyclic_interval(&observation_set_unchecked(self, params, grid), n)
        {
            return Err(Error::NotContiguous);
        }
        Ok(())
    }
}

/// Minimum pilot spacing in reduced mode: `(L-1)P + 1`.
pub fn min_reduced_spacing(params: &AfdmParams, grid: Grid) -> usize {
    (grid.delay_taps - 1) * params.p() + 1
}

fn observation_set_unchecked(scheme: &PilotScheme, params: &AfdmParams, grid: Grid) -> Vec<usize> {
    let set: BTreeSet<usize> = (0..scheme.n_pilots())
        .flat_map(|p| scheme.window(p, params, grid))
        .collect();
    set.into_iter().collect()
}

/// True when the sorted index set is one interval modulo `n`.
pub fn is_cyclic_interval(sorted: &[usize], n: usize) -> bool {
    if sorted.is_empty() || sorted.len() == n {
        return true;
    }
    let gaps = sorted.windows(2).filter(|w| w[1] != w[0] + 1).count()
        + usize::from(!(sorted[0] == 0 && sorted[sorted.len() - 1] == n - 1));
    gaps == 1
}

/// Sorted union of the pilot observation windows.
pub fn observation_index_set(
    scheme: &PilotScheme,
    params: &AfdmParams,
    grid: Grid,
) -> Result<Vec<usize>> {
    scheme.validate(params, grid)?;
    Ok(observation_set_unchecked(scheme, params, grid))
}

/// Indices that must carry zero symbols so that no data symbol leaks into
/// an observation window (pilot positions included).
pub fn reserved_mask(scheme: &PilotScheme, params: &AfdmParams, grid: Grid) -> Result<Vec<bool>> {
    scheme.validate(params, grid)?;
    let n = params.n();
    let (o_min, o_max) = offset_range(params, grid);
    let span = o_max - o_min;
    let mut mask = vec![false; n];
    for &m in &scheme.positions {
        for d in -span..=span {
            mask[wrap(m as i64 + d, n)] = true;
        }
    }
    Ok(mask)
}

/// DAFT-domain frame: pilots at their positions, zero guards around them and
/// `data` (if any) everywhere else.
pub fn build_pilot_frame(
    scheme: &PilotScheme,
    params: &AfdmParams,
    grid: Grid,
    data: Option<&[C64]>,
) -> Result<Vec<C64>> {
    let n = params.n();
    let reserved = reserved_mask(scheme, params, grid)?;
    let mut frame = match data {
        Some(d) if d.len() != n => {
            return Err(Error::LengthMismatch {
                expected: n,
                got: d.len(),
            })
        }
        Some(d) => d.to_vec(),
        None => vec![C64::new(0.0, 0.0); n],
    };
    for (z, &r) in frame.iter_mut().zip(&reserved) {
        if r {
            *z = C64::new(0.0, 0.0);
        }
    }
    for (&m, &v) in scheme.positions.iter().zip(&scheme.values) {
        frame[m] = v;
    }
    Ok(frame)
}

/// `A_𝒫 y`: the entries of `y` at `indices`, in order.
pub fn extract_measurements(y: &[C64], indices: &[usize]) -> Result<Vec<C64>> {
    indices
        .iter()
        .map(|&k| {
            y.get(k).copied().ok_or(Error::IndexOutOfRange {
                index: k,
                len: y.len(),
            })
        })
        .collect()
}

/// `A_𝒫ᴴ y_p`: scatters `values` back into a zero frame of length `n`.
pub fn scatter_measurements(values: &[C64], indices: &[usize], n: usize) -> Result<Vec<C64>> {
    if values.len() != indices.len() {
        return Err(Error::LengthMismatch {
            expected: indices.len(),
            got: values.len(),
        });
    }
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (&k, &v) in indices.iter().zip(values) {
        *out.get_mut(k)
            .ok_or(Error::IndexOutOfRange { index: k, len: n })? = v;
    }
    Ok(out)
}

/// Entries below this fraction of the largest pilot magnitude are FFT
/// round-off and are set to exactly zero.
const ZERO_SNAP: f64 = 1e-10;

/// The `|𝒫| × L(2Q+1)` matrix `M_p`, together with what it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    matrix: CMatrix,
    rows: Vec<usize>,
    params: AfdmParams,
    scheme: PilotScheme,
    grid: Grid,
}

/// Assembles `M_p` column by column as `A_𝒫 Φ Δ_q Πˡ Φᴴ x_p`, with
/// `Δ_q = diag(e^{i2πqn/N})` and `Π` the cyclic down-shift.
pub fn build_measurement_operator(
    scheme: &PilotScheme,
    params: &AfdmParams,
    grid: Grid,
) -> Result<MeasurementOperator> {
    let rows = observation_index_set(scheme, params, grid)?;
    let n = params.n();
    let daft = Daft::new(params)?;
    let x_p = build_pilot_frame(scheme, params, grid, None)?;
    let s = daft.modulate(&x_p)?;
    let roots: Vec<C64> = (0..n).map(|j| cis_ratio(j as i128, n as i128)).collect();
    let snap = ZERO_SNAP * scheme.values.iter().map(|v| v.norm()).fold(0.0, f64::max);

    let mut matrix = CMatrix::zeros(rows.len(), grid.len());
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for (col, (l, q)) in grid.points().enumerate() {
        let step = q.rem_euclid(n as i64) as usize;
        for (t, z) in buf.iter_mut().enumerate() {
            *z = s[(t + n - l % n) % n] * roots[(t * step) % n];
        }
        daft.demodulate_in_place(&mut buf);
        for (dst, &k) in matrix.col_mut(col).iter_mut().zip(&rows) {
            let v = buf[k];
            *dst = if v.norm() < snap {
                C64::new(0.0, 0.0)
            } else {
                v
            };
        }
    }
    Ok(MeasurementOperator {
        matrix,
        rows,
        params: params.clone(),
        scheme: scheme.clone(),
        grid,
    })
}

impl MeasurementOperator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// The sorted observation set `𝒫`; row `i` of the matrix is index `rows[i]`.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn params(&self) -> &AfdmParams {
        &self.params
    }

    pub fn scheme(&self) -> &PilotScheme {
        &self.scheme
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `M_p α`.
    pub fn apply(&self, alpha: &[C64]) -> Result<Vec<C64>> {
        self.matrix.mul_vec(alpha)
    }

    /// `M_pᴴ y_p`.
    pub fn adjoint_apply(&self, y: &[C64]) -> Result<Vec<C64>> {
        self.matrix.adjoint_mul_vec(y)
    }

    /// Writes the operator in the plain-text exchange format:
    ///
    /// ```text
    /// afdm-cs-operator 1
    /// rows <R> cols <C>
    /// index <k_0> <k_1> ... <k_{R-1}>
    /// entries <E>
    /// <row> <col> <re> <im>      (E lines, non-zero entries only)
    /// ```
    ///
    /// Rows and columns are zero-based; `index` lists the DAFT index of each
    /// row; floats use the shortest representation that round-trips.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "afdm-cs-operator 1")?;
        writeln!(w, "rows {} cols {}", self.matrix.rows(), self.matrix.cols())?;
        let idx: Vec<String> = self.rows.iter().map(|k| k.to_string()).collect();
        writeln!(w, "index {}", idx.join(" "))?;
        let mut entries = Vec::new();
        for j in 0..self.matrix.cols() {
            for (i, z) in self.matrix.col(j).iter().enumerate() {
                if *z != C64::new(0.0, 0.0) {
                    entries.push((i, j, *z));
                }
            }
        }
        writeln!(w, "entries {}", entries.len())?;
        for (i, j, z) in entries {
            writeln!(w, "{i} {j} {} {}", z.re, z.im)?;
        }
        Ok(())
    }
}

/// Operator matrix and row index set read back from [`MeasurementOperator::write_text`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorText {
    pub matrix: CMatrix,
    pub rows: Vec<usize>,
}

pub fn read_operator_text<R: BufRead>(r: R) -> Result<OperatorText> {
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Parse(format!("missing {what} line")))
    };
    let bad = |msg: &str| Error::Parse(msg.to_string());
    if next("header")?.trim() != "afdm-cs-operator 1" {
        return Err(bad("unknown header"));
    }
    let dims = next("dimension")?;
    let d: Vec<&str> = dims.split_whitespace().collect();
    if d.len() != 4 || d[0] != "rows" || d[2] != "cols" {
        return Err(bad("malformed dimension line"));
    }
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
    let parse_f64 = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(e.to_string()));
    let (nr, nc) = (parse_usize(d[1])?, parse_usize(d[3])?);
    let idx_line = next("index")?;
    let mut it = idx_line.split_whitespace();
    if it.next() != Some("index") {
        return Err(bad("malformed index line"));
    }
    let rows = it.map(parse_usize).collect::<Result<Vec<_>>>()?;
    if rows.len() != nr {
        return Err(bad("index length does not match row count"));
    }
    let count_line = next("entries")?;
    let count = match count_line.split_whitespace().collect::<Vec<_>>()[..] {
        ["entries", c] => parse_usize(c)?,
        _ => return Err(bad("malformed entries line")),
    };
    let mut matrix = CMatrix::zeros(nr, nc);
    for _ in 0..count {
        let line = next("entry")?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad("malformed entry"));
        }
        let (i, j) = (parse_usize(f[0])?, parse_usize(f[1])?);
        if i >= nr || j >= nc {
            return Err(bad("entry outside the matrix"));
        }
        matrix[(i, j)] = C64::new(parse_f64(f[2])?, parse_f64(f[3])?);
    }
    Ok(OperatorText { matrix, rows })
}

/// Regrouping of the unknowns into the sets
/// `D_r = {(l, q) : (q - 2·c1·N·l) mod ((L-1)P + 1) = r}`, `r = 0..(L-1)P`.
///
/// Points of one set reach a pilot at offsets that agree modulo `(L-1)P + 1`,
/// so after permuting rows and columns by residue the measurement operator
/// is block diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalForm {
    grid: Grid,
    delay_shift: i64,
    modulus: usize,
    diagonal_sets: Vec<Vec<(usize, i64)>>,
    column_permutation: Vec<usize>,
    block_starts: Vec<usize>,
}

/// Hierarchical regrouping with the residue `(q + P·l) mod ((L-1)P + 1)`,
/// i.e. for a negative first chirp rate.
pub fn hierarchical_permutation(
    delay_taps: usize,
    max_doppler: usize,
    p: usize,
) -> HierarchicalForm {
    HierarchicalForm::with_shift(Grid::new(delay_taps, max_doppler), -(p as i64))
}

impl HierarchicalForm {
    /// Regrouping matching the chirp sign of `params`.
    pub fn for_params(grid: Grid, params: &AfdmParams) -> Self {
        Self::with_shift(grid, params.delay_shift())
    }

    /// `delay_shift` is `2·c1·N = ±P`.
    pub fn with_shift(grid: Grid, delay_shift: i64) -> Self {
        let p = delay_shift.unsigned_abs() as usize;
        let modulus = (grid.delay_taps.max(1) - 1) * p + 1;
        let mut diagonal_sets = vec![Vec::new(); modulus];
        let mut members = vec![Vec::new(); modulus];
        for (idx, (l, q)) in grid.points().enumerate() {
            let r = (q - delay_shift * l as i64).rem_euclid(modulus as i64) as usize;
            diagonal_sets[r].push((l, q));
            members[r].push(idx);
        }
        let mut block_starts = Vec::with_capacity(modulus + 1);
        let mut column_permutation = Vec::with_capacity(grid.len());
        for m in &members {
            block_starts.push(column_permutation.len());
            column_permutation.extend_from_slice(m);
        }
        block_starts.push(column_permutation.len());
        Self {
            grid,
            delay_shift,
            modulus,
            diagonal_sets,
            column_permutation,
            block_starts,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn delay_shift(&self) -> i64 {
        self.delay_shift
    }

    /// Number of blocks `(L-1)P + 1`; also the first-level sparsity `s̃_d`.
    pub fn block_count(&self) -> usize {
        self.modulus
    }

    pub fn diagonal_sets(&self) -> &[Vec<(usize, i64)>] {
        &self.diagonal_sets
    }

    /// `α̃[i] = α[column_permutation[i]]`.
    pub fn column_permutation(&self) -> &[usize] {
        &self.column_permutation
    }

    /// Start of block `r` in `α̃`; the last entry is `L(2Q+1)`.
    pub fn block_starts(&self) -> &[usize] {
        &self.block_starts
    }

    /// Nominal per-block width `2⌈Q/P⌉ + 1`.
    pub fn nominal_block_width(&self) -> usize {
        let p = self.delay_shift.unsigned_abs() as usize;
        if p == 0 {
            return self.grid.len();
        }
        2 * self.grid.max_doppler.div_ceil(p) + 1
    }

    /// Second-level sparsity `s̃_D = ⌈(1+ε) ln(LP)⌉`, at least one.
    pub fn block_sparsity(&self, epsilon: f64) -> usize {
        let lp = (self.grid.delay_taps * self.delay_shift.unsigned_abs() as usize).max(1) as f64;
        ceil_tolerant((1.0 + epsilon) * lp.ln()).max(1)
    }

    /// `α ↦ α̃`.
    pub fn permute(&self, alpha: &[C64]) -> Result<Vec<C64>> {
        if alpha.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                got: alpha.len(),
            });
        }
        Ok(self.column_permutation.iter().map(|&i| alpha[i]).collect())
    }

    /// `α̃ ↦ α`.
    pub fn unpermute(&self, alpha_tilde: &[C64]) -> Result<Vec<C64>> {
        if alpha_tilde.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                got: alpha_tilde.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); alpha_tilde.len()];
        for (&dst, &v) in self.column_permutation.iter().zip(alpha_tilde) {
            out[dst] = v;
        }
        Ok(out)
    }

    /// Number of non-zero entries of `α̃` in each block.
    pub fn block_support_sizes(&self, alpha: &[C64]) -> Result<Vec<usize>> {
        let t = self.permute(alpha)?;
        Ok(self
            .block_starts
            .windows(2)
            .map(|w| t[w[0]..w[1]].iter().filter(|z| z.norm() > 0.0).count())
            .collect())
    }

    /// Row regrouping of `y_p`: rows sorted by (offset residue, pilot, offset).
    ///
    /// Returns the permutation (`ỹ_p[i] = y_p[perm[i]]`), the block of each
    /// original row, and the pilot and offset each row was attributed to.
    pub fn row_grouping(&self, op: &MeasurementOperator) -> Result<RowGrouping> {
        self.check_matches(op)?;
        let params = op.params();
        let n = params.n();
        let (o_min, o_max) = offset_range(params, self.grid);
        let positions = &op.scheme().positions;
        let mut attributed = Vec::with_capacity(op.rows().len());
        for &k in op.rows() {
            let hit = positions.iter().enumerate().find_map(|(p, &m)| {
                let o = (k as i64 - m as i64 - o_min).rem_euclid(n as i64) + o_min;
                (o <= o_max).then_some((p, o))
            });
            let (p, o) = hit.ok_or(Error::IndexOutOfRange { index: k, len: n })?;
            attributed.push((o.rem_euclid(self.modulus as i64) as usize, p, o));
        }
        let mut perm: Vec<usize> = (0..attributed.len()).collect();
        perm.sort_by_key(|&i| attributed[i]);
        Ok(RowGrouping {
            block_of_row: attributed.iter().map(|a| a.0).collect(),
            pilot_of_row: attributed.iter().map(|a| a.1).collect(),
            offset_of_row: attributed.iter().map(|a| a.2).collect(),
            permutation: perm,
        })
    }

    fn check_matches(&self, op: &MeasurementOperator) -> Result<()> {
        if op.grid() != self.grid || op.params().delay_shift() != self.delay_shift {
            return Err(Error::invalid(
                "hierarchical form was built for a different grid or chirp rate",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowGrouping {
    pub permutation: Vec<usize>,
    pub block_of_row: Vec<usize>,
    pub pilot_of_row: Vec<usize>,
    pub offset_of_row: Vec<i64>,
}

/// How far the permuted operator is from `I ⊗ (diag(p) F Ψ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerReport {
    /// Largest entrywise distance between `M_p` and the block model
    /// `diag(row phases · p) · F_𝒫 · Ψ`, where `F_𝒫[p, l] = e^{-i2π m_p l/N}`
    /// and `Ψ = diag(e^{i2π c1 l²})`, placed on the block diagonal.
    pub max_block_deviation: f64,
    /// Largest modulus found outside the block diagonal.
    pub off_block_max: f64,
    /// Fraction of `‖M_p‖_F²` outside the block diagonal.
    pub off_block_mass: f64,
    /// Largest `| |M_p[i,j]| - |p_p| |` over structural non-zeros.
    pub max_modulus_deviation: f64,
    /// Pilot values read off the operator (`p_p` sits at row `m_p`, column `(0,0)`).
    pub pilot_factor: Vec<C64>,
    /// `(rows, cols)` of every block.
    pub block_shapes: Vec<(usize, usize)>,
    /// Every block is `N_p × |D|` with the same width.
    pub exact_tiling: bool,
    /// First block sampled per pilot: entry `(p, j)` is the response of pilot
    /// `p` to the `j`-th member of `D_0`.
    pub block_matrix: CMatrix,
}

/// Compares a measurement operator with its hierarchical block model.
pub fn kronecker_diagnostic(
    op: &MeasurementOperator,
    hf: &HierarchicalForm,
) -> Result<KroneckerReport> {
    let rows = hf.row_grouping(op)?;
    let params = op.params();
    let grid = hf.grid();
    let n = params.n() as i128;
    let scheme = op.scheme();
    let m = op.matrix();

    let mut col_block = vec![0usize; grid.len()];
    for (b, w) in hf.block_starts().windows(2).enumerate() {
        for &c in &hf.column_permutation()[w[0]..w[1]] {
            col_block[c] = b;
        }
    }

    // Closed-form response of pilot `p` to path (l, q) at row index `k`.
    let model_entry = |p: usize, l: usize, k: usize| -> C64 {
        let mp = scheme.positions[p] as i128;
        let c2_phase = cis_turns(params.c2() * ((mp * mp) as f64 - (k as f64) * (k as f64)));
        let fourier = cis_ratio(-(mp * l as i128), n);
        let psi = cis_ratio(
            params.delay_shift() as i128 * (l as i128) * (l as i128),
            2 * n,
        );
        scheme.values[p] * c2_phase * fourier * psi
    };

    let mut max_dev: f64 = 0.0;
    let mut off_max: f64 = 0.0;
    let mut off_mass = 0.0;
    let mut total_mass = 0.0;
    let mut max_mod_dev: f64 = 0.0;
    for (j, (l, q)) in grid.points().enumerate() {
        let o = params.path_offset(l, q);
        let mut model = vec![C64::new(0.0, 0.0); m.rows()];
        let mut owner = vec![None; m.rows()];
        for p in 0..scheme.n_pilots() {
            let k = wrap(scheme.positions[p] as i64 + o, params.n());
            if let Ok(i) = op.rows().binary_search(&k) {
                model[i] += model_entry(p, l, k);
                owner[i] = Some(p);
            }
        }
        for (i, &z) in m.col(j).iter().enumerate() {
            total_mass += z.norm_sqr();
            if rows.block_of_row[i] != col_block[j] {
                off_max = off_max.max(z.norm());
                off_mass += z.norm_sqr();
            }
            max_dev = max_dev.max((z - model[i]).norm());
            if let Some(p) = owner[i] {
                max_mod_dev = max_mod_dev.max((z.norm() - scheme.values[p].norm()).abs());
            }
        }
    }

    let mut block_rows = vec![0usize; hf.block_count()];
    for &b in &rows.block_of_row {
        block_rows[b] += 1;
    }
    let block_shapes: Vec<(usize, usize)> = block_rows
        .iter()
        .zip(hf.block_starts().windows(2))
        .map(|(&r, w)| (r, w[1] - w[0]))
        .collect();
    let np = scheme.n_pilots();
    let exact_tiling = block_shapes
        .iter()
        .all(|&(r, c)| r == np && c == block_shapes[0].1);

    let col00 = grid.index(0, 0);
    let pilot_factor = scheme
        .positions
        .iter()
        .map(|&mp| {
            op.rows()
                .binary_search(&mp)
                .map(|i| m[(i, col00)])
                .unwrap_or(C64::new(0.0, 0.0))
        })
        .collect();

    let d0 = &hf.column_permutation()[hf.block_starts()[0]..hf.block_starts()[1]];
    let block_matrix = CMatrix::from_fn(np, d0.len(), |p, jj| {
        let (l, q) = grid.grid_point(d0[jj]);
        let k = wrap(
            scheme.positions[p] as i64 + params.path_offset(l, q),
            params.n(),
        );
        op.rows()
            .binary_search(&k)
            .map(|i| m[(i, d0[jj])])
            .unwrap_or(C64::new(0.0, 0.0))
    });

    Ok(KroneckerReport {
        max_block_deviation: max_dev,
        off_block_max: off_max,
        off_block_mass: if total_mass > 0.0 {
            off_mass / total_mass
        } else {
            0.0
        },
        max_modulus_deviation: max_mod_dev,
        pilot_factor,
        block_shapes,
        exact_tiling,
        block_matrix,
    })
}
