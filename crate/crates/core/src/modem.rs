//! Bit/symbol mapping and OFDM frame assembly.
//!
//! A frame is one block of symbols inside a coherence interval: symbol 0 is
//! the pilot symbol (block-type fills every subcarrier with a known value,
//! comb-type fills an evenly spaced subset and leaves the rest silent),
//! symbols 1.. carry payload on the layout's data indices. The time-domain
//! signal is the per-symbol unitary IDFT with a cyclic prefix of
//! `round(cp_fraction * n_subcarriers)` samples copied from the tail.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{dft, idft, CMat, RngStream};

/// M-QAM constellation with unit average energy.
///
/// Square orders (4, 16) carry Gray labels per axis; 32 uses the cross
/// constellation obtained by folding the outer columns of the 8x4
/// rectangle into the top and bottom arms, which keeps the labeling
/// quasi-Gray. `alpha`/`beta` are the nearest-neighbor constants of the
/// union-bound BER approximation, computed from the realized geometry.
#[derive(Debug, Clone)]
pub struct QamConstellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
    alpha: f64,
    beta: f64,
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        let points = match order {
            4 => square_gray(2),
            16 => square_gray(4),
            32 => cross32(),
            _ => return Err(Error::UnsupportedModulation(order)),
        };
        let bits_per_symbol = order.trailing_zeros() as usize;
        // Normalize to unit mean energy.
        let energy: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
        let scale = 1.0 / energy.sqrt();
        let points: Vec<Complex64> = points.into_iter().map(|p| p * scale).collect();

        // Nearest-neighbor statistics for the theoretical BER constants.
        let mut d_min = f64::INFINITY;
        for i in 0..order {
            for j in i + 1..order {
                d_min = d_min.min((points[i] - points[j]).norm());
            }
        }
        let mut neighbor_pairs = 0usize;
        for i in 0..order {
            for j in 0..order {
                if i != j && ((points[i] - points[j]).norm() - d_min).abs() < 1e-9 * d_min {
                    neighbor_pairs += 1;
                }
            }
        }
        let avg_neighbors = neighbor_pairs as f64 / order as f64;
        let alpha = avg_neighbors / bits_per_symbol as f64;
        let beta = d_min * d_min / 2.0;

        Ok(Self {
            order,
            bits_per_symbol,
            points,
            alpha,
            beta,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Average nearest-neighbor count per transmitted bit.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Squared minimum distance over twice the (unit) average energy.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn point_for_label(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// CSV dump of the point table for inspection.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,bits,re,im\n");
        for (label, p) in self.points.iter().enumerate() {
            let bits: String = (0..self.bits_per_symbol)
                .map(|b| {
                    if label >> (self.bits_per_symbol - 1 - b) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            out.push_str(&format!("{label},{bits},{},{}\n", p.re, p.im));
        }
        out
    }
}

fn binary_to_gray(x: usize) -> usize {
    x ^ (x >> 1)
}

/// Square QAM with per-axis Gray labels; `l` points per axis.
fn square_gray(l: usize) -> Vec<Complex64> {
    let bits_axis = l.trailing_zeros() as usize;
    let m = l * l;
    let mut points = vec![Complex64::new(0.0, 0.0); m];
    for ix in 0..l {
        for iy in 0..l {
            let label = (binary_to_gray(ix) << bits_axis) | binary_to_gray(iy);
            let x = 2.0 * ix as f64 - (l as f64 - 1.0);
            let y = 2.0 * iy as f64 - (l as f64 - 1.0);
            points[label] = Complex64::new(x, y);
        }
    }
    points
}

/// 32-point cross: label the 8x4 rectangle with Gray axes, then fold the
/// |x| = 7 columns into the missing (|x| <= 3, |y| = 5) arm positions.
fn cross32() -> Vec<Complex64> {
    let mut points = vec![Complex64::new(0.0, 0.0); 32];
    for ix in 0..8 {
        for iy in 0..4 {
            let label = (binary_to_gray(ix) << 2) | binary_to_gray(iy);
            let x = 2.0 * ix as f64 - 7.0;
            let y = 2.0 * iy as f64 - 3.0;
            // (+-7, +-|y|) folds onto (+-|y|, +-5).
            let (x, y) = if x.abs() > 5.0 {
                (x.signum() * y.abs(), y.signum() * 5.0)
            } else {
                (x, y)
            };
            points[label] = Complex64::new(x, y);
        }
    }
    points
}

/// Map a bit string (values 0/1) onto constellation symbols, MSB first.
pub fn map_bits(bits: &[u8], c: &QamConstellation) -> Result<Vec<Complex64>> {
    if bits.len() % c.bits_per_symbol != 0 {
        return Err(Error::DimMismatch(format!(
            "{} bits not divisible by {} bits/symbol",
            bits.len(),
            c.bits_per_symbol
        )));
    }
    Ok(bits
        .chunks_exact(c.bits_per_symbol)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            c.points[label]
        })
        .collect())
}

/// Hard nearest-neighbor decision per symbol; exact ties resolve to the
/// lowest constellation index.
pub fn demap_symbols(symbols: &[Complex64], c: &QamConstellation) -> Vec<u8> {
    let mut bits = Vec::with_capacity(symbols.len() * c.bits_per_symbol);
    for &y in symbols {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (label, &p) in c.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        for b in (0..c.bits_per_symbol).rev() {
            bits.push(((best >> b) & 1) as u8);
        }
    }
    bits
}

/// Pilot arrangement within the pilot symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotArrangement {
    /// Every subcarrier of the pilot symbol carries a pilot.
    Block,
    /// Evenly spaced pilot subcarriers; the rest of the pilot symbol is
    /// silent.
    Comb,
}

/// Which subcarriers carry pilots and the known pilot values (unit-modulus
/// QPSK drawn from a seeded stream, so both ends can regenerate them).
#[derive(Debug, Clone)]
pub struct PilotPattern {
    arrangement: PilotArrangement,
    n_subcarriers: usize,
    pilot_indices: Vec<usize>,
    data_indices: Vec<usize>,
    pilot_values: Vec<Complex64>,
}

impl PilotPattern {
    pub fn block(n_subcarriers: usize, rng: &mut RngStream) -> Self {
        Self::build(PilotArrangement::Block, n_subcarriers, (0..n_subcarriers).collect(), rng)
    }

    /// Pilots on an explicit subcarrier set (a user's allocated block in
    /// the multi-user overlay).
    pub fn subset(n_subcarriers: usize, mut indices: Vec<usize>, rng: &mut RngStream) -> Self {
        indices.sort_unstable();
        Self::build(PilotArrangement::Comb, n_subcarriers, indices, rng)
    }

    /// `n_pilots` evenly spaced pilots starting at subcarrier 0.
    pub fn comb(n_subcarriers: usize, n_pilots: usize, rng: &mut RngStream) -> Result<Self> {
        if n_pilots == 0 || n_pilots > n_subcarriers || n_subcarriers % n_pilots != 0 {
            return Err(Error::Config(format!(
                "{n_pilots} pilots do not evenly divide {n_subcarriers} subcarriers"
            )));
        }
        let stride = n_subcarriers / n_pilots;
        let indices = (0..n_pilots).map(|i| i * stride).collect();
        Ok(Self::build(PilotArrangement::Comb, n_subcarriers, indices, rng))
    }

    fn build(
        arrangement: PilotArrangement,
        n_subcarriers: usize,
        pilot_indices: Vec<usize>,
        rng: &mut RngStream,
    ) -> Self {
        let qpsk = [
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
            Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
            Complex64::new(std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
            Complex64::new(-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
        ];
        let pilot_values = pilot_indices
            .iter()
            .map(|_| qpsk[rng.below(4) as usize])
            .collect();
        let data_indices = (0..n_subcarriers)
            .filter(|k| !pilot_indices.contains(k))
            .collect();
        Self {
            arrangement,
            n_subcarriers,
            pilot_indices,
            data_indices,
            pilot_values,
        }
    }

    pub fn arrangement(&self) -> PilotArrangement {
        self.arrangement
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn pilot_indices(&self) -> &[usize] {
        &self.pilot_indices
    }

    /// Complement of the pilot set within the pilot symbol.
    pub fn data_indices(&self) -> &[usize] {
        &self.data_indices
    }

    pub fn pilot_values(&self) -> &[Complex64] {
        &self.pilot_values
    }

    /// Test-only hook for fabricating degenerate pilot values.
    #[cfg(test)]
    pub(crate) fn force_pilot_value(&mut self, pos: usize, v: Complex64) {
        self.pilot_values[pos] = v;
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("subcarrier,role,re,im\n");
        let mut pil = self.pilot_indices.iter().zip(&self.pilot_values).peekable();
        for k in 0..self.n_subcarriers {
            if let Some(&(&idx, v)) = pil.peek() {
                if idx == k {
                    out.push_str(&format!("{k},pilot,{},{}\n", v.re, v.im));
                    pil.next();
                    continue;
                }
            }
            out.push_str(&format!("{k},data,0,0\n"));
        }
        out
    }
}

/// Geometry of a frame: how many data symbols follow the pilot symbol,
/// which subcarriers carry payload there, the CP fraction and the
/// per-subcarrier transmit amplitude sqrt(P_T / N_c_data).
#[derive(Debug, Clone)]
pub struct FrameLayout {
    pub n_subcarriers: usize,
    pub cp_fraction: f64,
    pub data_symbols: usize,
    pub data_indices: Vec<usize>,
    pub amplitude: f64,
}

impl FrameLayout {
    /// Full-band single-link layout: every subcarrier of every data symbol
    /// carries payload.
    pub fn full_band(n_subcarriers: usize, cp_fraction: f64, data_symbols: usize, total_power: f64) -> Self {
        let amplitude = (total_power / n_subcarriers as f64).sqrt();
        Self {
            n_subcarriers,
            cp_fraction,
            data_symbols,
            data_indices: (0..n_subcarriers).collect(),
            amplitude,
        }
    }

    pub fn cp_len(&self) -> usize {
        (self.cp_fraction * self.n_subcarriers as f64).round() as usize
    }

    pub fn payload_bits(&self, c: &QamConstellation) -> usize {
        self.data_symbols * self.data_indices.len() * c.bits_per_symbol()
    }

    /// Samples in the time-domain frame: (CP + N) per OFDM symbol.
    pub fn samples(&self) -> usize {
        (1 + self.data_symbols) * (self.cp_len() + self.n_subcarriers)
    }
}

/// One coherence-interval transmission unit.
#[derive(Debug, Clone)]
pub struct OfdmFrame {
    grid: CMat, // (1 + data_symbols) x n_subcarriers, unit-energy entries
    layout: FrameLayout,
    payload: Vec<u8>,
}

impl OfdmFrame {
    pub fn grid(&self) -> &CMat {
        &self.grid
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }
}

/// Assemble pilot + data symbols from payload bits.
pub fn build_frame(
    bits: &[u8],
    pattern: &PilotPattern,
    c: &QamConstellation,
    layout: &FrameLayout,
) -> Result<OfdmFrame> {
    let want = layout.payload_bits(c);
    if bits.len() != want {
        return Err(Error::BitCount {
            got: bits.len(),
            want,
        });
    }
    let n = layout.n_subcarriers;
    if pattern.n_subcarriers != n {
        return Err(Error::DimMismatch(
            "pilot pattern width differs from frame width".into(),
        ));
    }
    if layout.cp_len() > n {
        return Err(Error::CpTooLong {
            cp: layout.cp_len(),
            symbol: n,
        });
    }
    let mut grid = CMat::zeros(1 + layout.data_symbols, n);
    for (&k, &v) in pattern.pilot_indices.iter().zip(&pattern.pilot_values) {
        grid[(0, k)] = v;
    }
    let symbols = map_bits(bits, c)?;
    let per_symbol = layout.data_indices.len();
    for s in 0..layout.data_symbols {
        for (pos, &k) in layout.data_indices.iter().enumerate() {
            grid[(1 + s, k)] = symbols[s * per_symbol + pos];
        }
    }
    Ok(OfdmFrame {
        grid,
        layout: layout.clone(),
        payload: bits.to_vec(),
    })
}

/// Lower the rows of a frequency grid into the time domain: per row, the
/// unitary IDFT scaled by `amplitude`, with a `cp_len`-sample cyclic prefix
/// prepended, all rows concatenated.
pub fn symbols_to_time(grid: &CMat, cp_len: usize, amplitude: f64) -> Result<Vec<Complex64>> {
    let n = grid.cols();
    if cp_len > n {
        return Err(Error::CpTooLong {
            cp: cp_len,
            symbol: n,
        });
    }
    let mut out = Vec::with_capacity(grid.rows() * (cp_len + n));
    for s in 0..grid.rows() {
        let spectrum: Vec<Complex64> = grid.row(s).iter().map(|&v| v * amplitude).collect();
        let time = idft(&spectrum)?;
        out.extend_from_slice(&time[n - cp_len..]);
        out.extend_from_slice(&time);
    }
    Ok(out)
}

/// Invert `symbols_to_time`: split per symbol, drop the CP, DFT, undo the
/// amplitude. Extra trailing samples (a channel's convolution tail) are
/// ignored.
pub fn time_to_symbols(
    samples: &[Complex64],
    n_subcarriers: usize,
    cp_len: usize,
    symbols: usize,
    amplitude: f64,
) -> Result<CMat> {
    let span = cp_len + n_subcarriers;
    if samples.len() < symbols * span {
        return Err(Error::DimMismatch(format!(
            "{} samples cannot hold {symbols} symbols of {span}",
            samples.len()
        )));
    }
    let inv_amp = 1.0 / amplitude;
    let mut grid = CMat::zeros(symbols, n_subcarriers);
    for s in 0..symbols {
        let body = &samples[s * span + cp_len..(s + 1) * span];
        let spectrum = dft(body)?;
        for (k, &v) in spectrum.iter().enumerate() {
            grid[(s, k)] = v * inv_amp;
        }
    }
    Ok(grid)
}

/// Per-symbol unitary IDFT with the cyclic prefix prepended, concatenated
/// over the frame, scaled to the configured transmit amplitude.
pub fn to_time_domain(frame: &OfdmFrame) -> Result<Vec<Complex64>> {
    symbols_to_time(&frame.grid, frame.layout.cp_len(), frame.layout.amplitude)
}

/// Invert `to_time_domain`. Returns the received grid, one row per OFDM
/// symbol.
pub fn strip_cp_and_dft(samples: &[Complex64], layout: &FrameLayout) -> Result<CMat> {
    time_to_symbols(
        samples,
        layout.n_subcarriers,
        layout.cp_len(),
        1 + layout.data_symbols,
        layout.amplitude,
    )
}
