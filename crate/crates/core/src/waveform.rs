//! Preamble/data symbol frames, precoding and OFDM (de)modulation.

use nalgebra::Complex;
use rand::Rng;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{orthogonal_mapping, CMat};
use crate::scalar::{count, creal, czero, lit, Scalar};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    /// Orthogonal mapping matrix, `S_n S_n^† = N_tx I`.
    Preamble,
    /// QPSK data and radar streams.
    Data,
}

impl FrameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::Preamble => "preamble",
            FrameKind::Data => "data",
        }
    }
}

/// Per-subcarrier symbol matrices; `symbols[n]` is `N_tx × N_sym`
/// (stream × OFDM symbol). Storage index `n` maps to subcarrier `n - N_sc/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame<T: Scalar> {
    pub symbols: Vec<CMat<T>>,
    pub kind: FrameKind,
}

impl<T: Scalar> SymbolFrame<T> {
    pub fn num_subcarriers(&self) -> usize {
        self.symbols.len()
    }

    pub fn num_streams(&self) -> usize {
        self.symbols.first().map_or(0, |m| m.nrows())
    }

    pub fn num_symbols(&self) -> usize {
        self.symbols.first().map_or(0, |m| m.ncols())
    }
}

/// One `N_tx × N_tx` precoding matrix per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet<T: Scalar> {
    pub matrices: Vec<CMat<T>>,
}

impl<T: Scalar> PrecoderSet<T> {
    /// `F_n = scale · I` on every subcarrier.
    pub fn scaled_identity(num_subcarriers: usize, num_tx: usize, scale: T) -> Self {
        let m = CMat::<T>::identity(num_tx, num_tx).map(|z| z.scale(scale));
        PrecoderSet {
            matrices: vec![m; num_subcarriers],
        }
    }

    /// The same matrix on every subcarrier.
    pub fn replicated(num_subcarriers: usize, f: CMat<T>) -> Self {
        PrecoderSet {
            matrices: vec![f; num_subcarriers],
        }
    }

    /// `tr(F_n F_n^†)` per subcarrier.
    pub fn powers(&self) -> Vec<T> {
        self.matrices
            .iter()
            .map(|f| f.iter().fold(T::zero(), |a, z| a + z.norm_sqr()))
            .collect()
    }

    /// Transmit covariance `R_F,n = F_n F_n^†`.
    pub fn covariance(&self, n: usize) -> CMat<T> {
        let f = &self.matrices[n];
        f * f.adjoint()
    }
}

/// Baseband samples, one row per transmit antenna, sampled at the bandwidth `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal<T: Scalar> {
    pub samples: CMat<T>,
    pub sample_rate_hz: f64,
    pub fft_len: usize,
    pub cp_len: usize,
}

impl<T: Scalar> TimeSignal<T> {
    pub fn symbol_len(&self) -> usize {
        self.fft_len + self.cp_len
    }

    pub fn num_symbols(&self) -> usize {
        self.samples.ncols() / self.symbol_len()
    }
}

/// Orthogonal preamble with its omnidirectional precoder `√(P_tx/N_tx)·I`.
pub fn make_preamble<T: Scalar>(s: &Scenario) -> (SymbolFrame<T>, PrecoderSet<T>) {
    let ntx = s.array.num_tx;
    let nsc = s.ofdm.num_subcarriers;
    let mapping = orthogonal_mapping::<T>(ntx);
    let frame = SymbolFrame {
        symbols: vec![mapping; nsc],
        kind: FrameKind::Preamble,
    };
    let scale = lit::<T>(s.radio.total_tx_power_w / ntx as f64).sqrt();
    (frame, PrecoderSet::scaled_identity(nsc, ntx, scale))
}

/// Uniform QPSK symbols `(±1 ± j)/√2` on every stream, subcarrier and symbol.
pub fn make_data_frame<T: Scalar, R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> SymbolFrame<T> {
    let ntx = s.array.num_tx;
    let nsym = s.ofdm.num_symbols;
    let a = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
    let symbols = (0..s.ofdm.num_subcarriers)
        .map(|_| {
            CMat::from_fn(ntx, nsym, |_, _| {
                let bits: u8 = rng.random_range(0..4);
                let re = if bits & 1 == 0 { a } else { -a };
                let im = if bits & 2 == 0 { a } else { -a };
                Complex::new(re, im)
            })
        })
        .collect();
    SymbolFrame {
        symbols,
        kind: FrameKind::Data,
    }
}

/// `X_n = F_n S_n` per subcarrier.
pub fn precode<T: Scalar>(frame: &SymbolFrame<T>, f: &PrecoderSet<T>) -> Result<SymbolFrame<T>> {
    if frame.symbols.len() != f.matrices.len() {
        return Err(Error::Dimension(format!(
            "frame has {} subcarriers, precoder set has {}",
            frame.symbols.len(),
            f.matrices.len()
        )));
    }
    let symbols = frame
        .symbols
        .iter()
        .zip(&f.matrices)
        .enumerate()
        .map(|(n, (s, fm))| {
            if fm.ncols() != s.nrows() {
                Err(Error::Dimension(format!(
                    "subcarrier {n}: precoder is {}x{}, symbols are {}x{}",
                    fm.nrows(),
                    fm.ncols(),
                    s.nrows(),
                    s.ncols()
                )))
            } else {
                Ok(fm * s)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SymbolFrame {
        symbols,
        kind: frame.kind,
    })
}

/// FFT bin holding storage index `n` (subcarrier offset `n - N/2`).
fn fft_bin(n: usize, nsc: usize) -> usize {
    (n + nsc - nsc / 2) % nsc
}

/// Precodes `frame` with `f` and synthesizes the CP-OFDM baseband per antenna.
///
/// Each symbol is the inverse DFT of its subcarrier vector scaled by
/// `1/√N_sc`, with the last `N_cp` samples prepended.
pub fn ofdm_modulate<T: Scalar>(
    frame: &SymbolFrame<T>,
    f: &PrecoderSet<T>,
    s: &Scenario,
) -> Result<TimeSignal<T>> {
    let x = precode(frame, f)?;
    let nsc = s.ofdm.num_subcarriers;
    if x.num_subcarriers() != nsc {
        return Err(Error::Dimension(format!(
            "frame has {} subcarriers, scenario has {nsc}",
            x.num_subcarriers()
        )));
    }
    let ncp = s.ofdm.cyclic_prefix_samples();
    let nant = x.num_streams();
    let nsym = x.num_symbols();
    let sym_len = nsc + ncp;
    let ifft = FftPlanner::<T>::new().plan_fft(nsc, FftDirection::Inverse);
    let norm = T::one() / count::<T>(nsc).sqrt();
    let mut samples = CMat::from_element(nant, nsym * sym_len, czero());
    let mut buf = vec![czero::<T>(); nsc];
    for l in 0..nant {
        for m in 0..nsym {
            for n in 0..nsc {
                buf[fft_bin(n, nsc)] = x.symbols[n][(l, m)];
            }
            ifft.process(&mut buf);
            let base = m * sym_len;
            for i in 0..sym_len {
                // Cyclic prefix: sample index i - N_cp taken modulo the DFT length.
                let src = (i + nsc * (ncp / nsc + 1) - ncp) % nsc;
                samples[(l, base + i)] = buf[src].scale(norm);
            }
        }
    }
    Ok(TimeSignal {
        samples,
        sample_rate_hz: s.ofdm.bandwidth_hz(),
        fft_len: nsc,
        cp_len: ncp,
    })
}

/// Removes the cyclic prefix and applies the `1/√N_sc`-normalized forward DFT.
/// Returns one `N_ant × N_sym` matrix per subcarrier storage index.
pub fn ofdm_demodulate<T: Scalar>(sig: &TimeSignal<T>) -> Vec<CMat<T>> {
    let nsc = sig.fft_len;
    let nant = sig.samples.nrows();
    let nsym = sig.num_symbols();
    let fft = FftPlanner::<T>::new().plan_fft(nsc, FftDirection::Forward);
    let norm = T::one() / count::<T>(nsc).sqrt();
    let mut out = vec![CMat::from_element(nant, nsym, czero()); nsc];
    let mut buf = vec![czero::<T>(); nsc];
    for l in 0..nant {
        for m in 0..nsym {
            let base = m * sig.symbol_len() + sig.cp_len;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = sig.samples[(l, base + i)];
            }
            fft.process(&mut buf);
            for (n, o) in out.iter_mut().enumerate() {
                o[(l, m)] = buf[fft_bin(n, nsc)].scale(norm);
            }
        }
    }
    out
}

/// Average transmit power summed over antennas (W).
pub fn average_power<T: Scalar>(sig: &TimeSignal<T>) -> T {
    let total = sig.samples.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    total / count::<T>(sig.samples.ncols())
}

/// Unit-magnitude tone helper used by tests and examples.
pub fn single_tone<T: Scalar>(nsc: usize, ntx: usize, n: usize) -> SymbolFrame<T> {
    let mut symbols = vec![CMat::from_element(ntx, 1, czero()); nsc];
    for l in 0..ntx {
        symbols[n][(l, 0)] = creal(T::one());
    }
    SymbolFrame {
        symbols,
        kind: FrameKind::Data,
    }
}
