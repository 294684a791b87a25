//! Range-angle imaging on the MIMO virtual array.
//!
//! Pipeline: per-subcarrier channel estimation from known transmit symbols,
//! stacking into the `N_sc × N_virt` observation, removal of the
//! frequency-space coupling by per-subcarrier resampling of the spatial axis,
//! then a windowed, zero-padded 2D transform, peak picking and sub-bin
//! refinement.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use rustfft::{FftDirection, FftPlanner};

use crate::channel::ReceivedRadarFrame;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, psd_pinv_sqrt, CMat};
use crate::scalar::{arg, cis, count, czero, lit, modulus, to_f64, Scalar};
use crate::scenario::Scenario;
use crate::waveform::{FrameKind, SymbolFrame};

/// Gram matrices with a larger condition number are rejected by the LS estimator.
pub const MAX_GRAM_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    /// `Ĥ = Y X^†(X X^†)^{-1}`; requires a well-conditioned (orthogonal) frame.
    LeastSquares,
    /// `Ĥ = Y X^†(X X^†)^{-1/2}`; keeps the noise white for precoded frames.
    Whitened,
}

impl EstimatorMode {
    pub fn for_kind(kind: FrameKind) -> Self {
        match kind {
            FrameKind::Preamble => EstimatorMode::LeastSquares,
            FrameKind::Data => EstimatorMode::Whitened,
        }
    }
}

/// Per-subcarrier radar channel estimates `Ĥ_n` (`N_rx × N_tx`).
#[derive(Debug, Clone, PartialEq)]
pub struct RadarChannelEstimate<T: Scalar> {
    pub matrices: Vec<CMat<T>>,
    pub mode: EstimatorMode,
    /// Amplitude scale the estimator applies to a unit channel: 1 for LS,
    /// `sqrt(tr(X X^†)/N_tx)` averaged over subcarriers for the whitened form.
    pub amplitude_gain: T,
}

/// Estimates `Ĥ_n` from received and (precoded) transmitted symbols.
pub fn estimate_radar_channel<T: Scalar>(
    y: &ReceivedRadarFrame<T>,
    x: &SymbolFrame<T>,
    mode: EstimatorMode,
) -> Result<RadarChannelEstimate<T>> {
    if y.data.len() != x.symbols.len() {
        return Err(Error::Dimension(format!(
            "received frame has {} subcarriers, transmitted frame has {}",
            y.data.len(),
            x.symbols.len()
        )));
    }
    let mut matrices = Vec::with_capacity(y.data.len());
    let mut gain_acc = T::zero();
    for (n, (yn, xn)) in y.data.iter().zip(&x.symbols).enumerate() {
        if yn.ncols() != xn.ncols() {
            return Err(Error::Dimension(format!(
                "subcarrier {n}: {} received vs {} transmitted symbols",
                yn.ncols(),
                xn.ncols()
            )));
        }
        let gram = xn * xn.adjoint();
        let h = match mode {
            EstimatorMode::LeastSquares => {
                let (ev, _) = hermitian_eig(&gram);
                let hi = ev.first().copied().unwrap_or(T::zero());
                let lo = ev.last().copied().unwrap_or(T::zero());
                let condition = if lo > T::zero() {
                    to_f64(hi / lo)
                } else {
                    f64::INFINITY
                };
                if !(condition <= MAX_GRAM_CONDITION) {
                    return Err(Error::IllConditioned {
                        subcarrier: n,
                        condition,
                    });
                }
                let inv = gram.try_inverse().ok_or(Error::IllConditioned {
                    subcarrier: n,
                    condition,
                })?;
                yn * xn.adjoint() * inv
            }
            EstimatorMode::Whitened => {
                let tr = gram.trace().re;
                if !(tr > T::zero()) {
                    return Err(Error::IllConditioned {
                        subcarrier: n,
                        condition: f64::INFINITY,
                    });
                }
                gain_acc += (tr / count::<T>(xn.nrows())).sqrt();
                yn * xn.adjoint() * psd_pinv_sqrt(&gram, lit(1e-10))
            }
        };
        matrices.push(h);
    }
    let amplitude_gain = match mode {
        EstimatorMode::LeastSquares => T::one(),
        EstimatorMode::Whitened => gain_acc / count::<T>(matrices.len().max(1)),
    };
    Ok(RadarChannelEstimate {
        matrices,
        mode,
        amplitude_gain,
    })
}

/// Observation matrix with one row per subcarrier and one column per virtual element.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarObservation<T: Scalar> {
    pub data: CMat<T>,
    pub decoupled: bool,
    pub amplitude_gain: T,
}

/// Row `n` is `vec(Ĥ_n)^T` with the transmit index varying fastest
/// (virtual element `m = k·N_tx + l`), matching `a_rx ⊗ a_tx`.
pub fn build_observation<T: Scalar>(est: &RadarChannelEstimate<T>) -> RadarObservation<T> {
    let nsc = est.matrices.len();
    let (nrx, ntx) = est.matrices.first().map_or((0, 0), |m| m.shape());
    let data = CMat::from_fn(nsc, nrx * ntx, |n, m| est.matrices[n][(m / ntx, m % ntx)]);
    RadarObservation {
        data,
        decoupled: false,
        amplitude_gain: est.amplitude_gain,
    }
}

/// Spatial-axis interpolator used to remove the frequency-space coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interpolator {
    /// Kaiser-windowed sinc with `taps` support points.
    WindowedSinc { taps: usize, beta: f64 },
    /// Natural cubic spline through every sample.
    CubicSpline,
}

impl Default for Interpolator {
    fn default() -> Self {
        Interpolator::WindowedSinc { taps: 8, beta: 5.0 }
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..50 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn kaiser(x: f64, beta: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        bessel_i0(beta * (1.0 - x * x).sqrt()) / bessel_i0(beta)
    }
}

/// Samples `row` at fractional position `t` with a windowed-sinc kernel
/// centred on the nearest sample. Near the ends the support slides inward so
/// it never leaves the row; the window widens to cover the shifted support.
fn sinc_sample<T: Scalar>(row: &[Complex<T>], t: f64, taps: usize, beta: f64) -> Complex<T> {
    let n = row.len();
    let half = (taps / 2).max(1).min((n.saturating_sub(1)) / 2) as i64;
    let span = 2 * half;
    let lo = (t.round() as i64 - half).clamp(0, (n as i64 - 1 - span).max(0));
    let hi = (lo + span).min(n as i64 - 1);
    let reach = (t - lo as f64).abs().max((hi as f64 - t).abs());
    let width = (half as f64 + 1.0).max(reach + 1.0);
    let mut acc = czero::<T>();
    for j in lo..=hi {
        let d = t - j as f64;
        let w = sinc(d) * kaiser(d / width, beta);
        acc += row[j as usize].scale(lit(w));
    }
    acc
}

/// Second derivatives of a natural cubic spline through unit-spaced samples.
fn spline_moments(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Tridiagonal system 1·M[i-1] + 4·M[i] + 1·M[i+1] = 6·(y[i+1] - 2y[i] + y[i-1]).
    let k = n - 2;
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for i in 0..k {
        let rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
        if i == 0 {
            c[i] = 1.0 / 4.0;
            d[i] = rhs / 4.0;
        } else {
            let denom = 4.0 - c[i - 1];
            c[i] = 1.0 / denom;
            d[i] = (rhs - d[i - 1]) / denom;
        }
    }
    for i in (0..k).rev() {
        m[i + 1] = if i + 1 < k { d[i] - c[i] * m[i + 2] } else { d[i] };
    }
    m
}

fn spline_eval(y: &[f64], m: &[f64], t: f64) -> f64 {
    let n = y.len();
    if n == 1 {
        return y[0];
    }
    let i = (t.floor() as i64).clamp(0, n as i64 - 2) as usize;
    let a = t - i as f64;
    let b = 1.0 - a;
    b * y[i] + a * y[i + 1] + ((b * b * b - b) * m[i] + (a * a * a - a) * m[i + 1]) / 6.0
}

fn resample_row<T: Scalar>(row: &[Complex<T>], positions: &[f64], interp: Interpolator) -> Vec<Complex<T>> {
    let re: Vec<f64> = row.iter().map(|z| to_f64(z.re)).collect();
    let im: Vec<f64> = row.iter().map(|z| to_f64(z.im)).collect();
    let mr = spline_moments(&re);
    let mi = spline_moments(&im);
    let spline = |t: f64| Complex::new(lit(spline_eval(&re, &mr, t)), lit(spline_eval(&im, &mi, t)));
    match interp {
        // Where the centred kernel would run off the row, the spline takes over.
        Interpolator::WindowedSinc { taps, beta } => {
            let half = (taps / 2) as f64;
            let last = row.len() as f64 - 1.0;
            positions
                .iter()
                .map(|&t| {
                    let c = t.round();
                    if c - half >= 0.0 && c + half <= last {
                        sinc_sample(row, t, taps, beta)
                    } else {
                        spline(t)
                    }
                })
                .collect()
        }
        Interpolator::CubicSpline => positions.iter().map(|&t| spline(t)).collect(),
    }
}

/// Removes the frequency-space coupling: row `n` is resampled at
/// `m̃ = m'·f_c/(f_c + n'Δf)` so that every subcarrier sees the spatial
/// frequency of the carrier.
pub fn decouple<T: Scalar>(
    obs: &RadarObservation<T>,
    s: &Scenario,
    interp: Interpolator,
) -> RadarObservation<T> {
    if obs.decoupled {
        return obs.clone();
    }
    let (nsc, nvirt) = obs.data.shape();
    let fc = s.ofdm.carrier_frequency_hz;
    let mut data = obs.data.clone();
    for n in 0..nsc {
        let offset = n as f64 - (nsc / 2) as f64;
        if offset == 0.0 {
            continue;
        }
        let scale = fc / (fc + offset * s.ofdm.subcarrier_spacing_hz);
        let row: Vec<Complex<T>> = (0..nvirt).map(|m| obs.data[(n, m)]).collect();
        let positions: Vec<f64> = (0..nvirt).map(|m| m as f64 * scale).collect();
        for (m, v) in resample_row(&row, &positions, interp).into_iter().enumerate() {
            data[(n, m)] = v;
        }
    }
    RadarObservation {
        data,
        decoupled: true,
        amplitude_gain: obs.amplitude_gain,
    }
}

/// Spatial phase slope (rad/sample) of each observation row, taken from the
/// lag-one autocorrelation along the virtual axis.
pub fn phase_slopes<T: Scalar>(obs: &RadarObservation<T>) -> Vec<f64> {
    let (nsc, nvirt) = obs.data.shape();
    (0..nsc)
        .map(|n| {
            let mut acc = Complex::new(0.0f64, 0.0);
            for m in 1..nvirt {
                let a = obs.data[(n, m)];
                let b = obs.data[(n, m - 1)];
                let z = a * b.conj();
                acc += Complex::new(to_f64(z.re), to_f64(z.im));
            }
            acc.im.atan2(acc.re)
        })
        .collect()
}

/// Taper applied along both image axes before the transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rect,
    #[default]
    Hamming,
    Hann,
    Blackman,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        if len == 1 {
            return vec![1.0];
        }
        let two_pi = 2.0 * std::f64::consts::PI;
        (0..len)
            .map(|i| {
                let x = two_pi * i as f64 / (len - 1) as f64;
                match self {
                    Window::Rect => 1.0,
                    Window::Hamming => 0.54 - 0.46 * x.cos(),
                    Window::Hann => 0.5 - 0.5 * x.cos(),
                    Window::Blackman => 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
                }
            })
            .collect()
    }

    /// Mean of the coefficients (amplitude gain on a matched tone).
    pub fn coherent_gain(self, len: usize) -> f64 {
        let w = self.coefficients(len);
        w.iter().sum::<f64>() / len as f64
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" | "none" => Ok(Window::Rect),
            "hamming" => Ok(Window::Hamming),
            "hann" | "hanning" => Ok(Window::Hann),
            "blackman" => Ok(Window::Blackman),
            other => Err(Error::UnknownWindow(other.to_string())),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Window::Rect => "rect",
            Window::Hamming => "hamming",
            Window::Hann => "hann",
            Window::Blackman => "blackman",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagingConfig {
    pub window: Window,
    pub pad_range: usize,
    pub pad_angle: usize,
    pub interpolator: Interpolator,
}

impl ImagingConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        ImagingConfig {
            window: Window::Hamming,
            pad_range: s.ofdm.pad_factor_range,
            pad_angle: s.ofdm.pad_factor_angle,
            interpolator: Interpolator::default(),
        }
    }

    pub fn plain() -> Self {
        ImagingConfig {
            window: Window::Rect,
            pad_range: 1,
            pad_angle: 1,
            interpolator: Interpolator::default(),
        }
    }
}

/// Range-angle image on the zero-padded grid.
///
/// Rows are range bins `r = 0..D_sc`; columns are angle bins
/// `θ = -D_virt/2..D_virt/2` (zero frequency at column `D_virt/2`).
#[derive(Debug, Clone, PartialEq)]
pub struct RangeAngleImage<T: Scalar> {
    pub magnitude: DMatrix<T>,
    /// `Ω` after the angle transform and centering.
    pub spectrum: CMat<T>,
    /// `Ω'`: range profiles per virtual element, before the angle transform.
    pub range_profiles: CMat<T>,
    pub range_axis_m: Vec<f64>,
    /// `sin Θ` of each angle column.
    pub sin_axis: Vec<f64>,
    pub angle_axis_rad: Vec<f64>,
    pub window: Window,
    pub num_subcarriers: usize,
    pub num_virtual: usize,
    /// Peak magnitude produced by a unit-gain point target.
    pub unit_peak: f64,
}

impl<T: Scalar> RangeAngleImage<T> {
    pub fn shape(&self) -> (usize, usize) {
        self.magnitude.shape()
    }

    pub fn range_step_m(&self) -> f64 {
        self.range_axis_m.get(1).copied().unwrap_or(0.0)
    }

    /// Range (m) at fractional row position.
    pub fn range_at(&self, row: f64) -> f64 {
        row * self.range_step_m()
    }

    /// `sin Θ` at fractional column position.
    pub fn sin_at(&self, col: f64) -> f64 {
        let d = self.sin_axis.len() as f64;
        2.0 * (col - d / 2.0) / d
    }

    /// Magnitude at the cell nearest a physical location.
    pub fn value_near(&self, range_m: f64, azimuth_rad: f64) -> T {
        let (rows, cols) = self.shape();
        let r = (range_m / self.range_step_m()).round() as usize % rows;
        let d = cols as f64;
        let c = (azimuth_rad.sin() * d / 2.0 + d / 2.0).round() as usize % cols;
        self.magnitude[(r, c)]
    }
}

/// Applies the windowed, zero-padded range IDFT and angle DFT
/// (decoupling first if the observation has not been decoupled).
pub fn form_image<T: Scalar>(
    obs: &RadarObservation<T>,
    s: &Scenario,
    cfg: &ImagingConfig,
) -> Result<RangeAngleImage<T>> {
    let obs = if obs.decoupled {
        obs.clone()
    } else {
        decouple(obs, s, cfg.interpolator)
    };
    let (nsc, nvirt) = obs.data.shape();
    if nsc == 0 || nvirt == 0 {
        return Err(Error::Dimension("empty observation".into()));
    }
    let dsc = nsc * cfg.pad_range.max(1);
    let dv = nvirt * cfg.pad_angle.max(1);
    let wr = cfg.window.coefficients(nsc);
    let wa = cfg.window.coefficients(nvirt);

    let mut planner = FftPlanner::<T>::new();
    let ifft = planner.plan_fft(dsc, FftDirection::Inverse);
    let fft = planner.plan_fft(dv, FftDirection::Forward);

    let mut profiles = CMat::from_element(dsc, dv, czero::<T>());
    let mut col = vec![czero::<T>(); dsc];
    for m in 0..nvirt {
        col.iter_mut().for_each(|z| *z = czero());
        for n in 0..nsc {
            col[n] = obs.data[(n, m)].scale(lit(wr[n] * wa[m]));
        }
        ifft.process(&mut col);
        for r in 0..dsc {
            profiles[(r, m)] = col[r];
        }
    }

    let mut spectrum = CMat::from_element(dsc, dv, czero::<T>());
    let mut row = vec![czero::<T>(); dv];
    for r in 0..dsc {
        for (m, z) in row.iter_mut().enumerate() {
            *z = profiles[(r, m)];
        }
        fft.process(&mut row);
        for c in 0..dv {
            spectrum[(r, c)] = row[(c + dv / 2) % dv];
        }
    }
    let magnitude = spectrum.map(modulus);

    let step = s.radio.speed_of_light_m_s / (2.0 * dsc as f64 * s.ofdm.subcarrier_spacing_hz);
    let range_axis_m = (0..dsc).map(|r| r as f64 * step).collect();
    let sin_axis: Vec<f64> = (0..dv)
        .map(|c| 2.0 * (c as f64 - (dv / 2) as f64) / dv as f64)
        .collect();
    let angle_axis_rad = sin_axis.iter().map(|x| x.clamp(-1.0, 1.0).asin()).collect();
    let unit_peak = nsc as f64
        * nvirt as f64
        * cfg.window.coherent_gain(nsc)
        * cfg.window.coherent_gain(nvirt)
        * to_f64(obs.amplitude_gain);
    Ok(RangeAngleImage {
        magnitude,
        spectrum,
        range_profiles: profiles,
        range_axis_m,
        sin_axis,
        angle_axis_rad,
        window: cfg.window,
        num_subcarriers: nsc,
        num_virtual: nvirt,
        unit_peak,
    })
}

/// Noise-floor estimate: mean cell power inferred from the median, assuming
/// exponentially distributed noise power (`mean = median / ln 2`).
pub fn noise_floor_power<T: Scalar>(img: &RangeAngleImage<T>) -> f64 {
    let mut p: Vec<f64> = img.magnitude.iter().map(|&a| to_f64(a * a)).collect();
    if p.is_empty() {
        return 0.0;
    }
    let mid = p.len() / 2;
    let (_, median, _) = p.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    *median / std::f64::consts::LN_2
}

pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 25.0;
/// Minimum height of a detection above the estimated noise floor.
pub const FLOOR_MARGIN_DB: f64 = 12.0;

/// Interior local maxima (8-neighbourhood) that are within `dynamic_range_db`
/// of the global peak and at least 12 dB above the noise floor, strongest first.
pub fn detect_peaks<T: Scalar>(
    img: &RangeAngleImage<T>,
    max_detections: usize,
    dynamic_range_db: f64,
) -> Vec<(usize, usize)> {
    let (rows, cols) = img.shape();
    if rows < 3 || cols < 3 {
        return Vec::new();
    }
    let power = |r: usize, c: usize| {
        let a = to_f64(img.magnitude[(r, c)]);
        a * a
    };
    let global = img
        .magnitude
        .iter()
        .fold(0.0f64, |acc, &a| acc.max(to_f64(a * a)));
    if global <= 0.0 {
        return Vec::new();
    }
    let floor = noise_floor_power(img) * 10f64.powf(FLOOR_MARGIN_DB / 10.0);
    let rel = global * 10f64.powf(-dynamic_range_db / 10.0);
    let threshold = floor.max(rel);

    let mut peaks = Vec::new();
    for r in 1..rows - 1 {
        for c in 1..cols - 1 {
            let p = power(r, c);
            if p <= threshold {
                continue;
            }
            let mut is_max = true;
            'nb: for dr in 0..3 {
                for dc in 0..3 {
                    if dr == 1 && dc == 1 {
                        continue;
                    }
                    let q = power(r + dr - 1, c + dc - 1);
                    // Ties resolve toward the first cell in scan order.
                    let earlier = dr < 1 || (dr == 1 && dc < 1);
                    if q > p || (earlier && q == p) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                peaks.push((p, r, c));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    peaks
        .into_iter()
        .take(max_detections)
        .map(|(_, r, c)| (r, c))
        .collect()
}

/// A resolved point target.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection<T: Scalar> {
    pub range_m: T,
    pub azimuth_rad: T,
    pub gain_estimate: Complex<T>,
    pub peak_magnitude: T,
    pub peak_indices: (usize, usize),
}

/// Vertex offset and log-height correction of a parabola through three
/// log-magnitudes.
fn parabolic(l: f64, c: f64, r: f64) -> (f64, f64) {
    let denom = l - 2.0 * c + r;
    if denom.abs() < 1e-300 || !denom.is_finite() {
        return (0.0, 0.0);
    }
    let delta = (0.5 * (l - r) / denom).clamp(-0.5, 0.5);
    (delta, -0.25 * (l - r) * delta)
}

/// Sub-bin refinement by parabolic interpolation of the log-magnitude along
/// both axes, then mapping to range, azimuth and gain.
pub fn refine_and_estimate<T: Scalar>(
    img: &RangeAngleImage<T>,
    peaks: &[(usize, usize)],
) -> Result<Vec<Detection<T>>> {
    let (rows, cols) = img.shape();
    let ln = |r: usize, c: usize| to_f64(img.magnitude[(r, c)]).max(1e-300).ln();
    peaks
        .iter()
        .map(|&(r, c)| {
            if r == 0 || c == 0 || r + 1 >= rows || c + 1 >= cols {
                return Err(Error::PeakOnBorder { row: r, col: c });
            }
            let center = ln(r, c);
            let (dr, hr) = parabolic(ln(r - 1, c), center, ln(r + 1, c));
            let (dc, hc) = parabolic(ln(r, c - 1), center, ln(r, c + 1));
            let peak = (center + hr + hc).exp();
            let range = img.range_at(r as f64 + dr);
            let sin = img.sin_at(c as f64 + dc).clamp(-1.0, 1.0);
            let phase = arg(img.spectrum[(r, c)]);
            let amp = if img.unit_peak > 0.0 { peak / img.unit_peak } else { 0.0 };
            Ok(Detection {
                range_m: lit(range),
                azimuth_rad: lit(sin.asin()),
                gain_estimate: cis(phase).scale(lit(amp)),
                peak_magnitude: lit(peak),
                peak_indices: (r, c),
            })
        })
        .collect()
}
