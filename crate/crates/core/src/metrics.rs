//! Closed-form performance figures: directed power, radar SNR, range/angle
//! Cramér-Rao bounds with the derived positioning accuracy, and achieved
//! communication SINR.

use nalgebra::Complex;
use serde::Serialize;

use crate::channel::{tx_steering, CommChannel, CsiReport};
use crate::error::{Error, Result};
use crate::imaging::Detection;
use crate::linalg::{quad_form, CMat, CVec};
use crate::scalar::{count, lit, to_f64, Scalar};
use crate::scenario::Scenario;
use crate::waveform::PrecoderSet;

const PI: f64 = std::f64::consts::PI;

/// `P(Θ) = (1/N_sc) Σ_n u_n^†(Θ) R_n u_n(Θ)` for transmit covariances `R_n`.
pub fn directed_power_cov<T: Scalar>(covariances: &[CMat<T>], azimuth_rad: f64, s: &Scenario) -> T {
    if covariances.is_empty() {
        return T::zero();
    }
    let total = covariances.iter().enumerate().fold(T::zero(), |acc, (n, r)| {
        let u = tx_steering::<T>(n, azimuth_rad, s);
        acc + crate::scalar::modulus(quad_form(r, &u))
    });
    total / count::<T>(covariances.len())
}

/// Average power radiated toward `Θ` by the precoders `F_n`.
pub fn directed_power<T: Scalar>(f: &PrecoderSet<T>, azimuth_rad: f64, s: &Scenario) -> T {
    let covs: Vec<CMat<T>> = (0..f.matrices.len()).map(|n| f.covariance(n)).collect();
    directed_power_cov(&covs, azimuth_rad, s)
}

/// Directed power sampled on a uniform azimuth grid (degrees, inclusive ends).
pub fn beampattern<T: Scalar>(
    f: &PrecoderSet<T>,
    s: &Scenario,
    start_deg: f64,
    stop_deg: f64,
    step_deg: f64,
) -> Vec<(f64, T)> {
    let covs: Vec<CMat<T>> = (0..f.matrices.len()).map(|n| f.covariance(n)).collect();
    let steps = ((stop_deg - start_deg) / step_deg).round() as usize;
    (0..=steps)
        .map(|i| {
            let deg = start_deg + i as f64 * step_deg;
            (deg, directed_power_cov(&covs, deg.to_radians(), s))
        })
        .collect()
}

/// `SNR = N_virt N_sc N_sym |α|² / σ²_rad`.
pub fn radar_snr(alpha_abs2: f64, s: &Scenario) -> f64 {
    let dims = (s.array.num_virtual * s.ofdm.num_subcarriers * s.ofdm.num_symbols) as f64;
    dims * alpha_abs2 / s.radio.radar_noise_w
}

/// Target parameters consumed by the bounds and the precoder weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TargetEstimate {
    pub gain_abs2: f64,
    pub range_m: f64,
    pub azimuth_rad: f64,
}

impl<T: Scalar> From<&Detection<T>> for TargetEstimate {
    fn from(d: &Detection<T>) -> Self {
        TargetEstimate {
            gain_abs2: to_f64(d.gain_estimate.norm_sqr()),
            range_m: to_f64(d.range_m),
            azimuth_rad: to_f64(d.azimuth_rad),
        }
    }
}

/// Bound constants `(κ_R, κ_Θ)` with `σ²_R = κ_R/(SNR·P)` and
/// `σ²_Θ = κ_Θ/(SNR·P)`.
pub fn crlb_constants(azimuth_rad: f64, s: &Scenario) -> Result<(f64, f64)> {
    let c = s.radio.speed_of_light_m_s;
    let df = s.ofdm.subcarrier_spacing_hz;
    let nsc = s.ofdm.num_subcarriers as f64;
    let nv = s.array.num_virtual as f64;
    let fc = s.ofdm.carrier_frequency_hz;
    let lambda = s.wavelength_m();
    let cos2 = azimuth_rad.cos().powi(2);
    if cos2 < 1e-12 {
        return Err(Error::EndfireSingularity { azimuth_rad });
    }
    let kappa_r = 3.0 * c * c / (8.0 * PI * PI * df * df * (nsc * nsc - 1.0));
    let kappa_t = 6.0 * c * c / (PI * PI * fc * fc * lambda * lambda * cos2 * (nv * nv - 1.0));
    Ok((kappa_r, kappa_t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrlbReport<T: Scalar> {
    pub var_range_m2: T,
    pub var_angle_rad2: T,
    pub var_x_m2: T,
    pub var_y_m2: T,
    pub positioning_accuracy: T,
    pub snr_linear: T,
    pub directed_power_w: T,
}

/// Bounds for a target given the power the precoder directs toward it.
pub fn crlb_with_power<T: Scalar>(est: &TargetEstimate, directed_power_w: f64, s: &Scenario) -> Result<CrlbReport<T>> {
    if !(directed_power_w > 0.0) {
        return Err(Error::Invariant(format!(
            "directed power toward {:.2} deg is {directed_power_w}",
            est.azimuth_rad.to_degrees()
        )));
    }
    let (kr, kt) = crlb_constants(est.azimuth_rad, s)?;
    let snr = radar_snr(est.gain_abs2, s);
    let denom = snr * directed_power_w;
    let var_r = kr / denom;
    let var_t = kt / denom;
    let (sin, cos) = est.azimuth_rad.sin_cos();
    let r2 = est.range_m * est.range_m;
    // Jacobian of (R sinΘ, R cosΘ).
    let var_x = sin * sin * var_r + r2 * cos * cos * var_t;
    let var_y = cos * cos * var_r + r2 * sin * sin * var_t;
    Ok(CrlbReport {
        var_range_m2: lit(var_r),
        var_angle_rad2: lit(var_t),
        var_x_m2: lit(var_x),
        var_y_m2: lit(var_y),
        positioning_accuracy: lit(1.0 / (var_r + var_t * r2)),
        snr_linear: lit(snr),
        directed_power_w: lit(directed_power_w),
    })
}

pub fn crlb<T: Scalar>(est: &TargetEstimate, f: &PrecoderSet<T>, s: &Scenario) -> Result<CrlbReport<T>> {
    crlb_with_power(est, to_f64(directed_power(f, est.azimuth_rad, s)), s)
}

/// Achieved SINR per receiver and subcarrier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinrReport<T: Scalar> {
    /// `per_subcarrier[q][n]`, linear.
    pub per_subcarrier: Vec<Vec<T>>,
    pub min: Vec<T>,
    pub mean: Vec<T>,
}

impl<T: Scalar> SinrReport<T> {
    pub fn min_db(&self) -> Vec<f64> {
        self.min.iter().map(|&v| 10.0 * to_f64(v).log10()).collect()
    }
}

/// A source of per-receiver responses `g` (receiver observes `g^† x`) and noise powers.
pub trait LinkView<T: Scalar> {
    fn num_receivers(&self) -> usize;
    fn response(&self, q: usize, n: usize) -> CVec<T>;
    fn noise(&self, q: usize) -> T;
}

impl<T: Scalar> LinkView<T> for CommChannel<T> {
    fn num_receivers(&self) -> usize {
        CommChannel::num_receivers(self)
    }
    fn response(&self, q: usize, n: usize) -> CVec<T> {
        CommChannel::response(self, q, n)
    }
    fn noise(&self, q: usize) -> T {
        self.noise_var[q]
    }
}

impl<T: Scalar> LinkView<T> for CsiReport<T> {
    fn num_receivers(&self) -> usize {
        CsiReport::num_receivers(self)
    }
    fn response(&self, q: usize, n: usize) -> CVec<T> {
        CsiReport::response(self, q, n)
    }
    fn noise(&self, q: usize) -> T {
        self.noise_var_hat[q]
    }
}

/// SINR of stream `q` on one subcarrier: column `q` of `F` is the signal,
/// every other column is interference.
pub fn stream_sinr<T: Scalar>(f: &CMat<T>, g: &CVec<T>, q: usize, noise: T) -> T {
    let mut signal = T::zero();
    let mut interference = T::zero();
    for j in 0..f.ncols() {
        let p = (g.adjoint() * f.column(j))[(0, 0)].norm_sqr();
        if j == q {
            signal = p;
        } else {
            interference += p;
        }
    }
    signal / (interference + noise)
}

pub fn achieved_sinr<T: Scalar, L: LinkView<T> + ?Sized>(f: &PrecoderSet<T>, link: &L) -> Result<SinrReport<T>> {
    let mrx = link.num_receivers();
    if let Some(m) = f.matrices.first() {
        if m.ncols() < mrx {
            return Err(Error::Dimension(format!(
                "{mrx} receivers but only {} precoder columns",
                m.ncols()
            )));
        }
    }
    let per_subcarrier: Vec<Vec<T>> = (0..mrx)
        .map(|q| {
            f.matrices
                .iter()
                .enumerate()
                .map(|(n, fnm)| stream_sinr(fnm, &link.response(q, n), q, link.noise(q)))
                .collect()
        })
        .collect();
    let min = per_subcarrier
        .iter()
        .map(|v| v.iter().copied().reduce(|a, b| a.min(b)).unwrap_or(T::zero()))
        .collect();
    let mean = per_subcarrier
        .iter()
        .map(|v| v.iter().copied().fold(T::zero(), |a, b| a + b) / count::<T>(v.len().max(1)))
        .collect();
    Ok(SinrReport {
        per_subcarrier,
        min,
        mean,
    })
}

/// Linear form of the SINR constraint for stream `q`:
/// `(1 + 1/η)|g^† f_q|² − Σ_j |g^† f_j|² − σ² ≥ 0`.
pub fn sinr_margin<T: Scalar>(f: &CMat<T>, g: &CVec<T>, q: usize, noise: T, eta: T) -> T {
    let powers: Vec<T> = (0..f.ncols())
        .map(|j| (g.adjoint() * f.column(j))[(0, 0)].norm_sqr())
        .collect();
    let total = powers.iter().copied().fold(T::zero(), |a, b| a + b);
    (T::one() + T::one() / eta) * powers[q] - total - noise
}

/// Helper for callers holding a single complex gain.
pub fn gain_abs2<T: Scalar>(alpha: Complex<T>) -> f64 {
    to_f64(alpha.norm_sqr())
}
