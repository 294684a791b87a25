//! Radar reflection and line-of-sight communication channels.
//!
//! The radar channel is built from exact element-to-target distances (no
//! plane-wave approximation); the imaging and precoding chains use the
//! far-field steering model, so the simulation carries a small, realistic
//! model mismatch.

use nalgebra::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::scalar::{cis, count, creal, czero, lit, Scalar};
use crate::scenario::{RadioParams, Scenario, Target};
use crate::waveform::{PrecoderSet, SymbolFrame, TimeSignal};

/// Per-subcarrier radar channel, `N_rx × N_tx` on each subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarChannel<T: Scalar> {
    /// `per_target[p][n]`, each of rank one.
    pub per_target: Vec<Vec<CMat<T>>>,
    /// Superposition over targets, `total[n]`.
    pub total: Vec<CMat<T>>,
}

/// Line-of-sight channels in the transpose convention: receiver `q` observes
/// `h[q][n]^T x` on subcarrier `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommChannel<T: Scalar> {
    pub h: Vec<Vec<CVec<T>>>,
    pub noise_var: Vec<T>,
}

impl<T: Scalar> CommChannel<T> {
    /// Vector `g` such that the receiver observes `g^† x`.
    pub fn response(&self, q: usize, n: usize) -> CVec<T> {
        self.h[q][n].map(|z| z.conj())
    }

    pub fn num_receivers(&self) -> usize {
        self.h.len()
    }
}

/// Channel-state feedback from every receiver (same convention as [`CommChannel`]).
#[derive(Debug, Clone, PartialEq)]
pub struct CsiReport<T: Scalar> {
    pub h_hat: Vec<Vec<CVec<T>>>,
    pub noise_var_hat: Vec<T>,
}

impl<T: Scalar> CsiReport<T> {
    pub fn response(&self, q: usize, n: usize) -> CVec<T> {
        self.h_hat[q][n].map(|z| z.conj())
    }

    pub fn num_receivers(&self) -> usize {
        self.h_hat.len()
    }

    /// Ideal feedback straight from the true channel.
    pub fn perfect(ch: &CommChannel<T>) -> Self {
        CsiReport {
            h_hat: ch.h.clone(),
            noise_var_hat: ch.noise_var.clone(),
        }
    }
}

/// Reflected symbols `Y_n` (`N_rx × N_sym`) per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedRadarFrame<T: Scalar> {
    pub data: Vec<CMat<T>>,
}

/// Complex two-way gain `α_p` of a point target (radar equation).
pub fn target_gain<T: Scalar>(t: &Target, radio: &RadioParams, wavelength_m: f64) -> Complex<T> {
    let four_pi = 4.0 * std::f64::consts::PI;
    let power = t.rcs_m2 * radio.rx_gain_linear * wavelength_m * wavelength_m
        / (four_pi.powi(3) * t.range_m.powi(4));
    cis(lit::<T>(t.phase_rad)).scale(lit::<T>(power.sqrt()))
}

/// Range-dependent far-field steering vectors of the transmit and receive ULAs
/// on storage subcarrier `n`.
pub fn steering_vectors<T: Scalar>(
    n: usize,
    range_m: f64,
    azimuth_rad: f64,
    s: &Scenario,
) -> (CVec<T>, CVec<T>) {
    let fnc = s.ofdm.subcarrier_frequency_hz(n);
    let c = s.radio.speed_of_light_m_s;
    let two_pi = 2.0 * std::f64::consts::PI;
    let sin = azimuth_rad.sin();
    let phase = |pos: f64| lit::<T>(-two_pi * fnc * (range_m - pos * sin) / c);
    let a_tx = CVec::from_fn(s.array.num_tx, |l, _| {
        cis(phase(l as f64 * s.array.tx_spacing_m))
    });
    let a_rx = CVec::from_fn(s.array.num_rx, |k, _| {
        cis(phase(k as f64 * s.array.rx_spacing_m))
    });
    (a_tx, a_rx)
}

/// Virtual-array steering vector `u_n(Θ)[m] = exp(j2π f_n m d sinΘ / c)`.
pub fn virtual_steering<T: Scalar>(n: usize, azimuth_rad: f64, s: &Scenario) -> CVec<T> {
    let fnc = s.ofdm.subcarrier_frequency_hz(n);
    let k = 2.0 * std::f64::consts::PI * fnc * s.array.virtual_spacing_m * azimuth_rad.sin()
        / s.radio.speed_of_light_m_s;
    CVec::from_fn(s.array.num_virtual, |m, _| cis(lit::<T>(k * m as f64)))
}

/// Transmit beamforming vector toward `Θ` on storage subcarrier `n`:
/// `u[l] = exp(-j2π f_n l d_tx sinΘ / c)`, so that `|u^† x|²` is the power
/// radiated toward `Θ` by the antenna signals `x`.
pub fn tx_steering<T: Scalar>(n: usize, azimuth_rad: f64, s: &Scenario) -> CVec<T> {
    let fnc = s.ofdm.subcarrier_frequency_hz(n);
    let k = 2.0 * std::f64::consts::PI * fnc * s.array.tx_spacing_m * azimuth_rad.sin()
        / s.radio.speed_of_light_m_s;
    CVec::from_fn(s.array.num_tx, |l, _| cis(lit::<T>(-k * l as f64)))
}

/// Two-way path lengths `D[k][l]` from exact element positions on the array axis.
pub fn two_way_distances(t: &Target, s: &Scenario) -> Vec<Vec<f64>> {
    let (x, y) = t.cartesian();
    let dist = |pos: f64| ((x - pos).powi(2) + y * y).sqrt();
    (0..s.array.num_rx)
        .map(|k| {
            let rk = dist(k as f64 * s.array.rx_spacing_m);
            (0..s.array.num_tx)
                .map(|l| dist(l as f64 * s.array.tx_spacing_m) + rk)
                .collect()
        })
        .collect()
}

fn channel_from_distances<T: Scalar>(
    alpha: Complex<T>,
    dist: &[Vec<f64>],
    n: usize,
    s: &Scenario,
) -> CMat<T> {
    let fnc = s.ofdm.subcarrier_frequency_hz(n);
    let c = s.radio.speed_of_light_m_s;
    let two_pi = 2.0 * std::f64::consts::PI;
    CMat::from_fn(s.array.num_rx, s.array.num_tx, |k, l| {
        // Reduce the phase in f64 before narrowing so f32 runs keep accuracy.
        let ph = (-two_pi * fnc * dist[k][l] / c) % two_pi;
        alpha * cis(lit::<T>(ph))
    })
}

fn assemble<T: Scalar>(per_target: Vec<Vec<CMat<T>>>, s: &Scenario) -> RadarChannel<T> {
    let zero = CMat::from_element(s.array.num_rx, s.array.num_tx, czero());
    let total = (0..s.ofdm.num_subcarriers)
        .map(|n| {
            per_target
                .iter()
                .fold(zero.clone(), |acc, hp| acc + &hp[n])
        })
        .collect();
    RadarChannel { per_target, total }
}

/// Radar channel with exact two-way delays `τ_{k,l,p} = D_{k,l,p}/c`.
pub fn radar_channel<T: Scalar>(s: &Scenario) -> RadarChannel<T> {
    let lambda = s.wavelength_m();
    let per_target = s
        .targets
        .iter()
        .map(|t| {
            let alpha = target_gain::<T>(t, &s.radio, lambda);
            let dist = two_way_distances(t, s);
            (0..s.ofdm.num_subcarriers)
                .map(|n| channel_from_distances(alpha, &dist, n, s))
                .collect()
        })
        .collect();
    assemble(per_target, s)
}

/// Plane-wave radar channel `α a_rx a_tx^T` (far-field model).
pub fn radar_channel_plane_wave<T: Scalar>(s: &Scenario) -> RadarChannel<T> {
    let lambda = s.wavelength_m();
    let per_target = s
        .targets
        .iter()
        .map(|t| {
            let alpha = target_gain::<T>(t, &s.radio, lambda);
            (0..s.ofdm.num_subcarriers)
                .map(|n| {
                    let (a_tx, a_rx) = steering_vectors::<T>(n, t.range_m, t.azimuth_rad, s);
                    (a_rx * a_tx.transpose()).map(|z| z * alpha)
                })
                .collect()
        })
        .collect();
    assemble(per_target, s)
}

/// Circular complex Gaussian sample with variance `var`.
pub fn complex_gaussian<T: Scalar, R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex<T> {
    let sd = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(lit(re * sd), lit(im * sd))
}

/// `Y_n = H_n X_n + W_n` with `vec(W_n) ~ CN(0, σ² I)`.
pub fn propagate_radar<T: Scalar, R: Rng + ?Sized>(
    x: &SymbolFrame<T>,
    ch: &RadarChannel<T>,
    noise_var: f64,
    rng: &mut R,
) -> Result<ReceivedRadarFrame<T>> {
    if x.symbols.len() != ch.total.len() {
        return Err(Error::Dimension(format!(
            "frame has {} subcarriers, channel has {}",
            x.symbols.len(),
            ch.total.len()
        )));
    }
    let mut data = Vec::with_capacity(x.symbols.len());
    for (n, (xn, hn)) in x.symbols.iter().zip(&ch.total).enumerate() {
        if hn.ncols() != xn.nrows() {
            return Err(Error::Dimension(format!(
                "subcarrier {n}: channel has {} tx columns, frame has {} streams",
                hn.ncols(),
                xn.nrows()
            )));
        }
        let mut y = hn * xn;
        if noise_var > 0.0 {
            for z in y.iter_mut() {
                *z += complex_gaussian::<T, _>(rng, noise_var);
            }
        }
        data.push(y);
    }
    Ok(ReceivedRadarFrame { data })
}

/// Time-domain reference for [`propagate_radar`] (noiseless).
///
/// Recovers each transmitted symbol's subcarrier content from the CP-OFDM
/// samples, evaluates the delayed continuous-time echo at the receiver's
/// sampling instants `t = i·T_dft/N_sc + m·T_sym` with the exact per-pair
/// delays, then applies the receiver DFT. Direct sums only; no FFT.
pub fn propagate_radar_time_oracle<T: Scalar>(
    x: &TimeSignal<T>,
    s: &Scenario,
) -> Result<ReceivedRadarFrame<T>> {
    let nsc = s.ofdm.num_subcarriers;
    let ntx = s.array.num_tx;
    let nrx = s.array.num_rx;
    let c = s.radio.speed_of_light_m_s;
    let tcp = s.ofdm.cyclic_prefix_s;
    if x.fft_len != nsc || x.samples.nrows() != ntx {
        return Err(Error::Dimension(format!(
            "signal is {} antennas × {}-point symbols, scenario expects {ntx} × {nsc}",
            x.samples.nrows(),
            x.fft_len
        )));
    }
    let nsym = x.num_symbols();
    let lambda = s.wavelength_m();
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut delays = Vec::with_capacity(s.targets.len());
    for (p, t) in s.targets.iter().enumerate() {
        let dist = two_way_distances(t, s);
        let tau: Vec<Vec<f64>> = dist
            .iter()
            .map(|row| row.iter().map(|d| d / c).collect())
            .collect();
        let worst = tau.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        if worst >= tcp {
            return Err(Error::TargetBeyondCyclicPrefix {
                index: p,
                range_m: t.range_m,
                limit_m: tcp * c / 2.0,
            });
        }
        delays.push((target_gain::<T>(t, &s.radio, lambda), tau));
    }

    let inv_sqrt_n = 1.0 / (nsc as f64).sqrt();
    let offset = |n: usize| n as f64 - (nsc / 2) as f64;
    let df = s.ofdm.subcarrier_spacing_hz;
    let fc = s.ofdm.carrier_frequency_hz;
    let tdft = s.ofdm.symbol_duration_s;

    // Subcarrier content of every transmitted symbol, by direct DFT.
    let mut content = vec![vec![vec![czero::<T>(); nsc]; nsym]; ntx];
    for (l, per_l) in content.iter_mut().enumerate() {
        for (m, coeffs) in per_l.iter_mut().enumerate() {
            let base = m * x.symbol_len() + x.cp_len;
            for (n, cn) in coeffs.iter_mut().enumerate() {
                let mut acc = czero::<T>();
                for i in 0..nsc {
                    let ph = -two_pi * offset(n) * i as f64 / nsc as f64;
                    acc += x.samples[(l, base + i)] * cis(lit::<T>(ph));
                }
                *cn = acc.scale(lit(inv_sqrt_n));
            }
        }
    }

    let mut data = vec![CMat::from_element(nrx, nsym, czero()); nsc];
    let mut received = vec![czero::<T>(); nsc];
    for k in 0..nrx {
        for m in 0..nsym {
            // Received baseband samples within the DFT window of symbol m.
            for (i, r) in received.iter_mut().enumerate() {
                let t_rel = i as f64 * tdft / nsc as f64;
                let mut acc = czero::<T>();
                for (alpha, tau) in &delays {
                    for l in 0..ntx {
                        let tkl = tau[k][l];
                        let carrier = cis(lit::<T>((-two_pi * fc * tkl) % two_pi));
                        let mut echo = czero::<T>();
                        for n in 0..nsc {
                            let ph = two_pi * offset(n) * df * (t_rel - tkl);
                            echo += content[l][m][n] * cis(lit::<T>(ph));
                        }
                        acc += *alpha * carrier * echo.scale(lit(inv_sqrt_n));
                    }
                }
                *r = acc;
            }
            for n in 0..nsc {
                let mut acc = czero::<T>();
                for (i, r) in received.iter().enumerate() {
                    let ph = -two_pi * offset(n) * i as f64 / nsc as f64;
                    acc += *r * cis(lit::<T>(ph));
                }
                data[n][(k, m)] = acc.scale(lit(inv_sqrt_n));
            }
        }
    }
    Ok(ReceivedRadarFrame { data })
}

/// Free-space line-of-sight channels to every receiver.
pub fn comm_channel<T: Scalar>(s: &Scenario) -> CommChannel<T> {
    let lambda = s.wavelength_m();
    let c = s.radio.speed_of_light_m_s;
    let two_pi = 2.0 * std::f64::consts::PI;
    let h = s
        .receivers
        .iter()
        .map(|q| {
            let amp = q.rx_gain_linear.sqrt() * lambda / (2.0 * two_pi * q.range_m);
            let sin = q.azimuth_rad.sin();
            (0..s.ofdm.num_subcarriers)
                .map(|n| {
                    let fnc = s.ofdm.subcarrier_frequency_hz(n);
                    CVec::from_fn(s.array.num_tx, |l, _| {
                        let ph = -two_pi * fnc * (q.range_m - l as f64 * s.array.tx_spacing_m * sin) / c;
                        cis(lit::<T>(ph % two_pi)).scale(lit(amp))
                    })
                })
                .collect()
        })
        .collect();
    CommChannel {
        h,
        noise_var: s.receivers.iter().map(|q| lit(q.noise_w)).collect(),
    }
}

/// Simulates reception of the preamble `y^T = h^T X + w^T` at every receiver
/// and returns the least-squares channel estimate with a noise estimate.
///
/// The noise variance comes from the LS residual when the preamble has more
/// symbols than streams; with a square preamble the residual is identically
/// zero and the receiver reports its calibrated noise power instead.
pub fn receive_preamble_and_estimate_csi<T: Scalar, R: Rng + ?Sized>(
    preamble: &SymbolFrame<T>,
    precoder: &PrecoderSet<T>,
    ch: &CommChannel<T>,
    rng: &mut R,
) -> Result<CsiReport<T>> {
    let x = crate::waveform::precode(preamble, precoder)?;
    let nsc = x.num_subcarriers();
    let ntx = x.num_streams();
    let nsym = x.num_symbols();
    let mut h_hat = Vec::with_capacity(ch.h.len());
    let mut noise_var_hat = Vec::with_capacity(ch.h.len());
    for (q, hq) in ch.h.iter().enumerate() {
        let var = ch.noise_var[q];
        let mut est = Vec::with_capacity(nsc);
        let mut residual = T::zero();
        for n in 0..nsc {
            let xn = &x.symbols[n];
            let mut y = hq[n].transpose() * xn;
            for z in y.iter_mut() {
                *z += complex_gaussian::<T, _>(rng, crate::scalar::to_f64(var));
            }
            let gram = xn * xn.adjoint();
            let inv = gram.try_inverse().ok_or_else(|| {
                Error::Numerical(format!("preamble Gram matrix singular on subcarrier {n}"))
            })?;
            let h_row = &y * xn.adjoint() * inv;
            let fit = &h_row * xn;
            residual += (&y - fit).iter().fold(T::zero(), |a, z| a + z.norm_sqr());
            est.push(h_row.transpose());
        }
        let dof = nsc * nsym.saturating_sub(ntx);
        noise_var_hat.push(if dof > 0 { residual / count::<T>(dof) } else { var });
        h_hat.push(est);
    }
    Ok(CsiReport {
        h_hat,
        noise_var_hat,
    })
}

/// Largest singular-value ratio `σ₂/σ₁` of a matrix (0 for rank ≤ 1).
pub fn second_singular_ratio<T: Scalar>(m: &CMat<T>) -> T {
    let sv = m.clone().singular_values();
    let mut v: Vec<T> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    if v.len() < 2 || v[0] == T::zero() {
        T::zero()
    } else {
        v[1] / v[0]
    }
}

/// Unit vector helper used by tests: `creal(1)` on every entry.
pub fn ones<T: Scalar>(n: usize) -> CVec<T> {
    CVec::from_element(n, creal(T::one()))
}
