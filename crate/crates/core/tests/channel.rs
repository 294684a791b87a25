use jrc_core::channel::*;
use jrc_core::linalg::{frobenius, kron, max_abs, CMat};
use jrc_core::scalar::{arg, modulus};
use jrc_core::scenario::{reference_config, reference_scenario, Scenario, TargetConfig, SPEED_OF_LIGHT};
use jrc_core::waveform::{make_data_frame, make_preamble, ofdm_modulate, precode, PrecoderSet};
use nalgebra::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn one_target(range_m: f64, azimuth_deg: f64) -> Scenario {
    reference_scenario()
        .with_targets(vec![TargetConfig {
            range_m,
            azimuth_deg,
            rcs_dbsm: 20.0,
            phase_deg: 0.0,
        }])
        .unwrap()
}

#[test]
fn target_gain_radar_equation() {
    let s = reference_scenario();
    let a = target_gain::<f64>(&s.targets[0], &s.radio, s.wavelength_m());
    // sigma=100 m^2, G=100, R=25 m, lambda=c/76.5 GHz.
    let lambda = 299_792_458.0 / 76.5e9;
    let expect = 100.0 * 100.0 * lambda * lambda
        / ((4.0 * std::f64::consts::PI).powi(3) * 25f64.powi(4));
    assert!((a.norm_sqr() - expect).abs() / expect < 1e-12);
    assert!((a.norm_sqr() - 1.98e-10).abs() < 0.01e-10);
    assert!((10.0 * a.norm_sqr().log10() + 97.0).abs() < 0.05);

    let mut t = s.targets[0].clone();
    t.phase_rad = std::f64::consts::PI;
    let flipped = target_gain::<f64>(&t, &s.radio, s.wavelength_m());
    assert!(modulus(flipped + a) < 1e-18);

    t.phase_rad = 0.0;
    t.range_m *= 2.0;
    let far = target_gain::<f64>(&t, &s.radio, s.wavelength_m());
    assert!((a.norm_sqr() / far.norm_sqr() - 16.0).abs() < 1e-9);
}

#[test]
fn broadside_steering_is_flat() {
    let s = reference_scenario();
    let (atx, arx) = steering_vectors::<f64>(10, 25.0, 0.0, &s);
    for z in atx.iter().chain(arx.iter()) {
        assert!(modulus(*z - atx[0]) < 1e-12);
    }
    let v = kron(&arx, &atx);
    assert!(v.iter().all(|z| (modulus(*z) - 1.0).abs() < 1e-12));
}

#[test]
fn virtual_array_identity_holds() {
    // vec(H_{n,p}) / (alpha e^{-j4 pi f_n R / c}) == u_n(Theta)
    let s = one_target(25.0, -30.0);
    let ch = radar_channel_plane_wave::<f64>(&s);
    let t = &s.targets[0];
    let alpha = target_gain::<f64>(t, &s.radio, s.wavelength_m());
    for n in [0usize, 17, 32, 63] {
        let h = &ch.per_target[0][n];
        let fnc = s.ofdm.subcarrier_frequency_hz(n);
        let common = alpha
            * jrc_core::scalar::cis(-4.0 * std::f64::consts::PI * fnc * t.range_m / 299_792_458.0);
        let u = virtual_steering::<f64>(n, t.azimuth_rad, &s);
        for k in 0..4 {
            for l in 0..16 {
                let v = h[(k, l)] / common;
                assert!(modulus(v - u[k * 16 + l]) < 1e-10);
            }
        }
    }
}

#[test]
fn exact_channel_properties() {
    let s = one_target(25.0, 20.0);
    let ch = radar_channel::<f64>(&s);
    let a = modulus(target_gain::<f64>(&s.targets[0], &s.radio, s.wavelength_m()));
    for hn in &ch.per_target[0] {
        assert!(hn.iter().all(|z| (modulus(*z) - a).abs() < 1e-15));
        assert!(second_singular_ratio(hn) < 1e-8);
    }

    let double = s
        .with_targets(vec![s.config().targets[0].clone(), s.config().targets[0].clone()])
        .unwrap();
    let ch2 = radar_channel::<f64>(&double);
    for n in 0..64 {
        let diff = &ch2.total[n] - ch.per_target[0][n].map(|z| z * 2.0);
        assert!(max_abs(&diff) < 1e-20);
    }
}

#[test]
fn far_field_matches_exact_geometry() {
    // The residual is the Fresnel term, bounded by k (x_tx^2 + x_rx^2) / (2R).
    let s = reference_scenario();
    let exact = radar_channel::<f64>(&s);
    let plane = radar_channel_plane_wave::<f64>(&s);
    let (ntx, nrx) = (s.array.num_tx, s.array.num_rx);
    for p in 0..3 {
        let r = s.targets[p].range_m;
        for n in 0..64 {
            let k = 2.0 * std::f64::consts::PI * s.ofdm.subcarrier_frequency_hz(n) / SPEED_OF_LIGHT;
            for row in 0..nrx {
                for col in 0..ntx {
                    let xt = col as f64 * s.array.tx_spacing_m;
                    let xr = row as f64 * s.array.rx_spacing_m;
                    let bound = k * (xt * xt + xr * xr) / (2.0 * r) + 1e-3;
                    let a = exact.per_target[p][n][(row, col)];
                    let b = plane.per_target[p][n][(row, col)];
                    assert!(arg(a / b).abs() < bound);
                }
            }
        }
    }

    let far = s
        .with_targets(vec![TargetConfig {
            range_m: 2000.0,
            ..s.config().targets[1].clone()
        }])
        .unwrap();
    let exact = radar_channel::<f64>(&far);
    let plane = radar_channel_plane_wave::<f64>(&far);
    for n in 0..64 {
        for (a, b) in exact.per_target[0][n].iter().zip(plane.per_target[0][n].iter()) {
            assert!(arg(*a / *b).abs() < 1e-2);
        }
    }
}

#[test]
fn channel_linearity() {
    let s = reference_scenario();
    let all = radar_channel::<f64>(&s);
    let mut acc = CMat::<f64>::zeros(4, 16);
    for p in 0..3 {
        let single = s.with_targets(vec![s.config().targets[p].clone()]).unwrap();
        acc += &radar_channel::<f64>(&single).total[5];
    }
    assert!(max_abs(&(acc - &all.total[5])) < 1e-20);
}

#[test]
fn noiseless_propagation_is_product() {
    let s = reference_scenario();
    let ch = radar_channel::<f64>(&s);
    let frame = make_data_frame::<f64, _>(&s, &mut ChaCha8Rng::seed_from_u64(3));
    let y = propagate_radar(&frame, &ch, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    for n in 0..64 {
        let expect = &ch.total[n] * &frame.symbols[n];
        assert!(frobenius(&(&y.data[n] - &expect)) <= 1e-12 * frobenius(&expect));
    }
}

#[test]
fn identity_channel_passes_streams() {
    let mut cfg = reference_config();
    cfg.array.num_tx = 4;
    cfg.receivers.clear();
    let s = Scenario::from_config(cfg).unwrap();
    let frame = make_data_frame::<f64, _>(&s, &mut ChaCha8Rng::seed_from_u64(1));
    let ch = RadarChannel {
        per_target: vec![],
        total: vec![CMat::<f64>::identity(4, 4); 64],
    };
    let y = propagate_radar(&frame, &ch, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(y.data, frame.symbols);
}

#[test]
fn noise_variance_and_whiteness() {
    let s = reference_scenario();
    let ch = radar_channel::<f64>(&s);
    let frame = make_data_frame::<f64, _>(&s, &mut ChaCha8Rng::seed_from_u64(3));
    let var = 2.5;
    let y = propagate_radar(&frame, &ch, var, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let again = propagate_radar(&frame, &ch, var, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    assert_eq!(y, again);
    let mut noise = Vec::new();
    for n in 0..64 {
        let w = &y.data[n] - &ch.total[n] * &frame.symbols[n];
        noise.extend(w.iter().copied());
    }
    let emp = noise.iter().map(|z| z.norm_sqr()).sum::<f64>() / noise.len() as f64;
    assert!((emp - var).abs() / var < 0.05, "{emp}");
    // Lag-one correlation across consecutive entries.
    let mut cross = Complex::new(0.0, 0.0);
    for w in noise.windows(2) {
        cross += w[0] * w[1].conj();
    }
    let rho = modulus(cross) / (noise.len() as f64 * emp);
    assert!(rho < 0.05, "{rho}");
}

#[test]
fn frequency_domain_matches_time_oracle() {
    let s = one_target(25.0, -30.0);
    let ch = radar_channel::<f64>(&s);
    let (pre, f) = make_preamble::<f64>(&s);
    let x = precode(&pre, &f).unwrap();
    let y = propagate_radar(&x, &ch, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let sig = ofdm_modulate(&pre, &f, &s).unwrap();
    let oracle = propagate_radar_time_oracle(&sig, &s).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    for n in 0..64 {
        num += frobenius(&(&y.data[n] - &oracle.data[n])).powi(2);
        den += frobenius(&oracle.data[n]).powi(2);
    }
    assert!((num / den).sqrt() < 1e-6, "{}", (num / den).sqrt());
}

#[test]
fn time_oracle_edge_cases() {
    let empty = reference_scenario().with_targets(vec![]).unwrap();
    let (pre, f) = make_preamble::<f64>(&empty);
    let sig = ofdm_modulate(&pre, &f, &empty).unwrap();
    let out = propagate_radar_time_oracle(&sig, &empty).unwrap();
    assert!(out.data.iter().all(|m| max_abs(m) == 0.0));

    let near = one_target(0.1, 0.0);
    let out = propagate_radar_time_oracle(&sig, &near).unwrap();
    // Near-zero delay: phase nearly identical across subcarriers.
    let ref_phase = arg(out.data[0][(0, 0)] / sig.samples[(0, 64)]);
    let _ = ref_phase;
    let p0 = arg(out.data[0][(0, 0)] / out.data[63][(0, 0)]);
    assert!(p0.abs() < 2.0 * std::f64::consts::PI * 160e6 * 0.2 / 299_792_458.0 + 1e-9);

    let far = one_target(80.0, 0.0);
    assert!(matches!(
        propagate_radar_time_oracle(&sig, &far),
        Err(jrc_core::Error::TargetBeyondCyclicPrefix { .. })
    ));
}

#[test]
fn comm_channel_free_space() {
    let s = reference_scenario();
    let ch = comm_channel::<f64>(&s);
    let lambda = 299_792_458.0 / 76.5e9;
    let expect = 100.0 * (lambda / (4.0 * std::f64::consts::PI * 25.0)).powi(2);
    for z in ch.h[0][32].iter() {
        assert!((z.norm_sqr() - expect).abs() / expect < 1e-12);
    }
    // Free-space loss alone is about -98.1 dB; the 20 dB receive gain lifts it.
    assert!((10.0 * (expect / 100.0).log10() + 98.1).abs() < 0.05);
    // Broadside receiver: identical entries.
    for z in ch.h[0][32].iter() {
        assert!(modulus(*z - ch.h[0][32][0]) < 1e-12);
    }
    let a = &ch.h[0][32];
    let b = &ch.h[1][32];
    let rho = modulus(a.dotc(b)) / (a.norm() * b.norm());
    assert!(rho < 0.999);
}

#[test]
fn csi_estimation() {
    let s = reference_scenario();
    let ch = comm_channel::<f64>(&s);
    let (pre, f) = make_preamble::<f64>(&s);
    let mut quiet = ch.clone();
    quiet.noise_var = vec![0.0; 2];
    let csi = receive_preamble_and_estimate_csi(&pre, &f, &quiet, &mut ChaCha8Rng::seed_from_u64(1))
        .unwrap();
    assert_eq!(csi.h_hat.len(), 2);
    assert_eq!(csi.h_hat[0].len(), 64);
    assert_eq!(csi.h_hat[0][0].len(), 16);
    for q in 0..2 {
        for n in 0..64 {
            let err = (&csi.h_hat[q][n] - &ch.h[q][n]).norm() / ch.h[q][n].norm();
            assert!(err < 1e-10);
        }
    }

    // LS error variance sigma^2 / P_tx per element.
    let mut noisy = ch.clone();
    noisy.noise_var = vec![1e-9; 2];
    let mut acc = 0.0;
    let mut cnt = 0usize;
    for seed in 0..20u64 {
        let csi = receive_preamble_and_estimate_csi(
            &pre,
            &f,
            &noisy,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap();
        for q in 0..2 {
            for n in 0..64 {
                let e = &csi.h_hat[q][n] - &ch.h[q][n];
                acc += e.norm_squared();
                cnt += e.len();
            }
        }
        assert_eq!(csi.noise_var_hat, vec![1e-9; 2]);
    }
    let emp = acc / cnt as f64;
    let expect = 1e-9 / s.radio.total_tx_power_w;
    assert!((emp - expect).abs() / expect < 0.1, "{emp} vs {expect}");
}

#[test]
fn csi_noise_from_residual_with_long_preamble() {
    let s = reference_scenario();
    let ch = comm_channel::<f64>(&s);
    let (pre, f) = make_preamble::<f64>(&s);
    // Repeat the preamble twice so the LS fit leaves residual degrees of freedom.
    let mut long = pre.clone();
    for m in &mut long.symbols {
        let mut doubled = CMat::<f64>::zeros(16, 32);
        doubled.columns_mut(0, 16).copy_from(m);
        doubled.columns_mut(16, 16).copy_from(m);
        *m = doubled;
    }
    let csi =
        receive_preamble_and_estimate_csi(&long, &f, &ch, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    for q in 0..2 {
        let rel = (csi.noise_var_hat[q] - ch.noise_var[q]) / ch.noise_var[q];
        assert!(rel.abs() < 0.1, "{rel}");
    }
}

#[test]
fn rejects_mismatched_frame() {
    let s = reference_scenario();
    let ch = radar_channel::<f64>(&s);
    let (pre, _) = make_preamble::<f64>(&s);
    let f = PrecoderSet::scaled_identity(64, 16, 1.0);
    let mut x = precode(&pre, &f).unwrap();
    x.symbols.pop();
    assert!(propagate_radar(&x, &ch, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}
