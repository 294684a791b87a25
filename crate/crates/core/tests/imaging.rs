use jrc_core::channel::*;
use jrc_core::imaging::*;
use jrc_core::linalg::{frobenius, psd_sqrt, CMat};
use jrc_core::scalar::modulus;
use jrc_core::scenario::{reference_scenario, Scenario, TargetConfig};
use jrc_core::waveform::{make_data_frame, make_preamble, precode, FrameKind, SymbolFrame};
use jrc_core::Error;
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

fn noiseless_observation(s: &Scenario) -> RadarObservation<f64> {
    let (frame, f) = make_preamble::<f64>(s);
    let x = precode(&frame, &f).unwrap();
    let ch = radar_channel::<f64>(s);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let y = propagate_radar(&x, &ch, 0.0, &mut rng).unwrap();
    build_observation(&estimate_radar_channel(&y, &x, EstimatorMode::LeastSquares).unwrap())
}

#[test]
fn least_squares_recovers_channel_exactly() {
    let s = reference_scenario();
    let (frame, f) = make_preamble::<f64>(&s);
    let x = precode(&frame, &f).unwrap();
    let ch = radar_channel::<f64>(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y = propagate_radar(&x, &ch, 0.0, &mut rng).unwrap();
    let est = estimate_radar_channel(&y, &x, EstimatorMode::LeastSquares).unwrap();
    assert_eq!(est.matrices.len(), 64);
    for (h_hat, h) in est.matrices.iter().zip(&ch.total) {
        assert!(frobenius(&(h_hat - h)) / frobenius(h) < 1e-9);
    }
    assert_eq!(est.amplitude_gain, 1.0);
}

#[test]
fn least_squares_rejects_rank_deficient_frame() {
    let s = reference_scenario();
    let ntx = s.array.num_tx;
    let x = SymbolFrame {
        symbols: vec![CMat::<f64>::from_element(ntx, ntx, Complex::new(1.0, 0.0)); 64],
        kind: FrameKind::Data,
    };
    let ch = radar_channel::<f64>(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y = propagate_radar(&x, &ch, 0.0, &mut rng).unwrap();
    let err = estimate_radar_channel(&y, &x, EstimatorMode::LeastSquares).unwrap_err();
    assert!(matches!(err, Error::IllConditioned { subcarrier: 0, .. }));
    assert!(estimate_radar_channel(&y, &x, EstimatorMode::Whitened).is_ok());
}

#[test]
fn whitened_estimator_is_channel_times_gram_root() {
    let s = reference_scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = make_data_frame::<f64, _>(&s, &mut rng);
    let ch = radar_channel::<f64>(&s);
    let y = propagate_radar(&x, &ch, 0.0, &mut rng).unwrap();
    let est = estimate_radar_channel(&y, &x, EstimatorMode::Whitened).unwrap();
    for n in [0, 31, 63] {
        let gram = &x.symbols[n] * x.symbols[n].adjoint();
        let expect = &ch.total[n] * psd_sqrt(&gram);
        assert!(frobenius(&(&est.matrices[n] - &expect)) / frobenius(&expect) < 1e-8);
    }
    assert_eq!(EstimatorMode::for_kind(FrameKind::Data), EstimatorMode::Whitened);
}

#[test]
fn observation_rows_follow_virtual_steering() {
    let s = one_target(25.0, 20.0);
    let ch = radar_channel_plane_wave::<f64>(&s);
    let est = RadarChannelEstimate {
        matrices: ch.total.clone(),
        mode: EstimatorMode::LeastSquares,
        amplitude_gain: 1.0,
    };
    let obs = build_observation(&est);
    assert_eq!(obs.data.shape(), (64, 64));
    for n in [0, 40] {
        let u = virtual_steering::<f64>(n, s.targets[0].azimuth_rad, &s);
        let ratio0 = obs.data[(n, 0)] / u[0];
        for m in 0..64 {
            let e = modulus(obs.data[(n, m)] - ratio0 * u[m]) / modulus(ratio0);
            assert!(e < 1e-10, "m {m} err {e}");
        }
    }
}

#[test]
fn plain_image_preserves_energy() {
    let s = reference_scenario();
    let mut obs = noiseless_observation(&s);
    obs.decoupled = true;
    let img = form_image(&obs, &s, &ImagingConfig::plain()).unwrap();
    let e_in: f64 = obs.data.iter().map(|z| z.norm_sqr()).sum();
    let e_out: f64 = img.magnitude.iter().map(|a| a * a).sum();
    assert!((e_out / (64.0 * 64.0 * e_in) - 1.0).abs() < 1e-10);
}

#[test]
fn off_grid_target_is_located_precisely() {
    let s = one_target(25.3, 20.0);
    let obs = noiseless_observation(&s);
    let img = form_image(&obs, &s, &ImagingConfig::from_scenario(&s)).unwrap();
    assert_eq!(img.shape(), (256, 256));
    let peaks = detect_peaks(&img, 8, DEFAULT_DYNAMIC_RANGE_DB);
    assert_eq!(peaks.len(), 1);
    let det = refine_and_estimate(&img, &peaks).unwrap();
    assert!((det[0].range_m - 25.3).abs() < 0.05, "range {}", det[0].range_m);
    assert!((det[0].azimuth_rad.to_degrees() - 20.0).abs() < 0.1);
    let alpha = modulus(target_gain::<f64>(&s.targets[0], &s.radio, s.wavelength_m()));
    let rel = modulus(det[0].gain_estimate) / alpha;
    assert!((rel - 1.0).abs() < 0.1, "gain ratio {rel}");
}

#[test]
fn spline_decoupling_also_locates_target() {
    let s = one_target(25.3, -30.0);
    let obs = noiseless_observation(&s);
    let cfg = ImagingConfig {
        interpolator: Interpolator::CubicSpline,
        ..ImagingConfig::from_scenario(&s)
    };
    let img = form_image(&obs, &s, &cfg).unwrap();
    let det = refine_and_estimate(&img, &detect_peaks(&img, 4, 25.0)).unwrap();
    assert_eq!(det.len(), 1);
    assert!((det[0].range_m - 25.3).abs() < 0.05);
    assert!((det[0].azimuth_rad.to_degrees() + 30.0).abs() < 0.1);
}

#[test]
fn decoupling_aligns_spatial_phase_slopes() {
    let s = one_target(25.0, -30.0);
    let obs = noiseless_observation(&s);
    let spread = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let before = spread(&phase_slopes(&obs));
    let dec = decouple(&obs, &s, Interpolator::default());
    assert!(dec.decoupled);
    let after = spread(&phase_slopes(&dec));
    assert!(after < 1e-3, "after {after}");
    assert!(after < before, "before {before} after {after}");

    // In the far-field model every row should carry π sin Θ after resampling.
    let ch = radar_channel_plane_wave::<f64>(&s);
    let plane = build_observation(&RadarChannelEstimate {
        matrices: ch.total,
        mode: EstimatorMode::LeastSquares,
        amplitude_gain: 1.0,
    });
    let target = std::f64::consts::PI * (-30f64).to_radians().sin();
    let slopes = phase_slopes(&decouple(&plane, &s, Interpolator::default()));
    assert!(slopes.iter().all(|v| (v - target).abs() < 5e-4));
}

#[test]
fn three_targets_resolved_in_noise() {
    let s = reference_scenario();
    let (frame, f) = make_preamble::<f64>(&s);
    let x = precode(&frame, &f).unwrap();
    let ch = radar_channel::<f64>(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let y = propagate_radar(&x, &ch, s.radio.radar_noise_w, &mut rng).unwrap();
    let obs = build_observation(&estimate_radar_channel(&y, &x, EstimatorMode::LeastSquares).unwrap());
    let img = form_image(&obs, &s, &ImagingConfig::from_scenario(&s)).unwrap();
    let mut det = refine_and_estimate(&img, &detect_peaks(&img, 10, 25.0)).unwrap();
    assert_eq!(det.len(), 3);
    det.sort_by(|a, b| a.azimuth_rad.partial_cmp(&b.azimuth_rad).unwrap());
    for (d, truth) in det.iter().zip([-30.0f64, 0.0, 20.0]) {
        assert!((d.azimuth_rad.to_degrees() - truth).abs() < 1.0);
        assert!((d.range_m - 25.0).abs() < 0.2);
    }
}

#[test]
fn noise_only_image_has_few_detections() {
    let s = reference_scenario().with_targets(vec![]).unwrap();
    let (frame, f) = make_preamble::<f64>(&s);
    let x = precode(&frame, &f).unwrap();
    let ch = radar_channel::<f64>(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let y = propagate_radar(&x, &ch, s.radio.radar_noise_w, &mut rng).unwrap();
    let obs = build_observation(&estimate_radar_channel(&y, &x, EstimatorMode::LeastSquares).unwrap());
    let img = form_image(&obs, &s, &ImagingConfig::from_scenario(&s)).unwrap();
    let peaks = detect_peaks(&img, 100, 25.0);
    assert!(peaks.len() <= 3, "{} false alarms", peaks.len());
}

#[test]
fn border_peak_is_rejected() {
    let s = one_target(25.0, 0.0);
    let obs = noiseless_observation(&s);
    let img = form_image(&obs, &s, &ImagingConfig::from_scenario(&s)).unwrap();
    assert!(matches!(
        refine_and_estimate(&img, &[(0, 5)]),
        Err(Error::PeakOnBorder { row: 0, col: 5 })
    ));
}

#[test]
fn single_precision_pipeline() {
    let s = one_target(25.3, 20.0);
    let (frame, f) = make_preamble::<f32>(&s);
    let x = precode(&frame, &f).unwrap();
    let ch = radar_channel::<f32>(&s);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let y = propagate_radar(&x, &ch, 0.0, &mut rng).unwrap();
    let obs = build_observation(&estimate_radar_channel(&y, &x, EstimatorMode::LeastSquares).unwrap());
    let img = form_image(&obs, &s, &ImagingConfig::from_scenario(&s)).unwrap();
    let det = refine_and_estimate(&img, &detect_peaks(&img, 4, 25.0)).unwrap();
    assert_eq!(det.len(), 1);
    assert!((det[0].range_m - 25.3).abs() < 0.05);
}
