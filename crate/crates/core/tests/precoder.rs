use jrc_core::channel::*;
use jrc_core::linalg::{hermitian_eig, max_abs, CMat};
use jrc_core::metrics::*;
use jrc_core::precoder::*;
use jrc_core::scalar::modulus;
use jrc_core::scenario::{reference_config, reference_scenario, ReceiverConfig, Scenario, TargetConfig};
use jrc_core::sdp::{SdpStatus, Sense};
use jrc_core::Error;

fn truth(s: &Scenario) -> Vec<TargetEstimate> {
    s.targets
        .iter()
        .map(|t| TargetEstimate {
            gain_abs2: target_gain::<f64>(t, &s.radio, s.wavelength_m()).norm_sqr(),
            range_m: t.range_m,
            azimuth_rad: t.azimuth_rad,
        })
        .collect()
}

fn problem(s: &Scenario) -> PrecoderProblem<f64> {
    let csi = CsiReport::perfect(&comm_channel::<f64>(s));
    PrecoderProblem::new(s, csi, truth(s), SubcarrierPolicy::CenterOnly).unwrap()
}

fn scenario_with(targets: &[f64], receivers: &[f64], gamma: Option<f64>) -> Scenario {
    let mut cfg = reference_config();
    cfg.targets = targets
        .iter()
        .map(|&az| TargetConfig {
            range_m: 25.0,
            azimuth_deg: az,
            rcs_dbsm: 20.0,
            phase_deg: 0.0,
        })
        .collect();
    cfg.receivers = receivers
        .iter()
        .map(|&az| ReceiverConfig {
            range_m: 25.0,
            azimuth_deg: az,
            rx_gain_db: None,
            noise_figure_db: None,
            min_sinr_db: None,
        })
        .collect();
    cfg.precoder.gamma_cor = gamma;
    Scenario::from_config(cfg).unwrap()
}

#[test]
fn policy_parsing() {
    assert_eq!("center".parse::<SubcarrierPolicy>().unwrap(), SubcarrierPolicy::CenterOnly);
    assert_eq!("all".parse::<SubcarrierPolicy>().unwrap(), SubcarrierPolicy::All);
    assert_eq!("stride:8".parse::<SubcarrierPolicy>().unwrap(), SubcarrierPolicy::Stride(8));
    assert!("stride:0".parse::<SubcarrierPolicy>().is_err());
    assert!("sometimes".parse::<SubcarrierPolicy>().is_err());
    assert_eq!(SubcarrierPolicy::Stride(16).designed(64), vec![0, 16, 32, 48]);
    assert_eq!(SubcarrierPolicy::CenterOnly.designed(64), vec![32]);
    assert_eq!(SubcarrierPolicy::Stride(4).to_string(), "stride:4");
}

#[test]
fn receiver_directions_from_csi() {
    let s = reference_scenario();
    let csi = CsiReport::perfect(&comm_channel::<f64>(&s));
    for (q, expect) in [0.0f64, 40.0].iter().enumerate() {
        let az = receiver_azimuth(&csi, q, &s).to_degrees();
        assert!((az - expect).abs() < 0.01, "{az}");
    }
}

#[test]
fn reference_angle_set_and_constraint_counts() {
    let s = reference_scenario();
    let p = problem(&s);
    let mut deg: Vec<f64> = p.angle_set.iter().map(|a| a.to_degrees().round()).collect();
    deg.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(deg, vec![-30.0, 0.0, 20.0, 40.0]);
    let sdp = assemble_sdp(&p, 32, &s).unwrap();
    let corr = sdp.constraints.iter().filter(|c| c.label.starts_with("corr")).count();
    assert_eq!(corr, 6 * 4);
    assert_eq!(sdp.constraints.iter().filter(|c| c.label.starts_with("sinr")).count(), 2);
    assert_eq!(sdp.constraints.iter().filter(|c| c.label.starts_with("target")).count(), 3);
    assert_eq!(sdp.block_sizes, vec![32, 32, 32]);

    let lone = scenario_with(&[10.0], &[], None);
    let sdp = assemble_sdp(&problem(&lone), 32, &lone).unwrap();
    assert_eq!(sdp.constraints.len(), 2);
    assert_eq!(sdp.count_sense(Sense::Le), 1);
    assert_eq!(sdp.count_sense(Sense::Ge), 1);
}

#[test]
fn weights_follow_positioning_constants() {
    let s = scenario_with(&[10.0, 10.0], &[], None);
    let w = compute_weights(&truth(&s), &s);
    assert_eq!(w, vec![1.0, 1.0]);

    let s = reference_scenario();
    let t = truth(&s);
    let w = compute_weights(&t, &s);
    assert!(w.iter().all(|&x| x > 0.0 && x <= 1.0));
    assert_eq!(w.iter().cloned().fold(0.0, f64::max), 1.0);
    // ω_p P is proportional to δ²_pos for any common directed power.
    let d: Vec<f64> = t
        .iter()
        .map(|e| crlb_with_power::<f64>(e, 1.0, &s).unwrap().positioning_accuracy)
        .collect();
    for p in 1..3 {
        assert!((w[p] / w[0] - d[p] / d[0]).abs() < 1e-12);
    }

    let mut far = t[0];
    far.azimuth_rad = std::f64::consts::FRAC_PI_2;
    let w = compute_weights(&[t[0], far], &s);
    assert!(w[1] > 0.0 && w[1] < 1e-300);
}

#[test]
fn single_target_beam_is_matched_steering() {
    let s = scenario_with(&[-25.0], &[], None);
    let sol = design(&problem(&s), &s).unwrap();
    assert_eq!(sol.designs[0].stats.status, SdpStatus::Optimal);
    let n = 32;
    let u = tx_steering::<f64>(n, (-25f64).to_radians(), &s);
    let (_, vecs) = hermitian_eig(&sol.precoders.covariance(n));
    let v = vecs.column(0);
    let cos = modulus((v.adjoint() * &u)[(0, 0)]) / u.norm();
    assert!(cos >= 0.999, "{cos}");
    let p = directed_power(&sol.precoders, (-25f64).to_radians(), &s);
    assert!((p / 16.0 - 1.0).abs() < 1e-4);
    assert!((sol.designs[0].tau / 16.0 - 1.0).abs() < 1e-4);
}

/// Independent value of `max_R min_p ω_p u_p^† R u_p` with `tr R ≤ P` via its
/// dual `min_λ P·λ_max(Σ λ_p ω_p u_p u_p^†)` over the simplex (grid + refinement).
fn simplex_oracle(s: &Scenario, weights: &[f64], n: usize) -> f64 {
    let us: Vec<CMat<f64>> = s
        .targets
        .iter()
        .map(|t| {
            let u = tx_steering::<f64>(n, t.azimuth_rad, s);
            &u * u.adjoint()
        })
        .collect();
    let value = |l: [f64; 3]| {
        let m = (0..3).fold(CMat::<f64>::zeros(16, 16), |acc, p| acc + us[p].map(|z| z * (l[p] * weights[p])));
        s.radio.total_tx_power_w * hermitian_eig(&m).0[0]
    };
    let mut best = ([1.0 / 3.0; 3], f64::INFINITY);
    let mut h = 0.05;
    let mut center = [1.0 / 3.0, 1.0 / 3.0];
    for _ in 0..12 {
        for i in -10..=10 {
            for j in -10..=10 {
                let a = center[0] + i as f64 * h;
                let b = center[1] + j as f64 * h;
                if a < 0.0 || b < 0.0 || a + b > 1.0 {
                    continue;
                }
                let v = value([a, b, 1.0 - a - b]);
                if v < best.1 {
                    best = ([a, b, 1.0 - a - b], v);
                }
            }
        }
        center = [best.0[0], best.0[1]];
        h /= 4.0;
    }
    best.1
}

#[test]
fn radar_only_design_equalizes_weighted_power() {
    // Loose correlation limit so the plain max-min dual applies.
    let s = scenario_with(&[0.0, -30.0, 20.0], &[], Some(100.0));
    let p = problem(&s);
    let sol = design(&p, &s).unwrap();
    let wp = &sol.report.target_weighted_power;
    let lo = wp.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = wp.iter().cloned().fold(0.0, f64::max);
    assert!(hi / lo - 1.0 < 0.01, "{wp:?}");
    let oracle = simplex_oracle(&s, &p.weights, 32);
    assert!((sol.designs[0].tau / oracle - 1.0).abs() < 1e-3, "{} vs {oracle}", sol.designs[0].tau);

    // With the default limit the equalization still holds.
    let s = scenario_with(&[0.0, -30.0, 20.0], &[], None);
    let sol = design(&problem(&s), &s).unwrap();
    let wp = &sol.report.target_weighted_power;
    let lo = wp.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = wp.iter().cloned().fold(0.0, f64::max);
    assert!(hi / lo - 1.0 < 0.01, "{wp:?}");
}

#[test]
fn objective_scales_with_budget() {
    let base = scenario_with(&[0.0, -30.0, 20.0], &[], None);
    let mut cfg = base.config().clone();
    cfg.radio.tx_power_dbm += 3.0;
    cfg.precoder.gamma_cor = Some(base.correlation_limit * 10f64.powf(0.3));
    let scaled = Scenario::from_config(cfg).unwrap();
    let a = design(&problem(&base), &base).unwrap().designs[0].tau;
    let b = design(&problem(&scaled), &scaled).unwrap().designs[0].tau;
    assert!((b / a - 10f64.powf(0.3)).abs() < 1e-4);
}

#[test]
fn reference_design_meets_constraints() {
    let s = reference_scenario();
    for eta in [15.0, 21.0] {
        let p = problem(&s).with_eta_db(Some(eta));
        let sol = design(&p, &s).unwrap();
        let r = &sol.report;
        assert!(r.max_power_w <= 1.0 + 1e-6);
        assert!(r.max_correlation_w <= s.correlation_limit + 1e-6);
        for q in 0..2 {
            assert!(r.min_sinr_designed_db[q] >= eta - 0.1);
            assert!(r.min_sinr_all_db[q] >= eta - 0.1);
        }
        // Recovered SINR equals the constraint evaluated on the covariance blocks.
        let sinr = achieved_sinr(&sol.precoders, &p.csi).unwrap();
        assert!((10.0 * sinr.per_subcarrier[0][32].log10() - eta).abs() < 0.01);
        assert_eq!(r.rank_one_gap[0].len(), 3);
        assert!(r.radar_power_dropped_w < 1e-6);
    }
}

#[test]
fn extraction_of_rank_one_blocks_is_exact() {
    let s = scenario_with(&[0.0], &[40.0], None);
    let csi = CsiReport::perfect(&comm_channel::<f64>(&s));
    let g = csi.response(0, 32);
    let f0 = g.map(|z| z * 1e3);
    let u = tx_steering::<f64>(32, 0.0, &s).map(|z| z * 0.2);
    let d = SubcarrierDesign {
        subcarrier: 32,
        blocks: vec![&f0 * f0.adjoint(), &u * u.adjoint()],
        tau: 0.0,
        stats: SolveStats {
            subcarrier: 32,
            status: SdpStatus::Optimal,
            iterations: 0,
            objective: 0.0,
            relative_gap: 0.0,
            primal_infeasibility: 0.0,
            dual_infeasibility: 0.0,
        },
    };
    assert!(rank_one_gap(&d.blocks[0]) < 1e-12);
    let (f, dropped) = extract_precoder(&d, &csi, 16);
    assert!(dropped < 1e-20);
    let rebuilt = &f * f.adjoint();
    let target = &d.blocks[0] + &d.blocks[1];
    assert!(max_abs(&(&rebuilt - &target)) < 1e-9 * max_abs(&target));
    let col = f.column(0);
    assert!(max_abs(&(&col * col.adjoint() - &d.blocks[0])) < 1e-9 * max_abs(&d.blocks[0]));
}

#[test]
fn infeasible_floors_are_reported() {
    let s = reference_scenario();
    let err = design(&problem(&s).with_eta_db(Some(45.0)), &s).unwrap_err();
    assert!(matches!(err, Error::Infeasible(ref m) if m.contains("reachable")));

    // Co-located receivers cannot both exceed 0 dB: each is the other's interferer.
    let twin = scenario_with(&[-30.0], &[10.0, 10.0], None);
    let err = design(&problem(&twin).with_eta_db(Some(10.0)), &twin).unwrap_err();
    match err {
        Error::Infeasible(m) => assert!(m.contains("sinr[0]") && m.contains("sinr[1]"), "{m}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn disabled_floor_concentrates_power_on_targets() {
    let s = reference_scenario();
    let free = design(&problem(&s).with_eta_db(None), &s).unwrap();
    let bound = design(&problem(&s).with_eta_db(Some(30.0)), &s).unwrap();
    let p40_free = directed_power(&free.precoders, 40f64.to_radians(), &s);
    let p40_bound = directed_power(&bound.precoders, 40f64.to_radians(), &s);
    assert!(p40_free < p40_bound);
    for (a, b) in free
        .report
        .target_directed_power_w
        .iter()
        .zip(&bound.report.target_directed_power_w)
    {
        assert!(a >= b);
    }
}

#[test]
fn strided_design_and_determinism() {
    let s = reference_scenario();
    let mut p = problem(&s).with_eta_db(Some(15.0));
    p.policy = SubcarrierPolicy::Stride(32);
    let a = design(&p, &s).unwrap();
    let b = design(&p, &s).unwrap();
    assert_eq!(a.report.designed_subcarriers, vec![0, 32]);
    assert_eq!(a.precoders, b.precoders);
    assert!(a.report.min_sinr_designed_db.iter().all(|&v| v >= 15.0 - 0.1));
    assert_ne!(a.precoders.matrices[0], a.precoders.matrices[40]);
    assert_eq!(a.precoders.matrices[40], a.precoders.matrices[32]);
}
