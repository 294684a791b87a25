//! Subcommand implementations. Each one writes its artifacts into an output
//! directory and finishes by writing a checksummed manifest.

use std::fs;
use std::path::{Path, PathBuf};

use jrc_core::RangeAngleImage as Image;
use jrc_core::io::{read_complex_matrices, write_complex_matrices, write_image_csv, write_image_pgm, write_table, ComplexDtype};
use jrc_core::metrics::{achieved_sinr, beampattern, crlb, crlb_with_power, directed_power, TargetEstimate};
use jrc_core::{BeamformerSolution, CommChannel, CsiReport, Detection, Error, PrecoderSet, Result, Scenario};
use serde::Serialize;

use crate::artifacts::{read_csi, read_detections, write_csi, write_detections, RunManifest};
use crate::pipeline::{run_design, run_ndp, run_precoded, target_estimates, EtaOverride, NdpOutcome, Settings};

/// Display range of the PGM renderings.
pub const IMAGE_DISPLAY_DB: f64 = 40.0;
pub const BEAMPATTERN_STEP_DEG: f64 = 0.5;
pub const PRECODER_FILE: &str = "precoder.bin";
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

/// Where a command runs and what it reads.
#[derive(Debug, Clone)]
pub struct Job {
    pub scenario_path: PathBuf,
    pub scenario: Scenario,
    pub out: PathBuf,
    pub seed: u64,
    pub settings: Settings,
}

impl Job {
    pub fn new(scenario_path: &Path, out: &Path, seed: Option<u64>, settings: Option<Settings>) -> Result<Self> {
        let scenario = Scenario::load(scenario_path)?;
        for w in &scenario.warnings {
            log::warn!("{w}");
        }
        fs::create_dir_all(out)?;
        Ok(Job {
            scenario_path: scenario_path.to_path_buf(),
            seed: seed.unwrap_or(scenario.rng_seed),
            settings: settings.unwrap_or_else(|| Settings::for_scenario(&scenario)),
            scenario,
            out: out.to_path_buf(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn manifest(&self, command: &str, produced: &[PathBuf]) -> Result<RunManifest> {
        RunManifest::write(&self.scenario_path, command, self.seed, &self.out, produced)
    }
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn write_image(job: &Job, stem: &str, img: &Image, produced: &mut Vec<PathBuf>) -> Result<()> {
    let csv = job.path(&format!("{stem}.csv"));
    write_image_csv(&csv, img)?;
    let pgm = job.path(&format!("{stem}.pgm"));
    let sidecar = write_image_pgm(&pgm, img, IMAGE_DISPLAY_DB)?;
    produced.extend([csv, pgm, sidecar]);
    Ok(())
}

fn ndp_stage(job: &Job, produced: &mut Vec<PathBuf>) -> Result<NdpOutcome> {
    let scenario = job.path("scenario.json");
    job.scenario.save(&scenario)?;
    produced.push(scenario);
    let ndp = run_ndp(&job.scenario, &job.settings, job.seed)?;
    write_image(job, "ndp_image", &ndp.radar.image, produced)?;
    let det = job.path("detections.csv");
    write_detections(&det, &ndp.radar.detections)?;
    let csi = job.path("csi.json");
    write_csi(&csi, &ndp.csi)?;
    produced.extend([det, csi]);
    log::info!("NDP pass: {} detections", ndp.radar.detections.len());
    Ok(ndp)
}

/// Preamble imaging, detections and CSI feedback.
pub fn cmd_ndp(job: &Job) -> Result<(NdpOutcome, RunManifest)> {
    let mut produced = Vec::new();
    let ndp = ndp_stage(job, &mut produced)?;
    Ok((ndp, job.manifest("ndp", &produced)?))
}

fn design_stage(
    job: &Job,
    csi: &CsiReport,
    targets: &[TargetEstimate],
    produced: &mut Vec<PathBuf>,
) -> Result<BeamformerSolution> {
    let sol = run_design(&job.scenario, &job.settings, csi, targets)?;
    let bin = job.path(PRECODER_FILE);
    write_complex_matrices(&bin, "precoder", &sol.precoders.matrices, ComplexDtype::Complex128)?;
    let report = job.path("verification.json");
    write_json(&report, &sol.report)?;
    let pattern = job.path("beampattern.csv");
    let rows: Vec<Vec<String>> = beampattern(&sol.precoders, &job.scenario, -90.0, 90.0, BEAMPATTERN_STEP_DEG)
        .into_iter()
        .map(|(deg, p)| vec![deg.to_string(), p.to_string()])
        .collect();
    write_table(&pattern, &["azimuth_deg", "directed_power_w"], &rows)?;
    produced.extend([bin, report, pattern]);
    Ok(sol)
}

/// Precoder design from CSI and detection files (written by `ndp` by default).
pub fn cmd_design(job: &Job, csi_path: &Path, detections_path: &Path) -> Result<(BeamformerSolution, RunManifest)> {
    let csi = read_csi(csi_path)?;
    let targets = read_detections(detections_path)?;
    let mut produced = Vec::new();
    let sol = design_stage(job, &csi, &targets, &mut produced)?;
    Ok((sol, job.manifest("design", &produced)?))
}

pub fn read_precoders(path: &Path) -> Result<PrecoderSet> {
    let file = read_complex_matrices(path)?;
    if file.kind != "precoder" {
        return Err(Error::Parse(format!("{}: holds `{}`, not precoders", path.display(), file.kind)));
    }
    Ok(PrecoderSet { matrices: file.matrices })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetMetrics {
    pub range_m: f64,
    pub azimuth_deg: f64,
    pub gain_abs2: f64,
    pub directed_power_w: f64,
    pub reported_directed_power_w: f64,
    pub var_range_m2: f64,
    pub var_angle_rad2: f64,
    pub positioning_accuracy: f64,
    pub omni_positioning_accuracy: f64,
    /// Image magnitude at the NDP peak cell: precoded frame, then preamble (same estimator).
    pub precoded_bin_magnitude: f64,
    pub reference_bin_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverMetrics {
    pub azimuth_deg: f64,
    pub sinr_floor_db: Option<f64>,
    pub min_sinr_db: f64,
    pub mean_sinr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub targets: Vec<TargetMetrics>,
    pub receivers: Vec<ReceiverMetrics>,
    pub precoded_detections: usize,
    /// Largest gap between reported and recomputed directed powers.
    pub directed_power_mismatch_w: f64,
}

fn bin_magnitude(img: &Image, (r, c): (usize, usize)) -> f64 {
    img.magnitude[(r, c)]
}

fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// NDP, design, precoded transmission, precoded imaging and metrics.
pub fn cmd_run(job: &Job) -> Result<(RunMetrics, RunManifest)> {
    let s = &job.scenario;
    let mut produced = Vec::new();
    let ndp = ndp_stage(job, &mut produced)?;
    let estimates = target_estimates(&ndp.radar.detections);
    let sol = design_stage(job, &ndp.csi, &estimates, &mut produced)?;

    let f = read_precoders(&job.path(PRECODER_FILE))?;
    let pre = run_precoded(s, &job.settings, &f, job.seed)?;
    write_image(job, "precoded_image", &pre.radar.image, &mut produced)?;
    let det = job.path("precoded_detections.csv");
    write_detections(&det, &pre.radar.detections)?;
    produced.push(det);

    let omni_power = s.radio.total_tx_power_w;
    let mut mismatch = 0.0f64;
    let mut targets = Vec::with_capacity(estimates.len());
    for ((est, d), &reported) in estimates
        .iter()
        .zip(&ndp.radar.detections)
        .zip(&sol.report.target_directed_power_w)
    {
        let power = directed_power(&f, est.azimuth_rad, s);
        mismatch = mismatch.max((power - reported).abs() / reported.abs().max(1.0));
        let bound = crlb::<f64>(est, &f, s)?;
        let omni = crlb_with_power::<f64>(est, omni_power, s)?;
        targets.push(TargetMetrics {
            range_m: est.range_m,
            azimuth_deg: est.azimuth_rad.to_degrees(),
            gain_abs2: est.gain_abs2,
            directed_power_w: power,
            reported_directed_power_w: reported,
            var_range_m2: bound.var_range_m2,
            var_angle_rad2: bound.var_angle_rad2,
            positioning_accuracy: bound.positioning_accuracy,
            omni_positioning_accuracy: omni.positioning_accuracy,
            precoded_bin_magnitude: bin_magnitude(&pre.radar.image, d.peak_indices),
            reference_bin_magnitude: bin_magnitude(&pre.reference, d.peak_indices),
        });
    }
    if mismatch > CONSISTENCY_TOLERANCE {
        return Err(Error::Numerical(format!(
            "directed powers recomputed from {PRECODER_FILE} differ from the report by {mismatch:.3e}"
        )));
    }

    let comm = jrc_core::channel::comm_channel::<f64>(s);
    let sinr = achieved_sinr(&f, &comm)?;
    let receivers = s
        .receivers
        .iter()
        .enumerate()
        .map(|(q, r)| ReceiverMetrics {
            azimuth_deg: r.azimuth_rad.to_degrees(),
            sinr_floor_db: sol.report.sinr_floor_db.get(q).copied().flatten(),
            min_sinr_db: to_db(sinr.min[q]),
            mean_sinr_db: to_db(sinr.mean[q]),
        })
        .collect();
    let metrics = RunMetrics {
        targets,
        receivers,
        precoded_detections: pre.radar.detections.len(),
        directed_power_mismatch_w: mismatch,
    };
    let path = job.path("metrics.json");
    write_json(&path, &metrics)?;
    produced.push(path);
    Ok((metrics, job.manifest("run", &produced)?))
}

/// Parses `start:stop:step` or a comma-separated list of SINR floors in dB.
pub fn parse_eta_list(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Parse(format!("invalid SINR floor list `{text}`"));
    let num = |v: &str| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if !(h > 0.0) || b < a {
                return Err(bad());
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * h).collect())
        }
        [_] => text.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

/// One line of the trade-off table; empty vectors mark an infeasible floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// `None` for the omnidirectional baseline.
    pub eta_db: Option<f64>,
    pub feasible: bool,
    pub sinr_db: Vec<f64>,
    pub positioning_accuracy: Vec<f64>,
    pub directed_power_w: Vec<f64>,
}

impl SweepRow {
    pub fn min_directed_power(&self) -> f64 {
        self.directed_power_w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_positioning_accuracy(&self) -> f64 {
        self.positioning_accuracy.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn evaluate_row(
    eta_db: Option<f64>,
    f: &PrecoderSet,
    comm: &CommChannel,
    targets: &[TargetEstimate],
    s: &Scenario,
) -> Result<SweepRow> {
    let sinr = achieved_sinr(f, comm)?;
    let mut acc = Vec::with_capacity(targets.len());
    let mut pow = Vec::with_capacity(targets.len());
    for t in targets {
        let p = directed_power(f, t.azimuth_rad, s);
        acc.push(crlb_with_power::<f64>(t, p, s)?.positioning_accuracy);
        pow.push(p);
    }
    Ok(SweepRow {
        eta_db,
        feasible: true,
        sinr_db: sinr.min.iter().map(|&v| to_db(v)).collect(),
        positioning_accuracy: acc,
        directed_power_w: pow,
    })
}

/// Designs over a list of SINR floors; the last row is the omnidirectional baseline.
pub fn sweep_rows(
    s: &Scenario,
    settings: &Settings,
    csi: &CsiReport,
    detections: &[Detection],
    etas: &[f64],
) -> Result<Vec<SweepRow>> {
    let targets = target_estimates(detections);
    let comm = jrc_core::channel::comm_channel::<f64>(s);
    let mut rows = Vec::with_capacity(etas.len() + 1);
    for &eta in etas {
        let st = Settings {
            eta: EtaOverride::All(eta),
            ..settings.clone()
        };
        match run_design(s, &st, csi, &targets) {
            Ok(sol) => rows.push(evaluate_row(Some(eta), &sol.precoders, &comm, &targets, s)?),
            Err(Error::Infeasible(msg)) => {
                log::warn!("eta = {eta} dB: {msg}");
                rows.push(SweepRow {
                    eta_db: Some(eta),
                    feasible: false,
                    sinr_db: Vec::new(),
                    positioning_accuracy: Vec::new(),
                    directed_power_w: Vec::new(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let ntx = s.array.num_tx;
    let omni = PrecoderSet::scaled_identity(
        s.ofdm.num_subcarriers,
        ntx,
        (s.radio.total_tx_power_w / ntx as f64).sqrt(),
    );
    rows.push(evaluate_row(None, &omni, &comm, &targets, s)?);
    Ok(rows)
}

fn sweep_table(rows: &[SweepRow], num_receivers: usize, num_targets: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["eta_db".to_string(), "status".to_string()];
    header.extend((0..num_receivers).map(|q| format!("sinr_rx{q}_db")));
    header.extend((0..num_targets).map(|p| format!("pos_accuracy_t{p}")));
    header.extend((0..num_targets).map(|p| format!("directed_power_t{p}_w")));
    let body = rows
        .iter()
        .map(|r| {
            let mut line = vec![
                r.eta_db.map_or_else(|| "omni".to_string(), |e| e.to_string()),
                match (r.eta_db, r.feasible) {
                    (None, _) => "baseline",
                    (Some(_), true) => "feasible",
                    (Some(_), false) => "infeasible",
                }
                .to_string(),
            ];
            let cells = |v: &[f64], n: usize| -> Vec<String> {
                (0..n).map(|i| v.get(i).map_or_else(String::new, |x| x.to_string())).collect()
            };
            line.extend(cells(&r.sinr_db, num_receivers));
            line.extend(cells(&r.positioning_accuracy, num_targets));
            line.extend(cells(&r.directed_power_w, num_targets));
            line
        })
        .collect();
    (header, body)
}

/// SINR-floor sweep: NDP once, then one design per floor, written to `sweep.csv`.
pub fn cmd_sweep(job: &Job, etas: &[f64]) -> Result<(Vec<SweepRow>, RunManifest)> {
    if etas.is_empty() {
        return Err(Error::Invariant("the SINR floor list is empty".into()));
    }
    let mut produced = Vec::new();
    let ndp = ndp_stage(job, &mut produced)?;
    let rows = sweep_rows(&job.scenario, &job.settings, &ndp.csi, &ndp.radar.detections, etas)?;
    let (header, body) = sweep_table(&rows, job.scenario.receivers.len(), ndp.radar.detections.len());
    let path = job.path("sweep.csv");
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(&path, &header, &body)?;
    produced.push(path);
    Ok((rows, job.manifest("sweep", &produced)?))
}
