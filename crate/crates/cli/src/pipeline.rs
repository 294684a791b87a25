//! Simulation stages shared by the subcommands and the acceptance tests.
//!
//! Every stage draws randomness from its own ChaCha stream of the run seed,
//! so changing one stage never perturbs the noise seen by another.

use std::str::FromStr;

use jrc_core::channel::{comm_channel, propagate_radar, radar_channel, receive_preamble_and_estimate_csi};
use jrc_core::imaging::{
    build_observation, detect_peaks, estimate_radar_channel, form_image, refine_and_estimate, EstimatorMode,
    ImagingConfig, DEFAULT_DYNAMIC_RANGE_DB,
};
use jrc_core::metrics::TargetEstimate;
use jrc_core::precoder::{design, SubcarrierPolicy};
use jrc_core::scenario::db_to_linear;
use jrc_core::waveform::{make_data_frame, make_preamble, precode};
use jrc_core::{
    BeamformerSolution, CsiReport, Detection, Error, PrecoderProblem, PrecoderSet, RadarChannel, RangeAngleImage,
    Result, Scenario, SymbolFrame,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    NdpNoise = 1,
    Csi = 2,
    DataSymbols = 3,
    PrecodedNoise = 4,
}

pub fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream as u64);
    r
}

/// SINR floor applied at design time.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum EtaOverride {
    /// Use the floors stored in the scenario.
    #[default]
    Scenario,
    /// Drop the SINR constraints.
    Off,
    /// One floor in dB for every receiver.
    All(f64),
    /// One floor in dB per receiver, in scenario order.
    PerReceiver(Vec<f64>),
}

impl FromStr for EtaOverride {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        match t.to_ascii_lowercase().as_str() {
            "" | "scenario" => return Ok(EtaOverride::Scenario),
            "off" | "none" | "-inf" => return Ok(EtaOverride::Off),
            _ => {}
        }
        let values = t
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("invalid SINR floor `{v}` (dB expected)")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Parse(format!("invalid SINR floor list `{t}`")));
        }
        Ok(match values.as_slice() {
            [one] => EtaOverride::All(*one),
            _ => EtaOverride::PerReceiver(values),
        })
    }
}

impl EtaOverride {
    /// Scenario copy with the receivers' floors replaced.
    pub fn apply(&self, s: &Scenario) -> Result<Scenario> {
        let mut out = s.clone();
        match self {
            EtaOverride::Scenario => {}
            EtaOverride::Off => out = s.with_eta_db(None),
            EtaOverride::All(db) => out = s.with_eta_db(Some(*db)),
            EtaOverride::PerReceiver(list) => {
                if list.len() != s.receivers.len() {
                    return Err(Error::Dimension(format!(
                        "{} SINR floors given for {} receivers",
                        list.len(),
                        s.receivers.len()
                    )));
                }
                for (q, db) in out.receivers.iter_mut().zip(list) {
                    q.min_sinr_linear = db_to_linear(*db);
                }
            }
        }
        Ok(out)
    }
}

/// Processing choices that do not live in the scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub imaging: ImagingConfig,
    pub policy: SubcarrierPolicy,
    pub eta: EtaOverride,
    pub max_detections: usize,
    pub dynamic_range_db: f64,
}

impl Settings {
    pub fn for_scenario(s: &Scenario) -> Self {
        Settings {
            imaging: ImagingConfig::from_scenario(s),
            policy: SubcarrierPolicy::default(),
            eta: EtaOverride::Scenario,
            max_detections: 16,
            dynamic_range_db: DEFAULT_DYNAMIC_RANGE_DB,
        }
    }
}

/// Image and detections of one radar frame.
#[derive(Debug, Clone)]
pub struct RadarPass {
    pub image: RangeAngleImage,
    pub detections: Vec<Detection>,
}

/// Estimates the radar channel from `x`, images it and extracts detections.
pub fn image_frame(
    s: &Scenario,
    settings: &Settings,
    channel: &RadarChannel,
    x: &SymbolFrame,
    mode: EstimatorMode,
    noise_rng: &mut ChaCha8Rng,
) -> Result<RadarPass> {
    let y = propagate_radar(x, channel, s.radio.radar_noise_w, noise_rng)?;
    let est = estimate_radar_channel(&y, x, mode)?;
    let image = form_image(&build_observation(&est), s, &settings.imaging)?;
    let peaks = detect_peaks(&image, settings.max_detections, settings.dynamic_range_db);
    let detections = refine_and_estimate(&image, &peaks)?;
    Ok(RadarPass { image, detections })
}

#[derive(Debug, Clone)]
pub struct NdpOutcome {
    pub radar: RadarPass,
    pub csi: CsiReport,
}

/// Omnidirectional preamble: radar imaging plus CSI feedback from every receiver.
pub fn run_ndp(s: &Scenario, settings: &Settings, seed: u64) -> Result<NdpOutcome> {
    let (preamble, omni) = make_preamble::<f64>(s);
    let x = precode(&preamble, &omni)?;
    let channel = radar_channel::<f64>(s);
    let radar = image_frame(
        s,
        settings,
        &channel,
        &x,
        EstimatorMode::LeastSquares,
        &mut rng(seed, Stream::NdpNoise),
    )?;
    let comm = comm_channel::<f64>(s);
    let csi = receive_preamble_and_estimate_csi(&preamble, &omni, &comm, &mut rng(seed, Stream::Csi))?;
    Ok(NdpOutcome { radar, csi })
}

/// Designs precoders from CSI and target estimates under the settings' SINR floors.
pub fn run_design(
    s: &Scenario,
    settings: &Settings,
    csi: &CsiReport,
    targets: &[TargetEstimate],
) -> Result<BeamformerSolution> {
    let s = settings.eta.apply(s)?;
    let problem = PrecoderProblem::new(&s, csi.clone(), targets.to_vec(), settings.policy)?;
    design(&problem, &s)
}

#[derive(Debug, Clone)]
pub struct PrecodedOutcome {
    pub radar: RadarPass,
    /// Preamble image formed with the same whitened estimator, for comparison.
    pub reference: RangeAngleImage,
}

/// Precoded QPSK frame through the radar channel, imaged with the whitened estimator.
pub fn run_precoded(s: &Scenario, settings: &Settings, f: &PrecoderSet, seed: u64) -> Result<PrecodedOutcome> {
    let channel = radar_channel::<f64>(s);
    let data = make_data_frame::<f64, _>(s, &mut rng(seed, Stream::DataSymbols));
    let x = precode(&data, f)?;
    let radar = image_frame(
        s,
        settings,
        &channel,
        &x,
        EstimatorMode::Whitened,
        &mut rng(seed, Stream::PrecodedNoise),
    )?;
    let (preamble, omni) = make_preamble::<f64>(s);
    let x0 = precode(&preamble, &omni)?;
    let reference = image_frame(
        s,
        settings,
        &channel,
        &x0,
        EstimatorMode::Whitened,
        &mut rng(seed, Stream::NdpNoise),
    )?
    .image;
    Ok(PrecodedOutcome { radar, reference })
}

pub fn target_estimates(detections: &[Detection]) -> Vec<TargetEstimate> {
    detections.iter().map(TargetEstimate::from).collect()
}
