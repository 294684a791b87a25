//! Experiment configuration and the physical constants derived from it.
//!
//! A [`Scenario`] is loaded from a JSON document (see [`ScenarioConfig`]),
//! validated once, and then shared read-only by every other module. The
//! original document is kept alongside the derived values so that saving and
//! re-loading a scenario is lossless.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reference noise temperature used when the file does not give one.
pub const DEFAULT_TEMPERATURE_K: f64 = 290.0;
pub const DEFAULT_PAD_FACTOR: usize = 4;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

/// Thermal noise power `k_B·T·B·NF` in watts.
pub fn thermal_noise_w(temperature_k: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    BOLTZMANN * temperature_k * bandwidth_hz * db_to_linear(noise_figure_db)
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

/// Top-level JSON document.
///
/// Angles are in degrees, powers in dBm/dB, the correlation limit in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub ofdm: OfdmConfig,
    pub array: ArrayConfig,
    pub radio: RadioConfig,
    #[serde(default)]
    pub targets: Vec<TargetConfig>,
    #[serde(default)]
    pub receivers: Vec<ReceiverConfig>,
    #[serde(default)]
    pub precoder: PrecoderConfig,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmConfig {
    pub carrier_frequency_hz: f64,
    pub num_subcarriers: usize,
    /// OFDM symbol duration without cyclic prefix.
    pub symbol_duration_s: f64,
    pub cyclic_prefix_s: f64,
    /// Optional; must equal `1 / symbol_duration_s` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcarrier_spacing_hz: Option<f64>,
    /// Defaults to the number of transmit antennas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_symbols: Option<usize>,
    #[serde(default = "default_pad")]
    pub pad_factor_range: usize,
    #[serde(default = "default_pad")]
    pub pad_factor_angle: usize,
}

fn default_pad() -> usize {
    DEFAULT_PAD_FACTOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub num_tx: usize,
    pub num_rx: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub rx_gain_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub range_m: f64,
    pub azimuth_deg: f64,
    pub rcs_dbsm: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub range_m: f64,
    pub azimuth_deg: f64,
    /// Defaults to `radio.rx_gain_db`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_gain_db: Option<f64>,
    /// Defaults to `radio.noise_figure_db`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_figure_db: Option<f64>,
    /// Overrides `precoder.eta_db` for this receiver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_sinr_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecoderConfig {
    /// Angular correlation limit in watts; defaults to `0.1 * P_tx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_cor: Option<f64>,
    /// Minimum SINR shared by all receivers unless overridden per receiver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_db: Option<f64>,
}

// ---------------------------------------------------------------------------
// Validated, derived model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmParams {
    pub carrier_frequency_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub num_subcarriers: usize,
    pub symbol_duration_s: f64,
    pub cyclic_prefix_s: f64,
    pub total_symbol_duration_s: f64,
    pub num_symbols: usize,
    pub pad_factor_range: usize,
    pub pad_factor_angle: usize,
}

impl OfdmParams {
    pub fn bandwidth_hz(&self) -> f64 {
        self.num_subcarriers as f64 * self.subcarrier_spacing_hz
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    /// Signed subcarrier offset `n' = n - N_sc/2` for storage index `n`.
    pub fn subcarrier_offset(&self, n: usize) -> i64 {
        n as i64 - (self.num_subcarriers / 2) as i64
    }

    /// Absolute frequency `f_c + n'·Δf` of storage index `n`.
    pub fn subcarrier_frequency_hz(&self, n: usize) -> f64 {
        self.carrier_frequency_hz + self.subcarrier_offset(n) as f64 * self.subcarrier_spacing_hz
    }

    /// Cyclic prefix length in samples at the critical rate `B`.
    pub fn cyclic_prefix_samples(&self) -> usize {
        (self.cyclic_prefix_s * self.bandwidth_hz()).round() as usize
    }

    pub fn padded_range_len(&self) -> usize {
        self.num_subcarriers * self.pad_factor_range
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub num_tx: usize,
    pub num_rx: usize,
    pub num_virtual: usize,
    pub tx_spacing_m: f64,
    pub rx_spacing_m: f64,
    pub virtual_spacing_m: f64,
}

impl ArrayGeometry {
    pub fn padded_angle_len(&self, pad: usize) -> usize {
        self.num_virtual * pad
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub total_tx_power_w: f64,
    pub noise_figure_db: f64,
    pub rx_gain_linear: f64,
    pub temperature_k: f64,
    pub speed_of_light_m_s: f64,
    /// Radar receiver noise variance per complex sample (W).
    pub radar_noise_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub range_m: f64,
    pub azimuth_rad: f64,
    pub rcs_m2: f64,
    pub phase_rad: f64,
}

impl Target {
    /// Cartesian position `(x, y) = (R sinΘ, R cosΘ)`; `x` runs along the array.
    pub fn cartesian(&self) -> (f64, f64) {
        (
            self.range_m * self.azimuth_rad.sin(),
            self.range_m * self.azimuth_rad.cos(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommReceiver {
    pub range_m: f64,
    pub azimuth_rad: f64,
    pub rx_gain_linear: f64,
    pub noise_figure_db: f64,
    /// Minimum SINR `η_q` (linear). Zero disables the constraint.
    pub min_sinr_linear: f64,
    pub noise_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedLimits {
    pub range_resolution_m: f64,
    pub angle_resolution_rad: f64,
    pub max_range_m: f64,
    pub max_range_isi_m: f64,
}

/// Validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ofdm: OfdmParams,
    pub array: ArrayGeometry,
    pub radio: RadioParams,
    pub targets: Vec<Target>,
    pub receivers: Vec<CommReceiver>,
    /// `γ_cor` in watts.
    pub correlation_limit: f64,
    pub rng_seed: u64,
    /// Non-fatal findings from validation (e.g. targets beyond the unambiguous range).
    pub warnings: Vec<String>,
    config: ScenarioConfig,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Invariant(msg()))
    }
}

fn finite(x: f64, field: &str) -> Result<()> {
    check(x.is_finite(), || format!("{field} must be finite (got {x})"))
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
            .map_err(|e| match e {
                Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
                other => other,
            })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        Self::from_config(config)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.config).expect("scenario config serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Validates `config` and computes every derived quantity.
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        let o = &config.ofdm;
        finite(o.carrier_frequency_hz, "ofdm.carrier_frequency_hz")?;
        check(o.carrier_frequency_hz > 0.0, || {
            "ofdm.carrier_frequency_hz must be positive".into()
        })?;
        check(o.num_subcarriers >= 2 && o.num_subcarriers % 2 == 0, || {
            format!(
                "ofdm.num_subcarriers must be even and >= 2 (got {})",
                o.num_subcarriers
            )
        })?;
        finite(o.symbol_duration_s, "ofdm.symbol_duration_s")?;
        check(o.symbol_duration_s > 0.0, || {
            "ofdm.symbol_duration_s must be positive".into()
        })?;
        finite(o.cyclic_prefix_s, "ofdm.cyclic_prefix_s")?;
        check(o.cyclic_prefix_s >= 0.0, || {
            "ofdm.cyclic_prefix_s must be non-negative".into()
        })?;
        let spacing = 1.0 / o.symbol_duration_s;
        if let Some(df) = o.subcarrier_spacing_hz {
            check(((df - spacing) / spacing).abs() < 1e-9, || {
                format!(
                    "subcarrier spacing {df} Hz violates orthogonality: expected 1/T_dft = {spacing} Hz"
                )
            })?;
        }
        check(o.pad_factor_range >= 1 && o.pad_factor_angle >= 1, || {
            "pad factors must be integers >= 1".into()
        })?;

        let a = &config.array;
        check(a.num_tx >= 1, || "array.num_tx must be >= 1".into())?;
        check(a.num_rx >= 1, || "array.num_rx must be >= 1".into())?;
        let num_symbols = o.num_symbols.unwrap_or(a.num_tx);
        check(num_symbols >= 1, || "ofdm.num_symbols must be >= 1".into())?;

        let r = &config.radio;
        for (x, f) in [
            (r.tx_power_dbm, "radio.tx_power_dbm"),
            (r.noise_figure_db, "radio.noise_figure_db"),
            (r.rx_gain_db, "radio.rx_gain_db"),
        ] {
            finite(x, f)?;
        }
        let temperature_k = r.temperature_k.unwrap_or(DEFAULT_TEMPERATURE_K);
        check(temperature_k > 0.0 && temperature_k.is_finite(), || {
            "radio.temperature_k must be positive".into()
        })?;

        let ofdm = OfdmParams {
            carrier_frequency_hz: o.carrier_frequency_hz,
            subcarrier_spacing_hz: spacing,
            num_subcarriers: o.num_subcarriers,
            symbol_duration_s: o.symbol_duration_s,
            cyclic_prefix_s: o.cyclic_prefix_s,
            total_symbol_duration_s: o.symbol_duration_s + o.cyclic_prefix_s,
            num_symbols,
            pad_factor_range: o.pad_factor_range,
            pad_factor_angle: o.pad_factor_angle,
        };
        let bandwidth = ofdm.bandwidth_hz();
        let half_lambda = ofdm.wavelength_m() / 2.0;
        let array = ArrayGeometry {
            num_tx: a.num_tx,
            num_rx: a.num_rx,
            num_virtual: a.num_tx * a.num_rx,
            tx_spacing_m: half_lambda,
            rx_spacing_m: a.num_tx as f64 * half_lambda,
            virtual_spacing_m: half_lambda,
        };
        let radio = RadioParams {
            total_tx_power_w: dbm_to_watts(r.tx_power_dbm),
            noise_figure_db: r.noise_figure_db,
            rx_gain_linear: db_to_linear(r.rx_gain_db),
            temperature_k,
            speed_of_light_m_s: SPEED_OF_LIGHT,
            radar_noise_w: thermal_noise_w(temperature_k, bandwidth, r.noise_figure_db),
        };

        let mut targets = Vec::with_capacity(config.targets.len());
        for (i, t) in config.targets.iter().enumerate() {
            for (x, f) in [
                (t.range_m, "range_m"),
                (t.azimuth_deg, "azimuth_deg"),
                (t.rcs_dbsm, "rcs_dbsm"),
                (t.phase_deg, "phase_deg"),
            ] {
                finite(x, &format!("targets[{i}].{f}"))?;
            }
            check(t.range_m > 0.0, || format!("targets[{i}].range_m must be positive"))?;
            check(t.azimuth_deg.abs() < 90.0, || {
                format!("targets[{i}].azimuth_deg must lie strictly inside (-90, 90)")
            })?;
            targets.push(Target {
                range_m: t.range_m,
                azimuth_rad: t.azimuth_deg.to_radians(),
                rcs_m2: db_to_linear(t.rcs_dbsm),
                phase_rad: t.phase_deg.to_radians(),
            });
        }

        check(config.receivers.len() < a.num_tx, || {
            format!(
                "number of receivers ({}) must be smaller than num_tx ({})",
                config.receivers.len(),
                a.num_tx
            )
        })?;
        let shared_eta = config.precoder.eta_db;
        let mut receivers = Vec::with_capacity(config.receivers.len());
        for (i, q) in config.receivers.iter().enumerate() {
            finite(q.range_m, &format!("receivers[{i}].range_m"))?;
            finite(q.azimuth_deg, &format!("receivers[{i}].azimuth_deg"))?;
            check(q.range_m > 0.0, || format!("receivers[{i}].range_m must be positive"))?;
            check(q.azimuth_deg.abs() < 90.0, || {
                format!("receivers[{i}].azimuth_deg must lie strictly inside (-90, 90)")
            })?;
            let eta_db = q.min_sinr_db.or(shared_eta).ok_or_else(|| {
                Error::Invariant(format!(
                    "receivers[{i}] has no min_sinr_db and precoder.eta_db is not set"
                ))
            })?;
            finite(eta_db, &format!("receivers[{i}].min_sinr_db"))?;
            let nf = q.noise_figure_db.unwrap_or(r.noise_figure_db);
            let gain_db = q.rx_gain_db.unwrap_or(r.rx_gain_db);
            finite(nf, &format!("receivers[{i}].noise_figure_db"))?;
            finite(gain_db, &format!("receivers[{i}].rx_gain_db"))?;
            receivers.push(CommReceiver {
                range_m: q.range_m,
                azimuth_rad: q.azimuth_deg.to_radians(),
                rx_gain_linear: db_to_linear(gain_db),
                noise_figure_db: nf,
                min_sinr_linear: db_to_linear(eta_db),
                noise_w: thermal_noise_w(temperature_k, bandwidth, nf),
            });
        }

        let correlation_limit = config
            .precoder
            .gamma_cor
            .unwrap_or(0.1 * radio.total_tx_power_w);
        check(correlation_limit > 0.0 && correlation_limit.is_finite(), || {
            "precoder.gamma_cor must be positive".into()
        })?;

        let mut scenario = Scenario {
            ofdm,
            array,
            radio,
            targets,
            receivers,
            correlation_limit,
            rng_seed: config.seed,
            warnings: Vec::new(),
            config,
        };
        let limits = scenario.derived_limits();
        let reach = limits.max_range_m.min(limits.max_range_isi_m);
        for (i, t) in scenario.targets.iter().enumerate() {
            if t.range_m >= reach {
                let msg = format!(
                    "target {i} at {:.3} m is beyond min(R_max, R_max_ISI) = {reach:.3} m",
                    t.range_m
                );
                log::warn!("{msg}");
                scenario.warnings.push(msg);
            }
        }
        Ok(scenario)
    }

    /// Resolution and maximum-range limits of the imaging chain.
    pub fn derived_limits(&self) -> DerivedLimits {
        let c = self.radio.speed_of_light_m_s;
        let b = self.ofdm.bandwidth_hz();
        DerivedLimits {
            range_resolution_m: c / (2.0 * b),
            angle_resolution_rad: 2.0 / self.array.num_virtual as f64,
            max_range_m: self.ofdm.num_subcarriers as f64 * c / (2.0 * b),
            max_range_isi_m: self.ofdm.cyclic_prefix_s * c / 2.0,
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        self.ofdm.wavelength_m()
    }

    /// Returns a copy with the target list replaced (config kept in sync).
    pub fn with_targets(&self, targets: Vec<TargetConfig>) -> Result<Self> {
        let mut cfg = self.config.clone();
        cfg.targets = targets;
        Self::from_config(cfg)
    }

    /// Returns a copy with the receiver list replaced.
    pub fn with_receivers(&self, receivers: Vec<ReceiverConfig>) -> Result<Self> {
        let mut cfg = self.config.clone();
        cfg.receivers = receivers;
        Self::from_config(cfg)
    }

    /// Returns a copy whose receivers all require `eta_db` (or have C3 disabled when `None`).
    pub fn with_eta_db(&self, eta_db: Option<f64>) -> Self {
        let mut s = self.clone();
        for q in &mut s.receivers {
            q.min_sinr_linear = eta_db.map(db_to_linear).unwrap_or(0.0);
        }
        s
    }
}

/// The Table-1 numerology with the three-vehicle / two-receiver scene.
pub fn reference_config() -> ScenarioConfig {
    ScenarioConfig {
        ofdm: OfdmConfig {
            carrier_frequency_hz: 76.5e9,
            num_subcarriers: 64,
            symbol_duration_s: 0.4e-6,
            cyclic_prefix_s: 0.4e-6,
            subcarrier_spacing_hz: None,
            num_symbols: None,
            pad_factor_range: DEFAULT_PAD_FACTOR,
            pad_factor_angle: DEFAULT_PAD_FACTOR,
        },
        array: ArrayConfig {
            num_tx: 16,
            num_rx: 4,
        },
        radio: RadioConfig {
            tx_power_dbm: 30.0,
            noise_figure_db: 15.0,
            rx_gain_db: 20.0,
            temperature_k: None,
        },
        targets: [0.0, -30.0, 20.0]
            .iter()
            .map(|&az| TargetConfig {
                range_m: 25.0,
                azimuth_deg: az,
                rcs_dbsm: 20.0,
                phase_deg: 0.0,
            })
            .collect(),
        receivers: [0.0, 40.0]
            .iter()
            .map(|&az| ReceiverConfig {
                range_m: 25.0,
                azimuth_deg: az,
                rx_gain_db: None,
                noise_figure_db: None,
                min_sinr_db: None,
            })
            .collect(),
        precoder: PrecoderConfig {
            gamma_cor: None,
            eta_db: Some(21.0),
        },
        seed: 1,
    }
}

pub fn reference_scenario() -> Scenario {
    Scenario::from_config(reference_config()).expect("reference scenario is valid")
}

/// Wraps an angle in radians to degrees for reporting.
pub fn rad_to_deg(x: f64) -> f64 {
    x * 180.0 / PI
}
