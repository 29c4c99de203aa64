//! Scenario files.
//!
//! A scenario file is TOML. Every dimensional value is a string carrying an
//! explicit unit (`"2 GHz"`, `"3 km"`, `"110 km/h"`, `"0.2 lambda"`); a bare
//! number in a dimensional field is rejected. Dimensionless values (antenna
//! gains, the width ratio, phase levels, element indices) are plain numbers.
//!
//! ```toml
//! [scenario]
//! carrier_frequency = "2 GHz"
//! orbit_radius = "3 km"
//! speed = "110 km/h"
//! ris_length = "10 m"             # optional for sweeps
//! # ris_width = "0.5 m"           # default: ris_length / width_ratio
//! width_ratio = 20
//! element_length = "0.2 lambda"
//! element_width = "0.2 lambda"
//! tx_position = ["-5 km", "0 km", "20 km"]
//! rx_position = ["5 km", "0 km", "20 km"]
//! tx_gain = 1.0
//! rx_gain = 1.0
//! # reference = [167, 9]          # default: centre element
//! min_distance = "1 m"
//!
//! [sweep]
//! ris_lengths = ["10 m", "12 m", "14 m"]
//! time = "10 s"                   # snapshot instant
//! start = "0 s"
//! stop = "60 s"
//! step = "1 s"
//! strategy = "both"
//! wrap_guard = "1 ns"
//!
//! [oracle]
//! levels = 16
//!
//! [output]
//! path = "results.csv"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use haps_ris::geometry::{Vec3, SPEED_OF_LIGHT};
use haps_ris::phases::DEFAULT_WRAP_GUARD;
use haps_ris::{ElementIndex, ScenarioConfig};
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_SNAPSHOT_TIME: f64 = 10.0;
pub const DEFAULT_TIME_START: f64 = 0.0;
pub const DEFAULT_TIME_STOP: f64 = 60.0;
pub const DEFAULT_TIME_STEP: f64 = 1.0;
pub const DEFAULT_WIDTH_RATIO: f64 = 20.0;
pub const DEFAULT_ORACLE_LEVELS: usize = 16;

/// A quantity string as written in the file, before unit resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityText(pub String);

impl<'de> Deserialize<'de> for QuantityText {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = QuantityText;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a quantity string with a unit suffix, e.g. \"3 km\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<QuantityText, E> {
                Ok(QuantityText(v.to_owned()))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<QuantityText, E> {
                Err(E::custom(format!("bare number {v} has no unit suffix")))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<QuantityText, E> {
                Err(E::custom(format!("bare number {v} has no unit suffix")))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<QuantityText, E> {
                Err(E::custom(format!("bare number {v} has no unit suffix")))
            }
        }
        deserializer.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Length,
    Speed,
    Time,
}

/// A length may be given in wavelengths; it resolves once the carrier is
/// known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Length {
    Meters(f64),
    Wavelengths(f64),
}

impl Length {
    pub fn meters(self, wavelength: f64) -> f64 {
        match self {
            Length::Meters(m) => m,
            Length::Wavelengths(w) => w * wavelength,
        }
    }
}

fn split_quantity<'a>(key: &str, text: &'a str) -> Result<(f64, &'a str), CliError> {
    let text = text.trim();
    // Longest prefix that reads as a number, so exponents are not mistaken
    // for units.
    let (value, unit) = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .rev()
        .find_map(|i| {
            text[..i]
                .trim()
                .parse::<f64>()
                .ok()
                .map(|v| (v, &text[i..]))
        })
        .ok_or_else(|| CliError::config(key, format!("cannot parse number in \"{text}\"")))?;
    if !value.is_finite() {
        return Err(CliError::config(key, format!("\"{text}\" is not finite")));
    }
    let unit = unit.trim();
    if unit.is_empty() {
        return Err(CliError::config(
            key,
            format!("\"{text}\" has no unit suffix"),
        ));
    }
    Ok((value, unit))
}

/// Parses a quantity into SI base units.
pub fn parse_quantity(key: &str, text: &str, dim: Dimension) -> Result<f64, CliError> {
    let (value, unit) = split_quantity(key, text)?;
    let scale = match (dim, unit) {
        (Dimension::Frequency, "Hz") => 1.0,
        (Dimension::Frequency, "kHz") => 1e3,
        (Dimension::Frequency, "MHz") => 1e6,
        (Dimension::Frequency, "GHz") => 1e9,
        (Dimension::Length, "m") => 1.0,
        (Dimension::Length, "km") => 1e3,
        (Dimension::Length, "cm") => 1e-2,
        (Dimension::Length, "mm") => 1e-3,
        (Dimension::Speed, "m/s") => 1.0,
        // Divided rather than scaled so 110 km/h is bitwise 110 / 3.6.
        (Dimension::Speed, "km/h") => return Ok(value / 3.6),
        (Dimension::Time, "s") => 1.0,
        (Dimension::Time, "ms") => 1e-3,
        (Dimension::Time, "us") => 1e-6,
        (Dimension::Time, "ns") => 1e-9,
        (Dimension::Time, "min") => 60.0,
        _ => {
            return Err(CliError::config(
                key,
                format!("unit \"{unit}\" is not a valid {dim:?} unit"),
            ))
        }
    };
    Ok(value * scale)
}

pub fn parse_length(key: &str, text: &str) -> Result<Length, CliError> {
    let (value, unit) = split_quantity(key, text)?;
    if unit == "lambda" {
        Ok(Length::Wavelengths(value))
    } else {
        parse_quantity(key, text, Dimension::Length).map(Length::Meters)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    scenario: RawScenario,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    oracle: RawOracle,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    carrier_frequency: QuantityText,
    orbit_radius: QuantityText,
    speed: QuantityText,
    ris_length: Option<QuantityText>,
    ris_width: Option<QuantityText>,
    width_ratio: Option<f64>,
    element_length: QuantityText,
    element_width: QuantityText,
    tx_position: [QuantityText; 3],
    rx_position: [QuantityText; 3],
    #[serde(default = "unit_gain")]
    tx_gain: f64,
    #[serde(default = "unit_gain")]
    rx_gain: f64,
    reference: Option<[usize; 2]>,
    min_distance: Option<QuantityText>,
}

fn unit_gain() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    ris_lengths: Option<Vec<QuantityText>>,
    time: Option<QuantityText>,
    start: Option<QuantityText>,
    stop: Option<QuantityText>,
    step: Option<QuantityText>,
    strategy: Option<String>,
    wrap_guard: Option<QuantityText>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    levels: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
}

/// Which phase designs to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategySet {
    Proposed,
    Reversed,
    Both,
}

impl StrategySet {
    pub fn parse(key: &str, text: &str) -> Result<Self, CliError> {
        match text {
            "proposed" => Ok(Self::Proposed),
            "reversed" => Ok(Self::Reversed),
            "both" => Ok(Self::Both),
            other => Err(CliError::config(
                key,
                format!("unknown strategy \"{other}\" (expected proposed, reversed or both)"),
            )),
        }
    }

    pub fn strategies(self) -> &'static [haps_ris::Strategy] {
        use haps_ris::Strategy::{Proposed, Reversed};
        match self {
            Self::Proposed => &[Proposed],
            Self::Reversed => &[Reversed],
            Self::Both => &[Proposed, Reversed],
        }
    }
}

/// Inclusive uniform time grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn samples(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// A fully parsed scenario file, SI units throughout.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub carrier_frequency: f64,
    pub orbit_radius: f64,
    pub speed: f64,
    pub ris_length: Option<f64>,
    pub ris_width: Option<f64>,
    pub width_ratio: f64,
    pub element_length: f64,
    pub element_width: f64,
    pub tx_position: [f64; 3],
    pub rx_position: [f64; 3],
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub reference: Option<ElementIndex>,
    pub min_distance: f64,
    pub ris_lengths: Vec<f64>,
    pub snapshot_time: f64,
    pub time_grid: TimeGrid,
    pub strategy: StrategySet,
    pub wrap_guard: f64,
    pub oracle_levels: usize,
    pub output_path: Option<PathBuf>,
    /// Hex SHA-256 of the file contents.
    pub content_hash: String,
}

fn time(key: &str, q: &Option<QuantityText>, default: f64) -> Result<f64, CliError> {
    q.as_ref()
        .map(|q| parse_quantity(key, &q.0, Dimension::Time))
        .transpose()
        .map(|v| v.unwrap_or(default))
}

fn position(key: &str, raw: &[QuantityText; 3]) -> Result<[f64; 3], CliError> {
    let mut out = [0.0; 3];
    for (slot, q) in out.iter_mut().zip(raw) {
        *slot = parse_quantity(key, &q.0, Dimension::Length)?;
    }
    Ok(out)
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::config("<file>", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawFile = toml::from_str(text)
            .map_err(|e| CliError::config("<file>", e.to_string().trim().to_owned()))?;
        let s = &raw.scenario;

        let carrier_frequency = parse_quantity(
            "scenario.carrier_frequency",
            &s.carrier_frequency.0,
            Dimension::Frequency,
        )?;
        if !(carrier_frequency > 0.0) {
            return Err(CliError::config(
                "scenario.carrier_frequency",
                "must be positive",
            ));
        }
        let wavelength = SPEED_OF_LIGHT / carrier_frequency;
        let length =
            |key: &str, q: &QuantityText| parse_length(key, &q.0).map(|l| l.meters(wavelength));

        let ris_lengths = raw
            .sweep
            .ris_lengths
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, q)| length(&format!("sweep.ris_lengths[{i}]"), q))
            .collect::<Result<Vec<_>, _>>()?;

        let time_grid = TimeGrid {
            start: time("sweep.start", &raw.sweep.start, DEFAULT_TIME_START)?,
            stop: time("sweep.stop", &raw.sweep.stop, DEFAULT_TIME_STOP)?,
            step: time("sweep.step", &raw.sweep.step, DEFAULT_TIME_STEP)?,
        };
        if !(time_grid.step > 0.0) {
            return Err(CliError::config("sweep.step", "must be positive"));
        }
        if time_grid.stop < time_grid.start {
            return Err(CliError::config(
                "sweep.stop",
                "must not precede sweep.start",
            ));
        }

        let width_ratio = s.width_ratio.unwrap_or(DEFAULT_WIDTH_RATIO);
        if !(width_ratio > 0.0) || !width_ratio.is_finite() {
            return Err(CliError::config("scenario.width_ratio", "must be positive"));
        }
        let reference = s
            .reference
            .map(|[p, q]| {
                if p == 0 || q == 0 {
                    Err(CliError::config(
                        "scenario.reference",
                        "indices are 1-based",
                    ))
                } else {
                    Ok(ElementIndex::new(p, q))
                }
            })
            .transpose()?;
        let wrap_guard = time(
            "sweep.wrap_guard",
            &raw.sweep.wrap_guard,
            DEFAULT_WRAP_GUARD,
        )?;
        if !(wrap_guard >= 0.0) {
            return Err(CliError::config("sweep.wrap_guard", "must be nonnegative"));
        }

        Ok(Self {
            carrier_frequency,
            orbit_radius: parse_quantity(
                "scenario.orbit_radius",
                &s.orbit_radius.0,
                Dimension::Length,
            )?,
            speed: parse_quantity("scenario.speed", &s.speed.0, Dimension::Speed)?,
            ris_length: s
                .ris_length
                .as_ref()
                .map(|q| length("scenario.ris_length", q))
                .transpose()?,
            ris_width: s
                .ris_width
                .as_ref()
                .map(|q| length("scenario.ris_width", q))
                .transpose()?,
            width_ratio,
            element_length: length("scenario.element_length", &s.element_length)?,
            element_width: length("scenario.element_width", &s.element_width)?,
            tx_position: position("scenario.tx_position", &s.tx_position)?,
            rx_position: position("scenario.rx_position", &s.rx_position)?,
            tx_gain: s.tx_gain,
            rx_gain: s.rx_gain,
            reference,
            min_distance: s
                .min_distance
                .as_ref()
                .map(|q| length("scenario.min_distance", q))
                .transpose()?
                .unwrap_or(1.0),
            ris_lengths,
            snapshot_time: time("sweep.time", &raw.sweep.time, DEFAULT_SNAPSHOT_TIME)?,
            time_grid,
            strategy: raw
                .sweep
                .strategy
                .as_deref()
                .map(|t| StrategySet::parse("sweep.strategy", t))
                .transpose()?
                .unwrap_or(StrategySet::Both),
            wrap_guard,
            oracle_levels: raw.oracle.levels.unwrap_or(DEFAULT_ORACLE_LEVELS),
            output_path: raw.output.path,
            content_hash: hex_digest(text.as_bytes()),
        })
    }

    /// Scenario configuration for a RIS of length `a`; the width is the
    /// explicit `ris_width` if given, else `a / width_ratio`.
    pub fn scenario_config(&self, ris_length: f64) -> ScenarioConfig {
        let [tx, ty, tz] = self.tx_position;
        let [rx, ry, rz] = self.rx_position;
        ScenarioConfig {
            carrier_frequency: self.carrier_frequency,
            orbit_radius: self.orbit_radius,
            speed: self.speed,
            ris_length,
            ris_width: self.ris_width.unwrap_or(ris_length / self.width_ratio),
            element_length: self.element_length,
            element_width: self.element_width,
            tx_position: Vec3::new(tx, ty, tz),
            rx_position: Vec3::new(rx, ry, rz),
            tx_gain: self.tx_gain,
            rx_gain: self.rx_gain,
            reference: self.reference,
            min_distance: self.min_distance,
        }
    }

    /// The single-RIS scenario used by `snapshot` and `oracle`.
    pub fn single_length(&self) -> Result<f64, CliError> {
        self.ris_length
            .ok_or_else(|| CliError::config("scenario.ris_length", "required for this subcommand"))
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
