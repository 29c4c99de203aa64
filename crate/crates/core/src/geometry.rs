//! Element kinematics on the circular HAPS loiter and station geometry.
//!
//! The frame is centred on the loiter circle. The RIS lies in the `z = 0`
//! plane; ground stations sit at `z > 0`, i.e. the z-axis points from the
//! RIS plane toward the ground, so an elevation angle below `pi / 2` means
//! the station is in front of the reflecting face.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ElementIndex, Grid};
use crate::scalar::Scalar;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative slack when deciding whether `extent / pitch` is an integer.
const COUNT_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

/// A point in the loiter-centred frame, metres.
pub type Position3<T> = Vec3<T>;

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Unvalidated physical configuration. SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig<T> {
    /// Carrier frequency `f_c`, Hz.
    pub carrier_frequency: T,
    /// Loiter radius `R0`, m.
    pub orbit_radius: T,
    /// Platform ground speed `v`, m/s.
    pub speed: T,
    /// RIS length `a` (radial extent at `t = 0`), m.
    pub ris_length: T,
    /// RIS width `b`, m.
    pub ris_width: T,
    /// Element length `d_x`, m.
    pub element_length: T,
    /// Element width `d_y`, m.
    pub element_width: T,
    pub tx_position: Position3<T>,
    pub rx_position: Position3<T>,
    /// Station antenna gains (linear, dimensionless).
    pub tx_gain: T,
    pub rx_gain: T,
    /// Anchor element for the closed-form phases; `None` picks the centre.
    pub reference: Option<ElementIndex>,
    /// Smallest admissible station-element distance, m.
    pub min_distance: T,
}

impl<T: Scalar> ScenarioConfig<T> {
    /// The S-band loiter reference case: 2 GHz carrier, 3 km loiter radius
    /// at 110 km/h, stations at (-5, 0, 20) km and (5, 0, 20) km, elements of
    /// `lambda / 5` square and a `20 : 1` aspect RIS of the given length.
    pub fn loiter_reference(ris_length: T) -> Self {
        let fc = T::lit(2.0e9);
        let pitch = T::lit(SPEED_OF_LIGHT) / fc / T::lit(5.0);
        Self {
            carrier_frequency: fc,
            orbit_radius: T::lit(3_000.0),
            speed: T::lit(110.0) / T::lit(3.6),
            ris_length,
            ris_width: ris_length / T::lit(20.0),
            element_length: pitch,
            element_width: pitch,
            tx_position: Vec3::new(T::lit(-5_000.0), T::zero(), T::lit(20_000.0)),
            rx_position: Vec3::new(T::lit(5_000.0), T::zero(), T::lit(20_000.0)),
            tx_gain: T::one(),
            rx_gain: T::one(),
            reference: None,
            min_distance: T::one(),
        }
    }

    pub fn wavelength(&self) -> T {
        T::lit(SPEED_OF_LIGHT) / self.carrier_frequency
    }
}

/// Non-fatal configuration findings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScenarioWarning {
    /// Element dimension outside the usual `[lambda/10, lambda/5]` window.
    ElementSizeOutsideRange {
        axis: &'static str,
        size: f64,
        min: f64,
        max: f64,
    },
}

impl std::fmt::Display for ScenarioWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioWarning::ElementSizeOutsideRange {
                axis,
                size,
                min,
                max,
            } => write!(
                f,
                "element {axis} {size:.6e} m outside the recommended [{min:.6e}, {max:.6e}] m"
            ),
        }
    }
}

/// Orbit parameters of one element: it circles the loiter centre at radius
/// `radius`, leading the platform by `phase_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementKinematics<T> {
    pub index: ElementIndex,
    pub radius: T,
    pub phase_offset: T,
}

impl<T: Scalar> ElementKinematics<T> {
    fn angle(&self, speed: T, t: T) -> T {
        speed * t / self.radius + self.phase_offset
    }

    pub fn position(&self, speed: T, t: T) -> Position3<T> {
        let (s, c) = self.angle(speed, t).sin_cos();
        Vec3::new(self.radius * c, self.radius * s, T::zero())
    }

    pub fn velocity(&self, speed: T, t: T) -> Vec3<T> {
        let (s, c) = self.angle(speed, t).sin_cos();
        Vec3::new(-speed * s, speed * c, T::zero())
    }

    /// Revolution period `2 pi R_pq / v`; infinite for a stationary platform.
    pub fn period(&self, speed: T) -> T {
        if speed > T::zero() {
            T::two_pi() * self.radius / speed
        } else {
            T::infinity()
        }
    }
}

/// A validated scenario together with its derived element lattice.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    config: ScenarioConfig<T>,
    wavelength: T,
    reference: ElementIndex,
    kinematics: Grid<ElementKinematics<T>>,
    warnings: Vec<ScenarioWarning>,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(config: ScenarioConfig<T>) -> Result<Self> {
        validate(&config)?;
        let kinematics = build_grid(&config)?;
        let (p_count, q_count) = kinematics.dims();
        let reference = config
            .reference
            .unwrap_or_else(|| ElementIndex::new(p_count.div_ceil(2), q_count.div_ceil(2)));
        if !kinematics.contains(reference) {
            return Err(Error::ReferenceOutOfRange {
                index: reference,
                p_count,
                q_count,
            });
        }
        let warnings = pitch_warnings(&config);
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Self {
            wavelength: config.wavelength(),
            config,
            reference,
            kinematics,
            warnings,
        })
    }

    pub fn config(&self) -> &ScenarioConfig<T> {
        &self.config
    }

    pub fn carrier_frequency(&self) -> T {
        self.config.carrier_frequency
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }

    pub fn speed(&self) -> T {
        self.config.speed
    }

    pub fn speed_of_light(&self) -> T {
        T::lit(SPEED_OF_LIGHT)
    }

    /// Number of element columns `P = ceil(a / d_x)`.
    pub fn p_count(&self) -> usize {
        self.kinematics.p_count()
    }

    /// Number of element rows `Q = ceil(b / d_y)`.
    pub fn q_count(&self) -> usize {
        self.kinematics.q_count()
    }

    pub fn element_count(&self) -> usize {
        self.kinematics.len()
    }

    pub fn reference(&self) -> ElementIndex {
        self.reference
    }

    pub fn kinematics(&self) -> &Grid<ElementKinematics<T>> {
        &self.kinematics
    }

    pub fn warnings(&self) -> &[ScenarioWarning] {
        &self.warnings
    }

    /// Returns a copy anchored at a different reference element.
    pub fn with_reference(&self, reference: ElementIndex) -> Result<Self> {
        if !self.kinematics.contains(reference) {
            return Err(Error::ReferenceOutOfRange {
                index: reference,
                p_count: self.p_count(),
                q_count: self.q_count(),
            });
        }
        let mut out = self.clone();
        out.reference = reference;
        out.config.reference = Some(reference);
        Ok(out)
    }
}

fn require(ok: bool, field: &'static str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidScenario {
            field,
            reason: reason.to_owned(),
        })
    }
}

fn validate<T: Scalar>(c: &ScenarioConfig<T>) -> Result<()> {
    let pos = |x: T| x.is_finite() && x > T::zero();
    require(
        pos(c.carrier_frequency),
        "carrier_frequency",
        "must be finite and > 0",
    )?;
    require(
        pos(c.orbit_radius),
        "orbit_radius",
        "must be finite and > 0",
    )?;
    require(
        c.speed.is_finite() && c.speed >= T::zero(),
        "speed",
        "must be finite and >= 0",
    )?;
    require(pos(c.ris_length), "ris_length", "must be finite and > 0")?;
    require(pos(c.ris_width), "ris_width", "must be finite and > 0")?;
    require(
        pos(c.element_length),
        "element_length",
        "must be finite and > 0",
    )?;
    require(
        pos(c.element_width),
        "element_width",
        "must be finite and > 0",
    )?;
    require(c.tx_position.is_finite(), "tx_position", "must be finite")?;
    require(c.rx_position.is_finite(), "rx_position", "must be finite")?;
    require(
        c.tx_gain.is_finite() && c.tx_gain >= T::zero(),
        "tx_gain",
        "must be finite and >= 0",
    )?;
    require(
        c.rx_gain.is_finite() && c.rx_gain >= T::zero(),
        "rx_gain",
        "must be finite and >= 0",
    )?;
    require(
        c.min_distance.is_finite() && c.min_distance >= T::zero(),
        "min_distance",
        "must be finite and >= 0",
    )?;
    if let Some(r) = c.reference {
        require(r.p >= 1 && r.q >= 1, "reference", "indices are 1-based")?;
    }
    Ok(())
}

fn pitch_warnings<T: Scalar>(c: &ScenarioConfig<T>) -> Vec<ScenarioWarning> {
    let lambda = c.wavelength().to_f64().unwrap_or(f64::NAN);
    let (min, max) = (lambda / 10.0, lambda / 5.0);
    let slack = 1e-9 * max;
    [("length", c.element_length), ("width", c.element_width)]
        .into_iter()
        .filter_map(|(axis, size)| {
            let size = size.to_f64().unwrap_or(f64::NAN);
            (size < min - slack || size > max + slack).then_some(
                ScenarioWarning::ElementSizeOutsideRange {
                    axis,
                    size,
                    min,
                    max,
                },
            )
        })
        .collect()
}

/// `ceil(extent / pitch)`, snapping ratios within rounding of an integer.
pub fn element_count<T: Scalar>(extent: T, pitch: T) -> usize {
    let ratio = (extent / pitch).to_f64().unwrap_or(f64::NAN);
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() <= COUNT_SNAP * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    (n as usize).max(1)
}

/// Orbit radius and angular offset for every element of the lattice.
///
/// Element `(p, q)` sits at `(R0 - a/2 + (p - 1/2) d_x, -b/2 + (q - 1/2) d_y)`
/// when the platform is at angle zero. Every column offset must be strictly
/// positive so that each element orbits on its own side of the axis.
pub fn build_grid<T: Scalar>(config: &ScenarioConfig<T>) -> Result<Grid<ElementKinematics<T>>> {
    let p_count = element_count(config.ris_length, config.element_length);
    let q_count = element_count(config.ris_width, config.element_width);
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let radial = |p: usize| {
        config.orbit_radius - config.ris_length / two
            + (T::from_count(p) - half) * config.element_length
    };
    let innermost = radial(1);
    if !(innermost > T::zero()) {
        return Err(Error::AxisCrossing {
            p: 1,
            offset: innermost.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(Grid::from_fn(p_count, q_count, |index| {
        let x = radial(index.p);
        let y = -config.ris_width / two + (T::from_count(index.q) - half) * config.element_width;
        ElementKinematics {
            index,
            radius: x.hypot(y),
            phase_offset: y.atan2(x),
        }
    }))
}

pub fn element_position<T: Scalar>(
    k: &ElementKinematics<T>,
    scenario: &Scenario<T>,
    t: T,
) -> Position3<T> {
    k.position(scenario.speed(), t)
}

pub fn element_velocity<T: Scalar>(
    k: &ElementKinematics<T>,
    scenario: &Scenario<T>,
    t: T,
) -> Vec3<T> {
    k.velocity(scenario.speed(), t)
}

pub fn link_distance<T: Scalar>(element: Position3<T>, station: Position3<T>) -> T {
    (element - station).norm()
}

/// Elevation `theta = arccos((z_S - z) / d)` in `[0, pi]` and azimuth `phi`
/// in `[0, 2 pi)` of `station` as seen from `element`.
pub fn elevation_azimuth<T: Scalar>(
    element: Position3<T>,
    station: Position3<T>,
) -> Result<(T, T)> {
    let d = link_distance(element, station);
    if !(d > T::zero()) {
        return Err(Error::DegenerateDistance {
            distance: d.to_f64().unwrap_or(f64::NAN),
            min: 0.0,
        });
    }
    let cos_theta = ((station.z - element.z) / d).max(-T::one()).min(T::one());
    let theta = cos_theta.acos();
    let mut phi = (station.y - element.y).atan2(station.x - element.x);
    if phi < T::zero() {
        phi += T::two_pi();
    }
    if phi >= T::two_pi() {
        phi = T::zero();
    }
    Ok((theta, phi))
}
