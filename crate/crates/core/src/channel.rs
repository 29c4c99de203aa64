//! Per-element cascade channel: Friis amplitude, path delay and its rate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    elevation_azimuth, link_distance, ElementKinematics, Position3, Scenario, Vec3,
};
use crate::grid::{ElementIndex, Grid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementChannel<T> {
    pub index: ElementIndex,
    /// Cascade amplitude `Gamma_pq`, dimensionless.
    pub gamma: T,
    /// Cascade delay `(d_T + d_R) / c0`, s.
    pub tau: T,
    /// `d tau / dt`, s/s.
    pub tau_rate: T,
}

/// The full element grid evaluated at one instant.
#[derive(Debug, Clone)]
pub struct ChannelSnapshot<'a, T> {
    scenario: &'a Scenario<T>,
    t: T,
    elements: Grid<ElementChannel<T>>,
}

impl<'a, T: Scalar> ChannelSnapshot<'a, T> {
    /// Wraps externally computed element channels. Panics if the grid does
    /// not match the scenario lattice.
    pub fn from_elements(
        scenario: &'a Scenario<T>,
        t: T,
        elements: Grid<ElementChannel<T>>,
    ) -> Self {
        assert_eq!(
            elements.dims(),
            (scenario.p_count(), scenario.q_count()),
            "snapshot grid must match the scenario lattice"
        );
        Self {
            scenario,
            t,
            elements,
        }
    }

    pub fn scenario(&self) -> &'a Scenario<T> {
        self.scenario
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn elements(&self) -> &Grid<ElementChannel<T>> {
        &self.elements
    }

    pub fn dims(&self) -> (usize, usize) {
        self.elements.dims()
    }

    pub fn carrier_frequency(&self) -> T {
        self.scenario.carrier_frequency()
    }

    pub fn element(&self, index: ElementIndex) -> &ElementChannel<T> {
        &self.elements[index]
    }

    pub fn taus(&self) -> Grid<T> {
        self.elements.map(|e| e.tau)
    }

    pub fn min_tau(&self) -> T {
        self.elements
            .iter()
            .map(|e| e.tau)
            .fold(T::infinity(), T::min)
    }

    pub fn max_tau(&self) -> T {
        self.elements
            .iter()
            .map(|e| e.tau)
            .fold(T::neg_infinity(), T::max)
    }
}

/// Planar element pattern `(4 pi / lambda^2) d_x d_y cos(theta)` on the
/// front half-space, zero from `pi / 2` on.
pub fn element_gain<T: Scalar>(theta: T, scenario: &Scenario<T>) -> T {
    let c = scenario.config();
    planar_gain(
        theta,
        scenario.wavelength(),
        c.element_length,
        c.element_width,
    )
}

fn planar_gain<T: Scalar>(theta: T, wavelength: T, dx: T, dy: T) -> T {
    if theta >= T::FRAC_PI_2() {
        return T::zero();
    }
    let aperture = T::lit(4.0) * T::PI() / (wavelength * wavelength) * dx * dy;
    (aperture * theta.cos()).max(T::zero())
}

/// Two-hop Friis amplitude `lambda^2 / (16 pi^2 d_T d_R) * sqrt(prod gains)`.
///
/// `gains` holds both station gains and both element gains; they all sit
/// under one square root.
pub fn friis_cascade<T: Scalar>(wavelength: T, d_tx: T, d_rx: T, gains: [T; 4]) -> T {
    let product = gains.iter().fold(T::one(), |acc, &g| acc * g);
    wavelength * wavelength / (T::lit(16.0) * T::PI() * T::PI() * d_tx * d_rx) * product.sqrt()
}

struct Link<T> {
    distance: T,
    theta: T,
    /// `d distance / dt`, m/s.
    closing_rate: T,
}

fn link<T: Scalar>(
    pos: Position3<T>,
    vel: Vec3<T>,
    station: Position3<T>,
    scenario: &Scenario<T>,
) -> Result<Link<T>> {
    let distance = link_distance(pos, station);
    let min = scenario.config().min_distance;
    if !(distance > min) || !(distance > T::zero()) {
        return Err(Error::DegenerateDistance {
            distance: distance.to_f64().unwrap_or(f64::NAN),
            min: min.to_f64().unwrap_or(f64::NAN),
        });
    }
    let (theta, _phi) = elevation_azimuth(pos, station)?;
    Ok(Link {
        distance,
        theta,
        closing_rate: (pos - station).dot(vel) / distance,
    })
}

fn links<T: Scalar>(
    k: &ElementKinematics<T>,
    scenario: &Scenario<T>,
    t: T,
) -> Result<[Link<T>; 2]> {
    let pos = k.position(scenario.speed(), t);
    let vel = k.velocity(scenario.speed(), t);
    let c = scenario.config();
    Ok([
        link(pos, vel, c.tx_position, scenario)?,
        link(pos, vel, c.rx_position, scenario)?,
    ])
}

fn amplitude_from_links<T: Scalar>(scenario: &Scenario<T>, [tx, rx]: &[Link<T>; 2]) -> T {
    let c = scenario.config();
    friis_cascade(
        scenario.wavelength(),
        tx.distance,
        rx.distance,
        [
            c.tx_gain,
            c.rx_gain,
            element_gain(tx.theta, scenario),
            element_gain(rx.theta, scenario),
        ],
    )
}

pub fn cascade_amplitude<T: Scalar>(
    k: &ElementKinematics<T>,
    scenario: &Scenario<T>,
    t: T,
) -> Result<T> {
    Ok(amplitude_from_links(scenario, &links(k, scenario, t)?))
}

pub fn cascade_delay<T: Scalar>(k: &ElementKinematics<T>, scenario: &Scenario<T>, t: T) -> T {
    let pos = k.position(scenario.speed(), t);
    let c = scenario.config();
    (link_distance(pos, c.tx_position) + link_distance(pos, c.rx_position))
        / scenario.speed_of_light()
}

/// Analytic `d tau / dt`: projection of the element velocity onto both
/// station-to-element unit vectors, over `c0`.
pub fn cascade_delay_rate<T: Scalar>(
    k: &ElementKinematics<T>,
    scenario: &Scenario<T>,
    t: T,
) -> Result<T> {
    let [tx, rx] = links(k, scenario, t)?;
    Ok((tx.closing_rate + rx.closing_rate) / scenario.speed_of_light())
}

pub fn element_channel<T: Scalar>(
    k: &ElementKinematics<T>,
    scenario: &Scenario<T>,
    t: T,
) -> Result<ElementChannel<T>> {
    let l = links(k, scenario, t).map_err(|e| e.at(k.index))?;
    let c0 = scenario.speed_of_light();
    Ok(ElementChannel {
        index: k.index,
        gamma: amplitude_from_links(scenario, &l),
        tau: (l[0].distance + l[1].distance) / c0,
        tau_rate: (l[0].closing_rate + l[1].closing_rate) / c0,
    })
}

/// Evaluates every element at time `t`. Elements are mapped in parallel;
/// the result does not depend on the worker count.
pub fn snapshot<T: Scalar>(scenario: &Scenario<T>, t: T) -> Result<ChannelSnapshot<'_, T>> {
    let kin = scenario.kinematics();
    let data = kin
        .as_slice()
        .par_iter()
        .map(|k| element_channel(k, scenario, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelSnapshot {
        scenario,
        t,
        elements: Grid::from_vec(kin.p_count(), kin.q_count(), data),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScenarioConfig;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn single_element() -> Scenario<f64> {
        let mut c = ScenarioConfig::<f64>::loiter_reference(1.0);
        c.ris_length = c.element_length;
        c.ris_width = c.element_width;
        Scenario::new(c).unwrap()
    }

    #[test]
    fn element_gain_values() {
        let s = single_element();
        assert_relative_eq!(element_gain(0.0, &s), 4.0 * PI / 25.0, max_relative = 1e-12);
        assert_relative_eq!(
            element_gain(FRAC_PI_3, &s),
            2.0 * PI / 25.0,
            max_relative = 1e-12
        );
        assert_eq!(element_gain(FRAC_PI_2, &s), 0.0);
        assert_eq!(element_gain(2.0, &s), 0.0);
        assert_eq!(element_gain(PI, &s), 0.0);
    }

    #[test]
    fn neutral_gains_reduce_to_friis() {
        let lambda = 0.15;
        let d = 20_000.0;
        let g = friis_cascade(lambda, d, d, [1.0; 4]);
        assert_relative_eq!(
            g,
            lambda * lambda / (16.0 * PI * PI * d * d),
            max_relative = 1e-15
        );
    }

    // Values frozen from an independent straight-line evaluation of the
    // two-hop Friis product for the element at (3000, 0, 0).
    #[test]
    fn single_element_reference_values() {
        let s = single_element();
        let k = s.kinematics()[ElementIndex::new(1, 1)];
        assert_relative_eq!(
            cascade_amplitude(&k, &s, 0.0).unwrap(),
            1.587767939153268e-13,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cascade_delay(&k, &s, 0.0),
            1.388974584236532e-4,
            max_relative = 1e-13
        );
        assert_eq!(cascade_delay_rate(&k, &s, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            cascade_amplitude(&k, &s, 10.0).unwrap(),
            1.587708836337366e-13,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            cascade_delay(&k, &s, 10.0),
            1.388983191319315e-4,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            cascade_delay_rate(&k, &s, 10.0).unwrap(),
            1.715433291818271e-10,
            max_relative = 1e-9
        );
    }

    #[test]
    fn symmetric_link_delay() {
        let d = 21540.66;
        assert_relative_eq!(
            2.0 * d / crate::geometry::SPEED_OF_LIGHT,
            1.4370e-4,
            max_relative = 1e-4
        );
    }

    #[test]
    fn back_facing_station_gives_zero_amplitude() {
        let mut c = ScenarioConfig::<f64>::loiter_reference(1.0);
        c.ris_length = c.element_length;
        c.ris_width = c.element_width;
        c.rx_position.z = -20_000.0;
        let s = Scenario::new(c).unwrap();
        let k = s.kinematics()[ElementIndex::new(1, 1)];
        assert_eq!(cascade_amplitude(&k, &s, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_distance_is_reported_with_index() {
        let mut c = ScenarioConfig::<f64>::loiter_reference(1.0);
        c.ris_length = c.element_length;
        c.ris_width = c.element_width;
        c.tx_position = Vec3::new(3000.0, 0.0, 0.5);
        let s = Scenario::new(c).unwrap();
        let err = snapshot(&s, 0.0).unwrap_err();
        assert!(matches!(err, Error::Element { index, .. } if index == ElementIndex::new(1, 1)));
    }

    #[test]
    fn stationary_delay_is_constant() {
        let mut c = ScenarioConfig::<f64>::loiter_reference(2.0);
        c.speed = 0.0;
        let s = Scenario::new(c).unwrap();
        let k = s.kinematics()[ElementIndex::new(3, 2)];
        assert_eq!(cascade_delay(&k, &s, 0.0), cascade_delay(&k, &s, 99.0));
        assert_eq!(cascade_delay_rate(&k, &s, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn delay_returns_after_one_revolution() {
        let s = Scenario::new(ScenarioConfig::<f64>::loiter_reference(10.0)).unwrap();
        let k = s.kinematics()[ElementIndex::new(100, 4)];
        let t0 = 7.0;
        let t1 = t0 + k.period(s.speed());
        assert_relative_eq!(
            cascade_delay(&k, &s, t0),
            cascade_delay(&k, &s, t1),
            max_relative = 1e-12
        );
    }

    #[test]
    fn snapshot_is_deterministic_and_complete() {
        let s = Scenario::new(ScenarioConfig::<f64>::loiter_reference(2.0)).unwrap();
        let a = snapshot(&s, 10.0).unwrap();
        let b = snapshot(&s, 10.0).unwrap();
        assert_eq!(a.elements(), b.elements());
        assert_eq!(a.dims(), (s.p_count(), s.q_count()));
        for (idx, e) in a.elements().indexed() {
            assert_eq!(idx, e.index);
            assert!(e.gamma > 0.0);
        }
    }

    #[test]
    fn mirrored_geometry_has_mirrored_amplitudes() {
        // With Tx/Rx mirrored through the yz-plane, the element at loiter
        // angle phi sees the same amplitude as the mirror element at pi - phi.
        let mut c = ScenarioConfig::<f64>::loiter_reference(1.0);
        c.ris_length = c.element_length;
        c.ris_width = c.element_width;
        let s = Scenario::new(c).unwrap();
        let k = s.kinematics()[ElementIndex::new(1, 1)];
        let period = k.period(s.speed());
        for phi in [0.1, 0.7, 1.3, 2.9] {
            let t = phi / (2.0 * PI) * period;
            let t_mirror = (PI - phi) / (2.0 * PI) * period;
            assert_relative_eq!(
                cascade_amplitude(&k, &s, t).unwrap(),
                cascade_amplitude(&k, &s, t_mirror).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    proptest! {
        #[test]
        fn reciprocity_and_rate_bound(t in 0.0f64..120.0, pf in 0.0f64..1.0, qf in 0.0f64..1.0) {
            let s = Scenario::new(ScenarioConfig::<f64>::loiter_reference(10.0)).unwrap();
            let mut swapped = s.config().clone();
            std::mem::swap(&mut swapped.tx_position, &mut swapped.rx_position);
            let s2 = Scenario::new(swapped).unwrap();
            let p = 1 + ((s.p_count() - 1) as f64 * pf) as usize;
            let q = 1 + ((s.q_count() - 1) as f64 * qf) as usize;
            let k = s.kinematics()[ElementIndex::new(p, q)];
            let a = element_channel(&k, &s, t).unwrap();
            let b = element_channel(&k, &s2, t).unwrap();
            prop_assert!((a.gamma - b.gamma).abs() <= 1e-14 * a.gamma);
            prop_assert!((a.tau - b.tau).abs() <= 1e-15 * a.tau);
            prop_assert!(a.tau_rate.abs() <= 2.0 * s.speed() / crate::geometry::SPEED_OF_LIGHT);
        }

        #[test]
        fn amplitude_scales_inversely_with_distance_product(
            d1 in 100.0f64..1e5, d2 in 100.0f64..1e5, s in 1.0f64..10.0,
        ) {
            let g = [1.0, 1.0, 0.4, 0.3];
            let base = friis_cascade(0.15, d1, d2, g);
            let scaled = friis_cascade(0.15, s * d1, s * d2, g);
            prop_assert!((base / scaled - s * s).abs() <= 1e-12 * s * s);
        }
    }
}
