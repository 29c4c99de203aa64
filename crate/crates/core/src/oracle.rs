//! Independent validators: exhaustive discrete phase search and central
//! finite differences. Nothing here reuses the closed-form phase design or
//! the analytic delay rates it checks.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{cascade_delay, ChannelSnapshot};
use crate::error::{Error, Result};
use crate::geometry::{ElementKinematics, Scenario};
use crate::grid::{ElementIndex, Grid};
use crate::phases::Strategy;
use crate::scalar::{unit_fract, Scalar};

/// Largest element count the exhaustive search accepts.
pub const MAX_SEARCH_ELEMENTS: usize = 6;
/// Largest number of phase levels the exhaustive search accepts.
pub const MAX_SEARCH_LEVELS: usize = 32;

/// States whose gain is within this relative margin of the maximum count as
/// ties; the lexicographically smallest of them wins.
const TIE_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteSearchResult<T> {
    pub levels: usize,
    /// Winning phases, each `2 pi m / levels`, in storage order.
    pub best_phases: Vec<T>,
    /// Winning level index per element, in storage order.
    pub best_levels: Vec<usize>,
    pub best_gain: T,
    pub states_searched: u64,
}

impl<T: Scalar> DiscreteSearchResult<T> {
    pub fn phase_grid(&self, p_count: usize, q_count: usize) -> Grid<T> {
        Grid::from_vec(p_count, q_count, self.best_phases.clone())
    }
}

/// Exhaustively maximises the cascade gain over the `levels`-point uniform
/// phase lattice on every element.
///
/// States are numbered with the first stored element as the most
/// significant digit, so the smallest state number is the lexicographically
/// smallest phase grid. The search runs in two order-independent parallel
/// passes (exact maximum, then first state within the tie margin), which
/// makes the result identical for any worker count.
pub fn brute_force_gain<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    levels: usize,
) -> Result<DiscreteSearchResult<T>> {
    let elements = snapshot.elements().len();
    if elements > MAX_SEARCH_ELEMENTS || !(1..=MAX_SEARCH_LEVELS).contains(&levels) {
        return Err(Error::OracleGuard {
            elements,
            levels,
            max_elements: MAX_SEARCH_ELEMENTS,
            max_levels: MAX_SEARCH_LEVELS,
        });
    }
    let fc = snapshot.carrier_frequency();
    let two_pi = T::two_pi();
    let m = T::from_count(levels);
    // table[e * levels + l]: phasor of element e with phase level l.
    let table: Vec<Complex<T>> = snapshot
        .elements()
        .iter()
        .flat_map(|e| {
            let base = unit_fract(fc * e.tau);
            (0..levels).map(move |l| {
                let cycles = unit_fract(base + T::from_count(l) / m);
                Complex::from_polar(e.gamma, -two_pi * cycles)
            })
        })
        .collect();
    let states = levels.pow(elements as u32);

    let gain_of = |state: usize| -> T {
        let mut rest = state;
        let mut sum = Complex::new(T::zero(), T::zero());
        for e in (0..elements).rev() {
            sum += table[e * levels + rest % levels];
            rest /= levels;
        }
        sum.norm_sqr()
    };

    let peak = (0..states)
        .into_par_iter()
        .map(gain_of)
        .reduce(|| T::neg_infinity(), T::max);
    let threshold = peak * (T::one() - T::lit(TIE_MARGIN));
    let winner = (0..states)
        .into_par_iter()
        .find_first(|&s| gain_of(s) >= threshold)
        .expect("the maximising state passes its own threshold");

    let mut best_levels = vec![0; elements];
    let mut rest = winner;
    for slot in best_levels.iter_mut().rev() {
        *slot = rest % levels;
        rest /= levels;
    }
    Ok(DiscreteSearchResult {
        levels,
        best_phases: best_levels
            .iter()
            .map(|&l| two_pi * T::from_count(l) / m)
            .collect(),
        best_levels,
        best_gain: gain_of(winner),
        states_searched: states as u64,
    })
}

/// Central difference `(tau(t + h) - tau(t - h)) / 2h` of the cascade delay.
pub fn finite_diff_delay_rate<T: Scalar>(
    k: &ElementKinematics<T>,
    scenario: &Scenario<T>,
    t: T,
    h: T,
) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::InvalidStep(h.to_f64().unwrap_or(f64::NAN)));
    }
    Ok((cascade_delay(k, scenario, t + h) - cascade_delay(k, scenario, t - h)) / (T::lit(2.0) * h))
}

/// Doppler spread from central differences of the effective delays between
/// two snapshots taken at `t - h` and `t + h`.
///
/// For the proposed design the phases are rebuilt from the snapshot delays
/// and continued across the window; if any element changes carrier cycle
/// between the two instants the window straddles a wrap and the caller must
/// resample.
pub fn finite_diff_doppler<T: Scalar>(
    before: &ChannelSnapshot<'_, T>,
    after: &ChannelSnapshot<'_, T>,
    strategy: Strategy,
    reference: ElementIndex,
) -> Result<T> {
    if before.dims() != after.dims() {
        return Err(Error::DimensionMismatch {
            expected: before.dims(),
            found: after.dims(),
        });
    }
    let two_h = after.t() - before.t();
    if !(two_h > T::zero()) {
        return Err(Error::InvalidStep(two_h.to_f64().unwrap_or(f64::NAN)));
    }
    if !before.elements().contains(reference) {
        let (p_count, q_count) = before.dims();
        return Err(Error::ReferenceOutOfRange {
            index: reference,
            p_count,
            q_count,
        });
    }
    let fc = before.carrier_frequency();
    let mut rates = Vec::with_capacity(before.elements().len());
    match strategy {
        Strategy::Reversed => {
            for (b, a) in before.elements().iter().zip(after.elements().iter()) {
                rates.push((a.tau - b.tau) / two_h);
            }
        }
        Strategy::Proposed => {
            let ref_b = before.element(reference).tau;
            let ref_a = after.element(reference).tau;
            for (b, a) in before.elements().iter().zip(after.elements().iter()) {
                let cyc_b = fc * (ref_b - b.tau);
                let cyc_a = fc * (ref_a - a.tau);
                if cyc_b.floor() != cyc_a.floor() {
                    return Err(Error::WrapInWindow { index: b.index });
                }
                let eff_b = b.tau + unit_fract(cyc_b) / fc;
                let eff_a = a.tau + unit_fract(cyc_a) / fc;
                rates.push((eff_a - eff_b) / two_h);
            }
        }
        Strategy::Explicit => return Err(Error::RateUnavailable),
    }
    let (lo, hi) = rates
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    Ok(fc * (hi - lo))
}

/// Observed order `ln(e_coarse / e_fine) / ln(step ratio)`.
pub fn convergence_order(coarse_error: f64, fine_error: f64, step_ratio: f64) -> f64 {
    (coarse_error / fine_error).ln() / step_ratio.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{cascade_delay_rate, snapshot, ElementChannel};
    use crate::geometry::ScenarioConfig;
    use crate::metrics::{channel_gain, max_channel_gain};
    use crate::phases::{proposed_phase, PhaseAssignment};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn lattice(pn: usize, qn: usize) -> Scenario<f64> {
        let mut c = ScenarioConfig::<f64>::loiter_reference(1.0);
        c.ris_length = pn as f64 * c.element_length;
        c.ris_width = qn as f64 * c.element_width;
        Scenario::new(c).unwrap()
    }

    #[test]
    fn single_element_any_level_ties_to_zero() {
        let s = lattice(1, 1);
        let snap = snapshot(&s, 10.0).unwrap();
        for m in [1, 2, 7, 32] {
            let r = brute_force_gain(&snap, m).unwrap();
            assert_eq!(r.best_levels, vec![0]);
            assert_eq!(r.states_searched, m as u64);
            assert_relative_eq!(
                r.best_gain,
                snap.element(ElementIndex::new(1, 1)).gamma.powi(2),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn two_elements_binary_lattice_matches_hand_enumeration() {
        let s = lattice(2, 1);
        let snap = snapshot(&s, 10.0).unwrap();
        let r = brute_force_gain(&snap, 2).unwrap();
        assert_eq!(r.states_searched, 4);
        let mut best: f64 = 0.0;
        for a in [0.0, PI] {
            for b in [0.0, PI] {
                let psi = Grid::from_fn(2, 1, |i| if i.p == 1 { a } else { b });
                let g =
                    channel_gain(&snap, &PhaseAssignment::explicit(10.0, psi).unwrap()).unwrap();
                best = best.max(g);
            }
        }
        assert_relative_eq!(r.best_gain, best, max_relative = 1e-12);
        let (g1, g2) = (
            snap.elements().as_slice()[0].gamma,
            snap.elements().as_slice()[1].gamma,
        );
        assert!(r.best_gain <= (g1 + g2).powi(2) * (1.0 + 1e-12));
        assert!(r.best_gain >= (g1 - g2).powi(2));
    }

    #[test]
    fn quantization_loss_is_bounded() {
        let s = lattice(2, 2);
        let snap = snapshot(&s, 10.0).unwrap();
        let closed = channel_gain(&snap, &proposed_phase(&snap, s.reference()).unwrap()).unwrap();
        let mut previous = 0.0;
        for m in [2, 4, 8, 16] {
            let r = brute_force_gain(&snap, m).unwrap();
            let floor = closed * (PI / m as f64).cos().powi(2);
            assert!(r.best_gain <= closed * (1.0 + 1e-12));
            assert!(r.best_gain >= floor * (1.0 - 1e-12), "M={m}");
            assert!(r.best_gain >= previous * (1.0 - 1e-12));
            previous = r.best_gain;
        }
    }

    #[test]
    fn guard_rejects_oversized_searches() {
        let s = lattice(7, 1);
        let snap = snapshot(&s, 0.0).unwrap();
        assert!(matches!(
            brute_force_gain(&snap, 2),
            Err(Error::OracleGuard { elements: 7, .. })
        ));
        let s = lattice(2, 1);
        let snap = snapshot(&s, 0.0).unwrap();
        assert!(brute_force_gain(&snap, 33).is_err());
        assert!(brute_force_gain(&snap, 0).is_err());
    }

    #[test]
    fn search_is_deterministic_across_pools() {
        let s = lattice(3, 2);
        let snap = snapshot(&s, 10.0).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let wide = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap();
        let a = serial.install(|| brute_force_gain(&snap, 8).unwrap());
        let b = wide.install(|| brute_force_gain(&snap, 8).unwrap());
        assert_eq!(a, b);
        assert!(a.best_gain <= max_channel_gain(&snap) * (1.0 + 1e-12));
    }

    #[test]
    fn finite_differences_vanish_when_stationary() {
        let mut c = ScenarioConfig::<f64>::loiter_reference(1.0);
        c.speed = 0.0;
        let s = Scenario::new(c).unwrap();
        let k = s.kinematics()[ElementIndex::new(2, 1)];
        assert_eq!(finite_diff_delay_rate(&k, &s, 5.0, 1e-3).unwrap(), 0.0);
        let before = snapshot(&s, 5.0 - 1e-4).unwrap();
        let after = snapshot(&s, 5.0 + 1e-4).unwrap();
        assert_eq!(
            finite_diff_doppler(&before, &after, Strategy::Reversed, s.reference()).unwrap(),
            0.0
        );
        assert!(finite_diff_delay_rate(&k, &s, 5.0, 0.0).is_err());
    }

    #[test]
    fn finite_difference_tracks_analytic_rate() {
        let s = Scenario::new(ScenarioConfig::<f64>::loiter_reference(10.0)).unwrap();
        let k = s.kinematics()[ElementIndex::new(300, 3)];
        let scale = 2.0 * s.speed() / crate::geometry::SPEED_OF_LIGHT;
        for t in [0.0, 17.0, 45.5] {
            let an = cascade_delay_rate(&k, &s, t).unwrap();
            for h in [1e-3, 1e-4, 1e-5] {
                let fd = finite_diff_delay_rate(&k, &s, t, h).unwrap();
                assert!((fd - an).abs() <= 1e-9f64.max(1e-6 * scale));
            }
        }
    }

    #[test]
    fn wrap_inside_the_window_is_reported() {
        let mut c = ScenarioConfig::<f64>::loiter_reference(1.0);
        c.ris_length = 2.0 * c.element_length;
        c.ris_width = c.element_width;
        let s = Scenario::new(c).unwrap();
        let fc = 2.0e9;
        let make = |t: f64, cycles: f64| {
            let grid = Grid::from_fn(2, 1, |index| ElementChannel {
                index,
                gamma: 1.0,
                tau: if index.p == 1 {
                    1.4e-4
                } else {
                    1.4e-4 - cycles / fc
                },
                tau_rate: 0.0,
            });
            ChannelSnapshot::from_elements(&s, t, grid)
        };
        let r = ElementIndex::new(1, 1);
        let before = make(0.0, 2.9);
        let after = make(0.1, 3.1);
        assert!(matches!(
            finite_diff_doppler(&before, &after, Strategy::Proposed, r),
            Err(Error::WrapInWindow { index }) if index == ElementIndex::new(2, 1)
        ));
        let after = make(0.1, 2.95);
        assert!(finite_diff_doppler(&before, &after, Strategy::Proposed, r).unwrap() < 1e-3);
        assert!(finite_diff_doppler(&before, &after, Strategy::Explicit, r).is_err());
    }

    #[test]
    fn order_estimate() {
        assert_relative_eq!(
            convergence_order(4e-6, 1e-6, 2.0),
            2.0,
            max_relative = 1e-12
        );
    }
}
