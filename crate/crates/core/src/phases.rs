//! Phase-shift designs for the element grid.
//!
//! The proposed design anchors every element to a reference path: each
//! element is delayed by the fractional carrier cycle that brings its
//! cascade path into phase with the reference, so all contributions add
//! coherently and all effective delays move at the reference's rate.

use serde::Serialize;

use crate::channel::ChannelSnapshot;
use crate::error::{Error, Result};
use crate::grid::{ElementIndex, Grid};
use crate::scalar::{distance_to_integer, unit_fract, Scalar};

/// Samples closer than this (in seconds) to a phase wrap are excluded from
/// Doppler maxima.
pub const DEFAULT_WRAP_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Closed-form reference-anchored design.
    Proposed,
    /// Delay-spread-first baseline: every phase is zero.
    Reversed,
    /// Caller-supplied phases.
    Explicit,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Proposed => "proposed",
            Strategy::Reversed => "reversed",
            Strategy::Explicit => "explicit",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Phase shifts `psi_pq` in `[0, 2 pi)` for one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAssignment<T> {
    t: T,
    psi: Grid<T>,
    /// `d psi / dt` in rad/s, away from wrap instants. Absent for explicit
    /// phases.
    psi_rate: Option<Grid<T>>,
    strategy: Strategy,
    reference: Option<ElementIndex>,
}

impl<T: Scalar> PhaseAssignment<T> {
    pub fn t(&self) -> T {
        self.t
    }

    pub fn psi(&self) -> &Grid<T> {
        &self.psi
    }

    pub fn psi_rate(&self) -> Option<&Grid<T>> {
        self.psi_rate.as_ref()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn reference(&self) -> Option<ElementIndex> {
        self.reference
    }

    pub fn dims(&self) -> (usize, usize) {
        self.psi.dims()
    }

    /// Wraps caller-supplied phases, which must already lie in `[0, 2 pi)`.
    pub fn explicit(t: T, psi: Grid<T>) -> Result<Self> {
        for (index, &value) in psi.indexed() {
            if !(value >= T::zero() && value < T::two_pi()) {
                return Err(Error::PhaseOutOfRange {
                    index,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self {
            t,
            psi,
            psi_rate: None,
            strategy: Strategy::Explicit,
            reference: None,
        })
    }
}

fn check_reference<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    reference: ElementIndex,
) -> Result<()> {
    if snapshot.elements().contains(reference) {
        Ok(())
    } else {
        let (p_count, q_count) = snapshot.dims();
        Err(Error::ReferenceOutOfRange {
            index: reference,
            p_count,
            q_count,
        })
    }
}

/// Closed-form design `psi_pq = 2 pi * frac(f_c (tau_ref - tau_pq))`.
///
/// The delay difference is formed before scaling by `f_c`.
pub fn proposed_phase<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    reference: ElementIndex,
) -> Result<PhaseAssignment<T>> {
    check_reference(snapshot, reference)?;
    let fc = snapshot.carrier_frequency();
    let two_pi = T::two_pi();
    let anchor = *snapshot.element(reference);
    let elements = snapshot.elements();
    Ok(PhaseAssignment {
        t: snapshot.t(),
        psi: elements.map(|e| two_pi * unit_fract(fc * (anchor.tau - e.tau))),
        psi_rate: Some(elements.map(|e| two_pi * fc * (anchor.tau_rate - e.tau_rate))),
        strategy: Strategy::Proposed,
        reference: Some(reference),
    })
}

pub fn reversed_phase<T: Scalar>(snapshot: &ChannelSnapshot<'_, T>) -> PhaseAssignment<T> {
    let zeros = snapshot.elements().map(|_| T::zero());
    PhaseAssignment {
        t: snapshot.t(),
        psi_rate: Some(zeros.clone()),
        psi: zeros,
        strategy: Strategy::Reversed,
        reference: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaEntry<T> {
    pub index: ElementIndex,
    /// `tau_ref - tau_pq`, s.
    pub varpi: T,
    /// Smallest causal cycle offset for the given reference phase.
    pub zeta_min: i64,
    /// Reference-phase-free relaxation `ceil(-f_c varpi)`.
    pub zeta_relaxed: i64,
}

/// Integer cycle offsets of every non-reference element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaTerms<T> {
    pub reference: ElementIndex,
    pub psi_ref: T,
    pub entries: Vec<ZetaEntry<T>>,
}

fn to_i64<T: Scalar>(x: T) -> i64 {
    x.to_i64().expect("cycle count fits in i64")
}

pub fn zeta_terms<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    reference: ElementIndex,
    psi_ref: T,
) -> Result<ZetaTerms<T>> {
    check_reference(snapshot, reference)?;
    if !(psi_ref >= T::zero() && psi_ref <= T::two_pi()) {
        return Err(Error::ReferencePhaseOutOfRange(
            psi_ref.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let fc = snapshot.carrier_frequency();
    let tau_ref = snapshot.element(reference).tau;
    let shift = psi_ref / T::two_pi();
    let entries = snapshot
        .elements()
        .iter()
        .filter(|e| e.index != reference)
        .map(|e| {
            let varpi = tau_ref - e.tau;
            let cycles = -fc * varpi;
            ZetaEntry {
                index: e.index,
                varpi,
                zeta_min: to_i64((cycles - shift).ceil()),
                zeta_relaxed: to_i64(cycles.ceil()),
            }
        })
        .collect();
    Ok(ZetaTerms {
        reference,
        psi_ref,
        entries,
    })
}

pub(crate) fn check_compatible<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    assignment: &PhaseAssignment<T>,
) -> Result<()> {
    if snapshot.dims() != assignment.dims() {
        return Err(Error::DimensionMismatch {
            expected: snapshot.dims(),
            found: assignment.dims(),
        });
    }
    if snapshot.t() != assignment.t() {
        return Err(Error::TimeMismatch {
            snapshot: snapshot.t().to_f64().unwrap_or(f64::NAN),
            assignment: assignment.t().to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Path delay plus the delay equivalent of the phase shift,
/// `tau_pq + psi_pq / (2 pi f_c)`.
pub fn effective_delay<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    assignment: &PhaseAssignment<T>,
) -> Result<Grid<T>> {
    check_compatible(snapshot, assignment)?;
    let fc = snapshot.carrier_frequency();
    let two_pi = T::two_pi();
    let data = snapshot
        .elements()
        .iter()
        .zip(assignment.psi().iter())
        .map(|(e, &psi)| e.tau + psi / two_pi / fc)
        .collect();
    let (p, q) = snapshot.dims();
    Ok(Grid::from_vec(p, q, data))
}

/// Time derivative of the effective delays.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayRates<T> {
    pub rates: Grid<T>,
    /// Elements within the guard window of a phase wrap. Their rates are
    /// reported but must not enter spread maxima.
    pub flagged: Vec<ElementIndex>,
}

impl<T: Scalar> DelayRates<T> {
    /// Rates of the unflagged elements, paired with their index.
    pub fn usable(&self) -> impl Iterator<Item = (ElementIndex, T)> + '_ {
        self.rates
            .indexed()
            .filter(|(i, _)| !self.flagged.contains(i))
            .map(|(i, &r)| (i, r))
    }
}

/// Rate of the unwrapped effective delay of every element.
///
/// Under the proposed design every entry equals the reference element's
/// `d tau / dt`. The wrapped phase jumps by `2 pi` whenever
/// `f_c (tau_ref - tau_pq)` crosses an integer; elements that are within
/// `guard` seconds of such a crossing are flagged.
pub fn effective_delay_rate<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    assignment: &PhaseAssignment<T>,
    guard: T,
) -> Result<DelayRates<T>> {
    check_compatible(snapshot, assignment)?;
    let psi_rate = assignment.psi_rate().ok_or(Error::RateUnavailable)?;
    let fc = snapshot.carrier_frequency();
    let two_pi = T::two_pi();
    let data = snapshot
        .elements()
        .iter()
        .zip(psi_rate.iter())
        .map(|(e, &w)| e.tau_rate + w / two_pi / fc)
        .collect();
    let (p, q) = snapshot.dims();

    let mut flagged = Vec::new();
    if let (Strategy::Proposed, Some(reference)) = (assignment.strategy(), assignment.reference()) {
        let anchor = *snapshot.element(reference);
        for e in snapshot.elements().iter().filter(|e| e.index != reference) {
            let cycles = fc * (anchor.tau - e.tau);
            let cycle_rate = (fc * (anchor.tau_rate - e.tau_rate)).abs();
            let gap = distance_to_integer(cycles);
            if gap == T::zero() || (cycle_rate > T::zero() && gap / cycle_rate < guard) {
                flagged.push(e.index);
            }
        }
    }
    Ok(DelayRates {
        rates: Grid::from_vec(p, q, data),
        flagged,
    })
}
