//! Objective functions of the phase design: coherent cascade gain, Doppler
//! spread, delay spread and its causal upper bound.

use num_complex::Complex;
use serde::Serialize;

use crate::channel::ChannelSnapshot;
use crate::error::{Error, Result};
use crate::grid::ElementIndex;
use crate::phases::{
    check_compatible, effective_delay, effective_delay_rate, PhaseAssignment, Strategy, ZetaTerms,
};
use crate::reduce::pairwise_sum;
use crate::scalar::{unit_fract, Scalar};

/// `10 log10(x)`; zero maps to negative infinity.
pub fn to_db<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::lit(10.0) * x.log10()
    } else {
        T::neg_infinity()
    }
}

/// Received-to-transmitted power ratio
/// `|sum Gamma_pq exp(-j 2 pi f_c tau_pq - j psi_pq)|^2`.
///
/// Phases are reduced to fractional cycles before the trigonometric call.
pub fn channel_gain<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    assignment: &PhaseAssignment<T>,
) -> Result<T> {
    check_compatible(snapshot, assignment)?;
    let fc = snapshot.carrier_frequency();
    let two_pi = T::two_pi();
    let phasors: Vec<Complex<T>> = snapshot
        .elements()
        .iter()
        .zip(assignment.psi().iter())
        .map(|(e, &psi)| {
            let cycles = unit_fract(unit_fract(fc * e.tau) + psi / two_pi);
            Complex::from_polar(e.gamma, -two_pi * cycles)
        })
        .collect();
    Ok(pairwise_sum(&phasors, Complex::new(T::zero(), T::zero())).norm_sqr())
}

/// Coherent-combining ceiling `(sum Gamma_pq)^2`.
pub fn max_channel_gain<T: Scalar>(snapshot: &ChannelSnapshot<'_, T>) -> T {
    let gammas: Vec<T> = snapshot.elements().iter().map(|e| e.gamma).collect();
    let sum = pairwise_sum(&gammas, T::zero());
    sum * sum
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DopplerSpread<T> {
    /// `f_c` times the widest spread of effective-delay rates, Hz.
    pub spread: T,
    /// Largest deviation of any element from the reference path, Hz.
    pub reference_vs_rest: T,
    /// Spread among the non-reference elements, Hz.
    pub among_rest: T,
    pub reference: ElementIndex,
    /// Elements excluded because they sit on a phase wrap.
    pub flagged: Vec<ElementIndex>,
}

/// Doppler spread from analytic effective-delay rates.
///
/// The pairwise maximum `max |r_i - r_j|` equals `max r - min r`, so this is
/// linear in the element count.
pub fn doppler_spread<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    assignment: &PhaseAssignment<T>,
    guard: T,
) -> Result<DopplerSpread<T>> {
    let rates = effective_delay_rate(snapshot, assignment, guard)?;
    let reference = assignment
        .reference()
        .unwrap_or_else(|| snapshot.scenario().reference());
    let fc = snapshot.carrier_frequency();
    let anchor = rates.rates[reference];

    let (mut lo, mut hi) = (anchor, anchor);
    let (mut rest_lo, mut rest_hi) = (T::infinity(), T::neg_infinity());
    let mut deviation = T::zero();
    for (index, r) in rates.usable() {
        lo = lo.min(r);
        hi = hi.max(r);
        if index != reference {
            rest_lo = rest_lo.min(r);
            rest_hi = rest_hi.max(r);
            deviation = deviation.max((r - anchor).abs());
        }
    }
    let among_rest = if rest_hi >= rest_lo {
        fc * (rest_hi - rest_lo)
    } else {
        T::zero()
    };
    Ok(DopplerSpread {
        spread: fc * (hi - lo),
        reference_vs_rest: fc * deviation,
        among_rest,
        reference,
        flagged: rates.flagged,
    })
}

fn extrema<T: Scalar>(values: impl Iterator<Item = T>) -> (T, T) {
    values.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// `max(tau + psi / 2 pi f_c) - min(tau + psi / 2 pi f_c)`.
pub fn delay_spread<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    assignment: &PhaseAssignment<T>,
) -> Result<T> {
    let eff = effective_delay(snapshot, assignment)?;
    let (lo, hi) = extrema(eff.iter().copied());
    Ok(hi - lo)
}

/// `max(tau + psi / 2 pi f_c) - min(tau)`: the causal upper bound on the
/// delay spread, since every phase shift is nonnegative.
pub fn delay_spread_upper<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    assignment: &PhaseAssignment<T>,
) -> Result<T> {
    let eff = effective_delay(snapshot, assignment)?;
    let (_, hi) = extrema(eff.iter().copied());
    Ok(hi - snapshot.min_tau())
}

/// Closed form of the upper bound under the proposed design:
/// `max(tau_ref, max(tau_ref + zeta_relaxed / f_c)) - min(tau)`.
pub fn delay_spread_upper_min<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    zeta: &ZetaTerms<T>,
) -> Result<T> {
    if zeta.psi_ref != T::zero() {
        return Err(Error::NonzeroReferencePhase(
            zeta.psi_ref.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let fc = snapshot.carrier_frequency();
    let tau_ref = snapshot.element(zeta.reference).tau;
    let top = zeta
        .entries
        .iter()
        .map(|e| tau_ref + T::from_i64(e.zeta_relaxed).expect("cycle offset representable") / fc)
        .fold(tau_ref, T::max);
    Ok(top - snapshot.min_tau())
}

/// All objectives for one `(strategy, t)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport<T> {
    pub t: T,
    pub strategy: Strategy,
    pub p_count: usize,
    pub q_count: usize,
    pub gain_linear: T,
    /// `None` when the gain is exactly zero.
    pub gain_db: Option<T>,
    pub max_gain_linear: T,
    pub doppler_spread: T,
    pub doppler_reference_vs_rest: T,
    pub doppler_among_rest: T,
    pub delay_spread: T,
    pub delay_spread_upper: T,
    /// Elements left out of the Doppler maxima (phase-wrap guard).
    pub wrap_flagged: usize,
}

/// Evaluates every objective. Only proposed and reversed assignments carry
/// the phase rates the Doppler metric needs.
pub fn evaluate<T: Scalar>(
    snapshot: &ChannelSnapshot<'_, T>,
    assignment: &PhaseAssignment<T>,
    guard: T,
) -> Result<MetricsReport<T>> {
    let gain = channel_gain(snapshot, assignment)?;
    let doppler = doppler_spread(snapshot, assignment, guard)?;
    let db = to_db(gain);
    Ok(MetricsReport {
        t: snapshot.t(),
        strategy: assignment.strategy(),
        p_count: snapshot.dims().0,
        q_count: snapshot.dims().1,
        gain_linear: gain,
        gain_db: db.is_finite().then_some(db),
        max_gain_linear: max_channel_gain(snapshot),
        doppler_spread: doppler.spread,
        doppler_reference_vs_rest: doppler.reference_vs_rest,
        doppler_among_rest: doppler.among_rest,
        delay_spread: delay_spread(snapshot, assignment)?,
        delay_spread_upper: delay_spread_upper(snapshot, assignment)?,
        wrap_flagged: doppler.flagged.len(),
    })
}
