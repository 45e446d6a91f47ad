//! Click-outcome distributions of a two-detector basis measurement.

use crate::error::{domain, Error, Result};
use crate::fock::{
    component_values, q_factors, Basis, ComponentSet, Numerics, Pol, Port, SourceBb84, SourceQi,
};
use crate::scalar::Real;

/// Relative orientation of Alice's and Eve's bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisGeometry<T> {
    /// Rotation of Eve's modes relative to Alice's, in radians.
    pub theta: T,
    pub basis_alice: Basis,
    pub basis_eve: Basis,
}

impl<T: Real> BasisGeometry<T> {
    pub fn new(theta: T, basis_alice: Basis, basis_eve: Basis) -> Self {
        Self { theta, basis_alice, basis_eve }
    }

    /// Total angle between Eve's element `eve` and Alice's element `alice`.
    pub fn total_angle(&self, alice: Pol, eve: Pol) -> T {
        total_angle(alice, eve, self.theta)
    }
}

/// Angle between Eve's rotated element and Alice's element. Squared cosine gives
/// the overlap of the two polarisation states.
pub fn total_angle<T: Real>(alice: Pol, eve: Pol, theta: T) -> T {
    eve.angle::<T>() + theta - alice.angle::<T>()
}

/// Outcome probabilities of the (J, K) detector pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutcomeDistribution<T> {
    pub click_j_only: T,
    pub click_k_only: T,
    pub click_both: T,
    pub click_neither: T,
}

impl<T: Real> OutcomeDistribution<T> {
    pub fn sum(&self) -> T {
        self.click_j_only + self.click_k_only + self.click_both + self.click_neither
    }

    pub fn as_array(&self) -> [T; 4] {
        [self.click_j_only, self.click_k_only, self.click_both, self.click_neither]
    }

    pub fn swapped(&self) -> Self {
        Self {
            click_j_only: self.click_k_only,
            click_k_only: self.click_j_only,
            ..*self
        }
    }
}

/// Outcome distribution for the state `w0 (noise) + wj (photon in J) + wk (photon in K)`.
pub fn mix_outcomes<T: Real>(
    cs: &ComponentSet<T>,
    w0: T,
    wj: T,
    wk: T,
) -> Result<OutcomeDistribution<T>> {
    let norm = w0 + wj * cs.trace_q + wk * cs.trace_w;
    if !(norm > T::zero()) || !norm.is_finite() {
        return Err(Error::DegenerateNormaliser(format!("normaliser {norm}")));
    }
    let (n, pj, pk) = (cs.noise_row(), cs.photon_q_row(), cs.photon_w_row());
    let at = |i: usize| (w0 * n[i] + wj * pj[i] + wk * pk[i]) / norm;
    Ok(OutcomeDistribution {
        click_j_only: at(0),
        click_k_only: at(1),
        click_both: at(2),
        click_neither: at(3),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdlerResult<T> {
    /// Probability that Q clicks and W stays dark.
    pub click_prob: T,
    pub norm_idler: T,
    /// Unnormalised weight of the vacuum term in the conditioned state.
    pub w_vacuum: T,
    /// Weight of the signal photon sitting in the mode correlated with Q.
    pub w_correlated: T,
    /// Weight of the signal photon sitting in the mode correlated with W.
    pub w_anticorrelated: T,
    /// Set when the idler background is outside the weak-noise regime.
    pub noisy: bool,
}

impl<T: Real> IdlerResult<T> {
    /// Conditioned-state weights `(vacuum, correlated, anticorrelated)` summing to one.
    pub fn cond_coeffs(&self) -> (T, T, T) {
        let s = self.click_prob * self.norm_idler;
        (self.w_vacuum / s, self.w_correlated / s, self.w_anticorrelated / s)
    }

    /// Photon weights `(q1, q2)` seen by a detector pair at total angle `theta_total`,
    /// scaled by the single-pair coefficient.
    pub fn q_factors(&self, theta_total: T) -> (T, T) {
        q_factors(theta_total, self.w_correlated, self.w_anticorrelated)
    }
}

const NOISY_IDLER: f64 = 0.1;

pub fn idler_click<T: Real>(
    source: &SourceQi<T>,
    idler_q: &Port<T>,
    idler_w: &Port<T>,
    num: &Numerics,
) -> Result<IdlerResult<T>> {
    if !(source.c0 >= T::zero() && source.c1 >= T::zero()) {
        return domain("invalid source coefficients");
    }
    let cs = component_values(idler_q, idler_w, num)?;
    let norm_idler = source.c0 + source.c1 * (cs.trace_q + cs.trace_w);
    let w_vacuum = source.c0 * cs.vac_q;
    let w_correlated = source.c1 * cs.a_q1;
    let w_anticorrelated = source.c1 * cs.a_w0;
    let noisy = idler_q.noise_raw.to_f64_lossy() > NOISY_IDLER
        || idler_w.noise_raw.to_f64_lossy() > NOISY_IDLER;
    Ok(IdlerResult {
        click_prob: (w_vacuum + w_correlated + w_anticorrelated) / norm_idler,
        norm_idler,
        w_vacuum,
        w_correlated,
        w_anticorrelated,
        noisy,
    })
}

/// Signal detectors (J, K) given an idler click; J is the mode correlated with the
/// clicking idler mode when `theta_total` is zero.
pub fn signal_given_idler<T: Real>(
    idler: &IdlerResult<T>,
    sig_j: &Port<T>,
    sig_k: &Port<T>,
    theta_total: T,
    num: &Numerics,
) -> Result<OutcomeDistribution<T>> {
    let cs = component_values(sig_j, sig_k, num)?;
    let (q1, q2) = idler.q_factors(theta_total);
    mix_outcomes(&cs, idler.w_vacuum, q2, q1)
}

/// Alice's detectors receiving one photon resent by Eve.
pub fn eve_resend_outcomes<T: Real>(
    sig_j: &Port<T>,
    sig_k: &Port<T>,
    theta_total: T,
    num: &Numerics,
) -> Result<OutcomeDistribution<T>> {
    let cs = component_values(sig_j, sig_k, num)?;
    let c2 = theta_total.cos().powi(2);
    let s2 = theta_total.sin().powi(2);
    mix_outcomes(&cs, T::zero(), c2, s2)
}

pub fn bb84_signal_outcomes<T: Real>(
    source: &SourceBb84<T>,
    sig_j: &Port<T>,
    sig_k: &Port<T>,
    theta_total: T,
    num: &Numerics,
) -> Result<OutcomeDistribution<T>> {
    let cs = component_values(sig_j, sig_k, num)?;
    let c2 = theta_total.cos().powi(2);
    let s2 = theta_total.sin().powi(2);
    mix_outcomes(&cs, source.c0_alpha, source.c1_alpha * c2, source.c1_alpha * s2)
}
