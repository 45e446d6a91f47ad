//! Truncated Fock-state sources, thermal background and the single-photon/thermal
//! mixing components every click probability is assembled from.

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Polarisation element of one of the two bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pol {
    H,
    V,
    D,
    A,
}

impl Pol {
    pub const ALL: [Pol; 4] = [Pol::H, Pol::V, Pol::D, Pol::A];

    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
            Pol::D => 2,
            Pol::A => 3,
        }
    }

    /// The other element of the same basis.
    pub fn orthogonal(self) -> Pol {
        match self {
            Pol::H => Pol::V,
            Pol::V => Pol::H,
            Pol::D => Pol::A,
            Pol::A => Pol::D,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            Pol::H | Pol::V => Basis::Rectilinear,
            Pol::D | Pol::A => Basis::Diagonal,
        }
    }

    /// Polarisation angle in the lab frame.
    pub fn angle<T: Real>(self) -> T {
        let quarter = T::FRAC_PI_4();
        quarter * T::of_usize(match self {
            Pol::H => 0,
            Pol::D => 1,
            Pol::V => 2,
            Pol::A => 3,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Rectilinear, Basis::Diagonal];

    pub fn elements(self) -> (Pol, Pol) {
        match self {
            Basis::Rectilinear => (Pol::H, Pol::V),
            Basis::Diagonal => (Pol::D, Pol::A),
        }
    }
}

/// Detector mode label. Eve's modes are rotated by the relative basis angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Alice(Pol),
    Eve(Pol),
}

/// Twin-beam source truncated to the vacuum and single-pair terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceQi<T> {
    pub n_bar: T,
    pub c0: T,
    pub c1: T,
    pub norm0: T,
}

impl<T: Real> SourceQi<T> {
    pub fn new(n_bar: T) -> Result<Self> {
        if !(n_bar >= T::zero()) || !n_bar.is_finite() {
            return domain(format!("mean photon number must be finite and >= 0, got {n_bar}"));
        }
        let one = T::one();
        let m = n_bar + one;
        let norm0 = one / (m * m) + T::lit(2.0) * n_bar / (m * m * m);
        Ok(Self {
            n_bar,
            c0: one / (m * m * norm0),
            c1: n_bar / (m * m * m * norm0),
            norm0,
        })
    }
}

/// Weak coherent source truncated to {|0>, |1>}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceBb84<T> {
    pub n_bar_alpha: T,
    pub c0_alpha: T,
    pub c1_alpha: T,
    pub norm_alpha: T,
}

impl<T: Real> SourceBb84<T> {
    pub fn new(n_bar_alpha: T) -> Result<Self> {
        if !(n_bar_alpha >= T::zero()) || !n_bar_alpha.is_finite() {
            return domain(format!(
                "mean photon number must be finite and >= 0, got {n_bar_alpha}"
            ));
        }
        let one = T::one();
        let norm_alpha = (-n_bar_alpha).exp() * (one + n_bar_alpha);
        Ok(Self {
            n_bar_alpha,
            c0_alpha: one / (one + n_bar_alpha),
            c1_alpha: n_bar_alpha / (one + n_bar_alpha),
            norm_alpha,
        })
    }

    /// Coherent source with the same single-photon budget as `qi` given idler efficiency `eta_i`.
    pub fn matched_to(qi: &SourceQi<T>, eta_i: T) -> Result<Self> {
        let denom = T::one() - eta_i * qi.n_bar;
        if !(denom > T::zero()) {
            return domain("fairness relation has no positive solution");
        }
        Self::new(T::lit(2.0) * qi.n_bar / denom)
    }
}

/// Twin-beam mean photon number paired with a coherent mean `n_bar_alpha`.
pub fn fair_n_bar<T: Real>(n_bar_alpha: T, eta_i: T) -> T {
    let two = T::lit(2.0);
    n_bar_alpha / (two - eta_i * n_bar_alpha + two * eta_i * n_bar_alpha)
}

/// One detector port: a beamsplitter of transmission `transmit` mixing the incoming
/// light with a thermal background whose reflected mean is `noise_raw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Port<T> {
    pub mode: Mode,
    pub transmit: T,
    pub noise_raw: T,
}

impl<T: Real> Port<T> {
    pub fn new(mode: Mode, transmit: T, noise_raw: T) -> Result<Self> {
        if !(transmit >= T::zero() && transmit <= T::one()) {
            return domain(format!("transmission must lie in [0,1], got {transmit}"));
        }
        if !(noise_raw >= T::zero()) || !noise_raw.is_finite() {
            return domain(format!("background mean must be finite and >= 0, got {noise_raw}"));
        }
        Ok(Self { mode, transmit, noise_raw })
    }

    /// Build from a beamsplitter-input background mean (the tabulated convention),
    /// i.e. `noise_raw = (1 - |t|^2) * n_b`.
    pub fn from_rescaled(mode: Mode, transmit: T, n_b: T) -> Result<Self> {
        let p = Self::new(mode, transmit, T::zero())?;
        if !(n_b >= T::zero()) || !n_b.is_finite() {
            return domain(format!("background mean must be finite and >= 0, got {n_b}"));
        }
        Ok(Self { noise_raw: p.reflect() * n_b, ..p })
    }

    pub fn reflect(&self) -> T {
        T::one() - self.transmit
    }

    /// Thermal mean entering the beamsplitter. Infinite for a lossless port with noise.
    pub fn rescaled_noise(&self) -> T {
        if self.noise_raw == T::zero() {
            T::zero()
        } else {
            self.noise_raw / self.reflect()
        }
    }

    /// Probability that the background alone leaves the detector dark.
    pub fn dark(&self) -> T {
        T::one() / (T::one() + self.noise_raw)
    }

    pub fn noise_click(&self) -> T {
        self.noise_raw / (T::one() + self.noise_raw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy {
    pub tail_epsilon: f64,
    pub max_terms: usize,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self { tail_epsilon: 1e-14, max_terms: 10_000 }
    }
}

impl SeriesPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon < 1.0) || self.max_terms == 0 {
            return domain("series policy needs 0 < tail_epsilon < 1 and max_terms > 0");
        }
        Ok(())
    }

    /// Smallest q* with thermal tail mass beyond q* below `tail_epsilon`.
    pub fn cutoff<T: Real>(&self, n_bar: T) -> Option<usize> {
        if n_bar == T::zero() {
            return Some(0);
        }
        let ratio = (n_bar / (n_bar + T::one())).to_f64_lossy();
        let mut tail = ratio;
        let mut q = 0;
        while tail >= self.tail_epsilon {
            q += 1;
            if q >= self.max_terms {
                return None;
            }
            tail *= ratio;
        }
        Some(q)
    }
}

/// Thermal photon-number distribution `n_bar^n / (n_bar+1)^(n+1)`.
pub fn thermal_pmf<T: Real>(n: i64, n_bar: T) -> Result<T> {
    if n < 0 || !(n_bar >= T::zero()) {
        return domain(format!("thermal_pmf needs n >= 0 and n_bar >= 0, got ({n}, {n_bar})"));
    }
    if n_bar == T::zero() {
        return Ok(if n == 0 { T::one() } else { T::zero() });
    }
    let m = n_bar + T::one();
    let nn = T::of_usize(n as usize);
    Ok((nn * n_bar.ln() - (nn + T::one()) * m.ln()).exp())
}

/// How the single photon mixes with the thermal background on a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComponentModel {
    /// Full bosonic beamsplitter output; the mixed state has unit trace.
    #[default]
    Exact,
    /// The incoherent mixture written term by term, whose trace is `1 + 2|t|^2 n_raw`.
    Incoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Numerics {
    pub model: ComponentModel,
    pub policy: SeriesPolicy,
}

/// Sums over the thermal photon number for a port carrying one signal photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonSums<T> {
    /// Probability mass with the detected mode left in vacuum.
    pub vacuum: T,
    /// Mass with at least one detected photon.
    pub click: T,
    pub trace: T,
}

pub fn photon_sums<T: Real>(port: &Port<T>, num: &Numerics) -> Result<PhotonSums<T>> {
    num.policy.validate()?;
    let one = T::one();
    let two = T::lit(2.0);
    let t2 = port.transmit;
    let r2 = port.reflect();
    if r2 == T::zero() {
        let trace = match num.model {
            ComponentModel::Exact => one,
            ComponentModel::Incoherent => one + two * port.noise_raw,
        };
        return Ok(PhotonSums { vacuum: T::zero(), click: trace, trace });
    }
    let n = port.noise_raw / r2;
    let ratio = n / (n + one);
    let mut pq = one / (n + one);
    let mut tq = one;
    let mut vacuum = T::zero();
    let mut spread = T::zero();
    let mut tail = ratio.to_f64_lossy();
    let mut q = 0usize;
    loop {
        let qq = T::of_usize(q);
        vacuum = vacuum + pq * tq * r2 * (qq + one);
        // binomial z-sum of the incoherent expression, in closed form
        spread = spread + pq * two * qq * r2 * t2;
        if n == T::zero() || tail < num.policy.tail_epsilon {
            break;
        }
        q += 1;
        if q >= num.policy.max_terms {
            return Err(Error::NonConvergent {
                terms: q,
                partial: vacuum.to_f64_lossy(),
                tail,
            });
        }
        pq = pq * ratio;
        tq = tq * t2;
        tail *= ratio.to_f64_lossy();
    }
    let trace = match num.model {
        ComponentModel::Exact => one,
        ComponentModel::Incoherent => one + spread,
    };
    Ok(PhotonSums { vacuum, click: trace - vacuum, trace })
}

/// All components for the ordered mode pair (Q, W).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentSet<T> {
    /// vac(Q): noise only, Q clicks, W dark.
    pub vac_q: T,
    /// Noise only, W clicks, Q dark.
    pub vac_w: T,
    /// vac(Q,W): noise only, both click.
    pub vac_qw: T,
    /// vac_0(Q,W): noise only, neither clicks.
    pub vac0: T,
    /// a_{Q|1}: photon in Q, Q clicks, W dark.
    pub a_q1: T,
    /// Photon in Q, W clicks, Q dark.
    pub a_q0: T,
    /// a_{Q,W|1}: photon in Q, both click.
    pub a_qw1: T,
    /// a_{Q,W|0}: photon in Q, neither clicks.
    pub a_qw0: T,
    /// Photon in W, W clicks, Q dark.
    pub a_w1: T,
    /// a_{W|0}: photon in W, Q clicks, W dark.
    pub a_w0: T,
    /// a_{W,Q|1}: photon in W, both click.
    pub a_wq1: T,
    /// Photon in W, neither clicks.
    pub a_wq0: T,
    pub trace_q: T,
    pub trace_w: T,
}

impl<T: Real> ComponentSet<T> {
    /// Same components with the roles of Q and W exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            vac_q: self.vac_w,
            vac_w: self.vac_q,
            vac_qw: self.vac_qw,
            vac0: self.vac0,
            a_q1: self.a_w1,
            a_q0: self.a_w0,
            a_qw1: self.a_wq1,
            a_qw0: self.a_wq0,
            a_w1: self.a_q1,
            a_w0: self.a_q0,
            a_wq1: self.a_qw1,
            a_wq0: self.a_qw0,
            trace_q: self.trace_w,
            trace_w: self.trace_q,
        }
    }

    /// `[q_only, w_only, both, neither]` for noise only.
    pub fn noise_row(&self) -> [T; 4] {
        [self.vac_q, self.vac_w, self.vac_qw, self.vac0]
    }

    /// `[q_only, w_only, both, neither]` with the photon in Q.
    pub fn photon_q_row(&self) -> [T; 4] {
        [self.a_q1, self.a_q0, self.a_qw1, self.a_qw0]
    }

    /// `[q_only, w_only, both, neither]` with the photon in W.
    pub fn photon_w_row(&self) -> [T; 4] {
        [self.a_w0, self.a_w1, self.a_wq1, self.a_wq0]
    }
}

pub fn component_values<T: Real>(
    port_q: &Port<T>,
    port_w: &Port<T>,
    num: &Numerics,
) -> Result<ComponentSet<T>> {
    let sq = photon_sums(port_q, num)?;
    let sw = photon_sums(port_w, num)?;
    let (dq, dw) = (port_q.dark(), port_w.dark());
    let (cq, cw) = (port_q.noise_click(), port_w.noise_click());
    Ok(ComponentSet {
        vac_q: cq * dw,
        vac_w: dq * cw,
        vac_qw: cq * cw,
        vac0: dq * dw,
        a_q1: sq.click * dw,
        a_q0: sq.vacuum * cw,
        a_qw1: sq.click * cw,
        a_qw0: sq.vacuum * dw,
        a_w1: sw.click * dq,
        a_w0: sw.vacuum * cq,
        a_wq1: sw.click * cq,
        a_wq0: sw.vacuum * dq,
        trace_q: sq.trace,
        trace_w: sw.trace,
    })
}

/// `(q1, q2)` weights of the two photon placements at total angle `theta_total`.
pub fn q_factors<T: Real>(theta_total: T, a_click: T, a_noclick: T) -> (T, T) {
    let c2 = theta_total.cos().powi(2);
    let s2 = theta_total.sin().powi(2);
    (a_click * s2 + a_noclick * c2, a_click * c2 + a_noclick * s2)
}
