//! Per-shot coincidence probabilities of the Alice, Eve and noise contributions and
//! their composition into the real and false channels.

use std::ops::{Add, Mul};

use crate::detection::{
    eve_resend_outcomes, idler_click, mix_outcomes, signal_given_idler, total_angle,
    OutcomeDistribution,
};
use crate::error::{domain, Result};
use crate::fock::{component_values, Basis, Mode, Numerics, Pol, Port, SourceBb84, SourceQi};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoincidenceTriple<T> {
    pub correct: T,
    pub wrong: T,
    pub double: T,
}

impl<T: Real> CoincidenceTriple<T> {
    pub fn new(correct: T, wrong: T, double: T) -> Self {
        Self { correct, wrong, double }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// Correct plus wrong, the sum used by the threshold errors.
    pub fn total(&self) -> T {
        self.correct + self.wrong
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.correct * s, self.wrong * s, self.double * s)
    }

    fn from_outcomes(d: &OutcomeDistribution<T>) -> Self {
        Self::new(d.click_j_only, d.click_k_only, d.click_both)
    }
}

impl<T: Real> Add for CoincidenceTriple<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.correct + o.correct, self.wrong + o.wrong, self.double + o.double)
    }
}

impl<T: Real> Mul<T> for CoincidenceTriple<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// Signal mode carrying the partner of an idler photon found in `idler`.
pub fn correlated(idler: Pol) -> Pol {
    match idler {
        Pol::H => Pol::V,
        Pol::V => Pol::H,
        Pol::D => Pol::D,
        Pol::A => Pol::A,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrusionParams<T> {
    pub p: T,
    pub p_real: T,
    pub p_false: T,
    /// Probability that Eve measures in the rectilinear basis.
    pub r: T,
}

impl<T: Real> IntrusionParams<T> {
    pub fn new(p_real: T, p_false: T, r: T) -> Result<Self> {
        let s = Self { p: p_real + p_false, p_real, p_false, r };
        s.validate()?;
        Ok(s)
    }

    /// Everything intercepted is sent to the false channel.
    pub fn false_only(p: T) -> Result<Self> {
        Self::new(T::zero(), p, T::lit(0.5))
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if !(self.p_real >= T::zero() && self.p_false >= T::zero()) || !unit(self.p) {
            return domain("intrusion fractions must be >= 0 with p_real + p_false <= 1");
        }
        if (self.p - self.p_real - self.p_false).abs() > T::lit(1e-12) {
            return domain("p must equal p_real + p_false");
        }
        if !unit(self.r) {
            return domain("basis bias r must lie in [0,1]");
        }
        Ok(())
    }
}

/// Time-bin delays of the three legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delays {
    pub idler_to_signal: u32,
    pub idler_to_eve: u32,
    pub eve_to_signal: u32,
}

impl Delays {
    pub fn real(&self) -> u32 {
        self.idler_to_signal
    }

    pub fn false_channel(&self) -> u32 {
        self.idler_to_eve + self.eve_to_signal
    }
}

impl Default for Delays {
    fn default() -> Self {
        Self { idler_to_signal: 2, idler_to_eve: 1, eve_to_signal: 2 }
    }
}

/// Every parameter of the optical set-up. Background means are physical
/// (reflected) values; see [`Port`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub n_bar: T,
    pub n_bar_alpha: T,
    pub eta_i: [T; 4],
    pub eta_e: [T; 4],
    pub eta_s: [T; 4],
    pub xi: T,
    pub xi_eve: T,
    pub n_b_i: [T; 4],
    pub n_b_e: [T; 4],
    pub n_b_s: [T; 4],
    pub n_b_s_eve: [T; 4],
    pub intrusion: IntrusionParams<T>,
    pub theta: T,
    pub delays: Delays,
    pub numerics: Numerics,
}

impl<T: Real> Scenario<T> {
    pub fn source(&self) -> Result<SourceQi<T>> {
        SourceQi::new(self.n_bar)
    }

    pub fn source_bb84(&self) -> Result<SourceBb84<T>> {
        SourceBb84::new(self.n_bar_alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        for (name, v) in [("eta_i", &self.eta_i), ("eta_e", &self.eta_e), ("eta_s", &self.eta_s)] {
            if !v.iter().all(|&x| unit(x)) {
                return domain(format!("{name} entries must lie in [0,1]"));
            }
        }
        for (name, v) in [
            ("n_b_i", &self.n_b_i),
            ("n_b_e", &self.n_b_e),
            ("n_b_s", &self.n_b_s),
            ("n_b_s_eve", &self.n_b_s_eve),
        ] {
            if !v.iter().all(|&x| x >= T::zero() && x.is_finite()) {
                return domain(format!("{name} entries must be finite and >= 0"));
            }
        }
        if !unit(self.xi) || !unit(self.xi_eve) {
            return domain("attenuations must lie in [0,1]");
        }
        self.intrusion.validate()?;
        self.source()?;
        self.source_bb84()?;
        Ok(())
    }

    pub fn idler_port(&self, m: Pol) -> Result<Port<T>> {
        Port::new(Mode::Alice(m), self.eta_i[m.index()], self.n_b_i[m.index()])
    }

    /// Alice's signal detector on the untampered path.
    pub fn alice_port(&self, m: Pol) -> Result<Port<T>> {
        let i = m.index();
        Port::new(Mode::Alice(m), self.eta_s[i] * self.xi, self.n_b_s[i])
    }

    /// Alice's signal detector receiving Eve's resent light.
    pub fn resend_port(&self, m: Pol) -> Result<Port<T>> {
        let i = m.index();
        Port::new(Mode::Alice(m), self.eta_s[i] * self.xi_eve, self.n_b_s_eve[i])
    }

    pub fn eve_port(&self, m: Pol) -> Result<Port<T>> {
        Port::new(Mode::Eve(m), self.eta_e[m.index()], self.n_b_e[m.index()])
    }

    fn eve_bases(&self) -> [(Basis, T); 2] {
        [
            (Basis::Rectilinear, self.intrusion.r),
            (Basis::Diagonal, T::one() - self.intrusion.r),
        ]
    }

    /// Probability per shot that exactly one idler detector of the chosen basis clicks.
    pub fn idler_click_rate(&self) -> Result<T> {
        let src = self.source()?;
        let half = T::lit(0.5);
        let mut total = T::zero();
        for b in Basis::BOTH {
            let (x1, x2) = b.elements();
            for (q, w) in [(x1, x2), (x2, x1)] {
                let id = idler_click(&src, &self.idler_port(q)?, &self.idler_port(w)?, &self.numerics)?;
                total = total + half * id.click_prob;
            }
        }
        Ok(total)
    }

    fn noise_triple_on(&self, j: &Port<T>, k: &Port<T>) -> Result<CoincidenceTriple<T>> {
        let cs = component_values(j, k, &self.numerics)?;
        Ok(CoincidenceTriple::new(cs.vac_q, cs.vac_w, cs.vac_qw))
    }

    /// Alice's detectors after Eve measured `seen` (or nothing) in her basis.
    fn after_eve(
        &self,
        eve_view: &OutcomeDistribution<T>,
        y1: Pol,
        y2: Pol,
        j: Pol,
    ) -> Result<CoincidenceTriple<T>> {
        let k = j.orthogonal();
        let (sj, sk) = (self.resend_port(j)?, self.resend_port(k)?);
        let mut acc = self.noise_triple_on(&sj, &sk)? * eve_view.click_neither;
        for (y, py) in [(y1, eve_view.click_j_only), (y2, eve_view.click_k_only)] {
            let theta_t = total_angle(j, y, self.theta);
            let d = eve_resend_outcomes(&sj, &sk, theta_t, &self.numerics)?;
            acc = acc + CoincidenceTriple::from_outcomes(&d) * py;
        }
        Ok(acc)
    }
}

/// Alice, Eve and noise triples of the twin-beam system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contributions<T> {
    pub alice: CoincidenceTriple<T>,
    pub eve: CoincidenceTriple<T>,
    pub noise: CoincidenceTriple<T>,
}

pub fn triples_qi<T: Real>(sc: &Scenario<T>) -> Result<Contributions<T>> {
    let src = sc.source()?;
    let num = &sc.numerics;
    let half = T::lit(0.5);
    let mut alice = CoincidenceTriple::zero();
    let mut eve = CoincidenceTriple::zero();
    let mut noise = CoincidenceTriple::zero();
    for b in Basis::BOTH {
        let (x1, x2) = b.elements();
        for (q, w) in [(x1, x2), (x2, x1)] {
            let id = idler_click(&src, &sc.idler_port(q)?, &sc.idler_port(w)?, num)?;
            let weight = half * id.click_prob;
            let (j, k) = (correlated(q), correlated(w));
            let (sj, sk) = (sc.alice_port(j)?, sc.alice_port(k)?);

            let d = signal_given_idler(&id, &sj, &sk, T::zero(), num)?;
            alice = alice + CoincidenceTriple::from_outcomes(&d) * weight;
            noise = noise + sc.noise_triple_on(&sj, &sk)? * weight;

            for (eb, bias) in sc.eve_bases() {
                let (y1, y2) = eb.elements();
                let theta_t = total_angle(j, y1, sc.theta);
                let view =
                    signal_given_idler(&id, &sc.eve_port(y1)?, &sc.eve_port(y2)?, theta_t, num)?;
                eve = eve + sc.after_eve(&view, y1, y2, j)? * (weight * bias);
            }
        }
    }
    Ok(Contributions { alice, eve, noise })
}

pub fn alice_triple_qi<T: Real>(sc: &Scenario<T>) -> Result<CoincidenceTriple<T>> {
    Ok(triples_qi(sc)?.alice)
}

pub fn eve_triple_qi<T: Real>(sc: &Scenario<T>) -> Result<CoincidenceTriple<T>> {
    Ok(triples_qi(sc)?.eve)
}

pub fn noise_triple_qi<T: Real>(sc: &Scenario<T>) -> Result<CoincidenceTriple<T>> {
    Ok(triples_qi(sc)?.noise)
}

/// Prepare-and-measure counterpart driven by a weak coherent source.
pub fn triples_bb84<T: Real>(sc: &Scenario<T>) -> Result<Contributions<T>> {
    let src = sc.source_bb84()?;
    let num = &sc.numerics;
    let quarter = T::lit(0.25);
    let mut alice = CoincidenceTriple::zero();
    let mut eve = CoincidenceTriple::zero();
    let mut noise = CoincidenceTriple::zero();
    for j in Pol::ALL {
        let k = j.orthogonal();
        let (sj, sk) = (sc.alice_port(j)?, sc.alice_port(k)?);
        let cs = component_values(&sj, &sk, num)?;
        let d = mix_outcomes(&cs, src.c0_alpha, src.c1_alpha, T::zero())?;
        alice = alice + CoincidenceTriple::from_outcomes(&d) * quarter;
        noise = noise + CoincidenceTriple::new(cs.vac_q, cs.vac_w, cs.vac_qw) * quarter;

        for (eb, bias) in sc.eve_bases() {
            let (y1, y2) = eb.elements();
            let c2 = total_angle(j, y1, sc.theta).cos().powi(2);
            let ecs = component_values(&sc.eve_port(y1)?, &sc.eve_port(y2)?, num)?;
            let view = mix_outcomes(
                &ecs,
                src.c0_alpha,
                src.c1_alpha * c2,
                src.c1_alpha * (T::one() - c2),
            )?;
            eve = eve + sc.after_eve(&view, y1, y2, j)? * (quarter * bias);
        }
    }
    Ok(Contributions { alice, eve, noise })
}

/// Real and false channel triples.
pub fn compose_channels<T: Real>(
    alice: &CoincidenceTriple<T>,
    eve: &CoincidenceTriple<T>,
    noise: &CoincidenceTriple<T>,
    intrusion: &IntrusionParams<T>,
) -> (CoincidenceTriple<T>, CoincidenceTriple<T>) {
    let one = T::one();
    let real = *alice * (one - intrusion.p) + *eve * intrusion.p_real + *noise * intrusion.p_false;
    let fals = *eve * intrusion.p_false + *noise * (one - intrusion.p_false);
    (real, fals)
}
