//! Modified Bessel functions, the Skellam distribution and erroneous-conclusion
//! frequencies for limited-sample thresholding.

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

const EPS: f64 = 1e-17;
const MAX_ITER: usize = 1_000_000;
const SERIES_LIMIT: f64 = 30.0;

/// `ln I_nu(z)` for `nu >= 0`, `z >= 0`.
pub fn ln_bessel_i(nu: f64, z: f64) -> f64 {
    debug_assert!(nu >= 0.0 && z >= 0.0);
    if z == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let n = nu.floor();
    let nu0 = nu - n;
    let mut ln_i = if z <= SERIES_LIMIT { ln_series(nu0, z) } else { ln_hankel(nu0, z) };
    let n = n as usize;
    if n == 0 {
        return ln_i;
    }
    let mut r = ratio_cf(nu0 + n as f64, z);
    ln_i += r.ln();
    for k in (1..n).rev() {
        r = 1.0 / (2.0 * (nu0 + k as f64) / z + r);
        ln_i += r.ln();
    }
    ln_i
}

fn ln_series(nu: f64, z: f64) -> f64 {
    let h = 0.5 * z;
    let h2 = h * h;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= h2 / (k * (k + nu));
        sum += term;
        if term < EPS * sum {
            break;
        }
    }
    nu * h.ln() - libm::lgamma(nu + 1.0) + sum.ln()
}

fn ln_hankel(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum: f64 = 1.0;
    let mut k = 1.0;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * k * z);
        if next.abs() >= term.abs() || next.abs() < EPS * sum.abs() {
            if next.abs() < term.abs() {
                sum += next;
            }
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    z - 0.5 * (2.0 * std::f64::consts::PI * z).ln() + sum.ln()
}

/// `I_nu(z) / I_{nu-1}(z)` by continued fraction (modified Lentz).
fn ratio_cf(nu: f64, z: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = 2.0 * nu / z;
    if f == 0.0 {
        f = tiny;
    }
    let mut c = f;
    let mut d = 0.0;
    for j in 1..MAX_ITER {
        let b = 2.0 * (nu + j as f64) / z;
        d += b;
        if d == 0.0 {
            d = tiny;
        }
        c = b + 1.0 / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Modified Bessel function of the first kind.
pub fn bessel_i<T: Real>(order: T, z: T) -> Result<T> {
    if !(order >= T::zero()) || !(z >= T::zero()) || !z.is_finite() || !order.is_finite() {
        return domain(format!("bessel_i needs order >= 0 and finite z >= 0, got ({order}, {z})"));
    }
    let ln_i = ln_bessel_i(order.to_f64_lossy(), z.to_f64_lossy());
    if ln_i > T::max_value().ln().to_f64_lossy() {
        return Err(Error::Overflow { log_value: ln_i });
    }
    Ok(T::lit(ln_i.exp()))
}

/// Rates of the two Poisson counts whose difference is modelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkellamParams<T> {
    pub mu1: T,
    pub mu2: T,
    /// A negative rate was raised to zero.
    pub clamped: bool,
}

impl<T: Real> SkellamParams<T> {
    pub fn new(mu1: T, mu2: T) -> Result<Self> {
        if !(mu1 >= T::zero() && mu2 >= T::zero()) {
            return domain(format!("Skellam rates must be >= 0, got ({mu1}, {mu2})"));
        }
        Ok(Self { mu1, mu2, clamped: false })
    }

    /// `mu1 = N pr_obj - C`, `mu2 = N pr_noise - C`, clamped at zero.
    pub fn from_shots(shots: T, pr_obj: T, pr_noise: T, covariance: T) -> Self {
        let mu1 = shots * pr_obj - covariance;
        let mu2 = shots * pr_noise - covariance;
        let clamped = mu1 < T::zero() || mu2 < T::zero();
        Self { mu1: mu1.max(T::zero()), mu2: mu2.max(T::zero()), clamped }
    }

    pub fn mean(&self) -> T {
        self.mu1 - self.mu2
    }

    pub fn variance(&self) -> T {
        self.mu1 + self.mu2
    }

    pub fn ln_pmf(&self, x: i64) -> f64 {
        skellam_ln_pmf(x, self.mu1.to_f64_lossy(), self.mu2.to_f64_lossy())
    }

    pub fn pmf(&self, x: i64) -> T {
        T::lit(self.ln_pmf(x).exp())
    }
}

fn ln_poisson(k: i64, mu: f64) -> f64 {
    if k < 0 {
        return f64::NEG_INFINITY;
    }
    let k = k as f64;
    k * mu.ln() - mu - libm::lgamma(k + 1.0)
}

pub fn skellam_ln_pmf(x: i64, mu1: f64, mu2: f64) -> f64 {
    match (mu1 == 0.0, mu2 == 0.0) {
        (true, true) => {
            if x == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
        (false, true) => ln_poisson(x, mu1),
        (true, false) => ln_poisson(-x, mu2),
        (false, false) => {
            let xf = x as f64;
            -mu1 - mu2
                + 0.5 * xf * (mu1.ln() - mu2.ln())
                + ln_bessel_i(xf.abs(), 2.0 * (mu1 * mu2).sqrt())
        }
    }
}

pub fn skellam_pmf<T: Real>(x: i64, params: &SkellamParams<T>) -> T {
    params.pmf(x)
}

/// Noise-reduced counts of one run: object-present minus noise-only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseReduced<T> {
    pub real_correct: T,
    pub real_wrong: T,
    pub false_correct: T,
    pub false_wrong: T,
}

impl<T: Real> NoiseReduced<T> {
    pub fn e_t_off(&self) -> Option<T> {
        let num = self.real_wrong + self.false_wrong;
        let den = num + self.real_correct + self.false_correct;
        if den == T::zero() {
            None
        } else {
            Some(num / den)
        }
    }

    pub fn k_real(&self) -> Option<T> {
        (self.real_wrong > T::zero()).then(|| self.real_correct / self.real_wrong)
    }

    pub fn k_false(&self) -> Option<T> {
        (self.false_wrong > T::zero()).then(|| self.false_correct / self.false_wrong)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErroneousReport {
    pub samples: usize,
    /// Pr(e_T,off <= 0).
    pub unrecognised: f64,
    /// Pr(R > 0 and F < 0 | e_T,off <= 0).
    pub spoofed_given_unrecognised: f64,
    /// Pr(F <= R < 0 | e_T,off <= 0).
    pub ordered_negative_given_unrecognised: f64,
    /// Pr(F < 0 | R > 0).
    pub false_negative_given_real_positive: f64,
    /// Pr(F < 0 and R > 0).
    pub false_negative_and_real_positive: f64,
    /// Pr(k_F > k_R > 0) with both wrong values positive.
    pub k_inversion: f64,
}

impl ErroneousReport {
    /// The five headline probabilities in their customary order.
    pub fn headline(&self) -> [f64; 5] {
        [
            self.unrecognised,
            self.spoofed_given_unrecognised,
            self.ordered_negative_given_unrecognised,
            self.false_negative_given_real_positive,
            self.k_inversion,
        ]
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Empirical erroneous-conclusion frequencies over matched runs.
pub fn erroneous_conclusion_probs<T: Real>(samples: &[NoiseReduced<T>]) -> Result<ErroneousReport> {
    if samples.is_empty() {
        return domain("no samples");
    }
    let zero = T::zero();
    let (mut unrec, mut spoof_u, mut ord_u, mut rpos, mut fneg_rpos, mut kinv) = (0, 0, 0, 0, 0, 0);
    for s in samples {
        let (r, f) = (s.real_wrong, s.false_wrong);
        let le = matches!(s.e_t_off(), Some(e) if e <= zero);
        if le {
            unrec += 1;
            if r > zero && f < zero {
                spoof_u += 1;
            }
            if f <= r && r < zero {
                ord_u += 1;
            }
        }
        if r > zero {
            rpos += 1;
            if f < zero {
                fneg_rpos += 1;
            }
        }
        if let (Some(kr), Some(kf)) = (s.k_real(), s.k_false()) {
            if kf > kr && kr > zero {
                kinv += 1;
            }
        }
    }
    let n = samples.len();
    Ok(ErroneousReport {
        samples: n,
        unrecognised: ratio(unrec, n),
        spoofed_given_unrecognised: ratio(spoof_u, unrec),
        ordered_negative_given_unrecognised: ratio(ord_u, unrec),
        false_negative_given_real_positive: ratio(fneg_rpos, rpos),
        false_negative_and_real_positive: ratio(fneg_rpos, n),
        k_inversion: ratio(kinv, n),
    })
}

/// Sign probabilities of two independent noise-reduced wrong counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignProbs {
    pub false_negative_given_real_positive: f64,
    pub false_negative_and_real_positive: f64,
    pub false_le_real_lt_zero: f64,
}

/// Exact sign probabilities for independent real/false Skellams, summed over
/// `mean +- width` standard deviations.
pub fn sign_probs<T: Real>(
    real: &SkellamParams<T>,
    fals: &SkellamParams<T>,
    width: f64,
) -> SignProbs {
    let window = |p: &SkellamParams<T>| {
        let m = p.mean().to_f64_lossy();
        let s = p.variance().to_f64_lossy().sqrt().max(1.0);
        ((m - width * s).floor() as i64, (m + width * s).ceil() as i64)
    };
    let (rl, rh) = window(real);
    let (fl, fh) = window(fals);
    let fp: Vec<f64> = (fl..=fh).map(|x| fals.ln_pmf(x).exp()).collect();
    let f_cdf = |upto: i64| -> f64 {
        (fl..=fh.min(upto)).map(|x| fp[(x - fl) as usize]).sum()
    };
    let f_neg = f_cdf(-1);
    let mut r_pos = 0.0;
    let mut ordered = 0.0;
    for x in rl..=rh {
        let pr = real.ln_pmf(x).exp();
        if x > 0 {
            r_pos += pr;
        }
        if x < 0 {
            ordered += pr * f_cdf(x);
        }
    }
    SignProbs {
        false_negative_given_real_positive: if r_pos > 0.0 { f_neg } else { 0.0 },
        false_negative_and_real_positive: f_neg * r_pos,
        false_le_real_lt_zero: ordered,
    }
}
