//! Error metrics, the recognition/attribution procedure and false-information removal.

use crate::coincidence::{compose_channels, triples_qi, CoincidenceTriple, IntrusionParams, Scenario};
use crate::error::{domain, Result};
use crate::scalar::Real;

/// Correct-to-wrong ratio of Eve's noise-reduced contribution. `None` when the
/// noise-reduced wrong probability is not positive.
pub fn k_factor<T: Real>(eve: &CoincidenceTriple<T>, noise: &CoincidenceTriple<T>) -> Option<T> {
    let den = eve.wrong - noise.wrong;
    if den > T::zero() {
        Some((eve.correct - noise.correct) / den)
    } else {
        None
    }
}

pub fn eve_error<T: Real>(k: T) -> T {
    T::one() / (k + T::one())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdErrors<T> {
    pub e_threshold: T,
    pub offset: T,
    pub e_threshold_offset: T,
}

/// `e_T`, offset and `e_T,off`; `None` when `k` is undefined or the denominator is not positive.
pub fn threshold_errors<T: Real>(
    alice: &CoincidenceTriple<T>,
    eve: &CoincidenceTriple<T>,
    noise: &CoincidenceTriple<T>,
    p: T,
) -> Option<ThresholdErrors<T>> {
    let k = k_factor(eve, noise)?;
    let e_eve = eve_error(k);
    let one = T::one();
    let eve_part = p * (eve.total() - noise.total());
    let den = eve_part + (one - p) * (alice.total() - noise.total());
    if !(den > T::zero()) {
        return None;
    }
    let e_threshold = e_eve * eve_part / den;
    let offset = (one - p) * (alice.wrong - noise.wrong) / den;
    Some(ThresholdErrors { e_threshold, offset, e_threshold_offset: e_threshold + offset })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityMetrics<T> {
    pub k: Option<T>,
    pub e_eve: Option<T>,
    pub e_threshold: Option<T>,
    pub offset: Option<T>,
    pub e_threshold_offset: Option<T>,
    pub snr_real: Option<T>,
    pub snr_false: Option<T>,
}

pub fn security_metrics<T: Real>(
    alice: &CoincidenceTriple<T>,
    eve: &CoincidenceTriple<T>,
    noise: &CoincidenceTriple<T>,
    intrusion: &IntrusionParams<T>,
) -> SecurityMetrics<T> {
    let k = k_factor(eve, noise);
    let th = threshold_errors(alice, eve, noise, intrusion.p);
    let (real, fals) = compose_channels(alice, eve, noise, intrusion);
    SecurityMetrics {
        k,
        e_eve: k.map(eve_error),
        e_threshold: th.map(|t| t.e_threshold),
        offset: th.map(|t| t.offset),
        e_threshold_offset: th.map(|t| t.e_threshold_offset),
        snr_real: snr(&real, noise),
        snr_false: snr(&fals, noise),
    }
}

/// Noise-reduced estimates of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate<T> {
    pub correct_nr: T,
    pub wrong_nr: T,
    /// Magnitude below which a noise-reduced value is treated as zero.
    pub zero_tol: T,
}

impl<T: Real> ChannelEstimate<T> {
    /// From exact per-shot probabilities.
    pub fn analytic(channel: &CoincidenceTriple<T>, noise: &CoincidenceTriple<T>) -> Self {
        Self {
            correct_nr: channel.correct - noise.correct,
            wrong_nr: channel.wrong - noise.wrong,
            zero_tol: T::lit(1e-12),
        }
    }

    /// From click counts over `shots` shots; the zero band is five Skellam standard deviations.
    pub fn from_counts(
        correct: u64,
        wrong: u64,
        noise: &CoincidenceTriple<T>,
        shots: u64,
    ) -> Self {
        let n = T::lit(shots as f64);
        let c = T::lit(correct as f64);
        let w = T::lit(wrong as f64);
        let var = w + n * noise.wrong;
        Self {
            correct_nr: c / n - noise.correct,
            wrong_nr: w / n - noise.wrong,
            zero_tol: T::lit(5.0) * var.sqrt() / n,
        }
    }

    pub fn k_hat(&self) -> Option<T> {
        if self.wrong_nr > T::zero() {
            Some(self.correct_nr / self.wrong_nr)
        } else {
            None
        }
    }

    pub fn is_empty(&self) -> bool {
        self.correct_nr.abs() <= self.zero_tol && self.wrong_nr.abs() <= self.zero_tol
    }

    fn wrong_positive(&self) -> bool {
        self.wrong_nr > self.zero_tol
    }

    fn wrong_negative(&self) -> bool {
        self.wrong_nr < -self.zero_tol
    }
}

/// Measured offset threshold error over both channels; `None` on a zero denominator.
pub fn estimate_offset_threshold<T: Real>(
    real: &ChannelEstimate<T>,
    fals: &ChannelEstimate<T>,
) -> Option<T> {
    let num = real.wrong_nr + fals.wrong_nr;
    let den = num + real.correct_nr + fals.correct_nr;
    if den == T::zero() {
        None
    } else {
        Some(num / den)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSweep<T> {
    pub xi: Vec<T>,
    pub k: Vec<Option<T>>,
    pub validity: bool,
    pub rel_spread: Option<T>,
}

impl<T: Real> KSweep<T> {
    pub fn spoof_vulnerable(&self) -> bool {
        !self.validity
    }
}

/// k as a function of the interception attenuation. Validity requires a positive
/// noise-reduced Eve wrong probability at every grid point.
pub fn k_sweep_check<T: Real>(sc: &Scenario<T>, xi_grid: &[T]) -> Result<KSweep<T>> {
    if xi_grid.is_empty() {
        return domain("empty attenuation grid");
    }
    let mut ks = Vec::with_capacity(xi_grid.len());
    let mut validity = true;
    for &x in xi_grid {
        if !(x > T::zero() && x <= T::one()) {
            return domain(format!("attenuation {x} outside (0,1]"));
        }
        let mut s = sc.clone();
        s.xi_eve = x;
        let c = triples_qi(&s)?;
        validity &= c.eve.wrong - c.noise.wrong > T::zero();
        ks.push(k_factor(&c.eve, &c.noise));
    }
    let lo = xi_grid
        .iter()
        .zip(&ks)
        .min_by(|a, b| a.0.partial_cmp(b.0).unwrap())
        .and_then(|(_, k)| *k);
    let mut at_one = sc.clone();
    at_one.xi_eve = T::one();
    let c1 = triples_qi(&at_one)?;
    let rel_spread = match (lo, k_factor(&c1.eve, &c1.noise)) {
        (Some(a), Some(b)) if b != T::zero() => Some((a - b).abs() / b),
        _ => None,
    };
    Ok(KSweep { xi: xi_grid.to_vec(), k: ks, validity, rel_spread })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyConfig {
    pub p_steps: usize,
    pub xi_steps: usize,
    pub rel_tol: f64,
}

impl Default for DiscrepancyConfig {
    fn default() -> Self {
        Self { p_steps: 200, xi_steps: 200, rel_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy<T> {
    pub solutions: Vec<(T, T)>,
    pub consistent: bool,
}

/// Explains the channel's correct probability as Alice light plus noise over a
/// (p, xi) grid and tests whether any such explanation also predicts the wrong probability.
pub fn discrepancy_check<T: Real>(
    channel: &CoincidenceTriple<T>,
    sc: &Scenario<T>,
    cfg: &DiscrepancyConfig,
) -> Result<Discrepancy<T>> {
    if cfg.p_steps < 2 || cfg.xi_steps < 1 {
        return domain("discrepancy grid needs at least 2 p steps and 1 xi step");
    }
    let tol = T::lit(cfg.rel_tol);
    let close = |a: T, b: T| (a - b).abs() <= tol * a.abs().max(b.abs()) + T::lit(1e-300);
    let noise = triples_qi(sc)?.noise;
    let mut solutions = Vec::new();
    let mut consistent = false;
    let ps = T::of_usize(cfg.p_steps - 1);
    for ix in 1..=cfg.xi_steps {
        let xi = T::of_usize(ix) / T::of_usize(cfg.xi_steps);
        let mut s = sc.clone();
        s.xi = xi;
        let alice = triples_qi(&s)?.alice;
        for ip in 0..cfg.p_steps {
            let p = T::of_usize(ip) / ps;
            let one = T::one();
            let c = (one - p) * alice.correct + p * noise.correct;
            if close(c, channel.correct) {
                solutions.push((p, xi));
                let w = (one - p) * alice.wrong + p * noise.wrong;
                consistent |= close(w, channel.wrong);
            }
        }
    }
    Ok(Discrepancy { solutions, consistent })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EveDetected {
    Yes,
    No,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceChannel {
    Real,
    False,
    None,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub eve_detected: EveDetected,
    pub alice_channel: AliceChannel,
    pub spoof_vulnerable: bool,
    pub rationale: Vec<(String, String)>,
}

impl Verdict {
    /// `key=value` lines.
    pub fn trace(&self) -> String {
        self.rationale.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn note(&mut self, k: &str, v: impl ToString) {
        self.rationale.push((k.to_string(), v.to_string()));
    }
}

/// Optional discrepancy results the decision tree consults when the offset
/// threshold error gives no evidence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiscrepancyInputs {
    pub real_consistent: Option<bool>,
    pub false_consistent: Option<bool>,
}

pub fn recognize_and_attribute<T: Real>(
    real: &ChannelEstimate<T>,
    fals: &ChannelEstimate<T>,
    known_e_eve: Option<T>,
    discrepancy: DiscrepancyInputs,
) -> Verdict {
    let mut v = Verdict {
        eve_detected: EveDetected::Undetermined,
        alice_channel: AliceChannel::Undetermined,
        spoof_vulnerable: false,
        rationale: Vec::new(),
    };
    let real_empty = real.is_empty();
    let false_empty = fals.is_empty();
    v.note("real_empty", real_empty);
    v.note("false_empty", false_empty);
    if real_empty && false_empty {
        v.note("branch", "both_empty");
        v.eve_detected = EveDetected::No;
        v.alice_channel = AliceChannel::None;
        return v;
    }

    let e_off = estimate_offset_threshold(real, fals);
    match e_off {
        Some(e) => v.note("e_t_off", e),
        None => v.note("e_t_off", "undefined"),
    }
    let tol = real.zero_tol.max(fals.zero_tol);
    let detected = matches!(e_off, Some(e) if e > tol);
    if detected {
        v.eve_detected = EveDetected::Yes;
        v.note("branch", "e_t_off_positive");
    } else if real.wrong_positive() || fals.wrong_positive() {
        v.eve_detected = EveDetected::Yes;
        v.note("branch", "positive_wrong_in_channel");
    } else {
        v.note("branch", "discrepancy_check");
        let real_ok = if real_empty { Some(true) } else { discrepancy.real_consistent };
        let false_ok = if false_empty { Some(true) } else { discrepancy.false_consistent };
        let flags = [real_ok, false_ok];
        v.eve_detected = match flags {
            [Some(false), _] | [_, Some(false)] => EveDetected::Yes,
            [Some(true), Some(true)] => EveDetected::No,
            _ => EveDetected::Undetermined,
        };
        v.note("discrepancy_real", fmt_opt(discrepancy.real_consistent));
        v.note("discrepancy_false", fmt_opt(discrepancy.false_consistent));
    }

    if v.eve_detected == EveDetected::No {
        v.alice_channel = if !real_empty {
            AliceChannel::Real
        } else {
            AliceChannel::False
        };
        v.note("attribution", "no_intrusion");
        return v;
    }

    if let (Some(e), Some(ee)) = (e_off, known_e_eve) {
        if (e - ee).abs() <= T::lit(1e-9).max(tol) {
            v.alice_channel = AliceChannel::None;
            v.note("attribution", "complete_intrusion");
            return v;
        }
    }
    if real_empty || false_empty {
        let (alive, label) = if real_empty { (fals, "false") } else { (real, "real") };
        v.note("attribution", format!("only_{label}_nonempty"));
        v.alice_channel = if alive.wrong_negative() {
            if real_empty { AliceChannel::False } else { AliceChannel::Real }
        } else if let (Some(e), Some(ee)) = (e_off, known_e_eve) {
            if e < ee {
                if real_empty { AliceChannel::False } else { AliceChannel::Real }
            } else {
                AliceChannel::None
            }
        } else {
            AliceChannel::Undetermined
        };
        return v;
    }
    match (real.k_hat(), fals.k_hat()) {
        (Some(kr), Some(kf)) => {
            v.note("k_hat_real", kr);
            v.note("k_hat_false", kf);
            // strict comparison; the tie is the both-Eve signature
            v.alice_channel = if kr > kf {
                AliceChannel::Real
            } else if kf > kr {
                AliceChannel::False
            } else {
                AliceChannel::Undetermined
            };
            v.note("attribution", "k_factor");
        }
        _ => {
            v.note("attribution", "negative_wrong");
            v.alice_channel = if real.wrong_negative() && !fals.wrong_negative() {
                AliceChannel::Real
            } else if fals.wrong_negative() && !real.wrong_negative() {
                AliceChannel::False
            } else {
                AliceChannel::Undetermined
            };
            if fals.wrong_negative() && real.wrong_positive() {
                v.spoof_vulnerable = true;
            }
        }
    }
    v
}

fn fmt_opt(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_else(|| "skipped".into())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Removal<T> {
    pub trustworthy_correct_nr: T,
    pub error_term_bound: Option<T>,
}

/// Subtracts `k_false` times the noise-reduced wrong probability from the
/// noise-reduced correct probability. With known contributions the residual
/// Alice term `k_false (1-p)(A_w - B_w)` is reported.
pub fn remove_false_info<T: Real>(
    channel: &ChannelEstimate<T>,
    k_false: T,
    known: Option<(&CoincidenceTriple<T>, &CoincidenceTriple<T>, T)>,
) -> Result<Removal<T>> {
    if !(k_false > T::zero()) || !k_false.is_finite() {
        return domain(format!("k_false must be finite and positive, got {k_false}"));
    }
    let error_term_bound =
        known.map(|(alice, noise, p)| k_false * (T::one() - p) * (alice.wrong - noise.wrong));
    Ok(Removal {
        trustworthy_correct_nr: channel.correct_nr - k_false * channel.wrong_nr,
        error_term_bound,
    })
}

/// Noise-reduced signal over noise for one channel.
pub fn snr<T: Real>(ch: &CoincidenceTriple<T>, noise: &CoincidenceTriple<T>) -> Option<T> {
    let den = noise.correct + noise.wrong;
    if den > T::zero() {
        Some(((ch.correct - noise.correct) + (ch.wrong - noise.wrong)) / den)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaScan<T> {
    pub theta_star: T,
    pub e_curve: Vec<(T, Option<T>)>,
}

/// Eve's relative angle minimising her error; ties go to the smaller angle.
pub fn optimal_theta_scan<T: Real>(sc: &Scenario<T>, theta_grid: &[T]) -> Result<ThetaScan<T>> {
    if theta_grid.is_empty() {
        return domain("empty angle grid");
    }
    let mut curve = Vec::with_capacity(theta_grid.len());
    for &th in theta_grid {
        let mut s = sc.clone();
        s.theta = th;
        let c = triples_qi(&s)?;
        curve.push((th, k_factor(&c.eve, &c.noise).map(eve_error)));
    }
    // values within a relative 1e-12 count as ties
    let tie = T::lit(1e-12);
    let mut best: Option<(T, T)> = None;
    for &(th, e) in &curve {
        if let Some(e) = e {
            best = match best {
                Some((bt, be)) if e >= be - tie * be.abs() && !(e == be && th < bt) => Some((bt, be)),
                _ => Some((th, e)),
            };
        }
    }
    match best {
        Some((theta_star, _)) => Ok(ThetaScan { theta_star, e_curve: curve }),
        None => domain("error undefined at every grid angle"),
    }
}

/// The quantity whose sign decides `k_real > k_false` for known contributions.
pub fn k_ordering_gap<T: Real>(
    alice: &CoincidenceTriple<T>,
    eve: &CoincidenceTriple<T>,
    noise: &CoincidenceTriple<T>,
    intrusion: &IntrusionParams<T>,
) -> Option<T> {
    let (real, fals) = compose_channels(alice, eve, noise, intrusion);
    let kr = ChannelEstimate::analytic(&real, noise).k_hat()?;
    let kf = ChannelEstimate::analytic(&fals, noise).k_hat()?;
    Some(kr - kf)
}

/// Runs the discrepancy check on every non-empty channel before the decision tree.
pub fn attribute_with_scenario<T: Real>(
    real: &CoincidenceTriple<T>,
    fals: &CoincidenceTriple<T>,
    sc: &Scenario<T>,
    known_e_eve: Option<T>,
    cfg: &DiscrepancyConfig,
) -> Result<Verdict> {
    let noise = triples_qi(sc)?.noise;
    let re = ChannelEstimate::analytic(real, &noise);
    let fe = ChannelEstimate::analytic(fals, &noise);
    let check = |ch: &CoincidenceTriple<T>, est: &ChannelEstimate<T>| -> Result<Option<bool>> {
        if est.is_empty() || est.wrong_positive() {
            Ok(None)
        } else {
            Ok(Some(discrepancy_check(ch, sc, cfg)?.consistent))
        }
    };
    let inputs = DiscrepancyInputs {
        real_consistent: check(real, &re)?,
        false_consistent: check(fals, &fe)?,
    };
    Ok(recognize_and_attribute(&re, &fe, known_e_eve, inputs))
}
