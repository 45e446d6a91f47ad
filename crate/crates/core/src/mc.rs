//! Time-bin Monte-Carlo of the temporal spoofing experiment.
//!
//! Every bin carries an idler click with the analytic per-shot probability. A retained
//! click opens the real channel `delays.real()` bins later and the false channel
//! `delays.false_channel()` bins later. Each channel outcome is drawn from its
//! idler-conditioned distribution together with a noise-only outcome driven by the
//! same uniform, which is what makes the two counts covary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coincidence::{compose_channels, triples_qi, CoincidenceTriple, Delays, Scenario};
use crate::error::{domain, Error, Result};
use crate::scalar::Real;
use crate::security::{recognize_and_attribute, AliceChannel, ChannelEstimate, DiscrepancyInputs, EveDetected};
use crate::stats::{erroneous_conclusion_probs, ErroneousReport, NoiseReduced};

pub const THREADS_ENV: &str = "QI_SPOOF_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCConfig {
    /// Time bins per run.
    pub shots: u64,
    pub runs: usize,
    pub seed: u64,
    pub delays: Delays,
    /// Drive the noise-only sampler with the object-present uniform.
    pub coupled: bool,
}

impl MCConfig {
    pub fn new(shots: u64, runs: usize, seed: u64, delays: Delays) -> Self {
        Self { shots, runs, seed, delays, coupled: true }
    }
}

/// Outcome categories in sampling order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Correct,
    Wrong,
    Double,
    Nothing,
}

const CATEGORIES: [Category; 4] = [Category::Correct, Category::Wrong, Category::Double, Category::Nothing];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub correct: u64,
    pub wrong: u64,
    pub double: u64,
}

impl Counts {
    fn tally(&mut self, c: Category) {
        match c {
            Category::Correct => self.correct += 1,
            Category::Wrong => self.wrong += 1,
            Category::Double => self.double += 1,
            Category::Nothing => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub idler_clicks: u64,
    pub retained: u64,
    pub discarded_bins: u64,
    pub real: Counts,
    pub real_noise: Counts,
    pub fals: Counts,
    pub false_noise: Counts,
}

impl RunOutcome {
    pub fn noise_reduced(&self) -> NoiseReduced<f64> {
        let d = |a: u64, b: u64| a as f64 - b as f64;
        NoiseReduced {
            real_correct: d(self.real.correct, self.real_noise.correct),
            real_wrong: d(self.real.wrong, self.real_noise.wrong),
            false_correct: d(self.fals.correct, self.false_noise.correct),
            false_wrong: d(self.fals.wrong, self.false_noise.wrong),
        }
    }

    /// Verdict from the signs of this run's noise-reduced counts.
    pub fn verdict(&self) -> (EveDetected, AliceChannel) {
        let nr = self.noise_reduced();
        let est = |c: f64, w: f64| ChannelEstimate { correct_nr: c, wrong_nr: w, zero_tol: 0.0 };
        let v = recognize_and_attribute(
            &est(nr.real_correct, nr.real_wrong),
            &est(nr.false_correct, nr.false_wrong),
            None,
            DiscrepancyInputs::default(),
        );
        (v.eve_detected, v.alice_channel)
    }
}

/// Idler-conditioned outcome distributions fed to the sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinModel {
    pub idler_click: f64,
    pub real: [f64; 4],
    pub fals: [f64; 4],
    pub noise: [f64; 4],
}

fn conditioned<T: Real>(t: &CoincidenceTriple<T>, p: f64) -> [f64; 4] {
    if p <= 0.0 {
        return [0.0, 0.0, 0.0, 1.0];
    }
    let c = t.correct.to_f64_lossy() / p;
    let w = t.wrong.to_f64_lossy() / p;
    let d = t.double.to_f64_lossy() / p;
    [c, w, d, (1.0 - c - w - d).max(0.0)]
}

impl BinModel {
    pub fn from_scenario<T: Real>(sc: &Scenario<T>) -> Result<Self> {
        sc.validate()?;
        let p = sc.idler_click_rate()?.to_f64_lossy();
        let c = triples_qi(sc)?;
        let (real, fals) = compose_channels(&c.alice, &c.eve, &c.noise, &sc.intrusion);
        Ok(Self {
            idler_click: p,
            real: conditioned(&real, p),
            fals: conditioned(&fals, p),
            noise: conditioned(&c.noise, p),
        })
    }
}

fn draw(dist: &[f64; 4], u: f64) -> Category {
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate().take(3) {
        acc += p;
        if u < acc {
            return CATEGORIES[i];
        }
    }
    Category::Nothing
}

/// Generator for run `run`: the root seed selects the key, the run index the stream.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

pub fn simulate_run(cfg: &MCConfig, model: &BinModel, run: usize) -> RunOutcome {
    let mut rng = run_rng(cfg.seed, run);
    let mut out = RunOutcome {
        run,
        idler_clicks: 0,
        retained: 0,
        discarded_bins: 0,
        real: Counts::default(),
        real_noise: Counts::default(),
        fals: Counts::default(),
        false_noise: Counts::default(),
    };
    let p = model.idler_click;
    if !(p > 0.0) || cfg.shots == 0 {
        return out;
    }
    let lag = cfg.delays.false_channel() as i64 - cfg.delays.real() as i64;
    let ln_q = (-p).ln_1p();
    let mut recent: std::collections::VecDeque<i64> = std::collections::VecDeque::new();
    let mut z: i64 = -1;
    loop {
        let gap = if p >= 1.0 {
            0
        } else {
            let u: f64 = 1.0 - rng.gen::<f64>();
            (u.ln() / ln_q).floor() as i64
        };
        z += gap + 1;
        if z >= cfg.shots as i64 {
            break;
        }
        out.idler_clicks += 1;
        let polluted = lag > 0 && recent.contains(&(z - lag));
        if lag > 0 {
            recent.push_back(z);
            while recent.front().is_some_and(|&f| f < z - lag) {
                recent.pop_front();
            }
        }
        if polluted {
            out.discarded_bins += 1;
            continue;
        }
        out.retained += 1;
        let ur: f64 = rng.gen();
        let ur_noise = if cfg.coupled { ur } else { rng.gen() };
        let uf: f64 = rng.gen();
        let uf_noise = if cfg.coupled { uf } else { rng.gen() };
        out.real.tally(draw(&model.real, ur));
        out.real_noise.tally(draw(&model.noise, ur_noise));
        out.fals.tally(draw(&model.fals, uf));
        out.false_noise.tally(draw(&model.noise, uf_noise));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MCSummary {
    pub runs: Vec<RunOutcome>,
    pub model: BinModel,
    /// Covariance of object-present and noise-only wrong counts, real channel.
    pub covariance: f64,
    pub covariance_false: f64,
    pub report: ErroneousReport,
}

impl MCSummary {
    pub fn noise_reduced(&self) -> Vec<NoiseReduced<f64>> {
        self.runs.iter().map(RunOutcome::noise_reduced).collect()
    }

    pub fn retained_total(&self) -> u64 {
        self.runs.iter().map(|r| r.retained).sum()
    }
}

fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Validation { key: THREADS_ENV.into(), msg: format!("not a count: {v}") })?;
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    b.build().map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

pub fn simulate_with_model(cfg: &MCConfig, model: &BinModel) -> Result<MCSummary> {
    if cfg.runs == 0 {
        return domain("at least one run is required");
    }
    let pool = thread_pool()?;
    let runs: Vec<RunOutcome> =
        pool.install(|| (0..cfg.runs).into_par_iter().map(|i| simulate_run(cfg, model, i)).collect());
    let col = |f: &dyn Fn(&RunOutcome) -> u64| runs.iter().map(|r| f(r) as f64).collect::<Vec<_>>();
    let covariance = covariance(&col(&|r| r.real.wrong), &col(&|r| r.real_noise.wrong));
    let covariance_false = self::covariance(&col(&|r| r.fals.wrong), &col(&|r| r.false_noise.wrong));
    let nr: Vec<_> = runs.iter().map(RunOutcome::noise_reduced).collect();
    let report = erroneous_conclusion_probs(&nr)?;
    Ok(MCSummary { runs, model: *model, covariance, covariance_false, report })
}

pub fn simulate_ensemble<T: Real>(cfg: &MCConfig, sc: &Scenario<T>) -> Result<MCSummary> {
    let model = BinModel::from_scenario(sc)?;
    simulate_with_model(cfg, &model)
}
