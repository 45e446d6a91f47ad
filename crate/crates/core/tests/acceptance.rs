//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNMET` are reported but do not fail the run unless
//! `QI_SPOOF_STRICT=1` is set; any other failure exits non-zero.

mod common;

use std::f64::consts::FRAC_PI_4;
use std::time::{Duration, Instant};

use rand::Rng;

use common::{oracle_sweep, port, random_port_params, random_scenario, rng, symmetric_scenario};
use qi_spoof::coincidence::{compose_channels, triples_qi, IntrusionParams};
use qi_spoof::config::{load_builtin, System};
use qi_spoof::detection::{bb84_signal_outcomes, eve_resend_outcomes, idler_click, mix_outcomes, signal_given_idler};
use qi_spoof::fock::{component_values, ComponentModel, Numerics, Pol};
use qi_spoof::mc::{simulate_ensemble, MCConfig};
use qi_spoof::report::{evaluate, grid, sweep, Axis};
use qi_spoof::security::{k_ordering_gap, optimal_theta_scan, remove_false_info, security_metrics, ChannelEstimate};
use qi_spoof::stats::SkellamParams;
use qi_spoof::{Scenario64, SourceBb84, SourceQi};

const KNOWN_UNMET: [u32; 2] = [1, 5];

struct Check {
    id: u32,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn scenario(name: &str) -> Scenario64 {
    load_builtin(name).unwrap().to_scenario().unwrap()
}

fn timed(id: u32, budget: Option<Duration>, f: impl FnOnce() -> (bool, String)) -> Check {
    let t = Instant::now();
    let (ok, mut detail) = f();
    let elapsed = t.elapsed();
    let mut pass = ok;
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            detail.push_str(&format!("; over the {:.0?} budget", b));
        }
    }
    Check { id, pass, detail, elapsed }
}

fn ac1() -> (bool, String) {
    let sc = scenario("set2");
    let xs = grid(0.0, 1.0, 1001).unwrap();
    let s = sweep(System::Qi, &sc, Axis::P, &xs).unwrap();
    let mut alt = sc.clone();
    alt.numerics.model = ComponentModel::Incoherent;
    let a = sweep(System::Qi, &alt, Axis::P, &xs).unwrap();
    match s.crossing {
        Some(x) => (
            (x - 0.684).abs() <= 0.01,
            format!(
                "crossing p={x:.4} (target 0.684 +- 0.01); incoherent model gives {:.4}",
                a.crossing.unwrap_or(f64::NAN)
            ),
        ),
        None => (false, "no crossing on [0,1]".into()),
    }
}

fn ac2() -> (bool, String) {
    let qi = scenario("set2");
    let bb = scenario("set2-bb84");
    let mut worst = f64::INFINITY;
    let mut bad = 0;
    // cell centres: at p = 0 and p = 1 one channel is pure noise and both systems give 0
    for i in 0..100 {
        let p = (i as f64 + 0.5) / 100.0;
        let set = |sc: &Scenario64| {
            let mut s = sc.clone();
            s.intrusion = IntrusionParams::new(0.0, p, sc.intrusion.r).unwrap();
            s
        };
        let q = evaluate(System::Qi, &set(&qi)).unwrap().metrics;
        let b = evaluate(System::Bb84, &set(&bb)).unwrap().metrics;
        for (x, y) in [(q.snr_real, b.snr_real), (q.snr_false, b.snr_false)] {
            match (x, y) {
                (Some(x), Some(y)) if x > y => worst = worst.min(x / y.abs().max(f64::MIN_POSITIVE)),
                _ => bad += 1,
            }
        }
    }
    (bad == 0, format!("{bad} violations over 100 points x 2 channels; smallest ratio {worst:.2}"))
}

fn ac3() -> (bool, String) {
    let sc = scenario("set1");
    let xs = grid(0.0, FRAC_PI_4, 100).unwrap();
    let step = xs[1] - xs[0];
    let s = optimal_theta_scan(&sc, &xs).unwrap();
    (s.theta_star.abs() <= step, format!("argmin theta={:.5} (step {step:.5})", s.theta_star))
}

fn ac4() -> (bool, String) {
    let it = IntrusionParams::new(0.0, 1.0, 0.5).unwrap();
    let mut worst: f64 = 0.0;
    let mut vals = Vec::new();
    for n in [1e-6, 1e-8, 1e-10] {
        let sc = symmetric_scenario(0.01, 1.0, 1.0, 1.0, 1.0, 1.0, [0.0, 0.0, n, n], it);
        let c = triples_qi(&sc).unwrap();
        let e = security_metrics(&c.alice, &c.eve, &c.noise, &sc.intrusion).e_eve.unwrap_or(f64::NAN);
        worst = worst.max((e - 0.25).abs());
        vals.push(format!("{e:.6}"));
    }
    (worst <= 1e-3, format!("e_eve={} as background -> 0", vals.join(", ")))
}

fn ac5() -> (bool, String) {
    let sc = scenario("set3");
    let cfg = MCConfig::new(280_000, 5000, 20_240_601, sc.delays);
    let s = simulate_ensemble(&cfg, &sc).unwrap();
    let got = s.report.headline();
    let target = [0.5104, 0.0346, 0.1668, 0.0222, 0.07];
    let tol = [0.03, 0.012, 0.022, 0.011, 0.015];
    let mut ok = true;
    let mut parts = Vec::new();
    for i in 0..5 {
        let hit = (got[i] - target[i]).abs() <= tol[i];
        ok &= hit;
        parts.push(format!("P{}={:.4} ({} {:.4}+-{})", i + 1, got[i], if hit { "ok" } else { "off" }, target[i], tol[i]));
    }
    parts.push(format!("joint Pr(F<0,R>0)={:.4}", s.report.false_negative_and_real_positive));
    (ok, parts.join("; "))
}

fn ac6() -> (bool, String) {
    let (worst, n, at) = oracle_sweep(0xAC6, 1000);
    (worst < 1e-9, format!("{n} values over 1000 draws, worst relative error {worst:.2e} ({at})"))
}

fn ac7() -> (bool, String) {
    let mut g = rng(0xAC7);
    let num = Numerics::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..2000 {
        let (tq, nq) = random_port_params(&mut g);
        let (tw, nw) = random_port_params(&mut g);
        let (pq, pw) = (port(Pol::H, tq, nq), port(Pol::V, tw, nw));
        let th = g.gen_range(0.0..std::f64::consts::PI);
        for model in [ComponentModel::Exact, ComponentModel::Incoherent] {
            let n = Numerics { model, ..num };
            let cs = component_values(&pq, &pw, &n).unwrap();
            let w: [f64; 3] = [g.gen(), g.gen(), g.gen()];
            let d = mix_outcomes(&cs, w[0], w[1], w[2]).unwrap();
            worst = worst.max((d.sum() - 1.0).abs());
            let d = eve_resend_outcomes(&pq, &pw, th, &n).unwrap();
            worst = worst.max((d.sum() - 1.0).abs());
            let src = SourceQi::new(g.gen_range(1e-4..0.2)).unwrap();
            let id = idler_click(&src, &pq, &pw, &n).unwrap();
            if id.click_prob > 0.0 {
                let d = signal_given_idler(&id, &pw, &pq, th, &n).unwrap();
                worst = worst.max((d.sum() - 1.0).abs());
                count += 1;
            }
            let b = SourceBb84::new(g.gen_range(1e-4..0.5)).unwrap();
            let d = bb84_signal_outcomes(&b, &pq, &pw, th, &n).unwrap();
            worst = worst.max((d.sum() - 1.0).abs());
            count += 3;
        }
    }
    let mut sk_worst: f64 = 0.0;
    for _ in 0..500 {
        let p = SkellamParams::<f64>::new(g.gen_range(0.0..500.0), g.gen_range(0.0..500.0)).unwrap();
        let s = p.variance().sqrt().max(1.0);
        let lo = (p.mean() - 40.0 * s).floor() as i64;
        let hi = (p.mean() + 40.0 * s).ceil() as i64;
        let total: f64 = (lo..=hi).map(|x| p.pmf(x)).sum();
        sk_worst = sk_worst.max((total - 1.0).abs());
    }
    (
        worst <= 1e-12 && sk_worst <= 1e-10,
        format!("{count} distributions, worst |sum-1|={worst:.1e}; 500 Skellam pmfs, worst {sk_worst:.1e}"),
    )
}

fn ac8() -> (bool, String) {
    let mut g = rng(0xAC8);
    let (mut accepted, mut drawn, mut undefined, mut bad) = (0usize, 0usize, 0usize, 0usize);
    let (mut outside, mut outside_bad) = (0usize, 0usize);
    let mut min_gap = f64::INFINITY;
    while accepted < 10_000 && drawn < 50_000_000 {
        drawn += 1;
        let sc = random_scenario(&mut g);
        let it = &sc.intrusion;
        if !(it.p < 1.0 && it.p_real > 0.0 && it.p_false > 0.0) {
            continue;
        }
        let c = triples_qi(&sc).unwrap();
        let (ec, ew) = (c.eve.correct - c.noise.correct, c.eve.wrong - c.noise.wrong);
        let pre = ew > 0.0 && c.alice.wrong - c.noise.wrong <= 0.0 && c.alice.correct - c.noise.correct > 0.0;
        if !pre {
            continue;
        }
        let Some(gap) = k_ordering_gap(&c.alice, &c.eve, &c.noise, it) else {
            undefined += 1;
            continue;
        };
        // the proof also takes Eve's noise-reduced correct above her wrong
        if ec <= ew {
            outside += 1;
            outside_bad += usize::from(gap <= 0.0);
            continue;
        }
        accepted += 1;
        min_gap = min_gap.min(gap);
        bad += usize::from(gap <= 0.0);
    }
    (
        accepted == 10_000 && bad == 0,
        format!(
            "{accepted} scenarios from {drawn} draws, {bad} counterexamples, min k_real-k_false={min_gap:.3e}; \
             skipped {undefined} with an undefined k and {outside} with Eve correct <= wrong ({outside_bad} of those inverted)"
        ),
    )
}

fn ac9() -> (bool, String) {
    let mut g = rng(0xAC9);
    let (mut n, mut worst) = (0, 0.0f64);
    for _ in 0..5000 {
        let sc = random_scenario(&mut g);
        let c = triples_qi(&sc).unwrap();
        let (_, f) = compose_channels(&c.alice, &c.eve, &c.noise, &sc.intrusion);
        let est = ChannelEstimate::analytic(&f, &c.noise);
        if let Some(k) = est.k_hat().filter(|k| *k > 0.0) {
            let r = remove_false_info(&est, k, None).unwrap();
            worst = worst.max(r.trustworthy_correct_nr.abs());
            n += 1;
        }
    }
    (n > 1000 && worst <= 1e-10, format!("{n} scenarios, worst |residual|={worst:.1e}"))
}

/// Three-sigma binomial agreement of a tally against its probability.
fn binom(label: &str, k: u64, m: u64, p: f64, out: &mut Vec<String>) -> bool {
    let f = k as f64 / m as f64;
    let sigma = (p * (1.0 - p) / m as f64).sqrt();
    let z = if sigma > 0.0 { (f - p) / sigma } else if f == p { 0.0 } else { f64::INFINITY };
    out.push(format!("{label} z={z:+.2}"));
    z.abs() <= 3.0
}

fn ac10() -> (bool, String) {
    let sc = scenario("set3");
    let rate = sc.idler_click_rate().unwrap();
    let c = triples_qi(&sc).unwrap();
    let (real, fals) = compose_channels(&c.alice, &c.eve, &c.noise, &sc.intrusion);
    let runs = 40usize;
    let shots = (1.05e7 / (runs as f64 * rate)).ceil() as u64;
    let s = simulate_ensemble(&MCConfig::new(shots, runs, 0xAC10, sc.delays), &sc).unwrap();
    let clicks: u64 = s.runs.iter().map(|r| r.idler_clicks).sum();
    let m = s.retained_total();
    let mut notes = Vec::new();
    let mut ok = m >= 10_000_000;
    ok &= binom("idler", clicks, shots * runs as u64, rate, &mut notes);
    let sum = |f: fn(&qi_spoof::mc::RunOutcome) -> qi_spoof::mc::Counts| {
        s.runs.iter().fold([0u64; 3], |a, r| {
            let x = f(r);
            [a[0] + x.correct, a[1] + x.wrong, a[2] + x.double]
        })
    };
    let channels: [(&str, [u64; 3], _); 4] = [
        ("real", sum(|r| r.real), real),
        ("false", sum(|r| r.fals), fals),
        ("noise@real", sum(|r| r.real_noise), c.noise),
        ("noise@false", sum(|r| r.false_noise), c.noise),
    ];
    for (name, counts, t) in channels {
        let probs = [t.correct / rate, t.wrong / rate, t.double / rate];
        for (i, cat) in ["c", "w", "d"].iter().enumerate() {
            ok &= binom(&format!("{name}.{cat}"), counts[i], m, probs[i], &mut notes);
        }
        let none = m - counts.iter().sum::<u64>();
        ok &= binom(&format!("{name}.none"), none, m, 1.0 - probs.iter().sum::<f64>(), &mut notes);
    }
    (ok, format!("{m} retained bins of {} simulated; {}", shots * runs as u64, notes.join(" ")))
}

fn main() {
    let strict = std::env::var("QI_SPOOF_STRICT").is_ok_and(|v| v == "1");
    let s = |x: u64| Some(Duration::from_secs(x));
    let checks = [
        timed(1, s(1), ac1),
        timed(2, s(5), ac2),
        timed(3, s(10), ac3),
        timed(4, s(1), ac4),
        timed(5, s(300), ac5),
        timed(6, None, ac6),
        timed(7, None, ac7),
        timed(8, None, ac8),
        timed(9, None, ac9),
        timed(10, None, ac10),
    ];
    let mut failed = false;
    for c in &checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let known = !c.pass && KNOWN_UNMET.contains(&c.id);
        println!(
            "AC{} {verdict} [{:.2?}] {}{}",
            c.id,
            c.elapsed,
            c.detail,
            if known { " (known unmet, see README)" } else { "" }
        );
        failed |= !c.pass && (strict || !known);
    }
    if failed {
        std::process::exit(1);
    }
}
