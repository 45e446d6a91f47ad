#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qi_spoof::coincidence::{Delays, IntrusionParams};
use qi_spoof::fock::{Mode, Numerics, Pol, Port};
use qi_spoof::Scenario64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn ln_fact(n: usize) -> f64 {
    static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    let t = TABLE.get_or_init(|| (0..4096).map(|k| libm::lgamma(k as f64 + 1.0)).collect());
    t[n]
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_fact(n) - ln_fact(k) - ln_fact(n - k)
}

/// Detector statistics of one port worked out in the Fock basis.
///
/// The port is a beamsplitter with input `a` (the light under test) and `b`
/// (thermal, mean `n_in`), detected output `c` and discarded output `d`:
/// `a+ -> t c+ + r d+`, `b+ -> r c+ - t d+`.
#[derive(Debug, Clone, Copy)]
pub struct FockPort {
    pub dark0: f64,
    pub click0: f64,
    pub dark1: f64,
    pub click1: f64,
    /// Total probability accounted for with one input photon.
    pub mass1: f64,
}

pub fn fock_port(t2: f64, n_in: f64) -> FockPort {
    let t = t2.sqrt();
    let r = (1.0 - t2).sqrt();
    let (mut dark0, mut click0, mut dark1, mut click1, mut mass1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let ratio = n_in / (n_in + 1.0);
    let mut pq = 1.0 / (n_in + 1.0);
    let mut tail = ratio;
    let mut q = 0usize;
    loop {
        // |0>|q>: amplitude of |m, q-m>
        for m in 0..=q {
            let lnc = ln_choose(q, m) + 0.5 * (ln_fact(m) + ln_fact(q - m) - ln_fact(q));
            let amp = lnc.exp() * r.powi(m as i32) * t.powi((q - m) as i32);
            let pr = pq * amp * amp;
            if m == 0 {
                dark0 += pr;
            } else {
                click0 += pr;
            }
        }
        // |1>|q>: two paths into |m, q+1-m> interfere
        for m in 0..=q + 1 {
            let half = 0.5 * (ln_fact(m) + ln_fact(q + 1 - m) - ln_fact(q));
            let via_c = if m >= 1 {
                (ln_choose(q, m - 1) + half).exp() * r.powi((m - 1) as i32) * t.powi((q + 2 - m) as i32)
            } else {
                0.0
            };
            let via_d = if m <= q {
                (ln_choose(q, m) + half).exp() * r.powi((m + 1) as i32) * t.powi((q - m) as i32)
            } else {
                0.0
            };
            let amp = via_d - via_c;
            let pr = pq * amp * amp;
            mass1 += pr;
            if m == 0 {
                dark1 += pr;
            } else {
                click1 += pr;
            }
        }
        // mass beyond q is ratio^(q+1)
        if n_in == 0.0 || tail < 1e-17 {
            break;
        }
        q += 1;
        pq *= ratio;
        tail *= ratio;
    }
    FockPort { dark0, click0, dark1, click1, mass1 }
}

/// Four-outcome distribution `[j_only, k_only, both, neither]` of a detector pair
/// for a mixture of branches `(weight, P(photon at j), P(photon at k))`; the
/// remaining probability of each branch is vacuum.
pub fn pair_outcomes(j: &FockPort, k: &FockPort, branches: &[(f64, f64, f64)]) -> [f64; 4] {
    let mut out = [0.0; 4];
    let mut total = 0.0;
    for &(w, pj, pk) in branches {
        let pv = 1.0 - pj - pk;
        let cases = [
            (pv, j.click0, j.dark0, k.click0, k.dark0),
            (pj, j.click1, j.dark1, k.click0, k.dark0),
            (pk, j.click0, j.dark0, k.click1, k.dark1),
        ];
        for (p, cj, dj, ck, dk) in cases {
            out[0] += w * p * cj * dk;
            out[1] += w * p * dj * ck;
            out[2] += w * p * cj * ck;
            out[3] += w * p * dj * dk;
        }
        total += w;
    }
    out.map(|x| x / total)
}

/// Twin-beam coefficients from two independent thermal pair sources, keeping the
/// vacuum and single-pair terms.
pub fn oracle_pair_coeffs(n_bar: f64) -> (f64, f64) {
    let th = |n: usize| n_bar.powi(n as i32) / (n_bar + 1.0).powi(n as i32 + 1);
    let p00 = th(0) * th(0);
    let p10 = th(1) * th(0);
    let z = p00 + 2.0 * p10;
    (p00 / z, p10 / z)
}

/// Coherent-state coefficients kept to the single-photon term.
pub fn oracle_coherent_coeffs(n: f64) -> (f64, f64) {
    let p0 = (-n).exp();
    let p1 = n * (-n).exp();
    (p0 / (p0 + p1), p1 / (p0 + p1))
}

/// A random port with transmission bounded away from 0 and 1 and moderate background.
pub fn random_port_params(rng: &mut impl Rng) -> (f64, f64) {
    let t2 = rng.gen_range(0.02..0.98);
    let n_in = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..2.0) };
    (t2, n_in)
}

pub fn port(mode: Pol, t2: f64, n_in: f64) -> Port<f64> {
    Port::new(Mode::Alice(mode), t2, n_in * (1.0 - t2)).unwrap()
}

pub fn symmetric_scenario(
    n_bar: f64,
    eta_i: f64,
    eta_e: f64,
    eta_s: f64,
    xi: f64,
    xi_eve: f64,
    noise: [f64; 4],
    intrusion: IntrusionParams<f64>,
) -> Scenario64 {
    Scenario64 {
        n_bar,
        n_bar_alpha: 2.0 * n_bar / (1.0 - eta_i * n_bar),
        eta_i: [eta_i; 4],
        eta_e: [eta_e; 4],
        eta_s: [eta_s; 4],
        xi,
        xi_eve,
        n_b_i: [noise[0]; 4],
        n_b_e: [noise[1]; 4],
        n_b_s: [noise[2]; 4],
        n_b_s_eve: [noise[3]; 4],
        intrusion,
        theta: 0.0,
        delays: Delays::default(),
        numerics: Numerics::default(),
    }
}

fn vec4(rng: &mut impl Rng, lo: f64, hi: f64) -> [f64; 4] {
    [0; 4].map(|_| rng.gen_range(lo..hi))
}

/// A physically valid scenario with per-mode asymmetry. Backgrounds are drawn
/// in the rescaled convention and converted to raw per-port values.
pub fn random_scenario(rng: &mut impl Rng) -> Scenario64 {
    let p = rng.gen_range(0.0..0.99);
    let p_real = rng.gen_range(0.0..=p);
    let intrusion = IntrusionParams::new(p_real, p - p_real, rng.gen_range(0.0..=1.0)).unwrap();
    let n_bar = rng.gen_range(1e-4..0.05);
    let eta_i = vec4(rng, 0.5, 1.0);
    let eta_e = vec4(rng, 0.3, 1.0);
    let eta_s = vec4(rng, 0.2, 1.0);
    let xi = rng.gen_range(0.05..1.0);
    let xi_eve = rng.gen_range(0.05..1.0);
    let raw = |n: [f64; 4], t2: [f64; 4]| [0, 1, 2, 3].map(|i| n[i] * (1.0 - t2[i]));
    Scenario64 {
        n_bar,
        n_bar_alpha: 2.0 * n_bar / (1.0 - eta_i[0] * n_bar),
        eta_i,
        eta_e,
        eta_s,
        xi,
        xi_eve,
        n_b_i: raw(vec4(rng, 0.0, 1e-3), eta_i),
        n_b_e: raw(vec4(rng, 0.0, 1e-3), eta_e),
        n_b_s: raw(vec4(rng, 1e-4, 0.5), eta_s.map(|e| e * xi)),
        n_b_s_eve: raw(vec4(rng, 1e-4, 0.5), eta_s.map(|e| e * xi_eve)),
        intrusion,
        theta: rng.gen_range(0.0..std::f64::consts::FRAC_PI_2),
        delays: Delays::default(),
        numerics: Numerics::default(),
    }
}

/// Largest relative error between the library and the Fock-basis oracle over
/// `draws` random configurations, with the number of compared values.
pub fn oracle_sweep(seed: u64, draws: usize) -> (f64, usize, String) {
    use qi_spoof::detection::{
        bb84_signal_outcomes, eve_resend_outcomes, idler_click, signal_given_idler,
    };
    use qi_spoof::fock::component_values;
    use qi_spoof::{SourceBb84, SourceQi};

    let num = Numerics::default();
    let mut g = rng(seed);
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut compared = 0usize;
    let mut check = |what: &str, lib: f64, ora: f64, i: usize| {
        let e = rel_err(lib, ora);
        compared += 1;
        if e > worst || e.is_nan() {
            worst = if e.is_nan() { f64::INFINITY } else { e };
            worst_at = format!("draw {i}: {what} lib={lib:e} oracle={ora:e}");
        }
    };
    for i in 0..draws {
        let (tq, nq) = random_port_params(&mut g);
        let (tw, nw) = random_port_params(&mut g);
        let (pq, pw) = (port(Pol::H, tq, nq), port(Pol::V, tw, nw));
        let (fq, fw) = (fock_port(tq, nq), fock_port(tw, nw));
        check("mass", 1.0, fq.mass1, i);

        let cs = component_values(&pq, &pw, &num).unwrap();
        let pairs = [
            ("vac_q", cs.vac_q, fq.click0 * fw.dark0),
            ("vac_w", cs.vac_w, fq.dark0 * fw.click0),
            ("vac_qw", cs.vac_qw, fq.click0 * fw.click0),
            ("vac0", cs.vac0, fq.dark0 * fw.dark0),
            ("a_q1", cs.a_q1, fq.click1 * fw.dark0),
            ("a_q0", cs.a_q0, fq.dark1 * fw.click0),
            ("a_qw1", cs.a_qw1, fq.click1 * fw.click0),
            ("a_qw0", cs.a_qw0, fq.dark1 * fw.dark0),
            ("a_w1", cs.a_w1, fw.click1 * fq.dark0),
            ("a_w0", cs.a_w0, fw.dark1 * fq.click0),
            ("a_wq1", cs.a_wq1, fw.click1 * fq.click0),
            ("a_wq0", cs.a_wq0, fw.dark1 * fq.dark0),
            ("trace_q", cs.trace_q, fq.mass1),
            ("trace_w", cs.trace_w, fw.mass1),
        ];
        for (name, a, b) in pairs {
            check(name, a, b, i);
        }

        // idler pair (Q, W) and signal pair (J, K)
        let n_bar = g.gen_range(1e-4..0.3);
        let src = SourceQi::new(n_bar).unwrap();
        let (c0, c1) = oracle_pair_coeffs(n_bar);
        check("c0", src.c0, c0, i);
        check("c1", src.c1, c1, i);
        let id = idler_click(&src, &pq, &pw, &num).unwrap();
        let b0 = c0 * fq.click0 * fw.dark0;
        let bq = c1 * fq.click1 * fw.dark0;
        let bw = c1 * fq.click0 * fw.dark1;
        check("idler_click", id.click_prob, b0 + bq + bw, i);

        let (tj, nj) = random_port_params(&mut g);
        let (tk, nk) = random_port_params(&mut g);
        let (pj, pk) = (port(Pol::H, tj, nj), port(Pol::V, tk, nk));
        let (fj, fk) = (fock_port(tj, nj), fock_port(tk, nk));
        let th = g.gen_range(0.0..std::f64::consts::PI);
        let (c2, s2) = (th.cos().powi(2), th.sin().powi(2));

        let d = signal_given_idler(&id, &pj, &pk, th, &num).unwrap();
        let o = pair_outcomes(&fj, &fk, &[(b0, 0.0, 0.0), (bq, c2, s2), (bw, s2, c2)]);
        for (n, (a, b)) in ["sig_j", "sig_k", "sig_both", "sig_none"].iter().zip(d.as_array().into_iter().zip(o)) {
            check(n, a, b, i);
        }

        let d = eve_resend_outcomes(&pj, &pk, th, &num).unwrap();
        let o = pair_outcomes(&fj, &fk, &[(1.0, c2, s2)]);
        for (n, (a, b)) in ["re_j", "re_k", "re_both", "re_none"].iter().zip(d.as_array().into_iter().zip(o)) {
            check(n, a, b, i);
        }

        let na = g.gen_range(1e-4..0.5);
        let bsrc = SourceBb84::new(na).unwrap();
        let (a0, a1) = oracle_coherent_coeffs(na);
        let d = bb84_signal_outcomes(&bsrc, &pj, &pk, th, &num).unwrap();
        let o = pair_outcomes(&fj, &fk, &[(a0, 0.0, 0.0), (a1, c2, s2)]);
        for (n, (a, b)) in ["bb_j", "bb_k", "bb_both", "bb_none"].iter().zip(d.as_array().into_iter().zip(o)) {
            check(n, a, b, i);
        }
    }
    (worst, compared, worst_at)
}
