//! Tabular evaluation of scenarios: analytic rows, sweeps and CSV formatting.

use std::io::Write;

use crate::coincidence::{compose_channels, triples_bb84, triples_qi, CoincidenceTriple, Contributions, Scenario};
use crate::config::System;
use crate::error::{domain, Error, Result};
use crate::security::{security_metrics, SecurityMetrics};

/// Twelve significant digits, scientific notation; empty for undefined values.
pub fn fmt_num(x: Option<f64>) -> String {
    match x {
        Some(0.0) => "0".into(),
        Some(v) if v.is_finite() => format!("{v:.11e}"),
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

pub fn contributions(system: System, sc: &Scenario<f64>) -> Result<Contributions<f64>> {
    match system {
        System::Qi => triples_qi(sc),
        System::Bb84 => triples_bb84(sc),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub parts: Contributions<f64>,
    pub real: CoincidenceTriple<f64>,
    pub fals: CoincidenceTriple<f64>,
    pub metrics: SecurityMetrics<f64>,
}

pub fn evaluate(system: System, sc: &Scenario<f64>) -> Result<Evaluation> {
    let parts = contributions(system, sc)?;
    let (real, fals) = compose_channels(&parts.alice, &parts.eve, &parts.noise, &sc.intrusion);
    let metrics = security_metrics(&parts.alice, &parts.eve, &parts.noise, &sc.intrusion);
    Ok(Evaluation { parts, real, fals, metrics })
}

pub const PROBS_HEADER: [&str; 27] = [
    "p", "p_real", "p_false", "theta", "xi_eve",
    "alice_correct", "alice_wrong", "alice_double",
    "eve_correct", "eve_wrong", "eve_double",
    "noise_correct", "noise_wrong", "noise_double",
    "real_correct", "real_wrong", "real_double",
    "false_correct", "false_wrong", "false_double",
    "k", "e_eve", "e_t", "offset", "e_t_off", "snr_real", "snr_false",
];

pub fn probs_row(sc: &Scenario<f64>, ev: &Evaluation) -> Vec<Option<f64>> {
    let t = |c: &CoincidenceTriple<f64>| [Some(c.correct), Some(c.wrong), Some(c.double)];
    let m = &ev.metrics;
    let mut row = vec![
        Some(sc.intrusion.p),
        Some(sc.intrusion.p_real),
        Some(sc.intrusion.p_false),
        Some(sc.theta),
        Some(sc.xi_eve),
    ];
    for c in [&ev.parts.alice, &ev.parts.eve, &ev.parts.noise, &ev.real, &ev.fals] {
        row.extend(t(c));
    }
    row.extend([m.k, m.e_eve, m.e_threshold, m.offset, m.e_threshold_offset, m.snr_real, m.snr_false]);
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    P,
    Theta,
    XiEve,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" => Ok(Axis::P),
            "theta" => Ok(Axis::Theta),
            "xi_eve" | "xi-eve" => Ok(Axis::XiEve),
            _ => Err(Error::Validation { key: "axis".into(), msg: format!("unknown axis {s}; expected p, theta or xi_eve") }),
        }
    }
}

/// Moves the scenario to `x` along the axis. The `p` axis routes all interception to the false channel.
pub fn set_axis(sc: &Scenario<f64>, axis: Axis, x: f64) -> Result<Scenario<f64>> {
    let mut s = sc.clone();
    match axis {
        Axis::P => {
            s.intrusion.p = x;
            s.intrusion.p_real = 0.0;
            s.intrusion.p_false = x;
        }
        Axis::Theta => s.theta = x,
        Axis::XiEve => s.xi_eve = x,
    }
    s.validate().map_err(|e| Error::Validation { key: "range".into(), msg: format!("{x} is outside the domain: {e}") })?;
    Ok(s)
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive; one step gives `lo`.
pub fn grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::Validation { key: "steps".into(), msg: "must be at least 1".into() });
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Validation { key: "range".into(), msg: "bounds must be finite".into() });
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i + 1 == steps { hi } else { lo + h * i as f64 }).collect())
}

pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Validation { key: "range".into(), msg: format!("expected LO:HI, got {s}") };
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

/// First abscissa where `a - b` changes sign, by linear interpolation.
pub fn crossing(xs: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    for i in 1..d.len().min(xs.len()) {
        if d[i - 1] == 0.0 {
            return Some(xs[i - 1]);
        }
        if d[i - 1].signum() != d[i].signum() {
            let f = d[i - 1] / (d[i - 1] - d[i]);
            return Some(xs[i - 1] + f * (xs[i] - xs[i - 1]));
        }
    }
    match d.last() {
        Some(&0.0) if d.len() > 1 => xs.last().copied(),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub xs: Vec<f64>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub evals: Vec<Evaluation>,
    /// Real/false correct-coincidence crossing, for the `p` axis.
    pub crossing: Option<f64>,
    /// Grid point minimising Eve's error.
    pub argmin_e_eve: Option<f64>,
}

pub fn sweep(system: System, sc: &Scenario<f64>, axis: Axis, xs: &[f64]) -> Result<Sweep> {
    if xs.is_empty() {
        return domain("empty sweep grid");
    }
    let mut rows = Vec::with_capacity(xs.len());
    let mut evals = Vec::with_capacity(xs.len());
    for &x in xs {
        let s = set_axis(sc, axis, x)?;
        let ev = evaluate(system, &s)?;
        rows.push(probs_row(&s, &ev));
        evals.push(ev);
    }
    let crossing = if axis == Axis::P && xs.len() > 1 {
        let rc: Vec<f64> = evals.iter().map(|e| e.real.correct).collect();
        let fc: Vec<f64> = evals.iter().map(|e| e.fals.correct).collect();
        crossing(xs, &rc, &fc)
    } else {
        None
    };
    let mut argmin: Option<(f64, f64)> = None;
    for (x, e) in xs.iter().zip(&evals) {
        if let Some(v) = e.metrics.e_eve {
            if argmin.is_none_or(|(_, b)| v < b) {
                argmin = Some((*x, v));
            }
        }
    }
    Ok(Sweep { axis, xs: xs.to_vec(), rows, evals, crossing, argmin_e_eve: argmin.map(|a| a.0) })
}

/// Writes a header and rows of optional numbers as CSV.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<Option<f64>>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r.iter().map(|x| fmt_num(*x))).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Domain(format!("csv: {e}")))?;
    Ok(())
}
