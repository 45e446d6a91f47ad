use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qi_spoof::config::{load_builtin, ScenarioFile, System, BUILTIN_NAMES};
use qi_spoof::mc::{simulate_with_model, BinModel, MCConfig, MCSummary};
use qi_spoof::report::{self, fmt_num, grid, parse_range, sweep, write_csv, Axis, PROBS_HEADER};
use qi_spoof::stats::SkellamParams;
use qi_spoof::{Error, Result, Scenario64};

/// Shots per run used when `--shots` is not given.
const DEFAULT_SHOTS: u64 = 280_000;
const DEFAULT_RUNS: usize = 5000;
const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "qi-spoof", version, about = "Quantum-illumination LIDAR spoofing analysis")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analytic triples and security metrics for one scenario.
    Probs {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic metrics along one parameter axis.
    Sweep {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        axis: String,
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-bin Monte-Carlo ensemble.
    Mc {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        #[arg(long, default_value_t = DEFAULT_SHOTS)]
        shots: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Data behind one of the figures (3, 4, 5, 6, 7-data, 8).
    Figures {
        id: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: usize,
        #[arg(long, default_value_t = DEFAULT_SHOTS)]
        shots: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
}

fn load(scenario: &str) -> Result<ScenarioFile> {
    if BUILTIN_NAMES.contains(&scenario) && !Path::new(scenario).exists() {
        load_builtin(scenario)
    } else {
        ScenarioFile::load(scenario)
    }
}

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::Domain(format!("{}: {e}", path.display()))
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let p = dir.join(name);
    fs::File::create(&p).map_err(|e| io_err(&p, e))
}

fn emit(out: Option<&Path>, name: &str, header: &[&str], rows: &[Vec<Option<f64>>]) -> Result<()> {
    match out {
        Some(dir) => write_csv(create(dir, name)?, header, rows),
        None => write_csv(io::stdout().lock(), header, rows),
    }
}

fn write_strings<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let e = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    w.write_record(header).map_err(e)?;
    for r in rows {
        w.write_record(r).map_err(e)?;
    }
    w.flush().map_err(|x| Error::Domain(format!("csv: {x}")))
}

/// Two whitespace-separated columns per line.
fn write_series(dir: &Path, name: &str, xs: &[f64], ys: &[Option<f64>]) -> Result<()> {
    let mut f = io::BufWriter::new(create(dir, name)?);
    let p = dir.join(name);
    for (x, y) in xs.iter().zip(ys) {
        if let Some(y) = y {
            writeln!(f, "{} {}", fmt_num(Some(*x)), fmt_num(Some(*y))).map_err(|e| io_err(&p, e))?;
        }
    }
    f.flush().map_err(|e| io_err(&p, e))
}

fn cmd_probs(scenario: &str, out: Option<&Path>) -> Result<()> {
    let file = load(scenario)?;
    let sc: Scenario64 = file.to_scenario()?;
    let ev = report::evaluate(file.system(), &sc)?;
    emit(out, "probs.csv", &PROBS_HEADER, &[report::probs_row(&sc, &ev)])
}

fn cmd_sweep(scenario: &str, axis: &str, range: &str, steps: usize, out: Option<&Path>) -> Result<()> {
    let file = load(scenario)?;
    let sc: Scenario64 = file.to_scenario()?;
    let axis: Axis = axis.parse()?;
    let (lo, hi) = parse_range(range)?;
    let xs = grid(lo, hi, steps)?;
    let s = sweep(file.system(), &sc, axis, &xs)?;
    emit(out, "sweep.csv", &PROBS_HEADER, &s.rows)?;
    if let Some(x) = s.crossing {
        eprintln!("crossing_p={}", fmt_num(Some(x)));
    }
    if let Some(x) = s.argmin_e_eve {
        eprintln!("argmin_e_eve={}", fmt_num(Some(x)));
    }
    Ok(())
}

const RUN_HEADER: [&str; 22] = [
    "run", "idler_clicks", "retained", "discarded_bins",
    "real_correct", "real_wrong", "real_double",
    "real_noise_correct", "real_noise_wrong", "real_noise_double",
    "false_correct", "false_wrong", "false_double",
    "false_noise_correct", "false_noise_wrong", "false_noise_double",
    "nr_real_correct", "nr_real_wrong", "nr_false_correct", "nr_false_wrong",
    "eve_detected", "alice_channel",
];

const SUMMARY_HEADER: [&str; 12] = [
    "runs", "shots", "seed", "retained_total",
    "pr_e_off_le_0", "pr_spoofed_given_e_le_0", "pr_ordered_negative_given_e_le_0",
    "pr_false_neg_given_real_pos", "pr_false_neg_and_real_pos", "pr_k_false_gt_k_real_gt_0",
    "covariance_real", "covariance_false",
];

fn run_rows(s: &MCSummary) -> Vec<Vec<String>> {
    s.runs
        .iter()
        .map(|r| {
            let nr = r.noise_reduced();
            let (e, a) = r.verdict();
            let mut v: Vec<String> = vec![r.run.to_string(), r.idler_clicks.to_string(), r.retained.to_string(), r.discarded_bins.to_string()];
            for c in [r.real, r.real_noise, r.fals, r.false_noise] {
                v.extend([c.correct.to_string(), c.wrong.to_string(), c.double.to_string()]);
            }
            for x in [nr.real_correct, nr.real_wrong, nr.false_correct, nr.false_wrong] {
                v.push(fmt_num(Some(x)));
            }
            v.push(format!("{e:?}"));
            v.push(format!("{a:?}"));
            v
        })
        .collect()
}

fn summary_row(cfg: &MCConfig, s: &MCSummary) -> Vec<String> {
    let r = &s.report;
    let mut v = vec![cfg.runs.to_string(), cfg.shots.to_string(), cfg.seed.to_string(), s.retained_total().to_string()];
    for x in [
        r.unrecognised,
        r.spoofed_given_unrecognised,
        r.ordered_negative_given_unrecognised,
        r.false_negative_given_real_positive,
        r.false_negative_and_real_positive,
        r.k_inversion,
        s.covariance,
        s.covariance_false,
    ] {
        v.push(fmt_num(Some(x)));
    }
    v
}

fn run_mc(file: &ScenarioFile, runs: usize, shots: u64, seed: u64) -> Result<(MCConfig, MCSummary)> {
    if file.system() != System::Qi {
        return Err(Error::Validation { key: "source.system".into(), msg: "the Monte-Carlo needs the twin-beam system".into() });
    }
    let sc: Scenario64 = file.to_scenario()?;
    let cfg = MCConfig::new(shots, runs, seed, sc.delays);
    let model = BinModel::from_scenario(&sc)?;
    Ok((cfg, simulate_with_model(&cfg, &model)?))
}

fn cmd_mc(scenario: &str, runs: usize, shots: u64, seed: u64, out: Option<&Path>) -> Result<()> {
    let file = load(scenario)?;
    let (cfg, s) = run_mc(&file, runs, shots, seed)?;
    let summary = [summary_row(&cfg, &s)];
    match out {
        Some(dir) => {
            write_strings(create(dir, "mc_runs.csv")?, &RUN_HEADER, &run_rows(&s))?;
            write_strings(create(dir, "mc_summary.csv")?, &SUMMARY_HEADER, &summary)
        }
        None => write_strings(io::stdout().lock(), &SUMMARY_HEADER, &summary),
    }
}

struct FigArgs {
    out: PathBuf,
    runs: usize,
    shots: u64,
    seed: u64,
    steps: usize,
}

fn figure_sweep(name: &str, axis: Axis, lo: f64, hi: f64, steps: usize) -> Result<(Vec<f64>, report::Sweep)> {
    let file = load_builtin(name)?;
    let sc: Scenario64 = file.to_scenario()?;
    let xs = grid(lo, hi, steps)?;
    let s = sweep(file.system(), &sc, axis, &xs)?;
    Ok((xs, s))
}

fn fig_theta(a: &FigArgs) -> Result<()> {
    let (xs, s) = figure_sweep("set1", Axis::Theta, 0.0, std::f64::consts::FRAC_PI_4, a.steps)?;
    let e: Vec<Option<f64>> = s.evals.iter().map(|v| v.metrics.e_eve).collect();
    let rows: Vec<_> = xs.iter().zip(&e).map(|(x, y)| vec![Some(*x), *y]).collect();
    write_csv(create(&a.out, "fig3.csv")?, &["theta", "e_eve"], &rows)?;
    write_series(&a.out, "fig3_e_eve.dat", &xs, &e)
}

fn fig_p_pair(a: &FigArgs, id: &str, metric: fn(&report::Evaluation) -> [Option<f64>; 2], names: [&str; 2]) -> Result<()> {
    let (xs, qi) = figure_sweep("set2", Axis::P, 0.0, 1.0, a.steps)?;
    let (_, bb) = figure_sweep("set2-bb84", Axis::P, 0.0, 1.0, a.steps)?;
    let mut cols: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (sys, sw) in [("qi", &qi), ("bb84", &bb)] {
        for (i, n) in names.iter().enumerate() {
            cols.insert(format!("{n}_{sys}"), sw.evals.iter().map(|e| metric(e)[i]).collect());
        }
    }
    let header: Vec<String> = std::iter::once("p".to_string()).chain(cols.keys().cloned()).collect();
    let rows: Vec<Vec<Option<f64>>> = (0..xs.len())
        .map(|i| std::iter::once(Some(xs[i])).chain(cols.values().map(|c| c[i])).collect())
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(create(&a.out, &format!("fig{id}.csv"))?, &h, &rows)?;
    for (k, c) in &cols {
        write_series(&a.out, &format!("fig{id}_{k}.dat"), &xs, c)?;
    }
    if let Some(x) = qi.crossing {
        eprintln!("crossing_p={}", fmt_num(Some(x)));
    }
    Ok(())
}

fn fig_skellam(a: &FigArgs) -> Result<()> {
    let file = load_builtin("set3")?;
    let (cfg, s) = run_mc(&file, a.runs.clamp(2, 500), a.shots, a.seed)?;
    let n = s.retained_total() as f64 / cfg.runs as f64;
    let m = &s.model;
    let real = SkellamParams::from_shots(n, m.real[1], m.noise[1], s.covariance);
    let fals = SkellamParams::from_shots(n, m.fals[1], m.noise[1], s.covariance_false);
    let mut rows = Vec::new();
    let mut series: [Vec<Option<f64>>; 2] = [Vec::new(), Vec::new()];
    let lo = (real.mean().min(fals.mean()) - 6.0 * real.variance().max(fals.variance()).sqrt()).floor() as i64;
    let hi = (real.mean().max(fals.mean()) + 6.0 * real.variance().max(fals.variance()).sqrt()).ceil() as i64;
    let xs: Vec<f64> = (lo..=hi).map(|x| x as f64).collect();
    for x in lo..=hi {
        let (pr, pf) = (real.pmf(x), fals.pmf(x));
        rows.push(vec![Some(x as f64), Some(pr), Some(pf)]);
        series[0].push(Some(pr));
        series[1].push(Some(pf));
    }
    write_csv(create(&a.out, "fig6.csv")?, &["x", "pmf_real_wrong", "pmf_false_wrong"], &rows)?;
    write_series(&a.out, "fig6_real_wrong.dat", &xs, &series[0])?;
    write_series(&a.out, "fig6_false_wrong.dat", &xs, &series[1])
}

fn fig_mc(a: &FigArgs, histogram: bool) -> Result<()> {
    let file = load_builtin("set3")?;
    let (cfg, s) = run_mc(&file, a.runs, a.shots, a.seed)?;
    if !histogram {
        write_strings(create(&a.out, "fig7_runs.csv")?, &RUN_HEADER, &run_rows(&s))?;
        return write_strings(create(&a.out, "fig7_summary.csv")?, &SUMMARY_HEADER, &[summary_row(&cfg, &s)]);
    }
    let nr = s.noise_reduced();
    let pick: [(&str, fn(&qi_spoof::stats::NoiseReduced<f64>) -> f64); 4] = [
        ("real_correct", |v| v.real_correct),
        ("real_wrong", |v| v.real_wrong),
        ("false_correct", |v| v.false_correct),
        ("false_wrong", |v| v.false_wrong),
    ];
    let mut rows = Vec::new();
    for (name, f) in pick {
        let mut h: BTreeMap<i64, u64> = BTreeMap::new();
        for v in &nr {
            *h.entry(f(v) as i64).or_default() += 1;
        }
        let total = nr.len() as f64;
        let xs: Vec<f64> = h.keys().map(|&k| k as f64).collect();
        let ys: Vec<Option<f64>> = h.values().map(|&c| Some(c as f64 / total)).collect();
        for (k, c) in &h {
            rows.push(vec![name.to_string(), k.to_string(), c.to_string(), fmt_num(Some(*c as f64 / total))]);
        }
        write_series(&a.out, &format!("fig8_{name}.dat"), &xs, &ys)?;
    }
    write_strings(create(&a.out, "fig8.csv")?, &["series", "value", "count", "frequency"], &rows)
}

fn cmd_figures(id: &str, a: &FigArgs) -> Result<()> {
    match id {
        "3" => fig_theta(a),
        "4" => fig_p_pair(a, "4", |e| [e.metrics.snr_real, e.metrics.snr_false], ["snr_real", "snr_false"]),
        "5" => fig_p_pair(a, "5", |e| [e.metrics.e_threshold_offset, e.metrics.e_eve], ["e_t_off", "e_eve"]),
        "6" => fig_skellam(a),
        "7-data" => fig_mc(a, false),
        "8" => fig_mc(a, true),
        _ => Err(Error::Validation { key: "figure".into(), msg: format!("unknown figure id {id}; expected 3, 4, 5, 6, 7-data or 8") }),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Probs { scenario, out } => cmd_probs(&scenario, out.as_deref()),
        Cmd::Sweep { scenario, axis, range, steps, out } => cmd_sweep(&scenario, &axis, &range, steps, out.as_deref()),
        Cmd::Mc { scenario, runs, shots, seed, out } => cmd_mc(&scenario, runs, shots, seed, out.as_deref()),
        Cmd::Figures { id, out, runs, shots, seed, steps } => cmd_figures(&id, &FigArgs { out, runs, shots, seed, steps }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse { .. } | Error::Validation { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
