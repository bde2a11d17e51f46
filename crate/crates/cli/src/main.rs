mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coalescent::ancestral::{lineage_mean, lineage_pmf, tmrca_cdf, ModelParams};
use coalescent::ewens::{esf_log_prob, parse_allele_data, theta_mle, AlleleData};
use coalescent::oracle::{oracle_pmf, parse_rational, Statistic};
use coalescent::pmf::Pmf;
use coalescent::posterior::{
    gt_new_lineage_prob, gt_singleton_prob, predictive_lineage_pmf, predictive_singleton_pmf, PosteriorMode,
    PredictiveQuery,
};
use coalescent::simulator::{run_block_replicates, run_death_replicates, Histogram};
use coalescent::Error;
use serde::Serialize;

use output::{Format, Report, Row};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_DATA: u8 = 4;

#[derive(Parser)]
#[command(name = "coalescent", version, about = "Ancestral lineage inference under Kingman's coalescent with mutation")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit θ to an allele data file by maximum likelihood.
    FitTheta {
        data: PathBuf,
    },
    /// Law of the number of non-mutant lineages ancestral to a sample.
    Lineages {
        #[command(flatten)]
        theta: ThetaSource,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        m: usize,
        /// Also report P[T_r <= t].
        #[arg(long)]
        r: Option<usize>,
        /// Estimate by simulating this many death-process replicates instead.
        #[arg(long, value_name = "REPLICATES")]
        mc: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Predictive law for an enlarged sample given the observed ancestry.
    Predict {
        #[command(flatten)]
        theta: ThetaSource,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        m: usize,
        #[arg(long = "m-prime")]
        m_prime: usize,
        #[arg(long)]
        y: usize,
        #[arg(long, value_enum, default_value = "total")]
        mode: Mode,
    },
    /// Simulate the block-size death process from an observed partition.
    Simulate {
        data: PathBuf,
        /// A value, or `fit` to use the estimate from the data file.
        #[arg(long, default_value = "fit")]
        theta: ThetaArg,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        replicates: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Probability that one more draw discovers a lineage.
    Discover {
        #[command(flatten)]
        theta: ThetaSource,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        y: usize,
        #[arg(long, value_enum, default_value = "total")]
        mode: Mode,
    },
    /// Exact enumeration of small urn experiments.
    #[command(hide = true)]
    Oracle {
        #[arg(long, value_enum)]
        statistic: OracleStatistic,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long = "m-prime", default_value_t = 0)]
        m_prime: usize,
        #[arg(long, default_value_t = 0)]
        y: usize,
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// θ as `p/q` or an integer.
        #[arg(long)]
        theta: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Total,
    Singleton,
}

impl From<Mode> for PosteriorMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Total => PosteriorMode::Total,
            Mode::Singleton => PosteriorMode::Singleton,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleStatistic {
    R,
    RFreq,
    CondR,
    CondRFreq,
    K,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum ThetaArg {
    Value(f64),
    Fit,
}

impl FromStr for ThetaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "fit" {
            return Ok(ThetaArg::Fit);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(ThetaArg::Value(v)),
            _ => Err(format!("expected a positive number or `fit`, got {s:?}")),
        }
    }
}

#[derive(Args)]
struct ThetaSource {
    /// A value, or `fit` together with --data.
    #[arg(long)]
    theta: ThetaArg,
    /// Allele data file to fit θ from.
    #[arg(long)]
    data: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Data(_) => EXIT_DATA,
            e if e.is_numerical() => EXIT_NUMERICAL,
            Error::ZeroMassCondition => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn load(path: &Path) -> Result<AlleleData, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(parse_allele_data(&text)?)
}

#[derive(Serialize)]
struct ThetaReport {
    theta: f64,
    source: &'static str,
}

fn fit(data: &AlleleData) -> Result<f64, Failure> {
    let fit = theta_mle(&data.configuration)?;
    if fit.at_floor {
        eprintln!("warning: a single allele class puts the estimate at the floor θ = {}", fit.theta);
    }
    Ok(fit.theta)
}

fn resolve_theta(arg: ThetaArg, data: Option<&Path>) -> Result<ThetaReport, Failure> {
    match (arg, data) {
        (ThetaArg::Value(theta), None) => Ok(ThetaReport { theta, source: "given" }),
        (ThetaArg::Fit, Some(path)) => Ok(ThetaReport { theta: fit(&load(path)?)?, source: "fitted" }),
        (ThetaArg::Value(_), Some(_)) => Err(usage("give either a θ value or --theta fit with --data, not both")),
        (ThetaArg::Fit, None) => Err(usage("--theta fit needs --data")),
    }
}

fn pmf_rows(rows: &mut Vec<Row>, name: &'static str, pmf: &Pmf) {
    rows.extend(pmf.iter().map(|(x, p)| Row::at(name, x, p)));
}

#[derive(Serialize)]
struct FitReport {
    name: Option<String>,
    theta_hat: f64,
    at_floor: bool,
    m: usize,
    k: usize,
    log_likelihood: f64,
}

fn cmd_fit_theta(path: &Path) -> Result<Report, Failure> {
    let data = load(path)?;
    let fit = theta_mle(&data.configuration)?;
    if fit.at_floor {
        eprintln!("warning: a single allele class puts the estimate at the floor θ = {}", fit.theta);
    }
    let r = FitReport {
        name: data.name.clone(),
        theta_hat: fit.theta,
        at_floor: fit.at_floor,
        m: data.configuration.m(),
        k: data.configuration.k(),
        log_likelihood: esf_log_prob(&data.configuration, fit.theta),
    };
    let rows = vec![
        Row::scalar("theta_hat", r.theta_hat),
        Row::scalar("m", r.m),
        Row::scalar("k", r.k),
        Row::scalar("log_likelihood", r.log_likelihood),
    ];
    Ok(Report::new(&r, rows))
}

#[derive(Serialize)]
struct LineagesReport {
    theta: ThetaReport,
    t: f64,
    m: usize,
    method: &'static str,
    pmf: Pmf,
    mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tmrca: Option<TmrcaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replicates: Option<u64>,
}

#[derive(Serialize)]
struct TmrcaReport {
    r: usize,
    cdf: f64,
}

fn cmd_lineages(
    theta: ThetaReport,
    t: f64,
    m: usize,
    r: Option<usize>,
    mc: Option<u64>,
    seed: u64,
) -> Result<Report, Failure> {
    let params = ModelParams::new(theta.theta, t)?;
    let (pmf, mean, method) = match mc {
        Some(0) => return Err(usage("--mc needs at least one replicate")),
        Some(reps) => {
            let h = run_death_replicates(m, theta.theta, t, reps, seed)?;
            let probs = (0..h.counts.len()).map(|x| h.frequency(x)).collect();
            (Pmf::from_weights(0, probs, 0.0), h.mean(), "monte_carlo")
        }
        None => {
            let pmf = lineage_pmf(m, &params).map_err(|e| {
                let mut f = Failure::from(e);
                if f.code == EXIT_NUMERICAL {
                    f.message.push_str("; rerun with --mc <REPLICATES> for a simulation estimate");
                }
                f
            })?;
            (pmf, lineage_mean(m, &params)?, "series")
        }
    };
    let tmrca = match r {
        None => None,
        Some(r) if mc.is_some() => Some(TmrcaReport { r, cdf: pmf.cdf(r) }),
        Some(r) => Some(TmrcaReport { r, cdf: tmrca_cdf(m, r, &params)? }),
    };
    let mut rows = Vec::new();
    pmf_rows(&mut rows, "pmf", &pmf);
    rows.push(Row::scalar("mean", mean));
    if let Some(tm) = &tmrca {
        rows.push(Row::at("tmrca_cdf", tm.r, tm.cdf));
    }
    let report = LineagesReport {
        theta,
        t,
        m,
        method,
        pmf,
        mean,
        tmrca,
        replicates: mc,
    };
    Ok(Report::new(&report, rows))
}

#[derive(Serialize)]
struct PredictReport {
    theta: ThetaReport,
    t: f64,
    m: usize,
    m_prime: usize,
    y: usize,
    mode: PosteriorMode,
    pmf: Pmf,
    mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    good_turing: Option<f64>,
}

fn discovery(mode: Mode, m: usize, y: usize, params: &ModelParams) -> coalescent::Result<f64> {
    match mode {
        Mode::Total => gt_new_lineage_prob(m, y, params),
        Mode::Singleton => gt_singleton_prob(m, y, params),
    }
}

fn cmd_predict(theta: ThetaReport, t: f64, m: usize, m_prime: usize, y: usize, mode: Mode) -> Result<Report, Failure> {
    let params = ModelParams::new(theta.theta, t)?;
    let q = PredictiveQuery::new(m, m_prime, y, params)?;
    let pmf = match mode {
        Mode::Total => predictive_lineage_pmf(&q)?,
        Mode::Singleton => predictive_singleton_pmf(&q)?,
    };
    let good_turing = if m_prime == 1 { Some(discovery(mode, m, y, &params)?) } else { None };
    let mut rows = Vec::new();
    pmf_rows(&mut rows, "pmf", &pmf);
    rows.push(Row::scalar("mean", pmf.mean()));
    if let Some(g) = good_turing {
        rows.push(Row::scalar("good_turing", g));
    }
    let report = PredictReport {
        theta,
        t,
        m,
        m_prime,
        y,
        mode: mode.into(),
        mean: pmf.mean(),
        pmf,
        good_turing,
    };
    Ok(Report::new(&report, rows))
}

#[derive(Serialize)]
struct DiscoverReport {
    theta: ThetaReport,
    t: f64,
    m: usize,
    y: usize,
    mode: PosteriorMode,
    probability: f64,
}

fn cmd_discover(theta: ThetaReport, t: f64, m: usize, y: usize, mode: Mode) -> Result<Report, Failure> {
    let params = ModelParams::new(theta.theta, t)?;
    let probability = discovery(mode, m, y, &params)?;
    let report = DiscoverReport {
        theta,
        t,
        m,
        y,
        mode: mode.into(),
        probability,
    };
    Ok(Report::new(&report, vec![Row::scalar("probability", probability)]))
}

#[derive(Serialize)]
struct Summary {
    counts: Vec<u64>,
    mean: f64,
    interval_95: Option<(usize, usize)>,
}

impl Summary {
    fn of(h: &Histogram) -> Self {
        Self {
            counts: h.counts.clone(),
            mean: h.mean(),
            interval_95: h.narrowest_interval(0.95),
        }
    }

    fn rows(&self, rows: &mut Vec<Row>, hist: &'static str, mean: &'static str, lo: &'static str, hi: &'static str) {
        rows.extend(self.counts.iter().enumerate().map(|(x, c)| Row::at(hist, x, c)));
        rows.push(Row::scalar(mean, self.mean));
        if let Some((a, b)) = self.interval_95 {
            rows.push(Row::scalar(lo, a));
            rows.push(Row::scalar(hi, b));
        }
    }
}

#[derive(Serialize)]
struct SimulateReport {
    name: Option<String>,
    theta: ThetaReport,
    t: f64,
    replicates: u64,
    seed: u64,
    d_total: Summary,
    d_singleton: Summary,
    classes: Summary,
}

fn cmd_simulate(path: &Path, theta: ThetaArg, t: f64, replicates: u64, seed: u64) -> Result<Report, Failure> {
    if replicates == 0 {
        return Err(usage("--replicates must be at least 1"));
    }
    let data = load(path)?;
    let theta = match theta {
        ThetaArg::Value(theta) => ThetaReport { theta, source: "given" },
        ThetaArg::Fit => ThetaReport { theta: fit(&data)?, source: "fitted" },
    };
    let sim = run_block_replicates(&data.partition, theta.theta, t, replicates, seed)?;
    let report = SimulateReport {
        name: data.name,
        theta,
        t,
        replicates,
        seed,
        d_total: Summary::of(&sim.d_total),
        d_singleton: Summary::of(&sim.d_singleton),
        classes: Summary::of(&sim.classes),
    };
    let mut rows = Vec::new();
    report.d_total.rows(&mut rows, "d_total_count", "d_total_mean", "d_total_lower", "d_total_upper");
    report.d_singleton.rows(
        &mut rows,
        "d_singleton_count",
        "d_singleton_mean",
        "d_singleton_lower",
        "d_singleton_upper",
    );
    report.classes.rows(&mut rows, "classes_count", "classes_mean", "classes_lower", "classes_upper");
    Ok(Report::new(&report, rows))
}

#[derive(Serialize)]
struct OracleRow {
    x: usize,
    exact: String,
    value: f64,
}

fn cmd_oracle(statistic: OracleStatistic, n: usize, m: usize, m_prime: usize, y: usize, l: usize, theta: &str) -> Result<Report, Failure> {
    let theta = parse_rational(theta)?;
    let stat = match statistic {
        OracleStatistic::R => Statistic::R { n, m },
        OracleStatistic::RFreq => Statistic::RFreq { l, n, m },
        OracleStatistic::CondR => Statistic::CondR { n, m, m_prime, y },
        OracleStatistic::CondRFreq => Statistic::CondRFreq { l, n, m, m_prime, y },
        OracleStatistic::K => Statistic::K { n, m },
        OracleStatistic::V => Statistic::V { n, m },
    };
    let pmf = oracle_pmf(stat, &theta)?;
    let approx = pmf.to_pmf();
    let table: Vec<OracleRow> = pmf
        .probs
        .iter()
        .map(|(&x, p)| OracleRow {
            x,
            exact: p.to_string(),
            value: approx.get(x),
        })
        .collect();
    let rows = table.iter().map(|r| Row::at("pmf", r.x, &r.exact)).collect();
    Ok(Report::new(&table, rows))
}

fn run(cli: Cli) -> Result<Report, Failure> {
    match cli.command {
        Command::FitTheta { data } => cmd_fit_theta(&data),
        Command::Lineages { theta, t, m, r, mc, seed } => {
            let th = resolve_theta(theta.theta, theta.data.as_deref())?;
            cmd_lineages(th, t, m, r, mc, seed)
        }
        Command::Predict { theta, t, m, m_prime, y, mode } => {
            let th = resolve_theta(theta.theta, theta.data.as_deref())?;
            cmd_predict(th, t, m, m_prime, y, mode)
        }
        Command::Simulate { data, theta, t, replicates, seed } => cmd_simulate(&data, theta, t, replicates, seed),
        Command::Discover { theta, t, m, y, mode } => {
            let th = resolve_theta(theta.theta, theta.data.as_deref())?;
            cmd_discover(th, t, m, y, mode)
        }
        Command::Oracle { statistic, n, m, m_prime, y, l, theta } => cmd_oracle(statistic, n, m, m_prime, y, l, &theta),
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var("COALESCENT_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: could not size the thread pool: {e}");
            }
        }
        _ => eprintln!("warning: ignoring COALESCENT_THREADS={v:?}"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    configure_threads();
    let format = cli.format;
    match run(cli) {
        Ok(report) => {
            print!("{}", report.render(format));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
