//! Command-line front end.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use confmodel_core::degrees::DegreeSequence;
use confmodel_core::exact::{DEFAULT_MAX_TOTAL, SUMMARY_MOMENTS};
use confmodel_core::rng::{replicate_rng, tag, STREAM_DERIVATION};
use confmodel_core::surrogate::DEFAULT_MAX_ORDER;

use crate::error::{HarnessError, Result};
use crate::experiments::{
    self, bipartite_conditions, dichotomy_sweep, estimate_report, moment_gap_study, oracle_suite,
    splitting_comparison, tv_study, BipartiteConfig, MomentGapConfig, SweepFamily,
};
use crate::families::{parse_bipartite, parse_ensemble, FamilySpec};
use crate::montecarlo::Ensemble;
use crate::report::ExperimentReport;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "confmodel", version, about = "Configuration-model sampler and simplicity predictor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Master seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "CONFMODEL_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit the timestamp from the output header.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args, Clone)]
pub struct Source {
    /// Inline JSON list, a JSON/CSV file, or a generator such as `regular:n=1000,d=3`.
    #[arg(long)]
    pub degrees: Option<String>,
    /// Treat the input as bipartite (requires --s and --t).
    #[arg(long)]
    pub bipartite: bool,
    /// Left-side degrees of a bipartite model.
    #[arg(long)]
    pub s: Option<String>,
    /// Right-side degrees of a bipartite model.
    #[arg(long)]
    pub t: Option<String>,
}

impl Source {
    fn ensemble(&self) -> Result<Ensemble> {
        match (&self.degrees, &self.s, &self.t) {
            (Some(d), None, None) if !self.bipartite => parse_ensemble(d),
            (None, Some(s), Some(t)) => Ok(Ensemble::Bipartite(parse_bipartite(s, t)?)),
            (Some(d), None, None) => match parse_ensemble(d)? {
                e @ Ensemble::Bipartite(_) => Ok(e),
                Ensemble::General(_) => Err(HarnessError::Parse("--bipartite needs --s and --t".into())),
            },
            _ => Err(HarnessError::Parse(
                "give either --degrees or both --s and --t".into(),
            )),
        }
    }

    fn general(&self) -> Result<DegreeSequence> {
        match self.ensemble()? {
            Ensemble::General(ds) => Ok(ds),
            Ensemble::Bipartite(_) => Err(HarnessError::Parse("this command needs a single degree sequence".into())),
        }
    }

    fn echo(&self) -> Value {
        json!({"degrees": self.degrees, "bipartite": self.bipartite, "s": self.s, "t": self.t})
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form prediction of the probability of simplicity.
    Predict(Source),
    /// Surrogate model summary: rates, probability and moments.
    Model {
        #[command(flatten)]
        source: Source,
        #[arg(short = 'm', long, default_value_t = 4)]
        moments: usize,
    },
    /// Sample pairings; one summary row per replicate.
    Sample {
        #[command(flatten)]
        source: Source,
        #[arg(short, long, default_value_t = 1)]
        replicates: u64,
        /// Also write one edge-list CSV per replicate into this directory.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Exact distribution of the collision count by enumeration.
    Exact {
        #[command(flatten)]
        source: Source,
        #[arg(long = "max-n", alias = "maxN", default_value_t = DEFAULT_MAX_TOTAL)]
        max_total: u64,
    },
    /// Run a verification experiment.
    #[command(subcommand)]
    Verify(Verify),
}

#[derive(Debug, Subcommand)]
pub enum Verify {
    /// Monte Carlo against enumeration on the built-in small corpus.
    Oracle {
        #[arg(long = "max-n", alias = "maxN", default_value_t = 10)]
        max_total: u64,
        #[arg(short, long, default_value_t = 1_000_000)]
        replicates: u64,
    },
    /// Simplicity frequency against the closed-form prediction.
    Estimate {
        #[command(flatten)]
        source: Source,
        #[arg(short, long, default_value_t = 100_000)]
        replicates: u64,
    },
    /// Scaling of moment gaps between the collision count and its surrogate.
    MomentGap {
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<u64>,
        #[arg(short = 'm', long, value_delimiter = ',', default_value = "1,2,3")]
        orders: Vec<usize>,
        #[arg(short, long, default_value_t = 1_000_000)]
        replicates: u64,
        #[arg(long, default_value_t = experiments::DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
        #[arg(long, default_value_t = -0.4, allow_hyphen_values = true)]
        slope_threshold: f64,
        #[arg(long, default_value_t = 4.0)]
        max_ratio_growth: f64,
        /// Disable the control variate adjustment.
        #[arg(long)]
        plain: bool,
    },
    /// Total variation distance between the collision count and its surrogate.
    Tv {
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<u64>,
        #[arg(short, long, default_value_t = 1_000_000)]
        replicates: u64,
        #[arg(long, default_value_t = experiments::DEFAULT_BOOTSTRAP)]
        bootstrap: usize,
    },
    /// Simplicity across bounded and unbounded families. Repeat
    /// `--family F --sizes a,b,c` once per family.
    Dichotomy {
        #[arg(long, required = true)]
        family: Vec<String>,
        #[arg(long, required = true)]
        sizes: Vec<String>,
        #[arg(short, long, default_value_t = 100_000)]
        replicates: u64,
        /// Floor for bounded families (default: half the smallest prediction).
        #[arg(long)]
        floor: Option<f64>,
        /// Threshold the largest size of unbounded families must fall below.
        #[arg(long)]
        vanish: Option<f64>,
    },
    /// Simplicity before and after vertex splitting.
    Split {
        #[command(flatten)]
        source: Source,
        #[arg(short = 'A', long = "bound", default_value_t = 2.0)]
        a: f64,
        #[arg(short, long, default_value_t = 100_000)]
        replicates: u64,
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
    },
    /// Bipartite condition diagnostics.
    Bipartite {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        #[arg(short, long, default_value_t = 100_000)]
        replicates: u64,
        #[arg(long, default_value_t = 0.05)]
        omega_threshold: f64,
        #[arg(long, default_value_t = 10.0)]
        r1_bound: f64,
    },
}

/// What a command produced.
enum Output {
    Record(Value),
    Report(ExperimentReport),
    Table(String),
}

fn header(cli_args: &[String], common: &Common, config: Value) -> Value {
    let mut run = BTreeMap::new();
    run.insert("args".to_string(), json!(cli_args));
    run.insert("config".to_string(), config);
    run.insert("seed".to_string(), json!(common.seed));
    run.insert("stream_derivation".to_string(), json!(STREAM_DERIVATION));
    if !common.no_timestamp {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        run.insert("timestamp".to_string(), json!(now));
    }
    json!(run)
}

fn record_csv(value: &Value) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let obj = value.as_object().cloned().unwrap_or_default();
    w.write_record(obj.keys())?;
    w.write_record(obj.values().map(|v| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }))?;
    w.flush().map_err(HarnessError::Io)?;
    Ok(String::from_utf8(w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?).expect("utf-8"))
}

fn render(out: &Output, run: &Value, format: Format) -> Result<String> {
    Ok(match (out, format) {
        (Output::Record(v), Format::Json) => {
            let mut s = serde_json::to_string_pretty(&json!({"run": run, "result": v}))?;
            s.push('\n');
            s
        }
        (Output::Report(r), Format::Json) => {
            let mut s = serde_json::to_string_pretty(&json!({"run": run, "report": r}))?;
            s.push('\n');
            s
        }
        (out, Format::Csv) => {
            let body = match out {
                Output::Record(v) => record_csv(v)?,
                Output::Report(r) => r.to_csv()?,
                Output::Table(t) => t.clone(),
            };
            format!("# {}\n{body}", serde_json::to_string(run)?)
        }
        (Output::Table(t), Format::Json) => {
            let rows: Vec<Value> = csv::Reader::from_reader(t.as_bytes())
                .deserialize::<BTreeMap<String, Value>>()
                .map(|r| r.map(|m| json!(m)))
                .collect::<std::result::Result<_, _>>()?;
            let mut s = serde_json::to_string_pretty(&json!({"run": run, "rows": rows}))?;
            s.push('\n');
            s
        }
    })
}

fn predict(ens: &Ensemble) -> Value {
    let model = ens.surrogate();
    match ens {
        Ensemble::General(ds) => json!({
            "N": ds.total(),
            "sum_d2_over_N": ds.sum_d2() as f64 / ds.total() as f64,
            "sum_lambda_i": model.sum_lambda_i(),
            "prob_simple_asymptotic": model.prob_simple(),
        }),
        Ensemble::Bipartite(bp) => {
            let s2 = |d: &[u32]| d.iter().map(|&x| u64::from(x) * u64::from(x.saturating_sub(1))).sum::<u64>();
            json!({
                "N": bp.total(),
                "sum_s2_over_N": s2(bp.left()) as f64 / bp.total() as f64,
                "sum_t2_over_N": s2(bp.right()) as f64 / bp.total() as f64,
                "r1": bp.pair_ratio(),
                "sum_lambda_i": 0.0,
                "prob_simple_asymptotic": model.prob_simple(),
            })
        }
    }
}

fn model_summary(ens: &Ensemble, moments: usize) -> Result<Value> {
    let order = moments.max(1);
    let model = ens.surrogate().with_max_order(order.max(DEFAULT_MAX_ORDER));
    Ok(json!({
        "N": model.total(),
        "bipartite": model.is_bipartite(),
        "sum_lambda_i": model.sum_lambda_i(),
        "sum_lambda_ij": model.sum_lambda_ij(),
        "sum_lambda_ij_sq": model.sum_lambda_ij_sq(),
        "prob_simple": model.prob_simple(),
        "moments": model.zhat_moments(order)?,
    }))
}

fn sample(ens: &Ensemble, replicates: u64, seed: u64, edges: Option<&PathBuf>) -> Result<String> {
    if replicates == 0 {
        return Err(HarnessError::Parse("replicates must be at least 1".into()));
    }
    if let Some(dir) = edges {
        std::fs::create_dir_all(dir)?;
    }
    let t = tag("sample");
    let rows: Vec<(u64, u64)> = (0..replicates)
        .into_par_iter()
        .map_init(
            || ens.template(),
            |pairing, r| -> Result<(u64, u64)> {
                let mut rng = replicate_rng(seed, t, r);
                ens.resample(pairing, &mut rng);
                if let Some(dir) = edges {
                    let mut w = csv::Writer::from_path(dir.join(format!("replicate_{r}.csv")))?;
                    w.write_record(["u", "v"])?;
                    for (u, v) in pairing.edges() {
                        w.write_record([u.to_string(), v.to_string()])?;
                    }
                    w.flush()?;
                }
                Ok((r, pairing.collision_count()))
            },
        )
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["replicate", "z", "simple"])?;
    for (r, z) in rows {
        w.write_record([r.to_string(), z.to_string(), (z == 0).to_string()])?;
    }
    w.flush()?;
    Ok(String::from_utf8(w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?).expect("utf-8"))
}

fn exact(ens: &Ensemble, max_total: u64) -> Result<Value> {
    let summary = experiments::exact_summary(ens, max_total)?;
    let pmf: Vec<Value> = summary.z_distribution().into_iter().map(|(z, p)| json!([z, p])).collect();
    Ok(json!({
        "num_matchings": summary.num_matchings,
        "prob_simple": summary.prob_simple(),
        "z_pmf": pmf,
        "moments": summary.moments,
        "moment_orders": SUMMARY_MOMENTS,
    }))
}

fn run_verify(v: &Verify, seed: u64) -> Result<(Value, ExperimentReport)> {
    Ok(match v {
        Verify::Oracle { max_total, replicates } => (
            json!({"experiment": "oracle", "max_N": max_total, "replicates": replicates}),
            oracle_suite(*max_total, *replicates, seed)?,
        ),
        Verify::Estimate { source, replicates } => (
            json!({"experiment": "estimate", "source": source.echo(), "replicates": replicates}),
            estimate_report(&source.ensemble()?, *replicates, seed)?,
        ),
        Verify::MomentGap { family, sizes, orders, replicates, bootstrap, slope_threshold, max_ratio_growth, plain } => {
            let spec = FamilySpec::parse(family)?;
            let mut cfg = MomentGapConfig::new(spec.family, sizes.clone(), orders.clone());
            cfg.replicates = *replicates;
            cfg.seed = seed;
            cfg.bootstrap = *bootstrap;
            cfg.slope_threshold = *slope_threshold;
            cfg.max_ratio_growth = *max_ratio_growth;
            cfg.control_variate = !plain;
            (json!({"experiment": "moment-gap", "family": family}), moment_gap_study(&cfg)?)
        }
        Verify::Tv { family, sizes, replicates, bootstrap } => {
            let spec = FamilySpec::parse(family)?;
            (json!({"experiment": "tv", "family": family}), tv_study(spec.family, sizes, *replicates, seed, *bootstrap)?)
        }
        Verify::Dichotomy { family, sizes, replicates, floor, vanish } => {
            if family.len() != sizes.len() {
                return Err(HarnessError::Parse("give one --sizes list per --family".into()));
            }
            let mut fams = Vec::new();
            for (f, s) in family.iter().zip(sizes) {
                let spec = FamilySpec::parse(f)?;
                let sizes = s
                    .split(',')
                    .map(|x| x.trim().parse::<u64>().map_err(|_| HarnessError::Parse(format!("bad size `{x}`"))))
                    .collect::<Result<Vec<_>>>()?;
                let mut sf = SweepFamily::new(spec.family, sizes);
                if sf.bounded {
                    sf.floor = *floor;
                } else {
                    sf.vanish = *vanish;
                }
                fams.push(sf);
            }
            (json!({"experiment": "dichotomy", "families": family, "sizes": sizes}), dichotomy_sweep(&fams, *replicates, seed)?)
        }
        Verify::Split { source, a, replicates, margin } => (
            json!({"experiment": "split", "source": source.echo()}),
            splitting_comparison(&source.general()?, *a, *replicates, seed, *margin)?,
        ),
        Verify::Bipartite { source, m_max, replicates, omega_threshold, r1_bound } => {
            let bp = match source.ensemble()? {
                Ensemble::Bipartite(bp) => bp,
                Ensemble::General(_) => return Err(HarnessError::Parse("bipartite diagnostics need --s and --t".into())),
            };
            let cfg = BipartiteConfig {
                m_max: *m_max,
                replicates: *replicates,
                seed,
                omega_threshold: *omega_threshold,
                r1_bound: *r1_bound,
            };
            (json!({"experiment": "bipartite", "source": source.echo()}), bipartite_conditions(&bp, &cfg)?)
        }
    })
}

fn execute(cli: &Cli, args: &[String]) -> Result<(String, i32)> {
    let seed = cli.common.seed;
    let (config, out, code) = match &cli.command {
        Command::Predict(source) => {
            let ens = source.ensemble()?;
            (json!({"command": "predict", "source": source.echo()}), Output::Record(predict(&ens)), EXIT_PASS)
        }
        Command::Model { source, moments } => {
            let ens = source.ensemble()?;
            (json!({"command": "model", "source": source.echo(), "moments": moments}), Output::Record(model_summary(&ens, *moments)?), EXIT_PASS)
        }
        Command::Sample { source, replicates, edges } => {
            let ens = source.ensemble()?;
            let table = sample(&ens, *replicates, seed, edges.as_ref())?;
            (json!({"command": "sample", "source": source.echo(), "replicates": replicates}), Output::Table(table), EXIT_PASS)
        }
        Command::Exact { source, max_total } => {
            let ens = source.ensemble()?;
            (json!({"command": "exact", "source": source.echo(), "max_N": max_total}), Output::Record(exact(&ens, *max_total)?), EXIT_PASS)
        }
        Command::Verify(v) => {
            let (config, report) = run_verify(v, seed)?;
            let code = if report.passed() { EXIT_PASS } else { EXIT_VERDICT_FAILED };
            (config, Output::Report(report), code)
        }
    };
    let run = header(args, &cli.common, config);
    Ok((render(&out, &run, cli.common.format)?, code))
}

/// Parses `args` (including the program name), runs the command and writes
/// its output. Returns the process exit code.
pub fn run_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
        }
    };
    if cli.common.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global();
    }
    let echoed = echo_args(&args);
    match execute(&cli, &echoed) {
        Ok((text, code)) => {
            let written = match &cli.common.out {
                Some(path) => std::fs::write(path, text.as_bytes()),
                None => std::io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
            code
        }
        Err(HarnessError::Core(e)) => {
            eprintln!("error: {e} ({e:?})");
            EXIT_INPUT
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

/// Arguments after the program name, without any thread-count flag, so
/// the output does not depend on the worker count.
fn echo_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut iter = args.iter().skip(1);
    while let Some(a) = iter.next() {
        if a == "--threads" {
            iter.next();
        } else if !a.starts_with("--threads=") {
            out.push(a.clone());
        }
    }
    out
}
