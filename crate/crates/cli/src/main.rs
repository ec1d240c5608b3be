use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use wiretap_csi::channel::{
    example_channel, rate_csi_1_value, rate_csi_2_value, BoundReport, CausalPolicy,
    ChannelWithState, PolicyDoc,
};
use wiretap_csi::formats::{parse_channel, parse_policy, parse_scheme, ChannelDoc};
use wiretap_csi::info::binary_entropy;
use wiretap_csi::optimizer::{
    check_special_case, maximize_branch, maximize_lower_bound, maximize_lower_bound_detailed,
    maximize_special_case, tightness_classify, Branch, SearchConfig, SpecialCase,
    DEFAULT_EVALUATION_CAP,
};
use wiretap_csi::oracle::{oracle_report, EnumerationBudget};
use wiretap_csi::simulator::{run_session, trace_session, Scheme};
use wiretap_csi::Error;

#[derive(Parser)]
#[command(name = "wiretap", version, about = "Secrecy bounds and coding experiments for wiretap channels with causal state")]
struct Cli {
    /// Worker threads; reports do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the bounds at a policy, or maximize them when none is given.
    Bounds {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        resolution: Option<u32>,
        #[arg(long)]
        card_v: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recompute the binary example and print a pass/fail table.
    Example,
    /// Monte Carlo run of the block-Markov scheme.
    Simulate {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        scheme: PathBuf,
        /// Overrides the seed in the scheme file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Also emit the full record of this trial.
        #[arg(long)]
        trace: Option<u64>,
    },
    /// Exact error probability, leakage and key statistics by enumeration.
    Oracle {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        scheme: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100_000_000)]
        budget: u64,
        /// Block lengths to sweep, e.g. `2,4`; defaults to the file's `n`.
        #[arg(long, value_delimiter = ',')]
        sweep_n: Vec<usize>,
        #[arg(long)]
        no_crosscheck: bool,
    },
    /// Grid maximization of both branches, special cases and tightness.
    Optimize {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        resolution: Option<u32>,
        #[arg(long)]
        card_v: Option<usize>,
        #[arg(long)]
        refine_rounds: Option<u32>,
        #[arg(long, default_value_t = 0)]
        restarts: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_EVALUATION_CAP)]
        budget: u64,
        #[arg(long, default_value_t = 64)]
        special_resolution: u32,
        #[arg(long, default_value_t = 4)]
        tightness_resolution: u32,
    },
}

enum Failure {
    Core(Error),
    Io(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 2,
            Failure::Core(Error::Resource { .. }) => 3,
            Failure::Core(Error::Internal(_)) | Failure::Check(_) => 4,
            Failure::Core(_) => 2,
        }
    }
}

type Out = Result<(Value, u64, Value), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_channel(path: &Path) -> Result<ChannelWithState, Failure> {
    Ok(parse_channel(&read(path)?)?)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn search_config(
    ch: &ChannelWithState,
    resolution: Option<u32>,
    card_v: Option<usize>,
    seed: u64,
) -> SearchConfig {
    let mut cfg = SearchConfig::for_channel(ch);
    if let Some(r) = resolution {
        cfg.grid_resolution = r;
    }
    if let Some(v) = card_v {
        cfg.card_v = v;
    }
    cfg.seed = seed;
    cfg
}

fn bound_value(report: &BoundReport) -> Value {
    let mut v = to_value(report);
    v["achievable_rate"] = json!(report.lower_bound.0.max(0.0));
    v
}

fn cmd_bounds(
    channel: &Path,
    policy: Option<&Path>,
    resolution: Option<u32>,
    card_v: Option<usize>,
    seed: u64,
) -> Out {
    let ch = load_channel(channel)?;
    let mut config = json!({ "channel": ChannelDoc::from_channel(&ch) });
    let report = match policy {
        Some(p) => {
            let pol = parse_policy(&read(p)?)?;
            config["policy"] = to_value(&PolicyDoc::from(pol.clone()));
            BoundReport::at_policy(&ch, &pol)?
        }
        None => {
            let cfg = search_config(&ch, resolution, card_v, seed);
            config["search"] = to_value(&cfg);
            maximize_lower_bound(&ch, &cfg)?
        }
    };
    Ok((config, seed, bound_value(&report)))
}

#[derive(Serialize)]
struct Row {
    name: &'static str,
    value: f64,
    expected: f64,
    tolerance: f64,
    relation: &'static str,
    pass: bool,
}

fn cmd_example() -> Out {
    let ch = example_channel();
    let h = binary_entropy(0.1)?.0;
    let uniform = CausalPolicy::input_only(&[0.5, 0.5], ch.ns())?;
    let r2 = rate_csi_2_value(&ch, &uniform)?.0;
    let r1 = rate_csi_1_value(&ch, &uniform)?.0;
    let search = SearchConfig {
        card_v: 2,
        grid_resolution: 8,
        refine_rounds: 2,
        ..SearchConfig::for_channel(&ch)
    };
    let best1 = maximize_branch(&ch, &search, Branch::Csi1)?.value.0;
    let lc = BoundReport::at_policy(&ch, &uniform)?.liu_chen.map_or(f64::NAN, |b| b.0);
    let rows = vec![
        Row {
            name: "csi2_at_uniform_input",
            value: r2,
            expected: 1.0 - h,
            tolerance: 1e-9,
            relation: "eq",
            pass: (r2 - (1.0 - h)).abs() <= 1e-9,
        },
        Row {
            name: "csi1_at_uniform_input",
            value: r1,
            expected: 1.0 - 2.0 * h,
            tolerance: 1e-9,
            relation: "eq",
            pass: (r1 - (1.0 - 2.0 * h)).abs() <= 1e-9,
        },
        Row {
            name: "csi1_grid_max_below_csi2",
            value: best1,
            expected: r2,
            tolerance: 1e-3,
            relation: "le",
            pass: best1 <= r2 - 1e-3,
        },
        Row {
            name: "csi1_grid_max_reaches_witness",
            value: best1,
            expected: 1.0 - 2.0 * h,
            tolerance: 1e-12,
            relation: "ge",
            pass: best1 >= 1.0 - 2.0 * h - 1e-12,
        },
        Row {
            name: "liu_chen_at_embedded_policy",
            value: lc,
            expected: r1,
            tolerance: 1e-10,
            relation: "eq",
            pass: (lc - r1).abs() <= 1e-10,
        },
    ];
    let all_pass = rows.iter().all(|r| r.pass);
    let config = json!({
        "channel": ChannelDoc::from_channel(&ch),
        "csi1_search": search,
    });
    let report = json!({ "rows": rows, "all_pass": all_pass });
    if !all_pass {
        emit_failure_report(&report);
        return Err(Failure::Check("example table has failing rows".into()));
    }
    Ok((config, 0, report))
}

fn emit_failure_report(report: &Value) {
    eprintln!("{}", serde_json::to_string_pretty(report).expect("json"));
}

fn cmd_simulate(
    channel: &Path,
    scheme: &Path,
    seed: Option<u64>,
    trials: Option<u64>,
    trace: Option<u64>,
) -> Out {
    let ch = load_channel(channel)?;
    let mut cfg = parse_scheme(&read(scheme)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let sch = Scheme::new(&ch, &cfg)?;
    let mut report = to_value(&run_session(&sch, cfg.trials)?);
    if let Some(t) = trace {
        report["trace"] = to_value(&trace_session(&sch, t)?);
    }
    let config = json!({
        "channel": ChannelDoc::from_channel(&ch),
        "scheme": cfg,
        "trace": trace,
    });
    Ok((config, cfg.seed, report))
}

fn cmd_oracle(
    channel: &Path,
    scheme: &Path,
    seed: Option<u64>,
    budget: u64,
    sweep_n: &[usize],
    crosscheck: bool,
) -> Out {
    let ch = load_channel(channel)?;
    let mut cfg = parse_scheme(&read(scheme)?)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let budget = EnumerationBudget { max_terms: budget };
    let ns: Vec<usize> = if sweep_n.is_empty() { vec![cfg.n] } else { sweep_n.to_vec() };
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let mut c = cfg.clone();
        c.n = n;
        let sch = Scheme::new(&ch, &c)?;
        let mut row = to_value(&oracle_report(&sch, &budget, crosscheck)?);
        row["n"] = json!(n);
        rows.push(row);
    }
    let config = json!({
        "channel": ChannelDoc::from_channel(&ch),
        "scheme": cfg,
        "budget": budget,
        "sweep_n": ns,
        "crosscheck": crosscheck,
    });
    Ok((config, cfg.seed, json!({ "rows": rows })))
}

#[allow(clippy::too_many_arguments)]
fn cmd_optimize(
    channel: &Path,
    resolution: Option<u32>,
    card_v: Option<usize>,
    refine_rounds: Option<u32>,
    restarts: u32,
    seed: u64,
    budget: u64,
    special_resolution: u32,
    tightness_resolution: u32,
) -> Out {
    let ch = load_channel(channel)?;
    let mut cfg = search_config(&ch, resolution, card_v, seed);
    if let Some(r) = refine_rounds {
        cfg.refine_rounds = r;
    }
    cfg.restarts = restarts;
    cfg.max_evaluations = budget;
    let (mut bound, csi1, csi2) = maximize_lower_bound_detailed(&ch, &cfg)?;
    let tightness = tightness_classify(&ch, &bound, tightness_resolution)?;
    bound.certify(tightness);

    let mut special = Vec::new();
    for which in [SpecialCase::Thm3, SpecialCase::Yamamoto, SpecialCase::ZLessNoisy] {
        let entry = match check_special_case(&ch, which) {
            Ok(()) => {
                let r = maximize_special_case(&ch, which, special_resolution)?;
                json!({ "case": which, "applicable": true, "result": r })
            }
            Err(Error::Contract(why)) => {
                json!({ "case": which, "applicable": false, "reason": why })
            }
            Err(e) => return Err(e.into()),
        };
        special.push(entry);
    }
    let config = json!({
        "channel": ChannelDoc::from_channel(&ch),
        "search": cfg,
        "special_resolution": special_resolution,
        "tightness_resolution": tightness_resolution,
    });
    let report = json!({
        "bound": bound_value(&bound),
        "csi1": csi1,
        "csi2": csi2,
        "special_cases": special,
    });
    Ok((config, seed, report))
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render(doc: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(doc).expect("json") + "\n",
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", doc, &mut rows);
            let mut s = String::from("key,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
            }
            s
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(4);
        }
    }
    let start = Instant::now();
    let (name, result) = match &cli.command {
        Command::Bounds {
            channel,
            policy,
            resolution,
            card_v,
            seed,
        } => (
            "bounds",
            cmd_bounds(channel, policy.as_deref(), *resolution, *card_v, *seed),
        ),
        Command::Example => ("example", cmd_example()),
        Command::Simulate {
            channel,
            scheme,
            seed,
            trials,
            trace,
        } => ("simulate", cmd_simulate(channel, scheme, *seed, *trials, *trace)),
        Command::Oracle {
            channel,
            scheme,
            seed,
            budget,
            sweep_n,
            no_crosscheck,
        } => (
            "oracle",
            cmd_oracle(channel, scheme, *seed, *budget, sweep_n, !no_crosscheck),
        ),
        Command::Optimize {
            channel,
            resolution,
            card_v,
            refine_rounds,
            restarts,
            seed,
            budget,
            special_resolution,
            tightness_resolution,
        } => (
            "optimize",
            cmd_optimize(
                channel,
                *resolution,
                *card_v,
                *refine_rounds,
                *restarts,
                *seed,
                *budget,
                *special_resolution,
                *tightness_resolution,
            ),
        ),
    };
    match result {
        Ok((config, seed, report)) => {
            let doc = json!({
                "manifest": {
                    "command": name,
                    "config": config,
                    "seed": seed,
                    "version": env!("CARGO_PKG_VERSION"),
                    "workers": rayon::current_num_threads(),
                    "duration_ms": start.elapsed().as_millis() as u64,
                },
                "report": report,
            });
            print!("{}", render(&doc, cli.format));
            ExitCode::SUCCESS
        }
        Err(f) => {
            let msg = match &f {
                Failure::Core(e) => e.to_string(),
                Failure::Io(m) | Failure::Check(m) => m.clone(),
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.exit_code())
        }
    }
}
