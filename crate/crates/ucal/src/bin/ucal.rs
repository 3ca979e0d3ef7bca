//! Batch command-line front end: run simulations, compute metrics, solve the
//! U-calibration LP and emit reference fixtures.
//!
//! Exit codes: 0 success, 2 validation/input error, 3 solver failure.
//! Set `UCAL_LOG` to a non-empty value (other than `0`) for progress lines on
//! stderr.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use ucal::error::Error;
use ucal::fixtures;
use ucal::forecasters::{
    pattern_outcomes, run_adaptive_threshold, run_oblivious, run_oblivious_multiclass,
    ForecasterKind,
};
use ucal::io::{read_transcript_file, write_reports_csv, write_transcript_file};
use ucal::metrics::{self, RegretReport, Transcript};
use ucal::oracle;
use ucal::scoring::RuleSpec;
use ucal::ucal_lp::{self, LpOptions, LpStatus};

#[derive(Parser)]
#[command(
    name = "ucal",
    version,
    about = "Forecast-evaluation laboratory: simulate forecasters, compute calibration and regret metrics, solve for U-calibration, and emit reference fixtures."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a forecaster against an outcome source for a range of seeds.
    Simulate(SimulateArgs),
    /// Compute metrics of a transcript CSV.
    Metrics(MetricsArgs),
    /// Compute the U-calibration error of a transcript.
    Ucal(UcalArgs),
    /// Generate a reference fixture and verify its recorded metric values.
    Example(ExampleArgs),
}

#[derive(Args, Debug, Default)]
struct SimulateArgs {
    /// hedge | ftpl | empirical | constant=<v>
    #[arg(long)]
    forecaster: Option<String>,
    /// pattern=<half_ones|alternating|all_ones|all_zeros|cycle|adaptive_threshold> | file=<path>
    #[arg(long)]
    adversary: Option<String>,
    /// Number of rounds.
    #[arg(long = "T")]
    t_len: Option<usize>,
    /// Inclusive seed range `a..b`, or a single seed `a`.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory for transcripts and the aggregate report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the seed fan-out.
    #[arg(long)]
    jobs: Option<usize>,
    /// Outcome arity for ftpl.
    #[arg(long)]
    k: Option<usize>,
    /// Hedge learning rate override (default 1/sqrt(T)).
    #[arg(long)]
    eta: Option<f64>,
    /// Allow the adaptive threshold adversary (deterministic-forecaster
    /// failure demonstration; guarantees under oblivious outcomes do not
    /// apply).
    #[arg(long)]
    demo_adaptive: bool,
    /// JSON config mirroring these flags; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// JSON mirror of the simulate flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    forecaster: Option<String>,
    adversary: Option<String>,
    #[serde(rename = "T")]
    t_len: Option<usize>,
    seeds: Option<String>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    k: Option<usize>,
    eta: Option<f64>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Transcript CSV path.
    #[arg(long)]
    transcript: PathBuf,
    /// Scoring rules to evaluate: inline JSON array or a path to one.
    #[arg(long)]
    rules: Option<String>,
    /// Include every applicable metric.
    #[arg(long)]
    all: bool,
    /// Cross-check V-calibration against the brute-force grid oracle.
    #[arg(long)]
    oracle: bool,
    /// Write the report as one-row CSV here (JSON always goes to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct UcalArgs {
    #[arg(long)]
    transcript: PathBuf,
    /// lp | vcal | both
    #[arg(long, default_value = "both")]
    method: String,
    /// Optimality tolerance on reduced costs.
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    /// Restrict the rule class to univariate slopes of at most this bound.
    #[arg(long)]
    slope_bound: Option<f64>,
    /// Write the full LP instance (MPS-like) here.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
    /// Cross-check against the vertex-enumeration oracle (tiny instances).
    #[arg(long)]
    oracle: bool,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExampleArgs {
    /// Fixture name; see `--name list`.
    #[arg(long)]
    name: String,
    /// Number of rounds (fixtures have divisibility requirements).
    #[arg(long = "T", default_value_t = 1000)]
    t_len: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Solver(_) => 3,
                _ => 2,
            }
        }
    };
    std::process::exit(code);
}

fn verbose() -> bool {
    std::env::var("UCAL_LOG").map(|v| !v.is_empty() && v != "0").unwrap_or(false)
}

fn log(msg: impl AsRef<str>) {
    if verbose() {
        eprintln!("[ucal] {}", msg.as_ref());
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Metrics(args) => metrics_cmd(args),
        Command::Ucal(args) => ucal_cmd(args),
        Command::Example(args) => example_cmd(args),
    }
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, Error> {
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed range start {a}")))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed range end {b}")))?;
        if b < a {
            return Err(Error::Validation(format!("empty seed range {spec}")));
        }
        Ok((a..=b).collect())
    } else {
        let s: u64 = spec
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad seed {spec}")))?;
        Ok(vec![s])
    }
}

enum Adversary {
    Pattern(String),
    File(PathBuf),
    AdaptiveThreshold,
}

fn parse_adversary(spec: &str, demo_adaptive: bool) -> Result<Adversary, Error> {
    if let Some(name) = spec.strip_prefix("pattern=") {
        if name == "adaptive_threshold" {
            if !demo_adaptive {
                return Err(Error::Validation(
                    "the adaptive adversary requires --demo-adaptive".into(),
                ));
            }
            return Ok(Adversary::AdaptiveThreshold);
        }
        Ok(Adversary::Pattern(name.to_string()))
    } else if let Some(path) = spec.strip_prefix("file=") {
        Ok(Adversary::File(PathBuf::from(path)))
    } else {
        Err(Error::Validation(format!(
            "adversary must be pattern=<name> or file=<path>, got {spec}"
        )))
    }
}

fn read_outcome_file(path: &Path, arity: usize) -> Result<Vec<usize>, Error> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let x: usize = line
            .parse()
            .map_err(|_| Error::Parse(format!("{}:{}: bad outcome {line}", path.display(), i + 1)))?;
        if x >= arity {
            return Err(Error::Validation(format!(
                "{}:{}: outcome {x} >= arity {arity}",
                path.display(),
                i + 1
            )));
        }
        out.push(x);
    }
    if out.is_empty() {
        return Err(Error::Validation(format!("{}: no outcomes", path.display())));
    }
    Ok(out)
}

/// Per-rule regret set reported for multiclass simulations: the quadratic
/// rule plus nine per-outcome V-shape compositions.
fn ftpl_rule_set() -> Vec<RuleSpec> {
    let mut rules = vec![RuleSpec::Brier];
    for k in 1..10 {
        rules.push(RuleSpec::Vshape { v: k as f64 / 10.0 });
    }
    rules
}

fn simulate(args: SimulateArgs) -> Result<(), Error> {
    let config: SimulateConfig = match &args.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
        None => SimulateConfig::default(),
    };
    let forecaster_spec = args
        .forecaster
        .or(config.forecaster)
        .ok_or_else(|| Error::Validation("missing --forecaster".into()))?;
    let adversary_spec = args
        .adversary
        .or(config.adversary)
        .ok_or_else(|| Error::Validation("missing --adversary".into()))?;
    let t_len = args
        .t_len
        .or(config.t_len)
        .ok_or_else(|| Error::Validation("missing --T".into()))?;
    let seeds = parse_seeds(&args.seeds.or(config.seeds).unwrap_or_else(|| "0".into()))?;
    let out_dir = args.out.or(config.out).unwrap_or_else(|| PathBuf::from("."));
    let jobs = args.jobs.or(config.jobs).unwrap_or(1).max(1);
    let arity = args.k.or(config.k).unwrap_or(2);
    let eta = args.eta.or(config.eta);

    let kind = ForecasterKind::parse(&forecaster_spec)?;
    let kind = match (kind, eta) {
        (ForecasterKind::Hedge { .. }, Some(e)) => ForecasterKind::Hedge { eta: Some(e) },
        (k, _) => k,
    };
    if arity != 2 && kind != ForecasterKind::Ftpl {
        return Err(Error::Validation(format!(
            "forecaster {} is binary; --k {arity} needs ftpl",
            kind.name()
        )));
    }
    let adversary = parse_adversary(&adversary_spec, args.demo_adaptive)?;
    let outcomes: Option<Vec<usize>> = match &adversary {
        Adversary::Pattern(name) => Some(pattern_outcomes(name, t_len, arity)?),
        Adversary::File(path) => {
            let o = read_outcome_file(path, arity)?;
            if o.len() != t_len {
                return Err(Error::Validation(format!(
                    "outcome file yields {} rounds, want {t_len}",
                    o.len()
                )));
            }
            Some(o)
        }
        Adversary::AdaptiveThreshold => None,
    };

    fs::create_dir_all(&out_dir)?;
    log(format!(
        "simulate forecaster={} T={t_len} K={arity} seeds={} jobs={jobs}",
        kind.name(),
        seeds.len()
    ));

    let run_one = |seed: u64| -> Result<RegretReport, Error> {
        let transcript = match (&outcomes, &adversary) {
            (Some(o), _) if arity == 2 => {
                let binary: Vec<u8> = o.iter().map(|&x| x as u8).collect();
                run_oblivious(&kind, &binary, seed)?
            }
            (Some(o), _) => run_oblivious_multiclass(o, arity, seed)?,
            (None, _) => run_adaptive_threshold(&kind, t_len, seed)?,
        };
        let path = out_dir.join(format!("transcript_seed{seed}.csv"));
        write_transcript_file(&path, &transcript)?;
        let mut report = RegretReport::new(&transcript).with_run_info(seed, kind.name());
        fill_simulation_report(&mut report, &transcript, &kind)?;
        log(format!("seed {seed} done"));
        Ok(report)
    };

    let mut reports: Vec<RegretReport> = if jobs == 1 || seeds.len() == 1 {
        seeds.iter().map(|&s| run_one(s)).collect::<Result<_, _>>()?
    } else {
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for _ in 0..jobs.min(seeds.len()) {
                handles.push(scope.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= seeds.len() {
                            break;
                        }
                        local.push(run_one(seeds[i]));
                    }
                    local
                }));
            }
            let mut all = Vec::new();
            for h in handles {
                all.extend(h.join().expect("worker panicked"));
            }
            all.into_iter().collect::<Result<Vec<_>, _>>()
        })?
    };
    reports.sort_by_key(|r| r.seed);

    let report_path = out_dir.join("report.csv");
    let mut file = fs::File::create(&report_path)?;
    write_reports_csv(&mut file, &reports)?;
    file.flush()?;
    println!(
        "wrote {} transcripts and {} to {}",
        reports.len(),
        report_path.display(),
        out_dir.display()
    );
    Ok(())
}

fn fill_simulation_report(
    report: &mut RegretReport,
    t: &Transcript,
    kind: &ForecasterKind,
) -> Result<(), Error> {
    if t.is_binary() {
        report.push("cal", metrics::cal_l1(t)?);
        report.push("cal2", metrics::cal_l2(t)?);
        let (vc, witness) = metrics::vcal(t)?;
        report.push("vcal", vc);
        report.push("vcal_witness_v", witness.v);
        report.push("reg_brier", metrics::reg(&RuleSpec::Brier.to_bivariate(2)?, t)?);
    } else {
        report.push("cal", metrics::cal_l1_multiclass(t));
    }
    if *kind == ForecasterKind::Ftpl {
        for spec in ftpl_rule_set() {
            let name = format!("reg_{}", spec.name());
            if t.is_binary() && spec == RuleSpec::Brier {
                continue; // already reported
            }
            report.push(name, metrics::reg(&spec.to_bivariate(t.arity())?, t)?);
        }
    }
    Ok(())
}

fn load_rules(spec: &str) -> Result<Vec<RuleSpec>, Error> {
    let text = if spec.trim_start().starts_with('[') {
        spec.to_string()
    } else {
        fs::read_to_string(spec)?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("rules: {e}")))
}

fn metrics_cmd(args: MetricsArgs) -> Result<(), Error> {
    let t = read_transcript_file(&args.transcript)?;
    let mut report = RegretReport::new(&t);
    report.push(
        "reg_brier",
        metrics::reg(&RuleSpec::Brier.to_bivariate(t.arity())?, &t)?,
    );
    if t.is_binary() {
        report.push("cal", metrics::cal_l1(&t)?);
        report.push("cal2", metrics::cal_l2(&t)?);
        let (vc, witness) = metrics::vcal(&t)?;
        report.push("vcal", vc);
        report.push("vcal_witness_v", witness.v);
        if args.all {
            report.push("cal_vector", metrics::cal_l1_multiclass(&t));
            report.push("weak_cal_spike", metrics::weak_cal_witness(&t, metrics::spike_witness)?);
        }
    } else {
        report.push("cal", metrics::cal_l1_multiclass(&t));
    }
    if let Some(rules) = &args.rules {
        for spec in load_rules(rules)? {
            let name = format!("reg_{}", spec.name());
            if report.get(&name).is_none() {
                report.push(name, metrics::reg(&spec.to_bivariate(t.arity())?, &t)?);
            }
        }
    }
    if args.oracle && t.is_binary() {
        report.push("oracle_vcal_grid", oracle::vcal_grid(&t, 2001)?);
    }
    println!("{}", report.to_json());
    if let Some(path) = &args.out {
        let mut file = fs::File::create(path)?;
        writeln!(file, "{}", report.csv_header())?;
        writeln!(file, "{}", report.csv_row())?;
    }
    Ok(())
}

fn ucal_cmd(args: UcalArgs) -> Result<(), Error> {
    let t = read_transcript_file(&args.transcript)?;
    let want_lp = matches!(args.method.as_str(), "lp" | "both");
    let want_vcal = matches!(args.method.as_str(), "vcal" | "both");
    if !want_lp && !want_vcal {
        return Err(Error::Validation(format!(
            "method must be lp, vcal or both, got {}",
            args.method
        )));
    }
    if want_vcal && !t.is_binary() {
        return Err(Error::Validation(
            "vcal is defined for binary transcripts; use --method lp".into(),
        ));
    }
    let opts = LpOptions {
        epsilon: args.epsilon,
        slope_bound: args.slope_bound,
        ..LpOptions::default()
    };
    if let Some(path) = &args.dump_lp {
        fs::write(path, ucal_lp::lp_dump(&t, &opts)?)?;
        log(format!("lp dump written to {}", path.display()));
    }

    let mut fields: Vec<(String, String)> = vec![
        ("T".into(), t.len().to_string()),
        ("K".into(), t.arity().to_string()),
        ("method".into(), format!("\"{}\"", args.method)),
    ];
    let mut lp_value = None;
    if want_lp {
        log("solving LP");
        let sol = ucal_lp::max_agent_reg(&t, &opts)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Solver(format!(
                "LP did not converge after {} pivots; best value {}, upper bound {}",
                sol.iterations, sol.value, sol.upper_bound
            )));
        }
        let witness = sol.table.to_json();
        fields.push(("max_agent_reg".into(), format!("{}", sol.value)));
        fields.push(("lp_iterations".into(), sol.iterations.to_string()));
        fields.push(("witness_rule".into(), witness));
        if args.oracle {
            match oracle::max_agent_reg_vertex(&t) {
                Ok(v) => fields.push(("oracle_vertex_value".into(), format!("{v}"))),
                Err(e) => fields.push(("oracle_vertex_value".into(), format!("\"skipped: {e}\""))),
            }
        }
        lp_value = Some(sol.value);
    }
    if want_vcal {
        let (vc, witness) = metrics::vcal(&t)?;
        fields.push(("vcal".into(), format!("{vc}")));
        fields.push(("vcal_witness_v".into(), format!("{}", witness.v)));
        fields.push((
            "vcal_witness_side".into(),
            format!(
                "\"{}\"",
                match witness.side {
                    metrics::ApproachSide::FromAbove => "from_above",
                    metrics::ApproachSide::FromBelow => "from_below",
                }
            ),
        ));
        if let Some(lp) = lp_value {
            let ok = 0.5 * lp - 1e-9 <= vc && vc <= lp + 1e-9;
            fields.push(("sandwich_ok".into(), ok.to_string()));
        }
    }

    let json = format!(
        "{{{}}}",
        fields
            .iter()
            .map(|(k, v)| format!("\"{k}\":{v}"))
            .collect::<Vec<_>>()
            .join(",")
    );
    match &args.out {
        Some(path) => fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(())
}

fn example_cmd(args: ExampleArgs) -> Result<(), Error> {
    if args.name == "list" {
        for name in fixtures::fixture_names() {
            println!("{name}");
        }
        return Ok(());
    }
    let fixture = fixtures::generate(&args.name, args.t_len)?;
    fs::create_dir_all(&args.out)?;
    let base = format!("{}_T{}", fixture.name, fixture.t_len);
    let csv_path = args.out.join(format!("{base}.csv"));
    write_transcript_file(&csv_path, &fixture.transcript)?;

    let side = serde_json::json!({
        "name": fixture.name,
        "T": fixture.t_len,
        "K": fixture.transcript.arity(),
        "checks": fixture.checks,
        "agents": fixture.agents.iter().map(|(name, u)| {
            serde_json::json!({
                "name": name,
                "u": serde_json::from_str::<serde_json::Value>(&u.to_json()).unwrap()["u"],
            })
        }).collect::<Vec<_>>(),
        "rules": fixture.rules.iter().map(|(name, spec)| {
            serde_json::json!({ "name": name, "rule": spec })
        }).collect::<Vec<_>>(),
    });
    let side_path = args.out.join(format!("{base}.expected.json"));
    fs::write(&side_path, serde_json::to_string_pretty(&side).unwrap() + "\n")?;

    let outcomes = fixtures::verify(&fixture)?;
    let mut failures = 0;
    for o in &outcomes {
        let status = if o.ok { "ok" } else { "MISMATCH" };
        println!(
            "{status}: {} = {} (expect {:?} {} tol {})",
            o.check.metric, o.actual, o.check.kind, o.check.value, o.check.tolerance
        );
        if !o.ok {
            failures += 1;
        }
    }
    println!("wrote {} and {}", csv_path.display(), side_path.display());
    if failures > 0 {
        return Err(Error::Validation(format!(
            "{failures} expected-value check(s) failed for {}",
            fixture.name
        )));
    }
    Ok(())
}
