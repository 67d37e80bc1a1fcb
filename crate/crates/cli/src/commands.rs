use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use walklis::dyadic::{dyadic_experiment, dyadic_trial, hitting_tail_probe, theorem_lb_check};
use walklis::greedy::{chain_length_tail, default_window, fit_survival, orthant_exit_samples, write_exit_csv};
use walklis::harness::{max_concentration_probe, petrov_probe, run_scaling, ExperimentSpec};
use walklis::lis::{lis_bruteforce, lis_strict_1d, lnds_chain_1d, lnds_chain_dd, lnds_length, BRUTEFORCE_MAX};
use walklis::multiscale::{certified_upper_bound, local_time_moments, submultiplicativity_probe};
use walklis::report::{render_svg, write_rows_csv, Report};
use walklis::walk::Positions;
use walklis::{generate_walk, walk_io, Error, StepLaw, Walk};

use crate::args::{
    CertifyArgs, ChainArgs, DyadicArgs, LisArgs, ProbeArgs, ProbeKind, ReportFormat, Run, ScalingArgs, TableFormat,
    TextFormat, WalkArgs, WalkFormat,
};
use crate::input::{parse_pair, parse_sequence, parse_sizes};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed input or an unwritable path.
    Usage(String),
    /// An enabled assertion or a certificate assumption failed.
    Assertion(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Assertion(_) => 2,
            CliError::Usage(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Assertion(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult = Result<(), CliError>;

fn emit(run: &Run, bytes: &[u8]) -> CliResult {
    match &run.out {
        Some(path) => write_file(path, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn envelope<C: Serialize, R: Serialize>(command: &str, config: &C, result: &R) -> Result<Vec<u8>, CliError> {
    let value = json!({ "command": command, "config": config, "result": result });
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn to_value<T: Serialize>(value: &T) -> Result<Value, CliError> {
    serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))
}

fn law(kind: walklis::StepKind, d: usize) -> Result<StepLaw, CliError> {
    Ok(StepLaw::new(kind, d)?)
}

fn flat_values(walk: &Walk) -> Vec<f64> {
    match walk.positions() {
        Positions::Lattice(v) => v.iter().map(|&x| x as f64).collect(),
        Positions::Real(v) => v.clone(),
    }
}

pub fn walk(args: &WalkArgs) -> CliResult {
    let w = generate_walk(law(args.law, args.d)?, args.n, args.seed);
    let mut bytes = Vec::new();
    match args.format {
        WalkFormat::Csv => walk_io::write_csv(&w, &mut bytes)?,
        WalkFormat::Binary => walk_io::write_binary(&w, &mut bytes)?,
    }
    emit(&args.run, &bytes)
}

#[derive(Serialize)]
struct LisResult {
    points: usize,
    length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<usize>,
}

pub fn lis(args: &LisArgs) -> CliResult {
    if args.strict && args.d != 1 {
        return Err(usage("--strict is only defined for one-dimensional sequences"));
    }
    if args.strict && (args.witness || args.oracle) {
        return Err(usage("--witness and --oracle apply to the non-decreasing variant only"));
    }
    let values = match &args.input {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            parse_sequence(&text, args.d)?
        }
        None => {
            let (Some(n), Some(seed)) = (args.n, args.seed) else {
                return Err(usage("give a sequence file, or --n and --seed to generate a walk"));
            };
            flat_values(&generate_walk(law(args.law, args.d)?, n, seed))
        }
    };
    let points = values.len() / args.d;
    if args.oracle && points > BRUTEFORCE_MAX {
        return Err(usage(format!("--oracle is limited to {BRUTEFORCE_MAX} points, got {points}")));
    }
    let length = if args.strict { lis_strict_1d(&values) } else { lnds_length(&values, args.d)? };
    let witness = match (args.witness, args.d) {
        (false, _) => None,
        (true, 1) => Some(lnds_chain_1d(&values).into_indices()),
        (true, d) => Some(lnds_chain_dd(&values, d)?.into_indices()),
    };
    let oracle = if args.oracle { Some(lis_bruteforce(&values, args.d)?) } else { None };
    let result = LisResult { points, length, witness, oracle };
    let bytes = match args.format {
        TextFormat::Json => envelope("lis", args, &result)?,
        TextFormat::Text => {
            let mut text = format!("{length}\n");
            if let Some(w) = &result.witness {
                let joined: Vec<String> = w.iter().map(usize::to_string).collect();
                let _ = writeln!(text, "witness {}", joined.join(" "));
            }
            if let Some(o) = oracle {
                let _ = writeln!(text, "oracle {o}");
            }
            text.into_bytes()
        }
    };
    emit(&args.run, &bytes)?;
    match oracle {
        Some(o) if o != length => Err(CliError::Assertion(format!("oracle {o} disagrees with length {length}"))),
        _ => Ok(()),
    }
}

pub fn certify(args: &CertifyArgs) -> CliResult {
    let n = args.m.checked_mul(args.k).filter(|&n| n <= 31).ok_or_else(|| usage("m·k must be at most 31"))?;
    let steps = args.steps.unwrap_or(1usize << (2 * n));
    let w = generate_walk(law(args.law, 1)?, steps, args.seed);
    let report = certified_upper_bound(&w, args.m, args.k, args.gamma, true)?;
    let verdict = if !report.assumptions_hold() {
        "assumptions-failed"
    } else if report.is_sound() {
        "certified"
    } else {
        "bound-exceeded"
    };
    let result = json!({ "verdict": verdict, "report": report });
    let mut config = to_value(args)?;
    config["steps"] = json!(steps);
    emit(&args.run, &envelope("certify", &config, &result)?)?;
    match verdict {
        "certified" => Ok(()),
        "assumptions-failed" => {
            let mut failed = Vec::new();
            if !report.assumption_local_time {
                failed.push("local-time");
            }
            if !report.assumption_max {
                failed.push("maximum");
            }
            Err(CliError::Assertion(format!("assumptions failed: {}", failed.join(", "))))
        }
        _ => Err(CliError::Assertion("observed LIS exceeds the certified bound".into())),
    }
}

pub fn dyadic(args: &DyadicArgs) -> CliResult {
    let bytes = match args.format {
        TableFormat::Csv => {
            let trial = (0..args.trials)
                .find_map(|t| dyadic_trial(args.n, args.seed, t, args.cap, false).transpose())
                .transpose()?
                .ok_or_else(|| CliError::Assertion("every trial was censored".into()))?;
            let mut bytes = Vec::new();
            trial.construction.write_csv(&mut bytes)?;
            bytes
        }
        TableFormat::Json => {
            let s = dyadic_experiment(args.n, args.trials, args.seed, args.cap, args.lis)?;
            let levels: Vec<Value> = s
                .visit_counts
                .iter()
                .map(|(k, counts)| {
                    let n = counts.len() as f64;
                    let mean = counts.iter().sum::<u64>() as f64 / n;
                    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                    json!({ "k": k, "samples": counts.len(), "mean": mean, "variance": var, "expected_mean": 2f64.powi(*k as i32) })
                })
                .collect();
            let result = json!({
                "order": s.order,
                "trials": s.trials,
                "censored": s.censored,
                "mean": s.mean,
                "variance": s.variance,
                "expected_mean": s.expected_mean,
                "variance_bound": s.variance_bound,
                "mean_ratio_to_lis": s.mean_ratio_to_lis,
                "levels": levels,
            });
            envelope("dyadic", args, &result)?
        }
    };
    emit(&args.run, &bytes)
}

pub fn chain(args: &ChainArgs) -> CliResult {
    let law = law(args.law, args.d)?;
    if let Some(n) = args.n {
        let tail = chain_length_tail(law, n, &args.epsilon, args.trials, args.seed, args.exact)?;
        let bytes = match args.format {
            TableFormat::Json => envelope("chain", args, &tail)?,
            TableFormat::Csv => {
                let mut text = String::from("epsilon,threshold,estimate,stderr\n");
                for r in &tail.rows {
                    let _ = writeln!(text, "{},{},{},{}", r.epsilon, r.threshold, r.estimate, r.stderr);
                }
                text.into_bytes()
            }
        };
        return emit(&args.run, &bytes);
    }
    let window = match &args.window {
        Some(text) => {
            let (lo, hi) = parse_pair(text)?;
            (lo as u64, hi as u64)
        }
        None => default_window(args.cap),
    };
    let samples = orthant_exit_samples(law, args.trials, args.cap, args.seed)?;
    let bytes = match args.format {
        TableFormat::Csv => {
            let mut bytes = Vec::new();
            write_exit_csv(&samples, &mut bytes)?;
            bytes
        }
        TableFormat::Json => {
            let fit = fit_survival(&samples, args.cap, window, args.points)?;
            let mut config = to_value(args)?;
            config["window"] = json!([window.0, window.1]);
            envelope("chain", &config, &fit)?
        }
    };
    emit(&args.run, &bytes)
}

pub fn scaling(args: &ScalingArgs) -> CliResult {
    let law = law(args.law, args.d)?;
    let sizes = parse_sizes(&args.sizes)?;
    let window = args.window.as_deref().map(parse_pair).transpose()?;
    let band = args.slope_band.as_deref().map(parse_pair).transpose()?;
    if args.stat.is_empty() {
        return Err(usage("no statistic given"));
    }
    let mut tables = Vec::new();
    for &statistic in &args.stat {
        let mut spec = ExperimentSpec::new(law, sizes.clone(), args.trials, statistic, args.seed);
        spec.cap = args.cap;
        spec.validate()?;
        tables.push(run_scaling(&spec)?);
    }
    let report = Report::from_tables(&tables, window);
    let bytes = match args.format {
        ReportFormat::Json => envelope("scaling", args, &report)?,
        ReportFormat::Csv => {
            let mut bytes = Vec::new();
            write_rows_csv(&report, &mut bytes)?;
            bytes
        }
        ReportFormat::Svg => render_svg(&report).into_bytes(),
    };
    emit(&args.run, &bytes)?;
    if let Some((lo, hi)) = band {
        for &statistic in &args.stat {
            match report.fits.iter().find(|f| f.statistic == statistic) {
                None => return Err(CliError::Assertion(format!("{statistic}: no exponent fit"))),
                Some(f) if f.fit.slope < lo || f.fit.slope > hi => {
                    return Err(CliError::Assertion(format!(
                        "{statistic}: slope {:.4} outside [{lo}, {hi}]",
                        f.fit.slope
                    )))
                }
                Some(_) => {}
            }
        }
    }
    Ok(())
}

pub fn probe(args: &ProbeArgs) -> CliResult {
    let law = law(args.law, 1)?;
    let need_n = || args.n.ok_or_else(|| usage(format!("probe {} needs --n", kind_name(args.kind))));
    let need_m = || args.m.ok_or_else(|| usage(format!("probe {} needs --m", kind_name(args.kind))));
    let result = match args.kind {
        ProbeKind::Petrov => {
            let n = need_n()?;
            let rows = args
                .lambda
                .iter()
                .map(|&l| petrov_probe(law, n, l, args.trials, None, args.seed))
                .collect::<Result<Vec<_>, _>>()?;
            serde_json::to_value(rows)
        }
        ProbeKind::Max => serde_json::to_value(max_concentration_probe(law, need_n()?, &args.lambda, args.trials, args.seed)?),
        ProbeKind::Submult => {
            let order = u32::try_from(need_n()?).map_err(|_| usage("--n is the order for submult"))?;
            let threshold = args.threshold.ok_or_else(|| usage("probe submult needs --threshold"))?;
            let p = submultiplicativity_probe(law, order, threshold, args.ell, args.trials, args.seed)?;
            Ok(json!({ "probe": p, "holds_within_3se": p.holds_within(3.0) }))
        }
        ProbeKind::LocalTime => {
            let m = need_m()?;
            let ks: Vec<u32> = if args.k.is_empty() { (1..=m).collect() } else { args.k.clone() };
            let stats = local_time_moments(law, m, &ks, args.trials, args.seed)?;
            let rows: Vec<Value> = stats
                .iter()
                .map(|s| json!({ "m": s.m, "k": s.k, "trials": s.trials, "mean": s.mean, "stderr": s.stderr, "ratio": s.ratio, "ratio_stderr": s.ratio_stderr }))
                .collect();
            Ok(Value::Array(rows))
        }
        ProbeKind::Hitting => {
            if args.law != walklis::StepKind::Simple {
                return Err(usage("probe hitting uses the simple walk"));
            }
            serde_json::to_value(hitting_tail_probe(need_m()?, need_n()?, args.trials, args.seed)?)
        }
        ProbeKind::TheoremLb => {
            if args.law != walklis::StepKind::Simple {
                return Err(usage("probe theorem-lb uses the simple walk"));
            }
            let eps = args.epsilon.ok_or_else(|| usage("probe theorem-lb needs --epsilon"))?;
            serde_json::to_value(theorem_lb_check(need_n()?, eps, args.trials, args.seed)?)
        }
    }
    .map_err(|e| CliError::Internal(e.to_string()))?;
    emit(&args.run, &envelope("probe", args, &result)?)
}

fn kind_name(kind: ProbeKind) -> &'static str {
    match kind {
        ProbeKind::Petrov => "petrov",
        ProbeKind::Max => "max",
        ProbeKind::Submult => "submult",
        ProbeKind::LocalTime => "local-time",
        ProbeKind::Hitting => "hitting",
        ProbeKind::TheoremLb => "theorem-lb",
    }
}
