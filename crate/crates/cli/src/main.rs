//! `pdts`: command-line access to the type checker, the probabilistic
//! reduction engine, and MLN and DTN inference.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 computation cap
//! exceeded. Diagnostics go to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use pdts_core::kernel::{infer_type, normalize, type_nf, KernelError, DEFAULT_FUEL};
use pdts_core::prob::{
    enumerate_tree, is_legal, judge_prob, reductions_of, sample_counts, types_of, JudgeMode,
    ProbError, TreeNode, TypeSet, DEFAULT_LEAF_CAP,
};
use pdts_core::syntax::{parse_in, parse_program, Context, ParseError, Term};
use pdts_logic::bridge::{dtn_to_mln, mln_to_dtn, verify_translation};
use pdts_logic::dtn::{self, DtnSpec};
use pdts_logic::formula::{parse_formula, Formula};
use pdts_logic::mln::{self, Mln};
use pdts_logic::LogicError;

#[derive(Parser)]
#[command(
    name = "pdts",
    version,
    about = "Probabilistic dependent type system tools"
)]
struct Cli {
    /// Print one JSON record instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Add wall-clock time as `elapsed_ms` to the record. Off by default so
    /// that output is reproducible.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Sampling {
    /// Number of sampled reductions.
    #[arg(long)]
    samples: Option<usize>,
    /// Seed of the sampler; results depend only on seed and sample count.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a deterministic term and print its type.
    Check { file: PathBuf },
    /// Print the normal form of a deterministic term.
    Norm {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Print the possible types and reductions of a term, and whether it is
    /// legal.
    Types { file: PathBuf },
    /// Sample normal forms and report their frequencies.
    Sample {
        file: PathBuf,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Print the full weighted reduction tree.
    Enumerate {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        #[arg(long, default_value_t = DEFAULT_LEAF_CAP)]
        leaf_cap: usize,
    },
    /// Probability that a term reduces to a normal form of the given type.
    Judge {
        file: PathBuf,
        #[arg(long = "type")]
        ty: String,
        /// Compute exactly from the reduction tree (the default without
        /// --samples).
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        #[arg(long, default_value_t = DEFAULT_LEAF_CAP)]
        leaf_cap: usize,
    },
    /// Exact query probability in a Markov Logic Network.
    MlnQuery {
        file: PathBuf,
        #[arg(long)]
        query: String,
        /// Hard evidence: only worlds satisfying this formula are counted.
        #[arg(long)]
        evidence: Option<String>,
        /// Replace the formula weights, in file order.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weights: Option<Vec<f64>>,
        /// Largest number of ground atoms to enumerate.
        #[arg(long, default_value_t = mln::DEFAULT_WORLD_CAP)]
        cap: usize,
    },
    /// Query probability in a Dependent Type Network, exactly or by
    /// sampling the query program.
    DtnQuery {
        file: PathBuf,
        #[arg(long)]
        query: String,
        /// Compute exactly. With --samples both values are reported.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        sampling: Sampling,
        /// Replace the formula weights by MLN-style weights w (p = 1 - e^-w),
        /// in file order.
        #[arg(long, value_delimiter = ',', conflicts_with = "probs")]
        weights: Option<Vec<f64>>,
        /// Replace the formula probabilities, in file order.
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Largest number of ground atoms for exact inference.
        #[arg(long, default_value_t = dtn::DEFAULT_ATOM_CAP)]
        cap: usize,
    },
    /// Translate an MLN file to a DTN file.
    Mln2dtn {
        file: PathBuf,
        /// Write `~F -> false` as `F` and `F -> false` as `~F`.
        #[arg(long)]
        simplify: bool,
        /// Append the largest world-probability deviation as a comment.
        #[arg(long)]
        report: bool,
    },
    /// Translate a DTN file to an MLN file.
    Dtn2mln {
        file: PathBuf,
        #[arg(long)]
        report: bool,
    },
    /// Translate an .mln or .dtn file to the other formalism and back, and
    /// compare world distributions.
    Verify {
        file: PathBuf,
        #[arg(long)]
        simplify: bool,
    },
}

enum Failure {
    Input(String),
    Cap(String),
}

impl From<KernelError> for Failure {
    fn from(e: KernelError) -> Failure {
        match e {
            KernelError::FuelExhausted(_) => Failure::Cap(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<ProbError> for Failure {
    fn from(e: ProbError) -> Failure {
        match e {
            ProbError::Kernel(k) => k.into(),
            ProbError::FuelExhausted(_) | ProbError::LeafCapExceeded(_) => {
                Failure::Cap(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<LogicError> for Failure {
    fn from(e: LogicError) -> Failure {
        match e {
            LogicError::Prob(p) => p.into(),
            LogicError::Kernel(k) => k.into(),
            LogicError::TooManyWorlds { .. }
            | LogicError::TooManyAtoms { .. }
            | LogicError::ProgramTooLarge { .. } => Failure::Cap(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Failure {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<Output, Failure>;

/// What a command prints: a record of named fields or verbatim text.
enum Output {
    Record(Vec<(&'static str, Value)>),
    Text(String, Value),
}

fn value(v: impl Into<Value>) -> Output {
    Output::Record(vec![("value", v.into())])
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_term(path: &Path) -> Result<(Context, Term), Failure> {
    let text = read(path)?;
    parse_program(&text).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))
}

fn in_file<T>(path: &Path, r: Result<T, LogicError>) -> Result<T, Failure> {
    r.map_err(|e| match Failure::from(e) {
        Failure::Input(m) => Failure::Input(format!("{}: {m}", path.display())),
        cap => cap,
    })
}

fn formula(text: &str) -> Result<Formula, Failure> {
    parse_formula(text).map_err(|e| Failure::Input(format!("formula `{text}`: {e}")))
}

fn deterministic(path: &Path, term: &Term) -> Result<(), Failure> {
    if term.is_deterministic() {
        Ok(())
    } else {
        Err(Failure::Input(format!(
            "{}: term is probabilistic; use `types`, `sample` or `enumerate`",
            path.display()
        )))
    }
}

fn set_weights(path: &Path, n: usize, given: &[f64], what: &str) -> Result<(), Failure> {
    if given.len() != n {
        return Err(Failure::Input(format!(
            "{}: {} {what} given for {n} formulas",
            path.display(),
            given.len()
        )));
    }
    Ok(())
}

fn check(file: &Path) -> Outcome {
    let (ctx, term) = load_term(file)?;
    deterministic(file, &term)?;
    Ok(value(format!("{:#}", infer_type(&ctx, &term)?)))
}

fn norm(file: &Path, fuel: usize) -> Outcome {
    let (ctx, term) = load_term(file)?;
    deterministic(file, &term)?;
    infer_type(&ctx, &term)?;
    Ok(value(normalize(&term, fuel)?.to_string()))
}

fn types(file: &Path) -> Outcome {
    let (ctx, term) = load_term(file)?;
    let types = match types_of(&ctx, &term) {
        TypeSet::NoType => Value::Null,
        TypeSet::Types(s) => json!(s.iter().map(Term::to_string).collect::<Vec<_>>()),
    };
    let reductions: Vec<String> = reductions_of(&ctx, &term)
        .iter()
        .map(Term::to_string)
        .collect();
    Ok(Output::Record(vec![
        ("types", types),
        ("reductions", json!(reductions)),
        ("legal", json!(is_legal(&ctx, &term))),
    ]))
}

fn sample(file: &Path, sampling: &Sampling, fuel: usize) -> Outcome {
    let (ctx, term) = load_term(file)?;
    let n = sampling.samples.unwrap_or(10_000);
    let counts = sample_counts(&ctx, &term, n, sampling.seed, fuel)?;
    let mut text = String::new();
    let mut rows = Vec::new();
    for (t, c) in &counts {
        text.push_str(&format!("{c}\t{}\t{t}\n", *c as f64 / n as f64));
        rows.push(json!({ "expr": t.to_string(), "count": c }));
    }
    Ok(Output::Text(
        text,
        json!({ "value": rows, "n_samples": n, "seed": sampling.seed }),
    ))
}

fn write_tree(out: &mut String, node: &TreeNode, depth: usize, p: f64) {
    out.push_str(&format!("{}{p} {}\n", "  ".repeat(depth), node.expr));
    for edge in &node.children {
        write_tree(out, &edge.node, depth + 1, edge.probability);
    }
}

fn enumerate(file: &Path, fuel: usize, leaf_cap: usize) -> Outcome {
    let (ctx, term) = load_term(file)?;
    let tree = enumerate_tree(&ctx, &term, fuel, leaf_cap)?;
    let mut text = String::new();
    write_tree(&mut text, &tree.root, 0, 1.0);
    let json = serde_json::to_value(&tree).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(Output::Text(text, json))
}

fn judge(file: &Path, ty: &str, sampling: &Sampling, fuel: usize, leaf_cap: usize) -> Outcome {
    let (ctx, term) = load_term(file)?;
    let ty = parse_in(&ctx, ty)?;
    type_nf(&ty)?;
    match sampling.samples {
        None => Ok(value(judge_prob(
            &ctx,
            &term,
            &ty,
            JudgeMode::Exact { fuel, leaf_cap },
        )?)),
        Some(n) => {
            let p = judge_prob(
                &ctx,
                &term,
                &ty,
                JudgeMode::Sampled {
                    n_samples: n,
                    seed: sampling.seed,
                    fuel,
                },
            )?;
            Ok(Output::Record(vec![
                ("value", json!(p)),
                (
                    "stderr_estimate",
                    json!((p * (1.0 - p) / n.max(1) as f64).sqrt()),
                ),
                ("n_samples", json!(n)),
            ]))
        }
    }
}

fn load_mln(path: &Path) -> Result<Mln, Failure> {
    in_file(path, mln::parse_mln(&read(path)?))
}

fn load_dtn(path: &Path) -> Result<DtnSpec, Failure> {
    in_file(path, dtn::parse_dtn(&read(path)?))
}

fn mln_query(
    file: &Path,
    query: &str,
    evidence: Option<&str>,
    weights: Option<&[f64]>,
    cap: usize,
) -> Outcome {
    let mut m = load_mln(file)?;
    if let Some(ws) = weights {
        set_weights(file, m.formulas.len(), ws, "weights")?;
        for ((_, w), new) in m.formulas.iter_mut().zip(ws) {
            *w = *new;
        }
    }
    let n = mln::ground(&m)?;
    let evidence = evidence.map(formula).transpose()?;
    Ok(value(mln::query_prob(
        &n,
        &formula(query)?,
        evidence.as_ref(),
        cap,
    )?))
}

struct DtnQuery<'a> {
    query: &'a str,
    exact: bool,
    sampling: &'a Sampling,
    weights: Option<&'a [f64]>,
    probs: Option<&'a [f64]>,
    fuel: usize,
    cap: usize,
}

fn dtn_query(file: &Path, args: DtnQuery<'_>) -> Outcome {
    let mut spec = load_dtn(file)?;
    let n = spec.formulas.len();
    if let Some(ws) = args.weights {
        set_weights(file, n, ws, "weights")?;
        for (f, w) in spec.formulas.iter_mut().zip(ws) {
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Failure::Input(format!(
                    "weight {w} must be positive and finite"
                )));
            }
            f.p = -(-w).exp_m1();
        }
    }
    if let Some(ps) = args.probs {
        set_weights(file, n, ps, "probabilities")?;
        for (f, p) in spec.formulas.iter_mut().zip(ps) {
            if !(*p > 0.0 && *p < 1.0) {
                return Err(Failure::Input(format!("probability {p} is outside (0, 1)")));
            }
            f.p = *p;
        }
    }
    let q = formula(args.query)?;
    let exact = if args.exact || args.sampling.samples.is_none() {
        Some(dtn::query_exact(&spec, &q, args.cap)?)
    } else {
        None
    };
    let Some(n_samples) = args.sampling.samples else {
        return Ok(value(exact.expect("computed without samples")));
    };
    let r = dtn::query_sampled(&spec, &q, n_samples, args.sampling.seed, args.fuel)?;
    let mut fields = vec![
        ("value", json!(r.estimate)),
        ("stderr_estimate", json!(r.stderr)),
        ("n_samples", json!(r.n_samples)),
        ("n_rejected", json!(r.n_rejected)),
        (
            "rejection_rate",
            json!(r.n_rejected as f64 / r.n_samples as f64),
        ),
    ];
    if let Some(p) = exact {
        fields.push(("exact", json!(p)));
    }
    Ok(Output::Record(fields))
}

fn mln_table(m: &Mln) -> Result<pdts_logic::ground::WorldTable, LogicError> {
    mln::world_table(&mln::ground(m)?, mln::DEFAULT_WORLD_CAP)
}

fn dtn_table(d: &DtnSpec) -> Result<pdts_logic::ground::WorldTable, LogicError> {
    dtn::world_table(d, dtn::DEFAULT_ATOM_CAP)
}

fn mln2dtn(file: &Path, simplify: bool, report: bool) -> Outcome {
    let m = load_mln(file)?;
    let t = mln_to_dtn(&m, simplify)?;
    for f in &t.dropped {
        eprintln!("warning: dropped zero-weight formula {f}");
    }
    let mut text = dtn::to_text(&t.spec);
    if report {
        let r = verify_translation(&mln_table(&m)?, &dtn_table(&t.spec)?)?;
        text.push_str(&format!(
            "# max world-probability deviation: {}\n",
            r.max_deviation
        ));
    }
    Ok(Output::Text(
        text.clone(),
        json!({ "value": text, "dropped": t.dropped.len() }),
    ))
}

fn dtn2mln(file: &Path, report: bool) -> Outcome {
    let d = load_dtn(file)?;
    let m = dtn_to_mln(&d)?;
    let mut text = mln::to_text(&m);
    if report {
        let r = verify_translation(&dtn_table(&d)?, &mln_table(&m)?)?;
        text.push_str(&format!(
            "# max world-probability deviation: {}\n",
            r.max_deviation
        ));
    }
    Ok(Output::Text(text.clone(), json!({ "value": text })))
}

fn verify(file: &Path, simplify: bool) -> Outcome {
    let (forward, back) = match file.extension().and_then(|e| e.to_str()) {
        Some("mln") => {
            let m = load_mln(file)?;
            let d = mln_to_dtn(&m, simplify)?.spec;
            let src = mln_table(&m)?;
            let back = mln_table(&dtn_to_mln(&d)?)?;
            (
                verify_translation(&src, &dtn_table(&d)?)?,
                verify_translation(&src, &back)?,
            )
        }
        Some("dtn") => {
            let d = load_dtn(file)?;
            let m = dtn_to_mln(&d)?;
            let src = dtn_table(&d)?;
            let back = dtn_table(&mln_to_dtn(&m, simplify)?.spec)?;
            (
                verify_translation(&src, &mln_table(&m)?)?,
                verify_translation(&src, &back)?,
            )
        }
        _ => {
            return Err(Failure::Input(format!(
                "{}: expected a .mln or .dtn file",
                file.display()
            )))
        }
    };
    Ok(Output::Record(vec![
        ("value", json!(forward.max_deviation)),
        ("round_trip_deviation", json!(back.max_deviation)),
        ("atoms", json!(forward.atoms)),
    ]))
}

fn run(cmd: &Command) -> Outcome {
    match cmd {
        Command::Check { file } => check(file),
        Command::Norm { file, fuel } => norm(file, *fuel),
        Command::Types { file } => types(file),
        Command::Sample {
            file,
            sampling,
            fuel,
        } => sample(file, sampling, *fuel),
        Command::Enumerate {
            file,
            fuel,
            leaf_cap,
        } => enumerate(file, *fuel, *leaf_cap),
        Command::Judge {
            file,
            ty,
            exact: _,
            sampling,
            fuel,
            leaf_cap,
        } => judge(file, ty, sampling, *fuel, *leaf_cap),
        Command::MlnQuery {
            file,
            query,
            evidence,
            weights,
            cap,
        } => mln_query(file, query, evidence.as_deref(), weights.as_deref(), *cap),
        Command::DtnQuery {
            file,
            query,
            exact,
            sampling,
            weights,
            probs,
            fuel,
            cap,
        } => dtn_query(
            file,
            DtnQuery {
                query,
                exact: *exact,
                sampling,
                weights: weights.as_deref(),
                probs: probs.as_deref(),
                fuel: *fuel,
                cap: *cap,
            },
        ),
        Command::Mln2dtn {
            file,
            simplify,
            report,
        } => mln2dtn(file, *simplify, *report),
        Command::Dtn2mln { file, report } => dtn2mln(file, *report),
        Command::Verify { file, simplify } => verify(file, *simplify),
    }
}

fn render_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "NOTYPE".into(),
        Value::Array(xs) => xs.iter().map(render_text).collect::<Vec<_>>().join(", "),
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let start = Instant::now();
    let out = match run(&cli.command) {
        Ok(out) => out,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
        Err(Failure::Cap(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(3);
        }
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
    match out {
        Output::Record(mut fields) => {
            if cli.timing {
                fields.push(("elapsed_ms", json!(elapsed_ms)));
            }
            if cli.json {
                let map: Map<String, Value> = fields
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect();
                println!("{}", Value::Object(map));
            } else if let [("value", v)] = fields.as_slice() {
                println!("{}", render_text(v));
            } else {
                for (k, v) in &fields {
                    println!("{k}: {}", render_text(v));
                }
            }
        }
        Output::Text(text, json) => {
            if cli.json {
                let mut json = json;
                if let (true, Value::Object(map)) = (cli.timing, &mut json) {
                    map.insert("elapsed_ms".into(), json!(elapsed_ms));
                }
                println!("{json}");
            } else {
                print!("{text}");
            }
        }
    }
    ExitCode::SUCCESS
}
