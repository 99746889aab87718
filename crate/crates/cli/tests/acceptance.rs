//! Acceptance suite. Prints one PASS or FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use pdts_core::corpus::{corpus_context, legal_corpus, Generator};
use pdts_core::kernel::{beta_equiv, infer_type, type_nf, TYPE_FUEL};
use pdts_core::prob::{
    enumerate_tree, reductions_of, step_rho, type_distribution, types_of, KahanSum, ReductionTree,
    TreeNode, TypeSet, DEFAULT_LEAF_CAP,
};
use pdts_core::syntax::{canonical, Context, ExprSet, Term};
use pdts_logic::bridge::universal_mln;
use pdts_logic::{dtn, mln};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

const FUEL: usize = 10_000;
const CORPUS_HEADER: &str =
    "assume A : *;\nassume c : A;\nassume d : A;\nassume f : A -> A;\nassume P : A -> *;\nassume p : P c;\n";

type Verdict = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn data(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(file)
}

struct Run {
    stdout: String,
    elapsed: Duration,
}

fn pdts(args: &[&str]) -> Result<Run, String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_pdts"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "pdts {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(Run {
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        elapsed,
    })
}

fn record(args: &[&str]) -> Result<(HashMap<String, Value>, Duration), String> {
    let mut full = args.to_vec();
    full.push("--json");
    let run = pdts(&full)?;
    let map = serde_json::from_str(&run.stdout)
        .map_err(|e| format!("bad record {:?}: {e}", run.stdout))?;
    Ok((map, run.elapsed))
}

fn field(r: &HashMap<String, Value>, key: &str) -> Result<f64, String> {
    r.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| format!("record has no numeric `{key}`"))
}

fn first_example_closed_form(w1: f64, w2: f64) -> f64 {
    let (a, b) = (w1.exp(), w2.exp());
    a * (1.0 + b) / (a * (2.0 + b) + b)
}

fn second_example_closed_form(w: f64) -> f64 {
    let a = w.exp();
    a * (2.0 + a) / (a * (2.0 + a) + 1.0)
}

const GRID: [f64; 3] = [0.5, 1.0, 2.0];

fn criterion_1() -> Verdict {
    let file = data("ex1.mln");
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for w1 in GRID {
        for w2 in GRID {
            let ws = format!("{w1},{w2}");
            let (r, t) = record(&[
                "mln-query",
                file.to_str().unwrap(),
                "--query",
                "B(c1)",
                "--weights",
                &ws,
            ])?;
            worst = worst.max((field(&r, "value")? - first_example_closed_form(w1, w2)).abs());
            slowest = slowest.max(t);
        }
    }
    check(
        worst <= 1e-9 && slowest < Duration::from_secs(1),
        format!("max error {worst:e}, slowest run {slowest:?}"),
    )
}

fn criterion_2() -> Verdict {
    let file = data("ex2.mln");
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for w in GRID {
        let ws = w.to_string();
        let (r, t) = record(&[
            "mln-query",
            file.to_str().unwrap(),
            "--query",
            "exists x. A(x)",
            "--weights",
            &ws,
        ])?;
        worst = worst.max((field(&r, "value")? - second_example_closed_form(w)).abs());
        slowest = slowest.max(t);
    }
    check(
        worst <= 1e-9 && slowest < Duration::from_secs(1),
        format!("max error {worst:e}, slowest run {slowest:?}"),
    )
}

fn criterion_3() -> Verdict {
    let (ex1, ex2) = (data("ex1.dtn"), data("ex2.dtn"));
    let mut worst: f64 = 0.0;
    for w1 in GRID {
        for w2 in GRID {
            let ws = format!("{w1},{w2}");
            let (r, _) = record(&[
                "dtn-query",
                ex1.to_str().unwrap(),
                "--query",
                "B2(c1)",
                "--exact",
                "--weights",
                &ws,
            ])?;
            worst = worst.max((field(&r, "value")? - first_example_closed_form(w1, w2)).abs());
        }
        let ws = format!("{w1},{w1}");
        let (r, _) = record(&[
            "dtn-query",
            ex2.to_str().unwrap(),
            "--query",
            "exists x. B1(x)",
            "--exact",
            "--weights",
            &ws,
        ])?;
        worst = worst.max((field(&r, "value")? - second_example_closed_form(w1)).abs());
    }
    check(
        worst <= 1e-9,
        format!("max error {worst:e} over 12 queries"),
    )
}

fn criterion_4() -> Verdict {
    let ex1 = data("ex1.dtn");
    let ln2 = std::f64::consts::LN_2.to_string();
    let ws = format!("{ln2},{ln2}");
    let (r, t) = record(&[
        "dtn-query",
        ex1.to_str().unwrap(),
        "--query",
        "B2(c1)",
        "--samples",
        "200000",
        "--seed",
        "7",
        "--weights",
        &ws,
    ])?;
    let v = field(&r, "value")?;
    check(
        (v - 0.6).abs() <= 0.01 && t < Duration::from_secs(60),
        format!("estimate {v}, runtime {t:?}"),
    )
}

fn random_atom_formula(rng: &mut ChaCha8Rng, atoms: &[String], depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.3) {
        let a = &atoms[rng.random_range(0..atoms.len())];
        return if rng.random_bool(0.3) {
            format!("~{a}")
        } else {
            a.clone()
        };
    }
    let l = random_atom_formula(rng, atoms, depth - 1);
    let r = random_atom_formula(rng, atoms, depth - 1);
    match rng.random_range(0..4) {
        0 => format!("({l} & {r})"),
        1 => format!("({l} | {r})"),
        2 => format!("({l} -> {r})"),
        _ => format!("~({l} & {r})"),
    }
}

// Either up to three unary predicates over c1, or one predicate over up to
// three constants with quantified formulas.
fn random_mln(rng: &mut ChaCha8Rng) -> String {
    let mut text = String::new();
    let n_formulas = rng.random_range(1..=4);
    let weight = |rng: &mut ChaCha8Rng| {
        let w: f64 = rng.random_range(0.1..3.0);
        if rng.random_bool(0.5) {
            w
        } else {
            -w
        }
    };
    if rng.random_bool(0.6) {
        let n_preds = rng.random_range(1..=3);
        let atoms: Vec<String> = (1..=n_preds).map(|i| format!("P{i}(c1)")).collect();
        for i in 1..=n_preds {
            text.push_str(&format!("predicate P{i}/1\n"));
        }
        text.push_str("constant c1\n");
        for _ in 0..n_formulas {
            let w = weight(rng);
            text.push_str(&format!("{w} :: {}\n", random_atom_formula(rng, &atoms, 2)));
        }
    } else {
        let n_consts = rng.random_range(1..=3);
        text.push_str("predicate S/1\n");
        let consts: Vec<String> = (1..=n_consts).map(|i| format!("c{i}")).collect();
        text.push_str(&format!("constant {}\n", consts.join(" ")));
        let shapes = [
            "S(x)",
            "~S(x)",
            "exists x. S(x)",
            "forall x. S(x)",
            "S(c1) -> forall x. S(x)",
            "S(x) | S(c1)",
        ];
        for _ in 0..n_formulas {
            let w = weight(rng);
            text.push_str(&format!(
                "{w} :: {}\n",
                shapes[rng.random_range(0..shapes.len())]
            ));
        }
    }
    text
}

fn criterion_5(dir: &Path) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let path = dir.join(format!("random{i}.mln"));
        fs::write(&path, random_mln(&mut rng)).map_err(|e| e.to_string())?;
        let mut args = vec!["verify", path.to_str().unwrap()];
        if i % 2 == 1 {
            args.push("--simplify");
        }
        let (r, _) = record(&args)?;
        worst = worst
            .max(field(&r, "value")?)
            .max(field(&r, "round_trip_deviation")?);
    }
    check(
        worst <= 1e-9,
        format!("200 networks, max world-probability deviation {worst:e}"),
    )
}

fn nodes_with_weight(tree: &ReductionTree) -> Vec<(&TreeNode, f64)> {
    let mut out = Vec::new();
    let mut stack = vec![(&tree.root, 1.0)];
    while let Some((n, p)) = stack.pop() {
        out.push((n, p));
        for edge in &n.children {
            stack.push((&edge.node, p * edge.probability));
        }
    }
    out
}

fn types_set(ctx: &Context, e: &Term) -> Result<ExprSet, String> {
    match types_of(ctx, e) {
        TypeSet::Types(s) if !s.is_empty() => Ok(s),
        _ => Err(format!("{e} has no type")),
    }
}

fn type_system_properties(ctx: &Context, e: &Term) -> Result<usize, String> {
    let tree =
        enumerate_tree(ctx, e, FUEL, DEFAULT_LEAF_CAP).map_err(|err| format!("{e}: {err}"))?;
    let mut det_steps = 0;
    let mut agg: HashMap<String, KahanSum> = HashMap::new();
    for (node, p) in nodes_with_weight(&tree) {
        let e = &node.expr;
        agg.entry(canonical(e).to_string()).or_default().add(p);
        let steps = step_rho(ctx, e).map_err(|err| err.to_string())?;
        if steps.len() != node.children.len() {
            return Err(format!("{e}: tree and step relation disagree"));
        }
        if steps.is_empty() {
            continue;
        }
        // (c) progress
        let total: f64 = steps.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("(c) weights of {e} sum to {total}"));
        }
        // (a) preservation on deterministic steps
        if e.is_deterministic() {
            det_steps += 1;
            let t0 = infer_type(ctx, e).map_err(|err| format!("(a) {e}: {err}"))?;
            let t1 = infer_type(ctx, &steps[0].result)
                .map_err(|err| format!("(a) {} lost its type: {err}", steps[0].result))?;
            if !beta_equiv(&t0, &t1, TYPE_FUEL).map_err(|err| err.to_string())? {
                return Err(format!("(a) {t0} vs {t1} after {e}"));
            }
        }
        // (b) weak preservation
        let (types, reds) = (types_set(ctx, e)?, reductions_of(ctx, e));
        for s in &steps {
            let t = types_set(ctx, &s.result)?;
            let r = reductions_of(ctx, &s.result);
            if r.is_empty() || !t.is_subset(&types) || !r.is_subset(&reds) {
                return Err(format!("(b) sets grew or vanished: {e} -> {}", s.result));
            }
        }
    }
    // (d) aggregated path weight
    if let Some((e, s)) = agg.iter().find(|(_, s)| s.total() > 1.0 + 1e-12) {
        return Err(format!("(d) {e} reached with weight {}", s.total()));
    }
    // (e) leaves and their types agree with REDUCTIONS and TYPES
    let mut leaves = ExprSet::new();
    let mut leaf_types = ExprSet::new();
    for (leaf, _) in tree.leaves() {
        let ty = infer_type(ctx, &leaf)
            .and_then(|t| type_nf(&t))
            .map_err(|err| format!("(e) {leaf}: {err}"))?;
        leaf_types.insert(ty);
        leaves.insert(leaf);
    }
    if !leaves.same_elements(&reductions_of(ctx, e))
        || !leaf_types.same_elements(&types_set(ctx, e)?)
    {
        return Err(format!(
            "(e) leaves of {e} disagree with REDUCTIONS or TYPES"
        ));
    }
    Ok(det_steps)
}

fn criterion_6(dir: &Path) -> Verdict {
    let ctx = corpus_context();
    let corpus = legal_corpus(6, 500);
    let mut det_steps = 0;
    for e in &corpus {
        det_steps += type_system_properties(&ctx, e)?;
    }
    // (f) sampled against exact judgments through the CLI
    let mut g = Generator::new(66);
    let n = 100_000;
    let mut worst_sigmas: f64 = 0.0;
    let mut judged = 0;
    while judged < 20 {
        let e = g.legal_prob(2);
        let dist =
            type_distribution(&ctx, &e, FUEL, DEFAULT_LEAF_CAP).map_err(|err| err.to_string())?;
        if dist.len() < 2 {
            continue;
        }
        let ty = dist[0].0.to_string();
        let path = dir.join(format!("judge{judged}.lpr"));
        fs::write(&path, format!("{CORPUS_HEADER}{e}\n")).map_err(|err| err.to_string())?;
        let file = path.to_str().unwrap();
        let (exact, _) = record(&["judge", file, "--type", &ty])?;
        let seed = (100 + judged).to_string();
        let (sampled, _) = record(&[
            "judge",
            file,
            "--type",
            &ty,
            "--samples",
            "100000",
            "--seed",
            &seed,
        ])?;
        let p = field(&exact, "value")?;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let dev = (field(&sampled, "value")? - p).abs() / sigma;
        if dev > 4.0 {
            return Err(format!(
                "(f) {e} : {ty} sampled {dev:.2} sigma from exact {p}"
            ));
        }
        worst_sigmas = worst_sigmas.max(dev);
        judged += 1;
    }
    check(
        true,
        format!(
            "{} legal expressions, {det_steps} deterministic steps, 20 judgments within {worst_sigmas:.2} sigma",
            corpus.len()
        ),
    )
}

fn criterion_7(dir: &Path) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let raw: Vec<f64> = (0..8).map(|_| rng.random_range(0.01..1.0)).collect();
        let z: f64 = raw.iter().sum();
        let target: Vec<f64> = raw.iter().map(|x| x / z).collect();
        let m = universal_mln(&target).map_err(|e| e.to_string())?;
        let path = dir.join(format!("universal{i}.mln"));
        fs::write(&path, mln::to_text(&m)).map_err(|e| e.to_string())?;
        let text = pdts(&["mln2dtn", path.to_str().unwrap()])?.stdout;
        let spec = dtn::parse_dtn(&text).map_err(|e| e.to_string())?;
        let table = dtn::world_table(&spec, dtn::DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?;
        // Atom order in the translated spec is the order of the universal
        // network, X1(c1) first; the first atom is the most significant bit.
        let expected: Vec<String> = (1..=3).map(|k| format!("X{k}(c1)")).collect();
        if table.atoms != expected {
            return Err(format!("unexpected atoms {:?}", table.atoms));
        }
        for (p, t) in table.probs.iter().zip(&target) {
            worst = worst.max((p - t).abs());
        }
    }
    check(
        worst <= 1e-6,
        format!("50 distributions, max error {worst:e}"),
    )
}

fn criterion_8() -> Verdict {
    let (ex1, mix) = (data("ex1.dtn"), data("mix.lpr"));
    let (ex1, mix) = (ex1.to_str().unwrap(), mix.to_str().unwrap());
    let commands: [&[&str]; 3] = [
        &[
            "dtn-query",
            ex1,
            "--query",
            "B2(c1)",
            "--samples",
            "20000",
            "--seed",
            "11",
            "--json",
        ],
        &[
            "judge",
            mix,
            "--type",
            "Bool",
            "--samples",
            "20000",
            "--seed",
            "11",
            "--json",
        ],
        &[
            "sample",
            mix,
            "--samples",
            "20000",
            "--seed",
            "11",
            "--json",
        ],
    ];
    for args in commands {
        let a = pdts(args)?.stdout;
        let b = pdts(args)?.stdout;
        if a != b {
            return Err(format!("pdts {} differs between runs", args.join(" ")));
        }
    }
    check(true, "3 sampling commands, byte-identical output".into())
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let dir = TempDir::new().expect("temporary directory");
    let criteria: Vec<Criterion> = vec![
        (
            "1 closed form of the first MLN example",
            Box::new(criterion_1),
        ),
        (
            "2 closed form of the second MLN example",
            Box::new(criterion_2),
        ),
        (
            "3 exact DTN queries agree with the MLN",
            Box::new(criterion_3),
        ),
        ("4 sampled DTN query at w = ln 2", Box::new(criterion_4)),
        (
            "5 MLN/DTN translations preserve world tables",
            Box::new(|| criterion_5(dir.path())),
        ),
        (
            "6 type-system property suite",
            Box::new(|| criterion_6(dir.path())),
        ),
        (
            "7 universality over three atoms",
            Box::new(|| criterion_7(dir.path())),
        ),
        ("8 deterministic sampling output", Box::new(criterion_8)),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
