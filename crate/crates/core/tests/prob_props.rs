use std::collections::HashMap;

use pdts_core::corpus::{corpus_context, legal_corpus, Generator};
use pdts_core::kernel::{infer_type, step_beta, type_nf};
use pdts_core::prob::*;
use pdts_core::syntax::*;
use proptest::prelude::*;

const FUEL: usize = 10_000;

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

fn types_set(ctx: &Context, e: &Term) -> ExprSet {
    match types_of(ctx, e) {
        TypeSet::Types(s) => s,
        TypeSet::NoType => panic!("{e} has no type"),
    }
}

fn check_steps(ctx: &Context, tree: &ReductionTree) -> Result<(), TestCaseError> {
    for (node, _) in nodes_with_weight(tree) {
        let e = &node.expr;
        let steps = step_rho(ctx, e).unwrap();
        prop_assert_eq!(steps.len(), node.children.len());
        if steps.is_empty() {
            prop_assert!(
                e.is_deterministic() && step_beta(e).is_none(),
                "leaf {} is not normal",
                e
            );
            continue;
        }
        let total: f64 = steps.iter().map(|s| s.probability).sum();
        prop_assert!(
            (total - 1.0).abs() <= 1e-12,
            "weights of {} sum to {}",
            e,
            total
        );
        let (types, reds) = (types_set(ctx, e), reductions_of(ctx, e));
        prop_assert!(!types.is_empty() && !reds.is_empty());
        for s in &steps {
            let t = types_set(ctx, &s.result);
            let r = reductions_of(ctx, &s.result);
            prop_assert!(
                !t.is_empty() && !r.is_empty(),
                "empty sets after {} -> {}",
                e,
                s.result
            );
            prop_assert!(t.is_subset(&types), "types grew: {} -> {}", e, s.result);
            prop_assert!(r.is_subset(&reds), "reductions grew: {} -> {}", e, s.result);
        }
    }
    Ok(())
}

fn check_path_weights(tree: &ReductionTree) -> Result<(), TestCaseError> {
    let mut agg: HashMap<String, KahanSum> = HashMap::new();
    for (node, p) in nodes_with_weight(tree) {
        agg.entry(canonical(&node.expr).to_string())
            .or_default()
            .add(p);
    }
    for (e, s) in agg {
        prop_assert!(
            s.total() <= 1.0 + 1e-12,
            "{} reached with weight {}",
            e,
            s.total()
        );
    }
    Ok(())
}

fn check_oracle_agreement(
    ctx: &Context,
    e: &Term,
    tree: &ReductionTree,
) -> Result<(), TestCaseError> {
    let mut leaves = ExprSet::new();
    let mut leaf_types = ExprSet::new();
    for (leaf, _) in tree.leaves() {
        leaf_types.insert(type_nf(&infer_type(ctx, &leaf).unwrap()).unwrap());
        leaves.insert(leaf);
    }
    let reds = reductions_of(ctx, e);
    prop_assert!(
        leaves.same_elements(&reds),
        "{}: leaves {:?} vs reductions {:?}",
        e,
        leaves,
        reds
    );
    let types = types_set(ctx, e);
    prop_assert!(
        leaf_types.same_elements(&types),
        "{}: leaf types {:?} vs types {:?}",
        e,
        leaf_types,
        types
    );
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tree_properties(seed in any::<u64>(), depth in 1usize..=3) {
        let ctx = corpus_context();
        let e = Generator::new(seed).legal_prob(depth);
        let tree = enumerate_tree(&ctx, &e, FUEL, DEFAULT_LEAF_CAP).unwrap();
        prop_assert!((tree.total_probability() - 1.0).abs() <= 1e-12);
        check_steps(&ctx, &tree)?;
        check_path_weights(&tree)?;
        check_oracle_agreement(&ctx, &e, &tree)?;
    }

    #[test]
    fn type_distribution_matches_types(seed in any::<u64>()) {
        let ctx = corpus_context();
        let e = Generator::new(seed).legal_prob(2);
        let dist = type_distribution(&ctx, &e, FUEL, DEFAULT_LEAF_CAP).unwrap();
        let total: f64 = dist.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let support: ExprSet = {
            let mut s = ExprSet::new();
            for (t, _) in &dist { s.insert(t.clone()); }
            s
        };
        prop_assert!(support.same_elements(&types_set(&ctx, &e)));
    }
}

#[test]
fn legal_corpus_tree_properties() {
    let ctx = corpus_context();
    let mut runner = proptest::test_runner::TestRunner::default();
    for e in legal_corpus(3, 200) {
        let tree = enumerate_tree(&ctx, &e, FUEL, DEFAULT_LEAF_CAP).unwrap();
        runner
            .run(&Just(()), |_| {
                check_steps(&ctx, &tree)?;
                check_path_weights(&tree)?;
                check_oracle_agreement(&ctx, &e, &tree)
            })
            .unwrap();
    }
}

fn branching_terms(count: usize) -> Vec<Term> {
    let ctx = corpus_context();
    let mut g = Generator::new(99);
    let mut out = Vec::new();
    while out.len() < count {
        let e = g.legal_prob(2);
        let tree = enumerate_tree(&ctx, &e, FUEL, DEFAULT_LEAF_CAP).unwrap();
        if tree.distribution().len() >= 2 {
            out.push(e);
        }
    }
    out
}

#[test]
fn sampled_frequencies_match_tree() {
    let ctx = corpus_context();
    let n = 100_000;
    for (i, e) in branching_terms(4).into_iter().enumerate() {
        let exact = enumerate_tree(&ctx, &e, FUEL, DEFAULT_LEAF_CAP)
            .unwrap()
            .distribution();
        let counts = sample_counts(&ctx, &e, n, 1000 + i as u64, FUEL).unwrap();
        for (leaf, _) in &counts {
            assert!(
                exact.iter().any(|(t, _)| alpha_eq(t, leaf)),
                "{e}: sampled {leaf} is not a leaf"
            );
        }
        for (leaf, p) in exact {
            let c = counts
                .iter()
                .find(|(t, _)| alpha_eq(t, &leaf))
                .map_or(0, |(_, c)| *c);
            let freq = c as f64 / n as f64;
            let band = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (freq - p).abs() <= band,
                "{e}: {leaf} sampled {freq}, exact {p}"
            );
        }
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let ctx = corpus_context();
    for e in branching_terms(3) {
        let a = sample_many(&ctx, &e, 5000, 17, FUEL).unwrap();
        let b = sample_many(&ctx, &e, 5000, 17, FUEL).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| alpha_eq(x, y)));
        let (one, _) = sample_reduce(&ctx, &e, 5, FUEL).unwrap();
        let (two, _) = sample_reduce(&ctx, &e, 5, FUEL).unwrap();
        assert!(alpha_eq(&one, &two));
    }
}

fn random_nodes(e: &Term, out: &mut Vec<usize>) {
    if let Expr::Random { .. } = &**e {
        out.push(std::sync::Arc::as_ptr(e) as usize);
    }
    match &**e {
        Expr::Const(_) | Expr::Sort(_) | Expr::Var(_) => {}
        Expr::Pair { left, right, tag } => {
            [left, right, tag].iter().for_each(|t| random_nodes(t, out))
        }
        Expr::App(f, a) => {
            random_nodes(f, out);
            random_nodes(a, out);
        }
        Expr::Lam { domain, body, .. }
        | Expr::Pi { domain, body, .. }
        | Expr::Sigma { domain, body, .. } => {
            random_nodes(domain, out);
            random_nodes(body, out);
        }
        Expr::If {
            cond,
            then_branch,
            else_branch,
        } => [cond, then_branch, else_branch]
            .iter()
            .for_each(|t| random_nodes(t, out)),
        Expr::Proj(_, t) => random_nodes(t, out),
        Expr::Random { target, .. } => random_nodes(target, out),
        Expr::Dispatch { cases, arg, .. } => {
            for c in cases.iter() {
                random_nodes(&c.ty, out);
                random_nodes(&c.body, out);
            }
            random_nodes(arg, out);
        }
    }
}

// A random step may only keep random nodes that already existed, each at
// most as often as before, minus the contracted one; other steps never add
// random nodes. So no source node is contracted twice.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_nodes_are_never_duplicated(seed in any::<u64>(), run in any::<u64>()) {
        let ctx = corpus_context();
        let e = Generator::new(seed).legal_prob(3);
        let mut initial = Vec::new();
        random_nodes(&e, &mut initial);
        let mut contractions = 0;
        let mut violation = None;
        Sampler::new(&ctx)
            .run_traced(&e, &mut batch_rng(run, 0), FUEL, |node, chosen| {
                let mut before = Vec::new();
                random_nodes(node, &mut before);
                let mut after = Vec::new();
                random_nodes(&chosen.result, &mut after);
                if let Some((pos, RedexKind::Random)) = select_redex(node) {
                    contractions += 1;
                    let gone = std::sync::Arc::as_ptr(subterm_at(node, &pos)) as usize;
                    let i = before.iter().position(|p| *p == gone).unwrap();
                    before.swap_remove(i);
                    for p in &after {
                        match before.iter().position(|q| q == p) {
                            Some(i) => { before.swap_remove(i); }
                            None => violation = Some(format!("{node} -> {}", chosen.result)),
                        }
                    }
                } else if after.len() > before.len() {
                    violation = Some(format!("{node} -> {}", chosen.result));
                }
            })
            .unwrap();
        prop_assert!(violation.is_none(), "{:?}", violation);
        prop_assert!(contractions <= initial.len());
    }
}
