use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::syntax::{canonical, Context, Term};

use super::step::step_rho;
use super::{KahanSum, ProbError};

/// Every weighted reduction path of an expression. Leaves are normal
/// forms of the deterministic system.
#[derive(Clone, Debug, Serialize)]
pub struct ReductionTree {
    pub root: TreeNode,
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub expr: Term,
    pub children: Vec<TreeEdge>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeEdge {
    pub probability: f64,
    pub node: TreeNode,
}

impl Serialize for TreeNode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TreeNode", 2)?;
        st.serialize_field("expr", &self.expr.to_string())?;
        st.serialize_field("children", &self.children)?;
        st.end()
    }
}

/// Builds the full reduction tree. `fuel` bounds the depth of each path and
/// `leaf_cap` the number of leaves.
pub fn enumerate_tree(
    ctx: &Context,
    e: &Term,
    fuel: usize,
    leaf_cap: usize,
) -> Result<ReductionTree, ProbError> {
    let mut leaves = 0;
    Ok(ReductionTree {
        root: build(ctx, e, fuel, leaf_cap, &mut leaves)?,
    })
}

fn build(
    ctx: &Context,
    e: &Term,
    fuel: usize,
    cap: usize,
    leaves: &mut usize,
) -> Result<TreeNode, ProbError> {
    // Deterministic chains are followed iteratively; recursion happens only
    // at branch points.
    let mut chain = Vec::new();
    let mut cur = e.clone();
    let mut fuel_left = fuel;
    let bottom = loop {
        let steps = step_rho(ctx, &cur)?;
        if steps.is_empty() {
            *leaves += 1;
            if *leaves > cap {
                return Err(ProbError::LeafCapExceeded(cap));
            }
            break TreeNode {
                expr: cur,
                children: vec![],
            };
        }
        if fuel_left == 0 {
            return Err(ProbError::FuelExhausted(fuel));
        }
        fuel_left -= 1;
        if steps.len() == 1 {
            let next = steps[0].result.clone();
            chain.push(std::mem::replace(&mut cur, next));
            continue;
        }
        let mut children = Vec::with_capacity(steps.len());
        for s in steps {
            let node = build(ctx, &s.result, fuel_left, cap, leaves).map_err(|err| match err {
                ProbError::FuelExhausted(_) => ProbError::FuelExhausted(fuel),
                other => other,
            })?;
            children.push(TreeEdge {
                probability: s.probability,
                node,
            });
        }
        break TreeNode {
            expr: cur,
            children,
        };
    };
    Ok(chain.into_iter().rev().fold(bottom, |node, expr| TreeNode {
        expr,
        children: vec![TreeEdge {
            probability: 1.0,
            node,
        }],
    }))
}

impl ReductionTree {
    /// Leaves with their path probabilities, left to right.
    pub fn leaves(&self) -> Vec<(Term, f64)> {
        let mut out = Vec::new();
        let mut stack = vec![(&self.root, 1.0)];
        while let Some((node, p)) = stack.pop() {
            if node.children.is_empty() {
                out.push((node.expr.clone(), p));
            }
            for edge in node.children.iter().rev() {
                stack.push((&edge.node, p * edge.probability));
            }
        }
        out
    }

    /// Total probability per distinct normal form (up to alpha-equivalence),
    /// in order of first appearance.
    pub fn distribution(&self) -> Vec<(Term, f64)> {
        let mut groups: Vec<(Term, Term, KahanSum)> = Vec::new();
        for (t, p) in self.leaves() {
            let key = canonical(&t);
            match groups.iter_mut().find(|(k, _, _)| *k == key) {
                Some(g) => g.2.add(p),
                None => {
                    let mut s = KahanSum::default();
                    s.add(p);
                    groups.push((key, t, s));
                }
            }
        }
        groups.into_iter().map(|(_, t, s)| (t, s.total())).collect()
    }

    pub fn total_probability(&self) -> f64 {
        let mut s = KahanSum::default();
        for (_, p) in self.leaves() {
            s.add(p);
        }
        s.total()
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            n += 1;
            stack.extend(node.children.iter().map(|e| &e.node));
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::*;

    fn dist(src: &str) -> Vec<(Term, f64)> {
        enumerate_tree(&Context::new(), &parse(src).unwrap(), 1000, 1000)
            .unwrap()
            .distribution()
    }

    #[test]
    fn single_coin() {
        let d = dist("random[0.3](\\x:Bool. x)");
        assert_eq!(d.len(), 2);
        assert_eq!(d[0], (tt(), 0.3));
        assert!((d[1].1 - 0.7).abs() < 1e-15 && d[1].0 == ff());
    }

    #[test]
    fn deterministic_term() {
        let d = dist("(\\x:Bool. if x then false else true) true");
        assert_eq!(d, vec![(ff(), 1.0)]);
    }

    #[test]
    fn coin_into_dispatch() {
        let d = dist(
            "case y { Bool => y; Unit => false; }(random[0.5](\\b:Bool. if b then true else 1))",
        );
        // Both branches end in distinct leaves of weight one half.
        let tree = enumerate_tree(
            &Context::new(),
            &parse("case y { Bool => true; Unit => false; }(random[0.5](\\b:Bool. if b then true else 1))")
                .unwrap(),
            1000,
            1000,
        )
        .unwrap();
        assert_eq!(tree.leaves().len(), 2);
        assert!(tree.leaves().iter().all(|(_, p)| *p == 0.5));
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn leaf_cap() {
        let e = parse("(\\a:Bool. \\b:Bool. pair(a, b) : Bool * Bool) (random[0.5](\\x:Bool. x)) (random[0.5](\\x:Bool. x))")
            .unwrap();
        assert!(matches!(
            enumerate_tree(&Context::new(), &e, 1000, 3),
            Err(ProbError::LeafCapExceeded(3))
        ));
        let t = enumerate_tree(&Context::new(), &e, 1000, 4).unwrap();
        assert!((t.total_probability() - 1.0).abs() < 1e-12);
    }
}
