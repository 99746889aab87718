//! Seeded generator of well-typed deterministic expressions and legal
//! probabilistic expressions, for property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::prob::is_legal;
use crate::syntax::*;

/// Types the generator knows how to inhabit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Unit,
    /// The declared base type `A`.
    A,
    /// The proposition `P c`.
    Pc,
    BoolUnit,
    BoolFn,
    /// `Pi x:Bool. if x then Bool else Unit`
    Dep,
    /// `Sigma x:Bool. if x then Bool else Unit`
    DepSum,
}

const TERM_TYPES: [Ty; 8] = [
    Ty::Bool,
    Ty::Unit,
    Ty::A,
    Ty::Pc,
    Ty::BoolUnit,
    Ty::BoolFn,
    Ty::Dep,
    Ty::DepSum,
];

impl Ty {
    pub fn term(self) -> Term {
        let dep_body = || if_then_else(var("x"), bool_ty(), unit_ty());
        match self {
            Ty::Bool => bool_ty(),
            Ty::Unit => unit_ty(),
            Ty::A => var("A"),
            Ty::Pc => app(var("P"), var("c")),
            Ty::BoolUnit => product(bool_ty(), unit_ty()),
            Ty::BoolFn => arrow(bool_ty(), bool_ty()),
            Ty::Dep => pi("x", bool_ty(), dep_body()),
            Ty::DepSum => sigma("x", bool_ty(), dep_body()),
        }
    }
}

/// The context every corpus expression is typed in:
/// `A : *, c : A, d : A, f : A -> A, P : A -> *, p : P c`.
pub fn corpus_context() -> Context {
    let mut ctx = Context::new();
    for (n, t) in [
        ("A", star()),
        ("c", var("A")),
        ("d", var("A")),
        ("f", arrow(var("A"), var("A"))),
        ("P", arrow(var("A"), star())),
        ("p", app(var("P"), var("c"))),
    ] {
        ctx.push(name(n), t).expect("distinct names");
    }
    ctx
}

pub struct Generator {
    rng: ChaCha8Rng,
    counter: usize,
}

impl Generator {
    pub fn new(seed: u64) -> Generator {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            counter: 0,
        }
    }

    fn fresh(&mut self, stem: &str) -> String {
        self.counter += 1;
        format!("{stem}{}", self.counter)
    }

    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        xs[self.rng.random_range(0..xs.len())]
    }

    fn coin(&mut self) -> bool {
        self.rng.random()
    }

    fn rho(&mut self) -> f64 {
        let quarters = [0.1, 0.25, 0.3, 0.5, 0.7, 0.9];
        self.pick(&quarters)
    }

    fn bool_const(&mut self) -> Term {
        if self.coin() {
            tt()
        } else {
            ff()
        }
    }

    /// A deterministic term of type `ty`. `env` lists bound variables in
    /// scope with their types.
    pub fn det(&mut self, ty: Ty, depth: usize, env: &[(String, Ty)]) -> Term {
        let vars: Vec<&String> = env
            .iter()
            .filter(|(_, t)| *t == ty)
            .map(|(n, _)| n)
            .collect();
        if depth == 0 || self.rng.random_range(0..4) == 0 {
            if !vars.is_empty() && self.coin() {
                return var(vars[self.rng.random_range(0..vars.len())]);
            }
            return self.leaf(ty, env);
        }
        let d = depth - 1;
        match self.rng.random_range(0..4) {
            0 => {
                let c = self.det(Ty::Bool, d, env);
                if_then_else(c, self.det(ty, d, env), self.det(ty, d, env))
            }
            1 => {
                let arg_ty = self.pick(&[Ty::Bool, Ty::Unit, Ty::A]);
                let z = self.fresh("z");
                let mut inner = env.to_vec();
                inner.push((z.clone(), arg_ty));
                let body = self.det(ty, d, &inner);
                app(lam(&z, arg_ty.term(), body), self.det(arg_ty, d, env))
            }
            _ => self.shaped(ty, d, env),
        }
    }

    fn leaf(&mut self, ty: Ty, env: &[(String, Ty)]) -> Term {
        match ty {
            Ty::Bool => self.bool_const(),
            Ty::Unit => one(),
            Ty::A => var(self.pick(&["c", "d"])),
            Ty::Pc => var("p"),
            Ty::BoolUnit => pair(self.bool_const(), one(), ty.term()),
            Ty::BoolFn => {
                let z = self.fresh("z");
                let body = if self.coin() {
                    var(&z)
                } else {
                    self.bool_const()
                };
                lam(&z, bool_ty(), body)
            }
            Ty::Dep => {
                let x = self.fresh("x");
                let b = self.det(Ty::Bool, 0, env);
                lam(&x, bool_ty(), if_then_else(var(&x), b, one()))
            }
            Ty::DepSum => {
                if self.coin() {
                    pair(tt(), self.bool_const(), ty.term())
                } else {
                    pair(ff(), one(), ty.term())
                }
            }
        }
    }

    // Constructions specific to the target type.
    fn shaped(&mut self, ty: Ty, d: usize, env: &[(String, Ty)]) -> Term {
        match ty {
            Ty::Bool => match self.rng.random_range(0..4) {
                0 => app(self.det(Ty::BoolFn, d, env), self.det(Ty::Bool, d, env)),
                1 => proj(Side::First, self.det(Ty::BoolUnit, d, env)),
                2 => app(self.det(Ty::Dep, d, env), tt()),
                _ => proj(
                    Side::Second,
                    pair(tt(), self.bool_const(), Ty::DepSum.term()),
                ),
            },
            Ty::Unit => match self.rng.random_range(0..3) {
                0 => proj(Side::Second, self.det(Ty::BoolUnit, d, env)),
                1 => app(self.det(Ty::Dep, d, env), ff()),
                _ => one(),
            },
            Ty::A => app(var("f"), self.det(Ty::A, d, env)),
            Ty::Pc => {
                let z = self.fresh("z");
                app(lam(&z, var("A"), var("p")), self.det(Ty::A, d, env))
            }
            Ty::BoolFn | Ty::Dep => {
                let x = self.fresh("x");
                let mut inner = env.to_vec();
                inner.push((x.clone(), Ty::Bool));
                let body = if ty == Ty::BoolFn {
                    self.det(Ty::Bool, d, &inner)
                } else {
                    if_then_else(
                        var(&x),
                        self.det(Ty::Bool, d, &inner),
                        self.det(Ty::Unit, d, &inner),
                    )
                };
                lam(&x, bool_ty(), body)
            }
            Ty::BoolUnit | Ty::DepSum => self.leaf(ty, env),
        }
    }

    /// A probabilistic expression; may be illegal, see [`Generator::legal_prob`].
    pub fn prob(&mut self, depth: usize) -> Term {
        let d = depth.saturating_sub(1);
        let choice = if depth == 0 {
            0
        } else {
            self.rng.random_range(0..9)
        };
        match choice {
            0 => {
                let (t1, t2) = self.same_sort_pair();
                self.coin_between(t1, t2, 1)
            }
            1 => {
                let c = self.det(Ty::Bool, 1, &[]);
                if_then_else(c, self.prob(d), self.prob(d))
            }
            2 => {
                // Single-typed random argument fed to an abstraction.
                let t = self.pick(&[Ty::Bool, Ty::Unit, Ty::A, Ty::BoolUnit]);
                let r = self.coin_between(t, t, 1);
                let y = self.fresh("y");
                let body_ty = self.pick(&TERM_TYPES);
                let body = self.det(body_ty, 2, &[(y.clone(), t)]);
                app(lam(&y, t.term(), body), r)
            }
            3 => {
                // Multi-typed random argument resolved by dispatch.
                let (t1, t2) = self.distinct_pair();
                let r = self.coin_between(t1, t2, 1);
                let y = self.fresh("y");
                let cases = [t1, t2]
                    .into_iter()
                    .map(|t| {
                        let body_ty = self.pick(&TERM_TYPES);
                        case(t.term(), self.det(body_ty, 1, &[(y.clone(), t)]))
                    })
                    .collect();
                dispatch(&y, cases, r)
            }
            4 => {
                let z = self.fresh("z");
                lam(&z, bool_ty(), self.prob(d))
            }
            5 => {
                let side = if self.coin() {
                    Side::First
                } else {
                    Side::Second
                };
                proj(side, self.coin_between(Ty::BoolUnit, Ty::BoolUnit, 1))
            }
            6 => {
                let x = self.fresh("x");
                let z = self.fresh("z");
                let other = self.det(Ty::Bool, 1, &[]);
                let f = random(
                    self.rho(),
                    lam(
                        &x,
                        bool_ty(),
                        lam(&z, bool_ty(), if_then_else(var(&x), var(&z), other)),
                    ),
                );
                app(f, self.det(Ty::Bool, 1, &[]))
            }
            7 => {
                // Nested dispatch: the inner case bodies see both bindings.
                let (t1, t2) = self.distinct_pair();
                let r = self.coin_between(t1, t2, 1);
                let y = self.fresh("y");
                let cases = [t1, t2]
                    .into_iter()
                    .map(|t| {
                        let (u1, u2) = self.distinct_pair();
                        let inner = self.coin_between(u1, u2, 1);
                        let w = self.fresh("y");
                        let inner_cases = [u1, u2]
                            .into_iter()
                            .map(|u| {
                                let body_ty = self.pick(&TERM_TYPES);
                                let env = [(y.clone(), t), (w.clone(), u)];
                                case(u.term(), self.det(body_ty, 1, &env))
                            })
                            .collect();
                        case(t.term(), dispatch(&w, inner_cases, inner))
                    })
                    .collect();
                dispatch(&y, cases, r)
            }
            _ => {
                let x = self.fresh("x");
                let t = self.pick(&[Ty::Bool, Ty::Unit]);
                let inner = self.coin_between(t, t, 1);
                let other = self.det(t, 1, &[]);
                random(
                    self.rho(),
                    lam(&x, bool_ty(), if_then_else(var(&x), inner, other)),
                )
            }
        }
    }

    fn same_sort_pair(&mut self) -> (Ty, Ty) {
        (self.pick(&TERM_TYPES), self.pick(&TERM_TYPES))
    }

    fn distinct_pair(&mut self) -> (Ty, Ty) {
        let a = self.pick(&TERM_TYPES);
        loop {
            let b = self.pick(&TERM_TYPES);
            if b != a {
                return (a, b);
            }
        }
    }

    /// `random[rho](\x:Bool. if x then t1 else t2)` with branches of the
    /// given types.
    fn coin_between(&mut self, t1: Ty, t2: Ty, depth: usize) -> Term {
        let x = self.fresh("x");
        let env = [(x.clone(), Ty::Bool)];
        let a = self.det(t1, depth, &env);
        let b = self.det(t2, depth, &env);
        random(self.rho(), lam(&x, bool_ty(), if_then_else(var(&x), a, b)))
    }

    /// A legal probabilistic expression in [`corpus_context`].
    pub fn legal_prob(&mut self, depth: usize) -> Term {
        let ctx = corpus_context();
        loop {
            let e = self.prob(depth);
            if is_legal(&ctx, &e) {
                return e;
            }
        }
    }
}

/// `n` well-typed deterministic expressions in [`corpus_context`].
pub fn deterministic_corpus(seed: u64, n: usize) -> Vec<Term> {
    let mut g = Generator::new(seed);
    (0..n)
        .map(|_| {
            let ty = g.pick(&TERM_TYPES);
            let depth = g.rng.random_range(1..=3);
            g.det(ty, depth, &[])
        })
        .collect()
}

/// `n` legal expressions in [`corpus_context`], alternating between
/// deterministic and probabilistic ones.
pub fn legal_corpus(seed: u64, n: usize) -> Vec<Term> {
    let mut g = Generator::new(seed);
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                let ty = g.pick(&TERM_TYPES);
                g.det(ty, 2, &[])
            } else {
                let depth = g.rng.random_range(1..=2);
                g.legal_prob(depth)
            }
        })
        .collect()
}
