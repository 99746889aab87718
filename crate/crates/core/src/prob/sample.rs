use std::collections::HashMap;
use std::sync::Arc;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{canonical, Context, Term};

use super::step::{step_rho, WeightedStep};
use super::ProbError;

/// Samples per generator stream. Batch `i` always draws from stream `i` of
/// the seed, so results do not depend on how batches map to threads.
pub const BATCH_SIZE: usize = 4096;

type BatchResult = Result<Vec<(usize, Vec<Term>)>, ProbError>;

/// Reduces expressions by sampling among weighted steps.
///
/// Steps are cached per node identity. Reduction shares untouched
/// subtrees, so repeated runs from one root walk the same nodes and the
/// cache turns later runs into table lookups.
pub struct Sampler {
    ctx: Context,
    // Keyed by node address; the stored handle keeps the node alive.
    cache: HashMap<usize, (Term, Arc<[WeightedStep]>)>,
}

impl Sampler {
    pub fn new(ctx: &Context) -> Sampler {
        Sampler {
            ctx: ctx.clone(),
            cache: HashMap::new(),
        }
    }

    pub fn steps(&mut self, e: &Term) -> Result<Arc<[WeightedStep]>, ProbError> {
        let key = Arc::as_ptr(e) as usize;
        if let Some((_, s)) = self.cache.get(&key) {
            return Ok(s.clone());
        }
        let s: Arc<[WeightedStep]> = step_rho(&self.ctx, e)?.into();
        self.cache.insert(key, (e.clone(), s.clone()));
        Ok(s)
    }

    /// One run to a normal form. Returns the normal form and the log of the
    /// path probability.
    pub fn run<R: Rng>(
        &mut self,
        e: &Term,
        rng: &mut R,
        fuel: usize,
    ) -> Result<(Term, f64), ProbError> {
        self.run_traced(e, rng, fuel, |_, _| {})
    }

    /// Like [`Sampler::run`], calling `observe(node, chosen)` for every
    /// step taken.
    pub fn run_traced<R: Rng>(
        &mut self,
        e: &Term,
        rng: &mut R,
        fuel: usize,
        mut observe: impl FnMut(&Term, &WeightedStep),
    ) -> Result<(Term, f64), ProbError> {
        let mut cur = e.clone();
        let mut log_p = 0.0;
        for _ in 0..=fuel {
            let steps = self.steps(&cur)?;
            let chosen = match steps.len() {
                0 => return Ok((cur, log_p)),
                1 => &steps[0],
                _ => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    steps
                        .iter()
                        .find(|s| {
                            acc += s.probability;
                            u < acc
                        })
                        .unwrap_or(&steps[steps.len() - 1])
                }
            };
            observe(&cur, chosen);
            log_p += chosen.probability.ln();
            cur = chosen.result.clone();
        }
        Err(ProbError::FuelExhausted(fuel))
    }
}

/// Generator for batch `batch` of runs seeded with `seed`.
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// A single sampled run from a fresh generator.
pub fn sample_reduce(
    ctx: &Context,
    e: &Term,
    seed: u64,
    fuel: usize,
) -> Result<(Term, f64), ProbError> {
    Sampler::new(ctx).run(e, &mut batch_rng(seed, 0), fuel)
}

/// `n` sampled normal forms, in run order. Batches are spread over the
/// available cores; the output depends only on `seed` and `n`.
pub fn sample_many(
    ctx: &Context,
    e: &Term,
    n: usize,
    seed: u64,
    fuel: usize,
) -> Result<Vec<Term>, ProbError> {
    let batches = n.div_ceil(BATCH_SIZE);
    let workers = thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(batches)
        .max(1);
    let run_batch = |sampler: &mut Sampler, b: usize| -> Result<Vec<Term>, ProbError> {
        let mut rng = batch_rng(seed, b as u64);
        let len = BATCH_SIZE.min(n - b * BATCH_SIZE);
        (0..len)
            .map(|_| sampler.run(e, &mut rng, fuel).map(|(t, _)| t))
            .collect()
    };
    let mut per_batch: Vec<Option<Vec<Term>>> = vec![None; batches];
    if workers == 1 {
        let mut sampler = Sampler::new(ctx);
        for (b, slot) in per_batch.iter_mut().enumerate() {
            *slot = Some(run_batch(&mut sampler, b)?);
        }
    } else {
        let results: Vec<BatchResult> = thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let run_batch = &run_batch;
                    s.spawn(move || {
                        let mut sampler = Sampler::new(ctx);
                        (w..batches)
                            .step_by(workers)
                            .map(|b| run_batch(&mut sampler, b).map(|v| (b, v)))
                            .collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampler thread panicked"))
                .collect()
        });
        for r in results {
            for (b, v) in r? {
                per_batch[b] = Some(v);
            }
        }
    }
    Ok(per_batch.into_iter().flatten().flatten().collect())
}

/// Sampled normal forms grouped up to alpha-equivalence, in order of first
/// appearance, with their counts.
pub fn sample_counts(
    ctx: &Context,
    e: &Term,
    n: usize,
    seed: u64,
    fuel: usize,
) -> Result<Vec<(Term, usize)>, ProbError> {
    let samples = sample_many(ctx, e, n, seed, fuel)?;
    let mut by_ptr: HashMap<usize, usize> = HashMap::new();
    let mut groups: Vec<(Term, Term, usize)> = Vec::new();
    for s in samples {
        let slot = *by_ptr.entry(Arc::as_ptr(&s) as usize).or_insert_with(|| {
            let key = canonical(&s);
            match groups.iter().position(|(k, _, _)| *k == key) {
                Some(i) => i,
                None => {
                    groups.push((key, s.clone(), 0));
                    groups.len() - 1
                }
            }
        });
        groups[slot].2 += 1;
    }
    Ok(groups.into_iter().map(|(_, t, c)| (t, c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::*;

    #[test]
    fn normal_form_has_zero_log_probability() {
        assert_eq!(
            sample_reduce(&Context::new(), &tt(), 3, 10).unwrap(),
            (tt(), 0.0)
        );
    }

    #[test]
    fn single_coin() {
        let e = parse("random[0.5](\\x:Bool. x)").unwrap();
        let (t, lp) = sample_reduce(&Context::new(), &e, 11, 10).unwrap();
        assert!(t == tt() || t == ff());
        assert!((lp - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_coins() {
        let e = parse("(\\a:Bool. \\b:Bool. pair(a, b) : Bool * Bool) (random[0.5](\\x:Bool. x)) (random[0.5](\\x:Bool. x))")
            .unwrap();
        let (_, lp) = sample_reduce(&Context::new(), &e, 5, 100).unwrap();
        assert!((lp - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_samples() {
        let e = parse("random[0.3](\\x:Bool. x)").unwrap();
        let a = sample_many(&Context::new(), &e, 5000, 9, 10).unwrap();
        let b = sample_many(&Context::new(), &e, 5000, 9, 10).unwrap();
        assert_eq!(a, b);
        let c = sample_counts(&Context::new(), &e, 5000, 9, 10).unwrap();
        assert_eq!(c.iter().map(|(_, n)| n).sum::<usize>(), 5000);
    }
}
