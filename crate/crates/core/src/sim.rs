//! Sampling of the observers' product-basis outcomes and eavesdropping
//! coalitions.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::numerics::{random_unitary, ComplexMatrix};
use crate::pipeline::Pipeline;
use crate::protocol::CompositeState;
use crate::report::{AttackReport, MonteCarloReport};

/// Stream offset separating attack randomness from the Monte Carlo streams.
const ATTACK_STREAM: u64 = 1 << 32;

/// ChaCha20 seeded from `seed`, on stream `stream`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sample {
    /// Composite product-basis index.
    pub index: usize,
    /// Receiver outcome, `None` for `?`.
    pub outcome: Option<usize>,
}

fn sampler(weights: &[f64]) -> Result<WeightedIndex<f64>> {
    let cleaned: Vec<f64> = weights.iter().map(|&w| w.max(0.0)).collect();
    WeightedIndex::new(&cleaned).map_err(|e| Error::InvalidArgument(format!("cannot sample: {e}")))
}

/// `trials` product-basis outcomes for message `m`, each decoded.
pub fn sample_outcomes(pipeline: &Pipeline, m: usize, trials: u64, seed: u64) -> Result<Vec<Sample>> {
    let state = pipeline
        .states
        .get(m)
        .ok_or_else(|| Error::InvalidArgument(format!("message {m} out of range")))?;
    let dist = sampler(&state.product_distribution(pipeline.receiver.local_bases())?)?;
    let mut rng = rng_for(seed, m as u64);
    Ok((0..trials)
        .map(|_| {
            let index = dist.sample(&mut rng);
            Sample {
                index,
                outcome: pipeline.receiver.outcome_of(index),
            }
        })
        .collect())
}

/// Receiver outcome counts for message `m`, failure last.
pub fn monte_carlo(pipeline: &Pipeline, m: usize, trials: u64, seed: u64) -> Result<Vec<u64>> {
    let mm = pipeline.set.len();
    let mut counts = vec![0u64; mm + 1];
    for s in sample_outcomes(pipeline, m, trials, seed)? {
        counts[s.outcome.unwrap_or(mm)] += 1;
    }
    Ok(counts)
}

pub fn monte_carlo_all(pipeline: &Pipeline, trials: u64, seed: u64) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least one trial".into()));
    }
    let exact = pipeline.receiver_table()?;
    let n = trials as f64;
    let mut counts = Vec::with_capacity(exact.len());
    let mut frequencies = Vec::with_capacity(exact.len());
    let mut std_errors = Vec::with_capacity(exact.len());
    let mut max_sigma: f64 = 0.0;
    let mut max_tv: f64 = 0.0;
    for (m, row) in exact.iter().enumerate() {
        let c = monte_carlo(pipeline, m, trials, seed)?;
        let f: Vec<f64> = c.iter().map(|&x| x as f64 / n).collect();
        std_errors.push(f.iter().map(|&x| (x * (1.0 - x) / n).sqrt()).collect());
        for (fe, p) in f.iter().zip(row) {
            let sigma = (p * (1.0 - p) / n).max(0.0).sqrt();
            let gap = (fe - p).abs();
            let z = if sigma > 0.0 {
                gap / sigma
            } else if gap > 1e-12 {
                f64::INFINITY
            } else {
                0.0
            };
            max_sigma = max_sigma.max(z);
        }
        max_tv = max_tv.max(total_variation(&f, row));
        counts.push(c);
        frequencies.push(f);
    }
    Ok(MonteCarloReport {
        trials,
        rng_seed: seed,
        counts,
        frequencies,
        std_errors,
        max_sigma,
        max_tv_to_exact: max_tv,
    })
}

/// `½ Σ |p_i − q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Largest pairwise total-variation distance.
pub fn max_pairwise_tv(dists: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, a) in dists.iter().enumerate() {
        for b in &dists[j + 1..] {
            worst = worst.max(total_variation(a, b));
        }
    }
    worst
}

#[derive(Clone, Debug)]
pub enum AttackStrategy {
    /// Haar-random joint basis on the coalition.
    Random,
    /// Columns of the given unitary on the coalition's joint space.
    Basis(ComplexMatrix),
}

fn check_subset(subset: &[usize], n: usize) -> Result<()> {
    if subset.is_empty() || subset.len() >= n {
        return Err(Error::InvalidArgument(format!(
            "a coalition must be a non-empty proper subset of the {n} observers"
        )));
    }
    if subset.windows(2).any(|w| w[0] >= w[1]) || subset.iter().any(|&i| i >= n) {
        return Err(Error::InvalidArgument(format!("invalid observer subset {subset:?}")));
    }
    Ok(())
}

/// Outcome distribution of measuring the coalition's reduced state in the
/// columns of `basis`, one row per message.
pub fn coalition_distributions(
    states: &[CompositeState],
    subset: &[usize],
    basis: &ComplexMatrix,
) -> Result<Vec<Vec<f64>>> {
    let Some(first) = states.first() else {
        return Ok(Vec::new());
    };
    check_subset(subset, first.dims().len())?;
    let d: usize = subset.iter().map(|&i| first.dims()[i]).product();
    if basis.rows() != d || basis.cols() != d {
        return Err(Error::Dimension(format!("coalition basis must be {d}x{d}")));
    }
    let violation = basis.isometry_violation();
    if violation > 1e-9 {
        return Err(Error::NotOrthonormal { violation });
    }
    let adj = basis.adjoint();
    states
        .iter()
        .map(|s| {
            let rho = s.reduced(subset)?;
            let rotated = &(&adj * &rho) * basis;
            Ok(rotated.diagonal().iter().map(|z| z.re.max(0.0)).collect())
        })
        .collect()
}

pub fn attack_sim(
    pipeline: &Pipeline,
    subset: &[usize],
    strategy: &AttackStrategy,
    trials: u64,
    seed: u64,
) -> Result<AttackReport> {
    let n = pipeline.map.n_observers();
    check_subset(subset, n)?;
    let d = pipeline.map.local_dim().pow(subset.len() as u32);
    let (basis, name) = match strategy {
        AttackStrategy::Random => (random_unitary(d, &mut rng_for(seed, ATTACK_STREAM)), "random"),
        AttackStrategy::Basis(u) => (u.clone(), "basis"),
    };
    let dists = coalition_distributions(&pipeline.states, subset, &basis)?;
    let exact_tv = max_pairwise_tv(&dists);
    let empirical_tv = if trials > 0 {
        let mut empirical = Vec::with_capacity(dists.len());
        for (m, p) in dists.iter().enumerate() {
            let sampler = sampler(p)?;
            let mut rng = rng_for(seed, ATTACK_STREAM + 1 + m as u64);
            let mut counts = vec![0u64; p.len()];
            for _ in 0..trials {
                counts[sampler.sample(&mut rng)] += 1;
            }
            empirical.push(counts.iter().map(|&c| c as f64 / trials as f64).collect());
        }
        Some(max_pairwise_tv(&empirical))
    } else {
        None
    };
    Ok(AttackReport {
        subset: subset.to_vec(),
        strategy: name.to_string(),
        trials,
        rng_seed: seed,
        exact_tv,
        empirical_tv,
    })
}
