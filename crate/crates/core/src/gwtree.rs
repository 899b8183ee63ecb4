//! Galton–Watson trees and the covering numbers of their boundaries.
//!
//! With the metric `d(x, y) = b^{−|x ∧ y|}` a ball of radius `b^{−k}` around a
//! boundary point is the set of rays through its level-`k` ancestor, and it
//! takes exactly as many `b^{−l}` balls to cover as that ancestor has
//! descendants at level `l`. All counts here are exact integers.

use std::ops::RangeInclusive;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Binomial;
use rayon::prelude::*;

use crate::dimfunc::DimensionFunction;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded_rng};

/// Default bound on the total number of nodes a simulated tree may hold.
pub const DEFAULT_NODE_CAP: u64 = 50_000_000;

/// Law of the offspring count `X` on `{0, …, N}`.
#[derive(Debug, Clone)]
pub struct OffspringDistribution {
    probs: Vec<f64>,
    metric_base: f64,
    sampler: Option<WeightedIndex<f64>>,
}

impl OffspringDistribution {
    /// `probs[j] = P(X = j)`. Trailing zeros are dropped.
    pub fn new(probs: Vec<f64>, metric_base: f64) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution("probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        if !(metric_base > 1.0 && metric_base.is_finite()) {
            return Err(Error::InvalidDistribution(format!("metric base must exceed 1, got {metric_base}")));
        }
        let mut probs = probs;
        while probs.last() == Some(&0.0) {
            probs.pop();
        }
        if probs.len() > u32::MAX as usize {
            return Err(Error::InvalidDistribution("offspring bound too large".into()));
        }
        let sampler = if probs.len() > 1 {
            Some(WeightedIndex::new(&probs).map_err(|e| Error::InvalidDistribution(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { probs, metric_base, sampler })
    }

    /// Convenience constructor with the standard binary metric.
    pub fn with_base2(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs, 2.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn metric_base(&self) -> f64 {
        self.metric_base
    }

    /// `N`, the largest `j` with `θ_j > 0`.
    pub fn max_offspring(&self) -> u32 {
        (self.probs.len() - 1) as u32
    }

    /// `m = E(X)`.
    pub fn mean_offspring(&self) -> f64 {
        self.probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match &self.sampler {
            Some(s) => s.sample(rng) as u32,
            None => 0,
        }
    }

    /// Total offspring of `parents` independent individuals.
    fn sample_generation<R: rand::Rng + ?Sized>(&self, parents: u64, rng: &mut R) -> u64 {
        // Multinomial split of the parents by offspring count, via conditional binomials.
        let mut remaining = parents;
        let mut mass_left = 1.0f64;
        let mut total = 0u64;
        let last = self.probs.len() - 1;
        for (j, &p) in self.probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let here = if j == last {
                remaining
            } else {
                let q = (p / mass_left).clamp(0.0, 1.0);
                mass_left -= p;
                if q == 0.0 {
                    0
                } else if q >= 1.0 {
                    remaining
                } else {
                    Binomial::new(remaining, q).expect("valid binomial").sample(rng)
                }
            };
            remaining -= here;
            total += here * j as u64;
        }
        total
    }
}

/// Offspring law of Mandelbrot percolation: `Binomial(n^d, p)` with metric base `n`.
pub fn percolation_offspring(n: u32, d: u32, p: f64) -> Result<OffspringDistribution> {
    if n < 2 || d < 1 {
        return Err(Error::InvalidArgument(format!("need n >= 2 and d >= 1, got n={n} d={d}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("retention probability must be in (0, 1], got {p}")));
    }
    let trials = (n as u64)
        .checked_pow(d)
        .filter(|&t| t <= 1 << 20)
        .ok_or_else(|| Error::InvalidArgument(format!("{n}^{d} subcubes is too many")))?;
    let probs = if p == 1.0 {
        let mut v = vec![0.0; trials as usize + 1];
        v[trials as usize] = 1.0;
        v
    } else {
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let mut log_choose = 0.0f64;
        (0..=trials)
            .map(|j| {
                if j > 0 {
                    log_choose += ((trials - j + 1) as f64 / j as f64).ln();
                }
                (log_choose + j as f64 * lp + (trials - j) as f64 * lq).exp()
            })
            .collect()
    };
    let total: f64 = probs.iter().sum();
    let probs = probs.into_iter().map(|x| x / total).collect();
    OffspringDistribution::new(probs, n as f64)
}

/// Almost-sure dimensions of the boundary of a supercritical tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalDims {
    /// `log m / log b`; also the Hausdorff and quasi-Assouad dimension.
    pub box_dim: f64,
    pub quasi_assouad: f64,
    /// `log N / log b`.
    pub assouad: f64,
}

pub fn theoretical_dims(dist: &OffspringDistribution) -> Result<TheoreticalDims> {
    let m = dist.mean_offspring();
    if m <= 1.0 {
        return Err(Error::SubcriticalOrCritical { mean: m });
    }
    let lb = dist.metric_base.ln();
    let box_dim = m.ln() / lb;
    Ok(TheoreticalDims {
        box_dim,
        quasi_assouad: box_dim,
        assouad: (dist.max_offspring() as f64).ln() / lb,
    })
}

/// One level of the arena: child counts plus prefix offsets into the next level.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Level {
    child_counts: Vec<u32>,
    /// `first_child[i]` is the index of node `i`'s first child in the next
    /// level; the trailing entry equals the next level's population.
    first_child: Vec<u64>,
}

/// A depth-limited Galton–Watson tree stored level by level.
///
/// Level `k` holds `Z_k` nodes; the children of a node occupy a contiguous
/// range of the next level. Nodes at the final level are not expanded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GwTree {
    levels: Vec<Level>,
    population: Vec<u64>,
    depth: usize,
    seed: u64,
    extinct_at: Option<usize>,
    metric_base_bits: u64,
    max_offspring: u32,
    mean_bits: u64,
}

/// How the estimator pairs scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMode {
    /// `l = k + gap_levels(φ, k)` exactly.
    ExactGap,
    /// Every `l' ≥ k + gap_levels(φ, k)`; with `φ = 0` this is the Assouad dimension.
    AtLeastGap,
}

impl std::str::FromStr for GapMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_gap" | "exact" => Ok(GapMode::ExactGap),
            "at_least_gap" | "at-least" => Ok(GapMode::AtLeastGap),
            _ => Err(Error::Parse(format!("unknown mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeWitness {
    pub k: usize,
    pub node: usize,
    pub l: usize,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeEstimate {
    pub s_hat: f64,
    pub witness: TreeWitness,
}

impl GwTree {
    /// Sample a tree of the given depth; child counts are drawn node by node
    /// in level order from a generator seeded with `seed`.
    pub fn simulate(dist: &OffspringDistribution, depth: usize, seed: u64, node_cap: u64) -> Result<Self> {
        if depth < 1 {
            return Err(Error::InvalidArgument("depth must be at least 1".into()));
        }
        if node_cap < 1 {
            return Err(Error::InvalidArgument("node cap must be at least 1".into()));
        }
        let mut rng = seeded_rng(seed);
        let mut levels = Vec::with_capacity(depth);
        let mut population = vec![1u64];
        let mut total_nodes = 1u64;
        let mut extinct_at = None;
        for k in 0..depth {
            let z = population[k] as usize;
            let mut child_counts = Vec::with_capacity(z);
            let mut first_child = Vec::with_capacity(z + 1);
            let mut next = 0u64;
            for _ in 0..z {
                let c = dist.sample(&mut rng);
                first_child.push(next);
                child_counts.push(c);
                next += c as u64;
            }
            first_child.push(next);
            total_nodes += next;
            if total_nodes > node_cap {
                return Err(Error::CapExceeded { cap: node_cap });
            }
            if next == 0 && extinct_at.is_none() {
                extinct_at = Some(k + 1);
            }
            levels.push(Level { child_counts, first_child });
            population.push(next);
        }
        Ok(Self {
            levels,
            population,
            depth,
            seed,
            extinct_at,
            metric_base_bits: dist.metric_base.to_bits(),
            max_offspring: dist.max_offspring(),
            mean_bits: dist.mean_offspring().to_bits(),
        })
    }

    /// First surviving tree among seeds `seed, seed + 1, …`.
    pub fn condition_on_survival(
        dist: &OffspringDistribution,
        depth: usize,
        seed: u64,
        max_retries: u32,
        node_cap: u64,
    ) -> Result<Self> {
        for attempt in 0..max_retries.max(1) {
            let tree = Self::simulate(dist, depth, seed.wrapping_add(attempt as u64), node_cap)?;
            if tree.extinct_at.is_none() {
                return Ok(tree);
            }
        }
        Err(Error::ExtinctionPersistent { retries: max_retries.max(1) })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn extinct_at(&self) -> Option<usize> {
        self.extinct_at
    }

    pub fn metric_base(&self) -> f64 {
        f64::from_bits(self.metric_base_bits)
    }

    pub fn max_offspring(&self) -> u32 {
        self.max_offspring
    }

    /// `Z_k`.
    pub fn population(&self, k: usize) -> u64 {
        self.population[k]
    }

    pub fn populations(&self) -> &[u64] {
        &self.population
    }

    pub fn total_nodes(&self) -> u64 {
        self.population.iter().sum()
    }

    /// Child count of node `v` at level `k < depth`.
    pub fn child_count(&self, k: usize, v: usize) -> u32 {
        self.levels[k].child_counts[v]
    }

    /// `W_k = Z_k / m^k`.
    pub fn normalized_population(&self, k: usize) -> f64 {
        if self.population[k] == 0 {
            return 0.0;
        }
        let m = f64::from_bits(self.mean_bits);
        self.population[k] as f64 / m.powi(k as i32)
    }

    /// Number of level-`l` descendants of node `v` at level `k`.
    ///
    /// Descendant sets are contiguous, so the count is the width of the index
    /// range obtained by pushing `[v, v + 1)` down through the prefix offsets.
    pub fn covering_count(&self, k: usize, v: usize, l: usize) -> Result<u64> {
        self.check_levels(k, l)?;
        if v as u64 >= self.population[k] {
            return Err(Error::InvalidArgument(format!("no node {v} at level {k}")));
        }
        let (mut lo, mut hi) = (v as u64, v as u64 + 1);
        for level in &self.levels[k..l] {
            lo = level.first_child[lo as usize];
            hi = level.first_child[hi as usize];
        }
        Ok(hi - lo)
    }

    /// Covering counts of every node at level `k` for target level `l`, by a
    /// single bottom-up accumulation pass from `l` to `k`.
    pub fn covering_counts(&self, k: usize, l: usize) -> Result<Vec<u64>> {
        self.check_levels(k, l)?;
        let mut counts = vec![1u64; self.population[l] as usize];
        for level in self.levels[k..l].iter().rev() {
            counts = level
                .first_child
                .windows(2)
                .map(|w| counts[w[0] as usize..w[1] as usize].iter().sum())
                .collect();
        }
        Ok(counts)
    }

    fn check_levels(&self, k: usize, l: usize) -> Result<()> {
        if k > l || l > self.depth {
            return Err(Error::InvalidArgument(format!(
                "need k <= l <= depth, got k={k} l={l} depth={}",
                self.depth
            )));
        }
        Ok(())
    }

    /// Empirical `φ`-Assouad exponent: the largest
    /// `log(count) / ((l − k)·log b)` over admissible start levels `k` and
    /// nodes at level `k`. Start levels whose target level lies beyond the
    /// tree, or whose scale is outside the domain of `φ`, are skipped.
    pub fn phi_assouad_estimate(
        &self,
        phi: &DimensionFunction,
        k_range: RangeInclusive<usize>,
        mode: GapMode,
    ) -> Result<TreeEstimate> {
        let base = self.metric_base();
        let log_base = base.ln();
        let mut best: Option<TreeEstimate> = None;
        let mut admissible = false;
        for k in k_range {
            if k == 0 {
                continue;
            }
            let Ok(gap) = phi.gap_levels(k as u64, base) else { continue };
            let l = k + gap as usize;
            if l > self.depth {
                continue;
            }
            admissible = true;
            let targets = match mode {
                GapMode::ExactGap => l..=l,
                GapMode::AtLeastGap => l..=self.depth,
            };
            for target in targets {
                let counts = self.covering_counts(k, target)?;
                let g = (target - k) as u64;
                for (v, &count) in counts.iter().enumerate() {
                    if count == 0 {
                        continue;
                    }
                    let s = growth_exponent(count, g, log_base);
                    if best.is_none_or(|b| s > b.s_hat) {
                        best = Some(TreeEstimate {
                            s_hat: s,
                            witness: TreeWitness { k, node: v, l: target, count },
                        });
                    }
                }
            }
        }
        match best {
            Some(b) => Ok(b),
            None if admissible => Err(Error::AllExtinct),
            None => Err(Error::NoAdmissiblePair),
        }
    }
}

/// `log_b(count) / gap`, evaluated through the integer `gap`-th root when the
/// count is a perfect power so that `N^g` yields exactly `log N / log b`.
fn growth_exponent(count: u64, gap: u64, log_base: f64) -> f64 {
    let root = (count as f64).powf(1.0 / gap as f64).round() as u64;
    let exact = u32::try_from(gap)
        .ok()
        .and_then(|g| root.checked_pow(g))
        .is_some_and(|p| p == count);
    if exact {
        (root as f64).ln() / log_base
    } else {
        (count as f64).ln() / (gap as f64 * log_base)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    /// Fraction of trials with `Z_k ≥ m^{(1+ε)k}`.
    pub p_hat: f64,
    /// `exp(−m^{εk})`, the decay shape of the tail bound up to its constants.
    pub bound_shape: f64,
    pub threshold: f64,
    pub hits: u64,
    pub trials: u64,
}

/// Monte Carlo estimate of `P(Z_k ≥ m^{(1+ε)k})`.
///
/// Each trial simulates the population process only, with seed
/// `derive_seed(seed, trial, "gw-tail")`, so the tally is independent of how
/// trials are scheduled across threads.
pub fn chernoff_tail_empirical(
    dist: &OffspringDistribution,
    k: usize,
    epsilon: f64,
    trials: u64,
    seed: u64,
) -> Result<TailEstimate> {
    let m = dist.mean_offspring();
    if m <= 1.0 {
        return Err(Error::SubcriticalOrCritical { mean: m });
    }
    if trials < 1 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let threshold = m.powf((1.0 + epsilon) * k as f64);
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded_rng(derive_seed(seed, t, "gw-tail"));
            let mut z = 1u64;
            for _ in 0..k {
                z = dist.sample_generation(z, &mut rng);
                if z == 0 {
                    break;
                }
            }
            u64::from(z as f64 >= threshold)
        })
        .sum();
    Ok(TailEstimate {
        p_hat: hits as f64 / trials as f64,
        bound_shape: (-m.powf(epsilon * k as f64)).exp(),
        threshold,
        hits,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(p: &[f64]) -> OffspringDistribution {
        OffspringDistribution::with_base2(p.to_vec()).unwrap()
    }

    fn tree(p: &[f64], depth: usize, seed: u64) -> GwTree {
        GwTree::simulate(&dist(p), depth, seed, DEFAULT_NODE_CAP).unwrap()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(dist(&[0.0, 0.0, 1.0]).mean_offspring(), 2.0);
        assert_eq!(dist(&[0.0, 0.5, 0.5]).mean_offspring(), 1.5);
        assert!((dist(&[0.3, 0.0, 0.0, 0.7]).mean_offspring() - 2.1).abs() < 1e-15);
    }

    #[test]
    fn distribution_validation() {
        assert!(OffspringDistribution::with_base2(vec![0.5, 0.4]).is_err());
        assert!(OffspringDistribution::with_base2(vec![-0.1, 1.1]).is_err());
        assert!(OffspringDistribution::new(vec![0.0, 1.0], 1.0).is_err());
        let d = dist(&[0.0, 0.5, 0.5, 0.0, 0.0]);
        assert_eq!(d.max_offspring(), 2);
    }

    #[test]
    fn deterministic_shapes() {
        let t = tree(&[0.0, 0.0, 1.0], 10, 7);
        assert_eq!(t.population(10), 1024);
        assert_eq!(t.extinct_at(), None);
        let dead = tree(&[1.0], 5, 7);
        assert_eq!(dead.extinct_at(), Some(1));
        assert_eq!(dead.population(1), 0);
        assert_eq!(dead.normalized_population(3), 0.0);
    }

    #[test]
    fn node_cap() {
        let err = GwTree::simulate(&dist(&[0.0, 0.0, 1.0]), 10, 0, 1000).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { cap: 1000 }));
        assert!(GwTree::simulate(&dist(&[0.0, 0.0, 1.0]), 10, 0, 2047).is_ok());
    }

    #[test]
    fn survival_conditioning() {
        let d = dist(&[0.0, 0.0, 1.0]);
        assert_eq!(GwTree::condition_on_survival(&d, 8, 3, 1, DEFAULT_NODE_CAP).unwrap().seed(), 3);
        let dead = dist(&[1.0]);
        assert!(matches!(
            GwTree::condition_on_survival(&dead, 8, 3, 5, DEFAULT_NODE_CAP),
            Err(Error::ExtinctionPersistent { retries: 5 })
        ));
        // Extinction probability 1/3: 30 retries fail with probability 3^-30.
        let d = dist(&[0.25, 0.0, 0.75]);
        for seed in 0..20 {
            let t = GwTree::condition_on_survival(&d, 20, seed * 1000, 30, DEFAULT_NODE_CAP).unwrap();
            assert!(t.population(20) > 0);
        }
    }

    #[test]
    fn extinction_frequency_matches_fixed_point() {
        // q = θ₀/θ₂ = 1/3 for θ₀ = 1/4, θ₂ = 3/4; depth 20 is close to the limit.
        let d = dist(&[0.25, 0.0, 0.75]);
        let n = 3000u64;
        let extinct = (0..n)
            .filter(|&s| GwTree::simulate(&d, 20, derive_seed(11, s, "t"), DEFAULT_NODE_CAP).unwrap().extinct_at().is_some())
            .count() as f64;
        let q = extinct / n as f64;
        let sd = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
        assert!((q - 1.0 / 3.0).abs() < 4.0 * sd, "q = {q}");
    }

    #[test]
    fn covering_count_examples() {
        let t = tree(&[0.0, 0.0, 1.0], 12, 1);
        for k in 0..=12 {
            assert_eq!(t.covering_count(k, 0, k).unwrap(), 1);
            for g in 0..=(12 - k) {
                assert_eq!(t.covering_count(k, t.population(k) as usize - 1, k + g).unwrap(), 1 << g);
            }
        }
        assert!(t.covering_count(3, 8, 5).is_err());
        assert!(t.covering_count(5, 0, 4).is_err());
    }

    #[test]
    fn bottom_up_matches_range_descent() {
        for seed in 0..10 {
            let t = tree(&[0.1, 0.4, 0.3, 0.2], 12, seed);
            for k in 0..=12 {
                for l in k..=12 {
                    let counts = t.covering_counts(k, l).unwrap();
                    for (v, c) in counts.iter().enumerate() {
                        assert_eq!(*c, t.covering_count(k, v, l).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn estimate_on_regular_trees() {
        let phi = DimensionFunction::log_log(1.0).unwrap();
        let t = tree(&[0.0, 0.0, 1.0], 20, 0);
        let e = t.phi_assouad_estimate(&phi, 5..=15, GapMode::ExactGap).unwrap();
        assert_eq!(e.s_hat, 1.0);
        let t3 = tree(&[0.0, 0.0, 0.0, 1.0], 14, 0);
        let e = t3.phi_assouad_estimate(&phi, 4..=10, GapMode::ExactGap).unwrap();
        assert_eq!(e.s_hat, 3f64.ln() / 2f64.ln());
        assert_eq!(e.witness.count, 3u64.pow((e.witness.l - e.witness.k) as u32));
    }

    #[test]
    fn estimate_errors() {
        let phi = DimensionFunction::power_law(0.5).unwrap();
        let t = tree(&[0.0, 0.0, 1.0], 10, 0);
        assert!(matches!(
            t.phi_assouad_estimate(&phi, 6..=9, GapMode::ExactGap),
            Err(Error::NoAdmissiblePair)
        ));
        // Tree that dies at level 3 but has admissible pairs.
        let dead = tree(&[1.0], 12, 0);
        assert!(matches!(
            dead.phi_assouad_estimate(&DimensionFunction::zero(), 2..=5, GapMode::ExactGap),
            Err(Error::AllExtinct)
        ));
    }

    #[test]
    fn at_least_gap_dominates_exact_gap() {
        let phi = DimensionFunction::log_log(1.0).unwrap();
        for seed in 0..10 {
            let t = tree(&[0.0, 0.5, 0.5], 18, seed);
            let exact = t.phi_assouad_estimate(&phi, 4..=10, GapMode::ExactGap).unwrap();
            let wide = t.phi_assouad_estimate(&phi, 4..=10, GapMode::AtLeastGap).unwrap();
            assert!(wide.s_hat >= exact.s_hat);
        }
    }

    #[test]
    fn theoretical_dims_examples() {
        let d = theoretical_dims(&dist(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!((d.box_dim, d.quasi_assouad, d.assouad), (1.0, 1.0, 1.0));
        let d = theoretical_dims(&dist(&[0.0, 0.5, 0.5])).unwrap();
        assert!((d.box_dim - 0.584962500721156181).abs() < 1e-15);
        assert_eq!(d.assouad, 1.0);
        let perc = percolation_offspring(3, 2, 0.6).unwrap();
        let d = theoretical_dims(&perc).unwrap();
        assert!((d.box_dim - 1.535026479282072892).abs() < 1e-12);
        assert!((d.assouad - 2.0).abs() < 1e-15);
        assert!(matches!(
            theoretical_dims(&percolation_offspring(2, 2, 0.2).unwrap()),
            Err(Error::SubcriticalOrCritical { .. })
        ));
    }

    #[test]
    fn percolation_examples() {
        let d = percolation_offspring(2, 1, 1.0).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0]);
        assert_eq!(d.metric_base(), 2.0);
        let d = percolation_offspring(3, 2, 0.6).unwrap();
        assert_eq!(d.max_offspring(), 9);
        assert_eq!(d.metric_base(), 3.0);
        assert!((d.mean_offspring() - 5.4).abs() < 1e-12);
        assert!((percolation_offspring(2, 2, 0.2).unwrap().mean_offspring() - 0.8).abs() < 1e-12);
        assert!(percolation_offspring(1, 2, 0.5).is_err());
        assert!(percolation_offspring(2, 2, 0.0).is_err());
    }

    #[test]
    fn tail_examples() {
        let d = dist(&[0.0, 0.0, 1.0]);
        for k in [3, 8, 12] {
            assert_eq!(chernoff_tail_empirical(&d, k, 0.1, 200, 5).unwrap().p_hat, 0.0);
        }
        let d = dist(&[0.0, 0.5, 0.5]);
        let t = chernoff_tail_empirical(&d, 6, 0.0, 20_000, 5).unwrap();
        assert!(t.p_hat > 0.0 && t.p_hat < 1.0);
        let again = chernoff_tail_empirical(&d, 6, 0.0, 20_000, 5).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn population_process_matches_tree_law() {
        // Z_6 from the population shortcut and from full trees have the same mean.
        let d = dist(&[0.2, 0.3, 0.5]);
        let n = 20_000u64;
        let mean_fast: f64 = (0..n)
            .map(|t| {
                let mut rng = seeded_rng(derive_seed(3, t, "a"));
                (0..6).fold(1u64, |z, _| d.sample_generation(z, &mut rng)) as f64
            })
            .sum::<f64>()
            / n as f64;
        let expected = d.mean_offspring().powi(6);
        assert!((mean_fast / expected - 1.0).abs() < 0.05, "{mean_fast} vs {expected}");
    }
}
