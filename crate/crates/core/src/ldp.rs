//! Cramér rate functions for finite-atom random variables.
//!
//! `I(a) = sup_θ θa − log M(θ)` is computed by maximising the strictly
//! concave objective with a safeguarded Newton iteration on
//! `Λ'(θ) = a`, where `Λ = log M`.

use std::collections::HashMap;
use std::sync::Mutex;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded_rng};

const THETA_TOL: f64 = 1e-10;

/// A random variable with finitely many atoms `(value, probability)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedDiscreteRV {
    atoms: Vec<(f64, f64)>,
    mean: f64,
    ess_inf: f64,
    ess_sup: f64,
}

impl BoundedDiscreteRV {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        if atoms.iter().any(|&(v, p)| !v.is_finite() || !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidDistribution("atoms need finite values and positive probabilities".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let mean = atoms.iter().map(|&(v, p)| v * p).sum();
        let ess_inf = atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
        let ess_sup = atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { atoms, mean, ess_inf, ess_sup })
    }

    /// `±1` with probability one half each.
    pub fn rademacher() -> Self {
        Self::new(vec![(-1.0, 0.5), (1.0, 0.5)]).expect("valid")
    }

    /// Parse `v:p,v:p,…`.
    pub fn parse_atoms(text: &str) -> Result<Self> {
        let atoms = text
            .split(',')
            .map(|pair| {
                let (v, p) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("atom '{pair}' is not value:prob")))?;
                let v = v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad value in '{pair}'")))?;
                let p = p.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad probability in '{pair}'")))?;
                Ok((v, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn ess_inf(&self) -> f64 {
        self.ess_inf
    }

    pub fn ess_sup(&self) -> f64 {
        self.ess_sup
    }

    pub fn is_degenerate(&self) -> bool {
        self.ess_inf == self.ess_sup
    }

    /// Atoms shifted by `−mean`.
    pub fn centered(&self) -> Self {
        let m = self.mean;
        Self::new(self.atoms.iter().map(|&(v, p)| (v - m, p)).collect()).expect("shift keeps validity")
    }

    fn negated(&self) -> Self {
        Self::new(self.atoms.iter().map(|&(v, p)| (-v, p)).collect()).expect("negation keeps validity")
    }

    /// `M(θ) = E exp(θX)`.
    pub fn mgf(&self, theta: f64) -> f64 {
        self.atoms.iter().map(|&(v, p)| p * (theta * v).exp()).sum()
    }

    /// `log M(θ)`, evaluated without overflow.
    pub fn log_mgf(&self, theta: f64) -> f64 {
        let top = self.atoms.iter().map(|a| theta * a.0).fold(f64::NEG_INFINITY, f64::max);
        top + self.atoms.iter().map(|&(v, p)| p * (theta * v - top).exp()).sum::<f64>().ln()
    }

    /// Mean and variance of the exponentially tilted law, i.e. `Λ'(θ)` and `Λ''(θ)`.
    fn tilted_moments(&self, theta: f64) -> (f64, f64) {
        let top = self.atoms.iter().map(|a| theta * a.0).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for &(v, p) in &self.atoms {
            let w = p * (theta * v - top).exp();
            z += w;
            m1 += w * v;
            m2 += w * v * v;
        }
        let mean = m1 / z;
        (mean, (m2 / z - mean * mean).max(0.0))
    }

    /// The rate function `I(a)`, `+∞` outside `[ess_inf, ess_sup]`.
    pub fn rate(&self, a: f64) -> f64 {
        if a.is_nan() {
            return f64::NAN;
        }
        if self.is_degenerate() {
            return if a == self.mean { 0.0 } else { f64::INFINITY };
        }
        if a == self.mean {
            return 0.0;
        }
        if a < self.mean {
            return self.negated().rate(-a);
        }
        if a > self.ess_sup {
            return f64::INFINITY;
        }
        if a == self.ess_sup {
            let p_top: f64 = self.atoms.iter().filter(|x| x.0 == self.ess_sup).map(|x| x.1).sum();
            return -p_top.ln();
        }
        let theta = self.optimal_tilt(a);
        (theta * a - self.log_mgf(theta)).max(0.0)
    }

    /// Solve `Λ'(θ) = a` for `mean < a < ess_sup`.
    fn optimal_tilt(&self, a: f64) -> f64 {
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        while self.tilted_moments(hi).0 < a {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return hi;
            }
        }
        let mut theta = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (d1, d2) = self.tilted_moments(theta);
            let g = d1 - a;
            if g < 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            let newton = if d2 > 0.0 { theta - g / d2 } else { f64::NAN };
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            let step = (next - theta).abs();
            theta = next;
            if step <= THETA_TOL * 1e-2 * (1.0 + theta.abs()) || hi - lo <= THETA_TOL * 1e-2 * (1.0 + theta.abs()) {
                break;
            }
        }
        theta
    }

    /// `(e^{−(I(a)+δ)n}, e^{−(I(a)−δ)n})`, valid for `mean < a < ess_sup`.
    pub fn chernoff_interval(&self, a: f64, n: u64, delta: f64) -> Result<(f64, f64)> {
        if n < 1 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(delta >= 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be nonnegative, got {delta}")));
        }
        if !(a > self.mean && a < self.ess_sup) {
            return Err(Error::InvalidArgument(format!(
                "a = {a} not in (mean, ess_sup) = ({}, {})",
                self.mean, self.ess_sup
            )));
        }
        let i = self.rate(a);
        let n = n as f64;
        Ok(((-(i + delta) * n).exp(), (-(i - delta) * n).exp()))
    }

    /// Fraction of `trials` sums `S_n` with `S_n ≥ a·n`. Trial `t` draws from
    /// `derive_seed(seed, t, "ldp-tail")`.
    pub fn empirical_tail(&self, a: f64, n: u64, trials: u64, seed: u64) -> Result<TailCount> {
        if trials < 1 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        let threshold = a * n as f64 - 1e-9 * (a * n as f64).abs().max(1.0);
        let values: Vec<f64> = self.atoms.iter().map(|x| x.0).collect();
        let sampler = if self.atoms.len() > 1 {
            Some(WeightedIndex::new(self.atoms.iter().map(|x| x.1)).map_err(|e| Error::InvalidDistribution(e.to_string()))?)
        } else {
            None
        };
        let hits: u64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let sum: f64 = match &sampler {
                    Some(s) => {
                        let mut rng = seeded_rng(derive_seed(seed, t, "ldp-tail"));
                        (0..n).map(|_| values[s.sample(&mut rng)]).sum()
                    }
                    None => values[0] * n as f64,
                };
                u64::from(sum >= threshold)
            })
            .sum();
        Ok(TailCount { p_hat: hits as f64 / trials as f64, hits, trials })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCount {
    pub p_hat: f64,
    pub hits: u64,
    pub trials: u64,
}

/// `I` for a fixed variable, memoised per argument. The cache is guarded,
/// so a `RateFunction` can be shared between workers.
#[derive(Debug)]
pub struct RateFunction {
    rv: BoundedDiscreteRV,
    cache: Mutex<HashMap<u64, f64>>,
}

impl RateFunction {
    pub fn new(rv: BoundedDiscreteRV) -> Self {
        Self { rv, cache: Mutex::new(HashMap::new()) }
    }

    pub fn rv(&self) -> &BoundedDiscreteRV {
        &self.rv
    }

    pub fn eval(&self, a: f64) -> f64 {
        let key = a.to_bits();
        if let Some(&v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return v;
        }
        let v = self.rv.rate(a);
        self.cache.lock().expect("cache poisoned").insert(key, v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed form of the Rademacher rate function, by convex duality.
    fn rademacher_rate(a: f64) -> f64 {
        let term = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
        0.5 * term(1.0 + a) + 0.5 * term(1.0 - a)
    }

    #[test]
    fn mgf_examples() {
        let r = BoundedDiscreteRV::rademacher();
        assert_eq!(r.mgf(0.0), 1.0);
        assert!((r.mgf(1.0) - 1.5430806348152437785).abs() < 1e-15);
        let d = BoundedDiscreteRV::new(vec![(3.0, 1.0)]).unwrap();
        assert!((d.mgf(0.7) - (2.1f64).exp()).abs() < 1e-12);
        assert!((r.log_mgf(800.0) - (800.0 - 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn rate_examples() {
        let r = BoundedDiscreteRV::rademacher();
        assert_eq!(r.rate(0.0), 0.0);
        assert!((r.rate(1.0) - 2f64.ln()).abs() < 1e-15);
        // mpmath: 0.0201355135506888734
        assert!((r.rate(0.2) - 0.020135513550688873).abs() < 1e-10);
        assert_eq!(r.rate(1.5), f64::INFINITY);
        assert_eq!(r.rate(-1.5), f64::INFINITY);
    }

    #[test]
    fn rate_matches_closed_form() {
        let r = BoundedDiscreteRV::rademacher();
        for i in 1..=99 {
            let a = i as f64 / 100.0;
            assert!((r.rate(a) - rademacher_rate(a)).abs() < 1e-10, "a={a}");
            assert!((r.rate(-a) - rademacher_rate(a)).abs() < 1e-10, "a=-{a}");
        }
    }

    #[test]
    fn degenerate_rate() {
        let d = BoundedDiscreteRV::new(vec![(2.0, 1.0)]).unwrap();
        assert_eq!(d.rate(2.0), 0.0);
        assert_eq!(d.rate(2.1), f64::INFINITY);
    }

    #[test]
    fn chernoff_examples() {
        let r = BoundedDiscreteRV::rademacher();
        let (lo, hi) = r.chernoff_interval(0.2, 200, 0.0).unwrap();
        assert_eq!(lo, hi);
        assert!((hi - 0.017825902013168737).abs() < 1e-12);
        let (lo, hi) = r.chernoff_interval(0.2, 200, 0.01).unwrap();
        assert!(lo < 0.0178 && hi > 0.0179);
        assert!(r.chernoff_interval(0.2, 0, 0.0).is_err());
        assert!(r.chernoff_interval(1.0, 10, 0.0).is_err());
    }

    #[test]
    fn empirical_tail_edges() {
        let r = BoundedDiscreteRV::rademacher();
        assert_eq!(r.empirical_tail(-1.0, 50, 500, 1).unwrap().p_hat, 1.0);
        assert_eq!(r.empirical_tail(1.01, 50, 500, 1).unwrap().p_hat, 0.0);
        let a = r.empirical_tail(0.1, 50, 5000, 9).unwrap();
        assert_eq!(a, r.empirical_tail(0.1, 50, 5000, 9).unwrap());
        assert!(r.empirical_tail(0.1, 50, 0, 9).is_err());
    }

    #[test]
    fn centering() {
        let r = BoundedDiscreteRV::rademacher();
        assert_eq!(r.centered(), r);
        assert_eq!(BoundedDiscreteRV::new(vec![(3.0, 1.0)]).unwrap().centered().atoms(), &[(0.0, 1.0)]);
        let c = BoundedDiscreteRV::new(vec![(0.0, 0.5), (2.0, 0.5)]).unwrap().centered();
        assert_eq!(c.atoms(), &[(-1.0, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn parse_atoms() {
        let r = BoundedDiscreteRV::parse_atoms("-1:0.5, 1:0.5").unwrap();
        assert_eq!(r, BoundedDiscreteRV::rademacher());
        assert!(BoundedDiscreteRV::parse_atoms("1:0.5").is_err());
        assert!(BoundedDiscreteRV::parse_atoms("1-0.5").is_err());
    }

    #[test]
    fn rate_function_cache() {
        let f = RateFunction::new(BoundedDiscreteRV::rademacher());
        let v = f.eval(0.3);
        assert_eq!(v, f.eval(0.3));
        assert!((v - rademacher_rate(0.3)).abs() < 1e-10);
    }
}
