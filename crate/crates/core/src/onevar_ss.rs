//! One-variable random homogeneous self-similar sets.
//!
//! At every construction level a single IFS is drawn from a finite family and
//! applied to all cylinders of that level. Cylinders at level `k` all have the
//! same diameter `Π_{i≤k} c(ω_i)` and the same number of level-`l`
//! descendants, so the covering number of any `R`-ball by `r`-balls reduces to
//! a product of branch counts over a window of the coding.

use std::ops::RangeInclusive;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::dimfunc::DimensionFunction;
use crate::error::{Error, Result};
use crate::ldp::BoundedDiscreteRV;
use crate::rng::seeded_rng;

/// Slack, in log-scale, within which a prefix product counts as reaching a
/// target scale.
pub const LOG_SCALE_TOL: f64 = 1e-9;

/// Exponents closer than this are treated as equal.
const EXPONENT_TOL: f64 = 1e-12;

/// A homogeneous IFS: `N` similarities sharing the ratio `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousIfs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(rename = "N")]
    pub branch_count: u32,
    #[serde(rename = "c")]
    pub ratio: f64,
}

impl HomogeneousIfs {
    pub fn new(branch_count: u32, ratio: f64) -> Self {
        Self { id: None, branch_count, ratio }
    }

    /// `−log N / log c`, the similarity dimension of this IFS alone.
    pub fn exponent(&self) -> f64 {
        (self.branch_count as f64).ln() / -self.ratio.ln()
    }

    /// `S^t = N c^t`.
    pub fn similarity_sum(&self, t: f64) -> f64 {
        self.branch_count as f64 * self.ratio.powf(t)
    }
}

/// JSON form of one family entry: `{"N": 2, "c": 0.5, "p": 0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsEntry {
    #[serde(flatten)]
    pub ifs: HomogeneousIfs,
    #[serde(rename = "p")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsFamilySpec {
    pub entries: Vec<IfsEntry>,
    #[serde(default)]
    pub allow_degenerate: bool,
}

/// A finite family of homogeneous IFSs with selection weights.
#[derive(Debug, Clone, PartialEq)]
pub struct IfsFamily {
    entries: Vec<IfsEntry>,
    c_inf: f64,
    c_sup: f64,
    assouad: f64,
}

impl IfsFamily {
    /// Validated family. Rejects almost deterministic families, where every
    /// entry of positive weight has the same exponent.
    pub fn new(entries: Vec<IfsEntry>) -> Result<Self> {
        Self::build(entries, false)
    }

    /// Like [`IfsFamily::new`] but accepts almost deterministic families,
    /// including single-entry ones and zero weights.
    pub fn new_degenerate(entries: Vec<IfsEntry>) -> Result<Self> {
        Self::build(entries, true)
    }

    pub fn from_spec(spec: IfsFamilySpec) -> Result<Self> {
        Self::build(spec.entries, spec.allow_degenerate)
    }

    /// Parse `{"entries": [...]}` or a bare entry list.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let spec = if value.is_array() {
            IfsFamilySpec { entries: serde_json::from_value(value)?, allow_degenerate: false }
        } else {
            serde_json::from_value(value)?
        };
        Self::from_spec(spec)
    }

    /// Convenience: `(N, c, p)` triples.
    pub fn from_triples(triples: &[(u32, f64, f64)], allow_degenerate: bool) -> Result<Self> {
        let entries = triples
            .iter()
            .map(|&(n, c, p)| IfsEntry { ifs: HomogeneousIfs::new(n, c), weight: p })
            .collect();
        Self::build(entries, allow_degenerate)
    }

    fn build(entries: Vec<IfsEntry>, allow_degenerate: bool) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidFamily("family has no entries".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            let ifs = &e.ifs;
            if ifs.branch_count < 1 {
                return Err(Error::InvalidFamily(format!("entry {i}: N must be at least 1")));
            }
            if !(ifs.ratio > 0.0 && ifs.ratio < 1.0) {
                return Err(Error::InvalidFamily(format!("entry {i}: ratio {} not in (0, 1)", ifs.ratio)));
            }
            if ifs.branch_count as f64 * ifs.ratio > 1.0 + 1e-12 {
                return Err(Error::InvalidFamily(format!(
                    "entry {i}: N·c = {} > 1 violates the open set condition",
                    ifs.branch_count as f64 * ifs.ratio
                )));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(Error::InvalidFamily(format!("entry {i}: bad weight {}", e.weight)));
            }
            if !allow_degenerate && e.weight == 0.0 {
                return Err(Error::InvalidFamily(format!("entry {i}: weight must be positive")));
            }
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidFamily(format!("weights sum to {total}, not 1")));
        }
        let support: Vec<&IfsEntry> = entries.iter().filter(|e| e.weight > 0.0).collect();
        let c_inf = support.iter().map(|e| e.ifs.ratio).fold(f64::INFINITY, f64::min);
        let c_sup = support.iter().map(|e| e.ifs.ratio).fold(0.0, f64::max);
        let exponents: Vec<f64> = support.iter().map(|e| e.ifs.exponent()).collect();
        let assouad = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lowest = exponents.iter().copied().fold(f64::INFINITY, f64::min);
        if !allow_degenerate && assouad - lowest <= EXPONENT_TOL {
            return Err(Error::InvalidFamily(
                "family is almost deterministic (all exponents equal)".into(),
            ));
        }
        Ok(Self { entries, c_inf, c_sup, assouad })
    }

    pub fn entries(&self) -> &[IfsEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn c_inf(&self) -> f64 {
        self.c_inf
    }

    pub fn c_sup(&self) -> f64 {
        self.c_sup
    }

    /// `γ = log c_inf / log c_sup`.
    pub fn gamma(&self) -> f64 {
        self.c_inf.ln() / self.c_sup.ln()
    }

    pub fn to_spec(&self) -> IfsFamilySpec {
        IfsFamilySpec { entries: self.entries.clone(), allow_degenerate: false }
    }

    /// Almost-sure box (and Hausdorff, quasi-Assouad) dimension
    /// `Σ p log N / Σ p log(1/c)`.
    pub fn box_dim(&self) -> f64 {
        let num: f64 = self.entries.iter().map(|e| e.weight * (e.ifs.branch_count as f64).ln()).sum();
        let den: f64 = self.entries.iter().map(|e| e.weight * -e.ifs.ratio.ln()).sum();
        num / den
    }

    /// Root of `E(log S^s) = 0` by bisection; a cross-check of [`IfsFamily::box_dim`].
    pub fn box_dim_bisection(&self) -> f64 {
        let f = |s: f64| -> f64 {
            self.entries
                .iter()
                .map(|e| e.weight * ((e.ifs.branch_count as f64).ln() + s * e.ifs.ratio.ln()))
                .sum()
        };
        let (mut lo, mut hi) = (0.0f64, self.assouad.max(0.0) + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi.max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Almost-sure Assouad dimension `max log N_λ / log(1/c(λ))` over the support.
    pub fn assouad_dim(&self) -> f64 {
        self.assouad
    }

    /// Entries whose exponent is within `eps` of the Assouad dimension, and
    /// their total weight.
    pub fn extreme_set(&self, eps: f64) -> ExtremeSet {
        let cutoff = self.assouad - eps.max(0.0) - EXPONENT_TOL;
        let members: Vec<usize> = (0..self.entries.len())
            .filter(|&i| self.entries[i].ifs.exponent() >= cutoff)
            .collect();
        let weight = members.iter().map(|&i| self.entries[i].weight).sum();
        ExtremeSet { members, weight }
    }

    /// The law of `log S^s_{ω₁} = log N + s log c` as a finite-atom variable.
    pub fn log_similarity_rv(&self, s: f64) -> Result<BoundedDiscreteRV> {
        BoundedDiscreteRV::new(
            self.entries
                .iter()
                .filter(|e| e.weight > 0.0)
                .map(|e| ((e.ifs.branch_count as f64).ln() + s * e.ifs.ratio.ln(), e.weight))
                .collect(),
        )
    }

    /// I.i.d. letters with law `p`.
    pub fn sample_coding(&self, length: usize, seed: u64) -> Result<CodingSequence> {
        if length < 1 {
            return Err(Error::InvalidArgument("coding length must be at least 1".into()));
        }
        let letters: Vec<u32> = if self.entries.len() == 1 {
            vec![0; length]
        } else {
            let weights: Vec<f64> = self.entries.iter().map(|e| e.weight).collect();
            let sampler = WeightedIndex::new(&weights).map_err(|e| Error::InvalidFamily(e.to_string()))?;
            let mut rng = seeded_rng(seed);
            (0..length).map(|_| sampler.sample(&mut rng) as u32).collect()
        };
        CodingSequence::from_letters(self.clone(), letters, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeSet {
    pub members: Vec<usize>,
    pub weight: f64,
}

impl ExtremeSet {
    pub fn contains(&self, entry: usize) -> bool {
        self.members.contains(&entry)
    }
}

/// A sampled coding `ω₁ … ω_L` with prefix sums of `log(1/c)` and `log N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingSequence {
    family: IfsFamily,
    letters: Vec<u32>,
    seed: u64,
    /// `log_scale[k] = Σ_{i≤k} log(1/c(ω_i))`, so `R = exp(−log_scale[k])`.
    log_scale: Vec<f64>,
    log_count: Vec<f64>,
}

/// `Π N_{ω_i}` over a window, in log-space and, when it fits, as an integer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCount {
    pub log_count: f64,
    pub exact: Option<u128>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsWitness {
    pub k: usize,
    pub l: usize,
    pub log_count: f64,
    /// `log(R / r)`.
    pub log_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsEstimate {
    pub s_hat: f64,
    pub witness: SsWitness,
}

/// A stretch `[n, n + run_length)` (1-based letters) lying in the extreme set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub n: usize,
    pub run_length: usize,
}

impl CodingSequence {
    pub fn from_letters(family: IfsFamily, letters: Vec<u32>, seed: u64) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument("empty coding".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&x| x as usize >= family.len()) {
            return Err(Error::InvalidArgument(format!("letter {bad} not in the family")));
        }
        let mut log_scale = Vec::with_capacity(letters.len() + 1);
        let mut log_count = Vec::with_capacity(letters.len() + 1);
        let (mut a, mut b) = (0.0f64, 0.0f64);
        log_scale.push(a);
        log_count.push(b);
        for &x in &letters {
            let ifs = &family.entries[x as usize].ifs;
            a += -ifs.ratio.ln();
            b += (ifs.branch_count as f64).ln();
            log_scale.push(a);
            log_count.push(b);
        }
        Ok(Self { family, letters, seed, log_scale, log_count })
    }

    pub fn family(&self) -> &IfsFamily {
        &self.family
    }

    pub fn letters(&self) -> &[u32] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `|log Π_{i≤k} c(ω_i)|`.
    pub fn log_scale(&self, k: usize) -> f64 {
        self.log_scale[k]
    }

    /// Least `k` with `Π_{i≤k} c(ω_i) ≤ R`.
    pub fn k_of_r(&self, r: f64) -> Result<usize> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain { what: "scale", value: r });
        }
        self.level_at_log_scale(-r.ln())
    }

    /// Least `k ≥ 1` with `log_scale(k) ≥ u`, found by binary search.
    pub fn level_at_log_scale(&self, u: f64) -> Result<usize> {
        let k = self.log_scale.partition_point(|&s| s < u - LOG_SCALE_TOL).max(1);
        if k > self.len() {
            return Err(Error::OutOfDepth { length: self.len() });
        }
        Ok(k)
    }

    /// `Π_{i=k+1}^{l} N_{ω_i}`.
    pub fn covering_count(&self, k: usize, l: usize) -> Result<WindowCount> {
        if k > l || l > self.len() {
            return Err(Error::InvalidArgument(format!("need k <= l <= L, got k={k} l={l}")));
        }
        let exact = self.letters[k..l].iter().try_fold(1u128, |acc, &x| {
            acc.checked_mul(self.family.entries[x as usize].ifs.branch_count as u128)
        });
        Ok(WindowCount { log_count: self.log_count[l] - self.log_count[k], exact })
    }

    /// Level `l` of `r = R^{1+φ(R)}` for `R` at level `k`, at least `k + 1`.
    /// `None` when `φ` is undefined at `R`.
    fn paired_level(&self, phi: &DimensionFunction, k: usize) -> Option<Result<usize>> {
        let u = self.log_scale[k];
        let p = phi.eval_log(u).ok()?;
        Some(self.level_at_log_scale(u * (1.0 + p)).map(|l| l.max(k + 1)))
    }

    /// Largest `log count(k, l) / log(R/r)` over `k` in `k_range`, where `R`
    /// is the level-`k` diameter and `l` the level of `R^{1+φ(R)}`.
    ///
    /// Every cylinder at a given level is identical, so the supremum over
    /// centres is attained by any of them.
    pub fn phi_assouad_estimate(&self, phi: &DimensionFunction, k_range: RangeInclusive<usize>) -> Result<SsEstimate> {
        let mut best: Option<SsEstimate> = None;
        for k in k_range {
            if k == 0 || k >= self.len() {
                continue;
            }
            let Some(Ok(l)) = self.paired_level(phi, k) else { continue };
            let log_count = self.log_count[l] - self.log_count[k];
            let log_ratio = self.log_scale[l] - self.log_scale[k];
            let s = log_count / log_ratio;
            if best.is_none_or(|b| s > b.s_hat) {
                best = Some(SsEstimate { s_hat: s, witness: SsWitness { k, l, log_count, log_ratio } });
            }
        }
        best.ok_or(Error::NoAdmissiblePair)
    }

    /// Required run length `max(1, ⌈ψ(n)·n⌉)` with `ψ(n) = φ(c_sup^n)·γ`;
    /// `None` where `φ` is undefined at `c_sup^n`.
    pub fn required_run(&self, phi: &DimensionFunction, n: usize) -> Option<usize> {
        let u = n as f64 * -self.family.c_sup.ln();
        let psi = phi.eval_log(u).ok()? * self.family.gamma();
        Some(((psi * n as f64 - 1e-9).ceil() as usize).max(1))
    }

    /// Every `n` such that all of `ω_n, …, ω_{n+⌈ψ(n)n⌉−1}` lie in `T_ε`.
    pub fn detect_runs(&self, phi: &DimensionFunction, eps: f64) -> Vec<Run> {
        let extreme = self.family.extreme_set(eps);
        let member: Vec<bool> = (0..self.family.len()).map(|i| extreme.contains(i)).collect();
        let len = self.len();
        // streak[i]: number of consecutive members starting at 0-based index i.
        let mut streak = vec![0usize; len + 1];
        for i in (0..len).rev() {
            if member[self.letters[i] as usize] {
                streak[i] = streak[i + 1] + 1;
            }
        }
        let mut runs = Vec::new();
        for n in 1..=len {
            let Some(need) = self.required_run(phi, n) else { continue };
            if n - 1 + need > len {
                break;
            }
            if streak[n - 1] >= need {
                let run = Run { n, run_length: need };
                assert!(self.run_holds(&extreme, run), "run detector reported an invalid run");
                runs.push(run);
            }
        }
        runs
    }

    /// Direct membership scan of a reported run.
    pub fn run_holds(&self, extreme: &ExtremeSet, run: Run) -> bool {
        run.n >= 1
            && run.n - 1 + run.run_length <= self.len()
            && self.letters[run.n - 1..run.n - 1 + run.run_length]
                .iter()
                .all(|&x| extreme.contains(x as usize))
    }
}
