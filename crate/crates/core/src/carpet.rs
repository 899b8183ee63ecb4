//! One-variable random Bedford–McMullen carpets.
//!
//! A template selects cells of an `m × n` grid (`m < n`); its maps contract
//! by `1/m` horizontally and `1/n` vertically. Along a coding the widths and
//! heights of level-`k` rectangles shrink at different rates, so a ball of
//! radius `R` is tracked through two stopping levels: `k₁(R)`, where the
//! width reaches `R`, and `k₂(R) ≤ k₁(R)`, where the height does.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::dimfunc::DimensionFunction;
use crate::error::{Error, Result};
use crate::onevar_ss::LOG_SCALE_TOL;
use crate::rng::seeded_rng;

/// Structural statistics of a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CarpetStats {
    /// Number of selected cells.
    pub maps: u32,
    /// Number of non-empty columns.
    pub columns: u32,
    /// Largest number of cells in one column.
    pub max_column: u32,
}

/// Count `(N, B, C)` for a set of cells, rejecting duplicates and cells off the grid.
pub fn derive_stats(m: u32, n: u32, cells: &[(u32, u32)]) -> Result<CarpetStats> {
    let mut seen = BTreeSet::new();
    let mut per_column = vec![0u32; m as usize];
    for &(a, b) in cells {
        if a >= m || b >= n {
            return Err(Error::OutOfGrid { a, b, m, n });
        }
        if !seen.insert((a, b)) {
            return Err(Error::DuplicateCell(a, b));
        }
        per_column[a as usize] += 1;
    }
    Ok(CarpetStats {
        maps: cells.len() as u32,
        columns: per_column.iter().filter(|&&c| c > 0).count() as u32,
        max_column: per_column.iter().copied().max().unwrap_or(0),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TemplateSpec", into = "TemplateSpec")]
pub struct CarpetTemplate {
    m: u32,
    n: u32,
    cells: Vec<(u32, u32)>,
    stats: CarpetStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TemplateSpec {
    m: u32,
    n: u32,
    cells: Vec<[u32; 2]>,
}

impl TryFrom<TemplateSpec> for CarpetTemplate {
    type Error = Error;
    fn try_from(s: TemplateSpec) -> Result<Self> {
        CarpetTemplate::new(s.m, s.n, s.cells.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<CarpetTemplate> for TemplateSpec {
    fn from(t: CarpetTemplate) -> Self {
        TemplateSpec { m: t.m, n: t.n, cells: t.cells.iter().map(|&(a, b)| [a, b]).collect() }
    }
}

impl CarpetTemplate {
    pub fn new(m: u32, n: u32, cells: Vec<(u32, u32)>) -> Result<Self> {
        if m < 2 || n <= m {
            return Err(Error::InvalidFamily(format!("need 2 <= m < n, got m={m} n={n}")));
        }
        let stats = derive_stats(m, n, &cells)?;
        if stats.maps == 0 {
            return Err(Error::InvalidFamily("template selects no cells".into()));
        }
        Ok(Self { m, n, cells, stats })
    }

    /// Every cell of the `m × n` grid.
    pub fn full_grid(m: u32, n: u32) -> Result<Self> {
        Self::new(m, n, (0..m).flat_map(|a| (0..n).map(move |b| (a, b))).collect())
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn cells(&self) -> &[(u32, u32)] {
        &self.cells
    }

    pub fn stats(&self) -> CarpetStats {
        self.stats
    }

    /// `log B / log m`.
    pub fn column_exponent(&self) -> f64 {
        (self.stats.columns as f64).ln() / (self.m as f64).ln()
    }

    /// `log C / log n`.
    pub fn fibre_exponent(&self) -> f64 {
        (self.stats.max_column as f64).ln() / (self.n as f64).ln()
    }
}

/// JSON form: `{"m": 2, "n": 4, "cells": [[0, 0], …], "p": 1.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarpetEntry {
    #[serde(flatten)]
    pub template: CarpetTemplate,
    #[serde(rename = "p")]
    pub weight: f64,
}

/// Expected logarithms `E log(·)` of the template statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMeans {
    pub m: f64,
    pub n: f64,
    pub maps: f64,
    pub columns: f64,
    pub max_column: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarpetFamily {
    entries: Vec<CarpetEntry>,
    log_means: LogMeans,
}

/// Global bound on the row count of any template.
pub const MAX_ROWS: u32 = 4096;

impl CarpetFamily {
    pub fn new(entries: Vec<CarpetEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidFamily("family has no entries".into()));
        }
        if entries.iter().any(|e| !(e.weight.is_finite() && e.weight > 0.0)) {
            return Err(Error::InvalidFamily("weights must be positive".into()));
        }
        if let Some(e) = entries.iter().find(|e| e.template.n > MAX_ROWS) {
            return Err(Error::InvalidFamily(format!("n = {} exceeds {MAX_ROWS}", e.template.n)));
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidFamily(format!("weights sum to {total}, not 1")));
        }
        let mean_log = |f: &dyn Fn(&CarpetTemplate) -> u32| -> f64 {
            entries.iter().map(|e| e.weight * (f(&e.template) as f64).ln()).sum()
        };
        let log_means = LogMeans {
            m: mean_log(&|t| t.m),
            n: mean_log(&|t| t.n),
            maps: mean_log(&|t| t.stats.maps),
            columns: mean_log(&|t| t.stats.columns),
            max_column: mean_log(&|t| t.stats.max_column),
        };
        Ok(Self { entries, log_means })
    }

    pub fn single(template: CarpetTemplate) -> Self {
        Self::new(vec![CarpetEntry { template, weight: 1.0 }]).expect("single template is valid")
    }

    /// Parse `{"entries": [...]}` or a bare entry list.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Wrapped {
            entries: Vec<CarpetEntry>,
        }
        let value: serde_json::Value = serde_json::from_str(text)?;
        let entries = if value.is_array() {
            serde_json::from_value(value)?
        } else {
            serde_json::from_value::<Wrapped>(value)?.entries
        };
        Self::new(entries)
    }

    pub fn entries(&self) -> &[CarpetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn log_means(&self) -> LogMeans {
        self.log_means
    }

    /// Branch point `log m̄ / log n̄` of the spectrum.
    pub fn spectrum_branch_point(&self) -> f64 {
        self.log_means.m / self.log_means.n
    }

    /// The almost-sure Assouad spectrum at `θ ∈ (0, 1)`.
    pub fn assouad_spectrum(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Domain { what: "theta", value: theta });
        }
        let g = &self.log_means;
        if theta <= self.spectrum_branch_point() {
            let horizontal = (g.columns + theta * g.max_column - theta * g.maps) / g.m;
            let vertical = (g.maps - g.columns - theta * g.max_column) / g.n;
            Ok((horizontal + vertical) / (1.0 - theta))
        } else {
            Ok(self.quasi_assouad())
        }
    }

    /// `log B̄/log m̄ + log(N̄/B̄)/log n̄`.
    pub fn box_dim(&self) -> f64 {
        let g = &self.log_means;
        g.columns / g.m + (g.maps - g.columns) / g.n
    }

    /// `log B̄/log m̄ + log C̄/log n̄`.
    pub fn quasi_assouad(&self) -> f64 {
        let g = &self.log_means;
        g.columns / g.m + g.max_column / g.n
    }

    /// `max log B/log m + max log C/log n`, maxima taken independently.
    pub fn assouad_dim(&self) -> f64 {
        let first = self.entries.iter().map(|e| e.template.column_exponent()).fold(f64::NEG_INFINITY, f64::max);
        let second = self.entries.iter().map(|e| e.template.fibre_exponent()).fold(f64::NEG_INFINITY, f64::max);
        first + second
    }

    /// Largest `φ(R)` for which the upper estimate is stated: `log n̄/log m̄ − 1`.
    pub fn affinity_band_limit(&self) -> f64 {
        self.log_means.n / self.log_means.m - 1.0
    }

    /// Lowest-index maximisers of `log B/log m` and `log C/log n`.
    pub fn maximizers(&self) -> (usize, usize) {
        let argmax = |f: &dyn Fn(&CarpetTemplate) -> f64| -> usize {
            let mut best = 0;
            for (i, e) in self.entries.iter().enumerate() {
                if f(&e.template) > f(&self.entries[best].template) {
                    best = i;
                }
            }
            best
        };
        (argmax(&|t| t.column_exponent()), argmax(&|t| t.fibre_exponent()))
    }

    pub fn sample_coding(&self, length: usize, seed: u64) -> Result<CarpetCoding> {
        if length < 1 {
            return Err(Error::InvalidArgument("coding length must be at least 1".into()));
        }
        let letters = if self.entries.len() == 1 {
            vec![0; length]
        } else {
            let sampler = WeightedIndex::new(self.entries.iter().map(|e| e.weight))
                .map_err(|e| Error::InvalidFamily(e.to_string()))?;
            let mut rng = seeded_rng(seed);
            (0..length).map(|_| sampler.sample(&mut rng) as u32).collect()
        };
        CarpetCoding::from_letters(self.clone(), letters, seed)
    }
}

/// Whether the `φ ≤ log n̄/log m̄ − 1` band is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandPolicy {
    /// Reject scales where `φ(R)` exceeds the band (upper, quasi-Assouad regime).
    #[default]
    Enforce,
    /// Accept any `φ` (lower, Assouad regime).
    Ignore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarpetCoding {
    family: CarpetFamily,
    letters: Vec<u32>,
    seed: u64,
    log_width: Vec<f64>,
    log_height: Vec<f64>,
    log_columns: Vec<f64>,
    log_max_column: Vec<f64>,
}

/// Result of the two-window covering estimate for one ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarpetWindow {
    /// `(k₁(R), k₂(R))`.
    pub big: (usize, usize),
    /// `(k₁(r), k₂(r))`.
    pub small: (usize, usize),
    /// `Σ_{(k₂(R), k₂(r)]} log C + Σ_{(k₁(R), k₁(r)]} log B`.
    pub log_count: f64,
    /// `log(R/r) = φ(R)·|log R|`.
    pub log_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarpetEstimate {
    pub s_hat: f64,
    /// Start level `k` (so `k₂(R) = k`) and its window.
    pub k: usize,
    pub window: CarpetWindow,
}

/// One two-block event: `ω_i = λ₂` on `[l, l + fibre_len)` and `ω_i = λ₁` on
/// `[l', l' + column_len)`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoBlockEvent {
    pub l: usize,
    pub l_prime: usize,
    pub fibre_len: usize,
    pub column_len: usize,
}

fn prefix(letters: &[u32], f: impl Fn(u32) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(letters.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for &x in letters {
        acc += f(x);
        out.push(acc);
    }
    out
}

fn least_level(prefix: &[f64], u: f64) -> usize {
    prefix.partition_point(|&s| s < u - LOG_SCALE_TOL).max(1)
}

impl CarpetCoding {
    pub fn from_letters(family: CarpetFamily, letters: Vec<u32>, seed: u64) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument("empty coding".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&x| x as usize >= family.len()) {
            return Err(Error::InvalidArgument(format!("letter {bad} not in the family")));
        }
        let t = |x: u32| family.entries[x as usize].template.clone();
        let log_width = prefix(&letters, |x| (t(x).m as f64).ln());
        let log_height = prefix(&letters, |x| (t(x).n as f64).ln());
        let log_columns = prefix(&letters, |x| (t(x).stats.columns as f64).ln());
        let log_max_column = prefix(&letters, |x| (t(x).stats.max_column as f64).ln());
        Ok(Self { family, letters, seed, log_width, log_height, log_columns, log_max_column })
    }

    pub fn family(&self) -> &CarpetFamily {
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

    /// `|log Π_{i≤k} n_{ω_i}^{−1}|`, the log-height at level `k`.
    pub fn log_height(&self, k: usize) -> f64 {
        self.log_height[k]
    }

    pub fn log_width(&self, k: usize) -> f64 {
        self.log_width[k]
    }

    /// `(k₁(R), k₂(R))`: least levels at which width and height drop to `R`.
    pub fn k1_k2(&self, r: f64) -> Result<(usize, usize)> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain { what: "scale", value: r });
        }
        self.k1_k2_log(-r.ln())
    }

    pub fn k1_k2_log(&self, u: f64) -> Result<(usize, usize)> {
        let k1 = least_level(&self.log_width, u);
        let k2 = least_level(&self.log_height, u);
        if k1 > self.len() {
            return Err(Error::OutOfDepth { length: self.len() });
        }
        Ok((k1, k2))
    }

    /// Two-window covering estimate of `B(x, R)` by `R^{1+φ(R)}`-balls, for `R = e^{−u}`.
    pub fn covering_estimate_log(&self, u: f64, phi: &DimensionFunction, policy: BandPolicy) -> Result<CarpetWindow> {
        let p = phi.eval_log(u)?;
        if policy == BandPolicy::Enforce {
            let limit = self.family.affinity_band_limit();
            if p > limit {
                return Err(Error::PhiExceedsAffinityBand { phi: p, limit });
            }
        }
        let big = self.k1_k2_log(u)?;
        let small = self.k1_k2_log(u * (1.0 + p))?;
        let log_count = (self.log_max_column[small.1] - self.log_max_column[big.1])
            + (self.log_columns[small.0] - self.log_columns[big.0]);
        Ok(CarpetWindow { big, small, log_count, log_ratio: p * u })
    }

    pub fn covering_estimate(&self, r: f64, phi: &DimensionFunction, policy: BandPolicy) -> Result<CarpetWindow> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Domain { what: "scale", value: r });
        }
        self.covering_estimate_log(-r.ln(), phi, policy)
    }

    /// Largest `log N / log(R/r)` over start levels `k`, with `R` the height
    /// of level-`k` rectangles.
    pub fn phi_assouad_estimate(
        &self,
        phi: &DimensionFunction,
        k_range: RangeInclusive<usize>,
        policy: BandPolicy,
    ) -> Result<CarpetEstimate> {
        let mut best: Option<CarpetEstimate> = None;
        let mut band_error = None;
        for k in k_range {
            if k == 0 || k > self.len() {
                continue;
            }
            let u = self.log_height[k];
            let window = match self.covering_estimate_log(u, phi, policy) {
                Ok(w) => w,
                Err(e @ Error::PhiExceedsAffinityBand { .. }) => {
                    band_error.get_or_insert(e);
                    continue;
                }
                Err(_) => continue,
            };
            if window.log_ratio <= 0.0 {
                continue;
            }
            let s = window.log_count / window.log_ratio;
            if best.is_none_or(|b| s > b.s_hat) {
                best = Some(CarpetEstimate { s_hat: s, k, window });
            }
        }
        match (best, band_error) {
            (Some(b), _) => Ok(b),
            (None, Some(e)) => Err(e),
            (None, None) => Err(Error::NoAdmissiblePair),
        }
    }

    /// All two-block events along the coding.
    ///
    /// With `λ₁, λ₂` the maximisers of `log B/log m` and `log C/log n`,
    /// `ψ(l) = φ(n_min^{−l})·log n₂/log n_max` and `κ = log n₂/log m₁`, event
    /// `l` asks for `⌈ψ(l)l⌉` copies of `λ₂` from letter `l` and `⌈κψ(l)l⌉`
    /// copies of `λ₁` from `l' = k₁(R)`, where `R` is the least scale with
    /// `k₂(R) = l`.
    pub fn detect_two_block_runs(&self, phi: &DimensionFunction) -> Vec<TwoBlockEvent> {
        let (first, second) = self.family.maximizers();
        let entries = &self.family.entries;
        let ln_n = |i: usize| (entries[i].template.n as f64).ln();
        let n_min = entries.iter().map(|e| e.template.n).min().expect("nonempty") as f64;
        let n_max = entries.iter().map(|e| e.template.n).max().expect("nonempty") as f64;
        let scale = ln_n(second) / n_max.ln();
        let kappa = ln_n(second) / (entries[first].template.m as f64).ln();

        let streak_of = |target: u32| -> Vec<usize> {
            let mut s = vec![0usize; self.len() + 1];
            for i in (0..self.len()).rev() {
                if self.letters[i] == target {
                    s[i] = s[i + 1] + 1;
                }
            }
            s
        };
        let fibre_streak = streak_of(second as u32);
        let column_streak = if first == second { fibre_streak.clone() } else { streak_of(first as u32) };

        let mut events = Vec::new();
        for l in 1..=self.len() {
            let Ok(p) = phi.eval_log(l as f64 * n_min.ln()) else { continue };
            let psi_l = p * scale * l as f64;
            let fibre_len = ((psi_l - 1e-9).ceil() as usize).max(1);
            let column_len = ((kappa * psi_l - 1e-9).ceil() as usize).max(1);
            let l_prime = least_level(&self.log_width, self.log_height[l]);
            if l_prime - 1 + column_len > self.len() {
                break;
            }
            if l - 1 + fibre_len > self.len() {
                continue;
            }
            if fibre_streak[l - 1] >= fibre_len && column_streak[l_prime - 1] >= column_len {
                let event = TwoBlockEvent { l, l_prime, fibre_len, column_len };
                assert!(self.event_holds(event), "two-block detector reported an invalid event");
                events.push(event);
            }
        }
        events
    }

    /// Direct re-check of an event against the letters and the stopping levels.
    pub fn event_holds(&self, e: TwoBlockEvent) -> bool {
        let (first, second) = self.family.maximizers();
        let run = |start: usize, len: usize, letter: usize| {
            start >= 1
                && start - 1 + len <= self.len()
                && self.letters[start - 1..start - 1 + len].iter().all(|&x| x as usize == letter)
        };
        let target = self.log_height[e.l] - LOG_SCALE_TOL;
        let l_prime_ok = e.l_prime >= 1
            && e.l_prime <= self.len()
            && self.log_width[e.l_prime] >= target
            && (e.l_prime == 1 || self.log_width[e.l_prime - 1] < target);
        l_prime_ok && run(e.l, e.fibre_len, second) && run(e.l_prime, e.column_len, first)
    }
}

/// The two example templates: `F₁` on a 3×5 grid with `(N, B, C) = (5, 3, 3)`
/// and `F₂` on a 2×4 grid with `(N, B, C) = (4, 2, 3)`.
pub fn example_templates() -> (CarpetTemplate, CarpetTemplate) {
    let f1 = CarpetTemplate::new(3, 5, vec![(0, 0), (0, 2), (0, 4), (1, 1), (2, 3)]).expect("valid");
    let f2 = CarpetTemplate::new(2, 4, vec![(0, 0), (0, 1), (0, 3), (1, 2)]).expect("valid");
    (f1, f2)
}
