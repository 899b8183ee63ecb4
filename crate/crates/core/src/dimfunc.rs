//! Dimension functions `φ` and the scale pairing `r = R^{1+φ(R)}`.
//!
//! Every dimension function can be evaluated either at a scale `x` or at its
//! log-scale `u = |log x|`. Symbolic codings reach scales far below the
//! smallest positive `f64`, so the estimators work exclusively with `u`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest scale gap [`DimensionFunction::gap_levels`] will return.
pub const DEFAULT_LEVEL_CAP: u64 = 1 << 24;

/// Closed-form families plus a tabulated fallback for testing.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiFamily {
    /// `φ ≡ 0`, the Assouad dimension when paired with at-least-gap estimation.
    Zero,
    /// `φ ≡ c`.
    Constant(f64),
    /// `φ ≡ 1/θ − 1`, the Fraser–Yu spectrum at `θ`.
    PowerLaw(f64),
    /// `φ(x) = C·log|log x| / |log x|`, the threshold family.
    LogLog(f64),
    /// Piecewise-linear in `u = |log x|` through the given `(u, φ)` knots,
    /// held constant beyond the last knot. Knots must have increasing `u`.
    Tabulated(Vec<(f64, f64)>),
}

/// Outcome of the summability test `Σ_k exp(−φ(e^{−k})·k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Summability {
    Convergent,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub summability: Summability,
    /// Set when the result comes from the partial-sum trend rather than an
    /// analytic argument.
    pub heuristic: bool,
}

/// Which of the two monotone quantities failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneQuantity {
    Phi,
    PhiTimesLog,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonotoneCheck {
    Ok,
    Violation {
        /// Grid index of the second point of the offending pair.
        index: usize,
        /// `|log x|` at that point.
        log_scale: f64,
        quantity: MonotoneQuantity,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionFunction {
    family: PhiFamily,
    valid_below: f64,
}

impl DimensionFunction {
    pub fn new(family: PhiFamily) -> Result<Self> {
        let valid_below = match family {
            PhiFamily::LogLog(_) => (-std::f64::consts::E).exp(),
            _ => 1.0,
        };
        Self::with_valid_below(family, valid_below)
    }

    /// Construct with an explicit monotonicity threshold `x₀ ∈ (0, 1]`.
    pub fn with_valid_below(family: PhiFamily, valid_below: f64) -> Result<Self> {
        if !(valid_below > 0.0 && valid_below <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "valid_below must lie in (0, 1], got {valid_below}"
            )));
        }
        match &family {
            PhiFamily::Zero => {}
            PhiFamily::Constant(c) | PhiFamily::LogLog(c) => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "family parameter must be positive, got {c}"
                    )));
                }
            }
            PhiFamily::PowerLaw(theta) => {
                if !(*theta > 0.0 && *theta < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "theta must lie in (0, 1), got {theta}"
                    )));
                }
            }
            PhiFamily::Tabulated(knots) => {
                if knots.is_empty() {
                    return Err(Error::InvalidArgument("empty table".into()));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidArgument(
                        "table knots must have strictly increasing |log x|".into(),
                    ));
                }
                if knots.iter().any(|&(u, v)| !u.is_finite() || !v.is_finite() || v < 0.0) {
                    return Err(Error::InvalidArgument(
                        "table values must be finite and nonnegative".into(),
                    ));
                }
            }
        }
        Ok(Self { family, valid_below })
    }

    pub fn zero() -> Self {
        Self::new(PhiFamily::Zero).expect("zero is valid")
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(PhiFamily::Constant(c))
    }

    pub fn power_law(theta: f64) -> Result<Self> {
        Self::new(PhiFamily::PowerLaw(theta))
    }

    pub fn log_log(c: f64) -> Result<Self> {
        Self::new(PhiFamily::LogLog(c))
    }

    pub fn family(&self) -> &PhiFamily {
        &self.family
    }

    pub fn valid_below(&self) -> f64 {
        self.valid_below
    }

    /// `|log x₀|`; scales with smaller log-scale are outside the domain.
    pub fn min_log_scale(&self) -> f64 {
        -self.valid_below.ln()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, PhiFamily::Zero)
    }

    /// `φ(x)` for `0 < x < x₀`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) || x >= self.valid_below {
            return Err(Error::Domain { what: "phi", value: x });
        }
        Ok(self.formula(-x.ln()))
    }

    /// `φ(e^{−u})`, defined for `u > |log x₀|`.
    pub fn eval_log(&self, u: f64) -> Result<f64> {
        if !(u.is_finite() && u > 0.0) || u <= self.min_log_scale() {
            return Err(Error::Domain { what: "phi at log-scale", value: u });
        }
        Ok(self.formula(u))
    }

    fn formula(&self, u: f64) -> f64 {
        match &self.family {
            PhiFamily::Zero => 0.0,
            PhiFamily::Constant(c) => *c,
            PhiFamily::PowerLaw(theta) => 1.0 / theta - 1.0,
            PhiFamily::LogLog(c) => c * u.ln() / u,
            PhiFamily::Tabulated(knots) => interpolate(knots, u),
        }
    }

    /// Number of levels between `R = base^{−k}` and `r = R^{1+φ(R)}`, at least 1.
    pub fn gap_levels(&self, k: u64, base: f64) -> Result<u64> {
        self.gap_levels_capped(k, base, DEFAULT_LEVEL_CAP)
    }

    pub fn gap_levels_capped(&self, k: u64, base: f64, cap: u64) -> Result<u64> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if !(base > 1.0) {
            return Err(Error::InvalidArgument(format!("base must exceed 1, got {base}")));
        }
        let u = k as f64 * base.ln();
        let levels = self.eval_log(u)? * k as f64;
        // Round-off in φ·k must not push an exact integer up by one level.
        let gap = (levels - 1e-9).ceil().max(1.0);
        if !gap.is_finite() || gap > cap as f64 {
            return Err(Error::GapOverflow { levels: gap.min(u64::MAX as f64) as u64, cap });
        }
        Ok(gap as u64)
    }

    /// Classify `Σ_k exp(−φ(e^{−k})·k)`.
    ///
    /// Closed-form families are decided analytically; for `LogLog(C)` the
    /// term is exactly `k^{−C}`. Tabulated functions fall back to
    /// [`partial_sum_trend`] and are flagged heuristic.
    pub fn classify_summability(&self) -> Classification {
        let summability = match &self.family {
            PhiFamily::Zero => Summability::Divergent,
            PhiFamily::Constant(_) | PhiFamily::PowerLaw(_) => Summability::Convergent,
            PhiFamily::LogLog(c) => {
                if *c <= 1.0 {
                    Summability::Divergent
                } else {
                    Summability::Convergent
                }
            }
            PhiFamily::Tabulated(_) => {
                return Classification {
                    summability: partial_sum_trend(self, 1_000_000),
                    heuristic: true,
                }
            }
        };
        Classification { summability, heuristic: false }
    }

    /// Check that `φ(x)` and `φ(x)|log x|` are monotone on a geometric grid
    /// of `grid_points` scales spanning `(x₀·e^{−690/n}, x₀·e^{−690}]`.
    pub fn validate_monotone(&self, grid_points: usize) -> MonotoneCheck {
        let n = grid_points.max(2);
        let u0 = self.min_log_scale();
        let grid: Vec<f64> = (1..=n).map(|i| u0 + 690.0 * i as f64 / n as f64).collect();
        let phi: Vec<f64> = grid.iter().map(|&u| self.formula(u)).collect();
        let phi_log: Vec<f64> = grid.iter().zip(&phi).map(|(u, p)| u * p).collect();
        for (quantity, values) in [
            (MonotoneQuantity::Phi, &phi),
            (MonotoneQuantity::PhiTimesLog, &phi_log),
        ] {
            if let Some(index) = first_monotone_break(values) {
                return MonotoneCheck::Violation { index, log_scale: grid[index], quantity };
            }
        }
        MonotoneCheck::Ok
    }
}

fn interpolate(knots: &[(f64, f64)], u: f64) -> f64 {
    let idx = knots.partition_point(|&(ku, _)| ku <= u);
    if idx == 0 {
        return knots[0].1;
    }
    if idx == knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (u0, v0) = knots[idx - 1];
    let (u1, v1) = knots[idx];
    v0 + (v1 - v0) * (u - u0) / (u1 - u0)
}

/// Index of the first point where the direction of a sequence reverses.
fn first_monotone_break(values: &[f64]) -> Option<usize> {
    let mut direction = 0.0f64;
    for (i, w) in values.windows(2).enumerate() {
        let diff = w[1] - w[0];
        let tol = 1e-12 * w[0].abs().max(w[1].abs()).max(1.0);
        if diff.abs() <= tol {
            continue;
        }
        if direction == 0.0 {
            direction = diff.signum();
        } else if diff.signum() != direction {
            return Some(i + 1);
        }
    }
    None
}

/// Partial-sum heuristic for `Σ_{k ≤ K} exp(−φ(e^{−k})·k)`.
///
/// Reports `Divergent` when the last decade `(K/10, K]` still adds more than
/// 0.5 to the sum. Terms with `e^{−k}` outside the domain of `φ` are skipped.
pub fn partial_sum_trend(phi: &DimensionFunction, k_max: u64) -> Summability {
    let k_max = k_max.max(10);
    let start = k_max / 10;
    let tail: f64 = (start + 1..=k_max)
        .filter_map(|k| phi.eval_log(k as f64).ok().map(|v| (-v * k as f64).exp()))
        .sum();
    if tail > 0.5 {
        Summability::Divergent
    } else {
        Summability::Convergent
    }
}

impl FromStr for DimensionFunction {
    type Err = Error;

    /// Parses `zero`, `const:C`, `power:θ` and `loglog:C`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let param = |arg: Option<&str>| -> Result<f64> {
            let a = arg.ok_or_else(|| Error::Parse(format!("'{s}' needs a parameter")))?;
            a.parse::<f64>().map_err(|_| Error::Parse(format!("bad number in '{s}'")))
        };
        let family = match name.to_ascii_lowercase().as_str() {
            "zero" => {
                if arg.is_some() {
                    return Err(Error::Parse("'zero' takes no parameter".into()));
                }
                PhiFamily::Zero
            }
            "const" => PhiFamily::Constant(param(arg)?),
            "power" => PhiFamily::PowerLaw(param(arg)?),
            "loglog" => PhiFamily::LogLog(param(arg)?),
            _ => return Err(Error::Parse(format!("unknown dimension function '{s}'"))),
        };
        DimensionFunction::new(family).map_err(|e| Error::Parse(format!("'{s}': {e}")))
    }
}

impl fmt::Display for DimensionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            PhiFamily::Zero => write!(f, "zero"),
            PhiFamily::Constant(c) => write!(f, "const:{c}"),
            PhiFamily::PowerLaw(t) => write!(f, "power:{t}"),
            PhiFamily::LogLog(c) => write!(f, "loglog:{c}"),
            PhiFamily::Tabulated(k) => write!(f, "table:{}", k.len()),
        }
    }
}

impl Serialize for DimensionFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DimensionFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(DimensionFunction::zero().eval(0.5).unwrap(), 0.0);
        let p = DimensionFunction::power_law(0.5).unwrap();
        for x in [0.9, 0.3, 1e-10] {
            assert_eq!(p.eval(x).unwrap(), 1.0);
        }
        // ln(25 ln 2) / (25 ln 2), evaluated at 30 digits with mpmath.
        let v = DimensionFunction::log_log(1.0).unwrap().eval(2f64.powi(-25)).unwrap();
        assert!((v - 0.164603592673193083).abs() < 1e-14);
    }

    #[test]
    fn eval_domain_errors() {
        let ll = DimensionFunction::log_log(1.0).unwrap();
        assert!(matches!(ll.eval(0.5), Err(Error::Domain { .. })));
        assert!(ll.eval(0.0).is_err());
        assert!(ll.eval(1.0).is_err());
        assert!(DimensionFunction::zero().eval(1.5).is_err());
        assert!(ll.eval_log(1.0).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(DimensionFunction::zero().gap_levels(10, 2.0).unwrap(), 1);
        assert_eq!(DimensionFunction::power_law(0.5).unwrap().gap_levels(10, 2.0).unwrap(), 10);
        // 0.1646036 * 25 = 4.115 -> 5
        assert_eq!(DimensionFunction::log_log(1.0).unwrap().gap_levels(25, 2.0).unwrap(), 5);
    }

    #[test]
    fn gap_overflow() {
        let c = DimensionFunction::constant(1000.0).unwrap();
        assert!(matches!(c.gap_levels_capped(100, 2.0, 1000), Err(Error::GapOverflow { .. })));
        assert_eq!(c.gap_levels_capped(1, 2.0, 1000).unwrap(), 1000);
    }

    #[test]
    fn gap_nondecreasing_in_multiplier() {
        // 2^-k < e^-e from k = 4 on.
        assert!(DimensionFunction::log_log(1.0).unwrap().gap_levels(3, 2.0).is_err());
        for k in 4..=60 {
            let gaps: Vec<u64> = [0.25, 1.0, 3.0]
                .iter()
                .map(|&c| DimensionFunction::log_log(c).unwrap().gap_levels(k, 2.0).unwrap())
                .collect();
            assert!(gaps.windows(2).all(|w| w[0] <= w[1]), "k={k}: {gaps:?}");
        }
    }

    #[test]
    fn loglog_scale_identity() {
        for c in [0.25, 1.0, 3.0] {
            let phi = DimensionFunction::with_valid_below(PhiFamily::LogLog(c), 0.2).unwrap();
            for k in 2..=10_000u32 {
                let k = k as f64;
                let lhs = phi.eval_log(k).unwrap() * k;
                assert!((lhs - c * k.ln()).abs() < 1e-12, "c={c} k={k}");
            }
        }
    }

    #[test]
    fn classification_examples() {
        use Summability::*;
        let cases = [
            ("const:0.1", Convergent),
            ("loglog:1", Divergent),
            ("loglog:1.5", Convergent),
            ("zero", Divergent),
            ("power:0.5", Convergent),
        ];
        for (spec, want) in cases {
            let c = spec.parse::<DimensionFunction>().unwrap().classify_summability();
            assert_eq!(c.summability, want, "{spec}");
            assert!(!c.heuristic);
        }
    }

    #[test]
    fn classification_agrees_with_partial_sums() {
        for spec in ["zero", "const:0.1", "power:0.5", "loglog:0.25", "loglog:1", "loglog:1.5", "loglog:3"] {
            let phi: DimensionFunction = spec.parse().unwrap();
            assert_eq!(
                phi.classify_summability().summability,
                partial_sum_trend(&phi, 1_000_000),
                "{spec}"
            );
        }
    }

    #[test]
    fn tabulated_classification_is_heuristic() {
        let phi = DimensionFunction::new(PhiFamily::Tabulated(vec![(1.0, 0.0), (10.0, 0.0)])).unwrap();
        let c = phi.classify_summability();
        assert!(c.heuristic);
        assert_eq!(c.summability, Summability::Divergent);
    }

    #[test]
    fn monotone_examples() {
        assert_eq!(DimensionFunction::zero().validate_monotone(100), MonotoneCheck::Ok);
        let ll2 = DimensionFunction::with_valid_below(PhiFamily::LogLog(2.0), (-std::f64::consts::E).exp())
            .unwrap();
        assert_eq!(ll2.validate_monotone(1000), MonotoneCheck::Ok);

        let bumpy = DimensionFunction::new(PhiFamily::Tabulated(vec![
            (1.0, 0.5),
            (100.0, 0.1),
            (300.0, 0.4),
        ]))
        .unwrap();
        match bumpy.validate_monotone(200) {
            MonotoneCheck::Violation { quantity, log_scale, .. } => {
                assert_eq!(quantity, MonotoneQuantity::Phi);
                assert!(log_scale > 100.0 && log_scale < 110.0, "{log_scale}");
            }
            MonotoneCheck::Ok => panic!("expected a violation"),
        }
    }

    #[test]
    fn parse_roundtrip_and_errors() {
        for s in ["zero", "const:0.1", "power:0.5", "loglog:1"] {
            let phi: DimensionFunction = s.parse().unwrap();
            assert_eq!(phi.to_string().parse::<DimensionFunction>().unwrap(), phi);
        }
        for bad in ["", "loglog", "power:1.5", "const:-1", "sqrt:2", "zero:1", "loglog:x"] {
            assert!(matches!(bad.parse::<DimensionFunction>(), Err(Error::Parse(_))), "{bad}");
        }
    }
}
