//! Closed-form capacities and capacity bounds, evaluated exactly over the rationals.
//!
//! `Φ(a, b) = 1 / (1 + a + … + a^{b-1})` is the shape every result here takes;
//! the floor-θ bound interpolates between consecutive integer `b`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{PltError, Result};

/// Parameters of a private linear transformation instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CapacityQuery {
    pub n_servers: u64,
    pub k_messages: u64,
    pub dimension: u64,
    pub support: u64,
}

impl CapacityQuery {
    pub fn new(n_servers: u64, k_messages: u64, dimension: u64, support: u64) -> Result<Self> {
        if n_servers < 1 || dimension < 1 || dimension > support || support > k_messages {
            return Err(PltError::InvalidParams(format!(
                "need N >= 1 and 1 <= L <= D <= K, got N={n_servers} K={k_messages} L={dimension} D={support}"
            )));
        }
        Ok(CapacityQuery { n_servers, k_messages, dimension, support })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    ExactCapacity,
    UpperBound,
}

/// Which closed form produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaTag {
    /// `(1 + (K-D)/(LN))^{-1}`
    PltSmallGap,
    /// floor-θ expression with θ = (K-D+L)/L
    PltFloorTheta,
    /// `Φ(1/N, K-D+1)`
    PltDimensionOne,
    /// `(1 + (K-M-P)/(PN))^{-1}`
    MpirPsiSmallRatio,
    /// floor-ρ expression with ρ = (K-M)/P
    MpirPsiFloorRho,
    /// `Φ(1/N, (K-M)/P)` for integer ρ
    MpirPsiIntegerRatio,
    /// `Φ(1/N, K-M)`
    PirPsi,
    /// `(1 + (K-D)/(DN))^{-1}` or `Φ(1/N, K/D)`
    MultiMessagePir,
    /// `Φ(1/N, K)`
    PrivateComputation,
    /// `1/D`
    RetrieveThenCombine,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CapacityReport {
    #[serde(serialize_with = "ser_ratio")]
    pub value: BigRational,
    pub kind: BoundKind,
    pub formula: FormulaTag,
}

fn ser_ratio<S: Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_ratio(v))
}

/// `p/q`, or just `p` for integers.
pub fn format_ratio(v: &BigRational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

impl CapacityReport {
    fn new(value: BigRational, kind: BoundKind, formula: FormulaTag) -> Self {
        debug_assert!(value > BigRational::zero() && value <= BigRational::one());
        CapacityReport { value, kind, formula }
    }

    pub fn to_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for CapacityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_ratio(&self.value))
    }
}

pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// `1 + a + … + a^{b-1}`
fn geometric_sum(a: &BigRational, b: u64) -> BigRational {
    let mut acc = BigRational::zero();
    let mut term = BigRational::one();
    for _ in 0..b {
        acc += &term;
        term *= a;
    }
    acc
}

/// `Φ(a, b) = (1 + a + … + a^{b-1})^{-1}`. Panics if `b = 0` or `a <= 0`.
pub fn phi(a: &BigRational, b: u64) -> BigRational {
    assert!(b >= 1, "phi needs b >= 1");
    assert!(a > &BigRational::zero(), "phi needs a > 0");
    geometric_sum(a, b).recip()
}

/// `((1 - N^{-⌊x⌋})/(1 - 1/N) + (x - ⌊x⌋)/N^{⌊x⌋})^{-1}`, with the first
/// term written as a geometric sum so that N = 1 is well defined.
fn floor_bound(n: u64, x: &BigRational) -> BigRational {
    let inv_n = ratio(1, n);
    let fl = x.floor();
    let fl_u: u64 = fl.to_integer().try_into().expect("floor fits in u64");
    let frac = x - &fl;
    let n_pow = num_traits::pow(int(n), fl_u as usize);
    (geometric_sum(&inv_n, fl_u) + frac / n_pow).recip()
}

fn small_gap(n: u64, gap: &BigRational, denom_scale: u64) -> BigRational {
    (BigRational::one() + gap / int(denom_scale * n)).recip()
}

/// Upper bound on the capacity for general `L`, picking the small-gap form
/// when `(K-D)/L <= 1` and the floor-θ form otherwise. At `(K-D)/L = 1` both
/// are evaluated and must agree.
pub fn plt_upper_bound(q: &CapacityQuery) -> CapacityReport {
    let (n, k, l, d) = (q.n_servers, q.k_messages, q.dimension, q.support);
    let gap_ratio = ratio(k - d, l);
    let one = BigRational::one();
    let small = (gap_ratio <= one).then(|| small_gap(n, &int(k - d), l));
    let theta = ratio(k - d + l, l);
    let floor_form = (gap_ratio >= one).then(|| floor_bound(n, &theta));
    let (value, formula) = match (small, floor_form) {
        (Some(a), Some(b)) => {
            assert_eq!(a, b, "small-gap and floor-θ forms disagree at the boundary");
            (a, FormulaTag::PltSmallGap)
        }
        (Some(a), None) => (a, FormulaTag::PltSmallGap),
        (None, Some(b)) => (b, FormulaTag::PltFloorTheta),
        (None, None) => unreachable!(),
    };
    // Tight for a single server, for L = 1, and for L = D in the two covered cases.
    let tight = n == 1
        || l == 1
        || (l == d && (ratio(k, d) <= int(2) || k % d == 0));
    let kind = if tight { BoundKind::ExactCapacity } else { BoundKind::UpperBound };
    CapacityReport::new(value, kind, formula)
}

/// Exact capacity for a single demanded combination: `Φ(1/N, K-D+1)`.
pub fn plt_capacity_l1(n: u64, k: u64, d: u64) -> Result<CapacityReport> {
    if n < 1 || d < 1 || d > k {
        return Err(PltError::InvalidParams(format!("need N >= 1, 1 <= D <= K, got N={n} K={k} D={d}")));
    }
    Ok(CapacityReport::new(
        phi(&ratio(1, n), k - d + 1),
        BoundKind::ExactCapacity,
        FormulaTag::PltDimensionOne,
    ))
}

/// Multi-message PIR with private side information (`P` wanted, `M` side messages).
pub fn mpir_psi_capacity(n: u64, k: u64, p: u64, m: u64) -> Result<CapacityReport> {
    if n < 1 || p < 1 || p + m > k {
        return Err(PltError::InvalidParams(format!("need N >= 1, P >= 1, P + M <= K, got N={n} K={k} P={p} M={m}")));
    }
    let rho = ratio(k - m, p);
    let two = int(2);
    if rho <= two {
        let v = small_gap(n, &int(k - m - p), p);
        if rho == two {
            assert_eq!(v, phi(&ratio(1, n), 2), "small-ratio and integer-ratio forms disagree at ρ = 2");
        }
        return Ok(CapacityReport::new(v, BoundKind::ExactCapacity, FormulaTag::MpirPsiSmallRatio));
    }
    if rho.is_integer() {
        let b: u64 = rho.to_integer().try_into().expect("ρ fits in u64");
        return Ok(CapacityReport::new(
            phi(&ratio(1, n), b),
            BoundKind::ExactCapacity,
            FormulaTag::MpirPsiIntegerRatio,
        ));
    }
    Ok(CapacityReport::new(floor_bound(n, &rho), BoundKind::UpperBound, FormulaTag::MpirPsiFloorRho))
}

/// Single-message PIR with `M` private side-information messages: `Φ(1/N, K-M)`.
pub fn pir_psi_capacity(n: u64, k: u64, m: u64) -> Result<CapacityReport> {
    if n < 1 || k < 1 || m > k - 1 {
        return Err(PltError::InvalidParams(format!("need N >= 1, 0 <= M <= K-1, got N={n} K={k} M={m}")));
    }
    Ok(CapacityReport::new(phi(&ratio(1, n), k - m), BoundKind::ExactCapacity, FormulaTag::PirPsi))
}

/// A comparison rate, or a marker that no closed form is known for these parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Baseline {
    Covered(CapacityReport),
    NotCovered,
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::Covered(r) => r.fmt(f),
            Baseline::NotCovered => f.write_str("not-covered"),
        }
    }
}

/// Rates of the alternative approaches: retrieving all `D` messages with
/// multi-message PIR (`mm-pir`), private computation that also hides the
/// coefficients (`pc-full`), and the `1/D` bound on retrieve-then-combine
/// (`mpir-then-combine`).
pub fn baseline_rates(q: &CapacityQuery) -> BTreeMap<&'static str, Baseline> {
    let (n, k, d) = (q.n_servers, q.k_messages, q.support);
    let inv_n = ratio(1, n);
    let mut out = BTreeMap::new();
    let k_over_d = ratio(k, d);
    let mm = if k_over_d <= int(2) {
        let v = small_gap(n, &int(k - d), d);
        if k_over_d == int(2) {
            assert_eq!(v, phi(&inv_n, 2));
        }
        Baseline::Covered(CapacityReport::new(v, BoundKind::ExactCapacity, FormulaTag::MultiMessagePir))
    } else if k % d == 0 {
        Baseline::Covered(CapacityReport::new(
            phi(&inv_n, k / d),
            BoundKind::ExactCapacity,
            FormulaTag::MultiMessagePir,
        ))
    } else {
        Baseline::NotCovered
    };
    out.insert("mm-pir", mm);
    out.insert(
        "pc-full",
        Baseline::Covered(CapacityReport::new(
            phi(&inv_n, k),
            BoundKind::ExactCapacity,
            FormulaTag::PrivateComputation,
        )),
    );
    out.insert(
        "mpir-then-combine",
        Baseline::Covered(CapacityReport::new(ratio(1, d), BoundKind::UpperBound, FormulaTag::RetrieveThenCombine)),
    );
    out
}
