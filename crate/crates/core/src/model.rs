//! Shared domain types and the elementary multiplicity functions.
//!
//! All combinatorial quantities are exact: the cache fraction `mu` and the
//! fronthaul ratio `r` are rationals, so floors of `mu * k_t`, threshold
//! comparisons and nearest-integer square roots are decided without
//! floating point. Only quantities that genuinely contain a square root
//! (`m_eq`, `m_star`, `m_p_star`) are returned as `f64`.

use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = num_rational::Rational64;

/// Builds `n / d` as a rational.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn int(n: impl Into<i64>) -> Rational {
    Rational::from_integer(n.into())
}

/// Parses `"3/8"`, `"0.375"`, `"2"` or `"1e-3"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidConfig(format!("cannot parse `{s}` as a rational"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let scale = exp - frac.len() as i32;
    if scale.unsigned_abs() > 15 {
        return Err(bad());
    }
    let pow = 10i64.pow(scale.unsigned_abs());
    let mut q = if scale >= 0 {
        Rational::from_integer(numer.checked_mul(pow).ok_or_else(bad)?)
    } else {
        Rational::new(numer, pow)
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `p/q` form used in reports (`3/2`, `1`).
pub fn fmt_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub(crate) mod serde_rational {
    use super::{fmt_rational, parse_rational, Rational};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(q))
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Int(i64),
        Float(f64),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Text(t) => parse_rational(&t).map_err(de::Error::custom),
            Repr::Int(i) => Ok(Rational::from_integer(i)),
            Repr::Float(f) => parse_rational(&f.to_string()).map_err(de::Error::custom),
        }
    }
}

/// One F-RAN instance: `k_t` edge nodes with `n_t` antennas each, `k_r`
/// single-antenna users, a library of `n_files` files, fractional cache
/// size `mu` and fronthaul-to-wireless capacity ratio `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemConfig {
    pub k_t: u32,
    pub k_r: u32,
    pub n_t: u32,
    pub n_files: u32,
    #[serde(with = "serde_rational")]
    pub mu: Rational,
    #[serde(with = "serde_rational")]
    pub r: Rational,
}

impl SystemConfig {
    pub fn new(k_t: u32, k_r: u32, n_t: u32, n_files: u32, mu: Rational, r: Rational) -> Result<Self> {
        let cfg = Self { k_t, k_r, n_t, n_files, mu, r };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Library size defaults to `k_r` (the smallest library with distinct demands).
    pub fn with_defaults(k_t: u32, k_r: u32, n_t: u32, mu: Rational, r: Rational) -> Result<Self> {
        Self::new(k_t, k_r, n_t, k_r, mu, r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_t == 0 || self.k_r == 0 || self.n_t == 0 {
            return Err(Error::InvalidConfig("k_t, k_r and n_t must be positive".into()));
        }
        if self.n_files < self.k_r {
            return Err(Error::InvalidConfig(format!(
                "library of {} files cannot serve {} distinct demands",
                self.n_files, self.k_r
            )));
        }
        if self.mu.is_negative() || self.mu > int(1) {
            return Err(Error::InvalidConfig(format!("mu = {} outside [0, 1]", fmt_rational(&self.mu))));
        }
        if self.r.is_negative() {
            return Err(Error::InvalidConfig(format!("r = {} is negative", fmt_rational(&self.r))));
        }
        // Keeps every intermediate product comfortably inside i64.
        if self.k_t > 4096 || self.k_r > 4096 || self.n_t > 4096 {
            return Err(Error::InvalidConfig("dimensions above 4096 are not supported".into()));
        }
        Ok(())
    }

    pub fn with_mu(&self, mu: Rational) -> Self {
        Self { mu, ..*self }
    }

    pub fn with_mu_kt(&self, mu_kt: Rational) -> Self {
        Self { mu: mu_kt / int(self.k_t), ..*self }
    }

    pub fn with_r(&self, r: Rational) -> Self {
        Self { r, ..*self }
    }

    /// Aggregate cache multiplicity `mu * k_t`.
    pub fn mu_kt(&self) -> Rational {
        self.mu * int(self.k_t)
    }

    pub fn floor_mu_kt(&self) -> u32 {
        self.mu_kt().floor().to_integer() as u32
    }

    /// With `r = 0` the caches alone must hold every file at least once.
    pub fn is_feasible(&self) -> bool {
        self.r.is_positive() || self.mu_kt() >= int(1)
    }

    pub fn ensure_feasible(&self) -> Result<()> {
        if self.is_feasible() {
            Ok(())
        } else {
            Err(Error::Infeasible(format!(
                "r = 0 requires mu * k_t >= 1, got mu * k_t = {}",
                fmt_rational(&self.mu_kt())
            )))
        }
    }
}

/// Number of edge nodes holding a given content piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Multiplicity(pub u32);

impl Multiplicity {
    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    EdgeOnly,
    CloudAndEdge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeliveryMode {
    Serial,
    Pipelined,
}

/// Fronthaul and edge NDT of one scheme and how they combine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NdtBreakdown {
    #[serde(with = "serde_rational")]
    pub delta_f: Rational,
    #[serde(with = "serde_rational")]
    pub delta_e: Rational,
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    pub mode: DeliveryMode,
    pub regime: Regime,
    pub multiplicity_used: Multiplicity,
}

impl NdtBreakdown {
    pub fn serial(delta_f: Rational, delta_e: Rational, m: Multiplicity) -> Self {
        Self {
            delta_f,
            delta_e,
            delta: delta_f + delta_e,
            mode: DeliveryMode::Serial,
            regime: if delta_f.is_zero() { Regime::EdgeOnly } else { Regime::CloudAndEdge },
            multiplicity_used: m,
        }
    }

    pub fn pipelined(delta_f: Rational, delta_e: Rational, m: Multiplicity) -> Self {
        Self { delta: delta_f.max(delta_e), mode: DeliveryMode::Pipelined, ..Self::serial(delta_f, delta_e, m) }
    }
}

/// Real-valued lower bound that may be infinite (no caching and no fronthaul).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LowerBound {
    Finite(f64),
    Infeasible,
}

impl LowerBound {
    pub fn value(self) -> f64 {
        match self {
            LowerBound::Finite(v) => v,
            LowerBound::Infeasible => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            LowerBound::Finite(v) => Some(v),
            LowerBound::Infeasible => None,
        }
    }
}

/// Number of users served interference-free per block by `m` cooperating ENs.
pub fn u_of_m(m: Multiplicity, cfg: &SystemConfig) -> Result<u32> {
    if m.0 == 0 {
        return Err(Error::ZeroMultiplicity);
    }
    Ok((m.0 * cfg.n_t).min(cfg.k_r))
}

/// Largest multiplicity worth realizing: `min(k_t, ceil(k_r / n_t))`.
pub fn m_max(cfg: &SystemConfig) -> Multiplicity {
    Multiplicity(cfg.k_t.min(cfg.k_r.div_ceil(cfg.n_t)))
}

/// Fronthaul rate above which the maximum multiplicity is always selected.
pub fn r_threshold(cfg: &SystemConfig) -> Rational {
    let mm = m_max(cfg).0 as i64;
    ratio(cfg.n_t as i64 * mm * mm, cfg.k_t as i64)
}

/// Nearest positive integer to `sqrt(q)`, half-integers rounding up.
///
/// `n = floor(sqrt(q) + 1/2)` is the largest `n` with `(n - 1/2)^2 <= q`,
/// which is decided exactly in rational arithmetic.
pub fn nearest_positive_sqrt(q: Rational) -> u32 {
    if !q.is_positive() {
        return 1;
    }
    let mut n = q.to_f64().unwrap_or(0.0).sqrt().round().max(0.0) as i64;
    let half = ratio(1, 2);
    let fits = |n: i64| {
        let h = int(n) - half;
        h * h <= q
    };
    while n > 0 && !fits(n) {
        n -= 1;
    }
    while fits(n + 1) {
        n += 1;
    }
    n.max(1) as u32
}

/// `floor(sqrt(q))` decided exactly.
pub fn floor_sqrt(q: Rational) -> u64 {
    if !q.is_positive() {
        return 0;
    }
    let mut n = q.to_f64().unwrap_or(0.0).sqrt().floor().max(0.0) as i64;
    while n > 0 && int(n * n) > q {
        n -= 1;
    }
    while int((n + 1) * (n + 1)) <= q {
        n += 1;
    }
    n as u64
}

/// Multiplicity chosen by the fronthaul-only scheme.
pub fn m_of_r(cfg: &SystemConfig) -> Multiplicity {
    let mm = m_max(cfg);
    if cfg.r >= r_threshold(cfg) {
        return mm;
    }
    let q = cfg.r * int(cfg.k_t) / int(cfg.n_t);
    Multiplicity(nearest_positive_sqrt(q).min(mm.0))
}

/// Multiplicity supported by caching alone: `min(floor(mu k_t), m_max)`.
pub fn m_of_mu(cfg: &SystemConfig) -> Multiplicity {
    Multiplicity(cfg.floor_mu_kt().min(m_max(cfg).0))
}

/// Multiplicity selected by the serial cache-and-fronthaul scheme.
pub fn m_serial(cfg: &SystemConfig) -> Multiplicity {
    let mr = m_of_r(cfg);
    let mm = m_max(cfg);
    let c = cfg.mu_kt();
    if c < int(mr.0) {
        mr
    } else if c <= int(mm.0) {
        Multiplicity(cfg.floor_mu_kt())
    } else {
        mm
    }
}

/// Real multiplicity at which fronthaul and edge NDTs balance.
pub fn m_eq(cfg: &SystemConfig) -> Result<f64> {
    if !cfg.r.is_positive() {
        return Err(Error::Domain("m_eq requires r > 0".into()));
    }
    let c = to_f64(&cfg.mu_kt());
    let (kt, nt, r) = (cfg.k_t as f64, cfg.n_t as f64, to_f64(&cfg.r));
    Ok(c / 2.0 + ((c * nt).powi(2) + 4.0 * nt * kt * r).sqrt() / (2.0 * nt))
}

/// `floor(m_eq)` without rounding error.
///
/// `m_eq >= k` iff `2 n_t k - c n_t <= sqrt((c n_t)^2 + 4 n_t k_t r)`.
pub fn floor_m_eq(cfg: &SystemConfig) -> Result<u32> {
    let approx = m_eq(cfg)?;
    let c = cfg.mu_kt();
    let nt = int(cfg.n_t);
    let disc = (c * nt) * (c * nt) + int(4) * nt * int(cfg.k_t) * cfg.r;
    let at_least = |k: i64| {
        let lhs = int(2) * nt * int(k) - c * nt;
        !lhs.is_positive() || lhs * lhs <= disc
    };
    let mut k = approx.floor().max(0.0) as i64;
    while k > 0 && !at_least(k) {
        k -= 1;
    }
    while at_least(k + 1) {
        k += 1;
    }
    Ok(k as u32)
}

/// `mu k_t` above which the pipelined scheme runs at the maximum multiplicity.
pub fn pipelined_threshold(cfg: &SystemConfig) -> Rational {
    let mm = int(m_max(cfg).0);
    mm - int(cfg.k_t) * cfg.r / (mm * int(cfg.n_t))
}

/// Multiplicity selected by the pipelined scheme.
///
/// At `r = 0` the balancing multiplicity degenerates to `mu k_t` (its
/// `r -> 0+` limit), so the cache-only multiplicity is returned.
pub fn m_pipelined(cfg: &SystemConfig) -> Result<Multiplicity> {
    cfg.ensure_feasible()?;
    let mm = m_max(cfg);
    if cfg.r.is_zero() {
        return Ok(m_of_mu(cfg));
    }
    if cfg.mu_kt() <= pipelined_threshold(cfg) {
        Ok(Multiplicity(floor_m_eq(cfg)?.clamp(1, mm.0)))
    } else {
        Ok(mm)
    }
}

/// Real multiplicity used by the serial lower bound.
pub fn m_star(cfg: &SystemConfig) -> f64 {
    if cfg.r >= r_threshold(cfg) {
        m_max(cfg).0 as f64
    } else {
        (to_f64(&cfg.r) * cfg.k_t as f64 / cfg.n_t as f64).sqrt().max(1.0)
    }
}

/// Real multiplicity used by the pipelined lower bound.
pub fn m_p_star(cfg: &SystemConfig) -> f64 {
    let mm = m_max(cfg).0 as f64;
    if cfg.mu_kt() >= pipelined_threshold(cfg) {
        return mm;
    }
    match m_eq(cfg) {
        Ok(v) => v.max(1.0),
        Err(_) => to_f64(&cfg.mu_kt()).max(1.0),
    }
}

/// Least common multiple, used throughout the packetization.
pub fn lcm(a: u32, b: u32) -> u32 {
    a.lcm(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k_t: u32, k_r: u32, n_t: u32, mu: Rational, r: Rational) -> SystemConfig {
        SystemConfig::with_defaults(k_t, k_r, n_t, mu, r).unwrap()
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3/8").unwrap(), ratio(3, 8));
        assert_eq!(parse_rational("0.375").unwrap(), ratio(3, 8));
        assert_eq!(parse_rational("2").unwrap(), int(2));
        assert_eq!(parse_rational("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn config_invariants() {
        assert!(SystemConfig::new(4, 4, 2, 3, int(0), int(1)).is_err());
        assert!(SystemConfig::new(4, 4, 2, 4, ratio(3, 2), int(1)).is_err());
        assert!(SystemConfig::new(4, 4, 2, 4, int(0), int(-1)).is_err());
        let c = cfg(4, 4, 2, ratio(1, 10), int(0));
        assert!(!c.is_feasible());
        assert!(c.ensure_feasible().is_err());
        assert!(cfg(4, 4, 2, ratio(1, 4), int(0)).is_feasible());
    }

    #[test]
    fn users_per_block() {
        assert_eq!(u_of_m(Multiplicity(2), &cfg(4, 4, 2, int(0), int(0))).unwrap(), 4);
        assert_eq!(u_of_m(Multiplicity(3), &cfg(4, 8, 2, int(0), int(0))).unwrap(), 6);
        assert_eq!(u_of_m(Multiplicity(1), &cfg(1, 1, 1, int(0), int(0))).unwrap(), 1);
        assert!(matches!(u_of_m(Multiplicity(0), &cfg(1, 1, 1, int(0), int(0))), Err(Error::ZeroMultiplicity)));
    }

    #[test]
    fn maximum_multiplicity() {
        assert_eq!(m_max(&cfg(8, 32, 8, int(0), int(0))), Multiplicity(4));
        assert_eq!(m_max(&cfg(8, 32, 4, int(0), int(0))), Multiplicity(8));
        assert_eq!(m_max(&cfg(1, 1, 1, int(0), int(0))), Multiplicity(1));
    }

    #[test]
    fn fronthaul_multiplicity() {
        assert_eq!(m_of_r(&cfg(4, 4, 2, int(0), int(2))), Multiplicity(2));
        assert_eq!(m_of_r(&cfg(8, 32, 4, int(0), int(5))), Multiplicity(3));
        assert_eq!(r_threshold(&cfg(4, 8, 2, int(0), int(0))), int(8));
        assert_eq!(m_of_r(&cfg(4, 8, 2, int(0), int(8))), Multiplicity(4));
        assert_eq!(m_of_r(&cfg(4, 8, 2, int(0), int(100))), Multiplicity(4));
        assert_eq!(m_of_r(&cfg(4, 8, 2, int(0), int(0))), Multiplicity(1));
    }

    #[test]
    fn nearest_integer_ties_round_up() {
        // sqrt(2.25) = 1.5 -> 2, sqrt(6.25) = 2.5 -> 3
        assert_eq!(nearest_positive_sqrt(ratio(9, 4)), 2);
        assert_eq!(nearest_positive_sqrt(ratio(25, 4)), 3);
        assert_eq!(nearest_positive_sqrt(ratio(224, 100)), 1);
        assert_eq!(nearest_positive_sqrt(int(0)), 1);
        assert_eq!(nearest_positive_sqrt(int(16)), 4);
        assert_eq!(floor_sqrt(int(15)), 3);
        assert_eq!(floor_sqrt(int(16)), 4);
        assert_eq!(floor_sqrt(ratio(1, 2)), 0);
    }

    #[test]
    fn serial_multiplicity() {
        assert_eq!(m_serial(&cfg(4, 4, 2, ratio(1, 4), int(2))), Multiplicity(2));
        assert_eq!(m_serial(&cfg(4, 4, 2, ratio(1, 2), int(0))), Multiplicity(2));
        assert_eq!(m_serial(&cfg(4, 8, 2, int(1), int(0))), Multiplicity(4));
        // limits named in the definition
        let c = cfg(8, 32, 4, ratio(5, 8), int(0));
        assert_eq!(m_serial(&c), m_of_mu(&c));
        let c = cfg(8, 32, 4, int(0), int(5));
        assert_eq!(m_serial(&c), m_of_r(&c));
    }

    #[test]
    fn balancing_multiplicity() {
        let c = cfg(8, 32, 4, ratio(3, 8), int(5));
        assert!((m_eq(&c).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(floor_m_eq(&c).unwrap(), 5);
        let c = cfg(4, 4, 2, int(0), int(2));
        assert!((m_eq(&c).unwrap() - 2.0).abs() < 1e-12);
        let c = cfg(4, 4, 2, int(0), ratio(1, 1_000_000));
        assert!(m_eq(&c).unwrap() < 1e-2);
        assert!(matches!(m_eq(&cfg(4, 4, 2, int(0), int(0))), Err(Error::Domain(_))));
    }

    #[test]
    fn pipelined_multiplicity() {
        assert_eq!(m_pipelined(&cfg(8, 32, 4, ratio(3, 8), int(5))).unwrap(), Multiplicity(5));
        assert_eq!(pipelined_threshold(&cfg(8, 32, 4, int(0), int(5))), ratio(27, 4));
        assert_eq!(m_pipelined(&cfg(8, 32, 4, ratio(7, 8), int(5))).unwrap(), Multiplicity(8));
        assert_eq!(m_pipelined(&cfg(8, 32, 4, int(1), int(5))).unwrap(), Multiplicity(8));
        assert!(m_pipelined(&cfg(4, 4, 2, ratio(1, 8), int(0))).is_err());
        assert_eq!(m_pipelined(&cfg(4, 8, 2, ratio(3, 4), int(0))).unwrap(), Multiplicity(3));
    }

    #[test]
    fn lower_bound_multiplicities() {
        assert!((m_star(&cfg(4, 4, 2, int(0), int(2))) - 2.0).abs() < 1e-12);
        assert_eq!(m_star(&cfg(4, 4, 2, int(0), int(0))), 1.0);
        assert!((m_p_star(&cfg(8, 32, 4, ratio(3, 8), int(5))) - 5.0).abs() < 1e-12);
        assert_eq!(m_p_star(&cfg(8, 32, 4, int(1), int(5))), 8.0);
    }
}
