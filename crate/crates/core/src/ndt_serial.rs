//! Achievable NDT, lower bound, exact regimes and gap for serial
//! fronthaul-then-edge delivery.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::envelope::PiecewiseLinearNdt;
use crate::error::{Error, Result};
use crate::model::{
    int, m_max, m_of_r, m_serial, m_star, r_threshold, ratio, serde_rational, to_f64, u_of_m, LowerBound, Multiplicity,
    NdtBreakdown, Rational, SystemConfig,
};

/// Edge NDT `k_r / u(m)` of clustered zero-forcing with multiplicity `m`.
pub fn delta_e_of_m(m: Multiplicity, cfg: &SystemConfig) -> Result<Rational> {
    let u = u_of_m(m, cfg)?;
    Ok(ratio(cfg.k_r as i64, u as i64))
}

/// Fronthaul NDT `k_r m_extra / (k_t r)` for raising the multiplicity by `m_extra`.
pub fn delta_f_of_m(m_extra: u32, cfg: &SystemConfig) -> Result<Rational> {
    if m_extra == 0 {
        return Ok(Rational::zero());
    }
    if !cfg.r.is_positive() {
        return Err(Error::Infeasible(format!("raising the multiplicity by {m_extra} needs fronthaul, but r = 0")));
    }
    Ok(int(cfg.k_r as i64 * m_extra as i64) / (int(cfg.k_t) * cfg.r))
}

/// Pre-envelope NDT of the serial scheme at the configured `mu`.
pub fn achievable_raw(cfg: &SystemConfig) -> Result<NdtBreakdown> {
    cfg.ensure_feasible()?;
    let m = m_serial(cfg);
    let delta_e = delta_e_of_m(m, cfg)?;
    let delta_f = if cfg.mu_kt() >= int(m_of_r(cfg).get()) {
        Rational::zero()
    } else {
        delta_f_of_m(m.get().saturating_sub(cfg.floor_mu_kt()), cfg)?
    };
    Ok(NdtBreakdown::serial(delta_f, delta_e, m))
}

/// Lower convex envelope over `mu` of the raw serial NDT.
///
/// The raw NDT depends on `mu` only through `floor(mu k_t)`, so the hull of
/// the integer grid `mu k_t in {0, .., k_t}` is the exact envelope.
pub fn lce_curve(cfg: &SystemConfig) -> Result<PiecewiseLinearNdt> {
    let k_t = cfg.k_t as i64;
    let start = if cfg.r.is_positive() { 0 } else { 1 };
    let points = (start..=k_t)
        .map(|i| {
            let mu = ratio(i, k_t);
            achievable_raw(&cfg.with_mu(mu)).map(|b| (mu, b.delta))
        })
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        return Err(Error::Infeasible("no feasible cache size".into()));
    }
    Ok(PiecewiseLinearNdt::envelope_of(&points))
}

/// Achievable serial NDT after time sharing, at the configured `mu`.
pub fn achievable_lce(cfg: &SystemConfig) -> Result<Rational> {
    cfg.ensure_feasible()?;
    lce_curve(cfg)?.eval(cfg.mu).ok_or_else(|| Error::Infeasible("mu outside the feasible envelope".into()))
}

/// `mu k_t < m_star(r)` decided exactly.
fn below_m_star(cfg: &SystemConfig) -> bool {
    let c = cfg.mu_kt();
    if cfg.r >= r_threshold(cfg) {
        return c < int(m_max(cfg).get());
    }
    let q = cfg.r * int(cfg.k_t) / int(cfg.n_t);
    c < int(1) || c * c < q
}

/// Closed-form bound on the averaged relaxation (no floor at one).
pub fn f_min(cfg: &SystemConfig) -> LowerBound {
    let c = to_f64(&cfg.mu_kt());
    let (k_t, k_r, n_t) = (cfg.k_t as f64, cfg.k_r as f64, cfg.n_t as f64);
    if below_m_star(cfg) {
        if cfg.r.is_zero() {
            return LowerBound::Infeasible;
        }
        let ms = m_star(cfg);
        LowerBound::Finite(k_r * (ms - c) / (k_t * to_f64(&cfg.r)) + k_r / (ms * n_t))
    } else {
        LowerBound::Finite(k_r / (c * n_t))
    }
}

/// Lower bound on the minimum serial NDT.
pub fn lower_bound_serial(cfg: &SystemConfig) -> LowerBound {
    match f_min(cfg) {
        LowerBound::Finite(v) => LowerBound::Finite(v.max(1.0)),
        LowerBound::Infeasible => LowerBound::Infeasible,
    }
}

/// Minimum serial NDT where the achievable and converse bounds meet.
///
/// The low-resource case is only claimed for `n_t <= k_r`; with more
/// antennas than users a single EN already saturates the edge and the
/// closed form undercounts the edge term.
pub fn exact_regime_serial(cfg: &SystemConfig) -> Option<Rational> {
    let c = cfg.mu_kt();
    let (k_t, k_r, n_t) = (int(cfg.k_t), int(cfg.k_r), int(cfg.n_t));
    let one = int(1);
    if !cfg.is_feasible() {
        return None;
    }
    if c <= one && cfg.r <= n_t / k_t && cfg.n_t <= cfg.k_r {
        let fronthaul = if cfg.r.is_zero() { Rational::zero() } else { k_r * (one - c) / (k_t * cfg.r) };
        return Some((fronthaul + k_r / n_t).max(one));
    }
    let mm = int(m_max(cfg).get());
    let mr = int(m_of_r(cfg).get());
    let on_grid = c.is_integer() && c >= mr + one && c <= mm;
    let saturated = c > mm && c <= k_t;
    if on_grid || saturated {
        return Some((k_r / (c * n_t)).max(one));
    }
    None
}

/// Achievable (after envelope) over lower bound.
pub fn gap_serial(cfg: &SystemConfig) -> Result<f64> {
    let ach = achievable_lce(cfg)?;
    match lower_bound_serial(cfg) {
        LowerBound::Finite(lb) => Ok(to_f64(&ach) / lb),
        LowerBound::Infeasible => Err(Error::Infeasible("lower bound is infinite".into())),
    }
}

/// Exhaustive minimum over integer multiplicities, kept as a diagnostic of
/// the nearest-integer choice. Never used for the headline numbers.
pub fn best_integer_multiplicity(cfg: &SystemConfig) -> Result<(Multiplicity, Rational)> {
    cfg.ensure_feasible()?;
    let floor = cfg.floor_mu_kt();
    let mut best: Option<(Multiplicity, Rational)> = None;
    for m in 1..=m_max(cfg).get() {
        let extra = m.saturating_sub(floor);
        if extra > 0 && cfg.r.is_zero() {
            continue;
        }
        let m = Multiplicity(m);
        let delta = delta_f_of_m(extra, cfg)? + delta_e_of_m(m, cfg)?;
        if best.as_ref().is_none_or(|(_, b)| delta < *b) {
            best = Some((m, delta));
        }
    }
    best.ok_or_else(|| Error::Infeasible("no feasible multiplicity".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerialBoundReport {
    /// Scheme at the configured `mu` before time sharing.
    pub raw: NdtBreakdown,
    #[serde(with = "serde_rational")]
    pub achievable: Rational,
    pub lower_bound: LowerBound,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rational")]
    pub exact: Option<Rational>,
    pub gap_ratio: f64,
}

pub(crate) mod opt_rational {
    use crate::model::{fmt_rational, parse_rational, Rational};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&fmt_rational(q)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?.map(|t| parse_rational(&t).map_err(de::Error::custom)).transpose()
    }
}

pub fn serial_report(cfg: &SystemConfig) -> Result<SerialBoundReport> {
    let raw = achievable_raw(cfg)?;
    let achievable = achievable_lce(cfg)?;
    let lower_bound = lower_bound_serial(cfg);
    let gap_ratio = to_f64(&achievable) / lower_bound.value();
    Ok(SerialBoundReport { raw, achievable, lower_bound, exact: exact_regime_serial(cfg), gap_ratio })
}
