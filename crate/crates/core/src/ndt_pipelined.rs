//! Pipelined (block-Markov) delivery: fronthaul for block `b + 1` overlaps
//! edge transmission of block `b`, so the per-block latency is the larger of
//! the two and the NDT becomes `max(delta_f, delta_e)` as the number of
//! blocks grows.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::envelope::{lower_hull, PiecewiseLinearNdt};
use crate::error::{Error, Result};
use crate::model::{
    int, m_max, m_p_star, m_pipelined, pipelined_threshold, serde_rational, to_f64, LowerBound, Multiplicity,
    NdtBreakdown, Rational, SystemConfig,
};
use crate::ndt_serial::{self, delta_e_of_m, delta_f_of_m, opt_rational};

/// `1 - k_t r / n_t`, the (unclipped) end of the fronthaul-limited branch
/// in units of `mu k_t`.
fn first_branch_end(cfg: &SystemConfig) -> Rational {
    int(1) - int(cfg.k_t) * cfg.r / int(cfg.n_t)
}

fn in_first_branch(cfg: &SystemConfig) -> bool {
    cfg.r.is_positive() && cfg.mu_kt() <= first_branch_end(cfg)
}

/// `mu k_t = i - k_t r / (i n_t)`, where the balancing multiplicity equals `i`.
pub fn breakpoint(i: u32, cfg: &SystemConfig) -> Rational {
    int(i) - int(cfg.k_t) * cfg.r / (int(i) * int(cfg.n_t))
}

fn edge_floor(m: u32, cfg: &SystemConfig) -> Rational {
    (int(cfg.k_r) / (int(m) * int(cfg.n_t))).max(int(1))
}

/// Pre-envelope components of the pipelined scheme at the configured `mu`.
pub fn achievable_pipelined_raw(cfg: &SystemConfig) -> Result<NdtBreakdown> {
    let m = m_pipelined(cfg)?;
    let delta_f = delta_f_of_m(m.get().saturating_sub(cfg.floor_mu_kt()), cfg)?;
    let delta_e = delta_e_of_m(m, cfg)?;
    Ok(NdtBreakdown::pipelined(delta_f, delta_e, m))
}

/// Achievable pipelined NDT as a piecewise-linear function of `mu`.
///
/// `r = 0` leaves nothing to pipeline and falls back to the serial envelope.
pub fn pipelined_curve(cfg: &SystemConfig) -> Result<PiecewiseLinearNdt> {
    if cfg.r.is_zero() {
        return ndt_serial::lce_curve(cfg);
    }
    let k_t = int(cfg.k_t);
    let k_r = int(cfg.k_r);
    let one = int(1);
    let end = first_branch_end(cfg);
    let a = end.max(Rational::zero());

    // fronthaul-limited segment on [0, a], with its kink where it meets 1
    let mut points = Vec::new();
    if a.is_positive() {
        let first = |c: Rational| (k_r * (one - c) / (k_t * cfg.r)).max(one);
        points.push((Rational::zero(), first(Rational::zero())));
        let kink = one - k_t * cfg.r / k_r;
        if kink.is_positive() && kink < a {
            points.push((kink, one));
        }
    }

    // step corners of max(k_r / (m_p n_t), 1) on [a, k_t]
    let mut corners = vec![(a, edge_floor(m_pipelined(&cfg.with_mu_kt(a))?.get(), cfg))];
    for i in 1..=m_max(cfg).get() {
        let x = breakpoint(i, cfg);
        if x > a && x <= k_t {
            corners.push((x, edge_floor(i, cfg)));
        }
    }
    corners.push((k_t, edge_floor(m_pipelined(&cfg.with_mu_kt(k_t))?.get(), cfg)));
    let hull = lower_hull(&corners);

    if a.is_positive() {
        // the hull starts exactly where the first branch ends
        points.extend(hull.into_iter().skip(1));
        points.insert(points.partition_point(|p| p.0 < a), (a, (k_r / int(cfg.n_t)).max(one)));
        points.dedup_by(|b, p| p.0 == b.0);
    } else {
        points.extend(hull);
    }
    Ok(PiecewiseLinearNdt::from_sorted(points.into_iter().map(|(c, d)| (c / k_t, d)).collect()))
}

/// Achievable pipelined NDT after time sharing, at the configured `mu`.
pub fn achievable_pipelined(cfg: &SystemConfig) -> Result<Rational> {
    cfg.ensure_feasible()?;
    pipelined_curve(cfg)?.eval(cfg.mu).ok_or_else(|| Error::Infeasible("mu outside the feasible envelope".into()))
}

/// Lower bound on the minimum pipelined NDT.
pub fn lower_bound_pipelined(cfg: &SystemConfig) -> LowerBound {
    if cfg.r.is_zero() {
        return ndt_serial::lower_bound_serial(cfg);
    }
    if in_first_branch(cfg) {
        let v = cfg.k_r as f64 * (1.0 - to_f64(&cfg.mu_kt())) / (cfg.k_t as f64 * to_f64(&cfg.r));
        return LowerBound::Finite(v.max(1.0));
    }
    LowerBound::Finite((cfg.k_r as f64 / (m_p_star(cfg) * cfg.n_t as f64)).max(1.0))
}

/// Minimum pipelined NDT where the achievable and converse bounds meet.
pub fn exact_regime_pipelined(cfg: &SystemConfig) -> Option<Rational> {
    if !cfg.is_feasible() {
        return None;
    }
    if cfg.r.is_zero() {
        return ndt_serial::exact_regime_serial(cfg);
    }
    let c = cfg.mu_kt();
    if in_first_branch(cfg) {
        return Some((int(cfg.k_r) * (int(1) - c) / (int(cfg.k_t) * cfg.r)).max(int(1)));
    }
    let mm = m_max(cfg).get();
    if let Some(i) = (1..=mm).find(|&i| breakpoint(i, cfg) == c) {
        return Some(edge_floor(i, cfg));
    }
    if c > pipelined_threshold(cfg) && c <= int(cfg.k_t) {
        return Some(edge_floor(mm, cfg));
    }
    None
}

pub fn gap_pipelined(cfg: &SystemConfig) -> Result<f64> {
    let ach = achievable_pipelined(cfg)?;
    match lower_bound_pipelined(cfg) {
        LowerBound::Finite(lb) => Ok(to_f64(&ach) / lb),
        LowerBound::Infeasible => Err(Error::Infeasible("lower bound is infinite".into())),
    }
}

/// Pointwise comparisons between the serial and pipelined bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    /// Pipelined achievable never exceeds serial achievable.
    pub achievable_ordered: bool,
    /// Pipelined lower bound is at least half the serial lower bound.
    pub lower_bound_half: bool,
}

impl RelationCheck {
    pub fn holds(&self) -> bool {
        self.achievable_ordered && self.lower_bound_half
    }
}

pub fn serial_pipelined_relations(cfg: &SystemConfig) -> Result<RelationCheck> {
    let pipe = to_f64(&achievable_pipelined(cfg)?);
    let ser = to_f64(&ndt_serial::achievable_lce(cfg)?);
    let lb_p = lower_bound_pipelined(cfg).value();
    let lb_s = ndt_serial::lower_bound_serial(cfg).value();
    Ok(RelationCheck { achievable_ordered: pipe <= ser + 1e-9, lower_bound_half: lb_p >= lb_s / 2.0 - 1e-9 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelinedBoundReport {
    pub raw: NdtBreakdown,
    #[serde(with = "serde_rational")]
    pub achievable: Rational,
    pub lower_bound: LowerBound,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_rational")]
    pub exact: Option<Rational>,
    pub gap_ratio: f64,
    pub multiplicity_used: Multiplicity,
}

pub fn pipelined_report(cfg: &SystemConfig) -> Result<PipelinedBoundReport> {
    let raw = achievable_pipelined_raw(cfg)?;
    let achievable = achievable_pipelined(cfg)?;
    let lower_bound = lower_bound_pipelined(cfg);
    Ok(PipelinedBoundReport {
        raw,
        achievable,
        lower_bound,
        exact: exact_regime_pipelined(cfg),
        gap_ratio: to_f64(&achievable) / lower_bound.value(),
        multiplicity_used: raw.multiplicity_used,
    })
}
