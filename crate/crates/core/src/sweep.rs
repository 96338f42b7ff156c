//! Grid evaluation of the serial and pipelined bounds.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{int, ratio, to_f64, DeliveryMode, Rational, SystemConfig};
use crate::ndt_pipelined::{self, RelationCheck};
use crate::ndt_serial;
use crate::par::{self, ExecMode};

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub r: f64,
    pub mode: DeliveryMode,
    pub delta_f: f64,
    pub delta_e: f64,
    pub delta_ach: f64,
    pub delta_lb: f64,
    pub gap: f64,
    /// Minimum NDT when the point lies in a proven-exact regime.
    pub exact: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 9] = ["mu", "r", "mode", "delta_f", "delta_e", "delta_ach", "delta_lb", "gap", "exact"];

impl SweepRow {
    pub fn csv_record(&self) -> [String; 9] {
        let num = |v: f64| format!("{v:.12}");
        [
            self.mu.to_string(),
            self.r.to_string(),
            match self.mode {
                DeliveryMode::Serial => "serial".into(),
                DeliveryMode::Pipelined => "pipelined".into(),
            },
            num(self.delta_f),
            num(self.delta_e),
            num(self.delta_ach),
            num(self.delta_lb),
            num(self.gap),
            self.exact.map(num).unwrap_or_default(),
        ]
    }
}

/// Evaluates one feasible point in one mode.
pub fn evaluate(cfg: &SystemConfig, mode: DeliveryMode) -> Result<SweepRow> {
    let (raw, ach, lb, exact) = match mode {
        DeliveryMode::Serial => (
            ndt_serial::achievable_raw(cfg)?,
            ndt_serial::achievable_lce(cfg)?,
            ndt_serial::lower_bound_serial(cfg),
            ndt_serial::exact_regime_serial(cfg),
        ),
        DeliveryMode::Pipelined => (
            ndt_pipelined::achievable_pipelined_raw(cfg)?,
            ndt_pipelined::achievable_pipelined(cfg)?,
            ndt_pipelined::lower_bound_pipelined(cfg),
            ndt_pipelined::exact_regime_pipelined(cfg),
        ),
    };
    let ach = to_f64(&ach);
    Ok(SweepRow {
        mu: to_f64(&cfg.mu),
        r: to_f64(&cfg.r),
        mode,
        delta_f: to_f64(&raw.delta_f),
        delta_e: to_f64(&raw.delta_e),
        delta_ach: ach,
        delta_lb: lb.value(),
        gap: ach / lb.value(),
        exact: exact.map(|e| to_f64(&e)),
    })
}

/// Every `(mu, r, mode)` combination on the grid. Infeasible points
/// (`r = 0` with `mu k_t < 1`) are left out. Rows are ordered by mode,
/// then `r`, then `mu`.
pub fn sweep(
    base: &SystemConfig,
    mus: &[Rational],
    rs: &[Rational],
    modes: &[DeliveryMode],
    exec: ExecMode,
) -> Result<Vec<SweepRow>> {
    let mut jobs = Vec::new();
    for &mode in modes {
        for &r in rs {
            for &mu in mus {
                let cfg = SystemConfig { mu, r, ..*base };
                cfg.validate()?;
                if cfg.is_feasible() {
                    jobs.push((mode, r, mu, cfg));
                }
            }
        }
    }
    jobs.sort_by_key(|j| (mode_rank(j.0), j.1, j.2));
    jobs.dedup_by(|a, b| (a.0, a.1, a.2) == (b.0, b.1, b.2));
    par::map(exec, &jobs, |(mode, _, _, cfg)| evaluate(cfg, *mode)).into_iter().collect()
}

fn mode_rank(m: DeliveryMode) -> u8 {
    match m {
        DeliveryMode::Serial => 0,
        DeliveryMode::Pipelined => 1,
    }
}

/// `{0, 1/k_t, .., 1}` subdivided `per_step` times per unit of `mu k_t`.
pub fn mu_grid(k_t: u32, per_step: u32) -> Vec<Rational> {
    let n = (k_t * per_step) as i64;
    (0..=n).map(|i| ratio(i, n)).collect()
}

/// Parameter grid of a gap scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapGrid {
    pub k_t: Vec<u32>,
    pub n_t: Vec<u32>,
    pub k_r: Vec<u32>,
    #[serde(with = "rational_list")]
    pub r: Vec<Rational>,
    /// Points per unit of `mu k_t`.
    pub mu_kt_steps: u32,
}

impl Default for GapGrid {
    fn default() -> Self {
        Self {
            k_t: (2..=8).collect(),
            n_t: (1..=4).collect(),
            k_r: vec![4, 8, 16, 32],
            r: vec![ratio(1, 10), ratio(1, 2), int(1), int(2), int(5), int(10)],
            mu_kt_steps: 2,
        }
    }
}

mod rational_list {
    use crate::model::{fmt_rational, parse_rational, Rational};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(fmt_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<String>::deserialize(d)?.iter().map(|t| parse_rational(t).map_err(de::Error::custom)).collect()
    }
}

impl GapGrid {
    pub fn configs(&self) -> Result<Vec<SystemConfig>> {
        let mut out = Vec::new();
        for &k_t in &self.k_t {
            for &n_t in &self.n_t {
                for &k_r in &self.k_r {
                    for &r in &self.r {
                        for mu in mu_grid(k_t, self.mu_kt_steps) {
                            out.push(SystemConfig::with_defaults(k_t, k_r, n_t, mu, r)?);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub config: SystemConfig,
    pub serial_gap: f64,
    pub pipelined_gap: f64,
    pub relations: RelationCheck,
    /// Worst distance of either bound to the exact value, when exact.
    pub serial_exact_error: Option<f64>,
    pub pipelined_exact_error: Option<f64>,
}

pub fn gap_point(cfg: &SystemConfig) -> Result<GapPoint> {
    let s_ach = to_f64(&ndt_serial::achievable_lce(cfg)?);
    let s_lb = ndt_serial::lower_bound_serial(cfg).value();
    let p_ach = to_f64(&ndt_pipelined::achievable_pipelined(cfg)?);
    let p_lb = ndt_pipelined::lower_bound_pipelined(cfg).value();
    let err = |e: Rational, a: f64, l: f64| {
        let e = to_f64(&e);
        (a - e).abs().max((l - e).abs())
    };
    Ok(GapPoint {
        config: *cfg,
        serial_gap: s_ach / s_lb,
        pipelined_gap: p_ach / p_lb,
        relations: ndt_pipelined::serial_pipelined_relations(cfg)?,
        serial_exact_error: ndt_serial::exact_regime_serial(cfg).map(|e| err(e, s_ach, s_lb)),
        pipelined_exact_error: ndt_pipelined::exact_regime_pipelined(cfg).map(|e| err(e, p_ach, p_lb)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub points: usize,
    pub max_serial_gap: f64,
    pub max_pipelined_gap: f64,
    pub worst_serial: Option<SystemConfig>,
    pub worst_pipelined: Option<SystemConfig>,
    pub relation_failures: Vec<SystemConfig>,
    pub exact_points: usize,
    pub max_exact_error: f64,
}

impl GapSummary {
    pub fn serial_ok(&self) -> bool {
        self.max_serial_gap <= 1.5 + 1e-9
    }

    pub fn pipelined_ok(&self) -> bool {
        self.max_pipelined_gap <= 2.0 + 1e-9
    }

    pub fn ok(&self) -> bool {
        self.serial_ok() && self.pipelined_ok() && self.relation_failures.is_empty() && self.max_exact_error <= 1e-9
    }
}

/// Evaluates gaps, serial/pipelined relations and exact-regime agreement
/// on every feasible grid point.
pub fn gap_scan(grid: &GapGrid, exec: ExecMode) -> Result<GapSummary> {
    let configs: Vec<SystemConfig> = grid.configs()?.into_iter().filter(|c| c.is_feasible()).collect();
    let points = par::map(exec, &configs, gap_point).into_iter().collect::<Result<Vec<_>>>()?;
    let mut s = GapSummary {
        points: points.len(),
        max_serial_gap: 0.0,
        max_pipelined_gap: 0.0,
        worst_serial: None,
        worst_pipelined: None,
        relation_failures: Vec::new(),
        exact_points: 0,
        max_exact_error: 0.0,
    };
    for p in points {
        if p.serial_gap > s.max_serial_gap {
            s.max_serial_gap = p.serial_gap;
            s.worst_serial = Some(p.config);
        }
        if p.pipelined_gap > s.max_pipelined_gap {
            s.max_pipelined_gap = p.pipelined_gap;
            s.worst_pipelined = Some(p.config);
        }
        if !p.relations.holds() {
            s.relation_failures.push(p.config);
        }
        for e in [p.serial_exact_error, p.pipelined_exact_error].into_iter().flatten() {
            s.exact_points += 1;
            s.max_exact_error = s.max_exact_error.max(e);
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_orders_and_skips_infeasible() {
        let base = SystemConfig::with_defaults(4, 4, 2, int(0), int(0)).unwrap();
        let rows = sweep(
            &base,
            &mu_grid(4, 1),
            &[int(1), int(0)],
            &[DeliveryMode::Pipelined, DeliveryMode::Serial],
            ExecMode::Sequential,
        )
        .unwrap();
        // r = 0 drops mu = 0 in both modes
        assert_eq!(rows.len(), 2 * (4 + 5));
        assert_eq!(rows[0].mode, DeliveryMode::Serial);
        assert_eq!((rows[0].r, rows[0].mu), (0.0, 0.25));
        assert!(rows.windows(2).all(|w| mode_rank(w[0].mode) <= mode_rank(w[1].mode)));
    }

    #[test]
    fn modes_agree() {
        let base = SystemConfig::with_defaults(8, 32, 4, int(0), int(0)).unwrap();
        let modes = [DeliveryMode::Serial, DeliveryMode::Pipelined];
        let rs = [ratio(1, 2), int(5)];
        let a = sweep(&base, &mu_grid(8, 2), &rs, &modes, ExecMode::Sequential).unwrap();
        let b = sweep(&base, &mu_grid(8, 2), &rs, &modes, ExecMode::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn small_gap_scan() {
        let grid =
            GapGrid { k_t: vec![2, 3], n_t: vec![1, 2], k_r: vec![4], r: vec![ratio(1, 2), int(2)], mu_kt_steps: 2 };
        let s = gap_scan(&grid, ExecMode::Parallel).unwrap();
        assert!(s.ok(), "{s:?}");
        assert!(s.exact_points > 0);
    }
}
