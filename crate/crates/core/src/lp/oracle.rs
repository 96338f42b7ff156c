//! Averaged caching/fronthaul/edge relaxation on tiny instances, used to
//! sandwich the closed-form lower bound between the LP optimum and the
//! achievable NDT.
//!
//! All quantities are per-file fractions, so the packet count never enters.

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::simplex::{q, q_from, solve, LinearProgram, LpSolution, Relation, Q};
use crate::error::{Error, Result};
use crate::model::{fmt_rational, int, m_max, serde_rational, Rational, SystemConfig};
use crate::ndt_serial::{achievable_raw, f_min};

pub const MAX_K_T: u32 = 3;
pub const MAX_K_R: u32 = 3;

/// All orderings of `k` distinct items from `1..=n`.
pub fn arrangements(n: u32, k: u32) -> Vec<Vec<u32>> {
    fn go(n: u32, k: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k as usize {
            out.push(cur.clone());
            return;
        }
        for f in 1..=n {
            if !cur.contains(&f) {
                cur.push(f);
                go(n, k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(n, k, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Debug)]
pub struct LpInstance {
    pub cfg: SystemConfig,
    /// Nonempty EN subsets as bitmasks (bit `i - 1` is EN `i`).
    pub subsets: Vec<u32>,
    pub demands: Vec<Vec<u32>>,
    pub lp: LinearProgram,
}

impl LpInstance {
    fn s(&self) -> usize {
        self.subsets.len()
    }

    /// Cache fraction of file `n` (1-based) stored exactly at subset `t`.
    pub fn gamma(&self, n: u32, t: usize) -> usize {
        (n as usize - 1) * self.s() + t
    }

    /// Fronthaul fraction of the file requested by user `k` (0-based) under
    /// demand `d`, delivered to subset `t`.
    pub fn phi(&self, d: usize, k: usize, t: usize) -> usize {
        let base = self.cfg.n_files as usize * self.s();
        base + (d * self.cfg.k_r as usize + k) * self.s() + t
    }

    pub fn delta_f(&self, d: usize) -> usize {
        let base = self.cfg.n_files as usize * self.s() * (1 + self.demands.len());
        base + d
    }

    pub fn n_vars(&self) -> usize {
        self.lp.n_vars
    }
}

/// `K_R (m_max - mu k_t)^+ / (k_t r)`, the largest useful fronthaul NDT.
pub fn delta_f_max(cfg: &SystemConfig) -> Rational {
    let slack = (int(m_max(cfg).get()) - cfg.mu_kt()).max(Rational::zero());
    int(cfg.k_r) * slack / (int(cfg.k_t) * cfg.r)
}

pub fn build_lp(cfg: &SystemConfig) -> Result<LpInstance> {
    cfg.validate()?;
    if cfg.r.is_zero() {
        return Err(Error::Domain("the oracle needs r > 0".into()));
    }
    if cfg.k_t > MAX_K_T || cfg.k_r > MAX_K_R || cfg.n_files != cfg.k_r {
        return Err(Error::OversizedInstance(format!(
            "k_t = {}, k_r = {}, n = {}; need k_t <= {MAX_K_T} and n = k_r <= {MAX_K_R}",
            cfg.k_t, cfg.k_r, cfg.n_files
        )));
    }
    let subsets: Vec<u32> = (1..(1u32 << cfg.k_t)).collect();
    let demands = arrangements(cfg.n_files, cfg.k_r);
    let s = subsets.len();
    let n_vars = cfg.n_files as usize * s * (1 + demands.len()) + demands.len();
    let mut inst = LpInstance { cfg: *cfg, subsets, demands, lp: LinearProgram::new(n_vars) };

    let pi = q(inst.demands.len() as i64, 1);
    let n_t = cfg.n_t as i64;
    let inv_r = q_from(&(int(1) / cfg.r));
    let size = |mask: u32| mask.count_ones() as i64;

    // objective
    let mut obj = vec![Q::zero(); n_vars];
    for (d, demand) in inst.demands.iter().enumerate() {
        for (k, &file) in demand.iter().enumerate() {
            for (t, &mask) in inst.subsets.iter().enumerate() {
                let w = q(1, size(mask) * n_t) / &pi;
                obj[inst.gamma(file, t)] += &w;
                obj[inst.phi(d, k, t)] += w;
            }
        }
        obj[inst.delta_f(d)] += Q::from_integer(1.into()) / &pi;
    }
    inst.lp.objective = obj;

    let mut cons = Vec::new();
    // every requested file is fully available
    for (d, demand) in inst.demands.iter().enumerate() {
        for (k, &file) in demand.iter().enumerate() {
            let coeffs = (0..s).flat_map(|t| [(inst.gamma(file, t), q(1, 1)), (inst.phi(d, k, t), q(1, 1))]).collect();
            cons.push((coeffs, Relation::Eq, q(1, 1)));
        }
    }
    // cache capacity per EN
    for en in 0..cfg.k_t {
        let coeffs = (1..=cfg.n_files)
            .flat_map(|n| {
                inst.subsets.iter().enumerate().filter(move |(_, &m)| m >> en & 1 == 1).map(move |(t, _)| (n, t))
            })
            .map(|(n, t)| (inst.gamma(n, t), q(1, 1)))
            .collect();
        cons.push((coeffs, Relation::Le, q_from(&(cfg.mu * int(cfg.n_files)))));
    }
    // per-EN fronthaul load bounded by delta_f(d), itself capped
    let cap = q_from(&delta_f_max(cfg));
    for d in 0..inst.demands.len() {
        for en in 0..cfg.k_t {
            let mut coeffs: Vec<(usize, Q)> = Vec::new();
            for k in 0..cfg.k_r as usize {
                for (t, &mask) in inst.subsets.iter().enumerate() {
                    if mask >> en & 1 == 1 {
                        coeffs.push((inst.phi(d, k, t), inv_r.clone()));
                    }
                }
            }
            coeffs.push((inst.delta_f(d), q(-1, 1)));
            cons.push((coeffs, Relation::Le, Q::zero()));
        }
        cons.push((vec![(inst.delta_f(d), q(1, 1))], Relation::Le, cap.clone()));
    }
    for (c, rel, b) in cons {
        inst.lp.add(c, rel, b);
    }
    Ok(inst)
}

pub fn solve_lp(inst: &LpInstance) -> Result<LpSolution> {
    let sol = solve(&inst.lp)?;
    debug_assert!(inst.lp.is_feasible(&sol.x));
    Ok(sol)
}

/// Average cached-plus-delivered multiplicity per file,
/// `(1/N) sum_tau |tau| sum_n (gamma + phi_avg)`, where `phi_avg` averages
/// the fronthaul fraction of file `n` over the demands that request it.
pub fn x_diagnostic(inst: &LpInstance, sol: &LpSolution) -> Q {
    let n_files = inst.cfg.n_files;
    let mut total = Q::zero();
    for n in 1..=n_files {
        let requests: Vec<(usize, usize)> = inst
            .demands
            .iter()
            .enumerate()
            .flat_map(|(d, dem)| dem.iter().position(|&f| f == n).map(|k| (d, k)))
            .collect();
        for (t, &mask) in inst.subsets.iter().enumerate() {
            let mut mass = sol.x[inst.gamma(n, t)].clone();
            if !requests.is_empty() {
                let sum: Q = requests.iter().map(|&(d, k)| sol.x[inst.phi(d, k, t)].clone()).sum();
                mass += sum / q(requests.len() as i64, 1);
            }
            total += mass * q(mask.count_ones() as i64, 1);
        }
    }
    total / q(n_files as i64, 1)
}

/// Worst single-demand objective of the averaged optimum.
pub fn max_over_demands(inst: &LpInstance, sol: &LpSolution) -> Q {
    let n_t = inst.cfg.n_t as i64;
    inst.demands
        .iter()
        .enumerate()
        .map(|(d, demand)| {
            let mut v = sol.x[inst.delta_f(d)].clone();
            for (k, &file) in demand.iter().enumerate() {
                for (t, &mask) in inst.subsets.iter().enumerate() {
                    let w = q(1, mask.count_ones() as i64 * n_t);
                    v += (&sol.x[inst.gamma(file, t)] + &sol.x[inst.phi(d, k, t)]) * w;
                }
            }
            v
        })
        .max()
        .unwrap_or_else(Q::zero)
}

/// Relabels ENs by `perm` (`perm[i - 1]` is the new label of EN `i`).
pub fn permute_solution(inst: &LpInstance, sol: &LpSolution, perm: &[u32]) -> Vec<Q> {
    let remap = |mask: u32| {
        (0..inst.cfg.k_t).filter(|i| mask >> i & 1 == 1).fold(0u32, |acc, i| acc | 1 << (perm[i as usize] - 1))
    };
    let pos: Vec<usize> =
        inst.subsets.iter().map(|&m| inst.subsets.iter().position(|&x| x == remap(m)).unwrap()).collect();
    let mut x = sol.x.clone();
    for n in 1..=inst.cfg.n_files {
        for t in 0..inst.s() {
            x[inst.gamma(n, pos[t])] = sol.x[inst.gamma(n, t)].clone();
        }
    }
    for d in 0..inst.demands.len() {
        for k in 0..inst.cfg.k_r as usize {
            for t in 0..inst.s() {
                x[inst.phi(d, k, pos[t])] = sol.x[inst.phi(d, k, t)].clone();
            }
        }
    }
    x
}

/// Every EN relabeling of the optimum is again feasible with the same value.
pub fn symmetry_holds(inst: &LpInstance, sol: &LpSolution) -> bool {
    arrangements(inst.cfg.k_t, inst.cfg.k_t).iter().all(|perm| {
        let x = permute_solution(inst, sol, perm);
        inst.lp.is_feasible(&x) && inst.lp.objective_at(&x) == sol.value
    })
}

fn to_f(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    #[serde(with = "serde_rational")]
    pub mu: Rational,
    #[serde(with = "serde_rational")]
    pub r: Rational,
    pub f_min: f64,
    pub lp_opt: f64,
    /// Exact optimum as `p/q`.
    pub lp_opt_exact: String,
    pub ach_raw: f64,
    pub x: f64,
    pub x_in_range: bool,
    pub max_over_demands: f64,
    pub ok: bool,
}

pub fn sandwich_check(cfg: &SystemConfig) -> Result<SandwichReport> {
    let inst = build_lp(cfg)?;
    let sol = solve_lp(&inst)?;
    let lp_opt = to_f(&sol.value);
    let fm = f_min(cfg).value();
    let ach = crate::model::to_f64(&achievable_raw(cfg)?.delta);
    let x = to_f(&x_diagnostic(&inst, &sol));
    let c = crate::model::to_f64(&cfg.mu_kt());
    let mm = m_max(cfg).get() as f64;
    let x_in_range = x >= 1f64.max(c) - 1e-9 && x <= mm.max(c) + 1e-9;
    let ok = fm - 1e-6 <= lp_opt && lp_opt <= ach + 1e-6 && x_in_range;
    Ok(SandwichReport {
        mu: cfg.mu,
        r: cfg.r,
        f_min: fm,
        lp_opt,
        lp_opt_exact: format!("{}/{}", sol.value.numer(), sol.value.denom()),
        ach_raw: ach,
        x,
        x_in_range,
        max_over_demands: to_f(&max_over_demands(&inst, &sol)),
        ok,
    })
}

impl SandwichReport {
    pub fn csv_header() -> [&'static str; 6] {
        ["mu", "r", "f_min", "lp_opt", "ach_raw", "ok"]
    }

    pub fn csv_row(&self) -> [String; 6] {
        [
            fmt_rational(&self.mu),
            fmt_rational(&self.r),
            format!("{:.12}", self.f_min),
            format!("{:.12}", self.lp_opt),
            format!("{:.12}", self.ach_raw),
            self.ok.to_string(),
        ]
    }
}
