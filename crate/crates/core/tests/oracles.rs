//! Cross-checks against independent reimplementations written in plain f64.

use fran_core::lp::oracle::{build_lp, solve_lp};
use fran_core::lp::simplex::{q, q_from, Q};
use fran_core::model::*;
use fran_core::ndt_pipelined::achievable_pipelined;
use fran_core::ndt_serial::{achievable_lce, achievable_raw};
use fran_core::scheme::{default_demand, worked_example, Scheme};
use fran_core::zf::{draw_channels, zero_force_block, Holdings};

// --- f64 oracle of the serial scheme ---------------------------------------

fn m_max_f(k_t: f64, k_r: f64, n_t: f64) -> f64 {
    k_t.min((k_r / n_t).ceil())
}

fn m_r_f(k_t: f64, k_r: f64, n_t: f64, r: f64) -> f64 {
    let mm = m_max_f(k_t, k_r, n_t);
    if r >= n_t * mm * mm / k_t {
        return mm;
    }
    ((k_t * r / n_t).sqrt() + 0.5).floor().clamp(1.0, mm)
}

fn raw_f(k_t: f64, k_r: f64, n_t: f64, r: f64, c: f64) -> f64 {
    let mm = m_max_f(k_t, k_r, n_t);
    let mr = m_r_f(k_t, k_r, n_t, r);
    let m = if c < mr {
        mr
    } else if c <= mm {
        c.floor()
    } else {
        mm
    };
    let de = k_r / (m * n_t).min(k_r);
    let df = if c >= mr { 0.0 } else { k_r * (m - c.floor()) / (k_t * r) };
    df + de
}

/// Lower hull of points sorted by x, evaluated at `x`.
fn hull_eval(pts: &[(f64, f64)], x: f64) -> f64 {
    let mut h: Vec<(f64, f64)> = Vec::new();
    for &p in pts {
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) <= 1e-15 {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p);
    }
    let i = h.iter().position(|p| p.0 >= x - 1e-15).unwrap();
    if (h[i].0 - x).abs() < 1e-15 {
        return h[i].1;
    }
    let (a, b) = (h[i - 1], h[i]);
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

#[test]
fn serial_envelope_matches_fine_grid_oracle() {
    for (k_t, k_r, n_t) in [(4u32, 4u32, 2u32), (8, 32, 4), (5, 16, 3), (3, 8, 1)] {
        for r in [ratio(1, 10), ratio(1, 2), int(1), int(3), int(10)] {
            let (kt, kr, nt, rf) = (k_t as f64, k_r as f64, n_t as f64, to_f64(&r));
            // sample every 1/8 of mu k_t; the raw curve is a step function
            let pts: Vec<(f64, f64)> =
                (0..=8 * k_t).map(|i| i as f64 / 8.0).map(|c| (c, raw_f(kt, kr, nt, rf, c))).collect();
            for i in 0..=8 * k_t as i64 {
                let c = SystemConfig::with_defaults(k_t, k_r, n_t, int(0), r).unwrap().with_mu_kt(ratio(i, 8));
                let raw = to_f64(&achievable_raw(&c).unwrap().delta);
                assert!((raw - raw_f(kt, kr, nt, rf, i as f64 / 8.0)).abs() < 1e-12, "{c:?}");
                let lce = to_f64(&achievable_lce(&c).unwrap());
                let want = hull_eval(&pts, i as f64 / 8.0);
                assert!((lce - want).abs() < 1e-9, "{c:?}: {lce} vs {want}");
            }
        }
    }
}

#[test]
fn nearest_integer_matches_float_away_from_ties() {
    for k_t in 1..=8u32 {
        for n_t in 1..=4u32 {
            for rn in 1..=200i64 {
                let r = ratio(rn, 10);
                let c = SystemConfig::with_defaults(k_t, 32, n_t, int(0), r).unwrap();
                let q = k_t as f64 * to_f64(&r) / n_t as f64;
                if (q.sqrt().fract() - 0.5).abs() < 1e-9 {
                    continue;
                }
                let want = m_r_f(k_t as f64, 32.0, n_t as f64, to_f64(&r));
                assert_eq!(m_of_r(&c).get() as f64, want, "{c:?}");
            }
        }
    }
}

#[test]
fn pipelined_matches_brute_force_envelope() {
    // oracle: sample max(K_R / (m_p n_t), 1) densely and hull it, together
    // with the fronthaul-limited branch
    let (k_t, k_r, n_t) = (8u32, 32u32, 4u32);
    for r in [ratio(1, 4), int(1), int(5)] {
        let base = SystemConfig::with_defaults(k_t, k_r, n_t, int(0), r).unwrap();
        let end = 1.0 - k_t as f64 * to_f64(&r) / n_t as f64;
        let steps = 800i64;
        let f = |i: i64| {
            let c = base.with_mu_kt(ratio(i * k_t as i64, steps));
            let x = to_f64(&c.mu_kt());
            if x <= end {
                (k_r as f64 * (1.0 - x) / (k_t as f64 * to_f64(&r))).max(1.0)
            } else {
                (k_r as f64 / (m_pipelined(&c).unwrap().get() * n_t) as f64).max(1.0)
            }
        };
        let pts: Vec<(f64, f64)> = (0..=steps).map(|i| (i as f64 * k_t as f64 / steps as f64, f(i))).collect();
        for i in (0..=steps).step_by(25) {
            let c = base.with_mu_kt(ratio(i * k_t as i64, steps));
            let got = to_f64(&achievable_pipelined(&c).unwrap());
            let want = hull_eval(&pts, to_f64(&c.mu_kt()));
            // the sampled hull can only be above the exact one
            assert!(got <= want + 1e-9 && want - got < 0.02, "{c:?}: {got} vs {want}");
        }
    }
}

// --- LP oracle ---------------------------------------------------------------

#[test]
fn scheme_gives_feasible_lp_point() {
    // map the serial scheme with multiplicity m onto LP variables: cached
    // pieces and fronthaul pieces of part i land on the subset of cluster i
    for (k_t, k_r) in [(2u32, 2u32), (3, 2), (3, 3)] {
        for i in 0..=k_t as i64 {
            for r in [ratio(1, 2), int(2)] {
                let c = SystemConfig::with_defaults(k_t, k_r, 1, ratio(i, k_t as i64), r).unwrap();
                let s = Scheme::for_config(&c).unwrap();
                let inst = build_lp(&c).unwrap();
                let mut x = vec![Q::from_integer(0.into()); inst.n_vars()];
                let p = &s.placement;
                let f = q(p.f_total as i64, 1);
                let mask_of = |part: u32| p.cluster(part).iter().fold(0u32, |a, &en| a | 1 << (en - 1));
                let t_of = |part: u32| inst.subsets.iter().position(|&m| m == mask_of(part)).unwrap();
                for part in 1..=p.f_c {
                    let t = t_of(part);
                    for n in 1..=c.n_files {
                        x[inst.gamma(n, t)] += q(p.cached_per_part as i64, 1) / &f;
                    }
                    for d in 0..inst.demands.len() {
                        for k in 0..k_r as usize {
                            x[inst.phi(d, k, t)] += q((p.f_s - p.cached_per_part) as i64, 1) / &f;
                        }
                    }
                }
                let delta_f = q_from(&achievable_raw(&c).unwrap().delta_f);
                for d in 0..inst.demands.len() {
                    x[inst.delta_f(d)] = delta_f.clone();
                }
                assert!(inst.lp.is_feasible(&x), "{c:?}");
                let obj = inst.lp.objective_at(&x);
                assert!(obj <= q_from(&achievable_raw(&c).unwrap().delta));
                assert!(solve_lp(&inst).unwrap().value <= obj);
            }
        }
    }
}

#[test]
fn lp_monotone_in_resources() {
    for k_t in [2u32, 3] {
        let mut prev_mu: Option<Q> = None;
        for i in 0..=k_t as i64 {
            let c = SystemConfig::with_defaults(k_t, 2, 1, ratio(i, k_t as i64), int(1)).unwrap();
            let v = solve_lp(&build_lp(&c).unwrap()).unwrap().value;
            if let Some(p) = &prev_mu {
                assert!(v <= *p);
            }
            prev_mu = Some(v);
        }
        let mut prev_r: Option<Q> = None;
        for r in [ratio(1, 2), int(1), int(2), int(4)] {
            let c = SystemConfig::with_defaults(k_t, 2, 1, ratio(1, k_t as i64), r).unwrap();
            let v = solve_lp(&build_lp(&c).unwrap()).unwrap().value;
            if let Some(p) = &prev_r {
                assert!(v <= *p);
            }
            prev_r = Some(v);
        }
    }
}

// --- zero forcing -------------------------------------------------------------

#[test]
fn square_zero_forcing_equals_matrix_inverse() {
    let (c, m) = worked_example(2).unwrap();
    let s = Scheme::synthesize(&c, m, &default_demand(&c)).unwrap();
    let ch = draw_channels(&s.schedule, c.n_t, 11).unwrap();
    let holdings = Holdings::of(&s);
    for (b, block) in s.schedule.blocks.iter().enumerate() {
        let h = &ch.blocks[b].h;
        assert_eq!(h.shape(), (6, 6));
        let inv = h.clone().try_inverse().unwrap();
        let v = zero_force_block(&ch.blocks[b], &block.assignments, &holdings, c.n_t);
        assert!((inv - v).norm() < 1e-9);
    }
}
