use fran_core::model::*;
use fran_core::ndt_pipelined::*;
use fran_core::ndt_serial::*;
use fran_core::scheme::{default_demand, user_group, Scheme};
use proptest::prelude::*;

fn arb_cfg() -> impl Strategy<Value = SystemConfig> {
    (1u32..=8, 1u32..=32, 1u32..=6, 0i64..=40).prop_flat_map(|(k_t, k_r, n_t, r_num)| {
        (0i64..=(2 * k_t as i64)).prop_map(move |h| {
            SystemConfig::with_defaults(k_t, k_r, n_t, ratio(h, 2 * k_t as i64), ratio(r_num, 4)).unwrap()
        })
    })
}

fn arb_feasible() -> impl Strategy<Value = SystemConfig> {
    arb_cfg().prop_filter("feasible", |c| c.is_feasible())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn u_is_capped(c in arb_cfg(), m in 1u32..10) {
        let u = u_of_m(Multiplicity(m), &c).unwrap();
        prop_assert!(u <= m * c.n_t && u <= c.k_r);
    }

    #[test]
    fn m_of_r_monotone(c in arb_cfg(), dr in 0i64..20) {
        let bigger = c.with_r(c.r + ratio(dr, 4));
        prop_assert!(m_of_r(&bigger) >= m_of_r(&c));
        let more_ens = SystemConfig { k_t: c.k_t + 1, ..c };
        prop_assert!(m_of_r(&more_ens) >= m_of_r(&c));
    }

    #[test]
    fn m_serial_bounds(c in arb_cfg()) {
        let ms = m_serial(&c);
        prop_assert!(ms >= m_of_mu(&c));
        if c.mu_kt() < int(m_of_r(&c).get()) {
            prop_assert!(ms >= m_of_r(&c));
        }
        prop_assert!(ms <= m_max(&c));
    }

    #[test]
    fn pipelined_multiplicity_dominates_above_one(c in arb_feasible()) {
        // below mu k_t = 1 the balancing multiplicity can fall under m(r)
        prop_assume!(c.mu_kt() >= int(1));
        prop_assert!(m_pipelined(&c).unwrap() >= m_serial(&c));
    }

    #[test]
    fn m_eq_balances(c in arb_feasible()) {
        prop_assume!(c.r > int(0));
        let m = m_eq(&c).unwrap();
        let c_mu = to_f64(&c.mu_kt());
        let df = c.k_r as f64 * (m - c_mu) / (c.k_t as f64 * to_f64(&c.r));
        let de = c.k_r as f64 / (m * c.n_t as f64);
        prop_assert!((df - de).abs() <= 1e-12 * de.max(1.0));
        prop_assert_eq!(floor_m_eq(&c).unwrap(), m.floor() as u32);
    }

    #[test]
    fn serial_sandwich_and_floor(c in arb_feasible()) {
        // the converse ignores the cap u(m) <= k_r, so it needs n_t <= k_r
        prop_assume!(c.n_t <= c.k_r);
        let ach = to_f64(&achievable_lce(&c).unwrap());
        let raw = achievable_raw(&c).unwrap();
        prop_assert!(ach <= to_f64(&raw.delta) + 1e-12);
        prop_assert!(ach >= 1.0 - 1e-12);
        let lb = lower_bound_serial(&c).value();
        prop_assert!(lb <= ach + 1e-9);
        prop_assert!(ach / lb <= 1.5 + 1e-9);
        if let Some(e) = exact_regime_serial(&c) {
            prop_assert!((to_f64(&e) - ach).abs() <= 1e-9 && (to_f64(&e) - lb).abs() <= 1e-9);
        }
    }

    #[test]
    fn edge_only_when_cache_covers_m_of_r(c in arb_feasible()) {
        if c.mu_kt() >= int(m_of_r(&c).get()) {
            prop_assert_eq!(achievable_raw(&c).unwrap().delta_f, int(0));
        }
    }

    #[test]
    fn specializations(c in arb_feasible()) {
        let raw = achievable_raw(&c).unwrap();
        if c.r == int(0) {
            prop_assert_eq!(raw.delta, delta_e_of_m(m_of_mu(&c), &c).unwrap());
        }
        if c.mu == int(0) {
            let m = m_of_r(&c);
            prop_assert_eq!(raw.delta, delta_f_of_m(m.get(), &c).unwrap() + delta_e_of_m(m, &c).unwrap());
        }
    }

    #[test]
    fn serial_curve_shape(c in arb_cfg()) {
        let curve = lce_curve(&c).unwrap();
        prop_assert!(curve.is_convex_non_increasing());
    }

    #[test]
    fn serial_monotone_in_resources(c in arb_feasible(), dr in 1i64..8) {
        // with n_t | k_r no multiplicity hits the user cap; see
        // `serial_not_monotone_in_r_when_users_cap` for what happens otherwise
        prop_assume!(c.k_r % c.n_t == 0);
        let a = achievable_lce(&c).unwrap();
        prop_assert!(achievable_lce(&c.with_r(c.r + ratio(dr, 4))).unwrap() <= a);
        let more_antennas = SystemConfig { n_t: c.n_t + 1, ..c };
        prop_assert!(achievable_lce(&more_antennas).unwrap() <= a);
    }

    #[test]
    fn pipelined_bounds(c in arb_feasible()) {
        prop_assume!(c.n_t <= c.k_r);
        let ach = achievable_pipelined(&c).unwrap();
        prop_assert!(ach >= int(1));
        let ser = achievable_lce(&c).unwrap();
        prop_assert!(ach <= ser);
        let lb = lower_bound_pipelined(&c).value();
        prop_assert!(lb <= to_f64(&ach) + 1e-9);
        prop_assert!(to_f64(&ach) / lb <= 2.0 + 1e-9);
        prop_assert!(lb >= lower_bound_serial(&c).value() / 2.0 - 1e-9);
        if let Some(e) = exact_regime_pipelined(&c) {
            prop_assert!((to_f64(&e) - to_f64(&ach)).abs() <= 1e-9 && (to_f64(&e) - lb).abs() <= 1e-9);
        }
    }

    #[test]
    fn pipelined_curve_shape(c in arb_cfg()) {
        prop_assume!(c.r > int(0));
        prop_assert!(pipelined_curve(&c).unwrap().is_convex_non_increasing());
    }

    #[test]
    fn pipelined_breakpoints_are_tight(c in arb_cfg(), pick in 0u32..8, j in 1i64..=8) {
        let i = 1 + pick % m_max(&c).get();
        // r such that the i-th breakpoint lands in [0, i)
        let c = c.with_r(ratio((i * i * c.n_t) as i64 * j, 8 * c.k_t as i64));
        let x = breakpoint(i, &c);
        prop_assume!(x <= int(c.k_t));
        let at = c.with_mu_kt(x);
        let extra = i as f64 - to_f64(&x);
        let df = c.k_r as f64 * extra / (c.k_t as f64 * to_f64(&c.r));
        let de = to_f64(&delta_e_of_m(Multiplicity(i), &c).unwrap());
        if i * c.n_t <= c.k_r {
            prop_assert!((df - de).abs() <= 1e-12 * de);
        }
        let ach = to_f64(&achievable_pipelined(&at).unwrap());
        prop_assert!((ach - lower_bound_pipelined(&at).value()).abs() <= 1e-9);
    }

    #[test]
    fn first_branch_continuity(c in arb_cfg(), j in 1i64..=8) {
        let c = c.with_r(ratio(c.n_t as i64 * j, 8 * c.k_t as i64));
        let end = int(1) - int(c.k_t) * c.r / int(c.n_t);
        let at = c.with_mu_kt(end);
        let first = (int(c.k_r) * (int(1) - end) / (int(c.k_t) * c.r)).max(int(1));
        prop_assert_eq!(achievable_pipelined(&at).unwrap(), first);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn synthesized_schemes(k_t in 1u32..=6, k_r in 1u32..=12, n_t in 1u32..=3, h in 0u32..=6, pick in 0u32..8, r in 1i64..8) {
        let floor = h.min(k_t);
        let c = SystemConfig::with_defaults(k_t, k_r, n_t, ratio(floor as i64, k_t as i64), ratio(r, 2)).unwrap();
        let m = Multiplicity(1 + pick % m_max(&c).get());
        let s = Scheme::synthesize(&c, m, &default_demand(&c)).unwrap();
        prop_assert!(s.validate().is_ok());
        let p = &s.placement;
        prop_assert!(p.f_total <= k_t * k_r * m.get());
        if p.edge_only {
            prop_assert!(p.f_total <= k_t * k_r);
        }
        // every user is in f_d groups, every EN in lcm(m, k_t) / k_t clusters
        for k in 1..=k_r {
            let n = (1..=p.b_d).filter(|&j| user_group(j, p.u, k_r).contains(&k)).count();
            prop_assert_eq!(n as u32, p.f_d);
        }
        for en in 1..=k_t {
            prop_assert_eq!(p.parts_of(en).count() as u32, lcm(m.get(), k_t) / k_t);
            let per_file = p.cache_sets[en as usize - 1].iter().filter(|x| x.file == 1).count() as u32;
            prop_assert_eq!(per_file * k_t, floor.min(m.get()) * p.f_total);
        }
        let b = s.measure().unwrap();
        prop_assert_eq!(b.delta_e, delta_e_of_m(m, &c).unwrap());
        prop_assert_eq!(b.delta_f, delta_f_of_m(m.get().saturating_sub(floor), &c).unwrap());
    }
}

#[test]
fn serial_not_monotone_in_r_when_users_cap() {
    // m(r) jumps from 1 to 2 although u(2) = 4 < 2 n_t
    let c = SystemConfig::with_defaults(2, 4, 3, ratio(1, 2), int(2)).unwrap();
    assert_eq!(achievable_lce(&c).unwrap(), ratio(4, 3));
    assert_eq!(achievable_lce(&c.with_r(int(5))).unwrap(), ratio(7, 5));
}

#[test]
fn converse_too_weak_with_more_antennas_than_users() {
    let c = SystemConfig::with_defaults(1, 2, 5, ratio(1, 2), ratio(7, 4)).unwrap();
    assert_eq!(achievable_lce(&c).unwrap(), ratio(11, 7));
    assert_eq!(lower_bound_serial(&c).value(), 1.0);
}

#[test]
fn pipelined_multiplicity_can_drop_below_serial_without_cache() {
    let c = SystemConfig::with_defaults(2, 8, 3, int(0), int(5)).unwrap();
    assert!(m_pipelined(&c).unwrap() < m_serial(&c));
}
