use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{en_cluster, DeliverySchedule, FronthaulPlan, PacketId, PlacementPlan};
use crate::model::{int, lcm, u_of_m, SystemConfig};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Packetization {
        detail: String,
    },
    Cluster {
        index: u32,
        detail: String,
    },
    PacketOutOfRange {
        packet: PacketId,
    },
    CacheOverflow {
        en: u32,
        file: u32,
        stored: u32,
        allowed: String,
    },
    MisplacedCache {
        en: u32,
        packet: PacketId,
    },
    Demand {
        detail: String,
    },
    FronthaulSize {
        en: u32,
        got: usize,
        want: usize,
    },
    FronthaulNotDemanded {
        en: u32,
        packet: PacketId,
    },
    FronthaulAlreadyCached {
        en: u32,
        packet: PacketId,
    },
    BlockCount {
        got: usize,
        want: usize,
    },
    GroupSize {
        block: usize,
        got: usize,
        want: usize,
    },
    UserOutsideGroup {
        block: usize,
        user: u32,
    },
    UserServedTwice {
        block: usize,
        user: u32,
    },
    WrongFile {
        block: usize,
        user: u32,
        packet: PacketId,
    },
    Unavailable {
        block: usize,
        en: u32,
        packet: PacketId,
    },
    /// More streams than the smallest holding set can zero-force.
    StreamOverload {
        block: usize,
        served: usize,
        bound: usize,
    },
    Delivery {
        user: u32,
        packet: PacketId,
        times: u32,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural invariant of a placement/fronthaul/schedule
/// triple and lists all violations found.
pub fn validate(
    cfg: &SystemConfig,
    plan: &PlacementPlan,
    fronthaul: &FronthaulPlan,
    schedule: &DeliverySchedule,
) -> ValidationReport {
    let mut v = Vec::new();
    let m = plan.m.get();
    let floor = cfg.floor_mu_kt();

    // packetization
    match u_of_m(plan.m, cfg) {
        Err(e) => v.push(Violation::Packetization { detail: e.to_string() }),
        Ok(u) => {
            let want = (lcm(m, cfg.k_t) / m, lcm(u, cfg.k_r) / cfg.k_r, lcm(u, cfg.k_r) / u);
            if (plan.u, plan.f_c, plan.f_d, plan.b_d) != (u, want.0, want.1, want.2) {
                v.push(Violation::Packetization {
                    detail: format!(
                        "(u, f_c, f_d, b_d) = ({}, {}, {}, {}), expected ({u}, {}, {}, {})",
                        plan.u, plan.f_c, plan.f_d, plan.b_d, want.0, want.1, want.2
                    ),
                });
            }
        }
    }
    if plan.f_d == 0 || !plan.f_s.is_multiple_of(plan.f_d) || plan.f_total != plan.f_c * plan.f_s {
        v.push(Violation::Packetization { detail: "f_s must be a multiple of f_d and f = f_c f_s".into() });
    }
    if plan.f_total as u64 > cfg.k_t as u64 * cfg.k_r as u64 * m as u64 {
        v.push(Violation::Packetization { detail: format!("f = {} exceeds k_t k_r m", plan.f_total) });
    }
    if plan.en_clusters.len() != plan.f_c as usize {
        v.push(Violation::Packetization { detail: "cluster count differs from f_c".into() });
    }
    if m > 0 {
        for (i, c) in plan.en_clusters.iter().enumerate() {
            let index = i as u32 + 1;
            if *c != en_cluster(index, m, cfg.k_t) {
                v.push(Violation::Cluster { index, detail: format!("{c:?} is not the circular cluster of size {m}") });
            }
        }
    }
    if !v.is_empty() {
        // the remaining checks index by cluster and part
        return ValidationReport { violations: v };
    }

    let in_range = |p: &PacketId| {
        (1..=cfg.n_files).contains(&p.file) && (1..=plan.f_c).contains(&p.part) && (1..=plan.f_s).contains(&p.piece)
    };
    let mut holders: Vec<HashSet<PacketId>> = vec![HashSet::new(); cfg.k_t as usize];

    // caches
    for (i, set) in plan.cache_sets.iter().enumerate() {
        let en = i as u32 + 1;
        let mut per_file: HashMap<u32, u32> = HashMap::new();
        for p in set {
            if !in_range(p) {
                v.push(Violation::PacketOutOfRange { packet: *p });
                continue;
            }
            *per_file.entry(p.file).or_default() += 1;
            if !plan.cluster(p.part).contains(&en) {
                v.push(Violation::MisplacedCache { en, packet: *p });
            }
            holders[i].insert(*p);
        }
        let allowed = cfg.mu * int(plan.f_total);
        let mut files: Vec<_> = per_file.into_iter().collect();
        files.sort_unstable();
        for (file, stored) in files {
            if int(stored) > allowed {
                v.push(Violation::CacheOverflow { en, file, stored, allowed: crate::model::fmt_rational(&allowed) });
            }
        }
    }

    // fronthaul
    let demand = &fronthaul.demand;
    if let Err(e) = super::check_demand(cfg, demand) {
        v.push(Violation::Demand { detail: e.to_string() });
        return ValidationReport { violations: v };
    }
    let demanded: HashSet<u32> = demand.iter().copied().collect();
    let want_size = (cfg.k_r as u64 * plan.f_total as u64 * m.saturating_sub(floor) as u64 / cfg.k_t as u64) as usize;
    let want_size = if plan.edge_only { 0 } else { want_size };
    for (i, set) in fronthaul.sets.iter().enumerate() {
        let en = i as u32 + 1;
        if set.len() != want_size {
            v.push(Violation::FronthaulSize { en, got: set.len(), want: want_size });
        }
        for p in set {
            if !in_range(p) {
                v.push(Violation::PacketOutOfRange { packet: *p });
                continue;
            }
            if !demanded.contains(&p.file) {
                v.push(Violation::FronthaulNotDemanded { en, packet: *p });
            }
            if !holders[i].insert(*p) {
                v.push(Violation::FronthaulAlreadyCached { en, packet: *p });
            }
        }
    }

    // schedule
    let want_blocks = plan.block_count() as usize;
    if schedule.blocks.len() != want_blocks {
        v.push(Violation::BlockCount { got: schedule.blocks.len(), want: want_blocks });
    }
    let mut delivered: HashMap<(u32, PacketId), u32> = HashMap::new();
    for (b, block) in schedule.blocks.iter().enumerate() {
        let block_no = b + 1;
        if block.assignments.len() != plan.u as usize {
            v.push(Violation::GroupSize { block: block_no, got: block.assignments.len(), want: plan.u as usize });
        }
        let mut seen = HashSet::new();
        let mut min_holders = usize::MAX;
        for a in &block.assignments {
            if !block.group.contains(&a.user) {
                v.push(Violation::UserOutsideGroup { block: block_no, user: a.user });
            }
            if !seen.insert(a.user) {
                v.push(Violation::UserServedTwice { block: block_no, user: a.user });
            }
            if a.user == 0 || a.user > cfg.k_r || demand[a.user as usize - 1] != a.packet.file {
                v.push(Violation::WrongFile { block: block_no, user: a.user, packet: a.packet });
            }
            let mut count = 0;
            for &en in &block.cluster {
                let has = en >= 1 && en <= cfg.k_t && holders[en as usize - 1].contains(&a.packet);
                if has {
                    count += 1;
                } else {
                    v.push(Violation::Unavailable { block: block_no, en, packet: a.packet });
                }
            }
            min_holders = min_holders.min(count);
            *delivered.entry((a.user, a.packet)).or_default() += 1;
        }
        if !block.assignments.is_empty() {
            let bound = min_holders * cfg.n_t as usize;
            if block.assignments.len() > bound {
                v.push(Violation::StreamOverload { block: block_no, served: block.assignments.len(), bound });
            }
        }
    }

    // every user gets every packet of its file exactly once
    for (k, &file) in demand.iter().enumerate() {
        let user = k as u32 + 1;
        for part in 1..=plan.f_c {
            for piece in 1..=plan.f_s {
                let packet = PacketId::new(file, part, piece);
                let times = delivered.remove(&(user, packet)).unwrap_or(0);
                if times != 1 {
                    v.push(Violation::Delivery { user, packet, times });
                }
            }
        }
    }
    let mut extra: Vec<_> = delivered.into_iter().collect();
    extra.sort_unstable();
    for ((user, packet), times) in extra {
        v.push(Violation::Delivery { user, packet, times });
    }

    ValidationReport { violations: v }
}
