//! Explicit placement, fronthaul and block schedules realizing the
//! achievable serial NDT for a given multiplicity.
//!
//! Every file is split into `f_c` parts, part `i` belonging to EN cluster
//! `i`; each part is split into `f_s` pieces. A prefix of the pieces of every
//! part is cached at all ENs of its cluster, the rest of the demanded
//! pieces are sent over the fronthaul to the same ENs. Cluster `i` then
//! zero-forces its part to user groups of size `u(m)` in round-robin.

mod examples;
mod validate;

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{int, lcm, m_max, u_of_m, Multiplicity, NdtBreakdown, Rational, SystemConfig};

pub use examples::{worked_example, WORKED_EXAMPLES};
pub use validate::{validate, ValidationReport, Violation};

/// `[a]_b = 1 + ((a - 1) mod b)`, circular 1-based indexing.
pub fn circ(a: u32, b: u32) -> u32 {
    1 + (a - 1) % b
}

/// Piece `piece` of part `part` of file `file`, all 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 3]", into = "[u32; 3]")]
pub struct PacketId {
    pub file: u32,
    pub part: u32,
    pub piece: u32,
}

impl PacketId {
    pub fn new(file: u32, part: u32, piece: u32) -> Self {
        Self { file, part, piece }
    }
}

impl From<[u32; 3]> for PacketId {
    fn from([file, part, piece]: [u32; 3]) -> Self {
        Self { file, part, piece }
    }
}

impl From<PacketId> for [u32; 3] {
    fn from(p: PacketId) -> Self {
        [p.file, p.part, p.piece]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementPlan {
    pub m: Multiplicity,
    pub u: u32,
    pub f_c: u32,
    pub f_d: u32,
    pub f_s: u32,
    pub f_total: u32,
    pub b_d: u32,
    /// Every part is fully cached and no fronthaul is needed.
    pub edge_only: bool,
    /// Cluster `i` (1-based position) holds part `i` of every file.
    pub en_clusters: Vec<Vec<u32>>,
    /// Per EN (1-based position), the sorted cached packets.
    pub cache_sets: Vec<Vec<PacketId>>,
    pub cached_per_part: u32,
}

impl PlacementPlan {
    pub fn cluster(&self, part: u32) -> &[u32] {
        &self.en_clusters[part as usize - 1]
    }

    /// Parts whose cluster contains `en`.
    pub fn parts_of(&self, en: u32) -> impl Iterator<Item = u32> + '_ {
        (1..=self.f_c).filter(move |&p| self.cluster(p).contains(&en))
    }

    pub fn passes(&self) -> u32 {
        self.f_s / self.f_d
    }

    pub fn block_count(&self) -> u32 {
        self.passes() * self.b_d * self.f_c
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FronthaulPlan {
    /// `demand[k - 1]` is the file requested by user `k`.
    pub demand: Vec<u32>,
    /// Per EN, the sorted packets received over the fronthaul.
    pub sets: Vec<Vec<PacketId>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub user: u32,
    pub packet: PacketId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    /// Serving ENs.
    pub cluster: Vec<u32>,
    /// Users addressed in this block.
    pub group: Vec<u32>,
    pub assignments: Vec<Assignment>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliverySchedule {
    pub blocks: Vec<Block>,
}

/// Placement, fronthaul and schedule for one configuration and demand; also
/// the on-disk document format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scheme {
    pub config: SystemConfig,
    pub placement: PlacementPlan,
    pub fronthaul: FronthaulPlan,
    pub schedule: DeliverySchedule,
}

/// Members of cluster `i`: `{[(i-1)m + 1]_{k_t}, .., [im]_{k_t}}`.
pub fn en_cluster(i: u32, m: u32, k_t: u32) -> Vec<u32> {
    ((i - 1) * m + 1..=i * m).map(|a| circ(a, k_t)).collect()
}

/// Users of group `j`: `{[(j-1)u + 1]_{k_r}, .., [ju]_{k_r}}`.
pub fn user_group(j: u32, u: u32, k_r: u32) -> Vec<u32> {
    ((j - 1) * u + 1..=j * u).map(|a| circ(a, k_r)).collect()
}

pub fn build_placement(cfg: &SystemConfig, m: Multiplicity) -> Result<PlacementPlan> {
    cfg.validate()?;
    let mm = m_max(cfg);
    if m > mm {
        return Err(Error::MultiplicityTooLarge { m: m.get(), max: mm.get() });
    }
    let u = u_of_m(m, cfg)?;
    let (k_t, k_r, mv) = (cfg.k_t, cfg.k_r, m.get());
    let floor = cfg.floor_mu_kt();
    let edge_only = mv <= floor;

    let f_c = lcm(mv, k_t) / mv;
    let f_d = lcm(u, k_r) / k_r;
    let b_d = lcm(u, k_r) / u;
    // Without any caching there is nothing to split, so the plain
    // fronthaul-only packetization (f_s = f_d) is used.
    let f_s = if edge_only || floor == 0 { f_d } else { lcm(f_d, mv) };
    let f_total = f_c * f_s;
    let cached_per_part = if edge_only { f_s } else { f_s * floor / mv };

    let en_clusters: Vec<Vec<u32>> = (1..=f_c).map(|i| en_cluster(i, mv, k_t)).collect();
    let mut cache_sets = vec![Vec::new(); k_t as usize];
    for (idx, cluster) in en_clusters.iter().enumerate() {
        let part = idx as u32 + 1;
        for &en in cluster {
            let set = &mut cache_sets[en as usize - 1];
            for file in 1..=cfg.n_files {
                set.extend((1..=cached_per_part).map(|piece| PacketId::new(file, part, piece)));
            }
        }
    }
    for set in &mut cache_sets {
        set.sort_unstable();
    }

    let plan = PlacementPlan { m, u, f_c, f_d, f_s, f_total, b_d, edge_only, en_clusters, cache_sets, cached_per_part };
    let per_file = int(plan.cached_per_part * f_c * mv / k_t);
    if per_file > cfg.mu * int(f_total) {
        return Err(Error::Infeasible(format!("multiplicity {m} with floor(mu k_t) = {floor} overflows the cache")));
    }
    Ok(plan)
}

pub fn check_demand(cfg: &SystemConfig, demand: &[u32]) -> Result<()> {
    if demand.len() != cfg.k_r as usize {
        return Err(Error::InvalidDemand(format!("expected {} entries, got {}", cfg.k_r, demand.len())));
    }
    let mut seen = BTreeSet::new();
    for &d in demand {
        if d == 0 || d > cfg.n_files {
            return Err(Error::InvalidDemand(format!("file {d} outside 1..={}", cfg.n_files)));
        }
        if !seen.insert(d) {
            return Err(Error::InvalidDemand(format!("file {d} requested twice")));
        }
    }
    Ok(())
}

/// Users `1..=k_r` requesting files `1..=k_r`.
pub fn default_demand(cfg: &SystemConfig) -> Vec<u32> {
    (1..=cfg.k_r).collect()
}

pub fn build_fronthaul(cfg: &SystemConfig, plan: &PlacementPlan, demand: &[u32]) -> Result<FronthaulPlan> {
    check_demand(cfg, demand)?;
    let sets = (1..=cfg.k_t)
        .map(|en| {
            let mut set: Vec<PacketId> = plan
                .parts_of(en)
                .flat_map(|part| {
                    demand.iter().flat_map(move |&file| {
                        (plan.cached_per_part + 1..=plan.f_s).map(move |piece| PacketId::new(file, part, piece))
                    })
                })
                .collect();
            set.sort_unstable();
            set
        })
        .collect();
    Ok(FronthaulPlan { demand: demand.to_vec(), sets })
}

/// Clusters in index order, passes, then user groups; every addressed user
/// receives its next undelivered piece of the cluster's part.
pub fn build_schedule(cfg: &SystemConfig, plan: &PlacementPlan, fronthaul: &FronthaulPlan) -> Result<DeliverySchedule> {
    check_demand(cfg, &fronthaul.demand)?;
    let mut blocks = Vec::with_capacity(plan.block_count() as usize);
    for part in 1..=plan.f_c {
        let mut next = vec![1u32; cfg.k_r as usize];
        for _pass in 0..plan.passes() {
            for j in 1..=plan.b_d {
                let group = user_group(j, plan.u, cfg.k_r);
                let assignments = group
                    .iter()
                    .map(|&user| {
                        let piece = &mut next[user as usize - 1];
                        let packet = PacketId::new(fronthaul.demand[user as usize - 1], part, *piece);
                        *piece += 1;
                        Assignment { user, packet }
                    })
                    .collect();
                blocks.push(Block { cluster: plan.cluster(part).to_vec(), group, assignments });
            }
        }
        if let Some(k) = next.iter().position(|&p| p != plan.f_s + 1) {
            return Err(Error::Infeasible(format!("user {} not served completely on part {part}", k + 1)));
        }
    }
    Ok(DeliverySchedule { blocks })
}

/// NDTs read off the artifacts: `max_i |F_i| / (F r)` and `B / F`.
pub fn measure_ndt(
    cfg: &SystemConfig,
    plan: &PlacementPlan,
    fronthaul: &FronthaulPlan,
    schedule: &DeliverySchedule,
) -> Result<NdtBreakdown> {
    let f = int(plan.f_total);
    let max_f = fronthaul.sets.iter().map(Vec::len).max().unwrap_or(0) as i64;
    let delta_f = if max_f == 0 {
        Rational::zero()
    } else if cfg.r.is_zero() {
        return Err(Error::Infeasible("fronthaul packets scheduled with r = 0".into()));
    } else {
        int(max_f) / (f * cfg.r)
    };
    let delta_e = int(schedule.blocks.len() as i64) / f;
    Ok(NdtBreakdown::serial(delta_f, delta_e, plan.m))
}

impl Scheme {
    pub fn synthesize(cfg: &SystemConfig, m: Multiplicity, demand: &[u32]) -> Result<Self> {
        let placement = build_placement(cfg, m)?;
        let fronthaul = build_fronthaul(cfg, &placement, demand)?;
        let schedule = build_schedule(cfg, &placement, &fronthaul)?;
        Ok(Self { config: *cfg, placement, fronthaul, schedule })
    }

    /// Uses the serial scheme's multiplicity and the default demand.
    pub fn for_config(cfg: &SystemConfig) -> Result<Self> {
        cfg.ensure_feasible()?;
        Self::synthesize(cfg, crate::model::m_serial(cfg), &default_demand(cfg))
    }

    pub fn measure(&self) -> Result<NdtBreakdown> {
        measure_ndt(&self.config, &self.placement, &self.fronthaul, &self.schedule)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.config, &self.placement, &self.fronthaul, &self.schedule)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a document and checks that its shape matches its config.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.config.validate()?;
        if s.placement.cache_sets.len() != s.config.k_t as usize || s.fronthaul.sets.len() != s.config.k_t as usize {
            return Err(Error::Document("per-EN lists do not match k_t".into()));
        }
        if s.placement.en_clusters.len() != s.placement.f_c as usize {
            return Err(Error::Document("cluster list does not match f_c".into()));
        }
        if s.placement.f_total == 0 || s.placement.f_d == 0 {
            return Err(Error::Document("zero packetization".into()));
        }
        Ok(s)
    }
}
