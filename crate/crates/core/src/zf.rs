//! Numerical check that a schedule is decodable: random channels, per-block
//! zero-forcing precoders restricted to the ENs holding each packet, and
//! interference residuals. Also a finite-SNR latency simulation and a
//! finite-length block-Markov latency model.

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{int, to_f64, Rational};
use crate::par::{self, ExecMode};
use crate::scheme::{Assignment, Block, DeliverySchedule, PacketId, Scheme};

pub const CONSTRUCTION_TOL: f64 = 1e-10;
pub const VERIFY_TOL: f64 = 1e-9;
pub const RANK_TOL: f64 = 1e-8;
pub const MIN_DESIRED_GAIN: f64 = 1e-6;
pub const MAX_REDRAWS: usize = 100;

/// Channels of one block: row `k` is served stream `k`'s user, columns are
/// the cluster's antennas, EN by EN.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockChannel {
    pub users: Vec<u32>,
    pub ens: Vec<u32>,
    pub h: DMatrix<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub seed: u64,
    pub n_t: u32,
    pub blocks: Vec<BlockChannel>,
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Smallest singular value after scaling every row to unit norm.
pub fn min_normalized_singular_value(h: &DMatrix<Complex64>) -> f64 {
    if h.nrows() == 0 || h.ncols() == 0 {
        return 0.0;
    }
    let mut n = h.clone();
    for mut row in n.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= Complex64::new(norm, 0.0);
        }
    }
    n.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Draws i.i.d. CN(0, 1) channels for block `index` from its own stream of
/// `seed`, so blocks can be drawn in any order.
pub fn draw_block_channel(block: &Block, n_t: u32, seed: u64, index: usize) -> Result<BlockChannel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let users: Vec<u32> = block.assignments.iter().map(|a| a.user).collect();
    let cols = block.cluster.len() * n_t as usize;
    for _ in 0..MAX_REDRAWS {
        let h = DMatrix::from_fn(users.len(), cols, |_, _| complex_gaussian(&mut rng));
        if min_normalized_singular_value(&h) > RANK_TOL {
            return Ok(BlockChannel { users: users.clone(), ens: block.cluster.clone(), h });
        }
    }
    Err(Error::RankDeficient { block: index + 1, attempts: MAX_REDRAWS })
}

pub fn draw_channels(schedule: &DeliverySchedule, n_t: u32, seed: u64) -> Result<ChannelRealization> {
    let blocks = schedule
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| draw_block_channel(b, n_t, seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelRealization { seed, n_t, blocks })
}

/// Per-EN packet holdings (cache plus fronthaul).
#[derive(Clone, Debug)]
pub struct Holdings(Vec<HashSet<PacketId>>);

impl Holdings {
    pub fn of(scheme: &Scheme) -> Self {
        Self(
            scheme
                .placement
                .cache_sets
                .iter()
                .zip(&scheme.fronthaul.sets)
                .map(|(c, f)| c.iter().chain(f).copied().collect())
                .collect(),
        )
    }

    pub fn holds(&self, en: u32, packet: &PacketId) -> bool {
        en >= 1 && self.0.get(en as usize - 1).is_some_and(|s| s.contains(packet))
    }
}

/// Zero-forcing precoders for one block, one column per stream.
///
/// Stream `l` may only use antennas of ENs that hold its packet; its
/// precoder is the minimum-norm solution of `H_S v = e_l` on that support
/// `S`. Rows of non-holding ENs stay exactly zero.
pub fn zero_force_block(
    channel: &BlockChannel,
    assignments: &[Assignment],
    holdings: &Holdings,
    n_t: u32,
) -> DMatrix<Complex64> {
    let (u, cols) = channel.h.shape();
    let mut v = DMatrix::<Complex64>::zeros(cols, u);
    for (l, a) in assignments.iter().enumerate() {
        let support: Vec<usize> = channel
            .ens
            .iter()
            .enumerate()
            .filter(|(_, &en)| holdings.holds(en, &a.packet))
            .flat_map(|(pos, _)| pos * n_t as usize..(pos + 1) * n_t as usize)
            .collect();
        if support.is_empty() {
            continue;
        }
        let sub = channel.h.select_columns(&support);
        let Ok(pinv) = sub.pseudo_inverse(1e-14) else {
            continue;
        };
        for (row, &col) in support.iter().enumerate() {
            v[(col, l)] = pinv[(row, l)];
        }
    }
    v
}

/// Worst ratio over served users of interference power to desired gain
/// (both as amplitudes), and the smallest desired gain.
pub fn block_residual(h: &DMatrix<Complex64>, v: &DMatrix<Complex64>) -> (f64, f64) {
    let g = h * v;
    let mut residual: f64 = 0.0;
    let mut min_gain = f64::INFINITY;
    for k in 0..g.nrows() {
        let desired = g[(k, k)].norm();
        let interference = (0..g.ncols()).filter(|&l| l != k).map(|l| g[(k, l)].norm_sqr()).sum::<f64>().sqrt();
        min_gain = min_gain.min(desired);
        residual = residual.max(if desired > 0.0 { interference / desired } else { f64::INFINITY });
    }
    (residual, min_gain)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockFailure {
    pub seed: u64,
    pub block: usize,
    pub residual: f64,
    pub min_gain: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub max_residual: f64,
    pub blocks_checked: usize,
    pub failures: Vec<BlockFailure>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(mut self, other: VerifyReport) -> Self {
        self.max_residual = self.max_residual.max(other.max_residual);
        self.blocks_checked += other.blocks_checked;
        self.failures.extend(other.failures);
        self
    }
}

fn check_block(scheme: &Scheme, holdings: &Holdings, seed: u64, index: usize) -> (f64, Option<BlockFailure>) {
    let block = &scheme.schedule.blocks[index];
    let n_t = scheme.config.n_t;
    let fail = |residual, min_gain, error| BlockFailure { seed, block: index + 1, residual, min_gain, error };
    let channel = match draw_block_channel(block, n_t, seed, index) {
        Ok(c) => c,
        Err(e) => return (f64::INFINITY, Some(fail(f64::INFINITY, 0.0, Some(e.to_string())))),
    };
    let v = zero_force_block(&channel, &block.assignments, holdings, n_t);
    let (residual, min_gain) = block_residual(&channel.h, &v);
    // NaN residuals count as failures
    let failed = residual.is_nan() || residual > VERIFY_TOL || min_gain < MIN_DESIRED_GAIN;
    (residual, failed.then(|| fail(residual, min_gain, None)))
}

/// Draws channels for every seed, zero-forces every block and collects the
/// worst residual. Blocks are independent and checked with `mode`.
pub fn verify_scheme(scheme: &Scheme, seeds: &[u64], mode: ExecMode) -> VerifyReport {
    let holdings = Holdings::of(scheme);
    let jobs: Vec<(u64, usize)> =
        seeds.iter().flat_map(|&s| (0..scheme.schedule.blocks.len()).map(move |b| (s, b))).collect();
    par::map(mode, &jobs, |&(seed, b)| check_block(scheme, &holdings, seed, b)).into_iter().fold(
        VerifyReport::default(),
        |acc, (residual, failure)| {
            acc.merge(VerifyReport {
                max_residual: residual,
                blocks_checked: 1,
                failures: failure.into_iter().collect(),
            })
        },
    )
}

/// Adds one stream per block for a fresh user beyond `k_r`, reusing the
/// block's first packet. Every block then carries one stream more than the
/// cluster can null when the cluster is fully loaded.
pub fn with_extra_user(schedule: &DeliverySchedule, k_r: u32) -> DeliverySchedule {
    let mut s = schedule.clone();
    for block in &mut s.blocks {
        if let Some(first) = block.assignments.first().copied() {
            block.group.push(k_r + 1);
            block.assignments.push(Assignment { user: k_r + 1, packet: first.packet });
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub latency_normalized: f64,
    pub ndt_target: f64,
}

/// Smallest desired gain `|h_k^T v_k|^2` per block with unit-norm precoder
/// columns.
fn block_min_gains(scheme: &Scheme, holdings: &Holdings, seed: u64) -> Result<Vec<f64>> {
    let n_t = scheme.config.n_t;
    scheme
        .schedule
        .blocks
        .iter()
        .enumerate()
        .map(|(i, block)| {
            let channel = draw_block_channel(block, n_t, seed, i)?;
            let mut v = zero_force_block(&channel, &block.assignments, holdings, n_t);
            for mut col in v.column_iter_mut() {
                let norm = col.norm();
                if norm > 0.0 {
                    col /= Complex64::new(norm, 0.0);
                }
            }
            let g = &channel.h * &v;
            Ok((0..g.nrows()).map(|k| g[(k, k)].norm_sqr()).fold(f64::INFINITY, f64::min))
        })
        .collect()
}

/// Serial latency normalized by `L / log2(P)`, averaged over `seeds`.
///
/// Each block carries `L / F` bits per user at rate `log2(1 + g P)`, with
/// `g` the weakest desired gain in the block. The fronthaul time
/// `max_i |F_i| (L / F) / (r log2 P)` normalizes to the exact fronthaul NDT.
pub fn simulate_finite_snr(scheme: &Scheme, seeds: &[u64], snr_db: &[f64], mode: ExecMode) -> Result<Vec<SnrPoint>> {
    let measured = scheme.measure()?;
    let delta_f = to_f64(&measured.delta_f);
    let f = scheme.placement.f_total as f64;
    let holdings = Holdings::of(scheme);
    let gains =
        par::map(mode, seeds, |&s| block_min_gains(scheme, &holdings, s)).into_iter().collect::<Result<Vec<_>>>()?;
    if seeds.is_empty() {
        return Err(Error::Domain("at least one seed is required".into()));
    }
    Ok(snr_db
        .iter()
        .map(|&db| {
            let p = 10f64.powf(db / 10.0);
            let lp = p.log2();
            let mean_edge = gains
                .iter()
                .map(|blocks| blocks.iter().map(|&g| lp / (1.0 + g * p).log2() / f).sum::<f64>())
                .sum::<f64>()
                / gains.len() as f64;
            SnrPoint { snr_db: db, latency_normalized: delta_f + mean_edge, ndt_target: to_f64(&measured.delta) }
        })
        .collect())
}

/// Latency of block-Markov pipelining with `b` stages.
///
/// The demand is split into `b - 1` equal sub-blocks. Stage 1 only carries
/// the fronthaul of sub-block 1, stage `b` only the edge transmission of
/// sub-block `b - 1`, and every stage in between runs the fronthaul of one
/// sub-block alongside the edge transmission of the previous one.
pub fn block_markov_latency(delta_f: Rational, delta_e: Rational, b: u32) -> Result<Rational> {
    if b < 2 {
        return Err(Error::Domain("block-Markov operation needs at least 2 stages".into()));
    }
    let parts = int(b - 1);
    let (t_f, t_e) = (delta_f / parts, delta_e / parts);
    let mut total = Rational::zero();
    for stage in 1..=b {
        let fronthaul = if stage < b { t_f } else { Rational::zero() };
        let edge = if stage > 1 { t_e } else { Rational::zero() };
        total += fronthaul.max(edge);
    }
    Ok(total)
}
