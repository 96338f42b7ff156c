use std::fs;

use anyhow::{bail, Context, Result};
use fran_core::lp::sandwich_check;
use fran_core::model::{
    fmt_rational, int, m_serial, to_f64, DeliveryMode, Multiplicity, NdtBreakdown, Rational, Regime, SystemConfig,
};
use fran_core::ndt_pipelined::pipelined_report;
use fran_core::ndt_serial::{delta_e_of_m, delta_f_of_m, serial_report};
use fran_core::par::{self, ExecMode};
use fran_core::scheme::{default_demand, worked_example, Scheme, Violation};
use fran_core::sweep::{gap_scan, mu_grid, sweep, GapGrid, GapSummary, SWEEP_HEADER};
use fran_core::zf::{block_markov_latency, simulate_finite_snr, verify_scheme, VerifyReport};
use fran_core::LowerBound;
use serde::Serialize;

use crate::config::{
    emit, exclusive, fill, fill_list, fill_num, parse_list, rational, rational_list, required, FileConfig,
};
use crate::{
    AnalyzeArgs, Cli, Command, Failure, GapArgs, OracleArgs, SweepArgs, SynthesizeArgs, SystemArgs, VerifyArgs,
};

const DEFAULT_R_LIST: &str = "1/10,1/2,1,2,5,10";

pub fn run(cli: Cli) -> Result<()> {
    let exec = |f: &FileConfig| {
        if cli.sequential || f.sequential == Some(true) {
            ExecMode::Sequential
        } else {
            ExecMode::Parallel
        }
    };
    match cli.command {
        Command::Analyze(a) => {
            let f = FileConfig::load(a.system.config.as_deref())?;
            analyze(a, &f)
        }
        Command::Sweep(a) => {
            let f = FileConfig::load(a.system.config.as_deref())?;
            cmd_sweep(a, &f, exec(&f))
        }
        Command::Synthesize(a) => {
            let f = FileConfig::load(a.system.config.as_deref())?;
            synthesize(a, &f)
        }
        Command::Verify(a) => {
            let f = FileConfig::load(a.config.as_deref())?;
            verify(a, &f, exec(&f))
        }
        Command::Oracle(a) => {
            let f = FileConfig::load(a.system.config.as_deref())?;
            oracle(a, &f, exec(&f))
        }
        Command::Gap(a) => {
            let f = FileConfig::load(a.config.as_deref())?;
            gap(a, &f, exec(&f))
        }
    }
}

// --- shared helpers -----------------------------------------------------------

fn merge_system(s: &mut SystemArgs, f: &FileConfig) {
    fill(&mut s.kt, &f.kt);
    fill(&mut s.kr, &f.kr);
    fill(&mut s.nt, &f.nt);
    fill(&mut s.n_files, &f.n_files);
}

fn system_config(s: &SystemArgs, mu: Rational, r: Rational) -> Result<SystemConfig> {
    let kr = required(&s.kr, "kr")?;
    Ok(SystemConfig::new(required(&s.kt, "kt")?, kr, required(&s.nt, "nt")?, s.n_files.unwrap_or(kr), mu, r)?)
}

fn modes(mode: Option<&str>) -> Result<Vec<DeliveryMode>> {
    Ok(match mode.unwrap_or("both") {
        "serial" => vec![DeliveryMode::Serial],
        "pipelined" => vec![DeliveryMode::Pipelined],
        "both" => vec![DeliveryMode::Serial, DeliveryMode::Pipelined],
        other => bail!("unknown mode `{other}`; expected serial, pipelined or both"),
    })
}

/// `p/q (decimal)` for exact values.
fn exact(q: &Rational) -> String {
    format!("{} ({:.12})", fmt_rational(q), to_f64(q))
}

/// Decimal flagged with `~` for values involving square roots.
fn approx(v: f64) -> String {
    if v.is_finite() {
        format!("~{v:.12}")
    } else {
        "inf".into()
    }
}

fn csv_text<R: AsRef<[u8]>>(header: &[&str], rows: impl IntoIterator<Item = Vec<R>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

// --- analyze ------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ModeReport {
    /// Achievable NDT after time sharing, `p/q`.
    achievable: String,
    achievable_decimal: f64,
    /// Lower bound, `~`-prefixed decimal or `inf`.
    lower_bound: String,
    lower_bound_decimal: Option<f64>,
    exact: bool,
    exact_value: Option<String>,
    gap: f64,
    regime: Regime,
    multiplicity: Multiplicity,
    /// Scheme at the configured cache size before time sharing.
    raw: NdtBreakdown,
}

impl ModeReport {
    fn new(raw: NdtBreakdown, ach: Rational, lb: LowerBound, ex: Option<Rational>, gap: f64) -> Self {
        Self {
            achievable: fmt_rational(&ach),
            achievable_decimal: to_f64(&ach),
            lower_bound: approx(lb.value()),
            lower_bound_decimal: lb.finite(),
            exact: ex.is_some(),
            exact_value: ex.as_ref().map(fmt_rational),
            gap,
            regime: raw.regime,
            multiplicity: raw.multiplicity_used,
            raw,
        }
    }

    fn text(&self, name: &str) -> String {
        let raw = &self.raw;
        let q = |s: &str| rational(s).map(|v| exact(&v)).unwrap_or_default();
        format!(
            "[{name}]\n  achievable   {}\n  lower bound  {}\n  exact        {}\n  gap          {}\n  regime       {:?}\n  multiplicity {}\n  scheme       delta_f {}, delta_e {}, delta {}\n",
            q(&self.achievable),
            self.lower_bound,
            self.exact_value.as_deref().map(q).unwrap_or_else(|| "no".into()),
            approx(self.gap),
            self.regime,
            self.multiplicity,
            exact(&raw.delta_f),
            exact(&raw.delta_e),
            exact(&raw.delta),
        )
    }
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    config: SystemConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    serial: Option<ModeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pipelined: Option<ModeReport>,
}

fn analyze(mut a: AnalyzeArgs, f: &FileConfig) -> Result<()> {
    merge_system(&mut a.system, f);
    fill_num(&mut a.mu, &f.mu);
    fill_num(&mut a.r, &f.r);
    fill(&mut a.mode, &f.mode);
    fill(&mut a.format, &f.format);
    fill(&mut a.out, &f.out);
    let cfg = system_config(&a.system, rational(&required(&a.mu, "mu")?)?, rational(&required(&a.r, "r")?)?)?;
    if !cfg.is_feasible() {
        return Err(Failure::Infeasible("r = 0 requires mu * k_t >= 1".into()).into());
    }
    let mut report = AnalyzeReport { config: cfg, serial: None, pipelined: None };
    for mode in modes(a.mode.as_deref())? {
        match mode {
            DeliveryMode::Serial => {
                let s = serial_report(&cfg)?;
                report.serial = Some(ModeReport::new(s.raw, s.achievable, s.lower_bound, s.exact, s.gap_ratio));
            }
            DeliveryMode::Pipelined => {
                let p = pipelined_report(&cfg)?;
                report.pipelined = Some(ModeReport::new(p.raw, p.achievable, p.lower_bound, p.exact, p.gap_ratio));
            }
        }
    }
    let text = match a.format.as_deref().unwrap_or("json") {
        "json" => serde_json::to_string_pretty(&report)? + "\n",
        "text" => {
            let c = &report.config;
            let mut t = format!(
                "k_t {}, k_r {}, n_t {}, n_files {}, mu {}, r {}\n",
                c.k_t,
                c.k_r,
                c.n_t,
                c.n_files,
                exact(&c.mu),
                exact(&c.r)
            );
            for (name, r) in [("serial", &report.serial), ("pipelined", &report.pipelined)] {
                if let Some(r) = r {
                    t += &r.text(name);
                }
            }
            t
        }
        other => bail!("unknown format `{other}`; expected json or text"),
    };
    emit(a.out.as_deref(), &text)
}

// --- sweep --------------------------------------------------------------------

fn cmd_sweep(mut a: SweepArgs, f: &FileConfig, exec: ExecMode) -> Result<()> {
    merge_system(&mut a.system, f);
    fill_list(&mut a.mu_list, &f.mu_list);
    fill(&mut a.mu_steps, &f.mu_steps);
    fill_list(&mut a.r_list, &f.r_list);
    fill(&mut a.mode, &f.mode);
    fill(&mut a.out, &f.out);
    exclusive(("mu-list", a.mu_list.is_some()), ("mu-steps", a.mu_steps.is_some()))?;
    let base = system_config(&a.system, int(0), int(0))?;
    let mus = match &a.mu_list {
        Some(l) => rational_list(l)?,
        None => match a.mu_steps.unwrap_or(4) {
            0 => bail!("--mu-steps must be positive"),
            n => mu_grid(base.k_t, n),
        },
    };
    let rs = rational_list(a.r_list.as_deref().unwrap_or(DEFAULT_R_LIST))?;
    let rows = sweep(&base, &mus, &rs, &modes(a.mode.as_deref())?, exec)?;
    let text = csv_text(&SWEEP_HEADER, rows.iter().map(|r| r.csv_record().to_vec()))?;
    emit(a.out.as_deref(), &text)
}

// --- synthesize ---------------------------------------------------------------

fn synthesize(mut a: SynthesizeArgs, f: &FileConfig) -> Result<()> {
    merge_system(&mut a.system, f);
    fill(&mut a.example, &f.example);
    fill_num(&mut a.mu, &f.mu);
    fill_num(&mut a.r, &f.r);
    fill(&mut a.m, &f.m);
    fill_list(&mut a.demand, &f.demand);
    fill(&mut a.out, &f.out);
    let s = &a.system;
    let custom = s.kt.is_some() || s.kr.is_some() || s.nt.is_some() || a.mu.is_some() || a.r.is_some() || a.m.is_some();
    exclusive(("example", a.example.is_some()), ("kt/kr/nt/mu/r/m", custom))?;
    let (cfg, m) = match a.example {
        Some(n) => worked_example(n)?,
        None => {
            let cfg = system_config(s, rational(&required(&a.mu, "mu")?)?, rational(&required(&a.r, "r")?)?)?;
            if !cfg.is_feasible() {
                return Err(Failure::Infeasible("r = 0 requires mu * k_t >= 1".into()).into());
            }
            (cfg, a.m.map(Multiplicity).unwrap_or_else(|| m_serial(&cfg)))
        }
    };
    let demand = match &a.demand {
        Some(d) => parse_list::<u32>(d)?,
        None => default_demand(&cfg),
    };
    let scheme = Scheme::synthesize(&cfg, m, &demand)?;
    let ndt = scheme.measure()?;
    eprintln!(
        "m {}, B {}, F {}, delta_f {}, delta_e {}, delta {}",
        m,
        scheme.schedule.blocks.len(),
        scheme.placement.f_total,
        exact(&ndt.delta_f),
        exact(&ndt.delta_e),
        exact(&ndt.delta)
    );
    emit(a.out.as_deref(), &(scheme.to_json()? + "\n"))
}

// --- verify -------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct NdtPair {
    delta_f: String,
    delta_e: String,
    delta: String,
}

impl NdtPair {
    fn new(delta_f: Rational, delta_e: Rational) -> Self {
        Self {
            delta_f: fmt_rational(&delta_f),
            delta_e: fmt_rational(&delta_e),
            delta: fmt_rational(&(delta_f + delta_e)),
        }
    }
}

#[derive(Debug, Serialize)]
struct BlockMarkov {
    stages: u32,
    latency: String,
}

#[derive(Debug, Serialize)]
struct VerifyOutput {
    ok: bool,
    #[serde(flatten)]
    zero_forcing: VerifyReport,
    violations: Vec<Violation>,
    /// NDT counted on the document.
    measured: Option<NdtPair>,
    /// Closed-form NDT of the scheme with the document's multiplicity.
    expected: NdtPair,
    ndt_matches: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    block_markov: Option<BlockMarkov>,
}

fn verify(mut a: VerifyArgs, f: &FileConfig, exec: ExecMode) -> Result<()> {
    fill(&mut a.input, &f.input);
    fill(&mut a.seeds, &f.seeds);
    fill(&mut a.seed_start, &f.seed_start);
    fill_list(&mut a.snr_db, &f.snr_db);
    fill(&mut a.snr_out, &f.snr_out);
    fill(&mut a.block_markov, &f.block_markov);
    fill(&mut a.out, &f.out);
    let input = required(&a.input, "in")?;
    let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
    let scheme = Scheme::from_json(&text).map_err(|e| Failure::Validation(format!("{}: {e}", input.display())))?;
    let cfg = scheme.config;
    let m = scheme.placement.m;

    let violations = scheme.validate().violations;
    let floor = cfg.floor_mu_kt().min(m.get());
    let (ef, ee) = (delta_f_of_m(m.get() - floor, &cfg)?, delta_e_of_m(m, &cfg)?);
    let measured = scheme.measure().ok();
    let ndt_matches = measured.is_some_and(|b| (b.delta_f, b.delta_e) == (ef, ee));

    // zero forcing needs a structurally valid schedule
    let start = a.seed_start.unwrap_or(0);
    let seeds: Vec<u64> = (start..start + a.seeds.unwrap_or(100)).collect();
    if seeds.is_empty() {
        bail!("--seeds must be positive");
    }
    let zero_forcing =
        if violations.is_empty() { verify_scheme(&scheme, &seeds, exec) } else { VerifyReport::default() };

    if let Some(snr) = &a.snr_db {
        let snr = parse_list::<f64>(snr)?;
        let points = simulate_finite_snr(&scheme, &seeds, &snr, exec)?;
        let rows = points.iter().map(|p| {
            vec![p.snr_db.to_string(), format!("{:.12}", p.latency_normalized), format!("{:.12}", p.ndt_target)]
        });
        let csv = csv_text(&["snr_db", "latency_normalized", "ndt_target"], rows)?;
        emit(Some(&required(&a.snr_out, "snr-out")?), &csv)?;
    }
    let block_markov = match (a.block_markov, measured) {
        (Some(b), Some(n)) => {
            Some(BlockMarkov { stages: b, latency: exact(&block_markov_latency(n.delta_f, n.delta_e, b)?) })
        }
        _ => None,
    };

    let ok = violations.is_empty() && zero_forcing.ok() && ndt_matches;
    let out = VerifyOutput {
        ok,
        zero_forcing,
        violations,
        measured: measured.map(|b| NdtPair::new(b.delta_f, b.delta_e)),
        expected: NdtPair::new(ef, ee),
        ndt_matches,
        block_markov,
    };
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))?;
    if !ok {
        return Err(Failure::Validation(format!(
            "{} structural violations, {} zero-forcing failures, ndt matches: {}",
            out.violations.len(),
            out.zero_forcing.failures.len(),
            ndt_matches
        ))
        .into());
    }
    eprintln!(
        "ok: {} blocks checked, max residual {:.3e}",
        out.zero_forcing.blocks_checked, out.zero_forcing.max_residual
    );
    Ok(())
}

// --- oracle -------------------------------------------------------------------

fn oracle(mut a: OracleArgs, f: &FileConfig, exec: ExecMode) -> Result<()> {
    merge_system(&mut a.system, f);
    fill_num(&mut a.mu, &f.mu);
    fill_num(&mut a.r, &f.r);
    fill_list(&mut a.mu_list, &f.mu_list);
    fill_list(&mut a.r_list, &f.r_list);
    fill(&mut a.out, &f.out);
    exclusive(("mu", a.mu.is_some()), ("mu-list", a.mu_list.is_some()))?;
    exclusive(("r", a.r.is_some()), ("r-list", a.r_list.is_some()))?;
    let pick = |one: &Option<String>, many: &Option<String>, name: &str| match (one, many) {
        (Some(v), _) => Ok(vec![rational(v)?]),
        (_, Some(l)) => rational_list(l),
        _ => bail!("missing --{name} or --{name}-list"),
    };
    let mus = pick(&a.mu, &a.mu_list, "mu")?;
    let rs = pick(&a.r, &a.r_list, "r")?;
    let mut configs = Vec::new();
    for &r in &rs {
        for &mu in &mus {
            configs.push(system_config(&a.system, mu, r)?);
        }
    }
    let reports = par::map(exec, &configs, sandwich_check).into_iter().collect::<fran_core::Result<Vec<_>>>()?;
    let header = fran_core::lp::SandwichReport::csv_header();
    let text = csv_text(&header, reports.iter().map(|r| r.csv_row().to_vec()))?;
    emit(a.out.as_deref(), &text)?;
    let bad = reports.iter().filter(|r| !r.ok).count();
    if bad > 0 {
        return Err(
            Failure::Gap(format!("{bad} of {} points violate f_min <= lp_opt <= ach_raw", reports.len())).into()
        );
    }
    Ok(())
}

// --- gap ----------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct GapOutput {
    ok: bool,
    serial_ok: bool,
    pipelined_ok: bool,
    grid: GapGrid,
    #[serde(flatten)]
    summary: GapSummary,
}

fn gap(mut a: GapArgs, f: &FileConfig, exec: ExecMode) -> Result<()> {
    fill_list(&mut a.kt_list, &f.kt_list);
    fill_list(&mut a.kr_list, &f.kr_list);
    fill_list(&mut a.nt_list, &f.nt_list);
    fill_list(&mut a.r_list, &f.r_list);
    fill(&mut a.mu_steps, &f.mu_steps);
    fill(&mut a.out, &f.out);
    let mut grid = GapGrid::default();
    if let Some(l) = &a.kt_list {
        grid.k_t = parse_list(l)?;
    }
    if let Some(l) = &a.kr_list {
        grid.k_r = parse_list(l)?;
    }
    if let Some(l) = &a.nt_list {
        grid.n_t = parse_list(l)?;
    }
    if let Some(l) = &a.r_list {
        grid.r = rational_list(l)?;
    }
    if let Some(n) = a.mu_steps {
        if n == 0 {
            bail!("--mu-steps must be positive");
        }
        grid.mu_kt_steps = n;
    }
    let summary = gap_scan(&grid, exec)?;
    let out = GapOutput {
        ok: summary.ok(),
        serial_ok: summary.serial_ok(),
        pipelined_ok: summary.pipelined_ok(),
        grid,
        summary,
    };
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))?;
    if !out.ok {
        return Err(Failure::Gap(format!(
            "max serial gap {:.6}, max pipelined gap {:.6}, {} relation failures, max exact error {:.3e}",
            out.summary.max_serial_gap,
            out.summary.max_pipelined_gap,
            out.summary.relation_failures.len(),
            out.summary.max_exact_error
        ))
        .into());
    }
    eprintln!(
        "ok: {} points, max serial gap {:.6}, max pipelined gap {:.6}",
        out.summary.points, out.summary.max_serial_gap, out.summary.max_pipelined_gap
    );
    Ok(())
}
