//! Command-line front end: argument parsing, scenario presets and dispatch.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::analytic::{best_of, sum_rate_table, AnalyticContext};
use crate::config::{ClusteringMode, ConfigDocument, OperatingPoint, SystemParams, UserModel};
use crate::error::{Error, Result};
use crate::montecarlo::{
    best_sum_rate, cdf_csv, compare_to_analytic, format_sig9, kappa_grid, results_csv, run,
    shared_window_half_width, sweep_points, topology_dump, write_file, RateStats, SimulationPlan,
    DEFAULT_MEASUREMENT_HALF_WIDTH_M,
};

pub const SIMULATE_REALIZATIONS: usize = 500;
pub const SWEEP_REALIZATIONS: usize = 2000;
pub const VALIDATE_REALIZATIONS: usize = 2000;

pub const SCENARIOS: [(&str, &str); 9] = [
    ("fig2", include_str!("../scenarios/fig2.conf")),
    ("fig3", include_str!("../scenarios/fig3.conf")),
    ("fig4", include_str!("../scenarios/fig4.conf")),
    ("fig5", include_str!("../scenarios/fig5.conf")),
    ("fig6", include_str!("../scenarios/fig6.conf")),
    ("fig7", include_str!("../scenarios/fig7.conf")),
    ("fig8", include_str!("../scenarios/fig8.conf")),
    ("fig9", include_str!("../scenarios/fig9.conf")),
    ("table2", include_str!("../scenarios/table2.conf")),
];

pub const ANALYTIC_HEADER: &str = "K,zeta,O,sum_rate_bps_hz";
pub const CCDF_HEADER: &str = "kappa_bps_hz,ccdf_upper";

#[derive(Debug, Parser)]
#[command(
    name = "lsmimo",
    version,
    about = "Antenna allocation for multi-cell MIMO downlinks"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// `key = value` configuration file; defaults to the reference parameters.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    pub output: PathBuf,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_override)]
    pub overrides: Vec<(String, String)>,
    /// Number of realizations, overriding config and preset values.
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Fixed,
    Adaptive,
}

impl From<ModeArg> for ClusteringMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fixed => ClusteringMode::FixedRange,
            ModeArg::Adaptive => ClusteringMode::RangeAdaptive,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic sum rate and rate CCDF bound.
    Analyze {
        /// Search every operating point of M antennas and print the best triple.
        #[arg(long, value_name = "M")]
        argmax: Option<usize>,
        /// κ spacing of the CCDF bound table.
        #[arg(long, default_value_t = 0.05)]
        kappa_step: f64,
    },
    /// Monte Carlo run of the configured operating point.
    Simulate {
        #[arg(long)]
        mode: Option<ModeArg>,
        /// Write realization 0 as JSON.
        #[arg(long, value_name = "PATH")]
        dump_topology: Option<PathBuf>,
    },
    /// Monte Carlo run over every (K, ζ, O) split of M antennas.
    Sweep {
        #[arg(long = "M", value_name = "M")]
        antennas: Option<usize>,
        #[arg(long = "K-list", value_delimiter = ',', value_name = "a,b,c")]
        k_list: Option<Vec<usize>>,
        #[arg(long)]
        mode: Option<ModeArg>,
    },
    /// Check the analytic CCDF bound against the idealized-model simulation.
    Validate {
        #[arg(long, default_value_t = 30)]
        kappa_points: usize,
    },
    /// Run a named preset.
    Scenario {
        name: String,
        #[arg(long = "M", value_name = "M")]
        antennas: Option<usize>,
        #[arg(long = "K-list", value_delimiter = ',', value_name = "a,b,c")]
        k_list: Option<Vec<usize>>,
    },
}

fn parse_override(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(format!("expected KEY=VALUE, got `{s}`"));
    }
    Ok((k.to_string(), v.to_string()))
}

pub fn preset(name: &str) -> Result<&'static str> {
    SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::UnknownScenario {
            name: name.to_string(),
            available: SCENARIOS
                .iter()
                .map(|(n, _)| *n)
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// `K8_z6_O2`
pub fn point_tag(op: &OperatingPoint) -> String {
    let (k, z, o) = op.triple();
    format!("K{k}_z{z}_O{o}")
}

pub fn triple_string(op: &OperatingPoint) -> String {
    let (k, z, o) = op.triple();
    format!("({k},{z},{o})")
}

pub fn analytic_csv(rows: &[(OperatingPoint, f64)]) -> String {
    let mut out = format!("{ANALYTIC_HEADER}\n");
    for (op, rate) in rows {
        let (k, z, o) = op.triple();
        out.push_str(&format!("{k},{z},{o},{}\n", format_sig9(*rate)));
    }
    out
}

pub fn ccdf_bound_csv(ctx: &AnalyticContext, kappas: &[f64]) -> Result<String> {
    let curve = ctx.rate_ccdf_curve(kappas)?;
    let mut out = format!("{CCDF_HEADER}\n");
    for (k, c) in curve.thresholds_bps_hz.iter().zip(&curve.ccdf_upper) {
        out.push_str(&format!("{},{}\n", format_sig9(*k), format_sig9(*c)));
    }
    Ok(out)
}

struct Session {
    doc: ConfigDocument,
    seed: u64,
    workers: usize,
    output: PathBuf,
    realizations: Option<usize>,
}

impl Session {
    fn params(&self) -> &SystemParams {
        &self.doc.params
    }

    fn realizations(&self, default: usize) -> usize {
        self.realizations
            .or(self.doc.realizations)
            .unwrap_or(default)
    }

    fn operating_point(&self, verb: &str) -> Result<OperatingPoint> {
        self.doc.operating_point.ok_or_else(|| {
            Error::validation(
                "antennas",
                format!("`{verb}` needs an operating point: set antennas, multiplexing, diversity and nulling"),
            )
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.output.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name);
        write_file(&path, contents)?;
        info!("wrote {}", path.display());
        Ok(path)
    }

    /// One full-fidelity plan per mode, all sharing one window.
    fn plans(
        &self,
        ops: &[OperatingPoint],
        modes: &[ClusteringMode],
        default_realizations: usize,
    ) -> Result<Vec<SimulationPlan>> {
        let params = self.params();
        let measurement = self
            .doc
            .measurement_half_width_m
            .unwrap_or(DEFAULT_MEASUREMENT_HALF_WIDTH_M);
        let window = match self.doc.window_half_width_m {
            Some(w) => w,
            None => shared_window_half_width(params, ops, modes, measurement)?,
        };
        modes
            .iter()
            .map(|&mode| {
                let mut plan = SimulationPlan::new(
                    params,
                    ops.to_vec(),
                    mode,
                    self.doc.user_model.unwrap_or(UserModel::FixedKb),
                    self.realizations(default_realizations),
                    self.seed,
                )?;
                if let Some(g) = self.doc.grant_metric {
                    plan.grant_metric = g;
                }
                plan.measurement_half_width_m = measurement;
                plan.window_half_width_m = window;
                plan.workers = self.workers;
                Ok(plan)
            })
            .collect()
    }

    fn run_modes(
        &self,
        ops: &[OperatingPoint],
        modes: &[ClusteringMode],
        default_realizations: usize,
    ) -> Result<Vec<RateStats>> {
        let mut all = Vec::new();
        for plan in self.plans(ops, modes, default_realizations)? {
            info!(
                "simulating {} points, {} realizations, {} clustering, window half-width {} m",
                plan.operating_points.len(),
                plan.realizations,
                plan.clustering_mode.label(),
                plan.window_half_width_m
            );
            all.extend(run(&plan, self.params())?);
        }
        Ok(all)
    }

    fn write_cdfs(&self, prefix: &str, stats: &[RateStats]) -> Result<()> {
        for s in stats {
            let name = format!(
                "{prefix}cdf_{}_{}.csv",
                point_tag(&s.operating_point),
                s.clustering_mode.label()
            );
            self.write(&name, &cdf_csv(s))?;
        }
        Ok(())
    }

    fn mode(&self, flag: Option<ModeArg>) -> ClusteringMode {
        flag.map(Into::into)
            .or(self.doc.clustering_mode)
            .unwrap_or(ClusteringMode::FixedRange)
    }
}

fn print_results(stats: &[RateStats]) {
    for s in stats {
        println!(
            "{} {:<8} sum rate {} ± {}  p10 {} ± {}",
            triple_string(&s.operating_point),
            s.clustering_mode.label(),
            format_sig9(s.per_bs_sum_rate),
            format_sig9(s.per_bs_sum_rate_ci),
            format_sig9(s.p10()),
            format_sig9(s.p10_ci())
        );
    }
}

fn ops(list: &[(usize, usize, usize)]) -> Result<Vec<OperatingPoint>> {
    list.iter()
        .map(|&(k, z, o)| OperatingPoint::from_triple(k, z, o))
        .collect()
}

const BOTH_MODES: [ClusteringMode; 2] = [ClusteringMode::FixedRange, ClusteringMode::RangeAdaptive];

/// Executes a parsed command line. `Ok(false)` means the command ran but its
/// check failed.
pub fn execute(cli: Cli) -> Result<bool> {
    let common = cli.common;
    let overrides = common.overrides.iter().cloned().collect();
    let doc = match &cli.command {
        Command::Scenario { name, .. } => {
            if common.config.is_some() {
                return Err(Error::validation(
                    "config",
                    "scenarios use their preset; adjust it with --set",
                ));
            }
            ConfigDocument::parse(preset(name)?, &format!("scenario {name}"))?
        }
        _ => match &common.config {
            Some(path) => ConfigDocument::load(path)?,
            None => ConfigDocument::reference(),
        },
    };
    let doc = if common.overrides.is_empty() {
        doc
    } else {
        doc.with_overrides(&overrides)?
    };
    std::fs::create_dir_all(&common.output).map_err(|e| Error::io(&common.output, e))?;
    let session = Session {
        doc,
        seed: common.seed,
        workers: common.workers,
        output: common.output,
        realizations: common.realizations,
    };
    match cli.command {
        Command::Analyze { argmax, kappa_step } => analyze(&session, argmax, kappa_step),
        Command::Simulate {
            mode,
            dump_topology,
        } => simulate(&session, mode, dump_topology.as_deref()),
        Command::Sweep {
            antennas,
            k_list,
            mode,
        } => sweep(&session, antennas, k_list.as_deref(), mode),
        Command::Validate { kappa_points } => validate(&session, None, kappa_points, ""),
        Command::Scenario {
            name,
            antennas,
            k_list,
        } => scenario(&session, &name, antennas, k_list.as_deref()),
    }
}

fn analytic_table(s: &Session, antennas: usize) -> Result<Vec<(OperatingPoint, f64)>> {
    if antennas == 0 {
        return Err(Error::validation("antennas", "must be >= 1"));
    }
    sum_rate_table(s.params(), antennas)
}

fn analyze(s: &Session, argmax: Option<usize>, kappa_step: f64) -> Result<bool> {
    if let Some(m) = argmax {
        let table = analytic_table(s, m)?;
        s.write(&format!("analytic_M{m}.csv"), &analytic_csv(&table))?;
        let (best, rate) = best_of(&table);
        println!("{}", triple_string(&best));
        println!(
            "sum rate {} bits/s/Hz, loading factor {}",
            format_sig9(rate),
            format_sig9(best.loading_factor())
        );
        return Ok(true);
    }
    if !(kappa_step > 0.0 && kappa_step.is_finite()) {
        return Err(Error::validation("kappa_step", "must be a positive number"));
    }
    let op = s.operating_point("analyze")?;
    let ctx = AnalyticContext::new(*s.params(), op)?;
    let rate = ctx.ergodic_sum_rate()?;
    s.write(
        &format!("analytic_{}.csv", point_tag(&op)),
        &analytic_csv(&[(op, rate)]),
    )?;
    let mut kappas = Vec::new();
    for i in 0..2000 {
        let kappa = i as f64 * kappa_step;
        kappas.push(kappa);
        if ctx.rate_ccdf_upper(kappa)? < 1e-4 {
            break;
        }
    }
    s.write(
        &format!("ccdf_{}.csv", point_tag(&op)),
        &ccdf_bound_csv(&ctx, &kappas)?,
    )?;
    println!(
        "{} sum rate {} bits/s/Hz",
        triple_string(&op),
        format_sig9(rate)
    );
    Ok(true)
}

fn simulate(s: &Session, mode: Option<ModeArg>, dump: Option<&Path>) -> Result<bool> {
    let op = s.operating_point("simulate")?;
    let mode = s.mode(mode);
    let plans = s.plans(&[op], &[mode], SIMULATE_REALIZATIONS)?;
    if let Some(path) = dump {
        write_file(path, &topology_dump(&plans[0], s.params(), &op)?)?;
    }
    let stats = run(&plans[0], s.params())?;
    s.write("results.csv", &results_csv(&stats))?;
    s.write_cdfs("", &stats)?;
    print_results(&stats);
    Ok(true)
}

fn sweep_antennas(s: &Session, antennas: Option<usize>) -> Result<usize> {
    antennas
        .or(s.doc.operating_point.map(|op| op.antennas))
        .ok_or_else(|| Error::validation("antennas", "pass --M or set antennas in the config"))
}

fn sweep(
    s: &Session,
    antennas: Option<usize>,
    k_list: Option<&[usize]>,
    mode: Option<ModeArg>,
) -> Result<bool> {
    let m = sweep_antennas(s, antennas)?;
    let mode = s.mode(mode);
    let points = sweep_points(m, k_list)?;
    let stats = s.run_modes(&points, &[mode], SWEEP_REALIZATIONS)?;
    s.write(
        &format!("sweep_M{m}_{}.csv", mode.label()),
        &results_csv(&stats),
    )?;
    print_results(&stats);
    if let Some(i) = best_sum_rate(&stats) {
        println!("best {}", triple_string(&stats[i].operating_point));
    }
    Ok(true)
}

fn validate(
    s: &Session,
    ops_override: Option<Vec<OperatingPoint>>,
    kappa_points: usize,
    prefix: &str,
) -> Result<bool> {
    let points = match ops_override {
        Some(list) => list,
        None => match s.doc.operating_point {
            Some(op) => vec![op],
            None => ops(&FIG2_CLUSTERED)?,
        },
    };
    let mut plan = SimulationPlan::analytic_model(points, VALIDATE_REALIZATIONS, s.seed);
    plan.apply_config(s.params(), &s.doc)?;
    plan.realizations = s.realizations(VALIDATE_REALIZATIONS);
    plan.workers = s.workers;
    let stats = run(&plan, s.params())?;
    let mut ok = true;
    for st in &stats {
        let ctx = AnalyticContext::new(*s.params(), st.operating_point)?;
        let report = compare_to_analytic(st, &ctx, &kappa_grid(st, kappa_points))?;
        s.write(
            &format!("{prefix}validate_{}.csv", point_tag(&st.operating_point)),
            &report.to_csv(),
        )?;
        let violations = report.violations();
        ok &= violations == 0;
        let tight = if report.tight_within_ci() {
            ", tight within CI"
        } else {
            ""
        };
        println!(
            "{} {} samples, {violations} of {} κ points violate the bound{tight}",
            triple_string(&st.operating_point),
            report.samples,
            report.rows.len()
        );
    }
    println!("{}", if ok { "bound holds" } else { "bound violated" });
    Ok(ok)
}

/// (K, ζ, O) of the conventional cell and of clusters of mean size 4, 6, 8.
const FIG2_BASELINE: (usize, usize, usize) = (3, 4, 0);
const FIG2_CLUSTERED: [(usize, usize, usize); 3] = [(3, 4, 9), (3, 4, 15), (3, 4, 21)];
const EDGE_POINTS: [(usize, usize, usize); 2] = [(8, 6, 2), (1, 8, 7)];

fn scenario(
    s: &Session,
    name: &str,
    antennas: Option<usize>,
    k_list: Option<&[usize]>,
) -> Result<bool> {
    let sweep_default = SWEEP_REALIZATIONS;
    let prefix = format!("{name}_");
    match name {
        "fig2" => {
            let mut points = ops(&[FIG2_BASELINE])?;
            points.extend(ops(&FIG2_CLUSTERED)?);
            let mode = s.mode(None);
            let stats = s.run_modes(&points, &[mode], SIMULATE_REALIZATIONS)?;
            s.write("fig2_results.csv", &results_csv(&stats))?;
            let top = stats
                .iter()
                .map(|st| st.percentile(0.99))
                .fold(0.0, f64::max);
            let kappas: Vec<f64> = (0..60).map(|i| top * i as f64 / 59.0).collect();
            for (label, st) in ["baseline", "bbar4", "bbar6", "bbar8"].iter().zip(&stats) {
                s.write(&format!("fig2_cdf_{label}.csv"), &cdf_csv(st))?;
                let ctx = AnalyticContext::new(*s.params(), st.operating_point)?;
                s.write(
                    &format!("fig2_bound_{label}.csv"),
                    &ccdf_bound_csv(&ctx, &kappas)?,
                )?;
            }
            print_results(&stats);
            Ok(true)
        }
        "fig3" | "fig4" => {
            let ks: &[usize] = if name == "fig3" {
                &[6, 7, 8]
            } else {
                &[8, 9, 10]
            };
            let ks = k_list.unwrap_or(ks);
            let points = sweep_points(15, Some(ks))?;
            let stats = s.run_modes(&points, &[s.mode(None)], sweep_default)?;
            s.write(&format!("{prefix}results.csv"), &results_csv(&stats))?;
            let analytic: Vec<(OperatingPoint, f64)> = analytic_table(s, 15)?
                .into_iter()
                .filter(|(op, _)| ks.contains(&op.multiplexing))
                .collect();
            s.write(&format!("{prefix}analytic.csv"), &analytic_csv(&analytic))?;
            print_results(&stats);
            Ok(true)
        }
        "fig5" => {
            let points = sweep_points(32, Some(k_list.unwrap_or(&[5, 10, 20, 25])))?;
            let stats = s.run_modes(&points, &[s.mode(None)], sweep_default)?;
            s.write("fig5_results.csv", &results_csv(&stats))?;
            print_results(&stats);
            Ok(true)
        }
        "fig6" | "fig8" => {
            let ks: &[usize] = if name == "fig6" {
                &[1, 3, 5, 7, 9, 11]
            } else {
                &[6, 8, 10]
            };
            let points = sweep_points(15, Some(k_list.unwrap_or(ks)))?;
            let stats = s.run_modes(&points, &BOTH_MODES, SIMULATE_REALIZATIONS)?;
            s.write(&format!("{prefix}results.csv"), &results_csv(&stats))?;
            print_results(&stats);
            Ok(true)
        }
        "fig7" | "fig9" => {
            let stats = s.run_modes(&ops(&EDGE_POINTS)?, &BOTH_MODES, SIMULATE_REALIZATIONS)?;
            s.write(&format!("{prefix}results.csv"), &results_csv(&stats))?;
            s.write_cdfs(&prefix, &stats)?;
            print_results(&stats);
            Ok(true)
        }
        "table2" => {
            let m = antennas.unwrap_or(15);
            let table = analytic_table(s, m)?;
            let (best, rate) = best_of(&table);
            let k_star = best.multiplexing;
            let default_ks: Vec<usize> = (k_star.saturating_sub(4).max(1)..=k_star + 2).collect();
            let points = sweep_points(m, Some(k_list.unwrap_or(&default_ks)))?;
            let stats = s.run_modes(&points, &[s.mode(None)], sweep_default)?;
            s.write(&format!("table2_M{m}_results.csv"), &results_csv(&stats))?;
            s.write(&format!("table2_M{m}_analytic.csv"), &analytic_csv(&table))?;
            println!("analytic  {} {}", triple_string(&best), format_sig9(rate));
            let Some(i) = best_sum_rate(&stats) else {
                return Ok(true);
            };
            let top = &stats[i];
            println!(
                "simulated {} {}",
                triple_string(&top.operating_point),
                format_sig9(top.per_bs_sum_rate)
            );
            if let Some(at) = stats.iter().find(|st| st.operating_point == best) {
                let gap = 1.0 - at.per_bs_sum_rate / top.per_bs_sum_rate;
                println!(
                    "simulated rate at the analytic optimum {}, gap {}%",
                    format_sig9(at.per_bs_sum_rate),
                    format_sig9(100.0 * gap)
                );
            }
            Ok(true)
        }
        _ => Err(preset(name).expect_err("unknown names are rejected when loading the preset")),
    }
}

/// Process entry point; maps errors to exit codes 1 (numerical) and 2 (usage).
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LSMIMO_LOG", "warn")).init();
    let cli = Cli::parse();
    if cli.common.workers > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.workers)
            .build_global();
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
