//! Monte Carlo driver: realizations, aggregation, sweeps, bound checks and
//! CSV output.
//!
//! Seeding: realization `i` draws its topology from ChaCha8 stream `2i` and
//! its scheduling, channels and fading from stream `2i + 1`, both keyed by the
//! master seed. The second stream restarts for every operating point, so all
//! points of a plan see the same topologies (common random numbers).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::analytic::AnalyticContext;
use crate::config::{
    derive, enumerate_operating_points, ClusteringMode, ConfigDocument, DerivedParams, GrantMetric,
    OperatingPoint, SystemParams, UserModel,
};
use crate::error::{Error, Result};
use crate::network::{
    cluster_members, sample_topology, schedule_users, serving_distance_p99, ClusterAssignment,
    Schedule, Topology,
};
use crate::phy::{
    draw_channels, gram_eigenvalues, sinr_and_rate, zf_beamformers, BsBeams, ChannelTable,
    SinrSample, Snapshot,
};
use crate::specfun::sample_gamma;
use crate::stats::{ratio_estimate, wilson_half_width, EmpiricalDistribution};

/// Minimum distance between the measurement region and the window edge.
pub const GUARD_FLOOR_M: f64 = 2500.0;
pub const DEFAULT_MEASUREMENT_HALF_WIDTH_M: f64 = 1500.0;
/// Radius of the BS disc sampled around each probe in analytic-model runs.
pub const DEFAULT_ANALYTIC_RADIUS_M: f64 = 15_000.0;
/// Independent probe users per realization in analytic-model runs.
pub const ANALYTIC_PROBES: usize = 16;
/// Largest tolerated fraction of skipped realizations.
pub const MAX_SKIPPED_FRACTION: f64 = 0.01;

/// What a realization simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fidelity {
    /// The complete system: ZF beams, grants, denials and residual interference.
    Full,
    /// The idealized model behind the analytic bound: every BS within R_c of a
    /// user nulls it, every other BS interferes with Γ(K, 1) power, and the
    /// signal has Γ(ζ, 1) power. Probe users are placed uniformly.
    AnalyticModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub realizations: usize,
    pub master_seed: u64,
    pub window_half_width_m: f64,
    pub measurement_half_width_m: f64,
    pub clustering_mode: ClusteringMode,
    pub user_model: UserModel,
    pub operating_points: Vec<OperatingPoint>,
    pub grant_metric: GrantMetric,
    pub fidelity: Fidelity,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

/// Required distance from measured BSs to the window edge for one point.
pub fn guard_band_m(
    params: &SystemParams,
    op: &OperatingPoint,
    mode: ClusteringMode,
) -> Result<f64> {
    let derived = derive(params, op)?;
    let reach = if op.nulling == 0 {
        0.0
    } else {
        match mode {
            ClusteringMode::FixedRange => 3.0 * derived.cluster_radius_m,
            ClusteringMode::RangeAdaptive => {
                3.0 * op.adaptive_range_factor() * serving_distance_p99(params.bs_density)
            }
        }
    };
    Ok(reach.max(GUARD_FLOOR_M))
}

/// Window half-width that satisfies the guard rule for every point in both
/// clustering modes.
pub fn shared_window_half_width(
    params: &SystemParams,
    ops: &[OperatingPoint],
    modes: &[ClusteringMode],
    measurement_half_width_m: f64,
) -> Result<f64> {
    let mut guard = GUARD_FLOOR_M;
    for op in ops {
        for &mode in modes {
            guard = guard.max(guard_band_m(params, op, mode)?);
        }
    }
    Ok(measurement_half_width_m + guard)
}

impl SimulationPlan {
    /// Full-fidelity plan with the window sized by the guard rule.
    pub fn new(
        params: &SystemParams,
        operating_points: Vec<OperatingPoint>,
        clustering_mode: ClusteringMode,
        user_model: UserModel,
        realizations: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let window = shared_window_half_width(
            params,
            &operating_points,
            &[clustering_mode],
            DEFAULT_MEASUREMENT_HALF_WIDTH_M,
        )?;
        Ok(SimulationPlan {
            realizations,
            master_seed,
            window_half_width_m: window,
            measurement_half_width_m: DEFAULT_MEASUREMENT_HALF_WIDTH_M,
            clustering_mode,
            user_model,
            operating_points,
            grant_metric: GrantMetric::SmallScale,
            fidelity: Fidelity::Full,
            workers: 0,
        })
    }

    /// Analytic-model plan; the window doubles as the probe disc radius.
    pub fn analytic_model(
        operating_points: Vec<OperatingPoint>,
        realizations: usize,
        master_seed: u64,
    ) -> Self {
        SimulationPlan {
            realizations,
            master_seed,
            window_half_width_m: DEFAULT_ANALYTIC_RADIUS_M,
            measurement_half_width_m: 0.0,
            clustering_mode: ClusteringMode::FixedRange,
            user_model: UserModel::PppUsers,
            operating_points,
            grant_metric: GrantMetric::SmallScale,
            fidelity: Fidelity::AnalyticModel,
            workers: 0,
        }
    }

    /// Applies the simulation keys of a config document.
    pub fn apply_config(&mut self, params: &SystemParams, doc: &ConfigDocument) -> Result<()> {
        if let Some(r) = doc.realizations {
            self.realizations = r;
        }
        if let Some(m) = doc.clustering_mode {
            self.clustering_mode = m;
        }
        if let Some(u) = doc.user_model {
            self.user_model = u;
        }
        if let Some(g) = doc.grant_metric {
            self.grant_metric = g;
        }
        if let Some(m) = doc.measurement_half_width_m {
            self.measurement_half_width_m = m;
        }
        match doc.window_half_width_m {
            Some(w) => self.window_half_width_m = w,
            None if self.fidelity == Fidelity::Full => {
                self.window_half_width_m = shared_window_half_width(
                    params,
                    &self.operating_points,
                    &[self.clustering_mode],
                    self.measurement_half_width_m,
                )?;
            }
            None => {}
        }
        Ok(())
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        params.validate()?;
        if self.realizations == 0 {
            return Err(Error::validation("realizations", "must be >= 1"));
        }
        if self.operating_points.is_empty() {
            return Err(Error::validation(
                "operating_points",
                "plan has no operating points",
            ));
        }
        for op in &self.operating_points {
            op.validate()?;
        }
        if !(self.window_half_width_m > 0.0) || !self.window_half_width_m.is_finite() {
            return Err(Error::validation(
                "window_half_width_m",
                "must be a positive number",
            ));
        }
        if self.fidelity == Fidelity::Full {
            if !(self.measurement_half_width_m > 0.0) {
                return Err(Error::validation("measurement_half_width_m", "must be > 0"));
            }
            for op in &self.operating_points {
                let need =
                    self.measurement_half_width_m + guard_band_m(params, op, self.clustering_mode)?;
                if self.window_half_width_m < need * (1.0 - 1e-12) {
                    return Err(Error::validation(
                        "window_half_width_m",
                        format!(
                            "{} m is too small for {op}: the guard rule needs at least {need} m",
                            self.window_half_width_m
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Child generator for stream `stream` of the master seed.
pub fn child_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Aggregated statistics of one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateStats {
    pub operating_point: OperatingPoint,
    pub clustering_mode: ClusteringMode,
    /// Per-user rates w·log₂(1 + γ/τ).
    pub rates: EmpiricalDistribution,
    pub per_bs_sum_rate: f64,
    pub per_bs_sum_rate_ci: f64,
    /// Mean of log₂(1 + γ/τ) over measured users, without w.
    pub mean_unweighted_rate: f64,
    pub realizations: usize,
    pub skipped: usize,
}

impl RateStats {
    pub fn sample_count(&self) -> usize {
        self.rates.len()
    }

    pub fn cdf(&self, rate: f64) -> f64 {
        self.rates.cdf(rate)
    }

    pub fn percentile(&self, p: f64) -> f64 {
        self.rates.percentile(p)
    }

    pub fn p10(&self) -> f64 {
        self.rates.percentile(0.1)
    }

    pub fn p10_ci(&self) -> f64 {
        self.rates.percentile_ci_half_width(0.1)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Partial {
    rates: Vec<f64>,
    unweighted_sum: f64,
    bs_sum_rate: f64,
    bs_count: f64,
    skipped: bool,
}

/// Runs every operating point of the plan. Results follow the plan order.
pub fn run(plan: &SimulationPlan, params: &SystemParams) -> Result<Vec<RateStats>> {
    plan.validate(params)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::validation("workers", e.to_string()))?;
    let per_realization: Vec<Result<Vec<Partial>>> = pool.install(|| {
        (0..plan.realizations)
            .into_par_iter()
            .map(|i| run_realization(plan, params, i))
            .collect()
    });
    let mut table: Vec<Vec<Partial>> = Vec::with_capacity(plan.realizations);
    for r in per_realization {
        table.push(r?);
    }
    plan.operating_points
        .iter()
        .enumerate()
        .map(|(j, op)| {
            aggregate(plan, op, table.iter().map(|row| &row[j])).map_err(|e| {
                Error::AtOperatingPoint {
                    point: op.to_string(),
                    source: Box::new(e),
                }
            })
        })
        .collect()
}

fn aggregate<'a>(
    plan: &SimulationPlan,
    op: &OperatingPoint,
    partials: impl Iterator<Item = &'a Partial>,
) -> Result<RateStats> {
    let mut rates = Vec::new();
    let mut numerators = Vec::new();
    let mut denominators = Vec::new();
    let mut unweighted = 0.0;
    let mut skipped = 0;
    for p in partials {
        if p.skipped {
            skipped += 1;
            continue;
        }
        rates.extend_from_slice(&p.rates);
        numerators.push(p.bs_sum_rate);
        denominators.push(p.bs_count);
        unweighted += p.unweighted_sum;
    }
    if skipped as f64 > MAX_SKIPPED_FRACTION * plan.realizations as f64 {
        return Err(Error::TooManySkipped {
            skipped,
            total: plan.realizations,
        });
    }
    let (sum_rate, ci) = ratio_estimate(&numerators, &denominators);
    let n = rates.len();
    Ok(RateStats {
        operating_point: *op,
        clustering_mode: plan.clustering_mode,
        rates: EmpiricalDistribution::new(rates),
        per_bs_sum_rate: sum_rate,
        per_bs_sum_rate_ci: ci,
        mean_unweighted_rate: if n == 0 {
            f64::NAN
        } else {
            unweighted / n as f64
        },
        realizations: plan.realizations - skipped,
        skipped,
    })
}

fn run_realization(
    plan: &SimulationPlan,
    params: &SystemParams,
    index: usize,
) -> Result<Vec<Partial>> {
    let topo_stream = 2 * index as u64;
    let fading_stream = topo_stream + 1;
    match plan.fidelity {
        Fidelity::AnalyticModel => plan
            .operating_points
            .iter()
            .map(|op| {
                let mut rng = child_rng(plan.master_seed, fading_stream);
                analytic_model_partial(plan, params, op, &mut rng)
            })
            .collect(),
        Fidelity::Full => {
            let mut topo_rng = child_rng(plan.master_seed, topo_stream);
            let topo = sample_topology(
                params,
                plan.window_half_width_m,
                plan.measurement_half_width_m,
                plan.user_model,
                &mut topo_rng,
            )?;
            plan.operating_points
                .iter()
                .map(|op| {
                    let mut rng = child_rng(plan.master_seed, fading_stream);
                    match simulate_snapshot(plan, params, &topo, op, &mut rng) {
                        Ok(samples) => Ok(partial_from_samples(params, &samples)),
                        Err(e @ Error::RankDeficient { .. }) => {
                            warn!("realization {index} at {op} skipped: {e}");
                            Ok(Partial {
                                skipped: true,
                                ..Partial::default()
                            })
                        }
                        Err(e) => Err(e),
                    }
                })
                .collect()
        }
    }
}

/// Per measured BS, the SINR samples of its scheduled users.
type SnapshotSamples = Vec<Vec<SinrSample>>;

fn partial_from_samples(params: &SystemParams, samples: &SnapshotSamples) -> Partial {
    let tau = params.snr_gap();
    let mut partial = Partial::default();
    for bs in samples {
        let mut sum = 0.0;
        for s in bs {
            let r = s.unweighted_rate(tau);
            sum += r;
            partial.rates.push(s.rate_bps_hz);
        }
        partial.unweighted_sum += sum;
        partial.bs_sum_rate += sum;
        partial.bs_count += 1.0;
    }
    partial
}

fn schedule_and_grant<R: Rng + ?Sized>(
    plan: &SimulationPlan,
    params: &SystemParams,
    topo: &Topology,
    op: &OperatingPoint,
    derived: &DerivedParams,
    rng: &mut R,
) -> (Schedule, ChannelTable, ClusterAssignment) {
    let sched = schedule_users(topo, op.multiplexing, rng);
    let cluster = cluster_members(topo, &sched, op, derived, plan.clustering_mode);

    let mut pairs = Vec::with_capacity(sched.num_slots() * 2);
    for slot in 0..sched.num_slots() {
        pairs.push((sched.slot_user(slot), sched.slot_bs(slot)));
    }
    for (slot, members) in cluster.iter().enumerate() {
        let user = sched.slot_user(slot);
        let serving = sched.slot_bs(slot);
        pairs.extend(
            members
                .iter()
                .filter(|&&b| b != serving)
                .map(|&b| (user, b)),
        );
    }
    let mut channels = ChannelTable::default();
    draw_channels(&mut channels, topo, params, op.antennas, &pairs, rng);

    let small_only = plan.grant_metric == GrantMetric::SmallScale;
    let clusters =
        ClusterAssignment::grant(&sched, cluster, topo.num_bs(), op.nulling, |slot, b| {
            channels
                .get(sched.slot_user(slot), b)
                .map(|c| c.magnitude(small_only))
                .unwrap_or(0.0)
        });
    (sched, channels, clusters)
}

/// JSON dump of realization 0 with the grants of `op`, drawn from the same
/// streams as `run`.
pub fn topology_dump(
    plan: &SimulationPlan,
    params: &SystemParams,
    op: &OperatingPoint,
) -> Result<String> {
    let mut topo_rng = child_rng(plan.master_seed, 0);
    let topo = sample_topology(
        params,
        plan.window_half_width_m,
        plan.measurement_half_width_m,
        plan.user_model,
        &mut topo_rng,
    )?;
    let derived = derive(params, op)?;
    let mut rng = child_rng(plan.master_seed, 1);
    let (_, _, clusters) = schedule_and_grant(plan, params, &topo, op, &derived, &mut rng);
    topo.dump_json(Some(&clusters))
}

/// One full-fidelity snapshot at one operating point.
pub fn simulate_snapshot<R: Rng + ?Sized>(
    plan: &SimulationPlan,
    params: &SystemParams,
    topo: &Topology,
    op: &OperatingPoint,
    rng: &mut R,
) -> Result<SnapshotSamples> {
    let derived = derive(params, op)?;
    let (sched, channels, clusters) = schedule_and_grant(plan, params, topo, op, &derived, rng);

    let beams: Vec<BsBeams> = (0..topo.num_bs())
        .map(|b| zf_beamformers(b, op.antennas, &channels, &sched, &clusters))
        .collect::<Result<_>>()?;
    let total_power = params.max_power_w() / derived.noise_power_w;
    let beam_snr: Vec<f64> = sched
        .per_bs
        .iter()
        .map(|users| {
            if users.is_empty() {
                0.0
            } else {
                total_power / users.len() as f64
            }
        })
        .collect();
    let eigenvalues: Vec<Vec<f64>> = beams.iter().map(|b| gram_eigenvalues(&b.beams)).collect();
    let snap = Snapshot {
        topo,
        sched: &sched,
        clusters: &clusters,
        channels: &channels,
        beams: &beams,
        beam_snr: &beam_snr,
        eigenvalues: &eigenvalues,
    };
    let tau = params.snr_gap();
    let samples = topo
        .measured_bs()
        .into_iter()
        .map(|b| {
            sched
                .slots_of(b)
                .map(|slot| sinr_and_rate(&snap, params, slot, tau, rng))
                .collect()
        })
        .collect();
    debug!(
        "snapshot at {op}: {} BSs, {} channels",
        topo.num_bs(),
        channels.len()
    );
    Ok(samples)
}

fn analytic_model_partial<R: Rng + ?Sized>(
    plan: &SimulationPlan,
    params: &SystemParams,
    op: &OperatingPoint,
    rng: &mut R,
) -> Result<Partial> {
    let derived = derive(params, op)?;
    let rho = derived.per_user_snr;
    let rc = derived.cluster_radius_m;
    let radius = plan.window_half_width_m;
    let lambda = params.bs_density;
    let area_count = Poisson::new(lambda * std::f64::consts::PI * radius * radius)
        .map_err(|e| Error::validation("bs_density", e.to_string()))?;
    let k = op.multiplexing as u32;
    let zeta = op.diversity as u32;
    let tau = derived.snr_gap;
    let mut partial = Partial::default();
    let mut distances = Vec::new();
    for _ in 0..ANALYTIC_PROBES {
        // BS distances from a probe at the disc center.
        let n = area_count.sample(rng) as usize;
        distances.clear();
        distances.extend((0..n).map(|_| radius * rng.random::<f64>().sqrt()));
        let Some((serving_idx, &r0)) = distances
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
        else {
            continue;
        };
        let mut interference = 0.0;
        for (i, &d) in distances.iter().enumerate() {
            if i != serving_idx && d >= rc {
                interference += rho * params.pathloss(d) * sample_gamma(k, rng);
            }
        }
        if r0 > rc {
            // The model's interferer field ignores the empty disc of radius r0.
            let fill = lambda * std::f64::consts::PI * (r0 * r0 - rc * rc);
            let extra = Poisson::new(fill)
                .map(|p| p.sample(rng) as usize)
                .unwrap_or(0);
            for _ in 0..extra {
                let d = (rc * rc + rng.random::<f64>() * (r0 * r0 - rc * rc)).sqrt();
                interference += rho * params.pathloss(d) * sample_gamma(k, rng);
            }
        }
        let signal = rho * params.pathloss(r0) * sample_gamma(zeta, rng);
        let s = SinrSample::new(signal, 0.0, interference, derived.schedule_fraction, tau);
        let unweighted = s.unweighted_rate(tau);
        partial.rates.push(s.rate_bps_hz);
        partial.unweighted_sum += unweighted;
        partial.bs_sum_rate += op.multiplexing as f64 * unweighted;
        partial.bs_count += 1.0;
    }
    Ok(partial)
}

/// Operating points of M antennas, optionally restricted to a K list.
pub fn sweep_points(antennas: usize, k_list: Option<&[usize]>) -> Result<Vec<OperatingPoint>> {
    if antennas == 0 {
        return Err(Error::validation("antennas", "must be >= 1"));
    }
    let points: Vec<OperatingPoint> = enumerate_operating_points(antennas)
        .into_iter()
        .filter(|op| k_list.is_none_or(|ks| ks.contains(&op.multiplexing)))
        .collect();
    if points.is_empty() {
        return Err(Error::validation(
            "K-list",
            format!("no K in the list is valid for M = {antennas}"),
        ));
    }
    Ok(points)
}

/// Runs `template` over every (filtered) operating point of M antennas.
pub fn sweep(
    params: &SystemParams,
    template: &SimulationPlan,
    antennas: usize,
    k_list: Option<&[usize]>,
) -> Result<Vec<RateStats>> {
    let mut plan = template.clone();
    plan.operating_points = sweep_points(antennas, k_list)?;
    run(&plan, params)
}

/// Index of the largest per-BS sum rate; ties go to the earlier entry.
pub fn best_sum_rate(stats: &[RateStats]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in stats.iter().enumerate() {
        if best.is_none_or(|b| s.per_bs_sum_rate > stats[b].per_bs_sum_rate) {
            best = Some(i);
        }
    }
    best
}

/// Index of the largest 10th-percentile rate; ties go to the earlier entry.
pub fn best_p10(stats: &[RateStats]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in stats.iter().enumerate() {
        if best.is_none_or(|b| s.p10() > stats[b].p10()) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub kappa: f64,
    pub bound: f64,
    pub empirical: f64,
    /// Half-width of the 95% interval of the empirical CCDF.
    pub ci: f64,
}

impl BoundRow {
    pub fn slack(&self) -> f64 {
        self.bound - self.empirical
    }

    pub fn violated(&self) -> bool {
        self.bound < self.empirical - 2.0 * self.ci
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub operating_point: OperatingPoint,
    pub samples: usize,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated()).count()
    }

    /// True when, everywhere, the bound exceeds the empirical CCDF by at most
    /// one CI and no row is violated.
    pub fn tight_within_ci(&self) -> bool {
        self.rows.iter().all(|r| r.slack() <= r.ci && !r.violated())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kappa_bps_hz,bound,empirical,ci,violated\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                format_sig9(r.kappa),
                format_sig9(r.bound),
                format_sig9(r.empirical),
                format_sig9(r.ci),
                r.violated()
            );
        }
        out
    }
}

/// Evenly spaced κ grid from 0 to the 99th-percentile simulated rate.
pub fn kappa_grid(stats: &RateStats, points: usize) -> Vec<f64> {
    let top = stats.percentile(0.99);
    if points < 2 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| top * i as f64 / (points - 1) as f64)
        .collect()
}

/// Compares P(rate ≥ κ) of a run against the analytic upper bound.
pub fn compare_to_analytic(
    stats: &RateStats,
    ctx: &AnalyticContext,
    kappas: &[f64],
) -> Result<BoundReport> {
    let n = stats.sample_count();
    let rows = kappas
        .iter()
        .map(|&kappa| {
            let empirical = stats.rates.ccdf_inclusive(kappa);
            Ok(BoundRow {
                kappa,
                bound: ctx.rate_ccdf_upper(kappa)?,
                empirical,
                ci: wilson_half_width(empirical, n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundReport {
        operating_point: ctx.op,
        samples: n,
        rows,
    })
}

/// Decimal with 9 significant digits, C `%.9g` style.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent present");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if !(-4..9).contains(&exponent) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exponent.abs())
    } else {
        let decimals = (8 - exponent) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const RESULTS_HEADER: &str =
    "K,zeta,O,mode,sum_rate_bps_hz,sum_rate_ci,p10_bps_hz,p10_ci,samples";
pub const CDF_HEADER: &str = "rate_bps_hz,cdf";

pub fn results_csv(stats: &[RateStats]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for s in stats {
        let (k, z, o) = s.operating_point.triple();
        let _ = writeln!(
            out,
            "{k},{z},{o},{},{},{},{},{},{}",
            s.clustering_mode.label(),
            format_sig9(s.per_bs_sum_rate),
            format_sig9(s.per_bs_sum_rate_ci),
            format_sig9(s.p10()),
            format_sig9(s.p10_ci()),
            s.sample_count()
        );
    }
    out
}

/// Empirical CDF at every distinct rate.
pub fn cdf_csv(stats: &RateStats) -> String {
    let mut out = String::from(CDF_HEADER);
    out.push('\n');
    for (x, f) in stats.rates.steps() {
        let _ = writeln!(out, "{},{}", format_sig9(x), format_sig9(f));
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))
}
