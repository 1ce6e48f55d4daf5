//! Rayleigh channels, zero-forcing beams with nulling, and SINR/rate samples.
//!
//! All powers are normalized by the noise power and scaled so a BS serving
//! |S_b| users spends P_T/|S_b| per beam; with |S_b| = K this is the per-user
//! SNR ρ = P_T/(Kσ²).

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::config::SystemParams;
use crate::error::{Error, Result};
use crate::network::{ClusterAssignment, Schedule, Topology};

/// Relative threshold on the pivoted-QR diagonal below which the stacked
/// channel matrix is declared rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    /// h: i.i.d. CN(0, 1) entries.
    pub small_scale: DVector<Complex64>,
    /// β = (1 + r/d₀)^−α.
    pub pathloss: f64,
}

impl ChannelVector {
    pub fn draw<R: Rng + ?Sized>(antennas: usize, pathloss: f64, rng: &mut R) -> Self {
        ChannelVector {
            small_scale: draw_cn(antennas, rng),
            pathloss,
        }
    }

    /// g = √β·h.
    pub fn full(&self) -> DVector<Complex64> {
        &self.small_scale * Complex64::new(self.pathloss.sqrt(), 0.0)
    }

    /// ‖g‖ (or ‖h‖ when `small_scale_only`), the grant ranking metric.
    pub fn magnitude(&self, small_scale_only: bool) -> f64 {
        let h = self.small_scale.norm();
        if small_scale_only {
            h
        } else {
            h * self.pathloss.sqrt()
        }
    }

    /// ĝ = g/‖g‖ = h/‖h‖.
    pub fn direction(&self) -> DVector<Complex64> {
        self.small_scale.normalize()
    }
}

/// Vector of i.i.d. circularly-symmetric unit-variance complex Gaussians.
pub fn draw_cn<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    })
}

/// Channels keyed by (user, BS).
#[derive(Debug, Clone, Default)]
pub struct ChannelTable {
    entries: HashMap<(usize, usize), ChannelVector>,
}

impl ChannelTable {
    pub fn get(&self, user: usize, bs: usize) -> Option<&ChannelVector> {
        self.entries.get(&(user, bs))
    }

    pub fn insert(&mut self, user: usize, bs: usize, channel: ChannelVector) {
        self.entries.insert((user, bs), channel);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Draws a channel for every listed (user, BS) pair not already present,
/// in list order.
pub fn draw_channels<R: Rng + ?Sized>(
    table: &mut ChannelTable,
    topo: &Topology,
    params: &SystemParams,
    antennas: usize,
    pairs: &[(usize, usize)],
    rng: &mut R,
) {
    for &(user, bs) in pairs {
        if table.get(user, bs).is_none() {
            let beta = params.pathloss(topo.distance(user, bs));
            table.insert(user, bs, ChannelVector::draw(antennas, beta, rng));
        }
    }
}

/// Unit-norm ZF beams of one BS, one column per scheduled user.
#[derive(Debug, Clone, PartialEq)]
pub struct BsBeams {
    pub beams: DMatrix<Complex64>,
    /// Realized diversity M − (|S_b| − 1) − |O_b|.
    pub diversity: usize,
}

/// Normalized ZF beams for the columns of `directions` listed first
/// (`served` of them), nulling every other column.
///
/// The beams are the normalized columns of G(GᴴG)⁻¹, obtained from a
/// pivoted QR factorization GΠ = QR as QR⁻ᴴΠᵀ.
pub fn zf_from_directions(
    bs: usize,
    directions: &DMatrix<Complex64>,
    served: usize,
) -> Result<DMatrix<Complex64>> {
    let (m, n) = directions.shape();
    if n == 0 {
        return Ok(DMatrix::zeros(m, 0));
    }
    if n > m {
        return Err(Error::RankDeficient {
            bs,
            rank: m,
            cols: n,
        });
    }
    let qr = directions.clone().col_piv_qr();
    let r = qr.r();
    let largest = r[(0, 0)].norm();
    let rank = (0..n)
        .filter(|&i| r[(i, i)].norm() > RANK_TOLERANCE * largest)
        .count();
    if rank < n || largest == 0.0 {
        return Err(Error::RankDeficient { bs, rank, cols: n });
    }
    let identity = DMatrix::<Complex64>::identity(n, n);
    let r_inv_h = r
        .adjoint()
        .solve_lower_triangular(&identity)
        .ok_or(Error::RankDeficient { bs, rank, cols: n })?;
    let mut pseudo = qr.q() * r_inv_h;
    qr.p().inv_permute_columns(&mut pseudo);
    let mut beams = pseudo.columns(0, served).into_owned();
    for mut col in beams.column_iter_mut() {
        let norm = col.norm();
        col /= Complex64::new(norm, 0.0);
    }
    Ok(beams)
}

/// ZF beams for BS `bs`: its scheduled users first, then granted users.
pub fn zf_beamformers(
    bs: usize,
    antennas: usize,
    channels: &ChannelTable,
    sched: &Schedule,
    clusters: &ClusterAssignment,
) -> Result<BsBeams> {
    let served: Vec<usize> = sched.per_bs[bs].clone();
    let nulled: Vec<usize> = clusters.granted[bs]
        .iter()
        .map(|&s| sched.slot_user(s))
        .collect();
    let users: Vec<usize> = served.iter().chain(nulled.iter()).copied().collect();
    let mut g = DMatrix::<Complex64>::zeros(antennas, users.len());
    for (j, &u) in users.iter().enumerate() {
        let ch = channels
            .get(u, bs)
            .expect("channel drawn for every served and granted pair");
        g.set_column(j, &ch.direction());
    }
    let beams = zf_from_directions(bs, &g, served.len())?;
    let diversity = (antennas + 1).saturating_sub(served.len() + nulled.len());
    Ok(BsBeams { beams, diversity })
}

/// Σ_l |hᴴ w_l|² over the columns of `beams`.
pub fn beam_gain(h: &DVector<Complex64>, beams: &DMatrix<Complex64>) -> f64 {
    beams.column_iter().map(|w| h.dotc(&w).norm_sqr()).sum()
}

/// Eigenvalues of WᴴW. For h ~ CN(0, I) independent of W, Σ_l |hᴴw_l|² is
/// distributed as Σ_l μ_l·E_l with E_l ~ Exp(1).
pub fn gram_eigenvalues(beams: &DMatrix<Complex64>) -> Vec<f64> {
    let n = beams.ncols();
    match n {
        0 => Vec::new(),
        1 => vec![beams.column(0).norm_squared()],
        _ => {
            let gram = beams.adjoint() * beams;
            gram.symmetric_eigenvalues()
                .iter()
                .map(|&v| v.max(0.0))
                .collect()
        }
    }
}

/// Draws Σ_l μ_l·E_l.
pub fn sample_fresh_gain<R: Rng + ?Sized>(eigenvalues: &[f64], rng: &mut R) -> f64 {
    eigenvalues
        .iter()
        .map(|&mu| {
            let e: f64 = rng.sample(Exp1);
            mu * e
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    pub signal_power: f64,
    /// From in-range BSs that denied the nulling request.
    pub intra_cluster_interference: f64,
    /// From BSs outside the nulling range.
    pub inter_cluster_interference: f64,
    pub sinr: f64,
    /// w·log₂(1 + γ/τ).
    pub rate_bps_hz: f64,
}

impl SinrSample {
    pub fn new(signal: f64, intra: f64, inter: f64, fraction: f64, snr_gap: f64) -> Self {
        let sinr = signal / (intra + inter + 1.0);
        SinrSample {
            signal_power: signal,
            intra_cluster_interference: intra,
            inter_cluster_interference: inter,
            sinr,
            rate_bps_hz: fraction * (sinr / snr_gap).ln_1p() / std::f64::consts::LN_2,
        }
    }

    /// log₂(1 + γ/τ) without the scheduling fraction.
    pub fn unweighted_rate(&self, snr_gap: f64) -> f64 {
        (self.sinr / snr_gap).ln_1p() / std::f64::consts::LN_2
    }
}

/// Everything frozen after beam construction in one snapshot.
pub struct Snapshot<'a> {
    pub topo: &'a Topology,
    pub sched: &'a Schedule,
    pub clusters: &'a ClusterAssignment,
    pub channels: &'a ChannelTable,
    pub beams: &'a [BsBeams],
    /// Noise-normalized per-beam power P_T/(|S_b|σ²) of every BS.
    pub beam_snr: &'a [f64],
    pub eigenvalues: &'a [Vec<f64>],
}

/// SINR of scheduled slot `slot`. Interference is summed over every other BS
/// in the window in index order; pairs without a stored channel use a fresh
/// channel drawn through the Gram eigenvalues.
pub fn sinr_and_rate<R: Rng + ?Sized>(
    snap: &Snapshot<'_>,
    params: &SystemParams,
    slot: usize,
    snr_gap: f64,
    rng: &mut R,
) -> SinrSample {
    let user = snap.sched.slot_user(slot);
    let serving = snap.sched.slot_bs(slot);
    let position = snap
        .sched
        .slots_of(serving)
        .position(|s| s == slot)
        .expect("slot of its BS");
    let own = snap.channels.get(user, serving).expect("serving channel");
    let w = snap.beams[serving].beams.column(position);
    let signal = snap.beam_snr[serving] * own.pathloss * own.small_scale.dotc(&w).norm_sqr();

    let in_cluster = &snap.clusters.cluster[slot];
    let mut intra = 0.0;
    let mut inter = 0.0;
    for b in 0..snap.topo.num_bs() {
        if b == serving || snap.beams[b].beams.ncols() == 0 {
            continue;
        }
        let power = match snap.channels.get(user, b) {
            Some(ch) => {
                snap.beam_snr[b] * ch.pathloss * beam_gain(&ch.small_scale, &snap.beams[b].beams)
            }
            None => {
                let beta = params.pathloss(snap.topo.distance(user, b));
                snap.beam_snr[b] * beta * sample_fresh_gain(&snap.eigenvalues[b], rng)
            }
        };
        if in_cluster.binary_search(&b).is_ok() {
            intra += power;
        } else {
            inter += power;
        }
    }
    SinrSample::new(signal, intra, inter, snap.sched.fraction[serving], snr_gap)
}
