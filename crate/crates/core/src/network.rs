//! Network geometry: PPP base stations on a square window, users, nearest-BS
//! association, round-robin scheduling and nulling-cluster bookkeeping.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::config::{ClusteringMode, DerivedParams, OperatingPoint, SystemParams, UserModel};
use crate::error::{Error, Result};

pub type Point = [f64; 2];

const EMPTY_RETRIES: usize = 100;

fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

pub fn distance(a: Point, b: Point) -> f64 {
    dist2(a, b).sqrt()
}

/// Uniform bucket grid over the window for radius and nearest-point queries.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    origin: f64,
    cell: f64,
    side: usize,
    buckets: Vec<Vec<u32>>,
}

impl SpatialIndex {
    pub fn new(points: &[Point], half_width: f64, cell: f64) -> Self {
        let side = ((2.0 * half_width / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); side * side];
        let mut index = SpatialIndex {
            origin: -half_width,
            cell,
            side,
            buckets: Vec::new(),
        };
        for (i, &p) in points.iter().enumerate() {
            let (cx, cy) = index.cell_of(p);
            buckets[cy * side + cx].push(i as u32);
        }
        index.buckets = buckets;
        index
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let clamp =
            |v: f64| (((v - self.origin) / self.cell).floor().max(0.0) as usize).min(self.side - 1);
        (clamp(p[0]), clamp(p[1]))
    }

    /// Indices of all points within `radius` of `p`, ascending.
    pub fn within(&self, points: &[Point], p: Point, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let lo = self.cell_of([p[0] - radius, p[1] - radius]);
        let hi = self.cell_of([p[0] + radius, p[1] + radius]);
        let mut out = Vec::new();
        for cy in lo.1..=hi.1 {
            for cx in lo.0..=hi.0 {
                for &i in &self.buckets[cy * self.side + cx] {
                    if dist2(points[i as usize], p) <= r2 {
                        out.push(i as usize);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest point to `p`; equal distances resolve to the lower index.
    pub fn nearest(&self, points: &[Point], p: Point) -> Option<usize> {
        if points.is_empty() {
            return None;
        }
        let (cx, cy) = self.cell_of(p);
        let mut best: Option<(f64, usize)> = None;
        for ring in 0..=self.side {
            let r = ring as isize;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let x = cx as isize + dx;
                    let y = cy as isize + dy;
                    if x < 0 || y < 0 || x >= self.side as isize || y >= self.side as isize {
                        continue;
                    }
                    for &i in &self.buckets[y as usize * self.side + x as usize] {
                        let d = dist2(points[i as usize], p);
                        let cand = (d, i as usize);
                        if best.is_none_or(|b| cand < b) {
                            best = Some(cand);
                        }
                    }
                }
            }
            if let Some((d, _)) = best {
                // Anything outside ring `ring` is at least ring·cell away.
                let reach = ring as f64 * self.cell;
                if d.sqrt() < reach {
                    break;
                }
            }
        }
        best.map(|b| b.1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Topology {
    pub window_half_width_m: f64,
    pub measurement_half_width_m: f64,
    pub bs_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    /// Serving BS of every user.
    pub association: Vec<usize>,
    /// Users of every BS, ascending.
    pub cell_users: Vec<Vec<usize>>,
    #[serde(skip)]
    index: SpatialIndex,
}

impl Topology {
    /// Builds a topology from explicit positions with nearest-BS association.
    pub fn from_positions(
        window_half_width_m: f64,
        measurement_half_width_m: f64,
        bs_positions: Vec<Point>,
        user_positions: Vec<Point>,
    ) -> Result<Self> {
        check_window(window_half_width_m, measurement_half_width_m)?;
        if bs_positions.is_empty() {
            return Err(Error::EmptyTopology { attempts: 1 });
        }
        let index = SpatialIndex::new(
            &bs_positions,
            window_half_width_m,
            index_cell(&bs_positions, window_half_width_m),
        );
        let association: Vec<usize> = user_positions
            .iter()
            .map(|&u| index.nearest(&bs_positions, u).expect("non-empty"))
            .collect();
        let mut cell_users = vec![Vec::new(); bs_positions.len()];
        for (u, &b) in association.iter().enumerate() {
            cell_users[b].push(u);
        }
        Ok(Topology {
            window_half_width_m,
            measurement_half_width_m,
            bs_positions,
            user_positions,
            association,
            cell_users,
            index,
        })
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn distance(&self, user: usize, bs: usize) -> f64 {
        distance(self.user_positions[user], self.bs_positions[bs])
    }

    pub fn serving_distance(&self, user: usize) -> f64 {
        self.distance(user, self.association[user])
    }

    /// BSs within `radius` of an arbitrary point, ascending.
    pub fn bs_within(&self, p: Point, radius: f64) -> Vec<usize> {
        self.index.within(&self.bs_positions, p, radius)
    }

    pub fn nearest_bs(&self, p: Point) -> usize {
        self.index
            .nearest(&self.bs_positions, p)
            .expect("topology has base stations")
    }

    pub fn in_measurement_region(&self, p: Point) -> bool {
        p[0].abs() <= self.measurement_half_width_m && p[1].abs() <= self.measurement_half_width_m
    }

    /// BSs whose users contribute statistics.
    pub fn measured_bs(&self) -> Vec<usize> {
        (0..self.num_bs())
            .filter(|&b| self.in_measurement_region(self.bs_positions[b]))
            .collect()
    }

    /// Voronoi cell of `bs` clipped to the window, as a convex polygon.
    pub fn voronoi_cell(&self, bs: usize) -> Vec<Point> {
        let h = self.window_half_width_m;
        let p = self.bs_positions[bs];
        let mut polygon = vec![[-h, -h], [h, -h], [h, h], [-h, h]];
        let mut radius = 2.0 * self.index.cell;
        loop {
            for q in self.bs_within(p, radius) {
                if q != bs {
                    polygon = clip_half_plane(&polygon, p, self.bs_positions[q]);
                }
            }
            let reach = polygon.iter().map(|&v| distance(v, p)).fold(0.0, f64::max);
            // Every BS that can cut the cell lies within twice its circumradius.
            if 2.0 * reach <= radius || radius >= 4.0 * h {
                return polygon;
            }
            radius = 2.0 * reach;
        }
    }

    /// JSON debug dump of positions, association and optional grant lists.
    pub fn dump_json(&self, grants: Option<&ClusterAssignment>) -> Result<String> {
        #[derive(Serialize)]
        struct Dump<'a> {
            window_half_width_m: f64,
            measurement_half_width_m: f64,
            bs_positions: &'a [Point],
            user_positions: &'a [Point],
            association: &'a [usize],
            grants: Option<Vec<Vec<usize>>>,
        }
        let dump = Dump {
            window_half_width_m: self.window_half_width_m,
            measurement_half_width_m: self.measurement_half_width_m,
            bs_positions: &self.bs_positions,
            user_positions: &self.user_positions,
            association: &self.association,
            grants: grants.map(|g| g.granted_users()),
        };
        Ok(serde_json::to_string_pretty(&dump)?)
    }
}

fn check_window(window: f64, measurement: f64) -> Result<()> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::validation(
            "window_half_width_m",
            format!("must be > 0, got {window}"),
        ));
    }
    if !(measurement > 0.0) || measurement >= window {
        return Err(Error::validation(
            "measurement_half_width_m",
            format!("must be in (0, {window}), got {measurement}"),
        ));
    }
    Ok(())
}

fn index_cell(points: &[Point], half_width: f64) -> f64 {
    // About two points per bucket.
    let area = 4.0 * half_width * half_width;
    (2.0 * area / points.len().max(1) as f64).sqrt()
}

// Keeps the part of `polygon` closer to `p` than to `q`.
fn clip_half_plane(polygon: &[Point], p: Point, q: Point) -> Vec<Point> {
    let n = [q[0] - p[0], q[1] - p[1]];
    let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let side = |v: Point| (v[0] - m[0]) * n[0] + (v[1] - m[1]) * n[1];
    let mut out = Vec::with_capacity(polygon.len() + 1);
    for i in 0..polygon.len() {
        let a = polygon[i];
        let b = polygon[(i + 1) % polygon.len()];
        let sa = side(a);
        let sb = side(b);
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn polygon_area(polygon: &[Point]) -> f64 {
    let mut twice = 0.0;
    for i in 0..polygon.len() {
        let a = polygon[i];
        let b = polygon[(i + 1) % polygon.len()];
        twice += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * twice.abs()
}

/// Uniform point in a convex polygon via fan triangulation.
pub fn sample_in_polygon<R: Rng + ?Sized>(polygon: &[Point], rng: &mut R) -> Point {
    let o = polygon[0];
    let mut cumulative = Vec::with_capacity(polygon.len());
    let mut total = 0.0;
    for i in 1..polygon.len().saturating_sub(1) {
        total += polygon_area(&[o, polygon[i], polygon[i + 1]]);
        cumulative.push(total);
    }
    if cumulative.is_empty() || total <= 0.0 {
        return o;
    }
    let pick = rng.random::<f64>() * total;
    let t = cumulative
        .partition_point(|&c| c < pick)
        .min(cumulative.len() - 1);
    let (a, b) = (polygon[t + 1], polygon[t + 2]);
    let r1 = rng.random::<f64>().sqrt();
    let r2 = rng.random::<f64>();
    [
        o[0] * (1.0 - r1) + a[0] * r1 * (1.0 - r2) + b[0] * r1 * r2,
        o[1] * (1.0 - r1) + a[1] * r1 * (1.0 - r2) + b[1] * r1 * r2,
    ]
}

/// Homogeneous PPP on the square [−h, h]².
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, half_width: f64, rng: &mut R) -> Vec<Point> {
    let mean = density * 4.0 * half_width * half_width;
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map(|d| d.sample(rng) as usize)
            .unwrap_or(0)
    } else {
        0
    };
    (0..count)
        .map(|_| {
            [
                (2.0 * rng.random::<f64>() - 1.0) * half_width,
                (2.0 * rng.random::<f64>() - 1.0) * half_width,
            ]
        })
        .collect()
}

/// Samples BSs and users on the window.
///
/// With [`UserModel::FixedKb`] every Voronoi cell receives exactly K_b users
/// placed uniformly in the (window-clipped) cell; with [`UserModel::PppUsers`]
/// users form an independent PPP of density K_b·λ.
pub fn sample_topology<R: Rng + ?Sized>(
    params: &SystemParams,
    window_half_width_m: f64,
    measurement_half_width_m: f64,
    user_model: UserModel,
    rng: &mut R,
) -> Result<Topology> {
    params.validate()?;
    check_window(window_half_width_m, measurement_half_width_m)?;
    let mut bs = Vec::new();
    for attempt in 1..=EMPTY_RETRIES {
        bs = sample_ppp(params.bs_density, window_half_width_m, rng);
        if !bs.is_empty() {
            break;
        }
        if attempt == EMPTY_RETRIES {
            return Err(Error::EmptyTopology { attempts: attempt });
        }
    }
    match user_model {
        UserModel::PppUsers => {
            let density = params.bs_density * params.users_per_cell as f64;
            let users = sample_ppp(density, window_half_width_m, rng);
            Topology::from_positions(window_half_width_m, measurement_half_width_m, bs, users)
        }
        UserModel::FixedKb => {
            let mut topo = Topology::from_positions(
                window_half_width_m,
                measurement_half_width_m,
                bs,
                Vec::new(),
            )?;
            let kb = params.users_per_cell;
            for b in 0..topo.num_bs() {
                let cell = topo.voronoi_cell(b);
                for _ in 0..kb {
                    let mut p = sample_in_polygon(&cell, rng);
                    // Guard against rounding at cell edges.
                    for _ in 0..16 {
                        if topo.nearest_bs(p) == b {
                            break;
                        }
                        p = sample_in_polygon(&cell, rng);
                    }
                    let u = topo.user_positions.len();
                    topo.user_positions.push(p);
                    topo.association.push(b);
                    topo.cell_users[b].push(u);
                }
            }
            Ok(topo)
        }
    }
}

/// Scheduled users per BS. Slots number scheduled users globally in BS order.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Scheduled user ids per BS, ascending.
    pub per_bs: Vec<Vec<usize>>,
    /// Scheduling fraction w per BS: |S_b| / (users of b).
    pub fraction: Vec<f64>,
    slot_start: Vec<usize>,
    slot_user: Vec<usize>,
    slot_bs: Vec<usize>,
}

impl Schedule {
    pub fn from_lists(per_bs: Vec<Vec<usize>>, cell_sizes: &[usize]) -> Self {
        let mut slot_start = Vec::with_capacity(per_bs.len() + 1);
        let mut slot_user = Vec::new();
        let mut slot_bs = Vec::new();
        let mut fraction = Vec::with_capacity(per_bs.len());
        for (b, users) in per_bs.iter().enumerate() {
            slot_start.push(slot_user.len());
            slot_user.extend_from_slice(users);
            slot_bs.extend(std::iter::repeat_n(b, users.len()));
            fraction.push(if cell_sizes[b] == 0 {
                0.0
            } else {
                users.len() as f64 / cell_sizes[b] as f64
            });
        }
        slot_start.push(slot_user.len());
        Schedule {
            per_bs,
            fraction,
            slot_start,
            slot_user,
            slot_bs,
        }
    }

    pub fn num_slots(&self) -> usize {
        self.slot_user.len()
    }

    pub fn slot_user(&self, slot: usize) -> usize {
        self.slot_user[slot]
    }

    pub fn slot_bs(&self, slot: usize) -> usize {
        self.slot_bs[slot]
    }

    pub fn slots_of(&self, bs: usize) -> std::ops::Range<usize> {
        self.slot_start[bs]..self.slot_start[bs + 1]
    }
}

/// Round-robin snapshot: every BS picks min(K, n_b) of its users uniformly
/// without replacement.
pub fn schedule_users<R: Rng + ?Sized>(
    topo: &Topology,
    multiplexing: usize,
    rng: &mut R,
) -> Schedule {
    let per_bs: Vec<Vec<usize>> = topo
        .cell_users
        .iter()
        .map(|users| {
            let take = multiplexing.min(users.len());
            let mut picked: Vec<usize> = sample(rng, users.len(), take)
                .into_iter()
                .map(|i| users[i])
                .collect();
            picked.sort_unstable();
            picked
        })
        .collect();
    let sizes: Vec<usize> = topo.cell_users.iter().map(Vec::len).collect();
    Schedule::from_lists(per_bs, &sizes)
}

/// Nulling radius of one scheduled user.
pub fn request_radius(
    mode: ClusteringMode,
    op: &OperatingPoint,
    derived: &DerivedParams,
    serving_distance: f64,
) -> f64 {
    match mode {
        ClusteringMode::FixedRange => derived.cluster_radius_m,
        ClusteringMode::RangeAdaptive => op.adaptive_range_factor() * serving_distance,
    }
}

/// BSs within each scheduled user's nulling radius (serving BS included when
/// in range), ascending. Empty for every user when O = 0.
pub fn cluster_members(
    topo: &Topology,
    sched: &Schedule,
    op: &OperatingPoint,
    derived: &DerivedParams,
    mode: ClusteringMode,
) -> Vec<Vec<usize>> {
    (0..sched.num_slots())
        .map(|slot| {
            if op.nulling == 0 {
                return Vec::new();
            }
            let user = sched.slot_user(slot);
            let radius = request_radius(mode, op, derived, topo.serving_distance(user));
            topo.bs_within(topo.user_positions[user], radius)
        })
        .collect()
}

/// Nulling requests, grants and denials for one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Φ_S per slot: BSs within the nulling radius.
    pub cluster: Vec<Vec<usize>>,
    /// O_b per BS: granted slots, ascending.
    pub granted: Vec<Vec<usize>>,
    /// Φ_S,Intf per slot: in-range non-serving BSs that denied the request.
    pub denied: Vec<Vec<usize>>,
    /// Unused nulling dimensions per BS.
    pub spare: Vec<usize>,
    slot_users: Vec<usize>,
}

impl ClusterAssignment {
    /// Applies the grant rule: each BS keeps the `nulling` strongest requests,
    /// ties going to the lower user index.
    pub fn grant<F: FnMut(usize, usize) -> f64>(
        sched: &Schedule,
        cluster: Vec<Vec<usize>>,
        num_bs: usize,
        nulling: usize,
        mut magnitude: F,
    ) -> Self {
        let mut inbox: Vec<Vec<(f64, usize, usize)>> = vec![Vec::new(); num_bs];
        for (slot, members) in cluster.iter().enumerate() {
            let serving = sched.slot_bs(slot);
            for &b in members {
                if b != serving {
                    inbox[b].push((magnitude(slot, b), sched.slot_user(slot), slot));
                }
            }
        }
        let mut granted = vec![Vec::new(); num_bs];
        let mut spare = vec![0; num_bs];
        let mut is_granted = std::collections::HashSet::new();
        for (b, requests) in inbox.iter_mut().enumerate() {
            requests.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            let keep = nulling.min(requests.len());
            let mut slots: Vec<usize> = requests[..keep].iter().map(|r| r.2).collect();
            slots.sort_unstable();
            for &s in &slots {
                is_granted.insert((s, b));
            }
            granted[b] = slots;
            spare[b] = nulling - keep;
        }
        let denied = cluster
            .iter()
            .enumerate()
            .map(|(slot, members)| {
                let serving = sched.slot_bs(slot);
                members
                    .iter()
                    .copied()
                    .filter(|&b| b != serving && !is_granted.contains(&(slot, b)))
                    .collect()
            })
            .collect();
        ClusterAssignment {
            cluster,
            granted,
            denied,
            spare,
            slot_users: (0..sched.num_slots()).map(|s| sched.slot_user(s)).collect(),
        }
    }

    /// Non-serving BSs a slot asked for nulling.
    pub fn requests<'a>(
        &'a self,
        sched: &'a Schedule,
        slot: usize,
    ) -> impl Iterator<Item = usize> + 'a {
        let serving = sched.slot_bs(slot);
        self.cluster[slot]
            .iter()
            .copied()
            .filter(move |&b| b != serving)
    }

    /// Granted user ids per BS.
    pub fn granted_users(&self) -> Vec<Vec<usize>> {
        self.granted
            .iter()
            .map(|slots| slots.iter().map(|&s| self.slot_users[s]).collect())
            .collect()
    }
}

/// Fixed-range clustering: requests to every BS within R_c.
pub fn assign_clusters_fixed<F: FnMut(usize, usize) -> f64>(
    topo: &Topology,
    sched: &Schedule,
    op: &OperatingPoint,
    derived: &DerivedParams,
    magnitude: F,
) -> ClusterAssignment {
    let cluster = cluster_members(topo, sched, op, derived, ClusteringMode::FixedRange);
    ClusterAssignment::grant(sched, cluster, topo.num_bs(), op.nulling, magnitude)
}

/// Range-adaptive clustering: requests to every BS within ν·r.
pub fn assign_clusters_adaptive<F: FnMut(usize, usize) -> f64>(
    topo: &Topology,
    sched: &Schedule,
    op: &OperatingPoint,
    derived: &DerivedParams,
    magnitude: F,
) -> ClusterAssignment {
    let cluster = cluster_members(topo, sched, op, derived, ClusteringMode::RangeAdaptive);
    ClusterAssignment::grant(sched, cluster, topo.num_bs(), op.nulling, magnitude)
}

/// 99th percentile of the nearest-BS distance, √(ln 100/(λπ)).
pub fn serving_distance_p99(bs_density: f64) -> f64 {
    (100f64.ln() / (bs_density * PI)).sqrt()
}
