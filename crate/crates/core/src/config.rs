//! Physical parameters, operating points and the values derived from them.
//!
//! Every other module treats these types as read-only. Decibel quantities are
//! stored as given and converted to linear scale once, in [`derive`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Network-wide physical constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// BS density λ in BS per m².
    pub bs_density: f64,
    pub bandwidth_hz: f64,
    pub max_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub snr_gap_db: f64,
    pub pathloss_exponent: f64,
    pub reference_distance_m: f64,
    /// Candidate users per cell (K_b).
    pub users_per_cell: usize,
}

impl SystemParams {
    /// The reference deployment: one BS per π·500² m², 20 MHz, 43 dBm,
    /// −174 dBm/Hz noise with a 9 dB noise figure, 3 dB SNR gap, α = 3.76,
    /// d₀ = 0.392 m and 15 candidate users per cell.
    pub fn reference() -> Self {
        SystemParams {
            bs_density: 1.0 / (PI * 500.0 * 500.0),
            bandwidth_hz: 20e6,
            max_power_dbm: 43.0,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            snr_gap_db: 3.0,
            pathloss_exponent: 3.76,
            reference_distance_m: 0.3920,
            users_per_cell: 15,
        }
    }

    pub fn with_users_per_cell(mut self, users_per_cell: usize) -> Self {
        self.users_per_cell = users_per_cell;
        self
    }

    pub fn snr_gap(&self) -> f64 {
        db_to_linear(self.snr_gap_db)
    }

    pub fn max_power_w(&self) -> f64 {
        dbm_to_watts(self.max_power_dbm)
    }

    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz) * self.bandwidth_hz * db_to_linear(self.noise_figure_db)
    }

    /// Path-loss gain β = (1 + r/d₀)^−α.
    pub fn pathloss(&self, distance_m: f64) -> f64 {
        (1.0 + distance_m / self.reference_distance_m).powf(-self.pathloss_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        fn finite(field: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be finite, got {v}")))
            }
        }
        finite("bs_density", self.bs_density)?;
        finite("bandwidth_hz", self.bandwidth_hz)?;
        finite("max_power_dbm", self.max_power_dbm)?;
        finite("noise_psd_dbm_hz", self.noise_psd_dbm_hz)?;
        finite("noise_figure_db", self.noise_figure_db)?;
        finite("snr_gap_db", self.snr_gap_db)?;
        finite("pathloss_exponent", self.pathloss_exponent)?;
        finite("reference_distance_m", self.reference_distance_m)?;
        if self.bs_density <= 0.0 {
            return Err(Error::validation("bs_density", "must be > 0"));
        }
        if self.bandwidth_hz <= 0.0 {
            return Err(Error::validation("bandwidth_hz", "must be > 0"));
        }
        if self.reference_distance_m <= 0.0 {
            return Err(Error::validation("reference_distance_m", "must be > 0"));
        }
        if self.pathloss_exponent <= 2.0 {
            return Err(Error::validation(
                "pathloss_exponent",
                format!("must exceed 2, got {}", self.pathloss_exponent),
            ));
        }
        if self.snr_gap() < 1.0 {
            return Err(Error::validation(
                "snr_gap_db",
                format!("linear gap must be >= 1, got {}", self.snr_gap()),
            ));
        }
        if self.users_per_cell == 0 {
            return Err(Error::validation("users_per_cell", "must be >= 1"));
        }
        let snr = self.max_power_w() / self.noise_power_w();
        if !(snr.is_finite() && snr > 0.0) {
            return Err(Error::validation(
                "max_power_dbm",
                format!("transmit-to-noise power ratio {snr} is not representable"),
            ));
        }
        Ok(())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Split of M antennas into multiplexing K, diversity ζ and nulling O,
/// with K + ζ + O = M + 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub antennas: usize,
    pub multiplexing: usize,
    pub diversity: usize,
    pub nulling: usize,
}

impl OperatingPoint {
    /// Builds the point from (M, K, O); ζ follows from the budget.
    pub fn new(antennas: usize, multiplexing: usize, nulling: usize) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::validation("antennas", "must be >= 1"));
        }
        if multiplexing == 0 || multiplexing > antennas {
            return Err(Error::validation(
                "multiplexing",
                format!("must lie in 1..={antennas}, got {multiplexing}"),
            ));
        }
        if nulling > antennas - multiplexing {
            return Err(Error::validation(
                "nulling",
                format!("must lie in 0..={}, got {nulling}", antennas - multiplexing),
            ));
        }
        Ok(OperatingPoint {
            antennas,
            multiplexing,
            diversity: antennas + 1 - multiplexing - nulling,
            nulling,
        })
    }

    /// Builds the point from the triple (K, ζ, O); M follows from the budget.
    pub fn from_triple(multiplexing: usize, diversity: usize, nulling: usize) -> Result<Self> {
        if diversity == 0 {
            return Err(Error::validation("diversity", "must be >= 1"));
        }
        Self::new(
            multiplexing + diversity + nulling - 1,
            multiplexing,
            nulling,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let rebuilt = Self::new(self.antennas, self.multiplexing, self.nulling)?;
        if rebuilt.diversity != self.diversity {
            return Err(Error::validation(
                "diversity",
                format!(
                    "K + zeta + O must equal M + 1 ({} + {} + {} != {} + 1)",
                    self.multiplexing, self.diversity, self.nulling, self.antennas
                ),
            ));
        }
        Ok(())
    }

    pub fn triple(&self) -> (usize, usize, usize) {
        (self.multiplexing, self.diversity, self.nulling)
    }

    /// η = (K + O)/M.
    pub fn loading_factor(&self) -> f64 {
        (self.multiplexing + self.nulling) as f64 / self.antennas as f64
    }

    /// Proportionality constant ν = √((K + O)/K) of range-adaptive clustering.
    pub fn adaptive_range_factor(&self) -> f64 {
        ((self.multiplexing + self.nulling) as f64 / self.multiplexing as f64).sqrt()
    }
}

impl fmt::Display for OperatingPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{})",
            self.multiplexing, self.diversity, self.nulling
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// σ² = N₀·W·N_f in watts.
    pub noise_power_w: f64,
    /// ρ = P_T/(K σ²).
    pub per_user_snr: f64,
    /// B̄ = (O + K)/K.
    pub mean_cluster_size: f64,
    /// R_c = √(B̄/(λπ)).
    pub cluster_radius_m: f64,
    /// w = K/K_b, clamped to 1 when K exceeds the pool.
    pub schedule_fraction: f64,
    pub snr_gap: f64,
}

pub fn derive(params: &SystemParams, op: &OperatingPoint) -> Result<DerivedParams> {
    params.validate()?;
    op.validate()?;
    let noise_power_w = params.noise_power_w();
    let k = op.multiplexing as f64;
    let per_user_snr = params.max_power_w() / (k * noise_power_w);
    let mean_cluster_size = (op.nulling + op.multiplexing) as f64 / k;
    let cluster_radius_m = (mean_cluster_size / (params.bs_density * PI)).sqrt();
    let schedule_fraction = (k / params.users_per_cell as f64).min(1.0);
    Ok(DerivedParams {
        noise_power_w,
        per_user_snr,
        mean_cluster_size,
        cluster_radius_m,
        schedule_fraction,
        snr_gap: params.snr_gap(),
    })
}

/// All (K, ζ, O) with 1 ≤ K ≤ M and 0 ≤ O ≤ M − K, K ascending then O ascending.
pub fn enumerate_operating_points(antennas: usize) -> Vec<OperatingPoint> {
    let mut points = Vec::with_capacity(antennas * (antennas + 1) / 2);
    for k in 1..=antennas {
        for o in 0..=(antennas - k) {
            points.push(OperatingPoint {
                antennas,
                multiplexing: k,
                diversity: antennas + 1 - k - o,
                nulling: o,
            });
        }
    }
    points
}

/// How users request nulling from nearby base stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringMode {
    /// Every user requests nulling from BSs within R_c.
    FixedRange,
    /// A user at serving distance r requests nulling from BSs within νr.
    RangeAdaptive,
}

impl ClusteringMode {
    pub fn label(&self) -> &'static str {
        match self {
            ClusteringMode::FixedRange => "fixed",
            ClusteringMode::RangeAdaptive => "adaptive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fixed" | "fixed_range" => Some(ClusteringMode::FixedRange),
            "adaptive" | "range_adaptive" => Some(ClusteringMode::RangeAdaptive),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserModel {
    /// Exactly K_b candidates uniformly placed in every Voronoi cell.
    FixedKb,
    /// Users form a PPP of density K_b·λ; per-cell counts vary.
    PppUsers,
}

impl UserModel {
    pub fn label(&self) -> &'static str {
        match self {
            UserModel::FixedKb => "fixed_kb",
            UserModel::PppUsers => "ppp_users",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fixed_kb" => Some(UserModel::FixedKb),
            "ppp_users" => Some(UserModel::PppUsers),
            _ => None,
        }
    }
}

/// Channel metric a BS uses to rank nulling requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrantMetric {
    /// ‖h‖, the small-scale fading magnitude.
    SmallScale,
    /// ‖g‖ = √β‖h‖, including path loss.
    FullChannel,
}

impl GrantMetric {
    pub fn label(&self) -> &'static str {
        match self {
            GrantMetric::SmallScale => "small_scale",
            GrantMetric::FullChannel => "full_channel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "small_scale" => Some(GrantMetric::SmallScale),
            "full_channel" => Some(GrantMetric::FullChannel),
            _ => None,
        }
    }
}

/// Contents of a `key = value` configuration file.
///
/// System parameters are all required. The operating point is optional as a
/// whole but must be complete when any of its keys appear. Simulation keys
/// are optional.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDocument {
    pub params: SystemParams,
    pub operating_point: Option<OperatingPoint>,
    pub realizations: Option<usize>,
    pub window_half_width_m: Option<f64>,
    pub measurement_half_width_m: Option<f64>,
    pub clustering_mode: Option<ClusteringMode>,
    pub user_model: Option<UserModel>,
    pub grant_metric: Option<GrantMetric>,
}

pub const SYSTEM_KEYS: [&str; 9] = [
    "bs_density",
    "bandwidth_hz",
    "max_power_dbm",
    "noise_psd_dbm_hz",
    "noise_figure_db",
    "snr_gap_db",
    "pathloss_exponent",
    "reference_distance_m",
    "users_per_cell",
];

pub const OPERATING_POINT_KEYS: [&str; 4] = ["antennas", "multiplexing", "diversity", "nulling"];

pub const SIMULATION_KEYS: [&str; 6] = [
    "realizations",
    "window_half_width_m",
    "measurement_half_width_m",
    "clustering_mode",
    "user_model",
    "grant_metric",
];

fn is_known_key(key: &str) -> bool {
    SYSTEM_KEYS.contains(&key)
        || OPERATING_POINT_KEYS.contains(&key)
        || SIMULATION_KEYS.contains(&key)
}

/// Splits a document into key/value pairs. Duplicate and unknown keys are errors.
pub fn parse_key_values(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let err = |reason: String| Error::ConfigParse {
            path: origin.to_string(),
            line,
            reason,
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(err("empty key or value".into()));
        }
        if !is_known_key(key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(err(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

impl ConfigDocument {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let map = parse_key_values(text, origin)?;
        Self::from_map(&map, origin)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies overrides on top of an existing document. Keys must be known.
    pub fn with_overrides(&self, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut map = self.to_map();
        for (k, v) in overrides {
            if !is_known_key(k) {
                return Err(Error::ConfigParse {
                    path: "--set".into(),
                    line: 0,
                    reason: format!("unknown key `{k}`"),
                });
            }
            map.insert(k.clone(), v.clone());
        }
        // A partial operating-point override keeps M and K and recomputes ζ.
        if (overrides.contains_key("antennas")
            || overrides.contains_key("multiplexing")
            || overrides.contains_key("nulling"))
            && !overrides.contains_key("diversity")
        {
            map.remove("diversity");
            if let (Some(m), Some(k), Some(o)) = (
                map.get("antennas").and_then(|v| v.parse::<usize>().ok()),
                map.get("multiplexing")
                    .and_then(|v| v.parse::<usize>().ok()),
                map.get("nulling").and_then(|v| v.parse::<usize>().ok()),
            ) {
                if m + 1 >= k + o {
                    map.insert("diversity".into(), (m + 1 - k - o).to_string());
                }
            }
        }
        Self::from_map(&map, "--set")
    }

    /// Document holding the reference parameters and nothing else.
    pub fn reference() -> Self {
        ConfigDocument {
            params: SystemParams::reference(),
            operating_point: None,
            realizations: None,
            window_half_width_m: None,
            measurement_half_width_m: None,
            clustering_mode: None,
            user_model: None,
            grant_metric: None,
        }
    }

    fn from_map(map: &BTreeMap<String, String>, origin: &str) -> Result<Self> {
        let missing: Vec<&str> = SYSTEM_KEYS
            .iter()
            .copied()
            .filter(|k| !map.contains_key(*k))
            .collect();
        if !missing.is_empty() {
            return Err(Error::ConfigParse {
                path: origin.to_string(),
                line: 0,
                reason: format!("missing required keys: {}", missing.join(", ")),
            });
        }
        let float = |key: &'static str| -> Result<f64> {
            map[key]
                .parse::<f64>()
                .map_err(|_| Error::validation(key, format!("`{}` is not a number", map[key])))
        };
        let integer = |key: &'static str| -> Result<usize> {
            map[key].parse::<usize>().map_err(|_| {
                Error::validation(key, format!("`{}` is not a non-negative integer", map[key]))
            })
        };
        let params = SystemParams {
            bs_density: float("bs_density")?,
            bandwidth_hz: float("bandwidth_hz")?,
            max_power_dbm: float("max_power_dbm")?,
            noise_psd_dbm_hz: float("noise_psd_dbm_hz")?,
            noise_figure_db: float("noise_figure_db")?,
            snr_gap_db: float("snr_gap_db")?,
            pathloss_exponent: float("pathloss_exponent")?,
            reference_distance_m: float("reference_distance_m")?,
            users_per_cell: integer("users_per_cell")?,
        };
        params.validate()?;

        let present: Vec<&str> = OPERATING_POINT_KEYS
            .iter()
            .copied()
            .filter(|k| map.contains_key(*k))
            .collect();
        let operating_point = match present.len() {
            0 => None,
            4 => {
                let op = OperatingPoint {
                    antennas: integer("antennas")?,
                    multiplexing: integer("multiplexing")?,
                    diversity: integer("diversity")?,
                    nulling: integer("nulling")?,
                };
                op.validate()?;
                Some(op)
            }
            _ => {
                return Err(Error::ConfigParse {
                    path: origin.to_string(),
                    line: 0,
                    reason: format!(
                        "operating point needs all of {}; found only {}",
                        OPERATING_POINT_KEYS.join(", "),
                        present.join(", ")
                    ),
                })
            }
        };

        let opt_usize = |key: &'static str| -> Result<Option<usize>> {
            map.get(key).map(|_| integer(key)).transpose()
        };
        let opt_f64 = |key: &'static str| -> Result<Option<f64>> {
            map.get(key).map(|_| float(key)).transpose()
        };
        let clustering_mode = map
            .get("clustering_mode")
            .map(|v| {
                ClusteringMode::parse(v).ok_or_else(|| {
                    Error::validation(
                        "clustering_mode",
                        format!("expected fixed|adaptive, got `{v}`"),
                    )
                })
            })
            .transpose()?;
        let user_model = map
            .get("user_model")
            .map(|v| {
                UserModel::parse(v).ok_or_else(|| {
                    Error::validation(
                        "user_model",
                        format!("expected fixed_kb|ppp_users, got `{v}`"),
                    )
                })
            })
            .transpose()?;
        let grant_metric = map
            .get("grant_metric")
            .map(|v| {
                GrantMetric::parse(v).ok_or_else(|| {
                    Error::validation(
                        "grant_metric",
                        format!("expected small_scale|full_channel, got `{v}`"),
                    )
                })
            })
            .transpose()?;
        Ok(ConfigDocument {
            params,
            operating_point,
            realizations: opt_usize("realizations")?,
            window_half_width_m: opt_f64("window_half_width_m")?,
            measurement_half_width_m: opt_f64("measurement_half_width_m")?,
            clustering_mode,
            user_model,
            grant_metric,
        })
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        let p = &self.params;
        let mut map = BTreeMap::new();
        map.insert("bs_density".into(), format!("{:e}", p.bs_density));
        map.insert("bandwidth_hz".into(), format!("{}", p.bandwidth_hz));
        map.insert("max_power_dbm".into(), format!("{}", p.max_power_dbm));
        map.insert("noise_psd_dbm_hz".into(), format!("{}", p.noise_psd_dbm_hz));
        map.insert("noise_figure_db".into(), format!("{}", p.noise_figure_db));
        map.insert("snr_gap_db".into(), format!("{}", p.snr_gap_db));
        map.insert(
            "pathloss_exponent".into(),
            format!("{}", p.pathloss_exponent),
        );
        map.insert(
            "reference_distance_m".into(),
            format!("{}", p.reference_distance_m),
        );
        map.insert("users_per_cell".into(), p.users_per_cell.to_string());
        if let Some(op) = &self.operating_point {
            map.insert("antennas".into(), op.antennas.to_string());
            map.insert("multiplexing".into(), op.multiplexing.to_string());
            map.insert("diversity".into(), op.diversity.to_string());
            map.insert("nulling".into(), op.nulling.to_string());
        }
        if let Some(r) = self.realizations {
            map.insert("realizations".into(), r.to_string());
        }
        if let Some(w) = self.window_half_width_m {
            map.insert("window_half_width_m".into(), format!("{w}"));
        }
        if let Some(w) = self.measurement_half_width_m {
            map.insert("measurement_half_width_m".into(), format!("{w}"));
        }
        if let Some(m) = self.clustering_mode {
            map.insert("clustering_mode".into(), m.label().into());
        }
        if let Some(u) = self.user_model {
            map.insert("user_model".into(), u.label().into());
        }
        if let Some(g) = self.grant_metric {
            map.insert("grant_metric".into(), g.label().into());
        }
        map
    }

    /// Serializes back to the `key = value` format, keys sorted.
    pub fn to_text(&self) -> String {
        self.to_map()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
