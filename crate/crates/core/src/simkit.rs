//! Slotted link simulator.
//!
//! One observation window is a run of `slots_per_window` slots in which a
//! transmitter pushes `packets_per_window_target` packets to a receiver over a
//! two-ray ground link, optionally under attack from one of four jammer types.
//! The window's event counters are turned into the four detection features
//! (PDR, BPR, RSS, CCA busy ratio) by [`extract_features`].

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datakit::Dataset;
use crate::error::{Error, Result};
use crate::seed;

/// RSS reported for a window in which no packet decoded.
pub const RSS_SENTINEL_DBM: f64 = -120.0;

/// Busy CCA reads tolerated for the head-of-line packet before it is sent anyway.
pub const MAX_CCA_DEFERRALS: u32 = 3;

/// Preamble detection succeeds this many times below `sinr_ref` (about 6 dB).
const DETECTION_MARGIN: f64 = 0.25;

pub const MIX_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub tx_power_w: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    pub distance_m: f64,
    pub noise_power_w: f64,
    pub slots_per_window: u32,
    pub packets_per_window_target: u32,
    /// SINR at which a packet decodes with probability 1/2.
    pub sinr_ref: f64,
    pub success_steepness: f64,
    /// Energy-detect level for clear channel assessment.
    #[serde(default = "default_cca_threshold")]
    pub cca_threshold_w: f64,
    /// Per-slot probability that a neighbouring node occupies the channel.
    #[serde(default)]
    pub background_busy_prob: f64,
    /// Log-normal shadowing applied per window to both signal and jammer power.
    #[serde(default)]
    pub shadowing_std_db: f64,
}

fn default_cca_threshold() -> f64 {
    1e-9
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            tx_power_w: 0.1,
            tx_gain: 1.0,
            rx_gain: 1.0,
            tx_height_m: 1.5,
            rx_height_m: 1.5,
            distance_m: 30.0,
            noise_power_w: 1e-10,
            slots_per_window: 200,
            packets_per_window_target: 100,
            sinr_ref: 10.0,
            success_steepness: 2.0,
            cca_threshold_w: default_cca_threshold(),
            background_busy_prob: 0.0,
            shadowing_std_db: 3.0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let strictly_positive = [
            ("tx_power_w", self.tx_power_w),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
            ("tx_height_m", self.tx_height_m),
            ("rx_height_m", self.rx_height_m),
            ("distance_m", self.distance_m),
            ("sinr_ref", self.sinr_ref),
            ("success_steepness", self.success_steepness),
            ("cca_threshold_w", self.cca_threshold_w),
        ];
        for (name, v) in strictly_positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.noise_power_w.is_finite() && self.noise_power_w >= 0.0) {
            return Err(Error::Config(format!(
                "noise_power_w must be finite and >= 0, got {}",
                self.noise_power_w
            )));
        }
        if !(0.0..=1.0).contains(&self.background_busy_prob) {
            return Err(Error::Config("background_busy_prob must lie in [0, 1]".into()));
        }
        if !(self.shadowing_std_db.is_finite() && self.shadowing_std_db >= 0.0) {
            return Err(Error::Config("shadowing_std_db must be finite and >= 0".into()));
        }
        if self.packets_per_window_target == 0 {
            return Err(Error::Config("packets_per_window_target must be >= 1".into()));
        }
        if self.slots_per_window < self.packets_per_window_target {
            return Err(Error::Config(format!(
                "slots_per_window ({}) must be >= packets_per_window_target ({})",
                self.slots_per_window, self.packets_per_window_target
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerKind {
    None,
    BenignDegraded,
    Constant,
    Random,
    Deceptive,
    Reactive,
}

impl JammerKind {
    pub const ALL: [JammerKind; 6] = [
        JammerKind::None,
        JammerKind::BenignDegraded,
        JammerKind::Constant,
        JammerKind::Random,
        JammerKind::Deceptive,
        JammerKind::Reactive,
    ];

    pub fn is_attack(self) -> bool {
        !matches!(self, JammerKind::None | JammerKind::BenignDegraded)
    }

    pub fn label(self) -> u8 {
        u8::from(self.is_attack())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammerProfile {
    pub kind: JammerKind,
    /// Jammer power as seen at the link (covers the jamming signal and its path noise).
    #[serde(default)]
    pub jam_power_w: f64,
    /// On-probability per slot for the random jammer.
    #[serde(default)]
    pub duty_cycle: f64,
    /// Reactive jammer latency between sensing a transmission and jamming.
    #[serde(default)]
    pub sense_delay_slots: u32,
    /// Per-slot decoy transmission probability for the deceptive jammer.
    #[serde(default)]
    pub decoy_packet_rate: f64,
}

impl JammerProfile {
    pub fn none() -> Self {
        Self::quiet(JammerKind::None)
    }

    pub fn benign_degraded() -> Self {
        Self::quiet(JammerKind::BenignDegraded)
    }

    fn quiet(kind: JammerKind) -> Self {
        JammerProfile {
            kind,
            jam_power_w: 0.0,
            duty_cycle: 0.0,
            sense_delay_slots: 0,
            decoy_packet_rate: 0.0,
        }
    }

    pub fn constant(jam_power_w: f64) -> Self {
        JammerProfile {
            jam_power_w,
            duty_cycle: 1.0,
            ..Self::quiet(JammerKind::Constant)
        }
    }

    pub fn random(jam_power_w: f64, duty_cycle: f64) -> Self {
        JammerProfile {
            jam_power_w,
            duty_cycle,
            ..Self::quiet(JammerKind::Random)
        }
    }

    pub fn deceptive(jam_power_w: f64, decoy_packet_rate: f64) -> Self {
        JammerProfile {
            jam_power_w,
            decoy_packet_rate,
            ..Self::quiet(JammerKind::Deceptive)
        }
    }

    pub fn reactive(jam_power_w: f64, sense_delay_slots: u32) -> Self {
        JammerProfile {
            jam_power_w,
            sense_delay_slots,
            ..Self::quiet(JammerKind::Reactive)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.jam_power_w.is_finite() && self.jam_power_w >= 0.0) {
            return Err(Error::Config("jam_power_w must be finite and >= 0".into()));
        }
        if !self.kind.is_attack() && self.jam_power_w != 0.0 {
            return Err(Error::Config(format!(
                "{:?} scenario must have jam_power_w = 0",
                self.kind
            )));
        }
        for (name, v) in [
            ("duty_cycle", self.duty_cycle),
            ("decoy_packet_rate", self.decoy_packet_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Probability that the jammer is on in a slot, for the kinds that are slot-independent.
    fn effective_duty(&self) -> f64 {
        match self.kind {
            JammerKind::Constant => 1.0,
            JammerKind::Random => self.duty_cycle,
            _ => 0.0,
        }
    }
}

/// Raw counters from one observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkWindow {
    pub packets_sent: u32,
    pub packets_acked: u32,
    pub packets_received: u32,
    pub packets_erroneous: u32,
    pub cca_attempts: u32,
    pub cca_busy: u32,
    /// Sum of received power over decoded packets, scaled by the window's decode rate.
    pub rss_sum_w: f64,
    pub scenario_label: u8,
}

impl LinkWindow {
    pub fn packets_decoded(&self) -> u32 {
        self.packets_received - self.packets_erroneous
    }
}

/// One labeled feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub pdr: f64,
    pub bpr: f64,
    pub rss_dbm: f64,
    pub cca_busy_ratio: f64,
    pub label: u8,
}

pub const FEATURE_COUNT: usize = 4;
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = ["pdr", "bpr", "rss_dbm", "cca_busy_ratio"];

impl Sample {
    pub fn new(features: [f64; FEATURE_COUNT], label: u8) -> Self {
        Sample {
            pdr: features[0],
            bpr: features[1],
            rss_dbm: features[2],
            cca_busy_ratio: features[3],
            label,
        }
    }

    pub fn features(&self) -> [f64; FEATURE_COUNT] {
        [self.pdr, self.bpr, self.rss_dbm, self.cca_busy_ratio]
    }
}

/// Two-ray ground received power, `P_t G_t G_r h_t^2 h_r^2 / d^4`.
pub fn rss_linear(cfg: &ChannelConfig) -> Result<f64> {
    if !(cfg.distance_m.is_finite() && cfg.distance_m > 0.0) {
        return Err(Error::Config(format!(
            "distance_m must be finite and > 0, got {}",
            cfg.distance_m
        )));
    }
    let k = cfg.tx_gain * cfg.rx_gain * cfg.tx_height_m.powi(2) * cfg.rx_height_m.powi(2);
    Ok(k * cfg.tx_power_w / cfg.distance_m.powi(4))
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Probability that a packet at `sinr` decodes: logistic in log-SINR.
pub fn decode_probability(cfg: &ChannelConfig, sinr: f64) -> f64 {
    logistic(cfg.success_steepness * (sinr / cfg.sinr_ref).ln())
}

fn detect_probability(cfg: &ChannelConfig, sinr: f64) -> f64 {
    logistic(cfg.success_steepness * (sinr / (cfg.sinr_ref * DETECTION_MARGIN)).ln())
}

fn shadowing_gain(std_db: f64, rng: &mut seed::Rng) -> f64 {
    if std_db == 0.0 {
        return 1.0;
    }
    let db = Normal::new(0.0, std_db).expect("finite std").sample(rng);
    10f64.powf(db / 10.0)
}

/// Simulate one observation window. Pure in `(cfg, jam, seed)`.
///
/// Packets arrive evenly spaced over the window and queue at the transmitter.
/// Every slot with a queued packet starts with a CCA read; a busy read defers
/// the packet unless it has already been deferred [`MAX_CCA_DEFERRALS`] times.
pub fn simulate_window(cfg: &ChannelConfig, jam: &JammerProfile, seed: u64) -> Result<LinkWindow> {
    cfg.validate()?;
    jam.validate()?;
    let mut rng = seed::rng(seed);

    let signal_w = rss_linear(cfg)? * shadowing_gain(cfg.shadowing_std_db, &mut rng);
    let jam_w = jam.jam_power_w * shadowing_gain(cfg.shadowing_std_db, &mut rng);
    let jam_sensed = jam_w >= cfg.cca_threshold_w;

    let slots = cfg.slots_per_window as u64;
    let target = cfg.packets_per_window_target as u64;
    let mut next_packet = 0u64;
    let mut queue = 0u64;
    let mut deferrals = 0u32;
    let mut reactive_armed_at: Option<u64> = None;

    let mut w = LinkWindow {
        packets_sent: 0,
        packets_acked: 0,
        packets_received: 0,
        packets_erroneous: 0,
        cca_attempts: 0,
        cca_busy: 0,
        rss_sum_w: 0.0,
        scenario_label: jam.kind.label(),
    };

    for slot in 0..slots {
        while next_packet < target && next_packet * slots / target <= slot {
            queue += 1;
            next_packet += 1;
        }

        let mut jam_on = match jam.kind {
            JammerKind::Constant | JammerKind::Random => rng.random_bool(jam.effective_duty()),
            JammerKind::Reactive => {
                reactive_armed_at.is_some_and(|at| slot >= at + jam.sense_delay_slots as u64)
            }
            _ => false,
        };
        let decoy = jam.kind == JammerKind::Deceptive && rng.random_bool(jam.decoy_packet_rate);
        let neighbour = rng.random_bool(cfg.background_busy_prob);

        let mut transmitted = false;
        if queue > 0 {
            w.cca_attempts += 1;
            let busy = neighbour || ((jam_on || decoy) && jam_sensed);
            if busy {
                w.cca_busy += 1;
            }
            if !busy || deferrals >= MAX_CCA_DEFERRALS {
                transmitted = true;
                queue -= 1;
                deferrals = 0;
                w.packets_sent += 1;

                match jam.kind {
                    JammerKind::Reactive => {
                        let at = *reactive_armed_at.get_or_insert(slot);
                        jam_on = slot >= at + jam.sense_delay_slots as u64;
                    }
                    // A random jammer ignores carrier sense and may key up mid-packet.
                    JammerKind::Random if !jam_on => jam_on = rng.random_bool(jam.duty_cycle),
                    _ => {}
                }
                let mut interference = 0.0;
                if jam_on || decoy {
                    interference += jam_w;
                }
                if neighbour {
                    interference += signal_w;
                }
                let sinr = signal_w / (cfg.noise_power_w + interference);
                let u: f64 = rng.random();
                if u < detect_probability(cfg, sinr) {
                    w.packets_received += 1;
                    if u < decode_probability(cfg, sinr) {
                        w.packets_acked += 1;
                        w.rss_sum_w += signal_w;
                    } else {
                        w.packets_erroneous += 1;
                    }
                }
            } else {
                deferrals += 1;
            }
        }

        // A decoy on an otherwise quiet slot reaches the receiver and fails the frame check.
        if decoy && !transmitted && jam_w > 0.0 {
            let sinr = jam_w / cfg.noise_power_w.max(f64::MIN_POSITIVE);
            if rng.random::<f64>() < detect_probability(cfg, sinr) {
                w.packets_received += 1;
                w.packets_erroneous += 1;
            }
        }

        if queue == 0 {
            reactive_armed_at = None;
        }
    }

    if w.packets_sent > 0 {
        w.rss_sum_w *= w.packets_acked as f64 / w.packets_sent as f64;
    }
    Ok(w)
}

fn ratio(num: u32, den: u32) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Feature extraction with the default RSS floor.
pub fn extract_features(w: &LinkWindow) -> Sample {
    extract_features_with_floor(w, RSS_SENTINEL_DBM)
}

pub fn extract_features_with_floor(w: &LinkWindow, rss_floor_dbm: f64) -> Sample {
    let decoded = w.packets_decoded();
    let rss_dbm = if decoded == 0 || w.rss_sum_w <= 0.0 {
        rss_floor_dbm
    } else {
        (10.0 * (1000.0 * w.rss_sum_w / decoded as f64).log10()).max(rss_floor_dbm)
    };
    Sample {
        pdr: ratio(w.packets_acked, w.packets_sent),
        bpr: ratio(w.packets_erroneous, w.packets_received),
        rss_dbm,
        cca_busy_ratio: ratio(w.cca_busy, w.cca_attempts),
        label: w.scenario_label,
    }
}

/// One weighted entry of a scenario mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub weight: f64,
    pub channel: ChannelConfig,
    pub jammer: JammerProfile,
}

/// The scenario-mix configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMix {
    pub schema_version: u32,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioMix {
    pub fn new(scenarios: Vec<Scenario>) -> Self {
        ScenarioMix {
            schema_version: MIX_SCHEMA_VERSION,
            scenarios,
        }
    }

    /// Balanced mix used for every reference number in the repository: half the
    /// mass on clean and benignly degraded links, half spread over the four
    /// jammer kinds.
    pub fn canonical() -> Self {
        // Saturated traffic: the transmitter offers a packet every slot.
        let link = |distance_m: f64, noise_power_w: f64, background_busy_prob: f64, shadowing_std_db: f64| ChannelConfig {
            distance_m,
            noise_power_w,
            packets_per_window_target: 200,
            background_busy_prob,
            shadowing_std_db,
            ..ChannelConfig::default()
        };
        let scenario = |name: &str, weight: f64, channel: ChannelConfig, jammer| Scenario {
            name: name.to_string(),
            weight,
            channel,
            jammer,
        };
        ScenarioMix::new(vec![
            scenario("clean", 0.25, link(30.0, 1e-10, 0.02, 4.0), JammerProfile::none()),
            scenario("far", 0.125, link(75.0, 4e-10, 0.02, 6.0), JammerProfile::benign_degraded()),
            scenario("congested", 0.125, link(30.0, 1e-10, 0.3, 4.0), JammerProfile::benign_degraded()),
            scenario("constant", 0.125, link(30.0, 1e-10, 0.02, 6.0), JammerProfile::constant(1e-7)),
            scenario("random", 0.125, link(30.0, 1e-10, 0.02, 4.0), JammerProfile::random(1e-7, 0.8)),
            scenario("deceptive", 0.125, link(30.0, 1e-10, 0.02, 4.0), JammerProfile::deceptive(5e-9, 0.2)),
            scenario("reactive", 0.125, link(30.0, 1e-10, 0.02, 6.0), JammerProfile::reactive(6e-8, 0)),
        ])
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MIX_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported scenario-mix schema_version {} (expected {MIX_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("scenario mix is empty".into()));
        }
        let mut total = 0.0;
        for s in &self.scenarios {
            if !(s.weight.is_finite() && s.weight >= 0.0) {
                return Err(Error::Config(format!("scenario `{}`: weight must be >= 0", s.name)));
            }
            s.channel.validate()?;
            s.jammer.validate()?;
            total += s.weight;
        }
        if total <= 0.0 {
            return Err(Error::Config("scenario weights sum to zero".into()));
        }
        Ok(())
    }

    /// Probability mass on jammer scenarios.
    pub fn attack_mass(&self) -> f64 {
        let total: f64 = self.scenarios.iter().map(|s| s.weight).sum();
        let attack: f64 = self
            .scenarios
            .iter()
            .filter(|s| s.jammer.kind.is_attack())
            .map(|s| s.weight)
            .sum();
        attack / total
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mix: ScenarioMix = serde_json::from_str(text)?;
        mix.validate()?;
        Ok(mix)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mix serializes")
    }

    /// Hex SHA-256 of the mix's JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("mix serializes");
        crate::canon::sha256_hex(json.as_bytes())
    }

    fn pick(&self, u: f64) -> &Scenario {
        let total: f64 = self.scenarios.iter().map(|s| s.weight).sum();
        let mut acc = 0.0;
        let target = u * total;
        for s in &self.scenarios {
            acc += s.weight;
            if target < acc {
                return s;
            }
        }
        self.scenarios
            .iter()
            .rev()
            .find(|s| s.weight > 0.0)
            .expect("validated mix has positive mass")
    }
}

/// Draw `n` labeled samples from `mix`. Sample `i` depends only on `(seed, i)`.
pub fn generate_dataset(mix: &ScenarioMix, n: usize, seed: u64) -> Result<Dataset> {
    mix.validate()?;
    if n == 0 {
        return Err(Error::Config("sample count must be >= 1".into()));
    }
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let item_seed = seed::derive(seed, i as u64);
            let mut rng = seed::rng(item_seed);
            let scenario = mix.pick(rng.random());
            let window = simulate_window(&scenario.channel, &scenario.jammer, seed::derive(item_seed, 1))?;
            Ok(extract_features(&window))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut dataset = Dataset::new(samples);
    dataset.meta.insert("generator".into(), "simkit".into());
    dataset.meta.insert("mix_sha256".into(), mix.fingerprint());
    dataset.meta.insert("seed".into(), seed.to_string());
    dataset.meta.insert("n".into(), n.to_string());
    Ok(dataset)
}
