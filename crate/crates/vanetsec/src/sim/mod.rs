//! Deterministic discrete-event simulator.
//!
//! Vehicles move along a one-dimensional road through base-station zones with
//! lossy wireless delivery. Protocol mode selects what the nodes run: the
//! secure primitives (SNEP unicast to the serving station plus authenticated
//! broadcasts from it), or one of three simplified routing baselines (DSDV
//! table exchange, GPSR greedy geographic forwarding, BMFR best-neighbor
//! forwarding). Each run is a pure function of (config, seed): the event
//! queue is ordered by (time, insertion sequence) and all randomness flows
//! from named ChaCha streams.

mod baseline;
mod engine;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("config line {line}: {reason}")]
    ConfigParse { line: usize, reason: String },
}

/// What the nodes run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolMode {
    SecurePrimitives,
    Dsdv,
    Gpsr,
    Bmfr,
}

impl ProtocolMode {
    pub const ALL: [ProtocolMode; 4] = [
        ProtocolMode::SecurePrimitives,
        ProtocolMode::Dsdv,
        ProtocolMode::Gpsr,
        ProtocolMode::Bmfr,
    ];

    /// Short name used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolMode::SecurePrimitives => "secure",
            ProtocolMode::Dsdv => "dsdv",
            ProtocolMode::Gpsr => "gpsr",
            ProtocolMode::Bmfr => "bmfr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "secure_primitives" | "secure" => Some(ProtocolMode::SecurePrimitives),
            "dsdv" => Some(ProtocolMode::Dsdv),
            "gpsr" => Some(ProtocolMode::Gpsr),
            "bmfr" => Some(ProtocolMode::Bmfr),
            _ => None,
        }
    }
}

impl std::fmt::Display for ProtocolMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Simulator input. Distances in meters, speeds in m/s, times as annotated.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub road_length: f64,
    pub bs_spacing: f64,
    pub bs_radius: f64,
    pub v2v_radius: f64,
    pub vehicle_count: u32,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Application messages per second per node; one simulation run per
    /// entry.
    pub traffic_load: Vec<f64>,
    pub loss_prob: f64,
    /// Transmission + propagation + processing base, ms per hop.
    pub per_hop_latency: f64,
    /// Crypto cost model: microseconds per block-cipher operation.
    pub crypto_cost: f64,
    /// Per-node clock offset bound, ms.
    pub clock_skew: f64,
    /// Simulated seconds per run.
    pub sim_duration: f64,
    pub rng_seed: u64,
    pub protocol_mode: Vec<ProtocolMode>,
    /// Broadcast period of each base station in secure mode, ms.
    pub bcast_interval: f64,
    /// Key-chain interval duration, ms.
    pub t_int: u64,
    /// Key disclosure delay, intervals.
    pub disclosure_delay: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            road_length: 2500.0,
            bs_spacing: 500.0,
            bs_radius: 300.0,
            v2v_radius: 250.0,
            vehicle_count: 50,
            speed_min: 0.0,
            speed_max: 40.0,
            traffic_load: (1..=10).map(f64::from).collect(),
            loss_prob: 0.05,
            per_hop_latency: 5.0,
            crypto_cost: 1.0,
            clock_skew: 50.0,
            sim_duration: 20.0,
            rng_seed: 42,
            protocol_mode: ProtocolMode::ALL.to_vec(),
            bcast_interval: 3000.0,
            t_int: 1000,
            disclosure_delay: 2,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if self.road_length <= 0.0 || self.bs_spacing <= 0.0 || self.bs_radius <= 0.0 {
            return bad("road geometry must be positive");
        }
        if self.bs_radius < self.bs_spacing / 2.0 {
            return bad("bs_radius must cover half the station spacing (no dead zones)");
        }
        if self.v2v_radius <= 0.0 {
            return bad("v2v_radius must be positive");
        }
        if !(0.0..=40.0).contains(&self.speed_min)
            || !(0.0..=40.0).contains(&self.speed_max)
            || self.speed_min > self.speed_max
        {
            return bad("speeds must satisfy 0 <= min <= max <= 40");
        }
        if self.traffic_load.is_empty() || self.traffic_load.iter().any(|&l| l <= 0.0) {
            return bad("traffic_load must list positive rates");
        }
        if !(0.0..1.0).contains(&self.loss_prob) {
            return bad("loss_prob must lie in [0, 1)");
        }
        if self.per_hop_latency <= 0.0 {
            return bad("per_hop_latency must be positive");
        }
        if self.crypto_cost < 0.0 {
            return bad("crypto_cost must be non-negative");
        }
        if self.clock_skew < 0.0 {
            return bad("clock_skew must be non-negative");
        }
        if self.sim_duration <= 0.0 {
            return bad("sim_duration must be positive");
        }
        if self.protocol_mode.is_empty() {
            return bad("protocol_mode must list at least one mode");
        }
        if self.bcast_interval <= 0.0 || self.t_int == 0 {
            return bad("broadcast and chain intervals must be positive");
        }
        if self.disclosure_delay < 2 {
            return bad("disclosure_delay must be at least 2");
        }
        // Genuine broadcasts must pass the receiver safety test.
        let slack = (self.disclosure_delay as f64 - 1.0) * self.t_int as f64;
        if self.clock_skew + self.per_hop_latency + self.receiver_max_skew() >= slack {
            return bad("clock skew and latency leave no margin before key disclosure");
        }
        Ok(())
    }

    /// Skew bound handed to receivers: worst clock error plus propagation,
    /// with a small margin.
    pub fn receiver_max_skew(&self) -> f64 {
        self.clock_skew + self.per_hop_latency + 10.0
    }

    /// Parse flat `key = value` text. Unknown keys are rejected; `#` starts
    /// a comment.
    pub fn from_config_text(text: &str) -> Result<Self, SimError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(SimError::ConfigParse {
                    line: line_no,
                    reason: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let parse_err = |reason: String| SimError::ConfigParse {
                line: line_no,
                reason,
            };
            let f64_val = || {
                value
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("`{value}` is not a number")))
            };
            match key {
                "road_length" => cfg.road_length = f64_val()?,
                "bs_spacing" => cfg.bs_spacing = f64_val()?,
                "bs_radius" => cfg.bs_radius = f64_val()?,
                "v2v_radius" => cfg.v2v_radius = f64_val()?,
                "vehicle_count" => {
                    cfg.vehicle_count = value
                        .parse()
                        .map_err(|_| parse_err(format!("`{value}` is not a count")))?
                }
                "speed_min" => cfg.speed_min = f64_val()?,
                "speed_max" => cfg.speed_max = f64_val()?,
                "traffic_load" => {
                    cfg.traffic_load = value
                        .split(',')
                        .map(|v| {
                            v.trim()
                                .parse::<f64>()
                                .map_err(|_| parse_err(format!("bad load `{v}`")))
                        })
                        .collect::<Result<_, _>>()?
                }
                "loss_prob" => cfg.loss_prob = f64_val()?,
                "per_hop_latency" => cfg.per_hop_latency = f64_val()?,
                "crypto_cost" => cfg.crypto_cost = f64_val()?,
                "clock_skew" => cfg.clock_skew = f64_val()?,
                "sim_duration" => cfg.sim_duration = f64_val()?,
                "rng_seed" => {
                    cfg.rng_seed = value
                        .parse()
                        .map_err(|_| parse_err(format!("`{value}` is not a seed")))?
                }
                "protocol_mode" => {
                    cfg.protocol_mode = value
                        .split(',')
                        .map(|m| {
                            ProtocolMode::parse(m)
                                .ok_or_else(|| parse_err(format!("unknown mode `{m}`")))
                        })
                        .collect::<Result<_, _>>()?
                }
                "bcast_interval" => cfg.bcast_interval = f64_val()?,
                "t_int" => {
                    cfg.t_int = value
                        .parse()
                        .map_err(|_| parse_err(format!("`{value}` is not a duration")))?
                }
                "disclosure_delay" => {
                    cfg.disclosure_delay = value
                        .parse()
                        .map_err(|_| parse_err(format!("`{value}` is not a count")))?
                }
                other => {
                    return Err(SimError::ConfigParse {
                        line: line_no,
                        reason: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Handoff and bootstrap audit for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HandoffAudit {
    pub handoffs: u32,
    /// Largest over-the-air message count any single handoff needed.
    pub handoff_ota_max: u32,
    pub bootstraps: u32,
    pub bootstrap_ota: u32,
    /// Zone crossings where a counter moved backwards (must stay 0).
    pub counter_resets: u32,
    /// Zone crossings where the chain commitment index decreased (must stay
    /// 0).
    pub commit_regressions: u32,
}

/// Aggregated output of one (load, mode) run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub load: f64,
    pub mode: ProtocolMode,
    pub avg_e2e_delay_ms: f64,
    pub avg_auth_delay_ms: f64,
    pub delivery_ratio: f64,
    pub avg_storage_bytes: f64,
    pub max_storage_bytes: u64,
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub packets_lost: u64,
    pub in_flight_at_end: u64,
    /// Crypto-attributable share of the average deliver delay.
    pub avg_crypto_delay_ms: f64,
    pub handoff_audit: HandoffAudit,
}

pub const CSV_HEADER: &str = "load,mode,avg_e2e_delay_ms,avg_auth_delay_ms,delivery_ratio,avg_storage_bytes,max_storage_bytes,packets_sent,packets_delivered";

/// Render records in the stable CSV format.
pub fn to_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{:.1},{},{},{}\n",
            r.load,
            r.mode,
            r.avg_e2e_delay_ms,
            r.avg_auth_delay_ms,
            r.delivery_ratio,
            r.avg_storage_bytes,
            r.max_storage_bytes,
            r.packets_sent,
            r.packets_delivered
        ));
    }
    out
}

/// Run the full sweep: one record per (traffic load, mode), in config order.
pub fn run(cfg: &ScenarioConfig) -> Result<Vec<MetricsRecord>, SimError> {
    run_inner(cfg, &mut None)
}

/// Like [`run`], also returning the event trace (one line per event, stable
/// ordering).
pub fn run_traced(cfg: &ScenarioConfig) -> Result<(Vec<MetricsRecord>, Vec<String>), SimError> {
    let mut trace = Some(Vec::new());
    let records = run_inner(cfg, &mut trace)?;
    Ok((records, trace.unwrap()))
}

fn run_inner(
    cfg: &ScenarioConfig,
    trace: &mut Option<Vec<String>>,
) -> Result<Vec<MetricsRecord>, SimError> {
    cfg.validate()?;
    let mut records = Vec::new();
    for (load_idx, &load) in cfg.traffic_load.iter().enumerate() {
        for &mode in &cfg.protocol_mode {
            records.push(engine::run_single(cfg, load, load_idx, mode, trace));
        }
    }
    Ok(records)
}
