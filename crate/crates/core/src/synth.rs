//! Seeded generator of multi-user, multi-rate sensor logs.
//!
//! Every (user, label) pair gets a number of sessions laid out on a per-user
//! timeline; users occupy disjoint time ranges so a shared stream file never
//! mixes readings of two users within the staleness horizon. Continuous
//! readings are `Normal(prototype + user offset, sigma)`, categorical ones
//! are drawn from the label's distribution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::config::KvConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ingest::build::dataset_from_logs;
use crate::ingest::enrich::{default_venue_taxonomy, default_weather_taxonomy, utc_date, GridEnrichment, VenueBox};
use crate::ingest::logs::{parse_log_texts, LABEL_LOG};
use crate::ingest::registry::{Payload, StreamKind, StreamRegistry};
use crate::ingest::slots::DEFAULT_HORIZON_MS;
use crate::rng::Rng;

/// Enrichment table written next to generated logs.
pub const ENRICH_FILE: &str = "enrich.cfg";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelPrototype {
    /// Mean vector per continuous stream.
    pub means: BTreeMap<String, Vec<f64>>,
    /// Token distribution per categorical stream.
    pub categorical: BTreeMap<String, Vec<(String, f64)>>,
    /// Inclusion probability per characteristic token of a multi-label
    /// stream; other tokens use `multi_background`.
    pub multi: BTreeMap<String, Vec<(String, f64)>>,
    /// Probability of `1` per boolean stream.
    pub boolean: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub registry: StreamRegistry,
    pub n_users: usize,
    pub labels: Vec<String>,
    /// One per label, same order as `labels`.
    pub prototypes: Vec<LabelPrototype>,
    /// One map per user: additive offset per continuous stream.
    pub user_offsets: Vec<BTreeMap<String, Vec<f64>>>,
    pub periods_ms: BTreeMap<String, i64>,
    pub noise_sigma: BTreeMap<String, f64>,
    pub session_min_ms: i64,
    pub session_max_ms: i64,
    pub sessions_per_user_label: usize,
    pub multi_background: f64,
    pub gap_ms: i64,
    pub start_ms: i64,
    pub seed: u64,
    pub enrichment: Option<GridEnrichment>,
}

/// Knobs for [`WorldConfig::randomized`].
#[derive(Clone, Debug, PartialEq)]
pub struct WorldParams {
    pub n_users: usize,
    pub labels: Vec<String>,
    pub sessions_per_user_label: usize,
    pub session_min_ms: i64,
    pub session_max_ms: i64,
    /// Multiplies every stream's default noise.
    pub noise_scale: f64,
    /// User offsets are `Normal(0, user_offset_scale * stream spread)`.
    pub user_offset_scale: f64,
    /// Probability mass of a categorical stream's most likely token.
    pub categorical_focus: f64,
    pub multi_background: f64,
    pub seed: u64,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            n_users: 3,
            labels: DEFAULT_LABELS.iter().map(|s| s.to_string()).collect(),
            sessions_per_user_label: 5,
            session_min_ms: 40_000,
            session_max_ms: 160_000,
            noise_scale: 1.0,
            user_offset_scale: 1.0,
            categorical_focus: 0.6,
            multi_background: 0.01,
            seed: 0,
        }
    }
}

pub const DEFAULT_LABELS: [&str; 8] =
    ["commuting", "eating_out", "exercising", "having_coffee", "relaxing_home", "shopping", "sleeping", "studying"];

/// Typical spread (prototype scale) of each built-in continuous stream.
fn stream_scale(name: &str) -> (f64, f64) {
    // (centre, spread)
    match name {
        "audio_volume" => (0.5, 0.25),
        "battery" => (0.6, 0.2),
        "gps" => (0.0, 0.02),
        "accelerometer" => (0.0, 2.0),
        "gyroscope" => (0.0, 0.5),
        "light" => (50.0, 30.0),
        _ => (0.0, 1.0),
    }
}

fn default_period(name: &str, kind: &StreamKind) -> i64 {
    match name {
        "accelerometer" | "gyroscope" | "light" => 200,
        "gps" => 5_000,
        "battery" | "plugged" | "time_of_day" | "day_type" => 30_000,
        "running_apps" => 5_000,
        "bt_devices" | "proximity" | "wifi_ap" | "wifi_connected" => 10_000,
        _ => match kind {
            StreamKind::Continuous { .. } => 1_000,
            _ => 2_000,
        },
    }
}

const GPS_CENTRE: (f64, f64) = (43.72, 10.40);

impl WorldConfig {
    /// Desk-scale default world: 3 users, 8 labels, roughly 12 000 slots.
    pub fn desk(seed: u64) -> Self {
        Self::randomized(StreamRegistry::default_phone(), &WorldParams { seed, ..Default::default() })
    }

    /// Draws prototypes, offsets and an enrichment table from `params.seed`.
    pub fn randomized(registry: StreamRegistry, params: &WorldParams) -> Self {
        let mut rng = Rng::new(params.seed).fork(0xC0FFEE);
        let venues = default_venue_taxonomy();
        let mut prototypes = Vec::with_capacity(params.labels.len());
        let mut boxes = Vec::new();
        for _ in &params.labels {
            let mut p = LabelPrototype::default();
            for s in registry.entries() {
                match &s.kind {
                    StreamKind::Continuous { arity } => {
                        let mean: Vec<f64> = if Some(s.name.as_str()) == registry.location() {
                            let lat = GPS_CENTRE.0 + (rng.uniform() - 0.5) * 0.1;
                            let lon = GPS_CENTRE.1 + (rng.uniform() - 0.5) * 0.1;
                            vec![lat, lon]
                        } else {
                            let (c, spread) = stream_scale(&s.name);
                            (0..*arity).map(|_| c + spread * (2.0 * rng.uniform() - 1.0)).collect()
                        };
                        if Some(s.name.as_str()) == registry.location() {
                            let venue = venues[rng.below(venues.len())].clone();
                            boxes.push(VenueBox {
                                lat_min: mean[0] - 0.004,
                                lat_max: mean[0] + 0.004,
                                lon_min: mean[1] - 0.004,
                                lon_max: mean[1] + 0.004,
                                venue,
                            });
                        }
                        p.means.insert(s.name.clone(), mean);
                    }
                    StreamKind::Categorical { taxonomy } => {
                        let m = taxonomy.len();
                        let focus = params.categorical_focus.clamp(0.0, 1.0);
                        let mut probs = vec![(1.0 - focus) * 0.4 / m as f64; m];
                        probs[rng.below(m)] += focus;
                        probs[rng.below(m)] += (1.0 - focus) * 0.6;
                        let total: f64 = probs.iter().sum();
                        p.categorical.insert(
                            s.name.clone(),
                            taxonomy.iter().cloned().zip(probs.into_iter().map(|v| v / total)).collect(),
                        );
                    }
                    StreamKind::MultiLabel { taxonomy } => {
                        let mut picked = BTreeSet::new();
                        let want = 6.min(taxonomy.len());
                        while picked.len() < want {
                            picked.insert(rng.below(taxonomy.len()));
                        }
                        p.multi.insert(
                            s.name.clone(),
                            picked.into_iter().map(|i| (taxonomy[i].clone(), 0.6 + 0.3 * rng.uniform())).collect(),
                        );
                    }
                    StreamKind::Boolean => {
                        p.boolean.insert(s.name.clone(), 0.1 + 0.8 * rng.uniform());
                    }
                }
            }
            prototypes.push(p);
        }

        let mut user_offsets = Vec::with_capacity(params.n_users);
        for _ in 0..params.n_users {
            let mut m = BTreeMap::new();
            for s in registry.entries() {
                if let StreamKind::Continuous { arity } = s.kind {
                    let (_, spread) = stream_scale(&s.name);
                    let spread = if Some(s.name.as_str()) == registry.location() { 0.002 } else { spread };
                    m.insert(
                        s.name.clone(),
                        (0..arity).map(|_| params.user_offset_scale * spread * rng.normal()).collect(),
                    );
                }
            }
            user_offsets.push(m);
        }

        let mut periods_ms = BTreeMap::new();
        let mut noise_sigma = BTreeMap::new();
        for s in registry.entries() {
            periods_ms.insert(s.name.clone(), default_period(&s.name, &s.kind));
            if let StreamKind::Continuous { .. } = s.kind {
                let (_, spread) = stream_scale(&s.name);
                let spread = if Some(s.name.as_str()) == registry.location() { 0.001 } else { spread * 0.25 };
                noise_sigma.insert(s.name.clone(), params.noise_scale * spread);
            }
        }

        let start_ms = 1_500_000_000_000;
        let mut daily = BTreeMap::new();
        if registry.location().is_some() {
            let weathers = default_weather_taxonomy();
            let first = utc_date(start_ms).expect("valid epoch");
            for day in 0..120 {
                let date = first + chrono::Days::new(day);
                daily.insert(date, weathers[rng.below(weathers.len())].clone());
            }
        }

        WorldConfig {
            enrichment: registry.location().map(|_| GridEnrichment::new(boxes, daily)),
            registry,
            n_users: params.n_users,
            labels: params.labels.clone(),
            prototypes,
            user_offsets,
            periods_ms,
            noise_sigma,
            session_min_ms: params.session_min_ms,
            session_max_ms: params.session_max_ms,
            sessions_per_user_label: params.sessions_per_user_label,
            multi_background: params.multi_background,
            gap_ms: 60_000,
            start_ms,
            seed: params.seed,
        }
    }

    /// Builds a world from a key-value file.
    ///
    /// Scalar keys: `seed`, `users`, `labels` (list) or `n_labels`,
    /// `sessions_per_user_label`, `session_min_ms`, `session_max_ms`,
    /// `noise_scale`, `user_offset_scale`, `categorical_focus`,
    /// `multi_background`, `gap_ms`, `start_ms`, `streams` (subset of the
    /// built-in registry). Per-item overrides: `period.<stream>`,
    /// `sigma.<stream>`, `mean.<label>.<stream>`, `dist.<label>.<stream>`
    /// (`tok:p,...`), `bool.<label>.<stream>`, `offset.<user>.<stream>`.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let known_prefixes = ["period.", "sigma.", "mean.", "dist.", "bool.", "offset."];
        let known = [
            "seed",
            "users",
            "labels",
            "n_labels",
            "sessions_per_user_label",
            "session_min_ms",
            "session_max_ms",
            "noise_scale",
            "user_offset_scale",
            "categorical_focus",
            "multi_background",
            "gap_ms",
            "start_ms",
            "streams",
            "enrich",
        ];
        for k in cfg.keys() {
            if !known.contains(&k) && !known_prefixes.iter().any(|p| k.starts_with(p)) {
                return Err(Error::Config(format!("unknown world key '{k}'")));
            }
        }
        let d = WorldParams::default();
        let labels = match (cfg.get_list::<String>("labels")?, cfg.get::<usize>("n_labels")?) {
            (Some(l), _) => l,
            (None, Some(n)) => (0..n)
                .map(|i| DEFAULT_LABELS.get(i).map_or(format!("label_{i}"), |s| s.to_string()))
                .collect(),
            (None, None) => d.labels.clone(),
        };
        let params = WorldParams {
            n_users: cfg.get_or("users", d.n_users)?,
            labels,
            sessions_per_user_label: cfg.get_or("sessions_per_user_label", d.sessions_per_user_label)?,
            session_min_ms: cfg.get_or("session_min_ms", d.session_min_ms)?,
            session_max_ms: cfg.get_or("session_max_ms", d.session_max_ms)?,
            noise_scale: cfg.get_or("noise_scale", d.noise_scale)?,
            user_offset_scale: cfg.get_or("user_offset_scale", d.user_offset_scale)?,
            categorical_focus: cfg.get_or("categorical_focus", d.categorical_focus)?,
            multi_background: cfg.get_or("multi_background", d.multi_background)?,
            seed: cfg.get_or("seed", d.seed)?,
        };
        let full = StreamRegistry::default_phone();
        let registry = match cfg.get_list::<String>("streams")? {
            None => full,
            Some(names) => {
                let mut entries = Vec::new();
                for n in &names {
                    entries.push(
                        full.get(n).cloned().ok_or_else(|| Error::Config(format!("unknown stream '{n}' in 'streams'")))?,
                    );
                }
                let loc = full.location().filter(|l| names.iter().any(|n| n == l)).map(String::from);
                StreamRegistry::new(entries, loc)?
            }
        };
        let mut w = Self::randomized(registry, &params);
        if let Some(g) = cfg.get("gap_ms")? {
            w.gap_ms = g;
        }
        if let Some(s) = cfg.get("start_ms")? {
            w.start_ms = s;
        }
        if cfg.get_str("enrich") == Some("none") {
            w.enrichment = None;
        }

        let label_idx = |w: &WorldConfig, l: &str| {
            w.labels.iter().position(|x| x == l).ok_or_else(|| Error::Config(format!("unknown label '{l}'")))
        };
        let split2 = |k: &str| -> Result<(String, String)> {
            k.rsplit_once('.')
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .ok_or_else(|| Error::Config(format!("expected <label-or-user>.<stream>, got '{k}'")))
        };
        let reals = |v: &str| -> Result<Vec<f64>> {
            v.split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number '{s}': {e}"))))
                .collect()
        };
        for (stream, v) in cfg.with_prefix("period.") {
            w.periods_ms.insert(stream.to_string(), v.parse().map_err(|e| Error::Config(format!("period.{stream}: {e}")))?);
        }
        for (stream, v) in cfg.with_prefix("sigma.") {
            w.noise_sigma.insert(stream.to_string(), v.parse().map_err(|e| Error::Config(format!("sigma.{stream}: {e}")))?);
        }
        for (k, v) in cfg.with_prefix("mean.") {
            let (l, s) = split2(k)?;
            let i = label_idx(&w, &l)?;
            w.prototypes[i].means.insert(s, reals(v)?);
        }
        for (k, v) in cfg.with_prefix("dist.") {
            let (l, s) = split2(k)?;
            let i = label_idx(&w, &l)?;
            let mut dist = Vec::new();
            for item in v.split(',') {
                let (tok, p) = item
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("dist.{k}: expected tok:p, got '{item}'")))?;
                dist.push((tok.trim().to_string(), p.trim().parse().map_err(|e| Error::Config(format!("dist.{k}: {e}")))?));
            }
            w.prototypes[i].categorical.insert(s, dist);
        }
        for (k, v) in cfg.with_prefix("bool.") {
            let (l, s) = split2(k)?;
            let i = label_idx(&w, &l)?;
            w.prototypes[i].boolean.insert(s, v.parse().map_err(|e| Error::Config(format!("bool.{k}: {e}")))?);
        }
        for (k, v) in cfg.with_prefix("offset.") {
            let (u, s) = split2(k)?;
            let ui: usize = u.parse().map_err(|e| Error::Config(format!("offset.{k}: user index: {e}")))?;
            let slot = w.user_offsets.get_mut(ui).ok_or_else(|| Error::Config(format!("offset.{k}: no user {ui}")))?;
            slot.insert(s, reals(v)?);
        }
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.labels.is_empty() {
            return Err(Error::Config("world needs at least one user and one label".into()));
        }
        if self.prototypes.len() != self.labels.len() || self.user_offsets.len() != self.n_users {
            return Err(Error::Config("prototype/offset tables do not match labels/users".into()));
        }
        if self.session_min_ms < 1 || self.session_max_ms < self.session_min_ms {
            return Err(Error::Config("need 1 <= session_min_ms <= session_max_ms".into()));
        }
        for s in self.registry.entries() {
            let p = self.periods_ms.get(&s.name).copied().unwrap_or(0);
            if p < 1 {
                return Err(Error::Config(format!("stream '{}': period must be >= 1 ms", s.name)));
            }
        }
        for (label, proto) in self.labels.iter().zip(&self.prototypes) {
            for s in self.registry.entries() {
                match &s.kind {
                    StreamKind::Continuous { arity } => {
                        let m = proto.means.get(&s.name).map_or(0, Vec::len);
                        if m != *arity {
                            return Err(Error::Config(format!("label '{label}', stream '{}': mean needs {arity} values", s.name)));
                        }
                    }
                    StreamKind::Categorical { .. } => {
                        let dist = proto.categorical.get(&s.name).map(Vec::as_slice).unwrap_or(&[]);
                        let total: f64 = dist.iter().map(|(_, p)| p).sum();
                        if dist.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
                            return Err(Error::Config(format!(
                                "label '{label}', stream '{}': probabilities must be in [0,1] and sum to 1 (sum {total})",
                                s.name
                            )));
                        }
                    }
                    StreamKind::MultiLabel { .. } => {
                        if let Some(d) = proto.multi.get(&s.name) {
                            if d.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) {
                                return Err(Error::Config(format!("label '{label}', stream '{}': bad probability", s.name)));
                            }
                        }
                    }
                    StreamKind::Boolean => {
                        let p = proto.boolean.get(&s.name).copied().unwrap_or(0.5);
                        if !(0.0..=1.0).contains(&p) {
                            return Err(Error::Config(format!("label '{label}', stream '{}': bad probability", s.name)));
                        }
                    }
                }
            }
        }
        for (u, offs) in self.user_offsets.iter().enumerate() {
            for (s, v) in offs {
                if let Some(StreamKind::Continuous { arity }) = self.registry.get(s).map(|e| &e.kind) {
                    if v.len() != *arity {
                        return Err(Error::Config(format!("user {u}, stream '{s}': offset needs {arity} values")));
                    }
                }
            }
        }
        if !(0.0..=1.0).contains(&self.multi_background) {
            return Err(Error::Config("multi_background must be in [0,1]".into()));
        }
        Ok(())
    }

    pub fn user_name(i: usize) -> String {
        format!("u{}", i + 1)
    }
}

/// In-memory logs of a generated world.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GeneratedLogs {
    /// Stream name to log-file body.
    pub files: BTreeMap<String, String>,
    pub labels_log: String,
    pub enrich_cfg: Option<String>,
    pub n_sessions: usize,
}

/// Generates the world's logs in memory.
pub fn generate_logs(cfg: &WorldConfig) -> Result<GeneratedLogs> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let mut bodies: BTreeMap<String, String> =
        cfg.registry.entries().iter().map(|s| (s.name.clone(), String::new())).collect();
    let mut labels_log = String::new();
    let mut t = cfg.start_ms;
    let mut n_sessions = 0;

    for user in 0..cfg.n_users {
        let mut order: Vec<usize> =
            (0..cfg.labels.len()).flat_map(|l| std::iter::repeat_n(l, cfg.sessions_per_user_label)).collect();
        rng.shuffle(&mut order);
        for label in order {
            let span = (cfg.session_max_ms - cfg.session_min_ms) as usize;
            let len = cfg.session_min_ms + if span == 0 { 0 } else { rng.below(span + 1) as i64 };
            let (start, end) = (t, t + len);
            let _ = writeln!(labels_log, "{},{start},{end},{}", cfg.labels[label], WorldConfig::user_name(user));
            n_sessions += 1;
            let proto = &cfg.prototypes[label];
            for spec in cfg.registry.entries() {
                let period = cfg.periods_ms[&spec.name];
                let mut rt = start + rng.below(period as usize) as i64;
                let body = bodies.get_mut(&spec.name).expect("initialised");
                while rt < end {
                    let payload = sample_payload(cfg, proto, user, &spec.name, &spec.kind, &mut rng);
                    let _ = writeln!(body, "{rt}\t{}", payload.format_value());
                    rt += period;
                }
            }
            t = end + cfg.gap_ms;
        }
    }
    Ok(GeneratedLogs {
        files: bodies,
        labels_log,
        enrich_cfg: cfg.enrichment.as_ref().map(GridEnrichment::to_config_string),
        n_sessions,
    })
}

fn sample_payload(cfg: &WorldConfig, proto: &LabelPrototype, user: usize, name: &str, kind: &StreamKind, rng: &mut Rng) -> Payload {
    match kind {
        StreamKind::Continuous { .. } => {
            let sigma = cfg.noise_sigma.get(name).copied().unwrap_or(0.0);
            let offs = cfg.user_offsets[user].get(name);
            let v = proto.means[name]
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    let o = offs.and_then(|o| o.get(i)).copied().unwrap_or(0.0);
                    let noise = rng.normal();
                    m + o + sigma * noise
                })
                .collect();
            Payload::Real(v)
        }
        StreamKind::Categorical { .. } => {
            let dist = &proto.categorical[name];
            let u = rng.uniform();
            let mut acc = 0.0;
            for (tok, p) in dist {
                acc += p;
                if u < acc {
                    return Payload::Token(tok.clone());
                }
            }
            Payload::Token(dist.last().map(|d| d.0.clone()).unwrap_or_default())
        }
        StreamKind::MultiLabel { taxonomy } => {
            let special: BTreeMap<&str, f64> =
                proto.multi.get(name).map(|v| v.iter().map(|(t, p)| (t.as_str(), *p)).collect()).unwrap_or_default();
            let mut toks = Vec::new();
            for tok in taxonomy {
                let p = special.get(tok.as_str()).copied().unwrap_or(cfg.multi_background);
                if rng.uniform() < p {
                    toks.push(tok.clone());
                }
            }
            Payload::Tokens(toks)
        }
        StreamKind::Boolean => Payload::Bool(rng.uniform() < proto.boolean.get(name).copied().unwrap_or(0.5)),
    }
}

/// Writes the world as an ingest-compatible log directory (plus
/// `enrich.cfg` when the registry has a location stream).
pub fn generate(cfg: &WorldConfig, out: &Path) -> Result<GeneratedLogs> {
    let logs = generate_logs(cfg)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for (name, body) in &logs.files {
        let p = out.join(format!("{name}.log"));
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    let p = out.join(LABEL_LOG);
    fs::write(&p, &logs.labels_log).map_err(|e| Error::io(&p, e))?;
    if let Some(e) = &logs.enrich_cfg {
        let p = out.join(ENRICH_FILE);
        fs::write(&p, e).map_err(|err| Error::io(&p, err))?;
    }
    Ok(logs)
}

/// Generates the world and ingests it in memory, as `generate` followed by
/// ingestion of the written directory would.
pub fn world_dataset(cfg: &WorldConfig) -> Result<Dataset<f64>> {
    let logs = generate_logs(cfg)?;
    let streams = logs.files.into_iter().map(|(name, body)| (name.clone(), PathBuf::from(format!("{name}.log")), body)).collect();
    let parsed = parse_log_texts(&cfg.registry, streams, Some((PathBuf::from(LABEL_LOG), logs.labels_log)))?;
    let provider = cfg.enrichment.clone().unwrap_or_default();
    dataset_from_logs(&parsed, &cfg.registry, &provider, DEFAULT_HORIZON_MS)
}

/// First calendar day covered by the world's timeline.
pub fn first_day(cfg: &WorldConfig) -> Option<NaiveDate> {
    utc_date(cfg.start_ms)
}
