//! Log directory to dataset.

use std::collections::HashMap;
use std::path::Path;

use super::enrich::EnrichmentProvider;
use super::encode::encode_slot_into;
use super::logs::{parse_logs, ParsedLogs};
use super::registry::{Payload, StreamRegistry, VENUE_GROUP, WEATHER_GROUP};
use super::slots::{fetch_nearest, slot_sessions, DEFAULT_HORIZON_MS};
use crate::dataset::{Dataset, Provenance};
use crate::error::Result;
use crate::matrix::Matrix;

/// Parses a log directory and encodes one row per slot, in session order
/// then slot order.
pub fn build_dataset(dir: &Path, registry: &StreamRegistry, provider: &dyn EnrichmentProvider) -> Result<Dataset<f64>> {
    let logs = parse_logs(dir, registry)?;
    dataset_from_logs(&logs, registry, provider, DEFAULT_HORIZON_MS)
}

pub fn dataset_from_logs(
    logs: &ParsedLogs,
    registry: &StreamRegistry,
    provider: &dyn EnrichmentProvider,
    horizon: i64,
) -> Result<Dataset<f64>> {
    let schema = registry.schema(provider.venue_taxonomy(), provider.weather_taxonomy())?;
    let slots = slot_sessions(&logs.sessions);
    let width = schema.total_width();
    let mut data = vec![0.0; slots.len() * width];
    let empty = Vec::new();

    for (slot, row) in slots.iter().zip(data.chunks_mut(width.max(1))) {
        let mut payloads: HashMap<&str, &Payload> = HashMap::new();
        for spec in registry.entries() {
            let records = logs.streams.get(&spec.name).unwrap_or(&empty);
            if let Some(r) = fetch_nearest(records, slot.start, horizon) {
                payloads.insert(spec.name.as_str(), &r.payload);
            }
        }
        let mut venue = None;
        let mut weather = None;
        if let Some(loc) = registry.location() {
            if let Some(Payload::Real(ll)) = payloads.get(loc) {
                let (lat, lon) = (ll[0], ll[1]);
                venue = provider.venue_category(lat, lon).map(Payload::Token);
                weather = provider.weather(lat, lon, slot.start).map(Payload::Token);
            }
        }
        if let Some(v) = &venue {
            payloads.insert(VENUE_GROUP, v);
        }
        if let Some(w) = &weather {
            payloads.insert(WEATHER_GROUP, w);
        }
        encode_slot_into(&payloads, &schema, row)?;
    }

    let x = Matrix::new(slots.len(), width, data)?;
    Dataset::new(
        x,
        slots.iter().map(|s| s.label).collect(),
        slots.iter().map(|s| s.user).collect(),
        logs.labels.clone(),
        logs.users.clone(),
        schema,
        Provenance::Ingested,
    )
}
