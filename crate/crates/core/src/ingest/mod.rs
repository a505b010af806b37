//! Sensor logs to labeled feature vectors.
//!
//! Each activity session is cut into one-second slots; for every slot the
//! reading nearest to the slot start is taken from each stream (within a
//! staleness horizon), location readings are enriched with venue and
//! weather tokens, and categorical values are one-hot encoded next to the
//! continuous ones.

pub mod build;
pub mod csv;
pub mod encode;
pub mod enrich;
pub mod logs;
pub mod registry;
pub mod slots;

pub use build::{build_dataset, dataset_from_logs};
pub use csv::{load_csv, save_csv};
pub use encode::{encode_payload, encode_slot};
pub use enrich::{EnrichmentProvider, GridEnrichment};
pub use logs::{parse_log_texts, parse_logs, ActivitySession, ParsedLogs, SensorRecord};
pub use registry::{Payload, StreamKind, StreamRegistry, StreamSpec};
pub use slots::{fetch_nearest, slot_sessions, Slot, DEFAULT_HORIZON_MS};
