//! Stream registry: which sensor streams exist and how each is encoded.

use std::collections::BTreeSet;

use crate::dataset::{Encoding, FeatureSchema};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum StreamKind {
    Continuous { arity: usize },
    Categorical { taxonomy: Vec<String> },
    MultiLabel { taxonomy: Vec<String> },
    Boolean,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Real(Vec<f64>),
    Token(String),
    Tokens(Vec<String>),
    Bool(bool),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamSpec {
    pub name: String,
    pub kind: StreamKind,
    pub default: Payload,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamRegistry {
    entries: Vec<StreamSpec>,
    /// Stream whose `(lat, lon)` readings feed the enrichment provider.
    location: Option<String>,
}

/// Group names of the enrichment-derived one-hot blocks.
pub const VENUE_GROUP: &str = "venue";
pub const WEATHER_GROUP: &str = "weather";

impl StreamRegistry {
    pub fn new(entries: Vec<StreamSpec>, location: Option<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::invalid(format!("duplicate stream '{}'", e.name)));
            }
            if e.name == VENUE_GROUP || e.name == WEATHER_GROUP {
                return Err(Error::invalid(format!("stream name '{}' is reserved", e.name)));
            }
            match &e.kind {
                StreamKind::Categorical { taxonomy } | StreamKind::MultiLabel { taxonomy } => {
                    if taxonomy.is_empty() {
                        return Err(Error::invalid(format!("stream '{}' has an empty taxonomy", e.name)));
                    }
                    let uniq: BTreeSet<_> = taxonomy.iter().collect();
                    if uniq.len() != taxonomy.len() {
                        return Err(Error::invalid(format!("stream '{}' taxonomy has duplicates", e.name)));
                    }
                }
                StreamKind::Continuous { arity } if *arity == 0 => {
                    return Err(Error::invalid(format!("stream '{}' has zero arity", e.name)));
                }
                _ => {}
            }
            e.kind.check(&e.default).map_err(|m| Error::invalid(format!("stream '{}' default: {m}", e.name)))?;
        }
        if let Some(loc) = &location {
            match entries.iter().find(|e| &e.name == loc) {
                Some(StreamSpec { kind: StreamKind::Continuous { arity: 2 }, .. }) => {}
                _ => return Err(Error::invalid(format!("location stream '{loc}' must be continuous with arity 2"))),
            }
        }
        Ok(StreamRegistry { entries, location })
    }

    pub fn entries(&self) -> &[StreamSpec] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&StreamSpec> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn location(&self) -> Option<&str> {
        self.location.as_deref()
    }

    /// Column layout: every stream in registry order, then (when a location
    /// stream exists) the venue and weather one-hot groups.
    pub fn schema(&self, venue_taxonomy: &[String], weather_taxonomy: &[String]) -> Result<FeatureSchema> {
        let mut schema = FeatureSchema::new();
        for e in &self.entries {
            let encoding = match &e.kind {
                StreamKind::Continuous { arity } => Encoding::Passthrough(*arity),
                StreamKind::Categorical { taxonomy } => Encoding::OneHot(taxonomy.clone()),
                StreamKind::MultiLabel { taxonomy } => Encoding::MultiHot(taxonomy.clone()),
                StreamKind::Boolean => Encoding::Boolean,
            };
            let default = super::encode::encode_payload(&encoding, &e.default)?;
            schema.push(e.name.clone(), encoding, default)?;
        }
        if self.location.is_some() {
            schema.push(VENUE_GROUP, Encoding::OneHot(venue_taxonomy.to_vec()), vec![0.0; venue_taxonomy.len()])?;
            schema.push(WEATHER_GROUP, Encoding::OneHot(weather_taxonomy.to_vec()), vec![0.0; weather_taxonomy.len()])?;
        }
        Ok(schema)
    }

    /// Built-in registry covering the phone's physical and virtual sensors.
    ///
    /// Together with [`super::enrich::default_venue_taxonomy`] and
    /// [`super::enrich::default_weather_taxonomy`] it encodes to 1331 columns.
    pub fn default_phone() -> Self {
        fn cat(name: &str, tax: &[&str]) -> StreamSpec {
            StreamSpec {
                name: name.into(),
                kind: StreamKind::Categorical { taxonomy: tax.iter().map(|s| s.to_string()).collect() },
                default: Payload::Token(String::new()),
            }
        }
        fn cat_n(name: &str, prefix: &str, n: usize) -> StreamSpec {
            StreamSpec {
                name: name.into(),
                kind: StreamKind::Categorical { taxonomy: numbered(prefix, n) },
                default: Payload::Token(String::new()),
            }
        }
        fn multi(name: &str, prefix: &str, n: usize) -> StreamSpec {
            StreamSpec {
                name: name.into(),
                kind: StreamKind::MultiLabel { taxonomy: numbered(prefix, n) },
                default: Payload::Tokens(Vec::new()),
            }
        }
        fn cont(name: &str, default: &[f64]) -> StreamSpec {
            StreamSpec {
                name: name.into(),
                kind: StreamKind::Continuous { arity: default.len() },
                default: Payload::Real(default.to_vec()),
            }
        }
        fn boolean(name: &str) -> StreamSpec {
            StreamSpec { name: name.into(), kind: StreamKind::Boolean, default: Payload::Bool(false) }
        }

        let entries = vec![
            cat("gait", &["still", "walking", "running", "on_bicycle", "in_vehicle", "tilting", "unknown"]),
            cat("time_of_day", &["morning", "afternoon", "evening", "night"]),
            cat("day_type", &["weekday", "weekend"]),
            multi("running_apps", "app", 600),
            cat("ringer_mode", &["normal", "vibrate", "silent"]),
            cont("audio_volume", &[0.0, 0.0, 0.0]),
            boolean("headset"),
            cont("battery", &[0.0]),
            cat("plugged", &["unplugged", "ac", "usb", "wireless"]),
            multi("bt_devices", "bt", 200),
            boolean("display_on"),
            cat("rotation", &["r0", "r90", "r180", "r270"]),
            cont("gps", &[0.0, 0.0]),
            boolean("wifi_connected"),
            cat_n("wifi_ap", "ap", 272),
            cont("accelerometer", &[0.0, 0.0, 0.0]),
            cont("gyroscope", &[0.0, 0.0, 0.0]),
            cont("light", &[0.0]),
            multi("proximity", "peer", 200),
            boolean("camera"),
        ];
        StreamRegistry::new(entries, Some("gps".into())).expect("built-in registry is valid")
    }
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}_{i:03}")).collect()
}

impl StreamKind {
    /// Checks that a payload has the kind and arity this stream expects.
    pub fn check(&self, p: &Payload) -> std::result::Result<(), String> {
        match (self, p) {
            (StreamKind::Continuous { arity }, Payload::Real(v)) if v.len() == *arity => Ok(()),
            (StreamKind::Continuous { arity }, Payload::Real(v)) => {
                Err(format!("expected {arity} values, got {}", v.len()))
            }
            (StreamKind::Categorical { .. }, Payload::Token(_)) => Ok(()),
            (StreamKind::MultiLabel { .. }, Payload::Tokens(_)) => Ok(()),
            (StreamKind::Boolean, Payload::Bool(_)) => Ok(()),
            (k, p) => Err(format!("payload {p:?} does not match stream kind {}", k.name())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StreamKind::Continuous { .. } => "continuous",
            StreamKind::Categorical { .. } => "categorical",
            StreamKind::MultiLabel { .. } => "multi-label",
            StreamKind::Boolean => "boolean",
        }
    }

    /// Parses the value part of a log line.
    pub fn parse_value(&self, s: &str) -> std::result::Result<Payload, String> {
        match self {
            StreamKind::Continuous { arity } => {
                let vals = s
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}")))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if vals.len() != *arity {
                    return Err(format!("expected {arity} values, got {}", vals.len()));
                }
                if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
                    return Err(format!("non-finite value {v}"));
                }
                Ok(Payload::Real(vals))
            }
            StreamKind::Categorical { .. } => {
                let t = s.trim();
                if t.is_empty() || t.contains(';') {
                    return Err(format!("bad token '{s}'"));
                }
                Ok(Payload::Token(t.to_string()))
            }
            StreamKind::MultiLabel { .. } => Ok(Payload::Tokens(
                s.split(';').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect(),
            )),
            StreamKind::Boolean => match s.trim() {
                "0" => Ok(Payload::Bool(false)),
                "1" => Ok(Payload::Bool(true)),
                other => Err(format!("expected 0 or 1, got '{other}'")),
            },
        }
    }
}

impl Payload {
    /// Log-file representation of the value part.
    pub fn format_value(&self) -> String {
        match self {
            Payload::Real(v) => v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(","),
            Payload::Token(t) => t.clone(),
            Payload::Tokens(ts) => ts.join(";"),
            Payload::Bool(b) => if *b { "1" } else { "0" }.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::enrich::{default_venue_taxonomy, default_weather_taxonomy};

    #[test]
    fn default_registry_is_1331_wide() {
        let reg = StreamRegistry::default_phone();
        let schema = reg.schema(&default_venue_taxonomy(), &default_weather_taxonomy()).unwrap();
        assert_eq!(schema.total_width(), 1331);
        assert_eq!(schema.groups().last().unwrap().stream, WEATHER_GROUP);
    }

    #[test]
    fn rejects_bad_registries() {
        let s = |name: &str, kind| StreamSpec { name: name.into(), kind, default: Payload::Bool(false) };
        assert!(StreamRegistry::new(vec![s("a", StreamKind::Boolean), s("a", StreamKind::Boolean)], None).is_err());
        let empty_tax = StreamSpec {
            name: "c".into(),
            kind: StreamKind::Categorical { taxonomy: vec![] },
            default: Payload::Token(String::new()),
        };
        assert!(StreamRegistry::new(vec![empty_tax], None).is_err());
        assert!(StreamRegistry::new(vec![s("a", StreamKind::Boolean)], Some("a".into())).is_err());
        let bad_default = StreamSpec {
            name: "acc".into(),
            kind: StreamKind::Continuous { arity: 3 },
            default: Payload::Real(vec![0.0]),
        };
        assert!(StreamRegistry::new(vec![bad_default], None).is_err());
    }

    #[test]
    fn parse_values() {
        let acc = StreamKind::Continuous { arity: 3 };
        assert_eq!(acc.parse_value("0.1,9.8,0").unwrap(), Payload::Real(vec![0.1, 9.8, 0.0]));
        assert!(acc.parse_value("0.1,9.8").is_err());
        assert!(acc.parse_value("a,b,c").is_err());
        let multi = StreamKind::MultiLabel { taxonomy: vec!["a".into()] };
        assert_eq!(multi.parse_value("a;b").unwrap(), Payload::Tokens(vec!["a".into(), "b".into()]));
        assert_eq!(multi.parse_value("").unwrap(), Payload::Tokens(vec![]));
        assert!(StreamKind::Boolean.parse_value("2").is_err());
        let p = Payload::Real(vec![0.1, -2.5]);
        assert_eq!(StreamKind::Continuous { arity: 2 }.parse_value(&p.format_value()).unwrap(), p);
    }
}
