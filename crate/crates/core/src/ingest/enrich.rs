//! Categorical enrichment of location readings (venue category, weather).

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDate};

use crate::error::{Error, Result};

/// Source of venue and weather tokens for a location reading.
///
/// Implementations must be pure: the same query always yields the same
/// answer, so ingestion stays reproducible.
pub trait EnrichmentProvider {
    fn venue_taxonomy(&self) -> &[String];
    fn weather_taxonomy(&self) -> &[String];
    fn venue_category(&self, lat: f64, lon: f64) -> Option<String>;
    fn weather(&self, lat: f64, lon: f64, t_ms: i64) -> Option<String>;
}

pub fn default_venue_taxonomy() -> Vec<String> {
    [
        "arts_entertainment",
        "college_university",
        "event",
        "food",
        "nightlife",
        "outdoors_recreation",
        "professional",
        "residence",
        "shop_service",
        "travel_transport",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn default_weather_taxonomy() -> Vec<String> {
    ["clear", "clouds", "drizzle", "rain", "thunderstorm", "snow", "mist", "fog"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VenueBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    pub venue: String,
}

/// Offline provider backed by a lat/lon box table and a per-day weather
/// table. The first box containing a point wins.
#[derive(Clone, Debug, PartialEq)]
pub struct GridEnrichment {
    venues: Vec<String>,
    weathers: Vec<String>,
    boxes: Vec<VenueBox>,
    daily: BTreeMap<NaiveDate, String>,
}

impl Default for GridEnrichment {
    fn default() -> Self {
        GridEnrichment {
            venues: default_venue_taxonomy(),
            weathers: default_weather_taxonomy(),
            boxes: Vec::new(),
            daily: BTreeMap::new(),
        }
    }
}

impl GridEnrichment {
    pub fn new(boxes: Vec<VenueBox>, daily: BTreeMap<NaiveDate, String>) -> Self {
        GridEnrichment { boxes, daily, ..Default::default() }
    }

    pub fn boxes(&self) -> &[VenueBox] {
        &self.boxes
    }

    pub fn daily(&self) -> &BTreeMap<NaiveDate, String> {
        &self.daily
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|(line, msg)| Error::Parse { path: path.to_path_buf(), line, msg })
    }

    /// Parses `lat_min,lat_max,lon_min,lon_max,venue` and `date,weather`
    /// rows. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut boxes = Vec::new();
        let mut daily = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            match fields.len() {
                5 => {
                    let num = |s: &str| s.parse::<f64>().map_err(|e| (lineno, format!("bad coordinate '{s}': {e}")));
                    boxes.push(VenueBox {
                        lat_min: num(fields[0])?,
                        lat_max: num(fields[1])?,
                        lon_min: num(fields[2])?,
                        lon_max: num(fields[3])?,
                        venue: fields[4].to_string(),
                    });
                }
                2 => {
                    let date = NaiveDate::parse_from_str(fields[0], "%Y-%m-%d")
                        .map_err(|e| (lineno, format!("bad date '{}': {e}", fields[0])))?;
                    daily.insert(date, fields[1].to_string());
                }
                n => return Err((lineno, format!("expected 5 (venue box) or 2 (weather) fields, got {n}"))),
            }
        }
        Ok(GridEnrichment::new(boxes, daily))
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for b in &self.boxes {
            out.push_str(&format!("{},{},{},{},{}\n", b.lat_min, b.lat_max, b.lon_min, b.lon_max, b.venue));
        }
        for (d, w) in &self.daily {
            out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), w));
        }
        out
    }
}

/// UTC calendar date of a millisecond timestamp.
pub fn utc_date(t_ms: i64) -> Option<NaiveDate> {
    DateTime::from_timestamp_millis(t_ms).map(|dt| dt.date_naive())
}

impl EnrichmentProvider for GridEnrichment {
    fn venue_taxonomy(&self) -> &[String] {
        &self.venues
    }

    fn weather_taxonomy(&self) -> &[String] {
        &self.weathers
    }

    fn venue_category(&self, lat: f64, lon: f64) -> Option<String> {
        self.boxes
            .iter()
            .find(|b| lat >= b.lat_min && lat <= b.lat_max && lon >= b.lon_min && lon <= b.lon_max)
            .map(|b| b.venue.clone())
    }

    fn weather(&self, _lat: f64, _lon: f64, t_ms: i64) -> Option<String> {
        utc_date(t_ms).and_then(|d| self.daily.get(&d).cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = "# venues\n43.70,43.72,10.40,10.42,college_university\n43.0,44.0,10.0,11.0,residence\n2017-07-14,rain\n";

    #[test]
    fn parses_and_answers_queries() {
        let g = GridEnrichment::parse(CFG).unwrap();
        assert_eq!(g.venue_category(43.71, 10.41).as_deref(), Some("college_university"));
        assert_eq!(g.venue_category(43.5, 10.5).as_deref(), Some("residence"));
        assert_eq!(g.venue_category(0.0, 0.0), None);
        // 2017-07-14T12:00:00Z
        assert_eq!(g.weather(0.0, 0.0, 1_500_033_600_000).as_deref(), Some("rain"));
        assert_eq!(g.weather(0.0, 0.0, 0), None);
        assert_eq!(GridEnrichment::parse(&g.to_config_string()).unwrap(), g);
    }

    #[test]
    fn reports_bad_lines() {
        assert_eq!(GridEnrichment::parse("1,2,3\n").unwrap_err().0, 1);
        assert_eq!(GridEnrichment::parse("\n2017-13-01,rain\n").unwrap_err().0, 2);
    }
}
