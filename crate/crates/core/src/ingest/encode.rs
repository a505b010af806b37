//! Slot encoding: payloads to a fixed-width real vector.

use std::collections::HashMap;

use super::registry::Payload;
use crate::dataset::{Encoding, FeatureSchema};
use crate::error::{Error, Result};

/// Encodes one payload into its group's columns.
///
/// Tokens outside the taxonomy encode as all zeros.
pub fn encode_payload(encoding: &Encoding, payload: &Payload) -> Result<Vec<f64>> {
    match (encoding, payload) {
        (Encoding::Passthrough(arity), Payload::Real(v)) => {
            if v.len() != *arity {
                return Err(Error::invalid(format!("arity mismatch: expected {arity}, got {}", v.len())));
            }
            Ok(v.clone())
        }
        (Encoding::OneHot(tax), Payload::Token(t)) => {
            let mut out = vec![0.0; tax.len()];
            if let Some(i) = tax.iter().position(|x| x == t) {
                out[i] = 1.0;
            }
            Ok(out)
        }
        (Encoding::MultiHot(tax), Payload::Tokens(ts)) => {
            let mut out = vec![0.0; tax.len()];
            for t in ts {
                if let Some(i) = tax.iter().position(|x| x == t) {
                    out[i] = 1.0;
                }
            }
            Ok(out)
        }
        (Encoding::Boolean, Payload::Bool(b)) => Ok(vec![if *b { 1.0 } else { 0.0 }]),
        (e, p) => Err(Error::invalid(format!("payload {p:?} does not fit encoding {e:?}"))),
    }
}

/// Encodes one slot. `payloads` maps group names to the fetched payload;
/// groups without an entry take their default encoding.
pub fn encode_slot(payloads: &HashMap<&str, &Payload>, schema: &FeatureSchema) -> Result<Vec<f64>> {
    let mut row = vec![0.0; schema.total_width()];
    encode_slot_into(payloads, schema, &mut row)?;
    Ok(row)
}

pub(crate) fn encode_slot_into(payloads: &HashMap<&str, &Payload>, schema: &FeatureSchema, row: &mut [f64]) -> Result<()> {
    for g in schema.groups() {
        let dst = &mut row[g.offset..g.offset + g.width];
        match payloads.get(g.stream.as_str()) {
            Some(p) => {
                let enc = encode_payload(&g.encoding, p).map_err(|e| Error::invalid(format!("group '{}': {e}", g.stream)))?;
                dst.copy_from_slice(&enc);
            }
            None => dst.copy_from_slice(&g.default),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> FeatureSchema {
        let mut s = FeatureSchema::new();
        s.push("accelerometer", Encoding::Passthrough(3), vec![0.0; 3]).unwrap();
        s.push("weather", Encoding::OneHot(vec!["clear".into(), "rain".into(), "snow".into()]), vec![0.0; 3]).unwrap();
        s.push("venue", Encoding::OneHot(vec!["food".into(), "shop".into()]), vec![0.0; 2]).unwrap();
        s.push("apps", Encoding::MultiHot(vec!["a".into(), "b".into(), "c".into()]), vec![0.0; 3]).unwrap();
        s.push("battery", Encoding::Passthrough(1), vec![0.5]).unwrap();
        s
    }

    #[test]
    fn encodes_each_group_kind() {
        let acc = Payload::Real(vec![0.1, 9.8, 0.0]);
        let rain = Payload::Token("rain".into());
        let venue = Payload::Token("museum".into());
        let apps = Payload::Tokens(vec!["c".into(), "a".into(), "zzz".into()]);
        let map: HashMap<&str, &Payload> =
            [("accelerometer", &acc), ("weather", &rain), ("venue", &venue), ("apps", &apps)].into_iter().collect();
        let row = encode_slot(&map, &schema()).unwrap();
        assert_eq!(row, vec![0.1, 9.8, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.5]);
    }

    #[test]
    fn missing_payload_uses_defaults() {
        let row = encode_slot(&HashMap::new(), &schema()).unwrap();
        assert_eq!(&row[..11], &[0.0; 11]);
        assert_eq!(row[11], 0.5);
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let bad = Payload::Real(vec![1.0]);
        let map: HashMap<&str, &Payload> = [("accelerometer", &bad)].into_iter().collect();
        assert!(encode_slot(&map, &schema()).is_err());
    }
}
