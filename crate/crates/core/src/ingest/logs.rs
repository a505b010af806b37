//! Log-directory reader: one `<stream>.log` per stream plus `labels.log`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::registry::{Payload, StreamRegistry};
use crate::dataset::{LabelId, NameTable, UserId};
use crate::error::{Error, Result};

pub const LABEL_LOG: &str = "labels.log";

#[derive(Clone, Debug, PartialEq)]
pub struct SensorRecord {
    pub t: i64,
    pub payload: Payload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActivitySession {
    pub label: LabelId,
    pub user: UserId,
    pub start: i64,
    pub end: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MalformedLine {
    pub file: PathBuf,
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct ParsedLogs {
    /// Time-sorted records per stream name.
    pub streams: BTreeMap<String, Vec<SensorRecord>>,
    /// In label-log order.
    pub sessions: Vec<ActivitySession>,
    pub labels: NameTable,
    pub users: NameTable,
    /// Sensor-log lines that were skipped.
    pub malformed: Vec<MalformedLine>,
}

/// Reads a log directory. Files other than `*.log` are ignored.
pub fn parse_logs(dir: &Path, registry: &StreamRegistry) -> Result<ParsedLogs> {
    let mut stream_files = Vec::new();
    let mut unknown = Vec::new();
    let mut label_file = None;
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("log") || !path.is_file() {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if path.file_name().and_then(|s| s.to_str()) == Some(LABEL_LOG) {
            label_file = Some(path);
        } else if registry.get(&stem).is_some() {
            stream_files.push((stem, path));
        } else {
            unknown.push(stem);
        }
    }
    if !unknown.is_empty() {
        unknown.sort();
        return Err(Error::UnknownStream(unknown));
    }
    stream_files.sort();

    let mut streams = Vec::with_capacity(stream_files.len());
    for (name, path) in stream_files {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        streams.push((name, path, text));
    }
    let labels = match label_file {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Some((path, text))
        }
        None => None,
    };
    parse_log_texts(registry, streams, labels)
}

/// Parses log bodies already in memory. Each stream entry is
/// `(stream name, path used in diagnostics, body)`.
pub fn parse_log_texts(
    registry: &StreamRegistry,
    streams: Vec<(String, PathBuf, String)>,
    labels: Option<(PathBuf, String)>,
) -> Result<ParsedLogs> {
    let mut out = ParsedLogs::default();
    let mut unknown: Vec<String> = streams.iter().filter(|s| registry.get(&s.0).is_none()).map(|s| s.0.clone()).collect();
    if !unknown.is_empty() {
        unknown.sort();
        return Err(Error::UnknownStream(unknown));
    }
    for (name, path, text) in streams {
        let spec = registry.get(&name).expect("checked above");
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed = line
                .split_once('\t')
                .ok_or_else(|| "missing tab separator".to_string())
                .and_then(|(t, v)| {
                    let t: i64 = t.trim().parse().map_err(|e| format!("bad timestamp '{t}': {e}"))?;
                    if t < 0 {
                        return Err(format!("negative timestamp {t}"));
                    }
                    Ok(SensorRecord { t, payload: spec.kind.parse_value(v)? })
                });
            match parsed {
                Ok(r) => records.push(r),
                Err(reason) => out.malformed.push(MalformedLine { file: path.clone(), line: i + 1, reason }),
            }
        }
        records.sort_by_key(|r| r.t);
        out.streams.insert(name, records);
    }

    if let Some((path, text)) = labels {
        let raw = parse_label_log(&text).map_err(|(line, msg)| Error::Parse { path: path.clone(), line, msg })?;
        out.labels = NameTable::from_names(raw.iter().map(|r| r.0.clone()));
        out.users = NameTable::from_names(raw.iter().map(|r| r.3.clone()));
        out.sessions = raw
            .iter()
            .map(|(label, start, end, user)| ActivitySession {
                label: LabelId(out.labels.id_of(label).expect("interned")),
                user: UserId(out.users.id_of(user).expect("interned")),
                start: *start,
                end: *end,
            })
            .collect();
    }
    Ok(out)
}

type RawSession = (String, i64, i64, String);

fn parse_label_log(text: &str) -> std::result::Result<Vec<RawSession>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err((lineno, format!("expected label,start_ms,end_ms,user_id; got {} fields", f.len())));
        }
        let ts = |s: &str| s.parse::<i64>().map_err(|e| (lineno, format!("bad timestamp '{s}': {e}")));
        let (start, end) = (ts(f[1])?, ts(f[2])?);
        if f[0].is_empty() || f[3].is_empty() {
            return Err((lineno, "empty label or user".into()));
        }
        if start < 0 || end <= start {
            return Err((lineno, format!("session must satisfy 0 <= start < end, got {start}..{end}")));
        }
        out.push((f[0].to_string(), start, end, f[3].to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::registry::{StreamKind, StreamSpec};

    fn registry() -> StreamRegistry {
        StreamRegistry::new(
            vec![StreamSpec {
                name: "battery".into(),
                kind: StreamKind::Continuous { arity: 1 },
                default: Payload::Real(vec![0.0]),
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let p = parse_logs(dir.path(), &registry()).unwrap();
        assert!(p.streams.is_empty());
        assert!(p.sessions.is_empty());
    }

    #[test]
    fn sorts_records_and_reads_labels() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("battery.log"), "3000\t0.7\n1000\t0.9\n2000\t0.8\n").unwrap();
        fs::write(dir.path().join(LABEL_LOG), "studying,1000,4500,u1\n").unwrap();
        let p = parse_logs(dir.path(), &registry()).unwrap();
        let ts: Vec<i64> = p.streams["battery"].iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![1000, 2000, 3000]);
        assert_eq!(p.sessions.len(), 1);
        let s = p.sessions[0];
        assert_eq!(p.labels.name(s.label.0), "studying");
        assert_eq!(p.users.name(s.user.0), "u1");
        assert_eq!((s.start, s.end), (1000, 4500));
    }

    #[test]
    fn malformed_sensor_lines_are_counted() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("battery.log"), "1000\t0.9\nnot a line\n2000\tx\n").unwrap();
        let p = parse_logs(dir.path(), &registry()).unwrap();
        assert_eq!(p.streams["battery"].len(), 1);
        assert_eq!(p.malformed.iter().map(|m| m.line).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn unknown_stream_and_bad_label_line() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("sonar.log"), "1\t1\n").unwrap();
        let err = parse_logs(dir.path(), &registry()).unwrap_err();
        assert!(err.to_string().contains("sonar"));

        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(LABEL_LOG), "a,1,2,u\nb,5,x,u\n").unwrap();
        match parse_logs(dir.path(), &registry()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }
}
