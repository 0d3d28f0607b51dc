//! Output files with a provenance header: a `provenance` field in JSON, a
//! first record in JSONL, and `# ` comment lines ahead of CSV headers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::args::Command;

/// Tool name, version, seed and the fully resolved command configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: Value,
}

impl Provenance {
    pub fn new(command: &Command) -> Self {
        let mut config = serde_json::to_value(command).expect("arguments serialize");
        if let Value::Object(map) = &mut config {
            map.remove("command");
        }
        Provenance {
            tool: "bridge-stein",
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            seed: command.common().seed,
            config,
        }
    }

    fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("# tool: {} {}", self.tool, self.version),
            format!("# command: {}", self.command),
            format!("# seed: {}", self.seed),
            format!("# config: {}", serde_json::to_string(&self.config).expect("json value serializes")),
        ]
    }
}

pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// A single JSON object: the fields of `result` plus `provenance`.
pub fn write_json(out: &mut dyn Write, provenance: &Provenance, result: &impl Serialize) -> io::Result<()> {
    let mut map = match serde_json::to_value(result)? {
        Value::Object(map) => map,
        other => {
            let mut map = Map::new();
            map.insert("result".into(), other);
            map
        }
    };
    map.insert("provenance".into(), serde_json::to_value(provenance)?);
    serde_json::to_writer_pretty(&mut *out, &Value::Object(map))?;
    writeln!(out)?;
    out.flush()
}

/// One JSON record per line, after a provenance record.
pub fn write_jsonl<T: Serialize>(
    out: &mut dyn Write,
    provenance: &Provenance,
    records: impl IntoIterator<Item = T>,
) -> io::Result<()> {
    serde_json::to_writer(&mut *out, &json!({ "provenance": provenance }))?;
    writeln!(out)?;
    for record in records {
        serde_json::to_writer(&mut *out, &record)?;
        writeln!(out)?;
    }
    out.flush()
}

/// A CSV table after `# ` provenance comment lines.
pub fn write_csv<T: Serialize>(
    out: &mut dyn Write,
    provenance: &Provenance,
    records: impl IntoIterator<Item = T>,
) -> io::Result<()> {
    for line in provenance.comment_lines() {
        writeln!(out, "{line}")?;
    }
    let mut writer = csv::Writer::from_writer(&mut *out);
    for record in records {
        writer.serialize(record).map_err(io::Error::other)?;
    }
    writer.flush()?;
    drop(writer);
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::Cli;
    use clap::Parser;

    fn provenance() -> Provenance {
        Provenance::new(&Cli::parse_from(["bridge-stein", "bound", "--variant", "scheme", "--n", "10"]).command)
    }

    #[test]
    fn provenance_echoes_resolved_defaults() {
        let p = provenance();
        assert_eq!(p.command, "bound");
        assert_eq!(p.seed, 0);
        assert_eq!(p.config["variant"], "scheme");
        assert_eq!(p.config["samples"], 4000);
        assert!(p.config.get("command").is_none());
    }

    #[test]
    fn json_has_provenance_field() {
        let mut buf = Vec::new();
        write_json(&mut buf, &provenance(), &json!({ "value": 1.5 })).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["value"], 1.5);
        assert_eq!(v["provenance"]["tool"], "bridge-stein");
    }

    #[test]
    fn csv_starts_with_comments() {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            x: u64,
        }
        let mut buf = Vec::new();
        write_csv(&mut buf, &provenance(), [Row { t: 0.5, x: 2 }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[..4].iter().all(|l| l.starts_with("# ")));
        assert_eq!(lines[4..], ["t,x", "0.5,2"]);
    }

    #[test]
    fn jsonl_leads_with_provenance() {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &provenance(), [json!({ "a": 1 }), json!({ "a": 2 })]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0]["provenance"].is_object());
        assert_eq!(lines[2]["a"], 2);
    }
}
