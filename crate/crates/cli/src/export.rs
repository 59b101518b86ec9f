//! Report persistence as JSON lines or CSV, and the matching readers.

use std::io::{BufRead, Read, Write};

use minentlab::BoundReport;

use crate::config::Format;
use crate::CliError;

pub const CSV_HEADER: [&str; 8] = ["name", "lhs", "rhs", "slack", "pass", "instance", "seed", "config_hash"];

pub fn write_reports<W: Write>(reports: &[BoundReport], format: Format, mut out: W) -> Result<(), CliError> {
    match format {
        Format::Jsonl => {
            for r in reports {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if reports.is_empty() {
                w.write_record(CSV_HEADER)?;
            }
            for r in reports {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn read_reports<R: Read + BufRead>(input: R, format: Format) -> Result<Vec<BoundReport>, CliError> {
    match format {
        Format::Jsonl => input
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
            .map(|l| Ok(serde_json::from_str(&l?)?))
            .collect(),
        Format::Csv => {
            let mut r = csv::Reader::from_reader(input);
            let header = r.headers()?.clone();
            if header.iter().ne(CSV_HEADER) {
                return Err(CliError::Usage(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
            }
            r.deserialize().map(|rec| Ok(rec?)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<BoundReport> {
        vec![
            BoundReport::inequality("fano", 0.811_278_124_459_132_9, 1.0 / 3.0, 1e-9, "table 2x2, p=\"q\", x"),
            BoundReport::equality("dephasing-reduction", 0.75, 0.75 + 1e-17, 1e-6, "d_R=2")
                .with_provenance(Some(7), Some("00ff".into())),
            BoundReport::inequality("quantum-fano", -1e-300, 2.0f64.sqrt(), 1e-9, "d=3\nsecond line"),
        ]
    }

    #[test]
    fn jsonl_round_trip() {
        let mut buf = Vec::new();
        write_reports(&sample(), Format::Jsonl, &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 3);
        assert_eq!(read_reports(&buf[..], Format::Jsonl).unwrap(), sample());
    }

    #[test]
    fn csv_round_trip_and_header() {
        let mut buf = Vec::new();
        write_reports(&sample(), Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("name,lhs,rhs,slack,pass,instance,seed,config_hash\n"));
        assert_eq!(read_reports(&buf[..], Format::Csv).unwrap(), sample());
    }
}
