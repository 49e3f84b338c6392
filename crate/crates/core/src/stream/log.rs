//! Detection log: CSV with the fixed header
//! `stream_id,segment,class,decision,b,d,u,p`, one row per segment and class.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::SegmentDecision;
use crate::error::{Error, Result};

pub const LOG_HEADER: &str = "stream_id,segment,class,decision,b,d,u,p";

pub struct DetectionLogWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl DetectionLogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{LOG_HEADER}").map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn write(&mut self, stream_id: &str, decision: &SegmentDecision, class_names: &[String]) -> Result<()> {
        if stream_id.contains([',', '\n']) {
            return Err(Error::format(
                &self.path,
                format!("stream id {stream_id:?} contains a separator"),
            ));
        }
        for (k, (op, &fired)) in decision.opinions.iter().zip(&decision.decisions).enumerate() {
            let name = class_names
                .get(k)
                .ok_or_else(|| Error::shape(format!("name for class {k}"), class_names.len()))?;
            writeln!(
                self.out,
                "{stream_id},{},{name},{},{:.6},{:.6},{:.6},{:.6}",
                decision.segment_index,
                fired as u8,
                op.belief(),
                op.disbelief(),
                op.vacuity(),
                op.expected_probability()
            )
            .map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Per-stream decision matrices `[segment][class]` from a detection log.
pub fn read_detection_log(path: &Path, class_names: &[String]) -> Result<BTreeMap<String, Vec<Vec<bool>>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == LOG_HEADER => {}
        _ => return Err(Error::format(path, format!("expected header {LOG_HEADER}"))),
    }
    let mut out: BTreeMap<String, Vec<Vec<bool>>> = BTreeMap::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |why: &str| Error::format(path, format!("line {}: {why}", n + 2));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(bad("expected 8 fields"));
        }
        let segment: usize = fields[1].parse().map_err(|_| bad("bad segment index"))?;
        let class = class_names
            .iter()
            .position(|c| c == fields[2])
            .ok_or_else(|| bad("unknown class"))?;
        let fired = match fields[3] {
            "0" => false,
            "1" => true,
            _ => return Err(bad("decision must be 0 or 1")),
        };
        let rows = out.entry(fields[0].to_string()).or_default();
        if rows.len() <= segment {
            rows.resize(segment + 1, vec![false; class_names.len()]);
        }
        rows[segment][class] = fired;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opinion::BetaEvidence;

    #[test]
    fn writes_fixed_columns_and_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let names = vec!["a".to_string(), "b".to_string()];
        let evidence = vec![
            BetaEvidence::new(8.0, 3.0).unwrap(),
            BetaEvidence::new(1.0, 1.0).unwrap(),
        ];
        let decision = SegmentDecision {
            segment_index: 2,
            start_time: 0.128,
            available_time: 0.192,
            opinions: evidence.iter().map(|e| e.opinion(0.5).unwrap()).collect(),
            evidence,
            decisions: vec![true, false],
        };
        let mut w = DetectionLogWriter::create(&path).unwrap();
        w.write("clip7", &decision, &names).unwrap();
        w.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], LOG_HEADER);
        assert_eq!(lines[1], "clip7,2,a,1,0.636364,0.181818,0.181818,0.727273");
        assert_eq!(lines[2], "clip7,2,b,0,0.000000,0.000000,1.000000,0.500000");
        let back = read_detection_log(&path, &names).unwrap();
        assert_eq!(
            back["clip7"],
            vec![vec![false, false], vec![false, false], vec![true, false]]
        );
    }
}
