//! Text DSM files and JSON solution files.
//!
//! DSM layout: the first line holds `n`, each of the next `n` lines holds one
//! matrix row of whitespace-separated decimals. Blank lines and lines
//! starting with `#` are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsm::{total_feedback_length, ActivitySequence, Dsm};
use crate::error::{Error, Result};

pub fn parse_dsm(text: &str, source: &str) -> Result<Dsm> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| parse_err(header_line, format!("header `{header}` is not an activity count")))?;
    if n < 2 {
        return Err(parse_err(header_line, format!("activity count {n} is below 2")));
    }

    let mut entries = Vec::with_capacity(n * n);
    let mut last_line = header_line;
    for i in 0..n {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| parse_err(last_line + 1, format!("expected {n} matrix rows, found {i}")))?;
        last_line = line_no;
        let start = entries.len();
        for (j, tok) in line.split_whitespace().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("`{tok}` is not a number")))?;
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(parse_err(line_no, format!("value {tok} outside [0, 1]")));
            }
            if i == j && v != 0.0 {
                return Err(parse_err(
                    line_no,
                    format!("diagonal entry d({0}, {0}) = {tok} must be 0", i + 1),
                ));
            }
            entries.push(v);
        }
        let count = entries.len() - start;
        if count != n {
            return Err(parse_err(
                line_no,
                format!("row {} has {count} values, expected {n}", i + 1),
            ));
        }
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(parse_err(line_no, format!("unexpected content after {n} matrix rows")));
    }
    Dsm::new(n, entries)
}

/// Zeros are written as `0`, everything else with 17 significant digits.
pub fn format_dsm(dsm: &Dsm) -> String {
    let n = dsm.n();
    let mut out = format!("{n}\n");
    for i in 0..n {
        for (j, &v) in dsm.row(i).iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            if v == 0.0 {
                out.push('0');
            } else {
                write!(out, "{v:.16e}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub fn read_dsm(path: impl AsRef<Path>) -> Result<Dsm> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dsm(&text, &path.display().to_string())
}

pub fn write_dsm(dsm: &Dsm, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_dsm(dsm)).map_err(|e| Error::io(path, e))
}

/// On-disk record of one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub n: usize,
    pub objective: f64,
    /// 1-based activity ids in schedule order.
    pub sequence: Vec<usize>,
    pub time_ms: f64,
    pub nodes_expanded: u64,
    pub nodes_pruned: u64,
    pub cores_used: usize,
    pub na: usize,
}

impl SolutionFile {
    pub fn activity_sequence(&self) -> Result<ActivitySequence> {
        ActivitySequence::from_ids(&self.sequence)
    }

    /// Recomputes the objective of the stored sequence and compares it with
    /// the recorded value at 1e-9 relative tolerance.
    pub fn revalidate(&self, dsm: &Dsm) -> Result<f64> {
        let seq = self.activity_sequence()?;
        let value = total_feedback_length(dsm, &seq)?;
        let scale = value.abs().max(self.objective.abs()).max(1.0);
        if (value - self.objective).abs() > 1e-9 * scale {
            return Err(Error::Input(format!(
                "recorded objective {} disagrees with recomputed {value}",
                self.objective
            )));
        }
        Ok(value)
    }
}

pub fn write_solution(solution: &SolutionFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(solution).map_err(|e| Error::Solution {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<SolutionFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let sol: SolutionFile = serde_json::from_str(&text).map_err(|e| Error::Solution {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if sol.sequence.len() != sol.n {
        return Err(Error::Solution {
            path: path.to_path_buf(),
            message: format!("sequence has {} entries but n = {}", sol.sequence.len(), sol.n),
        });
    }
    sol.activity_sequence().map_err(|e| Error::Solution {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsm::generate_instance;

    #[test]
    fn parses_two_activity_file() {
        let d = parse_dsm("2\n0 0.3\n0.7 0\n", "mem").unwrap();
        assert_eq!(d.get(0, 1), 0.3);
        assert_eq!(d.get(1, 0), 0.7);
    }

    #[test]
    fn short_row_reports_its_line() {
        let err = parse_dsm("3\n0 0.1 0.2\n0.3 0\n0 0 0\n", "f.txt").unwrap_err();
        match err {
            Error::Parse { line, ref message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("2 values"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        let cases = [
            ("", 1),
            ("x\n", 1),
            ("2\n0 0.3\n", 3),
            ("2\n0 1.5\n0 0\n", 2),
            ("2\n0.2 0.5\n0 0\n", 2),
            ("2\n0 abc\n0 0\n", 2),
            ("2\n0 0\n0 0\n1\n", 4),
        ];
        for (text, want) in cases {
            match parse_dsm(text, "m") {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip_generated_instance() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        let g = generate_instance(15, 0.4, 11).unwrap();
        write_dsm(&g, &path).unwrap();
        assert_eq!(read_dsm(&path).unwrap(), g);
    }

    #[test]
    fn solution_round_trip_and_revalidate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let d = parse_dsm("3\n0 0.5 0.2\n0 0 0.4\n0 0 0\n", "m").unwrap();
        let sol = SolutionFile {
            n: 3,
            objective: 1.3,
            sequence: vec![1, 2, 3],
            time_ms: 0.5,
            nodes_expanded: 6,
            nodes_pruned: 3,
            cores_used: 2,
            na: 2,
        };
        write_solution(&sol, &path).unwrap();
        let back = read_solution(&path).unwrap();
        assert_eq!(back, sol);
        assert!(back.revalidate(&d).is_ok());

        let wrong = SolutionFile { objective: 0.9, ..sol };
        assert!(wrong.revalidate(&d).is_err());
    }

    #[test]
    fn solution_with_bad_sequence_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(
            &path,
            r#"{"n":3,"objective":0,"sequence":[1,1,2],"time_ms":0,"nodes_expanded":0,"nodes_pruned":0,"cores_used":1,"na":2}"#,
        )
        .unwrap();
        assert!(matches!(read_solution(&path), Err(Error::Solution { .. })));
    }
}
