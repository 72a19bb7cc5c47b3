//! Custom arrangement files and CSV result tables.
//!
//! Arrangement file:
//!
//! ```text
//! # optional comments
//! m=2
//! [chambers]
//! ++
//! -+
//! +-
//! --
//! [faces]
//! 00
//! +0
//! ...
//! [weights]
//! 1 0.25      # face index, then weight (decimal or p/q)
//! ```
//!
//! `[faces]` lists every face; the chambers must be among them.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use hyperwalk_core::{Arrangement, SignVector, WeightedFaceSet};
use thiserror::Error;

use crate::config::parse_number;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] hyperwalk_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Chambers,
    Faces,
    Weights,
}

pub fn parse_custom(text: &str) -> Result<(Arrangement, WeightedFaceSet), FormatError> {
    let mut m = None;
    let mut section = Section::Header;
    let mut chambers = Vec::new();
    let mut faces: Vec<SignVector> = Vec::new();
    let mut weights = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        section = match line {
            "[chambers]" => Section::Chambers,
            "[faces]" => Section::Faces,
            "[weights]" => Section::Weights,
            _ => {
                let sv = |s: &str| -> Result<SignVector, FormatError> {
                    let v: SignVector = s.parse().map_err(|e| syntax(line_no, format!("{e}")))?;
                    match m {
                        Some(m) if v.len() == m => Ok(v),
                        Some(m) => Err(syntax(
                            line_no,
                            format!("expected {m} signs, found {}", v.len()),
                        )),
                        None => Err(syntax(line_no, "`m=` must come first")),
                    }
                };
                match section {
                    Section::Header => {
                        let v = line
                            .strip_prefix("m=")
                            .ok_or_else(|| syntax(line_no, "expected `m=<hyperplanes>`"))?;
                        m = Some(
                            v.trim()
                                .parse()
                                .map_err(|_| syntax(line_no, "bad hyperplane count"))?,
                        );
                    }
                    Section::Chambers => chambers.push(sv(line)?),
                    Section::Faces => faces.push(sv(line)?),
                    Section::Weights => {
                        let mut parts = line.split_whitespace();
                        let (Some(idx), Some(w), None) = (parts.next(), parts.next(), parts.next())
                        else {
                            return Err(syntax(line_no, "expected `<face index> <weight>`"));
                        };
                        let idx: usize =
                            idx.parse().map_err(|_| syntax(line_no, "bad face index"))?;
                        let face = faces
                            .get(idx)
                            .ok_or_else(|| syntax(line_no, format!("no face with index {idx}")))?;
                        let w =
                            parse_number("weight", w).map_err(|e| syntax(line_no, e.message))?;
                        weights.push((face.clone(), w));
                    }
                }
                section
            }
        };
    }
    let m = m.ok_or_else(|| syntax(0, "missing `m=` header"))?;
    let arr = Arrangement::custom(m, chambers, faces)?;
    let w = WeightedFaceSet::merged(weights)?;
    w.validate_against(&arr)?;
    Ok((arr, w))
}

pub fn read_custom(path: &Path) -> Result<(Arrangement, WeightedFaceSet), FormatError> {
    parse_custom(&std::fs::read_to_string(path)?)
}

/// Serializes an arrangement with materialized chambers and faces.
pub fn write_custom(arr: &Arrangement, w: &WeightedFaceSet) -> Result<String, FormatError> {
    let chambers = arr.chambers()?;
    let faces = arr.faces().ok_or(hyperwalk_core::Error::Capacity {
        what: "face list",
        requested: arr.face_count().unwrap_or(u128::MAX),
        limit: arr.limits().max_faces as u128,
    })?;
    let mut out = format!("m={}\n[chambers]\n", arr.hyperplanes());
    for c in chambers {
        let _ = writeln!(out, "{c}");
    }
    out.push_str("[faces]\n");
    for f in faces {
        let _ = writeln!(out, "{f}");
    }
    out.push_str("[weights]\n");
    for (f, p) in w.entries() {
        let idx = faces
            .iter()
            .position(|g| g == f)
            .expect("weighted face is listed");
        let _ = writeln!(out, "{idx} {p:?}");
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "t,s_exact,tv_exact,survival_exact,survival_mc,mc_stderr";

/// Fixed decimal formatting for every numeric cell.
pub fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.9}")).unwrap_or_default()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub t: u64,
    pub s_exact: Option<f64>,
    pub tv_exact: Option<f64>,
    pub survival_exact: Option<f64>,
    pub survival_mc: Option<f64>,
    pub mc_stderr: Option<f64>,
    /// Mode-specific trailing cells.
    pub extra: Vec<Option<f64>>,
}

/// A result table: `#` preamble, header, rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub preamble: Vec<String>,
    pub header: String,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn standard(preamble: Vec<String>, extra_columns: &[&str], rows: &[Row]) -> Self {
        let mut header = CSV_HEADER.to_string();
        for c in extra_columns {
            header.push(',');
            header.push_str(c);
        }
        let rows = rows
            .iter()
            .map(|r| {
                let mut cells = vec![
                    r.t.to_string(),
                    cell(r.s_exact),
                    cell(r.tv_exact),
                    cell(r.survival_exact),
                    cell(r.survival_mc),
                    cell(r.mc_stderr),
                ];
                cells.extend(r.extra.iter().map(|x| cell(*x)));
                cells
            })
            .collect();
        Table {
            preamble,
            header,
            rows,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.preamble {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(&self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.header.split(',').position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str =
        "m=2\n[chambers]\n++\n-+\n+-\n--\n[faces]\n00\n+0\n-0\n0+\n0-\n++\n-+\n+-\n--\n\
                          [weights]\n1 1/4\n2 1/4\n3 0.25\n4 0.25\n";

    #[test]
    fn parses_square() {
        let (arr, w) = parse_custom(SQUARE).unwrap();
        assert_eq!(arr.hyperplanes(), 2);
        assert_eq!(arr.chamber_count(), Some(4));
        assert_eq!(w.len(), 4);
    }

    #[test]
    fn roundtrip() {
        let (arr, w) = parse_custom(SQUARE).unwrap();
        let text = write_custom(&arr, &w).unwrap();
        let (arr2, w2) = parse_custom(&text).unwrap();
        assert_eq!(arr2.chambers().unwrap(), arr.chambers().unwrap());
        assert_eq!(w2, w);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let e = parse_custom("m=2\n[chambers]\n+++\n").unwrap_err();
        assert!(matches!(e, FormatError::Syntax { line: 3, .. }));
        let e = parse_custom("[chambers]\n++\n").unwrap_err();
        assert!(matches!(e, FormatError::Syntax { line: 2, .. }));
        let e = parse_custom("m=2\n[faces]\n00\n[weights]\n4 1\n").unwrap_err();
        assert!(matches!(e, FormatError::Syntax { line: 5, .. }));
    }

    #[test]
    fn bad_weights_are_core_errors() {
        let text = SQUARE.replace("4 0.25\n", "");
        assert!(matches!(parse_custom(&text), Err(FormatError::Core(_))));
    }

    #[test]
    fn table_rendering() {
        let rows = [Row {
            t: 2,
            s_exact: Some(1.0 / 3.0),
            survival_exact: Some(1.0 / 3.0),
            ..Row::default()
        }];
        let t = Table::standard(vec!["family=tsetlin".into()], &[], &rows);
        assert_eq!(
            t.render(),
            "# family=tsetlin\nt,s_exact,tv_exact,survival_exact,survival_mc,mc_stderr\n2,0.333333333,,0.333333333,,\n"
        );
        assert_eq!(t.column("s_exact").unwrap(), vec!["0.333333333"]);
    }
}
