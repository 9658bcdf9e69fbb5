//! MOTChallenge-style CSV tables: `frame,id,left,top,width,height,conf,x,y,z`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::BBox;

#[derive(Debug, Clone, PartialEq)]
pub struct MotRow {
    pub frame: u64,
    /// −1 for raw detections.
    pub id: i64,
    pub bbox: BBox,
    pub conf: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl MotRow {
    pub fn detection(frame: u64, bbox: BBox, conf: f64) -> Self {
        Self::track(frame, -1, bbox, conf)
    }

    pub fn track(frame: u64, id: i64, bbox: BBox, conf: f64) -> Self {
        Self {
            frame,
            id,
            bbox,
            conf,
            x: -1.0,
            y: -1.0,
            z: -1.0,
        }
    }

    /// Canonical single-line form, without the trailing newline.
    pub fn to_line(&self) -> String {
        let b = &self.bbox;
        format!(
            "{},{},{:.2},{:.2},{:.2},{:.2},{:.6},{},{},{}",
            self.frame, self.id, b.left, b.top, b.width, b.height, self.conf, self.x, self.y, self.z
        )
    }
}

fn field<T: std::str::FromStr>(raw: &str, name: &str, source: &str, line: usize) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(source, line, format!("{name}: cannot parse `{raw}`")))
}

fn finite(v: f64, name: &str, source: &str, line: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(source, line, format!("{name} is not finite")))
    }
}

pub fn parse_line(text: &str, source: &str, line: usize) -> Result<MotRow> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 10 {
        return Err(Error::parse(
            source,
            line,
            format!("expected 10 comma-separated fields, found {}", parts.len()),
        ));
    }
    let frame: u64 = field(parts[0], "frame", source, line)?;
    if frame == 0 {
        return Err(Error::parse(source, line, "frame numbers start at 1"));
    }
    let id: i64 = field(parts[1], "id", source, line)?;
    let mut vals = [0.0f64; 8];
    let names = ["left", "top", "width", "height", "conf", "x", "y", "z"];
    for (k, name) in names.iter().enumerate() {
        vals[k] = finite(field(parts[k + 2], name, source, line)?, name, source, line)?;
    }
    if vals[2] < 0.0 || vals[3] < 0.0 {
        return Err(Error::parse(source, line, "negative box size"));
    }
    Ok(MotRow {
        frame,
        id,
        bbox: BBox::new(vals[0], vals[1], vals[2], vals[3]),
        conf: vals[4],
        x: vals[5],
        y: vals[6],
        z: vals[7],
    })
}

/// Parses a whole table. Blank lines are skipped; anything else malformed
/// is reported with its line number.
pub fn parse_mot(text: &str, source: &str) -> Result<Vec<MotRow>> {
    super::content_lines(text)
        .map(|(n, l)| parse_line(l, source, n))
        .collect()
}

pub fn format_mot(rows: &[MotRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 48);
    for r in rows {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn read_mot(path: &Path) -> Result<Vec<MotRow>> {
    parse_mot(&super::read_text(path)?, &path.display().to_string())
}

pub fn write_mot(path: &Path, rows: &[MotRow]) -> Result<()> {
    super::write_file(path, format_mot(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_detection_row() {
        let row = parse_line("1,-1,10.00,20.00,30.00,40.00,0.950000,-1,-1,-1", "t", 1).unwrap();
        assert_eq!(row, MotRow::detection(1, BBox::new(10.0, 20.0, 30.0, 40.0), 0.95));
    }

    #[test]
    fn canonical_round_trip() {
        let text = "1,-1,10.00,20.00,30.00,40.00,0.950000,-1,-1,-1\n2,7,-3.25,0.50,1.00,2.00,1.000000,-1,-1,-1\n";
        assert_eq!(format_mot(&parse_mot(text, "t").unwrap()), text);
    }

    #[test]
    fn rejects_frame_zero_with_line_number() {
        let text = "1,-1,1.00,1.00,1.00,1.00,0.5,-1,-1,-1\n0,-1,1.00,1.00,1.00,1.00,0.5,-1,-1,-1\n";
        match parse_mot(text, "det.txt") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_rows() {
        for bad in [
            "1,-1,1,1,1,1,0.5,-1,-1",
            "1,-1,1,1,1,1,0.5,-1,-1,-1,9",
            "x,-1,1,1,1,1,0.5,-1,-1,-1",
            "1,1.5,1,1,1,1,0.5,-1,-1,-1",
            "1,-1,1,1,-1,1,0.5,-1,-1,-1",
            "1,-1,1,1,1,1,NaN,-1,-1,-1",
            "1,-1,inf,1,1,1,0.5,-1,-1,-1",
        ] {
            assert!(parse_line(bad, "t", 1).is_err(), "{bad}");
        }
    }
}
