//! Reproducible text output: JSON with fixed 17-significant-digit floats and
//! simple numeric CSV tables.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::geometry::Point2;
use crate::Result;

/// Renders a float with 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON, newline-terminated, with byte-stable float formatting.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedFloat(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// CSV with a header row and one line per numeric record.
pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Polylines as `x1,x2` rows with a blank line between components.
pub fn polylines_csv<'a>(lines: impl IntoIterator<Item = &'a [Point2]>) -> String {
    let mut out = String::from("x1,x2\n");
    for (k, line) in lines.into_iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for p in line {
            let _ = writeln!(out, "{},{}", fmt_f64(p.x1), fmt_f64(p.x2));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let vals = vec![0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0];
        let s = to_json_string(&vals).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vals);
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.ends_with('\n'));
    }

    #[test]
    fn nan_becomes_null() {
        let s = to_json_string(&[f64::NAN]).unwrap();
        assert!(s.contains("null"));
    }

    #[test]
    fn polyline_components_are_separated() {
        let a = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let b = [Point2::new(2.0, 2.0)];
        let csv = polylines_csv([&a[..], &b[..]]);
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv.lines().nth(3), Some(""));
    }
}
