//! Serialization of results: JSON with 17 significant digits per float and
//! CSV grids, written to a file or to standard output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

/// Pretty JSON formatter that prints every float with 17 significant digits
/// in scientific notation, so that each value round-trips exactly.
pub struct SigDigitsFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for SigDigitsFormatter<'_> {
    fn default() -> Self {
        Self { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

/// `x` with 17 significant digits, e.g. `3.1415926535897931e0`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Formatter for SigDigitsFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Renders `value` as pretty JSON with 17-significant-digit floats.
pub fn to_json_string(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitsFormatter::default());
    serde::Serialize::serialize(value, &mut ser).expect("serializing a JSON value into memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Opens `path` for writing, or standard output when `path` is `None`.
pub fn open_sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes `value` as JSON followed by a newline.
pub fn write_json(path: Option<&Path>, value: &Value) -> io::Result<()> {
    let mut sink = open_sink(path)?;
    sink.write_all(to_json_string(value).as_bytes())?;
    sink.write_all(b"\n")?;
    sink.flush()
}

/// Writes a CSV grid preceded by a `# config ` comment line holding the
/// configuration as compact JSON.
pub fn write_csv(path: Option<&Path>, config: &Value, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut sink = open_sink(path)?;
    writeln!(sink, "# config {}", serde_json::to_string(config).map_err(io::Error::other)?)?;
    {
        let mut w = csv::Writer::from_writer(&mut sink);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|&x| format_f64(x)))?;
        }
        w.flush()?;
    }
    sink.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_round_trip_with_17_digits() {
        for x in [std::f64::consts::PI, 0.1, -1e-300, 1.0, 123456.789, f64::MIN_POSITIVE] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }

    #[test]
    fn json_output_is_valid_and_exact() {
        let v = json!({"a": std::f64::consts::E, "b": [1.5, 2], "c": null, "d": "x"});
        let s = to_json_string(&v);
        assert!(s.contains("2.7182818284590451e0"), "{s}");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), std::f64::consts::E);
        assert_eq!(back["b"][1].as_i64().unwrap(), 2);
    }
}
