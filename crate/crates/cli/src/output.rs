//! Deterministic report rendering: floats with 17 significant digits,
//! sorted object keys, atomic file writes.

use std::io::{self, Write};
use std::path::Path;

use serde_json::ser::Formatter;

/// JSON formatter writing every float with 17 significant digits so
/// reports are byte-identical across runs and platforms.
struct SeventeenDigitFormatter;

impl Formatter for SeventeenDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Render a report value to its canonical byte form.
pub fn render(value: &serde_json::Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigitFormatter);
    serde::Serialize::serialize(value, &mut ser).expect("report serializes");
    out.push(b'\n');
    String::from_utf8(out).expect("json is utf8")
}

/// Write a report atomically (temp file + rename) or to stdout.
pub fn emit(value: &serde_json::Value, out: Option<&Path>) -> anyhow::Result<()> {
    let text = render(value);
    match out {
        None => {
            io::stdout().write_all(text.as_bytes())?;
        }
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
        }
    }
    Ok(())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
