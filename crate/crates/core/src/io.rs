//! JSON and CSV file helpers shared by the exporters.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;

/// Serializers that write every `f64` with 17 significant digits.
///
/// 17 digits round-trip any binary64 value exactly, so files written here
/// read back bit-identical.
pub mod fmt17 {
    use serde::ser::{Error as _, SerializeSeq};
    use serde::Serializer;
    use serde_json::value::RawValue;

    pub fn format(x: f64) -> Option<String> {
        x.is_finite().then(|| format!("{x:.16e}"))
    }

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for &v in values {
            let text = format(v).ok_or_else(|| S::Error::custom("non-finite value"))?;
            let raw = RawValue::from_string(text).map_err(S::Error::custom)?;
            seq.serialize_element(&raw)?;
        }
        seq.end()
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let r = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(r)?)
}

/// Writes a CSV table with a header row; `None` cells are left empty and
/// numbers use the 17-digit format.
pub fn write_csv_grid<H: AsRef<str>>(path: impl AsRef<Path>, header: &[H], rows: &[Vec<Option<f64>>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for row in rows {
        w.write_record(row.iter().map(|c| c.and_then(fmt17::format).unwrap_or_default()))?;
    }
    w.flush()?;
    Ok(())
}
