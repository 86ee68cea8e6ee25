//! CSV round trips for the plot-ready tables.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Header row plus one line per record.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Parses records, rejecting a header other than `header`.
pub fn from_csv<T: DeserializeOwned>(text: &str, header: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let found = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if found != header {
        return Err(Error::InvalidInput(format!("unexpected CSV header {found:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
