//! CSV data files with header `t,u,y[,y2,…]`.

use std::path::Path;

use hmc_sysid_core::models::DataSet;
use hmc_sysid_core::numerics::Matrix;

/// Allowed relative deviation of any sampling gap from the first one.
pub const SAMPLING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read data file: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing or malformed header; expected `t,u,y[,y2,...]`")]
    MissingHeader,
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("row {0}: non-finite value")]
    NonFiniteValue(usize),
    #[error("row {0}: time stamps must be strictly increasing")]
    NonIncreasingTime(usize),
    #[error("row {0}: sampling interval differs from the first gap")]
    NonUniformSampling(usize),
    #[error("data file has no samples")]
    Empty,
}

fn expected_header(n_outputs: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "u".to_string(), "y".to_string()];
    h.extend((2..=n_outputs).map(|k| format!("y{k}")));
    h
}

/// Reads a uniformly sampled data set. Rows are numbered from 1 after the
/// header. A single row is given `dt = 1`.
pub fn ingest_csv(path: &Path) -> Result<DataSet, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => IngestError::Io(io),
            other => IngestError::Malformed {
                row: 0,
                message: format!("{other:?}"),
            },
        })?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        _ => return Err(IngestError::MissingHeader),
    };
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 3 || names != expected_header(names.len() - 2) {
        return Err(IngestError::MissingHeader);
    }
    let n_y = names.len() - 2;

    let (mut t, mut u, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::Malformed {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != n_y + 2 {
            return Err(IngestError::Malformed {
                row,
                message: format!("expected {} fields, found {}", n_y + 2, rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(rec.len());
        for field in rec.iter() {
            let v: f64 = field.parse().map_err(|_| IngestError::Malformed {
                row,
                message: format!("not a number: `{field}`"),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonFiniteValue(row));
            }
            vals.push(v);
        }
        t.push(vals[0]);
        u.push(vals[1]);
        y.extend_from_slice(&vals[2..]);
    }
    if t.is_empty() {
        return Err(IngestError::Empty);
    }
    for k in 1..t.len() {
        if t[k] <= t[k - 1] {
            return Err(IngestError::NonIncreasingTime(k + 1));
        }
    }
    let dt = if t.len() > 1 { t[1] - t[0] } else { 1.0 };
    for k in 2..t.len() {
        if ((t[k] - t[k - 1]) - dt).abs() > SAMPLING_TOLERANCE * dt {
            return Err(IngestError::NonUniformSampling(k + 1));
        }
    }
    let n = t.len();
    let y = Matrix::from_row_major(n, n_y, y).expect("row lengths checked");
    Ok(DataSet::new(u, y, dt).expect("values checked"))
}

/// Writes `data` with time stamps `k·dt`.
pub fn write_csv(data: &DataSet, path: &Path) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(expected_header(data.n_outputs()))?;
    for k in 0..data.len() {
        let mut row = vec![(k as f64 * data.dt()).to_string(), data.u()[k].to_string()];
        row.extend(data.y_at(k).iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()
}
