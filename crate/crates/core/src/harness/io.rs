use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sme::{MeasurementRecord, TwoQubitState, BLOCH_LABELS};

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

/// Full-precision float formatting for CSV cells.
pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_record_csv(path: &Path, record: &MeasurementRecord) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t_us", "dI_r", "dQ_r"])?;
    for n in 0..record.len() {
        w.write_record([fmt(record.t(n)), fmt(record.d_i[n]), fmt(record.d_q[n])])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `t_us,dI_r,dQ_r`; the step is taken from the time column, which must be uniform.
pub fn read_record_csv(path: &Path) -> Result<MeasurementRecord> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let want = ["t_us", "dI_r", "dQ_r"];
    if headers.len() != 3 || headers.iter().zip(want).any(|(a, b)| a.trim() != b) {
        return Err(Error::config("record", format!("expected header t_us,dI_r,dQ_r, got {headers:?}")));
    }
    let (mut t, mut di, mut dq) = (Vec::new(), Vec::new(), Vec::new());
    for (line, row) in r.records().enumerate() {
        let row = row?;
        let num = |k: usize| -> Result<f64> {
            row[k].trim().parse::<f64>().map_err(|e| Error::config("record", format!("row {}: {e}", line + 2)))
        };
        t.push(num(0)?);
        di.push(num(1)?);
        dq.push(num(2)?);
    }
    if t.len() < 2 {
        return Err(Error::config("record", "needs at least two rows"));
    }
    let dt = t[1] - t[0];
    if let Some(k) = t.windows(2).position(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::config("record", format!("non-uniform time column at row {}", k + 3)));
    }
    MeasurementRecord::from_increments(dt, di, dq)
}

pub fn state_header() -> Vec<String> {
    let mut h = vec!["t_us".to_string()];
    h.extend(BLOCH_LABELS.iter().map(|s| s.to_string()));
    h.push("purity".into());
    h
}

pub fn state_row(t: f64, s: &TwoQubitState) -> Vec<String> {
    let mut row = vec![fmt(t)];
    row.extend(s.bloch().iter().map(|x| fmt(*x)));
    row.push(fmt(s.purity()));
    row
}

pub fn write_state_csv(path: &Path, times: &[f64], states: &[TwoQubitState]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(state_header())?;
    for (t, s) in times.iter().zip(states) {
        w.write_record(state_row(*t, s))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let rec = MeasurementRecord::from_increments(1e-4, vec![0.1, -0.2, 0.3], vec![1e-9, 0.0, -4.5]).unwrap();
        write_record_csv(&p, &rec).unwrap();
        let back = read_record_csv(&p).unwrap();
        assert_eq!(back.d_i, rec.d_i);
        assert_eq!(back.d_q, rec.d_q);
        assert!((back.dt - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn bad_record_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "t,a,b\n0,1,2\n1,2,3\n").unwrap();
        assert_eq!(read_record_csv(&p).unwrap_err().exit_code(), 2);
    }
}
