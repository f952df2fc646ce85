use std::io::{Read, Write};

use num_complex::Complex64;

use super::OfdmError;

/// One `re,im` line per sample, no header.
pub fn write_samples_csv<W: Write>(out: W, samples: &[Complex64]) -> Result<(), OfdmError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for s in samples {
        w.write_record([s.re.to_string(), s.im.to_string()])
            .map_err(|e| OfdmError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_samples_csv<R: Read>(input: R) -> Result<Vec<Complex64>, OfdmError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let bad = |msg: String| OfdmError::Parse { line: i + 1, msg };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 2 {
            return Err(bad(format!("expected 2 fields, got {}", rec.len())));
        }
        let re = rec[0]
            .trim()
            .parse::<f64>()
            .map_err(|e| bad(e.to_string()))?;
        let im = rec[1]
            .trim()
            .parse::<f64>()
            .map_err(|e| bad(e.to_string()))?;
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}
