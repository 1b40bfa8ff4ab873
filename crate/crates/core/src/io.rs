//! Field dump format and CSV export.
//!
//! Binary dumps carry a 64-byte text header `ROTBL1 <n_x1> <n_y> <L> <Y>
//! <label>` padded with spaces, followed by the samples as little-endian
//! f64 in row-major order (tangential index outer).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{Field2D, TraceField};
use crate::grid::Grid;

pub const DUMP_MAGIC: &str = "ROTBL1";
pub const HEADER_LEN: usize = 64;

pub fn dump_field(f: &Field2D, path: &Path) -> Result<()> {
    let mut header = format!(
        "{} {} {} {} {} {}",
        DUMP_MAGIC, f.grid.n_x1, f.grid.n_y, f.grid.l, f.grid.y_max, f.label
    );
    if header.len() > HEADER_LEN {
        header.truncate(HEADER_LEN);
    }
    while header.len() < HEADER_LEN {
        header.push(' ');
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(header.as_bytes())?;
    for i in 0..f.grid.n_x1 {
        for j in 0..f.grid.n_y {
            w.write_all(&f.values[[i, j]].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field2D> {
    let mut file = File::open(path)?;
    let mut header = [0u8; HEADER_LEN];
    file.read_exact(&mut header)?;
    let text = std::str::from_utf8(&header)
        .map_err(|_| Error::Invalid("dump header is not valid UTF-8".into()))?;
    let mut parts = text.split_whitespace();
    let magic = parts.next().unwrap_or("");
    if magic != DUMP_MAGIC {
        return Err(Error::Invalid(format!("bad dump magic '{magic}'")));
    }
    let parse = |s: Option<&str>, what: &str| -> Result<f64> {
        s.and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Error::Invalid(format!("dump header missing {what}")))
    };
    let n_x1 = parse(parts.next(), "n_x1")? as usize;
    let n_y = parse(parts.next(), "n_y")? as usize;
    let l = parse(parts.next(), "L")?;
    let y_max = parse(parts.next(), "Y")?;
    let label = parts.next().unwrap_or("field").to_string();

    let grid: Arc<Grid> = Grid::new(n_x1, n_y, l, y_max)?;
    let mut buf = vec![0u8; n_x1 * n_y * 8];
    file.read_exact(&mut buf)?;
    let mut values = Array2::zeros((n_x1, n_y));
    let mut off = 0;
    for i in 0..n_x1 {
        for j in 0..n_y {
            let mut b = [0u8; 8];
            b.copy_from_slice(&buf[off..off + 8]);
            values[[i, j]] = f64::from_le_bytes(b);
            off += 8;
        }
    }
    Field2D::from_values(&grid, &label, values)
}

/// CSV export with x1,y,value rows.
pub fn field_csv(f: &Field2D, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x1,y,value")?;
    for i in 0..f.grid.n_x1 {
        for j in 0..f.grid.n_y {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e}",
                f.grid.x1(i),
                f.grid.y(j),
                f.values[[i, j]]
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Trace history writer: rows of (t, x1, value).
pub struct TraceHistoryWriter {
    w: BufWriter<File>,
}

impl TraceHistoryWriter {
    pub fn create(path: &Path) -> Result<TraceHistoryWriter> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "t,x1,value")?;
        Ok(TraceHistoryWriter { w })
    }

    pub fn append(&mut self, t: f64, trace: &TraceField) -> Result<()> {
        for i in 0..trace.grid.n_x1 {
            writeln!(
                self.w,
                "{:.12e},{:.12e},{:.12e}",
                t,
                trace.grid.x1(i),
                trace.values[i]
            )?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_roundtrip() {
        let grid = Grid::new(16, 9, 10.0, 8.0).unwrap();
        let f = Field2D::from_fn(&grid, "u_test", |x, y| x + 2.0 * y);
        let dir = std::env::temp_dir().join("rotbl_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.bin");
        dump_field(&f, &path).unwrap();
        let g = read_field(&path).unwrap();
        assert_eq!(g.label, "u_test");
        assert_eq!(g.grid.n_x1, 16);
        let err = f.sub(&g).unwrap().max_abs();
        assert_eq!(err, 0.0);
    }
}
