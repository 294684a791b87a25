//! File formats: a compact binary container for complex matrices, image
//! export (dB CSV and 8-bit PGM with an axis sidecar) and small table helpers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::RangeAngleImage;
use crate::linalg::CMat;
use crate::scalar::{lit, to_f64, Scalar};

const MAGIC: &str = "jrc-complex";

/// Sample precision of a complex matrix file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexDtype {
    /// Two little-endian `f32` per entry.
    Complex64,
    /// Two little-endian `f64` per entry.
    Complex128,
}

impl ComplexDtype {
    fn name(self) -> &'static str {
        match self {
            ComplexDtype::Complex64 => "complex64",
            ComplexDtype::Complex128 => "complex128",
        }
    }

    fn width(self) -> usize {
        match self {
            ComplexDtype::Complex64 => 4,
            ComplexDtype::Complex128 => 8,
        }
    }
}

/// Writes matrices of equal shape as little-endian (re, im) pairs,
/// column-major, after a one-line text header.
pub fn write_complex_matrices<T: Scalar>(
    path: &Path,
    kind: &str,
    mats: &[CMat<T>],
    dtype: ComplexDtype,
) -> Result<()> {
    let (rows, cols) = mats.first().map_or((0, 0), |m| m.shape());
    if mats.iter().any(|m| m.shape() != (rows, cols)) {
        return Err(Error::Dimension("all matrices in one file must share a shape".into()));
    }
    if kind.chars().any(char::is_whitespace) {
        return Err(Error::Invariant(format!("kind '{kind}' must not contain whitespace")));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "{MAGIC} dtype={} kind={kind} count={} rows={rows} cols={cols} order=column-major endian=little",
        dtype.name(),
        mats.len()
    )?;
    for m in mats {
        for z in m.iter() {
            for v in [to_f64(z.re), to_f64(z.im)] {
                match dtype {
                    ComplexDtype::Complex64 => w.write_all(&(v as f32).to_le_bytes())?,
                    ComplexDtype::Complex128 => w.write_all(&v.to_le_bytes())?,
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Contents of a complex matrix file.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFile {
    pub dtype: ComplexDtype,
    pub kind: String,
    pub matrices: Vec<CMat<f64>>,
}

pub fn read_complex_matrices(path: &Path) -> Result<ComplexFile> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some(MAGIC) {
        return Err(Error::Parse(format!("{}: not a complex matrix file", path.display())));
    }
    let mut kind = String::new();
    let mut dtype = None;
    let (mut count, mut rows, mut cols) = (None, None, None);
    for f in fields {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("malformed header field '{f}'")))?;
        let num = || v.parse::<usize>().map_err(|_| Error::Parse(format!("bad value in '{f}'")));
        match k {
            "kind" => kind = v.to_string(),
            "dtype" => {
                dtype = Some(match v {
                    "complex64" => ComplexDtype::Complex64,
                    "complex128" => ComplexDtype::Complex128,
                    _ => return Err(Error::Parse(format!("unknown dtype '{v}'"))),
                })
            }
            "count" => count = Some(num()?),
            "rows" => rows = Some(num()?),
            "cols" => cols = Some(num()?),
            _ => {}
        }
    }
    let (dtype, count, rows, cols) = match (dtype, count, rows, cols) {
        (Some(d), Some(a), Some(b), Some(c)) => (d, a, b, c),
        _ => return Err(Error::Parse("header lacks dtype/count/rows/cols".into())),
    };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = count * rows * cols * 2 * dtype.width();
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "payload holds {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = match dtype {
        ComplexDtype::Complex64 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        ComplexDtype::Complex128 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    let per = rows * cols;
    let matrices = (0..count)
        .map(|k| {
            let base = 2 * k * per;
            CMat::from_iterator(
                rows,
                cols,
                (0..per).map(|i| nalgebra::Complex::new(values[base + 2 * i], values[base + 2 * i + 1])),
            )
        })
        .collect();
    Ok(ComplexFile {
        dtype,
        kind,
        matrices,
    })
}

/// Image magnitude in dB relative to its maximum (floored at -300 dB).
pub fn image_db<T: Scalar>(img: &RangeAngleImage<T>) -> Vec<Vec<f64>> {
    let peak = img.magnitude.iter().fold(0.0f64, |a, &b| a.max(to_f64(b)));
    let (rows, cols) = img.shape();
    (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let v = to_f64(img.magnitude[(r, c)]);
                    if peak > 0.0 && v > 0.0 {
                        (20.0 * (v / peak).log10()).max(-300.0)
                    } else {
                        -300.0
                    }
                })
                .collect()
        })
        .collect()
}

/// CSV with header `range_m,<angle_deg...>` and one row per range bin.
pub fn write_image_csv<T: Scalar>(path: &Path, img: &RangeAngleImage<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["range_m".to_string()];
    header.extend(img.angle_axis_rad.iter().map(|a| format!("{:.6}", a.to_degrees())));
    w.write_record(&header).map_err(csv_err)?;
    for (r, row) in image_db(img).into_iter().enumerate() {
        let mut rec = vec![format!("{:.6}", img.range_axis_m[r])];
        rec.extend(row.iter().map(|v| format!("{v:.4}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// 8-bit binary graymap scaled over `dynamic_range_db` below the peak, plus a
/// `.txt` sidecar describing the axes. Returns the sidecar path.
pub fn write_image_pgm<T: Scalar>(path: &Path, img: &RangeAngleImage<T>, dynamic_range_db: f64) -> Result<PathBuf> {
    if !(dynamic_range_db > 0.0) {
        return Err(Error::Invariant("dynamic range must be positive".into()));
    }
    let (rows, cols) = img.shape();
    let db = image_db(img);
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    let mut buf = Vec::with_capacity(rows * cols);
    for row in &db {
        for &v in row {
            let x = ((v + dynamic_range_db) / dynamic_range_db).clamp(0.0, 1.0);
            buf.push((x * 255.0).round() as u8);
        }
    }
    w.write_all(&buf)?;
    w.flush()?;

    let sidecar = path.with_extension("pgm.txt");
    let mut s = BufWriter::new(File::create(&sidecar)?);
    writeln!(s, "width {cols}")?;
    writeln!(s, "height {rows}")?;
    writeln!(s, "rows range_m from {:.6} step {:.6}", img.range_axis_m[0], img.range_step_m())?;
    writeln!(
        s,
        "cols sin_azimuth from {:.6} step {:.6}",
        img.sin_axis[0],
        img.sin_axis.get(1).map_or(0.0, |x| x - img.sin_axis[0])
    )?;
    writeln!(s, "scale dB relative to peak, black at -{dynamic_range_db} dB, white at 0 dB")?;
    writeln!(s, "window {}", img.window)?;
    s.flush()?;
    Ok(sidecar)
}

/// Writes a table with a one-line header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_table`]: header plus string rows.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|x| x.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)?;
    Ok((header, rows))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Converts a matrix of one precision into another.
pub fn convert_matrix<A: Scalar, B: Scalar>(m: &CMat<A>) -> CMat<B> {
    m.map(|z| nalgebra::Complex::new(lit(to_f64(z.re)), lit(to_f64(z.im))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("jrc-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn complex_round_trip() {
        let mats: Vec<CMat<f64>> = (0..3)
            .map(|k| CMat::from_fn(4, 2, |i, j| nalgebra::Complex::new(i as f64 + 0.5 * k as f64, -(j as f64))))
            .collect();
        let p = tmp("m.bin");
        write_complex_matrices(&p, "precoder", &mats, ComplexDtype::Complex64).unwrap();
        let back = read_complex_matrices(&p).unwrap();
        assert_eq!(back.kind, "precoder");
        assert_eq!(back.dtype, ComplexDtype::Complex64);
        assert_eq!(back.matrices, mats);

        let fine: Vec<CMat<f64>> = mats.iter().map(|m| m.map(|z| z * 0.1)).collect();
        write_complex_matrices(&p, "precoder", &fine, ComplexDtype::Complex128).unwrap();
        assert_eq!(read_complex_matrices(&p).unwrap().matrices, fine);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let p = tmp("bad.bin");
        std::fs::write(&p, b"jrc-complex dtype=complex64 kind=x count=1 rows=2 cols=2\n\x00\x00").unwrap();
        assert!(matches!(read_complex_matrices(&p), Err(Error::Parse(_))));
        std::fs::write(&p, b"hello\n").unwrap();
        assert!(matches!(read_complex_matrices(&p), Err(Error::Parse(_))));
    }

    #[test]
    fn table_round_trip() {
        let p = tmp("t.csv");
        write_table(&p, &["a", "b"], &[vec!["1".into(), "x".into()]]).unwrap();
        let (h, rows) = read_table(&p).unwrap();
        assert_eq!(h, vec!["a", "b"]);
        assert_eq!(rows, vec![vec!["1".to_string(), "x".to_string()]]);
    }
}
