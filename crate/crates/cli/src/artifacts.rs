//! On-disk formats owned by the command-line tool: CSI feedback, detection
//! tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use jrc_core::io::{read_table, write_table};
use jrc_core::metrics::TargetEstimate;
use jrc_core::{CVector, Complex, CsiReport, Detection, Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CsiFile {
    num_subcarriers: usize,
    num_tx: usize,
    receivers: Vec<CsiEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CsiEntry {
    noise_var: f64,
    /// `h[n][l] = [re, im]`, transpose convention.
    h: Vec<Vec<[f64; 2]>>,
}

pub fn write_csi(path: &Path, csi: &CsiReport) -> Result<()> {
    let num_subcarriers = csi.h_hat.first().map_or(0, Vec::len);
    let num_tx = csi.h_hat.first().and_then(|h| h.first()).map_or(0, |v| v.len());
    let file = CsiFile {
        num_subcarriers,
        num_tx,
        receivers: csi
            .h_hat
            .iter()
            .zip(&csi.noise_var_hat)
            .map(|(h, &noise_var)| CsiEntry {
                noise_var,
                h: h.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_csi(path: &Path) -> Result<CsiReport> {
    let text = fs::read_to_string(path)?;
    let file: CsiFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut h_hat = Vec::with_capacity(file.receivers.len());
    for (q, r) in file.receivers.iter().enumerate() {
        if r.h.len() != file.num_subcarriers || r.h.iter().any(|v| v.len() != file.num_tx) {
            return Err(Error::Dimension(format!(
                "{}: receiver {q} does not hold {} x {} coefficients",
                path.display(),
                file.num_subcarriers,
                file.num_tx
            )));
        }
        h_hat.push(
            r.h.iter()
                .map(|v| CVector::from_iterator(v.len(), v.iter().map(|&[re, im]| Complex::new(re, im))))
                .collect(),
        );
    }
    Ok(CsiReport {
        h_hat,
        noise_var_hat: file.receivers.iter().map(|r| r.noise_var).collect(),
    })
}

const DETECTION_HEADER: [&str; 9] = [
    "range_m",
    "azimuth_deg",
    "azimuth_rad",
    "gain_re",
    "gain_im",
    "gain_abs2",
    "peak_magnitude",
    "row",
    "col",
];

pub fn write_detections(path: &Path, detections: &[Detection]) -> Result<()> {
    let rows: Vec<Vec<String>> = detections
        .iter()
        .map(|d| {
            vec![
                d.range_m.to_string(),
                d.azimuth_rad.to_degrees().to_string(),
                d.azimuth_rad.to_string(),
                d.gain_estimate.re.to_string(),
                d.gain_estimate.im.to_string(),
                d.gain_estimate.norm_sqr().to_string(),
                d.peak_magnitude.to_string(),
                d.peak_indices.0.to_string(),
                d.peak_indices.1.to_string(),
            ]
        })
        .collect();
    write_table(path, &DETECTION_HEADER, &rows)
}

/// Reads the target parameters back from a detection table.
pub fn read_detections(path: &Path) -> Result<Vec<TargetEstimate>> {
    let (header, rows) = read_table(path)?;
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column `{name}`", path.display())))
    };
    let (ir, ia, ig) = (column("range_m")?, column("azimuth_rad")?, column("gain_abs2")?);
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let get = |c: usize| -> Result<f64> {
                row.get(c)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("{}: bad value on data row {}", path.display(), i + 1)))
            };
            Ok(TargetEstimate {
                range_m: get(ir)?,
                azimuth_rad: get(ia)?,
                gain_abs2: get(ig)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub command: String,
    pub seed: u64,
    pub output_dir: String,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn record(dir: &Path, rel: &str) -> Result<FileRecord> {
    let bytes = fs::read(dir.join(rel)).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.join(rel).display())))
    })?;
    Ok(FileRecord {
        path: rel.to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

impl RunManifest {
    /// Checksums every produced file and writes `manifest.json` into `dir`.
    pub fn write(scenario: &Path, command: &str, seed: u64, dir: &Path, produced: &[PathBuf]) -> Result<Self> {
        let mut files = Vec::with_capacity(produced.len());
        for p in produced {
            let rel = p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned();
            files.push(record(dir, &rel)?);
        }
        let manifest = RunManifest {
            scenario: scenario.display().to_string(),
            command: command.to_string(),
            seed,
            output_dir: dir.display().to_string(),
            files,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
        manifest.check(dir)?;
        Ok(manifest)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Confirms every listed file exists with the recorded size and checksum.
    pub fn check(&self, dir: &Path) -> Result<()> {
        for f in &self.files {
            let now = record(dir, &f.path)?;
            if now != *f {
                return Err(Error::Invariant(format!("{} changed after it was recorded", f.path)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use jrc_core::channel::comm_channel;
    use jrc_core::scenario::reference_scenario;

    #[test]
    fn csi_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("csi.json");
        let mut csi = CsiReport::perfect(&comm_channel::<f64>(&reference_scenario()));
        csi.noise_var_hat[1] = 1.234_567_890_123e-13;
        write_csi(&p, &csi).unwrap();
        assert_eq!(read_csi(&p).unwrap(), csi);
    }

    #[test]
    fn detection_table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = Detection {
            range_m: 25.123456789,
            azimuth_rad: -0.5234,
            gain_estimate: Complex::new(1.5e-5, -2.25e-6),
            peak_magnitude: 0.75,
            peak_indices: (85, 64),
        };
        write_detections(&p, &[d.clone()]).unwrap();
        let back = read_detections(&p).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].range_m, d.range_m);
        assert_eq!(back[0].azimuth_rad, d.azimuth_rad);
        assert_eq!(back[0].gain_abs2, d.gain_estimate.norm_sqr());
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.txt");
        fs::write(&f, "hello").unwrap();
        let m = RunManifest::write(Path::new("s.json"), "ndp", 1, dir.path(), &[f.clone()]).unwrap();
        assert_eq!(m.files[0].path, "a.txt");
        assert_eq!(m.files[0].bytes, 5);
        assert_eq!(RunManifest::read(dir.path()).unwrap(), m);
        fs::write(&f, "bye").unwrap();
        assert!(m.check(dir.path()).is_err());
        fs::remove_file(&f).unwrap();
        assert!(m.check(dir.path()).is_err());
    }
}
