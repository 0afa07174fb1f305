//! Attribution and path artifacts.
//!
//! * Attribution: `index,value` CSV, an 8-bit PGM saliency map min-max
//!   scaled per image, and a JSON sidecar recording the scaling.
//! * Path: a JSON header plus a little-endian `f64` blob laid out as
//!   `start[d] ‖ end[d] ‖ step_1[d] ‖ … ‖ step_n[d]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{encode_pgm, f64_from_le_bytes, f64_to_le_bytes};
use crate::path::PathSegments;
use crate::samp::{SampConfig, StepBound};
use crate::tensor::Tensor;

pub fn attribution_csv(values: &Tensor) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.data().iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

pub fn parse_attribution_csv(text: &str, origin: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::format(origin, format!("line {}: expected index,value", n + 1)))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::format(origin, format!("line {}: bad index", n + 1)))?;
        if idx != values.len() {
            return Err(Error::format(origin, format!("line {}: index out of order", n + 1)));
        }
        values.push(
            val.trim()
                .parse()
                .map_err(|_| Error::format(origin, format!("line {}: bad value", n + 1)))?,
        );
    }
    Ok(values)
}

/// Min-max scaling applied to a saliency map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyScaling {
    pub width: usize,
    pub height: usize,
    pub min: f64,
    pub max: f64,
}

impl SaliencyScaling {
    /// Approximate attribution value for an 8-bit level.
    pub fn value_of(&self, level: u8) -> f64 {
        self.min + (self.max - self.min) * f64::from(level) / 255.0
    }
}

/// Saliency map of `values` laid out as `height × width`.
pub fn saliency_pgm(values: &Tensor, height: usize, width: usize) -> Result<(Vec<u8>, SaliencyScaling)> {
    if height * width != values.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![height, width],
            actual: values.shape().to_vec(),
        });
    }
    let min = values.data().iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let pixels = values
        .data()
        .iter()
        .map(|v| {
            if span > 0.0 {
                ((v - min) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect::<Vec<_>>();
    Ok((
        encode_pgm(width, height, &pixels),
        SaliencyScaling {
            width,
            height,
            min,
            max,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathHeader {
    /// Number of steps.
    pub n: usize,
    /// Features per point.
    pub d: usize,
    pub shape: Vec<usize>,
    pub s: Option<usize>,
    /// Absolute step bound; `None` when unbounded or not applicable.
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub blob: String,
}

impl PathHeader {
    pub fn for_path(path: &PathSegments, cfg: Option<&SampConfig>, blob: &str) -> Self {
        let length = path.start().l1_distance(path.end());
        Self {
            n: path.len(),
            d: path.start().len(),
            shape: path.start().shape().to_vec(),
            s: cfg.map(SampConfig::step_pixels),
            eta: cfg.and_then(|c| match c.eta() {
                StepBound::Ratio(_) => Some(c.eta_for(length)),
                StepBound::Unbounded => None,
            }),
            lambda: cfg.map(SampConfig::momentum),
            blob: blob.to_string(),
        }
    }
}

pub fn path_blob(path: &PathSegments) -> Vec<u8> {
    let mut flat = Vec::with_capacity((path.len() + 2) * path.start().len());
    flat.extend_from_slice(path.start().data());
    flat.extend_from_slice(path.end().data());
    for step in path.steps() {
        flat.extend_from_slice(step.data());
    }
    f64_to_le_bytes(&flat)
}

/// Writes `<stem>.json` and `<stem>.bin` into `dir`.
pub fn write_path(dir: &Path, stem: &str, path: &PathSegments, cfg: Option<&SampConfig>) -> Result<()> {
    let blob_name = format!("{stem}.bin");
    let header = PathHeader::for_path(path, cfg, &blob_name);
    let json_path = dir.join(format!("{stem}.json"));
    let blob_path = dir.join(&blob_name);
    std::fs::write(&json_path, serde_json::to_string_pretty(&header).expect("header") + "\n")
        .map_err(|e| Error::io(&json_path, e))?;
    std::fs::write(&blob_path, path_blob(path)).map_err(|e| Error::io(&blob_path, e))
}

pub fn read_path(header_path: &Path) -> Result<(PathHeader, PathSegments)> {
    let text = std::fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header: PathHeader =
        serde_json::from_str(&text).map_err(|e| Error::format(header_path, e.to_string()))?;
    let blob_path = header_path.with_file_name(&header.blob);
    let bytes = std::fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    let flat = f64_from_le_bytes(&bytes)
        .ok_or_else(|| Error::format(&blob_path, "length is not a multiple of 8"))?;
    let d = header.d;
    if d == 0 || flat.len() != (header.n + 2) * d {
        return Err(Error::format(
            &blob_path,
            format!("expected {} values, found {}", (header.n + 2) * d, flat.len()),
        ));
    }
    let tensor = |chunk: &[f64]| Tensor::new(header.shape.clone(), chunk.to_vec());
    let mut chunks = flat.chunks_exact(d);
    let start = tensor(chunks.next().expect("start"))?;
    let end = tensor(chunks.next().expect("end"))?;
    let steps = chunks.map(tensor).collect::<Result<Vec<_>>>()?;
    let path = PathSegments::new(start, end, steps)?;
    Ok((header, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::decode_pgm;
    use crate::path::straight_line_path;

    #[test]
    fn attribution_csv_round_trip() {
        let v = Tensor::from_vec(vec![0.5, -1.25, 3.0e-17]).unwrap();
        let back = parse_attribution_csv(&attribution_csv(&v), Path::new("a")).unwrap();
        assert_eq!(back, v.data());
    }

    #[test]
    fn saliency_scaling() {
        let v = Tensor::from_vec(vec![-1.0, 0.0, 1.0, 3.0]).unwrap();
        let (bytes, scale) = saliency_pgm(&v, 2, 2).unwrap();
        let (w, h, _, px) = decode_pgm(&bytes, Path::new("s")).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(px, vec![0, 64, 128, 255]);
        assert_eq!(scale.value_of(255), 3.0);
        assert_eq!(scale.value_of(0), -1.0);
        let flat = Tensor::from_vec(vec![2.0; 4]).unwrap();
        let (bytes, _) = saliency_pgm(&flat, 2, 2).unwrap();
        assert!(decode_pgm(&bytes, Path::new("s")).unwrap().3.iter().all(|&p| p == 0));
        assert!(saliency_pgm(&v, 3, 2).is_err());
    }

    #[test]
    fn path_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x0 = Tensor::zeros(&[2, 2]);
        let xt = Tensor::new(vec![2, 2], vec![0.1, 0.7, -0.3, 1.0]).unwrap();
        let p = straight_line_path(&x0, &xt, 3).unwrap();
        let cfg = SampConfig::improved(2).unwrap();
        write_path(dir.path(), "path", &p, Some(&cfg)).unwrap();
        let (h, back) = read_path(&dir.path().join("path.json")).unwrap();
        assert_eq!(back, p);
        assert_eq!((h.n, h.d, h.s, h.lambda), (3, 4, Some(2), Some(0.5)));
        assert!((h.eta.unwrap() - 0.21).abs() < 1e-12);
    }
}
