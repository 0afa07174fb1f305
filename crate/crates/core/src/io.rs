//! On-disk formats: model manifests with little-endian `f64` blobs, 8-bit
//! PGM images and single-row CSV tensors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, CountingModel, Dense, Differentiable, Model, ModelKind};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the blob, in `f64` elements.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activation: Option<Activation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counting: Option<CountingModel>,
    /// Blob file name, relative to the manifest.
    pub blob: String,
    pub parameters: Vec<ParameterEntry>,
}

pub fn f64_to_le_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn f64_from_le_bytes(bytes: &[u8]) -> Option<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect(),
    )
}

fn blob_path_for(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

/// Writes `<path>` (JSON manifest) and a sibling `.bin` parameter blob.
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let blob_path = blob_path_for(path);
    let mut blob = Vec::new();
    let mut parameters = Vec::new();
    for (name, tensor) in model.parameters() {
        parameters.push(ParameterEntry {
            name,
            shape: tensor.shape().to_vec(),
            offset: blob.len(),
        });
        blob.extend_from_slice(tensor.data());
    }
    let manifest = ModelManifest {
        kind: model.kind(),
        input_dim: model.input_dim(),
        num_classes: model.num_classes(),
        activation: model.activation(),
        counting: match model {
            Model::Counting(c) => Some(c.clone()),
            _ => None,
        },
        blob: blob_path
            .file_name()
            .expect("manifest has a file name")
            .to_string_lossy()
            .into_owned(),
        parameters,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))?;
    std::fs::write(&blob_path, f64_to_le_bytes(&blob)).map_err(|e| Error::io(&blob_path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: ModelManifest =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let blob_path = path.with_file_name(&manifest.blob);
    let bytes = std::fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    let blob = f64_from_le_bytes(&bytes)
        .ok_or_else(|| Error::format(&blob_path, "blob length is not a multiple of 8"))?;

    let tensor = |entry: &ParameterEntry| -> Result<Tensor> {
        let numel: usize = entry.shape.iter().product();
        let slice = blob
            .get(entry.offset..entry.offset + numel)
            .ok_or_else(|| Error::format(&blob_path, format!("{} runs past the blob", entry.name)))?;
        Tensor::new(entry.shape.clone(), slice.to_vec())
            .map_err(|e| Error::format(&blob_path, format!("{}: {e}", entry.name)))
    };

    let model = match manifest.kind {
        ModelKind::Counting => {
            let c = manifest
                .counting
                .clone()
                .ok_or_else(|| Error::format(path, "counting model without parameters"))?;
            crate::model::build_counting_model(&c.input_shape, c.target_value, c.tolerance)?
        }
        kind => {
            if !manifest.parameters.len().is_multiple_of(2) || manifest.parameters.is_empty() {
                return Err(Error::format(path, "expected weight/bias pairs"));
            }
            let layers = manifest
                .parameters
                .chunks_exact(2)
                .map(|pair| Dense::new(tensor(&pair[0])?, tensor(&pair[1])?))
                .collect::<Result<Vec<_>>>()?;
            match kind {
                ModelKind::Linear if layers.len() == 1 => {
                    Model::Linear(layers.into_iter().next().expect("one layer"))
                }
                ModelKind::Linear => {
                    return Err(Error::format(path, "linear model with several layers"))
                }
                _ => Model::mlp(
                    layers,
                    manifest.activation.unwrap_or(Activation::Relu),
                )?,
            }
        }
    };
    if model.input_dim() != manifest.input_dim || model.num_classes() != manifest.num_classes {
        return Err(Error::format(path, "manifest dimensions disagree with parameters"));
    }
    Ok(model)
}

/// Binary (P5) 8-bit PGM.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Decodes P5 or P2 PGM into `(width, height, maxval, samples)`.
pub fn decode_pgm(bytes: &[u8], origin: &Path) -> Result<(usize, usize, u16, Vec<u16>)> {
    let err = |m: &str| Error::format(origin, m.to_string());
    let mut pos = 0;
    let next_token = |pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = next_token(&mut pos).ok_or_else(|| err("empty file"))?;
    let number = |pos: &mut usize, what: &str| -> Result<usize> {
        next_token(pos)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(&format!("bad {what}")))
    };
    let width = number(&mut pos, "width")?;
    let height = number(&mut pos, "height")?;
    let maxval = number(&mut pos, "maxval")?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(err("invalid header"));
    }
    let count = width * height;
    let samples: Vec<u16> = match magic.as_str() {
        "P5" => {
            pos += 1; // single whitespace after maxval
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            let raster = bytes
                .get(pos..pos + need)
                .ok_or_else(|| err("truncated raster"))?;
            if wide {
                raster
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]))
                    .collect()
            } else {
                raster.iter().map(|&b| u16::from(b)).collect()
            }
        }
        "P2" => (0..count)
            .map(|_| number(&mut pos, "sample").map(|v| v as u16))
            .collect::<Result<_>>()?,
        _ => return Err(err("not a PGM (expected P5 or P2)")),
    };
    if samples.iter().any(|&s| usize::from(s) > maxval) {
        return Err(err("sample exceeds maxval"));
    }
    Ok((width, height, maxval as u16, samples))
}

/// Reads a PGM as a `[height, width]` tensor rescaled to `[0, 1]`.
pub fn read_pgm_image(path: &Path) -> Result<Tensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, maxval, samples) = decode_pgm(&bytes, path)?;
    let data = samples
        .iter()
        .map(|&s| f64::from(s) / f64::from(maxval))
        .collect();
    Tensor::new(vec![height, width], data)
}

/// Writes a `[height, width]` tensor with values in `[0, 1]` as 8-bit PGM.
pub fn write_pgm_image(path: &Path, image: &Tensor) -> Result<()> {
    let (h, w) = image_dims(image)?;
    let pixels: Vec<u8> = image
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    std::fs::write(path, encode_pgm(w, h, &pixels)).map_err(|e| Error::io(path, e))
}

pub fn image_dims(image: &Tensor) -> Result<(usize, usize)> {
    match image.shape() {
        [h, w] => Ok((*h, *w)),
        other => Err(Error::Input(format!(
            "expected a [height, width] image, got shape {other:?}"
        ))),
    }
}

/// Reads row `row` of a CSV of flattened pixels. A trailing column beyond
/// `expected_len` (a dataset label) is ignored.
pub fn read_csv_row(path: &Path, row: usize, expected_len: usize) -> Result<Tensor> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let line = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .nth(row)
        .ok_or_else(|| Error::format(path, format!("no row {row}")))?;
    let values = line
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Error::format(path, format!("row {row}: {e}")))?;
    if values.len() != expected_len && values.len() != expected_len + 1 {
        return Err(Error::ShapeMismatch {
            expected: vec![expected_len],
            actual: vec![values.len()],
        });
    }
    Tensor::from_vec(values[..expected_len].to_vec())
}
