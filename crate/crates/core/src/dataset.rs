//! Labelled sample collections and the synthetic fixture generators.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Tensor>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(inputs: Vec<Tensor>, labels: Vec<usize>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        if let Some(first) = inputs.first() {
            if let Some(bad) = inputs.iter().position(|x| x.len() != first.len()) {
                return Err(Error::Input(format!(
                    "sample {bad} has {} features, expected {}",
                    inputs[bad].len(),
                    first.len()
                )));
            }
        }
        Ok(Self { inputs, labels })
    }

    pub fn inputs(&self) -> &[Tensor] {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.inputs.first().map_or(0, Tensor::len)
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn check_labels(&self, num_classes: usize) -> Result<()> {
        match self.labels.iter().position(|&l| l >= num_classes) {
            Some(i) => Err(Error::Input(format!(
                "label {} of sample {i} is not below {num_classes}",
                self.labels[i]
            ))),
            None => Ok(()),
        }
    }

    /// One row per sample, features then the label in the last column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (x, label) in self.inputs.iter().zip(&self.labels) {
            for v in x.data() {
                write!(out, "{v},").unwrap();
            }
            writeln!(out, "{label}").unwrap();
        }
        out
    }

    /// Parses [`Dataset::to_csv`] output; every sample gets `shape` when given.
    pub fn from_csv(text: &str, shape: Option<&[usize]>, origin: &Path) -> Result<Self> {
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 2 {
                return Err(Error::format(
                    origin,
                    format!("line {}: need at least one feature and a label", lineno + 1),
                ));
            }
            let (features, label) = fields.split_at(fields.len() - 1);
            let label: usize = label[0].parse().map_err(|_| {
                Error::format(origin, format!("line {}: bad label {:?}", lineno + 1, label[0]))
            })?;
            let values = features
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Error::format(origin, format!("line {}: {e}", lineno + 1)))?;
            let shape = shape.map_or_else(|| vec![values.len()], <[usize]>::to_vec);
            inputs.push(
                Tensor::new(shape, values)
                    .map_err(|e| Error::format(origin, format!("line {}: {e}", lineno + 1)))?,
            );
            labels.push(label);
        }
        Self::new(inputs, labels).map_err(|e| Error::format(origin, e.to_string()))
    }

    pub fn load_csv(path: &Path, shape: Option<&[usize]>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, shape, path)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            inputs: self.inputs[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

/// Two-class blob images of `side × side` pixels in `[0, 1]`.
///
/// Each image holds one Gaussian blob (width 1.2 px) over a faint noise
/// floor. Class 0 places the blob in the left half, class 1 in the right
/// half; the vertical position is uniform. Labels alternate.
pub fn blob_images(n: usize, side: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).expect("valid std");
    let width = 1.2f64;
    let half = side as f64 / 2.0;
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let cx = if label == 0 {
            rng.random_range(0.5..half - 0.5)
        } else {
            rng.random_range(half - 0.5..side as f64 - 0.5)
        };
        let cy = rng.random_range(0.5..side as f64 - 0.5);
        let amplitude = rng.random_range(0.7..1.0);
        let mut data = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                let dx = c as f64 + 0.5 - cx;
                let dy = r as f64 + 0.5 - cy;
                let v = amplitude * (-(dx * dx + dy * dy) / (2.0 * width * width)).exp()
                    + 0.1
                    + noise.sample(&mut rng);
                data.push(v.clamp(0.0, 1.0));
            }
        }
        inputs.push(Tensor::new(vec![side, side], data).expect("finite pixels"));
        labels.push(label);
    }
    Dataset { inputs, labels }
}

/// Linearly separable 2-D points: label 1 iff `x0 + x1 > 0`, with a margin.
pub fn separable_points(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while inputs.len() < n {
        let x: f64 = rng.random_range(-1.0..1.0);
        let y: f64 = rng.random_range(-1.0..1.0);
        if (x + y).abs() < 0.2 {
            continue;
        }
        labels.push(usize::from(x + y > 0.0));
        inputs.push(Tensor::from_vec(vec![x, y]).expect("finite"));
    }
    Dataset { inputs, labels }
}
