//! Attribution methods compared by the evaluation harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Differentiable;
use crate::path::{integrate_path, straight_line_path};
use crate::samp::{attribute_split, DirectionalAttribution, SampConfig};
use crate::tensor::Tensor;

/// Riemann steps used for the straight-line baseline by default.
pub const DEFAULT_IG_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Integrated gradients: straight line from the baseline, `steps` equal
    /// segments.
    Ig { steps: usize },
    Samp(SampConfig),
}

impl Method {
    /// Parses `ig`, `samp` or `samp++` with the given step size and
    /// direction-sensitive SAMP++ settings.
    pub fn from_name(name: &str, samp: SampConfig, improved: SampConfig, ig_steps: usize) -> Result<Self> {
        match name {
            "ig" => Ok(Method::Ig { steps: ig_steps }),
            "samp" => Ok(Method::Samp(samp)),
            "samp++" | "samppp" => Ok(Method::Samp(improved)),
            other => Err(Error::Input(format!(
                "unknown method {other:?} (expected ig, samp or samp++)"
            ))),
        }
    }

    pub fn explain<M: Differentiable + ?Sized>(
        &self,
        model: &M,
        class: usize,
        x0: &Tensor,
        x: &Tensor,
    ) -> Result<DirectionalAttribution> {
        self.explain_split(model, class, x0, x0, x)
    }

    /// `x0_back` is the baseline the SAMP removal search ends at and the one
    /// integrated gradients starts from; `x0_forth` is where the SAMP
    /// insertion search starts.
    pub fn explain_split<M: Differentiable + ?Sized>(
        &self,
        model: &M,
        class: usize,
        x0_back: &Tensor,
        x0_forth: &Tensor,
        x: &Tensor,
    ) -> Result<DirectionalAttribution> {
        let x0 = x0_back;
        match self {
            Method::Ig { steps } => {
                let path = straight_line_path(x0, x, *steps)?;
                let a = integrate_path(model, class, &path, None)?;
                Ok(DirectionalAttribution {
                    combined: a.clone(),
                    to_baseline: None,
                    to_target: Some((a, path)),
                })
            }
            Method::Samp(cfg) => attribute_split(model, class, x0_back, x0_forth, x, cfg),
        }
    }
}
