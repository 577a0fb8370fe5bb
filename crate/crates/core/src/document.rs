//! The JSON germ document read by the command line tool.
//!
//! ```json
//! {
//!   "version": 1,
//!   "eigenvalues": { "unit": [{"rho": "0", "sigma": "1"}], "theta": 0.618, "inner": [[0.5, 0.0]] },
//!   "jet": { "order": 8, "coefficients": "relative", "terms": [[1, [2, 1], -0.5, 0.0]] },
//!   "options": { "degree_bound": 12 }
//! }
//! ```
//!
//! Term components are 1-based. With `"relative"` coefficients the stored
//! value for component `j` is multiplied by `λ_j`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jets::{GermJet, JetError, DEFAULT_JET_ORDER};
use crate::multi_index::MultiIndex;
use crate::resonance::{EigenvalueSpec, ResonanceError, UnitEigenvalue};

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Eigenvalues(#[from] ResonanceError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermSpecDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub eigenvalues: EigenvaluesDoc,
    pub jet: JetDoc,
    #[serde(default)]
    pub options: OptionsDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenvaluesDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub unit: Vec<UnitEigenvalue>,
    pub theta: f64,
    #[serde(default)]
    pub inner: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientMode {
    #[default]
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetDoc {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub coefficients: CoefficientMode,
    /// `[component, exponent, re, im]`.
    #[serde(default)]
    pub terms: Vec<(usize, Vec<u32>, f64, f64)>,
}

fn default_order() -> usize {
    DEFAULT_JET_ORDER
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsDoc {
    pub degree_bound: Option<usize>,
    pub jet_order: Option<usize>,
    #[serde(default)]
    pub basin: BasinOverrides,
    pub samples: Option<usize>,
    pub rng_seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub burn_in: Option<usize>,
    pub horizon: Option<usize>,
    pub fatou_seeds: Option<usize>,
    #[serde(default)]
    pub flower: FlowerOverrides,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinOverrides {
    pub radius: Option<f64>,
    pub cone: Option<f64>,
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
    pub petal: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowerOverrides {
    pub radius: Option<f64>,
    pub samples: Option<usize>,
    pub budget: Option<usize>,
    pub trap: Option<f64>,
}

impl GermSpecDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let doc: GermSpecDocument =
            serde_json::from_str(text).map_err(|e| DocumentError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, DocumentError> {
        let text = std::fs::read_to_string(path).map_err(|e| DocumentError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    fn validate(&self) -> Result<(), DocumentError> {
        if self.version != DOCUMENT_VERSION {
            return Err(DocumentError::Schema(format!(
                "unsupported version {} (expected {DOCUMENT_VERSION})",
                self.version
            )));
        }
        let r = self.eigenvalues.unit.len();
        let n = r + self.eigenvalues.inner.len();
        if let Some(dn) = self.eigenvalues.n {
            if dn != n {
                return Err(DocumentError::Schema(format!(
                    "eigenvalues.n = {dn} but {n} eigenvalues are listed"
                )));
            }
        }
        if let Some(dr) = self.eigenvalues.r {
            if dr != r {
                return Err(DocumentError::Schema(format!(
                    "eigenvalues.r = {dr} but {r} unit eigenvalues are listed"
                )));
            }
        }
        if self.jet.order == 0 {
            return Err(DocumentError::Schema("jet.order must be at least 1".into()));
        }
        for (i, (j, q, re, im)) in self.jet.terms.iter().enumerate() {
            if *j == 0 || *j > n {
                return Err(DocumentError::Schema(format!(
                    "jet.terms[{i}]: component {j} outside 1..={n}"
                )));
            }
            if q.len() != n {
                return Err(DocumentError::Schema(format!(
                    "jet.terms[{i}]: exponent has length {} (expected {n})",
                    q.len()
                )));
            }
            let d: u32 = q.iter().sum();
            if d < 2 || d as usize > self.jet.order {
                return Err(DocumentError::Schema(format!(
                    "jet.terms[{i}]: degree {d} outside 2..={}",
                    self.jet.order
                )));
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(DocumentError::Schema(format!(
                    "jet.terms[{i}]: non-finite coefficient"
                )));
            }
        }
        if let Some(p) = self.options.basin.petal {
            if p == 0 {
                return Err(DocumentError::Schema(
                    "options.basin.petal is 1-based".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn eigenvalue_spec(&self) -> Result<EigenvalueSpec, DocumentError> {
        Ok(EigenvalueSpec::new(
            self.eigenvalues.unit.clone(),
            self.eigenvalues.theta,
            self.eigenvalues.inner.clone(),
        )?)
    }

    /// The jet with linear part `λ` and the listed terms.
    pub fn germ(&self, spec: &EigenvalueSpec) -> Result<GermJet, DocumentError> {
        let lambdas = spec.eigenvalues();
        let mut jet = GermJet::new(lambdas.clone(), self.jet.order)?;
        for (j, q, re, im) in &self.jet.terms {
            let mut value = Complex64::new(*re, *im);
            if self.jet.coefficients == CoefficientMode::Relative {
                value *= lambdas[j - 1];
            }
            jet.add_term(j - 1, MultiIndex::new(q.clone()), value)?;
        }
        Ok(jet)
    }
}

/// Example documents shipped with the library, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("ex0", include_str!("../specs/ex0.json")),
    ("ex1a", include_str!("../specs/ex1a.json")),
    ("ex1b", include_str!("../specs/ex1b.json")),
    ("flower-k2", include_str!("../specs/flower_k2.json")),
    ("degenerate", include_str!("../specs/degenerate.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}
