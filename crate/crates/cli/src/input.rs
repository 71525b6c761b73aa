//! Query documents: the point to certify, its label and the input domain.

use serde::Deserialize;

use l0cert::network::FORMAT_VERSION;
use l0cert::{BoxDomain, Error, LabeledInput, Network, Result};

/// A bound given either once for every coordinate or per coordinate.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Uniform(f64),
    PerCoordinate(Vec<f64>),
}

impl Bound {
    fn expand(&self, n: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            Bound::Uniform(v) => Ok(vec![*v; n]),
            Bound::PerCoordinate(v) if v.len() == n => Ok(v.clone()),
            Bound::PerCoordinate(v) => Err(Error::Schema {
                path: format!("domain.{field}"),
                message: format!("expected {n} values, found {}", v.len()),
            }),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDoc {
    pub lower: Bound,
    pub upper: Bound,
}

impl Default for DomainDoc {
    fn default() -> Self {
        Self {
            lower: Bound::Uniform(0.0),
            upper: Bound::Uniform(1.0),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    pub format_version: u32,
    /// Flattened in height, width, channel order.
    pub point: Vec<f64>,
    #[serde(default)]
    pub label: Option<usize>,
    /// `[0, 1]` for every coordinate when absent.
    #[serde(default)]
    pub domain: DomainDoc,
    /// Perturbable entries (pixels, not coordinates); all entries when absent.
    #[serde(default)]
    pub perturbable: Option<Vec<usize>>,
}

/// A query document resolved against a network.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub input: LabeledInput<f64>,
    pub domain: BoxDomain<f64>,
    pub perturbable: Option<Vec<usize>>,
}

pub fn parse_input(bytes: &[u8]) -> Result<InputDoc> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: InputDoc = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Schema {
            path: "format_version".into(),
            message: format!(
                "unsupported version {}, expected {FORMAT_VERSION}",
                doc.format_version
            ),
        });
    }
    Ok(doc)
}

/// Checks the document against `net` and fills in the label: an explicit
/// `label` argument wins, then the document, then the network's prediction.
pub fn resolve(doc: &InputDoc, net: &Network<f64>, label: Option<usize>) -> Result<Resolved> {
    let n = net.input_dim();
    if doc.point.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: doc.point.len(),
        });
    }
    let domain = BoxDomain::new(
        doc.domain.lower.expand(n, "lower")?,
        doc.domain.upper.expand(n, "upper")?,
        net.input_shape().channels,
    )?;
    let label = match label.or(doc.label) {
        Some(l) => l,
        None => net.classify(&doc.point)?,
    };
    Ok(Resolved {
        input: LabeledInput::new(doc.point.clone(), label, net.output_count())?,
        domain,
        perturbable: doc.perturbable.clone(),
    })
}
