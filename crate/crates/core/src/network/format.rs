//! JSON model documents.
//!
//! Numbers are written in shortest round-trip form, so a saved model
//! reloads with bit-identical weights. The schema lives in
//! `docs/model.schema.json`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::network::{Conv2d, Layer, Network, Shape};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc<L> {
    format_version: u32,
    /// `[height, width]`
    input_shape: [usize; 2],
    channels: usize,
    layers: Vec<L>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LayerDoc {
    Dense {
        weight: Vec<Vec<f64>>,
        bias: Vec<f64>,
    },
    Conv2d {
        /// `[out_channels][in_channels][kernel_h][kernel_w]`
        kernel: Vec<Vec<Vec<Vec<f64>>>>,
        bias: Vec<f64>,
        stride: [usize; 2],
        padding: [usize; 2],
    },
    Relu,
}

fn unit_stride() -> [usize; 2] {
    [1, 1]
}

fn schema(path: String, message: impl Into<String>) -> Error {
    Error::Schema {
        path,
        message: message.into(),
    }
}

fn conv_from_doc(
    i: usize,
    kernel: Vec<Vec<Vec<Vec<f64>>>>,
    bias: Vec<f64>,
    stride: [usize; 2],
    padding: [usize; 2],
) -> Result<Conv2d<f64>> {
    let oc = kernel.len();
    let ic = kernel.first().map_or(0, Vec::len);
    let kh = kernel.first().and_then(|k| k.first()).map_or(0, Vec::len);
    let kw = kernel
        .first()
        .and_then(|k| k.first())
        .and_then(|k| k.first())
        .map_or(0, Vec::len);
    if oc == 0 || ic == 0 || kh == 0 || kw == 0 {
        return Err(schema(
            format!("layers[{i}].kernel"),
            "kernel must be a non-empty 4-d array",
        ));
    }
    let mut flat = Vec::with_capacity(oc * ic * kh * kw);
    for (o, per_out) in kernel.iter().enumerate() {
        if per_out.len() != ic {
            return Err(schema(
                format!("layers[{i}].kernel[{o}]"),
                format!("expected {ic} input channels"),
            ));
        }
        for (c, plane) in per_out.iter().enumerate() {
            if plane.len() != kh {
                return Err(schema(
                    format!("layers[{i}].kernel[{o}][{c}]"),
                    format!("expected {kh} rows"),
                ));
            }
            for (r, row) in plane.iter().enumerate() {
                if row.len() != kw {
                    return Err(schema(
                        format!("layers[{i}].kernel[{o}][{c}][{r}]"),
                        format!("expected {kw} columns"),
                    ));
                }
                flat.extend_from_slice(row);
            }
        }
    }
    if stride.contains(&0) {
        return Err(schema(
            format!("layers[{i}].stride"),
            "stride must be positive",
        ));
    }
    Ok(Conv2d {
        out_channels: oc,
        in_channels: ic,
        kernel_h: kh,
        kernel_w: kw,
        kernel: flat,
        bias,
        stride: (stride[0], stride[1]),
        padding: (padding[0], padding[1]),
    })
}

/// Parses a model document. Schema problems report the offending field path.
pub fn load_model(bytes: &[u8]) -> Result<Network<f64>> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: ModelDoc<Value> = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })?;
    if doc.format_version != FORMAT_VERSION {
        return Err(schema(
            "format_version".into(),
            format!(
                "unsupported version {}, expected {FORMAT_VERSION}",
                doc.format_version
            ),
        ));
    }
    if doc.channels == 0 {
        return Err(schema("channels".into(), "must be at least 1"));
    }
    let layers = doc
        .layers
        .into_iter()
        .enumerate()
        .map(|(i, raw)| parse_layer(i, raw))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .enumerate()
        .map(|(i, l)| match l {
            LayerDoc::Dense { weight, bias } => Ok(Layer::Dense { weight, bias }),
            LayerDoc::Conv2d {
                kernel,
                bias,
                stride,
                padding,
            } => conv_from_doc(i, kernel, bias, stride, padding).map(Layer::Conv2d),
            LayerDoc::Relu => Ok(Layer::Relu),
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(
        Shape::new(doc.input_shape[0], doc.input_shape[1], doc.channels),
        layers,
    )
}

// Internally tagged enums buffer their content and lose field paths, so the
// tag is read first and the body parsed separately.
fn parse_layer(i: usize, raw: Value) -> Result<LayerDoc> {
    let obj = raw
        .as_object()
        .ok_or_else(|| schema(format!("layers[{i}]"), "expected a layer object"))?;
    let kind = obj
        .get("type")
        .ok_or_else(|| schema(format!("layers[{i}]"), "missing field `type`"))?;
    let kind = kind
        .as_str()
        .ok_or_else(|| schema(format!("layers[{i}].type"), "expected a string"))?;
    if !matches!(kind, "dense" | "conv2d" | "relu") {
        return Err(schema(
            format!("layers[{i}].type"),
            format!("unknown layer type `{kind}`, expected dense, conv2d or relu"),
        ));
    }
    let mut body = obj.clone();
    body.remove("type");
    let body = Value::Object(body);
    match kind {
        "dense" => layer_body::<DenseBody>(i, body).map(|b| LayerDoc::Dense {
            weight: b.weight,
            bias: b.bias,
        }),
        "conv2d" => layer_body::<ConvBody>(i, body).map(|b| LayerDoc::Conv2d {
            kernel: b.kernel,
            bias: b.bias,
            stride: b.stride,
            padding: b.padding,
        }),
        _ => layer_body::<ReluBody>(i, body).map(|_| LayerDoc::Relu),
    }
}

fn layer_body<B: serde::de::DeserializeOwned>(i: usize, body: Value) -> Result<B> {
    serde_path_to_error::deserialize(body).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            format!("layers[{i}]")
        } else {
            format!("layers[{i}].{inner}")
        };
        schema(path, e.into_inner().to_string())
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseBody {
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvBody {
    kernel: Vec<Vec<Vec<Vec<f64>>>>,
    bias: Vec<f64>,
    #[serde(default = "unit_stride")]
    stride: [usize; 2],
    #[serde(default)]
    padding: [usize; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReluBody {}

fn layer_doc(layer: &Layer<f64>) -> LayerDoc {
    match layer {
        Layer::Dense { weight, bias } => LayerDoc::Dense {
            weight: weight.clone(),
            bias: bias.clone(),
        },
        Layer::Conv2d(c) => {
            let kernel = (0..c.out_channels)
                .map(|o| {
                    (0..c.in_channels)
                        .map(|i| {
                            (0..c.kernel_h)
                                .map(|h| (0..c.kernel_w).map(|w| *c.weight(o, i, h, w)).collect())
                                .collect()
                        })
                        .collect()
                })
                .collect();
            LayerDoc::Conv2d {
                kernel,
                bias: c.bias.clone(),
                stride: [c.stride.0, c.stride.1],
                padding: [c.padding.0, c.padding.1],
            }
        }
        Layer::Relu => LayerDoc::Relu,
    }
}

/// Serialises a model; numeric arrays are kept on one line each.
pub fn save_model(net: &Network<f64>) -> Vec<u8> {
    let shape = net.input_shape();
    let doc = ModelDoc {
        format_version: FORMAT_VERSION,
        input_shape: [shape.height, shape.width],
        channels: shape.channels,
        layers: net.layers().iter().map(layer_doc).collect(),
    };
    let value = serde_json::to_value(&doc).expect("model document is plain data");
    let mut out = String::new();
    write_value(&value, 0, &mut out);
    out.push('\n');
    out.into_bytes()
}

/// Pretty-printer that keeps arrays of scalars inline.
pub(crate) fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&x.to_string());
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use proptest::prelude::*;
    use rand::Rng;

    const THREE_PIXEL: &str = r#"{
      "format_version": 1,
      "input_shape": [1, 3],
      "channels": 1,
      "layers": [
        {"type": "dense", "weight": [[2, -3, 7], [-4, 2, 3]], "bias": [0, 0]},
        {"type": "relu"},
        {"type": "dense", "weight": [[2, -1], [0, 0]], "bias": [8, 0]}
      ]
    }"#;

    #[test]
    fn loads_three_pixel() {
        let net = load_model(THREE_PIXEL.as_bytes()).unwrap();
        let y = net.forward(&[-0.3, 0.0, 0.65]).unwrap();
        assert!((y[0] - 12.75).abs() < 1e-12);
    }

    #[test]
    fn empty_layer_list_rejected() {
        let doc = r#"{"format_version": 1, "input_shape": [1, 3], "channels": 1, "layers": []}"#;
        assert!(
            matches!(load_model(doc.as_bytes()), Err(Error::Schema { ref path, .. }) if path == "layers")
        );
    }

    #[test]
    fn wrong_bias_length_reports_path() {
        let doc = THREE_PIXEL.replace(r#""bias": [8, 0]"#, r#""bias": [8]"#);
        match load_model(doc.as_bytes()) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "layers[2].bias"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn type_errors_report_path() {
        let doc = THREE_PIXEL.replace("[-4, 2, 3]", r#"[-4, "x", 3]"#);
        match load_model(doc.as_bytes()) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "layers[0].weight[1][1]"),
            other => panic!("unexpected {other:?}"),
        }
        let doc = THREE_PIXEL.replace(r#""type": "relu""#, r#""type": "sigmoid""#);
        assert!(matches!(
            load_model(doc.as_bytes()),
            Err(Error::Schema { .. })
        ));
        let doc = THREE_PIXEL.replace(r#""format_version": 1"#, r#""format_version": 2"#);
        assert!(
            matches!(load_model(doc.as_bytes()), Err(Error::Schema { ref path, .. }) if path == "format_version")
        );
    }

    #[test]
    fn shape_chain_errors_are_distinct() {
        let doc = THREE_PIXEL.replace(r#""input_shape": [1, 3]"#, r#""input_shape": [1, 4]"#);
        assert!(matches!(
            load_model(doc.as_bytes()),
            Err(Error::ShapeChain { .. })
        ));
    }

    #[test]
    fn conv_round_trip() {
        let mut rng = rng_from(2);
        let conv = Conv2d {
            out_channels: 2,
            in_channels: 3,
            kernel_h: 2,
            kernel_w: 3,
            kernel: (0..36).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: vec![0.1, -0.2],
            stride: (1, 2),
            padding: (1, 0),
        };
        let net = Network::new(
            Shape::new(4, 5, 3),
            vec![
                Layer::Conv2d(conv),
                Layer::Relu,
                Layer::Dense {
                    weight: vec![vec![0.5; 20]; 2],
                    bias: vec![0.0, 1.0],
                },
            ],
        )
        .unwrap();
        assert_eq!(load_model(&save_model(&net)).unwrap(), net);
    }

    proptest! {
        #[test]
        fn dense_round_trip_is_bit_exact(
            weights in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 6),
            bias in proptest::collection::vec(-1e300..1e300f64, 2),
        ) {
            let net = Network::new(
                Shape::flat(3),
                vec![Layer::Dense { weight: vec![weights[..3].to_vec(), weights[3..].to_vec()], bias }],
            ).unwrap();
            let back = load_model(&save_model(&net)).unwrap();
            prop_assert_eq!(back.layers(), net.layers());
        }
    }
}
