//! Network checkpoints: a short UTF-8 header describing the architecture
//! followed by every parameter as little-endian f64, in layer order.

use std::io::{BufRead, BufReader, Read, Write};

use super::layer::{Activation, LayerSpec};
use super::network::Network;
use super::tensor::Scalar;
use super::NnError;

const MAGIC: &str = "WPN1";

fn act_str(a: Activation) -> String {
    match a {
        Activation::None => "none".into(),
        Activation::LeakyRelu(alpha) => format!("leaky_relu:{alpha}"),
        Activation::Tanh => "tanh".into(),
        Activation::Sigmoid => "sigmoid".into(),
    }
}

fn parse_act(s: &str) -> Result<Activation, NnError> {
    match s {
        "none" => Ok(Activation::None),
        "tanh" => Ok(Activation::Tanh),
        "sigmoid" => Ok(Activation::Sigmoid),
        _ => {
            if let Some(alpha) = s.strip_prefix("leaky_relu:") {
                let alpha: f64 = alpha
                    .parse()
                    .map_err(|_| NnError::Parse(format!("bad leaky_relu slope {alpha:?}")))?;
                Ok(Activation::LeakyRelu(alpha))
            } else {
                Err(NnError::Parse(format!("unknown activation {s:?}")))
            }
        }
    }
}

fn spec_line(spec: &LayerSpec) -> String {
    match spec {
        LayerSpec::Dense {
            out,
            activation,
            dropout,
        } => format!("dense out={out} act={} dropout={dropout}", act_str(*activation)),
        LayerSpec::Conv {
            filters,
            kernel,
            stride,
            activation,
            dropout,
        } => format!(
            "conv filters={filters} kernel={}x{} stride={}x{} act={} dropout={dropout}",
            kernel.0,
            kernel.1,
            stride.0,
            stride.1,
            act_str(*activation)
        ),
        LayerSpec::TConv {
            filters,
            kernel,
            stride,
            activation,
            dropout,
        } => format!(
            "tconv filters={filters} kernel={}x{} stride={}x{} act={} dropout={dropout}",
            kernel.0,
            kernel.1,
            stride.0,
            stride.1,
            act_str(*activation)
        ),
        LayerSpec::Reshape { shape } => {
            let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
            format!("reshape {}", dims.join(" "))
        }
        LayerSpec::Flatten => "flatten".into(),
    }
}

fn kv<'a>(fields: &'a [&str], key: &str, line: &str) -> Result<&'a str, NnError> {
    fields
        .iter()
        .find_map(|f| f.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| NnError::Parse(format!("missing {key}= in layer line {line:?}")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize, NnError> {
    s.parse()
        .map_err(|_| NnError::Parse(format!("bad {what} value {s:?}")))
}

fn parse_pair(s: &str, what: &str) -> Result<(usize, usize), NnError> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| NnError::Parse(format!("bad {what} value {s:?}")))?;
    Ok((parse_usize(a, what)?, parse_usize(b, what)?))
}

fn parse_spec(line: &str) -> Result<LayerSpec, NnError> {
    let mut it = line.split_whitespace();
    let kind = it
        .next()
        .ok_or_else(|| NnError::Parse("empty layer line".into()))?;
    let fields: Vec<&str> = it.collect();
    match kind {
        "dense" => Ok(LayerSpec::Dense {
            out: parse_usize(kv(&fields, "out", line)?, "out")?,
            activation: parse_act(kv(&fields, "act", line)?)?,
            dropout: kv(&fields, "dropout", line)?
                .parse()
                .map_err(|_| NnError::Parse(format!("bad dropout in {line:?}")))?,
        }),
        "conv" | "tconv" => {
            let filters = parse_usize(kv(&fields, "filters", line)?, "filters")?;
            let kernel = parse_pair(kv(&fields, "kernel", line)?, "kernel")?;
            let stride = parse_pair(kv(&fields, "stride", line)?, "stride")?;
            let activation = parse_act(kv(&fields, "act", line)?)?;
            let dropout = kv(&fields, "dropout", line)?
                .parse()
                .map_err(|_| NnError::Parse(format!("bad dropout in {line:?}")))?;
            if kind == "conv" {
                Ok(LayerSpec::Conv {
                    filters,
                    kernel,
                    stride,
                    activation,
                    dropout,
                })
            } else {
                Ok(LayerSpec::TConv {
                    filters,
                    kernel,
                    stride,
                    activation,
                    dropout,
                })
            }
        }
        "reshape" => {
            let shape: Result<Vec<usize>, _> =
                fields.iter().map(|f| parse_usize(f, "reshape dim")).collect();
            Ok(LayerSpec::Reshape { shape: shape? })
        }
        "flatten" => Ok(LayerSpec::Flatten),
        _ => Err(NnError::Parse(format!("unknown layer kind {kind:?}"))),
    }
}

/// Writes architecture and parameters; parameters are stored as f64
/// regardless of the in-memory scalar type.
pub fn save_network<T: Scalar, W: Write>(net: &Network<T>, mut out: W) -> Result<(), NnError> {
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    let dims: Vec<String> = net.input_shape().iter().map(|d| d.to_string()).collect();
    header.push_str(&format!("input {}\n", dims.join(" ")));
    for spec in net.layer_specs() {
        header.push_str(&format!("layer {}\n", spec_line(spec)));
    }
    header.push_str(&format!("params {}\n\n", net.param_count()));
    out.write_all(header.as_bytes())?;
    for layer in net.params() {
        for p in layer {
            let vals = p.to_f64_vec();
            let mut bytes = Vec::with_capacity(vals.len() * 8);
            for v in vals {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&bytes)?;
        }
    }
    Ok(())
}

/// Reads a checkpoint written by [`save_network`].
pub fn load_network<T: Scalar, R: Read>(src: R) -> Result<Network<T>, NnError> {
    let mut r = BufReader::new(src);
    let mut line = String::new();
    let mut read_line = |r: &mut BufReader<R>| -> Result<String, NnError> {
        line.clear();
        let n = r.read_line(&mut line)?;
        if n == 0 {
            return Err(NnError::Parse("unexpected end of checkpoint header".into()));
        }
        Ok(line.trim_end_matches(['\r', '\n']).to_string())
    };
    if read_line(&mut r)? != MAGIC {
        return Err(NnError::Parse("not a network checkpoint".into()));
    }
    let input_line = read_line(&mut r)?;
    let input_shape: Vec<usize> = input_line
        .strip_prefix("input ")
        .ok_or_else(|| NnError::Parse(format!("expected input line, got {input_line:?}")))?
        .split_whitespace()
        .map(|d| parse_usize(d, "input dim"))
        .collect::<Result<_, _>>()?;
    let mut specs = Vec::new();
    let params_declared;
    loop {
        let l = read_line(&mut r)?;
        if let Some(rest) = l.strip_prefix("layer ") {
            specs.push(parse_spec(rest)?);
        } else if let Some(rest) = l.strip_prefix("params ") {
            params_declared = parse_usize(rest, "params count")?;
            break;
        } else {
            return Err(NnError::Parse(format!("unexpected header line {l:?}")));
        }
    }
    let blank = read_line(&mut r)?;
    if !blank.is_empty() {
        return Err(NnError::Parse("expected blank line before parameters".into()));
    }
    let mut net = Network::<T>::new(&input_shape, &specs, 0)?;
    if net.param_count() != params_declared {
        return Err(NnError::Parse(format!(
            "checkpoint declares {params_declared} parameters, architecture has {}",
            net.param_count()
        )));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != params_declared * 8 {
        return Err(NnError::Parse(format!(
            "expected {} parameter bytes, found {}",
            params_declared * 8,
            bytes.len()
        )));
    }
    let mut off = 0;
    for layer in net.params_mut() {
        for p in layer {
            for v in p.data.iter_mut() {
                let raw = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
                *v = T::from_f64(raw);
                off += 8;
            }
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Mode, Tensor};

    fn sample_specs() -> Vec<LayerSpec> {
        vec![
            LayerSpec::Dense {
                out: 32,
                activation: Activation::LeakyRelu(0.2),
                dropout: 0.2,
            },
            LayerSpec::Reshape {
                shape: vec![2, 4, 4],
            },
            LayerSpec::TConv {
                filters: 3,
                kernel: (4, 4),
                stride: (2, 2),
                activation: Activation::None,
                dropout: 0.0,
            },
            LayerSpec::Conv {
                filters: 1,
                kernel: (3, 3),
                stride: (1, 1),
                activation: Activation::Tanh,
                dropout: 0.0,
            },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                out: 1,
                activation: Activation::Sigmoid,
                dropout: 0.0,
            },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let net = Network::<f64>::new(&[10], &sample_specs(), 42).unwrap();
        let mut buf = Vec::new();
        save_network(&net, &mut buf).unwrap();
        let back: Network<f64> = load_network(&buf[..]).unwrap();
        assert_eq!(net.layer_specs(), back.layer_specs());
        assert_eq!(net.input_shape(), back.input_shape());
        for (a, b) in net.params().iter().flatten().zip(back.params().iter().flatten()) {
            assert_eq!(a.data, b.data);
        }
        let x = Tensor::from_vec(&[2, 10], (0..20).map(|i| i as f64 * 0.05 - 0.4).collect())
            .unwrap();
        let y0 = net.forward(&x, Mode::Eval, 0).unwrap().0;
        let y1 = back.forward(&x, Mode::Eval, 0).unwrap().0;
        assert_eq!(y0.data, y1.data);
    }

    #[test]
    fn f32_weights_survive_f64_storage() {
        let net = Network::<f32>::new(&[10], &sample_specs(), 7).unwrap();
        let mut buf = Vec::new();
        save_network(&net, &mut buf).unwrap();
        let back: Network<f32> = load_network(&buf[..]).unwrap();
        for (a, b) in net.params().iter().flatten().zip(back.params().iter().flatten()) {
            assert_eq!(a.data, b.data);
        }
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let net = Network::<f64>::new(&[4], &sample_specs()[..1], 0).unwrap();
        let mut buf = Vec::new();
        save_network(&net, &mut buf).unwrap();
        buf.truncate(buf.len() - 5);
        assert!(matches!(
            load_network::<f64, _>(&buf[..]),
            Err(NnError::Parse(_))
        ));
    }

    #[test]
    fn bad_magic_rejected() {
        let buf = b"XXXX\ninput 4\nparams 0\n\n".to_vec();
        assert!(load_network::<f64, _>(&buf[..]).is_err());
    }
}
