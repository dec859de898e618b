//! Versioned text model files.
//!
//! ```text
//! lifetrack-policy v1
//! dims 5 64 64 1
//! shift <5 values>
//! scale <5 values>
//! params <count>
//! <one value per line, flatten order>
//! ```
//! Values are written with 17 significant digits so a save/load round trip
//! reproduces every parameter exactly.

use std::path::Path;

use super::{Normalizer, PolicyNet, State, STATE_DIM};
use crate::error::{Error, Result};

pub const MODEL_HEADER: &str = "lifetrack-policy v1";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_model(net: &PolicyNet, norm: &Normalizer) -> String {
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    let dims: Vec<String> = net.dims().iter().map(|d| d.to_string()).collect();
    out.push_str(&format!("dims {}\n", dims.join(" ")));
    let row = |v: &State| v.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(" ");
    out.push_str(&format!("shift {}\n", row(norm.shift())));
    out.push_str(&format!("scale {}\n", row(norm.scale())));
    let params = net.flatten();
    out.push_str(&format!("params {}\n", params.len()));
    for p in params {
        out.push_str(&fmt(p));
        out.push('\n');
    }
    out
}

pub fn parse_model(text: &str) -> Result<(PolicyNet, Normalizer)> {
    let err = |m: String| Error::parse("model file", m);
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MODEL_HEADER) {
        return Err(err(format!("missing `{MODEL_HEADER}` header")));
    }
    let mut keyed = |key: &str| -> Result<Vec<String>> {
        let line = lines.next().ok_or_else(|| err(format!("missing `{key}` line")))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(err(format!("expected `{key}`, found `{line}`")));
        }
        Ok(parts.map(String::from).collect())
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
    let dims: Vec<usize> = keyed("dims")?
        .iter()
        .map(|s| s.parse().map_err(|_| err(format!("bad dim `{s}`"))))
        .collect::<Result<_>>()?;
    let state = |v: Vec<String>| -> Result<State> {
        if v.len() != STATE_DIM {
            return Err(err(format!("expected {STATE_DIM} values, got {}", v.len())));
        }
        let mut out = [0.0; STATE_DIM];
        for (o, s) in out.iter_mut().zip(&v) {
            *o = num(s)?;
        }
        Ok(out)
    };
    let shift = state(keyed("shift")?)?;
    let scale = state(keyed("scale")?)?;
    let count: usize = keyed("params")?
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err("bad params count".into()))?;
    let params: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| num(l.trim()))
        .collect::<Result<_>>()?;
    if params.len() != count {
        return Err(err(format!("declared {count} params, found {}", params.len())));
    }
    let mut net = PolicyNet::zeros(&dims)?;
    net.unflatten(&params)?;
    Ok((net, Normalizer::new(shift, scale)?))
}

pub fn save_model(path: &Path, net: &PolicyNet, norm: &Normalizer) -> Result<()> {
    std::fs::write(path, write_model(net, norm)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<(PolicyNet, Normalizer)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn text_round_trip_is_exact(seed in any::<u64>(), shift in prop::array::uniform5(-1e3f64..1e3), scale in prop::array::uniform5(1e-8f64..1e3)) {
            let net = PolicyNet::standard(seed);
            let norm = Normalizer::new(shift, scale).unwrap();
            let (n2, m2) = parse_model(&write_model(&net, &norm)).unwrap();
            prop_assert_eq!(n2, net);
            prop_assert_eq!(m2, norm);
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_model("nope").is_err());
        let net = PolicyNet::standard(1);
        let text = write_model(&net, &Normalizer::identity());
        let truncated: String = text.lines().take(50).collect::<Vec<_>>().join("\n");
        assert!(parse_model(&truncated).is_err());
        assert!(text.starts_with("lifetrack-policy v1\ndims 5 64 64 1\n"));
    }
}
