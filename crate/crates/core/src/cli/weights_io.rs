//! Weight-file schema.
//!
//! `{"arch": "sigmoid221" | "relu_reg" | "two_h1" | "deep_relu",
//!   "params": { ...named fields of the parameter type... }}`

use std::path::Path;

use crate::error::{Error, Result};
use crate::tinynet::ParamVector;

pub fn load_weights(path: &Path) -> Result<ParamVector> {
    let text = std::fs::read_to_string(path)?;
    let p: ParamVector = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    validate(&p)?;
    Ok(p)
}

pub fn save_weights(p: &ParamVector, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(p)
        .map_err(|e| Error::Parse(format!("serializing weights: {e}")))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

fn validate(p: &ParamVector) -> Result<()> {
    match p {
        ParamVector::Sigmoid221(s) => {
            crate::tinynet::Sigmoid221Params::from_flat(&s.flatten()).map(|_| ())
        }
        ParamVector::ReluReg(r) => r.validate(),
        ParamVector::TwoH1(t) => t.validate(),
        ParamVector::DeepRelu(d) => {
            // reconstruct to re-run the shape checks
            crate::tinynet::DeepReluParams::new(d.layers().to_vec()).map(|_| ())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::constants;

    #[test]
    fn round_trip_all_architectures() {
        let dir = tempfile::tempdir().unwrap();
        let points = [
            ParamVector::Sigmoid221(constants::sigmoid221_certified_minimum()),
            ParamVector::ReluReg(constants::relu1_local_minimum()),
            ParamVector::TwoH1(crate::optim::init_params(crate::tinynet::Activation::Relu, 3, 1).unwrap()),
            ParamVector::DeepRelu(
                crate::blindspot::saturated_params(
                    &crate::datasets::builtin(crate::datasets::BuiltinDataset::D1),
                    &[3, 2],
                    5,
                )
                .unwrap(),
            ),
        ];
        for (i, p) in points.iter().enumerate() {
            let path = dir.path().join(format!("w{i}.json"));
            save_weights(p, &path).unwrap();
            assert_eq!(&load_weights(&path).unwrap(), p);
        }
    }

    #[test]
    fn schema_tag_is_arch_params() {
        let p = ParamVector::ReluReg(constants::relu1_local_minimum());
        let json = serde_json::to_value(&p).unwrap();
        assert_eq!(json["arch"], "relu_reg");
        assert_eq!(json["params"]["w"][0], 1.0);
    }

    #[test]
    fn malformed_and_mis_shaped_files_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"arch\": \"nonesuch\", \"params\": {}}").unwrap();
        assert!(load_weights(&path).is_err());
        std::fs::write(
            &path,
            "{\"arch\": \"relu_reg\", \"params\": {\"w\": [1.0], \"b\": [], \"v\": [1.0], \"c\": 0.0}}",
        )
        .unwrap();
        assert!(load_weights(&path).is_err());
    }
}
