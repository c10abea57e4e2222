//! Noise models and their binding to routed circuits.
//!
//! Four stochastic channels are supported: qubit flip (X after X/CX/CCX),
//! phase (Z after Z/CZ), depolarizing (uniform non-identity Pauli after every
//! gate) and readout (classical bit flips at measurement).

mod bind;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bind::{bind, BoundNoise, Channel, ChannelKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("calibration field `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("`{field}` = {value} is not a probability in [0, 1]")]
    Range { field: String, value: f64 },
    #[error("bad noise shorthand `{0}`; expected e.g. `flip:0.01,phase:0.01`")]
    Shorthand(String),
}

/// Readout assignment errors of one qubit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadoutError {
    /// P(read 1 | true 0)
    pub p01: f64,
    /// P(read 0 | true 1)
    pub p10: f64,
}

impl ReadoutError {
    pub fn symmetric(p: f64) -> Self {
        Self { p01: p, p10: p }
    }

    pub fn is_zero(&self) -> bool {
        self.p01 == 0.0 && self.p10 == 0.0
    }
}

/// Abstract error-rate specification, keyed by physical qubit where it
/// varies per qubit. Multipliers scale the flip and phase rates of gates
/// touching that qubit (clamped to 1).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub flip_p: f64,
    pub phase_p: f64,
    pub depol_p: f64,
    pub readout_default: ReadoutError,
    pub readout: BTreeMap<usize, ReadoutError>,
    pub qubit_multipliers: BTreeMap<usize, f64>,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    /// The "Flip+Phase" setting: both rates equal to `p`.
    pub fn flip_phase(p: f64) -> Self {
        Self {
            flip_p: p,
            phase_p: p,
            ..Self::default()
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.flip_p == 0.0
            && self.phase_p == 0.0
            && self.depol_p == 0.0
            && self.readout_default.is_zero()
            && self.readout.values().all(ReadoutError::is_zero)
    }

    fn multiplier(&self, physical: usize) -> f64 {
        self.qubit_multipliers
            .get(&physical)
            .copied()
            .unwrap_or(1.0)
    }

    pub fn flip_at(&self, physical: usize) -> f64 {
        (self.flip_p * self.multiplier(physical)).min(1.0)
    }

    pub fn phase_at(&self, physical: usize) -> f64 {
        (self.phase_p * self.multiplier(physical)).min(1.0)
    }

    pub fn readout_at(&self, physical: usize) -> ReadoutError {
        self.readout
            .get(&physical)
            .copied()
            .unwrap_or(self.readout_default)
    }

    /// Same model with flip, phase, depolarizing and default readout rates
    /// that are non-zero replaced by `p`.
    pub fn with_rate(&self, p: f64) -> Self {
        let set = |v: f64| if v > 0.0 { p } else { 0.0 };
        Self {
            flip_p: set(self.flip_p),
            phase_p: set(self.phase_p),
            depol_p: set(self.depol_p),
            readout_default: ReadoutError {
                p01: set(self.readout_default.p01),
                p10: set(self.readout_default.p10),
            },
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), NoiseError> {
        let mut fields = vec![
            ("flip_p".to_string(), self.flip_p),
            ("phase_p".to_string(), self.phase_p),
            ("depol_p".to_string(), self.depol_p),
            ("readout_p01".to_string(), self.readout_default.p01),
            ("readout_p10".to_string(), self.readout_default.p10),
        ];
        for (q, r) in &self.readout {
            fields.push((format!("readout[qubit={q}].p01"), r.p01));
            fields.push((format!("readout[qubit={q}].p10"), r.p10));
        }
        for (field, value) in fields {
            if !(0.0..=1.0).contains(&value) {
                return Err(NoiseError::Range { field, value });
            }
        }
        for (q, f) in &self.qubit_multipliers {
            if !f.is_finite() || *f < 0.0 {
                return Err(NoiseError::Field {
                    path: format!("qubit_multipliers[qubit={q}].factor"),
                    message: format!("{f} is not a non-negative factor"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    #[serde(default)]
    flip_p: f64,
    #[serde(default)]
    phase_p: f64,
    #[serde(default)]
    depol_p: f64,
    /// Symmetric readout error for qubits without an explicit entry.
    #[serde(default)]
    readout_p: f64,
    #[serde(default)]
    readout: Vec<ReadoutEntry>,
    #[serde(default)]
    qubit_multipliers: Vec<MultiplierEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReadoutEntry {
    qubit: usize,
    #[serde(default)]
    p01: f64,
    #[serde(default)]
    p10: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiplierEntry {
    qubit: usize,
    factor: f64,
}

/// Parses a JSON calibration file. Unspecified rates default to 0.
pub fn load_calibration(text: &str) -> Result<NoiseModel, NoiseError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: CalibrationFile =
        serde_path_to_error::deserialize(de).map_err(|e| NoiseError::Field {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    let model = NoiseModel {
        flip_p: file.flip_p,
        phase_p: file.phase_p,
        depol_p: file.depol_p,
        readout_default: ReadoutError::symmetric(file.readout_p),
        readout: file
            .readout
            .into_iter()
            .map(|r| {
                (
                    r.qubit,
                    ReadoutError {
                        p01: r.p01,
                        p10: r.p10,
                    },
                )
            })
            .collect(),
        qubit_multipliers: file
            .qubit_multipliers
            .into_iter()
            .map(|m| (m.qubit, m.factor))
            .collect(),
    };
    model.validate()?;
    Ok(model)
}

/// Parses `flip:0.01,phase:0.01,depol:0.05,readout:0.1` (any subset), or
/// `none`.
pub fn parse_noise_shorthand(spec: &str) -> Result<NoiseModel, NoiseError> {
    let bad = || NoiseError::Shorthand(spec.to_string());
    let mut model = NoiseModel::default();
    let spec_trim = spec.trim();
    if spec_trim == "none" || spec_trim == "ideal" {
        return Ok(model);
    }
    for part in spec_trim.split(',') {
        let (key, value) = part.split_once(':').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        match key.trim() {
            "flip" => model.flip_p = value,
            "phase" => model.phase_p = value,
            "depol" => model.depol_p = value,
            "readout" => model.readout_default = ReadoutError::symmetric(value),
            _ => return Err(bad()),
        }
    }
    model.validate()?;
    Ok(model)
}

/// Flips each measured bit independently with its readout error. Bit 0 of
/// `table` corresponds to the most significant bit of `bits`.
pub fn apply_readout<R: Rng + ?Sized>(bits: usize, table: &[ReadoutError], rng: &mut R) -> usize {
    let m = table.len();
    let mut out = bits;
    for (j, r) in table.iter().enumerate() {
        let bit = 1 << (m - 1 - j);
        let p = if bits & bit == 0 { r.p01 } else { r.p10 };
        if rng.gen::<f64>() < p {
            out ^= bit;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn calibration_defaults_to_zero() {
        let m = load_calibration(r#"{"flip_p": 0.1}"#).unwrap();
        assert_eq!(m.flip_p, 0.1);
        assert_eq!(m.phase_p, 0.0);
        assert!(m.readout_default.is_zero());
    }

    #[test]
    fn flip_phase_file_matches_preset() {
        let m = load_calibration(r#"{"flip_p": 0.1, "phase_p": 0.1}"#).unwrap();
        assert_eq!(m, NoiseModel::flip_phase(0.1));
    }

    #[test]
    fn calibration_errors() {
        assert!(matches!(
            load_calibration(r#"{"flip_p": 1.5}"#),
            Err(NoiseError::Range { .. })
        ));
        let err = load_calibration(r#"{"readout": [{"qubit": 0, "p01": "x"}]}"#).unwrap_err();
        match err {
            NoiseError::Field { path, .. } => assert_eq!(path, "readout[0].p01"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_calibration(r#"{"flop_p": 0.1}"#).is_err());
        assert!(
            load_calibration(r#"{"qubit_multipliers": [{"qubit": 1, "factor": -2}]}"#).is_err()
        );
    }

    #[test]
    fn full_calibration_file() {
        let m = load_calibration(
            r#"{"flip_p": 0.2, "readout_p": 0.05,
                "readout": [{"qubit": 3, "p01": 0.1, "p10": 0.2}],
                "qubit_multipliers": [{"qubit": 2, "factor": 10}]}"#,
        )
        .unwrap();
        assert_eq!(m.readout_at(3), ReadoutError { p01: 0.1, p10: 0.2 });
        assert_eq!(m.readout_at(0), ReadoutError::symmetric(0.05));
        assert_eq!(m.flip_at(2), 1.0);
        assert_eq!(m.flip_at(1), 0.2);
    }

    #[test]
    fn shorthand() {
        let m = parse_noise_shorthand("flip:0.01, phase:0.02,readout:0.1").unwrap();
        assert_eq!((m.flip_p, m.phase_p), (0.01, 0.02));
        assert_eq!(m.readout_default, ReadoutError::symmetric(0.1));
        assert!(parse_noise_shorthand("none").unwrap().is_noiseless());
        assert!(parse_noise_shorthand("flip=0.1").is_err());
        assert!(parse_noise_shorthand("spin:0.1").is_err());
        assert!(parse_noise_shorthand("flip:2").is_err());
    }

    #[test]
    fn with_rate_keeps_active_channels() {
        let m = NoiseModel::flip_phase(0.1).with_rate(0.01);
        assert_eq!(m, NoiseModel::flip_phase(0.01));
    }

    #[test]
    fn readout_identity_and_saturation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let zero = [ReadoutError::default(); 3];
        for bits in 0..8 {
            assert_eq!(apply_readout(bits, &zero, &mut rng), bits);
        }
        let sat = [ReadoutError { p01: 0.0, p10: 1.0 }];
        for _ in 0..100 {
            assert_eq!(apply_readout(1, &sat, &mut rng), 0);
        }
    }

    #[test]
    fn readout_flip_rate_matches_binomial() {
        // 100k Bernoulli(0.1) draws: std of the mean is ~0.00095, so 0.005 is > 5 sigma.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let table = [ReadoutError { p01: 0.1, p10: 0.0 }];
        let n = 100_000;
        let flips = (0..n)
            .filter(|_| apply_readout(0, &table, &mut rng) == 1)
            .count();
        let frac = flips as f64 / n as f64;
        assert!((frac - 0.1).abs() < 0.005, "flip fraction {frac}");
    }
}
