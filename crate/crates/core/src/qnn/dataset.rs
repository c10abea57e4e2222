use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::{text_content, ParseError};

use super::{best_joint_model, neuron_output_ideal, QnnError, WeightVector};

/// Accuracy every generated dataset must reach under some noiseless model.
const LEARNABLE: f64 = 0.9;
const MAX_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    seed: Option<u64>,
    samples: Vec<Sample>,
}

impl Dataset {
    /// Checks dimensions and that every sample has unit norm (1e-10).
    pub fn new(dim: usize, samples: Vec<Sample>, seed: Option<u64>) -> Result<Self, QnnError> {
        if samples.is_empty() {
            return Err(QnnError::EmptyDataset);
        }
        for (index, s) in samples.iter().enumerate() {
            if s.x.len() != dim {
                return Err(QnnError::DimensionMismatch {
                    expected: dim,
                    got: s.x.len(),
                });
            }
            let norm = s.x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm.is_nan() || (norm - 1.0).abs() > 1e-10 {
                return Err(QnnError::NotNormalized { index, norm });
            }
        }
        Ok(Self { dim, seed, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

fn generate(seed: u64, attempt: u64, n: usize, dim: usize, sigma: f64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    let refs = [unit_gaussian(&mut rng, dim), unit_gaussian(&mut rng, dim)];
    (0..n)
        .map(|i| {
            let label = i % 2;
            let x = refs[label]
                .iter()
                .map(|&r| r + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            Sample {
                x: normalize(x),
                label,
            }
        })
        .collect()
}

fn best_ideal_accuracy(samples: &[Sample], dim: usize) -> f64 {
    let table: Vec<Vec<f64>> = (0..1u64 << dim)
        .map(|i| {
            let w = WeightVector::from_index(i, dim).expect("valid length");
            samples
                .iter()
                .map(|s| neuron_output_ideal(&w, &s.x).expect("matching dims"))
                .collect()
        })
        .collect();
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    best_joint_model(&table, &labels, 2).correct as f64 / samples.len() as f64
}

/// Two-class dataset over `2^k` amplitudes.
///
/// Two reference unit vectors are drawn from a seeded Gaussian; sample `i`
/// has label `i % 2` and is its reference plus `N(0, sigma^2)` noise per
/// entry, renormalised. For `2^k <= 8` the draw is repeated on the next RNG
/// stream until some noiseless two-neuron model classifies at least 90% of
/// the samples.
pub fn make_synthetic_dataset(
    seed: u64,
    n_samples: usize,
    k: usize,
    sigma: f64,
) -> Result<Dataset, QnnError> {
    if n_samples < 2 {
        return Err(QnnError::TooFewSamples(n_samples));
    }
    let dim = 1usize << k;
    let mut samples = generate(seed, 0, n_samples, dim, sigma);
    if dim <= 8 {
        for attempt in 1..MAX_ATTEMPTS {
            if best_ideal_accuracy(&samples, dim) >= LEARNABLE {
                break;
            }
            samples = generate(seed, attempt, n_samples, dim, sigma);
        }
    }
    Dataset::new(dim, samples, Some(seed))
}

/// Dataset file: `dim <N>`, optional `seed <S>`, then per sample `N` floats
/// and an integer label. `#` starts a comment.
pub fn parse_dataset(text: &str) -> Result<Dataset, QnnError> {
    let mut dim = None;
    let mut seed = None;
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = text_content(raw);
        if line.is_empty() {
            continue;
        }
        let err = |m: String| QnnError::Parse(ParseError::new(line_no, m));
        let words: Vec<&str> = line.split_whitespace().collect();
        let Some(n) = dim else {
            match words.as_slice() {
                ["dim", n] => {
                    let n: usize = n.parse().map_err(|_| err(format!("bad dimension `{n}`")))?;
                    if n == 0 {
                        return Err(err("dimension must be positive".into()));
                    }
                    dim = Some(n);
                    continue;
                }
                _ => return Err(err("expected header `dim <N>`".into())),
            }
        };
        if let ["seed", s] = words.as_slice() {
            if !samples.is_empty() || seed.is_some() {
                return Err(err("`seed` must directly follow the header".into()));
            }
            seed = Some(s.parse().map_err(|_| err(format!("bad seed `{s}`")))?);
            continue;
        }
        if words.len() != n + 1 {
            return Err(err(format!(
                "expected {n} amplitudes and a label, got {} fields",
                words.len()
            )));
        }
        let x = words[..n]
            .iter()
            .map(|w| {
                w.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(format!("bad amplitude `{w}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let label = words[n]
            .parse()
            .map_err(|_| err(format!("bad label `{}`", words[n])))?;
        samples.push(Sample { x, label });
    }
    let dim = dim.ok_or(QnnError::EmptyDataset)?;
    Dataset::new(dim, samples, seed)
}

pub fn write_dataset(data: &Dataset) -> String {
    let mut out = format!("dim {}\n", data.dim);
    if let Some(seed) = data.seed {
        let _ = writeln!(out, "seed {seed}");
    }
    for s in &data.samples {
        for v in &s.x {
            let _ = write!(out, "{v:?} ");
        }
        let _ = writeln!(out, "{}", s.label);
    }
    out
}
