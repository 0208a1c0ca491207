//! Synthetic data for the logistic-regression and stochastic-volatility
//! experiments, with CSV + JSON-sidecar serialization.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::stochvol::volatility_path;
use super::{LogisticRegressionTarget, StochasticVolatilityTarget};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticDataset {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    /// Row-major `n×d` design matrix.
    pub design: Vec<f64>,
    pub responses: Vec<f64>,
    pub true_beta: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LogisticSidecar {
    seed: u64,
    n: usize,
    d: usize,
    true_beta: Vec<f64>,
}

/// `β₀ ~ N(0, I/8)`, `zᵢ ~ N(0, I)`, `yᵢ ~ Bernoulli(1/(1+exp(−zᵢᵀβ₀)))`.
/// The design is not standardized.
pub fn generate_logistic_data(seed: u64, n: usize, d: usize) -> Result<LogisticDataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidConfig("n and d must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta_sd = (1.0f64 / 8.0).sqrt();
    let true_beta: Vec<f64> = (0..d)
        .map(|_| beta_sd * { let z: f64 = StandardNormal.sample(&mut rng); z })
        .collect();
    let mut design = Vec::with_capacity(n * d);
    let mut responses = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let t: f64 = row.iter().zip(&true_beta).map(|(a, b)| a * b).sum();
        let p = 1.0 / (1.0 + (-t).exp());
        let y = Bernoulli::new(p).expect("probability in [0,1]").sample(&mut rng);
        design.extend_from_slice(&row);
        responses.push(if y { 1.0 } else { 0.0 });
    }
    Ok(LogisticDataset {
        seed,
        n,
        d,
        design,
        responses,
        true_beta,
    })
}

impl LogisticDataset {
    pub fn target(&self) -> Result<LogisticRegressionTarget> {
        LogisticRegressionTarget::new(self.n, self.d, self.design.clone(), self.responses.clone())
    }

    /// Writes `<stem>.csv` (header `z_1..z_d,y`) and `<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
        let mut header: Vec<String> = (1..=self.d).map(|j| format!("z_{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec: Vec<String> = self.design[i * self.d..(i + 1) * self.d]
                .iter()
                .map(|v| format!("{v:e}"))
                .collect();
            rec.push(format!("{}", self.responses[i] as u8));
            w.write_record(&rec)?;
        }
        w.flush()?;
        let side = LogisticSidecar {
            seed: self.seed,
            n: self.n,
            d: self.d,
            true_beta: self.true_beta.clone(),
        };
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&side)?,
        )?;
        Ok(())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let side: LogisticSidecar =
            serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
        let mut design = Vec::with_capacity(side.n * side.d);
        let mut responses = Vec::with_capacity(side.n);
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != side.d + 1 {
                return Err(Error::Io(format!("expected {} columns, got {}", side.d + 1, rec.len())));
            }
            for j in 0..side.d {
                design.push(parse_f64(&rec[j])?);
            }
            responses.push(parse_f64(&rec[side.d])?);
        }
        Ok(Self {
            seed: side.seed,
            n: side.n,
            d: side.d,
            design,
            responses,
            true_beta: side.true_beta,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvDataset {
    pub seed: u64,
    pub mu: f64,
    pub phi_raw: f64,
    pub log_sigma: f64,
    pub true_eta: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SvSidecar {
    seed: u64,
    n: usize,
    mu: f64,
    phi_raw: f64,
    log_sigma: f64,
    true_eta: Vec<f64>,
}

/// Simulates the volatility recursion with persistence `tanh(phi_raw)` and
/// returns the observed series.
pub fn generate_sv_data(
    seed: u64,
    n: usize,
    mu: f64,
    phi_raw: f64,
    log_sigma: f64,
) -> Result<SvDataset> {
    if n < 2 {
        return Err(Error::InvalidConfig("series length must be at least 2".into()));
    }
    if ![mu, phi_raw, log_sigma].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidConfig("parameters must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut h = Vec::with_capacity(n);
    volatility_path(mu, phi_raw, log_sigma, &eta, &mut h);
    let y = h
        .iter()
        .map(|&ht| {
            let e: f64 = StandardNormal.sample(&mut rng);
            (0.5 * ht).exp() * e
        })
        .collect();
    Ok(SvDataset {
        seed,
        mu,
        phi_raw,
        log_sigma,
        true_eta: eta,
        y,
    })
}

impl SvDataset {
    pub fn target(&self) -> Result<StochasticVolatilityTarget> {
        StochasticVolatilityTarget::new(self.y.clone())
    }

    /// Writes `<stem>.csv` (header `y`) and `<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
        w.write_record(["y"])?;
        for v in &self.y {
            w.write_record([format!("{v:e}")])?;
        }
        w.flush()?;
        let side = SvSidecar {
            seed: self.seed,
            n: self.y.len(),
            mu: self.mu,
            phi_raw: self.phi_raw,
            log_sigma: self.log_sigma,
            true_eta: self.true_eta.clone(),
        };
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&side)?,
        )?;
        Ok(())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let side: SvSidecar =
            serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let mut r = csv::Reader::from_path(dir.join(format!("{stem}.csv")))?;
        let y = r
            .records()
            .map(|rec| parse_f64(&rec?[0]))
            .collect::<Result<Vec<_>>>()?;
        if y.len() != side.n {
            return Err(Error::Io(format!("expected {} rows, got {}", side.n, y.len())));
        }
        Ok(Self {
            seed: side.seed,
            mu: side.mu,
            phi_raw: side.phi_raw,
            log_sigma: side.log_sigma,
            true_eta: side.true_eta,
            y,
        })
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Io(format!("not a number: {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::Potential;

    #[test]
    fn logistic_shapes_and_determinism() {
        for (n, d) in [(25, 25), (200, 200)] {
            let a = generate_logistic_data(1, n, d).unwrap();
            assert_eq!(a.design.len(), n * d);
            assert_eq!(a.responses.len(), n);
            assert_eq!(a.true_beta.len(), d);
            let b = generate_logistic_data(1, n, d).unwrap();
            assert_eq!(a, b);
        }
        assert!(generate_logistic_data(1, 0, 3).is_err());
    }

    #[test]
    fn sv_shapes_and_determinism() {
        let a = generate_sv_data(3, 200, 1.0, 0.5f64.atanh(), 0.0).unwrap();
        assert_eq!(a.y.len(), 200);
        assert_eq!(a.target().unwrap().dim(), 203);
        assert_eq!(a, generate_sv_data(3, 200, 1.0, 0.5f64.atanh(), 0.0).unwrap());
        let short = generate_sv_data(3, 2, 1.0, 0.5f64.atanh(), 0.0).unwrap();
        assert_eq!(short.y.len(), 2);
        assert!(generate_sv_data(3, 1, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn csv_and_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lg = generate_logistic_data(5, 4, 3).unwrap();
        lg.write(dir.path(), "logistic").unwrap();
        let header = std::fs::read_to_string(dir.path().join("logistic.csv")).unwrap();
        assert!(header.starts_with("z_1,z_2,z_3,y\n"));
        let back = LogisticDataset::read(dir.path(), "logistic").unwrap();
        assert_eq!(back, lg);

        let sv = generate_sv_data(5, 6, 1.0, 0.2, -0.1).unwrap();
        sv.write(dir.path(), "sv").unwrap();
        assert_eq!(SvDataset::read(dir.path(), "sv").unwrap(), sv);
    }
}
