//! Per-subcarrier extreme learning machine bank.
//!
//! Each subcarrier gets its own two-input subnet: a fixed random hidden
//! layer of radbas nodes g(x) = exp(-x^2) and an output weight matrix
//! trained in closed form from the pilot block of the current coherence
//! interval. Training is one linear solve per subnet — no iteration — and
//! the hidden parameters never change after construction.
//!
//! Everything is real-valued: received samples enter as [Re, Im] rows and
//! the recovered symbols leave the same way.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flops::FlopCounter;
use crate::numerics::{lstsq_counted, qr_lstsq, CMat, RMat, RngStream};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ElmConfig {
    /// Hidden nodes per subnet (L).
    pub hidden: usize,
    /// Pilot symbols per coherence block (I).
    pub pilots: usize,
    /// Data symbols per coherence block (K).
    pub data: usize,
    /// Scale inputs by the reciprocal RMS of the pilot block before the
    /// activation, and reuse the same scale at detection. Keeps radbas out
    /// of saturation under path-loss dynamic range; can be disabled.
    pub normalize: bool,
}

impl Default for ElmConfig {
    fn default() -> Self {
        Self {
            hidden: 50,
            pilots: 100,
            data: 400,
            normalize: true,
        }
    }
}

/// One subcarrier's network. `input_weights` row l is the 2-vector a_l,
/// `biases[l]` is b_l; both are frozen at construction.
#[derive(Debug, Clone)]
pub struct ElmSubnet {
    input_weights: RMat, // L x 2
    biases: Vec<f64>,    // L
    output_weights: Option<RMat>, // L x 2 after training
    scale: f64,
}

impl ElmSubnet {
    /// Hidden parameters uniform on [-1, 1] from the given stream.
    pub fn random(hidden: usize, rng: &mut RngStream) -> Self {
        let input_weights = RMat::from_fn(hidden, 2, |_, _| rng.uniform_in(-1.0, 1.0));
        let biases = (0..hidden).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        Self {
            input_weights,
            biases,
            output_weights: None,
            scale: 1.0,
        }
    }

    pub fn from_parts(input_weights: RMat, biases: Vec<f64>) -> Self {
        assert_eq!(input_weights.cols(), 2);
        assert_eq!(input_weights.rows(), biases.len());
        Self {
            input_weights,
            biases,
            output_weights: None,
            scale: 1.0,
        }
    }

    pub fn hidden(&self) -> usize {
        self.biases.len()
    }

    pub fn is_trained(&self) -> bool {
        self.output_weights.is_some()
    }

    pub fn input_weights(&self) -> &RMat {
        &self.input_weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn output_weights(&self) -> Option<&RMat> {
        self.output_weights.as_ref()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Hidden-layer matrix: O[i][l] = g(a_l . (scale * y_i) + b_l), rows are
/// sample instances, columns hidden nodes.
pub fn hidden_matrix(subnet: &ElmSubnet, inputs: &RMat) -> RMat {
    hidden_matrix_counted(subnet, inputs, None)
}

pub fn hidden_matrix_counted(
    subnet: &ElmSubnet,
    inputs: &RMat,
    counter: Option<&mut FlopCounter>,
) -> RMat {
    assert_eq!(inputs.cols(), 2, "ELM inputs are [Re, Im] rows");
    let rows = inputs.rows();
    let l = subnet.hidden();
    let s = subnet.scale;
    let mut o = RMat::zeros(rows, l);
    for i in 0..rows {
        let y0 = inputs[(i, 0)] * s;
        let y1 = inputs[(i, 1)] * s;
        let orow = o.row_mut(i);
        for (node, slot) in orow.iter_mut().enumerate() {
            let z = subnet.input_weights[(node, 0)] * y0
                + subnet.input_weights[(node, 1)] * y1
                + subnet.biases[node];
            *slot = (-z * z).exp();
        }
    }
    if let Some(cnt) = counter {
        let n = (rows * l) as u64;
        cnt.real_mul += n * 3 + rows as u64 * 2; // a.y, z^2, input scaling
        cnt.real_add += n * 2;
        cnt.activation += n;
    }
    o
}

/// Closed-form training: the least-squares output weights B = O^+ X_pilot.
/// Tall full-rank systems run through Householder QR (same solution as the
/// pseudoinverse, deterministic operation count); wide or rank-deficient
/// blocks fall back to the SVD minimum-norm path. Returns the Frobenius
/// training residual ||O B - X||.
pub fn train_subnet(
    subnet: &mut ElmSubnet,
    received: &RMat,
    transmitted: &RMat,
    normalize: bool,
) -> Result<f64> {
    train_subnet_counted(subnet, received, transmitted, normalize, None)
}

pub fn train_subnet_counted(
    subnet: &mut ElmSubnet,
    received: &RMat,
    transmitted: &RMat,
    normalize: bool,
    mut counter: Option<&mut FlopCounter>,
) -> Result<f64> {
    if received.rows() == 0 {
        return Err(Error::EmptyInput("train_subnet"));
    }
    if received.rows() != transmitted.rows() {
        return Err(Error::DimMismatch(format!(
            "{} received vs {} transmitted pilots",
            received.rows(),
            transmitted.rows()
        )));
    }
    subnet.scale = if normalize {
        let mean_sq = received.data().iter().map(|v| v * v).sum::<f64>() / received.rows() as f64;
        if mean_sq > 0.0 {
            1.0 / mean_sq.sqrt()
        } else {
            1.0
        }
    } else {
        1.0
    };
    let o = hidden_matrix_counted(subnet, received, counter.as_deref_mut());
    let qr_result = if o.rows() >= o.cols() {
        qr_lstsq(&o, transmitted, counter.as_deref_mut())
    } else {
        Err(Error::Singular("underdetermined"))
    };
    let b_real = match qr_result {
        Ok(b) => b,
        Err(Error::Singular(_)) => {
            let oc = real_to_complex(&o);
            let xc = real_to_complex(transmitted);
            let b = lstsq_counted(&oc, &xc, counter.as_deref_mut())?;
            // Real input keeps exactly zero imaginary parts through the
            // Jacobi SVD.
            RMat::from_fn(b.rows(), b.cols(), |i, j| b[(i, j)].re)
        }
        Err(e) => return Err(e),
    };
    let residual = {
        let fit = o.matmul(&b_real);
        fit.data()
            .iter()
            .zip(transmitted.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    subnet.output_weights = Some(b_real);
    Ok(residual)
}

/// Detection for one subnet: X_hat = O B over the data rows.
pub fn detect_subnet(subnet: &ElmSubnet, received: &RMat) -> Result<RMat> {
    detect_subnet_counted(subnet, received, None)
}

pub fn detect_subnet_counted(
    subnet: &ElmSubnet,
    received: &RMat,
    mut counter: Option<&mut FlopCounter>,
) -> Result<RMat> {
    let b = subnet
        .output_weights
        .as_ref()
        .ok_or(Error::UntrainedSubnet(usize::MAX))?;
    let o = hidden_matrix_counted(subnet, received, counter.as_deref_mut());
    if let Some(cnt) = counter {
        let n = (o.rows() * o.cols() * 2) as u64;
        cnt.real_mul += n;
        cnt.real_add += n;
    }
    Ok(o.matmul(b))
}

/// The whole receiver: one subnet per subcarrier.
#[derive(Debug, Clone)]
pub struct ElmBank {
    subnets: Vec<ElmSubnet>,
    config: ElmConfig,
    seed: u64,
}

/// Per-block training bookkeeping; the solve count backs the
/// one-solve-per-subnet contract.
#[derive(Debug, Clone, Copy)]
pub struct BankTrainStats {
    pub solves: usize,
    pub max_residual: f64,
}

impl ElmBank {
    pub fn new(n_subcarriers: usize, config: ElmConfig, seed: u64) -> Self {
        let subnets = (0..n_subcarriers)
            .map(|sc| {
                let mut rng = RngStream::new(seed, 0x454C_4D00 + sc as u64);
                ElmSubnet::random(config.hidden, &mut rng)
            })
            .collect();
        Self {
            subnets,
            config,
            seed,
        }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.subnets.len()
    }

    pub fn config(&self) -> &ElmConfig {
        &self.config
    }

    pub fn subnet(&self, sc: usize) -> &ElmSubnet {
        &self.subnets[sc]
    }

    pub fn subnet_mut(&mut self, sc: usize) -> &mut ElmSubnet {
        &mut self.subnets[sc]
    }

    /// Train every subnet on its subcarrier's pilot block. Subnets are
    /// independent, so the work fans out across threads.
    pub fn train(&mut self, received: &[RMat], transmitted: &[RMat]) -> Result<BankTrainStats> {
        if received.len() != self.subnets.len() || transmitted.len() != self.subnets.len() {
            return Err(Error::DimMismatch(format!(
                "bank of {} subnets given {} pilot blocks",
                self.subnets.len(),
                received.len()
            )));
        }
        let normalize = self.config.normalize;
        let residuals: Result<Vec<f64>> = self
            .subnets
            .par_iter_mut()
            .zip_eq(received.par_iter().zip_eq(transmitted.par_iter()))
            .map(|(subnet, (rx, tx))| train_subnet(subnet, rx, tx, normalize))
            .collect();
        let residuals = residuals?;
        Ok(BankTrainStats {
            solves: residuals.len(),
            max_residual: residuals.iter().copied().fold(0.0, f64::max),
        })
    }

    /// Detect the data block: per subcarrier, K recovered [Re, Im] rows.
    pub fn detect(&self, received: &[RMat]) -> Result<Vec<RMat>> {
        if received.len() != self.subnets.len() {
            return Err(Error::DimMismatch(format!(
                "bank of {} subnets given {} data blocks",
                self.subnets.len(),
                received.len()
            )));
        }
        for (sc, subnet) in self.subnets.iter().enumerate() {
            if !subnet.is_trained() {
                return Err(Error::UntrainedSubnet(sc));
            }
        }
        self.subnets
            .par_iter()
            .zip_eq(received.par_iter())
            .map(|(subnet, rx)| detect_subnet(subnet, rx))
            .collect()
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let doc = BankDoc {
            format: "elm-bank-v1".into(),
            seed: self.seed,
            config: self.config,
            subnets: self
                .subnets
                .iter()
                .map(|s| SubnetDoc {
                    input_weights: s.input_weights.data().to_vec(),
                    biases: s.biases.clone(),
                    output_weights: s.output_weights.as_ref().map(|b| b.data().to_vec()),
                    scale: s.scale,
                })
                .collect(),
        };
        let json = serde_json::to_string(&doc).map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        let doc: BankDoc =
            serde_json::from_str(&json).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if doc.format != "elm-bank-v1" {
            return Err(Error::Checkpoint(format!("unknown format {}", doc.format)));
        }
        let hidden = doc.config.hidden;
        let subnets = doc
            .subnets
            .into_iter()
            .enumerate()
            .map(|(sc, s)| {
                if s.input_weights.len() != hidden * 2 || s.biases.len() != hidden {
                    return Err(Error::Checkpoint(format!("subnet {sc} shape mismatch")));
                }
                Ok(ElmSubnet {
                    input_weights: RMat::from_vec(hidden, 2, s.input_weights),
                    biases: s.biases,
                    output_weights: s
                        .output_weights
                        .map(|b| RMat::from_vec(hidden, 2, b)),
                    scale: s.scale,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            subnets,
            config: doc.config,
            seed: doc.seed,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct BankDoc {
    format: String,
    seed: u64,
    config: ElmConfig,
    subnets: Vec<SubnetDoc>,
}

#[derive(Serialize, Deserialize)]
struct SubnetDoc {
    input_weights: Vec<f64>,
    biases: Vec<f64>,
    output_weights: Option<Vec<f64>>,
    scale: f64,
}

fn real_to_complex(m: &RMat) -> CMat {
    CMat::from_fn(m.rows(), m.cols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// Convert recovered [Re, Im] rows back to complex symbols.
pub fn rows_to_symbols(m: &RMat) -> Vec<Complex64> {
    (0..m.rows())
        .map(|i| Complex64::new(m[(i, 0)], m[(i, 1)]))
        .collect()
}

/// Pack complex samples as [Re, Im] rows.
pub fn symbols_to_rows(symbols: &[Complex64]) -> RMat {
    let mut m = RMat::zeros(symbols.len().max(1), 2);
    for (i, &s) in symbols.iter().enumerate() {
        m[(i, 0)] = s.re;
        m[(i, 1)] = s.im;
    }
    m
}
