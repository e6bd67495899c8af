//! Two-dimensional illustration of the update rule on `J(θ) = ‖θ‖`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{step, OptimizerConfig, SearchDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub start: [f64; 2],
    pub samples_per_update: usize,
    pub eliteness: f64,
    pub lambda_init: f64,
    pub lambda_min: f64,
    pub updates: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            start: [10.0, 10.0],
            samples_per_update: 15,
            eliteness: 10.0,
            lambda_init: 9.0,
            lambda_min: 0.0,
            updates: 20,
        }
    }
}

impl DemoConfig {
    fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            samples_per_update: self.samples_per_update,
            eliteness: self.eliteness,
            lambda_init: self.lambda_init,
            lambda_min: self.lambda_min,
            updates: self.updates,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start.iter().all(|v| v.is_finite()) {
            return Err(Error::config("demo.start", "must be finite"));
        }
        self.optimizer().validate().map_err(|e| match e {
            Error::Config { key, message } => Error::Config {
                key: key.replace("optimizer.", "demo."),
                message,
            },
            other => other,
        })
    }
}

/// The 2-D search distribution after some number of updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoSnapshot {
    pub update: usize,
    pub mean_x: f64,
    pub mean_y: f64,
    /// Larger covariance eigenvalue.
    pub eig1: f64,
    pub eig2: f64,
    /// Direction of the major axis in radians, folded into `(-π/2, π/2]`.
    pub eigvec_angle: f64,
    /// `‖mean‖`.
    pub cost: f64,
}

impl DemoSnapshot {
    fn of(update: usize, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(cov.clone());
        let (major, minor) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        let v = eig.eigenvectors.column(major);
        let mut angle = v[1].atan2(v[0]);
        if angle <= -std::f64::consts::FRAC_PI_2 {
            angle += std::f64::consts::PI;
        } else if angle > std::f64::consts::FRAC_PI_2 {
            angle -= std::f64::consts::PI;
        }
        DemoSnapshot {
            update,
            mean_x: mean[0],
            mean_y: mean[1],
            eig1: eig.eigenvalues[major],
            eig2: eig.eigenvalues[minor],
            eigvec_angle: angle,
            cost: mean.norm(),
        }
    }

    pub fn major_axis(&self) -> [f64; 2] {
        [self.eigvec_angle.cos(), self.eigvec_angle.sin()]
    }

    pub fn total_exploration(&self) -> f64 {
        self.eig1 + self.eig2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoRun {
    pub initial: DemoSnapshot,
    /// Row `u - 1` describes the distribution after update `u`.
    pub snapshots: Vec<DemoSnapshot>,
}

pub fn run_demo(config: &DemoConfig, seed: u64) -> Result<DemoRun> {
    config.validate()?;
    let optimizer = config.optimizer();
    let mut dist = SearchDistribution::from_parts(
        vec![DVector::from_column_slice(&config.start)],
        vec![DMatrix::identity(2, 2) * config.lambda_init],
        config.lambda_min,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = DemoSnapshot::of(0, &dist.means()[0], &dist.covariances()[0]);
    let mut snapshots = Vec::with_capacity(config.updates);
    for update in 1..=config.updates {
        let (next, _) = step(&dist, &optimizer, &mut rng, |p| Ok(p.joint(0).norm()))?;
        dist = next;
        snapshots.push(DemoSnapshot::of(
            update,
            &dist.means()[0],
            &dist.covariances()[0],
        ));
    }
    Ok(DemoRun { initial, snapshots })
}

pub const DEMO_CSV_HEADER: [&str; 7] = [
    "update",
    "mean_x",
    "mean_y",
    "eig1",
    "eig2",
    "eigvec_angle",
    "cost",
];

impl DemoRun {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(DEMO_CSV_HEADER)?;
        for s in &self.snapshots {
            w.write_record([
                s.update.to_string(),
                s.mean_x.to_string(),
                s.mean_y.to_string(),
                s.eig1.to_string(),
                s.eig2.to_string(),
                s.eigvec_angle.to_string(),
                s.cost.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn read_demo_csv<R: std::io::Read>(reader: R) -> Result<Vec<DemoSnapshot>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let v = record
            .iter()
            .map(|x| {
                x.parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad number `{x}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if v.len() != DEMO_CSV_HEADER.len() {
            return Err(Error::invalid(format!("demo row has {} columns", v.len())));
        }
        out.push(DemoSnapshot {
            update: v[0] as usize,
            mean_x: v[1],
            mean_y: v[2],
            eig1: v[3],
            eig2: v[4],
            eigvec_angle: v[5],
            cost: v[6],
        });
    }
    Ok(out)
}
