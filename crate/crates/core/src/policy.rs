//! Acceleration policies built from normalized Gaussian kernels, and the
//! kinematic rollout that integrates them into joint trajectories.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::arm::{ArmModel, Point2};
use crate::error::{Error, Result};

/// Time-indexed kernels with equidistant centers over `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisFunctionSet {
    centers: Vec<f64>,
    width: f64,
    duration: f64,
}

impl BasisFunctionSet {
    pub fn new(count: usize, width: f64, duration: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("basis needs at least one kernel"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid(format!(
                "kernel width {width} must be positive"
            )));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid(format!(
                "duration {duration} must be positive"
            )));
        }
        let centers = if count == 1 {
            vec![0.5 * duration]
        } else {
            (0..count)
                .map(|b| duration * b as f64 / (count - 1) as f64)
                .collect()
        };
        Ok(BasisFunctionSet {
            centers,
            width,
            duration,
        })
    }

    pub fn count(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Normalized kernel activations at time `t`; the result sums to one.
    pub fn activations(&self, t: f64) -> Result<Vec<f64>> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::invalid(format!(
                "time {t} outside the movement window [0, {}]",
                self.duration
            )));
        }
        Ok(self.activations_unchecked(t))
    }

    fn activations_unchecked(&self, t: f64) -> Vec<f64> {
        let w2 = self.width * self.width;
        // Shifting every exponent by the largest one leaves the ratios intact
        // and keeps far-from-center kernels from underflowing to all zeros.
        let exponents: Vec<f64> = self
            .centers
            .iter()
            .map(|c| -(t - c) * (t - c) / w2)
            .collect();
        let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = exponents.iter().map(|e| (e - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
}

/// Per-joint weight vectors; joint `m` accelerates as `g(t) · weights[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    weights: Vec<DVector<f64>>,
}

impl Policy {
    pub fn new(weights: Vec<DVector<f64>>) -> Result<Self> {
        let first = weights
            .first()
            .ok_or_else(|| Error::invalid("policy has no joints"))?
            .len();
        if let Some(w) = weights.iter().find(|w| w.len() != first) {
            return Err(Error::DimensionMismatch {
                expected: first,
                actual: w.len(),
            });
        }
        Ok(Policy { weights })
    }

    pub fn zeros(joints: usize, basis_count: usize) -> Self {
        Policy {
            weights: vec![DVector::zeros(basis_count); joints],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Policy::new(rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    pub fn joint_count(&self) -> usize {
        self.weights.len()
    }

    pub fn basis_count(&self) -> usize {
        self.weights[0].len()
    }

    pub fn joint(&self, m: usize) -> &DVector<f64> {
        &self.weights[m]
    }

    pub fn joints(&self) -> &[DVector<f64>] {
        &self.weights
    }

    #[cfg(test)]
    pub(crate) fn joints_mut(&mut self) -> &mut [DVector<f64>] {
        &mut self.weights
    }

    /// Linear combination `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Policy, b: f64) -> Result<Policy> {
        if self.joint_count() != other.joint_count() || self.basis_count() != other.basis_count() {
            return Err(Error::invalid("policies have different shapes"));
        }
        Ok(Policy {
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        })
    }
}

/// Joint-space trajectory on a uniform time grid, plus the hand path.
///
/// Each per-step vector has one entry per joint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub accelerations: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub angles: Vec<Vec<f64>>,
    pub end_effector: Vec<Point2>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_angles(&self) -> Option<&[f64]> {
        self.angles.last().map(Vec::as_slice)
    }

    pub fn final_end_effector(&self) -> Option<Point2> {
        self.end_effector.last().copied()
    }

    /// Header `t,q_1..q_M,x,y`, one row per grid point.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let joints = self.angles.first().map_or(0, Vec::len);
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=joints).map(|m| format!("q_{m}")));
        header.extend(["x".to_string(), "y".to_string()]);
        w.write_record(&header)?;
        for ((t, q), p) in self.times.iter().zip(&self.angles).zip(&self.end_effector) {
            let mut row = vec![t.to_string()];
            row.extend(q.iter().map(f64::to_string));
            row.extend([p.x.to_string(), p.y.to_string()]);
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub count: usize,
    pub width: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig {
            count: 5,
            width: 0.05,
            duration: 0.5,
            dt: 0.01,
        }
    }
}

impl BasisConfig {
    pub fn basis(&self) -> Result<BasisFunctionSet> {
        BasisFunctionSet::new(self.count, self.width, self.duration)
    }
}

/// Number of integration steps when `dt` divides `duration`.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("time step {dt} must be positive")));
    }
    let ratio = duration / dt;
    let steps = ratio.round();
    if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::invalid(format!(
            "time step {dt} does not divide the duration {duration}"
        )));
    }
    Ok(steps as usize)
}

/// Rollout machinery with the activation grid precomputed, for evaluating
/// many policies on one arm.
#[derive(Debug, Clone)]
pub struct Simulator {
    arm: ArmModel,
    basis: BasisFunctionSet,
    dt: f64,
    times: Vec<f64>,
    activations: Vec<Vec<f64>>,
}

impl Simulator {
    pub fn new(arm: ArmModel, basis: BasisFunctionSet, dt: f64) -> Result<Self> {
        let steps = step_count(basis.duration(), dt)?;
        let times: Vec<f64> = (0..=steps)
            .map(|n| (n as f64 * dt).min(basis.duration()))
            .collect();
        let activations = times
            .iter()
            .map(|&t| basis.activations_unchecked(t))
            .collect();
        Ok(Simulator {
            arm,
            basis,
            dt,
            times,
            activations,
        })
    }

    pub fn arm(&self) -> &ArmModel {
        &self.arm
    }

    pub fn basis(&self) -> &BasisFunctionSet {
        &self.basis
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Activation vector at each grid point.
    pub fn activation_grid(&self) -> &[Vec<f64>] {
        &self.activations
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.joint_count() != self.arm.joint_count() {
            return Err(Error::DimensionMismatch {
                expected: self.arm.joint_count(),
                actual: policy.joint_count(),
            });
        }
        if policy.basis_count() != self.basis.count() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.count(),
                actual: policy.basis_count(),
            });
        }
        Ok(())
    }

    /// Accelerations only, one row per grid point.
    pub fn accelerations(&self, policy: &Policy) -> Result<Vec<Vec<f64>>> {
        self.check_policy(policy)?;
        Ok(self
            .activations
            .iter()
            .map(|g| {
                policy
                    .joints()
                    .iter()
                    .map(|theta| g.iter().zip(theta.iter()).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect())
    }

    /// Integrates from rest with explicit Euler:
    /// `v[n+1] = v[n] + dt a[n]`, `q[n+1] = q[n] + dt v[n]`.
    pub fn rollout(&self, policy: &Policy) -> Result<Trajectory> {
        let accelerations = self.accelerations(policy)?;
        let joints = self.arm.joint_count();
        let n = self.times.len();
        let mut velocities = Vec::with_capacity(n);
        let mut angles = Vec::with_capacity(n);
        velocities.push(vec![0.0; joints]);
        angles.push(vec![0.0; joints]);
        for step in 1..n {
            let (v, q, a) = (
                &velocities[step - 1],
                &angles[step - 1],
                &accelerations[step - 1],
            );
            let next_v: Vec<f64> = v.iter().zip(a).map(|(v, a)| v + self.dt * a).collect();
            let next_q: Vec<f64> = q.iter().zip(v).map(|(q, v)| q + self.dt * v).collect();
            velocities.push(next_v);
            angles.push(next_q);
        }
        let end_effector = angles
            .iter()
            .map(|q| self.arm.end_effector_unchecked(q))
            .collect();
        Ok(Trajectory {
            times: self.times.clone(),
            accelerations,
            velocities,
            angles,
            end_effector,
        })
    }
}

/// One-off rollout; build a [`Simulator`] when evaluating many policies.
pub fn rollout(
    arm: &ArmModel,
    basis: &BasisFunctionSet,
    policy: &Policy,
    dt: f64,
) -> Result<Trajectory> {
    Simulator::new(arm.clone(), basis.clone(), dt)?.rollout(policy)
}
