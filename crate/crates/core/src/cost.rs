//! Reaching cost: squared terminal distance, end-state comfort and a
//! proximally weighted acceleration penalty summed over the grid.

use serde::{Deserialize, Serialize};

use crate::arm::{ArmModel, Point2};
use crate::error::{Error, Result};
use crate::policy::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComfortMode {
    /// `max_m q_m` at the final step, sign included.
    SignedMax,
    /// `max_m |q_m|` at the final step.
    AbsoluteMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub distance: f64,
    pub comfort: f64,
    pub acceleration: f64,
    pub comfort_mode: ComfortMode,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            distance: 1e2,
            comfort: 1.0,
            acceleration: 1e-5,
            comfort_mode: ComfortMode::SignedMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub distance_term: f64,
    pub comfort_term: f64,
    pub acceleration_term: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(distance_term: f64, comfort_term: f64, acceleration_term: f64) -> Self {
        CostBreakdown {
            distance_term,
            comfort_term,
            acceleration_term,
            total: distance_term + comfort_term + acceleration_term,
        }
    }
}

pub fn comfort(final_angles: &[f64], mode: ComfortMode) -> f64 {
    let pick = |q: &f64| match mode {
        ComfortMode::SignedMax => *q,
        ComfortMode::AbsoluteMax => q.abs(),
    };
    final_angles
        .iter()
        .map(pick)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Per-step acceleration cost before the global weight: joint `m` (1-based)
/// of `M` is weighted by `M + 1 - m`, normalized by the sum of weights.
pub fn weighted_squared_acceleration(accelerations: &[f64]) -> f64 {
    let joints = accelerations.len();
    let norm = (joints * (joints + 1) / 2) as f64;
    let sum: f64 = accelerations
        .iter()
        .enumerate()
        .map(|(i, a)| (joints - i) as f64 * a * a)
        .sum();
    sum / norm
}

pub fn evaluate_cost(
    trajectory: &Trajectory,
    target: Point2,
    weights: &CostWeights,
) -> Result<CostBreakdown> {
    let (Some(final_tip), Some(final_angles)) =
        (trajectory.final_end_effector(), trajectory.final_angles())
    else {
        return Err(Error::invalid(
            "cannot evaluate the cost of an empty trajectory",
        ));
    };
    let distance_term = weights.distance * final_tip.squared_distance(target);
    let comfort_term = weights.comfort * comfort(final_angles, weights.comfort_mode);
    let acceleration_term = weights.acceleration
        * trajectory
            .accelerations
            .iter()
            .map(|a| weighted_squared_acceleration(a))
            .sum::<f64>();
    Ok(CostBreakdown::new(
        distance_term,
        comfort_term,
        acceleration_term,
    ))
}

/// Plain Euclidean distance from the hand to `target` for a static posture.
pub fn static_distance_cost(arm: &ArmModel, joint_angles: &[f64], target: Point2) -> Result<f64> {
    Ok(arm.end_effector(joint_angles)?.distance(target))
}
