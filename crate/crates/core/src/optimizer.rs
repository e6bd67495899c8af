//! Black-box policy improvement by weighted averaging.
//!
//! Each joint owns an independent Gaussian over its kernel weights. One
//! update samples `K` candidate policies, maps their costs to weights with
//! a normalized exponential, and replaces every mean and covariance block by
//! the weighted average of the samples (covariance around the *previous*
//! mean). Eigenvalues of the new covariances are then floored so that no
//! direction's exploration drops below `lambda_min`.
//!
//! There are no evolution paths, step-size controls or temporal averaging.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::arm::Point2;
use crate::cost::{evaluate_cost, CostBreakdown, CostWeights};
use crate::error::{Error, Result};
use crate::policy::{Policy, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Rollouts per update (`K`).
    pub samples_per_update: usize,
    /// Eliteness `h` of the cost-to-weight mapping.
    pub eliteness: f64,
    pub lambda_init: f64,
    pub lambda_min: f64,
    pub updates: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            samples_per_update: 20,
            eliteness: 10.0,
            lambda_init: 0.05,
            lambda_min: 0.05,
            updates: 100,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_update < 2 {
            return Err(Error::config(
                "optimizer.samples_per_update",
                "need at least 2 samples per update",
            ));
        }
        if !(self.eliteness >= 0.0 && self.eliteness.is_finite()) {
            return Err(Error::config(
                "optimizer.eliteness",
                "must be a finite value >= 0",
            ));
        }
        if !(self.lambda_init > 0.0 && self.lambda_init.is_finite()) {
            return Err(Error::config("optimizer.lambda_init", "must be positive"));
        }
        if !(self.lambda_min >= 0.0 && self.lambda_min.is_finite()) {
            return Err(Error::config("optimizer.lambda_min", "must be >= 0"));
        }
        if self.updates == 0 {
            return Err(Error::config("optimizer.updates", "must be at least 1"));
        }
        Ok(())
    }
}

/// Block-diagonal Gaussian search distribution: one `(mean, covariance)`
/// pair per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDistribution {
    means: Vec<DVector<f64>>,
    covariances: Vec<DMatrix<f64>>,
    lambda_min: f64,
}

impl SearchDistribution {
    /// Zero means and isotropic covariances `lambda_init * I`.
    pub fn isotropic(joints: usize, basis_count: usize, lambda_init: f64, lambda_min: f64) -> Self {
        SearchDistribution {
            means: vec![DVector::zeros(basis_count); joints],
            covariances: vec![DMatrix::identity(basis_count, basis_count) * lambda_init; joints],
            lambda_min,
        }
    }

    pub fn from_parts(
        means: Vec<DVector<f64>>,
        covariances: Vec<DMatrix<f64>>,
        lambda_min: f64,
    ) -> Result<Self> {
        if means.is_empty() || means.len() != covariances.len() {
            return Err(Error::invalid(format!(
                "{} means but {} covariance blocks",
                means.len(),
                covariances.len()
            )));
        }
        for (mean, cov) in means.iter().zip(&covariances) {
            let n = mean.len();
            if cov.nrows() != n || cov.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: cov.nrows().max(cov.ncols()),
                });
            }
        }
        Ok(SearchDistribution {
            means,
            covariances,
            lambda_min,
        })
    }

    pub fn joint_count(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn mean_policy(&self) -> Policy {
        Policy::new(self.means.clone()).expect("distribution blocks share one shape")
    }
}

/// Lower-triangular factor `L` with `L Lᵀ = cov`. Falls back to the
/// symmetric square root when Cholesky fails on a singular PSD block.
fn sampling_factor(block: usize, cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = cov.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = SymmetricEigen::new(cov.clone());
    let scale = eig.eigenvalues.amax().max(1.0);
    let min = eig.eigenvalues.min();
    if min < -1e-12 * scale {
        return Err(Error::InvalidCovariance {
            block,
            min_eigenvalue: min,
        });
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Draws `k` policies, each joint independently from its own Gaussian.
pub fn sample_candidates<R: Rng + ?Sized>(
    dist: &SearchDistribution,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Policy>> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {k}")));
    }
    let factors = dist
        .covariances
        .iter()
        .enumerate()
        .map(|(i, c)| sampling_factor(i, c))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let joints = dist
            .means
            .iter()
            .zip(&factors)
            .map(|(mean, factor)| {
                let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                mean + factor * z
            })
            .collect();
        out.push(Policy::new(joints)?);
    }
    Ok(out)
}

/// Seeded variant of [`sample_candidates`].
pub fn sample_batch(dist: &SearchDistribution, k: usize, seed: u64) -> Result<Vec<Policy>> {
    sample_candidates(dist, k, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `P_k ∝ exp(-h (J_k - min J) / (max J - min J))`, normalized to sum to one.
/// A batch with no cost spread gets uniform weights.
pub fn costs_to_weights(costs: &[f64], eliteness: f64) -> Result<Vec<f64>> {
    if costs.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 costs, got {}",
            costs.len()
        )));
    }
    if let Some(bad) = costs.iter().find(|c| !c.is_finite()) {
        return Err(Error::invalid(format!("cost {bad} is not finite")));
    }
    let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return Ok(vec![1.0 / costs.len() as f64; costs.len()]);
    }
    let raw: Vec<f64> = costs
        .iter()
        .map(|c| (-eliteness * (c - lo) / range).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Raises every eigenvalue below `floor` to `floor`, keeping the eigenbasis.
pub fn floor_eigenvalues(cov: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(cov.clone());
    if eig.eigenvalues.min() >= floor {
        return cov.clone();
    }
    let clipped = eig.eigenvalues.map(|v| v.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&rebuilt + rebuilt.transpose()) * 0.5
}

/// Weighted-average update of every block, followed by eigenvalue flooring.
pub fn update_distribution(
    dist: &SearchDistribution,
    candidates: &[Policy],
    weights: &[f64],
) -> Result<SearchDistribution> {
    if candidates.len() != weights.len() || candidates.is_empty() {
        return Err(Error::invalid(format!(
            "{} candidates but {} weights",
            candidates.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::invalid("weights must be non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    if let Some(c) = candidates
        .iter()
        .find(|c| c.joint_count() != dist.joint_count())
    {
        return Err(Error::DimensionMismatch {
            expected: dist.joint_count(),
            actual: c.joint_count(),
        });
    }

    let mut means = Vec::with_capacity(dist.joint_count());
    let mut covariances = Vec::with_capacity(dist.joint_count());
    for (m, (old_mean, old_cov)) in dist.means.iter().zip(&dist.covariances).enumerate() {
        let n = old_mean.len();
        let mut mean = DVector::zeros(n);
        let mut cov = DMatrix::zeros(n, n);
        for (candidate, &w) in candidates.iter().zip(weights) {
            let theta = candidate.joint(m);
            if theta.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: theta.len(),
                });
            }
            mean.axpy(w, theta, 1.0);
            let eps = theta - old_mean;
            cov.ger(w, &eps, &eps, 1.0);
        }
        debug_assert_eq!(old_cov.nrows(), n);
        means.push(mean);
        covariances.push(floor_eigenvalues(&cov, dist.lambda_min));
    }
    Ok(SearchDistribution {
        means,
        covariances,
        lambda_min: dist.lambda_min,
    })
}

/// Per-joint exploration magnitudes (largest covariance eigenvalue).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationState {
    pub magnitudes: Vec<f64>,
    pub relative: Vec<f64>,
    pub total: f64,
}

impl ExplorationState {
    pub fn from_magnitudes(magnitudes: Vec<f64>) -> Self {
        let total: f64 = magnitudes.iter().sum();
        let relative = magnitudes.iter().map(|l| l / total).collect();
        ExplorationState {
            magnitudes,
            relative,
            total,
        }
    }
}

pub fn largest_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(cov.clone()).eigenvalues.max()
}

pub fn exploration_state(dist: &SearchDistribution) -> ExplorationState {
    ExplorationState::from_magnitudes(dist.covariances.iter().map(largest_eigenvalue).collect())
}

/// Samples, costs and weights of one update.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub candidates: Vec<Policy>,
    pub costs: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Runs one update against an arbitrary cost function.
pub fn step<R, F>(
    dist: &SearchDistribution,
    config: &OptimizerConfig,
    rng: &mut R,
    mut cost_fn: F,
) -> Result<(SearchDistribution, SampleBatch)>
where
    R: Rng + ?Sized,
    F: FnMut(&Policy) -> Result<f64>,
{
    let candidates = sample_candidates(dist, config.samples_per_update, rng)?;
    let costs = candidates
        .iter()
        .map(&mut cost_fn)
        .collect::<Result<Vec<_>>>()?;
    let weights = costs_to_weights(&costs, config.eliteness)?;
    let next = update_distribution(dist, &candidates, &weights)?;
    Ok((
        next,
        SampleBatch {
            candidates,
            costs,
            weights,
        },
    ))
}

/// State of the search distribution before one update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateRecord {
    /// 1-based; update 1 records the initial distribution.
    pub update: usize,
    pub exploration: ExplorationState,
    /// Cost of the mean policy (no exploration noise).
    pub mean_cost: CostBreakdown,
    pub mean_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub seed: u64,
    pub target: Point2,
    pub records: Vec<UpdateRecord>,
    /// Mean-policy cost and hand-to-target distance after the last update.
    pub final_cost: CostBreakdown,
    pub final_distance: f64,
}

impl SessionTrace {
    pub fn updates(&self) -> usize {
        self.records.len()
    }

    /// Exploration magnitude of `joint` (0-based) at every recorded update.
    pub fn magnitude_curve(&self, joint: usize) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.exploration.magnitudes[joint])
            .collect()
    }

    pub fn total_curve(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.exploration.total).collect()
    }

    /// Mean-policy total cost at each recorded update followed by the final cost.
    pub fn cost_curve(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.mean_cost.total)
            .chain(std::iter::once(self.final_cost.total))
            .collect()
    }

    /// Header: `update, lambda_1..M, relative_1..M, total, distance_term,
    /// comfort_term, acceleration_term, cost`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let joints = self
            .records
            .first()
            .map_or(0, |r| r.exploration.magnitudes.len());
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(session_csv_header(joints))?;
        for r in &self.records {
            w.write_record(session_csv_row(r))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn session_csv_header(joints: usize) -> Vec<String> {
    let mut header = vec!["update".to_string()];
    header.extend((1..=joints).map(|m| format!("lambda_{m}")));
    header.extend((1..=joints).map(|m| format!("relative_{m}")));
    header.extend(
        [
            "total",
            "distance_term",
            "comfort_term",
            "acceleration_term",
            "cost",
        ]
        .map(String::from),
    );
    header
}

pub(crate) fn session_csv_row(r: &UpdateRecord) -> Vec<String> {
    let mut row = vec![r.update.to_string()];
    row.extend(r.exploration.magnitudes.iter().map(f64::to_string));
    row.extend(r.exploration.relative.iter().map(f64::to_string));
    row.push(r.exploration.total.to_string());
    row.extend(
        [
            r.mean_cost.distance_term,
            r.mean_cost.comfort_term,
            r.mean_cost.acceleration_term,
            r.mean_cost.total,
        ]
        .map(|v| v.to_string()),
    );
    row
}

/// Optimizes a reaching movement toward `target` from the stretched pose.
pub fn run_session(
    sim: &Simulator,
    weights: &CostWeights,
    target: Point2,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<SessionTrace> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dist = SearchDistribution::isotropic(
        sim.arm().joint_count(),
        sim.basis().count(),
        config.lambda_init,
        config.lambda_min,
    );

    let evaluate = |policy: &Policy| -> Result<(CostBreakdown, f64)> {
        let traj = sim.rollout(policy)?;
        let cost = evaluate_cost(&traj, target, weights)?;
        let tip = traj.final_end_effector().expect("non-empty trajectory");
        Ok((cost, tip.distance(target)))
    };

    let mut records = Vec::with_capacity(config.updates);
    for update in 1..=config.updates {
        let (mean_cost, mean_distance) = evaluate(&dist.mean_policy())?;
        records.push(UpdateRecord {
            update,
            exploration: exploration_state(&dist),
            mean_cost,
            mean_distance,
        });
        let (next, _) = step(&dist, config, &mut rng, |p| Ok(evaluate(p)?.0.total))?;
        dist = next;
    }
    let (final_cost, final_distance) = evaluate(&dist.mean_policy())?;
    Ok(SessionTrace {
        seed,
        target,
        records,
        final_cost,
        final_distance,
    })
}
