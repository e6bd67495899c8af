//! Static posture analyses: how much a single joint perturbation moves the
//! hand relative to a target, and how often a distal perturbation reorders
//! the costs of two proximal perturbations.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arm::{ArmModel, Morphology, MorphologyKind, Point2, TargetSet};
use crate::cost::{comfort, ComfortMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Angle applied to one joint at a time in the sensitivity analysis.
    pub perturbation: f64,
    /// Standard deviation of the proximal-joint draws.
    pub proximal_sigma: f64,
    /// Standard deviation of the distal-joint draws.
    pub distal_sigma: f64,
    pub samples_per_target: usize,
    pub seed: u64,
    /// Adds the signed end-state comfort term to the static cost.
    pub include_comfort: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            perturbation: PI / 10.0,
            proximal_sigma: PI / 10.0,
            distal_sigma: PI / 10.0,
            samples_per_target: 100,
            seed: 0,
            include_comfort: false,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_target == 0 {
            return Err(Error::config(
                "analysis.samples_per_target",
                "must be at least 1",
            ));
        }
        if !(self.proximal_sigma >= 0.0 && self.proximal_sigma.is_finite()) {
            return Err(Error::config(
                "analysis.proximal_sigma",
                "must be a finite value >= 0",
            ));
        }
        if !(self.distal_sigma >= 0.0 && self.distal_sigma.is_finite()) {
            return Err(Error::config(
                "analysis.distal_sigma",
                "must be a finite value >= 0",
            ));
        }
        if !self.perturbation.is_finite() {
            return Err(Error::config("analysis.perturbation", "must be finite"));
        }
        Ok(())
    }
}

fn static_cost(arm: &ArmModel, angles: &[f64], target: Point2, include_comfort: bool) -> f64 {
    let d = arm.end_effector_unchecked(angles).distance(target);
    if include_comfort {
        d + comfort(angles, ComfortMode::SignedMax)
    } else {
        d
    }
}

/// Mean over targets of `|cost(joint m at angle) - cost(stretched)|`, per joint.
pub fn joint_sensitivity(
    arm: &ArmModel,
    targets: &TargetSet,
    angle: f64,
    include_comfort: bool,
) -> Vec<f64> {
    let joints = arm.joint_count();
    let rest = vec![0.0; joints];
    (0..joints)
        .map(|m| {
            let mut bent = rest.clone();
            bent[m] = angle;
            targets
                .iter()
                .map(|&g| {
                    (static_cost(arm, &bent, g, include_comfort)
                        - static_cost(arm, &rest, g, include_comfort))
                    .abs()
                })
                .sum::<f64>()
                / targets.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub morphology: MorphologyKind,
    pub per_joint: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub rows: Vec<SensitivityRow>,
}

pub fn sensitivity(
    morphologies: &[Morphology],
    targets: &TargetSet,
    config: &AnalysisConfig,
) -> SensitivityReport {
    SensitivityReport {
        rows: morphologies
            .iter()
            .map(|m| SensitivityRow {
                morphology: m.kind,
                per_joint: joint_sensitivity(
                    &m.arm,
                    targets,
                    config.perturbation,
                    config.include_comfort,
                ),
            })
            .collect(),
    }
}

impl SensitivityReport {
    /// Header `morphology,joint_1..M`, one row per morphology.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let joints = self.rows.first().map_or(0, |r| r.per_joint.len());
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["morphology".to_string()];
        header.extend((1..=joints).map(|m| format!("joint_{m}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.morphology.to_string()];
            rec.extend(row.per_joint.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let morphology = record
                .get(0)
                .ok_or_else(|| Error::invalid("empty sensitivity row"))?
                .parse()?;
            let per_joint = record
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::invalid(format!("bad number `{v}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(SensitivityRow {
                morphology,
                per_joint,
            });
        }
        Ok(SensitivityReport { rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRatio {
    /// 1-based joint indices, `proximal < distal`.
    pub proximal: usize,
    pub distal: usize,
    /// Fraction of draws where the distal perturbation left the ranking of
    /// the two proximal perturbations unchanged.
    pub ratio: f64,
}

/// Ordered joint pairs `(p, d)` with `p < d`, 0-based, proximal-major.
pub fn joint_pairs(joints: usize) -> Vec<(usize, usize)> {
    (0..joints)
        .flat_map(|p| (p + 1..joints).map(move |d| (p, d)))
        .collect()
}

/// Ranking-invariance ratio for every joint pair.
///
/// Each draw samples two proximal angles `P1, P2`; each of them gets its own
/// two distal angles, giving four postures. The ranking of `P1` against `P2`
/// under the first distal draws is compared to the ranking under the second
/// distal draws. Pair `k` (in [`joint_pairs`] order) uses ChaCha stream `k`
/// of `seed`, so the result does not depend on thread scheduling.
pub fn interaction_ratios(
    arm: &ArmModel,
    targets: &TargetSet,
    config: &AnalysisConfig,
) -> Result<Vec<PairRatio>> {
    config.validate()?;
    let joints = arm.joint_count();
    let proximal_law = Normal::new(0.0, config.proximal_sigma)
        .map_err(|e| Error::config("analysis.proximal_sigma", e.to_string()))?;
    let distal_law = Normal::new(0.0, config.distal_sigma)
        .map_err(|e| Error::config("analysis.distal_sigma", e.to_string()))?;

    let pairs = joint_pairs(joints);
    let ratios = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(p, d))| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(k as u64);
            let mut angles = vec![0.0; joints];
            let mut unchanged = 0usize;
            let mut total = 0usize;
            for &target in targets.iter() {
                for _ in 0..config.samples_per_target {
                    let proximal: [f64; 2] = [rng.sample(proximal_law), rng.sample(proximal_law)];
                    let mut costs = [[0.0; 2]; 2];
                    for (i, &pa) in proximal.iter().enumerate() {
                        for cell in costs[i].iter_mut() {
                            angles[p] = pa;
                            angles[d] = rng.sample(distal_law);
                            *cell = static_cost(arm, &angles, target, config.include_comfort);
                        }
                    }
                    let first = costs[0][0] < costs[1][0];
                    let second = costs[0][1] < costs[1][1];
                    unchanged += usize::from(first == second);
                    total += 1;
                }
            }
            PairRatio {
                proximal: p + 1,
                distal: d + 1,
                ratio: unchanged as f64 / total as f64,
            }
        })
        .collect();
    Ok(ratios)
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRow {
    pub morphology: MorphologyKind,
    pub pairs: Vec<PairRatio>,
    pub median: f64,
}

impl InteractionRow {
    pub fn ratio(&self, proximal: usize, distal: usize) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| p.proximal == proximal && p.distal == distal)
            .map(|p| p.ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub rows: Vec<InteractionRow>,
}

pub fn interaction_report(
    morphologies: &[Morphology],
    targets: &TargetSet,
    config: &AnalysisConfig,
) -> Result<InteractionReport> {
    let rows = morphologies
        .iter()
        .map(|m| {
            let pairs = interaction_ratios(&m.arm, targets, config)?;
            let ratios: Vec<f64> = pairs.iter().map(|p| p.ratio).collect();
            Ok(InteractionRow {
                morphology: m.kind,
                median: median(&ratios),
                pairs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InteractionReport { rows })
}

impl InteractionReport {
    pub fn row(&self, kind: MorphologyKind) -> Option<&InteractionRow> {
        self.rows.iter().find(|r| r.morphology == kind)
    }

    /// Header `morphology,proximal,distal,ratio`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["morphology", "proximal", "distal", "ratio"])?;
        for row in &self.rows {
            for p in &row.pairs {
                w.write_record([
                    row.morphology.to_string(),
                    p.proximal.to_string(),
                    p.distal.to_string(),
                    p.ratio.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut rows: Vec<InteractionRow> = Vec::new();
        for record in r.records() {
            let record = record?;
            let field = |i: usize| {
                record
                    .get(i)
                    .ok_or_else(|| Error::invalid("short interaction row"))
            };
            let kind: MorphologyKind = field(0)?.parse()?;
            let parse_usize = |v: &str| {
                v.parse::<usize>()
                    .map_err(|e| Error::invalid(format!("bad index `{v}`: {e}")))
            };
            let pair = PairRatio {
                proximal: parse_usize(field(1)?)?,
                distal: parse_usize(field(2)?)?,
                ratio: field(3)?
                    .parse()
                    .map_err(|e| Error::invalid(format!("bad ratio: {e}")))?,
            };
            match rows.iter_mut().find(|r| r.morphology == kind) {
                Some(row) => row.pairs.push(pair),
                None => rows.push(InteractionRow {
                    morphology: kind,
                    pairs: vec![pair],
                    median: f64::NAN,
                }),
            }
        }
        for row in &mut rows {
            let ratios: Vec<f64> = row.pairs.iter().map(|p| p.ratio).collect();
            row.median = median(&ratios);
        }
        Ok(InteractionReport { rows })
    }
}
