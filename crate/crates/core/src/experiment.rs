//! Campaigns of optimization sessions over many targets, their aggregated
//! exploration curves, peak statistics and DTW-aligned variability.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arm::{Morphology, MorphologyKind, TargetSet};
use crate::cost::CostWeights;
use crate::dtw::dtw_align;
use crate::error::{Error, Result};
use crate::optimizer::{
    run_session, session_csv_header, session_csv_row, OptimizerConfig, SessionTrace,
};
use crate::policy::{BasisConfig, Simulator};

/// Margin above the uniform share under which an update-1 peak is treated
/// as a joint that was never freed.
pub const NEVER_FREED_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub sessions_per_target: usize,
    /// Session `i` (target-major order) uses seed `base_seed + i`.
    pub base_seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            sessions_per_target: 10,
            base_seed: 0,
        }
    }
}

/// Everything a campaign needs besides the morphology and targets.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CampaignSettings {
    pub basis: BasisConfig,
    pub cost: CostWeights,
    pub optimizer: OptimizerConfig,
    pub campaign: CampaignConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakRecord {
    /// 1-based joint index.
    pub joint: usize,
    pub peak_relative: f64,
    /// 1-based update index.
    pub peak_update: usize,
    pub never_freed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub morphology: MorphologyKind,
    pub sessions: usize,
    /// `updates x joints` session-averaged relative exploration.
    pub mean_relative: Vec<Vec<f64>>,
    /// Session-averaged total exploration per update.
    pub mean_total: Vec<f64>,
    pub peaks: Vec<PeakRecord>,
}

/// A finished campaign with every session trace kept for later analysis.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub result: CampaignResult,
    pub traces: Vec<SessionTrace>,
}

/// Peak of each column; the earliest update wins ties.
pub fn peak_records(mean_relative: &[Vec<f64>]) -> Vec<PeakRecord> {
    let joints = mean_relative.first().map_or(0, Vec::len);
    let uniform = if joints > 0 { 1.0 / joints as f64 } else { 0.0 };
    (0..joints)
        .map(|m| {
            let (idx, peak) = mean_relative.iter().map(|row| row[m]).enumerate().fold(
                (0, f64::NEG_INFINITY),
                |best, (i, v)| if v > best.1 { (i, v) } else { best },
            );
            PeakRecord {
                joint: m + 1,
                peak_relative: peak,
                peak_update: idx + 1,
                never_freed: idx == 0 && peak <= uniform + NEVER_FREED_MARGIN,
            }
        })
        .collect()
}

impl CampaignResult {
    pub fn from_traces(morphology: MorphologyKind, traces: &[SessionTrace]) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| Error::invalid("campaign has no sessions"))?;
        let updates = first.updates();
        let joints = first
            .records
            .first()
            .map_or(0, |r| r.exploration.magnitudes.len());
        if traces.iter().any(|t| t.updates() != updates) {
            return Err(Error::invalid(
                "sessions recorded different numbers of updates",
            ));
        }
        let n = traces.len() as f64;
        let mut mean_relative = vec![vec![0.0; joints]; updates];
        let mut mean_total = vec![0.0; updates];
        for trace in traces {
            for (u, record) in trace.records.iter().enumerate() {
                for (acc, r) in mean_relative[u]
                    .iter_mut()
                    .zip(&record.exploration.relative)
                {
                    *acc += r / n;
                }
                mean_total[u] += record.exploration.total / n;
            }
        }
        let peaks = peak_records(&mean_relative);
        Ok(CampaignResult {
            morphology,
            sessions: traces.len(),
            mean_relative,
            mean_total,
            peaks,
        })
    }

    pub fn updates(&self) -> usize {
        self.mean_total.len()
    }

    pub fn joint_count(&self) -> usize {
        self.peaks.len()
    }

    pub fn peak(&self, joint: usize) -> &PeakRecord {
        &self.peaks[joint - 1]
    }

    /// The largest per-joint peak.
    pub fn top_peak(&self) -> &PeakRecord {
        self.peaks.iter().fold(&self.peaks[0], |best, p| {
            if p.peak_relative > best.peak_relative {
                p
            } else {
                best
            }
        })
    }

    /// Header `update,relative_1..M,total`.
    pub fn write_exploration_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["update".to_string()];
        header.extend((1..=self.joint_count()).map(|m| format!("relative_{m}")));
        header.push("total".into());
        w.write_record(&header)?;
        for (u, (rel, total)) in self.mean_relative.iter().zip(&self.mean_total).enumerate() {
            let mut row = vec![(u + 1).to_string()];
            row.extend(rel.iter().map(f64::to_string));
            row.push(total.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn peaks_json(&self) -> serde_json::Value {
        serde_json::json!({
            "morphology": self.morphology,
            "sessions": self.sessions,
            "updates": self.updates(),
            "peaks": self.peaks,
            "freeing_order": freeing_order(self),
            "max_total": self.mean_total.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            "max_total_update": argmax(&self.mean_total) + 1,
        })
    }
}

/// Exploration curves read back from a campaign CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationCurves {
    pub relative: Vec<Vec<f64>>,
    pub total: Vec<f64>,
}

pub fn read_exploration_csv<R: Read>(reader: R) -> Result<ExplorationCurves> {
    let mut r = csv::Reader::from_reader(reader);
    let width = r.headers()?.len();
    if width < 3 {
        return Err(Error::invalid(
            "exploration CSV needs update, relative and total columns",
        ));
    }
    let mut relative = Vec::new();
    let mut total = Vec::new();
    for record in r.records() {
        let record = record?;
        let values = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad number `{v}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let (last, rel) = values.split_last().expect("width checked");
        relative.push(rel.to_vec());
        total.push(*last);
    }
    Ok(ExplorationCurves { relative, total })
}

/// Writes every session's records in long form, prefixed with the session
/// index and target index.
pub fn write_sessions_csv<W: Write>(
    traces: &[SessionTrace],
    sessions_per_target: usize,
    writer: W,
) -> Result<()> {
    let joints = traces
        .first()
        .and_then(|t| t.records.first())
        .map_or(0, |r| r.exploration.magnitudes.len());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        "session".to_string(),
        "target".to_string(),
        "seed".to_string(),
    ];
    header.extend(session_csv_header(joints));
    w.write_record(&header)?;
    for (i, trace) in traces.iter().enumerate() {
        for record in &trace.records {
            let mut row = vec![
                i.to_string(),
                (i / sessions_per_target.max(1)).to_string(),
                trace.seed.to_string(),
            ];
            row.extend(session_csv_row(record));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs every (target, repetition) session, in parallel on the current rayon
/// pool, and averages their exploration curves.
pub fn run_campaign(
    morphology: &Morphology,
    targets: &TargetSet,
    settings: &CampaignSettings,
) -> Result<Campaign> {
    let per_target = settings.campaign.sessions_per_target;
    if per_target == 0 {
        return Err(Error::config(
            "campaign.sessions_per_target",
            "must be at least 1",
        ));
    }
    settings.optimizer.validate()?;
    let sim = Simulator::new(
        morphology.arm.clone(),
        settings.basis.basis()?,
        settings.basis.dt,
    )?;
    let points = targets.points();
    let traces = (0..points.len() * per_target)
        .into_par_iter()
        .map(|i| {
            let seed = settings.campaign.base_seed.wrapping_add(i as u64);
            run_session(
                &sim,
                &settings.cost,
                points[i / per_target],
                &settings.optimizer,
                seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let result = CampaignResult::from_traces(morphology.kind, &traces)?;
    Ok(Campaign { result, traces })
}

/// Joints (1-based) ordered by the update of their relative-exploration
/// peak; equal updates keep the proximal joint first.
pub fn freeing_order(result: &CampaignResult) -> Vec<usize> {
    let mut order: Vec<&PeakRecord> = result.peaks.iter().collect();
    order.sort_by_key(|p| (p.peak_update, p.joint));
    order.into_iter().map(|p| p.joint).collect()
}

/// [`freeing_order`] without the joints flagged as never freed.
pub fn freed_order(result: &CampaignResult) -> Vec<usize> {
    freeing_order(result)
        .into_iter()
        .filter(|&j| !result.peak(j).never_freed)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedVariance {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl AlignedVariance {
    /// Header `update,mean,std`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["update", "mean", "std"])?;
        for (u, (m, s)) in self.mean.iter().zip(&self.std).enumerate() {
            w.write_record([(u + 1).to_string(), m.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut mean = Vec::new();
        let mut std = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                let v = record
                    .get(i)
                    .ok_or_else(|| Error::invalid("short aligned-variance row"))?;
                v.parse()
                    .map_err(|e| Error::invalid(format!("bad number `{v}`: {e}")))
            };
            mean.push(parse(1)?);
            std.push(parse(2)?);
        }
        Ok(AlignedVariance { mean, std })
    }
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

fn mean_and_std(columns: &[Vec<f64>]) -> AlignedVariance {
    let len = columns[0].len();
    let n = columns.len() as f64;
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for u in 0..len {
        let m = columns.iter().map(|c| c[u]).sum::<f64>() / n;
        let var = columns.iter().map(|c| (c[u] - m).powi(2)).sum::<f64>() / (n - 1.0);
        mean[u] = m;
        std[u] = var.max(0.0).sqrt();
    }
    AlignedVariance { mean, std }
}

/// Per-update mean and sample standard deviation without any warping.
pub fn unaligned_variance(curves: &[Vec<f64>]) -> Result<AlignedVariance> {
    check_curves(curves)?;
    Ok(mean_and_std(curves))
}

fn check_curves(curves: &[Vec<f64>]) -> Result<()> {
    if curves.len() < 2 {
        return Err(Error::invalid("need at least two sessions"));
    }
    let len = curves[0].len();
    if len == 0 || curves.iter().any(|c| c.len() != len) {
        return Err(Error::invalid("curves must be non-empty and equally long"));
    }
    Ok(())
}

/// Warps every curve onto the cross-session mean curve (one pass), then
/// takes the per-update mean and sample standard deviation.
pub fn aligned_variance_of_curves(curves: &[Vec<f64>]) -> Result<AlignedVariance> {
    check_curves(curves)?;
    let reference = mean_and_std(curves).mean;
    let warped: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| dtw_align(&reference, c).expect("non-empty curves").warped)
        .collect();
    Ok(mean_and_std(&warped))
}

/// Aligned statistics of one joint's (0-based) exploration magnitude.
pub fn aligned_variance(traces: &[SessionTrace], joint: usize) -> Result<AlignedVariance> {
    if let Some(t) = traces.iter().find(|t| {
        t.records
            .iter()
            .any(|r| r.exploration.magnitudes.len() <= joint)
    }) {
        return Err(Error::invalid(format!(
            "joint {joint} out of range for session seeded {}",
            t.seed
        )));
    }
    let curves: Vec<Vec<f64>> = traces.iter().map(|t| t.magnitude_curve(joint)).collect();
    aligned_variance_of_curves(&curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm::{Point2, TargetSet};

    fn synthetic(peaks_at: &[usize], updates: usize) -> CampaignResult {
        let joints = peaks_at.len();
        let mut rel = vec![vec![1.0 / joints as f64; joints]; updates];
        for (m, &u) in peaks_at.iter().enumerate() {
            rel[u - 1][m] += 0.1;
        }
        CampaignResult {
            morphology: MorphologyKind::Human,
            sessions: 1,
            peaks: peak_records(&rel),
            mean_relative: rel,
            mean_total: vec![1.0; updates],
        }
    }

    #[test]
    fn synthetic_peaks_order_joints() {
        let r = synthetic(&[10, 20, 30, 40, 50, 60], 100);
        assert_eq!(freeing_order(&r), vec![1, 2, 3, 4, 5, 6]);
        let r = synthetic(&[30, 10, 20, 40, 50, 60], 100);
        assert_eq!(freeing_order(&r), vec![2, 3, 1, 4, 5, 6]);
    }

    #[test]
    fn ties_prefer_proximal() {
        let r = synthetic(&[5, 5, 2], 10);
        assert_eq!(freeing_order(&r), vec![3, 1, 2]);
    }

    #[test]
    fn update_one_peak_is_flagged() {
        let mut rel = vec![vec![1.0 / 3.0; 3]; 5];
        for row in rel.iter_mut().skip(1) {
            *row = vec![0.5, 0.3, 0.2];
        }
        let peaks = peak_records(&rel);
        assert!(!peaks[0].never_freed);
        assert!(peaks[2].never_freed);
        assert_eq!(peaks[2].peak_update, 1);
        let r = CampaignResult {
            morphology: MorphologyKind::Human,
            sessions: 1,
            peaks,
            mean_relative: rel,
            mean_total: vec![1.0; 5],
        };
        assert_eq!(freed_order(&r), vec![1]);
    }

    #[test]
    fn single_update_campaign_is_uniform() {
        let settings = CampaignSettings {
            optimizer: OptimizerConfig {
                updates: 1,
                ..OptimizerConfig::default()
            },
            campaign: CampaignConfig {
                sessions_per_target: 1,
                base_seed: 4,
            },
            ..CampaignSettings::default()
        };
        let targets = TargetSet::single(Point2::new(0.0, 0.85)).unwrap();
        let morph = Morphology::standard(MorphologyKind::Human);
        let c = run_campaign(&morph, &targets, &settings).unwrap();
        assert_eq!(c.result.updates(), 1);
        for r in &c.result.mean_relative[0] {
            assert!((r - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_sessions_rejected() {
        let settings = CampaignSettings {
            campaign: CampaignConfig {
                sessions_per_target: 0,
                base_seed: 0,
            },
            ..CampaignSettings::default()
        };
        let targets = TargetSet::single(Point2::new(0.0, 0.85)).unwrap();
        let err = run_campaign(
            &Morphology::standard(MorphologyKind::Human),
            &targets,
            &settings,
        )
        .unwrap_err();
        assert!(err.to_string().contains("campaign.sessions_per_target"));
    }

    #[test]
    fn identical_sessions_have_no_spread() {
        let curve: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).sin().abs()).collect();
        let v = aligned_variance_of_curves(&vec![curve.clone(); 5]).unwrap();
        assert!(v.std.iter().all(|&s| s < 1e-12));
        for (a, b) in v.mean.iter().zip(&curve) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn alignment_reduces_spread_of_shifted_bumps() {
        let bump = |center: f64| -> Vec<f64> {
            (0..40)
                .map(|i| (-(i as f64 - center).powi(2) / 8.0).exp())
                .collect()
        };
        let curves = vec![bump(15.0), bump(17.0)];
        let before: f64 = unaligned_variance(&curves).unwrap().std.iter().sum();
        let after: f64 = aligned_variance_of_curves(&curves)
            .unwrap()
            .std
            .iter()
            .sum();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn variance_needs_two_sessions() {
        assert!(aligned_variance_of_curves(&[vec![1.0, 2.0]]).is_err());
        assert!(aligned_variance_of_curves(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn exploration_csv_round_trip() {
        let r = synthetic(&[2, 3, 4], 5);
        let mut buf = Vec::new();
        r.write_exploration_csv(&mut buf).unwrap();
        let back = read_exploration_csv(buf.as_slice()).unwrap();
        assert_eq!(back.relative, r.mean_relative);
        assert_eq!(back.total, r.mean_total);
    }
}
