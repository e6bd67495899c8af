//! Planar serial arm: link lengths, forward kinematics, morphologies and the
//! reaching targets.
//!
//! Joint angles are relative: link `m` points along the cumulative sum of
//! joints `1..=m`, so with all angles zero the arm lies stretched along +x.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the normalized total arm length.
pub const LENGTH_TOLERANCE: f64 = 1e-12;

/// Relative link lengths of the human-like arm, shoulder to fingertip.
pub const HUMAN_LINK_LENGTHS: [f64; 6] = [0.40, 0.30, 0.15, 0.08, 0.04, 0.03];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Point2::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn squared_distance(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Rotates about the origin by `angle` radians.
    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// Output of [`ArmModel::forward_kinematics`].
#[derive(Debug, Clone, PartialEq)]
pub struct ArmPose {
    pub end_effector: Point2,
    /// `M + 1` points: the base at the origin followed by the tip of each link.
    pub joint_positions: Vec<Point2>,
}

/// A planar chain of `M` revolute joints with normalized link lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmModel {
    link_lengths: Vec<f64>,
}

impl ArmModel {
    /// Builds an arm from link lengths that already sum to one.
    pub fn new(link_lengths: Vec<f64>) -> Result<Self> {
        if link_lengths.is_empty() {
            return Err(Error::invalid("an arm needs at least one link"));
        }
        if let Some(bad) = link_lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid(format!("link length {bad} is not positive")));
        }
        let total: f64 = link_lengths.iter().sum();
        if (total - 1.0).abs() > LENGTH_TOLERANCE {
            return Err(Error::invalid(format!(
                "link lengths sum to {total}, expected a normalized length of 1"
            )));
        }
        Ok(ArmModel { link_lengths })
    }

    /// Builds an arm from relative lengths, rescaling them to a total of one.
    pub fn from_relative(relative: &[f64]) -> Result<Self> {
        if let Some(bad) = relative.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid(format!("link length {bad} is not positive")));
        }
        let total: f64 = relative.iter().sum();
        ArmModel::new(relative.iter().map(|l| l / total).collect())
    }

    pub fn joint_count(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    fn check_angles(&self, joint_angles: &[f64]) -> Result<()> {
        if joint_angles.len() != self.joint_count() {
            return Err(Error::DimensionMismatch {
                expected: self.joint_count(),
                actual: joint_angles.len(),
            });
        }
        Ok(())
    }

    pub fn forward_kinematics(&self, joint_angles: &[f64]) -> Result<ArmPose> {
        self.check_angles(joint_angles)?;
        let mut positions = Vec::with_capacity(self.joint_count() + 1);
        positions.push(Point2::ORIGIN);
        let mut heading = 0.0;
        let mut tip = Point2::ORIGIN;
        for (length, angle) in self.link_lengths.iter().zip(joint_angles) {
            heading += angle;
            let (s, c) = heading.sin_cos();
            tip = Point2::new(tip.x + length * c, tip.y + length * s);
            positions.push(tip);
        }
        Ok(ArmPose {
            end_effector: tip,
            joint_positions: positions,
        })
    }

    /// Same as [`forward_kinematics`](Self::forward_kinematics) without
    /// materializing the intermediate joint positions.
    pub fn end_effector(&self, joint_angles: &[f64]) -> Result<Point2> {
        self.check_angles(joint_angles)?;
        Ok(self.end_effector_unchecked(joint_angles))
    }

    pub(crate) fn end_effector_unchecked(&self, joint_angles: &[f64]) -> Point2 {
        let mut heading = 0.0;
        let (mut x, mut y) = (0.0, 0.0);
        for (length, angle) in self.link_lengths.iter().zip(joint_angles) {
            heading += angle;
            let (s, c) = heading.sin_cos();
            x += length * c;
            y += length * s;
        }
        Point2::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MorphologyKind {
    Human,
    Equidistant,
    InvertedHuman,
}

impl MorphologyKind {
    pub const ALL: [MorphologyKind; 3] = [
        MorphologyKind::Human,
        MorphologyKind::Equidistant,
        MorphologyKind::InvertedHuman,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MorphologyKind::Human => "human",
            MorphologyKind::Equidistant => "equidistant",
            MorphologyKind::InvertedHuman => "inverted-human",
        }
    }
}

impl fmt::Display for MorphologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MorphologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "human" => Ok(MorphologyKind::Human),
            "equidistant" | "equal" => Ok(MorphologyKind::Equidistant),
            "inverted-human" | "inverted_human" | "inverted" => Ok(MorphologyKind::InvertedHuman),
            other => Err(Error::invalid(format!(
                "unknown morphology `{other}` (expected human, equidistant or inverted-human)"
            ))),
        }
    }
}

/// One of the three arm variants, all derived from a single human profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Morphology {
    pub kind: MorphologyKind,
    pub arm: ArmModel,
}

impl Morphology {
    /// Derives the morphology from a shoulder-to-fingertip human profile.
    /// The equidistant arm keeps the joint count of the profile.
    pub fn from_human_profile(kind: MorphologyKind, human: &[f64]) -> Result<Self> {
        let arm = match kind {
            MorphologyKind::Human => ArmModel::from_relative(human)?,
            MorphologyKind::Equidistant => {
                if human.is_empty() {
                    return Err(Error::invalid("human profile is empty"));
                }
                ArmModel::new(vec![1.0 / human.len() as f64; human.len()])?
            }
            MorphologyKind::InvertedHuman => {
                let reversed: Vec<f64> = human.iter().rev().copied().collect();
                ArmModel::from_relative(&reversed)?
            }
        };
        Ok(Morphology { kind, arm })
    }

    pub fn standard(kind: MorphologyKind) -> Self {
        Morphology::from_human_profile(kind, &HUMAN_LINK_LENGTHS)
            .expect("built-in human profile is valid")
    }
}

/// Reaching targets in the arm's workspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSet {
    targets: Vec<Point2>,
}

impl TargetSet {
    /// Accepts any non-empty set of points the unit-length arm can reach.
    pub fn new(targets: Vec<Point2>) -> Result<Self> {
        TargetSet::with_min_radius(targets, 0.0)
    }

    pub fn with_min_radius(targets: Vec<Point2>, min_radius: f64) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::invalid("target set is empty"));
        }
        for (i, t) in targets.iter().enumerate() {
            let r = t.norm();
            if !r.is_finite() || r > 1.0 + LENGTH_TOLERANCE {
                return Err(Error::invalid(format!(
                    "target {i} at ({}, {}) lies outside the reachable disc",
                    t.x, t.y
                )));
            }
            if r < min_radius {
                return Err(Error::invalid(format!(
                    "target {i} at ({}, {}) is closer than the minimum radius {min_radius}",
                    t.x, t.y
                )));
            }
        }
        Ok(TargetSet { targets })
    }

    pub fn single(target: Point2) -> Result<Self> {
        TargetSet::new(vec![target])
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn points(&self) -> &[Point2] {
        &self.targets
    }

    pub fn iter(&self) -> impl Iterator<Item = &Point2> {
        self.targets.iter()
    }

    /// Writes `index,x,y` rows with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "x", "y"])?;
        for (i, t) in self.targets.iter().enumerate() {
            w.write_record([i.to_string(), t.x.to_string(), t.y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Placement of the default targets: evenly spaced points on concentric arcs
/// of the upper half-workspace, with one anchor point guaranteed present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetLayout {
    pub radii: Vec<f64>,
    pub points_per_arc: usize,
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    /// Replaces the nearest generated point on the arc of the same radius.
    pub anchor: Option<[f64; 2]>,
    pub min_radius: f64,
    pub max_radius: f64,
}

impl Default for TargetLayout {
    fn default() -> Self {
        TargetLayout {
            radii: vec![0.65, 0.85],
            points_per_arc: 10,
            min_angle_deg: 30.0,
            max_angle_deg: 150.0,
            anchor: Some([0.0, 0.85]),
            min_radius: 0.5,
            max_radius: 0.95,
        }
    }
}

pub fn default_targets(layout: &TargetLayout) -> Result<TargetSet> {
    if layout.radii.is_empty() || layout.points_per_arc == 0 {
        return Err(Error::invalid("target layout produces no points"));
    }
    if !(layout.min_radius <= layout.max_radius && layout.max_radius <= 1.0) {
        return Err(Error::invalid(
            "target radius bounds must satisfy min_radius <= max_radius <= 1",
        ));
    }
    if let Some(r) = layout
        .radii
        .iter()
        .find(|r| !(**r >= layout.min_radius && **r <= layout.max_radius))
    {
        return Err(Error::invalid(format!(
            "arc radius {r} outside [{}, {}]",
            layout.min_radius, layout.max_radius
        )));
    }

    let n = layout.points_per_arc;
    let lo = layout.min_angle_deg.to_radians();
    let hi = layout.max_angle_deg.to_radians();
    let angle_at = |i: usize| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };

    let mut targets = Vec::with_capacity(layout.radii.len() * n);
    for &radius in &layout.radii {
        targets.extend((0..n).map(|i| Point2::from_polar(radius, angle_at(i))));
    }

    if let Some([ax, ay]) = layout.anchor {
        let anchor = Point2::new(ax, ay);
        let anchor_radius = anchor.norm();
        let arc = layout
            .radii
            .iter()
            .position(|r| (r - anchor_radius).abs() < 1e-9)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "anchor ({ax}, {ay}) does not lie on any configured arc"
                ))
            })?;
        let slots = &mut targets[arc * n..(arc + 1) * n];
        let nearest = slots
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1.squared_distance(anchor)
                    .total_cmp(&b.1.squared_distance(anchor))
            })
            .map(|(i, _)| i)
            .expect("arc has at least one slot");
        slots[nearest] = anchor;
    }

    TargetSet::with_min_radius(targets, layout.min_radius)
}
