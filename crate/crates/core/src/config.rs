//! Run configuration read from a TOML key-value file.
//!
//! Every section is optional and falls back to the defaults used throughout
//! the crate. Unknown keys are rejected so that typos surface as errors.
//!
//! ```toml
//! [arm]
//! human = [0.40, 0.30, 0.15, 0.08, 0.04, 0.03]
//!
//! [optimizer]
//! samples_per_update = 20
//! eliteness = 10.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisConfig;
use crate::arm::{
    default_targets, Morphology, MorphologyKind, TargetLayout, TargetSet, HUMAN_LINK_LENGTHS,
};
use crate::cost::CostWeights;
use crate::demo::DemoConfig;
use crate::error::{Error, Result};
use crate::experiment::{CampaignConfig, CampaignSettings};
use crate::optimizer::OptimizerConfig;
use crate::policy::{step_count, BasisConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmConfig {
    /// Shoulder-to-fingertip relative link lengths of the human arm. The
    /// inverted arm reverses them; the equidistant arm keeps their count.
    pub human: Vec<f64>,
}

impl Default for ArmConfig {
    fn default() -> Self {
        ArmConfig {
            human: HUMAN_LINK_LENGTHS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    pub arm: ArmConfig,
    pub targets: TargetLayout,
    pub basis: BasisConfig,
    pub cost: CostWeights,
    pub optimizer: OptimizerConfig,
    pub campaign: CampaignConfig,
    pub analysis: AnalysisConfig,
    pub demo: DemoConfig,
}

fn positive(key: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive, got {value}")))
    }
}

fn non_negative(key: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be >= 0, got {value}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse {
            path: PathBuf::from("<string>"),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.arm.human.is_empty() {
            return Err(Error::config("arm.human", "needs at least one link"));
        }
        for l in &self.arm.human {
            positive("arm.human", *l)?;
        }

        if self.targets.points_per_arc == 0 {
            return Err(Error::config(
                "targets.points_per_arc",
                "must be at least 1",
            ));
        }
        for r in &self.targets.radii {
            positive("targets.radii", *r)?;
        }
        default_targets(&self.targets).map_err(|e| Error::config("targets", e.to_string()))?;

        if self.basis.count == 0 {
            return Err(Error::config("basis.count", "must be at least 1"));
        }
        positive("basis.width", self.basis.width)?;
        positive("basis.duration", self.basis.duration)?;
        positive("basis.dt", self.basis.dt)?;
        step_count(self.basis.duration, self.basis.dt)
            .map_err(|e| Error::config("basis.dt", e.to_string()))?;

        non_negative("cost.distance", self.cost.distance)?;
        non_negative("cost.comfort", self.cost.comfort)?;
        non_negative("cost.acceleration", self.cost.acceleration)?;

        self.optimizer.validate()?;
        if self.campaign.sessions_per_target == 0 {
            return Err(Error::config(
                "campaign.sessions_per_target",
                "must be at least 1",
            ));
        }
        self.analysis.validate()?;
        self.demo.validate()?;
        Ok(())
    }

    pub fn morphology(&self, kind: MorphologyKind) -> Result<Morphology> {
        Morphology::from_human_profile(kind, &self.arm.human)
    }

    pub fn target_set(&self) -> Result<TargetSet> {
        default_targets(&self.targets)
    }

    pub fn campaign_settings(&self) -> CampaignSettings {
        CampaignSettings {
            basis: self.basis,
            cost: self.cost,
            optimizer: self.optimizer,
            campaign: self.campaign,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_setup() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.optimizer.samples_per_update, 20);
        assert_eq!(c.optimizer.eliteness, 10.0);
        assert_eq!(c.optimizer.lambda_init, 0.05);
        assert_eq!(c.optimizer.lambda_min, 0.05);
        assert_eq!(c.optimizer.updates, 100);
        assert_eq!(c.basis.count, 5);
        assert_eq!(c.basis.width, 0.05);
        assert_eq!(c.basis.duration, 0.5);
        assert_eq!(c.campaign.sessions_per_target, 10);
        assert_eq!(c.target_set().unwrap().len(), 20);
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let c = RunConfig::from_toml_str(
            "jobs = 2\n[optimizer]\nupdates = 7\n[arm]\nhuman = [3.0, 2.0, 1.0]\n",
        )
        .unwrap();
        assert_eq!(c.jobs, 2);
        assert_eq!(c.optimizer.updates, 7);
        assert_eq!(c.optimizer.samples_per_update, 20);
        let arm = c.morphology(MorphologyKind::InvertedHuman).unwrap().arm;
        assert_eq!(arm.joint_count(), 3);
        assert!((arm.link_lengths()[0] - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_reported() {
        let err = RunConfig::from_toml_str("[optimizer]\nelitism = 3\n").unwrap_err();
        assert!(err.to_string().contains("elitism"), "{err}");
    }

    #[test]
    fn invalid_values_name_their_key() {
        let cases = [
            (
                "[optimizer]\nsamples_per_update = 1\n",
                "optimizer.samples_per_update",
            ),
            ("[basis]\ndt = 0.03\n", "basis.dt"),
            ("[basis]\nwidth = -1.0\n", "basis.width"),
            ("[arm]\nhuman = [0.5, -0.1]\n", "arm.human"),
            (
                "[campaign]\nsessions_per_target = 0\n",
                "campaign.sessions_per_target",
            ),
            (
                "[analysis]\nsamples_per_target = 0\n",
                "analysis.samples_per_target",
            ),
            ("[targets]\nradii = [0.3]\nanchor = [0.0, 0.3]\n", "targets"),
        ];
        for (text, key) in cases {
            let err = RunConfig::from_toml_str(text)
                .unwrap()
                .validate()
                .unwrap_err();
            assert!(err.to_string().contains(key), "{text}: {err}");
        }
    }

    #[test]
    fn shipped_example_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
        assert_eq!(RunConfig::load(&path).unwrap(), RunConfig::default());
    }

    #[test]
    fn serialized_config_reloads() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }
}
