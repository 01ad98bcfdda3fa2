//! Run configuration shared by every pipeline stage.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::change::{change_scorer_registry, CandidateScope, ChangeScorer, DetectOptions};
use crate::error::{Error, Result};
use crate::localization::{localizer_registry, Localizer};
use crate::motion::MotionVocabParams;
use crate::vocabulary::KMeansParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MotionTermMode {
    #[default]
    Literal,
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MotionEvalMode {
    #[default]
    PerCandidate,
    NearestOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub map: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub tracks: Option<PathBuf>,
    pub models: Option<PathBuf>,
    pub output: Option<PathBuf>,

    /// Reference frames retrieved per query.
    pub r: usize,
    /// Appearance candidates per query feature.
    pub k: usize,
    /// Motion anomaly threshold, pixels.
    pub tm: f64,
    /// Ego-motion curvature threshold, degrees.
    pub tc: f64,
    /// Binary code length.
    pub b: usize,
    pub word_count: usize,
    pub stride: u32,
    /// Meters of ego-motion per motion feature.
    pub unit_length: f64,
    /// Ego-motion window length, frames.
    pub window: usize,
    /// Minimum timestamp gap between a query and usable map frames.
    pub exclusion: u64,

    pub vocab_seed: u64,
    pub projection_seed: u64,
    pub motion_seed: u64,

    /// Cap on descriptors used to learn the vocabulary (seeded subsample).
    pub vocab_sample: Option<usize>,
    pub kmeans_iterations: usize,
    pub motion_sample_size: usize,
    pub motion_iterations: usize,
    pub motion_words: usize,

    pub motion: bool,
    pub keyframes_only: bool,
    pub motion_term: MotionTermMode,
    pub motion_eval: MotionEvalMode,
    /// Explicit scorer name; overrides `motion`, `motion_term` and
    /// `motion_eval`.
    pub scorer: Option<String>,
    pub localizer: String,
    pub scope: CandidateScope,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            map: None,
            queries: None,
            tracks: None,
            models: None,
            output: None,
            r: 10,
            k: 10,
            tm: 10.0,
            tc: 5.0,
            b: 128,
            word_count: 4096,
            stride: 10,
            unit_length: 1.0,
            window: 20,
            exclusion: 400,
            vocab_seed: 0,
            projection_seed: 0,
            motion_seed: 0,
            vocab_sample: None,
            kmeans_iterations: 100,
            motion_sample_size: 10_000,
            motion_iterations: 100,
            motion_words: 1_000,
            motion: true,
            keyframes_only: false,
            motion_term: MotionTermMode::Literal,
            motion_eval: MotionEvalMode::PerCandidate,
            scorer: None,
            localizer: "exact".into(),
            scope: CandidateScope::Union,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::Configuration(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r", self.r as f64),
            ("k", self.k as f64),
            ("tm", self.tm),
            ("tc", self.tc),
            ("b", self.b as f64),
            ("word_count", self.word_count as f64),
            ("stride", self.stride as f64),
            ("unit_length", self.unit_length),
            ("window", self.window as f64),
            ("exclusion", self.exclusion as f64),
            ("kmeans_iterations", self.kmeans_iterations as f64),
            ("motion_sample_size", self.motion_sample_size as f64),
            ("motion_iterations", self.motion_iterations as f64),
            ("motion_words", self.motion_words as f64),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Validation(format!(
                "{name} must be positive, got {v}"
            )));
        }
        if !self.b.is_multiple_of(8) {
            return Err(Error::Validation(format!(
                "b must be a multiple of 8, got {}",
                self.b
            )));
        }
        if !self.window.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "window must be even, got {}",
                self.window
            )));
        }
        if self.vocab_sample == Some(0) {
            return Err(Error::Validation("vocab_sample must be positive".into()));
        }
        self.scorer_name()?;
        localizer_registry().get(&self.localizer)?;
        Ok(())
    }

    pub fn scorer_name(&self) -> Result<String> {
        if let Some(s) = &self.scorer {
            change_scorer_registry().get(s)?;
            return Ok(s.clone());
        }
        if !self.motion {
            return Ok("appearance".into());
        }
        match (self.motion_term, self.motion_eval) {
            (MotionTermMode::Literal, MotionEvalMode::PerCandidate) => Ok("motion".into()),
            (MotionTermMode::Separate, MotionEvalMode::PerCandidate) => {
                Ok("motion-separate".into())
            }
            (MotionTermMode::Literal, MotionEvalMode::NearestOnly) => {
                Ok("motion-nearest-only".into())
            }
            (MotionTermMode::Separate, MotionEvalMode::NearestOnly) => Err(Error::Configuration(
                "motion-term=separate cannot be combined with motion-eval=nearest-only".into(),
            )),
        }
    }

    pub fn scorer(&self) -> Result<Arc<dyn ChangeScorer>> {
        change_scorer_registry().get(&self.scorer_name()?)
    }

    pub fn localizer(&self) -> Result<Arc<dyn Localizer>> {
        localizer_registry().get(&self.localizer)
    }

    pub fn tc_radians(&self) -> f64 {
        self.tc.to_radians()
    }

    pub fn kmeans(&self) -> KMeansParams {
        KMeansParams {
            max_iterations: self.kmeans_iterations,
            ..KMeansParams::default()
        }
    }

    pub fn motion_params(&self) -> MotionVocabParams {
        MotionVocabParams {
            sample_size: self.motion_sample_size,
            iterations: self.motion_iterations,
            output_words: self.motion_words,
            seed: self.motion_seed,
        }
    }

    /// Detection options for one query.
    pub fn detect_options(&self, query_anomaly: bool) -> Result<DetectOptions> {
        Ok(DetectOptions {
            r: self.r,
            k: self.k,
            tm: self.tm,
            scope: self.scope,
            query_anomaly,
            scorer: self.scorer()?,
            localizer: self.localizer()?,
        })
    }
}
