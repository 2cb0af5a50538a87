//! Canonical data model for participants, slice grids, and time-aligned series.
//!
//! Every analysis stage consumes these types: an interaction session is cut
//! into fixed-width slices (10 s by default), and each behavioral channel
//! becomes one value per slice per participant. Timestamps are integer
//! milliseconds throughout; slice membership uses half-open intervals
//! `[origin + k·width, origin + (k+1)·width)` so a boundary frame belongs to
//! exactly one slice.
//!
//! Slices with no underlying observations carry an explicit missing marker
//! (`None`), not zero: zero is a meaningful value for binary channels, so the
//! distinction matters downstream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque participant identifier, unique within a corpus.
pub type ParticipantId = String;

/// Opaque group identifier.
pub type GroupId = String;

/// Default slice width: 10 seconds.
pub const DEFAULT_SLICE_WIDTH_MS: i64 = 10_000;

#[derive(Debug, Error)]
pub enum TimelineError {
    #[error("slice width must be positive, got {0} ms")]
    InvalidSliceWidth(i64),
    #[error("series has {len} values but grid has {expected} slices")]
    LengthMismatch { len: usize, expected: usize },
    #[error("slice {index} of {channel} holds {value}, which is {reason}")]
    InvalidValue {
        channel: String,
        index: usize,
        value: f64,
        reason: &'static str,
    },
    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),
    #[error("need at least 2 slices to derive transitions, got {0}")]
    TooShort(usize),
    #[error("curiosity rating {0} outside {{0, 1, 2}}")]
    InvalidRating(u8),
    #[error("unknown behavior label '{0}'")]
    UnknownBehavior(String),
}

/// A study participant and the group they belong to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Participant {
    pub id: ParticipantId,
    pub group_id: GroupId,
}

/// Fixed-width slice grid anchored at an origin timestamp.
///
/// Slice `k` covers `[origin + k·width, origin + (k+1)·width)` in integer
/// milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceGrid {
    origin_ms: i64,
    slice_width_ms: i64,
    n_slices: usize,
}

impl SliceGrid {
    pub fn new(origin_ms: i64, slice_width_ms: i64, n_slices: usize) -> Result<Self, TimelineError> {
        if slice_width_ms <= 0 {
            return Err(TimelineError::InvalidSliceWidth(slice_width_ms));
        }
        Ok(Self {
            origin_ms,
            slice_width_ms,
            n_slices,
        })
    }

    /// Smallest grid starting at `origin_ms` that covers `end_ms` (exclusive).
    pub fn covering(origin_ms: i64, slice_width_ms: i64, end_ms: i64) -> Result<Self, TimelineError> {
        if slice_width_ms <= 0 {
            return Err(TimelineError::InvalidSliceWidth(slice_width_ms));
        }
        let span = (end_ms - origin_ms).max(0);
        let n = (span + slice_width_ms - 1) / slice_width_ms;
        Self::new(origin_ms, slice_width_ms, n as usize)
    }

    pub fn origin_ms(&self) -> i64 {
        self.origin_ms
    }

    pub fn slice_width_ms(&self) -> i64 {
        self.slice_width_ms
    }

    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    /// Exclusive end of the last slice.
    pub fn end_ms(&self) -> i64 {
        self.origin_ms + self.slice_width_ms * self.n_slices as i64
    }

    /// Slice containing `t_ms`, or `None` if it falls outside the grid.
    pub fn slice_index(&self, t_ms: i64) -> Option<usize> {
        if t_ms < self.origin_ms || t_ms >= self.end_ms() {
            return None;
        }
        Some(((t_ms - self.origin_ms) / self.slice_width_ms) as usize)
    }

    pub fn slice_start_ms(&self, index: usize) -> i64 {
        self.origin_ms + self.slice_width_ms * index as i64
    }

    /// Copy of this grid with a different slice count.
    pub fn with_n_slices(&self, n_slices: usize) -> Self {
        Self { n_slices, ..*self }
    }
}

/// The 11 verbal behavior constructs, with compound rows split by polarity
/// or target so each variant is one time-series channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verbal {
    Uncertainty,
    Argument,
    Justification,
    Suggestion,
    Agreement,
    QuestionOnTask,
    QuestionSocial,
    IdeaVerbalization,
    SharingFindings,
    HypothesisGeneration,
    TaskSentimentPositive,
    TaskSentimentNegative,
    EvaluationPositive,
    EvaluationNegative,
}

impl Verbal {
    pub const ALL: [Verbal; 14] = [
        Verbal::Uncertainty,
        Verbal::Argument,
        Verbal::Justification,
        Verbal::Suggestion,
        Verbal::Agreement,
        Verbal::QuestionOnTask,
        Verbal::QuestionSocial,
        Verbal::IdeaVerbalization,
        Verbal::SharingFindings,
        Verbal::HypothesisGeneration,
        Verbal::TaskSentimentPositive,
        Verbal::TaskSentimentNegative,
        Verbal::EvaluationPositive,
        Verbal::EvaluationNegative,
    ];
}

/// Rule-inferred affective state categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Affect {
    Joy,
    Delight,
    Surprise,
    Confusion,
    Flow,
}

impl Affect {
    pub const ALL: [Affect; 5] = [
        Affect::Joy,
        Affect::Delight,
        Affect::Surprise,
        Affect::Confusion,
        Affect::Flow,
    ];
}

/// Head rotation axes. Pitch variance reads as nodding, yaw as turning,
/// roll as lateral inclination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeadChannel {
    Pitch,
    Yaw,
    Roll,
}

impl HeadChannel {
    pub const ALL: [HeadChannel; 3] = [HeadChannel::Pitch, HeadChannel::Yaw, HeadChannel::Roll];
}

/// Weighted turn-taking network degree metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TurnMetricKind {
    Indegree,
    Outdegree,
}

/// Enumerated behavioral channel: what a [`BehaviorSeries`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Behavior {
    Verbal(Verbal),
    Affect(Affect),
    HeadVariance(HeadChannel),
    TurnTaking(TurnMetricKind),
    /// Binary channel derived from consecutive curiosity ratings: 1 when the
    /// rating increased or was maintained at a positive level.
    CuriosityTransition,
}

impl Behavior {
    /// Binary channels take values in {0, 1}; the rest are non-negative reals.
    pub fn is_binary(&self) -> bool {
        matches!(
            self,
            Behavior::Verbal(_) | Behavior::Affect(_) | Behavior::CuriosityTransition
        )
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            Behavior::Verbal(v) => match v {
                Verbal::Uncertainty => "uncertainty",
                Verbal::Argument => "argument",
                Verbal::Justification => "justification",
                Verbal::Suggestion => "suggestion",
                Verbal::Agreement => "agreement",
                Verbal::QuestionOnTask => "question_on_task",
                Verbal::QuestionSocial => "question_social",
                Verbal::IdeaVerbalization => "idea_verbalization",
                Verbal::SharingFindings => "sharing_findings",
                Verbal::HypothesisGeneration => "hypothesis_generation",
                Verbal::TaskSentimentPositive => "task_sentiment_positive",
                Verbal::TaskSentimentNegative => "task_sentiment_negative",
                Verbal::EvaluationPositive => "evaluation_positive",
                Verbal::EvaluationNegative => "evaluation_negative",
            },
            Behavior::Affect(a) => match a {
                Affect::Joy => "affect_joy",
                Affect::Delight => "affect_delight",
                Affect::Surprise => "affect_surprise",
                Affect::Confusion => "affect_confusion",
                Affect::Flow => "affect_flow",
            },
            Behavior::HeadVariance(c) => match c {
                HeadChannel::Pitch => "head_nod",
                HeadChannel::Yaw => "head_turn",
                HeadChannel::Roll => "head_inclination",
            },
            Behavior::TurnTaking(t) => match t {
                TurnMetricKind::Indegree => "turn_indegree",
                TurnMetricKind::Outdegree => "turn_outdegree",
            },
            Behavior::CuriosityTransition => "curiosity_transition",
        };
        f.write_str(label)
    }
}

impl FromStr for Behavior {
    type Err = TimelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b = match s {
            "uncertainty" => Behavior::Verbal(Verbal::Uncertainty),
            "argument" => Behavior::Verbal(Verbal::Argument),
            "justification" => Behavior::Verbal(Verbal::Justification),
            "suggestion" => Behavior::Verbal(Verbal::Suggestion),
            "agreement" => Behavior::Verbal(Verbal::Agreement),
            "question_on_task" => Behavior::Verbal(Verbal::QuestionOnTask),
            "question_social" => Behavior::Verbal(Verbal::QuestionSocial),
            "idea_verbalization" => Behavior::Verbal(Verbal::IdeaVerbalization),
            "sharing_findings" => Behavior::Verbal(Verbal::SharingFindings),
            "hypothesis_generation" => Behavior::Verbal(Verbal::HypothesisGeneration),
            "task_sentiment_positive" => Behavior::Verbal(Verbal::TaskSentimentPositive),
            "task_sentiment_negative" => Behavior::Verbal(Verbal::TaskSentimentNegative),
            "evaluation_positive" => Behavior::Verbal(Verbal::EvaluationPositive),
            "evaluation_negative" => Behavior::Verbal(Verbal::EvaluationNegative),
            "affect_joy" => Behavior::Affect(Affect::Joy),
            "affect_delight" => Behavior::Affect(Affect::Delight),
            "affect_surprise" => Behavior::Affect(Affect::Surprise),
            "affect_confusion" => Behavior::Affect(Affect::Confusion),
            "affect_flow" => Behavior::Affect(Affect::Flow),
            "head_nod" => Behavior::HeadVariance(HeadChannel::Pitch),
            "head_turn" => Behavior::HeadVariance(HeadChannel::Yaw),
            "head_inclination" => Behavior::HeadVariance(HeadChannel::Roll),
            "turn_indegree" => Behavior::TurnTaking(TurnMetricKind::Indegree),
            "turn_outdegree" => Behavior::TurnTaking(TurnMetricKind::Outdegree),
            "curiosity_transition" => Behavior::CuriosityTransition,
            other => return Err(TimelineError::UnknownBehavior(other.to_string())),
        };
        Ok(b)
    }
}

impl From<Behavior> for String {
    fn from(b: Behavior) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for Behavior {
    type Error = TimelineError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// One behavioral channel for one participant, one value per slice.
///
/// `None` marks a slice with no underlying observations. Immutable after
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorSeries {
    participant: ParticipantId,
    behavior: Behavior,
    values: Vec<Option<f64>>,
    grid: SliceGrid,
}

impl BehaviorSeries {
    pub fn new(
        participant: ParticipantId,
        behavior: Behavior,
        values: Vec<Option<f64>>,
        grid: SliceGrid,
    ) -> Result<Self, TimelineError> {
        if values.len() != grid.n_slices() {
            return Err(TimelineError::LengthMismatch {
                len: values.len(),
                expected: grid.n_slices(),
            });
        }
        for (index, v) in values.iter().enumerate() {
            let Some(v) = *v else { continue };
            let reason = if !v.is_finite() {
                Some("not finite")
            } else if behavior.is_binary() && v != 0.0 && v != 1.0 {
                Some("not in {0, 1} for a binary channel")
            } else if !behavior.is_binary() && v < 0.0 {
                Some("negative for a non-negative channel")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(TimelineError::InvalidValue {
                    channel: behavior.to_string(),
                    index,
                    value: v,
                    reason,
                });
            }
        }
        Ok(Self {
            participant,
            behavior,
            values,
            grid,
        })
    }

    pub fn participant(&self) -> &str {
        &self.participant
    }

    pub fn behavior(&self) -> Behavior {
        self.behavior
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn grid(&self) -> &SliceGrid {
        &self.grid
    }

    /// Values with missing slices read as 0.0.
    pub fn values_zero_filled(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(0.0)).collect()
    }

    /// Resample this series onto `target`.
    ///
    /// The grids must share an origin, and the target width must be an
    /// integer multiple of the source width. Each target slice aggregates the
    /// source slices it covers: mean for real channels, max for binary ones,
    /// ignoring missing source slices. A target slice covering only missing
    /// (or no) source slices stays missing. The target grid defines the
    /// analysis window: source slices past its end are ignored.
    pub fn align(&self, target: &SliceGrid) -> Result<BehaviorSeries, TimelineError> {
        if *target == self.grid {
            return Ok(self.clone());
        }
        if target.origin_ms() != self.grid.origin_ms() {
            return Err(TimelineError::IncompatibleGrid(format!(
                "origins differ: {} vs {}",
                self.grid.origin_ms(),
                target.origin_ms()
            )));
        }
        if target.slice_width_ms() % self.grid.slice_width_ms() != 0 {
            return Err(TimelineError::IncompatibleGrid(format!(
                "target width {} ms is not an integer multiple of source width {} ms",
                target.slice_width_ms(),
                self.grid.slice_width_ms()
            )));
        }
        let factor = (target.slice_width_ms() / self.grid.slice_width_ms()) as usize;
        let mut out = Vec::with_capacity(target.n_slices());
        for k in 0..target.n_slices() {
            let lo = k * factor;
            let hi = ((k + 1) * factor).min(self.values.len());
            let present: Vec<f64> = self
                .values
                .get(lo..hi)
                .unwrap_or(&[])
                .iter()
                .flatten()
                .copied()
                .collect();
            if present.is_empty() {
                out.push(None);
                continue;
            }
            let agg = if self.behavior.is_binary() {
                present.iter().copied().fold(0.0f64, f64::max)
            } else {
                present.iter().sum::<f64>() / present.len() as f64
            };
            out.push(Some(agg));
        }
        BehaviorSeries::new(self.participant.clone(), self.behavior, out, *target)
    }
}

/// Per-slice ground-truth curiosity ratings in {0, 1, 2} for one participant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CuriositySeries {
    participant: ParticipantId,
    ratings: Vec<u8>,
    grid: SliceGrid,
}

impl CuriositySeries {
    pub fn new(participant: ParticipantId, ratings: Vec<u8>, grid: SliceGrid) -> Result<Self, TimelineError> {
        if ratings.len() != grid.n_slices() {
            return Err(TimelineError::LengthMismatch {
                len: ratings.len(),
                expected: grid.n_slices(),
            });
        }
        if let Some(&bad) = ratings.iter().find(|r| **r > 2) {
            return Err(TimelineError::InvalidRating(bad));
        }
        Ok(Self {
            participant,
            ratings,
            grid,
        })
    }

    pub fn participant(&self) -> &str {
        &self.participant
    }

    pub fn ratings(&self) -> &[u8] {
        &self.ratings
    }

    pub fn grid(&self) -> &SliceGrid {
        &self.grid
    }

    /// Derive the binary increase-or-maintenance transition series.
    ///
    /// Element `t` is 1 iff `(rating[t], rating[t+1])` is an increase
    /// (0→1, 0→2, 1→2) or a maintenance (1→1, 2→2) transition. Note that
    /// 0→0 counts as neither: staying not-curious is not maintenance.
    /// The result has one fewer slice than the input, anchored at the same
    /// origin; element `t` sits on the slice whose rating opens the pair.
    pub fn to_transition_series(&self) -> Result<BehaviorSeries, TimelineError> {
        if self.ratings.len() < 2 {
            return Err(TimelineError::TooShort(self.ratings.len()));
        }
        let values = self
            .ratings
            .windows(2)
            .map(|w| {
                let rose = w[1] > w[0];
                let maintained = w[0] > 0 && w[1] == w[0];
                Some(if rose || maintained { 1.0 } else { 0.0 })
            })
            .collect();
        BehaviorSeries::new(
            self.participant.clone(),
            Behavior::CuriosityTransition,
            values,
            self.grid.with_n_slices(self.ratings.len() - 1),
        )
    }
}
