use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Marker slots must stay clear of the evening slots.
pub const MAX_INFORMATIVE_GROUPS: usize = 11;

/// Parameters of a synthetic cohort. Every field has a default so config
/// files may name only what they change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub students: usize,
    pub days: usize,
    /// Inclusive range of past semesters per student.
    pub history_min: usize,
    pub history_max: usize,
    /// One-hot block sizes; the first attribute is the department.
    pub vocabulary_sizes: Vec<usize>,
    /// Per department, the factor mapping activity onto diligence.
    pub department_coefficients: Vec<f64>,
    pub diligence_noise: f64,
    /// Days whose evening library visits and dormitory return times reflect
    /// the student's activity level. Other days are activity-independent.
    pub informative_days: usize,
    /// Informative days are dealt round-robin into this many groups, each
    /// flagged by its own early-morning check-in slot. A student responds
    /// only on the days of group `department % groups`.
    pub informative_groups: usize,
    pub behavior_noise: f64,
    /// WAG points per unit of diligence.
    pub diligence_scale: f64,
    /// Noise on `[wag, books, fails]`.
    pub task_noise: [f64; 3],
    /// Correlation between current and past-semester diligence.
    pub history_persistence: f64,
    pub courses: usize,
    pub courses_per_semester: usize,
    /// Historical takers sampled per course for the course statistics.
    pub course_takers: usize,
    pub split_fractions: [f64; 3],
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            students: 1000,
            days: 63,
            history_min: 1,
            history_max: 5,
            vocabulary_sizes: vec![6, 2, 4, 5, 5, 4],
            department_coefficients: vec![1.2, 1.0, 0.8, 1.2, 1.0, 0.8],
            diligence_noise: 0.3,
            informative_days: 12,
            informative_groups: 2,
            behavior_noise: 0.5,
            diligence_scale: 12.0,
            task_noise: [3.0, 1.0, 0.5],
            history_persistence: 0.5,
            courses: 40,
            courses_per_semester: 5,
            course_takers: 60,
            split_fractions: [0.7, 0.1, 0.2],
            seed: 7,
        }
    }
}

impl SynthConfig {
    /// Zero for every noise scale.
    pub fn noiseless(self) -> Self {
        Self {
            diligence_noise: 0.0,
            behavior_noise: 0.0,
            task_noise: [0.0; 3],
            ..self
        }
    }

    pub fn profile_dim(&self) -> usize {
        self.vocabulary_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.students == 0 || self.days == 0 {
            return bad("students and days must be positive");
        }
        if self.history_min > self.history_max {
            return bad("history_min exceeds history_max");
        }
        if self.vocabulary_sizes.is_empty() || self.vocabulary_sizes.contains(&0) {
            return bad("vocabulary sizes must be positive");
        }
        if self.department_coefficients.len() != self.vocabulary_sizes[0] {
            return bad("one department coefficient per department value is required");
        }
        if self.informative_days > self.days {
            return bad("informative_days exceeds days");
        }
        if self.informative_groups == 0 || self.informative_groups > MAX_INFORMATIVE_GROUPS {
            return bad("informative_groups must lie in 1..=11");
        }
        let noise = [self.diligence_noise, self.behavior_noise, self.task_noise[0], self.task_noise[1], self.task_noise[2]];
        if noise.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("noise scales must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.history_persistence) {
            return bad("history_persistence must lie in [0, 1]");
        }
        if self.courses == 0 || self.courses_per_semester == 0 || self.courses_per_semester > self.courses || self.course_takers == 0 {
            return bad("course pool sizes must be positive and cover one semester");
        }
        if self.split_fractions[0] <= 0.0 {
            return bad("the training split must be non-empty");
        }
        Ok(())
    }
}
