//! Raw campus records to scaled per-student model inputs.
//!
//! Library entries are binned into 16 hourly slots (07:00-23:00) per day and
//! dormitory returns into a one-hot over 6 evening slots (18:00-24:00). Grade
//! records yield per-semester WAG and failed-course histories, borrow records
//! the borrowed-book history, and course-level grade statistics the course
//! features. All numeric inputs are min-max scaled to `[0, 1]` and labels to
//! `[-1, 1]` with scalers fitted on the training split only.

pub mod binning;
pub mod dataset;
pub mod grades;
pub mod records;
pub mod scaler;

pub use binning::{
    bin_dormitory_day, bin_footprints, bin_library_day, BinningStats, DailyBehaviorSequence, FootprintKind,
    FootprintRecord, SemesterWindow, DORMITORY_SLOTS, LIBRARY_SLOTS,
};
pub use dataset::{assign_splits, Dataset, DatasetScalers, RawStudent, Split, TaskSample, TASK_NAMES};
pub use grades::{
    aggregate_courses, compute_wag, count_failed, course_stats, failure_features, Aggregation, GradeRecord,
    COURSE_STAT_COUNT, PASS_MARK,
};
pub use records::{
    build_students, read_borrows, read_footprints, read_grades, read_profiles, BorrowRecord, CampusRecords,
    IngestConfig, IngestReport, ProfileVocabulary, StudentProfile,
};
pub use scaler::{ScaleKind, Scaler};
