use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

/// Hourly library slots cover 07:00-23:00.
pub const LIBRARY_SLOTS: usize = 16;
pub const LIBRARY_FIRST_HOUR: u32 = 7;
/// Dormitory return slots cover 18:00-24:00.
pub const DORMITORY_SLOTS: usize = 6;
pub const DORMITORY_FIRST_HOUR: u32 = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FootprintKind {
    #[serde(alias = "library")]
    LibraryEntry,
    #[serde(alias = "dormitory")]
    DormitoryEntry,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FootprintRecord {
    pub student_id: String,
    pub timestamp: NaiveDateTime,
    pub kind: FootprintKind,
}

/// The observation window: day 1 is `start`, the window spans `days` days.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemesterWindow {
    pub start: NaiveDate,
    pub days: usize,
}

impl SemesterWindow {
    pub fn new(start: NaiveDate, days: usize) -> Self {
        Self { start, days }
    }

    /// 1-based day index, or `None` outside the window.
    pub fn day_index(&self, ts: NaiveDateTime) -> Option<usize> {
        let offset = (ts.date() - self.start).num_days();
        if offset < 0 || offset as usize >= self.days {
            None
        } else {
            Some(offset as usize + 1)
        }
    }
}

/// Per-student binned behaviour: one row of library counts and one row of
/// dormitory indicators per day.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyBehaviorSequence {
    pub library_days: Vec<[u32; LIBRARY_SLOTS]>,
    pub dormitory_days: Vec<[u8; DORMITORY_SLOTS]>,
}

impl DailyBehaviorSequence {
    pub fn empty(days: usize) -> Self {
        Self {
            library_days: vec![[0; LIBRARY_SLOTS]; days],
            dormitory_days: vec![[0; DORMITORY_SLOTS]; days],
        }
    }

    pub fn days(&self) -> usize {
        self.library_days.len()
    }

    /// Feature rows per behaviour kind, as `f64`.
    pub fn feature_rows(&self) -> [Vec<Vec<f64>>; 2] {
        [
            self.library_days
                .iter()
                .map(|r| r.iter().map(|&c| c as f64).collect())
                .collect(),
            self.dormitory_days
                .iter()
                .map(|r| r.iter().map(|&c| c as f64).collect())
                .collect(),
        ]
    }
}

/// Slot `i` counts entries with hour in `[7 + i, 8 + i)`; entries outside
/// 07:00-23:00 are dropped.
pub fn bin_library_day(timestamps: &[NaiveDateTime]) -> [u32; LIBRARY_SLOTS] {
    let mut row = [0; LIBRARY_SLOTS];
    for ts in timestamps {
        if let Some(slot) = library_slot(ts) {
            row[slot] += 1;
        }
    }
    row
}

pub fn library_slot(ts: &NaiveDateTime) -> Option<usize> {
    let h = ts.hour();
    (LIBRARY_FIRST_HOUR..LIBRARY_FIRST_HOUR + LIBRARY_SLOTS as u32)
        .contains(&h)
        .then(|| (h - LIBRARY_FIRST_HOUR) as usize)
}

/// Only the latest entry of the day counts; it sets slot `hour - 18` when it
/// falls in 18:00-24:00, otherwise the row stays zero.
pub fn bin_dormitory_day(timestamps: &[NaiveDateTime]) -> [u8; DORMITORY_SLOTS] {
    let mut row = [0; DORMITORY_SLOTS];
    if let Some(last) = timestamps.iter().max() {
        let h = last.hour();
        if h >= DORMITORY_FIRST_HOUR {
            row[(h - DORMITORY_FIRST_HOUR) as usize] = 1;
        }
    }
    row
}

/// Tallies from [`bin_footprints`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningStats {
    pub outside_window: usize,
    pub outside_hours: usize,
}

/// Bins one student's records into a behaviour sequence over `window`.
pub fn bin_footprints(
    records: &[&FootprintRecord],
    window: &SemesterWindow,
) -> (DailyBehaviorSequence, BinningStats) {
    let mut lib: Vec<Vec<NaiveDateTime>> = vec![Vec::new(); window.days];
    let mut dorm: Vec<Vec<NaiveDateTime>> = vec![Vec::new(); window.days];
    let mut stats = BinningStats::default();
    for r in records {
        let Some(day) = window.day_index(r.timestamp) else {
            stats.outside_window += 1;
            continue;
        };
        match r.kind {
            FootprintKind::LibraryEntry => {
                if library_slot(&r.timestamp).is_none() {
                    stats.outside_hours += 1;
                }
                lib[day - 1].push(r.timestamp);
            }
            FootprintKind::DormitoryEntry => dorm[day - 1].push(r.timestamp),
        }
    }
    let seq = DailyBehaviorSequence {
        library_days: lib.iter().map(|d| bin_library_day(d)).collect(),
        dormitory_days: dorm.iter().map(|d| bin_dormitory_day(d)).collect(),
    };
    (seq, stats)
}
