use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::binning::{bin_footprints, BinningStats, FootprintKind, FootprintRecord, SemesterWindow};
use super::dataset::{RawStudent, Split};
use super::grades::{
    aggregate_courses, compute_wag, count_failed, course_stats, failure_features, Aggregation,
    GradeRecord, COURSE_STAT_COUNT, PASS_MARK,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub student_id: String,
    /// Attribute name to categorical value, in file column order.
    pub attributes: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorrowRecord {
    pub student_id: String,
    pub semester_index: u32,
    pub count: u32,
}

/// Closed vocabulary per profile attribute, built from training students.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileVocabulary {
    pub attributes: Vec<(String, Vec<String>)>,
}

impl ProfileVocabulary {
    pub fn build(profiles: &[StudentProfile]) -> Self {
        let mut names: Vec<String> = Vec::new();
        let mut values: HashMap<String, BTreeSet<String>> = HashMap::new();
        for p in profiles {
            for (k, v) in &p.attributes {
                if !values.contains_key(k) {
                    names.push(k.clone());
                }
                values.entry(k.clone()).or_default().insert(v.clone());
            }
        }
        Self {
            attributes: names
                .into_iter()
                .map(|n| {
                    let vs = values.remove(&n).unwrap_or_default().into_iter().collect();
                    (n, vs)
                })
                .collect(),
        }
    }

    /// Sum of per-attribute vocabulary sizes.
    pub fn encoded_len(&self) -> usize {
        self.attributes.iter().map(|(_, v)| v.len()).sum()
    }

    /// Concatenated one-hot blocks. Unknown or missing values leave their
    /// block all zero.
    pub fn encode(&self, profile: &StudentProfile) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.encoded_len());
        for (name, vocab) in &self.attributes {
            let value = profile.attributes.iter().find(|(k, _)| k == name).map(|(_, v)| v);
            out.extend(vocab.iter().map(|v| if Some(v) == value { 1.0 } else { 0.0 }));
        }
        out
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

/// Iterates data rows with their 1-based file line numbers.
fn rows(path: &Path) -> Result<(Vec<String>, Vec<(u64, csv::StringRecord)>)> {
    let mut rdr = reader(path)?;
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, rec));
    }
    Ok((headers, out))
}

fn field<'a>(path: &Path, line: u64, rec: &'a csv::StringRecord, i: usize, name: &str) -> Result<&'a str> {
    rec.get(i)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| parse_err(path, line, format!("missing field `{name}`")))
}

fn number<T: std::str::FromStr>(path: &Path, line: u64, s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| parse_err(path, line, format!("invalid {name} `{s}`")))
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// `student_id,timestamp,kind`.
pub fn read_footprints(path: &Path) -> Result<Vec<FootprintRecord>> {
    let (_, rs) = rows(path)?;
    rs.into_iter()
        .map(|(line, r)| {
            let ts = field(path, line, &r, 1, "timestamp")?;
            let kind = match field(path, line, &r, 2, "kind")? {
                "library_entry" | "library" => FootprintKind::LibraryEntry,
                "dormitory_entry" | "dormitory" => FootprintKind::DormitoryEntry,
                other => return Err(parse_err(path, line, format!("unknown kind `{other}`"))),
            };
            Ok(FootprintRecord {
                student_id: field(path, line, &r, 0, "student_id")?.to_string(),
                timestamp: parse_timestamp(ts)
                    .ok_or_else(|| parse_err(path, line, format!("invalid timestamp `{ts}`")))?,
                kind,
            })
        })
        .collect()
}

/// `student_id` followed by one column per attribute; header names become
/// attribute names.
pub fn read_profiles(path: &Path) -> Result<Vec<StudentProfile>> {
    let (headers, rs) = rows(path)?;
    if headers.len() < 2 {
        return Err(parse_err(path, 1, "expected student_id and attribute columns"));
    }
    rs.into_iter()
        .map(|(line, r)| {
            if r.len() != headers.len() {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected {} fields, got {}", headers.len(), r.len()),
                ));
            }
            Ok(StudentProfile {
                student_id: field(path, line, &r, 0, "student_id")?.to_string(),
                attributes: headers[1..]
                    .iter()
                    .zip(r.iter().skip(1))
                    .map(|(h, v)| (h.clone(), v.to_string()))
                    .collect(),
            })
        })
        .collect()
}

/// `student_id,semester_index,course_id,credit,grade`.
pub fn read_grades(path: &Path) -> Result<Vec<GradeRecord>> {
    let (_, rs) = rows(path)?;
    let mut seen = BTreeSet::new();
    rs.into_iter()
        .map(|(line, r)| {
            let rec = GradeRecord {
                student_id: field(path, line, &r, 0, "student_id")?.to_string(),
                semester_index: number(path, line, field(path, line, &r, 1, "semester_index")?, "semester_index")?,
                course_id: field(path, line, &r, 2, "course_id")?.to_string(),
                credit: number(path, line, field(path, line, &r, 3, "credit")?, "credit")?,
                grade: number(path, line, field(path, line, &r, 4, "grade")?, "grade")?,
            };
            if !(rec.credit > 0.0) {
                return Err(parse_err(path, line, "credit must be positive"));
            }
            if !(0.0..=100.0).contains(&rec.grade) {
                return Err(parse_err(path, line, "grade must lie in [0, 100]"));
            }
            if rec.semester_index == 0 {
                return Err(parse_err(path, line, "semester_index starts at 1"));
            }
            let key = (rec.student_id.clone(), rec.semester_index, rec.course_id.clone());
            if !seen.insert(key) {
                return Err(parse_err(path, line, "duplicate (student, semester, course)"));
            }
            Ok(rec)
        })
        .collect()
}

/// `student_id,semester_index,count`.
pub fn read_borrows(path: &Path) -> Result<Vec<BorrowRecord>> {
    let (_, rs) = rows(path)?;
    rs.into_iter()
        .map(|(line, r)| {
            Ok(BorrowRecord {
                student_id: field(path, line, &r, 0, "student_id")?.to_string(),
                semester_index: number(path, line, field(path, line, &r, 1, "semester_index")?, "semester_index")?,
                count: number(path, line, field(path, line, &r, 2, "count")?, "count")?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Day 1 of the observation window.
    pub window_start: NaiveDate,
    pub days: usize,
    /// Semester whose labels are predicted; earlier semesters form the history.
    pub target_semester: u32,
    pub pass_mark: f64,
}

impl IngestConfig {
    pub fn new(window_start: NaiveDate, target_semester: u32) -> Self {
        Self {
            window_start,
            days: 63,
            target_semester,
            pass_mark: PASS_MARK,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub students: usize,
    pub labelled: usize,
    pub footprints: BinningStats,
    /// Footprints whose student has no profile row.
    pub unknown_students: usize,
}

pub struct CampusRecords {
    pub footprints: Vec<FootprintRecord>,
    pub profiles: Vec<StudentProfile>,
    pub grades: Vec<GradeRecord>,
    pub borrows: Vec<BorrowRecord>,
}

impl CampusRecords {
    pub fn read(footprints: &Path, profiles: &Path, grades: &Path, borrows: &Path) -> Result<Self> {
        Ok(Self {
            footprints: read_footprints(footprints)?,
            profiles: read_profiles(profiles)?,
            grades: read_grades(grades)?,
            borrows: read_borrows(borrows)?,
        })
    }
}

/// Turns raw records into unscaled per-student model inputs.
///
/// Course statistics use every grade recorded before the target semester.
/// A course without any earlier grades contributes nothing to the course
/// features; a student whose target courses all lack history gets zeros.
pub fn build_students(
    records: &CampusRecords,
    vocab: &ProfileVocabulary,
    config: &IngestConfig,
    split: Split,
) -> Result<(Vec<RawStudent>, IngestReport)> {
    let window = SemesterWindow::new(config.window_start, config.days);
    let target = config.target_semester;

    let mut course_history: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for g in records.grades.iter().filter(|g| g.semester_index < target) {
        course_history.entry(&g.course_id).or_default().push(g.grade);
    }
    let mut course_feats: HashMap<&str, (Vec<f64>, Vec<f64>)> = HashMap::new();
    for (c, gs) in &course_history {
        course_feats.insert(c, (course_stats(gs)?.to_vec(), failure_features(gs, config.pass_mark)?));
    }

    let mut grades_by: HashMap<&str, BTreeMap<u32, Vec<GradeRecord>>> = HashMap::new();
    for g in &records.grades {
        grades_by
            .entry(&g.student_id)
            .or_default()
            .entry(g.semester_index)
            .or_default()
            .push(g.clone());
    }
    let mut borrows_by: HashMap<(&str, u32), f64> = HashMap::new();
    for b in &records.borrows {
        *borrows_by.entry((&b.student_id, b.semester_index)).or_default() += b.count as f64;
    }
    let known: BTreeSet<&str> = records.profiles.iter().map(|p| p.student_id.as_str()).collect();
    let mut prints_by: HashMap<&str, Vec<&FootprintRecord>> = HashMap::new();
    let mut report = IngestReport::default();
    for f in &records.footprints {
        if known.contains(f.student_id.as_str()) {
            prints_by.entry(&f.student_id).or_default().push(f);
        } else {
            report.unknown_students += 1;
        }
    }

    let empty = BTreeMap::new();
    let mut students = Vec::with_capacity(records.profiles.len());
    for p in &records.profiles {
        let sid = p.student_id.as_str();
        let (seq, stats) = bin_footprints(prints_by.get(sid).map(Vec::as_slice).unwrap_or(&[]), &window);
        report.footprints.outside_window += stats.outside_window;
        report.footprints.outside_hours += stats.outside_hours;

        let sems = grades_by.get(sid).unwrap_or(&empty);
        let mut histories = vec![Vec::new(); 3];
        for (&sem, recs) in sems.range(..target) {
            histories[0].push(compute_wag(recs)?);
            histories[1].push(borrows_by.get(&(sid, sem)).copied().unwrap_or(0.0));
            histories[2].push(count_failed(recs, config.pass_mark)? as f64);
        }

        let current: &[GradeRecord] = sems.get(&target).map(Vec::as_slice).unwrap_or(&[]);
        let (mut rows1, mut rows3, mut credits) = (Vec::new(), Vec::new(), Vec::new());
        for g in current {
            if let Some((e1, e3)) = course_feats.get(g.course_id.as_str()) {
                rows1.push(e1.clone());
                rows3.push(e3.clone());
                credits.push(g.credit);
            }
        }
        let v1 = if rows1.is_empty() {
            vec![0.0; COURSE_STAT_COUNT]
        } else {
            aggregate_courses(&rows1, &credits, Aggregation::CreditWeighted)?
        };
        let v3 = if rows3.is_empty() {
            vec![0.0; COURSE_STAT_COUNT + 1]
        } else {
            aggregate_courses(&rows3, &credits, Aggregation::UniformMean)?
        };

        let labels = if current.is_empty() {
            None
        } else {
            report.labelled += 1;
            Some(vec![
                compute_wag(current)?,
                borrows_by.get(&(sid, target)).copied().unwrap_or(0.0),
                count_failed(current, config.pass_mark)? as f64,
            ])
        };

        let [lib, dorm] = seq.feature_rows();
        students.push(RawStudent {
            student_id: p.student_id.clone(),
            split,
            profile: vocab.encode(p),
            behaviors: vec![lib, dorm],
            histories,
            task_features: vec![v1, Vec::new(), v3],
            labels,
        });
    }
    report.students = students.len();
    Ok((students, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    fn tmpdir(tag: &str) -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!("dapamt-records-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn malformed_row_names_its_line() {
        let d = tmpdir("bad");
        let p = write(&d, "g.csv", "student_id,semester_index,course_id,credit,grade\ns1,1,c1,3,80\ns1,x,c2,3,50\n");
        match read_grades(&p) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("semester_index"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let p = write(&d, "f.csv", "student_id,timestamp,kind\ns1,2017-02-22 15:21:54,library\ns1,yesterday,library\n");
        assert!(matches!(read_footprints(&p), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn vocabulary_encoding_is_fixed_length() {
        let mk = |id: &str, g: &str, d: &str| StudentProfile {
            student_id: id.into(),
            attributes: vec![("gender".into(), g.into()), ("department".into(), d.into())],
        };
        let ps = vec![mk("a", "f", "cs"), mk("b", "m", "ee"), mk("c", "f", "me")];
        let v = ProfileVocabulary::build(&ps);
        assert_eq!(v.encoded_len(), 5);
        for p in &ps {
            let e = v.encode(p);
            assert_eq!(e.len(), 5);
            assert_eq!(e.iter().sum::<f64>(), 2.0);
        }
        let unknown = v.encode(&mk("z", "f", "physics"));
        assert_eq!(unknown, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn end_to_end_student_assembly() {
        let d = tmpdir("e2e");
        let f = write(
            &d,
            "footprints.csv",
            "student_id,timestamp,kind\nstu2,2017-02-22 15:21:54,library_entry\nstu2,2017-02-22 22:40:00,dormitory_entry\nstu2,2016-12-01 10:00:00,library_entry\n",
        );
        let p = write(&d, "profiles.csv", "student_id,gender,department\nstu1,f,cs\nstu2,m,ee\n");
        let g = write(
            &d,
            "grades.csv",
            "student_id,semester_index,course_id,credit,grade\nstu1,1,c1,3,80\nstu1,1,c2,3,50\nstu2,1,c1,3,70\nstu2,2,c1,2,90\nstu2,2,c2,4,55\n",
        );
        let b = write(&d, "borrows.csv", "student_id,semester_index,count\nstu2,1,4\nstu2,2,6\n");
        let recs = CampusRecords::read(&f, &p, &g, &b).unwrap();
        let vocab = ProfileVocabulary::build(&recs.profiles);
        let cfg = IngestConfig::new(NaiveDate::from_ymd_opt(2017, 2, 20).unwrap(), 2);
        let (students, report) = build_students(&recs, &vocab, &cfg, Split::Train).unwrap();
        assert_eq!(report.footprints.outside_window, 1);
        assert_eq!(report.labelled, 1);

        let s1 = &students[0];
        assert_eq!(s1.histories[0], vec![65.0]);
        assert_eq!(s1.histories[2], vec![1.0]);
        assert!(s1.labels.is_none());

        let s2 = &students[1];
        assert_eq!(s2.behaviors[0][2][8], 1.0);
        assert_eq!(s2.behaviors[1][2], vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(s2.histories, vec![vec![70.0], vec![4.0], vec![0.0]]);
        let labels = s2.labels.as_ref().unwrap();
        assert!((labels[0] - (90.0 * 2.0 + 55.0 * 4.0) / 6.0).abs() < 1e-12);
        assert_eq!(labels[1], 6.0);
        assert_eq!(labels[2], 1.0);
        // c1 history {80, 70}, c2 history {50}; credits 2 and 4
        let v1 = &s2.task_features[0];
        assert!((v1[5] - (75.0 * 2.0 + 50.0 * 4.0) / 6.0).abs() < 1e-12);
        let v3 = &s2.task_features[2];
        assert!((v3[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_footprints_give_zero_behaviour() {
        let d = tmpdir("empty");
        let f = write(&d, "footprints.csv", "student_id,timestamp,kind\n");
        let p = write(&d, "profiles.csv", "student_id,gender\ns1,f\n");
        let g = write(&d, "grades.csv", "student_id,semester_index,course_id,credit,grade\n");
        let b = write(&d, "borrows.csv", "student_id,semester_index,count\n");
        let recs = CampusRecords::read(&f, &p, &g, &b).unwrap();
        let vocab = ProfileVocabulary::build(&recs.profiles);
        let cfg = IngestConfig::new(NaiveDate::from_ymd_opt(2017, 2, 20).unwrap(), 1);
        let (students, _) = build_students(&recs, &vocab, &cfg, Split::Train).unwrap();
        assert!(students[0].behaviors.iter().flatten().flatten().all(|&v| v == 0.0));
        assert!(students[0].histories.iter().all(Vec::is_empty));
    }
}
