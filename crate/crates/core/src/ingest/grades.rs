use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PASS_MARK: f64 = 60.0;
/// min, max, median, Q1, Q3, mean, std.
pub const COURSE_STAT_COUNT: usize = 7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradeRecord {
    pub student_id: String,
    pub semester_index: u32,
    pub course_id: String,
    pub credit: f64,
    pub grade: f64,
}

/// Credit-weighted average grade of one student-semester.
pub fn compute_wag(records: &[GradeRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("grade records for WAG"));
    }
    if let Some(r) = records.iter().find(|r| !(r.credit > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "course {} has non-positive credit {}",
            r.course_id, r.credit
        )));
    }
    let credits: f64 = records.iter().map(|r| r.credit).sum();
    Ok(records.iter().map(|r| r.credit * r.grade).sum::<f64>() / credits)
}

pub fn count_failed(records: &[GradeRecord], pass_mark: f64) -> Result<usize> {
    if records.is_empty() {
        return Err(Error::Empty("grade records for failed count"));
    }
    Ok(records.iter().filter(|r| r.grade < pass_mark).count())
}

/// Quantile by linear interpolation between closest ranks on sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `[min, max, median, Q1, Q3, mean, std]` with population std.
pub fn course_stats(grades: &[f64]) -> Result<[f64; COURSE_STAT_COUNT]> {
    if grades.is_empty() {
        return Err(Error::Empty("course grades"));
    }
    let mut s = grades.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let var = s.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    Ok([
        s[0],
        s[s.len() - 1],
        quantile_sorted(&s, 0.5),
        quantile_sorted(&s, 0.25),
        quantile_sorted(&s, 0.75),
        mean,
        var.sqrt(),
    ])
}

/// Course features for the failure-count task: the failure rate over all
/// historical takers, then the seven statistics.
pub fn failure_features(grades: &[f64], pass_mark: f64) -> Result<Vec<f64>> {
    let stats = course_stats(grades)?;
    let rate = grades.iter().filter(|&&g| g < pass_mark).count() as f64 / grades.len() as f64;
    let mut v = Vec::with_capacity(COURSE_STAT_COUNT + 1);
    v.push(rate);
    v.extend_from_slice(&stats);
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    CreditWeighted,
    UniformMean,
}

/// Merges per-course feature rows into one row.
pub fn aggregate_courses(rows: &[Vec<f64>], credits: &[f64], mode: Aggregation) -> Result<Vec<f64>> {
    let Some(first) = rows.first() else {
        return Err(Error::Empty("course feature rows"));
    };
    let width = first.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != width) {
        return Err(Error::InvalidArgument(format!(
            "course feature rows differ in length: {width} vs {}",
            bad.len()
        )));
    }
    let weights: Vec<f64> = match mode {
        Aggregation::UniformMean => vec![1.0; rows.len()],
        Aggregation::CreditWeighted => {
            if credits.len() != rows.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} rows but {} credits",
                    rows.len(),
                    credits.len()
                )));
            }
            if credits.iter().any(|&c| !(c > 0.0)) {
                return Err(Error::InvalidArgument("credits must be positive".into()));
            }
            credits.to_vec()
        }
    };
    let total: f64 = weights.iter().sum();
    let mut out = vec![0.0; width];
    for (row, w) in rows.iter().zip(&weights) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
    out.iter_mut().for_each(|o| *o /= total);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(grade: f64, credit: f64) -> GradeRecord {
        GradeRecord {
            student_id: "s".into(),
            semester_index: 1,
            course_id: format!("c{grade}"),
            credit,
            grade,
        }
    }

    #[test]
    fn two_course_example() {
        let rs = [rec(80.0, 3.0), rec(50.0, 3.0)];
        assert_eq!(compute_wag(&rs).unwrap(), 65.0);
        assert_eq!(count_failed(&rs, PASS_MARK).unwrap(), 1);
    }

    #[test]
    fn wag_cases() {
        assert_eq!(compute_wag(&[rec(73.5, 2.0)]).unwrap(), 73.5);
        assert_eq!(compute_wag(&[rec(90.0, 1.0), rec(60.0, 3.0)]).unwrap(), 67.5);
        assert!(matches!(compute_wag(&[]), Err(Error::Empty(_))));
        assert!(compute_wag(&[rec(70.0, 0.0)]).is_err());
    }

    #[test]
    fn failed_counts() {
        assert_eq!(count_failed(&[rec(60.0, 1.0), rec(99.0, 2.0)], PASS_MARK).unwrap(), 0);
        assert_eq!(count_failed(&[rec(10.0, 1.0), rec(59.9, 2.0)], PASS_MARK).unwrap(), 2);
        assert!(count_failed(&[], PASS_MARK).is_err());
    }

    /// Independent oracle: quantile via explicit rank arithmetic on the
    /// sorted list (rank r = 1 + (n-1)p, interpolate between floor/ceil ranks).
    fn oracle_quantile(xs: &[f64], p: f64) -> f64 {
        let mut v = xs.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = 1.0 + (v.len() as f64 - 1.0) * p;
        let below = rank.trunc() as usize;
        let frac = rank - below as f64;
        if below >= v.len() {
            return v[v.len() - 1];
        }
        v[below - 1] * (1.0 - frac) + v[below] * frac
    }

    #[test]
    fn course_stats_cases() {
        assert_eq!(course_stats(&[70.0; 3]).unwrap(), [70.0, 70.0, 70.0, 70.0, 70.0, 70.0, 0.0]);
        let s = course_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(&s[..6], &[1.0, 5.0, 3.0, 2.0, 4.0, 3.0]);
        assert!((s[6] - 2f64.sqrt()).abs() < 1e-15);
        let s = course_stats(&[0.0, 100.0]).unwrap();
        assert_eq!((s[2], s[5], s[6]), (50.0, 50.0, 50.0));
        assert!(course_stats(&[]).is_err());
    }

    #[test]
    fn quartiles_match_rank_oracle() {
        let xs = [55.0, 91.0, 62.5, 78.0, 83.0, 40.0, 67.0, 99.0];
        let s = course_stats(&xs).unwrap();
        assert!((s[2] - oracle_quantile(&xs, 0.5)).abs() < 1e-12);
        assert!((s[3] - oracle_quantile(&xs, 0.25)).abs() < 1e-12);
        assert!((s[4] - oracle_quantile(&xs, 0.75)).abs() < 1e-12);
    }

    #[test]
    fn failure_features_lead_with_rate() {
        let f = failure_features(&[50.0, 70.0, 80.0, 59.0], PASS_MARK).unwrap();
        assert_eq!(f.len(), 8);
        assert_eq!(f[0], 0.5);
    }

    #[test]
    fn aggregation() {
        let one = vec![vec![3.0, 4.0]];
        assert_eq!(aggregate_courses(&one, &[2.0], Aggregation::CreditWeighted).unwrap(), vec![3.0, 4.0]);
        assert_eq!(aggregate_courses(&one, &[], Aggregation::UniformMean).unwrap(), vec![3.0, 4.0]);
        let two = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(
            aggregate_courses(&two, &[2.0, 2.0], Aggregation::CreditWeighted).unwrap(),
            vec![0.5, 0.5]
        );
        assert_eq!(
            aggregate_courses(&two, &[1.0, 3.0], Aggregation::CreditWeighted).unwrap(),
            vec![0.25, 0.75]
        );
        let ragged = vec![vec![1.0], vec![0.0, 1.0]];
        assert!(aggregate_courses(&ragged, &[1.0, 1.0], Aggregation::UniformMean).is_err());
    }

    proptest::proptest! {
        #[test]
        fn wag_is_bounded_by_grades(
            gs in proptest::collection::vec((0.0f64..100.0, 0.5f64..6.0), 1..12)
        ) {
            let rs: Vec<_> = gs.iter().map(|&(g, c)| rec(g, c)).collect();
            let w = compute_wag(&rs).unwrap();
            let lo = gs.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
            let hi = gs.iter().map(|g| g.0).fold(f64::NEG_INFINITY, f64::max);
            proptest::prop_assert!(w >= lo - 1e-9 && w <= hi + 1e-9);
        }
    }
}
