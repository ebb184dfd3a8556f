use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::SynthConfig;
use crate::ingest::{
    aggregate_courses, assign_splits, course_stats, failure_features, Aggregation, Dataset, ProfileVocabulary,
    RawStudent, StudentProfile, DORMITORY_SLOTS, LIBRARY_SLOTS, PASS_MARK,
};
use crate::Result;

const ATTRIBUTE_NAMES: [&str; 6] = ["department", "gender", "year", "hometown", "admission", "track"];
/// Library slots covering 18:00-23:00.
const EVENING_SLOTS: std::ops::Range<usize> = 11..LIBRARY_SLOTS;
const ORDINARY_VISIT_PROB: f64 = 0.25;
const DORMITORY_RECORD_PROB: f64 = 0.8;
const BASE_GRADE: f64 = 75.0;
const BOOKS_AT_BASE: f64 = 4.0;
const WAG_POINTS_PER_BOOK: f64 = 3.0;
const FAIL_PIVOT: f64 = 80.0;
const WAG_POINTS_PER_FAIL: f64 = 4.0;
/// Spread of past-semester diligence around its persistent part.
const HISTORY_DRIFT: f64 = 0.6;

struct Course {
    mean: f64,
    credit: f64,
    stats: Vec<f64>,
    failure: Vec<f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn course_pool(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Course>> {
    (0..config.courses)
        .map(|_| {
            let mean = BASE_GRADE + 6.0 * normal(rng);
            let credit = rng.random_range(2..=4) as f64;
            let grades: Vec<f64> = (0..config.course_takers)
                .map(|_| (mean + 10.0 * normal(rng)).clamp(0.0, 100.0))
                .collect();
            Ok(Course {
                mean,
                credit,
                stats: course_stats(&grades)?.to_vec(),
                failure: failure_features(&grades, PASS_MARK)?,
            })
        })
        .collect()
}

/// Grades for one semester's courses, returning `(courses, WAG)`.
fn semester(
    config: &SynthConfig,
    pool: &[Course],
    diligence: f64,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let picked = index::sample(rng, pool.len(), config.courses_per_semester).into_vec();
    let (mut weighted, mut credits) = (0.0, 0.0);
    for &c in &picked {
        let g = (pool[c].mean + config.diligence_scale * diligence + noise * normal(rng)).clamp(0.0, 100.0);
        weighted += pool[c].credit * g;
        credits += pool[c].credit;
    }
    (picked, weighted / credits)
}

fn books_for(wag: f64, noise: f64, rng: &mut ChaCha8Rng) -> f64 {
    (BOOKS_AT_BASE + (wag - BASE_GRADE) / WAG_POINTS_PER_BOOK + noise * normal(rng))
        .round()
        .max(0.0)
}

fn fails_for(wag: f64, courses: usize, noise: f64, rng: &mut ChaCha8Rng) -> f64 {
    ((FAIL_PIVOT - wag) / WAG_POINTS_PER_FAIL + noise * normal(rng))
        .round()
        .clamp(0.0, courses as f64)
}

/// Library and dormitory rows. `group[d]` is the informative group of day
/// `d`, flagged by a check-in at that group's slot; the student's activity
/// shows only on days of group `responds_to`.
fn behaviours(
    config: &SynthConfig,
    group: &[Option<usize>],
    responds_to: usize,
    activity: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<Vec<f64>>> {
    let markers = config.informative_groups;
    let mut library = vec![vec![0.0; LIBRARY_SLOTS]; config.days];
    let mut dormitory = vec![vec![0.0; DORMITORY_SLOTS]; config.days];
    for d in 0..config.days {
        if let Some(g) = group[d] {
            library[d][g] = 1.0;
        }
        if group[d] == Some(responds_to) {
            let a = activity + config.behavior_noise * normal(rng);
            library[d][EVENING_SLOTS].fill((1.0 + a).round().max(0.0));
            let slot = (2.5 + 1.5 * a).round().clamp(0.0, (DORMITORY_SLOTS - 1) as f64) as usize;
            dormitory[d][slot] = 1.0;
        } else {
            for cell in &mut library[d][markers..] {
                if rng.random_bool(ORDINARY_VISIT_PROB) {
                    *cell = 1.0;
                }
            }
            if rng.random_bool(DORMITORY_RECORD_PROB) {
                dormitory[d][rng.random_range(0..DORMITORY_SLOTS)] = 1.0;
            }
        }
    }
    vec![library, dormitory]
}

fn vocabulary(config: &SynthConfig) -> ProfileVocabulary {
    ProfileVocabulary {
        attributes: config
            .vocabulary_sizes
            .iter()
            .enumerate()
            .map(|(k, &size)| {
                let name = ATTRIBUTE_NAMES.get(k).map_or_else(|| format!("attribute{k}"), |s| s.to_string());
                (name, (0..size).map(|v| format!("v{v:03}")).collect())
            })
            .collect(),
    }
}

/// Draws a cohort and assembles it into the same dataset format ingest
/// produces, with scalers fitted on the training split.
///
/// Per student: activity `z ~ N(0, 1)` drives evening library visits and
/// dormitory return times on the informative days of the student's
/// department group; diligence is
/// `coefficient[department] * z` plus noise; grades rise with diligence,
/// borrowed books rise with WAG and failed courses fall with it.
pub fn generate(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut group = vec![None; config.days];
    for (k, d) in index::sample(&mut rng, config.days, config.informative_days).into_iter().enumerate() {
        group[d] = Some(k % config.informative_groups);
    }
    let pool = course_pool(config, &mut rng)?;
    let vocab = vocabulary(config);
    let splits = assign_splits(config.students, config.split_fractions, rng.random())?;
    let drift = (1.0 - config.history_persistence.powi(2)).sqrt();
    let k = config.courses_per_semester;

    let mut students = Vec::with_capacity(config.students);
    for (i, split) in splits.into_iter().enumerate() {
        let values: Vec<usize> = config.vocabulary_sizes.iter().map(|&s| rng.random_range(0..s)).collect();
        let profile = StudentProfile {
            student_id: format!("syn{i:05}"),
            attributes: vocab
                .attributes
                .iter()
                .zip(&values)
                .map(|((name, vs), &v)| (name.clone(), vs[v].clone()))
                .collect(),
        };
        let activity = normal(&mut rng);
        let diligence = config.department_coefficients[values[0]] * activity + config.diligence_noise * normal(&mut rng);
        let responds_to = values[0] % config.informative_groups;
        let behaviors = behaviours(config, &group, responds_to, activity, &mut rng);

        let t = rng.random_range(config.history_min..=config.history_max);
        let mut histories: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(t)).collect();
        for _ in 0..t {
            let past = config.history_persistence * diligence + drift * HISTORY_DRIFT * normal(&mut rng);
            let (_, wag) = semester(config, &pool, past, config.task_noise[0], &mut rng);
            histories[0].push(wag);
            histories[1].push(books_for(wag, config.task_noise[1], &mut rng));
            histories[2].push(fails_for(wag, k, config.task_noise[2], &mut rng));
        }

        let (courses, wag) = semester(config, &pool, diligence, config.task_noise[0], &mut rng);
        let labels = vec![
            wag,
            books_for(wag, config.task_noise[1], &mut rng),
            fails_for(wag, k, config.task_noise[2], &mut rng),
        ];
        let stats: Vec<Vec<f64>> = courses.iter().map(|&c| pool[c].stats.clone()).collect();
        let failure: Vec<Vec<f64>> = courses.iter().map(|&c| pool[c].failure.clone()).collect();
        let credits: Vec<f64> = courses.iter().map(|&c| pool[c].credit).collect();
        let task_features = vec![
            aggregate_courses(&stats, &credits, Aggregation::CreditWeighted)?,
            Vec::new(),
            aggregate_courses(&failure, &credits, Aggregation::UniformMean)?,
        ];

        students.push(RawStudent {
            profile: vocab.encode(&profile),
            student_id: profile.student_id,
            split,
            behaviors,
            histories,
            task_features,
            labels: Some(labels),
        });
    }
    Dataset::assemble(students, Some(vocab), None)
}
