use crate::{Error, Result};

/// Mean squared error per task over a batch. `predictions[i][n]` is sample
/// `i`, task `n`.
pub fn task_losses(predictions: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<Vec<f64>> {
    if predictions.is_empty() {
        return Err(Error::Empty("loss batch"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let tasks = predictions[0].len();
    let mut sums = vec![0.0; tasks];
    for (p, y) in predictions.iter().zip(labels) {
        if p.len() != tasks || y.len() != tasks {
            return Err(Error::InvalidArgument("ragged prediction or label rows".into()));
        }
        for n in 0..tasks {
            sums[n] += (y[n] - p[n]).powi(2);
        }
    }
    Ok(sums.into_iter().map(|s| s / predictions.len() as f64).collect())
}

/// `Σ λ_n L_n`.
pub fn total_loss(losses: &[f64], weights: &[f64]) -> Result<f64> {
    if losses.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} losses but {} balance weights",
            losses.len(),
            weights.len()
        )));
    }
    Ok(losses.iter().zip(weights).map(|(l, w)| l * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let y = vec![vec![0.3, -0.2], vec![1.0, 0.0]];
        assert_eq!(task_losses(&y, &y).unwrap(), vec![0.0, 0.0]);
        assert_eq!(task_losses(&[vec![0.0]], &[vec![1.0]]).unwrap(), vec![1.0]);
        let l = task_losses(&[vec![0.2], vec![-0.4]], &[vec![0.5], vec![0.0]]).unwrap();
        assert!((l[0] - 0.125).abs() < 1e-15);
        assert!(task_losses(&[], &[]).is_err());
    }

    #[test]
    fn weighted_totals() {
        assert_eq!(total_loss(&[0.1, 0.2, 0.3], &[1.0, 1.0, 1.0]).unwrap(), 0.1 + 0.2 + 0.3);
        assert_eq!(total_loss(&[0.1, 0.2, 0.3], &[1.0, 0.0, 0.0]).unwrap(), 0.1);
        assert!((total_loss(&[0.1, 0.2, 0.3], &[2.0, 1.0, 1.0]).unwrap() - 0.7).abs() < 1e-15);
        assert!(total_loss(&[0.1], &[1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn total_is_linear_in_each_loss(
            l in prop::collection::vec(0.0f64..10.0, 3),
            w in prop::collection::vec(0.0f64..5.0, 3),
            k in 0usize..3,
            delta in -5.0f64..5.0,
        ) {
            let base = total_loss(&l, &w).unwrap();
            let mut shifted = l.clone();
            shifted[k] += delta;
            let moved = total_loss(&shifted, &w).unwrap();
            prop_assert!((moved - base - w[k] * delta).abs() < 1e-9);
        }
    }
}
