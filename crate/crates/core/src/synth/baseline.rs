use crate::{Error, Result};

/// Historical average: the mean of the past observations.
pub fn baseline_ha(history: &[f64]) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::Empty("history for the historical-average baseline"));
    }
    Ok(history.iter().sum::<f64>() / history.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(baseline_ha(&[60.0, 70.0, 80.0]).unwrap(), 70.0);
        assert_eq!(baseline_ha(&[42.5]).unwrap(), 42.5);
        assert_eq!(baseline_ha(&[3.0; 7]).unwrap(), 3.0);
        assert!(baseline_ha(&[]).is_err());
    }

    proptest! {
        #[test]
        fn equals_fold_mean(xs in prop::collection::vec(0.0f64..100.0, 1..20)) {
            let (sum, n) = xs.iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
            prop_assert_eq!(baseline_ha(&xs).unwrap(), sum / n as f64);
        }
    }
}
