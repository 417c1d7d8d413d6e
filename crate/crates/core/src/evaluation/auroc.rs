use crate::error::{Error, Result};

/// Probability that a random target scores above a random other instance,
/// ties counting half. Computed from midranks of the pooled scores.
pub fn auroc(target: &[f64], other: &[f64]) -> Result<f64> {
    if target.is_empty() || other.is_empty() {
        return Err(Error::invalid(format!(
            "AUROC needs scores on both sides, got {} target and {} other",
            target.len(),
            other.len()
        )));
    }
    if target.iter().chain(other).any(|s| s.is_nan()) {
        return Err(Error::invalid("AUROC of NaN scores"));
    }

    let mut pooled: Vec<(f64, bool)> = target
        .iter()
        .map(|&s| (s, true))
        .chain(other.iter().map(|&s| (s, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut target_rank_sum = 0.0;
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        // Ranks start..end (1-based start+1..=end) share their mean.
        let midrank = (start + end + 1) as f64 / 2.0;
        let hits = pooled[start..end].iter().filter(|p| p.1).count();
        target_rank_sum += midrank * hits as f64;
        start = end;
    }

    let (nt, no) = (target.len() as f64, other.len() as f64);
    let u = target_rank_sum - nt * (nt + 1.0) / 2.0;
    Ok((u / (nt * no)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair_count(target: &[f64], other: &[f64]) -> f64 {
        let mut wins = 0.0;
        for &t in target {
            for &o in other {
                if t > o {
                    wins += 1.0;
                } else if t == o {
                    wins += 0.5;
                }
            }
        }
        wins / (target.len() * other.len()) as f64
    }

    #[test]
    fn hand_examples() {
        assert_eq!(auroc(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.3; 4], &[0.3; 3]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.7, 0.3], &[0.5]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.1], &[0.9, 0.8]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(auroc(&[], &[0.5]).is_err());
        assert!(auroc(&[0.5], &[]).is_err());
        assert!(auroc(&[f64::NAN], &[0.5]).is_err());
    }

    proptest! {
        #[test]
        fn matches_pair_counting(
            t in prop::collection::vec(0u8..6, 1..30),
            o in prop::collection::vec(0u8..6, 1..30),
        ) {
            let t: Vec<f64> = t.into_iter().map(|v| v as f64 / 5.0).collect();
            let o: Vec<f64> = o.into_iter().map(|v| v as f64 / 5.0).collect();
            let a = auroc(&t, &o).unwrap();
            prop_assert!((a - pair_count(&t, &o)).abs() < 1e-12);
            prop_assert!((a + auroc(&o, &t).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn invariant_under_increasing_maps(
            t in prop::collection::vec(-5.0f64..5.0, 1..25),
            o in prop::collection::vec(-5.0f64..5.0, 1..25),
        ) {
            let f = |x: &f64| x.exp() * 3.0 + 1.0;
            let mapped_t: Vec<f64> = t.iter().map(f).collect();
            let mapped_o: Vec<f64> = o.iter().map(f).collect();
            prop_assert_eq!(auroc(&t, &o).unwrap(), auroc(&mapped_t, &mapped_o).unwrap());
        }
    }
}
