use crate::error::{invalid, Result};

/// Empirical `W¹` between two equally sized one-dimensional samples.
pub fn w1_sorted_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return invalid(format!(
            "samples must have equal nonzero length, got {} and {}",
            a.len(),
            b.len()
        ));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(w1_sorted_1d(&[1.0, 3.0], &[3.0, 1.0]).unwrap(), 0.0);
        assert_eq!(w1_sorted_1d(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(w1_sorted_1d(&[1.0, 0.0], &[2.0, 5.0]).unwrap(), 3.0);
        assert!(w1_sorted_1d(&[0.0], &[0.0, 1.0]).is_err());
        assert!(w1_sorted_1d(&[], &[]).is_err());
    }

    #[test]
    fn sorted_matching_is_optimal() {
        // brute force over all matchings of three points
        let a = [0.3f64, -1.0, 2.2];
        let b = [1.5, 0.1, -0.4];
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let best = perms
            .iter()
            .map(|p| (0..3).map(|i| (a[i] - b[p[i]]).abs()).sum::<f64>() / 3.0)
            .fold(f64::INFINITY, f64::min);
        assert!((w1_sorted_1d(&a, &b).unwrap() - best).abs() < 1e-15);
    }
}
