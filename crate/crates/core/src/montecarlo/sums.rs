use std::cmp::Ordering;

use super::McError;
use crate::sum::CompensatedSum;

/// Sum of all entries except the `b` largest.
pub fn trimmed_sum(prefix: &[f64], b: usize) -> Result<f64, McError> {
    let mut scratch = Vec::new();
    trimmed_sum_with(prefix, b, &mut scratch)
}

/// [`trimmed_sum`] reusing `scratch` for the selection buffer.
///
/// Partitions a copy around the (n-b)-th smallest value instead of sorting;
/// the kept values are summed with compensation, so the result does not
/// depend on the order selection leaves them in.
pub fn trimmed_sum_with(prefix: &[f64], b: usize, scratch: &mut Vec<f64>) -> Result<f64, McError> {
    let n = prefix.len();
    if b > n {
        return Err(McError::TrimExceedsLength { b, n });
    }
    if b == 0 {
        return Ok(prefix.iter().copied().collect::<CompensatedSum>().value());
    }
    let keep = n - b;
    if keep == 0 {
        return Ok(0.0);
    }
    scratch.clear();
    scratch.extend_from_slice(prefix);
    scratch.select_nth_unstable_by(keep, f64::total_cmp);
    Ok(scratch[..keep]
        .iter()
        .copied()
        .collect::<CompensatedSum>()
        .value())
}

/// Sum of the entries <= t (atoms at t included).
pub fn truncated_sum(prefix: &[f64], t: f64) -> f64 {
    prefix
        .iter()
        .copied()
        .filter(|&x| x <= t)
        .collect::<CompensatedSum>()
        .value()
}

/// (#{x > t}, #{x >= t}).
pub fn exceedance_counts(prefix: &[f64], t: f64) -> (u64, u64) {
    let mut gt = 0;
    let mut ge = 0;
    for &x in prefix {
        match x.partial_cmp(&t) {
            Some(Ordering::Greater) => {
                gt += 1;
                ge += 1;
            }
            Some(Ordering::Equal) => ge += 1,
            _ => {}
        }
    }
    (gt, ge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimmed_examples() {
        assert_eq!(trimmed_sum(&[5.0, 1.0, 3.0], 1).unwrap(), 4.0);
        assert_eq!(trimmed_sum(&[5.0, 1.0, 3.0], 0).unwrap(), 9.0);
        assert_eq!(trimmed_sum(&[5.0, 1.0, 3.0], 3).unwrap(), 0.0);
        assert_eq!(trimmed_sum(&[2.0, 2.0, 2.0], 2).unwrap(), 2.0);
        assert_eq!(trimmed_sum(&[1.0, f64::INFINITY, 3.0], 1).unwrap(), 4.0);
        assert!(matches!(
            trimmed_sum(&[1.0], 2),
            Err(McError::TrimExceedsLength { b: 2, n: 1 })
        ));
    }

    #[test]
    fn truncated_and_counts() {
        assert_eq!(truncated_sum(&[5.0, 1.0, 3.0], 3.0), 4.0);
        assert_eq!(truncated_sum(&[5.0, 1.0, 3.0], 10.0), 9.0);
        assert_eq!(truncated_sum(&[2.0, 2.0, 5.0], 2.0), 4.0);
        assert_eq!(exceedance_counts(&[2.0, 2.0, 5.0], 2.0), (1, 3));
        assert_eq!(exceedance_counts(&[2.0, 2.0, 5.0], 6.0), (0, 0));
    }
}
