//! Small numerical building blocks shared by the fitting routines.

pub mod least_squares;
pub mod nelder_mead;

pub use least_squares::{levenberg_marquardt, LsqFit, LsqOptions};
pub use nelder_mead::{minimize, Minimum, NelderMeadOptions};

/// Pairwise (cascade) summation.
///
/// The top-level split is always at `len / 2`, so a sequence whose second
/// half is the exact negation of the first sums to exactly zero.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    cascade(&values[..mid]) + cascade(&values[mid..])
}

fn cascade(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    cascade(&values[..mid]) + cascade(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    (pairwise_sum(&sq) / (values.len() - 1) as f64).sqrt()
}

/// Wrap an angle into (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antisymmetric_halves_cancel_exactly() {
        for a in [0.1, 1.0 / 3.0, 0.0123456789, 7.77e-3] {
            let mut v = vec![a; 63];
            v.extend(std::iter::repeat(-a).take(63));
            assert_eq!(pairwise_sum(&v), 0.0);
        }
    }

    #[test]
    fn wrap_phase_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
