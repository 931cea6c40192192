//! Regression metrics shared by every model comparison.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::CoreError;

/// Mean squared error, (1/n) * sum((a - p)^2).
pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64, CoreError> {
    if actual.len() != predicted.len() {
        return Err(CoreError::LengthMismatch { left: actual.len(), right: predicted.len() });
    }
    if actual.is_empty() {
        return Err(CoreError::EmptyFrame);
    }
    let sum: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(sum / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, CoreError> {
    Ok(mse(actual, predicted)?.sqrt())
}

/// Coefficient of determination, 1 - SS_res / SS_tot. Negative whenever the
/// predictions do worse than the mean of the actuals.
pub fn r_square(actual: &[f64], predicted: &[f64]) -> Result<f64, CoreError> {
    if actual.len() != predicted.len() {
        return Err(CoreError::LengthMismatch { left: actual.len(), right: predicted.len() });
    }
    if actual.len() < 2 {
        return Err(CoreError::InvalidConfig(alloc::string::String::from(
            "R² needs at least two observations",
        )));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(CoreError::ZeroVariance);
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn mse_basics() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[2.0, 0.0]).unwrap(), 2.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn mse_is_pair_permutation_invariant() {
        let a = [1.0, 5.0, -2.0, 0.5];
        let p = [0.0, 4.0, -1.0, 2.5];
        let perm = [2usize, 0, 3, 1];
        let ap: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
        let pp: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        assert_eq!(mse(&a, &p).unwrap(), mse(&ap, &pp).unwrap());
    }

    #[test]
    fn r_square_perfect_mean_and_negative() {
        assert_eq!(r_square(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        // predicting the mean scores exactly zero
        assert_eq!(r_square(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        // hand computation: 1 - 34/2 = -16
        assert_eq!(r_square(&[0.0, 2.0], &[5.0, 5.0]).unwrap(), -16.0);
    }

    #[test]
    fn r_square_undefined_on_constant_actuals() {
        assert!(matches!(r_square(&[2.0, 2.0], &[1.0, 3.0]), Err(CoreError::ZeroVariance)));
    }

    #[test]
    fn rmse_squares_back_to_mse() {
        let a = [1.0, 4.0, 2.0];
        let p = [2.0, 2.0, 2.5];
        let m = mse(&a, &p).unwrap();
        let r = rmse(&a, &p).unwrap();
        assert!((r * r - m).abs() < 1e-12);
    }
}
