//! Evaluation quantities: MSE, per-component MSE, efficiency, achievement
//! ratio and learned-versus-oracle weight comparison.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Weights;

fn same_shape(estimate: &ArrayView2<f64>, truth: &ArrayView2<f64>) -> Result<()> {
    if estimate.dim() != truth.dim() {
        return Err(Error::shape(
            "mse",
            format!("{:?}", truth.dim()),
            format!("{:?}", estimate.dim()),
        ));
    }
    if estimate.is_empty() {
        return Err(Error::invalid("estimate", "empty array"));
    }
    Ok(())
}

/// Mean over all `T·d` entries of the squared error.
pub fn mse(estimate: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64> {
    same_shape(&estimate, &truth)?;
    let total: f64 = estimate
        .iter()
        .zip(truth.iter())
        .map(|(e, t)| (e - t).powi(2))
        .sum();
    Ok(total / estimate.len() as f64)
}

/// Per-dimension MSE, length `d`.
pub fn mse_by_component(estimate: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<Vec<f64>> {
    same_shape(&estimate, &truth)?;
    let n = estimate.nrows() as f64;
    Ok(estimate
        .columns()
        .into_iter()
        .zip(truth.columns())
        .map(|(e, t)| {
            e.iter()
                .zip(t.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / n
        })
        .collect())
}

/// `(baseline − achieved) / baseline`. Negative when the method is worse.
pub fn efficiency(mse_baseline: f64, mse_achieved: f64) -> Result<f64> {
    if !(mse_baseline > 0.0 && mse_baseline.is_finite()) {
        return Err(Error::invalid(
            "mse_baseline",
            format!("{mse_baseline} must be > 0"),
        ));
    }
    Ok((mse_baseline - mse_achieved) / mse_baseline)
}

pub fn achievement_ratio(eta_achieved: f64, eta_bound: f64) -> Result<f64> {
    if !(eta_bound > 0.0 && eta_bound.is_finite()) {
        return Err(Error::invalid(
            "eta_bound",
            format!("{eta_bound} must be > 0"),
        ));
    }
    Ok(eta_achieved / eta_bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightComparison {
    /// Signed `(learned − oracle) / oracle` per agent.
    pub relative_errors: Vec<f64>,
    /// Pearson correlation across agents; `None` when either vector is
    /// constant.
    pub correlation: Option<f64>,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::shape("pearson", a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::invalid(
            "weights",
            "correlation needs at least two agents",
        ));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Ok(None);
    }
    Ok(Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)))
}

pub fn compare_weight_slices(learned: &[f64], oracle: &[f64]) -> Result<WeightComparison> {
    let correlation = pearson(learned, oracle)?;
    let relative_errors = learned
        .iter()
        .zip(oracle)
        .map(|(l, o)| (l - o) / o)
        .collect();
    Ok(WeightComparison {
        relative_errors,
        correlation,
    })
}

pub fn weight_comparison(learned: &Weights, oracle: &Weights) -> Result<WeightComparison> {
    compare_weight_slices(learned.as_slice(), oracle.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    #[test]
    fn mse_examples() {
        let t = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(mse(t.view(), t.view()).unwrap(), 0.0);
        let off = &t + 0.3;
        assert_abs_diff_eq!(mse(off.view(), t.view()).unwrap(), 0.09, epsilon = 1e-15);
        assert!(mse(array![[1.0]].view(), t.view()).is_err());
    }

    #[test]
    fn component_mse_averages_to_scalar() {
        let truth = Array2::from_shape_fn((50, 3), |(t, j)| ((t * 7 + j * 3) % 11) as f64);
        let est = Array2::from_shape_fn((50, 3), |(t, j)| ((t * 5 + j) % 13) as f64 * 0.9);
        let comps = mse_by_component(est.view(), truth.view()).unwrap();
        let scalar = mse(est.view(), truth.view()).unwrap();
        assert_abs_diff_eq!(comps.iter().sum::<f64>() / 3.0, scalar, epsilon = 1e-12);

        let same = Array2::from_shape_fn((10, 3), |(t, _)| t as f64);
        let comps = mse_by_component(same.view(), Array2::zeros((10, 3)).view()).unwrap();
        assert!(comps.iter().all(|c| *c == comps[0]));
    }

    #[test]
    fn reference_component_table_is_consistent() {
        let comps: [f64; 3] = [0.0506, 0.0460, 0.0398];
        assert_abs_diff_eq!(comps.iter().sum::<f64>() / 3.0, 0.0455, epsilon = 0.0001);
    }

    #[test]
    fn efficiency_examples() {
        assert_abs_diff_eq!(efficiency(0.0455, 0.0316).unwrap(), 0.3055, epsilon = 1e-4);
        assert_eq!(efficiency(0.2, 0.2).unwrap(), 0.0);
        assert_eq!(efficiency(0.2, 0.0).unwrap(), 1.0);
        assert!(efficiency(0.0, 0.1).is_err());
    }

    #[test]
    fn achievement_examples() {
        assert_abs_diff_eq!(
            achievement_ratio(0.304, 0.619).unwrap(),
            0.491,
            epsilon = 1e-3
        );
        assert_eq!(achievement_ratio(0.4, 0.4).unwrap(), 1.0);
        assert_abs_diff_eq!(
            achievement_ratio(0.304, 0.630).unwrap(),
            0.483,
            epsilon = 1e-3
        );
        assert!(achievement_ratio(0.3, 0.0).is_err());
    }

    #[test]
    fn weight_comparison_examples() {
        let w = Weights::normalize(vec![0.1, 0.2, 0.7]).unwrap();
        let c = weight_comparison(&w, &w).unwrap();
        assert!(c.relative_errors.iter().all(|e| *e == 0.0));
        assert_abs_diff_eq!(c.correlation.unwrap(), 1.0, epsilon = 1e-12);

        let learned = [0.452, 0.282, 0.173, 0.093];
        let oracle = [0.416, 0.298, 0.183, 0.102];
        let c = compare_weight_slices(&learned, &oracle).unwrap();
        for (got, want) in c
            .relative_errors
            .iter()
            .zip([0.087, -0.054, -0.055, -0.088])
        {
            assert_abs_diff_eq!(*got, want, epsilon = 0.0015);
        }
        assert_abs_diff_eq!(c.correlation.unwrap(), 0.9944, epsilon = 1e-4);
        assert!(compare_weight_slices(&[1.0], &[1.0]).is_err());
        assert_eq!(
            compare_weight_slices(&[0.5, 0.5], &[0.2, 0.8])
                .unwrap()
                .correlation,
            None
        );
    }
}
