//! Closed-form ridge regression.
//!
//! Solves `(XᵀX + αI) c = Xᵀy` through a Cholesky factorization. There is no
//! separate intercept: a constant covariate column is penalized like any other.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest diagonal entry are treated as
/// zero.
const PIVOT_RTOL: f64 = 1e-13;

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    pub fn factor(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::shape(
                "cholesky",
                "square matrix",
                format!("{:?}", a.dim()),
            ));
        }
        let scale = a
            .diag()
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut pivot = a[[j, j]];
            for k in 0..j {
                pivot -= l[[j, k]] * l[[j, k]];
            }
            if pivot.is_nan() || pivot <= PIVOT_RTOL * scale {
                return Err(Error::Singular { column: j, pivot });
            }
            let root = pivot.sqrt();
            l[[j, j]] = root;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / root;
            }
        }
        Ok(Cholesky { l })
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.l.nrows();
        for i in 0..n {
            let row = self.l.row(i);
            let s = b[i] - row.iter().zip(&b[..i]).map(|(l, x)| l * x).sum::<f64>();
            b[i] = s / self.l[[i, i]];
        }
        for i in (0..n).rev() {
            let col = self.l.column(i);
            let s = b[i]
                - col
                    .iter()
                    .zip(&b[..])
                    .skip(i + 1)
                    .map(|(l, x)| l * x)
                    .sum::<f64>();
            b[i] = s / self.l[[i, i]];
        }
    }
}

fn check_finite(x: &ArrayView2<f64>, context: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "alpha",
            format!("{alpha} must be finite and >= 0"),
        ))
    }
}

/// Factors `XᵀX + αI` for a design matrix.
pub fn factor_design(x: ArrayView2<f64>, alpha: f64) -> Result<Cholesky> {
    check_alpha(alpha)?;
    if x.nrows() == 0 {
        return Err(Error::invalid("x", "design matrix has no rows"));
    }
    check_finite(&x, "ridge design")?;
    let mut gram = x.t().dot(&x);
    gram.diag_mut().mapv_inplace(|v| v + alpha);
    Cholesky::factor(&gram)
}

/// Ridge fit for several targets sharing one design. `y` is `N×m`; the result
/// is `p×m`, one coefficient column per target.
pub fn ridge_fit_multi(x: ArrayView2<f64>, y: ArrayView2<f64>, alpha: f64) -> Result<Array2<f64>> {
    if y.nrows() != x.nrows() {
        return Err(Error::shape("ridge_fit targets", x.nrows(), y.nrows()));
    }
    check_finite(&y, "ridge targets")?;
    let chol = factor_design(x, alpha)?;
    let mut rhs = x.t().dot(&y);
    for mut col in rhs.axis_iter_mut(Axis(1)) {
        let mut buf = col.to_vec();
        chol.solve_in_place(&mut buf);
        col.iter_mut().zip(buf).for_each(|(dst, v)| *dst = v);
    }
    Ok(rhs)
}

/// Minimizer of `‖y − Xc‖² + α‖c‖²`.
pub fn ridge_fit(x: ArrayView2<f64>, y: ArrayView1<f64>, alpha: f64) -> Result<Array1<f64>> {
    if y.len() != x.nrows() {
        return Err(Error::shape("ridge_fit targets", x.nrows(), y.len()));
    }
    let y2 = y.insert_axis(Axis(1));
    Ok(ridge_fit_multi(x, y2, alpha)?.column(0).to_owned())
}

/// `X · coef`.
pub fn ridge_predict(coef: ArrayView1<f64>, x: ArrayView2<f64>) -> Result<Array1<f64>> {
    if coef.len() != x.ncols() {
        return Err(Error::shape(
            "ridge_predict coefficients",
            x.ncols(),
            coef.len(),
        ));
    }
    Ok(x.dot(&coef))
}
