//! Central finite differences. These exist as test oracles and for
//! differentiating quantities that have no closed form (slant angles).

use super::{Matrix, Vector};

/// Default step for every central difference in the crate.
pub const STEP: f64 = 1e-5;

pub fn central_gradient<F>(f: F, x: &[f64], step: f64) -> Vector
where
    F: Fn(&[f64]) -> f64,
{
    let mut grad = Vector::zeros(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let plus = f(&probe);
        probe[i] = x[i] - step;
        let minus = f(&probe);
        probe[i] = x[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Jacobian of a vector-valued map, one column per input coordinate.
pub fn central_jacobian<F>(f: F, x: &[f64], step: f64) -> Matrix
where
    F: Fn(&[f64]) -> Vector,
{
    let mut probe = x.to_vec();
    let mut columns = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + step;
        let plus = f(&probe);
        probe[i] = x[i] - step;
        let minus = f(&probe);
        probe[i] = x[i];
        columns.push((plus - minus) / (2.0 * step));
    }
    Matrix::from_columns(&columns)
}

/// Hessian from central differences of an exact gradient. Differencing the
/// gradient rather than the value keeps the truncation and rounding error
/// near `step^2` and `eps/step` respectively.
pub fn hessian_from_gradient<F>(grad: F, x: &[f64], step: f64) -> Matrix
where
    F: Fn(&[f64]) -> Vector,
{
    let jac = central_jacobian(grad, x, step);
    (&jac + jac.transpose()) * 0.5
}
