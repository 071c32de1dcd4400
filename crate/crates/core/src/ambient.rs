//! The Kenmotsu model space `R^{2m+1}` with coordinates
//! `(x1, y1, ..., xm, ym, t)`, metric `dt^2 + e^{2t} sum(dx^2 + dy^2)`,
//! `xi = d/dt`, `eta = dt`, and its Levi-Civita connection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{inverse, metric_inner, Dual2, Matrix, NumericsError, Scalar, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmbientError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field has no derivative data along the requested direction")]
    MissingDerivative,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which metric the structure carries. `Cosymplectic` drops the `e^{2t}`
/// factor and serves as a control that must fail the Kenmotsu axioms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricModel {
    Kenmotsu,
    Cosymplectic,
}

/// Sign of the almost complex part: `Standard` maps `d/dx_i` to `d/dy_i`,
/// `Flipped` maps it to `-d/dy_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiConvention {
    Standard,
    Flipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KenmotsuStructure {
    pub m: usize,
    pub metric: MetricModel,
    pub phi: PhiConvention,
}

/// Christoffel symbols `gamma[k][i][j]` at one point.
#[derive(Clone, Debug)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    /// `Gamma(u, v)^k = sum_ij Gamma^k_ij u^i v^j`, the connection term of
    /// the covariant derivative of a field `v` along `u`.
    pub fn contract(&self, u: &Vector, v: &Vector) -> Vector {
        let n = self.dim;
        let mut out = Vector::zeros(n);
        for i in 0..n {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = u[i] * v[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += self.get(k, i, j) * w;
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Metric and its first partial derivatives at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub metric: Matrix,
    /// `derivatives[k]` is `d g / d x^k`.
    pub derivatives: Vec<Matrix>,
}

/// A vector field known at one point through its value and its coordinate
/// derivative along a fixed direction.
#[derive(Clone, Debug)]
pub struct FieldJet {
    pub value: Vector,
    pub derivative: Option<Vector>,
}

impl FieldJet {
    /// A field with constant coordinate components.
    pub fn constant(value: Vector) -> Self {
        let n = value.len();
        Self {
            value,
            derivative: Some(Vector::zeros(n)),
        }
    }
}

/// Max residual of one axiom over the sampled points.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomResidual {
    pub check: String,
    pub eq_ref: Option<String>,
    pub max_residual: f64,
    pub worst_point: usize,
    pub per_point: Vec<f64>,
}

impl KenmotsuStructure {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            metric: MetricModel::Kenmotsu,
            phi: PhiConvention::Standard,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.m + 1
    }

    pub fn t_index(&self) -> usize {
        2 * self.m
    }

    fn check_dim(&self, v: &Vector) -> Result<(), AmbientError> {
        if v.len() != self.dim() {
            return Err(AmbientError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn xi(&self) -> Vector {
        let mut v = Vector::zeros(self.dim());
        v[self.t_index()] = 1.0;
        v
    }

    pub fn eta(&self, v: &Vector) -> f64 {
        v[self.t_index()]
    }

    /// Matrix of `phi` in coordinates; it does not depend on the point.
    pub fn phi_matrix(&self) -> Matrix {
        let n = self.dim();
        let s = match self.phi {
            PhiConvention::Standard => 1.0,
            PhiConvention::Flipped => -1.0,
        };
        let mut m = Matrix::zeros(n, n);
        for i in 0..self.m {
            let (x, y) = (2 * i, 2 * i + 1);
            m[(y, x)] = s;
            m[(x, y)] = -s;
        }
        m
    }

    pub fn apply_phi(&self, v: &Vector) -> Result<Vector, AmbientError> {
        self.check_dim(v)?;
        Ok(self.phi_matrix() * v)
    }

    /// Metric components as generic scalars, so the same rule yields values
    /// and exact derivatives.
    pub fn metric_components<S: Scalar>(&self, point: &[S], dim: usize) -> Vec<S> {
        let n = self.dim();
        let t = &point[self.t_index()];
        let spatial = match self.metric {
            MetricModel::Kenmotsu => t.mul(&S::constant(2.0, dim)).exp(),
            MetricModel::Cosymplectic => S::constant(1.0, dim),
        };
        let mut out = vec![S::constant(0.0, dim); n * n];
        for i in 0..n {
            out[i * n + i] = if i == self.t_index() {
                S::constant(1.0, dim)
            } else {
                spatial.clone()
            };
        }
        out
    }

    pub fn metric(&self, point: &Vector) -> Matrix {
        let n = self.dim();
        Matrix::from_row_slice(n, n, &self.metric_components(point.as_slice(), 0))
    }

    pub fn metric_eval(&self, point: &Vector, u: &Vector, v: &Vector) -> Result<f64, AmbientError> {
        self.check_dim(point)?;
        self.check_dim(u)?;
        self.check_dim(v)?;
        Ok(metric_inner(&self.metric(point))(u, v))
    }

    pub fn metric_jet(&self, point: &Vector) -> MetricJet {
        let n = self.dim();
        let seeded: Vec<Dual2> = (0..n).map(|i| Dual2::variable(point[i], i, n)).collect();
        let comps = self.metric_components(&seeded, n);
        let metric = Matrix::from_fn(n, n, |i, j| comps[i * n + j].value);
        let derivatives = (0..n)
            .map(|k| Matrix::from_fn(n, n, |i, j| comps[i * n + j].first[k]))
            .collect();
        MetricJet {
            metric,
            derivatives,
        }
    }

    /// Christoffel symbols from the Koszul formula
    /// `Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)`.
    pub fn christoffel(&self, point: &Vector) -> Result<Christoffel, AmbientError> {
        self.check_dim(point)?;
        let jet = self.metric_jet(point);
        Ok(christoffel_from_jet(&jet)?)
    }

    /// `nabla_direction field` for a field given with its coordinate
    /// derivative along `direction`.
    pub fn covariant_derivative(
        &self,
        point: &Vector,
        direction: &Vector,
        field: &FieldJet,
    ) -> Result<Vector, AmbientError> {
        self.check_dim(direction)?;
        self.check_dim(&field.value)?;
        let d = field.derivative.as_ref().ok_or(AmbientError::MissingDerivative)?;
        self.check_dim(d)?;
        let gamma = self.christoffel(point)?;
        Ok(d + gamma.contract(direction, &field.value))
    }

    /// `(nabla_X phi) Y`. Because `phi` has constant components, this equals
    /// `Gamma(X, phi Y) - phi Gamma(X, Y)` for any extension of `Y`.
    pub fn phi_derivative(&self, gamma: &Christoffel, x: &Vector, y: &Vector) -> Vector {
        let phi = self.phi_matrix();
        gamma.contract(x, &(&phi * y)) - &phi * gamma.contract(x, y)
    }
}

pub fn christoffel_from_jet(jet: &MetricJet) -> Result<Christoffel, NumericsError> {
    let n = jet.metric.nrows();
    let inv = inverse(&jet.metric)?;
    let d = &jet.derivatives;
    // lowered[l][i][j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    let mut lowered = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                lowered[(l * n + i) * n + j] =
                    0.5 * (d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)]);
            }
        }
    }
    let mut data = vec![0.0; n * n * n];
    for k in 0..n {
        for l in 0..n {
            let w = inv[(k, l)];
            if w == 0.0 {
                continue;
            }
            for ij in 0..n * n {
                data[k * n * n + ij] += w * lowered[l * n * n + ij];
            }
        }
    }
    Ok(Christoffel { dim: n, data })
}

fn g_norm(g: &Matrix, v: &Vector) -> f64 {
    v.dot(&(g * v)).max(0.0).sqrt()
}

/// One sample for the axiom checks: a point and two test vectors.
#[derive(Clone, Debug)]
pub struct AxiomSample {
    pub point: Vector,
    pub x: Vector,
    pub y: Vector,
}

/// Residuals of the almost contact, Kenmotsu and Levi-Civita conditions at
/// every sample. Vector-valued residuals are measured in the `g`-norm.
pub fn check_kenmotsu_axioms(
    structure: &KenmotsuStructure,
    samples: &[AxiomSample],
) -> Result<Vec<AxiomResidual>, AmbientError> {
    let xi = structure.xi();
    let phi = structure.phi_matrix();
    let n = structure.dim();
    let names: [(&str, Option<&str>); 12] = [
        ("phi xi = 0", Some("2.1")),
        ("eta(phi X) = 0", Some("2.1")),
        ("phi^2 X = -X + eta(X) xi", Some("2.1")),
        ("g(phi X, Y) = -g(X, phi Y)", Some("2.2")),
        ("eta(X) = g(X, xi)", Some("2.2")),
        ("eta(xi) = 1", Some("2.2")),
        ("g(phi X, phi Y) = g(X, Y) - eta(X) eta(Y)", Some("2.3")),
        ("nabla_X xi = X - eta(X) xi", Some("2.4")),
        ("(nabla_X phi) Y = g(phi X, Y) xi - eta(Y) phi X", Some("2.5")),
        ("metric compatibility", None),
        ("torsion-free", None),
        ("nabla_xi xi = 0", Some("2.4")),
    ];
    let mut per: Vec<Vec<f64>> = vec![Vec::with_capacity(samples.len()); names.len()];
    for s in samples {
        structure.check_dim(&s.point)?;
        structure.check_dim(&s.x)?;
        structure.check_dim(&s.y)?;
        let jet = structure.metric_jet(&s.point);
        let g = &jet.metric;
        let gamma = christoffel_from_jet(&jet)?;
        let ip = metric_inner(g);
        let (x, y) = (&s.x, &s.y);
        let phx = &phi * x;
        let phy = &phi * y;
        let eta = |v: &Vector| structure.eta(v);

        per[0].push(g_norm(g, &(&phi * &xi)));
        per[1].push(eta(&phx).abs());
        per[2].push(g_norm(g, &(&phi * &phx + x - &xi * eta(x))));
        per[3].push((ip(&phx, y) + ip(x, &phy)).abs());
        per[4].push((eta(x) - ip(x, &xi)).abs());
        per[5].push((eta(&xi) - 1.0).abs());
        per[6].push((ip(&phx, &phy) - ip(x, y) + eta(x) * eta(y)).abs());
        let nabla_xi = gamma.contract(x, &xi);
        per[7].push(g_norm(g, &(nabla_xi - x + &xi * eta(x))));
        let lhs = structure.phi_derivative(&gamma, x, y);
        let rhs = &xi * ip(&phx, y) - &phx * eta(y);
        per[8].push(g_norm(g, &(lhs - rhs)));
        // d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il
        let mut compat: f64 = 0.0;
        let mut torsion: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = jet.derivatives[k][(i, j)];
                    for l in 0..n {
                        r -= gamma.get(l, k, i) * g[(l, j)] + gamma.get(l, k, j) * g[(i, l)];
                    }
                    compat = compat.max(r.abs());
                    torsion = torsion.max((gamma.get(k, i, j) - gamma.get(k, j, i)).abs());
                }
            }
        }
        per[9].push(compat);
        per[10].push(torsion);
        per[11].push(g_norm(g, &gamma.contract(&xi, &xi)));
    }
    Ok(names
        .iter()
        .zip(per)
        .map(|((check, eq), values)| {
            let (worst_point, max_residual) = values
                .iter()
                .enumerate()
                .fold((0, 0.0_f64), |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) });
            AxiomResidual {
                check: check.to_string(),
                eq_ref: eq.map(str::to_string),
                max_residual,
                worst_point,
                per_point: values,
            }
        })
        .collect())
}
