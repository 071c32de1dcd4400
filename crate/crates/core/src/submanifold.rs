//! Tensors induced on a parametric immersion: frames, projectors, the
//! `P/Q/b/c` split of `phi`, second fundamental form, shape operators,
//! gradients and covariant derivatives of frozen-coefficient fields.

use thiserror::Error;

use crate::ambient::{christoffel_from_jet, AmbientError, Christoffel, KenmotsuStructure};
use crate::expr::{CompiledExpr, ExprError};
use crate::numerics::{
    extend_orthonormal, gram_schmidt, inverse, metric_inner, Matrix, NumericsError, Vector,
};

/// `xi` counts as tangent when its normal part has `g`-norm below this.
pub const XI_TANGENT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("immersion component {component}: {source}")]
    Component {
        component: usize,
        #[source]
        source: ExprError,
    },
    #[error("expected {expected} components for ambient dimension, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("expected {expected} parameter values, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("Jacobian is rank deficient at {point:?}: {source}")]
    RankDeficient {
        point: Vec<f64>,
        #[source]
        source: NumericsError,
    },
    #[error("structure vector field is not tangent (normal part {defect:e})")]
    XiNotTangent { defect: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Ambient(#[from] AmbientError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Parametric map from a box in `R^n` into the ambient space.
#[derive(Clone, Debug)]
pub struct Immersion {
    pub params: Vec<String>,
    pub components: Vec<CompiledExpr>,
    pub bounds: Vec<(f64, f64)>,
}

/// Value, Jacobian and second derivatives of the immersion at a point.
#[derive(Clone, Debug)]
pub struct ImmersionJet {
    pub point: Vector,
    /// `N x n`, column `a` is `d chi / d u_a`.
    pub jacobian: Matrix,
    /// One `n x n` Hessian per ambient component.
    pub hessians: Vec<Matrix>,
}

impl ImmersionJet {
    /// `d^2 chi / du_a du_b` as an ambient vector.
    pub fn second(&self, a: usize, b: usize) -> Vector {
        Vector::from_iterator(self.hessians.len(), self.hessians.iter().map(|h| h[(a, b)]))
    }
}

impl Immersion {
    pub fn new(
        params: Vec<String>,
        components: Vec<CompiledExpr>,
        bounds: Vec<(f64, f64)>,
    ) -> Self {
        Self {
            params,
            components,
            bounds,
        }
    }

    /// Parses component sources against `params`.
    pub fn parse(
        params: &[&str],
        components: &[&str],
        bounds: &[(f64, f64)],
    ) -> Result<Self, GeometryError> {
        let names: Vec<String> = params.iter().map(|s| s.to_string()).collect();
        let compiled = components
            .iter()
            .enumerate()
            .map(|(component, src)| {
                CompiledExpr::new(src, &names)
                    .map_err(|source| GeometryError::Component { component, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(names, compiled, bounds.to_vec()))
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }

    pub fn jet(&self, p: &[f64]) -> Result<ImmersionJet, GeometryError> {
        if p.len() != self.dim() {
            return Err(GeometryError::ParamCount {
                expected: self.dim(),
                got: p.len(),
            });
        }
        let n = self.dim();
        let big = self.ambient_dim();
        let mut point = Vector::zeros(big);
        let mut jacobian = Matrix::zeros(big, n);
        let mut hessians = Vec::with_capacity(big);
        for (component, expr) in self.components.iter().enumerate() {
            let d = expr
                .jet(p)
                .map_err(|source| GeometryError::Component { component, source })?;
            point[component] = d.value;
            for a in 0..n {
                jacobian[(component, a)] = d.first[a];
            }
            hessians.push(d.hessian());
        }
        Ok(ImmersionJet {
            point,
            jacobian,
            hessians,
        })
    }
}

/// A tangent vector field written in parameter coordinates, known at one
/// point with its first derivatives.
#[derive(Clone, Debug)]
pub struct ParamField {
    pub coeffs: Vector,
    /// Column `b` holds `d coeffs / d u_b`.
    pub jacobian: Matrix,
}

impl ParamField {
    /// Field with constant coefficients in parameter coordinates.
    pub fn frozen(coeffs: Vector) -> Self {
        let n = coeffs.len();
        Self {
            coeffs,
            jacobian: Matrix::zeros(n, n),
        }
    }
}

/// A vector field along the submanifold that can be differentiated.
#[derive(Clone, Debug)]
pub enum Section {
    /// Tangent field `J c(u)`.
    Coordinate(ParamField),
    /// Ambient field with constant coordinate components (e.g. `xi`).
    Ambient(Vector),
}

/// Induced data at one parameter point.
#[derive(Clone, Debug)]
pub struct SubmanifoldFrame {
    pub params: Vec<f64>,
    pub structure: KenmotsuStructure,
    pub jet: ImmersionJet,
    pub metric: Matrix,
    pub metric_derivatives: Vec<Matrix>,
    pub christoffel: Christoffel,
    pub phi: Matrix,
    /// Induced metric `J^T G J` in parameter coordinates.
    pub induced: Matrix,
    pub induced_inv: Matrix,
    /// Orthonormal tangent frame; `xi` comes first when it is tangent.
    pub tangent: Vec<Vector>,
    pub normal: Vec<Vector>,
    pub xi_tangent: bool,
    pub xi_defect: f64,
    pub tangent_projector: Matrix,
    pub normal_projector: Matrix,
    /// `h(d_a, d_b)` for coordinate fields, row-major `n x n`.
    h_coord: Vec<Vector>,
}

#[derive(Clone, Debug)]
pub struct SecondFundamentalData {
    /// `h(e_i, e_j)` for the orthonormal tangent frame.
    pub h: Vec<Vec<Vector>>,
    /// `coefficients[r][(i, j)] = g(h(e_i, e_j), e_r)`.
    pub coefficients: Vec<Matrix>,
    /// `A_{e_r}` in the orthonormal tangent frame.
    pub shape: Vec<Matrix>,
    pub mean_curvature: Vector,
    /// `sum_ij g(h(e_i,e_j), h(e_i,e_j))`.
    pub norm_sq: f64,
    /// `sum_rij (h^r_ij)^2`.
    pub coefficient_sum: f64,
}

#[derive(Clone, Debug)]
pub struct Gradient {
    pub vector: Vector,
    /// `g(grad f, grad f)`.
    pub norm_sq: f64,
    /// `e_i(f)` for the orthonormal tangent frame.
    pub frame_derivatives: Vec<f64>,
}

impl Gradient {
    pub fn frame_sum(&self) -> f64 {
        self.frame_derivatives.iter().map(|d| d * d).sum()
    }
}

fn unit(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = 1.0;
    v
}

impl SubmanifoldFrame {
    pub fn build(
        immersion: &Immersion,
        structure: &KenmotsuStructure,
        params: &[f64],
    ) -> Result<Self, GeometryError> {
        if immersion.ambient_dim() != structure.dim() {
            return Err(GeometryError::ComponentCount {
                expected: structure.dim(),
                got: immersion.ambient_dim(),
            });
        }
        let jet = immersion.jet(params)?;
        let n = immersion.dim();
        let big = structure.dim();
        let mjet = structure.metric_jet(&jet.point);
        let christoffel = christoffel_from_jet(&mjet)?;
        let metric = mjet.metric.clone();
        let ip = metric_inner(&mjet.metric);
        let columns: Vec<Vector> = (0..n).map(|a| jet.jacobian.column(a).into_owned()).collect();
        gram_schmidt(&columns, &ip).map_err(|source| GeometryError::RankDeficient {
            point: params.to_vec(),
            source,
        })?;
        let induced = jet.jacobian.transpose() * &metric * &jet.jacobian;
        let induced_inv = inverse(&induced)?;
        let tangent_projector = &jet.jacobian * &induced_inv * jet.jacobian.transpose() * &metric;
        let normal_projector = Matrix::identity(big, big) - &tangent_projector;

        let xi = structure.xi();
        let xi_normal = &normal_projector * &xi;
        let xi_defect = ip(&xi_normal, &xi_normal).max(0.0).sqrt();
        let xi_tangent = xi_defect <= XI_TANGENT_TOL;

        let tangent = if xi_tangent {
            // Start from xi itself, then add the coordinate direction with
            // the largest residual until the frame is complete.
            let mut frame = vec![xi.clone()];
            let mut pool = columns.clone();
            while frame.len() < n {
                let (best, _) = pool
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let mut w = c.clone();
                        for e in &frame {
                            w.axpy(-ip(e, &w), e, 1.0);
                        }
                        (k, ip(&w, &w))
                    })
                    .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
                let c = pool.remove(best);
                let mut seq = frame.clone();
                seq.push(c);
                frame = gram_schmidt(&seq, &ip).map_err(|source| GeometryError::RankDeficient {
                    point: params.to_vec(),
                    source,
                })?;
            }
            frame
        } else {
            gram_schmidt(&columns, &ip)?
        };
        let normal = extend_orthonormal(&tangent, big, &ip)?;

        let mut h_coord = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let acc = jet.second(a, b) + christoffel.contract(&columns[a], &columns[b]);
                h_coord.push(&normal_projector * acc);
            }
        }

        Ok(Self {
            params: params.to_vec(),
            phi: structure.phi_matrix(),
            structure: structure.clone(),
            jet,
            metric,
            metric_derivatives: mjet.derivatives,
            christoffel,
            induced,
            induced_inv,
            tangent,
            normal,
            xi_tangent,
            xi_defect,
            tangent_projector,
            normal_projector,
            h_coord,
        })
    }

    pub fn n(&self) -> usize {
        self.params.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.metric.nrows()
    }

    pub fn inner(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.metric * v))
    }

    pub fn norm(&self, v: &Vector) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    pub fn xi(&self) -> Vector {
        self.structure.xi()
    }

    pub fn eta(&self, v: &Vector) -> f64 {
        self.structure.eta(v)
    }

    /// `d chi / d u_a`.
    pub fn coordinate_vector(&self, a: usize) -> Vector {
        self.jet.jacobian.column(a).into_owned()
    }

    /// Ambient vector `J c` for parameter coefficients `c`.
    pub fn from_coords(&self, c: &Vector) -> Vector {
        &self.jet.jacobian * c
    }

    /// Parameter coefficients of the tangent part of `v`.
    pub fn coords_of(&self, v: &Vector) -> Vector {
        &self.induced_inv * (self.jet.jacobian.transpose() * (&self.metric * v))
    }

    pub fn tangent_part(&self, v: &Vector) -> Vector {
        &self.tangent_projector * v
    }

    pub fn normal_part(&self, v: &Vector) -> Vector {
        &self.normal_projector * v
    }

    pub fn split(&self, v: &Vector) -> (Vector, Vector) {
        (self.tangent_part(v), self.normal_part(v))
    }

    pub fn apply_phi(&self, v: &Vector) -> Vector {
        &self.phi * v
    }

    /// Tangential part of `phi X`.
    pub fn p_of(&self, x: &Vector) -> Vector {
        self.tangent_part(&self.apply_phi(x))
    }

    /// Normal part of `phi X`.
    pub fn q_of(&self, x: &Vector) -> Vector {
        self.normal_part(&self.apply_phi(x))
    }

    /// Tangential part of `phi V`.
    pub fn b_of(&self, v: &Vector) -> Vector {
        self.tangent_part(&self.apply_phi(v))
    }

    /// Normal part of `phi V`.
    pub fn c_of(&self, v: &Vector) -> Vector {
        self.normal_part(&self.apply_phi(v))
    }

    /// `h(d_a, d_b)`.
    pub fn h_coordinate(&self, a: usize, b: usize) -> &Vector {
        &self.h_coord[a * self.n() + b]
    }

    /// Second fundamental form on tangent vectors (bilinear extension of the
    /// coordinate values).
    pub fn h(&self, x: &Vector, y: &Vector) -> Vector {
        let n = self.n();
        let cx = self.coords_of(x);
        let cy = self.coords_of(y);
        let mut out = Vector::zeros(self.ambient_dim());
        for a in 0..n {
            for b in 0..n {
                let w = cx[a] * cy[b];
                if w != 0.0 {
                    out.axpy(w, &self.h_coord[a * n + b], 1.0);
                }
            }
        }
        out
    }

    /// `A_V X`, defined by `g(A_V X, Y) = g(h(X, Y), V)` for every tangent `Y`.
    pub fn shape_operator(&self, v: &Vector, x: &Vector) -> Vector {
        let n = self.n();
        let cx = self.coords_of(x);
        let rhs = Vector::from_fn(n, |b, _| {
            let hb: Vector = (0..n).fold(Vector::zeros(self.ambient_dim()), |acc, a| {
                acc + &self.h_coord[a * n + b] * cx[a]
            });
            self.inner(&hb, v)
        });
        self.from_coords(&(&self.induced_inv * rhs))
    }

    pub fn second_fundamental(&self) -> SecondFundamentalData {
        let n = self.n();
        let h: Vec<Vec<Vector>> = self
            .tangent
            .iter()
            .map(|ei| self.tangent.iter().map(|ej| self.h(ei, ej)).collect())
            .collect();
        let coefficients: Vec<Matrix> = self
            .normal
            .iter()
            .map(|er| Matrix::from_fn(n, n, |i, j| self.inner(&h[i][j], er)))
            .collect();
        let shape: Vec<Matrix> = self
            .normal
            .iter()
            .map(|er| {
                Matrix::from_fn(n, n, |i, j| {
                    self.inner(&self.shape_operator(er, &self.tangent[j]), &self.tangent[i])
                })
            })
            .collect();
        let mut mean = Vector::zeros(self.ambient_dim());
        let mut norm_sq = 0.0;
        for i in 0..n {
            mean += &h[i][i];
            for j in 0..n {
                norm_sq += self.inner(&h[i][j], &h[i][j]);
            }
        }
        let coefficient_sum = coefficients.iter().map(|c| c.norm_squared()).sum();
        SecondFundamentalData {
            h,
            coefficients,
            shape,
            mean_curvature: mean / n as f64,
            norm_sq,
            coefficient_sum,
        }
    }

    /// Gradient of a scalar from its parameter-space differential.
    pub fn gradient(&self, differential: &Vector) -> Gradient {
        let coeffs = &self.induced_inv * differential;
        let vector = self.from_coords(&coeffs);
        let norm_sq = self.inner(&vector, &vector);
        let frame_derivatives = self
            .tangent
            .iter()
            .map(|e| self.derivative_along(differential, e))
            .collect();
        Gradient {
            vector,
            norm_sq,
            frame_derivatives,
        }
    }

    /// `X f` for a scalar with parameter differential `df` and tangent `X`.
    pub fn derivative_along(&self, differential: &Vector, x: &Vector) -> f64 {
        differential.dot(&self.coords_of(x))
    }

    /// Ambient covariant derivative `nabla-bar_X Y` along tangent `X`.
    pub fn ambient_derivative(&self, x: &Vector, section: &Section) -> Vector {
        match section {
            Section::Ambient(v) => self.christoffel.contract(x, v),
            Section::Coordinate(field) => {
                let n = self.n();
                let cx = self.coords_of(x);
                let value = self.from_coords(&field.coeffs);
                let mut d = Vector::zeros(self.ambient_dim());
                for b in 0..n {
                    if cx[b] == 0.0 {
                        continue;
                    }
                    // d_b (J c) = J (d_b c) + sum_a c_a d_b d_a chi
                    let mut col = self.from_coords(&field.jacobian.column(b).into_owned());
                    for a in 0..n {
                        if field.coeffs[a] != 0.0 {
                            col.axpy(field.coeffs[a], &self.jet.second(b, a), 1.0);
                        }
                    }
                    d.axpy(cx[b], &col, 1.0);
                }
                d + self.christoffel.contract(x, &value)
            }
        }
    }

    /// Induced connection `nabla_X Y`.
    pub fn induced_derivative(&self, x: &Vector, section: &Section) -> Vector {
        self.tangent_part(&self.ambient_derivative(x, section))
    }

    /// Value of a section at this point.
    pub fn section_value(&self, section: &Section) -> Vector {
        match section {
            Section::Ambient(v) => v.clone(),
            Section::Coordinate(f) => self.from_coords(&f.coeffs),
        }
    }

    /// `[X, Y]` of two parameter fields, pushed forward to the ambient.
    pub fn lie_bracket(&self, x: &ParamField, y: &ParamField) -> Vector {
        let c = &y.jacobian * &x.coeffs - &x.jacobian * &y.coeffs;
        self.from_coords(&c)
    }

    /// Torsion defect `[X, Y] - (nabla_X Y - nabla_Y X)` in the `g`-norm.
    pub fn torsion_defect(&self, x: &ParamField, y: &ParamField) -> f64 {
        let xv = self.from_coords(&x.coeffs);
        let yv = self.from_coords(&y.coeffs);
        let lhs = self.lie_bracket(x, y);
        let rhs = self.induced_derivative(&xv, &Section::Coordinate(y.clone()))
            - self.induced_derivative(&yv, &Section::Coordinate(x.clone()));
        self.norm(&(lhs - rhs))
    }

    /// `d/du_a` of the ambient metric along the immersion.
    fn metric_derivative_along(&self, a: usize) -> Matrix {
        let big = self.ambient_dim();
        let mut dg = Matrix::zeros(big, big);
        for k in 0..big {
            let w = self.jet.jacobian[(k, a)];
            if w != 0.0 {
                dg += &self.metric_derivatives[k] * w;
            }
        }
        dg
    }

    /// `d/du_a` of the Jacobian, column `b` is `d^2 chi / du_a du_b`.
    fn jacobian_derivative(&self, a: usize) -> Matrix {
        Matrix::from_fn(self.ambient_dim(), self.n(), |row, b| self.jet.hessians[row][(a, b)])
    }

    /// `d/du_a` of the induced metric `J^T G J`.
    pub fn induced_metric_derivative(&self, a: usize) -> Matrix {
        let j = &self.jet.jacobian;
        let dj = self.jacobian_derivative(a);
        let g = &self.metric;
        dj.transpose() * g * j + j.transpose() * self.metric_derivative_along(a) * j + j.transpose() * g * &dj
    }

    /// `d/du_a` of the tangential projector `J M^{-1} J^T G`.
    pub fn tangent_projector_derivative(&self, a: usize) -> Matrix {
        let j = &self.jet.jacobian;
        let dj = self.jacobian_derivative(a);
        let dg = self.metric_derivative_along(a);
        let g = &self.metric;
        let minv = &self.induced_inv;
        let dminv = -(minv * self.induced_metric_derivative(a) * minv);
        &dj * minv * j.transpose() * g
            + j * dminv * j.transpose() * g
            + j * minv * dj.transpose() * g
            + j * minv * j.transpose() * dg
    }

    /// Residual of `tan(nabla-bar_X V) = -A_V X` for the normal field
    /// `V = normal part of w` with `w` constant, in the `g`-norm.
    pub fn weingarten_residual(&self, w: &Vector, x: &Vector) -> f64 {
        let v = self.normal_part(w);
        let cx = self.coords_of(x);
        let mut dv = Vector::zeros(self.ambient_dim());
        for a in 0..self.n() {
            if cx[a] != 0.0 {
                dv -= (self.tangent_projector_derivative(a) * w) * cx[a];
            }
        }
        let nabla = dv + self.christoffel.contract(x, &v);
        let lhs = self.tangent_part(&nabla);
        self.norm(&(lhs + self.shape_operator(&v, x)))
    }

    /// Projector defects: idempotency, self-adjointness and complementarity.
    pub fn projector_defects(&self) -> (f64, f64, f64) {
        use crate::numerics::max_abs;
        let pt = &self.tangent_projector;
        let pn = &self.normal_projector;
        let g = &self.metric;
        let idem = max_abs(&(pt * pt - pt)).max(max_abs(&(pn * pn - pn)));
        let adj = max_abs(&(g * pt - pt.transpose() * g));
        let big = self.ambient_dim();
        let comp = max_abs(&(pt + pn - Matrix::identity(big, big)));
        (idem, adj, comp)
    }

    /// Largest deviation of the full frame Gram matrix from the identity.
    pub fn frame_defect(&self) -> f64 {
        let all: Vec<&Vector> = self.tangent.iter().chain(&self.normal).collect();
        let mut worst: f64 = 0.0;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.inner(a, b) - want).abs());
            }
        }
        worst
    }

    /// Coordinate unit vector `e_a` in parameter space.
    pub fn param_unit(&self, a: usize) -> Vector {
        unit(self.n(), a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd;

    fn example() -> Immersion {
        Immersion::parse(
            &["u", "v", "theta", "phi", "t"],
            &[
                "u*cos(theta)",
                "v*cos(phi)",
                "u*sin(theta)",
                "v*sin(phi)",
                "u*cos(phi)",
                "v*cos(theta)",
                "u*sin(phi)",
                "v*sin(theta)",
                "3*theta+2*phi",
                "2*theta+3*phi",
                "0",
                "0",
                "t",
            ],
            &[(0.5, 1.5), (0.5, 1.5), (0.0, 0.5), (0.8, 1.3), (-1.0, 1.0)],
        )
        .unwrap()
    }

    fn frame_at(p: &[f64]) -> SubmanifoldFrame {
        SubmanifoldFrame::build(&example(), &KenmotsuStructure::new(6), p).unwrap()
    }

    #[test]
    fn example_frame_dimensions_and_xi() {
        let f = frame_at(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.tangent.len(), 5);
        assert_eq!(f.normal.len(), 8);
        assert!(f.xi_tangent);
        assert_eq!(f.tangent[0], f.xi());
        assert!(f.frame_defect() < 1e-10);
    }

    // Spanning check: each coordinate vector lies in the span of the
    // orthonormal tangent frame.
    #[test]
    fn tangent_frame_spans_coordinate_vectors() {
        let f = frame_at(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        for a in 0..5 {
            let c = f.coordinate_vector(a);
            let rebuilt = f.tangent.iter().fold(Vector::zeros(13), |acc, e| acc + e * f.inner(e, &c));
            assert!((rebuilt - &c).amax() < 1e-10);
        }
    }

    #[test]
    fn induced_metric_of_example() {
        // dt^2 + e^{2t}[2du^2 + 2dv^2 + s dtheta^2 + 24 dtheta dphi + s dphi^2]
        let (u, v, t) = (0.7, 1.2, 0.4);
        let f = frame_at(&[u, v, 0.3, 1.1, t]);
        let e = (2.0 * t).exp();
        let s = u * u + v * v + 13.0;
        let want = Matrix::from_row_slice(
            5,
            5,
            &[
                2.0 * e, 0.0, 0.0, 0.0, 0.0,
                0.0, 2.0 * e, 0.0, 0.0, 0.0,
                0.0, 0.0, s * e, 12.0 * e, 0.0,
                0.0, 0.0, 12.0 * e, s * e, 0.0,
                0.0, 0.0, 0.0, 0.0, 1.0,
            ],
        );
        assert!(crate::numerics::max_abs(&(&f.induced - want)) < 1e-12);
    }

    #[test]
    fn projectors_behave() {
        let f = frame_at(&[0.8, 1.3, 0.2, 0.9, -0.5]);
        let (i, a, c) = f.projector_defects();
        assert!(i < 1e-10 && a < 1e-10 && c < 1e-10, "{i} {a} {c}");
        let t = f.tangent[2].clone();
        let (tp, np) = f.split(&t);
        assert!((tp - &t).amax() < 1e-10 && np.amax() < 1e-10);
        let v = f.normal[1].clone();
        let (tp, np) = f.split(&v);
        assert!(tp.amax() < 1e-10 && (np - &v).amax() < 1e-10);
    }

    #[test]
    fn phi_split_identities() {
        let f = frame_at(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        let xi = f.xi();
        assert!(f.p_of(&xi).amax() == 0.0 && f.q_of(&xi).amax() == 0.0);
        let e1 = f.tangent[1].clone();
        let (p, q) = (f.p_of(&e1), f.q_of(&e1));
        assert!((&p + &q - f.apply_phi(&e1)).amax() < 1e-14);
        assert!(f.norm(&p) > 1e-3 && f.norm(&q) > 1e-3);
        for x in &f.tangent {
            for y in &f.tangent {
                assert!((f.inner(&f.p_of(x), y) + f.inner(x, &f.p_of(y))).abs() < 1e-12);
            }
        }
        for v in &f.normal {
            assert!((f.b_of(v) + f.c_of(v) - f.apply_phi(v)).amax() < 1e-14);
        }
    }

    #[test]
    fn second_fundamental_form_properties() {
        let f = frame_at(&[0.9, 1.1, 0.4, 1.0, 0.3]);
        let sff = f.second_fundamental();
        for i in 0..5 {
            for j in 0..5 {
                assert!(f.norm(&(&sff.h[i][j] - &sff.h[j][i])) < 1e-10);
                for (r, er) in f.normal.iter().enumerate() {
                    let lhs = f.inner(&sff.h[i][j], er);
                    let rhs = f.inner(&f.shape_operator(er, &f.tangent[i]), &f.tangent[j]);
                    assert!((lhs - rhs).abs() < 1e-10);
                    assert!((sff.coefficients[r][(i, j)] - lhs).abs() < 1e-14);
                }
            }
        }
        assert!((sff.norm_sq - sff.coefficient_sum).abs() < 1e-10 * sff.norm_sq.max(1.0));
        // xi direction: h(xi, xi) = 0 since nabla-bar_xi xi = 0.
        assert!(f.norm(&sff.h[0][0]) < 1e-12);
    }

    #[test]
    fn norm_of_h_is_frame_independent() {
        let f = frame_at(&[0.9, 1.1, 0.4, 1.0, 0.3]);
        let base = f.second_fundamental().norm_sq;
        let mut g = f.clone();
        g.tangent.reverse();
        g.tangent.swap(0, 2);
        let permuted = g.second_fundamental().norm_sq;
        assert!((base - permuted).abs() <= 1e-12 * base);
    }

    #[test]
    fn induced_metric_derivative_matches_finite_differences() {
        let p = [0.9, 1.1, 0.4, 1.0, 0.3];
        let f = frame_at(&p);
        for a in 0..5 {
            let mut plus = p;
            let mut minus = p;
            plus[a] += fd::STEP;
            minus[a] -= fd::STEP;
            let num = (frame_at(&plus).induced - frame_at(&minus).induced) / (2.0 * fd::STEP);
            assert!(crate::numerics::max_abs(&(num - f.induced_metric_derivative(a))) < 1e-7);
        }
    }

    #[test]
    fn weingarten_consistency() {
        let f = frame_at(&[0.9, 1.1, 0.4, 1.0, 0.3]);
        let w = Vector::from_fn(13, |i, _| (i as f64 * 0.7).sin());
        for x in &f.tangent {
            assert!(f.weingarten_residual(&w, x) < 1e-8);
        }
    }

    #[test]
    fn projector_derivative_matches_finite_differences() {
        let p = [0.9, 1.1, 0.4, 1.0, 0.3];
        let f = frame_at(&p);
        for a in 0..5 {
            let mut plus = p;
            let mut minus = p;
            plus[a] += fd::STEP;
            minus[a] -= fd::STEP;
            let num = (frame_at(&plus).tangent_projector - frame_at(&minus).tangent_projector)
                / (2.0 * fd::STEP);
            let exact = f.tangent_projector_derivative(a);
            assert!(crate::numerics::max_abs(&(num - exact)) < 1e-7);
        }
    }

    #[test]
    fn gradient_of_log_warping_function() {
        let names: Vec<String> = ["u", "v", "theta", "phi", "t"].iter().map(|s| s.to_string()).collect();
        let lnf = CompiledExpr::new("log(sqrt(u*u+v*v+13))", &names).unwrap();
        let p = [1.0, 1.0, 0.0, 0.0, 0.0];
        let f = frame_at(&p);
        let grad = f.gradient(&lnf.jet(&p).unwrap().gradient());
        // xi(ln f) = 0 since f does not depend on t.
        assert!(grad.frame_derivatives[0].abs() < 1e-15);
        for (e, d) in f.tangent.iter().zip(&grad.frame_derivatives) {
            assert!((f.inner(&grad.vector, e) - d).abs() < 1e-12);
        }
        assert!((grad.norm_sq - grad.frame_sum()).abs() < 1e-12);
        let p0 = [0.0, 0.0, 0.3, 0.9, 0.1];
        let f0 = frame_at(&p0);
        let g0 = f0.gradient(&lnf.jet(&p0).unwrap().gradient());
        assert!(g0.norm_sq.abs() < 1e-15 && g0.frame_sum().abs() < 1e-15);
        let c = CompiledExpr::new("2.5", &names).unwrap();
        assert_eq!(f.gradient(&c.jet(&p).unwrap().gradient()).vector.amax(), 0.0);
    }

    #[test]
    fn coordinate_brackets_vanish() {
        let f = frame_at(&[1.0, 1.0, 0.2, 0.9, 0.0]);
        let th = ParamField::frozen(f.param_unit(2));
        let ph = ParamField::frozen(f.param_unit(3));
        assert_eq!(f.norm(&f.lie_bracket(&th, &ph)), 0.0);
        assert_eq!(f.norm(&f.lie_bracket(&th, &th)), 0.0);
        assert!(f.torsion_defect(&th, &ph) < 1e-10);
        // A field with varying coefficients: X = u d_theta, Y = d_u.
        let mut jac = Matrix::zeros(5, 5);
        jac[(2, 0)] = 1.0;
        let x = ParamField {
            coeffs: f.param_unit(2) * 1.0,
            jacobian: jac,
        };
        let y = ParamField::frozen(f.param_unit(0));
        // [u d_theta, d_u] = -d_theta
        let br = f.lie_bracket(&x, &y);
        assert!((br + f.coordinate_vector(2)).amax() < 1e-14);
        assert!(f.torsion_defect(&x, &y) < 1e-10);
    }

    #[test]
    fn geodesic_line_along_xi_is_totally_geodesic() {
        let imm = Immersion::parse(&["t"], &["0.3", "-0.2", "t"], &[(-1.0, 1.0)]).unwrap();
        let f = SubmanifoldFrame::build(&imm, &KenmotsuStructure::new(1), &[0.4]).unwrap();
        assert!(f.second_fundamental().norm_sq < 1e-24);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let imm = Immersion::parse(&["a", "b", "t"], &["a+b", "a+b", "t"], &[(0.0, 1.0); 3]).unwrap();
        let err = SubmanifoldFrame::build(&imm, &KenmotsuStructure::new(1), &[0.2, 0.3, 0.0]).unwrap_err();
        assert!(matches!(err, GeometryError::RankDeficient { .. }));
    }
}
