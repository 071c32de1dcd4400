//! Pointwise slant angles, bi-slant decompositions and the identities that
//! hold on them.
//!
//! Two notions of the slant angle are computed side by side. The *compressed*
//! angle uses `P_i = T_i P` restricted to the distribution (the spectrum of
//! `-B^2` with `B = [g(e_k, P e_l)]`). The *full* angle uses the whole tangent
//! part of `phi X`, i.e. `arccos(|PX| / |phi X|)`. They coincide exactly when
//! `P` maps the distribution into itself.

use rand::Rng;
use thiserror::Error;

use crate::numerics::{gram_schmidt, span_basis, sym_eigen, Matrix, NumericsError, Vector};
use crate::submanifold::{ParamField, Section, SubmanifoldFrame};

/// Angle spread (radians) under which a distribution counts as pointwise slant.
pub const SLANT_SPREAD_TOL: f64 = 1e-6;
/// Random unit generators used to probe pointwise constancy.
pub const PROBE_COUNT: usize = 8;
/// Distance from `0` and `pi/2` under which a slant angle is not proper.
pub const PROPER_MARGIN: f64 = 1e-4;
/// Orthogonality tolerance for distribution specs.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
/// Relative tolerance for dropping dependent `Q`-images.
const SPAN_TOL: f64 = 1e-9;
/// Norm below which `QX` of a unit `X` is treated as zero.
const Q_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlantError {
    #[error("distribution `{name}` is empty")]
    Empty { name: String },
    #[error("distribution `{name}` generator {index} has {got} coefficients, expected {expected}")]
    Arity {
        name: String,
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("distribution `{name}` is degenerate: {source}")]
    Degenerate {
        name: String,
        #[source]
        source: NumericsError,
    },
    #[error("distribution `{name}` contains a vector proportional to xi")]
    AlongXi { name: String },
    #[error("distribution `{name}` is not orthogonal to xi (defect {defect:e})")]
    XiComponent { name: String, defect: f64 },
    #[error("distributions `{first}` and `{second}` are not orthogonal (defect {defect:e})")]
    NotOrthogonal {
        first: String,
        second: String,
        defect: f64,
    },
    #[error("dimensions do not add up: {d1} + {d2} + 1 != {n}")]
    NotComplementary { d1: usize, d2: usize, n: usize },
    #[error("distribution `{name}` is not pointwise slant (angle spread {spread:e})")]
    NotSlant { name: String, spread: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Tangent distribution given by constant coefficients over the coordinate
/// fields `d/du_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub name: String,
    pub generators: Vec<Vector>,
}

impl Distribution {
    pub fn new(name: impl Into<String>, generators: &[Vec<f64>]) -> Self {
        Self {
            name: name.into(),
            generators: generators.iter().map(|g| Vector::from_vec(g.clone())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn validate(&self, n: usize) -> Result<(), SlantError> {
        if self.generators.is_empty() {
            return Err(SlantError::Empty {
                name: self.name.clone(),
            });
        }
        for (index, g) in self.generators.iter().enumerate() {
            if g.len() != n {
                return Err(SlantError::Arity {
                    name: self.name.clone(),
                    index,
                    expected: n,
                    got: g.len(),
                });
            }
        }
        Ok(())
    }

    /// Generators pushed forward to ambient vectors.
    pub fn ambient_generators(&self, frame: &SubmanifoldFrame) -> Result<Vec<Vector>, SlantError> {
        self.validate(frame.n())?;
        Ok(self.generators.iter().map(|c| frame.from_coords(c)).collect())
    }

    /// `g`-orthonormal basis of the distribution at the frame point.
    pub fn orthonormal_basis(&self, frame: &SubmanifoldFrame) -> Result<Vec<Vector>, SlantError> {
        let gens = self.ambient_generators(frame)?;
        gram_schmidt(&gens, &|u: &Vector, v: &Vector| frame.inner(u, v)).map_err(|source| {
            SlantError::Degenerate {
                name: self.name.clone(),
                source,
            }
        })
    }
}

/// Angle with the given `cos^2` and `sin^2`; `atan2` stays accurate near
/// both ends of `[0, pi/2]`.
fn angle_from_parts(cos_sq: f64, sin_sq: f64) -> f64 {
    sin_sq.max(0.0).sqrt().atan2(cos_sq.max(0.0).sqrt())
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Orthogonal projection onto the span of an orthonormal family.
pub fn project(frame: &SubmanifoldFrame, basis: &[Vector], v: &Vector) -> Vector {
    basis
        .iter()
        .fold(Vector::zeros(v.len()), |acc, e| acc + e * frame.inner(e, v))
}

/// Slant data of one distribution at one point.
#[derive(Clone, Debug)]
pub struct SlantAngle {
    pub name: String,
    /// Mean of the compressed angles.
    pub theta: f64,
    pub cos_sq: f64,
    /// Eigenvalues of `-B^2`, `B = [g(e_k, P e_l)]`.
    pub compressed_spectrum: Vec<f64>,
    /// Eigenvalues of `[g(P e_k, P e_l)]`.
    pub full_spectrum: Vec<f64>,
    /// Angles paired with the compressed spectrum, ascending.
    pub compressed_angles: Vec<f64>,
    /// Angles paired with the full spectrum, ascending.
    pub full_angles: Vec<f64>,
    /// Angle between `phi X` and `PX` for random unit `X` in the distribution.
    pub probe_angles: Vec<f64>,
    /// Angle between `phi X` and `T P X` for the same probes.
    pub compressed_probe_angles: Vec<f64>,
}

impl SlantAngle {
    pub fn sin_sq(&self) -> f64 {
        1.0 - self.cos_sq
    }

    /// Pairwise deviation of the full-`P` probe angles.
    pub fn probe_spread(&self) -> f64 {
        spread(&self.probe_angles)
    }

    pub fn compressed_spread(&self) -> f64 {
        spread(&self.compressed_angles)
    }

    pub fn full_spread(&self) -> f64 {
        spread(&self.full_angles)
    }

    /// Pointwise constancy of the full angle over the probes.
    pub fn is_pointwise_slant(&self) -> bool {
        self.probe_spread() <= SLANT_SPREAD_TOL
    }

    /// Angle from the full spectrum, defined when that spectrum is flat.
    pub fn full_theta(&self) -> Option<f64> {
        (self.full_spread() <= SLANT_SPREAD_TOL)
            .then(|| self.full_angles.iter().sum::<f64>() / self.full_angles.len() as f64)
    }

    /// Largest gap between probe angles and the full-spectrum angle.
    pub fn full_agreement(&self) -> Option<f64> {
        self.full_theta()
            .map(|theta| self.probe_angles.iter().map(|a| (a - theta).abs()).fold(0.0, f64::max))
    }

    /// Largest gap between compressed probe angles and the compressed angle.
    pub fn compressed_agreement(&self) -> f64 {
        self.compressed_probe_angles
            .iter()
            .map(|a| (a - self.theta).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_proper(&self) -> bool {
        self.theta > PROPER_MARGIN && self.theta < std::f64::consts::FRAC_PI_2 - PROPER_MARGIN
    }
}

/// Slant angles of the distribution spanned by the orthonormal `basis`.
pub fn slant_angle<R: Rng>(
    frame: &SubmanifoldFrame,
    name: &str,
    basis: &[Vector],
    rng: &mut R,
) -> Result<SlantAngle, SlantError> {
    if basis.is_empty() {
        return Err(SlantError::Empty { name: name.into() });
    }
    let k = basis.len();
    let images: Vec<Vector> = basis.iter().map(|e| frame.apply_phi(e)).collect();
    for im in &images {
        if frame.norm(im) < 1e-12 {
            return Err(SlantError::AlongXi { name: name.into() });
        }
    }
    let p_images: Vec<Vector> = images.iter().map(|im| frame.tangent_part(im)).collect();
    let tp_images: Vec<Vector> = p_images.iter().map(|p| project(frame, basis, p)).collect();
    let gram = |vs: &[Vector]| -> Matrix {
        let m = Matrix::from_fn(k, k, |r, c| frame.inner(&vs[r], &vs[c]));
        (&m + m.transpose()) * 0.5
    };
    // cos^2 and sin^2 Gram matrices add up to the identity on ker eta, so
    // they share eigenvectors with reversed ordering.
    let rest = |vs: &[Vector]| -> Vec<Vector> { images.iter().zip(vs).map(|(im, v)| im - v).collect() };
    let spectra = |cos_part: &[Vector]| -> Result<(Vec<f64>, Vec<f64>), SlantError> {
        let (cos_eigs, _) = sym_eigen(&gram(cos_part))?;
        let (sin_eigs, _) = sym_eigen(&gram(&rest(cos_part)))?;
        let cos_eigs: Vec<f64> = cos_eigs.iter().copied().collect();
        let mut angles: Vec<f64> = cos_eigs
            .iter()
            .zip(sin_eigs.iter().rev())
            .map(|(&c, &s)| angle_from_parts(c, s))
            .collect();
        angles.sort_by(f64::total_cmp);
        Ok((cos_eigs, angles))
    };
    let (compressed_spectrum, compressed_angles) = spectra(&tp_images)?;
    let (full_spectrum, full_angles) = spectra(&p_images)?;

    let mut probe_angles = Vec::with_capacity(PROBE_COUNT);
    let mut compressed_probe_angles = Vec::with_capacity(PROBE_COUNT);
    while probe_angles.len() < PROBE_COUNT {
        let coeffs: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = Vector::zeros(frame.ambient_dim());
        for (c, e) in coeffs.iter().zip(basis) {
            x.axpy(*c, e, 1.0);
        }
        let norm = frame.norm(&x);
        if norm < 1e-3 {
            continue;
        }
        x /= norm;
        let phi_x = frame.apply_phi(&x);
        let px = frame.tangent_part(&phi_x);
        let tpx = project(frame, basis, &px);
        probe_angles.push(frame.norm(&(&phi_x - &px)).atan2(frame.norm(&px)));
        compressed_probe_angles.push(frame.norm(&(&phi_x - &tpx)).atan2(frame.norm(&tpx)));
    }

    let cos_sq = (compressed_spectrum.iter().sum::<f64>() / k as f64).clamp(0.0, 1.0);
    let theta = compressed_angles.iter().sum::<f64>() / k as f64;
    Ok(SlantAngle {
        name: name.into(),
        theta,
        cos_sq,
        compressed_spectrum,
        full_spectrum,
        compressed_angles,
        full_angles,
        probe_angles,
        compressed_probe_angles,
    })
}

/// Compressed slant angle of the distribution spanned by `basis`, without
/// random probes. Used for derivatives of the slant function.
pub fn compressed_theta(frame: &SubmanifoldFrame, basis: &[Vector]) -> Result<f64, SlantError> {
    let k = basis.len();
    if k == 0 {
        return Err(SlantError::Empty { name: String::new() });
    }
    let images: Vec<Vector> = basis.iter().map(|e| frame.apply_phi(e)).collect();
    let tp: Vec<Vector> = images
        .iter()
        .map(|im| project(frame, basis, &frame.tangent_part(im)))
        .collect();
    let cos_sq: f64 = tp.iter().map(|v| frame.inner(v, v)).sum::<f64>() / k as f64;
    let sin_sq: f64 = images
        .iter()
        .zip(&tp)
        .map(|(im, v)| {
            let r = im - v;
            frame.inner(&r, &r)
        })
        .sum::<f64>()
        / k as f64;
    Ok(angle_from_parts(cos_sq, sin_sq))
}

/// `max_X |P^2 X + cos^2(X - eta(X) xi)|` over `vectors`.
pub fn p_squared_residual(frame: &SubmanifoldFrame, vectors: &[Vector], cos_sq: f64) -> f64 {
    let xi = frame.xi();
    vectors
        .iter()
        .map(|x| {
            let p2 = frame.p_of(&frame.p_of(x));
            let rhs = (x - &xi * frame.eta(x)) * cos_sq;
            frame.norm(&(p2 + rhs))
        })
        .fold(0.0, f64::max)
}

/// Residuals of `g(PX,PY) = cos^2 {g(X,Y) - eta(X)eta(Y)}` and the `Q`
/// counterpart with `sin^2`, maximized over pairs from `vectors`.
pub fn metric_relations(frame: &SubmanifoldFrame, vectors: &[Vector], cos_sq: f64) -> (f64, f64) {
    let mut p_res: f64 = 0.0;
    let mut q_res: f64 = 0.0;
    let sin_sq = 1.0 - cos_sq;
    for x in vectors {
        for y in vectors {
            let base = frame.inner(x, y) - frame.eta(x) * frame.eta(y);
            let pp = frame.inner(&frame.p_of(x), &frame.p_of(y));
            let qq = frame.inner(&frame.q_of(x), &frame.q_of(y));
            p_res = p_res.max((pp - cos_sq * base).abs());
            q_res = q_res.max((qq - sin_sq * base).abs());
        }
    }
    (p_res, q_res)
}

/// Residuals of `bQX = sin^2(-X + eta(X) xi)` and `cQX = -QPX`.
pub fn normal_relations(frame: &SubmanifoldFrame, vectors: &[Vector], cos_sq: f64) -> (f64, f64) {
    let xi = frame.xi();
    let sin_sq = 1.0 - cos_sq;
    let mut b_res: f64 = 0.0;
    let mut c_res: f64 = 0.0;
    for x in vectors {
        let qx = frame.q_of(x);
        let bqx = frame.b_of(&qx);
        let want = (-x + &xi * frame.eta(x)) * sin_sq;
        b_res = b_res.max(frame.norm(&(bqx - want)));
        let cqx = frame.c_of(&qx);
        c_res = c_res.max(frame.norm(&(cqx + frame.q_of(&frame.p_of(x)))));
    }
    (b_res, c_res)
}

/// Tangent field through the frame point with frozen parameter coefficients.
pub fn frozen_section(frame: &SubmanifoldFrame, v: &Vector) -> Section {
    Section::Coordinate(ParamField::frozen(frame.coords_of(v)))
}

/// `D1 + D2 + xi` split of the tangent space with slant data and the normal
/// split `QD1 + QD2 + nu`.
#[derive(Clone, Debug)]
pub struct BiSlantDecomposition {
    pub d1: Vec<Vector>,
    pub d2: Vec<Vector>,
    pub theta1: SlantAngle,
    pub theta2: SlantAngle,
    pub qd1: Vec<Vector>,
    pub qd2: Vec<Vector>,
    /// Orthonormal basis of the complement of `QD1 + QD2` in the normal space.
    pub nu: Vec<Vector>,
    /// `max |g(phi e, w)|` for `e` in `D1`, `w` in `D2 + xi`.
    pub phi_cross_defect: f64,
    /// `max |g(q1, q2)|` over the orthonormal `QD1`, `QD2` bases.
    pub qd_overlap: f64,
}

impl BiSlantDecomposition {
    pub fn build<R: Rng>(
        frame: &SubmanifoldFrame,
        d1: &Distribution,
        d2: &Distribution,
        rng: &mut R,
    ) -> Result<Self, SlantError> {
        let b1 = d1.orthonormal_basis(frame)?;
        let b2 = d2.orthonormal_basis(frame)?;
        let xi = frame.xi();
        for (dist, basis) in [(d1, &b1), (d2, &b2)] {
            let defect = basis.iter().map(|e| frame.inner(e, &xi).abs()).fold(0.0, f64::max);
            if defect > ORTHOGONALITY_TOL {
                return Err(SlantError::XiComponent {
                    name: dist.name.clone(),
                    defect,
                });
            }
        }
        let cross = b1
            .iter()
            .flat_map(|a| b2.iter().map(move |b| (a, b)))
            .map(|(a, b)| frame.inner(a, b).abs())
            .fold(0.0, f64::max);
        if cross > ORTHOGONALITY_TOL {
            return Err(SlantError::NotOrthogonal {
                first: d1.name.clone(),
                second: d2.name.clone(),
                defect: cross,
            });
        }
        if b1.len() + b2.len() + 1 != frame.n() || !frame.xi_tangent {
            return Err(SlantError::NotComplementary {
                d1: b1.len(),
                d2: b2.len(),
                n: frame.n(),
            });
        }
        let theta1 = slant_angle(frame, &d1.name, &b1, rng)?;
        let theta2 = slant_angle(frame, &d2.name, &b2, rng)?;
        for angle in [&theta1, &theta2] {
            let s = angle.compressed_spread();
            if s > SLANT_SPREAD_TOL {
                return Err(SlantError::NotSlant {
                    name: angle.name.clone(),
                    spread: s,
                });
            }
        }

        let mut phi_cross_defect: f64 = 0.0;
        for e in &b1 {
            let pe = frame.apply_phi(e);
            for w in b2.iter().chain(std::iter::once(&xi)) {
                phi_cross_defect = phi_cross_defect.max(frame.inner(&pe, w).abs());
            }
        }

        let ip = |u: &Vector, v: &Vector| frame.inner(u, v);
        // Basis vectors are unit, so an absolute floor separates genuine
        // Q-images from rounding noise of an invariant direction.
        let q_images = |basis: &[Vector]| -> Vec<Vector> {
            basis
                .iter()
                .map(|e| frame.q_of(e))
                .filter(|q| frame.norm(q) > Q_FLOOR)
                .collect()
        };
        let q1 = q_images(&b1);
        let q2 = q_images(&b2);
        let qd1 = span_basis(&q1, &ip, SPAN_TOL);
        let qd2 = span_basis(&q2, &ip, SPAN_TOL);
        let qd_overlap = qd1
            .iter()
            .flat_map(|a| qd2.iter().map(move |b| (a, b)))
            .map(|(a, b)| frame.inner(a, b).abs())
            .fold(0.0, f64::max);
        let mut seeds: Vec<Vector> = frame.tangent.clone();
        seeds.extend(qd1.iter().cloned());
        seeds.extend(qd2.iter().cloned());
        let occupied = span_basis(&seeds, &ip, SPAN_TOL);
        let nu = crate::numerics::extend_orthonormal(&occupied, frame.ambient_dim(), &ip)?;

        Ok(Self {
            d1: b1,
            d2: b2,
            theta1,
            theta2,
            qd1,
            qd2,
            nu,
            phi_cross_defect,
            qd_overlap,
        })
    }

    /// `D1` basis followed by `xi`.
    pub fn base_frame(&self, frame: &SubmanifoldFrame) -> Vec<Vector> {
        let mut v = self.d1.clone();
        v.push(frame.xi());
        v
    }

    pub fn t1(&self, frame: &SubmanifoldFrame, x: &Vector) -> Vector {
        project(frame, &self.d1, x)
    }

    pub fn t2(&self, frame: &SubmanifoldFrame, x: &Vector) -> Vector {
        project(frame, &self.d2, x)
    }

    pub fn p1(&self, frame: &SubmanifoldFrame, x: &Vector) -> Vector {
        self.t1(frame, &frame.p_of(x))
    }

    pub fn p2(&self, frame: &SubmanifoldFrame, x: &Vector) -> Vector {
        self.t2(frame, &frame.p_of(x))
    }

    pub fn is_proper(&self) -> bool {
        self.theta1.is_proper() && self.theta2.is_proper()
    }

    /// Residual of `X = T1 X + T2 X + eta(X) xi` over the tangent frame.
    pub fn decomposition_residual(&self, frame: &SubmanifoldFrame) -> f64 {
        let xi = frame.xi();
        frame
            .tangent
            .iter()
            .map(|x| {
                let r = x - self.t1(frame, x) - self.t2(frame, x) - &xi * frame.eta(x);
                frame.norm(&r)
            })
            .fold(0.0, f64::max)
    }

    /// Residual of `phi X = P1 X + P2 X + QX` over the tangent frame.
    pub fn phi_split_residual(&self, frame: &SubmanifoldFrame) -> f64 {
        frame
            .tangent
            .iter()
            .map(|x| {
                let r = frame.apply_phi(x) - self.p1(frame, x) - self.p2(frame, x) - frame.q_of(x);
                frame.norm(&r)
            })
            .fold(0.0, f64::max)
    }

    /// Residuals of `P_i^2 X = cos^2 theta_i (-X + eta(X) xi)` for `X` in `D_i`.
    pub fn projected_p_squared(&self, frame: &SubmanifoldFrame) -> (f64, f64) {
        let one = self
            .d1
            .iter()
            .map(|x| frame.norm(&(self.p1(frame, &self.p1(frame, x)) + x * self.theta1.cos_sq)))
            .fold(0.0, f64::max);
        let two = self
            .d2
            .iter()
            .map(|x| frame.norm(&(self.p2(frame, &self.p2(frame, x)) + x * self.theta2.cos_sq)))
            .fold(0.0, f64::max);
        (one, two)
    }

    /// `cos^2 theta1 dim D1 + cos^2 theta2 dim D2 - trace(-P^2 on ker eta)`.
    pub fn trace_defect(&self, frame: &SubmanifoldFrame) -> f64 {
        let trace: f64 = self
            .d1
            .iter()
            .chain(&self.d2)
            .map(|e| {
                let p = frame.p_of(e);
                frame.inner(&p, &p)
            })
            .sum();
        let predicted =
            self.theta1.cos_sq * self.d1.len() as f64 + self.theta2.cos_sq * self.d2.len() as f64;
        (predicted - trace).abs()
    }

    /// Largest tangent or `QD1 + QD2` component of `phi V` for `V` in `nu`.
    pub fn nu_invariance_defect(&self, frame: &SubmanifoldFrame) -> f64 {
        let ip = |u: &Vector, v: &Vector| frame.inner(u, v);
        let mut q = self.qd1.clone();
        q.extend(self.qd2.iter().cloned());
        let q = span_basis(&q, &ip, SPAN_TOL);
        self.nu
            .iter()
            .map(|v| {
                let pv = frame.apply_phi(v);
                let leak = frame.tangent_part(&pv) + project(frame, &q, &pv);
                frame.norm(&leak)
            })
            .fold(0.0, f64::max)
    }

    /// `dim nu` predicted from the dimension count of the normal split.
    pub fn predicted_nu_dim(&self, frame: &SubmanifoldFrame) -> isize {
        frame.ambient_dim() as isize - frame.n() as isize - self.qd1.len() as isize - self.qd2.len() as isize
    }
}

/// Per-sample maxima of the two Lemma residuals on the bi-slant frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LemmaResiduals {
    pub leaf_base: f64,
    /// Fiber identity with the `eta` term scaled by `sin^2 theta2 - sin^2 theta1`,
    /// which is what the derivation gives once `X` has a `xi` component.
    pub leaf_fiber: f64,
    /// Fiber identity with a bare `-eta(X) g(Z, W)`; exact only for `X` in `D1`.
    pub leaf_fiber_printed: f64,
}

/// `g(A_{QP2Z}Y - A_{QZ}P1Y, X) + g(A_{QP1Y}Z - A_{QY}P2Z, X)`.
fn base_shape_combination(
    frame: &SubmanifoldFrame,
    dec: &BiSlantDecomposition,
    x: &Vector,
    y: &Vector,
    z: &Vector,
) -> f64 {
    let a = |v: &Vector, w: &Vector| frame.shape_operator(v, w);
    let p1y = dec.p1(frame, y);
    let p2z = dec.p2(frame, z);
    let t = a(&frame.q_of(&p2z), y) - a(&frame.q_of(z), &p1y) + a(&frame.q_of(&p1y), z)
        - a(&frame.q_of(y), &p2z);
    frame.inner(&t, x)
}

/// `g(A_{QP2W}X - A_{QW}P1X, Z) + g(A_{QP1X}W - A_{QX}P2W, Z)`.
fn fiber_shape_combination(
    frame: &SubmanifoldFrame,
    dec: &BiSlantDecomposition,
    x: &Vector,
    z: &Vector,
    w: &Vector,
) -> f64 {
    let a = |v: &Vector, u: &Vector| frame.shape_operator(v, u);
    let p1x = dec.p1(frame, x);
    let p2w = dec.p2(frame, w);
    let t = a(&frame.q_of(&p2w), x) - a(&frame.q_of(w), &p1x) + a(&frame.q_of(&p1x), w)
        - a(&frame.q_of(x), &p2w);
    frame.inner(&t, z)
}

/// `g(nabla_X Y, Z)` with `Y` extended by frozen parameter coefficients.
pub fn connection_component(frame: &SubmanifoldFrame, x: &Vector, y: &Vector, z: &Vector) -> f64 {
    frame.inner(&frame.ambient_derivative(x, &frozen_section(frame, y)), z)
}

/// Residuals of the two leaf identities relating `g(nabla_X Y, Z)` and
/// `g(nabla_Z W, X)` to shape-operator combinations.
pub fn lemma_residuals(frame: &SubmanifoldFrame, dec: &BiSlantDecomposition) -> LemmaResiduals {
    let base = dec.base_frame(frame);
    let s1 = dec.theta1.sin_sq();
    let s2 = dec.theta2.sin_sq();
    let mut out = LemmaResiduals::default();
    for x in &base {
        for y in &base {
            for z in &dec.d2 {
                let lhs = (s1 - s2) * connection_component(frame, x, y, z);
                let rhs = base_shape_combination(frame, dec, x, y, z);
                out.leaf_base = out.leaf_base.max((lhs - rhs).abs());
            }
        }
        for z in &dec.d2 {
            for w in &dec.d2 {
                let lhs = (s2 - s1) * connection_component(frame, z, w, x);
                let shape = fiber_shape_combination(frame, dec, x, z, w);
                let eta_zw = frame.eta(x) * frame.inner(z, w);
                out.leaf_fiber = out.leaf_fiber.max((lhs - shape + (s2 - s1) * eta_zw).abs());
                out.leaf_fiber_printed = out.leaf_fiber_printed.max((lhs - shape + eta_zw).abs());
            }
        }
    }
    out
}

/// Foliation criteria evaluated literally next to the geometric statements
/// they characterize.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FoliationReport {
    /// `max |g(A_{QP2Z}X - A_{QZ}P1X + A_{QP1Y}Z - A_{QY}P2Z, Y)|`.
    pub base_criterion: f64,
    /// `max |g(nabla_X Y, Z)|` for `X, Y` in `D1 + xi`, `Z` in `D2`.
    pub base_geometric: f64,
    /// `max |lhs - eta(X) g(Z, W)|` of the fiber criterion.
    pub fiber_criterion: f64,
    /// `max |g(nabla_Z W, X)|` for `X` in `D1 + xi`, `Z, W` in `D2`.
    pub fiber_geometric: f64,
}

impl FoliationReport {
    pub fn base_consistent(&self, tol: f64) -> bool {
        (self.base_criterion <= tol) == (self.base_geometric <= tol)
    }

    pub fn fiber_consistent(&self, tol: f64) -> bool {
        (self.fiber_criterion <= tol) == (self.fiber_geometric <= tol)
    }
}

pub fn foliation_criteria(frame: &SubmanifoldFrame, dec: &BiSlantDecomposition) -> FoliationReport {
    let base = dec.base_frame(frame);
    let a = |v: &Vector, u: &Vector| frame.shape_operator(v, u);
    let mut report = FoliationReport {
        base_criterion: 0.0,
        base_geometric: 0.0,
        fiber_criterion: 0.0,
        fiber_geometric: 0.0,
    };
    for x in &base {
        let p1x = dec.p1(frame, x);
        for y in &base {
            let p1y = dec.p1(frame, y);
            for z in &dec.d2 {
                let p2z = dec.p2(frame, z);
                let t = a(&frame.q_of(&p2z), x) - a(&frame.q_of(z), &p1x) + a(&frame.q_of(&p1y), z)
                    - a(&frame.q_of(y), &p2z);
                report.base_criterion = report.base_criterion.max(frame.inner(&t, y).abs());
                report.base_geometric =
                    report.base_geometric.max(connection_component(frame, x, y, z).abs());
            }
        }
        for z in &dec.d2 {
            for w in &dec.d2 {
                let lhs = fiber_shape_combination(frame, dec, x, z, w);
                report.fiber_criterion = report
                    .fiber_criterion
                    .max((lhs - frame.eta(x) * frame.inner(z, w)).abs());
                report.fiber_geometric =
                    report.fiber_geometric.max(connection_component(frame, z, w, x).abs());
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::KenmotsuStructure;
    use crate::submanifold::Immersion;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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

    fn d1() -> Distribution {
        Distribution::new("D1", &[vec![1.0, 0.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0, 0.0]])
    }

    fn d2() -> Distribution {
        Distribution::new("D2", &[vec![0.0, 0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0, 0.0]])
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn frame(p: &[f64]) -> SubmanifoldFrame {
        SubmanifoldFrame::build(&example(), &KenmotsuStructure::new(6), p).unwrap()
    }

    #[test]
    fn invariant_plane_has_zero_angle() {
        let imm = Immersion::parse(&["a", "b", "t"], &["a", "b", "t"], &[(0.0, 1.0); 3]).unwrap();
        let f = SubmanifoldFrame::build(&imm, &KenmotsuStructure::new(1), &[0.3, 0.2, 0.1]).unwrap();
        let basis = Distribution::new("D", &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]])
            .orthonormal_basis(&f)
            .unwrap();
        let s = slant_angle(&f, "D", &basis, &mut rng()).unwrap();
        assert!(s.theta.abs() < 1e-8 && s.probe_spread() < 1e-8);
        assert!(p_squared_residual(&f, &basis, s.cos_sq) < 1e-12);
        for x in &f.tangent {
            assert!(f.norm(&f.q_of(x)) < 1e-12);
        }
    }

    #[test]
    fn anti_invariant_plane_is_orthogonal() {
        let imm = Immersion::parse(&["a", "b", "t"], &["a", "0", "b", "0", "t"], &[(0.0, 1.0); 3]).unwrap();
        let f = SubmanifoldFrame::build(&imm, &KenmotsuStructure::new(2), &[0.3, 0.2, 0.1]).unwrap();
        let basis = Distribution::new("D", &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]])
            .orthonormal_basis(&f)
            .unwrap();
        let s = slant_angle(&f, "D", &basis, &mut rng()).unwrap();
        assert!((s.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
        assert!(!s.is_proper());
    }

    #[test]
    fn probe_free_angle_matches_spectrum() {
        let f = frame(&[0.7, 1.3, 0.2, 1.1, 0.4]);
        let dec = BiSlantDecomposition::build(&f, &d1(), &d2(), &mut rng()).unwrap();
        assert!((compressed_theta(&f, &dec.d2).unwrap() - dec.theta2.theta).abs() < 1e-12);
        assert!((compressed_theta(&f, &dec.d1).unwrap() - dec.theta1.theta).abs() < 1e-12);
    }

    #[test]
    fn xi_direction_is_rejected() {
        let f = frame(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        let err = slant_angle(&f, "X", &[f.xi()], &mut rng()).unwrap_err();
        assert!(matches!(err, SlantError::AlongXi { .. }));
    }

    #[test]
    fn example_compressed_angles_match_closed_forms() {
        for p in [[1.0, 1.0, 0.0, 1.0, 0.0], [0.7, 1.3, 0.2, 1.1, 0.4], [1.4, 0.6, 0.45, 0.9, -0.8]] {
            let f = frame(&p);
            let dec = BiSlantDecomposition::build(&f, &d1(), &d2(), &mut rng()).unwrap();
            let cos1 = (p[2] - p[3]).cos().abs();
            let s = p[0] * p[0] + p[1] * p[1] + 13.0;
            let cos2_sq = 25.0 / (s * s - 144.0);
            assert!((dec.theta1.cos_sq - cos1 * cos1).abs() < 1e-12, "{p:?}");
            assert!((dec.theta2.cos_sq - cos2_sq).abs() < 1e-12, "{p:?}");
            assert!(dec.theta1.compressed_agreement() < 1e-7);
            assert!(dec.theta2.compressed_agreement() < 1e-7);
            let (r1, r2) = dec.projected_p_squared(&f);
            assert!(r1 < 1e-10 && r2 < 1e-10);
            assert!(dec.decomposition_residual(&f) < 1e-12);
            assert!(dec.phi_split_residual(&f) < 1e-12);
            assert_eq!(dec.qd1.len(), 2);
            assert_eq!(dec.qd2.len(), 2);
            assert_eq!(dec.nu.len(), 4);
            assert_eq!(dec.predicted_nu_dim(&f), 4);
        }
    }

    // Off theta = phi, P carries D1 partly into D2, so the full and
    // compressed angles separate.
    #[test]
    fn example_leaks_off_the_diagonal() {
        let f = frame(&[0.7, 1.3, 0.2, 1.1, 0.4]);
        let dec = BiSlantDecomposition::build(&f, &d1(), &d2(), &mut rng()).unwrap();
        assert!(dec.phi_cross_defect > 1e-2);
        let basis = dec.d1.clone();
        assert!(p_squared_residual(&f, &basis, dec.theta1.cos_sq) > 1e-3);
        let on = frame(&[0.7, 1.3, 0.9, 0.9, 0.4]);
        let dec = BiSlantDecomposition::build(&on, &d1(), &d2(), &mut rng()).unwrap();
        assert!(dec.phi_cross_defect < 1e-12);
        assert!(p_squared_residual(&on, &dec.d1, dec.theta1.cos_sq) < 1e-10);
        assert!(p_squared_residual(&on, &dec.d2, dec.theta2.cos_sq) < 1e-10);
        assert!(dec.theta2.full_agreement().unwrap() < 1e-7);
    }

    // At theta = phi the first distribution is invariant.
    #[test]
    fn example_diagonal_point_has_invariant_first_distribution() {
        let f = frame(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        let dec = BiSlantDecomposition::build(&f, &d1(), &d2(), &mut rng()).unwrap();
        assert!(dec.theta1.theta.abs() < 1e-8);
        assert!(dec.qd1.is_empty());
        assert_eq!(dec.nu.len(), 6);
        let s = 15.0_f64;
        assert!((dec.theta2.cos_sq - 25.0 / (s * s - 144.0)).abs() < 1e-12);
    }

    #[test]
    fn normal_relations_follow_p_squared() {
        let f = frame(&[1.0, 1.0, 0.3, 0.3, 0.0]);
        let dec = BiSlantDecomposition::build(&f, &d1(), &d2(), &mut rng()).unwrap();
        let (b, c) = normal_relations(&f, &dec.d2, dec.theta2.cos_sq);
        assert!(b < 1e-10 && c < 1e-12);
        let (pp, qq) = metric_relations(&f, &dec.d2, dec.theta2.cos_sq);
        assert!(pp < 1e-10 && qq < 1e-10);
        assert!(dec.nu_invariance_defect(&f) < 1e-10);
        assert!(dec.trace_defect(&f) < 1e-10);
    }

    #[test]
    fn identical_distributions_are_rejected() {
        let f = frame(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        let err = BiSlantDecomposition::build(&f, &d1(), &d1(), &mut rng()).unwrap_err();
        assert!(matches!(err, SlantError::NotOrthogonal { .. }));
    }

    #[test]
    fn swapping_exchanges_angles() {
        let f = frame(&[0.8, 1.2, 0.1, 1.0, 0.2]);
        let a = BiSlantDecomposition::build(&f, &d1(), &d2(), &mut rng()).unwrap();
        let b = BiSlantDecomposition::build(&f, &d2(), &d1(), &mut rng()).unwrap();
        assert!((a.theta1.theta - b.theta2.theta).abs() < 1e-12);
        assert!((a.theta2.theta - b.theta1.theta).abs() < 1e-12);
    }

    #[test]
    fn lemma_terms_vanish_for_xi_pairs() {
        let f = frame(&[0.8, 1.2, 0.1, 1.0, 0.2]);
        let dec = BiSlantDecomposition::build(&f, &d1(), &d2(), &mut rng()).unwrap();
        let xi = f.xi();
        for z in &dec.d2 {
            assert!(base_shape_combination(&f, &dec, &xi, &xi, z).abs() < 1e-12);
            assert!(connection_component(&f, &xi, &xi, z).abs() < 1e-12);
        }
    }
}
