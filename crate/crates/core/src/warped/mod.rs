//! Warped product structure: fitting `g = g1 + f^2 g2` to the induced metric
//! and the pointwise identities and inequality that warped bi-slant
//! submanifolds satisfy.

mod identities;
mod inequality;

pub use identities::{identity_measurements, mixed_mass, IdentityContext};
pub use inequality::{inequality_measurements, inequality_values, AdaptedFrame, InequalityValues};

use thiserror::Error;

use crate::ambient::KenmotsuStructure;
use crate::expr::{CompiledExpr, ExprError};
use crate::numerics::{fd, Matrix, Vector};
use crate::slant::{compressed_theta, Distribution, SlantError};
use crate::submanifold::{GeometryError, Immersion, SubmanifoldFrame};

/// Relative size of `df` along the fiber above which `f` counts as fiber
/// dependent.
const FIBER_DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WarpedError {
    #[error("parameter `{0}` is in both the base and the fiber")]
    Overlap(String),
    #[error("parameter `{0}` is in neither the base nor the fiber")]
    Uncovered(String),
    #[error("unknown parameter `{0}` in the partition")]
    UnknownParameter(String),
    #[error("the fiber is empty")]
    EmptyFiber,
    #[error("warping function is not positive ({value}) at {point:?}")]
    NonPositive { value: f64, point: Vec<f64> },
    #[error("`{name}` depends on fiber parameter `{param}` at {point:?} (derivative {derivative:e})")]
    FiberDependent {
        name: &'static str,
        param: String,
        derivative: f64,
        point: Vec<f64>,
    },
    #[error("no samples to fit")]
    NoSamples,
    #[error("distribution `{name}` admits no adapted frame (spanned {spanned} of {dim})")]
    AdaptedFrame { name: String, spanned: usize, dim: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Slant(#[from] SlantError),
}

/// Candidate warped structure over the parameter domain.
#[derive(Clone, Debug)]
pub struct WarpedSpec {
    pub base: Vec<usize>,
    pub fiber: Vec<usize>,
    pub warping: CompiledExpr,
    pub mu: Option<CompiledExpr>,
    /// Parameter carrying the ambient `t`, frozen at `fit_t` during the fit.
    pub time_param: Option<usize>,
    pub fit_t: f64,
}

impl WarpedSpec {
    pub fn new(
        params: &[String],
        base: &[&str],
        fiber: &[&str],
        warping: &str,
        mu: Option<&str>,
        time_param: Option<&str>,
        fit_t: f64,
    ) -> Result<Self, WarpedError> {
        let index = |name: &str| {
            params
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| WarpedError::UnknownParameter(name.to_string()))
        };
        let base_idx = base.iter().map(|b| index(b)).collect::<Result<Vec<_>, _>>()?;
        let fiber_idx = fiber.iter().map(|b| index(b)).collect::<Result<Vec<_>, _>>()?;
        if fiber_idx.is_empty() {
            return Err(WarpedError::EmptyFiber);
        }
        for (i, name) in params.iter().enumerate() {
            match (base_idx.contains(&i), fiber_idx.contains(&i)) {
                (true, true) => return Err(WarpedError::Overlap(name.clone())),
                (false, false) => return Err(WarpedError::Uncovered(name.clone())),
                _ => {}
            }
        }
        Ok(Self {
            base: base_idx,
            fiber: fiber_idx,
            warping: CompiledExpr::new(warping, params)?,
            mu: mu.map(|m| CompiledExpr::new(m, params)).transpose()?,
            time_param: time_param.map(index).transpose()?,
            fit_t,
        })
    }

    /// Parameter differential of `ln f`, checked for positivity and fiber
    /// independence.
    pub fn log_warping_differential(&self, params: &[String], p: &[f64]) -> Result<Vector, WarpedError> {
        let jet = self.warping.jet(p)?;
        if !(jet.value > 0.0) {
            return Err(WarpedError::NonPositive {
                value: jet.value,
                point: p.to_vec(),
            });
        }
        let d = jet.gradient() / jet.value;
        self.check_fiber_free("f", params, &d, p)?;
        Ok(d)
    }

    /// Parameter differential of `mu`, if one is supplied.
    pub fn mu_differential(&self, p: &[f64]) -> Result<Option<Vector>, WarpedError> {
        self.mu
            .as_ref()
            .map(|m| m.jet(p).map(|j| j.gradient()))
            .transpose()
            .map_err(Into::into)
    }

    fn check_fiber_free(
        &self,
        name: &'static str,
        params: &[String],
        d: &Vector,
        p: &[f64],
    ) -> Result<(), WarpedError> {
        let scale = d.amax().max(1.0);
        for &k in &self.fiber {
            if d[k].abs() > FIBER_DEPENDENCE_TOL * scale {
                return Err(WarpedError::FiberDependent {
                    name,
                    param: params[k].clone(),
                    derivative: d[k],
                    point: p.to_vec(),
                });
            }
        }
        Ok(())
    }

    fn at_fit_time(&self, p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        if let Some(t) = self.time_param {
            q[t] = self.fit_t;
        }
        q
    }
}

/// Metric block residuals at one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct FitSample {
    /// Sample point with the time parameter frozen at the fit time.
    pub point: Vec<f64>,
    /// Largest base/fiber entry of the induced metric.
    pub off_diagonal: f64,
    /// Largest fiber derivative of the base block.
    pub base_dependence: f64,
    /// Fiber trace factor relative to the reference point.
    pub factor: f64,
    /// `f^2 / f(p0)^2`.
    pub predicted: f64,
    /// `|factor - predicted| / predicted`.
    pub factor_residual: f64,
    /// Relative deviation of the fiber block from `f^2 g2`.
    pub conformality: f64,
    /// Relative deviation of the trace factor between the sample time and
    /// the fit time from the ratio predicted by `f`.
    pub time_dependence: Option<f64>,
    /// Observed trace factor ratio between sample time and fit time.
    pub time_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WarpedFit {
    pub reference: Vec<f64>,
    pub samples: Vec<FitSample>,
    /// Warping function is constant over the samples.
    pub trivial: bool,
}

impl WarpedFit {
    pub fn max_of(&self, field: impl Fn(&FitSample) -> f64) -> f64 {
        crate::check::max_abs(self.samples.iter().map(field))
    }
}

fn fiber_block(m: &Matrix, fiber: &[usize]) -> Matrix {
    Matrix::from_fn(fiber.len(), fiber.len(), |i, j| m[(fiber[i], fiber[j])])
}

/// Fits the warped structure at the samples.
///
/// The reference point `p0` is the first sample at the fit time. The
/// warping function is fixed up to scale by the fiber trace there.
pub fn fit_warped_metric(
    immersion: &Immersion,
    structure: &KenmotsuStructure,
    spec: &WarpedSpec,
    samples: &[Vec<f64>],
) -> Result<WarpedFit, WarpedError> {
    let first = samples.first().ok_or(WarpedError::NoSamples)?;
    let reference = spec.at_fit_time(first);
    let ref_frame = SubmanifoldFrame::build(immersion, structure, &reference)?;
    let fdim = spec.fiber.len() as f64;
    let trace = |m: &Matrix| fiber_block(m, &spec.fiber).trace() / fdim;
    let tau0 = trace(&ref_frame.induced);
    let f0 = spec.warping.eval(&reference)?;
    let mut out = Vec::with_capacity(samples.len());
    let mut f_values = Vec::with_capacity(samples.len());
    for sample in samples {
        let p = spec.at_fit_time(sample);
        spec.log_warping_differential(&immersion.params, &p)?;
        let frame = SubmanifoldFrame::build(immersion, structure, &p)?;
        let m = &frame.induced;
        let off_diagonal = crate::check::max_abs(
            spec.base
                .iter()
                .flat_map(|&b| spec.fiber.iter().map(move |&f| m[(b, f)])),
        );
        let base_dependence = crate::check::max_abs(spec.fiber.iter().flat_map(|&f| {
            let dm = frame.induced_metric_derivative(f);
            let base = spec.base.clone();
            base.iter()
                .flat_map(|&i| spec.base.iter().map(move |&j| (i, j)))
                .map(|(i, j)| dm[(i, j)])
                .collect::<Vec<_>>()
        }));
        let fp = spec.warping.eval(&p)?;
        f_values.push(fp);
        let predicted = (fp / f0).powi(2);
        let factor = trace(m) / tau0;
        let factor_residual = (factor - predicted).abs() / predicted;

        // g2 at the fiber coordinates of p, read off at the reference base.
        let mut shared = reference.clone();
        for &k in &spec.fiber {
            shared[k] = p[k];
        }
        let shared_frame = SubmanifoldFrame::build(immersion, structure, &shared)?;
        let block = fiber_block(m, &spec.fiber);
        let shared_block = fiber_block(&shared_frame.induced, &spec.fiber);
        let f_shared = spec.warping.eval(&shared)?;
        let expect = &shared_block * (fp / f_shared).powi(2);
        let conformality = crate::numerics::max_abs(&(&block - &expect)) / crate::numerics::max_abs(&block);

        let (time_dependence, time_ratio) = match spec.time_param {
            Some(t) if sample[t] != spec.fit_t => {
                let live = SubmanifoldFrame::build(immersion, structure, sample)?;
                let ratio = trace(&live.induced) / trace(m);
                let want = (spec.warping.eval(sample)? / fp).powi(2);
                (Some((ratio - want).abs() / want), Some(ratio))
            }
            Some(_) => (Some(0.0), Some(1.0)),
            None => (None, None),
        };
        out.push(FitSample {
            point: p,
            off_diagonal,
            base_dependence,
            factor,
            predicted,
            factor_residual,
            conformality,
            time_dependence,
            time_ratio,
        });
    }
    let lo = f_values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(WarpedFit {
        reference,
        samples: out,
        trivial: (hi - lo) <= 1e-12 * hi.abs().max(1.0),
    })
}

/// Parameter differential of the compressed slant angle of `dist`, by
/// central differences with step `fd::STEP`.
pub fn slant_differential(
    immersion: &Immersion,
    structure: &KenmotsuStructure,
    dist: &Distribution,
    p: &[f64],
) -> Result<Vector, WarpedError> {
    let theta_at = |q: &[f64]| -> Result<f64, WarpedError> {
        let frame = SubmanifoldFrame::build(immersion, structure, q)?;
        let basis = dist.orthonormal_basis(&frame)?;
        Ok(compressed_theta(&frame, &basis)?)
    };
    let mut out = Vector::zeros(p.len());
    for a in 0..p.len() {
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[a] += fd::STEP;
        minus[a] -= fd::STEP;
        out[a] = (theta_at(&plus)? - theta_at(&minus)?) / (2.0 * fd::STEP);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{Measurement, Role, Tolerances};

    pub(crate) fn example() -> Immersion {
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

    fn spec(base: &[&str], fiber: &[&str]) -> WarpedSpec {
        WarpedSpec::new(
            &example().params,
            base,
            fiber,
            "sqrt(u*u+v*v+13)",
            Some("log(sqrt(u*u+v*v+13))"),
            Some("t"),
            0.0,
        )
        .unwrap()
    }

    fn samples() -> Vec<Vec<f64>> {
        vec![
            vec![1.0, 1.0, 0.2, 1.0, 0.0],
            vec![0.6, 1.4, 0.4, 0.9, 0.7],
            vec![1.3, 0.7, 0.1, 1.2, -0.6],
        ]
    }

    #[test]
    fn example_trace_factor_matches_warping_function() {
        let fit = fit_warped_metric(&example(), &KenmotsuStructure::new(6), &spec(&["u", "v", "t"], &["theta", "phi"]), &samples())
            .unwrap();
        assert!(fit.max_of(|s| s.factor_residual) < 1e-12);
        assert!(fit.max_of(|s| s.off_diagonal) < 1e-12);
        assert!(fit.max_of(|s| s.base_dependence) < 1e-12);
        // The 12 dtheta dphi cross term is not scaled by f^2.
        assert!(fit.max_of(|s| s.conformality) > 1e-2);
        // The fiber block carries e^{2t}, f does not.
        let s = &fit.samples[1];
        assert!((s.time_ratio.unwrap() - (1.4f64).exp()).abs() < 1e-12);
        assert!(s.time_dependence.unwrap() > 1.0);
        assert!(!fit.trivial);
    }

    #[test]
    fn wrong_partition_shows_off_diagonal_mass() {
        let fit = fit_warped_metric(&example(), &KenmotsuStructure::new(6), &spec(&["u", "theta", "t"], &["v", "phi"]), &samples());
        // f depends on v, which is now in the fiber.
        assert!(matches!(fit, Err(WarpedError::FiberDependent { .. })));
        let s = WarpedSpec::new(&example().params, &["u", "theta", "t"], &["v", "phi"], "2", None, Some("t"), 0.0).unwrap();
        let fit = fit_warped_metric(&example(), &KenmotsuStructure::new(6), &s, &samples()).unwrap();
        assert!(fit.max_of(|s| s.off_diagonal) > 0.1);
        assert!(fit.trivial);
    }

    #[test]
    fn partition_errors() {
        let params = example().params;
        let e = WarpedSpec::new(&params, &["u", "v"], &["theta", "phi"], "1", None, None, 0.0).unwrap_err();
        assert_eq!(e, WarpedError::Uncovered("t".into()));
        let e = WarpedSpec::new(&params, &["u", "v", "t"], &[], "1", None, None, 0.0).unwrap_err();
        assert_eq!(e, WarpedError::EmptyFiber);
        let e = WarpedSpec::new(&params, &["u", "v", "t", "phi"], &["theta", "phi"], "1", None, None, 0.0).unwrap_err();
        assert_eq!(e, WarpedError::Overlap("phi".into()));
        let e = WarpedSpec::new(&params, &["w"], &["theta"], "1", None, None, 0.0).unwrap_err();
        assert_eq!(e, WarpedError::UnknownParameter("w".into()));
    }

    #[test]
    fn log_warping_differential_by_hand() {
        let s = spec(&["u", "v", "t"], &["theta", "phi"]);
        let d = s.log_warping_differential(&example().params, &[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((d[0] - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(d[4], 0.0);
    }

    #[test]
    fn slant_differential_matches_closed_form() {
        // cos^2 theta2 = 25 / (s^2 - 144), s = u^2 + v^2 + 13
        let d2 = Distribution::new("D2", &[vec![0.0, 0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0, 0.0]]);
        let p = [0.8, 1.2, 0.3, 1.0, 0.2];
        let d = slant_differential(&example(), &KenmotsuStructure::new(6), &d2, &p).unwrap();
        let theta = |u: f64, v: f64| {
            let s = u * u + v * v + 13.0;
            (5.0 / (s * s - 144.0).sqrt()).acos()
        };
        let h = 1e-6;
        let du = (theta(p[0] + h, p[1]) - theta(p[0] - h, p[1])) / (2.0 * h);
        assert!((d[0] - du).abs() < 1e-8, "{} {}", d[0], du);
        assert!(d[2].abs() < 1e-9 && d[3].abs() < 1e-9 && d[4].abs() < 1e-9);
    }

    fn product() -> Immersion {
        Immersion::parse(
            &["a", "b", "c", "d", "t"],
            &["a", "0.6*b", "0.8*b", "0", "c", "0.8*d", "0.6*d", "0", "t"],
            &[(-1.0, 1.0); 5],
        )
        .unwrap()
    }

    fn measure(imm: &Immersion, m: usize, p: &[f64], f: &str, mu: &str, base: [&str; 3], fiber: [&str; 2]) -> Vec<Measurement> {
        use rand::SeedableRng;
        let d1 = Distribution::new("D1", &[vec![1.0, 0.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0, 0.0]]);
        let d2 = Distribution::new("D2", &[vec![0.0, 0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0, 0.0]]);
        let structure = KenmotsuStructure::new(m);
        let spec = WarpedSpec::new(&imm.params, &base, &fiber, f, Some(mu), Some("t"), 0.0).unwrap();
        let frame = SubmanifoldFrame::build(imm, &structure, p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let dec = crate::slant::BiSlantDecomposition::build(&frame, &d1, &d2, &mut rng).unwrap();
        let ctx = IdentityContext {
            frame: &frame,
            dec: &dec,
            log_warping: spec.log_warping_differential(&imm.params, p).unwrap(),
            mu: spec.mu_differential(p).unwrap(),
            theta2: slant_differential(imm, &structure, &d2, p).unwrap(),
        };
        let tol = Tolerances::default();
        let mut out = identity_measurements(&ctx, &tol);
        let mixed = mixed_mass(&frame, &dec) <= tol.hypothesis;
        out.extend(inequality_measurements(&frame, &dec, &ctx.log_warping, mixed, &tol));
        out
    }

    fn find<'a>(ms: &'a [Measurement], check: &str) -> &'a Measurement {
        ms.iter().find(|m| m.check == check).unwrap()
    }

    #[test]
    fn product_passes_every_asserted_identity() {
        let ms = measure(&product(), 4, &[0.3, -0.2, 0.5, 0.1, 0.4], "exp(t)", "t", ["a", "b", "t"], ["c", "d"]);
        for m in &ms {
            if m.role == Role::Asserted {
                assert!(m.within_tolerance(), "{} {:?}", m.check, m.value);
            }
        }
        assert_eq!(find(&ms, "lower-bound").role, Role::Asserted);
        assert_eq!(find(&ms, "xi-log-warping").value, Some(0.0));
        // The printed sign misses by 2 (X ln f) g(Z, P2 W) with xi ln f = 1, cos theta2 = 0.8.
        let printed = find(&ms, "fiber-normal-expanded-printed").value.unwrap();
        assert!((printed - 1.6).abs() < 1e-12);
    }

    #[test]
    fn example_is_not_mixed_geodesic_and_inequality_is_report_only() {
        let ms = measure(
            &example(),
            6,
            &[0.7, 1.3, 0.2, 1.1, 0.4],
            "sqrt(u*u+v*v+13)",
            "log(sqrt(u*u+v*v+13))",
            ["u", "v", "t"],
            ["theta", "phi"],
        );
        assert!(find(&ms, "mixed-h-mass").value.unwrap() > 0.1);
        for check in ["lower-bound", "mixed-block", "mixed-geodesic-branch", "xi-log-warping"] {
            assert_eq!(find(&ms, check).role, Role::Report, "{check}");
        }
        assert_eq!(find(&ms, "xi-log-warping").value, Some(1.0));
        assert!(find(&ms, "slant-derivative-antisymmetric").within_tolerance());
        assert!(find(&ms, "substitution-p2").within_tolerance());
        // Leakage of P between D1 and D2 breaks the adapted frame.
        assert!(find(&ms, "adapted-frame").value.unwrap() > 0.1);
    }
}
