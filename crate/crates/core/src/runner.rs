//! Suite orchestration: axioms, then per-sample frames feeding the slant,
//! warped and inequality suites, then a single-threaded reduction into a
//! [`VerificationReport`].

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::ambient::{check_kenmotsu_axioms, AxiomSample};
use crate::check::{max_abs, Measurement, Role, Tolerances};
use crate::numerics::Vector;
use crate::report::{CheckResult, Discrepancy, Metadata, Status, SuiteReport, VerificationReport};
use crate::scenario::{ClaimQuantity, CompiledClaim, Scenario, ScenarioError};
use crate::slant::{
    foliation_criteria, lemma_residuals, metric_relations, normal_relations, p_squared_residual,
    BiSlantDecomposition, SlantAngle,
};
use crate::submanifold::{GeometryError, ParamField, SubmanifoldFrame};
use crate::warped::{
    fit_warped_metric, identity_measurements, inequality_measurements, mixed_mass, slant_differential,
    IdentityContext, WarpedError, WarpedFit,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Axioms,
    Slant,
    Warped,
    Inequality,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Axioms, Suite::Slant, Suite::Warped, Suite::Inequality];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Slant => "slant",
            Suite::Warped => "warped",
            Suite::Inequality => "inequality",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub suites: Vec<Suite>,
    /// Replaces the scenario grid by an `N`-per-parameter product grid.
    pub grid: Option<usize>,
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            suites: Suite::ALL.to_vec(),
            grid: None,
            seed: None,
            tol_scale: 1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("numerics failure{}: {message}", .sample.map(|s| format!(" at sample {s}")).unwrap_or_default())]
    Numerics { sample: Option<usize>, message: String },
}

impl RunError {
    /// Process exit code: 2 for invalid scenarios, 3 for numerics failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) => 2,
            RunError::Numerics { .. } => 3,
        }
    }

    fn numerics(sample: Option<usize>, err: impl std::fmt::Display) -> Self {
        RunError::Numerics {
            sample,
            message: err.to_string(),
        }
    }
}

fn warped_error(sample: Option<usize>, err: WarpedError) -> Result<String, RunError> {
    match err {
        WarpedError::Geometry(e) => Err(RunError::numerics(sample, e)),
        WarpedError::Slant(crate::slant::SlantError::Numerics(e)) => Err(RunError::numerics(sample, e)),
        other => Ok(other.to_string()),
    }
}

/// Per-sample RNG; stream 0 is reserved for the ambient axiom points.
fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random ambient points and vectors for the structure checks; every
/// coordinate is uniform in `[-1, 1]`.
pub fn axiom_samples(dim: usize, count: usize, seed: u64) -> Vec<AxiomSample> {
    let mut rng = sample_rng(seed, 0);
    let draw = |rng: &mut ChaCha8Rng| Vector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
    (0..count)
        .map(|_| AxiomSample {
            point: draw(&mut rng),
            x: draw(&mut rng),
            y: draw(&mut rng),
        })
        .collect()
}

/// Computed value and deviation of one claim at one sample.
#[derive(Clone, Copy, Debug, Default)]
struct ClaimValue {
    computed: Option<f64>,
    deviation: Option<f64>,
}

#[derive(Default)]
struct SampleOutcome {
    slant: Vec<Measurement>,
    warped: Vec<Measurement>,
    inequality: Vec<Measurement>,
    claims: Vec<ClaimValue>,
}

struct RunContext<'a> {
    scenario: &'a Scenario,
    tol: Tolerances,
    seed: u64,
    slant: bool,
    warped: bool,
    inequality: bool,
    fit: Option<&'a WarpedFit>,
}

pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<VerificationReport, RunError> {
    if !(opts.tol_scale.is_finite() && opts.tol_scale > 0.0) {
        return Err(ScenarioError::Invalid {
            field: "tol-scale".into(),
            message: format!("must be positive and finite, got {}", opts.tol_scale),
        }
        .into());
    }
    if opts.grid == Some(0) {
        return Err(ScenarioError::Invalid {
            field: "grid".into(),
            message: "grid is empty".into(),
        }
        .into());
    }
    let tol = scenario.tolerances.scaled(opts.tol_scale);
    let seed = opts.seed.unwrap_or(scenario.grid.seed);
    let points = scenario.sample_points(seed, opts.grid);
    let requested = |s: Suite| opts.suites.contains(&s);
    let enabled = |s: Suite| match s {
        Suite::Axioms => scenario.suites.axioms,
        Suite::Slant => scenario.suites.slant,
        Suite::Warped => scenario.suites.warped,
        Suite::Inequality => scenario.suites.inequality,
    };

    // The axioms gate everything else, so they run even when not requested.
    let axiom_points = axiom_samples(scenario.structure.dim(), scenario.grid.axiom_points, seed);
    let axioms = check_kenmotsu_axioms(&scenario.structure, &axiom_points)
        .map_err(|e| RunError::numerics(None, e))?;
    let axiom_checks: Vec<CheckResult> = axioms
        .iter()
        .map(|r| {
            let values = r
                .per_point
                .iter()
                .enumerate()
                .map(|(i, v)| (i, Measurement::asserted(&r.check, r.eq_ref.as_deref(), *v, tol.axioms)))
                .collect();
            CheckResult::aggregate("axioms", values)
        })
        .collect();
    let axioms_ok = axiom_checks.iter().all(|c| c.status != Status::Fail);
    let gate = (!axioms_ok).then_some("ambient structure fails the Kenmotsu axioms");

    let has_bislant = scenario.d1.is_some() && scenario.d2.is_some();
    let warped_reason = if scenario.warped.is_none() {
        Some("scenario declares no warped structure")
    } else if !has_bislant {
        Some("scenario declares no distributions")
    } else {
        None
    };

    let active = |s: Suite| requested(s) && enabled(s) && gate.is_none();
    let run_slant = active(Suite::Slant);
    let run_warped = active(Suite::Warped) && warped_reason.is_none();
    let run_inequality = active(Suite::Inequality) && warped_reason.is_none();

    // Warped fit is a whole-grid computation.
    let mut fit_failure: Option<String> = None;
    let fit = match (&scenario.warped, run_warped || run_inequality) {
        (Some(spec), true) => match fit_warped_metric(&scenario.immersion, &scenario.structure, spec, &points) {
            Ok(fit) => Some(fit),
            Err(e) => {
                fit_failure = Some(warped_error(None, e)?);
                None
            }
        },
        _ => None,
    };

    let ctx = RunContext {
        scenario,
        tol: tol.clone(),
        seed,
        slant: run_slant,
        warped: run_warped && fit.is_some(),
        inequality: run_inequality && fit.is_some(),
        fit: fit.as_ref(),
    };
    let outcomes: Vec<SampleOutcome> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| evaluate_sample(&ctx, i, p))
        .collect::<Result<_, _>>()?;

    let mut suites = Vec::new();
    for suite in Suite::ALL {
        if !requested(suite) {
            continue;
        }
        let name = suite.name();
        if !enabled(suite) {
            suites.push(SuiteReport::skipped(name, "disabled by the scenario", Vec::new()));
            continue;
        }
        if suite == Suite::Axioms {
            suites.push(SuiteReport::new(name, axiom_checks.clone()));
            continue;
        }
        if let Some(reason) = gate {
            suites.push(SuiteReport::skipped(name, reason, Vec::new()));
            continue;
        }
        if suite != Suite::Slant {
            if let Some(reason) = warped_reason {
                suites.push(SuiteReport::skipped(name, reason, Vec::new()));
                continue;
            }
            if let Some(failure) = &fit_failure {
                let check = CheckResult::aggregate(
                    name,
                    vec![(0, Measurement {
                        check: "warped-fit".into(),
                        eq_ref: Some("4.1".into()),
                        value: None,
                        tolerance: tol.fit,
                        role: Role::Asserted,
                        note: Some(failure.clone()),
                    })],
                );
                suites.push(SuiteReport::new(name, vec![check]));
                continue;
            }
        }
        let per_sample = outcomes.iter().enumerate().map(|(i, o)| {
            let ms = match suite {
                Suite::Slant => &o.slant,
                Suite::Warped => &o.warped,
                _ => &o.inequality,
            };
            (i, ms)
        });
        suites.push(SuiteReport::new(name, aggregate(name, per_sample)));
    }

    let mut discrepancies = claim_discrepancies(&scenario.claims, &outcomes);
    if let (Some(fit), Some(spec)) = (&fit, &scenario.warped) {
        if spec.time_param.is_some() {
            discrepancies.push(time_dependence(fit, spec.fit_t));
        }
    }

    let metadata = Metadata {
        scenario: scenario.name.clone(),
        seed,
        grid: grid_description(scenario, opts.grid),
        sample_count: points.len(),
        tol_scale: opts.tol_scale,
        suites: opts.suites.iter().map(|s| s.name().to_string()).collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(VerificationReport::new(metadata, points, suites, discrepancies))
}

/// Groups measurements by `(check, eq_ref)` in order of first appearance.
fn aggregate<'a>(suite: &str, per_sample: impl Iterator<Item = (usize, &'a Vec<Measurement>)>) -> Vec<CheckResult> {
    let mut order: Vec<(String, Option<String>)> = Vec::new();
    let mut groups: BTreeMap<(String, Option<String>), Vec<(usize, Measurement)>> = BTreeMap::new();
    for (i, ms) in per_sample {
        for m in ms {
            let key = (m.check.clone(), m.eq_ref.clone());
            let entry = groups.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                Vec::new()
            });
            entry.push((i, m.clone()));
        }
    }
    order
        .into_iter()
        .map(|key| CheckResult::aggregate(suite, groups.remove(&key).unwrap_or_default()))
        .collect()
}

fn grid_description(scenario: &Scenario, grid: Option<usize>) -> String {
    let n = scenario.immersion.dim();
    if let Some(k) = grid {
        return format!("product {k}^{n}");
    }
    let g = &scenario.grid;
    if let Some(counts) = &g.counts {
        let parts: Vec<String> = counts.iter().map(usize::to_string).collect();
        format!("product {}", parts.join("x"))
    } else if let Some(points) = &g.points {
        format!("explicit {}", points.len())
    } else {
        format!("random {}", g.random.unwrap_or(0))
    }
}

fn evaluate_sample(ctx: &RunContext<'_>, index: usize, p: &[f64]) -> Result<SampleOutcome, RunError> {
    let sc = ctx.scenario;
    let tol = &ctx.tol;
    let frame = SubmanifoldFrame::build(&sc.immersion, &sc.structure, p)
        .map_err(|e| RunError::numerics(Some(index), e))?;
    let mut rng = sample_rng(ctx.seed, index as u64 + 1);
    let dec = match (&sc.d1, &sc.d2) {
        (Some(d1), Some(d2)) => Some(BiSlantDecomposition::build(&frame, d1, d2, &mut rng)),
        _ => None,
    };
    let log_warping = match &sc.warped {
        Some(spec) => Some(spec.log_warping_differential(&sc.immersion.params, p)),
        None => None,
    };

    let mut out = SampleOutcome::default();
    if ctx.slant {
        let differential = match &log_warping {
            Some(Ok(d)) => d.clone(),
            _ => frame.param_unit(0),
        };
        out.slant = geometry_measurements(&frame, &differential, tol);
        match &dec {
            Some(Ok(dec)) => {
                out.slant.push(Measurement::asserted("bislant-decomposition", None, 0.0, tol.slant));
                out.slant.extend(slant_measurements(&frame, dec, tol));
            }
            Some(Err(e)) => out.slant.push(failed("bislant-decomposition", None, tol.slant, e.to_string())),
            None => {}
        }
    }

    let usable = match (&dec, &log_warping) {
        (Some(Ok(dec)), Some(Ok(lw))) => Some((dec, lw)),
        _ => None,
    };
    let prerequisite = || match (&dec, &log_warping) {
        (Some(Err(e)), _) => format!("bi-slant decomposition failed: {e}"),
        (_, Some(Err(e))) => format!("warping function: {e}"),
        _ => "no bi-slant decomposition".to_string(),
    };

    if ctx.warped {
        if let Some(fit) = ctx.fit {
            out.warped = fit_measurements(fit, index, tol);
        }
        match usable {
            Some((dec, lw)) => {
                let spec = sc.warped.as_ref().expect("warped suite requires a warped spec");
                let d2 = sc.d2.as_ref().expect("bi-slant requires D2");
                let extra = spec
                    .mu_differential(p)
                    .and_then(|mu| slant_differential(&sc.immersion, &sc.structure, d2, p).map(|t| (mu, t)));
                match extra {
                    Ok((mu, theta2)) => {
                        let ictx = IdentityContext {
                            frame: &frame,
                            dec,
                            log_warping: lw.clone(),
                            mu,
                            theta2,
                        };
                        out.warped.extend(identity_measurements(&ictx, tol));
                    }
                    Err(e) => {
                        let msg = warped_error(Some(index), e)?;
                        out.warped.push(failed("warped-evaluation", None, tol.fit, msg));
                    }
                }
            }
            None => out.warped.push(failed("warped-evaluation", None, tol.fit, prerequisite())),
        }
    }

    if ctx.inequality {
        match usable {
            Some((dec, lw)) => {
                let mass = mixed_mass(&frame, dec);
                let mixed = mass <= tol.hypothesis;
                out.inequality.push(
                    Measurement::report("mixed-geodesic-gate", None, mass, tol.hypothesis).with_note(if mixed {
                        "mixed totally geodesic; hypothesis-dependent checks asserted"
                    } else {
                        "not mixed totally geodesic; hypothesis-dependent checks report only"
                    }),
                );
                out.inequality.extend(inequality_measurements(&frame, dec, lw, mixed, tol));
            }
            None => out.inequality.push(failed("inequality-evaluation", None, tol.frame, prerequisite())),
        }
    }

    let dec_ok = match &dec {
        Some(Ok(d)) => Some(d),
        _ => None,
    };
    out.claims = sc
        .claims
        .iter()
        .map(|c| evaluate_claim(sc, c, &frame, dec_ok, log_warping.as_ref().and_then(|r| r.as_ref().ok()), p))
        .collect::<Result<_, _>>()?;
    Ok(out)
}

fn failed(check: &str, eq_ref: Option<&str>, tolerance: f64, note: String) -> Measurement {
    Measurement {
        check: check.into(),
        eq_ref: eq_ref.map(Into::into),
        value: None,
        tolerance,
        role: Role::Asserted,
        note: Some(note),
    }
}

/// Frame, projector, Gauss/Weingarten, `|h|^2`, gradient and `phi` split checks.
fn geometry_measurements(frame: &SubmanifoldFrame, differential: &Vector, tol: &Tolerances) -> Vec<Measurement> {
    let n = frame.n();
    let mut out = Vec::new();
    let (idem, adj, comp) = frame.projector_defects();
    out.push(Measurement::asserted("projector-idempotent", None, idem, tol.projector));
    out.push(Measurement::asserted("projector-self-adjoint", None, adj, tol.projector));
    out.push(Measurement::asserted("projector-complement", None, comp, tol.projector));
    out.push(Measurement::asserted("frame-orthonormal", None, frame.frame_defect(), tol.frame));
    out.push(Measurement::report("xi-normal-part", None, frame.xi_defect, tol.geometry));

    let tangent = &frame.tangent;
    let normal = &frame.normal;
    let pairs = || (0..n).flat_map(move |a| (0..n).map(move |b| (a, b)));
    let sym = max_abs(pairs().map(|(a, b)| frame.norm(&(frame.h_coordinate(a, b) - frame.h_coordinate(b, a)))));
    out.push(Measurement::asserted("h-symmetric", Some("2.6"), sym, tol.geometry));
    let normality = max_abs(pairs().map(|(a, b)| frame.norm(&frame.tangent_part(frame.h_coordinate(a, b)))));
    out.push(Measurement::asserted("h-normal", Some("2.6"), normality, tol.geometry));
    let gauss = max_abs(tangent.iter().flat_map(|x| {
        tangent.iter().map(move |y| {
            let nabla = frame.ambient_derivative(x, &crate::slant::frozen_section(frame, y));
            frame.norm(&(frame.normal_part(&nabla) - frame.h(x, y)))
        })
    }));
    out.push(Measurement::asserted("gauss-normal-part", Some("2.6"), gauss, tol.geometry));
    let torsion = max_abs(pairs().map(|(a, b)| {
        frame.torsion_defect(&ParamField::frozen(frame.param_unit(a)), &ParamField::frozen(frame.param_unit(b)))
    }));
    out.push(Measurement::asserted("torsion-free", None, torsion, tol.geometry));
    let weingarten = max_abs(normal.iter().flat_map(|w| tangent.iter().map(move |x| frame.weingarten_residual(w, x))));
    out.push(Measurement::asserted("weingarten", Some("2.7"), weingarten, tol.geometry));
    let duality = max_abs(normal.iter().flat_map(|v| {
        tangent.iter().flat_map(move |x| {
            tangent
                .iter()
                .map(move |y| frame.inner(&frame.shape_operator(v, x), y) - frame.inner(&frame.h(x, y), v))
        })
    }));
    out.push(Measurement::asserted("shape-duality", Some("2.7"), duality, tol.algebraic));

    let sf = frame.second_fundamental();
    let rel = (sf.norm_sq - sf.coefficient_sum).abs() / sf.norm_sq.max(1.0);
    out.push(Measurement::asserted("h-norm-coefficients", Some("2.8a"), rel, tol.algebraic));
    out.push(Measurement::report("h-norm-squared", Some("2.8a"), sf.norm_sq, tol.algebraic));

    let grad = frame.gradient(differential);
    let duality = max_abs(
        tangent
            .iter()
            .map(|e| frame.inner(&grad.vector, e) - frame.derivative_along(differential, e)),
    );
    out.push(Measurement::asserted("gradient-duality", Some("2.8b"), duality, tol.algebraic));
    let norm = (grad.norm_sq - grad.frame_sum()).abs() / grad.norm_sq.max(1.0);
    out.push(Measurement::asserted("gradient-norm", Some("2.8c"), norm, tol.algebraic));

    let tangent_split = max_abs(
        tangent
            .iter()
            .map(|x| frame.norm(&(frame.apply_phi(x) - frame.p_of(x) - frame.q_of(x)))),
    );
    out.push(Measurement::asserted("phi-tangent-split", Some("2.8"), tangent_split, tol.slant));
    let normal_split = max_abs(
        normal
            .iter()
            .map(|v| frame.norm(&(frame.apply_phi(v) - frame.b_of(v) - frame.c_of(v)))),
    );
    out.push(Measurement::asserted("phi-normal-split", Some("2.8"), normal_split, tol.slant));
    out
}

fn angle_measurements(frame: &SubmanifoldFrame, name: &str, angle: &SlantAngle, basis: &[Vector], tol: &Tolerances) -> Vec<Measurement> {
    let key = |s: &str| format!("{s}-{name}");
    let cos_sq = angle.cos_sq;
    let mut out = vec![
        Measurement::report(&key("theta"), None, angle.theta, tol.agreement),
        Measurement::asserted(&key("slant-agreement"), None, angle.compressed_agreement(), tol.agreement),
    ];
    out.push(match angle.full_agreement() {
        Some(v) => Measurement::asserted(&key("slant-agreement-full"), None, v, tol.agreement),
        None => Measurement::report(&key("slant-agreement-full"), None, angle.full_spread(), tol.agreement)
            .with_note("full P angle varies over the distribution; spread reported"),
    });
    out.push(Measurement::report(&key("probe-spread"), None, angle.probe_spread(), tol.agreement));
    out.push(Measurement::asserted(
        &key("p-squared"),
        Some("2.9"),
        p_squared_residual(frame, basis, cos_sq),
        tol.slant,
    ));
    let (p_metric, q_metric) = metric_relations(frame, basis, cos_sq);
    out.push(Measurement::asserted(&key("p-metric"), Some("2.10"), p_metric, tol.slant));
    out.push(Measurement::asserted(&key("q-metric"), Some("2.11"), q_metric, tol.slant));
    let (bq, cq) = normal_relations(frame, basis, cos_sq);
    out.push(Measurement::asserted(&key("bq"), Some("2.12"), bq, tol.slant));
    out.push(Measurement::asserted(&key("cq"), Some("2.12"), cq, tol.slant));
    out
}

/// Largest component of `[X, Y]` outside the span of `basis` for frozen
/// generators `X, Y`.
fn involutivity(frame: &SubmanifoldFrame, generators: &[Vector], basis: &[Vector]) -> f64 {
    max_abs(generators.iter().flat_map(|x| {
        generators.iter().map(move |y| {
            let bracket = frame.lie_bracket(&ParamField::frozen(x.clone()), &ParamField::frozen(y.clone()));
            frame.norm(&(&bracket - crate::slant::project(frame, basis, &bracket)))
        })
    }))
}

fn slant_measurements(frame: &SubmanifoldFrame, dec: &BiSlantDecomposition, tol: &Tolerances) -> Vec<Measurement> {
    let mut out = angle_measurements(frame, "d1", &dec.theta1, &dec.d1, tol);
    out.extend(angle_measurements(frame, "d2", &dec.theta2, &dec.d2, tol));
    out.push(Measurement::report("proper", None, if dec.is_proper() { 1.0 } else { 0.0 }, 0.0));
    out.push(Measurement::asserted("decomposition", Some("3.1"), dec.decomposition_residual(frame), tol.slant));
    out.push(Measurement::asserted("phi-split-bislant", Some("3.2"), dec.phi_split_residual(frame), tol.slant));
    let (pp1, pp2) = dec.projected_p_squared(frame);
    out.push(Measurement::asserted("projected-p-squared-d1", Some("3.3"), pp1, tol.slant));
    out.push(Measurement::asserted("projected-p-squared-d2", Some("3.3"), pp2, tol.slant));
    out.push(Measurement::report("trace-defect", Some("3.3"), dec.trace_defect(frame), tol.slant));
    out.push(Measurement::asserted("nu-invariant", Some("3.3a"), dec.nu_invariance_defect(frame), tol.slant));
    let dim_gap = (dec.nu.len() as isize - dec.predicted_nu_dim(frame)).unsigned_abs() as f64;
    out.push(
        Measurement::asserted("nu-dimension", Some("3.3a"), dim_gap, tol.slant)
            .with_note(format!("dim nu = {}", dec.nu.len())),
    );
    out.push(Measurement::asserted("phi-cross", None, dec.phi_cross_defect, tol.slant));
    out.push(Measurement::report("qd-overlap", None, dec.qd_overlap, tol.slant));

    let lemma = lemma_residuals(frame, dec);
    out.push(Measurement::asserted("leaf-base", Some("3.4"), lemma.leaf_base, tol.algebraic));
    out.push(Measurement::asserted("leaf-fiber", Some("3.5"), lemma.leaf_fiber, tol.algebraic));
    out.push(Measurement::report("leaf-fiber-printed", Some("3.5"), lemma.leaf_fiber_printed, tol.algebraic));
    let fol = foliation_criteria(frame, dec);
    out.push(Measurement::report("base-foliation-criterion", Some("3.6"), fol.base_criterion, tol.algebraic));
    out.push(Measurement::report("base-foliation-geometric", Some("3.6"), fol.base_geometric, tol.algebraic));
    out.push(Measurement::report("fiber-foliation-criterion", Some("3.7"), fol.fiber_criterion, tol.algebraic));
    out.push(Measurement::report("fiber-foliation-geometric", Some("3.7"), fol.fiber_geometric, tol.algebraic));

    let gens = |basis: &[Vector]| basis.iter().map(|v| frame.coords_of(v)).collect::<Vec<_>>();
    let mut base = dec.d1.clone();
    base.push(frame.xi());
    out.push(Measurement::report("d1-involutive", None, involutivity(frame, &gens(&dec.d1), &dec.d1), tol.geometry));
    out.push(Measurement::report("d2-involutive", None, involutivity(frame, &gens(&dec.d2), &dec.d2), tol.geometry));
    out.push(Measurement::report("base-involutive", None, involutivity(frame, &gens(&base), &base), tol.geometry));
    out
}

fn fit_measurements(fit: &WarpedFit, index: usize, tol: &Tolerances) -> Vec<Measurement> {
    let s = &fit.samples[index];
    let mut out = vec![
        Measurement::asserted("fiber-factor", Some("4.1"), s.factor_residual, tol.fit)
            .with_note(format!("factor {:.12e}, predicted {:.12e}", s.factor, s.predicted)),
        Measurement::asserted("base-fiber-orthogonal", Some("4.1"), s.off_diagonal, tol.fit),
        Measurement::asserted("base-metric-fiber-independent", Some("4.1"), s.base_dependence, tol.fit),
        Measurement::report("fiber-conformality", Some("4.1"), s.conformality, tol.fit),
        Measurement::report("warp-trivial", Some("4.1"), if fit.trivial { 1.0 } else { 0.0 }, 0.0),
    ];
    if let Some(td) = s.time_dependence {
        out.push(Measurement::report("fiber-factor-time-dependence", Some("4.1"), td, tol.fit));
    }
    out
}

fn evaluate_claim(
    sc: &Scenario,
    claim: &CompiledClaim,
    frame: &SubmanifoldFrame,
    dec: Option<&BiSlantDecomposition>,
    log_warping: Option<&Vector>,
    p: &[f64],
) -> Result<ClaimValue, RunError> {
    let eval = |e: &crate::expr::CompiledExpr| e.eval(p).ok();
    let scale = match &claim.scale {
        Some(s) => match eval(s) {
            Some(v) => v,
            None => return Ok(ClaimValue::default()),
        },
        None => 1.0,
    };
    let field = |a: usize| frame.from_coords(&frame.param_unit(a)) * scale;
    let claimed = claim.claimed.as_ref().and_then(eval);
    let scalar = |computed: Option<f64>| ClaimValue {
        computed,
        deviation: computed.zip(claimed).map(|(c, w)| (c - w).abs()),
    };
    Ok(match claim.claim.quantity {
        ClaimQuantity::CosTheta1 => scalar(dec.map(|d| d.theta1.theta.cos())),
        ClaimQuantity::CosTheta2 => scalar(dec.map(|d| d.theta2.theta.cos())),
        ClaimQuantity::PhiPair => {
            let (x, y) = (field(claim.args[0]), field(claim.args[1]));
            scalar(Some(frame.inner(&frame.apply_phi(&x), &y)))
        }
        ClaimQuantity::Metric => {
            let (x, y) = (field(claim.args[0]), field(claim.args[1]));
            scalar(Some(frame.inner(&x, &y)))
        }
        ClaimQuantity::Component => scalar(Some(frame.jet.point[claim.args[0]])),
        ClaimQuantity::PhiImage => {
            let image = frame.apply_phi(&field(claim.args[0]));
            let want: Option<Vec<f64>> = claim
                .claimed_vector
                .as_ref()
                .and_then(|v| v.iter().map(eval).collect());
            ClaimValue {
                computed: Some(frame.norm(&image)),
                deviation: want.map(|w| max_abs(w.iter().zip(image.iter()).map(|(a, b)| a - b))),
            }
        }
        ClaimQuantity::WarpingFactor => {
            let Some(spec) = &sc.warped else {
                return Ok(ClaimValue::default());
            };
            let mut q = p.to_vec();
            if let Some(t) = spec.time_param {
                q[t] = spec.fit_t;
            }
            let fit_frame = SubmanifoldFrame::build(&sc.immersion, &sc.structure, &q)
                .map_err(|e: GeometryError| RunError::numerics(None, e))?;
            let trace: f64 = spec.fiber.iter().map(|&k| fit_frame.induced[(k, k)]).sum();
            let factor = trace / spec.fiber.len() as f64;
            let claimed = claim.claimed.as_ref().and_then(|e| e.eval(&q).ok());
            ClaimValue {
                computed: Some(factor),
                deviation: claimed.map(|w| (factor - w).abs() / w.abs().max(f64::MIN_POSITIVE)),
            }
        }
        ClaimQuantity::XiLogWarping => scalar(log_warping.map(|d| frame.derivative_along(d, &frame.xi()))),
    })
}

fn claim_discrepancies(claims: &[CompiledClaim], outcomes: &[SampleOutcome]) -> Vec<Discrepancy> {
    claims
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut worst: Option<(usize, f64)> = None;
            for (i, o) in outcomes.iter().enumerate() {
                let d = o.claims[k].deviation.unwrap_or(f64::NAN);
                let key = if d.is_nan() { f64::INFINITY } else { d };
                if worst.map_or(true, |(_, w)| key > w) {
                    worst = Some((i, key));
                }
            }
            let worst_sample = worst.map(|(i, _)| i);
            let at = worst_sample.map(|i| outcomes[i].claims[k]);
            let claimed = match (&c.claim.claimed, &c.claim.claimed_vector) {
                (Some(s), _) => Some(s.clone()),
                (None, Some(v)) => Some(format!("[{}]", v.join(", "))),
                _ => None,
            };
            Discrepancy {
                label: c.claim.label.clone(),
                eq_ref: c.claim.eq_ref.clone(),
                quantity: serde_json::to_value(c.claim.quantity)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
                claimed,
                max_deviation: at.and_then(|a| a.deviation),
                worst_sample,
                computed: at.and_then(|a| a.computed),
                note: c.claim.note.clone(),
            }
        })
        .collect()
}

/// The fiber block of the induced metric is compared with its value on the
/// fit slice; any `t`-dependence is logged.
fn time_dependence(fit: &WarpedFit, fit_t: f64) -> Discrepancy {
    let mut worst: Option<(usize, f64)> = None;
    for (i, s) in fit.samples.iter().enumerate() {
        let d = s.time_dependence.unwrap_or(0.0);
        if worst.map_or(true, |(_, w)| d > w) {
            worst = Some((i, d));
        }
    }
    let worst_sample = worst.map(|(i, _)| i);
    Discrepancy {
        label: "fiber-factor-time-dependence".into(),
        eq_ref: Some("4.1".into()),
        quantity: "warping-factor".into(),
        claimed: Some("fiber factor independent of t".into()),
        max_deviation: worst.map(|(_, d)| d),
        worst_sample,
        computed: worst_sample.and_then(|i| fit.samples[i].time_ratio),
        note: Some(format!(
            "relative change of the fiber trace factor away from t = {fit_t}; computed is the trace ratio live / fit slice"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_builtin(name: &str, suites: &[Suite]) -> VerificationReport {
        let sc = Scenario::load(name).unwrap();
        run(
            &sc,
            &RunOptions {
                suites: suites.to_vec(),
                ..RunOptions::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn corrupted_metric_gates_downstream_suites() {
        let r = run_builtin("corrupted", &Suite::ALL);
        assert_eq!(r.suites[0].status, Status::Fail);
        for s in &r.suites[1..] {
            assert_eq!(s.status, Status::Skipped, "{}", s.name);
            assert!(s.reason.as_deref().unwrap().contains("Kenmotsu"));
        }
        assert!(r.failed());
    }

    #[test]
    fn product_passes() {
        let r = run_builtin("product", &Suite::ALL);
        let failing: Vec<_> = r
            .checks()
            .filter(|c| c.status == Status::Fail)
            .map(|c| format!("{}/{} {:?}", c.suite, c.check, c.max_residual))
            .collect();
        assert!(failing.is_empty(), "{failing:?}");
        assert_eq!(r.check("warped", "warp-trivial").unwrap().max_residual, Some(1.0));
    }

    #[test]
    fn axiom_samples_are_seeded() {
        let a = axiom_samples(5, 3, 9);
        let b = axiom_samples(5, 3, 9);
        assert_eq!(a[2].y, b[2].y);
        assert_ne!(a[0].point, axiom_samples(5, 3, 10)[0].point);
        assert!(a.iter().all(|s| s.point.iter().all(|c| c.abs() <= 1.0)));
    }

    #[test]
    fn bad_tol_scale_is_a_scenario_error() {
        let sc = Scenario::load("product").unwrap();
        let err = run(
            &sc,
            &RunOptions {
                tol_scale: -1.0,
                ..RunOptions::default()
            },
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
