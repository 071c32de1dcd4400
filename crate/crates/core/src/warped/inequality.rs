//! The adapted orthonormal frame of a proper bi-slant warped product, the
//! lower bound for `||h||^2` and its equality-case diagnostics.

use serde::Serialize;

use crate::check::{max_abs, Measurement, Tolerances};
use crate::numerics::{span_basis, Vector};
use crate::slant::{project, BiSlantDecomposition};
use crate::submanifold::SubmanifoldFrame;

use super::WarpedError;

/// Residual under which a candidate generator is dependent on the frame so far.
const DEPENDENCE_TOL: f64 = 1e-6;

/// Frame `{e_r, sec(theta1) P1 e_r, xi}` of `D1 + xi`, `{e*_r, sec(theta2) P2 e*_r}`
/// of `D2`, the matching normal frames of `QD1`, `QD2`, and `nu`.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    /// `D1` part followed by `xi`.
    pub base: Vec<Vector>,
    pub fiber: Vec<Vector>,
    /// First half of the `D1` part (the `e_r`).
    pub base_seeds: Vec<Vector>,
    pub qd1: Vec<Vector>,
    pub qd2: Vec<Vector>,
    pub nu: Vec<Vector>,
    /// `max |g(e_i, e_j) - delta_ij|` over the whole tangent and normal frame.
    pub orthonormality: f64,
}

/// Pairs `(e, sec(theta) P e)` spanning `basis`, with `e` picked greedily
/// from `basis`.
fn paired_frame(
    frame: &SubmanifoldFrame,
    name: &str,
    basis: &[Vector],
    sec: f64,
    p_part: impl Fn(&Vector) -> Vector,
) -> Result<Vec<Vector>, WarpedError> {
    let ip = |u: &Vector, v: &Vector| frame.inner(u, v);
    let mut seeds = Vec::new();
    let mut span: Vec<Vector> = Vec::new();
    for v in basis {
        if span.len() >= basis.len() {
            break;
        }
        let onb = span_basis(&span, ip, DEPENDENCE_TOL);
        let w = v - project(frame, &onb, v);
        let residual = frame.norm(&w);
        if residual <= DEPENDENCE_TOL {
            continue;
        }
        let e = w / residual;
        let partner = p_part(&e) * sec;
        span.push(e.clone());
        span.push(partner);
        seeds.push(e);
    }
    if span.len() != basis.len() {
        return Err(WarpedError::AdaptedFrame {
            name: name.into(),
            spanned: span.len(),
            dim: basis.len(),
        });
    }
    Ok(seeds)
}

impl AdaptedFrame {
    pub fn build(frame: &SubmanifoldFrame, dec: &BiSlantDecomposition) -> Result<Self, WarpedError> {
        let (t1, t2) = (dec.theta1.theta, dec.theta2.theta);
        let seeds1 = paired_frame(frame, "D1", &dec.d1, 1.0 / t1.cos(), |x| dec.p1(frame, x))?;
        let seeds2 = paired_frame(frame, "D2", &dec.d2, 1.0 / t2.cos(), |x| dec.p2(frame, x))?;

        let mut base = seeds1.clone();
        base.extend(seeds1.iter().map(|e| dec.p1(frame, e) / t1.cos()));
        base.push(frame.xi());
        let mut fiber = seeds2.clone();
        fiber.extend(seeds2.iter().map(|e| dec.p2(frame, e) / t2.cos()));

        let (csc1, csc2) = (1.0 / t1.sin(), 1.0 / t2.sin());
        let mut qd1: Vec<Vector> = seeds1.iter().map(|e| frame.q_of(e) * csc1).collect();
        qd1.extend(seeds1.iter().map(|e| frame.q_of(&dec.p1(frame, e)) * (csc1 / t1.cos())));
        let mut qd2: Vec<Vector> = seeds2.iter().map(|e| frame.q_of(e) * csc2).collect();
        qd2.extend(seeds2.iter().map(|e| frame.q_of(&dec.p2(frame, e)) * (csc2 / t2.cos())));

        let all: Vec<&Vector> = base
            .iter()
            .chain(&fiber)
            .chain(&qd1)
            .chain(&qd2)
            .chain(&dec.nu)
            .collect();
        let mut orthonormality = if all.len() == frame.ambient_dim() { 0.0 } else { f64::INFINITY };
        for (i, u) in all.iter().enumerate() {
            for (j, v) in all.iter().enumerate().skip(i) {
                let delta = if i == j { 1.0 } else { 0.0 };
                orthonormality = f64::max(orthonormality, (frame.inner(u, v) - delta).abs());
            }
        }
        Ok(Self {
            base,
            fiber,
            base_seeds: seeds1,
            qd1,
            qd2,
            nu: dec.nu.clone(),
            orthonormality,
        })
    }
}

/// Both sides of the lower bound and the block sums of `||h||^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityValues {
    pub norm_sq: f64,
    pub bound: f64,
    /// `2 q csc^2(theta1) (1 + sec^2(theta1) cos^2(theta2)) sum (P1 e_r ln f)^2`.
    pub bound_before_substitution: f64,
    /// `h(D1+xi, D1+xi)` against `QD1`, `QD2`, `nu`, then `h(D2, D2)` against the same.
    pub blocks: [f64; 6],
    /// Mixed block `2 sum |g(h(e_i, e*_j), e_r)|^2` over the whole normal frame.
    pub mixed: f64,
}

impl InequalityValues {
    pub fn resum(&self) -> f64 {
        self.blocks.iter().sum::<f64>() + self.mixed
    }

    /// `bound - norm_sq`, positive when the inequality is violated.
    pub fn violation(&self) -> f64 {
        self.bound - self.norm_sq
    }
}

fn block(frame: &SubmanifoldFrame, left: &[Vector], right: &[Vector], normals: &[Vector]) -> f64 {
    let mut sum = 0.0;
    for x in left {
        for y in right {
            let hxy = frame.h(x, y);
            for n in normals {
                sum += frame.inner(&hxy, n).powi(2);
            }
        }
    }
    sum
}

pub fn inequality_values(
    frame: &SubmanifoldFrame,
    dec: &BiSlantDecomposition,
    adapted: &AdaptedFrame,
    log_warping: &Vector,
) -> InequalityValues {
    let norm_sq = frame.second_fundamental().norm_sq;
    let normals: Vec<Vector> = adapted
        .qd1
        .iter()
        .chain(&adapted.qd2)
        .chain(&adapted.nu)
        .cloned()
        .collect();
    let blocks = [
        block(frame, &adapted.base, &adapted.base, &adapted.qd1),
        block(frame, &adapted.base, &adapted.base, &adapted.qd2),
        block(frame, &adapted.base, &adapted.base, &adapted.nu),
        block(frame, &adapted.fiber, &adapted.fiber, &adapted.qd1),
        block(frame, &adapted.fiber, &adapted.fiber, &adapted.qd2),
        block(frame, &adapted.fiber, &adapted.fiber, &adapted.nu),
    ];
    let mixed = 2.0 * block(frame, &adapted.base, &adapted.fiber, &normals);

    let along = |x: &Vector| frame.derivative_along(log_warping, x);
    let (c1, c2) = (dec.theta1.cos_sq, dec.theta2.cos_sq);
    let csc1_sq = 1.0 / dec.theta1.sin_sq();
    let q = adapted.fiber.len() as f64 / 2.0;
    let gradient_sq: f64 = adapted.base.iter().map(|e| along(e).powi(2)).sum();
    let seed_sq: f64 = adapted.base_seeds.iter().map(|e| along(e).powi(2)).sum();
    let bound = 2.0 * q * csc1_sq * (c1 + c2) * (gradient_sq - 1.0 - seed_sq);
    let p1_sq: f64 = adapted
        .base_seeds
        .iter()
        .map(|e| along(&dec.p1(frame, e)).powi(2))
        .sum();
    let bound_before_substitution = 2.0 * q * csc1_sq * (1.0 + c2 / c1) * p1_sq;
    InequalityValues {
        norm_sq,
        bound,
        bound_before_substitution,
        blocks,
        mixed,
    }
}

/// Largest `|g(h(x, y), n)|` over the given families.
fn max_component(frame: &SubmanifoldFrame, vectors: &[Vector], normals: &[Vector]) -> f64 {
    max_abs(vectors.iter().flat_map(|x| {
        vectors
            .iter()
            .flat_map(move |y| normals.iter().map(move |n| frame.inner(&frame.h(x, y), n)))
    }))
}

/// The inequality, its block decomposition and the equality diagnostics.
/// `mixed_geodesic` gates the assertion of the hypothesis-dependent parts.
pub fn inequality_measurements(
    frame: &SubmanifoldFrame,
    dec: &BiSlantDecomposition,
    log_warping: &Vector,
    mixed_geodesic: bool,
    tol: &Tolerances,
) -> Vec<Measurement> {
    const CHECKS: [(&str, &str); 14] = [
        ("adapted-frame", "6.1"),
        ("norm-resum", "6.2"),
        ("block-resum", "6.3"),
        ("mixed-block", "6.3"),
        ("lower-bound", "6.1"),
        ("base-normal-nu", "6.11"),
        ("base-normal-qd1", "6.12"),
        ("base-normal-qd2", "6.13"),
        ("base-totally-geodesic", "6.14"),
        ("fiber-normal-nu", "6.15"),
        ("fiber-normal-qd2", "6.16"),
        ("fiber-outside-qd1", "6.17"),
        ("fiber-normal-polarized", "6.18"),
        ("fiber-normal-swapped", "6.19"),
    ];
    let skip_all = |reason: String| {
        let mut out: Vec<Measurement> = CHECKS
            .iter()
            .map(|(check, eq)| Measurement::skipped(check, Some(eq), tol.frame, reason.clone()))
            .collect();
        out.push(Measurement::skipped("fiber-normal-reduced", Some("6.20"), tol.algebraic, reason));
        out
    };
    if !dec.is_proper() {
        return skip_all(format!(
            "not proper: theta1 = {}, theta2 = {}",
            dec.theta1.theta, dec.theta2.theta
        ));
    }
    let adapted = match AdaptedFrame::build(frame, dec) {
        Ok(a) => a,
        Err(e) => return skip_all(e.to_string()),
    };
    let values = inequality_values(frame, dec, &adapted, log_warping);
    let relative = |x: f64| if values.norm_sq > 1e-12 { x.abs() / values.norm_sq } else { x.abs() };
    let full_resum = {
        let normals: Vec<Vector> = adapted
            .qd1
            .iter()
            .chain(&adapted.qd2)
            .chain(&adapted.nu)
            .cloned()
            .collect();
        let mut tangent = adapted.base.clone();
        tangent.extend(adapted.fiber.iter().cloned());
        block(frame, &tangent, &tangent, &normals)
    };

    let mut out = vec![
        Measurement::asserted("adapted-frame", Some("6.1"), adapted.orthonormality, tol.frame),
        Measurement::asserted(
            "norm-resum",
            Some("6.2"),
            relative(full_resum - values.norm_sq),
            tol.frame,
        ),
        Measurement::asserted("block-resum", Some("6.3"), relative(values.resum() - values.norm_sq), tol.frame),
        Measurement::gated("mixed-block", Some("6.3"), relative(values.mixed), tol.frame, mixed_geodesic)
            .with_note("dropped under the mixed totally geodesic hypothesis"),
        Measurement::gated(
            "lower-bound",
            Some("6.1"),
            values.violation().max(0.0),
            tol.branch,
            mixed_geodesic,
        )
        .with_note(format!(
            "||h||^2 = {:e}, bound = {:e}, bound before substitution = {:e}",
            values.norm_sq, values.bound, values.bound_before_substitution
        )),
    ];

    let report = |check: &str, eq: &str, value: f64| Measurement::report(check, Some(eq), value, tol.algebraic);
    out.push(report("base-normal-nu", "6.11", max_component(frame, &adapted.base, &adapted.nu)));
    out.push(report("base-normal-qd1", "6.12", max_component(frame, &adapted.base, &adapted.qd1)));
    out.push(report("base-normal-qd2", "6.13", max_component(frame, &adapted.base, &adapted.qd2)));
    out.push(report(
        "base-totally-geodesic",
        "6.14",
        max_abs(
            adapted
                .base
                .iter()
                .flat_map(|x| adapted.base.iter().map(move |y| frame.norm(&frame.h(x, y)))),
        ),
    ));
    out.push(report("fiber-normal-nu", "6.15", max_component(frame, &adapted.fiber, &adapted.nu)));
    out.push(report("fiber-normal-qd2", "6.16", max_component(frame, &adapted.fiber, &adapted.qd2)));
    let qd1_onb = span_basis(&adapted.qd1, |u: &Vector, v: &Vector| frame.inner(u, v), DEPENDENCE_TOL);
    out.push(report(
        "fiber-outside-qd1",
        "6.17",
        max_abs(adapted.fiber.iter().flat_map(|z| {
            let qd1_onb = &qd1_onb;
            adapted.fiber.iter().map(move |w| {
                let hzw = frame.h(z, w);
                frame.norm(&(&hzw - project(frame, qd1_onb, &hzw)))
            })
        })),
    ));

    let along = |x: &Vector| frame.derivative_along(log_warping, x);
    let slot = |check: &str, eq: &str, rhs: &dyn Fn(&Vector, &Vector, &Vector) -> f64| {
        let fiber = &adapted.fiber;
        let value = max_abs(adapted.base.iter().flat_map(|x| {
            fiber.iter().flat_map(move |z| {
                fiber
                    .iter()
                    .map(move |w| frame.inner(&frame.h(z, w), &frame.q_of(x)) - rhs(x, z, w))
            })
        }));
        report(check, eq, value)
    };
    let shifted = |x: &Vector| along(x) - frame.eta(x);
    out.push(slot("fiber-normal-polarized", "6.18", &|x, z, w| {
        along(&dec.p1(frame, x)) * frame.inner(z, w) + shifted(x) * frame.inner(z, &dec.p2(frame, w))
    }));
    out.push(slot("fiber-normal-swapped", "6.19", &|x, z, w| {
        along(&dec.p1(frame, x)) * frame.inner(z, w) + shifted(x) * frame.inner(w, &dec.p2(frame, z))
    }));
    out.push(slot("fiber-normal-reduced", "6.20", &|x, z, w| {
        along(&dec.p1(frame, x)) * frame.inner(z, w)
    }));
    out
}
