//! Pointwise identities of warped bi-slant submanifolds, evaluated on the
//! orthonormal frames of `D1 + xi` (slots `X`, `Y`) and `D2` (slots `Z`, `W`).

use std::f64::consts::FRAC_PI_2;

use crate::check::{max_abs, Measurement, Tolerances};
use crate::numerics::Vector;
use crate::slant::{frozen_section, BiSlantDecomposition};
use crate::submanifold::SubmanifoldFrame;

/// Everything the identities need at one sample.
pub struct IdentityContext<'a> {
    pub frame: &'a SubmanifoldFrame,
    pub dec: &'a BiSlantDecomposition,
    /// Parameter differential of `ln f`.
    pub log_warping: Vector,
    /// Parameter differential of `mu`.
    pub mu: Option<Vector>,
    /// Parameter differential of the second slant function.
    pub theta2: Vector,
}

/// Derived quantities for one base-slot vector.
struct BaseSlot {
    x: Vector,
    eta: f64,
    lnf: f64,
    /// `(X ln f) - eta(X)`.
    shifted: f64,
    dtheta2: f64,
    p1: Vector,
    p1_lnf: f64,
    q: Vector,
    qp1: Vector,
}

/// Derived quantities for one fiber-slot vector.
struct FiberSlot {
    z: Vector,
    p2: Vector,
    q: Vector,
    qp2: Vector,
}

impl IdentityContext<'_> {
    fn along(&self, d: &Vector, x: &Vector) -> f64 {
        self.frame.derivative_along(d, x)
    }

    fn base_slots(&self) -> Vec<BaseSlot> {
        let f = self.frame;
        self.dec
            .base_frame(f)
            .into_iter()
            .map(|x| {
                let eta = f.eta(&x);
                let lnf = self.along(&self.log_warping, &x);
                let p1 = self.dec.p1(f, &x);
                BaseSlot {
                    eta,
                    lnf,
                    shifted: lnf - eta,
                    dtheta2: self.along(&self.theta2, &x),
                    p1_lnf: self.along(&self.log_warping, &p1),
                    q: f.q_of(&x),
                    qp1: f.q_of(&p1),
                    p1,
                    x,
                }
            })
            .collect()
    }

    fn fiber_slots(&self) -> Vec<FiberSlot> {
        let f = self.frame;
        self.dec
            .d2
            .iter()
            .map(|z| {
                let p2 = self.dec.p2(f, z);
                FiberSlot {
                    z: z.clone(),
                    q: f.q_of(z),
                    qp2: f.q_of(&p2),
                    p2,
                }
            })
            .collect()
    }
}

/// `max ||h(X, Z)||` over `X` in `D1 + xi`, `Z` in `D2`.
pub fn mixed_mass(frame: &SubmanifoldFrame, dec: &BiSlantDecomposition) -> f64 {
    let base = dec.base_frame(frame);
    max_abs(
        base.iter()
            .flat_map(|x| dec.d2.iter().map(move |z| (x, z)))
            .map(|(x, z)| frame.norm(&frame.h(x, z))),
    )
}

/// All identity measurements at one sample.
pub fn identity_measurements(ctx: &IdentityContext<'_>, tol: &Tolerances) -> Vec<Measurement> {
    let f = ctx.frame;
    let g = |a: &Vector, b: &Vector| f.inner(a, b);
    let h = |a: &Vector, b: &Vector| f.h(a, b);
    let base_slots = ctx.base_slots();
    let fiber_slots = ctx.fiber_slots();
    let (base, fiber) = (&base_slots, &fiber_slots);
    let c1 = ctx.dec.theta1.cos_sq;
    let c2 = ctx.dec.theta2.cos_sq;
    let theta2 = ctx.dec.theta2.theta;
    let (sin2, tan2) = (theta2.sin(), theta2.tan());
    let alg = tol.algebraic;
    let der = tol.derivative;

    // Residual of `lhs = rhs` maximized over X in the base and Z, W in the fiber.
    let over_xzw = |rel: &dyn Fn(&BaseSlot, &FiberSlot, &FiberSlot) -> (f64, f64)| {
        max_abs(base.iter().flat_map(|x| {
            fiber.iter().flat_map(move |z| {
                fiber.iter().map(move |w| {
                    let (l, r) = rel(x, z, w);
                    l - r
                })
            })
        }))
    };

    let mut out = Vec::new();

    // Connection of a warped product: nabla_X U = nabla_U X = (X ln f) U.
    let connection = max_abs(base.iter().flat_map(|x| {
        fiber.iter().flat_map(move |u| {
            let along_x = f.induced_derivative(&x.x, &frozen_section(f, &u.z));
            let along_u = f.induced_derivative(&u.z, &frozen_section(f, &x.x));
            let want = &u.z * x.lnf;
            [f.norm(&(along_x - &want)), f.norm(&(along_u - &want))]
        })
    }));
    out.push(Measurement::asserted("warp-connection", Some("4.2"), connection, tol.geometry));

    let nabla_xz = |x: &BaseSlot, z: &FiberSlot, w: &FiberSlot| {
        g(&f.ambient_derivative(&x.x, &frozen_section(f, &z.z)), &w.z)
    };
    out.push(Measurement::asserted(
        "fiber-derivative-along-base",
        Some("4.5"),
        over_xzw(&|x, z, w| (nabla_xz(x, z, w), x.lnf * g(&z.z, &w.z))),
        alg,
    ));
    out.push(Measurement::asserted(
        "fiber-derivative-expanded",
        Some("4.6"),
        over_xzw(&|x, z, w| {
            let gzw = g(&z.z, &w.z);
            let rhs = x.lnf * g(&z.p2, &w.p2)
                + g(&h(&x.x, &z.p2), &w.q)
                + sin2 * sin2 * x.lnf * gzw
                + sin2 * x.dtheta2 * gzw
                + g(&h(&x.x, &w.z), &z.qp2);
            (nabla_xz(x, z, w), rhs)
        }),
        der,
    ));
    out.push(Measurement::asserted(
        "fiber-derivative-reduced",
        Some("4.7"),
        over_xzw(&|x, z, w| {
            let gzw = g(&z.z, &w.z);
            let rhs = c2 * x.lnf * gzw
                + g(&h(&x.x, &z.p2), &w.q)
                + sin2 * sin2 * x.lnf * gzw
                + sin2 * x.dtheta2 * gzw
                + g(&h(&x.x, &w.z), &z.qp2);
            (x.lnf * gzw, rhs)
        }),
        der,
    ));
    let twisted = |x: &BaseSlot, z: &FiberSlot, w: &FiberSlot| {
        g(&h(&x.x, &w.z), &z.qp2) - g(&h(&x.x, &z.p2), &w.q)
    };
    out.push(Measurement::asserted(
        "slant-derivative-twisted",
        Some("4.3"),
        over_xzw(&|x, z, w| (twisted(x, z, w), sin2 * x.dtheta2 * g(&z.z, &w.z))),
        der,
    ));
    let antisym = |x: &BaseSlot, z: &FiberSlot, w: &FiberSlot| {
        g(&h(&x.x, &z.z), &w.q) - g(&h(&x.x, &w.z), &z.q)
    };
    out.push(Measurement::asserted(
        "slant-derivative-antisymmetric",
        Some("4.4"),
        over_xzw(&|x, z, w| (antisym(x, z, w), tan2 * x.dtheta2 * g(&z.p2, &w.z))),
        der,
    ));
    out.push(Measurement::asserted(
        "warping-twisted",
        Some("4.8"),
        over_xzw(&|x, z, w| (twisted(x, z, w), 2.0 * c2 * x.shifted * g(&z.z, &w.z))),
        alg,
    ));
    out.push(Measurement::asserted(
        "mixed-normal-z",
        Some("4.9"),
        over_xzw(&|x, z, w| {
            let rhs = -x.p1_lnf * g(&z.z, &w.z) + g(&h(&z.z, &w.z), &x.q) + x.shifted * g(&z.p2, &w.z);
            (g(&h(&x.x, &z.z), &w.q), rhs)
        }),
        alg,
    ));
    out.push(Measurement::asserted(
        "mixed-normal-w",
        Some("4.10"),
        over_xzw(&|x, z, w| {
            let rhs = -x.p1_lnf * g(&w.z, &z.z) + g(&h(&z.z, &w.z), &x.q) + x.shifted * g(&w.p2, &z.z);
            (g(&h(&x.x, &w.z), &z.q), rhs)
        }),
        alg,
    ));
    out.push(Measurement::asserted(
        "warping-antisymmetric",
        Some("4.11"),
        over_xzw(&|x, z, w| (antisym(x, z, w), 2.0 * x.shifted * g(&z.p2, &w.z))),
        alg,
    ));
    out.push(Measurement::asserted(
        "warping-slant-balance",
        Some("4.12"),
        over_xzw(&|x, z, w| {
            let gzw = g(&z.z, &w.z);
            (2.0 * c2 * x.shifted * gzw, -(2.0 * theta2).sin() * x.dtheta2 * gzw)
        }),
        der,
    ));
    for (check, pick) in [("existence-combination", false), ("existence-combination-xi", true)] {
        let value = max_abs(
            base.iter()
                .filter(|x| (x.eta.abs() > 0.5) == pick)
                .map(|x| x.shifted + tan2 * x.dtheta2),
        );
        out.push(Measurement::report(check, None, value, der));
    }

    // Mixed totally geodesic hypothesis and what it implies.
    let mass = mixed_mass(f, ctx.dec);
    let hypothesis = mass <= tol.hypothesis;
    out.push(
        Measurement::report("mixed-h-mass", None, mass, tol.hypothesis).with_note(if hypothesis {
            "mixed totally geodesic"
        } else {
            "not mixed totally geodesic"
        }),
    );
    let branch_anti = (theta2 - FRAC_PI_2).abs();
    let branch_shift = max_abs(base.iter().map(|x| x.shifted));
    out.push(
        Measurement::gated("mixed-geodesic-branch", None, branch_anti.min(branch_shift), tol.branch, hypothesis)
            .with_note(format!("|theta2 - pi/2| = {branch_anti:e}, max |X ln f - eta(X)| = {branch_shift:e}")),
    );
    let xi_lnf = base.iter().find(|x| x.eta.abs() > 0.5).map(|x| x.lnf).unwrap_or(f64::NAN);
    out.push(
        Measurement::gated("xi-log-warping", None, (xi_lnf - 1.0).abs(), tol.branch, hypothesis)
            .with_note(format!("xi(ln f) = {xi_lnf}")),
    );

    out.push(Measurement::asserted(
        "base-normal-symmetry",
        Some("4.13"),
        max_abs(base.iter().flat_map(|x| {
            base.iter().flat_map(move |y| {
                fiber
                    .iter()
                    .map(move |z| g(&h(&x.x, &y.x), &z.q) - g(&h(&x.x, &z.z), &y.q))
            })
        })),
        alg,
    ));
    let rhs_414 = |x: &BaseSlot, z: &Vector, w: &Vector| {
        x.p1_lnf * g(z, w) + x.shifted * g(z, &ctx.dec.p2(f, w))
    };
    out.push(Measurement::asserted(
        "fiber-normal-base",
        Some("4.14"),
        over_xzw(&|x, z, w| {
            (g(&h(&z.z, &w.z), &x.q) - g(&h(&x.x, &z.z), &w.q), rhs_414(x, &z.z, &w.z))
        }),
        alg,
    ));
    let rhs_415 = |x: &BaseSlot, z: &FiberSlot, w: &FiberSlot| {
        x.p1_lnf * g(&z.z, &w.p2) - c1 * x.shifted * g(&z.z, &w.z)
    };
    out.push(Measurement::asserted(
        "fiber-normal-base-p1",
        Some("4.15"),
        over_xzw(&|x, z, w| {
            (g(&h(&z.z, &w.z), &x.qp1) - g(&h(&x.p1, &z.z), &w.q), rhs_415(x, z, w))
        }),
        alg,
    ));
    let rhs_416 = |x: &BaseSlot, z: &FiberSlot, w: &FiberSlot| {
        x.p1_lnf * g(&z.z, &w.p2) - c2 * x.shifted * g(&z.z, &w.z)
    };
    out.push(Measurement::asserted(
        "fiber-normal-base-p2",
        Some("4.16"),
        over_xzw(&|x, z, w| {
            (g(&h(&z.z, &w.p2), &x.q) - g(&h(&x.x, &z.z), &w.qp2), rhs_416(x, z, w))
        }),
        alg,
    ));
    out.push(Measurement::asserted(
        "fiber-normal-difference",
        Some("4.17"),
        over_xzw(&|x, z, w| {
            let lhs = g(&h(&z.z, &w.z), &x.qp1) - g(&h(&x.p1, &z.z), &w.q) + g(&h(&x.x, &z.z), &w.qp2)
                - g(&h(&z.z, &w.p2), &x.q);
            (lhs, (c2 - c1) * x.shifted * g(&z.z, &w.z))
        }),
        alg,
    ));

    // The P1 and P2 substitutions applied to the right side of the base form.
    let p1_slot = |x: &BaseSlot| {
        let x2 = &x.p1;
        let lnf = ctx.along(&ctx.log_warping, x2);
        let p1p1 = ctx.dec.p1(f, x2);
        (ctx.along(&ctx.log_warping, &p1p1), lnf - f.eta(x2))
    };
    out.push(Measurement::asserted(
        "substitution-p1",
        Some("4.15"),
        over_xzw(&|x, z, w| {
            let (p1p1_lnf, shifted) = p1_slot(x);
            let substituted = p1p1_lnf * g(&z.z, &w.z) + shifted * g(&z.z, &w.p2);
            (substituted, rhs_415(x, z, w))
        }),
        alg,
    ));
    out.push(Measurement::asserted(
        "substitution-p2",
        Some("4.16"),
        over_xzw(&|x, z, w| (rhs_414(x, &z.z, &w.p2), rhs_416(x, z, w))),
        alg,
    ));

    out.push(Measurement::asserted(
        "base-normal-expanded",
        Some("4.18"),
        max_abs(base.iter().flat_map(|x| {
            base.iter().flat_map(move |y| {
                fiber.iter().map(move |z| {
                    let lhs = g(&h(&x.x, &y.x), &z.q);
                    let rhs = x.lnf * g(&y.p1, &z.z) + g(&h(&x.x, &z.z), &y.q) - y.eta * g(&x.p1, &z.z)
                        + x.lnf * g(&y.x, &z.p2);
                    lhs - rhs
                })
            })
        })),
        alg,
    ));
    // Derivatives of normal or cross-orthogonal fields are moved onto the
    // tangent slot: g(nabla_Z QW, X) = -g(QW, nabla_Z X),
    // g(nabla_Z P2W, X) = -g(P2W, nabla_Z X) and g(nabla_Z P1X, W) = -g(P1X, nabla_Z W).
    // The printed form carries the opposite sign on the P2W term; it is
    // reported next to the derived one.
    let fiber_normal = |x: &BaseSlot, z: &FiberSlot, w: &FiberSlot, p2_sign: f64| {
        let nz_x = f.ambient_derivative(&z.z, &frozen_section(f, &x.x));
        let nz_w = f.ambient_derivative(&z.z, &frozen_section(f, &w.z));
        let rhs = p2_sign * g(&nz_x, &w.p2) + g(&w.q, &nz_x) + x.eta * g(&f.apply_phi(&z.z), &w.z)
            - g(&x.p1, &nz_w);
        (g(&h(&z.z, &w.z), &x.q), rhs)
    };
    out.push(Measurement::asserted(
        "fiber-normal-expanded",
        Some("4.19"),
        over_xzw(&|x, z, w| fiber_normal(x, z, w, 1.0)),
        alg,
    ));
    out.push(
        Measurement::report(
            "fiber-normal-expanded-printed",
            Some("4.19"),
            over_xzw(&|x, z, w| fiber_normal(x, z, w, -1.0)),
            alg,
        )
        .with_note("sign of the g(nabla_Z X, P2 W) term as printed"),
    );
    out.push(Measurement::asserted(
        "fiber-normal-p1-p2",
        Some("4.20"),
        over_xzw(&|x, z, w| {
            let lhs = g(&h(&z.z, &w.p2), &x.qp1) - g(&h(&x.p1, &z.z), &w.qp2);
            let rhs = -c2 * x.p1_lnf * g(&z.z, &w.z) - c1 * x.shifted * g(&z.z, &w.p2);
            (lhs, rhs)
        }),
        alg,
    ));
    out.push(Measurement::asserted(
        "fiber-normal-p2z",
        Some("4.21"),
        over_xzw(&|x, z, w| {
            let lhs = g(&h(&z.p2, &w.z), &x.q) - g(&h(&x.x, &z.p2), &w.q);
            let rhs = x.p1_lnf * g(&z.p2, &w.z) + c2 * x.shifted * g(&z.z, &w.z);
            (lhs, rhs)
        }),
        alg,
    ));
    out.push(Measurement::asserted(
        "fiber-normal-p2z-p1",
        Some("4.22"),
        over_xzw(&|x, z, w| {
            let lhs = g(&h(&z.p2, &w.z), &x.qp1) - g(&h(&x.p1, &z.p2), &w.q);
            let rhs = c2 * x.p1_lnf * g(&z.z, &w.z) - c1 * x.shifted * g(&z.p2, &w.z);
            (lhs, rhs)
        }),
        alg,
    ));
    out.push(Measurement::asserted(
        "fiber-normal-p2z-p2w",
        Some("4.23"),
        over_xzw(&|x, z, w| {
            let lhs = g(&h(&z.p2, &w.p2), &x.q) - g(&h(&x.x, &z.p2), &w.qp2);
            let rhs = c2 * x.p1_lnf * g(&z.z, &w.z) - c2 * x.shifted * g(&z.p2, &w.z);
            (lhs, rhs)
        }),
        alg,
    ));
    out.push(Measurement::asserted(
        "fiber-normal-full",
        Some("4.24"),
        over_xzw(&|x, z, w| {
            let lhs = g(&h(&z.p2, &w.p2), &x.qp1) - g(&h(&x.p1, &z.p2), &w.qp2);
            let rhs = c2 * x.p1_lnf * g(&z.z, &w.p2) - c1 * c2 * x.shifted * g(&z.z, &w.z);
            (lhs, rhs)
        }),
        alg,
    ));

    // Characterization through mu.
    match &ctx.mu {
        None => {
            for (check, eq) in [("characterization", "5.1"), ("leaf-umbilicity", "5.10")] {
                out.push(Measurement::skipped(check, Some(eq), alg, "no mu supplied"));
            }
        }
        Some(dmu) => {
            let fiber_variation = max_abs(fiber.iter().map(|w| ctx.along(dmu, &w.z)));
            out.push(Measurement::asserted("mu-fiber-constancy", None, fiber_variation, tol.fit));
            if fiber_variation > tol.fit {
                for (check, eq) in [("characterization", "5.1"), ("leaf-umbilicity", "5.10")] {
                    out.push(Measurement::skipped(check, Some(eq), alg, "mu varies along the fiber"));
                }
            } else {
                let a = |v: &Vector, x: &Vector| f.shape_operator(v, x);
                let characterization = max_abs(base.iter().flat_map(|x| {
                    fiber.iter().map(move |z| {
                        let lhs = a(&x.qp1, &z.z) - a(&z.q, &x.p1) + a(&z.qp2, &x.x) - a(&x.q, &z.p2);
                        let x_mu = ctx.along(dmu, &x.x);
                        let rhs = &z.z * ((c2 - c1) * (x_mu - x.eta));
                        f.norm(&(lhs - rhs))
                    })
                }));
                out.push(Measurement::asserted("characterization", Some("5.1"), characterization, alg));
                let umbilic = over_xzw(&|x, z, w| {
                    let nabla = f.induced_derivative(&z.z, &frozen_section(f, &w.z));
                    (g(&nabla, &x.x), -ctx.along(dmu, &x.x) * g(&z.z, &w.z))
                });
                out.push(Measurement::asserted("leaf-umbilicity", Some("5.10"), umbilic, alg));
            }
        }
    }
    out
}
