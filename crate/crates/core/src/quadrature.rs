//! Adaptive Simpson quadrature on finite intervals and on half-lines.

/// Hard cap on recursion depth; intervals are split at most this many times.
const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` with adaptive Simpson refinement.
///
/// The stopping rule is `|S2 - S1| <= 15 * max(rel_tol * |S|, abs_floor)`
/// on each subinterval, where `abs_floor` guards integrals that vanish.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Coarse estimate of the scale, refined with a few extra probes so a
    // thin bump is not mistaken for zero.
    let mut scale = whole.abs();
    for k in 1..8 {
        let x = a + (b - a) * k as f64 / 8.0;
        scale = scale.max(f(x).abs() * (b - a));
    }
    let abs_tol = (rel_tol * scale).max(f64::MIN_POSITIVE);
    recurse(&f, a, b, fa, fm, fb, whole, abs_tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates `f` over `[a, +inf)` through the substitution
/// `u = a + s / (1 - s)`, `s in [0, 1)`.
///
/// The integrand must decay at least like `u^-2` so that the transformed
/// integrand stays bounded at `s = 1`; the endpoint itself is evaluated
/// through `at_infinity`, the limit of `f(u) u^2` as `u -> inf`.
pub fn half_line<F: Fn(f64) -> f64>(f: F, a: f64, at_infinity: f64, rel_tol: f64) -> f64 {
    let g = |s: f64| {
        if s >= 1.0 {
            return at_infinity;
        }
        let one_minus = 1.0 - s;
        let u = a + s / one_minus;
        f(u) / (one_minus * one_minus)
    };
    adaptive_simpson(g, 0.0, 1.0, rel_tol)
}

/// `(1 - e^{-u})^2 / u^2`, continuously extended by 1 at `u = 0`.
fn smoothing_kernel(u: f64) -> f64 {
    if u < 1e-8 {
        return 1.0 - u;
    }
    let v = -(-u).exp_m1();
    (v / u) * (v / u)
}

/// Numerical value of `int_0^inf (1 - e^{-u})^2 / u^2 du`, which equals `2 ln 2`.
///
/// This is the constant that turns the heat-splitting estimate into the
/// `ln 2` right-hand side of the N-Sobolev inequality.
pub fn heat_splitting_constant(rel_tol: f64) -> f64 {
    half_line(smoothing_kernel, 0.0, 1.0, rel_tol)
}
