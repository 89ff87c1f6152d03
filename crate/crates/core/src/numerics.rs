//! Small numeric toolbox: bracketing + Brent root finding, golden-section and
//! compass maximization, a damped two-dimensional Newton, upper concave hulls,
//! adaptive Simpson quadrature and deterministic pairwise reduction.

use crate::error::{Error, Result};

/// Central difference with a relative step.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, rel_step: f64) -> f64 {
    let h = rel_step * (1.0 + x.abs());
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Scan `xs` left to right and return the first adjacent pair with a sign
/// change of `f` (non-finite values are skipped).
pub fn bracket_scan(f: impl Fn(f64) -> f64, xs: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let mut prev: Option<(f64, f64)> = None;
    for &x in xs {
        let fx = f(x);
        if !fx.is_finite() {
            prev = None;
            continue;
        }
        if let Some((xp, fp)) = prev {
            if fp == 0.0 {
                return Some((xp, fp, xp, fp));
            }
            if fp * fx < 0.0 {
                return Some((xp, fp, x, fx));
            }
        }
        prev = Some((x, fx));
    }
    None
}

/// Brent's method on a bracketing interval `[a, b]` with `f(a)·f(b) ≤ 0`.
/// Returns `(root, f(root))`.
pub fn brent(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    tol_x: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    if fa == 0.0 {
        return Ok((a, fa));
    }
    if fb == 0.0 {
        return Ok((b, fb));
    }
    if fa * fb > 0.0 {
        return Err(Error::NoThreshold(format!(
            "brent: interval [{a}, {b}] does not bracket a root"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol_x;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok((b, fb));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation / secant step.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 {
            d
        } else {
            tol1 * xm.signum()
        };
        fb = f(b);
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok((b, fb))
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
/// Returns `(argmax, max)`.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol_x: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol_x {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Damped Newton iteration for a two-dimensional residual system.
///
/// The Jacobian is formed by central differences; each step is halved until
/// the residual norm decreases.  Iterates are clamped to `lo..hi` per
/// coordinate.  Returns `(solution, residual, iterations)`.
pub fn newton2_damped(
    res: impl Fn([f64; 2]) -> Result<[f64; 2]>,
    start: [f64; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> Result<([f64; 2], [f64; 2], usize)> {
    let norm = |r: [f64; 2]| (r[0] * r[0] + r[1] * r[1]).sqrt();
    let clamp = |x: [f64; 2]| [x[0].clamp(lo[0], hi[0]), x[1].clamp(lo[1], hi[1])];
    let mut x = clamp(start);
    let mut r = res(x)?;
    for iter in 0..max_iter {
        if norm(r) < tol {
            return Ok((x, r, iter));
        }
        // Central-difference Jacobian.
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x;
            xp[j] += h;
            let mut xm = x;
            xm[j] -= h;
            let rp = res(clamp(xp))?;
            let rm = res(clamp(xm))?;
            for i in 0..2 {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::NoBand("newton: singular Jacobian".into()));
        }
        let dx = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        // Step halving.
        let mut lambda = 1.0;
        let mut advanced = false;
        for _ in 0..60 {
            let cand = clamp([x[0] + lambda * dx[0], x[1] + lambda * dx[1]]);
            if let Ok(rc) = res(cand) {
                if norm(rc) < norm(r) && rc.iter().all(|v| v.is_finite()) {
                    x = cand;
                    r = rc;
                    advanced = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !advanced {
            return Err(Error::NoBand(format!(
                "newton: stalled at ({}, {}) with residual norm {:.3e}",
                x[0],
                x[1],
                norm(r)
            )));
        }
    }
    if norm(r) < tol {
        Ok((x, r, max_iter))
    } else {
        Err(Error::NoBand(format!(
            "newton: no convergence after {max_iter} iterations (norm {:.3e})",
            norm(r)
        )))
    }
}

/// Compass (pattern) search maximizing `f` in two dimensions.
///
/// Coordinates move by `step` (per-axis), shrinking by half whenever no axis
/// move improves, until both steps drop below `tol`.  Failures of `f` are
/// treated as −∞.
pub fn compass_max2(
    f: impl Fn([f64; 2]) -> Option<f64>,
    start: [f64; 2],
    step0: [f64; 2],
    tol: f64,
    max_evals: usize,
) -> ([f64; 2], f64, usize) {
    let mut x = start;
    let mut fx = f(x).unwrap_or(f64::NEG_INFINITY);
    let mut step = step0;
    let mut evals = 1;
    while (step[0].abs() > tol || step[1].abs() > tol) && evals < max_evals {
        let mut improved = false;
        for (axis, sign) in [(0usize, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)] {
            let mut cand = x;
            cand[axis] += sign * step[axis];
            let fc = f(cand).unwrap_or(f64::NEG_INFINITY);
            evals += 1;
            if fc > fx {
                x = cand;
                fx = fc;
                improved = true;
                break;
            }
        }
        if !improved {
            step[0] *= 0.5;
            step[1] *= 0.5;
        }
    }
    (x, fx, evals)
}

/// Indices of the vertices of the upper concave hull of `points`, which must
/// be sorted by strictly increasing abscissa.  Equivalent to the least concave
/// majorant evaluated at the input abscissae.
pub fn upper_concave_hull(points: &[(f64, f64)]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(points.len());
    for (i, &(x, y)) in points.iter().enumerate() {
        while hull.len() >= 2 {
            let (x1, y1) = points[hull[hull.len() - 2]];
            let (x2, y2) = points[hull[hull.len() - 1]];
            // Keep the chain concave: drop the middle point if it lies on or
            // below the segment (x1,y1)-(x,y).
            if (y2 - y1) * (x - x2) <= (y - y2) * (x2 - x1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Piecewise-linear evaluation of a hull returned by [`upper_concave_hull`].
pub fn hull_eval(points: &[(f64, f64)], hull: &[usize], x: f64) -> f64 {
    debug_assert!(!hull.is_empty());
    let first = points[hull[0]];
    let last = points[hull[hull.len() - 1]];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let pos = hull.partition_point(|&i| points[i].0 <= x);
    let (x0, y0) = points[hull[pos - 1]];
    let (x1, y1) = points[hull[pos]];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(
        f: &impl Fn(f64) -> f64,
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
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Deterministic pairwise sum, independent of chunking or thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// `n` points spaced uniformly on `[a, b]` (inclusive).
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// `n` points spaced logarithmically on `[a, b]`, requiring `0 < a < b`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2);
    linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let f = |x: f64| x * x * x - 2.0 * x - 5.0;
        let (root, fr) = brent(f, 2.0, 3.0, f(2.0), f(3.0), 1e-14, 200).unwrap();
        assert!(fr.abs() < 1e-12);
        assert!((root - 2.094_551_481_542_326_5).abs() < 1e-12);
    }

    #[test]
    fn golden_max_quadratic() {
        let (x, v) = golden_max(|x| -(x - 1.3) * (x - 1.3) + 2.0, -4.0, 5.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn newton2_solves_coupled_system() {
        // x² + y² = 5, x·y = 2  →  (2, 1) from a nearby start.
        let res = |v: [f64; 2]| Ok([v[0] * v[0] + v[1] * v[1] - 5.0, v[0] * v[1] - 2.0]);
        let (x, r, _) =
            newton2_damped(res, [1.7, 1.4], [0.0, 0.0], [10.0, 10.0], 1e-12, 100).unwrap();
        assert!(r[0].abs() < 1e-12 && r[1].abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hull_caps_concave_samples() {
        // Points on a concave parabola are all hull vertices.
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let x = i as f64 / 4.0;
                (x, -(x - 2.0) * (x - 2.0))
            })
            .collect();
        assert_eq!(upper_concave_hull(&pts).len(), pts.len());

        // A convex dip collapses to its endpoints.
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let x = i as f64 / 4.0;
                (x, (x - 2.0) * (x - 2.0))
            })
            .collect();
        let hull = upper_concave_hull(&pts);
        assert_eq!(hull, vec![0, 19]);
        // Chord from (0, 4) to (4.75, 7.5625) evaluated at x = 2.
        let mid = hull_eval(&pts, &hull, 2.0);
        assert!((mid - 5.5).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_exp() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let seq: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - seq).abs() < 1e-9);
    }
}
