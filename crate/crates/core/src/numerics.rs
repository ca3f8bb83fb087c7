//! Scalar root finding and maximization.

const GOLDEN: f64 = 0.381_966_011_250_105_1;

/// Brent's method for a root of `f` in `[a, b]`. `f(a)` and `f(b)` must
/// differ in sign (or one of them be zero).
pub fn brent_root<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Option<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return None;
        }
    }
    Some(b)
}

/// All sign changes of `f` over the grid `xs`, each refined by Brent.
pub fn grid_roots<F: FnMut(f64) -> f64>(mut f: F, xs: &[f64], xtol: f64) -> Vec<f64> {
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for i in 0..xs.len().saturating_sub(1) {
        let (f0, f1) = (vals[i], vals[i + 1]);
        if !(f0.is_finite() && f1.is_finite()) {
            continue;
        }
        if f0 == 0.0 {
            out.push(xs[i]);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            if let Some(r) = brent_root(&mut f, xs[i], xs[i + 1], xtol) {
                out.push(r);
            }
        }
    }
    if let (Some(&x), Some(&v)) = (xs.last(), vals.last()) {
        if v == 0.0 {
            out.push(x);
        }
    }
    out
}

/// `n` points spaced evenly in log between `lo` and `hi` (both positive).
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Brent's parabolic/golden-section search for a maximum of `f` on
/// `[a, b]`. Returns `(x, f(x))`. Non-finite values are treated as -inf.
pub fn brent_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let mut g = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = g(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let m = 0.5 * (a + b);
        let tol = 1e-12 * x.abs() + xtol / 3.0;
        let t2 = 2.0 * tol;
        if (x - m).abs() <= t2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < t2 || b - u < t2 {
                    d = if x < m { tol } else { -tol };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol { x + d } else { x + tol.copysign(d) };
        let fu = g(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, -fx)
}

/// Local maximization from `x0` within `[lo, hi]`: expand a bracket from the
/// starting point in the uphill direction, then refine with Brent.
pub fn local_max<F: FnMut(f64) -> f64>(
    mut f: F,
    x0: f64,
    lo: f64,
    hi: f64,
    step: f64,
    xtol: f64,
) -> (f64, f64) {
    let x0 = x0.clamp(lo, hi);
    let f0 = f(x0);
    let mut h = step;
    let right = (x0 + h).min(hi);
    let fr = f(right);
    let left = (x0 - h).max(lo);
    let fl = f(left);
    let (a, b) = if fr > f0 && fr >= fl {
        // walk right
        let (mut prev, mut cur, mut fcur) = (x0, right, fr);
        loop {
            if cur >= hi {
                break (prev, hi);
            }
            h *= 2.0;
            let next = (cur + h).min(hi);
            let fnext = f(next);
            if !(fnext > fcur) {
                break (prev, next);
            }
            prev = cur;
            cur = next;
            fcur = fnext;
        }
    } else if fl > f0 {
        let (mut prev, mut cur, mut fcur) = (x0, left, fl);
        loop {
            if cur <= lo {
                break (lo, prev);
            }
            h *= 2.0;
            let next = (cur - h).max(lo);
            let fnext = f(next);
            if !(fnext > fcur) {
                break (next, prev);
            }
            prev = cur;
            cur = next;
            fcur = fnext;
        }
    } else {
        (left, right)
    };
    let (x, fx) = brent_max(&mut f, a, b, xtol);
    // Brent never evaluates the endpoints
    let fa = f(a);
    let fb = f(b);
    if fa > fx && fa >= fb {
        (a, fa)
    } else if fb > fx {
        (b, fb)
    } else {
        (x, fx)
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(&f, a, b, fa, fm, fb, whole, tol, 48)
}
