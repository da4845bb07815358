//! Bracketing root finder (Brent–Dekker).

/// Outcome of a bracketed search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracketed {
    pub root: f64,
    /// Final bracket width.
    pub width: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Finds a root of `f` in `[a, b]` where `f(a)` and `f(b)` differ in sign.
///
/// Inverse quadratic / secant steps are taken when they stay inside the
/// bracket and shrink it fast enough; otherwise the step is a bisection, so
/// the bracket is never lost. Returns `None` when the endpoints do not
/// bracket a sign change.
pub fn brent<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Option<Bracketed> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(Bracketed {
            root: a,
            width: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    if fb == 0.0 {
        return Some(Bracketed {
            root: b,
            width: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for iter in 1..=max_iter {
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
        if fb == 0.0 {
            return Some(Bracketed {
                root: b,
                width: 0.0,
                iterations: iter,
                converged: true,
            });
        }
        if m.abs() <= tol {
            return Some(Bracketed {
                root: b,
                width: (c - b).abs(),
                iterations: iter,
                converged: true,
            });
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
    }
    Some(Bracketed {
        root: b,
        width: (c - b).abs(),
        iterations: max_iter,
        converged: false,
    })
}

/// Plain bisection, kept as the fallback refinement.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Option<Bracketed> {
    let mut fa = f(a);
    let fb = f(b);
    if fa.signum() == fb.signum() {
        return None;
    }
    for iter in 1..=max_iter {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= xtol || mid == a || mid == b {
            return Some(Bracketed {
                root: mid,
                width: (b - a).abs(),
                iterations: iter,
                converged: true,
            });
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(Bracketed {
                root: mid,
                width: 0.0,
                iterations: iter,
                converged: true,
            });
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(Bracketed {
        root: 0.5 * (a + b),
        width: (b - a).abs(),
        iterations: max_iter,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = brent(|x| x * x * x - 2.0 * x - 5.0, 2.0, 3.0, 1e-15, 100).unwrap();
        assert!((r.root - 2.094_551_481_542_326_5).abs() < 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn stiff_tangent_branch() {
        // tan has a pole at pi/2; the root of tan(x) - 50 sits close to it
        let r = brent(|x| x.tan() - 50.0, 1.0, std::f64::consts::FRAC_PI_2 - 1e-9, 1e-15, 200).unwrap();
        assert!((r.root - 50f64.atan()).abs() < 1e-13);
    }

    #[test]
    fn bisection_agrees_with_brent() {
        let f = |x: f64| x.cos() - x;
        let a = brent(f, 0.0, 1.0, 1e-15, 100).unwrap().root;
        let b = bisect(f, 0.0, 1.0, 1e-15, 200).unwrap().root;
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn no_sign_change() {
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50).is_none());
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50).is_none());
    }
}
