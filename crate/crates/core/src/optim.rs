//! One-dimensional root bracketing and maximisation.

use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// Finds `x` in `[lo, hi]` with `f(x) = target` for a nondecreasing `f`.
///
/// Stops when the bracket is narrower than `xtol` or `|f(x) - target| <= ftol`.
pub fn bisect_increasing<T, F>(f: F, target: T, mut lo: T, mut hi: T, xtol: T, ftol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let half = lit::<T>(0.5);
    for _ in 0..400 {
        let mid = lo + (hi - lo) * half;
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::Numeric(format!("objective is NaN at {mid}")));
        }
        if (fm - target).abs() <= ftol || hi - lo <= xtol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if fm < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numeric("bisection did not converge".into()))
}

/// Result of a bounded one-dimensional maximisation.
#[derive(Debug, Clone, Copy)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Brent's method (golden section with parabolic steps) maximising `f` on `[a, b]`.
pub fn brent_maximize<F>(f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Maximum
where
    F: Fn(f64) -> f64,
{
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let g = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + CGOLD * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = g(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut evals = 1;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = xtol * 0.5 + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Maximum {
                x,
                value: -fx,
                evaluations: evals,
                converged: true,
            };
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = g(u);
        evals += 1;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
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
    Maximum {
        x,
        value: -fx,
        evaluations: evals,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_cube_root() {
        let r = bisect_increasing(|x: f64| x * x * x, 2.0, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn brent_finds_quadratic_peak() {
        let m = brent_maximize(|x| -(x - 1.234_567).powi(2) + 3.0, -10.0, 10.0, 1e-9, 200);
        assert!(m.converged);
        assert!((m.x - 1.234_567).abs() < 1e-7);
        assert!((m.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn brent_handles_boundary_maximum() {
        let m = brent_maximize(|x| x, 0.0, 1.0, 1e-9, 200);
        assert!(m.x > 1.0 - 1e-6);
    }
}
