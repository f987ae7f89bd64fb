//! Clayton family, θ > 0, lower-tail dependence. `a = -θ ln u` so that `u^-θ = e^a`.

use crate::real::{lit, Real};

// ln(e^a + e^b - 1) for a, b >= 0.
fn log_gen_sum<T: Real>(a: T, b: T) -> T {
    let m = a.max(b);
    if m < lit(30.0) {
        (a.exp_m1() + b.exp_m1()).ln_1p()
    } else {
        m + ((a - m).exp() + (b - m).exp() - (-m).exp()).ln()
    }
}

pub(crate) fn cdf<T: Real>(theta: T, u: T, v: T) -> T {
    let s = log_gen_sum(-theta * u.ln(), -theta * v.ln());
    (-s / theta).exp()
}

pub(crate) fn hfunc<T: Real>(theta: T, v: T, u: T) -> T {
    let a = -theta * u.ln();
    let s = log_gen_sum(a, -theta * v.ln());
    ((T::one() + T::one() / theta) * (a - s)).exp()
}

pub(crate) fn log_density<T: Real>(theta: T, u: T, v: T) -> T {
    let (lu, lv) = (u.ln(), v.ln());
    let s = log_gen_sum(-theta * lu, -theta * lv);
    (T::one() + theta).ln() - (theta + T::one()) * (lu + lv) - (T::one() / theta + lit(2.0)) * s
}

pub(crate) fn hinv<T: Real>(theta: T, w: T, u: T) -> T {
    let t = (-theta / (T::one() + theta) * w.ln()).exp_m1();
    if t <= T::zero() {
        return T::one();
    }
    let l = t.ln() - theta * u.ln();
    let log1p = if l > lit(35.0) { l } else { l.exp().ln_1p() };
    (-log1p / theta).exp()
}
