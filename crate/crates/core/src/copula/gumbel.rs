//! Gumbel family, θ ≥ 1, upper-tail dependence. Works with `x = -ln u`, `y = -ln v`.

use crate::real::Real;

// ln(x^θ + y^θ)
fn log_pow_sum<T: Real>(theta: T, lx: T, ly: T) -> T {
    let (s, t) = (theta * lx, theta * ly);
    let m = s.max(t);
    m + (-(s - t).abs()).exp().ln_1p()
}

pub(crate) fn cdf<T: Real>(theta: T, u: T, v: T) -> T {
    let (x, y) = (-u.ln(), -v.ln());
    let l = log_pow_sum(theta, x.ln(), y.ln());
    (-(l / theta).exp()).exp()
}

pub(crate) fn hfunc<T: Real>(theta: T, v: T, u: T) -> T {
    let (x, y) = (-u.ln(), -v.ln());
    let lx = x.ln();
    let l = log_pow_sum(theta, lx, y.ln());
    let a = (l / theta).exp();
    (-a + (T::one() / theta - T::one()) * l + (theta - T::one()) * lx + x).exp()
}

pub(crate) fn log_density<T: Real>(theta: T, u: T, v: T) -> T {
    let (x, y) = (-u.ln(), -v.ln());
    let (lx, ly) = (x.ln(), y.ln());
    let l = log_pow_sum(theta, lx, ly);
    let a = (l / theta).exp();
    let two = T::one() + T::one();
    -a + x + y + (theta - T::one()) * (lx + ly) + (two / theta - two) * l + (a + theta - T::one()).ln() - l / theta
}
