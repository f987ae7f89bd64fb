//! Frank family, θ ≠ 0, radially symmetric with no tail dependence.

use crate::real::Real;

pub(crate) fn cdf<T: Real>(theta: T, u: T, v: T) -> T {
    let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
    -(num / (-theta).exp_m1()).ln_1p() / theta
}

pub(crate) fn hfunc<T: Real>(theta: T, v: T, u: T) -> T {
    let ev = (-theta * v).exp_m1();
    let num = (-theta * u).exp() * ev;
    let den = (-theta).exp_m1() + (-theta * u).exp_m1() * ev;
    num / den
}

pub(crate) fn log_density<T: Real>(theta: T, u: T, v: T) -> T {
    let em = (-theta).exp_m1();
    let den = em + (-theta * u).exp_m1() * (-theta * v).exp_m1();
    (-theta * em).ln() - theta * (u + v) - (T::one() + T::one()) * den.abs().ln()
}

pub(crate) fn hinv<T: Real>(theta: T, w: T, u: T) -> T {
    let den = w + (T::one() - w) * (-theta * u).exp();
    let frac = w * (-theta).exp_m1() / den;
    if frac > -(T::one() + T::one()).recip() {
        return -frac.ln_1p() / theta;
    }
    // 1 + frac = (w e^-θ + (1-w) e^-θu) / den, which cancels when formed directly.
    let (a, b) = (w.ln() - theta, (-w).ln_1p() - theta * u);
    let m = a.max(b);
    let ln_num = m + ((a - m).exp() + (b - m).exp()).ln();
    -(ln_num - den.ln()) / theta
}
