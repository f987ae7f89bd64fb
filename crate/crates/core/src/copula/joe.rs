//! Joe family, θ ≥ 1, upper-tail dependence.
//!
//! Everything is expressed through `S = a + b - ab` with `a = (1-u)^θ`,
//! `b = (1-v)^θ`. Near the lower corner S is close to one and is computed as
//! `1 - pq` with `p = 1 - a`, `q = 1 - b`; near the upper corner S is tiny
//! and is built in log space.

use crate::real::{lit, Real};

/// `ln S` and `q = 1 - (1-v)^θ`.
fn log_s<T: Real>(theta: T, u: T, v: T) -> (T, T) {
    let la = theta * (-u).ln_1p();
    let lb = theta * (-v).ln_1p();
    let (p, q) = (-la.exp_m1(), -lb.exp_m1());
    let (a, b) = (la.exp(), lb.exp());
    if a + b * p > lit(0.5) {
        return ((-p * q).ln_1p(), q);
    }
    // ln(a + b p) = logsumexp(la, lb + ln p)
    let lbp = lb + p.ln();
    let m = la.max(lbp);
    (m + ((la - m).exp() + (lbp - m).exp()).ln(), q)
}

pub(crate) fn cdf<T: Real>(theta: T, u: T, v: T) -> T {
    let (ls, _) = log_s(theta, u, v);
    -(ls / theta).exp_m1()
}

pub(crate) fn hfunc<T: Real>(theta: T, v: T, u: T) -> T {
    let (ls, q) = log_s(theta, u, v);
    ((T::one() / theta - T::one()) * ls + (theta - T::one()) * (-u).ln_1p()).exp() * q
}

pub(crate) fn log_density<T: Real>(theta: T, u: T, v: T) -> T {
    let (ls, _) = log_s(theta, u, v);
    let two = T::one() + T::one();
    (T::one() / theta - two) * ls + (theta - T::one()) * ((-u).ln_1p() + (-v).ln_1p()) + (theta - T::one() + ls.exp()).ln()
}
