//! Gaussian (normal) copula with correlation ρ ∈ (-1, 1).

use crate::real::{lit, Real};
use crate::special::{bvn_cdf, norm_cdf, norm_quantile};

pub(crate) fn cdf<T: Real>(rho: T, u: T, v: T) -> T {
    bvn_cdf(norm_quantile(u), norm_quantile(v), rho)
}

pub(crate) fn hfunc<T: Real>(rho: T, v: T, u: T) -> T {
    let (x, y) = (norm_quantile(u), norm_quantile(v));
    norm_cdf((y - rho * x) / (T::one() - rho * rho).sqrt())
}

pub(crate) fn log_density<T: Real>(rho: T, u: T, v: T) -> T {
    let (x, y) = (norm_quantile(u), norm_quantile(v));
    let one_m = T::one() - rho * rho;
    -lit::<T>(0.5) * one_m.ln() - (rho * rho * (x * x + y * y) - lit::<T>(2.0) * rho * x * y) / (lit::<T>(2.0) * one_m)
}

pub(crate) fn hinv<T: Real>(rho: T, w: T, u: T) -> T {
    let x = norm_quantile(u);
    norm_cdf(rho * x + (T::one() - rho * rho).sqrt() * norm_quantile(w))
}
