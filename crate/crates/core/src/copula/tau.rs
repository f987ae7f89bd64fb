//! Kendall τ as a function of the copula parameter, and its inverse.

use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::optim::bisect_increasing;
use crate::real::{lit, Real};

use super::{CopulaModel, Family, Rotation};

const GL_ORDER: usize = 16;

// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static NODES: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = [(0.0, 0.0); GL_ORDER];
        for (i, node) in out.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *node = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

/// `∫_0^x t / (e^t - 1) dt` for `x >= 0`.
fn bose_integral(x: f64) -> f64 {
    if x > 40.0 {
        let mut s = std::f64::consts::PI.powi(2) / 6.0;
        for k in 1..=4 {
            let k = k as f64;
            s -= (-k * x).exp() * (x / k + 1.0 / (k * k));
        }
        return s;
    }
    let panels = (x / 2.0).ceil().max(1.0) as usize;
    let width = x / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for &(node, weight) in gauss_legendre() {
            let t = mid + 0.5 * width * node;
            total += 0.5 * width * weight * t / t.exp_m1();
        }
    }
    total
}

/// Debye function of order one, `D1(x) = x^-1 ∫_0^x t / (e^t - 1) dt`.
pub fn debye1(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x < 0.0 {
        return debye1(-x) - x / 2.0;
    }
    bose_integral(x) / x
}

/// Frank's τ(θ) = 1 - 4/θ (1 - D1(θ)), odd in θ.
pub fn frank_tau(theta: f64) -> f64 {
    let a = theta.abs();
    let t = if a < 1e-2 {
        a / 9.0 - a.powi(3) / 900.0
    } else {
        1.0 - 4.0 / a * (1.0 - debye1(a))
    };
    t.copysign(theta)
}

/// Joe's τ(θ) = 1 - 4 Σ_k 1 / (k (θk + 2) (θ(k-1) + 2)).
pub fn joe_tau(theta: f64) -> f64 {
    const TERMS: usize = 1000;
    let mut s = 0.0;
    for k in (1..=TERMS).rev() {
        let k = k as f64;
        s += 1.0 / (k * (theta * k + 2.0) * (theta * (k - 1.0) + 2.0));
    }
    // Midpoint-rule tail of Σ 1/(k(k+A)(k+B)) beyond TERMS.
    let a = 2.0 / theta;
    let b = a - 1.0;
    let x = TERMS as f64 + 0.5;
    let tail = 1.0 / (2.0 * x * x) - (a + b) / (3.0 * x.powi(3)) + (a * a + a * b + b * b) / (4.0 * x.powi(4));
    1.0 - 4.0 * (s + tail / (theta * theta))
}

pub(crate) fn kendall_tau<T: Real>(model: &CopulaModel<T>) -> T {
    let theta = model.theta().to_f64().unwrap_or(f64::NAN);
    let base = match model.family() {
        Family::Independence => 0.0,
        Family::Gaussian => std::f64::consts::FRAC_2_PI * theta.asin(),
        Family::Frank => frank_tau(theta),
        Family::Clayton => theta / (theta + 2.0),
        Family::Gumbel => 1.0 - 1.0 / theta,
        Family::Joe => joe_tau(theta),
    };
    lit(base * model.rotation().tau_sign())
}

const FRANK_MAX: f64 = 50.0;
const JOE_MAX: f64 = 50.0;

/// Builds the model of the given family and rotation whose Kendall τ equals `tau`.
///
/// `tau = 0` yields the independence copula regardless of family.
pub fn tau_to_theta<T: Real>(family: Family, rotation: Rotation, tau: T) -> Result<CopulaModel<T>> {
    let t = tau.to_f64().unwrap_or(f64::NAN);
    if !t.is_finite() || t.abs() >= 1.0 {
        return domain(format!("Kendall tau must lie in (-1, 1), got {t}"));
    }
    if t == 0.0 {
        return Ok(CopulaModel::independence());
    }
    if family == Family::Independence {
        return domain(format!("independence copula has tau = 0, requested {t}"));
    }
    if !family.allows_rotation(rotation) {
        return domain(format!("{family} does not support rotation {rotation}"));
    }
    if family.is_archimedean_rotatable() && t.signum() != rotation.tau_sign() {
        return domain(format!("tau = {t} has the wrong sign for {family} with rotation {rotation}"));
    }
    let a = t.abs();
    let theta = match family {
        Family::Independence => unreachable!(),
        Family::Gaussian => (std::f64::consts::FRAC_PI_2 * t).sin(),
        Family::Clayton => 2.0 * a / (1.0 - a),
        Family::Gumbel => 1.0 / (1.0 - a),
        Family::Frank => {
            if a > frank_tau(FRANK_MAX) {
                return domain(format!("|tau| = {a} exceeds the supported Frank range"));
            }
            bisect_increasing(frank_tau, a, 1e-6, FRANK_MAX, 1e-14, 1e-10)?.copysign(t)
        }
        Family::Joe => {
            if a > joe_tau(JOE_MAX) {
                return domain(format!("|tau| = {a} exceeds the supported Joe range"));
            }
            bisect_increasing(joe_tau, a, 1.0, JOE_MAX, 1e-14, 1e-10)?
        }
    };
    CopulaModel::new(family, rotation, lit(theta))
}
