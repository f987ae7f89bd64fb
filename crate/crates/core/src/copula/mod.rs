//! Bivariate one-parameter copulas.
//!
//! Every family is evaluated through its unrotated base form; rotations map
//! the arguments with the usual reflection identities. Evaluation is generic
//! over the floating type, see [`crate::Real`].

mod clayton;
mod frank;
mod gaussian;
mod gumbel;
mod joe;
mod tau;

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::optim::bisect_increasing;
use crate::real::{lit, Real};

pub use tau::{debye1, frank_tau, joe_tau, tau_to_theta};

/// Copula family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Independence,
    Gaussian,
    Frank,
    Clayton,
    Gumbel,
    Joe,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Independence,
        Family::Gaussian,
        Family::Frank,
        Family::Clayton,
        Family::Gumbel,
        Family::Joe,
    ];

    /// Families with a free parameter.
    pub const PARAMETRIC: [Family; 5] = [Family::Gaussian, Family::Frank, Family::Clayton, Family::Gumbel, Family::Joe];

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "Independence",
            Family::Gaussian => "Gaussian",
            Family::Frank => "Frank",
            Family::Clayton => "Clayton",
            Family::Gumbel => "Gumbel",
            Family::Joe => "Joe",
        }
    }

    /// Number of free parameters.
    pub fn n_params(self) -> usize {
        usize::from(self != Family::Independence)
    }

    /// Clayton, Gumbel and Joe only reach negative dependence through rotation.
    pub fn is_archimedean_rotatable(self) -> bool {
        matches!(self, Family::Clayton | Family::Gumbel | Family::Joe)
    }

    pub fn allows_rotation(self, rotation: Rotation) -> bool {
        rotation == Rotation::None || self.is_archimedean_rotatable()
    }

    fn check_theta(self, theta: f64) -> Result<()> {
        let ok = theta.is_finite()
            && match self {
                Family::Independence => true,
                Family::Gaussian => theta.abs() < 1.0,
                Family::Frank => theta != 0.0,
                Family::Clayton => theta > 0.0,
                Family::Gumbel | Family::Joe => theta >= 1.0,
            };
        if ok {
            Ok(())
        } else {
            domain(format!("parameter {theta} outside the {self} domain"))
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| f.name().to_ascii_lowercase() == lower || (lower == "normal" && *f == Family::Gaussian))
            .ok_or_else(|| Error::Config(format!("unknown copula family '{s}'")))
    }
}

/// Counter-clockwise rotation of the copula density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Rotation {
    #[default]
    None,
    R90,
    R180,
    R270,
}

impl Rotation {
    /// Sign that the rotation applies to the base family's Kendall τ.
    pub fn tau_sign(self) -> f64 {
        match self {
            Rotation::None | Rotation::R180 => 1.0,
            Rotation::R90 | Rotation::R270 => -1.0,
        }
    }

    pub fn degrees(self) -> u32 {
        match self {
            Rotation::None => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rotation::None => f.write_str("none"),
            r => write!(f, "R{}", r.degrees()),
        }
    }
}

impl FromStr for Rotation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().trim_start_matches('r') {
            "" | "0" | "none" | "one" => Ok(Rotation::None),
            "90" => Ok(Rotation::R90),
            "180" => Ok(Rotation::R180),
            "270" => Ok(Rotation::R270),
            _ => Err(Error::Config(format!("unknown rotation '{s}'"))),
        }
    }
}

/// A validated copula: family, rotation and parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Serialize"))]
pub struct CopulaModel<T: Real = f64> {
    family: Family,
    rotation: Rotation,
    theta: T,
}

impl<T: Real> CopulaModel<T> {
    pub fn new(family: Family, rotation: Rotation, theta: T) -> Result<Self> {
        if !family.allows_rotation(rotation) {
            return domain(format!("{family} does not support rotation {rotation}"));
        }
        family.check_theta(theta.to_f64().unwrap_or(f64::NAN))?;
        let theta = if family == Family::Independence { T::zero() } else { theta };
        Ok(Self { family, rotation, theta })
    }

    pub fn independence() -> Self {
        Self {
            family: Family::Independence,
            rotation: Rotation::None,
            theta: T::zero(),
        }
    }

    /// Same as [`tau_to_theta`].
    pub fn from_tau(family: Family, rotation: Rotation, tau: T) -> Result<Self> {
        tau_to_theta(family, rotation, tau)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rotation(&self) -> Rotation {
        self.rotation
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    /// Short label such as `Clayton R90`.
    pub fn label(&self) -> String {
        match self.rotation {
            Rotation::None => self.family.to_string(),
            r => format!("{} {r}", self.family),
        }
    }

    /// Kendall's τ of the model.
    pub fn kendall_tau(&self) -> T {
        tau::kendall_tau(self)
    }

    /// C(u, v) on the closed unit square.
    pub fn cdf(&self, u: T, v: T) -> Result<T> {
        check_closed("u", u)?;
        check_closed("v", v)?;
        if u == T::zero() || v == T::zero() {
            return Ok(T::zero());
        }
        if u == T::one() {
            return Ok(v);
        }
        if v == T::one() {
            return Ok(u);
        }
        let one = T::one();
        let c = match self.rotation {
            Rotation::None => self.base_cdf(u, v),
            Rotation::R90 => v - self.base_cdf(one - u, v),
            Rotation::R180 => u + v - one + self.base_cdf(one - u, one - v),
            Rotation::R270 => u - self.base_cdf(u, one - v),
        };
        Ok(c.max((u + v - one).max(T::zero())).min(u.min(v)))
    }

    /// Copula density c(u, v) on the open unit square.
    pub fn density(&self, u: T, v: T) -> Result<T> {
        Ok(self.log_density(u, v)?.exp())
    }

    /// ln c(u, v) on the open unit square.
    pub fn log_density(&self, u: T, v: T) -> Result<T> {
        check_open("u", u)?;
        check_open("v", v)?;
        Ok(self.log_density_unchecked(u, v))
    }

    /// ln c(u, v) without argument validation; callers guarantee `u, v ∈ (0, 1)`.
    pub fn log_density_unchecked(&self, u: T, v: T) -> T {
        let one = T::one();
        let (a, b) = match self.rotation {
            Rotation::None => (u, v),
            Rotation::R90 => (one - u, v),
            Rotation::R180 => (one - u, one - v),
            Rotation::R270 => (u, one - v),
        };
        self.base_log_density(a, b)
    }

    /// Conditional CDF h(v | u) = ∂C(u, v)/∂u.
    pub fn hfunc(&self, v: T, given_u: T) -> Result<T> {
        check_closed("v", v)?;
        check_open("given_u", given_u)?;
        Ok(self.hfunc_unchecked(v, given_u))
    }

    /// h(v | u) without validation; callers guarantee `v ∈ [0, 1]`, `u ∈ (0, 1)`.
    pub fn hfunc_unchecked(&self, v: T, u: T) -> T {
        if v <= T::zero() {
            return T::zero();
        }
        if v >= T::one() {
            return T::one();
        }
        let one = T::one();
        let h = match self.rotation {
            Rotation::None => self.base_hfunc(v, u),
            Rotation::R90 => self.base_hfunc(v, one - u),
            Rotation::R180 => one - self.base_hfunc(one - v, one - u),
            Rotation::R270 => one - self.base_hfunc(one - v, u),
        };
        h.max(T::zero()).min(one)
    }

    /// Inverse of the h-function in its first argument: returns v with h(v | u) = x.
    pub fn hfunc_inverse(&self, x: T, given_u: T) -> Result<T> {
        check_closed("x", x)?;
        check_open("given_u", given_u)?;
        if x == T::zero() {
            return Ok(T::zero());
        }
        if x == T::one() {
            return Ok(T::one());
        }
        let one = T::one();
        let v = match self.rotation {
            Rotation::None => self.base_hinv(x, given_u)?,
            Rotation::R90 => self.base_hinv(x, one - given_u)?,
            Rotation::R180 => one - self.base_hinv(one - x, one - given_u)?,
            Rotation::R270 => one - self.base_hinv(one - x, given_u)?,
        };
        Ok(v.max(T::zero()).min(one))
    }

    /// Draws `n` pairs by conditional inversion, deterministically from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<PseudoObservations<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PseudoObservations::new(self.sample_with(&mut rng, n)?)
    }

    /// Draws `n` pairs from a caller-owned generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<(T, T)>> {
        if n == 0 {
            return domain("sample size must be positive");
        }
        let lo = T::min_positive_value();
        let hi = T::one() - T::epsilon();
        (0..n)
            .map(|_| {
                let u: T = lit::<T>(rng.sample::<f64, _>(Open01)).max(lo).min(hi);
                let w: T = lit(rng.sample::<f64, _>(Open01));
                let v = self.hfunc_inverse(w, u)?;
                Ok((u, v.max(lo).min(hi)))
            })
            .collect()
    }

    fn base_cdf(&self, u: T, v: T) -> T {
        let th = self.theta;
        match self.family {
            Family::Independence => u * v,
            Family::Gaussian => gaussian::cdf(th, u, v),
            Family::Frank => frank::cdf(th, u, v),
            Family::Clayton => clayton::cdf(th, u, v),
            Family::Gumbel => gumbel::cdf(th, u, v),
            Family::Joe => joe::cdf(th, u, v),
        }
    }

    fn base_hfunc(&self, v: T, u: T) -> T {
        let th = self.theta;
        match self.family {
            Family::Independence => v,
            Family::Gaussian => gaussian::hfunc(th, v, u),
            Family::Frank => frank::hfunc(th, v, u),
            Family::Clayton => clayton::hfunc(th, v, u),
            Family::Gumbel => gumbel::hfunc(th, v, u),
            Family::Joe => joe::hfunc(th, v, u),
        }
    }

    fn base_log_density(&self, u: T, v: T) -> T {
        let th = self.theta;
        match self.family {
            Family::Independence => T::zero(),
            Family::Gaussian => gaussian::log_density(th, u, v),
            Family::Frank => frank::log_density(th, u, v),
            Family::Clayton => clayton::log_density(th, u, v),
            Family::Gumbel => gumbel::log_density(th, u, v),
            Family::Joe => joe::log_density(th, u, v),
        }
    }

    fn base_hinv(&self, w: T, u: T) -> Result<T> {
        let th = self.theta;
        Ok(match self.family {
            Family::Independence => w,
            Family::Gaussian => gaussian::hinv(th, w, u),
            Family::Frank => frank::hinv(th, w, u),
            Family::Clayton => clayton::hinv(th, w, u),
            Family::Gumbel | Family::Joe => {
                // Bisect on ln v so tiny roots are resolved to full relative precision.
                let h = |t: T| self.base_hfunc(t.exp(), u);
                let lo = T::min_positive_value().ln();
                bisect_increasing(h, w, lo, T::zero(), lit(1e-17), T::zero())?.exp()
            }
        })
    }
}

impl<T: Real> fmt::Display for CopulaModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.family == Family::Independence {
            f.write_str("Independence")
        } else {
            write!(f, "{} (theta = {})", self.label(), self.theta)
        }
    }
}

fn check_closed<T: Real>(name: &str, x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        domain(format!("{name} = {x} is outside [0, 1]"))
    }
}

fn check_open<T: Real>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x < T::one() {
        Ok(())
    } else {
        domain(format!("{name} = {x} is outside (0, 1)"))
    }
}

/// Pairs of pseudo-observations strictly inside the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservations<T: Real = f64> {
    pairs: Vec<(T, T)>,
}

impl<T: Real> PseudoObservations<T> {
    /// Validates that every coordinate lies in (0, 1).
    pub fn new(pairs: Vec<(T, T)>) -> Result<Self> {
        if pairs.is_empty() {
            return domain("pseudo-observations must be non-empty");
        }
        for (i, &(u, v)) in pairs.iter().enumerate() {
            if !(u > T::zero() && u < T::one() && v > T::zero() && v < T::one()) {
                return domain(format!("pair {i} = ({u}, {v}) is not inside the open unit square"));
            }
        }
        Ok(Self { pairs })
    }

    /// Clamps every coordinate into `[eps, 1 - eps]` first.
    pub fn clamped(pairs: impl IntoIterator<Item = (T, T)>, eps: T) -> Result<Self> {
        let hi = T::one() - eps;
        let pairs = pairs
            .into_iter()
            .map(|(u, v)| (u.max(eps).min(hi), v.max(eps).min(hi)))
            .collect();
        Self::new(pairs)
    }

    pub fn pairs(&self) -> &[(T, T)] {
        &self.pairs
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn u(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn v(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn into_pairs(self) -> Vec<(T, T)> {
        self.pairs
    }
}

/// Clamp used for pseudo-observations fed to densities and h-functions.
pub const BOUNDARY_EPS: f64 = 1e-10;
