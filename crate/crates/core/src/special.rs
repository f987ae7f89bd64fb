//! Normal-distribution special functions.
//!
//! `erfc` follows W. J. Cody's rational Chebyshev approximations (three ranges), the
//! quantile uses Wichura's AS 241 (PPND16) followed by one Halley correction, and the
//! bivariate normal CDF is Genz's double-precision variant of the Drezner-Wesolowsky
//! method with Gauss-Legendre quadrature.
#![allow(clippy::excessive_precision)]

use crate::real::{lit, Real};

const ERF_A: [f64; 5] = [
    3.16112374387056560e00,
    1.13864154151050156e02,
    3.77485237685302021e02,
    3.20937758913846947e03,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e01,
    2.44024637934444173e02,
    1.28261652607737228e03,
    2.84423683343917062e03,
];
const ERFC_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e00,
    6.61191906371416295e01,
    2.98635138197400131e02,
    8.81952221241769090e02,
    1.71204761263407058e03,
    2.05107837782607147e03,
    1.23033935479799725e03,
    2.15311535474403846e-8,
];
const ERFC_D: [f64; 8] = [
    1.57449261107098347e01,
    1.17693950891312499e02,
    5.37181101862009858e02,
    1.62138957456669019e03,
    3.29079923573345963e03,
    4.36261909014324716e03,
    3.43936767414372164e03,
    1.23033935480374942e03,
];
const ERFC_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERFC_Q: [f64; 5] = [
    2.56852019228982242e00,
    1.87295284992346725e00,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const FRAC_1_SQRT_PI: f64 = 5.6418958354775628695e-1;

// exp(-y^2) with the argument split to limit cancellation.
fn exp_neg_sq<T: Real>(y: T) -> T {
    let sixteen = lit::<T>(16.0);
    let ysq = (y * sixteen).trunc() / sixteen;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let y = x.abs();
    let one = T::one();
    let two = lit::<T>(2.0);
    let res = if y <= lit(0.46875) {
        let ysq = if y > lit(1.11e-16) { y * y } else { T::zero() };
        let mut xnum = lit::<T>(ERF_A[4]) * ysq;
        let mut xden = ysq;
        for i in 0..3 {
            xnum = (xnum + lit(ERF_A[i])) * ysq;
            xden = (xden + lit(ERF_B[i])) * ysq;
        }
        let erf = x * (xnum + lit(ERF_A[3])) / (xden + lit(ERF_B[3]));
        return one - erf;
    } else if y <= lit(4.0) {
        let mut xnum = lit::<T>(ERFC_C[8]) * y;
        let mut xden = y;
        for i in 0..7 {
            xnum = (xnum + lit(ERFC_C[i])) * y;
            xden = (xden + lit(ERFC_D[i])) * y;
        }
        (xnum + lit(ERFC_C[7])) / (xden + lit(ERFC_D[7])) * exp_neg_sq(y)
    } else if y >= lit(26.543) {
        T::zero()
    } else {
        let ysq = one / (y * y);
        let mut xnum = lit::<T>(ERFC_P[5]) * ysq;
        let mut xden = ysq;
        for i in 0..4 {
            xnum = (xnum + lit(ERFC_P[i])) * ysq;
            xden = (xden + lit(ERFC_Q[i])) * ysq;
        }
        let r = ysq * (xnum + lit(ERFC_P[4])) / (xden + lit(ERFC_Q[4]));
        (lit::<T>(FRAC_1_SQRT_PI) - r) / y * exp_neg_sq(y)
    };
    if x < T::zero() {
        two - res
    } else {
        res
    }
}

/// Standard normal density.
pub fn norm_pdf<T: Real>(x: T) -> T {
    let inv_sqrt_2pi = lit::<T>(0.398_942_280_401_432_677_94);
    inv_sqrt_2pi * (-lit::<T>(0.5) * x * x).exp()
}

/// Standard normal CDF Φ(x).
pub fn norm_cdf<T: Real>(x: T) -> T {
    lit::<T>(0.5) * erfc(-x * T::FRAC_1_SQRT_2())
}

/// Standard normal upper tail 1 - Φ(x), accurate for large positive `x`.
pub fn norm_sf<T: Real>(x: T) -> T {
    lit::<T>(0.5) * erfc(x * T::FRAC_1_SQRT_2())
}

fn poly<T: Real>(coef: &[f64], r: T) -> T {
    coef.iter().fold(T::zero(), |acc, &c| acc * r + lit(c))
}

const PPND_A: [f64; 8] = [
    2509.0809287301226727,
    33430.575583588128105,
    67265.770927008700853,
    45921.953931549871457,
    13731.693765509461125,
    1971.5909503065514427,
    133.14166789178437745,
    3.387132872796366608,
];
const PPND_B: [f64; 8] = [
    5226.495278852545925,
    28729.085735721942674,
    39307.89580009271061,
    21213.794301586595867,
    5394.1960214247511077,
    687.1870074920579083,
    42.313330701600911252,
    1.0,
];
const PPND_C: [f64; 8] = [
    7.7454501427834140764e-4,
    0.0227238449892691845833,
    0.24178072517745061177,
    1.27045825245236838258,
    3.64784832476320460504,
    5.7694972214606914055,
    4.6303378461565452959,
    1.42343711074968357734,
];
const PPND_D: [f64; 8] = [
    1.05075007164441684324e-9,
    5.475938084995344946e-4,
    0.0151986665636164571966,
    0.14810397642748007459,
    0.68976733498510000455,
    1.6763848301838038494,
    2.05319162663775882187,
    1.0,
];
const PPND_E: [f64; 8] = [
    2.01033439929228813265e-7,
    2.71155556874348757815e-5,
    0.0012426609473880784386,
    0.026532189526576123093,
    0.29656057182850489123,
    1.7848265399172913358,
    5.4637849111641143699,
    6.6579046435011037772,
];
const PPND_F: [f64; 8] = [
    2.04426310338993978564e-15,
    1.4215117583164458887e-7,
    1.8463183175100546818e-5,
    7.868691311456132591e-4,
    0.0148753612908506148525,
    0.13692988092273580531,
    0.59983220655588793769,
    1.0,
];

/// Standard normal quantile Φ⁻¹(p). Returns ∓∞ at 0 and 1 and NaN outside `[0, 1]`.
pub fn norm_quantile<T: Real>(p: T) -> T {
    if p.is_nan() || p < T::zero() || p > T::one() {
        return T::nan();
    }
    if p == T::zero() {
        return T::neg_infinity();
    }
    if p == T::one() {
        return T::infinity();
    }
    let half = lit::<T>(0.5);
    let q = p - half;
    let mut x = if q.abs() <= lit(0.425) {
        let r = lit::<T>(0.180625) - q * q;
        q * poly(&PPND_A, r) / poly(&PPND_B, r)
    } else {
        let tail = if q < T::zero() { p } else { T::one() - p };
        let mut r = (-tail.ln()).sqrt();
        let v = if r <= lit(5.0) {
            r = r - lit(1.6);
            poly(&PPND_C, r) / poly(&PPND_D, r)
        } else {
            r = r - lit(5.0);
            poly(&PPND_E, r) / poly(&PPND_F, r)
        };
        if q < T::zero() {
            -v
        } else {
            v
        }
    };
    // One Halley step against the lower or upper tail, whichever is small.
    let dens = norm_pdf(x);
    if dens > lit(1e-300) && x.is_finite() {
        let e = if x <= T::zero() {
            norm_cdf(x) - p
        } else {
            (T::one() - p) - norm_sf(x)
        };
        let u = e / dens;
        x = x - u / (T::one() + x * u * half);
    }
    x
}

const GL6: [(f64, f64); 3] = [
    (0.1713244923791705e+00, -0.9324695142031522e+00),
    (0.3607615730481384e+00, -0.6612093864662647e+00),
    (0.4679139345726904e+00, -0.2386191860831970e+00),
];
const GL12: [(f64, f64); 6] = [
    (0.4717533638651177e-01, -0.9815606342467191e+00),
    (0.1069393259953183e+00, -0.9041172563704750e+00),
    (0.1600783285433464e+00, -0.7699026741943050e+00),
    (0.2031674267230659e+00, -0.5873179542866171e+00),
    (0.2334925365383547e+00, -0.3678314989981802e+00),
    (0.2491470458134029e+00, -0.1252334085114692e+00),
];
const GL20: [(f64, f64); 10] = [
    (0.1761400713915212e-01, -0.9931285991850949e+00),
    (0.4060142980038694e-01, -0.9639719272779138e+00),
    (0.6267204833410906e-01, -0.9122344282513259e+00),
    (0.8327674157670475e-01, -0.8391169718222188e+00),
    (0.1019301198172404e+00, -0.7463319064601508e+00),
    (0.1181945319615184e+00, -0.6360536807265150e+00),
    (0.1316886384491766e+00, -0.5108670019508271e+00),
    (0.1420961093183821e+00, -0.3737060887154196e+00),
    (0.1491729864726037e+00, -0.2277858511416451e+00),
    (0.1527533871307259e+00, -0.7652652113349733e-01),
];

/// Upper orthant probability P(X > h, Y > k) for a standard bivariate normal with
/// correlation `r`.
pub fn bvn_upper<T: Real>(h: T, k: T, r: T) -> T {
    let one = T::one();
    let two = lit::<T>(2.0);
    let inv_2pi = lit::<T>(0.159_154_943_091_895_335_77);
    let sqrt_2pi = lit::<T>(2.506_628_274_631_000_502_4);
    let ra = r.abs();
    let quad: &[(f64, f64)] = if ra < lit(0.3) {
        &GL6
    } else if ra < lit(0.75) {
        &GL12
    } else {
        &GL20
    };
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = T::zero();
    if ra < lit(0.925) {
        if ra > T::zero() {
            let hs = (h * h + k * k) / two;
            let asr = r.asin() / two;
            for &(w, x) in quad {
                for s in [-1.0, 1.0] {
                    let sn = (asr * (lit::<T>(s * x) + one)).sin();
                    bvn = bvn + lit::<T>(w) * ((sn * hk - hs) / (one - sn * sn)).exp();
                }
            }
            bvn = bvn * asr * inv_2pi;
        }
        return bvn + norm_cdf(-h) * norm_cdf(-k);
    }
    if r < T::zero() {
        k = -k;
        hk = -hk;
    }
    if ra < one {
        let a_s = (one - ra) * (one + ra);
        let mut a = a_s.sqrt();
        let b_s = (h - k) * (h - k);
        let c = (lit::<T>(4.0) - hk) / lit(8.0);
        let d = (lit::<T>(12.0) - hk) / lit(16.0);
        let asr = -(b_s / a_s + hk) / two;
        if asr > lit(-100.0) {
            bvn = a
                * asr.exp()
                * (one - c * (b_s - a_s) * (one - d * b_s / lit(5.0)) / lit(3.0)
                    + c * d * a_s * a_s / lit(5.0));
        }
        if -hk < lit(100.0) {
            let b = b_s.sqrt();
            bvn = bvn
                - (-hk / two).exp()
                    * sqrt_2pi
                    * norm_cdf(-b / a)
                    * b
                    * (one - c * b_s * (one - d * b_s / lit(5.0)) / lit(3.0));
        }
        a = a / two;
        for &(w, x) in quad {
            for s in [-1.0, 1.0] {
                let xs0 = a * (lit::<T>(s * x) + one);
                let xs = xs0 * xs0;
                let rs = (one - xs).sqrt();
                let asr = -(b_s / xs + hk) / two;
                if asr > lit(-100.0) {
                    bvn = bvn
                        + a * lit::<T>(w)
                            * asr.exp()
                            * ((-hk * (one - rs) / (two * (one + rs))).exp() / rs
                                - (one + c * xs * (one + d * xs)));
                }
            }
        }
        bvn = -bvn * inv_2pi;
    }
    if r > T::zero() {
        bvn + norm_cdf(-h.max(k))
    } else {
        bvn = -bvn;
        if k > h {
            if h < T::zero() {
                bvn = bvn + norm_cdf(k) - norm_cdf(h);
            } else {
                bvn = bvn + norm_cdf(-h) - norm_cdf(-k);
            }
        }
        bvn
    }
}

/// Bivariate standard normal CDF Φ₂(x, y; ρ) = P(X ≤ x, Y ≤ y).
pub fn bvn_cdf<T: Real>(x: T, y: T, rho: T) -> T {
    if x == T::neg_infinity() || y == T::neg_infinity() {
        return T::zero();
    }
    if x == T::infinity() {
        return norm_cdf(y);
    }
    if y == T::infinity() {
        return norm_cdf(x);
    }
    let v = bvn_upper(-x, -y, rho);
    v.max(T::zero()).min(norm_cdf(x).min(norm_cdf(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from mpmath at 30 digits.
    const PHI_REF: [(f64, f64); 8] = [
        (0.0, 0.5),
        (1.0, 0.841344746068542948585232545632),
        (-1.0, 0.158655253931457051414767454368),
        (1.959963984540054, 0.974999999999999989123831975777),
        (-3.5, 2.32629079035525036349925886728e-4),
        (-8.0, 6.22096057427178412351599517259e-16),
        (-20.0, 2.75362411860623369507562278086e-89),
        (0.3, 0.617911422188952633072273622764),
    ];

    #[test]
    fn phi_matches_reference() {
        for &(x, want) in &PHI_REF {
            let got = norm_cdf(x);
            assert!(
                ((got - want) / want).abs() < 1e-13,
                "Phi({x}) = {got:e}, want {want:e}"
            );
        }
    }

    #[test]
    fn quantile_matches_reference() {
        let cases: [(f64, f64); 6] = [
            (0.975, 1.95996398454005385560443064983),
            (0.5, 0.0),
            (0.01, -2.32634787404084109307509639163),
            (1e-10, -6.36134090240405619910039694879),
            (0.9999, 3.71901648545570838672275941534),
            (0.3, -0.524400512708040815969454362264),
        ];
        for (p, want) in cases {
            let got = norm_quantile(p);
            let err = if want == 0.0 {
                got.abs()
            } else {
                ((got - want) / want).abs()
            };
            assert!(err < 1e-13, "quantile({p}) = {got}, want {want}");
        }
    }

    #[test]
    fn quantile_edges() {
        assert_eq!(norm_quantile(0.0_f64), f64::NEG_INFINITY);
        assert_eq!(norm_quantile(1.0_f64), f64::INFINITY);
        assert!(norm_quantile(1.5_f64).is_nan());
    }

    #[test]
    fn bvn_reference_values() {
        // P(X <= x, Y <= y) from mpmath quadrature.
        let cases: [(f64, f64, f64, f64); 5] = [
            (0.0, 0.0, 0.5, 1.0 / 3.0),
            (0.0, 0.0, -0.5, 1.0 / 6.0),
            (1.0, -0.5, 0.3, 0.283_138_420_244_480_95),
            (-1.2, 0.7, -0.95, 0.001_953_515_204_842_692_5),
            (0.4, 0.4, 0.99, 0.634_629_752_821_810_6),
        ];
        for (x, y, r, want) in cases {
            let got = bvn_cdf(x, y, r);
            assert!((got - want).abs() < 1e-10, "bvn({x},{y},{r})={got} want {want}");
        }
    }

    #[test]
    fn bvn_independent_factorises() {
        for &(x, y) in &[(0.3_f64, -1.1_f64), (2.0, 0.5), (-0.7, -0.2)] {
            let got = bvn_cdf(x, y, 0.0);
            assert!((got - norm_cdf(x) * norm_cdf(y)).abs() < 1e-15);
        }
    }

    #[test]
    fn f32_smoke() {
        let p = norm_cdf(1.0_f32);
        assert!((p - 0.841_344_7).abs() < 1e-6);
        assert!((norm_quantile(0.975_f32) - 1.959_964).abs() < 1e-4);
    }
}
