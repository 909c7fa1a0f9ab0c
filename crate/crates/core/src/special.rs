//! Bessel functions J0, J1 and the exponentially scaled I0.
//!
//! Three regimes: power series for |x| <= 8, Miller's backward recurrence
//! (normalized by J0 + 2ΣJ2k = 1) up to |x| = 20, and the Hankel asymptotic
//! expansion beyond. The complex J0 follows the same split.

use rustfft::num_complex::Complex64;
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 20.0;

trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn modulus(self) -> f64;
    fn sqrt(self) -> Self;
    fn cos(self) -> Self;
    fn sin(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
}

impl Scalar for Complex64 {
    fn from_f64(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
}

/// Σ (−1)^k (w/2)^{2k+ν} / (k! (k+ν)!) for ν ∈ {0, 1}.
fn series<T: Scalar>(order: u32, w: T) -> T {
    let q = -(w * w) * 0.25;
    let mut term = if order == 0 { T::from_f64(1.0) } else { w * 0.5 };
    let mut sum = term;
    for k in 1..80u32 {
        term = term * q * (1.0 / (k as f64 * (k + order) as f64));
        sum = sum + term;
        if term.modulus() < 1e-18 {
            break;
        }
    }
    sum
}

/// (J0, J1) by backward recurrence from an order well above |w|.
fn miller<T: Scalar>(w: T) -> (T, T) {
    let a = w.modulus();
    let top = 2 * ((a as usize + 40) / 2);
    let two_over = T::from_f64(2.0) / w;
    let mut next = T::from_f64(0.0);
    let mut cur = T::from_f64(1e-30);
    let mut even_sum = T::from_f64(0.0);
    for k in (1..=top).rev() {
        let prev = two_over * (k as f64) * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        if (k - 1) % 2 == 0 && k > 1 {
            even_sum = even_sum + cur * 2.0;
        }
        if cur.modulus() > 1e200 {
            cur = cur * 1e-200;
            next = next * 1e-200;
            even_sum = even_sum * 1e-200;
        }
    }
    let norm = cur + even_sum;
    (cur / norm, next / norm)
}

/// Hankel expansion of J_ν(w), ν ∈ {0, 1}, valid for Re w > 0 and |w| large.
fn hankel<T: Scalar>(order: u32, w: T) -> T {
    let mu = 4.0 * (order * order) as f64;
    let inv = T::from_f64(1.0) / w;
    let mut p = T::from_f64(1.0);
    let mut q = T::from_f64(0.0);
    let mut coeff = 1.0;
    let mut power = T::from_f64(1.0);
    let mut last = f64::INFINITY;
    for k in 1..60u32 {
        let odd = (2 * k - 1) as f64;
        coeff *= (mu - odd * odd) / (8.0 * k as f64);
        power = power * inv;
        let term = power * coeff;
        let size = term.modulus();
        if size > last || coeff == 0.0 {
            break;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p = p + term * sign;
        } else {
            q = q + term * sign;
        }
        last = size;
        if size < 1e-17 {
            break;
        }
    }
    let chi = w - T::from_f64((0.5 * order as f64 + 0.25) * PI);
    let amp = (T::from_f64(2.0 / PI) * inv).sqrt();
    amp * (p * chi.cos() - q * chi.sin())
}

fn j0_generic<T: Scalar>(w: T) -> T {
    let a = w.modulus();
    if a <= SERIES_LIMIT {
        series(0, w)
    } else if a <= ASYMPTOTIC_LIMIT {
        miller(w).0
    } else {
        hankel(0, w)
    }
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    j0_generic(x.abs())
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    let a = x.abs();
    let v = if a <= SERIES_LIMIT {
        series(1, a)
    } else if a <= ASYMPTOTIC_LIMIT {
        miller(a).1
    } else {
        hankel(1, a)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// J0 for complex arguments. Accurate where |Im w| stays moderate, which
/// covers `k_t ρ / μ` for all propagation distances of interest.
pub fn bessel_j0_complex(w: Complex64) -> Complex64 {
    // J0 is even
    let w = if w.re < 0.0 { -w } else { w };
    j0_generic(w)
}

/// e^{-x} I0(x) for x >= 0 (negative inputs use |x|). Never overflows.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= ASYMPTOTIC_LIMIT {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200u32 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        let mut coeff = 1.0;
        let mut sum = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..200u32 {
            let odd = (2 * k - 1) as f64;
            coeff *= odd * odd / (8.0 * k as f64 * x);
            if coeff > last {
                break;
            }
            sum += coeff;
            last = coeff;
            if coeff < 1e-17 {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(0.0), 0.0);
        assert_eq!(bessel_i0_scaled(0.0), 1.0);
        assert_eq!(bessel_j0_complex(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn regimes_join_continuously() {
        for &edge in &[SERIES_LIMIT, ASYMPTOTIC_LIMIT] {
            let lo = bessel_j0(edge - 1e-13);
            let hi = bessel_j0(edge + 1e-13);
            assert!((lo - hi).abs() < 1e-12, "J0 jump at {edge}: {lo} vs {hi}");
            let lo = bessel_j1(edge - 1e-13);
            let hi = bessel_j1(edge + 1e-13);
            assert!((lo - hi).abs() < 1e-12, "J1 jump at {edge}: {lo} vs {hi}");
        }
        let lo = bessel_i0_scaled(ASYMPTOTIC_LIMIT - 1e-13);
        let hi = bessel_i0_scaled(ASYMPTOTIC_LIMIT + 1e-13);
        assert!((lo - hi).abs() < 1e-13);
    }

    #[test]
    fn parity() {
        assert_eq!(bessel_j0(-3.3), bessel_j0(3.3));
        assert_eq!(bessel_j1(-12.5), -bessel_j1(12.5));
    }

    #[test]
    fn complex_matches_real_on_axis() {
        for i in 0..400 {
            let x = 0.137 * i as f64;
            let c = bessel_j0_complex(Complex64::new(x, 0.0));
            assert!((c.re - bessel_j0(x)).abs() < 1e-14);
            assert!(c.im.abs() < 1e-14);
        }
    }

    #[test]
    fn complex_wronskian_like_identity() {
        // J0(conj w) = conj J0(w)
        let w = Complex64::new(31.0, -0.7);
        let a = bessel_j0_complex(w);
        let b = bessel_j0_complex(w.conj());
        assert!((a - b.conj()).norm() < 1e-15);
    }
}
