//! Truncated Taylor series arithmetic for differential transformation.
//!
//! A [`Series`] holds the coefficients `x̂[0..=K]` of a scalar variable about
//! a window start `t0`, where `x̂[k] = x^(k)(t0) / k!`. Products, quotients
//! and derivatives of time functions map onto the coefficient rules below,
//! truncated at order `K`.

use crate::error::{Error, Result};

/// Coefficients of one scalar variable over one time window.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<f64>,
}

impl Series {
    pub fn zeros(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order + 1],
        }
    }

    /// Transform of a constant: `c·δ[k]`.
    pub fn constant(value: f64, order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[0] = value;
        s
    }

    /// Unit impulse `δ`, the identity of [`conv`].
    pub fn delta(order: usize) -> Self {
        Self::constant(1.0, order)
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least the order-0 coefficient");
        Self { coeffs }
    }

    /// Highest retained order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scale(&self, c: f64) -> Series {
        Series::from_coeffs(self.coeffs.iter().map(|x| c * x).collect())
    }

    pub fn add(&self, other: &Series) -> Series {
        assert_eq!(self.order(), other.order());
        Series::from_coeffs(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Series) -> Series {
        assert_eq!(self.order(), other.order());
        Series::from_coeffs(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect())
    }

    /// Full truncated product `x ⊗ y`.
    pub fn mul(&self, other: &Series) -> Series {
        assert_eq!(self.order(), other.order());
        Series::from_coeffs((0..=self.order()).map(|k| conv(self, other, k)).collect())
    }

    pub fn eval(&self, dt: f64) -> f64 {
        eval(self, dt)
    }
}

impl std::ops::Index<usize> for Series {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.coeffs[k]
    }
}

/// Order-`k` coefficient of the product `x·y`: `Σ_{m=0..k} x̂[m]·ŷ[k−m]`.
pub fn conv(x: &Series, y: &Series, k: usize) -> f64 {
    conv_slices(&x.coeffs, &y.coeffs, k)
}

#[inline]
pub(crate) fn conv_slices(x: &[f64], y: &[f64], k: usize) -> f64 {
    (0..=k).map(|m| x[m] * y[k - m]).sum()
}

/// Transform of `1/x(t)`.
pub fn recip(x: &Series) -> Result<Series> {
    let x0 = x.coeffs[0];
    if x0 == 0.0 {
        return Err(Error::Domain(
            "reciprocal of a series with zero leading coefficient".into(),
        ));
    }
    let mut r = vec![0.0; x.coeffs.len()];
    for k in 0..r.len() {
        r[k] = recip_next(&x.coeffs, &r, k);
    }
    Ok(Series::from_coeffs(r))
}

/// Order-`k` reciprocal coefficient given orders `0..k` of the reciprocal
/// already stored in `r`. Lets callers extend `1/x` one order at a time.
#[inline]
pub fn recip_next(x: &[f64], r: &[f64], k: usize) -> f64 {
    if k == 0 {
        return 1.0 / x[0];
    }
    let s: f64 = (0..k).map(|m| r[m] * x[k - m]).sum();
    -s / x[0]
}

/// Transform of `y(t)/x(t)`.
pub fn quotient(y: &Series, x: &Series) -> Result<Series> {
    Ok(y.mul(&recip(x)?))
}

/// Transform of `dx/dt`: `(k+1)·x̂[k+1]`, with the top order truncated to 0.
pub fn derive(x: &Series) -> Series {
    let k_max = x.order();
    let mut d = vec![0.0; k_max + 1];
    for (k, v) in d.iter_mut().take(k_max).enumerate() {
        *v = (k as f64 + 1.0) * x.coeffs[k + 1];
    }
    Series::from_coeffs(d)
}

/// Horner evaluation of `Σ x̂[k]·dt^k`.
pub fn eval(x: &Series, dt: f64) -> f64 {
    eval_slice(&x.coeffs, dt)
}

#[inline]
pub fn eval_slice(c: &[f64], dt: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * dt + v)
}

/// Order-`k` coefficient of `m·|m|/π` with the sign of `m` frozen to
/// `sign_m0` for the window. The physical prefactor is applied by the caller.
pub fn friction_coeff(m: &Series, pi: &Series, sign_m0: f64, k: usize) -> Result<f64> {
    if pi.coeffs[0] <= 0.0 {
        return Err(Error::Domain(format!(
            "nonpositive pressure {} in friction term",
            pi.coeffs[0]
        )));
    }
    let mm = m.mul(m);
    let r = recip(pi)?;
    Ok(sign_m0 * conv(&mm, &r, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s(c: &[f64]) -> Series {
        Series::from_coeffs(c.to_vec())
    }

    #[test]
    fn conv_by_hand() {
        assert_eq!(conv(&s(&[1.0, 2.0, 3.0]), &s(&[4.0, 5.0, 6.0]), 2), 28.0);
    }

    #[test]
    fn conv_with_delta_picks_coefficient() {
        let y = s(&[3.0, -1.0, 0.25, 7.0]);
        for k in 0..=3 {
            assert_eq!(conv(&Series::delta(3), &y, k), y[k]);
        }
    }

    #[test]
    fn recip_cases() {
        assert_eq!(recip(&s(&[2.0, 4.0])).unwrap(), s(&[0.5, -1.0]));
        assert_eq!(recip(&s(&[1.0, 0.0, 0.0])).unwrap(), s(&[1.0, 0.0, 0.0]));
        assert!(matches!(recip(&s(&[0.0, 1.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn derive_cases() {
        assert_eq!(derive(&s(&[1.0, 1.0, 1.0])), s(&[1.0, 2.0, 0.0]));
        assert_eq!(derive(&Series::constant(5.0, 4)), Series::zeros(4));
        let exp = s(&[1.0, 1.0, 0.5, 1.0 / 6.0]);
        let d = derive(&exp);
        for (a, b) in d.coeffs()[..3].iter().zip(&exp.coeffs()[..3]) {
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
        assert_eq!(d[3], 0.0);
    }

    #[test]
    fn eval_cases() {
        let x = s(&[1.5, -2.0, 9.0]);
        assert_eq!(eval(&x, 0.0), 1.5);
        assert_eq!(eval(&Series::constant(300e3, 5), 120.0), 300e3);
        assert_relative_eq!(eval(&s(&[1.0, 2.0, 3.0]), 0.1), 1.23, max_relative = 1e-15);
    }

    #[test]
    fn friction_cases() {
        let pi = s(&[3.0, 0.2, 0.0]);
        for k in 0..=2 {
            assert_eq!(friction_coeff(&Series::zeros(2), &pi, 1.0, k).unwrap(), 0.0);
        }
        assert_eq!(friction_coeff(&s(&[2.0, 0.0]), &s(&[4.0, 0.0]), 1.0, 0).unwrap(), 1.0);
        assert_eq!(friction_coeff(&s(&[1.0, 1.0]), &s(&[1.0, 0.0]), 1.0, 1).unwrap(), 2.0);
        assert!(friction_coeff(&s(&[1.0]), &s(&[0.0]), 1.0, 0).is_err());
    }

    #[test]
    fn recip_next_matches_recip() {
        let x = [2.0, -0.3, 0.7, 1.1, -0.4];
        let full = recip(&s(&x)).unwrap();
        let mut r = vec![0.0; 5];
        for k in 0..5 {
            r[k] = recip_next(&x, &r, k);
        }
        assert_eq!(r, full.coeffs());
    }
}
