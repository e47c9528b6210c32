use super::Tolerance;
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 400;

/// Bisection on a sign-changing bracket `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol.target(mid)` or an exact
/// zero is hit. The returned abscissa always lies inside the input bracket.
pub fn find_root<F>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidParameter(format!("bad bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if (fa.signum() * fb.signum()).partial_cmp(&0.0) != Some(std::cmp::Ordering::Less) {
        return Err(Error::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (a + b);
        if b - a <= tol.target(mid) || mid <= a || mid >= b {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let x = find_root(|x| x - 0.5, 0.0, 1.0, Tolerance::absolute(1e-14)).unwrap();
        assert!((x - 0.5).abs() <= 1e-14);
    }

    #[test]
    fn sqrt_two() {
        let x = find_root(|x| x * x - 2.0, 1.0, 2.0, Tolerance::absolute(1e-15)).unwrap();
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn no_sign_change() {
        let err = find_root(|x| x * x + 1.0, -1.0, 1.0, Tolerance::absolute(1e-9)).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
    }

    #[test]
    fn relative_tolerance_is_honoured() {
        let x = find_root(|x| x - 1e6, 0.0, 2e6, Tolerance::new(0.0, 1e-12).unwrap()).unwrap();
        assert!((x - 1e6).abs() <= 1e-6);
    }
}
