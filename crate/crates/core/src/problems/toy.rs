//! Two-dimensional toy objectives: a full-rank continuous function and a
//! piecewise mixed-integer one.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

/// `sign` with `sign(0) = 0`.
fn sign(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `-1/2 (0.8 z - 2 sign z)^2 + 0.1 |x|^2 + 2` with `z = (x1 + x2) / sqrt 2`.
pub fn f1(x1: f64, x2: f64) -> f64 {
    let z = (x1 + x2) * FRAC_1_SQRT_2;
    -0.5 * (0.8 * z - 2.0 * sign(z)).powi(2) + 0.1 * (x1 * x1 + x2 * x2) + 2.0
}

/// Bracket of the rotated first coordinate, as the center `c` and offset `a`
/// of the active piece `|-(x - c)^2 + a|`.
fn piece(xt1: f64) -> Option<(f64, f64)> {
    if (-7.0..-3.0).contains(&xt1) {
        Some((-5.0, 8.0))
    } else if (-3.0..1.0).contains(&xt1) {
        Some((-1.0, 3.0))
    } else if (1.0..=5.0).contains(&xt1) {
        Some((3.0, 4.0))
    } else if xt1 > 5.0 && xt1 <= 9.0 {
        Some((7.0, 5.0))
    } else if xt1 > 9.0 && xt1 <= 13.0 {
        Some((11.0, 10.0))
    } else {
        None
    }
}

/// The mixed-integer objective expressed in rotated coordinates.
pub fn f2_rotated(xt1: f64, xt2: f64) -> f64 {
    match piece(xt1) {
        Some((c, a)) => {
            let g = (-(xt1 - c).powi(2) + a).abs();
            let h = (xt1 - c).powi(2) + (xt2 - c).powi(2);
            0.5 * g + 0.1 * h
        }
        None => 0.0,
    }
}

/// Mixed-integer objective on `x1 in {0, ..., 10}`, `x2` real.
pub fn f2(x1: f64, x2: f64) -> Result<f64> {
    if x1.fract() != 0.0 || !(0.0..=10.0).contains(&x1) {
        return Err(Error::Domain(format!("f2 needs an integer x1 in 0..=10, got {x1}")));
    }
    let xt1 = (x1 - x2) * FRAC_1_SQRT_2;
    let xt2 = (x1 + x2) * FRAC_1_SQRT_2;
    Ok(f2_rotated(xt1, xt2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_origin_is_two() {
        assert_eq!(f1(0.0, 0.0), 2.0);
    }

    #[test]
    fn f1_is_symmetric() {
        let mut s = 0x2545_f491_4f6c_dd1du64;
        for _ in 0..100 {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            let a = (s % 10_000) as f64 / 1000.0 - 5.0;
            let b = ((s >> 20) % 10_000) as f64 / 1000.0 - 5.0;
            assert_eq!(f1(a, b), f1(b, a));
        }
    }

    #[test]
    fn f1_valley_near_origin() {
        // z -> 0+ along the diagonal: -0.22 z^2 + 1.6 z.
        let z: f64 = 0.01;
        let x = z * FRAC_1_SQRT_2;
        let expected = -0.22 * z * z + 1.6 * z;
        assert!((f1(x, x) - expected).abs() < 1e-12);
    }

    #[test]
    fn f2_rejects_non_integer_or_out_of_range() {
        assert!(f2(0.5, 0.0).is_err());
        assert!(f2(11.0, 0.0).is_err());
        assert!(f2(-1.0, 0.0).is_err());
        assert!(f2(3.0, 0.0).is_ok());
    }

    #[test]
    fn f2_outside_brackets_is_zero() {
        assert_eq!(f2_rotated(-8.0, 2.0), 0.0);
        assert_eq!(f2_rotated(13.5, -1.0), 0.0);
        // x1 = 10, x2 = -5 still falls in the last bracket.
        assert!(f2(10.0, -5.0).unwrap() > 0.0);
    }

    #[test]
    fn f2_documents_breakpoint_jumps() {
        // One-sided limits of the g/h pieces at each breakpoint, with xt2 = 0.
        let eps = 1e-9;
        let jumps: Vec<f64> = [-3.0, 1.0, 5.0, 9.0]
            .iter()
            .map(|&b| f2_rotated(b + eps, 0.0) - f2_rotated(b - eps, 0.0))
            .collect();
        // Left piece at -3: 0.5 |-(2)^2 + 8| + 0.1 (4 + 25) = 2 + 2.9;
        // right piece: 0.5 |-(2)^2 + 3| + 0.1 (4 + 1) = 0.5 + 0.5.
        assert!((jumps[0] - (1.0 - 4.9)).abs() < 1e-6);
        // At 1: left 0.5 |-4 + 3| + 0.1 (4 + 1) = 1.0; right 0.5 |-4 + 4| + 0.1 (4 + 9) = 1.3.
        assert!((jumps[1] - 0.3).abs() < 1e-6);
        // At 5: left 0.5 |-4 + 4| + 0.1 (4 + 9) = 1.3; right 0.5 |-4 + 5| + 0.1 (4 + 49) = 5.8.
        assert!((jumps[2] - 4.5).abs() < 1e-6);
        // At 9: left 0.5 |-4 + 5| + 0.1 (4 + 49) = 5.8; right 0.5 |-4 + 10| + 0.1 (4 + 121) = 15.5.
        assert!((jumps[3] - 9.7).abs() < 1e-6);
    }
}
