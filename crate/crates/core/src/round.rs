//! Rounding helpers.
//!
//! `f64::round` lowers to a libm call on baseline x86-64, which dominates the
//! codec's profile. These use the hardware truncating conversion instead and
//! give the same result for every finite input below 2^62 in magnitude.

/// Round half away from zero.
#[inline]
pub(crate) fn round_i64(x: f64) -> i64 {
    let t = x as i64;
    let frac = x - t as f64;
    if frac >= 0.5 {
        t + 1
    } else if frac <= -0.5 {
        t - 1
    } else {
        t
    }
}

/// Round and saturate to a sample value. NaN maps to 0.
#[inline]
pub(crate) fn to_u8(x: f64) -> u8 {
    round_i64(x.clamp(0.0, 255.0)) as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn halves_go_away_from_zero() {
        assert_eq!(round_i64(0.5), 1);
        assert_eq!(round_i64(-0.5), -1);
        assert_eq!(round_i64(2.5), 3);
        assert_eq!(round_i64(-2.5), -3);
        assert_eq!(round_i64(0.499_999_999_999_999_94), 0);
        assert_eq!(to_u8(-3.0), 0);
        assert_eq!(to_u8(300.0), 255);
        assert_eq!(to_u8(f64::NAN), 0);
    }

    proptest! {
        #[test]
        fn agrees_with_std(x in -1e12f64..1e12) {
            prop_assert_eq!(round_i64(x), x.round() as i64);
        }

        #[test]
        fn agrees_near_halves(i in -100_000i64..100_000, eps in -1e-9f64..1e-9) {
            let x = i as f64 + 0.5 + eps;
            prop_assert_eq!(round_i64(x), x.round() as i64);
        }
    }
}
