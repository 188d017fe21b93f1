//! Angle helpers.

use core::f64::consts::{PI, TAU};

/// Wraps an angle into `(-π, π]`.
pub fn wrap(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut w = libm::fmod(a + PI, TAU);
    if w <= 0.0 {
        w += TAU;
    }
    w - PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_maps_to_plus_pi() {
        assert_eq!(wrap(PI), PI);
        assert!((wrap(-PI) - PI).abs() < 1e-15);
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap(TAU)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn stays_in_half_open_interval(a in -1e4f64..1e4) {
            let w = wrap(a);
            prop_assert!(w > -PI && w <= PI);
            let k = (a - w) / TAU;
            prop_assert!((k - libm::round(k)).abs() < 1e-9);
        }
    }
}
