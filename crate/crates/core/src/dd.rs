//! Double-double helpers on top of [`TwoFloat`].
//!
//! `TwoFloat`'s own `TwoFloat / TwoFloat` loses the low word in some cases
//! (e.g. `1/3`), so quotients here take one Newton correction step instead.

use twofloat::TwoFloat;

pub(crate) const ZERO: TwoFloat = TwoFloat::from_f64(0.0);

/// Nearest double-double to an integer (exact for `|v| < 2^106`).
pub(crate) fn from_i128(v: i128) -> TwoFloat {
    let hi = v as f64;
    let lo = (v - hi as i128) as f64;
    TwoFloat::new_add(hi, lo)
}

/// `p / q` to about 32 significant digits.
pub(crate) fn div(p: TwoFloat, q: TwoFloat) -> TwoFloat {
    let x0 = p.hi() / q.hi();
    let r = p - q * x0;
    TwoFloat::new_add(x0, r.hi() / q.hi())
}

pub(crate) fn ratio(p: i128, q: i128) -> TwoFloat {
    div(from_i128(p), from_i128(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_f64(x: TwoFloat) -> f64 {
        x.hi() + x.lo()
    }

    #[test]
    fn thirds_keep_the_low_word() {
        let t = ratio(1, 3);
        // 3 * t - 1 should be at the 1e-32 level, not 1e-17
        let r = t * 3.0 - 1.0;
        assert!(to_f64(r).abs() < 1e-31, "{r:?}");
        let big = ratio(7, 1 << 40);
        assert_eq!(big.hi(), 7.0 / (1u64 << 40) as f64);
        assert_eq!(big.lo(), 0.0);
    }

    #[test]
    fn large_integers_split_exactly() {
        let v: i128 = (1..=30).map(|k| k as i128).product();
        let d = from_i128(v);
        assert_eq!(d.hi() as i128 + d.lo() as i128, v);
        let q = div(d, from_i128(v / 29));
        assert!((to_f64(q) - 29.0).abs() < 1e-30);
    }
}
