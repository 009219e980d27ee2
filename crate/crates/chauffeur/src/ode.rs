//! Classical fixed-step Runge-Kutta for planar vector fields.

use crate::game::RelState;

/// One RK4 step of `ds/dt = f(t, s)`.
#[inline]
pub fn rk4<F>(f: F, t: f64, s: RelState, h: f64) -> RelState
where
    F: Fn(f64, RelState) -> RelState,
{
    let k1 = f(t, s);
    let k2 = f(t + 0.5 * h, s + k1 * (0.5 * h));
    let k3 = f(t + 0.5 * h, s + k2 * (0.5 * h));
    let k4 = f(t + h, s + k3 * h);
    s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Bisects for the first `h` in `(0, h_max]` where `pred` flips from false to true.
///
/// `pred(0)` is assumed false and `pred(h_max)` true. Returns the smallest
/// bracket end at which the predicate holds.
pub fn bisect_first<P>(h_max: f64, iters: usize, mut pred: P) -> f64
where
    P: FnMut(f64) -> bool,
{
    let (mut lo, mut hi) = (0.0, h_max);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_integrates_rotation_accurately() {
        // ds/dt = (-y, x) has exact solution a rotation.
        let mut s = RelState::new(1.0, 0.0);
        let h = 1e-2;
        let n = 628;
        for i in 0..n {
            s = rk4(|_, p| RelState::new(-p.y, p.x), i as f64 * h, s, h);
        }
        let t = n as f64 * h;
        assert!((s.x - t.cos()).abs() < 1e-9);
        assert!((s.y - t.sin()).abs() < 1e-9);
    }

    #[test]
    fn bisect_finds_threshold() {
        let h = bisect_first(1.0, 60, |x| x >= 0.3);
        assert!((h - 0.3).abs() < 1e-15);
    }
}
