//! Scalar search routines: grid scan with golden-section refinement for the
//! η-optimizations in the capacity bounds, and bisection for monotone roots.

use crate::error::{domain, Result};

/// Location and value of a maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol`. Points where `f` returns
/// `None` are treated as `-inf`.
pub fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Extremum
where
    F: Fn(f64) -> Option<f64>,
{
    let eval = |x: f64| f(x).filter(|v| v.is_finite()).unwrap_or(f64::NEG_INFINITY);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = eval(c);
    let mut fd = eval(d);
    // 200 iterations shrink any finite bracket below f64 resolution.
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = eval(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = eval(d);
        }
    }
    if fc >= fd {
        Extremum { x: c, value: fc }
    } else {
        Extremum { x: d, value: fd }
    }
}

/// Maximize `f` over `[lo, hi]` by an evenly spaced scan of `points` nodes
/// followed by golden-section refinement between the neighbours of the best
/// node. Returns `None` when `f` is infeasible (`None` or non-finite) at every
/// node.
pub fn grid_refine_max<F>(f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Option<Extremum>
where
    F: Fn(f64) -> Option<f64>,
{
    assert!(points >= 3, "grid needs at least three nodes");
    let step = (hi - lo) / (points - 1) as f64;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..points {
        let x = lo + step * i as f64;
        if let Some(v) = f(x).filter(|v| v.is_finite()) {
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((i, v));
            }
        }
    }
    let (i, v) = best?;
    let grid_best = Extremum { x: lo + step * i as f64, value: v };
    let a = lo + step * i.saturating_sub(1) as f64;
    let b = lo + step * (i + 1).min(points - 1) as f64;
    let refined = golden_section_max(&f, a, b, tol);
    Some(if refined.value > grid_best.value { refined } else { grid_best })
}

/// Root of a continuous `f` on `[lo, hi]` by bisection, given a sign change.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(domain(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_peak() {
        let m = golden_section_max(|x| Some(-(x - 0.3).powi(2)), 0.0, 1.0, 1e-12);
        assert!((m.x - 0.3).abs() < 1e-6);
    }

    #[test]
    fn grid_refine_skips_infeasible_region() {
        let f = |x: f64| if x < 0.5 { None } else { Some(-(x - 0.7).powi(2)) };
        let m = grid_refine_max(f, 0.0, 1.0, 64, 1e-12).unwrap();
        assert!((m.x - 0.7).abs() < 1e-6);
        assert!(grid_refine_max(|_| None, 0.0, 1.0, 8, 1e-9).is_none());
    }

    #[test]
    fn bisect_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, 0.0, 1.0, 1e-9).is_err());
    }
}
