//! Double-double reference transcriptions shared by the integration suites.
//!
//! Everything here is written from the defining formulas, independently of
//! the library's evaluation strategy.

#![allow(dead_code)]

use capcert::protocol1::ProtocolOneConfig;
use std::sync::OnceLock;

use rayon::prelude::*;
use twofloat::TwoFloat;

pub type T = TwoFloat;

pub fn tf(x: f64) -> T {
    T::from(x)
}

pub fn pi() -> T {
    twofloat::consts::PI
}

/// `exp(x)` by `x = m ln2 + r`, a Taylor series for `r / 2^10`, then ten
/// squarings. twofloat's own exp is off near 1e-12 for negative arguments.
pub fn exp(x: T) -> T {
    if x.hi() == 0.0 {
        return tf(1.0);
    }
    static INV_FACT: OnceLock<[T; 11]> = OnceLock::new();
    let inv_fact = INV_FACT.get_or_init(|| {
        let mut f = 1.0;
        std::array::from_fn(|j| {
            f *= j.max(1) as f64;
            tf(1.0) / tf(f)
        })
    });
    let m = (x.hi() / std::f64::consts::LN_2).round();
    let r = (x - tf(m) * twofloat::consts::LN_2) / tf(1024.0);
    // |r| < 3.4e-4, so ten terms leave a remainder far below 1e-32
    let mut sum = inv_fact[10];
    for c in inv_fact[..10].iter().rev() {
        sum = sum * r + *c;
    }
    for _ in 0..10 {
        sum = sum * sum;
    }
    let scale = 2f64.powi(m as i32);
    T::new_add(sum.hi() * scale, sum.lo() * scale)
}

/// Natural log by one Newton step from the `f64` logarithm.
fn ln_newton(x: T) -> T {
    let x0 = tf(x.hi().ln());
    x0 + (x * exp(-x0) - tf(1.0))
}

/// Natural log: `x = 2^e m`, then `ln m = ln c + 2 atanh((m − c)/(m + c))`
/// around the nearest `c = 1 + i/64`.
pub fn ln(x: T) -> T {
    static TABLE: OnceLock<(Vec<T>, [T; 9])> = OnceLock::new();
    let (ln_c, odd) = TABLE.get_or_init(|| {
        let ln_c = (0..=64).map(|i| ln_newton(tf(1.0 + i as f64 / 64.0))).collect();
        (ln_c, std::array::from_fn(|j| tf(1.0) / tf((2 * j + 1) as f64)))
    });
    assert!(x.hi() > 0.0, "ln of non-positive value");
    let mut e = x.hi().log2().floor() as i32;
    let mut m = x * tf(2f64.powi(-e));
    if m.hi() >= 2.0 {
        m /= tf(2.0);
        e += 1;
    } else if m.hi() < 1.0 {
        m *= tf(2.0);
        e -= 1;
    }
    let i = ((m.hi() - 1.0) * 64.0).round() as usize;
    let c = tf(1.0 + i as f64 / 64.0);
    let u = (m - c) / (m + c);
    let u2 = u * u;
    // |u| ≤ 1/256, so u^19 is far below the working precision
    let mut s = odd[8];
    for coeff in odd[..8].iter().rev() {
        s = s * u2 + *coeff;
    }
    tf(e as f64) * twofloat::consts::LN_2 + ln_c[i] + tf(2.0) * u * s
}

// twofloat's own log2 returns 1 at 1
pub fn log2(x: T) -> T {
    ln(x) / twofloat::consts::LN_2
}

/// `erfc(x)` for `x ≥ 3` by its continued fraction, evaluated bottom-up.
pub fn erfc(x: T) -> T {
    assert!(x.hi() >= 3.0, "continued fraction used outside its range");
    let mut tail = x;
    for j in (1..=400).rev() {
        tail = x + tf(j as f64 / 2.0) / tail;
    }
    exp(-(x * x)) / (pi().sqrt() * tail)
}

/// `erf(x)` by its Maclaurin series, for moderate `x`.
pub fn erf(x: T) -> T {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for j in 1..400 {
        term = -term * x2 / tf(j as f64);
        let add = term / tf((2 * j + 1) as f64);
        sum += add;
        if add.hi().abs() < 1e-34 * sum.hi().abs() {
            break;
        }
    }
    tf(2.0) * sum / pi().sqrt()
}

/// `γ(t) = (t + √(1+t²)) ((√(1+t²) + 1)/t)^t`, in log2.
pub fn log2_gamma(t: T) -> T {
    if t.hi() == 0.0 {
        return tf(0.0);
    }
    let r = (tf(1.0) + t * t).sqrt();
    log2(t + r) + t * log2((r + tf(1.0)) / t)
}

/// `g(x) = ((x+1)/2) log2((x+1)/2) − ((x−1)/2) log2((x−1)/2)`.
pub fn g(x: T) -> T {
    let hp = (x + tf(1.0)) / tf(2.0);
    let hm = (x - tf(1.0)) / tf(2.0);
    let minus = if hm.hi() == 0.0 { tf(0.0) } else { hm * log2(hm) };
    hp * log2(hp) - minus
}

/// Binary entropy.
pub fn h(p: T) -> T {
    let q = tf(1.0) - p;
    let part = |v: T| if v.hi() == 0.0 { tf(0.0) } else { -(v * log2(v)) };
    part(p) + part(q)
}

/// Straight-line transcription of the correlated-noise capacity bound,
/// maximized over a fixed grid of `points` values of η: half log-spaced
/// towards 0, half log-spaced towards the upper end of the interval.
/// Returns the clamped bound.
pub fn theorem1_reference(cfg: &ProtocolOneConfig, points: usize) -> f64 {
    let n = tf(cfg.n as f64);
    let k = tf(cfg.k as f64);
    let d = tf(cfg.d);
    let alpha = tf(cfg.alpha);
    let p = tf(cfg.p_err);
    let t = tf(cfg.t);
    let var = tf(2.0 * cfg.n_bar + 1.0);
    let eps = tf(cfg.epsilon);

    let tail = erfc(alpha / (tf(2.0) * var).sqrt());
    let p_alpha = tf(1.0) - tail;
    let fail = tf(1.0) - exp(n * ln(p_alpha));
    let f = (tf(2.0) * fail).sqrt();
    let sqrt_p = p.sqrt();
    let lambda = tf(8.0) * f * (tf(3.0) + tf(5.0) / (tf(4.0) * p) - tf(1.0) / sqrt_p);
    let s = (eps / tf(2.0)).sqrt();
    let upper = s - lambda;
    if upper.hi() <= 0.0 {
        return 0.0;
    }
    let phase = n * log2(tf(2.0) * pi() / (d * d));
    let bins = tf(2.0) * alpha / d;
    let prefactor = bins * ((k + n) * (k + tf(1.0)) / (n * k * k)).sqrt();

    let objective = |eta: T| -> Option<T> {
        let zeta = (s - eta + tf(8.0) * f / sqrt_p) / (tf(3.0) + tf(5.0) / (tf(4.0) * p));
        let inner = zeta / tf(4.0) - tf(2.0) * f;
        if inner.hi() <= 0.0 || inner.hi() >= 1.0 {
            return None;
        }
        let mu = prefactor * log2(tf(1.0) / inner).sqrt();
        // 4 log2(1/η) + 2 log2(2/ζ²) as a single logarithm
        let eta_zeta = eta * zeta;
        let sq = eta_zeta * eta_zeta;
        let delta = log2(tf(4.0) / (sq * sq)) + tf(2.0);
        Some(phase - tf(2.0) * n * log2_gamma(t + mu) - delta)
    };

    let half = points / 2;
    let span_lo = 40.0 * std::f64::consts::LN_10;
    let span_hi = 25.0 * std::f64::consts::LN_10;
    let best = (0..points)
        .into_par_iter()
        .filter_map(|i| {
            let eta = if i < half {
                let frac = i as f64 / (half - 1) as f64;
                upper * tf((-span_lo * (1.0 - frac)).exp())
            } else {
                let frac = (i - half) as f64 / (points - half - 1) as f64;
                upper - upper * tf((-span_hi * frac).exp()) * tf(0.5)
            };
            objective(eta).map(|v| v.hi() + v.lo())
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    best.max(0.0)
}
