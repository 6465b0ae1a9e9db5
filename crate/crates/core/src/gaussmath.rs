//! Special functions, Gaussian-state entropies and symplectic linear algebra.
//!
//! Quadratures are ordered `(q_1, p_1, q_2, p_2, …)` and the vacuum has
//! variance 1. The symplectic form is `Ω = ⊕ [[0, 1], [-1, 0]]`.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{domain, Result};

/// Tolerance below 1 accepted for a symplectic eigenvalue of a physical state.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Below this value of `x - 1` the bosonic entropy switches to its series.
const G_SERIES_CUTOFF: f64 = 1e-6;

/// Bosonic entropy of one symplectic eigenvalue, in bits:
/// `g(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2)`.
///
/// Values in `[1 - 1e-9, 1)` are clamped to 1; anything smaller is a domain
/// error.
pub fn g_entropy(x: f64) -> Result<f64> {
    if !(x >= 1.0 - PHYSICAL_TOL) {
        return Err(domain(format!("g(x) needs x >= 1, got {x}")));
    }
    let u = 0.5 * (x.max(1.0) - 1.0);
    if u == 0.0 {
        return Ok(0.0);
    }
    let nats = if 2.0 * u < G_SERIES_CUTOFF {
        // (u+1)ln(u+1) - u ln u = u - u ln u + u^2/2 - u^3/6 + O(u^4)
        u - u * u.ln() + 0.5 * u * u - u * u * u / 6.0
    } else if u < 1.0 {
        (u + 1.0) * u.ln_1p() - u * u.ln()
    } else {
        u.ln_1p() + u * u.recip().ln_1p()
    };
    Ok(nats / std::f64::consts::LN_2)
}

/// `log2 γ(x)` for `γ(x) = (x + √(1+x²)) · (x / (√(1+x²) - 1))^x`.
///
/// Uses `x / (√(1+x²) - 1) = (√(1+x²) + 1) / x` and `ln(x + √(1+x²)) = asinh x`
/// to avoid cancellation.
pub fn log2_gamma_fn(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain(format!("gamma_fn needs finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let r = x.hypot(1.0);
    Ok(x.asinh() / std::f64::consts::LN_2 + x * ((r + 1.0) / x).log2())
}

/// `γ(x)`; strictly increasing with `γ(0) = 1` and `γ(1) = (1 + √2)²`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    log2_gamma_fn(x).map(f64::exp2)
}

/// Binary Shannon entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("binary entropy needs p in [0, 1], got {p}")));
    }
    let q = 1.0 - p;
    let head = if p == 0.0 { 0.0 } else { -p * p.log2() };
    let tail = if q == 0.0 { 0.0 } else { -q * (-p).ln_1p() / std::f64::consts::LN_2 };
    Ok(head + tail)
}

/// Probability that a zero-mean Gaussian sample of the given variance lands in
/// `(-alpha, alpha)`, i.e. `erf(alpha / √(2 variance))`.
pub fn erf_probability_in_window(alpha: f64, variance: f64) -> Result<f64> {
    check_window(alpha, variance)?;
    Ok(libm::erf(alpha / (2.0 * variance).sqrt()))
}

/// Complement of [`erf_probability_in_window`], computed without
/// cancellation. Tails below `1e-300` are returned as 0.
pub fn gaussian_tail_outside_window(alpha: f64, variance: f64) -> Result<f64> {
    check_window(alpha, variance)?;
    let tail = libm::erfc(alpha / (2.0 * variance).sqrt());
    Ok(if tail < 1e-300 { 0.0 } else { tail })
}

fn check_window(alpha: f64, variance: f64) -> Result<()> {
    if !(alpha > 0.0) || !(variance > 0.0) {
        return Err(domain(format!("window probability needs alpha > 0 and variance > 0, got ({alpha}, {variance})")));
    }
    Ok(())
}

/// Real symmetric `2m × 2m` matrix of quadrature second moments.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Wraps a matrix after checking it is square, of even dimension and
    /// symmetric to 1e-12 relative; the stored matrix is exactly symmetric.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || n != entries.ncols() || !n.is_multiple_of(2) {
            return Err(domain(format!(
                "covariance must be square with even dimension, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(domain("covariance has non-finite entries"));
        }
        let scale = entries.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-12 * scale {
                    return Err(domain(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let sym = (&entries + entries.transpose()) * 0.5;
        Ok(Self { entries: sym })
    }

    /// `m`-mode vacuum.
    pub fn vacuum(modes: usize) -> Self {
        Self { entries: DMatrix::identity(2 * modes, 2 * modes) }
    }

    /// Product of thermal states with the given per-mode variances.
    pub fn thermal(variances: &[f64]) -> Result<Self> {
        let diag: Vec<f64> = variances.iter().flat_map(|&v| [v, v]).collect();
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    /// Two-mode matrix `[[a·I, c·σz], [c·σz, b·I]]`.
    pub fn two_mode_standard_form(a: f64, b: f64, c: f64) -> Result<Self> {
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            a,   0.0, c,   0.0,
            0.0, a,   0.0, -c,
            c,   0.0, b,   0.0,
            0.0, -c,  0.0, b,
        ]);
        Self::new(m)
    }

    pub fn modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// 2×2 block coupling modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }

    /// Replaces block `(i, j)` and its transpose partner `(j, i)`.
    pub(crate) fn set_block(&mut self, i: usize, j: usize, block: &Matrix2<f64>) {
        self.entries.fixed_view_mut::<2, 2>(2 * i, 2 * j).copy_from(block);
        if i != j {
            self.entries.fixed_view_mut::<2, 2>(2 * j, 2 * i).copy_from(&block.transpose());
        }
    }

    /// `S M Sᵀ` for a real `2m × 2m` matrix `S`.
    pub fn congruence(&self, s: &DMatrix<f64>) -> Result<Self> {
        if s.nrows() != self.entries.nrows() || s.ncols() != self.entries.ncols() {
            return Err(domain("congruence matrix has wrong shape"));
        }
        Self::new(s * &self.entries * s.transpose())
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }
}

/// Symplectic eigenvalues, one per mode, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    values: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }
}

/// Standard symplectic form `⊕ [[0, 1], [-1, 0]]` on `m` modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Symplectic eigenvalues of a positive-definite covariance matrix: the
/// moduli of the eigenvalues of `ΩM`, which come in pairs `±iν`.
pub fn symplectic_eigenvalues(m: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    if m.entries.clone().cholesky().is_none() {
        return Err(domain("covariance matrix is not positive definite"));
    }
    let modes = m.modes();
    let om = symplectic_form(modes) * &m.entries;
    let mut moduli: Vec<f64> = om.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let values = moduli.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect();
    Ok(SymplecticSpectrum { values })
}

/// Whether `M + iΩ ⪰ 0`, tested as `min ν ≥ 1 - 1e-9`. Non-positive-definite
/// input is reported as unphysical.
pub fn bona_fide_check(m: &CovarianceMatrix) -> bool {
    symplectic_eigenvalues(m).is_ok_and(|s| s.min() >= 1.0 - PHYSICAL_TOL)
}

/// Von Neumann entropy (bits) of the Gaussian state with covariance `m`.
pub fn gaussian_state_entropy(m: &CovarianceMatrix) -> Result<f64> {
    let spectrum = symplectic_eigenvalues(m)?;
    spectrum.values.iter().map(|&nu| g_entropy(nu)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_entropy_reference_values() {
        assert_eq!(g_entropy(1.0).unwrap(), 0.0);
        assert!((g_entropy(3.0).unwrap() - 2.0).abs() < 1e-14);
        // 10.5 log2 10.5 - 9.5 log2 9.5, 50-digit reference
        assert!((g_entropy(20.0).unwrap() - 4.764_021_561_462_921).abs() < 1e-12);
    }

    #[test]
    fn g_entropy_domain_and_clamp() {
        assert_eq!(g_entropy(1.0 - 5e-10).unwrap(), 0.0);
        assert!(g_entropy(0.99).is_err());
        assert!(g_entropy(f64::NAN).is_err());
    }

    #[test]
    fn g_entropy_series_matches_direct_form_at_cutoff() {
        let x = 1.0 + 0.999 * G_SERIES_CUTOFF;
        let u: f64 = 0.5 * (x - 1.0);
        let direct = ((u + 1.0) * u.ln_1p() - u * u.ln()) / std::f64::consts::LN_2;
        let series = g_entropy(x).unwrap();
        assert!((direct - series).abs() < 1e-10 * direct);
    }

    #[test]
    fn g_entropy_large_argument_asymptote() {
        let x = 1e4;
        let asym = (std::f64::consts::E * x / 2.0).log2();
        assert!((g_entropy(x).unwrap() - asym).abs() < 1e-3);
    }

    #[test]
    fn gamma_fn_reference_values() {
        assert_eq!(gamma_fn(0.0).unwrap(), 1.0);
        let expected = (1.0 + 2f64.sqrt()).powi(2);
        assert!((gamma_fn(1.0).unwrap() - expected).abs() < 1e-12);
        assert!((gamma_fn(3.0).unwrap() - 16.457_756_896_732_835).abs() < 1e-10);
        assert!(gamma_fn(-0.1).is_err());
    }

    #[test]
    fn binary_entropy_reference_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-12);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn window_probability_reference_values() {
        assert!((erf_probability_in_window(1e6, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let erf1 = erf_probability_in_window(2f64.sqrt(), 1.0).unwrap();
        assert!((erf1 - 0.842_700_792_949_714_9).abs() < 1e-14);
        // alpha = 37 at 2n̄+1 = 20: erfc(37/√40) = 1.3013573e-16
        let tail = gaussian_tail_outside_window(37.0, 20.0).unwrap();
        assert!((tail / 1.301_357_335_556_800_5e-16 - 1.0).abs() < 1e-10);
        assert!(erf_probability_in_window(0.0, 1.0).is_err());
        assert!(erf_probability_in_window(1.0, -1.0).is_err());
        assert_eq!(gaussian_tail_outside_window(1e3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn symplectic_spectrum_simple_cases() {
        let s = symplectic_eigenvalues(&CovarianceMatrix::vacuum(2)).unwrap();
        assert!(s.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let t = symplectic_eigenvalues(&CovarianceMatrix::thermal(&[3.0, 5.0]).unwrap()).unwrap();
        assert!((t.values()[0] - 5.0).abs() < 1e-12);
        assert!((t.values()[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bona_fide_examples() {
        assert!(bona_fide_check(&CovarianceMatrix::vacuum(2)));
        let tmsv = CovarianceMatrix::two_mode_standard_form(20.0, 20.0, 399f64.sqrt()).unwrap();
        assert!(bona_fide_check(&tmsv));
        let bad = CovarianceMatrix::two_mode_standard_form(1.0, 1.0, 10.0).unwrap();
        assert!(!bona_fide_check(&bad));
        let too_correlated = CovarianceMatrix::two_mode_standard_form(1.0, 20.0, 1.0).unwrap();
        assert!(!bona_fide_check(&too_correlated));
    }

    #[test]
    fn entropy_of_simple_states() {
        assert_eq!(gaussian_state_entropy(&CovarianceMatrix::vacuum(1)).unwrap(), 0.0);
        let th = CovarianceMatrix::thermal(&[20.0]).unwrap();
        assert!((gaussian_state_entropy(&th).unwrap() - 4.764_021_561_462_921).abs() < 1e-12);
        let bad = CovarianceMatrix::two_mode_standard_form(1.0, 1.0, 10.0).unwrap();
        assert!(gaussian_state_entropy(&bad).is_err());
    }

    #[test]
    fn rejects_malformed_matrices() {
        assert!(CovarianceMatrix::new(DMatrix::identity(3, 3)).is_err());
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 0.5;
        assert!(CovarianceMatrix::new(m).is_err());
    }
}
