//! Capacity detection for i.i.d. phase-insensitive Gaussian channels.
//!
//! Alice sends `k` coherent probes with Gaussian amplitudes and both parties
//! heterodyne: Alice on her half of the equivalent two-mode squeezed vacuum,
//! Bob on the channel output. From the records `x, y ∈ ℂ^k` Bob computes a
//! confidence upper bound `σ_max` on his quadrature variance and a confidence
//! lower bound `γ_min` on the cross-correlation. If `σ_max ≤ a` and
//! `γ_min ≥ c` the state is certified to be at least as good as the reference
//! covariance `ξ(a, c)` and the coherent information of `ξ` lower bounds the
//! capacity.
//!
//! Phase-insensitive channels commute with random phase rotations, so the
//! symmetrization step of the protocol is the identity on the records and is
//! not simulated.

use nalgebra::Complex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channels::{tmsv_cov, ChannelModel};
use crate::error::{config, Error, Result};
use crate::gaussmath::{bona_fide_check, g_entropy, symplectic_eigenvalues, CovarianceMatrix};
use crate::optimize::grid_refine_max;
use crate::rng::SimRng;

/// Parameters of the i.i.d. protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolTwoConfig {
    pub n: u64,
    pub k: u64,
    pub n_bar: f64,
    /// Failure probability of each estimator.
    pub delta: f64,
    pub epsilon: f64,
    /// Threshold on Bob's variance.
    pub a: f64,
    /// Threshold on the cross-correlation.
    pub c: f64,
}

impl ProtocolTwoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(config("n and k must be positive"));
        }
        if !(self.n_bar >= 0.0) {
            return Err(config(format!("n_bar must be >= 0, got {}", self.n_bar)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) || !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(config("delta and epsilon must lie in (0, 1)"));
        }
        if !(self.a >= 1.0) || !(self.c >= 0.0) {
            return Err(config(format!("need a >= 1 and c >= 0, got a = {}, c = {}", self.a, self.c)));
        }
        self.xi()?;
        Ok(())
    }

    /// Reference covariance `ξ(a, c)` with Alice's marginal `2n̄ + 1`.
    pub fn xi(&self) -> Result<CovarianceMatrix> {
        reference_covariance(self.a, self.c, self.n_bar)
    }
}

/// `[[(2n̄+1)I, cσz], [cσz, aI]]`, rejected unless bona fide.
pub fn reference_covariance(a: f64, c: f64, n_bar: f64) -> Result<CovarianceMatrix> {
    let xi = CovarianceMatrix::two_mode_standard_form(2.0 * n_bar + 1.0, a, c)
        .map_err(|e| config(format!("reference covariance: {e}")))?;
    if !bona_fide_check(&xi) {
        return Err(config(format!("thresholds (a = {a}, c = {c}) give an unphysical covariance")));
    }
    Ok(xi)
}

/// Heterodyne outcomes of both parties.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterodyneRecord {
    pub x: Vec<Complex<f64>>,
    pub y: Vec<Complex<f64>>,
    /// Channel the record was generated through.
    pub channel: ChannelModel,
}

impl HeterodyneRecord {
    pub fn k(&self) -> usize {
        self.x.len()
    }

    pub fn norm_x_sq(&self) -> f64 {
        self.x.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm_y_sq(&self) -> f64 {
        self.y.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨x, y⟩` as in `‖x̄ + y‖² = ‖x‖² + ‖y‖² + 2⟨x, y⟩`.
    pub fn cross(&self) -> f64 {
        cross_term(&self.x, &self.y)
    }
}

/// Real bilinear form `Re Σ x_i y_i = Σ (Re x_i Re y_i − Im x_i Im y_i)`.
///
/// With the `σz` cross block, `Re x` and `Re y` are positively correlated and
/// `Im x`, `Im y` negatively, so both products contribute `+Σc` on average.
/// For one sample `x = 1 + 2i`, `y = 3 − 4i`: `‖x̄ + y‖² = |4 − 6i|² = 52`
/// and `‖x‖² + ‖y‖² + 2⟨x, y⟩ = 5 + 25 + 2·11 = 52`.
pub fn cross_term(x: &[Complex<f64>], y: &[Complex<f64>]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a * b).re).sum()
}

/// Per-probe second moments of the heterodyne record through `channel`:
/// `(2n̄ + 3/2, Σb + 1/2, Σc)`, where `Σb` and `Σc` come from the channel
/// acting on one mode of the two-mode squeezed vacuum.
pub fn heterodyne_moments(channel: &ChannelModel, n_bar: f64) -> Result<(f64, f64, f64)> {
    let out = channel.apply_cov(&tmsv_cov(n_bar)?, 1)?;
    let sigma_b = out.get(2, 2);
    let sigma_c = out.get(0, 2);
    Ok((2.0 * n_bar + 1.5, sigma_b + 0.5, sigma_c))
}

/// Draws `k` i.i.d. probe pairs: `(Re x, Re y)` with covariance
/// `[[2n̄+3/2, Σc], [Σc, Σb+1/2]]` and `(Im x, Im y)` with the sign of `Σc`
/// flipped.
///
/// Every [`ChannelModel`] is phase insensitive, so no channel is rejected.
pub fn simulate_heterodyne_pairs(
    channel: &ChannelModel,
    n_bar: f64,
    k: usize,
    rng: &mut SimRng,
) -> Result<HeterodyneRecord> {
    let (var_x, var_y, cov) = heterodyne_moments(channel, n_bar)?;
    let sx = var_x.sqrt();
    let rho = cov / sx;
    let residual = var_y - rho * rho;
    if !(residual >= 0.0) {
        return Err(Error::Domain("heterodyne covariance is not positive semidefinite".into()));
    }
    let sr = residual.sqrt();
    let mut x = Vec::with_capacity(k);
    let mut y = Vec::with_capacity(k);
    for _ in 0..k {
        let [z1, z2, z3, z4]: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        x.push(Complex::new(sx * z1, sx * z3));
        y.push(Complex::new(rho * z1 + sr * z2, -rho * z3 + sr * z4));
    }
    Ok(HeterodyneRecord { x, y, channel: *channel })
}

fn lower_tail_denominator(k: f64, delta: f64) -> Result<f64> {
    let den = k - (2.0 * k * (1.0 / delta).ln()).sqrt();
    if !(den > 0.0) {
        return Err(config(format!("k = {k} too small for delta = {delta}")));
    }
    Ok(den)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(config(format!("delta must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

/// `σ_max = ‖y‖² / (2(k − √(2k ln(1/δ)))) − 1/2` from the squared norm.
pub fn sigma_max_from_norm(norm_y_sq: f64, k: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(norm_y_sq / (2.0 * lower_tail_denominator(k, delta)?) - 0.5)
}

/// Upper confidence bound on Bob's quadrature variance.
pub fn sigma_max(y: &[Complex<f64>], delta: f64) -> Result<f64> {
    let norm: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    sigma_max_from_norm(norm, y.len() as f64, delta)
}

/// `γ_min` from the sufficient statistics `‖x‖²`, `‖y‖²` and `⟨x, y⟩`.
pub fn gamma_min_from_stats(norm_x_sq: f64, norm_y_sq: f64, cross: f64, k: f64, delta: f64, n_bar: f64) -> Result<f64> {
    check_delta(delta)?;
    let l2 = (2.0 / delta).ln();
    let upper_den = 4.0 * (k + (2.0 * k * l2).sqrt() + l2);
    let lower_den = 4.0 * lower_tail_denominator(k, delta)?;
    Ok((norm_x_sq + norm_y_sq + 2.0 * cross) / upper_den - n_bar - norm_y_sq / lower_den - 0.75)
}

/// Lower confidence bound on the cross-correlation.
pub fn gamma_min(x: &[Complex<f64>], y: &[Complex<f64>], delta: f64, n_bar: f64) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Shape(format!(
            "heterodyne records must be non-empty and of equal length, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let nx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    let ny: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    gamma_min_from_stats(nx, ny, cross_term(x, y), x.len() as f64, delta, n_bar)
}

/// Passes when `γ_min ≥ c` and `σ_max ≤ a`.
pub fn threshold_test(sigma_max: f64, gamma_min: f64, a: f64, c: f64) -> bool {
    gamma_min >= c && sigma_max <= a
}

/// Symplectic eigenvalues `(ν1, ν2)` of `ξ(a, c)`, largest first.
pub fn xi_spectrum(a: f64, c: f64, n_bar: f64) -> Result<(f64, f64)> {
    let spectrum = symplectic_eigenvalues(&reference_covariance(a, c, n_bar)?)?;
    let v = spectrum.values();
    Ok((v[0], v[1]))
}

/// Coherent information of `ξ` per use, `g(a) − g(ν1) − g(ν2)`, unclamped.
pub fn coherent_information_xi(a: f64, c: f64, n_bar: f64) -> Result<f64> {
    let (nu1, nu2) = xi_spectrum(a, c, n_bar)?;
    Ok(g_entropy(a)? - g_entropy(nu1)? - g_entropy(nu2)?)
}

/// Asymptotic per-use bound `max{0, g(a) − g(ν1) − g(ν2)}`.
pub fn asymptotic_biid(a: f64, c: f64, n_bar: f64) -> Result<f64> {
    Ok(coherent_information_xi(a, c, n_bar)?.max(0.0))
}

/// Thresholds matched to a thermal-loss channel:
/// `a = τ(2n̄+1) + (1−τ)(2n̄_th+1)`, `c = √τ √((2n̄+1)² − 1)`.
pub fn optimal_thresholds_loss(tau: f64, n_bar: f64, n_th: f64) -> Result<(f64, f64)> {
    ChannelModel::loss(tau, n_th)?;
    if !(n_bar >= 0.0) {
        return Err(config(format!("n_bar must be >= 0, got {n_bar}")));
    }
    let a = tau * (2.0 * n_bar + 1.0) + (1.0 - tau) * (2.0 * n_th + 1.0);
    let c = tau.sqrt() * 2.0 * (n_bar * (n_bar + 1.0)).sqrt();
    Ok((a, c))
}

/// Energy-constrained quantum capacity of the pure-loss channel,
/// `max{0, g(2τn̄+1) − g(2(1−τ)n̄+1)}`.
pub fn energy_constrained_capacity_pure_loss(tau: f64, n_bar: f64) -> Result<f64> {
    ChannelModel::loss(tau, 0.0)?;
    let v = g_entropy(2.0 * tau * n_bar + 1.0)? - g_entropy(2.0 * (1.0 - tau) * n_bar + 1.0)?;
    Ok(v.max(0.0))
}

/// Distance kept from both ends of the η-interval.
const ETA_GUARD: f64 = 1e-12;

/// Finite-size bound of the i.i.d. protocol with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Bound {
    /// Total bound over `n` uses, `≥ 0`.
    pub value: f64,
    pub b_iid: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub eta_star: f64,
    /// `inf_η h(η)`.
    pub h_min: f64,
}

/// Correction `h(η) = ω √(log2(2/(√(ε/2) − η)²)) − 4 log2 η + 2` with
/// `ω = 4√k log2(2√(1+n̄) + 2√n̄ + 1)`; returns `(η*, h(η*))`.
pub fn finite_size_correction(k: f64, n_bar: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(k > 0.0) || !(n_bar >= 0.0) {
        return Err(config("need k > 0, n_bar >= 0 and epsilon in (0, 1)"));
    }
    let s = (epsilon / 2.0).sqrt();
    let omega = 4.0 * k.sqrt() * (2.0 * (1.0 + n_bar).sqrt() + 2.0 * n_bar.sqrt() + 1.0).log2();
    let h = |eta: f64, gap: f64| omega * (2.0 / (gap * gap)).log2().sqrt() - 4.0 * eta.log2() + 2.0;
    let at = |z: f64| (s / (1.0 + (-z).exp()), s / (1.0 + z.exp()));
    let z_max = ((s - ETA_GUARD) / ETA_GUARD).ln();
    let best = grid_refine_max(
        |z| {
            let (eta, gap) = at(z);
            Some(-h(eta, gap))
        },
        -z_max,
        z_max,
        1025,
        1e-10,
    )
    .ok_or_else(|| Error::Infeasible("correction term is not finite on the eta interval".into()))?;
    Ok((at(best.x).0, -best.value))
}

/// `n · max{0, g(a) − g(ν1) − g(ν2) − inf_η h(η)/k}`.
pub fn theorem2_bound(cfg: &ProtocolTwoConfig) -> Result<Theorem2Bound> {
    cfg.validate()?;
    let (nu1, nu2) = xi_spectrum(cfg.a, cfg.c, cfg.n_bar)?;
    let info = g_entropy(cfg.a)? - g_entropy(nu1)? - g_entropy(nu2)?;
    let (eta_star, h_min) = finite_size_correction(cfg.k as f64, cfg.n_bar, cfg.epsilon)?;
    let per_use = (info - h_min / cfg.k as f64).max(0.0);
    Ok(Theorem2Bound { value: cfg.n as f64 * per_use, b_iid: info.max(0.0), nu1, nu2, eta_star, h_min })
}

/// Outcome of one run of the i.i.d. protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTwoVerdict {
    pub sigma_max: f64,
    pub gamma_min: f64,
    pub passed: bool,
    /// Certified bound (total over `n` uses); 0 when the test failed.
    pub q_lower: f64,
    pub b_iid: f64,
    pub nu1: f64,
    pub nu2: f64,
}

/// Evaluates the estimators on `record` and, if the thresholds are met, the
/// finite-size bound.
pub fn evaluate_record(cfg: &ProtocolTwoConfig, record: &HeterodyneRecord) -> Result<ProtocolTwoVerdict> {
    cfg.validate()?;
    let s = sigma_max(&record.y, cfg.delta)?;
    let g = gamma_min(&record.x, &record.y, cfg.delta, cfg.n_bar)?;
    let passed = threshold_test(s, g, cfg.a, cfg.c);
    let bound = theorem2_bound(cfg)?;
    Ok(ProtocolTwoVerdict {
        sigma_max: s,
        gamma_min: g,
        passed,
        q_lower: if passed { bound.value } else { 0.0 },
        b_iid: bound.b_iid,
        nu1: bound.nu1,
        nu2: bound.nu2,
    })
}

/// Simulates `k` probes through `channel` and evaluates the verdict.
pub fn run_protocol_two(
    cfg: &ProtocolTwoConfig,
    channel: &ChannelModel,
    rng: &mut SimRng,
) -> Result<ProtocolTwoVerdict> {
    cfg.validate()?;
    let k = usize::try_from(cfg.k).map_err(|_| config("k too large to simulate"))?;
    let record = simulate_heterodyne_pairs(channel, cfg.n_bar, k, rng)?;
    evaluate_record(cfg, &record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn cross_term_worked_example() {
        let x = [Complex::new(1.0, 2.0)];
        let y = [Complex::new(3.0, -4.0)];
        let direct = (x[0].conj() + y[0]).norm_sqr();
        assert_eq!(direct, 52.0);
        assert_eq!(5.0 + 25.0 + 2.0 * cross_term(&x, &y), 52.0);
    }

    #[test]
    fn sigma_max_substitutions() {
        assert!((sigma_max_from_norm(2000.0, 1000.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(sigma_max_from_norm(0.0, 1000.0, 0.05).unwrap(), -0.5);
        assert!(matches!(sigma_max_from_norm(1.0, 4.0, 0.05), Err(Error::Config(_))));
    }

    #[test]
    fn gamma_min_zero_records() {
        let z = vec![Complex::new(0.0, 0.0); 100];
        let g = gamma_min(&z, &z, 0.05, 9.5).unwrap();
        assert!((g + 9.5 + 0.75).abs() < 1e-15);
    }

    #[test]
    fn gamma_min_is_unbiased_in_the_limit() {
        let (n_bar, sb, sc) = (9.5, 16.2, 0.8f64.sqrt() * 399f64.sqrt());
        let k = 1e12;
        let g = gamma_min_from_stats(
            2.0 * k * (2.0 * n_bar + 1.5),
            2.0 * k * (sb + 0.5),
            2.0 * k * sc,
            k,
            1.0 - 1e-15,
            n_bar,
        )
        .unwrap();
        assert!((g - sc).abs() < 1e-3);
    }

    #[test]
    fn threshold_boundaries() {
        assert!(threshold_test(2.0, 1.0, 2.0, 1.0));
        assert!(!threshold_test(2.0, 1.0 - 1e-9, 2.0, 1.0));
        assert!(!threshold_test(2.0 + 1e-9, 1.0, 2.0, 1.0));
    }

    #[test]
    fn optimal_threshold_examples() {
        let (a, c) = optimal_thresholds_loss(1.0, 9.5, 3.0).unwrap();
        assert_eq!(a, 20.0);
        assert!((c - 399f64.sqrt()).abs() < 1e-12);
        assert_eq!(optimal_thresholds_loss(0.0, 9.5, 0.0).unwrap(), (1.0, 0.0));
        let (a, c) = optimal_thresholds_loss(0.8, 9.5, 1.0).unwrap();
        assert!((a - 16.6).abs() < 1e-12);
        assert!((c - 0.8f64.sqrt() * 399f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn biid_spot_values() {
        let (a, c) = optimal_thresholds_loss(0.8, 9.5, 0.0).unwrap();
        let (nu1, nu2) = xi_spectrum(a, c, 9.5).unwrap();
        assert!((nu1 - 4.8).abs() < 1e-9 && (nu2 - 1.0).abs() < 1e-9);
        assert!((asymptotic_biid(a, c, 9.5).unwrap() - 1.764_545_177_959_645_8).abs() < 1e-9);
        assert_eq!(asymptotic_biid(7.0, 0.0, 9.5).unwrap(), 0.0);
        assert_eq!(energy_constrained_capacity_pure_loss(0.5, 9.5).unwrap(), 0.0);
    }

    #[test]
    fn unphysical_thresholds_rejected() {
        let cfg = ProtocolTwoConfig { n: 10, k: 1000, n_bar: 9.5, delta: 0.05, epsilon: 0.02, a: 16.2, c: 19.0 };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn theorem2_converges_to_biid() {
        let (a, c) = optimal_thresholds_loss(0.8, 9.5, 0.0).unwrap();
        let cfg = ProtocolTwoConfig { n: 1, k: 10_000_000_000_000_000, n_bar: 9.5, delta: 0.05, epsilon: 0.02, a, c };
        let b = theorem2_bound(&cfg).unwrap();
        assert!((b.value - b.b_iid).abs() < 1e-4);
        let small = theorem2_bound(&ProtocolTwoConfig { k: 100, ..cfg }).unwrap();
        assert_eq!(small.value, 0.0);
    }

    #[test]
    fn identity_channel_alice_variance() {
        let rec = simulate_heterodyne_pairs(&ChannelModel::Identity, 1.0, 20_000, &mut stream_rng(5, 0)).unwrap();
        let var = rec.x.iter().map(|z| z.re * z.re).sum::<f64>() / 20_000.0;
        // variance 3.5, standard error 3.5·√(2/k) ≈ 0.035
        assert!((var - 3.5).abs() < 5.0 * 0.035);
    }
}
