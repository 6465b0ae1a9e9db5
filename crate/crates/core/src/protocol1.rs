//! Capacity detection under arbitrarily correlated noise.
//!
//! Alice sends `k` displaced squeezed probes, half squeezed in position and
//! half in momentum, with Gaussian displacements of variance `2n̄ + 1`
//! truncated to `[-α, α]`. Bob homodynes each probe in the matching
//! quadrature. Both records are discretized into `2α/d` bins and the test
//! passes when the mean absolute bin distance is at most `t`. A passed test
//! certifies a lower bound on the one-shot capacity of the remaining `n`
//! channel uses, valid for any (even adversarial) multimode channel.
//!
//! The bound certified by a passed test holds with error probability
//! `p_err`. The same parameter plays the role of the minimal pass probability
//! `p_pass` in the disjunctive form of the guarantee ("either the test passes
//! with probability below `p_pass`, or the bound holds"); the two are
//! identified here.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelModel, Quadrature};
use crate::error::{config, Error, Result};
use crate::gaussmath::{gaussian_tail_outside_window, log2_gamma_fn};
use crate::optimize::grid_refine_max;
use crate::rng::SimRng;

/// Parameters of the correlated-noise protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolOneConfig {
    /// Channel uses reserved for communication.
    pub n: u64,
    /// Channel uses sacrificed for the test; must be even.
    pub k: u64,
    /// Detector pixel width.
    pub d: f64,
    /// Test threshold on the mean bin distance, in bin units.
    pub t: f64,
    /// Displacement and readout cutoff; `2α/d` must be a positive integer.
    pub alpha: f64,
    /// Mean photon number of the equivalent thermal input.
    pub n_bar: f64,
    /// Infidelity tolerance of the one-shot capacity.
    pub epsilon: f64,
    /// Inference error probability.
    pub p_err: f64,
}

impl ProtocolOneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(config("n and k must be positive"));
        }
        if !self.k.is_multiple_of(2) {
            return Err(config(format!("k must be even, got {}", self.k)));
        }
        if !(self.d > 0.0) || !(self.alpha > 0.0) || !(self.t >= 0.0) || !(self.n_bar >= 0.0) {
            return Err(config("need d > 0, alpha > 0, t >= 0 and n_bar >= 0"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) || !(self.p_err > 0.0 && self.p_err < 1.0) {
            return Err(config("epsilon and p_err must lie in (0, 1)"));
        }
        self.bins()?;
        Ok(())
    }

    /// Alphabet size `2α/d`.
    pub fn bins(&self) -> Result<u64> {
        bin_count(self.d, self.alpha)
    }

    /// Variance of Alice's displacement distribution, `10^{s/10} = 2n̄ + 1`.
    pub fn displacement_variance(&self) -> f64 {
        2.0 * self.n_bar + 1.0
    }

    /// Probability that a single displacement draw lands outside
    /// `[-α, α]`, i.e. `1 − p_{α,s}`.
    pub fn cutoff_tail(&self) -> Result<f64> {
        gaussian_tail_outside_window(self.alpha, self.displacement_variance())
    }

    /// `1 − p_{α,s}^n` without cancellation.
    pub fn cutoff_failure(&self) -> Result<f64> {
        let tail = self.cutoff_tail()?;
        Ok(-(self.n as f64 * (-tail).ln_1p()).exp_m1())
    }
}

fn bin_count(d: f64, alpha: f64) -> Result<u64> {
    let ratio = 2.0 * alpha / d;
    let rounded = ratio.round();
    if !(rounded >= 1.0) || (ratio - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(config(format!("2*alpha/d must be a positive integer, got {ratio}")));
    }
    Ok(rounded as u64)
}

/// Alice's test inputs: displacement labels, bases and rejection counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TestInputs {
    pub displacements: Vec<f64>,
    pub bases: Vec<Quadrature>,
    /// Number of rejected draws before each accepted displacement.
    pub retries: Vec<u32>,
}

impl TestInputs {
    pub fn total_retries(&self) -> u64 {
        self.retries.iter().map(|&r| r as u64).sum()
    }
}

/// Draws `k/2` position and `k/2` momentum labels in random order and one
/// displacement per probe from `N(0, 2n̄+1)`, redrawing until it lies in
/// `[-α, α]`.
pub fn prepare_test_inputs(cfg: &ProtocolOneConfig, rng: &mut SimRng) -> Result<TestInputs> {
    cfg.validate()?;
    let k = usize::try_from(cfg.k).map_err(|_| config("k too large to simulate"))?;
    let mut bases: Vec<Quadrature> =
        (0..k).map(|i| if i < k / 2 { Quadrature::Position } else { Quadrature::Momentum }).collect();
    bases.shuffle(rng);
    let sigma = cfg.displacement_variance().sqrt();
    let mut displacements = Vec::with_capacity(k);
    let mut retries = Vec::with_capacity(k);
    for _ in 0..k {
        let mut rejected = 0u32;
        let x = loop {
            let z: f64 = StandardNormal.sample(rng);
            let x = sigma * z;
            if x.abs() <= cfg.alpha {
                break x;
            }
            rejected += 1;
        };
        displacements.push(x);
        retries.push(rejected);
    }
    Ok(TestInputs { displacements, bases, retries })
}

/// Value of the prepared quadrature of each probe as it enters the channel.
///
/// A label `x` corresponds to homodyning one half of a two-mode squeezed
/// vacuum with thermal marginal variance `a = 2n̄+1`; the other half is then a
/// squeezed state with mean `x·√(a²−1)/a` and variance `1/a` in the measured
/// quadrature.
pub fn probe_quadratures(labels: &[f64], n_bar: f64, rng: &mut SimRng) -> Vec<f64> {
    let a = 2.0 * n_bar + 1.0;
    let gain = 2.0 * (n_bar * (n_bar + 1.0)).sqrt() / a;
    let sd = a.recip().sqrt();
    labels
        .iter()
        .map(|&x| {
            let z: f64 = StandardNormal.sample(rng);
            gain * x + sd * z
        })
        .collect()
}

/// Bob's side of the channel in the correlated-noise protocol: maps the
/// prepared quadrature values of all `k` probes to homodyne outcomes.
///
/// Implementations may correlate uses arbitrarily; [`ChannelModel`] acts
/// independently on each use.
pub trait HomodyneChannel {
    fn transmit(&mut self, inputs: &[f64], bases: &[Quadrature], rng: &mut SimRng) -> Vec<f64>;
}

impl HomodyneChannel for ChannelModel {
    fn transmit(&mut self, inputs: &[f64], _bases: &[Quadrature], rng: &mut SimRng) -> Vec<f64> {
        inputs.iter().map(|&x| self.sample_quadrature(x, rng)).collect()
    }
}

/// Bin index of `value` on the partition
/// `(-∞, -α+d], (-α+d, -α+2d], …, (α-d, ∞)` of `2α/d` cells.
pub fn discretize(value: f64, d: f64, alpha: f64) -> u32 {
    let bins = (2.0 * alpha / d).round() as i64;
    // interior cell j covers (-α + j d, -α + (j+1) d]
    let j = ((value + alpha) / d).ceil() as i64 - 1;
    j.clamp(0, bins - 1) as u32
}

/// Mean absolute bin distance and whether it is at most `t`.
pub fn correlation_test(x_a: &[u32], x_b: &[u32], t: f64) -> Result<(bool, f64)> {
    if x_a.len() != x_b.len() || x_a.is_empty() {
        return Err(Error::Shape(format!(
            "test records must be non-empty and of equal length, got {} and {}",
            x_a.len(),
            x_b.len()
        )));
    }
    let total: u64 = x_a.iter().zip(x_b).map(|(&a, &b)| a.abs_diff(b) as u64).sum();
    let avg = total as f64 / x_a.len() as f64;
    Ok((avg <= t, avg))
}

/// Discretized records of one simulated test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRecord {
    pub x_a: Vec<u32>,
    pub x_b: Vec<u32>,
    pub bases: Vec<Quadrature>,
    pub retries: Vec<u32>,
}

impl TestRecord {
    pub fn evaluate(&self, t: f64) -> Result<(bool, f64)> {
        correlation_test(&self.x_a, &self.x_b, t)
    }
}

/// Runs the test half of the protocol: prepare, transmit, measure, discretize.
pub fn simulate_test<C: HomodyneChannel + ?Sized>(
    cfg: &ProtocolOneConfig,
    channel: &mut C,
    rng: &mut SimRng,
) -> Result<TestRecord> {
    let inputs = prepare_test_inputs(cfg, rng)?;
    let signal = probe_quadratures(&inputs.displacements, cfg.n_bar, rng);
    let outcomes = channel.transmit(&signal, &inputs.bases, rng);
    if outcomes.len() != signal.len() {
        return Err(Error::Shape("channel returned the wrong number of outcomes".into()));
    }
    let x_a = inputs.displacements.iter().map(|&x| discretize(x, cfg.d, cfg.alpha)).collect();
    let x_b = outcomes.iter().map(|&y| discretize(y, cfg.d, cfg.alpha)).collect();
    Ok(TestRecord { x_a, x_b, bases: inputs.bases, retries: inputs.retries })
}

/// Why a bound evaluated to what it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    /// The supremum is positive.
    Positive,
    /// The supremum exists but is not positive.
    NonPositive,
    /// `λ` exceeds the admissible smoothing, so the η-interval is empty.
    TriviallyZero,
    /// The η-interval is non-empty but no point in it is feasible.
    CutoffDominated,
}

/// Result of a finite-size bound optimization over η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    /// Reported bound: clamped at 0 for capacities, the raw supremum for
    /// entanglement.
    pub value: f64,
    /// Supremum of the objective, when the feasible set is non-empty.
    pub supremum: Option<f64>,
    pub eta_star: Option<f64>,
    pub lambda: f64,
    pub zeta: Option<f64>,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub status: BoundStatus,
}

/// Constant pieces of the finite-size objective for one configuration.
struct Objective {
    n: f64,
    t: f64,
    log2_phase_space: f64,
    mu_prefactor: f64,
    fail: f64,
    pass_factor: f64,
    sqrt_p: f64,
    /// `√(ε/2)` for capacity, `√ε` for entanglement.
    smoothing: f64,
    /// Additive constant: 2 for capacity, 1 for entanglement.
    offset: f64,
}

struct Point {
    value: f64,
    zeta: f64,
    mu: f64,
    delta: f64,
}

impl Objective {
    fn new(cfg: &ProtocolOneConfig, smoothing: f64, offset: f64) -> Result<Self> {
        cfg.validate()?;
        let (n, k) = (cfg.n as f64, cfg.k as f64);
        let p = cfg.p_err;
        Ok(Self {
            n,
            t: cfg.t,
            log2_phase_space: (2.0 * std::f64::consts::PI / (cfg.d * cfg.d)).log2(),
            mu_prefactor: (2.0 * cfg.alpha / cfg.d) * ((k + n) / n * (k + 1.0) / k / k).sqrt(),
            fail: (2.0 * cfg.cutoff_failure()?).sqrt(),
            pass_factor: 3.0 + 5.0 / (4.0 * p),
            sqrt_p: p.sqrt(),
            smoothing,
            offset,
        })
    }

    fn lambda(&self) -> f64 {
        8.0 * self.fail * (self.pass_factor - 1.0 / self.sqrt_p)
    }

    /// Objective at `eta`, where `gap = smoothing − λ − eta` is passed
    /// separately to keep precision near the upper end of the interval.
    fn eval(&self, eta: f64, gap: f64) -> Option<Point> {
        if !(eta > 0.0) || !(gap > 0.0) {
            return None;
        }
        let zeta = (self.smoothing - eta + 8.0 * self.fail / self.sqrt_p) / self.pass_factor;
        // ζ/4 − 2f(p_α, n) simplifies to gap / (4 (3 + 5/(4p)))
        let inner = gap / (4.0 * self.pass_factor);
        let log_term = -inner.log2();
        if !(log_term >= 0.0) {
            return None;
        }
        let mu = self.mu_prefactor * log_term.sqrt();
        let delta = 4.0 * (-eta.log2()) + 2.0 * (2.0 / (zeta * zeta)).log2() + self.offset;
        let value = self.n * self.log2_phase_space - 2.0 * self.n * log2_gamma_fn(self.t + mu).ok()? - delta;
        value.is_finite().then_some(Point { value, zeta, mu, delta })
    }

    fn optimize(&self, clamp: bool) -> BoundEvaluation {
        let lambda = self.lambda();
        let upper = self.smoothing - lambda;
        let empty = BoundEvaluation {
            value: 0.0,
            supremum: None,
            eta_star: None,
            lambda,
            zeta: None,
            mu: None,
            delta: None,
            status: BoundStatus::TriviallyZero,
        };
        if !(upper > 0.0) {
            return empty;
        }
        // logit parametrization: η = upper·σ(z), gap = upper·σ(−z); resolves
        // optima at η ≪ upper as well as near the upper end
        let at = |z: f64| {
            let eta = upper / (1.0 + (-z).exp());
            let gap = upper / (1.0 + z.exp());
            (eta, gap)
        };
        let objective = |z: f64| {
            let (eta, gap) = at(z);
            self.eval(eta, gap).map(|p| p.value)
        };
        let Some(best) = grid_refine_max(objective, -700.0, 700.0, ETA_GRID_POINTS, 1e-10) else {
            return BoundEvaluation { status: BoundStatus::CutoffDominated, ..empty };
        };
        let (eta, gap) = at(best.x);
        let point = self.eval(eta, gap).expect("optimum is feasible");
        let status = if point.value > 0.0 { BoundStatus::Positive } else { BoundStatus::NonPositive };
        BoundEvaluation {
            value: if clamp { point.value.max(0.0) } else { point.value },
            supremum: Some(point.value),
            eta_star: Some(eta),
            lambda,
            zeta: Some(point.zeta),
            mu: Some(point.mu),
            delta: Some(point.delta),
            status,
        }
    }
}

/// Nodes of the initial η scan (in logit space) before golden-section
/// refinement.
pub const ETA_GRID_POINTS: usize = 2049;

/// Certified lower bound (qubits, total over `n` uses) on the one-shot
/// capacity given that the test passed:
/// `max{0, sup_η f(η)}` over `η ∈ (0, √(ε/2) − λ)`.
pub fn theorem1_bound(cfg: &ProtocolOneConfig) -> Result<BoundEvaluation> {
    Ok(Objective::new(cfg, (cfg.epsilon / 2.0).sqrt(), 2.0)?.optimize(true))
}

/// Lower bound on the number of maximally entangled qubit pairs with
/// infidelity at most `ε` obtainable through the `n` communication uses.
///
/// Returns `None` when the η-interval `(0, √ε − λ)` is empty. The value is
/// the supremum itself and may be negative.
pub fn entanglement_bound(cfg: &ProtocolOneConfig) -> Result<Option<BoundEvaluation>> {
    let eval = Objective::new(cfg, cfg.epsilon.sqrt(), 1.0)?.optimize(false);
    Ok(match eval.status {
        BoundStatus::TriviallyZero | BoundStatus::CutoffDominated => None,
        _ => Some(eval),
    })
}

/// Asymptotic per-use bound `max{0, log2(2π/d²) − 2 log2 γ(t)}`.
pub fn asymptotic_b(d: f64, t: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(config(format!("d must be positive, got {d}")));
    }
    let b = (2.0 * std::f64::consts::PI / (d * d)).log2() - 2.0 * log2_gamma_fn(t)?;
    Ok(b.max(0.0))
}

/// Threshold (bin units) that an i.i.d. thermal-loss channel passes with
/// probability → 1 as `k → ∞`: the mean of the half-normal bin distance,
/// `(1/d)√(4/π)·√(n̄(1+τ) + 1 + n̄_th(1−τ) − 2√(n̄(n̄+1)τ))`.
pub fn asymptotic_threshold_t(tau: f64, n_bar: f64, n_th: f64, d: f64) -> Result<f64> {
    ChannelModel::loss(tau, n_th)?;
    if !(n_bar >= 0.0) || !(d > 0.0) {
        return Err(config("need n_bar >= 0 and d > 0"));
    }
    // n̄(1+τ) + 1 − 2√(n̄(n̄+1)τ) = (√(n̄+1) − √(τn̄))²
    let root_gap = (n_bar + 1.0 - tau * n_bar) / ((n_bar + 1.0).sqrt() + (tau * n_bar).sqrt());
    let radicand = root_gap * root_gap + n_th * (1.0 - tau);
    debug_assert!(radicand > 0.0);
    Ok((4.0 / std::f64::consts::PI).sqrt() * radicand.sqrt() / d)
}

/// Approximate probability that a pure-loss channel of transmissivity `tau`
/// passes the test:
/// `½ + ½ erf[√(k/(π−2)) (t d √π / (2(√(n̄+1) − √(τ n̄))) − 1)]`.
pub fn pass_probability_pure_loss(k: u64, t: f64, d: f64, tau: f64, n_bar: f64) -> Result<f64> {
    ChannelModel::loss(tau, 0.0)?;
    if !(tau > 0.0) || !(d > 0.0) || !(n_bar >= 0.0) {
        return Err(config("need 0 < tau <= 1, d > 0 and n_bar >= 0"));
    }
    let root_gap = (n_bar + 1.0 - tau * n_bar) / ((n_bar + 1.0).sqrt() + (tau * n_bar).sqrt());
    let scale = (k as f64 / (std::f64::consts::PI - 2.0)).sqrt();
    let arg = scale * (t * d * std::f64::consts::PI.sqrt() / (2.0 * root_gap) - 1.0);
    Ok(0.5 * libm::erfc(-arg))
}

/// Outcome of one full run: the test result and, if passed, the certified
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOneVerdict {
    pub passed: bool,
    pub avg_distance: f64,
    pub q_lower: Option<f64>,
    pub ent_lower: Option<f64>,
    pub eta_star: Option<f64>,
    pub lambda: Option<f64>,
    pub zeta: Option<f64>,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
}

impl ProtocolOneVerdict {
    /// Verdict fields for a test with the given outcome. Bounds are filled in
    /// only when the test passed.
    pub fn from_test(cfg: &ProtocolOneConfig, passed: bool, avg_distance: f64) -> Result<Self> {
        let mut verdict = Self {
            passed,
            avg_distance,
            q_lower: None,
            ent_lower: None,
            eta_star: None,
            lambda: None,
            zeta: None,
            mu: None,
            delta: None,
        };
        if passed {
            let q = theorem1_bound(cfg)?;
            verdict.q_lower = Some(q.value);
            verdict.ent_lower = entanglement_bound(cfg)?.map(|e| e.value);
            verdict.eta_star = q.eta_star;
            verdict.lambda = Some(q.lambda);
            verdict.zeta = q.zeta;
            verdict.mu = q.mu;
            verdict.delta = q.delta;
        }
        Ok(verdict)
    }
}

/// Simulates the test through `channel` and evaluates the certified bounds.
pub fn run_protocol_one<C: HomodyneChannel + ?Sized>(
    cfg: &ProtocolOneConfig,
    channel: &mut C,
    rng: &mut SimRng,
) -> Result<ProtocolOneVerdict> {
    let record = simulate_test(cfg, channel, rng)?;
    let (passed, avg) = record.evaluate(cfg.t)?;
    ProtocolOneVerdict::from_test(cfg, passed, avg)
}
