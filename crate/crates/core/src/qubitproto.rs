//! Capacity detection for qubit channels by tomography of the Choi state.
//!
//! One half of `|Ψ+⟩` is sent through the channel and the pair is measured
//! in the 16 local Pauli settings `σ_i ⊗ σ_j`. Each setting's counts define
//! half-spaces that contain the true Choi state with high probability; the
//! worst-case conditional entropy over their intersection, corrected for
//! finite statistics, lower bounds the one-shot capacity.
//!
//! Two-qubit matrices are ordered `A ⊗ B` with `A` the reference qubit and
//! `B` the channel output, so basis index `2a + b`.

use std::io::Read;

use nalgebra::{Complex, Matrix2, Matrix4};
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::gaussmath::binary_entropy;
use crate::optimize::{bisect, grid_refine_max};
use crate::rng::SimRng;

pub type C64 = Complex<f64>;
pub type Qubit = Matrix2<C64>;
pub type TwoQubit = Matrix4<C64>;

/// Number of local Pauli settings.
pub const SETTINGS: usize = 16;
/// Outcomes per setting.
pub const OUTCOMES: usize = 4;

const DENSITY_TOL: f64 = 1e-10;

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Channel with Kraus operators `A1 = cos α |0⟩⟨0| + cos β |1⟩⟨1|` and
/// `A2 = sin β |0⟩⟨1| + sin α |1⟩⟨0|`.
///
/// `α = β` is a bit flip, `β = 0` is amplitude damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitChannelSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl QubitChannelSpec {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn kraus(&self) -> [Qubit; 2] {
        let (sa, ca) = self.alpha.sin_cos();
        let (sb, cb) = self.beta.sin_cos();
        let a1 = Matrix2::new(c(ca), c(0.0), c(0.0), c(cb));
        let a2 = Matrix2::new(c(0.0), c(sb), c(sa), c(0.0));
        [a1, a2]
    }

    /// Largest entry of `|Σ A_i† A_i − I|`.
    pub fn completeness_defect(&self) -> f64 {
        let sum: Qubit = self.kraus().iter().map(|a| a.adjoint() * a).sum();
        (sum - Qubit::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, rho: &Qubit) -> Qubit {
        self.kraus().iter().map(|a| a * rho * a.adjoint()).sum()
    }
}

/// `(id ⊗ Λ)(|Ψ+⟩⟨Ψ+|)`.
pub fn choi_state(spec: &QubitChannelSpec) -> TwoQubit {
    let mut psi = nalgebra::Vector4::<C64>::zeros();
    psi[0] = c(std::f64::consts::FRAC_1_SQRT_2);
    psi[3] = c(std::f64::consts::FRAC_1_SQRT_2);
    let proj = psi * psi.adjoint();
    spec.kraus()
        .iter()
        .map(|a| {
            let op = Qubit::identity().kronecker(a);
            op * proj * op.adjoint()
        })
        .sum()
}

/// Reduced state of the output qubit `B`.
pub fn reduce_to_b(rho: &TwoQubit) -> Qubit {
    Matrix2::from_fn(|b, bp| rho[(b, bp)] + rho[(2 + b, 2 + bp)])
}

/// Reduced state of the reference qubit `A`.
pub fn reduce_to_a(rho: &TwoQubit) -> Qubit {
    Matrix2::from_fn(|a, ap| rho[(2 * a, 2 * ap)] + rho[(2 * a + 1, 2 * ap + 1)])
}

fn hermitian_defect(m: &TwoQubit) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Checks Hermiticity, unit trace and positivity to 1e-10.
pub fn validate_density(rho: &TwoQubit) -> Result<()> {
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(domain("density matrix has non-finite entries"));
    }
    if hermitian_defect(rho) > DENSITY_TOL {
        return Err(domain("density matrix is not Hermitian"));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
        return Err(domain(format!("density matrix has trace {tr}")));
    }
    let min = rho.symmetric_eigenvalues().min();
    if min < -DENSITY_TOL {
        return Err(domain(format!("density matrix has eigenvalue {min}")));
    }
    Ok(())
}

fn entropy_of_spectrum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

/// Von Neumann entropy of a two-qubit state, in bits.
pub fn entropy4(rho: &TwoQubit) -> f64 {
    entropy_of_spectrum(rho.symmetric_eigenvalues().iter().copied())
}

/// Von Neumann entropy of a qubit state, in bits.
pub fn entropy2(rho: &Qubit) -> f64 {
    entropy_of_spectrum(rho.symmetric_eigenvalues().iter().copied())
}

/// `H(A|B) = H(AB) − H(B)`.
pub fn conditional_entropy(rho: &TwoQubit) -> f64 {
    entropy4(rho) - entropy2(&reduce_to_b(rho))
}

/// `H(B) − H(AB)` of a Choi state; may be negative.
pub fn coherent_information(choi: &TwoQubit) -> Result<f64> {
    validate_density(choi)?;
    Ok(-conditional_entropy(choi))
}

/// `h((cos²α + sin²β)/2) − h((sin²α + sin²β)/2)`.
pub fn coherent_information_closed_form(spec: &QubitChannelSpec) -> Result<f64> {
    let (sa, ca) = spec.alpha.sin_cos();
    let sb = spec.beta.sin();
    Ok(binary_entropy(0.5 * (ca * ca + sb * sb))? - binary_entropy(0.5 * (sa * sa + sb * sb))?)
}

fn pauli(i: usize) -> Qubit {
    let (o, l) = (c(0.0), c(1.0));
    let im = Complex::new(0.0, 1.0);
    match i {
        0 => Qubit::identity(),
        1 => Matrix2::new(o, l, l, o),
        2 => Matrix2::new(o, -im, im, o),
        3 => Matrix2::new(l, o, o, -l),
        _ => unreachable!("Pauli index out of range"),
    }
}

/// Projector onto outcome `b` (0 ↔ +1) when measuring Pauli `i`; the identity
/// is read out in the `Z` basis.
fn pauli_projector(i: usize, b: usize) -> Qubit {
    let axis = if i == 0 { pauli(3) } else { pauli(i) };
    let sign = if b == 0 { 1.0 } else { -1.0 };
    (Qubit::identity() + axis * c(sign)) * c(0.5)
}

/// Pauli indices `(i_B, j_A)` of setting `k = 4 i_B + j_A`.
pub fn setting_paulis(k: usize) -> (usize, usize) {
    (k / 4, k % 4)
}

/// POVM element `E_k^(l)` with `l = 2 b_B + b_A`, as a matrix on `A ⊗ B`.
pub fn povm_element(k: usize, l: usize) -> TwoQubit {
    let (i_b, j_a) = setting_paulis(k);
    pauli_projector(j_a, l % 2).kronecker(&pauli_projector(i_b, l / 2))
}

/// Outcome distribution of setting `k`, clamped to be non-negative.
pub fn outcome_probabilities(rho: &TwoQubit, k: usize) -> [f64; OUTCOMES] {
    let mut p: [f64; OUTCOMES] = std::array::from_fn(|l| (rho * povm_element(k, l)).trace().re.max(0.0));
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

/// Tomography record: shots and outcome counts per setting, and the error
/// budget of each half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyCounts {
    /// `n_k^l`.
    pub counts: [[u64; OUTCOMES]; SETTINGS],
    /// `δ_k^l`; they sum to the overall failure probability.
    pub delta_cells: [[f64; OUTCOMES]; SETTINGS],
}

impl TomographyCounts {
    /// Counts with the budget `δ` split uniformly over the 64 cells.
    pub fn with_uniform_budget(counts: [[u64; OUTCOMES]; SETTINGS], delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(config(format!("delta must lie in (0, 1), got {delta}")));
        }
        let cell = delta / (SETTINGS * OUTCOMES) as f64;
        let out = Self { counts, delta_cells: [[cell; OUTCOMES]; SETTINGS] };
        out.validate()?;
        Ok(out)
    }

    /// `n_k`.
    pub fn shots(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    /// `n = Σ_k n_k`.
    pub fn total(&self) -> u64 {
        (0..SETTINGS).map(|k| self.shots(k)).sum()
    }

    pub fn delta(&self) -> f64 {
        self.delta_cells.iter().flatten().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.total() == 0 {
            return Err(config("tomography record has no shots"));
        }
        if self.delta_cells.iter().flatten().any(|&d| !(d > 0.0 && d < 1.0)) {
            return Err(config("every cell error budget must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Samples `shots_per_setting` measurements of each setting on `rho`.
pub fn simulate_tomography(
    rho: &TwoQubit,
    shots_per_setting: u64,
    delta: f64,
    rng: &mut SimRng,
) -> Result<TomographyCounts> {
    validate_density(rho)?;
    let mut counts = [[0u64; OUTCOMES]; SETTINGS];
    for (k, row) in counts.iter_mut().enumerate() {
        let p = outcome_probabilities(rho, k);
        let mut remaining = shots_per_setting;
        let mut mass = 1.0;
        for l in 0..OUTCOMES - 1 {
            let q = if mass > 0.0 { (p[l] / mass).clamp(0.0, 1.0) } else { 0.0 };
            let draw = Binomial::new(remaining, q).map_err(|e| domain(e.to_string()))?.sample(rng);
            row[l] = draw;
            remaining -= draw;
            mass -= p[l];
        }
        row[OUTCOMES - 1] = remaining;
    }
    TomographyCounts::with_uniform_budget(counts, delta)
}

/// Reads `setting_index,outcome_index,count` rows. Missing cells count as 0.
pub fn read_counts_csv<R: Read>(reader: R, delta: f64) -> Result<TomographyCounts> {
    #[derive(Deserialize)]
    struct Row {
        setting_index: usize,
        outcome_index: usize,
        count: u64,
    }
    let mut counts = [[0u64; OUTCOMES]; SETTINGS];
    let mut seen = [[false; OUTCOMES]; SETTINGS];
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: Row = row?;
        if row.setting_index >= SETTINGS || row.outcome_index >= OUTCOMES {
            return Err(config(format!("cell ({}, {}) out of range", row.setting_index, row.outcome_index)));
        }
        if std::mem::replace(&mut seen[row.setting_index][row.outcome_index], true) {
            return Err(config(format!("duplicate cell ({}, {})", row.setting_index, row.outcome_index)));
        }
        counts[row.setting_index][row.outcome_index] = row.count;
    }
    TomographyCounts::with_uniform_budget(counts, delta)
}

fn kl_divergence(x: f64, y: f64) -> f64 {
    let term = |p: f64, q: f64| if p == 0.0 { 0.0 } else { p * (p / q).ln() };
    term(x, y) + term(1.0 - x, 1.0 - y)
}

/// Positive root `ε` of `D(p̂ ‖ p̂ + ε) = ln(1/δ_cell) / n` with `D` the
/// binary relative entropy in nats. Returns `1 − p̂` when no root exists.
pub fn confidence_epsilon(p_hat: f64, delta_cell: f64, n: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_hat) || !(delta_cell > 0.0 && delta_cell <= 1.0) || n == 0 {
        return Err(config("need p_hat in [0, 1], delta_cell in (0, 1] and n > 0"));
    }
    let rhs = (1.0 / delta_cell).ln() / n as f64;
    let room = 1.0 - p_hat;
    if rhs == 0.0 {
        return Ok(0.0);
    }
    if room == 0.0 {
        return Ok(0.0);
    }
    if p_hat == 0.0 {
        // D(0 ‖ ε) = −ln(1 − ε)
        return Ok(-(-rhs).exp_m1());
    }
    let f = |eps: f64| kl_divergence(p_hat, p_hat + eps) - rhs;
    let hi = room * (1.0 - 1e-15);
    if f(hi) < 0.0 {
        return Ok(room);
    }
    bisect(f, 0.0, hi, 1e-16 * room.max(1e-300))
}

/// Slack `ε(n_k^l/n, δ_k^l, n)` of every half-space.
pub fn halfspace_slacks(counts: &TomographyCounts) -> Result<[[f64; OUTCOMES]; SETTINGS]> {
    counts.validate()?;
    let n = counts.total();
    let mut out = [[0.0; OUTCOMES]; SETTINGS];
    for (row, (cells, deltas)) in out.iter_mut().zip(counts.counts.iter().zip(&counts.delta_cells)) {
        for (slot, (&c, &d)) in row.iter_mut().zip(cells.iter().zip(deltas)) {
            *slot = confidence_epsilon(c as f64 / n as f64, d, n)?;
        }
    }
    Ok(out)
}

/// Largest violation of `(n_k/n) tr(ρ E_k^(l)) ≤ n_k^l/n + ε`, or a
/// non-positive number when every constraint holds.
fn max_violation(rho: &TwoQubit, counts: &TomographyCounts, slacks: &[[f64; OUTCOMES]; SETTINGS]) -> f64 {
    let n = counts.total() as f64;
    let mut worst = f64::NEG_INFINITY;
    for (k, (cells, row)) in counts.counts.iter().zip(slacks).enumerate() {
        let weight = counts.shots(k) as f64 / n;
        for (l, (&c, &slack)) in cells.iter().zip(row).enumerate() {
            let lhs = weight * (rho * povm_element(k, l)).trace().re;
            let rhs = c as f64 / n + slack;
            worst = worst.max(lhs - rhs);
        }
    }
    worst
}

/// Whether `rho` lies in every half-space of the confidence polytope.
pub fn polytope_halfspace_check(rho: &TwoQubit, counts: &TomographyCounts) -> Result<bool> {
    validate_density(rho)?;
    let slacks = halfspace_slacks(counts)?;
    Ok(max_violation(rho, counts, &slacks) <= 0.0)
}

/// Linear-inversion estimate `(1/4) Σ ⟨σ_j ⊗ σ_i⟩ σ_j ⊗ σ_i`, each correlator
/// taken from its own setting. May fail to be positive.
pub fn linear_inversion(counts: &TomographyCounts) -> TwoQubit {
    let mut rho = TwoQubit::zeros();
    for k in 0..SETTINGS {
        let (i_b, j_a) = setting_paulis(k);
        let shots = counts.shots(k);
        let expectation = if k == 0 {
            1.0
        } else if shots == 0 {
            0.0
        } else {
            let sign = |pauli: usize, bit: usize| if pauli == 0 || bit == 0 { 1.0 } else { -1.0 };
            (0..OUTCOMES).map(|l| sign(j_a, l % 2) * sign(i_b, l / 2) * counts.counts[k][l] as f64).sum::<f64>()
                / shots as f64
        };
        rho += pauli(j_a).kronecker(&pauli(i_b)) * c(0.25 * expectation);
    }
    rho
}

/// Nearest density matrix in spectrum: negative eigenvalues clipped, then
/// renormalized.
pub fn project_to_density(m: &TwoQubit) -> TwoQubit {
    let h = (m + m.adjoint()) * c(0.5);
    let eig = h.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let total: f64 = clipped.sum();
    let d = TwoQubit::from_diagonal(&clipped.map(|v| c(v / total)));
    let u = eig.eigenvectors;
    let out = u * d * u.adjoint();
    (out + out.adjoint()) * c(0.5)
}

/// Best value found by [`maximize_conditional_entropy`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicMax {
    /// Largest `H(A|B)` found inside the polytope. Not certified: the true
    /// maximum may be larger.
    pub value: f64,
    pub state: TwoQubit,
    pub feasible: bool,
    pub evaluations: usize,
}

/// Search budget of the local search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBudget {
    pub restarts: usize,
    pub steps: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { restarts: 6, steps: 1500 }
    }
}

fn state_from_params(t: &[f64; 16]) -> TwoQubit {
    let mut m = TwoQubit::zeros();
    let mut idx = 0;
    for i in 0..4 {
        for j in 0..=i {
            let im = if i == j { 0.0 } else { t[idx + 1] };
            m[(i, j)] = Complex::new(t[idx], im);
            idx += if i == j { 1 } else { 2 };
        }
    }
    let rho = m * m.adjoint();
    let tr = rho.trace().re;
    rho * c(1.0 / tr)
}

fn params_from_state(rho: &TwoQubit) -> [f64; 16] {
    let reg = rho + TwoQubit::identity() * c(1e-9);
    let l = reg.cholesky().map(|ch| ch.l()).unwrap_or_else(|| TwoQubit::identity() * c(0.5));
    let mut t = [0.0; 16];
    let mut idx = 0;
    for i in 0..4 {
        for j in 0..=i {
            t[idx] = l[(i, j)].re;
            if i != j {
                t[idx + 1] = l[(i, j)].im;
                idx += 2;
            } else {
                idx += 1;
            }
        }
    }
    t
}

/// Random-restart local search for `max H(A|B)` over the confidence
/// polytope, starting from the projected linear-inversion estimate.
///
/// States are parametrized as `TT†/tr(TT†)` with `T` lower triangular.
/// Infeasible states are penalized by their largest half-space violation.
pub fn maximize_conditional_entropy(
    counts: &TomographyCounts,
    budget: SearchBudget,
    rng: &mut SimRng,
) -> Result<HeuristicMax> {
    let slacks = halfspace_slacks(counts)?;
    let start = project_to_density(&linear_inversion(counts));
    let score = |rho: &TwoQubit| {
        let v = max_violation(rho, counts, &slacks);
        let h = conditional_entropy(rho);
        (if v > 0.0 { h - 1e3 * v } else { h }, v <= 0.0, h)
    };
    let base = params_from_state(&start);
    let mut best: Option<(f64, TwoQubit)> = None;
    let mut evaluations = 0;
    for restart in 0..budget.restarts.max(1) {
        let mut params = base;
        if restart > 0 {
            for p in params.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *p += 0.02 * z;
            }
        }
        let mut rho = state_from_params(&params);
        let (mut current, feasible, h) = score(&rho);
        evaluations += 1;
        if feasible && best.as_ref().is_none_or(|(bv, _)| h > *bv) {
            best = Some((h, rho));
        }
        let mut step = 0.02;
        for _ in 0..budget.steps {
            let mut trial = params;
            let coord = rng.random_range(0..16);
            let z: f64 = StandardNormal.sample(rng);
            trial[coord] += step * z;
            let cand = state_from_params(&trial);
            let (value, feasible, h) = score(&cand);
            evaluations += 1;
            if value > current {
                params = trial;
                rho = cand;
                current = value;
                step = (step * 1.2).min(0.2);
                if feasible && best.as_ref().is_none_or(|(bv, _)| h > *bv) {
                    best = Some((h, rho));
                }
            } else {
                step = (step * 0.97).max(1e-6);
            }
        }
    }
    Ok(match best {
        Some((value, state)) => HeuristicMax { value, state, feasible: true, evaluations },
        None => HeuristicMax { value: conditional_entropy(&start), state: start, feasible: false, evaluations },
    })
}

fn eta_sup<F: Fn(f64, f64) -> f64>(s: f64, f: F) -> Option<(f64, f64)> {
    let at = |z: f64| (s / (1.0 + (-z).exp()), s / (1.0 + z.exp()));
    let best = grid_refine_max(
        |z| {
            let (eta, gap) = at(z);
            (eta > 0.0 && gap > 0.0).then(|| f(eta, gap))
        },
        -700.0,
        700.0,
        2049,
        1e-10,
    )?;
    Some((at(best.x).0, best.value))
}

/// i.i.d. bound per use,
/// `−H_max(A|B) + sup_η (4/n)[−(d_A/2+2)√n √(log2(2/(√(ε/2)−η)²)) + log2 η] − 2/n`,
/// given the worst-case conditional entropy over the polytope.
pub fn qubit_iid_bound(worst_conditional_entropy: f64, n: u64, epsilon: f64, d_a: u32) -> Result<f64> {
    if n == 0 || !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(config("need n > 0 and epsilon in (0, 1)"));
    }
    let nf = n as f64;
    let s = (epsilon / 2.0).sqrt();
    let weight = d_a as f64 / 2.0 + 2.0;
    let (_, sup) =
        eta_sup(s, |eta, gap| 4.0 / nf * (-weight * nf.sqrt() * (2.0 / (gap * gap)).log2().sqrt() + eta.log2()))
            .ok_or_else(|| Error::Infeasible("eta interval is empty".into()))?;
    Ok(-worst_conditional_entropy + sup - 2.0 / nf)
}

/// `ε' = 2 k^{d/2} e^{−k(r+1)/(2(n+k))}`, evaluated in log space; values
/// below 1e-300 are returned as 0.
pub fn definetti_epsilon(k: u64, n: u64, r: u64, d: u32) -> Result<f64> {
    if k == 0 || n == 0 {
        return Err(config("k and n must be positive"));
    }
    let (k, n, r) = (k as f64, n as f64, r as f64);
    let ln = std::f64::consts::LN_2 + 0.5 * d as f64 * k.ln() - k * (r + 1.0) / (2.0 * (n + k));
    let v = ln.exp();
    Ok(if v < 1e-300 { 0.0 } else { v })
}

/// Half-space slack for almost-i.i.d. states,
/// `(n/n_k) √(log2(1/δ)/n + h(r/n) + (2/n) log2(n/2 + 1))`.
pub fn almost_iid_halfspace_slack(n_k: u64, n: u64, delta_cell: f64, r: u64) -> Result<f64> {
    if n_k == 0 || n == 0 || r > n || !(delta_cell > 0.0 && delta_cell < 1.0) {
        return Err(config("need 0 < n_k, 0 <= r <= n and delta_cell in (0, 1)"));
    }
    let nf = n as f64;
    let radicand = (1.0 / delta_cell).log2() / nf + binary_entropy(r as f64 / nf)? + 2.0 / nf * (nf / 2.0 + 1.0).log2();
    Ok(nf / n_k as f64 * radicand.sqrt())
}

/// Total bound for `n` uses of an arbitrary (permutation-symmetrized)
/// channel, given `min` coherent information over the polytope:
///
/// `max{0, sup_η [−4√(n−r) log2(2√2+1) √(2n h(r/n) − 4 log2(√(ε/2)−η−√ε') + 2 log2 6 + 1)
/// + 4 log2 η] − n h(r/n) − r + (n−r) I_min − 2}`,
/// over `η ∈ (0, √(ε/2) − √ε')` with `ε'` from [`definetti_epsilon`] at
/// `d = 16`. Returns 0 when `ε' ≥ ε/2`.
pub fn almost_iid_bound(min_coherent_information: f64, n: u64, k: u64, r: u64, epsilon: f64) -> Result<f64> {
    if r >= n || !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(config("need r < n and epsilon in (0, 1)"));
    }
    let eps_prime = definetti_epsilon(k, n, r, 16)?;
    let upper = (epsilon / 2.0).sqrt() - eps_prime.sqrt();
    if !(eps_prime < epsilon / 2.0) || !(upper > 0.0) {
        return Ok(0.0);
    }
    let (nf, rf) = (n as f64, r as f64);
    let hr = binary_entropy(rf / nf)?;
    let mu = (2.0 * 2f64.sqrt() + 1.0).log2();
    let sup = eta_sup(upper, |eta, gap| {
        let radicand = 2.0 * nf * hr - 4.0 * gap.log2() + 2.0 * 6f64.log2() + 1.0;
        -4.0 * (nf - rf).sqrt() * mu * radicand.sqrt() + 4.0 * eta.log2()
    });
    let Some((_, sup)) = sup else { return Ok(0.0) };
    Ok((sup - nf * hr - rf + (nf - rf) * min_coherent_information - 2.0).max(0.0))
}

/// Summary of a tomography-based bound evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitReport {
    pub shots: u64,
    pub delta: f64,
    pub epsilon: f64,
    /// `−H(A|B)` of the projected linear-inversion estimate.
    pub estimate_coherent_info: f64,
    /// Largest `H(A|B)` found inside the polytope.
    pub worst_conditional_entropy: f64,
    /// Always true: the polytope maximization is a local search.
    pub heuristic: bool,
    pub polytope_feasible: bool,
    /// i.i.d. bound per use, clamped at 0.
    pub q_lower_per_use: f64,
}

/// Evaluates the i.i.d. qubit bound from a tomography record.
pub fn evaluate_counts(
    counts: &TomographyCounts,
    epsilon: f64,
    budget: SearchBudget,
    rng: &mut SimRng,
) -> Result<QubitReport> {
    let estimate = project_to_density(&linear_inversion(counts));
    let worst = maximize_conditional_entropy(counts, budget, rng)?;
    let n = counts.total();
    let bound = qubit_iid_bound(worst.value, n, epsilon, 2)?;
    Ok(QubitReport {
        shots: n,
        delta: counts.delta(),
        epsilon,
        estimate_coherent_info: -conditional_entropy(&estimate),
        worst_conditional_entropy: worst.value,
        heuristic: true,
        polytope_feasible: worst.feasible,
        q_lower_per_use: bound.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn identity_channel_choi_is_bell_state() {
        let choi = choi_state(&QubitChannelSpec::new(0.0, 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((choi[(i, j)].re - 0.5).abs() < 1e-15 && h > 0.0);
        }
        assert!((coherent_information(&choi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flipped_identity_stays_pure() {
        let choi = choi_state(&QubitChannelSpec::new(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2));
        assert!(entropy4(&choi).abs() < 1e-9);
        assert!((choi[(1, 1)].re - 0.5).abs() < 1e-12);
        assert!((choi[(1, 2)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_choi() {
        for &(a, b) in &[(0.3, 0.3), (0.4, 0.0), (0.2, 0.7), (1.1, 0.5)] {
            let spec = QubitChannelSpec::new(a, b);
            let direct = coherent_information(&choi_state(&spec)).unwrap();
            assert!((direct - coherent_information_closed_form(&spec).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn confidence_epsilon_closed_forms() {
        let e = confidence_epsilon(0.0, 0.01, 1000).unwrap();
        assert!((e - (1.0 - 0.01f64.powf(1e-3))).abs() < 1e-12);
        assert_eq!(confidence_epsilon(0.3, 1.0, 1000).unwrap(), 0.0);
        assert_eq!(confidence_epsilon(1.0, 0.01, 1000).unwrap(), 0.0);
        let e = confidence_epsilon(0.5, 0.01, 1000).unwrap();
        let lhs = kl_divergence(0.5, 0.5 + e);
        assert!((lhs - 0.01f64.recip().ln() / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_exact_counts_inside_polytope() {
        let counts = TomographyCounts::with_uniform_budget([[250; OUTCOMES]; SETTINGS], 0.01).unwrap();
        let mixed = TwoQubit::identity() * c(0.25);
        assert!(polytope_halfspace_check(&mixed, &counts).unwrap());
    }

    #[test]
    fn violated_halfspace_detected() {
        // Z⊗Z setting only ever reports outcome 3; |00⟩ has tr(ρE_0) = 1 there
        let mut counts = [[250u64; OUTCOMES]; SETTINGS];
        counts[15] = [0, 0, 0, 1_000_000];
        let counts = TomographyCounts::with_uniform_budget(counts, 0.01).unwrap();
        let mut rho = TwoQubit::zeros();
        rho[(0, 0)] = c(1.0);
        assert!(!polytope_halfspace_check(&rho, &counts).unwrap());
    }

    #[test]
    fn linear_inversion_recovers_exact_state() {
        let choi = choi_state(&QubitChannelSpec::new(0.4, 0.1));
        let mut counts = [[0u64; OUTCOMES]; SETTINGS];
        for (k, row) in counts.iter_mut().enumerate() {
            let p = outcome_probabilities(&choi, k);
            for l in 0..OUTCOMES {
                row[l] = (p[l] * 1e12).round() as u64;
            }
        }
        let counts = TomographyCounts::with_uniform_budget(counts, 0.01).unwrap();
        let est = linear_inversion(&counts);
        assert!((est - choi).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn definetti_examples() {
        let v = definetti_epsilon(1000, 1000, 0, 16).unwrap();
        assert!((v / 1.557_601_566_142_809_7e24 - 1.0).abs() < 1e-12);
        assert_eq!(definetti_epsilon(1000, 1000, 1_000_000, 16).unwrap(), 0.0);
    }

    #[test]
    fn iid_bound_limits() {
        let far = qubit_iid_bound(-1.0, 1_000_000_000_000, 0.02, 2).unwrap();
        assert!((far - 1.0).abs() < 1e-3);
        assert!(qubit_iid_bound(0.0, 1_000_000, 0.02, 2).unwrap() <= 0.0);
    }

    #[test]
    fn heuristic_search_finds_feasible_state() {
        let choi = choi_state(&QubitChannelSpec::new(0.3, 0.3));
        let counts = simulate_tomography(&choi, 100_000, 0.01, &mut stream_rng(1, 0)).unwrap();
        let budget = SearchBudget { restarts: 2, steps: 300 };
        let best = maximize_conditional_entropy(&counts, budget, &mut stream_rng(1, 1)).unwrap();
        assert!(best.feasible);
        assert!(best.value >= conditional_entropy(&choi) - 0.05);
    }
}
