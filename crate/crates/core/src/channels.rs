//! Phase-insensitive single-mode Gaussian channels and probe-state
//! constructors.
//!
//! Every channel in this module acts on a mode's quadratures as
//! `x ↦ √g · x + noise`, with `noise ~ N(0, v)` independent per quadrature:
//!
//! | kind        | gain `g` | added variance `v`     |
//! |-------------|----------|------------------------|
//! | identity    | 1        | 0                      |
//! | loss        | τ        | (1 − τ)(2n̄_th + 1)     |
//! | amplifier   | G        | (G − 1)(2n̄_th + 1)     |
//! | additive    | 1        | σ²_add                 |

use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::gaussmath::{bona_fide_check, CovarianceMatrix};

/// Which quadrature a probe is prepared and measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Position,
    Momentum,
}

/// A phase-insensitive Gaussian channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    Identity,
    /// Beam splitter of transmissivity `tau` mixing in a thermal mode.
    Loss {
        tau: f64,
        #[serde(default)]
        n_th: f64,
    },
    /// Phase-insensitive amplifier of gain `gain` with thermal idler.
    Amplifier {
        gain: f64,
        #[serde(default)]
        n_th: f64,
    },
    /// Classical additive Gaussian noise of variance `noise_var`.
    Additive {
        noise_var: f64,
    },
}

impl ChannelModel {
    pub fn loss(tau: f64, n_th: f64) -> Result<Self> {
        let ch = ChannelModel::Loss { tau, n_th };
        ch.validate()?;
        Ok(ch)
    }

    pub fn amplifier(gain: f64, n_th: f64) -> Result<Self> {
        let ch = ChannelModel::Amplifier { gain, n_th };
        ch.validate()?;
        Ok(ch)
    }

    pub fn additive(noise_var: f64) -> Result<Self> {
        let ch = ChannelModel::Additive { noise_var };
        ch.validate()?;
        Ok(ch)
    }

    /// Checks parameter ranges. Loss with `tau = 0` is accepted: it is the
    /// limit of a fully absorbing channel and is used as a decoupled test case.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ChannelModel::Identity => true,
            ChannelModel::Loss { tau, n_th } => (0.0..=1.0).contains(&tau) && n_th >= 0.0,
            ChannelModel::Amplifier { gain, n_th } => gain >= 1.0 && n_th >= 0.0,
            ChannelModel::Additive { noise_var } => noise_var >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(config(format!("channel parameters out of range: {self:?}")))
        }
    }

    /// Power gain `g` applied to the signal quadratures.
    pub fn gain(&self) -> f64 {
        match *self {
            ChannelModel::Identity | ChannelModel::Additive { .. } => 1.0,
            ChannelModel::Loss { tau, .. } => tau,
            ChannelModel::Amplifier { gain, .. } => gain,
        }
    }

    /// Variance added to each output quadrature.
    pub fn added_variance(&self) -> f64 {
        match *self {
            ChannelModel::Identity => 0.0,
            ChannelModel::Loss { tau, n_th } => (1.0 - tau) * (2.0 * n_th + 1.0),
            ChannelModel::Amplifier { gain, n_th } => (gain - 1.0) * (2.0 * n_th + 1.0),
            ChannelModel::Additive { noise_var } => noise_var,
        }
    }

    /// Output covariance after the channel acts on `mode` of `m`.
    ///
    /// The selected diagonal block maps to `g·B + v·I`, cross blocks with
    /// other modes scale by `√g`, and every other block is untouched.
    pub fn apply_cov(&self, m: &CovarianceMatrix, mode: usize) -> Result<CovarianceMatrix> {
        self.validate()?;
        let modes = m.modes();
        if mode >= modes {
            return Err(domain(format!("mode index {mode} out of range for {modes} modes")));
        }
        let g = self.gain();
        let v = self.added_variance();
        let mut out = m.clone();
        for other in 0..modes {
            if other == mode {
                let b = m.block(mode, mode) * g + Matrix2::identity() * v;
                out.set_block(mode, mode, &b);
            } else {
                out.set_block(other, mode, &(m.block(other, mode) * g.sqrt()));
            }
        }
        Ok(out)
    }

    /// One output quadrature sample for input value `x_in`:
    /// `√g · x_in + N(0, v)`. Deterministic given the generator state; no
    /// random number is drawn when `v = 0`.
    pub fn sample_quadrature<R: Rng + ?Sized>(&self, x_in: f64, rng: &mut R) -> f64 {
        let v = self.added_variance();
        let signal = self.gain().sqrt() * x_in;
        if v == 0.0 {
            signal
        } else {
            let z: f64 = StandardNormal.sample(rng);
            signal + v.sqrt() * z
        }
    }
}

/// Covariance of the two-mode squeezed vacuum with mean photon number `n_bar`
/// per mode: `[[(2n̄+1)I, cσz], [cσz, (2n̄+1)I]]` with `c = √((2n̄+1)² − 1)`.
pub fn tmsv_cov(n_bar: f64) -> Result<CovarianceMatrix> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(domain(format!("mean photon number must be >= 0, got {n_bar}")));
    }
    let a = 2.0 * n_bar + 1.0;
    // (2n̄+1)² − 1 = 4n̄(n̄+1), exact for small n̄
    let c = 2.0 * (n_bar * (n_bar + 1.0)).sqrt();
    let m = CovarianceMatrix::two_mode_standard_form(a, a, c)?;
    debug_assert!(bona_fide_check(&m));
    Ok(m)
}

/// Phase rotation by `theta` on `mode`, as a `2m × 2m` symplectic matrix.
pub fn phase_rotation(modes: usize, mode: usize, theta: f64) -> DMatrix<f64> {
    let mut r = DMatrix::identity(2 * modes, 2 * modes);
    let (s, c) = theta.sin_cos();
    r[(2 * mode, 2 * mode)] = c;
    r[(2 * mode, 2 * mode + 1)] = s;
    r[(2 * mode + 1, 2 * mode)] = -s;
    r[(2 * mode + 1, 2 * mode + 1)] = c;
    r
}

/// Single-mode squeezer `diag(e^{-r}, e^{r})` on `mode`.
pub fn single_mode_squeezer(modes: usize, mode: usize, r: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * modes, 2 * modes);
    s[(2 * mode, 2 * mode)] = (-r).exp();
    s[(2 * mode + 1, 2 * mode + 1)] = r.exp();
    s
}

/// Squeezing in dB to the mean photon number of the equivalent thermal
/// marginal: `n̄ = (10^{s/10} − 1) / 2`.
pub fn squeezing_db_to_n_bar(db: f64) -> f64 {
    0.5 * (10f64.powf(db / 10.0) - 1.0)
}

/// Inverse of [`squeezing_db_to_n_bar`].
pub fn n_bar_to_squeezing_db(n_bar: f64) -> f64 {
    10.0 * (2.0 * n_bar + 1.0).log10()
}

/// Settings for a batch of displaced squeezed probes.
///
/// The squeezing and mean photon number are kept in lockstep through
/// `n̄ = (10^{s/10} − 1)/2`; the displacement distribution has variance
/// `σ² = 10^{s/10} = 2n̄ + 1` and is truncated to `[-alpha, alpha]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeEnsemble {
    k: usize,
    squeezing_db: f64,
    n_bar: f64,
    alpha: f64,
    seed: u64,
}

impl ProbeEnsemble {
    pub fn from_n_bar(k: usize, n_bar: f64, alpha: f64, seed: u64) -> Result<Self> {
        if !(n_bar >= 0.0) || !(alpha > 0.0) {
            return Err(config("probe ensemble needs n_bar >= 0 and alpha > 0"));
        }
        Ok(Self { k, squeezing_db: n_bar_to_squeezing_db(n_bar), n_bar, alpha, seed })
    }

    pub fn from_squeezing_db(k: usize, squeezing_db: f64, alpha: f64, seed: u64) -> Result<Self> {
        if !(squeezing_db >= 0.0) || !(alpha > 0.0) {
            return Err(config("probe ensemble needs squeezing >= 0 dB and alpha > 0"));
        }
        Ok(Self { k, squeezing_db, n_bar: squeezing_db_to_n_bar(squeezing_db), alpha, seed })
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn n_bar(&self) -> f64 {
        self.n_bar
    }
    pub fn squeezing_db(&self) -> f64 {
        self.squeezing_db
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Variance of the displacement distribution, `10^{s/10}`.
    pub fn displacement_variance(&self) -> f64 {
        2.0 * self.n_bar + 1.0
    }
}
