//! Experiment configuration files.
//!
//! A file holds either one experiment or `{"experiments": [...]}`. Unknown
//! keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::channels::ChannelModel;
use crate::error::{config, Error, Result};
use crate::protocol1::ProtocolOneConfig;
use crate::qubitproto::SearchBudget;

/// Which evaluation an experiment performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    /// Correlated-noise protocol.
    P1,
    /// i.i.d. protocol.
    P2,
    /// Qubit tomography protocol.
    Qubit,
    /// Asymptotic per-use bounds for loss channels.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Closed-form evaluation; no randomness.
    #[default]
    Analytic,
    /// One simulated run per sweep point.
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File name, relative to the output directory.
    pub path: String,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    #[serde(default = "one")]
    pub trials: u64,
    pub seed: u64,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub start: f64,
    pub stop: f64,
    pub per_decade: u32,
}

/// One sweep axis. Exactly one of `values`, `range` and `log_range` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<LinearRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_range: Option<LogRange>,
}

impl SweepAxis {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match (&self.values, &self.range, &self.log_range) {
            (Some(v), None, None) => v.clone(),
            (None, Some(r), None) => {
                if !(r.step > 0.0) || !(r.stop >= r.start) {
                    return Err(config(format!("sweep '{}': need step > 0 and stop >= start", self.param)));
                }
                let count = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                (0..=count).map(|i| r.start + r.step * i as f64).collect()
            }
            (None, None, Some(r)) => {
                if !(r.start > 0.0) || !(r.stop >= r.start) || r.per_decade == 0 {
                    return Err(config(format!("sweep '{}': need 0 < start <= stop and per_decade > 0", self.param)));
                }
                let (lo, hi) = (r.start.log10(), r.stop.log10());
                let count = ((hi - lo) * r.per_decade as f64 + 1e-9).floor() as usize;
                (0..=count).map(|i| 10f64.powf(lo + i as f64 / r.per_decade as f64)).collect()
            }
            _ => return Err(config(format!("sweep '{}': give exactly one of values, range, log_range", self.param))),
        };
        if pts.is_empty() || pts.iter().any(|v| !v.is_finite()) {
            return Err(config(format!("sweep '{}' needs finite values", self.param)));
        }
        Ok(pts)
    }
}

/// Parameters of the i.i.d. protocol. Missing thresholds default to the
/// optimal ones for the configured loss channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct P2Params {
    pub n: u64,
    pub k: u64,
    pub n_bar: f64,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitParams {
    pub alpha: f64,
    pub beta: f64,
    pub shots_per_setting: u64,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub search: SearchBudget,
}

/// Parameters of the asymptotic comparison. Without `t` the correlated-noise
/// bound uses the threshold passed with probability → 1 by the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticParams {
    pub n_bar: f64,
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

/// Protocol parameter block, resolved against `protocol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    P1(ProtocolOneConfig),
    P2(P2Params),
    Qubit(QubitParams),
    Asymptotic(AsymptoticParams),
}

/// One experiment as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExperiment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub protocol: ProtocolKind,
    #[serde(default = "identity_channel")]
    pub channel: ChannelModel,
    pub params: serde_json::Value,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
    /// When set, `k` follows every sweep point as the even integer nearest
    /// to `k_per_n · n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_per_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSpec>,
    pub output: OutputSpec,
}

fn identity_channel() -> ChannelModel {
    ChannelModel::Identity
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Suite {
    experiments: Vec<RawExperiment>,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub protocol: ProtocolKind,
    pub channel: ChannelModel,
    pub params: Params,
    pub mode: Mode,
    pub sweep: Vec<SweepAxis>,
    pub k_per_n: Option<f64>,
    pub monte_carlo: Option<MonteCarloSpec>,
    pub output: OutputSpec,
}

/// Parameter values at one sweep point, in axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub values: Vec<(String, f64)>,
    pub channel: ChannelModel,
    pub params: Params,
}

/// Parses a configuration file body into validated experiments.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let raws = if value.get("experiments").is_some() {
        serde_json::from_value::<Suite>(value)?.experiments
    } else {
        vec![serde_json::from_value::<RawExperiment>(value)?]
    };
    if raws.is_empty() {
        return Err(config("configuration lists no experiments"));
    }
    raws.into_iter().map(ExperimentConfig::from_raw).collect()
}

impl ExperimentConfig {
    pub fn from_raw(raw: RawExperiment) -> Result<Self> {
        let params = match raw.protocol {
            ProtocolKind::P1 => Params::P1(serde_json::from_value(raw.params)?),
            ProtocolKind::P2 => Params::P2(serde_json::from_value(raw.params)?),
            ProtocolKind::Qubit => Params::Qubit(serde_json::from_value(raw.params)?),
            ProtocolKind::Asymptotic => Params::Asymptotic(serde_json::from_value(raw.params)?),
        };
        if raw.k_per_n.is_some() && !matches!(raw.protocol, ProtocolKind::P1 | ProtocolKind::P2) {
            return Err(config("k_per_n applies to p1 and p2 only"));
        }
        if let Some(r) = raw.k_per_n {
            if !(r > 0.0) {
                return Err(config(format!("k_per_n must be positive, got {r}")));
            }
        }
        if let Some(mc) = raw.monte_carlo {
            if mc.trials == 0 {
                return Err(config("monte_carlo.trials must be at least 1"));
            }
        }
        if raw.mode == Mode::Simulate && raw.monte_carlo.is_none() {
            return Err(config("simulate mode needs a monte_carlo block with a seed"));
        }
        if raw.mode == Mode::Simulate && raw.protocol == ProtocolKind::Asymptotic {
            return Err(config("the asymptotic protocol has no simulate mode"));
        }
        let mut names: Vec<&str> = raw.sweep.iter().map(|a| a.param.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(config("a parameter appears on more than one sweep axis"));
        }
        let cfg = Self {
            name: raw.name.unwrap_or_else(|| raw.output.path.clone()),
            protocol: raw.protocol,
            channel: raw.channel,
            params,
            mode: raw.mode,
            sweep: raw.sweep,
            k_per_n: raw.k_per_n,
            monte_carlo: raw.monte_carlo,
            output: raw.output,
        };
        cfg.points()?;
        Ok(cfg)
    }

    /// Names of the swept parameters followed by `k` when it is derived.
    pub fn point_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.sweep.iter().map(|a| a.param.clone()).collect();
        if self.k_per_n.is_some() && !cols.iter().any(|c| c == "k") {
            cols.push("k".into());
        }
        cols
    }

    /// Cartesian product of the sweep axes, first axis slowest. Every point
    /// is validated.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let axes: Vec<(String, Vec<f64>)> =
            self.sweep.iter().map(|a| Ok((a.param.clone(), a.points()?))).collect::<Result<_>>()?;
        let total: usize = axes.iter().map(|(_, v)| v.len()).product();
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut rem = index;
            let mut chosen = vec![0.0; axes.len()];
            for (slot, (_, vals)) in chosen.iter_mut().zip(&axes).rev() {
                *slot = vals[rem % vals.len()];
                rem /= vals.len();
            }
            let mut channel = self.channel;
            let mut params = self.params;
            let mut values = Vec::with_capacity(axes.len() + 1);
            for ((name, _), &v) in axes.iter().zip(&chosen) {
                let applied = set_param(&mut channel, &mut params, name, v)?;
                values.push((name.clone(), applied));
            }
            if let Some(ratio) = self.k_per_n {
                let k = apply_k_per_n(&mut params, ratio);
                if !values.iter().any(|(n, _)| n == "k") {
                    values.push(("k".into(), k as f64));
                }
            }
            validate_point(self.protocol, &channel, &params)?;
            out.push(SweepPoint { index, values, channel, params });
        }
        Ok(out)
    }
}

fn as_count(name: &str, v: f64) -> Result<u64> {
    let r = v.round();
    if !(r >= 1.0) || r > 9.0e15 {
        return Err(config(format!("{name} must be a positive integer, got {v}")));
    }
    Ok(r as u64)
}

fn apply_k_per_n(params: &mut Params, ratio: f64) -> u64 {
    let (n, k) = match params {
        Params::P1(p) => (p.n, &mut p.k),
        Params::P2(p) => (p.n, &mut p.k),
        _ => unreachable!("k_per_n validated against the protocol"),
    };
    *k = (2.0 * (ratio * n as f64 / 2.0).round()).max(2.0) as u64;
    *k
}

/// Sets a protocol or channel parameter; counts (`n`, `k`, shots) are
/// rounded to the nearest integer. Returns the value actually applied.
pub fn set_param(channel: &mut ChannelModel, params: &mut Params, name: &str, v: f64) -> Result<f64> {
    match (name, &mut *channel) {
        ("tau", ChannelModel::Loss { tau, .. }) => {
            *tau = v;
            return Ok(v);
        }
        ("n_th", ChannelModel::Loss { n_th, .. } | ChannelModel::Amplifier { n_th, .. }) => {
            *n_th = v;
            return Ok(v);
        }
        ("gain", ChannelModel::Amplifier { gain, .. }) => {
            *gain = v;
            return Ok(v);
        }
        ("noise_var", ChannelModel::Additive { noise_var }) => {
            *noise_var = v;
            return Ok(v);
        }
        _ => {}
    }
    let unknown = || config(format!("unknown sweep parameter '{name}' for this protocol and channel"));
    Ok(match params {
        Params::P1(p) => match name {
            "n" => {
                p.n = as_count(name, v)?;
                p.n as f64
            }
            "k" => {
                p.k = as_count(name, v)?;
                p.k as f64
            }
            "d" => set(&mut p.d, v),
            "t" => set(&mut p.t, v),
            "alpha" => set(&mut p.alpha, v),
            "n_bar" => set(&mut p.n_bar, v),
            "epsilon" => set(&mut p.epsilon, v),
            "p_err" => set(&mut p.p_err, v),
            _ => return Err(unknown()),
        },
        Params::P2(p) => match name {
            "n" => {
                p.n = as_count(name, v)?;
                p.n as f64
            }
            "k" => {
                p.k = as_count(name, v)?;
                p.k as f64
            }
            "n_bar" => set(&mut p.n_bar, v),
            "delta" => set(&mut p.delta, v),
            "epsilon" => set(&mut p.epsilon, v),
            "a" => {
                p.a = Some(v);
                v
            }
            "c" => {
                p.c = Some(v);
                v
            }
            _ => return Err(unknown()),
        },
        Params::Qubit(p) => match name {
            "alpha" => set(&mut p.alpha, v),
            "beta" => set(&mut p.beta, v),
            "shots_per_setting" => {
                p.shots_per_setting = as_count(name, v)?;
                p.shots_per_setting as f64
            }
            "delta" => set(&mut p.delta, v),
            "epsilon" => set(&mut p.epsilon, v),
            _ => return Err(unknown()),
        },
        Params::Asymptotic(p) => match name {
            "n_bar" => set(&mut p.n_bar, v),
            "d" => set(&mut p.d, v),
            "t" => {
                p.t = Some(v);
                v
            }
            _ => return Err(unknown()),
        },
    })
}

fn set(slot: &mut f64, v: f64) -> f64 {
    *slot = v;
    v
}

/// Loss parameters `(τ, n̄_th)` of a channel; the identity is `τ = 1`.
pub fn loss_parameters(channel: &ChannelModel) -> Option<(f64, f64)> {
    match *channel {
        ChannelModel::Identity => Some((1.0, 0.0)),
        ChannelModel::Loss { tau, n_th } => Some((tau, n_th)),
        _ => None,
    }
}

fn validate_point(protocol: ProtocolKind, channel: &ChannelModel, params: &Params) -> Result<()> {
    channel.validate()?;
    match (protocol, params) {
        (ProtocolKind::P1, Params::P1(p)) => p.validate(),
        (ProtocolKind::P2, Params::P2(p)) => {
            resolve_p2(channel, p)?.validate()?;
            Ok(())
        }
        (ProtocolKind::Qubit, Params::Qubit(p)) => {
            if p.shots_per_setting == 0 || !(p.delta > 0.0 && p.delta < 1.0) || !(p.epsilon > 0.0 && p.epsilon < 1.0) {
                return Err(config("qubit: need shots_per_setting > 0 and delta, epsilon in (0, 1)"));
            }
            Ok(())
        }
        (ProtocolKind::Asymptotic, Params::Asymptotic(p)) => {
            if loss_parameters(channel).is_none() {
                return Err(config("asymptotic comparison needs an identity or loss channel"));
            }
            if !(p.n_bar >= 0.0) || !(p.d > 0.0) || p.t.is_some_and(|t| !(t >= 0.0)) {
                return Err(config("asymptotic: need n_bar >= 0, d > 0 and t >= 0"));
            }
            Ok(())
        }
        _ => Err(Error::Config("parameter block does not match the protocol".into())),
    }
}

/// Full i.i.d. configuration, filling missing thresholds with the optimal
/// loss-channel values.
pub fn resolve_p2(channel: &ChannelModel, p: &P2Params) -> Result<crate::protocol2::ProtocolTwoConfig> {
    let (a, c) = match (p.a, p.c) {
        (Some(a), Some(c)) => (a, c),
        (a, c) => {
            let (tau, n_th) = loss_parameters(channel)
                .ok_or_else(|| config("thresholds a and c are required unless the channel is identity or loss"))?;
            let (oa, oc) = crate::protocol2::optimal_thresholds_loss(tau, p.n_bar, n_th)?;
            (a.unwrap_or(oa), c.unwrap_or(oc))
        }
    };
    Ok(crate::protocol2::ProtocolTwoConfig { n: p.n, k: p.k, n_bar: p.n_bar, delta: p.delta, epsilon: p.epsilon, a, c })
}
