//! Heterodyne estimation in the i.i.d. protocol: confidence bounds on the
//! channel covariance and the certified bound they imply. Looser thresholds
//! pass more often but certify less.

use capcert::channels::ChannelModel;
use capcert::protocol2::{optimal_thresholds_loss, run_protocol_two, theorem2_bound, ProtocolTwoConfig};
use capcert::rng::stream_rng;

fn main() -> capcert::Result<()> {
    let (n_bar, tau, k) = (9.5, 0.8, 1_000_000);
    let (a, c) = optimal_thresholds_loss(tau, n_bar, 0.0)?;
    let channel = ChannelModel::loss(tau, 0.0)?;
    println!("channel values a = {a:.4}, c = {c:.4}");
    for slack in [0.0, 0.002, 0.004, 0.008] {
        let cfg = ProtocolTwoConfig {
            n: k,
            k,
            n_bar,
            delta: 0.05,
            epsilon: 0.02,
            a: a * (1.0 + slack),
            c: c * (1.0 - slack),
        };
        let bound = theorem2_bound(&cfg)?;
        let trials = 20;
        let mut passed = 0;
        for trial in 0..trials {
            passed += run_protocol_two(&cfg, &channel, &mut stream_rng(9, trial))?.passed as u32;
        }
        println!(
            "slack {slack:.3}: B_iid {:.4}, certified per use {:.4}, passed {passed}/{trials}",
            bound.b_iid,
            bound.value / k as f64
        );
    }
    Ok(())
}
