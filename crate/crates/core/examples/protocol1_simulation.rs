//! Running the correlated-noise test end to end, through an i.i.d. loss
//! channel and through a channel whose noise drifts from use to use.

use capcert::channels::{ChannelModel, Quadrature};
use capcert::protocol1::{
    pass_probability_pure_loss, run_protocol_one, simulate_test, HomodyneChannel, ProtocolOneConfig,
};
use capcert::rng::{stream_rng, SimRng};
use rand_distr::{Distribution, StandardNormal};

/// Additive noise whose standard deviation ramps up over the test.
struct Drift {
    max_sd: f64,
}

impl HomodyneChannel for Drift {
    fn transmit(&mut self, inputs: &[f64], _bases: &[Quadrature], rng: &mut SimRng) -> Vec<f64> {
        let k = inputs.len() as f64;
        inputs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let z: f64 = StandardNormal.sample(rng);
                x + self.max_sd * (i as f64 / k) * z
            })
            .collect()
    }
}

fn main() -> capcert::Result<()> {
    let cfg =
        ProtocolOneConfig { n: 10_000, k: 10_000, d: 0.1, t: 3.0, alpha: 37.0, n_bar: 9.5, epsilon: 0.02, p_err: 0.1 };

    let mut loss = ChannelModel::loss(0.95, 0.0)?;
    let verdict = run_protocol_one(&cfg, &mut loss, &mut stream_rng(3, 0))?;
    println!(
        "loss 0.95: passed {}, mean distance {:.3}, predicted pass probability {:.3}",
        verdict.passed,
        verdict.avg_distance,
        pass_probability_pure_loss(cfg.k, cfg.t, cfg.d, 0.95, cfg.n_bar)?
    );

    for max_sd in [0.2, 0.6, 1.2] {
        let record = simulate_test(&cfg, &mut Drift { max_sd }, &mut stream_rng(3, 1))?;
        let (passed, avg) = record.evaluate(cfg.t)?;
        println!("drift up to sd {max_sd}: passed {passed}, mean distance {avg:.3}");
    }
    Ok(())
}
