//! Sampling homodyne outcomes through the supported channel models.

use capcert::channels::ChannelModel;
use capcert::rng::stream_rng;

fn main() -> capcert::Result<()> {
    let channels = [
        ChannelModel::Identity,
        ChannelModel::loss(0.8, 0.0)?,
        ChannelModel::loss(0.8, 1.0)?,
        ChannelModel::amplifier(1.5, 0.0)?,
        ChannelModel::additive(0.3)?,
    ];
    let x_in = 2.0;
    for ch in channels {
        let mut rng = stream_rng(1, 0);
        let samples: Vec<f64> = (0..100_000).map(|_| ch.sample_quadrature(x_in, &mut rng)).collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        println!(
            "{ch:?}: mean {mean:.4} (expected {:.4}), variance {var:.4} (added {:.4})",
            ch.gain().sqrt() * x_in,
            ch.added_variance()
        );
    }
    Ok(())
}
