//! Qubit channel bound from simulated tomography of its Choi state.

use capcert::qubitproto::{
    choi_state, coherent_information, evaluate_counts, polytope_halfspace_check, simulate_tomography, QubitChannelSpec,
    SearchBudget,
};
use capcert::rng::stream_rng;

fn main() -> capcert::Result<()> {
    let spec = QubitChannelSpec::new(0.3, 0.2);
    let choi = choi_state(&spec);
    println!("exact coherent information {:.4}", coherent_information(&choi)?);

    for shots in [10_000, 100_000, 1_000_000] {
        let mut rng = stream_rng(4, shots);
        let counts = simulate_tomography(&choi, shots, 0.05, &mut rng)?;
        let report = evaluate_counts(&counts, 0.02, SearchBudget::default(), &mut rng)?;
        println!(
            "{shots:>8} shots/setting: truth in polytope {}, estimate {:.4}, worst H(A|B) {:.4}, Q_lower/use {:.4}",
            polytope_halfspace_check(&choi, &counts)?,
            report.estimate_coherent_info,
            report.worst_conditional_entropy,
            report.q_lower_per_use
        );
    }
    Ok(())
}
