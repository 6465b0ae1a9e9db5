//! Asymptotic per-use rates of both protocols on thermal-loss channels,
//! compared with the energy-constrained pure-loss capacity.

use capcert::protocol1::{asymptotic_b, asymptotic_threshold_t};
use capcert::protocol2::{asymptotic_biid, energy_constrained_capacity_pure_loss, optimal_thresholds_loss};

fn main() -> capcert::Result<()> {
    let (n_bar, d) = (9.5, 0.1);
    println!("{:>5} {:>5} {:>8} {:>8} {:>8} {:>8}", "tau", "n_th", "t", "B", "B_iid", "C");
    for n_th in [0.0, 1.0] {
        for tau in [0.6, 0.7, 0.8, 0.9, 1.0] {
            let t = asymptotic_threshold_t(tau, n_bar, n_th, d)?;
            let (a, c) = optimal_thresholds_loss(tau, n_bar, n_th)?;
            println!(
                "{tau:>5.2} {n_th:>5.1} {t:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                asymptotic_b(d, t)?,
                asymptotic_biid(a, c, n_bar)?,
                energy_constrained_capacity_pure_loss(tau, n_bar)?
            );
        }
    }
    Ok(())
}
