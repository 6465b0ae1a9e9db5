//! Finite-size capacity bound for the correlated-noise protocol as the
//! number of channel uses grows, next to its asymptotic rate.

use capcert::protocol1::{asymptotic_b, entanglement_bound, theorem1_bound, ProtocolOneConfig};

fn main() -> capcert::Result<()> {
    let base = ProtocolOneConfig { n: 0, k: 0, d: 0.1, t: 3.0, alpha: 37.0, n_bar: 9.5, epsilon: 0.02, p_err: 0.1 };
    println!("asymptotic rate B(d, t) = {:.4} bits/use", asymptotic_b(base.d, base.t)?);
    println!("{:>8} {:>14} {:>10} {:>12} status", "n", "Q_lower", "per use", "E_lower");
    for exp in [6, 7, 8, 9, 10] {
        let n = 10u64.pow(exp);
        let cfg = ProtocolOneConfig { n, k: n, ..base };
        let q = theorem1_bound(&cfg)?;
        let e = entanglement_bound(&cfg)?.map_or(f64::NAN, |e| e.value);
        println!("{:>8.0e} {:>14.4e} {:>10.4} {:>12.4e} {:?}", n as f64, q.value, q.value / n as f64, e, q.status);
    }
    Ok(())
}
