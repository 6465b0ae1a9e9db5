//! Symplectic spectra and entropies of a two-mode squeezed vacuum before and
//! after a lossy channel.

use capcert::channels::{tmsv_cov, ChannelModel};
use capcert::gaussmath::{bona_fide_check, g_entropy, gaussian_state_entropy, symplectic_eigenvalues};

fn main() -> capcert::Result<()> {
    let n_bar = 9.5;
    let tmsv = tmsv_cov(n_bar)?;
    println!("TMSV n_bar = {n_bar}: spectrum {:?}", symplectic_eigenvalues(&tmsv)?.values());

    for tau in [1.0, 0.9, 0.5] {
        let out = ChannelModel::loss(tau, 0.0)?.apply_cov(&tmsv, 1)?;
        let joint = gaussian_state_entropy(&out)?;
        let bob = g_entropy(out.get(2, 2))?;
        println!(
            "tau = {tau:.1}: bona fide {}, S(AB) = {joint:.4}, S(B) = {bob:.4}, I_c = {:.4}",
            bona_fide_check(&out),
            bob - joint
        );
    }
    Ok(())
}
