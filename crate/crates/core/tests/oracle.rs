//! Reference values: double-double transcriptions computed here, and frozen
//! values from an independent arbitrary-precision evaluation.

mod common;

use capcert::channels::ChannelModel;
use capcert::gaussmath::{
    binary_entropy, erf_probability_in_window, g_entropy, gamma_fn, gaussian_tail_outside_window, log2_gamma_fn,
};
use capcert::protocol1::{asymptotic_b, asymptotic_threshold_t, theorem1_bound, ProtocolOneConfig};
use capcert::protocol2::{finite_size_correction, gamma_min_from_stats, heterodyne_moments, sigma_max_from_norm};
use capcert::qubitproto::{almost_iid_bound, definetti_epsilon, qubit_iid_bound};
use common::{tf, T};

fn close(got: f64, want: f64, rel: f64) {
    assert!(
        (got - want).abs() <= rel * want.abs().max(f64::MIN_POSITIVE),
        "got {got:e}, want {want:e} (rel {:.2e})",
        (got - want).abs() / want.abs()
    );
}

#[test]
fn frozen_special_function_values() {
    close(g_entropy(20.0).unwrap(), 4.764021561462921, 1e-14);
    close(gamma_fn(3.0).unwrap(), 16.457756896732835, 1e-14);
    close(gamma_fn(1.0).unwrap(), 5.82842712474619, 1e-14);
    close(binary_entropy(0.11).unwrap(), 0.499915958164528, 1e-14);
    close(erf_probability_in_window(std::f64::consts::SQRT_2, 1.0).unwrap(), 0.8427007929497149, 1e-15);
    close(gaussian_tail_outside_window(37.0, 20.0).unwrap(), 1.3013573355568005e-16, 1e-12);
}

#[test]
fn frozen_protocol_values() {
    close(asymptotic_b(0.1, 0.0).unwrap(), 9.295352319247043, 1e-14);
    close(asymptotic_b(0.1, 3.0).unwrap(), 1.213960694220816, 1e-13);
    close(asymptotic_threshold_t(1.0, 9.5, 0.0, 0.1).unwrap(), 1.7846822656470178, 1e-13);
    let (_, _, cov) = heterodyne_moments(&ChannelModel::loss(0.8, 0.0).unwrap(), 9.5).unwrap();
    close(cov, 17.866169147301836, 1e-14);
    close(definetti_epsilon(1000, 1000, 0, 16).unwrap(), 1.5576015661428097e24, 1e-13);
}

#[test]
fn special_functions_match_double_double() {
    for x in [1.0 + 1e-7, 1.5, 3.0, 20.0, 1e3, 1e6] {
        close(g_entropy(x).unwrap(), common::g(tf(x)).hi(), 1e-12);
    }
    for x in [1e-6, 0.3, 1.0, 2.5, 3.0, 17.0, 50.0] {
        close(log2_gamma_fn(x).unwrap(), common::log2_gamma(tf(x)).hi(), 1e-13);
    }
    for p in [1e-9, 0.01, 0.11, 0.5, 0.93] {
        close(binary_entropy(p).unwrap(), common::h(tf(p)).hi(), 1e-13);
    }
    for (alpha, var) in [(5.0, 1.0), (37.0, 20.0), (33.0, 20.0), (50.0, 20.0), (60.0, 25.0)] {
        let x = tf(alpha) / (tf(2.0) * tf(var)).sqrt();
        close(gaussian_tail_outside_window(alpha, var).unwrap(), common::erfc(x).hi(), 1e-12);
    }
    for (alpha, var) in [(0.5, 1.0), (1.0, 3.0), (2.0, 1.0)] {
        let x = tf(alpha) / (tf(2.0) * tf(var)).sqrt();
        close(erf_probability_in_window(alpha, var).unwrap(), common::erf(x).hi(), 1e-15);
    }
}

#[test]
fn baseline_config_against_double_double_grid() {
    for n in [10_000_000u64, 100_000_000, 1_000_000_000] {
        let cfg = ProtocolOneConfig { n, k: n, d: 0.1, t: 3.0, alpha: 37.0, n_bar: 9.5, epsilon: 0.02, p_err: 0.1 };
        let ours = theorem1_bound(&cfg).unwrap().value;
        let reference = common::theorem1_reference(&cfg, 200_000);
        close(ours, reference, 1e-8);
    }
}

fn brute_max(f: impl Fn(f64, f64) -> f64, upper: f64, points: usize) -> f64 {
    // log-spaced in η towards 0 and in (upper − η) towards the upper end
    let mut best = f64::NEG_INFINITY;
    for i in 0..points {
        let frac = i as f64 / (points - 1) as f64;
        let small = upper * (-(1.0 - frac) * 60.0 * std::f64::consts::LN_10).exp();
        let gap = 0.5 * upper * (-frac * 14.0 * std::f64::consts::LN_10).exp();
        for (eta, gap) in [(small, upper - small), (upper - gap, gap)] {
            if eta > 0.0 && gap > 0.0 {
                best = best.max(f(eta, gap));
            }
        }
    }
    best
}

#[test]
fn iid_correction_minimum() {
    for (k, n_bar, eps) in [(1e4f64, 9.5f64, 0.02f64), (1e8, 3.0, 0.005), (1e12, 9.5, 0.2)] {
        let s: f64 = (eps / 2.0).sqrt();
        let omega = 4.0 * f64::sqrt(k) * (2.0 * (1.0 + n_bar).sqrt() + 2.0 * f64::sqrt(n_bar) + 1.0).log2();
        let h = |eta: f64, gap: f64| omega * (2.0 / (gap * gap)).log2().sqrt() - 4.0 * eta.log2() + 2.0;
        let reference = -brute_max(|e, g| -h(e, g), s, 100_000);
        let (_, h_min) = finite_size_correction(k, n_bar, eps).unwrap();
        assert!(h_min <= reference + 1e-9 * reference.abs(), "{h_min} vs {reference}");
        close(h_min, reference, 1e-9);
    }
}

#[test]
fn qubit_bound_supremum() {
    for (n, eps) in [(1_000_000u64, 0.01f64), (10_000, 0.2), (1_000_000_000, 0.001)] {
        let nf = n as f64;
        let s = (eps / 2.0).sqrt();
        let sup = brute_max(
            |eta, gap| 4.0 / nf * (-3.0 * nf.sqrt() * (2.0 / (gap * gap)).log2().sqrt() + eta.log2()),
            s,
            100_000,
        );
        let want = -0.2 + sup - 2.0 / nf;
        let got = qubit_iid_bound(0.2, n, eps, 2).unwrap();
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn almost_iid_bound_matches_transcription() {
    let (n, k, r, eps) = (1_000_000_000_000u64, 1_000_000_000_000u64, 400_000_000u64, 0.02);
    let min_info = 0.95;
    let eps_prime = definetti_epsilon(k, n, r, 16).unwrap();
    assert!(eps_prime < 1e-100);
    let upper = (eps / 2.0f64).sqrt() - eps_prime.sqrt();
    let (nf, rf) = (n as f64, r as f64);
    let hr = binary_entropy(rf / nf).unwrap();
    let mu = (2.0 * 2f64.sqrt() + 1.0).log2();
    let sup = brute_max(
        |eta, gap| {
            let radicand = 2.0 * nf * hr - 4.0 * gap.log2() + 2.0 * 6f64.log2() + 1.0;
            -4.0 * (nf - rf).sqrt() * mu * radicand.sqrt() + 4.0 * eta.log2()
        },
        upper,
        100_000,
    );
    let want = (sup - nf * hr - rf + (nf - rf) * min_info - 2.0).max(0.0);
    let got = almost_iid_bound(min_info, n, k, r, eps).unwrap();
    close(got, want, 1e-12);
    assert!(got > 0.0);
}

#[test]
fn chi_squared_estimators_transcribed() {
    let (k, delta, n_bar): (f64, f64, f64) = (5000.0, 0.05, 9.5);
    let (nx, ny, cross) = (T::from(5000.0 * 2.0 * 20.5), T::from(5000.0 * 2.0 * 13.1), T::from(5000.0 * 2.0 * 17.8));
    let l1 = tf((1.0 / delta).ln());
    let l2 = tf((2.0 / delta).ln());
    let kk = tf(k);
    let lower = kk - (tf(2.0) * kk * l1).sqrt();
    let sigma = ny / (tf(2.0) * lower) - tf(0.5);
    let upper = tf(4.0) * (kk + (tf(2.0) * kk * l2).sqrt() + l2);
    let gamma = (nx + ny + tf(2.0) * cross) / upper - tf(n_bar) - ny / (tf(4.0) * lower) - tf(0.75);
    close(sigma_max_from_norm(ny.hi(), k, delta).unwrap(), sigma.hi(), 1e-14);
    close(gamma_min_from_stats(nx.hi(), ny.hi(), cross.hi(), k, delta, n_bar).unwrap(), gamma.hi(), 1e-13);
}
