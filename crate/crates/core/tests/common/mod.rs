#![allow(dead_code)]

use eitmem::atomic::{build_cesium_d2, LevelScheme};
use eitmem::bloch::{FieldConfig, MediumConfig, Populations};
use eitmem::constants::cesium;
use eitmem::propagation::PulseSpec;

pub const FWHM: f64 = 0.5e-6;
pub const N_T: usize = 1024;

pub fn scheme() -> LevelScheme {
    build_cesium_d2()
}

/// Cold-cloud parameters of the efficiency study: L = 2.5 cm, 20 uK,
/// 8 mG/cm, gamma0 = 1e-3 Gamma.
pub fn cloud(od: f64, populations: Populations) -> MediumConfig {
    MediumConfig {
        optical_depth: od,
        length: 0.025,
        temperature: 20e-6,
        gradient: 8e-3,
        gamma0: 1e-3 * cesium::GAMMA,
        populations,
    }
}

/// Grid for the T_d = 2 tau operating point.
pub fn pulse() -> PulseSpec {
    PulseSpec::for_delay(FWHM, 2.0 * FWHM, N_T).unwrap()
}

pub fn resonant() -> FieldConfig {
    FieldConfig::resonant(0.0)
}

/// Exhaustive benchmark oracle. The cheater's problem is a linear program in
/// the answer probabilities q_N in [0, 1] with the single constraint
/// sum q_N p_N = mass, so its optimum sits on a vertex: every q_N is 0 or 1
/// except at most one. All such vertices are enumerated, without using the
/// ordering of (N+1)/(N+2).
pub fn lp_vertex_benchmark(p: &[f64], mass: f64) -> f64 {
    let k = p.len() - 1;
    assert!(k <= 20, "oracle is exponential in the photon-number cutoff");
    let f = |n: usize| (n as f64 + 1.0) / (n as f64 + 2.0);
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << k) {
        let (mut s, mut num) = (0.0, 0.0);
        for n in 1..=k {
            if mask & (1 << (n - 1)) != 0 {
                s += p[n];
                num += p[n] * f(n);
            }
        }
        if (s - mass).abs() <= 1e-14 {
            best = best.max(num / mass);
        }
        if s > mass {
            continue;
        }
        for j in 1..=k {
            if mask & (1 << (j - 1)) != 0 || p[j] <= 0.0 {
                continue;
            }
            let q = (mass - s) / p[j];
            if (0.0..=1.0).contains(&q) {
                best = best.max((num + q * p[j] * f(j)) / mass);
            }
        }
    }
    best
}

/// Poisson probabilities p_0..p_k computed independently of the library.
pub fn poisson(nbar: f64, k: usize) -> Vec<f64> {
    (0..=k)
        .map(|n| {
            let ln_fact: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
            (n as f64 * nbar.ln() - nbar - ln_fact).exp()
        })
        .collect()
}
