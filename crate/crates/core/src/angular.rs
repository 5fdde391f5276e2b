//! Angular-momentum coupling coefficients.
//!
//! Everything works on doubled quantum numbers (`two_j = 2j`) so integer and
//! half-integer momenta share one exact representation. All coefficients use
//! the Condon-Shortley phase convention and Racah's closed-form sums.

use crate::error::{Error, Result};

const FACT_LEN: usize = 171;

fn factorial(n: i32) -> f64 {
    static TABLE: std::sync::OnceLock<[f64; FACT_LEN]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [1.0; FACT_LEN];
        for k in 1..FACT_LEN {
            t[k] = t[k - 1] * k as f64;
        }
        t
    });
    debug_assert!(n >= 0 && (n as usize) < FACT_LEN);
    table[n as usize]
}

fn sign(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Converts a real number to a doubled quantum number, rejecting anything that
/// is not a multiple of 1/2.
pub fn doubled(x: f64) -> Result<i32> {
    let two = 2.0 * x;
    let r = two.round();
    if !x.is_finite() || (two - r).abs() > 1e-9 {
        return Err(Error::AngularMomentum(format!("{x} is not a half-integer")));
    }
    Ok(r as i32)
}

fn check_jm(two_j: i32, two_m: i32) -> Result<()> {
    if two_j < 0 {
        return Err(Error::AngularMomentum(format!("negative j = {}/2", two_j)));
    }
    if two_m.abs() > two_j || (two_j - two_m).rem_euclid(2) != 0 {
        return Err(Error::AngularMomentum(format!(
            "m = {}/2 inconsistent with j = {}/2",
            two_m, two_j
        )));
    }
    Ok(())
}

/// Triangle condition |a - b| <= c <= a + b with integer perimeter.
fn triangle(two_a: i32, two_b: i32, two_c: i32) -> bool {
    two_c >= (two_a - two_b).abs() && two_c <= two_a + two_b && (two_a + two_b + two_c) % 2 == 0
}

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> on doubled arguments.
///
/// Arguments must be valid (j, m) pairs; a violated selection rule (M != m1 + m2
/// or failed triangle) gives exactly zero.
pub fn cg2(two_j1: i32, two_m1: i32, two_j2: i32, two_m2: i32, two_j: i32, two_m: i32) -> Result<f64> {
    check_jm(two_j1, two_m1)?;
    check_jm(two_j2, two_m2)?;
    check_jm(two_j, two_m)?;
    Ok(cg2_unchecked(two_j1, two_m1, two_j2, two_m2, two_j, two_m))
}

pub(crate) fn cg2_unchecked(
    two_j1: i32,
    two_m1: i32,
    two_j2: i32,
    two_m2: i32,
    two_j: i32,
    two_m: i32,
) -> f64 {
    if two_m != two_m1 + two_m2 || !triangle(two_j1, two_j2, two_j) {
        return 0.0;
    }
    // Integers in the Racah formula (all sums below are even when doubled).
    let j1pj2mj = (two_j1 + two_j2 - two_j) / 2;
    let jpj1mj2 = (two_j + two_j1 - two_j2) / 2;
    let jmj1pj2 = (two_j - two_j1 + two_j2) / 2;
    let sum1 = (two_j1 + two_j2 + two_j) / 2 + 1;
    let jpm = (two_j + two_m) / 2;
    let jmm = (two_j - two_m) / 2;
    let j1mm1 = (two_j1 - two_m1) / 2;
    let j1pm1 = (two_j1 + two_m1) / 2;
    let j2mm2 = (two_j2 - two_m2) / 2;
    let j2pm2 = (two_j2 + two_m2) / 2;

    let pre = ((two_j + 1) as f64 * factorial(jpj1mj2) * factorial(jmj1pj2) * factorial(j1pj2mj)
        / factorial(sum1))
    .sqrt()
        * (factorial(jpm)
            * factorial(jmm)
            * factorial(j1mm1)
            * factorial(j1pm1)
            * factorial(j2mm2)
            * factorial(j2pm2))
        .sqrt();

    // k ranges over values keeping every factorial argument non-negative.
    let a = (two_j - two_j2 + two_m1) / 2;
    let b = (two_j - two_j1 - two_m2) / 2;
    let kmin = 0.max(-a).max(-b);
    let kmax = j1pj2mj.min(j1mm1).min(j2pm2);
    let mut sum = 0.0;
    for k in kmin..=kmax {
        sum += sign(k)
            / (factorial(k)
                * factorial(j1pj2mj - k)
                * factorial(j1mm1 - k)
                * factorial(j2pm2 - k)
                * factorial(a + k)
                * factorial(b + k));
    }
    pre * sum
}

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> for half-integer arguments.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> Result<f64> {
    cg2(
        doubled(j1)?,
        doubled(m1)?,
        doubled(j2)?,
        doubled(m2)?,
        doubled(j)?,
        doubled(m)?,
    )
}

/// Wigner 3-j symbol (j1 j2 j3; m1 m2 m3), doubled arguments.
pub fn wigner_3j2(two_j1: i32, two_j2: i32, two_j3: i32, two_m1: i32, two_m2: i32, two_m3: i32) -> Result<f64> {
    check_jm(two_j1, two_m1)?;
    check_jm(two_j2, two_m2)?;
    check_jm(two_j3, two_m3)?;
    if two_m1 + two_m2 + two_m3 != 0 {
        return Ok(0.0);
    }
    let phase = sign((two_j1 - two_j2 - two_m3) / 2);
    Ok(phase / ((two_j3 + 1) as f64).sqrt() * cg2_unchecked(two_j1, two_m1, two_j2, two_m2, two_j3, -two_m3))
}

fn delta(two_a: i32, two_b: i32, two_c: i32) -> f64 {
    (factorial((two_a + two_b - two_c) / 2) * factorial((two_a - two_b + two_c) / 2)
        * factorial((-two_a + two_b + two_c) / 2)
        / factorial((two_a + two_b + two_c) / 2 + 1))
    .sqrt()
}

/// Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}, doubled arguments.
pub fn wigner_6j2(two_j1: i32, two_j2: i32, two_j3: i32, two_j4: i32, two_j5: i32, two_j6: i32) -> Result<f64> {
    for &tj in &[two_j1, two_j2, two_j3, two_j4, two_j5, two_j6] {
        if tj < 0 {
            return Err(Error::AngularMomentum(format!("negative j = {}/2", tj)));
        }
    }
    if !(triangle(two_j1, two_j2, two_j3)
        && triangle(two_j1, two_j5, two_j6)
        && triangle(two_j4, two_j2, two_j6)
        && triangle(two_j4, two_j5, two_j3))
    {
        return Ok(0.0);
    }
    let a1 = (two_j1 + two_j2 + two_j3) / 2;
    let a2 = (two_j1 + two_j5 + two_j6) / 2;
    let a3 = (two_j4 + two_j2 + two_j6) / 2;
    let a4 = (two_j4 + two_j5 + two_j3) / 2;
    let b1 = (two_j1 + two_j2 + two_j4 + two_j5) / 2;
    let b2 = (two_j2 + two_j3 + two_j5 + two_j6) / 2;
    let b3 = (two_j3 + two_j1 + two_j6 + two_j4) / 2;
    let tmin = a1.max(a2).max(a3).max(a4);
    let tmax = b1.min(b2).min(b3);
    let mut sum = 0.0;
    for t in tmin..=tmax {
        sum += sign(t) * factorial(t + 1)
            / (factorial(t - a1)
                * factorial(t - a2)
                * factorial(t - a3)
                * factorial(t - a4)
                * factorial(b1 - t)
                * factorial(b2 - t)
                * factorial(b3 - t));
    }
    Ok(delta(two_j1, two_j2, two_j3)
        * delta(two_j1, two_j5, two_j6)
        * delta(two_j4, two_j2, two_j6)
        * delta(two_j4, two_j5, two_j3)
        * sum)
}
