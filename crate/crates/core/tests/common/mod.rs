//! Oracles shared by the integration tests. They are written against raw
//! arrays and 2x2 matrices and do not call the crate's probability code.

#![allow(dead_code)]

use ghz_esr::model::Flag;
use ghz_esr::{MeasurementContext, Model, Rational, Sign, Site};
use num_complex::Complex;

type C = Complex<i64>;

fn pauli(axis: char) -> [[C; 2]; 2] {
    let z = C::new(0, 0);
    let one = C::new(1, 0);
    let i = C::new(0, 1);
    match axis {
        'x' => [[z, one], [one, z]],
        'y' => [[z, -i], [i, z]],
        'z' => [[one, z], [z, -one]],
        _ => panic!("axis {axis}"),
    }
}

fn kron(a: &[Vec<C>], b: &[[C; 2]; 2]) -> Vec<Vec<C>> {
    let n = a.len();
    let mut out = vec![vec![C::new(0, 0); 2 * n]; 2 * n];
    for r in 0..n {
        for c in 0..n {
            for i in 0..2 {
                for j in 0..2 {
                    out[2 * r + i][2 * c + j] = a[r][c] * b[i][j];
                }
            }
        }
    }
    out
}

/// QM probability from dense 8x8 matrices: the product over particles of
/// (I + o sigma) or I, sandwiched by |000> - |111>, divided by 2 * 2^m.
pub fn dense_qm_probability(context: &MeasurementContext, outcomes: &[Sign]) -> Rational {
    let one = C::new(1, 0);
    let zero = C::new(0, 0);
    let mut op: Vec<Vec<C>> = vec![vec![one]];
    let mut measured = 0u32;
    let sites = context.sites();
    for particle in 1..=3u8 {
        let factor = match sites.iter().position(|s| s.particle.get() == particle) {
            None => [[one, zero], [zero, one]],
            Some(k) => {
                measured += 1;
                let sign = outcomes[k].value() as i64;
                let p = pauli(sites[k].axis.letter());
                let mut f = [[zero; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let id = if i == j { one } else { zero };
                        f[i][j] = id + p[i][j] * sign;
                    }
                }
                f
            }
        };
        op = kron(&op, &factor);
    }
    let mut psi = [zero; 8];
    psi[0] = one;
    psi[7] = -one;
    let mut acc = zero;
    for r in 0..8 {
        for c in 0..8 {
            acc += psi[r].conj() * op[r][c] * psi[c];
        }
    }
    assert_eq!(acc.im, 0);
    Rational::new(acc.re, 2 * (1i64 << measured))
}

/// Brute-force (detected mass, matching mass) over (state, d-distribution)
/// pairs read through raw values and flags.
pub fn brute_masses(model: &Model, context: &MeasurementContext, outcomes: &[Sign]) -> (Rational, Rational) {
    let sites: Vec<Site> = context.sites();
    let mut detected = Rational::zero();
    let mut matching = Rational::zero();
    for (state, _, dds) in model.entries() {
        let values = state.values();
        for dd in dds {
            let flags = dd.flags();
            if sites.iter().any(|s| flags[s.index()] == Flag::U) {
                continue;
            }
            let w = Rational::new(1, 128 * dds.len() as i64);
            detected += w.clone();
            if sites.iter().zip(outcomes).all(|(s, o)| values[s.index()] == o.value()) {
                matching += w;
            }
        }
    }
    (detected, matching)
}

pub fn brute_conditional(model: &Model, context: &MeasurementContext, outcomes: &[Sign]) -> Option<Rational> {
    let (detected, matching) = brute_masses(model, context, outcomes);
    matching.checked_div(&detected)
}

pub fn ctx(s: &str) -> MeasurementContext {
    s.parse().expect("valid context")
}

pub fn signs(v: &[i64]) -> Vec<Sign> {
    v.iter().map(|&x| Sign::from_value(x).unwrap()).collect()
}
