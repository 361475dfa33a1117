//! Cross-module consistency: facts that tie two independent public routes
//! together, kept cheap enough to run on every invocation.

use num_complex::Complex64;

use subconvex_core::arith::{
    divisor_count, euler_phi, factorize, gcd, kloosterman_sum, moebius, ramanujan_sum, unit_phase,
};
use subconvex_core::characters::enumerate_characters;
use subconvex_core::forms::{builtin_delta, load_maass_str, FormKind};

fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(n) {
        let snapshot = ds.clone();
        let mut pe = 1u64;
        for _ in 0..e {
            pe *= p;
            ds.extend(snapshot.iter().map(|d| d * pe));
        }
    }
    ds
}

#[test]
fn divisor_sums_recover_phi_and_moebius_identities() {
    for n in 1..=500u64 {
        let ds = divisors(n);
        assert_eq!(ds.len() as u64, divisor_count(n), "d(n) at n={n}");
        assert_eq!(ds.iter().map(|&d| euler_phi(d)).sum::<u64>(), n);
        let mu_sum: i64 = ds.iter().map(|&d| moebius(d)).sum();
        assert_eq!(mu_sum, i64::from(n == 1), "Mobius sum at n={n}");
    }
}

#[test]
fn ramanujan_sum_matches_its_moebius_expansion() {
    for q in 1..=60u64 {
        for n in [0i64, 1, 2, 7, 30, -4, -15] {
            let direct = ramanujan_sum(q, n);
            let expanded: i64 = divisors(gcd(q, n.unsigned_abs()))
                .into_iter()
                .filter(|&d| q % d == 0)
                .map(|d| d as i64 * moebius(q / d))
                .sum();
            assert_eq!(direct, expanded, "q={q} n={n}");
        }
    }
}

#[test]
fn kloosterman_sums_are_real_and_argument_symmetric() {
    for (a, b, c) in [
        (1i64, 1i64, 7u64),
        (2, 5, 12),
        (-3, 11, 25),
        (4, -9, 31),
        (100, 3, 16),
    ] {
        let s = kloosterman_sum(a, b, c).value;
        assert!(s.im.abs() < 1e-10 * (1.0 + s.re.abs()), "S({a},{b};{c}) = {s}");
        let swapped = kloosterman_sum(b, a, c).value;
        assert!((s - swapped).norm() < 1e-10 * (1.0 + s.norm()));
    }
}

/// The character-module Gauss sum against a direct evaluation built from
/// the arithmetic module's phase primitive.
#[test]
fn gauss_sums_match_a_direct_phase_sum() {
    for m in [3u64, 5, 8, 13, 21, 40] {
        for chi in enumerate_characters(m).iter().filter(|c| c.is_primitive()) {
            let tau = chi.gauss_sum().expect("primitive character");
            let direct: Complex64 = (0..m)
                .map(|x| chi.eval(x as i64) * unit_phase(x as i64, m))
                .sum();
            assert!(
                (tau - direct).norm() < 1e-10 * (1.0 + direct.norm()),
                "modulus {m}, index {}",
                chi.index()
            );
        }
    }
}

#[test]
fn spectral_files_round_trip_through_the_loader() {
    let text = "\
# toy spectral data
maass mu=3.25 level=5 neb=1 parity=1
1 1.0 0.0
2 -0.737 0.028
3 0.501 -0.013
4 0.125 0.000
5 -0.447 0.000
";
    let src = load_maass_str(text).expect("well-formed file");
    assert_eq!(src.level(), 5);
    assert_eq!(src.n_max(), 5);
    assert!(matches!(src.kind(), FormKind::Maass { .. }));
    assert_eq!(src.nebentypus().index(), 1);
    let a2 = src.lambda(2).unwrap();
    assert!((a2 - Complex64::new(-0.737, 0.028)).norm() < 1e-12);
    let partial: f64 = (1..=5).map(|n| src.lambda(n).unwrap().norm_sqr()).sum();
    assert!((src.rankin_selberg_sum(5).unwrap() - partial).abs() < 1e-12);
}

/// The built-in holomorphic form agrees with an integer recursion evaluated
/// through floating point, and its coefficients are genuinely normalized.
#[test]
fn builtin_form_normalization_is_consistent() {
    let src = builtin_delta(64);
    assert_eq!(src.level(), 1);
    assert!(matches!(src.kind(), FormKind::Holomorphic { weight: 12 }));
    assert_eq!(src.lambda(1).unwrap(), Complex64::new(1.0, 0.0));
    // Multiplicativity at a coprime pair survives the normalization.
    let (a6, a2, a3) = (
        src.lambda(6).unwrap(),
        src.lambda(2).unwrap(),
        src.lambda(3).unwrap(),
    );
    assert!((a6 - a2 * a3).norm() < 1e-12);
}
