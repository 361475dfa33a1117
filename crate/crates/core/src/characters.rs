//! Dirichlet character groups: construction, exact evaluation, conductors,
//! parity, Gauss sums.
//!
//! A character mod M is stored as a vector of exponents against fixed
//! generators of each prime-power component of (Z/M)* (two generators for the
//! 2-part when 8 | M). Evaluation reduces the total phase to an exact rational
//! number of turns and performs a single complex exponential, so character
//! values are roots of unity accurate to an ulp — there is no floating-point
//! ambiguity in χ itself, only in the final `cis`.
//!
//! Discrete-log tables are built once per modulus and shared behind an `Arc`,
//! so cloning characters and evaluating them from several threads is cheap.

use crate::arith::{euler_phi, factorize, gcd, unit_phase};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CharacterError {
    #[error("character mod {modulus} has conductor {conductor}, not primitive")]
    NotPrimitive { modulus: u64, conductor: u64 },
    #[error("character index {index} out of range for modulus {modulus} (group order {order})")]
    IndexOutOfRange { modulus: u64, index: u64, order: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// 0 for even, 1 for odd: the shift that appears in gamma factors.
    pub fn delta(self) -> u32 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

/// One cyclic factor of (Z/M)*: a prime-power part together with a discrete
/// logarithm table against a fixed generator.
#[derive(Debug)]
struct Component {
    /// p^k, the prime-power modulus this component lives on.
    part: u64,
    /// p, retained for conductor computations.
    prime: u64,
    /// Order of the cyclic factor.
    order: u64,
    /// dlog[x] = exponent of x against the generator, `u32::MAX` off the units.
    dlog: Vec<u32>,
}

#[derive(Debug)]
struct GroupData {
    modulus: u64,
    components: Vec<Component>,
    /// lcm of component orders: common denominator for exact phases.
    phase_den: u64,
    group_order: u64,
}

/// The full character group mod M. Construction cost is O(M log M)-ish
/// (dominated by the dlog tables); everything afterwards is table lookups.
#[derive(Debug, Clone)]
pub struct CharacterGroup {
    data: Arc<GroupData>,
}

/// A single Dirichlet character. Cheap to clone; safe to share across threads.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    data: Arc<GroupData>,
    exponents: Vec<u64>,
    index: u64,
    conductor: u64,
    parity: Parity,
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    acc
}

/// Smallest primitive root modulo p^k (p odd prime).
fn primitive_root(p: u64, k: u32) -> u64 {
    let pk = p.pow(k);
    let phi = euler_phi(pk);
    let prime_divs: Vec<u64> = factorize(phi).into_iter().map(|(q, _)| q).collect();
    (2..pk)
        .find(|&g| {
            g % p != 0 && prime_divs.iter().all(|&q| pow_mod(g, phi / q, pk) != 1)
        })
        .expect("every odd prime power has a primitive root")
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn build_components(m: u64) -> Vec<Component> {
    let mut comps = Vec::new();
    for (p, k) in factorize(m) {
        let part = p.pow(k);
        if p == 2 {
            match k {
                1 => {} // (Z/2)* is trivial
                2 => {
                    // (Z/4)* = {1, 3}, generated by 3.
                    let mut dlog = vec![u32::MAX; 4];
                    dlog[1] = 0;
                    dlog[3] = 1;
                    comps.push(Component { part: 4, prime: 2, order: 2, dlog });
                }
                _ => {
                    // (Z/2^k)* = <-1> x <5>; sign component first.
                    let half = part / 2 / 2; // order of 5 is 2^{k-2}
                    let mut sign = vec![u32::MAX; part as usize];
                    let mut five = vec![u32::MAX; part as usize];
                    for s in 0..2u64 {
                        let mut x = if s == 0 { 1u64 } else { part - 1 };
                        for i in 0..half {
                            sign[x as usize] = s as u32;
                            five[x as usize] = i as u32;
                            x = (x as u128 * 5 % part as u128) as u64;
                        }
                    }
                    comps.push(Component { part, prime: 2, order: 2, dlog: sign });
                    comps.push(Component { part, prime: 2, order: half, dlog: five });
                }
            }
        } else {
            let g = primitive_root(p, k);
            let order = euler_phi(part);
            let mut dlog = vec![u32::MAX; part as usize];
            let mut x = 1u64;
            for i in 0..order {
                dlog[x as usize] = i as u32;
                x = (x as u128 * g as u128 % part as u128) as u64;
            }
            comps.push(Component { part, prime: p, order, dlog });
        }
    }
    comps
}

impl CharacterGroup {
    pub fn new(modulus: u64) -> Self {
        assert!(
            (1..=100_000).contains(&modulus),
            "modulus out of contract range"
        );
        let components = build_components(modulus);
        let phase_den = components.iter().fold(1u64, |d, c| lcm(d, c.order));
        let group_order = components.iter().map(|c| c.order).product();
        CharacterGroup {
            data: Arc::new(GroupData {
                modulus,
                components,
                phase_den,
                group_order,
            }),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.data.modulus
    }

    /// Number of characters, equal to φ(M).
    pub fn order(&self) -> u64 {
        self.data.group_order
    }

    /// Character for a mixed-radix index over the component exponents
    /// (component 0 varies fastest; index 0 is the principal character).
    pub fn character(&self, index: u64) -> Result<DirichletCharacter, CharacterError> {
        if index >= self.data.group_order {
            return Err(CharacterError::IndexOutOfRange {
                modulus: self.data.modulus,
                index,
                order: self.data.group_order,
            });
        }
        let mut exps = Vec::with_capacity(self.data.components.len());
        let mut rem = index;
        for c in &self.data.components {
            exps.push(rem % c.order);
            rem /= c.order;
        }
        Ok(DirichletCharacter::assemble(self.data.clone(), exps, index))
    }

    pub fn iter(&self) -> impl Iterator<Item = DirichletCharacter> + '_ {
        (0..self.data.group_order).map(move |i| self.character(i).expect("index in range"))
    }
}

/// All φ(M) characters mod M, indexed as in [`CharacterGroup::character`].
pub fn enumerate_characters(modulus: u64) -> Vec<DirichletCharacter> {
    CharacterGroup::new(modulus).iter().collect()
}

impl DirichletCharacter {
    fn assemble(data: Arc<GroupData>, exponents: Vec<u64>, index: u64) -> Self {
        let conductor = conductor_of(&data, &exponents);
        let mut chi = DirichletCharacter {
            data,
            exponents,
            index,
            conductor,
            parity: Parity::Even,
        };
        chi.parity = match chi.phase_num(-1) {
            Some(0) => Parity::Even,
            Some(n) if 2 * n == chi.data.phase_den => Parity::Odd,
            other => unreachable!("χ(-1) must be ±1, got phase {other:?}"),
        };
        chi
    }

    pub fn modulus(&self) -> u64 {
        self.data.modulus
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_principal(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.data.modulus
    }

    /// Order of χ in the character group.
    pub fn order(&self) -> u64 {
        self.data
            .components
            .iter()
            .zip(&self.exponents)
            .fold(1u64, |acc, (c, &e)| lcm(acc, c.order / gcd(c.order, e)))
    }

    /// Exact phase of χ(n) as a numerator against `phase_den()` turns,
    /// or None when gcd(n, M) > 1.
    pub fn phase_num(&self, n: i64) -> Option<u64> {
        let m = self.data.modulus;
        let x = n.rem_euclid(m as i64) as u64;
        if m == 1 {
            return Some(0);
        }
        if gcd(x, m) != 1 {
            return None;
        }
        let den = self.data.phase_den as u128;
        let mut num: u128 = 0;
        for (c, &e) in self.data.components.iter().zip(&self.exponents) {
            let d = c.dlog[(x % c.part) as usize];
            debug_assert_ne!(d, u32::MAX, "unit must be in the dlog table");
            num += e as u128 * d as u128 % den * (den / c.order as u128) % den;
        }
        Some((num % den) as u64)
    }

    /// Denominator of the exact phases returned by [`phase_num`]:
    /// χ(n) = e(phase_num(n) / phase_den()).
    pub fn phase_den(&self) -> u64 {
        self.data.phase_den
    }

    /// χ(n): a root of unity for n coprime to M, else 0.
    pub fn eval(&self, n: i64) -> Complex64 {
        match self.phase_num(n) {
            Some(num) => unit_phase(num as i64, self.data.phase_den),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// The conjugate character χ̄.
    pub fn conjugate(&self) -> DirichletCharacter {
        let exps: Vec<u64> = self
            .data
            .components
            .iter()
            .zip(&self.exponents)
            .map(|(c, &e)| if e == 0 { 0 } else { c.order - e })
            .collect();
        let index = self
            .data
            .components
            .iter()
            .zip(&exps)
            .rev()
            .fold(0u64, |acc, (c, &e)| acc * c.order + e);
        DirichletCharacter::assemble(self.data.clone(), exps, index)
    }

    /// τ(χ) = Σ_{a mod M} χ(a) e_M(a). Requires χ primitive.
    pub fn gauss_sum(&self) -> Result<Complex64, CharacterError> {
        if !self.is_primitive() {
            return Err(CharacterError::NotPrimitive {
                modulus: self.data.modulus,
                conductor: self.conductor,
            });
        }
        let m = self.data.modulus;
        let den = lcm(self.data.phase_den, m);
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..m {
            if let Some(num) = self.phase_num(a as i64) {
                // total phase = num/phase_den + a/m, over the common denominator
                let total = (num as u128 * (den / self.data.phase_den) as u128
                    + a as u128 * (den / m) as u128)
                    % den as u128;
                acc += unit_phase(total as i64, den);
            }
        }
        Ok(acc)
    }

    /// τ(χ)/√M, the unit-modulus sign in front of dualized character sums.
    pub fn epsilon_sign(&self) -> Result<Complex64, CharacterError> {
        Ok(self.gauss_sum()? / (self.data.modulus as f64).sqrt())
    }
}

/// Free-function form of character evaluation.
pub fn eval_character(chi: &DirichletCharacter, n: i64) -> Complex64 {
    chi.eval(n)
}

/// Conductor from the component orders: for an odd prime p the p-part of the
/// conductor is p^{v_p(ord)+1} when the component character is nontrivial;
/// the 2-part follows the same rule against the <5> generator, with the sign
/// generator alone contributing conductor 4.
fn conductor_of(data: &GroupData, exponents: &[u64]) -> u64 {
    let mut cond = 1u64;
    let mut i = 0;
    let comps = &data.components;
    while i < comps.len() {
        let c = &comps[i];
        if c.prime == 2 && c.order == 2 && i + 1 < comps.len() && comps[i + 1].prime == 2 {
            // sign + <5> pair for 2^k, k >= 3
            let e_sign = exponents[i];
            let e_five = exponents[i + 1];
            let d5 = comps[i + 1].order;
            if e_five != 0 {
                let ord5 = d5 / gcd(e_five, d5);
                cond *= 4 * ord5; // 2^{v2(ord5)+2}, and ord5 is a power of two
            } else if e_sign != 0 {
                cond *= 4;
            }
            i += 2;
            continue;
        }
        let e = exponents[i];
        if e != 0 {
            let ord = c.order / gcd(e, c.order);
            if c.prime == 2 {
                // the lone mod-4 component
                cond *= 4;
            } else {
                let mut alpha = 0u32;
                let mut o = ord;
                while o % c.prime == 0 {
                    o /= c.prime;
                    alpha += 1;
                }
                cond *= c.prime.pow(alpha + 1);
            }
        }
        i += 1;
    }
    cond
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Conductor straight from the definition: the smallest divisor f of M
    /// such that χ(x) = 1 whenever x ≡ 1 (mod f) and gcd(x, M) = 1.
    fn conductor_brute(chi: &DirichletCharacter) -> u64 {
        let m = chi.modulus();
        (1..=m)
            .filter(|d| m % d == 0)
            .find(|&f| {
                (1..=m)
                    .step_by(f as usize)
                    .filter(|&x| gcd(x % m, m) == 1 || m == 1)
                    .all(|x| chi.phase_num(x as i64) == Some(0))
            })
            .unwrap_or(m)
    }

    #[test]
    fn character_counts_match_phi() {
        for m in 1..=200u64 {
            assert_eq!(
                enumerate_characters(m).len() as u64,
                euler_phi(m),
                "count mod {m}"
            );
        }
    }

    #[test]
    fn mod5_has_three_primitive() {
        let chars = enumerate_characters(5);
        assert_eq!(chars.len(), 4);
        assert_eq!(chars.iter().filter(|c| c.is_primitive()).count(), 3);
        assert_eq!(chars.iter().filter(|c| c.is_principal()).count(), 1);
    }

    #[test]
    fn mod8_has_four_characters() {
        assert_eq!(enumerate_characters(8).len(), 4);
    }

    #[test]
    fn eval_basics() {
        for m in [1u64, 3, 5, 8, 12, 45] {
            for chi in enumerate_characters(m) {
                assert_eq!(chi.eval(1), Complex64::new(1.0, 0.0), "χ(1) mod {m}");
                if m > 1 {
                    assert_eq!(chi.eval(m as i64).norm(), 0.0, "χ(M) mod {m}");
                }
            }
        }
    }

    #[test]
    fn quadratic_mod3_at_two() {
        let chi = enumerate_characters(3)
            .into_iter()
            .find(|c| !c.is_principal())
            .unwrap();
        assert!((chi.eval(2) - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn multiplicative_on_units() {
        for m in [7u64, 16, 24, 45, 56] {
            for chi in enumerate_characters(m) {
                for a in 1..m.min(30) {
                    for b in 1..m.min(30) {
                        let lhs = chi.eval((a * b) as i64);
                        let rhs = chi.eval(a as i64) * chi.eval(b as i64);
                        assert!((lhs - rhs).norm() < 1e-12, "mult mod {m} at {a},{b}");
                    }
                }
            }
        }
    }

    #[test]
    fn column_orthogonality() {
        for m in 2..=200u64 {
            for chi in enumerate_characters(m) {
                let s: Complex64 = (0..m).map(|a| chi.eval(a as i64)).sum();
                if chi.is_principal() {
                    assert!((s.re - euler_phi(m) as f64).abs() < 1e-8, "principal mod {m}");
                } else {
                    assert!(s.norm() < 1e-8, "orthogonality mod {m}, index {}", chi.index());
                }
            }
        }
    }

    #[test]
    fn conductor_matches_induction_scan() {
        for m in 1..=120u64 {
            for chi in enumerate_characters(m) {
                assert_eq!(
                    chi.conductor(),
                    conductor_brute(&chi),
                    "conductor mod {m}, index {}",
                    chi.index()
                );
            }
        }
    }

    #[test]
    fn parity_matches_direct_evaluation() {
        for m in 1..=80u64 {
            for chi in enumerate_characters(m) {
                let v = chi.eval(-1);
                let expect = match chi.parity() {
                    Parity::Even => 1.0,
                    Parity::Odd => -1.0,
                };
                assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_sum_known_values() {
        // mod 1: empty product group, τ = 1
        let chi1 = &enumerate_characters(1)[0];
        assert!((chi1.gauss_sum().unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-14);

        // quadratic mod 5: τ = √5
        let chi5 = enumerate_characters(5)
            .into_iter()
            .find(|c| !c.is_principal() && c.order() == 2)
            .unwrap();
        let t5 = chi5.gauss_sum().unwrap();
        assert!((t5 - Complex64::new(5f64.sqrt(), 0.0)).norm() < 1e-12, "{t5}");

        // quadratic mod 3: τ = i√3
        let chi3 = enumerate_characters(3)
            .into_iter()
            .find(|c| !c.is_principal())
            .unwrap();
        let t3 = chi3.gauss_sum().unwrap();
        assert!((t3 - Complex64::new(0.0, 3f64.sqrt())).norm() < 1e-12, "{t3}");
    }

    #[test]
    fn gauss_sum_magnitude_primitive() {
        for m in 1..=60u64 {
            for chi in enumerate_characters(m) {
                if chi.is_primitive() {
                    let t = chi.gauss_sum().unwrap();
                    assert!(
                        (t.norm() - (m as f64).sqrt()).abs() < 1e-10,
                        "|τ| mod {m} index {}",
                        chi.index()
                    );
                } else {
                    assert!(chi.gauss_sum().is_err());
                }
            }
        }
    }

    #[test]
    fn twisted_gauss_identity() {
        // Σ_a χ(a) e_M(an) = χ̄(n) τ(χ) for primitive χ, all n.
        for m in [3u64, 4, 5, 8, 9, 12, 15, 16, 25, 40, 100] {
            for chi in enumerate_characters(m).into_iter().filter(|c| c.is_primitive()) {
                let tau = chi.gauss_sum().unwrap();
                let chibar = chi.conjugate();
                for n in 0..m {
                    let lhs: Complex64 = (0..m)
                        .map(|a| chi.eval(a as i64) * unit_phase((a * n) as i64, m))
                        .sum();
                    let rhs = chibar.eval(n as i64) * tau;
                    assert!(
                        (lhs - rhs).norm() < 1e-9 * (m as f64),
                        "twisted identity mod {m}, n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn epsilon_values() {
        let chi5 = enumerate_characters(5)
            .into_iter()
            .find(|c| !c.is_principal() && c.order() == 2)
            .unwrap();
        assert!((chi5.epsilon_sign().unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);

        let chi3 = enumerate_characters(3)
            .into_iter()
            .find(|c| !c.is_principal())
            .unwrap();
        assert!((chi3.epsilon_sign().unwrap() - Complex64::new(0.0, 1.0)).norm() < 1e-12);

        let principal6 = enumerate_characters(6)
            .into_iter()
            .find(|c| c.is_principal())
            .unwrap();
        assert!(matches!(
            principal6.epsilon_sign(),
            Err(CharacterError::NotPrimitive { .. })
        ));
    }

    #[test]
    fn characters_pairwise_distinct() {
        for m in [24u64, 45, 72] {
            let chars = enumerate_characters(m);
            let units: Vec<u64> = (1..m).filter(|&a| gcd(a, m) == 1).collect();
            let mut seen = std::collections::HashSet::new();
            for chi in &chars {
                let key: Vec<Option<u64>> =
                    units.iter().map(|&a| chi.phase_num(a as i64)).collect();
                assert!(seen.insert(key), "duplicate character mod {m}");
            }
        }
    }

    #[test]
    fn conjugate_inverts_phases() {
        for m in [5u64, 16, 21] {
            for chi in enumerate_characters(m) {
                let conj = chi.conjugate();
                for a in 1..m {
                    let prod = chi.eval(a as i64) * conj.eval(a as i64);
                    if gcd(a, m) == 1 {
                        assert!((prod - Complex64::new(1.0, 0.0)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn induced_character_agrees_with_core() {
        // A mod-12 character of conductor 3 equals the quadratic mod-3
        // character on the units mod 12.
        let chi3 = enumerate_characters(3)
            .into_iter()
            .find(|c| !c.is_principal())
            .unwrap();
        let induced: Vec<DirichletCharacter> = enumerate_characters(12)
            .into_iter()
            .filter(|c| c.conductor() == 3)
            .collect();
        assert_eq!(induced.len(), 1);
        for a in (1..12i64).filter(|&a| gcd(a as u64, 12) == 1) {
            assert!((induced[0].eval(a) - chi3.eval(a)).norm() < 1e-12);
        }
    }

    #[test]
    fn index_round_trip() {
        let g = CharacterGroup::new(360);
        for i in 0..g.order() {
            let chi = g.character(i).unwrap();
            assert_eq!(chi.index(), i);
        }
        assert!(g.character(g.order()).is_err());
    }
}
