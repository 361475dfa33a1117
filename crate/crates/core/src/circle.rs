//! Overlapping-interval approximation of the unit-interval indicator.
//!
//! A moduli collection 𝒬 with half-width δ defines the kernel
//!
//! ```text
//! Ĩ(x) = 1/(2δL) · Σ_{q∈𝒬} Σ_{gcd(a,q)=1} 1[a/q-δ, a/q+δ](x),   L = Σ φ(q),
//! ```
//!
//! a step function of unit mass that approximates 1 on [0,1]. This module
//! evaluates the kernel exactly (sorted endpoint tables, no sampling),
//! computes its L² defect ∫|1-Ĩ|² by two independent routes — exact
//! piecewise integration and a Fourier series over Ramanujan sums — and
//! compares a smoothed coefficient sum S(N) against the dualized form S̃(N)
//! obtained by replacing the diagonal detector with Ĩ.

use crate::arith::{euler_phi, gcd, moebius, primes_in, ramanujan_sum};
use crate::bessel::SmoothWindow;
use crate::characters::DirichletCharacter;
use crate::forms::{CoefficientSource, FormError};
use crate::quad::{Kahan, KahanF64, SplitPhase};
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

/// Hard cap on the breakpoint table: beyond this the "exact piecewise"
/// guarantee would cost more memory than a desk-scale check should.
const MAX_BREAKPOINTS: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum CircleError {
    #[error("moduli set must be nonempty")]
    EmptyModuli,
    #[error("no primes in [{lo}, {hi}) are coprime to {coprime_to}")]
    EmptyRange { lo: u64, hi: u64, coprime_to: u64 },
    #[error("prime ranges [{q1}, {two_q1}) and [{q2}, {two_q2}) must be disjoint")]
    RangesOverlap {
        q1: u64,
        two_q1: u64,
        q2: u64,
        two_q2: u64,
    },
    #[error("delta {delta:.3e} outside the admissible window [{lo:.3e}, {hi:.3e}] for Q = {q}")]
    DeltaOutOfRange { delta: f64, lo: f64, hi: f64, q: u64 },
    #[error("breakpoint table needs {needed} entries (cap {MAX_BREAKPOINTS})")]
    BreakpointOverflow { needed: u64 },
}

/// The factored description of a product moduli set P·𝒬₁·𝒬₂.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredModuli {
    pub p: u64,
    pub q1_primes: Vec<u64>,
    pub q2_primes: Vec<u64>,
}

/// A collection of moduli 𝒬 ⊂ [1,Q] with half-width δ and mass L = Σφ(q).
/// The sorted interval-endpoint tables are built once at construction and
/// shared read-only afterwards, so kernel evaluation is two binary searches.
#[derive(Debug, Clone)]
pub struct ModuliSet {
    members: Vec<u64>,
    q_bound: u64,
    delta: f64,
    mass: u64,
    factored: Option<FactoredModuli>,
    /// Left endpoints of the covering intervals, reduced to [0,1], sorted.
    starts: Vec<f64>,
    /// Right endpoints, same reduction, sorted.
    ends: Vec<f64>,
}

impl ModuliSet {
    /// A set with explicit members; Q is taken as the largest member.
    pub fn new(members: Vec<u64>, delta: f64) -> Result<Self, CircleError> {
        let mut members: Vec<u64> = members.into_iter().filter(|&q| q >= 1).collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(CircleError::EmptyModuli);
        }
        let q_bound = *members.last().unwrap();
        Self::from_parts(members, q_bound, delta, None)
    }

    /// Every modulus 1..=q_max.
    pub fn all_up_to(q_max: u64, delta: f64) -> Result<Self, CircleError> {
        Self::new((1..=q_max).collect(), delta)
    }

    /// Replace δ, rebuilding the endpoint tables.
    pub fn with_delta(&self, delta: f64) -> Result<Self, CircleError> {
        Self::from_parts(
            self.members.clone(),
            self.q_bound,
            delta,
            self.factored.clone(),
        )
    }

    fn from_parts(
        members: Vec<u64>,
        q_bound: u64,
        delta: f64,
        factored: Option<FactoredModuli>,
    ) -> Result<Self, CircleError> {
        // The admissible window is asymptotically Q⁻² ≪ δ ≪ Q⁻¹; concretely
        // we accept three decades below 1/Q² and require δ ≤ 1/Q (and < 1/2
        // so no interval wraps more than once).
        let hi = (1.0 / q_bound as f64).min(0.499);
        let lo = 1e-3 / (q_bound as f64 * q_bound as f64);
        if !(delta > 0.0 && delta >= lo && delta <= hi) {
            return Err(CircleError::DeltaOutOfRange {
                delta,
                lo,
                hi,
                q: q_bound,
            });
        }
        let mass: u64 = members.iter().map(|&q| euler_phi(q)).sum();
        let needed = 4 * mass + 2;
        if needed > MAX_BREAKPOINTS {
            return Err(CircleError::BreakpointOverflow { needed });
        }
        let mut starts = Vec::with_capacity(2 * mass as usize);
        let mut ends = Vec::with_capacity(2 * mass as usize);
        let mut push = |lo: f64, hi: f64| {
            starts.push(lo);
            ends.push(hi);
        };
        for &q in &members {
            for a in 0..q {
                if gcd(a, q) != 1 {
                    continue;
                }
                let center = a as f64 / q as f64;
                let lo = center - delta;
                let hi = center + delta;
                if lo < 0.0 {
                    push(0.0, hi);
                    push(lo + 1.0, 1.0);
                } else if hi > 1.0 {
                    push(lo, 1.0);
                    push(0.0, hi - 1.0);
                } else {
                    push(lo, hi);
                }
            }
        }
        starts.sort_unstable_by(f64::total_cmp);
        ends.sort_unstable_by(f64::total_cmp);
        Ok(ModuliSet {
            members,
            q_bound,
            delta,
            mass,
            factored,
            starts,
            ends,
        })
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn q_bound(&self) -> u64 {
        self.q_bound
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// L = Σ_{q∈𝒬} φ(q), the number of covering intervals.
    pub fn mass(&self) -> u64 {
        self.mass
    }

    pub fn factored(&self) -> Option<&FactoredModuli> {
        self.factored.as_ref()
    }

    /// Number of closed intervals covering x (membership counted mod 1).
    fn coverage(&self, x: f64) -> usize {
        let x = x.rem_euclid(1.0);
        let begun = self.starts.partition_point(|&s| s <= x);
        let finished = self.ends.partition_point(|&e| e < x);
        begun - finished
    }

    /// Ĩ(x): the normalized covering count at x.
    pub fn i_tilde(&self, x: f64) -> f64 {
        self.coverage(x) as f64 / (2.0 * self.delta * self.mass as f64)
    }

    /// Merged breakpoint partition of [0,1]: between consecutive entries the
    /// covering count is constant.
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.starts.len() + self.ends.len() + 2);
        b.push(0.0);
        b.push(1.0);
        b.extend_from_slice(&self.starts);
        b.extend_from_slice(&self.ends);
        b.sort_unstable_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// ∫₀¹ Ĩ(x) dx via the exact piecewise integration. Equals 1 up to
    /// floating-point rounding for every set; exported so suites can report
    /// the mass defect explicitly.
    pub fn kernel_mass(&self) -> f64 {
        let b = self.breakpoints();
        let mut acc = KahanF64::new();
        for w in b.windows(2) {
            let width = w[1] - w[0];
            if width <= 0.0 {
                continue;
            }
            let n = self.coverage(0.5 * (w[0] + w[1]));
            acc.add(width * n as f64);
        }
        acc.value() / (2.0 * self.delta * self.mass as f64)
    }
}

/// Product moduli set {P·q₁·q₂} with qᵢ the primes in [Qᵢ, 2Qᵢ) coprime to
/// P·M, the two dyadic ranges disjoint. δ defaults to its largest admissible
/// value 1/(4PQ₁Q₂); use [`ModuliSet::with_delta`] to narrow it.
pub fn build_product_moduli(
    p: u64,
    big_m: u64,
    q1: u64,
    q2: u64,
) -> Result<ModuliSet, CircleError> {
    assert!(p >= 1 && big_m >= 1, "P and M must be positive");
    assert!(q1 >= 2 && q2 >= 2, "prime range bounds must be at least 2");
    if q1 < 2 * q2 && q2 < 2 * q1 {
        return Err(CircleError::RangesOverlap {
            q1,
            two_q1: 2 * q1,
            q2,
            two_q2: 2 * q2,
        });
    }
    let pick = |lo: u64| -> Result<Vec<u64>, CircleError> {
        let primes: Vec<u64> = primes_in(lo, 2 * lo)
            .into_iter()
            .filter(|&r| (p * big_m) % r != 0)
            .collect();
        if primes.is_empty() {
            Err(CircleError::EmptyRange {
                lo,
                hi: 2 * lo,
                coprime_to: p * big_m,
            })
        } else {
            Ok(primes)
        }
    };
    let q1_primes = pick(q1)?;
    let q2_primes = pick(q2)?;
    let mut members = Vec::with_capacity(q1_primes.len() * q2_primes.len());
    for &r1 in &q1_primes {
        for &r2 in &q2_primes {
            members.push(p * r1 * r2);
        }
    }
    members.sort_unstable();
    members.dedup();
    let q_bound = 4 * p * q1 * q2;
    let delta = 1.0 / q_bound as f64;
    ModuliSet::from_parts(
        members,
        q_bound,
        delta,
        Some(FactoredModuli {
            p,
            q1_primes,
            q2_primes,
        }),
    )
}

// ---------------------------------------------------------------------------
// L² defect of the kernel, two independent routes

/// ∫₀¹ |1 - Ĩ(x)|² dx by exact integration of the step function on its own
/// breakpoint partition. No quadrature error: each cell contributes
/// width·(1 - n/(2δL))² exactly (up to f64 rounding).
pub fn jutila_error_quadrature(set: &ModuliSet) -> f64 {
    let norm = 2.0 * set.delta * set.mass as f64;
    let b = set.breakpoints();
    let mut acc = KahanF64::new();
    for w in b.windows(2) {
        let width = w[1] - w[0];
        if width <= 0.0 {
            continue;
        }
        let n = set.coverage(0.5 * (w[0] + w[1]));
        let defect = 1.0 - n as f64 / norm;
        acc.add(width * defect * defect);
    }
    acc.value()
}

/// Partial Fourier-series evaluation of the same defect, with a rigorous
/// bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalEstimate {
    /// |â(0)-1|² + Σ_{0<|n|≤n_max} |â(n)|² where
    /// â(n) = (1/L)·(Σ_q c_q(n))·sinc(2πnδ).
    pub value: f64,
    /// Rigorous upper bound on Σ_{|n|>n_max} |â(n)|².
    pub tail_bound: f64,
    pub terms: u64,
}

/// Divisor support of n ↦ Σ_{q∈𝒬} c_q(n): the Ramanujan sums collapse to
/// R(n) = Σ_{d|n} d·A_d with A_d = Σ_{q∈𝒬, d|q} μ(q/d). Returns the sorted
/// (d, d·A_d) pairs with nonzero weight.
fn divisor_weights(set: &ModuliSet) -> Vec<(u64, i64)> {
    let mut divisors: Vec<u64> = Vec::new();
    for &q in &set.members {
        let mut d = 1;
        while d * d <= q {
            if q % d == 0 {
                divisors.push(d);
                divisors.push(q / d);
            }
            d += 1;
        }
    }
    divisors.sort_unstable();
    divisors.dedup();
    divisors
        .into_iter()
        .filter_map(|d| {
            let a: i64 = set
                .members
                .iter()
                .filter(|&&q| q % d == 0)
                .map(|&q| moebius(q / d))
                .sum();
            (a != 0).then_some((d, d as i64 * a))
        })
        .collect()
}

/// Fourier-side evaluation of ∫|1-Ĩ|²: Parseval over the kernel's series,
/// truncated at |n| = n_max. The Ramanujan-sum factor R(n) is sieved in
/// blocks, so the cost is n_max·Σ_{d} 1/d plus one sine per term.
pub fn jutila_error_parseval(set: &ModuliSet, n_max: u64) -> ParsevalEstimate {
    assert!(n_max >= 4 * set.q_bound, "series cut too early to bound the tail");
    let l = set.mass as f64;
    let weights = divisor_weights(set);
    let dphase = SplitPhase::from_f64(set.delta);

    // Σ_{n=1}^{n_max} (R(n)/L · sinc(2πnδ))², sieved in blocks.
    const BLOCK: u64 = 1 << 16;
    let mut series = KahanF64::new();
    let mut block = vec![0i64; BLOCK as usize];
    let mut start = 1u64;
    while start <= n_max {
        let end = (start + BLOCK - 1).min(n_max);
        block[..(end - start + 1) as usize].fill(0);
        for &(d, da) in &weights {
            let mut n = start.div_ceil(d) * d;
            while n <= end {
                block[(n - start) as usize] += da;
                n += d;
            }
        }
        for n in start..=end {
            let r = block[(n - start) as usize];
            if r == 0 {
                continue;
            }
            // sin(2πnδ) with the angle reduced exactly mod 1 turn.
            let s = (TAU * dphase.phase_turns(n as f64)).sin();
            let term = r as f64 / l * s / (TAU * n as f64 * set.delta);
            series.add(term * term);
        }
        start = end + 1;
    }

    // Tail: |â(n)| ≤ |R(n)|/(2πnδL) and R(n)² ≤ Σ_{d,e}|dA_d||eA_e|·1[lcm|n],
    // so the tail is at most (2/(2πδL)²)·Σ_{d,e}|dA_d||eA_e|·T(lcm) with
    // T(l) = Σ_{n>n_max, l|n} 1/n² ≤ (1/l²)·min(π²/6, 1/⌊n_max/l⌋).
    let mut tail = 0.0f64;
    for &(d, da) in &weights {
        for &(e, ea) in &weights {
            let l_de = d / gcd(d, e) * e;
            let k = n_max / l_de;
            let t = if k == 0 {
                std::f64::consts::PI * std::f64::consts::PI / 6.0
            } else {
                1.0 / k as f64
            } / (l_de as f64 * l_de as f64);
            tail += (da.unsigned_abs() * ea.unsigned_abs()) as f64 * t;
        }
    }
    let tail_bound = 2.0 * tail / (TAU * set.delta * l).powi(2);

    // â(0) = mass/L = 1 exactly; the defect term is kept for completeness.
    let a0_defect = set.mass as f64 / l - 1.0;
    ParsevalEstimate {
        value: a0_defect * a0_defect + 2.0 * series.value(),
        tail_bound,
        terms: n_max,
    }
}

/// Reference magnitude for the L² defect:
/// `JUTILA_BOUND_COEFF · Q^(2+FROZEN_EPSILON) / (δ L²)`.
pub fn jutila_error_bound(set: &ModuliSet) -> f64 {
    crate::calib::JUTILA_BOUND_COEFF
        * (set.q_bound as f64).powf(2.0 + crate::calib::FROZEN_EPSILON)
        / (set.delta * (set.mass as f64).powi(2))
}

// ---------------------------------------------------------------------------
// S(N) versus the dualized S̃(N)

/// S(N) = Σ_n λ(n) χ(n) n^{-it} h(n/N): the smoothed sum evaluated exactly.
pub fn s_direct(
    src: &CoefficientSource,
    chi: &DirichletCharacter,
    t: f64,
    h: &SmoothWindow,
) -> Result<Complex64, FormError> {
    let n_scale = h.scale();
    let (a, b) = h.support();
    let lo = (a * n_scale).ceil().max(1.0) as u64;
    let hi = (b * n_scale).floor() as u64;
    let mut acc = Kahan::new();
    for n in lo..=hi {
        let w = h.eval(n as f64 / n_scale);
        if w == 0.0 {
            continue;
        }
        let lam = src.lambda(n)?;
        let phase = Complex64::cis(-t * (n as f64).ln());
        acc.add(lam * chi.eval(n as i64) * phase * w);
    }
    Ok(acc.value())
}

/// The weight Ĩ attaches to an (m,n) pair at distance d = m-n:
/// (1/L)·Σ_q c_q(d)·sinc(2πδd). Equals 1 at d = 0, so the diagonal of the
/// dualized sum reproduces S(N) exactly.
pub fn jutila_pair_weight(set: &ModuliSet, d: i64) -> f64 {
    let r: i64 = set.members.iter().map(|&q| ramanujan_sum(q, d)).sum();
    let sinc = if d == 0 {
        1.0
    } else {
        let z = TAU * set.delta * d as f64;
        z.sin() / z
    };
    r as f64 / set.mass as f64 * sinc
}

/// S̃(N): the double sum Σ_{m,n} λ(m)h(m/N) · χ(n)n^{-it}h*(n/N) · w(m-n)
/// with w the pair weight above. Requires δ = 1/N (the choice that makes
/// the kernel's bandwidth match the sum's length) and h* ≡ 1 on supp h.
pub fn s_tilde(
    src: &CoefficientSource,
    chi: &DirichletCharacter,
    t: f64,
    h: &SmoothWindow,
    h_star: &SmoothWindow,
    set: &ModuliSet,
) -> Result<Complex64, FormError> {
    let n_scale = h.scale();
    assert!(
        (h_star.scale() - n_scale).abs() < 1e-9 * n_scale,
        "both windows must share the dilation scale"
    );
    assert!(
        (set.delta * n_scale - 1.0).abs() < 1e-9,
        "the kernel half-width must be 1/N"
    );
    let (a, b) = h.support();
    let m_lo = (a * n_scale).ceil().max(1.0) as u64;
    let m_hi = (b * n_scale).floor() as u64;
    let (a2, b2) = h_star.support();
    let n_lo = (a2 * n_scale).ceil().max(1.0) as u64;
    let n_hi = (b2 * n_scale).floor() as u64;

    let mut lam_side = Vec::with_capacity((m_hi - m_lo + 1) as usize);
    for m in m_lo..=m_hi {
        let w = h.eval(m as f64 / n_scale);
        if w != 0.0 {
            lam_side.push((m, src.lambda(m)? * w));
        }
    }
    let chi_side: Vec<(u64, Complex64)> = (n_lo..=n_hi)
        .filter_map(|n| {
            let w = h_star.eval(n as f64 / n_scale);
            (w != 0.0).then(|| {
                let phase = Complex64::cis(-t * (n as f64).ln());
                (n, chi.eval(n as i64) * phase * w)
            })
        })
        .collect();

    // Pair weights depend only on |m-n| ≤ n_hi - m_lo (c_q and sinc are even).
    let d_max = (n_hi.max(m_hi) - m_lo.min(n_lo)) as i64;
    let weights: Vec<f64> = (0..=d_max)
        .map(|d| jutila_pair_weight(set, d))
        .collect();

    let mut acc = Kahan::new();
    for &(m, vm) in &lam_side {
        for &(n, un) in &chi_side {
            let d = (m as i64 - n as i64).unsigned_abs() as usize;
            let w = weights[d];
            if w != 0.0 {
                acc.add(vm * un * w);
            }
        }
    }
    Ok(acc.value())
}

/// Reference magnitude for |S - S̃|:
/// `CIRCLE_COMPARE_COEFF · N^(1.5+FROZEN_EPSILON) / Q`.
pub fn circle_compare_bound(n_scale: f64, q_bound: u64) -> f64 {
    crate::calib::CIRCLE_COMPARE_COEFF * n_scale.powf(1.5 + crate::calib::FROZEN_EPSILON)
        / q_bound as f64
}
