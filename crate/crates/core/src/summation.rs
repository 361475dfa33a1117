//! Two-route identity checks for twisted coefficient sums.
//!
//! Every public function here evaluates both sides of an exact summation
//! identity by *independent* numerical routes — a finite arithmetic sum on
//! one side, a dual expansion through oscillatory integral transforms on the
//! other — and reports the discrepancy together with an honest bound for the
//! mass dropped by truncating the dual side. Nothing is tuned to agree: if
//! the formulas, the character arithmetic, or the transforms are wrong, the
//! two routes diverge.
//!
//! Dual-side series are extended adaptively in blocks until the terms fall
//! below a noise floor; the reported `truncation_bound` is sized so that
//! extending the range further moves the value by less than the bound (the
//! test suite checks exactly that).

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::arith::{gcd, is_prime, mod_inverse, ramanujan_sum, unit_phase};
use crate::bessel::{
    h_sharp_transform, h_star_integral, voronoi_weight, BesselError, SmoothWindow,
    VoronoiKernelSpec,
};
use crate::characters::{CharacterError, DirichletCharacter};
use crate::circle::ModuliSet;
use crate::forms::{CoefficientSource, FormError, FormKind};
use crate::quad::{self, cis_turns, Kahan, KahanF64, QuadError, SplitPhase};

/// Noise floor for the |H*| stopping rule: the transforms are integrated to
/// an absolute tolerance of 1e-14, so once terms sit at 1e-13 they are
/// indistinguishable from quadrature noise and carry no more information.
const H_STAR_FLOOR: f64 = 1e-13;

/// Consecutive sub-floor terms required before a one-sided series stops.
const SIDE_RUN: usize = 3;

/// Block length for the dual Voronoi series stopping rule.
const V_BLOCK: u64 = 8;

#[derive(Debug, thiserror::Error)]
pub enum SummationError {
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Character(#[from] CharacterError),
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] QuadError),
    #[error("modulus {q} shares a factor with the character modulus {modulus}")]
    IncompatibleModuli { q: u64, modulus: u64 },
    #[error("twist numerator {a} is not coprime to the modulus {q}")]
    NotCoprime { a: i64, q: u64 },
}

/// Outcome of one two-route evaluation.
///
/// `rel_error` is |lhs − rhs| / max(|lhs|, |rhs|, 1e-30). `truncation_bound`
/// is the dropped dual-side tail mass, *normalized the same way*, so the
/// natural acceptance test is `rel_error <= tol + truncation_bound`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub truncation_bound: f64,
    pub rel_error: f64,
}

impl IdentityCheck {
    fn from_sides(lhs: Complex64, rhs: Complex64, tail_abs: f64) -> Self {
        let norm = lhs.norm().max(rhs.norm()).max(1e-30);
        IdentityCheck {
            lhs,
            rhs,
            truncation_bound: tail_abs / norm,
            rel_error: (lhs - rhs).norm() / norm,
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.rel_error <= tol + self.truncation_bound
    }
}

// ---------------------------------------------------------------------------
// Voronoi: additively twisted coefficient sum against its modular dual

/// Both sides of the additively twisted identity
///   Σ_n λ(n) e_q(a n) h(n/Y)  =  (1/q) Σ_n λ(n) e_q(-ā n) V(n/q²),
/// for a holomorphic level-1 source. The left side is an exact finite sum;
/// the right side extends adaptively until the weights V die out.
pub fn voronoi_check(
    src: &CoefficientSource,
    a: i64,
    q: u64,
    window: &SmoothWindow,
) -> Result<IdentityCheck, SummationError> {
    let (lhs, rhs, tail) = voronoi_sides(src, a, q, window, 0)?;
    Ok(IdentityCheck::from_sides(lhs, rhs, tail))
}

fn voronoi_sides(
    src: &CoefficientSource,
    a: i64,
    q: u64,
    window: &SmoothWindow,
    extra_blocks: u64,
) -> Result<(Complex64, Complex64, f64), SummationError> {
    assert!(q >= 1, "modulus must be positive");
    let FormKind::Holomorphic { weight } = src.kind() else {
        panic!("voronoi_check needs a holomorphic source");
    };
    assert!(src.level() == 1, "level-1 source required");
    let y_scale = window.scale();
    assert!(
        y_scale * q as f64 <= 1.0e5,
        "scale * modulus out of the supported range"
    );
    let a_red = a.rem_euclid(q as i64) as u64;
    if gcd(a_red, q) != 1 {
        return Err(SummationError::NotCoprime { a, q });
    }

    // Left: exact finite sum over the window support.
    let (lo, hi) = window.support();
    let mut lhs = Kahan::new();
    let n_lo = (y_scale * lo).ceil().max(1.0) as u64;
    let n_hi = (y_scale * hi).floor() as u64;
    for n in n_lo..=n_hi {
        let w = window.eval(n as f64 / y_scale);
        if w == 0.0 {
            continue;
        }
        let ph = ((a_red as u128 * n as u128) % q as u128) as i64;
        lhs.add(src.lambda(n)? * w * unit_phase(ph, q));
    }

    // Right: dual sum with adaptive block extension.
    let spec = VoronoiKernelSpec::holomorphic(weight)?;
    let a_inv = mod_inverse(a_red as i64, q).expect("coprime twist has an inverse");
    let qq = (q * q) as f64;
    // Kernel-argument ceiling: past 4π√(Y n)/q ≈ 2500 the oscillatory
    // integrals buy nothing but rounding noise.
    let n_cap = ((2500.0 / (2.0 * TAU)).powi(2) * qq / y_scale).floor() as u64;
    // The weights are integrated to 1e-12 before their 2πN prefactor, so
    // their rounding floor is ~1e-11·Y; stopping below that would chase noise.
    let floor = 1e-10 * y_scale;
    let mut rhs = Kahan::new();
    let mut n = 1u64;
    let mut quiet_blocks = 0u64;
    let mut block_masses = [0.0f64; 2];
    let mut bonus = extra_blocks;
    loop {
        let mut block_max = 0.0f64;
        let mut block_sum = KahanF64::new();
        for n_at in n..n + V_BLOCK {
            let v = voronoi_weight(&spec, window, 0.0, n_at as f64 / qq)?;
            let term = src.lambda(n_at)? * v;
            let ph = ((a_inv as u128 * n_at as u128) % q as u128) as i64;
            rhs.add(term * unit_phase(-ph, q));
            block_max = block_max.max(term.norm());
            block_sum.add(term.norm());
        }
        n += V_BLOCK;
        block_masses = [block_masses[1], block_sum.value()];
        if block_max < floor {
            quiet_blocks += 1;
        } else {
            quiet_blocks = 0;
        }
        if quiet_blocks >= 2 {
            if bonus == 0 {
                break;
            }
            bonus -= 1;
        }
        if n > n_cap {
            // Kernel ceiling reached without decay: declare a fat tail.
            let tail = (block_masses[0] + block_masses[1] + 1.0) * 4.0 / q as f64;
            return Ok((lhs.value(), rhs.value() / q as f64, tail));
        }
    }
    let tail =
        (block_masses[0] + block_masses[1] + 2.0 * V_BLOCK as f64 * floor) * 2.0 / q as f64;
    Ok((lhs.value(), rhs.value() / q as f64, tail))
}

// ---------------------------------------------------------------------------
// Twisted Poisson: multiplicative character against additive twist

/// Both sides of the completed character sum identity
///   Σ_m χ(m) m^{-it} e_q(-a m) e(-x m) h*(m/N)
///     = N^{1-it} (ε_χ/√M) χ(q) Σ_{m ≡ aM (mod q)} χ̄(m) H*_x(m; q),
/// for primitive χ mod M with (M, q) = 1 and (a, q) = 1. The right side runs
/// over the full residue class in both directions until the transforms sink
/// below the quadrature noise floor.
pub fn poisson_twist_check(
    chi: &DirichletCharacter,
    q: u64,
    a: i64,
    t: f64,
    x: f64,
    window: &SmoothWindow,
) -> Result<IdentityCheck, SummationError> {
    let (lhs, rhs, tail) = poisson_sides(chi, q, a, t, x, window, 0)?;
    Ok(IdentityCheck::from_sides(lhs, rhs, tail))
}

fn poisson_sides(
    chi: &DirichletCharacter,
    q: u64,
    a: i64,
    t: f64,
    x: f64,
    window: &SmoothWindow,
    extra_terms: usize,
) -> Result<(Complex64, Complex64, f64), SummationError> {
    assert!(q >= 1, "modulus must be positive");
    let m_big = chi.modulus();
    if gcd(m_big, q) != 1 {
        return Err(SummationError::IncompatibleModuli { q, modulus: m_big });
    }
    let a_red = a.rem_euclid(q as i64) as u64;
    if gcd(a_red, q) != 1 {
        return Err(SummationError::NotCoprime { a, q });
    }
    assert!(m_big * q <= 10_000, "character and twist moduli too large");
    let n_scale = window.scale();
    assert!(n_scale <= 1.0e5, "window scale out of the supported range");
    let eps = chi.epsilon_sign()?;

    // Left: exact finite sum over the window support.
    let (lo, hi) = window.support();
    let x_split = SplitPhase::from_f64(x);
    let mut lhs = Kahan::new();
    for m in (n_scale * lo).ceil().max(1.0) as u64..=(n_scale * hi).floor() as u64 {
        let w = window.eval(m as f64 / n_scale);
        if w == 0.0 {
            continue;
        }
        let cv = chi.eval(m as i64);
        if cv == Complex64::new(0.0, 0.0) {
            continue;
        }
        let rat = ((a_red as u128 * m as u128) % q as u128) as f64 / q as f64;
        let turns = -rat - x_split.phase_turns(m as f64) - t * (m as f64).ln() / TAU;
        lhs.add(cv * w * cis_turns(turns));
    }

    // Right: both arms of the residue class m ≡ a·M (mod q).
    let chib = chi.conjugate();
    let r = ((a_red as u128 * (m_big % q) as u128) % q as u128) as i64;
    let plus = h_star_run(window, &chib, 1, q, m_big, t, x, r, q as i64, extra_terms)?;
    let minus = h_star_run(
        window,
        &chib,
        1,
        q,
        m_big,
        t,
        x,
        r - q as i64,
        -(q as i64),
        extra_terms,
    )?;
    let pref = Complex64::from_polar(n_scale, -t * n_scale.ln()) * eps
        / (m_big as f64).sqrt()
        * chi.eval(q as i64);
    let mut rhs = Kahan::new();
    for (_, term) in plus.terms.iter().chain(minus.terms.iter()) {
        rhs.add(*term);
    }
    let tail = pref.norm() * (plus.tail_abs + minus.tail_abs);
    Ok((lhs.value(), pref * rhs.value(), tail))
}

/// One arm of a twisted H* series: terms χ̄(m)·H*_x(m; q) for
/// m = start, start+step, …, skipping m with gcd(m, skip_mod) > 1, stopping
/// after [`SIDE_RUN`] consecutive transforms below the noise floor.
struct HStarRun {
    terms: Vec<(i64, Complex64)>,
    tail_abs: f64,
}

#[allow(clippy::too_many_arguments)]
fn h_star_run(
    window: &SmoothWindow,
    chib: &DirichletCharacter,
    skip_mod: u64,
    q: u64,
    m_big: u64,
    t: f64,
    x: f64,
    start: i64,
    step: i64,
    extra_terms: usize,
) -> Result<HStarRun, SummationError> {
    let mut terms = Vec::new();
    let mut small_run = 0usize;
    let mut small_mass = 0.0f64;
    let mut bonus = extra_terms;
    let mut m = start;
    for iter in 0..40_000u32 {
        if iter == 39_999 {
            // Decay never reached the floor: give up with a tail bound that
            // cannot be mistaken for convergence.
            return Ok(HStarRun {
                terms,
                tail_abs: f64::INFINITY,
            });
        }
        if m == 0 && m_big != 1 {
            m += step;
            continue;
        }
        if skip_mod > 1 && gcd(m.unsigned_abs(), skip_mod) != 1 {
            m += step;
            continue;
        }
        let h = h_star_integral(window, m, q, m_big, t, x)?;
        let mag = h.value.norm();
        terms.push((m, chib.eval(m) * h.value));
        if mag < H_STAR_FLOOR {
            small_run += 1;
            small_mass += mag;
            if small_run >= SIDE_RUN {
                if bonus == 0 {
                    break;
                }
                bonus -= 1;
                small_run = SIDE_RUN - 1;
            }
        } else {
            small_run = 0;
            small_mass = 0.0;
        }
        m += step;
    }
    let tail_abs = 2.0 * (small_mass + SIDE_RUN as f64 * H_STAR_FLOOR) + 64.0 * 1e-14;
    Ok(HStarRun { terms, tail_abs })
}

// ---------------------------------------------------------------------------
// Dual sum: Farey-averaged product sums and their full dual expansion

/// Direct route: the Farey average
///   (1/L) Σ_{q ∈ 𝒬} Σ*_{a mod q} A(a/q + x) · B(a/q + x)
/// with A(θ) = Σ_m χ(m) m^{-it} h*(m/N) e(-θm) and
/// B(θ) = Σ_n λ(n) h(n/N) e(θn), both exact finite sums. This is the
/// reference value the dual expansion must reproduce.
pub fn direct_sum_eval(
    src: &CoefficientSource,
    chi: &DirichletCharacter,
    set: &ModuliSet,
    t: f64,
    x: f64,
    n_scale: f64,
) -> Result<Complex64, SummationError> {
    let h = SmoothWindow::bump(n_scale);
    let hs = SmoothWindow::plateau(n_scale);
    let x_split = SplitPhase::from_f64(x);
    let (hs_lo, hs_hi) = hs.support();
    let (h_lo, h_hi) = h.support();
    let mut total = Kahan::new();
    for &q in set.members() {
        for a in 0..q {
            if gcd(a, q) != 1 {
                continue;
            }
            let mut a_sum = Kahan::new();
            for m in (n_scale * hs_lo).ceil().max(1.0) as u64..=(n_scale * hs_hi).floor() as u64 {
                let w = hs.eval(m as f64 / n_scale);
                if w == 0.0 {
                    continue;
                }
                let cv = chi.eval(m as i64);
                if cv == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rat = ((a as u128 * m as u128) % q as u128) as f64 / q as f64;
                let turns = -rat - x_split.phase_turns(m as f64) - t * (m as f64).ln() / TAU;
                a_sum.add(cv * w * cis_turns(turns));
            }
            let mut b_sum = Kahan::new();
            for n in (n_scale * h_lo).ceil().max(1.0) as u64..=(n_scale * h_hi).floor() as u64 {
                let w = h.eval(n as f64 / n_scale);
                if w == 0.0 {
                    continue;
                }
                let rat = ((a as u128 * n as u128) % q as u128) as f64 / q as f64;
                let turns = rat + x_split.phase_turns(n as f64);
                b_sum.add(src.lambda(n)? * w * cis_turns(turns));
            }
            total.add(a_sum.value() * b_sum.value());
        }
    }
    Ok(total.value() / set.mass() as f64)
}

/// Dual route: the same average after completing the character sum and the
/// coefficient sum against each modulus,
///   N^{1-it} (ε_χ/√M) (1/L) Σ_{q ∈ 𝒬} (χ(q)/q)
///     Σ_n Σ_{(m,q)=1} λ(n) χ̄(m) e_q(-M m̄ n) H*_x(m; q) V_x(n/q²).
/// Requires primitive χ whose modulus is coprime to every member of 𝒬.
pub fn dual_sum_eval(
    src: &CoefficientSource,
    chi: &DirichletCharacter,
    set: &ModuliSet,
    t: f64,
    x: f64,
    n_scale: f64,
) -> Result<Complex64, SummationError> {
    dual_sum_parts(src, chi, set, t, x, n_scale).map(|p| p.0)
}

/// Both routes packaged as an [`IdentityCheck`].
pub fn dual_sum_check(
    src: &CoefficientSource,
    chi: &DirichletCharacter,
    set: &ModuliSet,
    t: f64,
    x: f64,
    n_scale: f64,
) -> Result<IdentityCheck, SummationError> {
    let lhs = direct_sum_eval(src, chi, set, t, x, n_scale)?;
    let (rhs, tail) = dual_sum_parts(src, chi, set, t, x, n_scale)?;
    Ok(IdentityCheck::from_sides(lhs, rhs, tail))
}

fn dual_sum_parts(
    src: &CoefficientSource,
    chi: &DirichletCharacter,
    set: &ModuliSet,
    t: f64,
    x: f64,
    n_scale: f64,
) -> Result<(Complex64, f64), SummationError> {
    let FormKind::Holomorphic { weight } = src.kind() else {
        panic!("dual_sum_eval needs a holomorphic source");
    };
    assert!(src.level() == 1, "level-1 source required");
    let m_big = chi.modulus();
    for &q in set.members() {
        if gcd(q, m_big) != 1 {
            return Err(SummationError::IncompatibleModuli { q, modulus: m_big });
        }
    }
    let eps = chi.epsilon_sign()?;
    let chib = chi.conjugate();
    let h = SmoothWindow::bump(n_scale);
    let hs = SmoothWindow::plateau(n_scale);
    let spec = VoronoiKernelSpec::holomorphic(weight)?;
    // Same noise-floor reasoning as the twisted-sum check: the weights carry
    // a 2πN prefactor over a 1e-12 quadrature tolerance.
    let v_floor = 1e-10 * n_scale;

    let mut total = Kahan::new();
    let mut tail_sum = 0.0f64;
    for &q in set.members() {
        // Character side: χ̄(m) H*_x(m; q) over all m coprime to q.
        let plus = h_star_run(&hs, &chib, q, q, m_big, t, x, 1, 1, 0)?;
        let minus = h_star_run(&hs, &chib, q, q, m_big, t, x, -1, -1, 0)?;
        let mut m_terms: Vec<(i64, Complex64)> = Vec::new();
        if q == 1 && m_big == 1 {
            let h0 = h_star_integral(&hs, 0, 1, 1, t, x)?;
            m_terms.push((0, h0.value));
        }
        m_terms.extend(plus.terms.iter().chain(minus.terms.iter()).copied());
        let m_tail = plus.tail_abs + minus.tail_abs;
        let m_mass: f64 = m_terms.iter().map(|(_, v)| v.norm()).sum();

        // Coefficient side: λ(n) V_x(n/q²), bucketed by n mod q since the
        // coupling phase below only sees the residue.
        let qq = (q * q) as f64;
        let mut buckets = vec![Kahan::new(); q as usize];
        let mut n_mass = KahanF64::new();
        let mut n = 1u64;
        let mut quiet = 0u32;
        let mut block_masses = [0.0f64; 2];
        loop {
            let mut block_max = 0.0f64;
            let mut block_sum = KahanF64::new();
            for n_at in n..n + V_BLOCK {
                let v = voronoi_weight(&spec, &h, x, n_at as f64 / qq)?;
                let term = src.lambda(n_at)? * v;
                buckets[(n_at % q) as usize].add(term);
                block_max = block_max.max(term.norm());
                block_sum.add(term.norm());
                n_mass.add(term.norm());
            }
            n += V_BLOCK;
            block_masses = [block_masses[1], block_sum.value()];
            if block_max < v_floor {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        let n_tail = (block_masses[0] + block_masses[1] + 2.0 * V_BLOCK as f64 * v_floor) * 2.0;

        // Couple the two sides through the exact rational phase e_q(-M m̄ n).
        let mut inner = Kahan::new();
        for &(m, cm) in &m_terms {
            let m_inv = if q == 1 {
                0
            } else {
                mod_inverse(m, q).expect("m is coprime to q")
            };
            let base = ((m_big % q) as u128 * m_inv as u128) % q.max(1) as u128;
            for (r, bucket) in buckets.iter().enumerate() {
                let ph = ((base * r as u128) % q.max(1) as u128) as i64;
                inner.add(cm * bucket.value() * unit_phase(-ph, q));
            }
        }
        total.add(chi.eval(q as i64) * inner.value() / q as f64);
        tail_sum += (m_tail * (n_mass.value() + n_tail) + n_tail * m_mass) / q as f64;
    }
    let pref = Complex64::from_polar(n_scale, -t * n_scale.ln()) * eps / (m_big as f64).sqrt();
    let l = set.mass() as f64;
    Ok((pref * total.value() / l, pref.norm() * tail_sum / l))
}

// ---------------------------------------------------------------------------
// Bilinear block: paired transforms against a Kloosterman expansion

/// Both routes for the paired-transform bilinear block. Direct:
///   Σ_{(m, q₁q₁′q₂)=1} e_{q₁q₂}(s·M m̄ n) e_{q₁′q₂}(-s·M m̄ n′)
///     · H♯_x(m; q₁q₂) conj(H♯_x(m; q₁′q₂)) · W(m/X)/m,
/// a short exact sum over |m| ≤ 2X. Dual: Poisson in m turns the twist pair
/// into Kloosterman sums at the joint modulus c = q₁q₁′q₂,
///   (1/c) Σ_k S(-s·M(q₁n′ - q₁′n), k; c) · ℐ(k),
///   ℐ(k) = ∫ W(u)/u · H♯_x(uX; q₁q₂) conj(H♯_x(uX; q₁′q₂)) e(-kXu/c) du.
/// The Kloosterman values come from prime-power factor tables, and the
/// integrals reuse one sampled grid across all k. `sign` is s = ±1;
/// `h_star` is the plateau window (scale N) inside the transforms; `w` is
/// the flat-top weight on m/X.
#[allow(clippy::too_many_arguments)]
pub fn bilinear_t_check(
    modulus: u64,
    q1: u64,
    q1p: u64,
    q2: u64,
    n: u64,
    np: u64,
    sign: i8,
    t: f64,
    x: f64,
    big_x: f64,
    w: &SmoothWindow,
    h_star: &SmoothWindow,
) -> Result<IdentityCheck, SummationError> {
    assert!(sign == 1 || sign == -1, "sign must be ±1");
    assert!(
        is_prime(q1) && is_prime(q1p) && is_prime(q2),
        "q1, q1', q2 must be prime"
    );
    assert!(q2 != q1 && q2 != q1p, "q2 must differ from q1 and q1'");
    assert!(n >= 1 && np >= 1 && big_x > 0.0);
    let c = q1 * q1p * q2;
    if gcd(c, modulus) != 1 {
        return Err(SummationError::IncompatibleModuli {
            q: c,
            modulus,
        });
    }
    let am = q1 * q2;
    let bm = q1p * q2;
    let s = sign as i64;
    let n_scale = h_star.scale();

    // Direct side: |m| ≤ 2X, coprime to c.
    let mut lhs = Kahan::new();
    let mut lhs_err = 0.0f64;
    let m_hi = (2.0 * big_x).floor() as i64;
    for mm in 1..=m_hi {
        for m in [mm, -mm] {
            if gcd(m.unsigned_abs(), c) != 1 {
                continue;
            }
            let wv = w.eval(m as f64 / big_x);
            if wv == 0.0 {
                continue;
            }
            let ha = h_sharp_transform(h_star, m as f64, am, modulus, t, x)?;
            let hb = h_sharp_transform(h_star, m as f64, bm, modulus, t, x)?;
            let inv_a = mod_inverse(m, am).expect("coprime") as u128;
            let inv_b = mod_inverse(m, bm).expect("coprime") as u128;
            let ph_a = ((modulus as u128 % am as u128) * inv_a % am as u128
                * (n as u128 % am as u128)
                % am as u128) as i64;
            let ph_b = ((modulus as u128 % bm as u128) * inv_b % bm as u128
                * (np as u128 % bm as u128)
                % bm as u128) as i64;
            let phase = unit_phase(s * ph_a, am) * unit_phase(-s * ph_b, bm);
            let scale = wv / m as f64;
            lhs.add(phase * ha.value * hb.value.conj() * scale);
            lhs_err += (ha.abs_error * hb.value.norm() + hb.abs_error * ha.value.norm())
                * scale.abs();
        }
    }
    let lhs = lhs.value();

    // Dual side: Kloosterman factor tables at the joint modulus.
    let klo_a = -s * modulus as i64 * (q1 as i64 * np as i64 - q1p as i64 * n as i64);
    let prime_powers: Vec<u64> = if q1 == q1p {
        vec![q1 * q1, q2]
    } else {
        vec![q1, q1p, q2]
    };
    let kl = KloostermanTables::build(klo_a, &prime_powers, c);

    // ℐ grid sizing: the worst u-frequency is the k-phase 4Xk/c plus the
    // (partially cancelling) transform pair; the slope-difference estimate
    // below is only a starting point — grid adequacy is verified against a
    // doubled grid and refined if the two disagree.
    let slope_pair = 2.25 * 4.0 * (big_x * n_scale / modulus as f64)
        * (1.0 / am as f64 - 1.0 / bm as f64).abs();
    let mut k_cap: i64 =
        (2.25 * (n_scale / modulus as f64) * q1.abs_diff(q1p).max(1) as f64 * q2 as f64 * 2.0)
            .ceil() as i64
            + 96;
    let panels_for = |k: i64| -> usize {
        let cyc = slope_pair + 8.0 + 4.0 * big_x * k as f64 / c as f64;
        let p = 16 + (6.0 * cyc).ceil() as usize;
        p + (p & 1) // even, so u = 0 is a panel edge
    };
    const K_MAX: i64 = 1 << 15;
    const PANEL_MAX: usize = 4096;

    let eval_i = |nodes: &[(f64, f64)], g: &[Complex64], k: i64| -> Complex64 {
        let freq = k as f64 * big_x / c as f64;
        let mut acc = Kahan::new();
        for (&(u, wt), &gv) in nodes.iter().zip(g.iter()) {
            if gv != Complex64::new(0.0, 0.0) {
                acc.add(gv * cis_turns(-freq * u) * wt);
            }
        }
        acc.value()
    };

    let mut panels = panels_for(k_cap).min(PANEL_MAX);
    let (rhs, tail_abs) = loop {
        let (nodes1, g1, gerr1) = bilinear_grid(w, h_star, big_x, am, bm, modulus, t, x, panels)?;
        let (nodes2, g2, gerr2) =
            bilinear_grid(w, h_star, big_x, am, bm, modulus, t, x, 2 * panels)?;
        let mut rhs1 = Kahan::new();
        let mut rhs2 = Kahan::new();
        let mut band = KahanF64::new();
        let band_lo = k_cap / 2;
        for k in -k_cap..=k_cap {
            let s_val = kl.eval(k);
            if s_val == Complex64::new(0.0, 0.0) {
                continue;
            }
            let i2 = eval_i(&nodes2, &g2, k);
            rhs1.add(s_val * eval_i(&nodes1, &g1, k));
            rhs2.add(s_val * i2);
            if k.abs() > band_lo {
                band.add((s_val * i2).norm());
            }
        }
        let rhs1 = rhs1.value() / c as f64;
        let rhs2 = rhs2.value() / c as f64;
        let band = band.value() / c as f64;
        let grid_err = (rhs1 - rhs2).norm();
        let scale = lhs.norm().max(rhs2.norm()).max(1e-12);
        let band_tol = 1e-8 * scale;
        if grid_err > band_tol && panels < PANEL_MAX {
            panels = (2 * panels).min(PANEL_MAX);
            continue;
        }
        if band > band_tol && k_cap < K_MAX {
            k_cap *= 2;
            panels = panels.max(panels_for(k_cap)).min(PANEL_MAX);
            continue;
        }
        let gq = gerr1.max(gerr2) * kl.magnitude_bound() * (2 * k_cap + 1) as f64 / c as f64;
        break (rhs2, 4.0 * band + 2.0 * grid_err + lhs_err + gq);
    };

    Ok(IdentityCheck::from_sides(lhs, rhs, tail_abs))
}

/// Sample G(u) = W(u)/u · H♯_x(uX; am) conj(H♯_x(uX; bm)) on a composite
/// Gauss-Legendre grid over the weight support [-2, 2]. Returns nodes,
/// values, and the weight-folded quadrature error of the transform pairs.
#[allow(clippy::too_many_arguments)]
fn bilinear_grid(
    w: &SmoothWindow,
    h_star: &SmoothWindow,
    big_x: f64,
    am: u64,
    bm: u64,
    modulus: u64,
    t: f64,
    x: f64,
    panels: usize,
) -> Result<(Vec<(f64, f64)>, Vec<Complex64>, f64), SummationError> {
    let nodes = quad::gl_grid(-2.0, 2.0, panels);
    let mut g = Vec::with_capacity(nodes.len());
    let mut err = 0.0f64;
    for &(u, wt) in &nodes {
        let wv = w.eval(u);
        if wv == 0.0 || u.abs() < 1e-9 {
            g.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let ha = h_sharp_transform(h_star, u * big_x, am, modulus, t, x)?;
        let hb = h_sharp_transform(h_star, u * big_x, bm, modulus, t, x)?;
        g.push(ha.value * hb.value.conj() * (wv / u));
        err += wt.abs()
            * (ha.abs_error * hb.value.norm() + hb.abs_error * ha.value.norm())
            * (wv / u).abs();
    }
    Ok((nodes, g, err))
}

/// Kloosterman sums S(a, k; c) for fixed a and many k, through twisted
/// multiplicativity: writing c = Π pᵉ and cᵢ = c/pᵉ with inverse c̄ᵢ mod pᵉ,
///   S(a, k; c) = Π S(a c̄ᵢ, k c̄ᵢ; pᵉ),
/// and each local factor is a table lookup: S(1, g; pᵉ) after unit scaling
/// when p ∤ a, S(p, g; p²) when p ∥ a at a squared prime, and a Ramanujan
/// sum when pᵉ | a.
struct KloostermanTables {
    parts: Vec<KloostermanPart>,
}

struct KloostermanPart {
    pe: u64,
    coef: u64,
    table: Vec<Complex64>,
}

impl KloostermanTables {
    fn build(a: i64, prime_powers: &[u64], c: u64) -> Self {
        let parts = prime_powers
            .iter()
            .map(|&pe| {
                let p = smallest_prime_factor(pe);
                let co = c / pe;
                let co_inv = mod_inverse(co as i64, pe).expect("factor moduli are coprime");
                let a_eff =
                    ((a as i128 * co_inv as i128).rem_euclid(pe as i128)) as u64;
                if a_eff == 0 {
                    // pᵉ | a: the factor is the Ramanujan sum c_{pᵉ}(k).
                    let table = (0..pe)
                        .map(|g| Complex64::new(ramanujan_sum(pe, g as i64) as f64, 0.0))
                        .collect();
                    KloostermanPart { pe, coef: 1, table }
                } else if a_eff % p != 0 {
                    // Unit a: S(a_eff, k c̄; pᵉ) = S(1, a_eff c̄ k; pᵉ).
                    let coef = ((a_eff as u128 * co_inv as u128) % pe as u128) as u64;
                    KloostermanPart {
                        pe,
                        coef,
                        table: kloosterman_row(1, pe),
                    }
                } else {
                    // p ∥ a at pᵉ = p²: scale the unit part of a away,
                    // S(p α, β; p²) = S(p, α β; p²).
                    let alpha = a_eff / p;
                    let coef = ((alpha as u128 * co_inv as u128) % pe as u128) as u64;
                    KloostermanPart {
                        pe,
                        coef,
                        table: kloosterman_row(p, pe),
                    }
                }
            })
            .collect();
        KloostermanTables { parts }
    }

    fn eval(&self, k: i64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for part in &self.parts {
            let k_red = k.rem_euclid(part.pe as i64) as u128;
            let idx = ((part.coef as u128 * k_red) % part.pe as u128) as usize;
            acc *= part.table[idx];
        }
        acc
    }

    /// Crude uniform bound max_k |S(a, k; c)| = Π max |table|.
    fn magnitude_bound(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| {
                p.table
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0f64, f64::max)
            })
            .product()
    }
}

/// All of S(base, g; pe) for g = 0..pe in one pass: for each unit x the
/// g-dependence is a fixed rotation by e_pe(x̄), so the row costs one
/// exponential per unit plus pe·φ(pe) multiplications.
fn kloosterman_row(base: u64, pe: u64) -> Vec<Complex64> {
    let mut row = vec![Complex64::new(0.0, 0.0); pe as usize];
    for x in 0..pe {
        if gcd(x, pe) != 1 {
            continue;
        }
        let x_inv = mod_inverse(x as i64, pe).expect("unit") as i64;
        let mut cur = unit_phase((base as u128 * x as u128 % pe as u128) as i64, pe);
        let omega = unit_phase(x_inv, pe);
        for cell in row.iter_mut() {
            *cell += cur;
            cur *= omega;
        }
    }
    row
}

fn smallest_prime_factor(n: u64) -> u64 {
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return d;
        }
        d += 1;
    }
    n
}
