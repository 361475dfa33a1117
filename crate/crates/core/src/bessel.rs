//! Bessel kernels and the two oscillatory integral transforms the dual-sum
//! identities are built from: the Voronoi weights V±(y) and the window
//! transforms H*(m;q) / H♯(u;q).
//!
//! Kernel evaluation strategy:
//! - J of integer order: ascending series for u ≤ 10, Miller's backward
//!   recurrence for 10 < u < 120, Hankel asymptotics for u ≥ 120. The naive
//!   split "series below 30, asymptotics above" loses ten digits near the
//!   crossover at order 11, which is why the middle regime exists.
//! - K of imaginary order 2iμ: the real integral representation
//!   K = ∫₀^∞ e^{-u cosh t} cos(2μt) dt, computed with e^{-u} factored out
//!   so the scaled integrand never underflows prematurely.
//! - The combination (Y_{2iμ} + Y_{-2iμ}): two real integral representations
//!   with the cosh(πμ) growth factored analytically (halving the cancellation
//!   exposure), switching to the Hankel form once u clears 4μ²+20.
//!
//! All values are real for real inputs; the useful spectral range at f64
//! precision is |μ| ≲ 5 — beyond that the kernels are exponentially small
//! against an O(cosh²πμ) integrand and the cancellation floor dominates,
//! though evaluation stays finite up to the contractual |μ| ≤ 50.

use crate::quad::{self, cis_turns, QuadError, SplitPhase};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BesselError {
    #[error("kernel argument must be positive, got {u}")]
    DomainError { u: f64 },
    #[error("spectral parameter μ = {mu} outside supported |μ| ≤ 50")]
    SpectralRange { mu: f64 },
    #[error("holomorphic kernel needs integer weight ≥ 12, got {weight}")]
    InvalidWeight { weight: u32 },
    #[error("oscillation phase x = {x} exceeds |x| ≤ {limit}")]
    PhaseOutOfRange { x: f64, limit: f64 },
    #[error("transform frequency must be nonzero")]
    ZeroFrequency,
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

// ---------------------------------------------------------------------------
// smooth windows

/// C∞ ramp: 0 for x ≤ 0, 1 for x ≥ 1, strictly increasing between.
fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Bump supported exactly on [1, 2], peak value 1 at 3/2.
    Bump,
    /// Plateau supported on [3/4, 9/4], identically 1 on [1, 2].
    Plateau,
    /// Even plateau supported on [-2, 2], identically 1 on [-1, 1].
    FlatTop,
}

/// A fixed smooth cutoff together with the dilation scale (N or X) the
/// transforms apply outside the window argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothWindow {
    kind: WindowKind,
    scale: f64,
}

impl SmoothWindow {
    pub fn bump(scale: f64) -> Self {
        assert!(scale > 0.0);
        SmoothWindow { kind: WindowKind::Bump, scale }
    }

    pub fn plateau(scale: f64) -> Self {
        assert!(scale > 0.0);
        SmoothWindow { kind: WindowKind::Plateau, scale }
    }

    pub fn flat_top(scale: f64) -> Self {
        assert!(scale > 0.0);
        SmoothWindow { kind: WindowKind::FlatTop, scale }
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            WindowKind::Bump => (1.0, 2.0),
            WindowKind::Plateau => (0.75, 2.25),
            WindowKind::FlatTop => (-2.0, 2.0),
        }
    }

    /// Evaluate the dimensionless window shape.
    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            WindowKind::Bump => {
                let v = 2.0 * u - 3.0;
                if v.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - v * v)).exp()
                }
            }
            WindowKind::Plateau => {
                if u <= 1.0 {
                    smoothstep((u - 0.75) * 4.0)
                } else {
                    smoothstep((2.25 - u) * 4.0)
                }
            }
            WindowKind::FlatTop => {
                let a = u.abs();
                if a <= 1.0 {
                    1.0
                } else {
                    smoothstep(2.0 - a)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// J of integer order

fn bessel_j_series(nu: u32, u: f64) -> f64 {
    let half = 0.5 * u;
    let x2 = half * half;
    // leading term (u/2)^nu / nu!
    let mut term = 1.0;
    for k in 1..=nu {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut j = 0u32;
    while term.abs() > 1e-20 * sum.abs().max(1e-280) && j < 60 {
        j += 1;
        term *= -x2 / (j as f64 * (j + nu) as f64);
        sum += term;
    }
    sum
}

fn bessel_j_miller(nu: u32, u: f64) -> f64 {
    // Backward recurrence F_{k-1} = (2k/u) F_k - F_{k+1} from well above
    // max(nu, u), normalized by J_0 + 2 J_2 + 2 J_4 + ... = 1.
    let start = ((u + 14.0 * u.cbrt() + 36.0).ceil() as u32).max(nu + 14);
    let mut fkp1 = 0.0f64; // F_{start+1}
    let mut fk = 1e-280f64; // F_{start}
    let mut norm = if start % 2 == 0 { 2.0 * fk } else { 0.0 };
    let mut target = f64::NAN;
    let mut k = start;
    while k > 0 {
        let fkm1 = (2.0 * k as f64 / u) * fk - fkp1;
        fkp1 = fk;
        fk = fkm1;
        k -= 1;
        if k == nu {
            target = fk;
        }
        if k == 0 {
            norm += fk;
        } else if k % 2 == 0 {
            norm += 2.0 * fk;
        }
        if fk.abs() > 1e250 {
            fk *= 1e-250;
            fkp1 *= 1e-250;
            norm *= 1e-250;
            target *= 1e-250;
        }
    }
    target / norm
}

/// Shared tail of the large-argument expansion: P = a₀ - a₂ + a₄ - ... and
/// Q = a₁ - a₃ + a₅ - ..., where a_k carries the factor (4ν² - (2k-1)²)/(8uk).
/// Truncated at the smallest term, as asymptotic series demand.
fn hankel_pq(mu4: f64, u: f64) -> (f64, f64) {
    let (mut p, mut q) = (1.0f64, 0.0f64);
    let mut a = 1.0f64;
    let mut best = f64::INFINITY;
    for k in 1..60u32 {
        let odd = 2.0 * k as f64 - 1.0;
        a *= (mu4 - odd * odd) / (8.0 * u * k as f64);
        if a.abs() >= best {
            break; // asymptotic tail started growing
        }
        best = a.abs();
        let signed = match k % 4 {
            2 | 3 => -a,
            _ => a,
        };
        if k % 2 == 1 {
            q += signed;
        } else {
            p += signed;
        }
        if a.abs() < 1e-18 {
            break;
        }
    }
    (p, q)
}

fn bessel_j_hankel(nu: u32, u: f64) -> f64 {
    let mu4 = 4.0 * (nu as f64) * (nu as f64);
    let chi = u - nu as f64 * FRAC_PI_2 - FRAC_PI_4;
    let (p, q) = hankel_pq(mu4, u);
    (2.0 / (PI * u)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// J_ν(u) for integer ν ≥ 0, u > 0, accurate to ~1e-12 relative through the
/// desk-scale argument range.
pub fn bessel_j(nu: u32, u: f64) -> f64 {
    debug_assert!(u > 0.0);
    if u <= 10.0 {
        bessel_j_series(nu, u)
    } else if u < 120.0 {
        bessel_j_miller(nu, u)
    } else {
        bessel_j_hankel(nu, u)
    }
}

// ---------------------------------------------------------------------------
// K and Y of imaginary order

/// K_{2iμ}(u) = ∫₀^∞ e^{-u cosh t} cos(2μt) dt, real for real μ, u.
pub fn bessel_k_2imu(mu: f64, u: f64) -> Result<f64, BesselError> {
    if u <= 0.0 {
        return Err(BesselError::DomainError { u });
    }
    // e^{-u cosh t} = e^{-u} e^{-2u sinh²(t/2)}; truncate the scaled part
    // at 2u sinh²(T/2) = 46.
    let s = (46.0 / (2.0 * u)).sqrt();
    let t_max = 2.0 * s.asinh();
    let cycles = (mu.abs() * t_max / PI).ceil() as usize;
    let panels = (24 + 6 * cycles).max((2.0 * t_max * u.sqrt()).ceil() as usize);
    let r = quad::integrate(
        |t| {
            let sh = (0.5 * t).sinh();
            Complex64::new((-2.0 * u * sh * sh).exp() * (2.0 * mu * t).cos(), 0.0)
        },
        0.0,
        t_max,
        panels,
        1e-13 * t_max.max(1.0),
    )?;
    Ok((-u).exp() * r.value.re)
}

/// The real combination (Y_{2iμ} + Y_{-2iμ})(u) via integral representations
/// for moderate u and Hankel asymptotics once u > 4μ² + 20.
pub fn bessel_ycomb_2imu(mu: f64, u: f64) -> Result<f64, BesselError> {
    if u <= 0.0 {
        return Err(BesselError::DomainError { u });
    }
    let mu = mu.abs();
    if u >= (4.0 * mu * mu + 20.0).max(40.0) {
        return Ok(ycomb_hankel(mu, u));
    }
    // Oscillatory part over [0, π]: the symmetric rewrite keeps the integrand
    // at e^{πμ} instead of e^{2πμ}, halving the cancellation exposure.
    let panels1 = (16 + (2.0 * u).ceil() as usize + (6.0 * mu).ceil() as usize).max(24);
    let osc = quad::integrate(
        |th| {
            Complex64::new((u * th.sin()).sin() * (2.0 * mu * (th - FRAC_PI_2)).cosh(), 0.0)
        },
        0.0,
        PI,
        panels1,
        1e-13 * (PI * mu).cosh(),
    )?;
    // Monotone part over [0, ∞): e^{-u sinh t} cos(2μt), truncated at
    // u sinh T = 46.
    let t_max = (46.0 / u).asinh();
    let cycles = (mu * t_max / PI).ceil() as usize;
    let panels2 = (32 + 6 * cycles).max((2.0 * t_max * u.sqrt()).ceil() as usize);
    let mono = quad::integrate(
        |t| Complex64::new((-u * t.sinh()).exp() * (2.0 * mu * t).cos(), 0.0),
        0.0,
        t_max,
        panels2,
        1e-13 * t_max.max(1.0),
    )?;
    let ch = (PI * mu).cosh();
    Ok((2.0 / PI) * ch * osc.value.re - (4.0 / PI) * ch * ch * mono.value.re)
}

fn ycomb_hankel(mu: f64, u: f64) -> f64 {
    // Y_ν ~ √(2/πu) [sin χ_ν P + cos χ_ν Q]; summing ν = ±2iμ pairs the
    // hyperbolic parts into 2 cosh(πμ) times a real series with 4ν² = -16μ².
    let mu4 = -16.0 * mu * mu;
    let chi = u - FRAC_PI_4;
    let (p, q) = hankel_pq(mu4, u);
    2.0 * (PI * mu).cosh() * (2.0 / (PI * u)).sqrt() * (chi.sin() * p + chi.cos() * q)
}

// ---------------------------------------------------------------------------
// kernel dispatch

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// J_{k-1}, the same-sign dual kernel of a weight-k holomorphic form.
    HolomorphicJ,
    /// K_{2iμ}, the opposite-sign dual kernel of a Maass form.
    MaassK,
    /// Y_{2iμ} + Y_{-2iμ}, the same-sign dual kernel of a Maass form.
    MaassY,
}

/// Which Bessel kernel a Voronoi weight integrates against, plus its order
/// data (k-1 for holomorphic J, 2μ for the Maass kernels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoronoiKernelSpec {
    kind: KernelKind,
    order_param: f64,
}

impl VoronoiKernelSpec {
    pub fn holomorphic(weight: u32) -> Result<Self, BesselError> {
        if weight < 12 {
            return Err(BesselError::InvalidWeight { weight });
        }
        Ok(VoronoiKernelSpec {
            kind: KernelKind::HolomorphicJ,
            order_param: (weight - 1) as f64,
        })
    }

    pub fn maass_k(mu: f64) -> Result<Self, BesselError> {
        if !mu.is_finite() || mu.abs() > 50.0 {
            return Err(BesselError::SpectralRange { mu });
        }
        Ok(VoronoiKernelSpec { kind: KernelKind::MaassK, order_param: 2.0 * mu })
    }

    pub fn maass_y(mu: f64) -> Result<Self, BesselError> {
        if !mu.is_finite() || mu.abs() > 50.0 {
            return Err(BesselError::SpectralRange { mu });
        }
        Ok(VoronoiKernelSpec { kind: KernelKind::MaassY, order_param: 2.0 * mu })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn order_param(&self) -> f64 {
        self.order_param
    }

    fn mu(&self) -> f64 {
        self.order_param / 2.0
    }

    /// The constant in front of the dual-sum weight integral: 2πi^k for the
    /// holomorphic kernel, 4cosh(πμ) for the K side, -π/cosh(πμ) for Y.
    pub fn prefactor(&self) -> Complex64 {
        match self.kind {
            KernelKind::HolomorphicJ => {
                let k = self.order_param as u32 + 1;
                let i_pow = match k % 4 {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, 1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, -1.0),
                };
                TAU * i_pow
            }
            KernelKind::MaassK => Complex64::new(4.0 * (PI * self.mu()).cosh(), 0.0),
            KernelKind::MaassY => Complex64::new(-PI / (PI * self.mu()).cosh(), 0.0),
        }
    }
}

/// Evaluate the kernel itself at argument u > 0.
pub fn kernel_eval(spec: &VoronoiKernelSpec, u: f64) -> Result<f64, BesselError> {
    if u <= 0.0 {
        return Err(BesselError::DomainError { u });
    }
    match spec.kind {
        KernelKind::HolomorphicJ => Ok(bessel_j(spec.order_param as u32, u)),
        KernelKind::MaassK => bessel_k_2imu(spec.mu(), u),
        KernelKind::MaassY => bessel_ycomb_2imu(spec.mu(), u),
    }
}

// ---------------------------------------------------------------------------
// Voronoi weight

/// V(y) = prefactor · ∫ h(u/N) e(xu) kernel(4π√(uy)) du, the weight attached
/// to the dual coefficient at y = n/q² after summation by the modular
/// relation. `window` carries the bump h and the dilation N; |x| ≤ 1/N.
pub fn voronoi_weight(
    spec: &VoronoiKernelSpec,
    window: &SmoothWindow,
    x: f64,
    y: f64,
) -> Result<Complex64, BesselError> {
    let n_scale = window.scale();
    let limit = 1.0 / n_scale;
    if x.abs() > limit * (1.0 + 1e-12) {
        return Err(BesselError::PhaseOutOfRange { x, limit });
    }
    if y <= 0.0 {
        return Err(BesselError::DomainError { u: y });
    }
    let (a, b) = window.support();
    // kernel phase turns across the support: 2√(N y) (√b - √a); window phase
    // |x| N (b - a).
    let kern_turns = 2.0 * (n_scale * y).sqrt() * (b.sqrt() - a.sqrt());
    let wind_turns = x.abs() * n_scale * (b - a);
    let panels = 16 + (6.0 * (kern_turns + wind_turns)).ceil() as usize;
    let x_phase = SplitPhase::product(x, n_scale);
    let mut kernel_failure: Option<BesselError> = None;
    let r = quad::integrate(
        |w| {
            let kern = match kernel_eval(spec, 2.0 * TAU * (n_scale * w * y).sqrt()) {
                Ok(v) => v,
                Err(e) => {
                    if kernel_failure.is_none() {
                        kernel_failure = Some(e);
                    }
                    0.0
                }
            };
            window.eval(w) * kern * x_phase.cis(w)
        },
        a,
        b,
        panels,
        1e-12,
    );
    if let Some(e) = kernel_failure {
        return Err(e);
    }
    Ok(spec.prefactor() * n_scale * r?.value)
}

// ---------------------------------------------------------------------------
// H* / H♯ transforms

/// The two independently computed forms of the oscillatory window transform.
/// They satisfy h_star = (|m|^{it}/m) (Mq/N)^{1-it} h_sharp; the library
/// computes both from their own integrals so the relation stays a check,
/// not a definition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HStarPair {
    pub h_star: Complex64,
    pub h_sharp: Complex64,
    /// Larger of the two quadrature error estimates (absolute).
    pub quad_error: f64,
}

/// H♯(u;q) = ∫ h*(Mq·y/(uN)) e(-Mq·x·y/u) |y|^{-it} e(-y) dy for real
/// nonzero u. The support is the window support scaled by c = uN/(Mq); for
/// negative u the integration runs over negative y.
pub fn h_sharp_transform(
    window: &SmoothWindow,
    u: f64,
    q: u64,
    modulus: u64,
    t: f64,
    x: f64,
) -> Result<quad::QuadResult, BesselError> {
    if u == 0.0 || !u.is_finite() {
        return Err(BesselError::ZeroFrequency);
    }
    assert!(q >= 1 && modulus >= 1);
    let n_scale = window.scale();
    let limit = 1.0 / n_scale;
    if x.abs() > limit * (1.0 + 1e-12) {
        return Err(BesselError::PhaseOutOfRange { x, limit });
    }
    let mq = (modulus * q) as f64;
    let (a, b) = window.support();
    let c = u * n_scale / mq;
    let (lo, hi) = if c > 0.0 { (a * c, b * c) } else { (b * c, a * c) };
    let small_freq = mq * x / u; // ≤ |x| Mq / |u|, well under a turn per unit
    let unit = SplitPhase::from_f64(-1.0);
    let ln_span = (b / a).ln().abs();
    let cycles = (1.0 + small_freq.abs()) * (hi - lo) + t.abs() * ln_span / TAU;
    let panels = 12 + (6.0 * cycles).ceil() as usize;
    let mut r = quad::integrate(
        |y| {
            let w = window.eval(y / c);
            if w == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut turns = unit.phase_turns(y) - small_freq * y;
            turns -= turns.round();
            turns -= t * y.abs().ln() / TAU;
            w * cis_turns(turns)
        },
        lo,
        hi,
        panels,
        1e-14 * c.abs().max(1.0),
    )?;
    // The transform is oriented from 0.75c to 2.25c; for u < 0 that runs
    // right-to-left, so the machine integral (always left-to-right) flips.
    if c < 0.0 {
        r.value = -r.value;
    }
    Ok(r)
}

/// H*(m;q) = ∫ h*(y) y^{-it} e(-xNy) e_{Mq}(-mNy) dy alone. The rational
/// e_{Mq}(-mNy) phase is reduced through an exact split so thousands of
/// turns cost no precision. m = 0 is allowed here (plain windowed integral,
/// the zero frequency of the dual sum when it survives).
pub fn h_star_integral(
    window: &SmoothWindow,
    m: i64,
    q: u64,
    modulus: u64,
    t: f64,
    x: f64,
) -> Result<quad::QuadResult, BesselError> {
    assert!(q >= 1 && modulus >= 1);
    let n_scale = window.scale();
    let limit = 1.0 / n_scale;
    if x.abs() > limit * (1.0 + 1e-12) {
        return Err(BesselError::PhaseOutOfRange { x, limit });
    }
    let mq = (modulus * q) as f64;
    let (a, b) = window.support();

    let rational = SplitPhase::product(-(m as f64), n_scale).div(mq);
    let drift = SplitPhase::product(-x, n_scale);
    let freq = (m as f64).abs() * n_scale / mq + x.abs() * n_scale;
    let ln_span = (b / a).ln().abs();
    let cycles = freq * (b - a) + t.abs() * ln_span / TAU;
    let panels = 12 + (6.0 * cycles).ceil() as usize;
    Ok(quad::integrate(
        |y| {
            let w = window.eval(y);
            if w == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut turns = rational.phase_turns(y) + drift.phase_turns(y);
            if turns > 0.5 {
                turns -= 1.0;
            } else if turns < -0.5 {
                turns += 1.0;
            }
            turns -= t * y.ln() / TAU;
            w * cis_turns(turns)
        },
        a,
        b,
        panels,
        1e-14,
    )?)
}

/// H*(m;q) together with the independently integrated H♯ form.
pub fn h_star_transform(
    window: &SmoothWindow,
    m: i64,
    q: u64,
    modulus: u64,
    t: f64,
    x: f64,
) -> Result<HStarPair, BesselError> {
    if m == 0 {
        return Err(BesselError::ZeroFrequency);
    }
    let star = h_star_integral(window, m, q, modulus, t, x)?;
    let sharp = h_sharp_transform(window, m as f64, q, modulus, t, x)?;

    Ok(HStarPair {
        h_star: star.value,
        h_sharp: sharp.value,
        quad_error: star.abs_error.max(sharp.abs_error),
    })
}

/// The prefactor linking the two transform forms:
/// H* = (|m|^{it}/m) (Mq/N)^{1-it} H♯.
pub fn h_star_factor(m: i64, q: u64, modulus: u64, t: f64, n_scale: f64) -> Complex64 {
    let m_abs = (m as f64).abs();
    let ratio = (modulus * q) as f64 / n_scale;
    let m_pow = cis_turns(t * m_abs.ln() / TAU) / m as f64;
    let r_pow = (Complex64::new(1.0, -t) * ratio.ln()).exp();
    m_pow * r_pow
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    // ---- windows -----------------------------------------------------------

    #[test]
    fn bump_shape() {
        let h = SmoothWindow::bump(100.0);
        assert_eq!(h.eval(1.0), 0.0);
        assert_eq!(h.eval(2.0), 0.0);
        assert_eq!(h.eval(0.5), 0.0);
        assert!((h.eval(1.5) - 1.0).abs() < 1e-15);
        for d in [0.1, 0.22, 0.4] {
            assert!((h.eval(1.5 - d) - h.eval(1.5 + d)).abs() < 1e-15, "symmetry");
            assert!(h.eval(1.5 - d) > 0.0 && h.eval(1.5 - d) < 1.0);
        }
    }

    #[test]
    fn plateau_shape() {
        let hs = SmoothWindow::plateau(100.0);
        assert_eq!(hs.eval(0.75), 0.0);
        assert_eq!(hs.eval(2.25), 0.0);
        // exactly 1 on the bump's support
        for u in [1.0, 1.25, 1.5, 1.9, 2.0] {
            assert_eq!(hs.eval(u), 1.0, "plateau must be exactly 1 at {u}");
        }
        assert!(hs.eval(0.9) > 0.0 && hs.eval(0.9) < 1.0);
        assert!(hs.eval(2.1) > 0.0 && hs.eval(2.1) < 1.0);
    }

    #[test]
    fn flat_top_shape() {
        let w = SmoothWindow::flat_top(1.0);
        for u in [-1.0, -0.3, 0.0, 0.5, 1.0] {
            assert_eq!(w.eval(u), 1.0);
        }
        assert_eq!(w.eval(2.0), 0.0);
        assert_eq!(w.eval(-2.0), 0.0);
        assert!((w.eval(1.4) - w.eval(-1.4)).abs() < 1e-15, "even");
        assert!(w.eval(1.4) > 0.0 && w.eval(1.4) < 1.0);
    }

    #[test]
    fn plateau_covers_bump_support() {
        let h = SmoothWindow::bump(1.0);
        let hs = SmoothWindow::plateau(1.0);
        for i in 0..=100 {
            let u = 1.0 + i as f64 / 100.0;
            if h.eval(u) > 0.0 {
                assert_eq!(hs.eval(u), 1.0);
            }
        }
    }

    // ---- J kernels ----------------------------------------------------------

    /// Independent oracle: J_ν(u) = (1/π) ∫₀^π cos(u sinθ - νθ) dθ.
    fn bessel_j_oracle(nu: u32, u: f64) -> f64 {
        let panels = 16 + (u as usize + nu as usize) / 2;
        let r = integrate(
            |th| Complex64::new((u * th.sin() - nu as f64 * th).cos(), 0.0),
            0.0,
            PI,
            panels,
            1e-13,
        )
        .unwrap();
        r.value.re / PI
    }

    #[test]
    fn j_matches_integral_representation() {
        for nu in [0u32, 1, 7, 11, 12] {
            for u in [0.05, 0.5, 1.0, 5.0, 9.8, 15.0, 40.0, 80.0, 119.0, 150.0, 400.0] {
                let got = bessel_j(nu, u);
                let want = bessel_j_oracle(nu, u);
                assert!(
                    (got - want).abs() < 1e-9 * want.abs().max(1e-3),
                    "J_{nu}({u}): got {got:e}, want {want:e}"
                );
            }
        }
    }

    #[test]
    fn j_matches_reference_values() {
        // 30-digit reference values.
        let cases: [(u32, f64, f64); 12] = [
            (0, 1.0, 0.76519768655796655),
            (0, 30.0, -0.086367983581040211),
            (0, 200.0, -0.015437439930565092),
            (1, 9.5, 0.16126443075752985),
            (1, 1500.0, -0.01287620247319177),
            (11, 0.1, 1.2229926610356446e-22),
            (11, 1.0, 1.1980067463031371e-11),
            (11, 9.5, 0.089696413724875941),
            (11, 30.0, 0.025058805137824544),
            (11, 80.0, 0.088752558559857845),
            (11, 200.0, 0.056443381222896511),
            (12, 1500.0, -0.015450005616362141),
        ];
        for (nu, u, want) in cases {
            let got = bessel_j(nu, u);
            assert!(
                ((got - want) / want).abs() < 1e-10,
                "J_{nu}({u}): got {got:e}, want {want:e}"
            );
        }
    }

    #[test]
    fn j_small_argument_leading_term() {
        // J_11(0.1) against (u/2)^11 / 11!
        let u = 0.1f64;
        let lead = (u / 2.0f64).powi(11) / 39_916_800.0;
        let got = bessel_j(11, u);
        assert!(((got - lead) / lead).abs() < 0.01);
    }

    #[test]
    fn j_regime_crossovers_are_seamless() {
        // series vs Miller at u = 10, Miller vs Hankel at u = 120
        for nu in [0u32, 11] {
            let a = bessel_j_series(nu, 10.0);
            let b = bessel_j_miller(nu, 10.0);
            assert!(((a - b) / a.abs().max(1e-10)).abs() < 1e-10, "ν={nu} at 10: {a:e} vs {b:e}");
            let c = bessel_j_miller(nu, 120.0);
            let d = bessel_j_hankel(nu, 120.0);
            assert!(((c - d) / c.abs().max(1e-10)).abs() < 1e-10, "ν={nu} at 120: {c:e} vs {d:e}");
        }
    }

    // ---- K kernel -----------------------------------------------------------

    #[test]
    fn k_zero_order_unit_argument() {
        // K at μ=0, u=1 (30-digit reference 0.42102443824070833...)
        let got = bessel_k_2imu(0.0, 1.0).unwrap();
        assert!((got - 0.42102443824070833).abs() < 1e-12, "{got}");
    }

    #[test]
    fn k_matches_reference_values() {
        let cases: [(f64, f64, f64); 12] = [
            (0.5, 0.1, 0.22538188530156777),
            (0.5, 1.0, 0.28942803702599213),
            (0.5, 6.0, 0.0011512058593881344),
            (0.5, 15.0, 9.5073840784874525e-8),
            (1.0, 0.1, -0.012290334958861461),
            (1.0, 0.5, 0.016502018949481443),
            (1.0, 2.5, 0.030836284809300722),
            (1.0, 15.0, 8.6281439645258806e-8),
            (2.0, 0.1, 0.0023123934564696375),
            (2.0, 1.0, -0.002160713598235301),
            (2.0, 6.0, 0.00034800074013480807),
            (2.0, 15.0, 5.8414594505262518e-8),
        ];
        for (mu, u, want) in cases {
            let got = bessel_k_2imu(mu, u).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-9,
                "K(μ={mu}, u={u}): got {got:e}, want {want:e}"
            );
        }
    }

    #[test]
    fn k_large_spectral_parameter_stays_finite() {
        // exponentially small values sink below the cancellation floor but
        // must stay finite and tiny, not NaN
        let v = bessel_k_2imu(9.533695, 1.0).unwrap();
        assert!(v.is_finite());
        assert!(v.abs() < 1e-10);
        let v50 = bessel_k_2imu(50.0, 2.0).unwrap();
        assert!(v50.is_finite());
    }

    // ---- Y combination --------------------------------------------------------

    #[test]
    fn ycomb_matches_reference_values() {
        let cases: [(f64, f64, f64); 12] = [
            (0.5, 0.1, -1.8116260752481248),
            (0.5, 1.0, -0.95311322495992787),
            (0.5, 6.0, -1.4934955778621763),
            (0.5, 45.0, 0.12931889890215805),
            (1.0, 0.5, -3.3822366728385314),
            (1.0, 2.5, 8.3467461949573458),
            (1.0, 15.0, 4.7443874232093626),
            (1.0, 120.0, -0.30831558605473511),
            (2.0, 0.1, -211.04382328259417),
            (2.0, 1.0, 200.46005406409926),
            (2.0, 15.0, 97.154260504761293),
            (2.0, 120.0, -9.0267414237013324),
        ];
        for (mu, u, want) in cases {
            let got = bessel_ycomb_2imu(mu, u).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-8,
                "Ycomb(μ={mu}, u={u}): got {got:e}, want {want:e}"
            );
        }
    }

    #[test]
    fn ycomb_routes_agree_at_crossover() {
        // integral representation vs Hankel form, probed around the switch
        for mu in [0.5f64, 1.0, 2.0] {
            let u = (4.0 * mu * mu + 20.0).max(40.0);
            let hank = ycomb_hankel(mu, u);
            // force the integral path by evaluating just below the switch
            let integral = bessel_ycomb_2imu(mu, u - 1e-9).unwrap();
            assert!(
                ((hank - integral) / hank.abs().max(1e-8)).abs() < 1e-7,
                "μ={mu}: {hank:e} vs {integral:e}"
            );
        }
    }

    // ---- kernel dispatch ------------------------------------------------------

    #[test]
    fn kernel_spec_validation() {
        assert!(VoronoiKernelSpec::holomorphic(11).is_err());
        assert!(VoronoiKernelSpec::holomorphic(12).is_ok());
        assert!(VoronoiKernelSpec::maass_k(51.0).is_err());
        assert!(VoronoiKernelSpec::maass_y(1.0).is_ok());

        let spec = VoronoiKernelSpec::holomorphic(12).unwrap();
        assert!(matches!(
            kernel_eval(&spec, 0.0),
            Err(BesselError::DomainError { .. })
        ));
        assert!(matches!(
            kernel_eval(&spec, -1.0),
            Err(BesselError::DomainError { .. })
        ));
    }

    #[test]
    fn kernel_prefactors() {
        let hol = VoronoiKernelSpec::holomorphic(12).unwrap();
        assert!((hol.prefactor() - Complex64::new(TAU, 0.0)).norm() < 1e-15);
        let hol14 = VoronoiKernelSpec::holomorphic(14).unwrap();
        assert!((hol14.prefactor() - Complex64::new(-TAU, 0.0)).norm() < 1e-15);

        let mu = 0.8;
        let k = VoronoiKernelSpec::maass_k(mu).unwrap();
        assert!((k.prefactor().re - 4.0 * (PI * mu).cosh()).abs() < 1e-12);
        let y = VoronoiKernelSpec::maass_y(mu).unwrap();
        assert!((y.prefactor().re + PI / (PI * mu).cosh()).abs() < 1e-12);
    }

    // ---- Voronoi weight ---------------------------------------------------------

    #[test]
    fn voronoi_weight_trivial_bound() {
        let spec = VoronoiKernelSpec::holomorphic(12).unwrap();
        let n = 1000.0;
        let h = SmoothWindow::bump(n);
        for y in [1e-5, 1e-3, 0.05, 0.25] {
            let v = voronoi_weight(&spec, &h, 0.0, y).unwrap();
            assert!(v.norm() <= 1.02 * TAU * n, "|V({y})| = {} vs N = {n}", v.norm());
        }
    }

    #[test]
    fn voronoi_weight_decays_past_onset() {
        let spec = VoronoiKernelSpec::holomorphic(12).unwrap();
        let n = 1000.0;
        let q = 5.0f64;
        let h = SmoothWindow::bump(n);
        let y = q * q * 10.0 / n;
        let v = voronoi_weight(&spec, &h, 0.0, y).unwrap();
        assert!(v.norm() / n < 0.5, "|V|/N = {}", v.norm() / n);
    }

    #[test]
    fn voronoi_weight_phase_variants_bounded() {
        let spec = VoronoiKernelSpec::holomorphic(12).unwrap();
        let n = 500.0;
        let h = SmoothWindow::bump(n);
        let y = 0.01;
        let v0 = voronoi_weight(&spec, &h, 0.0, y).unwrap();
        let v1 = voronoi_weight(&spec, &h, 1.0 / n, y).unwrap();
        assert!(v0.norm() <= TAU * n && v1.norm() <= TAU * n);
        assert!((v0 - v1).norm() > 1e-6 * v0.norm(), "phase must matter");
        assert!(matches!(
            voronoi_weight(&spec, &h, 2.0 / n, y),
            Err(BesselError::PhaseOutOfRange { .. })
        ));
    }

    #[test]
    fn voronoi_weight_doubling_stability() {
        // independent higher-resolution run agrees to well under 1e-8 relative
        let spec = VoronoiKernelSpec::holomorphic(12).unwrap();
        let n = 200.0;
        let h = SmoothWindow::bump(n);
        let y = 0.08;
        let v = voronoi_weight(&spec, &h, 0.5 / n, y).unwrap();
        // brute force with quadrupled panel floor
        let x_phase = SplitPhase::product(0.5 / n, n);
        let brute = integrate(
            |w| {
                let z = 2.0 * TAU * (n * w * y).sqrt();
                h.eval(w) * bessel_j(11, z) * x_phase.cis(w)
            },
            1.0,
            2.0,
            4 * (16 + (6.0 * (2.0 * (n * y).sqrt() * (2f64.sqrt() - 1.0))).ceil() as usize),
            1e-13,
        )
        .unwrap();
        let want = Complex64::new(TAU, 0.0) * n * brute.value;
        assert!((v - want).norm() < 1e-8 * want.norm().max(1e-12), "{v} vs {want}");
    }

    #[test]
    fn voronoi_weight_maass_kernels_run() {
        let n = 100.0;
        let h = SmoothWindow::bump(n);
        let plus = VoronoiKernelSpec::maass_k(0.75).unwrap();
        let minus = VoronoiKernelSpec::maass_y(0.75).unwrap();
        let vp = voronoi_weight(&plus, &h, 0.0, 0.02).unwrap();
        let vm = voronoi_weight(&minus, &h, 0.0, 0.02).unwrap();
        assert!(vp.norm().is_finite() && vp.norm() > 0.0);
        assert!(vm.norm().is_finite() && vm.norm() > 0.0);
        // both essentially real for x = 0 (kernels and window are real)
        assert!(vp.im.abs() < 1e-9 * vp.re.abs().max(1e-12));
        assert!(vm.im.abs() < 1e-9 * vm.re.abs().max(1e-12));
    }

    // ---- H* / H♯ -------------------------------------------------------------

    #[test]
    fn h_star_integer_frequency_oracle() {
        // t = 0, x = 0, mN/(Mq) = 8 ∈ ℤ: H* is the plateau's Fourier
        // coefficient at frequency 8, computable by a plain real quadrature.
        let window = SmoothWindow::plateau(40.0);
        let pair = h_star_transform(&window, 1, 5, 1, 0.0, 0.0).unwrap();
        let want = integrate(
            |y| window.eval(y) * cis_turns(-8.0 * y),
            0.75,
            2.25,
            512,
            1e-15,
        )
        .unwrap();
        assert!((pair.h_star - want.value).norm() < 1e-10, "{:?}", pair.h_star);
    }

    #[test]
    fn h_star_factorization_consistency() {
        for (m, q, big_m, t, x_num) in [
            (1i64, 5u64, 3u64, 0.0f64, 0.0f64),
            (4, 5, 3, 0.0, 0.0),
            (-3, 5, 3, 0.0, 0.0),
            (2, 7, 4, 1.5, 0.3),
            (-5, 3, 8, -2.0, -0.9),
        ] {
            let n = 60.0;
            let window = SmoothWindow::plateau(n);
            let x = x_num / n;
            let pair = h_star_transform(&window, m, q, big_m, t, x).unwrap();
            let recomposed = h_star_factor(m, q, big_m, t, n) * pair.h_sharp;
            assert!(
                (pair.h_star - recomposed).norm() < 1e-9,
                "m={m} q={q} M={big_m} t={t}: {:?} vs {recomposed:?}",
                pair.h_star
            );
        }
    }

    #[test]
    fn h_star_deep_decay() {
        // frequency mN/(Mq) ≈ 160: far past the window bandwidth
        let n = 2400.0;
        let window = SmoothWindow::plateau(n);
        let pair = h_star_transform(&window, 1, 5, 3, 0.0, 0.0).unwrap();
        assert!(pair.h_star.norm() < 1e-8, "|H*| = {:e}", pair.h_star.norm());
    }

    #[test]
    fn h_star_decay_crossover_near_bandwidth() {
        // |H*(m)| falls below 1e-4 within a factor 10 of m ~ MTq/N
        let n = 100.0;
        let (q, big_m, t) = (5u64, 3u64, 0.0f64);
        let window = SmoothWindow::plateau(n);
        let big_t = 3.0 + t.abs();
        let scale_m = big_m as f64 * big_t * q as f64 / n; // reference crossover
        let mut crossover = None;
        for m in 1..200i64 {
            let pair = h_star_transform(&window, m, q, big_m, t, 0.0).unwrap();
            if pair.h_star.norm() < 1e-4 {
                crossover = Some(m as f64);
                break;
            }
        }
        let crossover = crossover.expect("decay must kick in");
        assert!(
            crossover <= 10.0 * scale_m && crossover >= scale_m / 10.0,
            "crossover {crossover} vs scale {scale_m}"
        );
    }

    #[test]
    fn h_sharp_magnitude_bound() {
        // |H♯(u;q)| ≤ C |u| N / (Mq √T) with C = 4 (calibrated)
        let n = 80.0;
        let window = SmoothWindow::plateau(n);
        for (m, q, big_m, t) in [
            (1i64, 9u64, 5u64, 0.0f64),
            (2, 9, 5, 0.0),
            (1, 3, 2, 4.0),
            (7, 4, 3, -8.0),
            (-2, 6, 7, 2.0),
            (1, 30, 5, 0.0), // c = N/(Mq) < 1: the bound must still hold
        ] {
            let pair = h_star_transform(&window, m, q, big_m, t, 0.0).unwrap();
            let big_t = 3.0 + t.abs();
            let bound = 4.0 * (m as f64).abs() * n / ((big_m * q) as f64 * big_t.sqrt());
            assert!(
                pair.h_sharp.norm() <= bound,
                "m={m} q={q} M={big_m} t={t}: |H♯| = {} vs bound {bound}",
                pair.h_sharp.norm()
            );
        }
    }

    #[test]
    fn h_star_rejects_bad_inputs() {
        let window = SmoothWindow::plateau(50.0);
        assert!(matches!(
            h_star_transform(&window, 0, 5, 3, 0.0, 0.0),
            Err(BesselError::ZeroFrequency)
        ));
        assert!(matches!(
            h_star_transform(&window, 1, 5, 3, 0.0, 1.0),
            Err(BesselError::PhaseOutOfRange { .. })
        ));
    }
}
