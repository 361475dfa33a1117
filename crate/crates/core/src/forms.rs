//! Cusp-form Fourier coefficients: the built-in weight-12 level-1 eigenform
//! (exact integer q-expansion, normalized on the fly) and a file-ingestion
//! path for externally computed Maass spectral data.
//!
//! Maass coefficients are data, never computed here: producing them is a
//! numerical project of its own, and the downstream identities only need a
//! table of values together with the spectral parameter.

use crate::characters::{CharacterGroup, DirichletCharacter, Parity};
use num_complex::Complex64;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormError {
    #[error("coefficient file has no `maass ...` header line")]
    MissingHeader,
    #[error("coefficient file line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("first coefficient must be 1, file declares {re}+{im}i")]
    NormalizationError { re: f64, im: f64 },
    #[error("requested coefficients up to {requested}, only {available} available")]
    InsufficientCoefficients { requested: u64, available: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FormKind {
    /// Holomorphic eigenform of the given weight.
    Holomorphic { weight: u32 },
    /// Maass form with Laplace eigenvalue 1/4 + mu^2 and the given parity.
    Maass { mu: f64, parity: Parity },
}

/// Normalized Fourier coefficients λ(n) for n = 1..n_max, plus the data
/// (weight or spectral parameter, level, nebentypus) the transforms need.
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct CoefficientSource {
    kind: FormKind,
    level: u64,
    nebentypus: DirichletCharacter,
    coeffs: Vec<Complex64>,
}

/// Exact integer coefficients tau(n), 1 <= n <= n_max, of the weight-12
/// level-1 discriminant form, from the pentagonal-number expansion of the
/// eta product raised to the 24th power. Each of the 24 passes multiplies
/// the running dense polynomial by the sparse pentagonal series, so the
/// whole table costs O(n_max^{3/2}) integer additions per pass.
pub fn delta_tau(n_max: usize) -> Vec<i128> {
    assert!((1..=1_000_000).contains(&n_max), "n_max out of contract range");
    let deg = n_max - 1; // tau(n) is the coefficient of q^{n-1} in the eta power
    // Generalized pentagonal exponents k(3k-1)/2 with signs (-1)^k.
    let mut penta: Vec<(usize, i128)> = vec![(0, 1)];
    let mut k = 1i64;
    loop {
        let a = k * (3 * k - 1) / 2;
        let b = k * (3 * k + 1) / 2;
        if a as usize > deg {
            break;
        }
        let s = if k % 2 == 0 { 1i128 } else { -1 };
        penta.push((a as usize, s));
        if b as usize <= deg {
            penta.push((b as usize, s));
        }
        k += 1;
    }
    penta.sort_unstable_by_key(|&(e, _)| e);

    let mut acc = vec![0i128; deg + 1];
    acc[0] = 1;
    let mut next = vec![0i128; deg + 1];
    for _ in 0..24 {
        next.iter_mut().for_each(|c| *c = 0);
        for &(e, s) in &penta {
            for i in e..=deg {
                next[i] += s * acc[i - e];
            }
        }
        std::mem::swap(&mut acc, &mut next);
    }
    acc
}

/// The built-in weight-12 full-level eigenform with λ(n) = tau(n)/n^{11/2}.
pub fn builtin_delta(n_max: usize) -> CoefficientSource {
    let tau = delta_tau(n_max);
    let coeffs = tau
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let n = (i + 1) as f64;
            Complex64::new(t as f64 / (n.powi(5) * n.sqrt()), 0.0)
        })
        .collect();
    CoefficientSource {
        kind: FormKind::Holomorphic { weight: 12 },
        level: 1,
        nebentypus: CharacterGroup::new(1).character(0).expect("trivial character"),
        coeffs,
    }
}

/// Parse Maass-form coefficients from the line-oriented text format:
/// a header `maass mu=<real> level=<int> neb=<index> parity=<0|1>` followed
/// by lines `<n> <re> <im>`; `#` starts a comment, blank lines are skipped.
pub fn load_maass(path: impl AsRef<Path>) -> Result<CoefficientSource, FormError> {
    let text = std::fs::read_to_string(path)?;
    load_maass_str(&text)
}

pub fn load_maass_str(text: &str) -> Result<CoefficientSource, FormError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or(FormError::MissingHeader)?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("maass") {
        return Err(FormError::MissingHeader);
    }
    let (mut mu, mut level, mut neb, mut parity) = (None, None, None, None);
    for field in fields {
        let (key, value) = field.split_once('=').ok_or_else(|| FormError::ParseError {
            line: hline,
            message: format!("expected key=value, found {field:?}"),
        })?;
        let bad = |message: String| FormError::ParseError { line: hline, message };
        match key {
            "mu" => mu = Some(value.parse::<f64>().map_err(|e| bad(format!("mu: {e}")))?),
            "level" => {
                level = Some(value.parse::<u64>().map_err(|e| bad(format!("level: {e}")))?)
            }
            "neb" => neb = Some(value.parse::<u64>().map_err(|e| bad(format!("neb: {e}")))?),
            "parity" => match value {
                "0" => parity = Some(Parity::Even),
                "1" => parity = Some(Parity::Odd),
                other => return Err(bad(format!("parity must be 0 or 1, found {other:?}"))),
            },
            other => return Err(bad(format!("unknown header field {other:?}"))),
        }
    }
    let missing = |what: &str| FormError::ParseError {
        line: hline,
        message: format!("header missing {what}"),
    };
    let mu = mu.ok_or_else(|| missing("mu"))?;
    let level = level.ok_or_else(|| missing("level"))?;
    if level == 0 {
        return Err(FormError::ParseError {
            line: hline,
            message: "level must be positive".into(),
        });
    }
    let neb = neb.ok_or_else(|| missing("neb"))?;
    let parity = parity.ok_or_else(|| missing("parity"))?;

    let group = CharacterGroup::new(level);
    let nebentypus = group.character(neb).map_err(|e| FormError::ParseError {
        line: hline,
        message: e.to_string(),
    })?;

    let mut table: Vec<(u64, Complex64)> = Vec::new();
    for (lno, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = |message: String| FormError::ParseError { line: lno, message };
        if parts.len() != 3 {
            return Err(bad(format!("expected `n re im`, found {} fields", parts.len())));
        }
        let n: u64 = parts[0].parse().map_err(|e| bad(format!("index: {e}")))?;
        if n == 0 {
            return Err(bad("coefficient index must be positive".into()));
        }
        let re: f64 = parts[1].parse().map_err(|e| bad(format!("re: {e}")))?;
        let im: f64 = parts[2].parse().map_err(|e| bad(format!("im: {e}")))?;
        table.push((n, Complex64::new(re, im)));
    }
    if table.is_empty() {
        return Err(FormError::ParseError {
            line: hline,
            message: "no coefficient lines".into(),
        });
    }
    let n_max = table.iter().map(|&(n, _)| n).max().expect("nonempty");
    let mut coeffs = vec![None; n_max as usize];
    for (n, v) in table {
        let slot = &mut coeffs[(n - 1) as usize];
        if slot.is_some() {
            return Err(FormError::ParseError {
                line: 0,
                message: format!("duplicate coefficient for n={n}"),
            });
        }
        *slot = Some(v);
    }
    let coeffs: Vec<Complex64> = coeffs
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| FormError::ParseError {
                line: 0,
                message: format!("missing coefficient for n={}", i + 1),
            })
        })
        .collect::<Result<_, _>>()?;
    let lead = coeffs[0];
    if (lead - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(FormError::NormalizationError {
            re: lead.re,
            im: lead.im,
        });
    }
    Ok(CoefficientSource {
        kind: FormKind::Maass { mu, parity },
        level,
        nebentypus,
        coeffs,
    })
}

impl CoefficientSource {
    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn nebentypus(&self) -> &DirichletCharacter {
        &self.nebentypus
    }

    pub fn n_max(&self) -> u64 {
        self.coeffs.len() as u64
    }

    /// λ(n); errors past the available range rather than guessing zero.
    pub fn lambda(&self, n: u64) -> Result<Complex64, FormError> {
        if n == 0 || n > self.n_max() {
            return Err(FormError::InsufficientCoefficients {
                requested: n,
                available: self.n_max(),
            });
        }
        Ok(self.coeffs[(n - 1) as usize])
    }

    /// The full coefficient slice, λ(1) first.
    pub fn lambdas(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Σ_{n ≤ x} |λ(n)|².
    pub fn rankin_selberg_sum(&self, x: u64) -> Result<f64, FormError> {
        if x > self.n_max() {
            return Err(FormError::InsufficientCoefficients {
                requested: x,
                available: self.n_max(),
            });
        }
        Ok(self.coeffs[..x as usize].iter().map(|c| c.norm_sqr()).sum())
    }
}
