//! Golay complementary pairs: the binary length-26 kernel, the QPSK lift,
//! recursive doubling and the 16-QAM superposition used for training.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::ComplexVector;
use crate::error::{Error, Result};

/// Relative tolerance for the complementarity check.
pub const COMPLEMENTARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alphabet {
    Binary,
    Qpsk,
    Qam16,
}

/// A pair `(A, B)` of equal-length sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct GolayPair {
    a: ComplexVector,
    b: ComplexVector,
    alphabet: Alphabet,
}

impl GolayPair {
    pub fn new(a: ComplexVector, b: ComplexVector, alphabet: Alphabet) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::InvalidInput(format!(
                "pair halves must have equal nonzero length, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        let pair = Self { a, b, alphabet };
        if !pair.on_alphabet() {
            return Err(Error::InvalidInput(format!(
                "elements are not on the {:?} alphabet",
                alphabet
            )));
        }
        Ok(pair)
    }

    pub fn a(&self) -> &[Complex64] {
        &self.a
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Mean per-element energy over both halves.
    pub fn mean_energy(&self) -> f64 {
        let total: f64 = self.a.iter().chain(&self.b).map(|v| v.norm_sqr()).sum();
        total / (2 * self.len()) as f64
    }

    fn on_alphabet(&self) -> bool {
        let tol = 1e-9;
        let check = |z: &Complex64| match self.alphabet {
            Alphabet::Binary => z.im.abs() < tol && (z.re.abs() - 1.0).abs() < tol,
            Alphabet::Qpsk => {
                (z.re.abs() - FRAC_1_SQRT_2).abs() < tol && (z.im.abs() - FRAC_1_SQRT_2).abs() < tol
            }
            Alphabet::Qam16 => {
                let s = 10f64.sqrt();
                let on = |x: f64| {
                    let l = x * s;
                    [1.0, 3.0].iter().any(|&lv| (l.abs() - lv).abs() < 1e-6)
                };
                on(z.re) && on(z.im)
            }
        };
        self.a.iter().chain(&self.b).all(check)
    }
}

/// Outcome of [`verify_complementary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplementarityReport {
    /// Magnitude of the summed autocorrelation at lag zero.
    pub peak: f64,
    /// Largest summed autocorrelation magnitude over nonzero lags.
    pub max_sidelobe: f64,
    pub pass: bool,
}

/// Aperiodic autocorrelation `sum_m s_m conj(s_{m+j})` at lag `j`.
pub fn aperiodic_autocorrelation(s: &[Complex64], lag: usize) -> Complex64 {
    s.iter()
        .zip(s.iter().skip(lag))
        .map(|(x, y)| x * y.conj())
        .sum()
}

/// Sums the aperiodic autocorrelations of both halves at every lag and
/// checks for a `2 L E` peak with vanishing sidelobes.
pub fn verify_complementary(p: &GolayPair) -> ComplementarityReport {
    let l = p.len();
    let sums: Vec<Complex64> = (0..l)
        .map(|j| aperiodic_autocorrelation(&p.a, j) + aperiodic_autocorrelation(&p.b, j))
        .collect();
    let peak = sums[0].norm();
    let max_sidelobe = sums[1..].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let expected = 2.0 * l as f64 * p.mean_energy();
    let pass = expected > 0.0
        && (peak - expected).abs() <= COMPLEMENTARY_TOL * expected
        && max_sidelobe <= COMPLEMENTARY_TOL * peak;
    ComplementarityReport {
        peak,
        max_sidelobe,
        pass,
    }
}

const SEED_A: [i8; 26] = [
    1, 1, 1, 1, -1, 1, 1, -1, -1, 1, -1, 1, 1, 1, 1, 1, -1, 1, -1, -1, -1, 1, 1, -1, -1, -1,
];
const SEED_B: [i8; 26] = [
    1, 1, 1, -1, -1, 1, 1, 1, -1, 1, -1, -1, 1, -1, 1, -1, 1, -1, -1, 1, 1, -1, 1, 1, 1, 1,
];

/// The frozen bipolar length-26 kernel pair.
pub fn golay_seed_26() -> GolayPair {
    let lift = |s: &[i8]| s.iter().map(|&v| Complex64::new(f64::from(v), 0.0)).collect();
    GolayPair {
        a: lift(&SEED_A),
        b: lift(&SEED_B),
        alphabet: Alphabet::Binary,
    }
}

fn require_complementary(p: &GolayPair, what: &str) -> Result<()> {
    let rep = verify_complementary(p);
    if rep.pass {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what}: pair is not complementary (peak {}, max sidelobe {})",
            rep.peak, rep.max_sidelobe
        )))
    }
}

/// One step of the concatenation recursion `(A|B, A|-B)`.
pub fn golay_double(p: &GolayPair) -> Result<GolayPair> {
    require_complementary(p, "golay_double")?;
    let mut a = p.a.clone();
    a.extend_from_slice(&p.b);
    let mut b = p.a.clone();
    b.extend(p.b.iter().map(|v| -v));
    Ok(GolayPair {
        a,
        b,
        alphabet: p.alphabet,
    })
}

/// Rotates a bipolar pair onto the QPSK diagonal: `+1 -> e^{i pi/4}`,
/// `-1 -> e^{i 5 pi/4}`.
pub fn to_qpsk(p: &GolayPair) -> Result<GolayPair> {
    if p.alphabet != Alphabet::Binary {
        return Err(Error::InvalidInput(format!(
            "QPSK lift expects a binary pair, got {:?}",
            p.alphabet
        )));
    }
    let rot = Complex64::from_polar(1.0, PI / 4.0);
    let lift = |s: &[Complex64]| -> ComplexVector { s.iter().map(|v| v * rot).collect() };
    Ok(GolayPair {
        a: lift(&p.a),
        b: lift(&p.b),
        alphabet: Alphabet::Qpsk,
    })
}

/// The complementary mate `(reverse(conj B), -reverse(conj A))`.
///
/// Its cross-correlations with the original pair cancel at every lag, which
/// is what makes the weighted superposition in [`to_16qam`] complementary.
pub fn complementary_mate(p: &GolayPair) -> GolayPair {
    let a = p.b.iter().rev().map(|v| v.conj()).collect();
    let b = p.a.iter().rev().map(|v| -v.conj()).collect();
    GolayPair {
        a,
        b,
        alphabet: p.alphabet,
    }
}

/// Superposes two QPSK pairs as `(2 p1 + p2) / sqrt(5)`, landing on the
/// unit-energy 16-QAM grid.
pub fn to_16qam(p1: &GolayPair, p2: &GolayPair) -> Result<GolayPair> {
    if p1.alphabet != Alphabet::Qpsk || p2.alphabet != Alphabet::Qpsk {
        return Err(Error::InvalidInput("16-QAM superposition needs two QPSK pairs".into()));
    }
    if p1.len() != p2.len() {
        return Err(Error::InvalidInput(format!(
            "pair lengths differ: {} vs {}",
            p1.len(),
            p2.len()
        )));
    }
    require_complementary(p1, "to_16qam p1")?;
    require_complementary(p2, "to_16qam p2")?;
    let scale = 1.0 / 5f64.sqrt();
    let mix = |x: &[Complex64], y: &[Complex64]| -> ComplexVector {
        x.iter().zip(y).map(|(u, v)| (2.0 * u + v) * scale).collect()
    };
    let out = GolayPair {
        a: mix(&p1.a, &p2.a),
        b: mix(&p1.b, &p2.b),
        alphabet: Alphabet::Qam16,
    };
    let rep = verify_complementary(&out);
    if !rep.pass {
        return Err(Error::Construction(format!(
            "16-QAM superposition is not complementary (max sidelobe {})",
            rep.max_sidelobe
        )));
    }
    Ok(out)
}

/// Full training-sequence pipeline: seed, QPSK lift, four doublings to
/// length 416, then 16-QAM superposition with the complementary mate.
pub fn training_pair() -> Result<GolayPair> {
    let mut q = to_qpsk(&golay_seed_26())?;
    for _ in 0..4 {
        q = golay_double(&q)?;
    }
    let mate = complementary_mate(&q);
    to_16qam(&q, &mate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bipolar(v: &[f64]) -> ComplexVector {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    /// Independent integer oracle: sums of aperiodic autocorrelations for a
    /// bipolar pair, computed without complex arithmetic.
    fn integer_sums(a: &[i8], b: &[i8]) -> Vec<i32> {
        let l = a.len();
        (0..l)
            .map(|j| {
                (0..l - j)
                    .map(|m| i32::from(a[m]) * i32::from(a[m + j]) + i32::from(b[m]) * i32::from(b[m + j]))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn seed_passes_integer_oracle() {
        let sums = integer_sums(&SEED_A, &SEED_B);
        assert_eq!(sums[0], 52);
        assert!(sums[1..].iter().all(|&s| s == 0));
        let seed = golay_seed_26();
        assert_eq!((seed.a().len(), seed.b().len()), (26, 26));
        let rep = verify_complementary(&seed);
        assert!(rep.pass);
        assert_eq!(rep.peak, 52.0);
    }

    #[test]
    fn canonical_length_two_pair() {
        let p = GolayPair::new(bipolar(&[1.0, 1.0]), bipolar(&[1.0, -1.0]), Alphabet::Binary).unwrap();
        let rep = verify_complementary(&p);
        assert!(rep.pass);
        assert_eq!(rep.peak, 4.0);

        let q = GolayPair::new(bipolar(&[1.0, 1.0]), bipolar(&[1.0, 1.0]), Alphabet::Binary).unwrap();
        let rep = verify_complementary(&q);
        assert!(!rep.pass);
        // lag 1: a0*a1 + b0*b1 = 2
        assert_eq!(rep.max_sidelobe, 2.0);
    }

    #[test]
    fn doubling_rejects_non_complementary_input() {
        let q = GolayPair::new(bipolar(&[1.0, 1.0]), bipolar(&[1.0, 1.0]), Alphabet::Binary).unwrap();
        assert!(matches!(golay_double(&q), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn qpsk_lift_preserves_sums() {
        let seed = golay_seed_26();
        let q = to_qpsk(&seed).unwrap();
        assert_eq!(q.len(), 26);
        assert!(q.a().iter().chain(q.b()).all(|v| (v.norm() - 1.0).abs() < 1e-12));
        for j in 0..26 {
            let before = aperiodic_autocorrelation(seed.a(), j) + aperiodic_autocorrelation(seed.b(), j);
            let after = aperiodic_autocorrelation(q.a(), j) + aperiodic_autocorrelation(q.b(), j);
            assert!((before - after).norm() < 1e-12);
        }
        assert!(matches!(to_qpsk(&q), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn four_doublings_reach_416() {
        let mut q = to_qpsk(&golay_seed_26()).unwrap();
        let mut lengths = vec![q.len()];
        for _ in 0..4 {
            q = golay_double(&q).unwrap();
            lengths.push(q.len());
        }
        assert_eq!(lengths, vec![26, 52, 104, 208, 416]);
        let rep = verify_complementary(&q);
        assert!(rep.pass);
        assert!((rep.peak - 832.0).abs() < 1e-9);
    }

    #[test]
    fn sixteen_qam_pair() {
        let p = training_pair().unwrap();
        assert_eq!(p.len(), 416);
        assert_eq!(p.alphabet(), Alphabet::Qam16);
        assert!((p.mean_energy() - 1.0).abs() < 1e-9);
        let rep = verify_complementary(&p);
        assert!(rep.pass);
        assert!((rep.peak - 832.0).abs() <= 1e-9 * 832.0);
        assert!(rep.max_sidelobe <= 1e-9 * 832.0);
        // The mate is tied to the QPSK pair, so only a subset of the grid
        // is reached. Every element must still sit on it.
        let mut seen = std::collections::BTreeSet::new();
        for v in p.a().iter().chain(p.b()) {
            let s = 10f64.sqrt();
            seen.insert(((v.re * s).round() as i32, (v.im * s).round() as i32));
        }
        let levels = [-3, -1, 1, 3];
        assert!(seen.iter().all(|(i, q)| levels.contains(i) && levels.contains(q)));
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn superposition_without_mate_is_rejected() {
        let mut q = to_qpsk(&golay_seed_26()).unwrap();
        for _ in 0..4 {
            q = golay_double(&q).unwrap();
        }
        // A reversed copy is complementary but not a mate.
        let rev = GolayPair {
            a: q.a().iter().rev().copied().collect(),
            b: q.b().iter().rev().copied().collect(),
            alphabet: Alphabet::Qpsk,
        };
        assert!(verify_complementary(&rev).pass);
        assert!(matches!(to_16qam(&q, &rev), Err(Error::Construction(_))));
    }

    #[test]
    fn alphabet_is_enforced() {
        let bad = vec![Complex64::new(0.5, 0.0); 2];
        assert!(GolayPair::new(bad.clone(), bad, Alphabet::Binary).is_err());
        assert!(GolayPair::new(bipolar(&[1.0]), bipolar(&[1.0, 1.0]), Alphabet::Binary).is_err());
    }
}
