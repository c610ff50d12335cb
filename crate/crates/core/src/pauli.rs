//! Pauli strings, weighted observables and their measurement helpers.
//!
//! Qubit `j` of a [`PauliString`] is the `j`-th letter, and it maps to bit `j`
//! of a statevector amplitude index. The textual form of a string lists
//! letters from qubit 0 onward, so `"XZ"` is `X` on qubit 0 and `Z` on qubit 1.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{config, contract, Error, Result};
use crate::statevector::{Gate, StateVector};

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub const ALL: [PauliLetter; 4] = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    pub fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(PauliLetter::I),
            'X' => Some(PauliLetter::X),
            'Y' => Some(PauliLetter::Y),
            'Z' => Some(PauliLetter::Z),
            _ => None,
        }
    }
}

/// Tensor product of single-qubit Pauli operators, one letter per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<PauliLetter>,
}

impl PauliString {
    /// Largest supported string length; amplitude masks are stored in a `u64`.
    pub const MAX_QUBITS: usize = 62;

    pub fn new(letters: Vec<PauliLetter>) -> Result<Self> {
        if letters.is_empty() {
            return Err(contract("a Pauli string needs at least one letter"));
        }
        if letters.len() > Self::MAX_QUBITS {
            return Err(contract(format!(
                "Pauli string of length {} exceeds the supported {} qubits",
                letters.len(),
                Self::MAX_QUBITS
            )));
        }
        Ok(PauliString { letters })
    }

    /// The all-identity string on `n` qubits.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(vec![PauliLetter::I; n])
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> PauliLetter {
        self.letters[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == PauliLetter::I)
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&l| l != PauliLetter::I).count()
    }

    /// Bits flipped by the string (sites carrying X or Y).
    pub fn flip_mask(&self) -> u64 {
        self.mask(|l| matches!(l, PauliLetter::X | PauliLetter::Y))
    }

    /// Bits contributing a `(-1)^bit` sign (sites carrying Y or Z).
    pub fn sign_mask(&self) -> u64 {
        self.mask(|l| matches!(l, PauliLetter::Y | PauliLetter::Z))
    }

    /// Non-identity sites.
    pub fn support_mask(&self) -> u64 {
        self.mask(|l| l != PauliLetter::I)
    }

    pub fn y_count(&self) -> usize {
        self.letters.iter().filter(|&&l| l == PauliLetter::Y).count()
    }

    /// Global phase `i^{#Y}` picked up when the string acts on a basis state.
    pub(crate) fn y_phase(&self) -> Complex64 {
        match self.y_count() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    fn mask(&self, pred: impl Fn(PauliLetter) -> bool) -> u64 {
        self.letters.iter().enumerate().filter(|(_, &l)| pred(l)).fold(0u64, |m, (j, _)| m | (1u64 << j))
    }

    /// Decodes `index` in base 4 (digit `j` is qubit `j`, 0=I 1=X 2=Y 3=Z).
    pub fn from_index(n: usize, mut index: u64) -> Result<Self> {
        let mut letters = Vec::with_capacity(n);
        for _ in 0..n {
            letters.push(PauliLetter::ALL[(index % 4) as usize]);
            index /= 4;
        }
        if index != 0 {
            return Err(contract(format!("index out of range for {n}-qubit Pauli strings")));
        }
        Self::new(letters)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .trim()
            .chars()
            .map(|c| {
                PauliLetter::from_char(c)
                    .ok_or_else(|| Error::Parse { line: 1, msg: format!("invalid Pauli letter '{c}'") })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }
}

/// One weighted term `h * P` of an observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub string: PauliString,
}

/// Real-weighted sum of Pauli strings. Term order is preserved; the QNDM
/// coupling is applied term by term in this order.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    terms: Vec<Term>,
    n: usize,
}

impl Observable {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| contract("an observable needs at least one term"))?;
        let n = first.string.len();
        for (i, t) in terms.iter().enumerate() {
            if t.string.len() != n {
                return Err(contract(format!("term {i} acts on {} qubits, expected {n}", t.string.len())));
            }
            if !t.coeff.is_finite() {
                return Err(contract(format!("term {i} has a non-finite coefficient")));
            }
        }
        Ok(Observable { terms, n })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, S)>,
        S: AsRef<str>,
    {
        let terms = pairs
            .into_iter()
            .map(|(coeff, s)| Ok(Term { coeff, string: s.as_ref().parse()? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Number of terms, `J`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn coeffs(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|t| t.coeff)
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.coeffs().map(f64::abs).sum()
    }

    /// Exact `<psi|M|psi>`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        self.terms.iter().map(|t| Ok(t.coeff * expectation(state, &t.string)?)).sum()
    }

    /// Text form: one `<coeff> <letters>` line per term.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.terms {
            out.push_str(&format!("{} {}\n", t.coeff, t.string));
        }
        out
    }

    /// Parses the text form. Blank lines and lines starting with `#` are
    /// skipped; `;` also separates terms so one-liners like `"1 Z; 0.5 X"` work.
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            for chunk in line.split(';').map(str::trim).filter(|c| !c.is_empty()) {
                let mut parts = chunk.split_whitespace();
                let (Some(c), Some(letters), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("expected '<coeff> <letters>', got '{chunk}'"),
                    });
                };
                let coeff: f64 = c
                    .parse()
                    .map_err(|_| Error::Parse { line: lineno + 1, msg: format!("invalid coefficient '{c}'") })?;
                let string = letters.parse::<PauliString>().map_err(|e| match e {
                    Error::Parse { msg, .. } => Error::Parse { line: lineno + 1, msg },
                    other => other,
                })?;
                terms.push(Term { coeff, string });
            }
        }
        if terms.is_empty() {
            return Err(Error::Parse { line: 0, msg: "no observable terms found".into() });
        }
        Self::new(terms)
    }

    /// Same terms in a different order. `order` must be a permutation of `0..J`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        check_permutation(order, self.len())?;
        Self::new(order.iter().map(|&i| self.terms[i].clone()).collect())
    }
}

pub(crate) fn check_permutation(order: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    if order.len() != len {
        return Err(contract(format!("term order has {} entries, expected {len}", order.len())));
    }
    for &i in order {
        if i >= len || std::mem::replace(&mut seen[i], true) {
            return Err(contract("term order is not a permutation of the observable terms"));
        }
    }
    Ok(())
}

/// Exact `<psi|P|psi>` on the system register of `state`.
pub fn expectation(state: &StateVector, p: &PauliString) -> Result<f64> {
    if p.len() != state.system_qubits() {
        return Err(contract(format!(
            "Pauli string on {} qubits applied to a {}-qubit register",
            p.len(),
            state.system_qubits()
        )));
    }
    let flip = p.flip_mask() as usize;
    let sign = p.sign_mask() as usize;
    let amps = state.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, &a) in amps.iter().enumerate() {
        let term = amps[x ^ flip].conj() * a;
        if (x & sign).count_ones() % 2 == 1 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    Ok((acc * p.y_phase()).re)
}

/// Single-qubit rotations that map the eigenbasis of `p` onto the
/// computational basis: X -> [H], Y -> [S†, H], Z and I -> [].
pub fn basis_change_circuit(p: &PauliString) -> Vec<Gate> {
    let mut gates = Vec::new();
    for (q, &l) in p.letters().iter().enumerate() {
        match l {
            PauliLetter::X => gates.push(Gate::H(q)),
            PauliLetter::Y => {
                gates.push(Gate::Sdg(q));
                gates.push(Gate::H(q));
            }
            PauliLetter::Z | PauliLetter::I => {}
        }
    }
    gates
}

/// Fixed-length bitstring; bit `j` is the outcome on the `j`-th measured qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bitstring {
    bits: u64,
    len: usize,
}

impl Bitstring {
    pub fn new(bits: u64, len: usize) -> Self {
        debug_assert!(len <= 64);
        Bitstring { bits, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn bit(&self, j: usize) -> bool {
        (self.bits >> j) & 1 == 1
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.len {
            write!(f, "{}", if self.bit(j) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() > 64 {
            return Err(Error::Parse { line: 1, msg: "bitstring longer than 64".into() });
        }
        let mut bits = 0u64;
        for (j, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << j,
                _ => return Err(Error::Parse { line: 1, msg: format!("invalid bit '{c}'") }),
            }
        }
        Ok(Bitstring::new(bits, s.len()))
    }
}

/// Eigenvalue of `p` for a post-rotation readout: product of `(-1)^bit`
/// over the non-identity sites.
pub fn eigenvalue_from_bits(p: &PauliString, bits: &Bitstring) -> Result<i32> {
    if bits.len() != p.len() {
        return Err(contract(format!("bitstring of length {} for a {}-qubit Pauli string", bits.len(), p.len())));
    }
    Ok(if (bits.bits() & p.support_mask()).count_ones() % 2 == 0 { 1 } else { -1 })
}

/// Draws `j` distinct non-identity strings on `n` qubits (uniform, without
/// replacement) with i.i.d. `N(0, coeff_std^2)` coefficients.
pub fn random_observable<R: Rng + ?Sized>(n: usize, j: usize, coeff_std: f64, rng: &mut R) -> Result<Observable> {
    if n == 0 || j == 0 {
        return Err(config("random observable needs n >= 1 and J >= 1"));
    }
    if !(coeff_std > 0.0 && coeff_std.is_finite()) {
        return Err(config(format!("coefficient std must be positive, got {coeff_std}")));
    }
    if n > 31 {
        return Err(config(format!("random observables support at most 31 qubits, got {n}")));
    }
    let available = (1u64 << (2 * n)) - 1;
    if j as u64 > available {
        return Err(config(format!(
            "J = {j} exceeds the {available} distinct non-identity Pauli strings on {n} qubits"
        )));
    }
    let picks = rand::seq::index::sample(rng, available as usize, j);
    let normal = Normal::new(0.0, coeff_std).map_err(|e| config(e.to_string()))?;
    let mut terms = Vec::with_capacity(j);
    for idx in picks.iter() {
        let string = PauliString::from_index(n, idx as u64 + 1)?;
        terms.push(Term { coeff: normal.sample(rng), string });
    }
    debug_assert_eq!(terms.iter().map(|t| t.string.clone()).collect::<HashSet<_>>().len(), j);
    Observable::new(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{init_state, StateVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn expectation_on_basis_states() {
        let zero = init_state(1, false).unwrap();
        assert_eq!(expectation(&zero, &ps("Z")).unwrap(), 1.0);
        assert_eq!(expectation(&zero, &ps("X")).unwrap(), 0.0);
        assert_eq!(expectation(&zero, &ps("Y")).unwrap(), 0.0);
    }

    #[test]
    fn expectation_after_rx() {
        let mut st = init_state(1, false).unwrap();
        st.apply_gate(&Gate::Rx { qubit: 0, angle: PI / 3.0 }).unwrap();
        assert!((expectation(&st, &ps("Z")).unwrap() - 0.5).abs() < 1e-15);
        // <Y> = -sin(theta) for exp(-i theta X / 2)|0>
        assert!((expectation(&st, &ps("Y")).unwrap() + (PI / 3.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let st = init_state(2, false).unwrap();
        assert!(matches!(expectation(&st, &ps("Z")), Err(Error::Contract(_))));
    }

    #[test]
    fn basis_change_conventions() {
        assert!(basis_change_circuit(&ps("ZZ")).is_empty());
        assert_eq!(basis_change_circuit(&ps("XI")), vec![Gate::H(0)]);
        assert_eq!(basis_change_circuit(&ps("XY")), vec![Gate::H(0), Gate::Sdg(1), Gate::H(1)]);
    }

    #[test]
    fn eigenvalues() {
        let b = |s: &str| s.parse::<Bitstring>().unwrap();
        assert_eq!(eigenvalue_from_bits(&ps("ZI"), &b("10")).unwrap(), -1);
        assert_eq!(eigenvalue_from_bits(&ps("ZZ"), &b("11")).unwrap(), 1);
        for bits in ["00", "01", "10", "11"] {
            assert_eq!(eigenvalue_from_bits(&ps("II"), &b(bits)).unwrap(), 1);
        }
        assert!(eigenvalue_from_bits(&ps("ZZ"), &b("1")).is_err());
    }

    #[test]
    fn sampled_eigenvalues_match_exact_xy() {
        // Oracle: exact expectation; sampled mean after basis change must agree.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = ps("XY");
        for _ in 0..10 {
            let st = StateVector::random(2, &mut rng).unwrap();
            let exact = expectation(&st, &p).unwrap();
            let mut rotated = st.clone();
            rotated.apply_circuit(&basis_change_circuit(&p)).unwrap();
            let n = 40_000;
            let shots = rotated.sample_bits(&[0, 1], n, &mut rng).unwrap();
            let mean = shots.iter().map(|b| eigenvalue_from_bits(&p, b).unwrap() as f64).sum::<f64>() / n as f64;
            assert!((mean - exact).abs() < 4.0 / (n as f64).sqrt(), "{mean} vs {exact}");
        }
    }

    #[test]
    fn random_observable_exhausts_single_qubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let obs = random_observable(1, 3, 5.0, &mut rng).unwrap();
        let mut letters: Vec<_> = obs.terms().iter().map(|t| t.string.to_string()).collect();
        letters.sort();
        assert_eq!(letters, ["X", "Y", "Z"]);
        assert!(matches!(random_observable(1, 4, 5.0, &mut rng), Err(Error::Config(_))));
    }

    #[test]
    fn random_observable_is_seeded() {
        let a = random_observable(4, 10, 5.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = random_observable(4, 10, 5.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.terms().iter().all(|t| !t.string.is_identity()));
    }

    #[test]
    fn random_coefficients_half_normal_mean() {
        // E|h| = std * sqrt(2/pi) for h ~ N(0, std^2).
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut total = 0.0;
        let mut count = 0usize;
        for _ in 0..10_000 {
            let obs = random_observable(10, 24, 5.0, &mut rng).unwrap();
            total += obs.abs_coeff_sum();
            count += obs.len();
        }
        let mean = total / count as f64;
        let expected = 5.0 * (2.0 / PI).sqrt();
        assert!((mean / expected - 1.0).abs() < 0.02, "{mean} vs {expected}");
    }

    #[test]
    fn text_round_trip_and_comments() {
        let obs = Observable::parse("# header\n2.5 XZIY\n\n-1.25 IIZZ\n").unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs.num_qubits(), 4);
        assert_eq!(Observable::parse(&obs.to_text()).unwrap(), obs);
        assert_eq!(Observable::parse("1 Z; 0.5 X").unwrap().len(), 2);
        assert!(matches!(Observable::parse("1 ZQ"), Err(Error::Parse { line: 1, .. })));
        assert!(Observable::parse("1 Z\n2 ZZ").is_err());
    }
}
