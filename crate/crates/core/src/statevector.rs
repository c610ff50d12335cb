//! Dense statevector simulation over `n` system qubits plus an optional detector.
//!
//! Amplitude index bit `q` is qubit `q`. When a detector is present it is the
//! highest-index qubit, `n`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal, WeightedIndex};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{config, contract, Result};
use crate::pauli::{Bitstring, PauliString};

/// Largest total qubit count the engine accepts.
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// `exp(-i angle X / 2)`
    Rx {
        qubit: usize,
        angle: f64,
    },
    /// `exp(-i angle Y / 2)`
    Ry {
        qubit: usize,
        angle: f64,
    },
    /// `exp(-i angle Z / 2)`
    Rz {
        qubit: usize,
        angle: f64,
    },
    H(usize),
    S(usize),
    Sdg(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    /// `exp(i angle Z_D ⊗ P)` between the detector and the system register.
    DetectorCoupling {
        angle: f64,
        string: PauliString,
    },
}

impl Gate {
    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Rx { qubit, angle } => Gate::Rx { qubit: *qubit, angle: -angle },
            Gate::Ry { qubit, angle } => Gate::Ry { qubit: *qubit, angle: -angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit: *qubit, angle: -angle },
            Gate::H(q) => Gate::H(*q),
            Gate::S(q) => Gate::Sdg(*q),
            Gate::Sdg(q) => Gate::S(*q),
            Gate::Cnot { control, target } => Gate::Cnot { control: *control, target: *target },
            Gate::DetectorCoupling { angle, string } => {
                Gate::DetectorCoupling { angle: -angle, string: string.clone() }
            }
        }
    }
}

/// Applied-gate counter, split by gate class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GateTally {
    pub rotations: u64,
    pub cliffords: u64,
    pub cnots: u64,
    pub couplings: u64,
}

impl GateTally {
    pub fn total(&self) -> u64 {
        self.rotations + self.cliffords + self.cnots + self.couplings
    }

    fn record(&mut self, gate: &Gate) {
        match gate {
            Gate::Rx { .. } | Gate::Ry { .. } | Gate::Rz { .. } => self.rotations += 1,
            Gate::H(_) | Gate::S(_) | Gate::Sdg(_) => self.cliffords += 1,
            Gate::Cnot { .. } => self.cnots += 1,
            Gate::DetectorCoupling { .. } => self.couplings += 1,
        }
    }
}

impl std::ops::Sub for GateTally {
    type Output = GateTally;

    fn sub(self, rhs: GateTally) -> GateTally {
        GateTally {
            rotations: self.rotations - rhs.rotations,
            cliffords: self.cliffords - rhs.cliffords,
            cnots: self.cnots - rhs.cnots,
            couplings: self.couplings - rhs.couplings,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateVector {
    amps: Vec<Complex64>,
    num_qubits: usize,
    detector: Option<usize>,
    tally: GateTally,
}

/// `|0...0>` on `n` system qubits; with a detector, one extra qubit in `|+>`.
pub fn init_state(n: usize, with_detector: bool) -> Result<StateVector> {
    if n == 0 {
        return Err(config("a register needs at least one system qubit"));
    }
    let total = n + usize::from(with_detector);
    if total > MAX_QUBITS {
        return Err(config(format!("{total} qubits exceeds the engine limit of {MAX_QUBITS}")));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << total];
    if with_detector {
        amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        amps[1 << n] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    } else {
        amps[0] = Complex64::new(1.0, 0.0);
    }
    Ok(StateVector { amps, num_qubits: total, detector: with_detector.then_some(n), tally: GateTally::default() })
}

impl StateVector {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(mut amps: Vec<Complex64>, detector: bool) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(contract(format!("amplitude count {len} is not a power of two >= 2")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if detector && num_qubits < 2 {
            return Err(contract("a detector state needs at least one system qubit"));
        }
        let norm = amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(contract("amplitudes have zero or non-finite norm"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(StateVector { amps, num_qubits, detector: detector.then_some(num_qubits - 1), tally: GateTally::default() })
    }

    /// Random state with i.i.d. complex Gaussian amplitudes (Haar-distributed after
    /// normalization). No detector.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(config(format!("invalid qubit count {num_qubits}")));
        }
        let amps = (0..1usize << num_qubits)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::from_amplitudes(amps, false)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn system_qubits(&self) -> usize {
        self.num_qubits - usize::from(self.detector.is_some())
    }

    pub fn detector(&self) -> Option<usize> {
        self.detector
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// Gates applied since construction (or the last [`reset_tally`](Self::reset_tally)).
    pub fn tally(&self) -> GateTally {
        self.tally
    }

    pub fn reset_tally(&mut self) {
        self.tally = GateTally::default();
    }

    pub fn apply_circuit(&mut self, gates: &[Gate]) -> Result<()> {
        gates.iter().try_for_each(|g| self.apply_gate(g))
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match gate {
            Gate::Rx { qubit, angle } => {
                let (c, s) = self.half_angle(*qubit, *angle)?;
                let ms = Complex64::new(0.0, -s);
                self.apply_1q(*qubit, [c.into(), ms, ms, c.into()]);
            }
            Gate::Ry { qubit, angle } => {
                let (c, s) = self.half_angle(*qubit, *angle)?;
                self.apply_1q(*qubit, [c.into(), (-s).into(), s.into(), c.into()]);
            }
            Gate::Rz { qubit, angle } => {
                let (c, s) = self.half_angle(*qubit, *angle)?;
                self.apply_diag(*qubit, Complex64::new(c, -s), Complex64::new(c, s));
            }
            Gate::H(q) => {
                self.check_qubit(*q)?;
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(*q, [h, h, h, -h]);
            }
            Gate::S(q) => {
                self.check_qubit(*q)?;
                self.apply_diag(*q, Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
            }
            Gate::Sdg(q) => {
                self.check_qubit(*q)?;
                self.apply_diag(*q, Complex64::new(1.0, 0.0), Complex64::new(0.0, -1.0));
            }
            Gate::Cnot { control, target } => {
                self.check_qubit(*control)?;
                self.check_qubit(*target)?;
                if control == target {
                    return Err(contract("CNOT control and target coincide"));
                }
                let cbit = 1usize << control;
                let tbit = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
            Gate::DetectorCoupling { angle, string } => {
                self.apply_detector_coupling(*angle, string)?;
                return Ok(());
            }
        }
        self.tally.record(gate);
        Ok(())
    }

    /// Applies `exp(i a Z_D ⊗ P) = cos(a) 1 + i sin(a) Z_D ⊗ P`.
    pub fn apply_detector_coupling(&mut self, angle: f64, p: &PauliString) -> Result<()> {
        let detector =
            self.detector.ok_or_else(|| contract("detector coupling applied to a state without a detector"))?;
        if p.len() != detector {
            return Err(contract(format!("coupling string on {} qubits, system register has {detector}", p.len())));
        }
        if !angle.is_finite() {
            return Err(contract("non-finite coupling angle"));
        }
        let flip = p.flip_mask() as usize;
        let sign = p.sign_mask() as usize | (1usize << detector);
        let (s, c) = angle.sin_cos();
        // i * sin(a) * i^{#Y}
        let k = Complex64::new(0.0, s) * p.y_phase();
        let parity = |x: usize| if (x & sign).count_ones() % 2 == 0 { 1.0 } else { -1.0 };

        if flip == 0 {
            for (x, a) in self.amps.iter_mut().enumerate() {
                *a *= c + k * parity(x);
            }
        } else {
            // (Z⊗P)|x> = phase(x) |x ^ flip>; pairs (x, x ^ flip) mix only with each other.
            let top = 1usize << (63 - (flip as u64).leading_zeros());
            for x in 0..self.amps.len() {
                if x & top != 0 {
                    continue;
                }
                let y = x ^ flip;
                let (ax, ay) = (self.amps[x], self.amps[y]);
                self.amps[x] = ax * c + k * parity(y) * ay;
                self.amps[y] = ay * c + k * parity(x) * ax;
            }
        }
        self.tally.couplings += 1;
        Ok(())
    }

    /// Marginal probability of `outcome` on `qubit`.
    pub fn exact_probability(&self, qubit: usize, outcome: bool) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let want = if outcome { bit } else { 0 };
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & bit == want).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Probability that the bits selected by `mask` have even parity.
    pub fn even_parity_probability(&self, mask: u64) -> f64 {
        let mask = mask as usize;
        self.amps.iter().enumerate().filter(|(i, _)| (i & mask).count_ones() % 2 == 0).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Off-diagonal `<0|rho_D|1>` of the detector's reduced density matrix.
    pub fn detector_coherence(&self) -> Result<Complex64> {
        let d = self.detector.ok_or_else(|| contract("state has no detector qubit"))?;
        let bit = 1usize << d;
        Ok((0..bit).map(|x| self.amps[x] * self.amps[x | bit].conj()).sum())
    }

    /// Exact joint distribution over `qubits`; outcome bit `j` is `qubits[j]`.
    pub fn marginal_distribution(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        if qubits.len() > 20 {
            return Err(contract("marginal over more than 20 qubits"));
        }
        let mut probs = vec![0.0; 1 << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let outcome = qubits.iter().enumerate().fold(0usize, |o, (j, &q)| o | (((i >> q) & 1) << j));
            probs[outcome] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// `shots` i.i.d. measurement records on `qubits`. The state is not collapsed.
    pub fn sample_bits<R: Rng + ?Sized>(&self, qubits: &[usize], shots: usize, rng: &mut R) -> Result<Vec<Bitstring>> {
        if shots == 0 {
            return Err(contract("shot count must be >= 1"));
        }
        let probs = self.marginal_distribution(qubits)?;
        let dist = WeightedIndex::new(&probs).map_err(|e| contract(e.to_string()))?;
        Ok((0..shots).map(|_| Bitstring::new(dist.sample(rng) as u64, qubits.len())).collect())
    }

    /// Outcome histogram for `shots` measurements of `qubits`, drawn as a
    /// multinomial. Same distribution as counting [`sample_bits`](Self::sample_bits).
    pub fn sample_counts<R: Rng + ?Sized>(&self, qubits: &[usize], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
        if shots == 0 {
            return Err(contract("shot count must be >= 1"));
        }
        let probs = self.marginal_distribution(qubits)?;
        Ok(multinomial(&probs, shots, rng))
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(contract(format!("qubit {q} out of range for a {}-qubit state", self.num_qubits)));
        }
        Ok(())
    }

    fn half_angle(&self, qubit: usize, angle: f64) -> Result<(f64, f64)> {
        self.check_qubit(qubit)?;
        if !angle.is_finite() {
            return Err(contract("non-finite rotation angle"));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        Ok((c, s))
    }

    /// Row-major 2x2 matrix `[m00, m01, m10, m11]` on `qubit`.
    fn apply_1q(&mut self, qubit: usize, m: [Complex64; 4]) {
        let bit = 1usize << qubit;
        for base in (0..self.amps.len()).step_by(bit << 1) {
            for i in base..base + bit {
                let a0 = self.amps[i];
                let a1 = self.amps[i | bit];
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[i | bit] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    fn apply_diag(&mut self, qubit: usize, d0: Complex64, d1: Complex64) {
        let bit = 1usize << qubit;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & bit == 0 { d0 } else { d1 };
        }
    }
}

/// Multinomial draw by sequential conditional binomials.
pub(crate) fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining;
            break;
        }
        let q = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 0.0 };
        let k = binomial(remaining, q, rng);
        counts[i] = k;
        remaining -= k;
        mass_left -= p;
    }
    counts
}

/// Binomial draw tolerant of probabilities a few ulps outside `[0, 1]`.
pub(crate) fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    let p = p.clamp(0.0, 1.0);
    if p == 0.0 {
        0
    } else if p == 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p in (0,1)").sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliLetter;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    type Mat = Vec<Vec<Complex64>>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn eye(d: usize) -> Mat {
        (0..d).map(|i| (0..d).map(|j| c((i == j) as u8 as f64, 0.0)).collect()).collect()
    }

    fn matmul(a: &Mat, b: &Mat) -> Mat {
        let d = a.len();
        (0..d).map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
    }

    fn apply(m: &Mat, v: &[Complex64]) -> Vec<Complex64> {
        m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Dense operator of a single-qubit matrix on `qubit` of a `q`-qubit register.
    fn embed_1q(m: [[Complex64; 2]; 2], qubit: usize, q: usize) -> Mat {
        let d = 1 << q;
        let mut out = vec![vec![c(0.0, 0.0); d]; d];
        for i in 0..d {
            for j in 0..d {
                if (i ^ j) & !(1 << qubit) != 0 {
                    continue;
                }
                out[i][j] = m[(i >> qubit) & 1][(j >> qubit) & 1];
            }
        }
        out
    }

    fn pauli_1q(l: PauliLetter) -> [[Complex64; 2]; 2] {
        match l {
            PauliLetter::I => [[c(1., 0.), c(0., 0.)], [c(0., 0.), c(1., 0.)]],
            PauliLetter::X => [[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]],
            PauliLetter::Y => [[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]],
            PauliLetter::Z => [[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]],
        }
    }

    /// Dense matrix of `gate` built from first principles.
    fn dense(gate: &Gate, q: usize) -> Mat {
        let r = |axis: PauliLetter, angle: f64| {
            let p = pauli_1q(axis);
            let (s, co) = (angle / 2.0).sin_cos();
            let mut m = [[c(0., 0.); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] = p[i][j] * c(0., -s) + if i == j { c(co, 0.) } else { c(0., 0.) };
                }
            }
            m
        };
        let h = FRAC_1_SQRT_2;
        match gate {
            Gate::Rx { qubit, angle } => embed_1q(r(PauliLetter::X, *angle), *qubit, q),
            Gate::Ry { qubit, angle } => embed_1q(r(PauliLetter::Y, *angle), *qubit, q),
            Gate::Rz { qubit, angle } => embed_1q(r(PauliLetter::Z, *angle), *qubit, q),
            Gate::H(qb) => embed_1q([[c(h, 0.), c(h, 0.)], [c(h, 0.), c(-h, 0.)]], *qb, q),
            Gate::S(qb) => embed_1q([[c(1., 0.), c(0., 0.)], [c(0., 0.), c(0., 1.)]], *qb, q),
            Gate::Sdg(qb) => embed_1q([[c(1., 0.), c(0., 0.)], [c(0., 0.), c(0., -1.)]], *qb, q),
            Gate::Cnot { control, target } => {
                let d = 1 << q;
                let mut m = vec![vec![c(0., 0.); d]; d];
                for j in 0..d {
                    let i = if j >> control & 1 == 1 { j ^ (1 << target) } else { j };
                    m[i][j] = c(1., 0.);
                }
                m
            }
            Gate::DetectorCoupling { angle, string } => {
                // cos(a) 1 + i sin(a) Z_D ⊗ P as a product of embedded single-qubit factors.
                let mut zp = embed_1q(pauli_1q(PauliLetter::Z), q - 1, q);
                for (j, &l) in string.letters().iter().enumerate() {
                    zp = matmul(&zp, &embed_1q(pauli_1q(l), j, q));
                }
                let id = eye(1 << q);
                let (s, co) = angle.sin_cos();
                id.iter()
                    .zip(&zp)
                    .map(|(ri, rz)| ri.iter().zip(rz).map(|(a, b)| a * co + b * c(0., s)).collect())
                    .collect()
            }
        }
    }

    #[test]
    fn init_states() {
        let s = init_state(1, false).unwrap();
        assert_eq!(s.amplitudes(), &[c(1., 0.), c(0., 0.)]);
        let d = init_state(1, true).unwrap();
        assert!((d.detector_coherence().unwrap() - c(0.5, 0.)).norm() < 1e-15);
        let big = init_state(10, false).unwrap();
        assert_eq!(big.dim(), 1024);
        assert!((big.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(init_state(0, false).is_err());
    }

    #[test]
    fn simple_circuits() {
        let mut s = init_state(1, false).unwrap();
        s.apply_gate(&Gate::H(0)).unwrap();
        assert!((s.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(FRAC_1_SQRT_2, 0.)).norm() < 1e-15);

        let mut s = init_state(1, false).unwrap();
        s.apply_gate(&Gate::Rx { qubit: 0, angle: PI }).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(0., -1.)).norm() < 1e-15);

        // (|00> + |10>)/sqrt2 in letter order, i.e. qubit 0 in |+>.
        let mut s = init_state(2, false).unwrap();
        s.apply_circuit(&[Gate::H(0), Gate::Cnot { control: 0, target: 1 }]).unwrap();
        let a = s.amplitudes();
        assert!((a[0] - c(FRAC_1_SQRT_2, 0.)).norm() < 1e-15);
        assert!((a[3] - c(FRAC_1_SQRT_2, 0.)).norm() < 1e-15);
        assert_eq!(s.tally().total(), 2);
    }

    #[test]
    fn invalid_indices_rejected() {
        let mut s = init_state(2, false).unwrap();
        assert!(s.apply_gate(&Gate::H(2)).is_err());
        assert!(s.apply_gate(&Gate::Cnot { control: 0, target: 0 }).is_err());
        let z: PauliString = "ZZ".parse().unwrap();
        assert!(s.apply_detector_coupling(0.1, &z).is_err());
    }

    #[test]
    fn coupling_phases_on_eigenstates() {
        let z: PauliString = "Z".parse().unwrap();
        let a = 0.37;
        // |0>_S |0>_D  -> joint eigenvalue +1
        let mut s = StateVector::from_amplitudes(vec![c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)], true).unwrap();
        s.apply_detector_coupling(a, &z).unwrap();
        assert!((s.amplitudes()[0] - Complex64::from_polar(1.0, a)).norm() < 1e-15);
        // |0>_S |1>_D  -> eigenvalue -1
        let mut s = StateVector::from_amplitudes(vec![c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)], true).unwrap();
        s.apply_detector_coupling(a, &z).unwrap();
        assert!((s.amplitudes()[2] - Complex64::from_polar(1.0, -a)).norm() < 1e-15);
        // a = 0 is the identity
        let mut s = init_state(1, true).unwrap();
        let before = s.amplitudes().to_vec();
        s.apply_detector_coupling(0.0, &z).unwrap();
        assert_eq!(s.amplitudes(), before.as_slice());
    }

    #[test]
    fn probabilities_and_sampling() {
        let mut s = init_state(1, false).unwrap();
        assert_eq!(s.exact_probability(0, true).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shots = s.sample_bits(&[0], 500, &mut rng).unwrap();
        assert!(shots.iter().all(|b| b.to_string() == "0"));

        s.apply_gate(&Gate::H(0)).unwrap();
        assert!((s.exact_probability(0, false).unwrap() - 0.5).abs() < 1e-15);
        let n = 100_000;
        let shots = s.sample_bits(&[0], n, &mut rng).unwrap();
        let zeros = shots.iter().filter(|b| !b.bit(0)).count() as f64 / n as f64;
        // 3 sigma of a fair Bernoulli mean
        assert!((zeros - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());

        let again = s.sample_bits(&[0], 1000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let again2 = s.sample_bits(&[0], 1000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(again, again2);
    }

    #[test]
    fn counts_match_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = StateVector::random(3, &mut rng).unwrap();
        let probs = s.marginal_distribution(&[0, 2]).unwrap();
        let n = 200_000u64;
        let counts = s.sample_counts(&[0, 2], n, &mut rng).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), n);
        for (p, k) in probs.iter().zip(&counts) {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*k as f64 / n as f64 - p).abs() < 5.0 * se + 1e-12);
        }
    }

    fn arb_gate(q: usize) -> impl Strategy<Value = Gate> {
        let angle = -7.0f64..7.0;
        let sys = q - 1;
        prop_oneof![
            (0..q, angle.clone()).prop_map(|(qubit, angle)| Gate::Rx { qubit, angle }),
            (0..q, angle.clone()).prop_map(|(qubit, angle)| Gate::Ry { qubit, angle }),
            (0..q, angle.clone()).prop_map(|(qubit, angle)| Gate::Rz { qubit, angle }),
            (0..q).prop_map(Gate::H),
            (0..q).prop_map(Gate::S),
            (0..q).prop_map(Gate::Sdg),
            (0..q, 1..q).prop_map(move |(c, d)| Gate::Cnot { control: c, target: (c + d) % q }),
            (angle, proptest::collection::vec(0usize..4, sys)).prop_map(|(angle, ls)| {
                let letters = ls.into_iter().map(|i| PauliLetter::ALL[i]).collect();
                Gate::DetectorCoupling { angle, string: PauliString::new(letters).unwrap() }
            }),
        ]
    }

    proptest! {
        #[test]
        fn engine_matches_dense_unitaries(
            (q, seed, gates) in (2usize..=3).prop_flat_map(|q| {
                (Just(q), any::<u64>(), proptest::collection::vec(arb_gate(q), 1..6))
            }),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start = StateVector::random(q, &mut rng).unwrap();
            let mut st = StateVector::from_amplitudes(start.amplitudes().to_vec(), true).unwrap();
            let mut reference = start.amplitudes().to_vec();
            for g in &gates {
                st.apply_gate(g).unwrap();
                reference = apply(&dense(g, q), &reference);
                prop_assert!((st.norm_sqr() - 1.0).abs() < 1e-10);
            }
            for (a, b) in st.amplitudes().iter().zip(&reference) {
                prop_assert!((a - b).norm() < 1e-12);
            }
            prop_assert_eq!(st.tally().total(), gates.len() as u64);
        }

        #[test]
        fn coupling_inverse_is_identity(seed in any::<u64>(), a in -4.0f64..4.0, ls in proptest::collection::vec(0usize..4, 3)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let start = StateVector::random(4, &mut rng).unwrap();
            let mut st = StateVector::from_amplitudes(start.amplitudes().to_vec(), true).unwrap();
            let p = PauliString::new(ls.into_iter().map(|i| PauliLetter::ALL[i]).collect()).unwrap();
            st.apply_detector_coupling(a, &p).unwrap();
            st.apply_detector_coupling(-a, &p).unwrap();
            for (x, y) in st.amplitudes().iter().zip(start.amplitudes()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }

        #[test]
        fn marginals_sum_to_one(seed in any::<u64>(), qubit in 0usize..4) {
            let st = StateVector::random(4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let p0 = st.exact_probability(qubit, false).unwrap();
            let p1 = st.exact_probability(qubit, true).unwrap();
            prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
        }
    }
}
