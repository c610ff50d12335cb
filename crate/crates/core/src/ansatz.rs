//! Layered parameterized circuits: per layer, one rotation on every qubit
//! followed by a nearest-neighbour CNOT chain `C_0 NOT_1 ... C_{n-2} NOT_{n-1}`.

use std::fmt;
use std::ops::{Deref, Index};

use rand::Rng;
use std::f64::consts::TAU;

use crate::error::{config, contract, Error, Result};
use crate::statevector::Gate;

/// Generator of a parameterized single-qubit rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn rotation(self, qubit: usize, angle: f64) -> Gate {
        match self {
            Axis::X => Gate::Rx { qubit, angle },
            Axis::Y => Gate::Ry { qubit, angle },
            Axis::Z => Gate::Rz { qubit, angle },
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredAnsatz {
    n: usize,
    m: usize,
    /// Layer-major: the rotation axis of qubit `i` in layer `j` is `axes[j * n + i]`.
    axes: Vec<Axis>,
}

/// Flat parameter vector; entry `j * n + i` drives qubit `i` of layer `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(contract("parameter vector has non-finite entries"));
        }
        Ok(ParamVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `theta + amount * e_direction`, leaving `self` untouched.
    pub fn shift(&self, direction: usize, amount: f64) -> Result<ParamVector> {
        if direction >= self.0.len() {
            return Err(contract(format!("direction {direction} out of range for {} parameters", self.0.len())));
        }
        let mut out = self.0.clone();
        out[direction] += amount;
        Ok(ParamVector(out))
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl LayeredAnsatz {
    pub fn new(n: usize, m: usize, axes: Vec<Axis>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(config("an ansatz needs n >= 1 qubits and m >= 1 layers"));
        }
        if axes.len() != n * m {
            return Err(contract(format!("expected {} axes, got {}", n * m, axes.len())));
        }
        Ok(LayeredAnsatz { n, m, axes })
    }

    /// Every rotation about the same axis.
    pub fn uniform(n: usize, m: usize, axis: Axis) -> Result<Self> {
        Self::new(n, m, vec![axis; n * m])
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_layers(&self) -> usize {
        self.m
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Number of parameters, `m * n`.
    pub fn dim(&self) -> usize {
        self.n * self.m
    }

    pub fn param_index(&self, layer: usize, qubit: usize) -> usize {
        layer * self.n + qubit
    }

    /// Gates in `U(theta)`: `m (2n - 1)` (rotations plus CNOTs).
    pub fn gate_count(&self) -> u64 {
        gate_count(self.n, self.m)
    }

    /// `U(theta)` as a gate list, or its exact inverse when `dagger` is set.
    pub fn build_circuit(&self, theta: &ParamVector, dagger: bool) -> Result<Vec<Gate>> {
        if theta.len() != self.dim() {
            return Err(contract(format!(
                "parameter vector has {} entries, ansatz expects {}",
                theta.len(),
                self.dim()
            )));
        }
        let mut gates = Vec::with_capacity(self.gate_count() as usize);
        for layer in 0..self.m {
            for q in 0..self.n {
                let idx = self.param_index(layer, q);
                gates.push(self.axes[idx].rotation(q, theta[idx]));
            }
            for q in 1..self.n {
                gates.push(Gate::Cnot { control: q - 1, target: q });
            }
        }
        if dagger {
            gates.reverse();
            gates.iter_mut().for_each(|g| *g = g.inverse());
        }
        Ok(gates)
    }

    /// Text form: header `n m seed`, then one line of `n` axis letters per layer.
    pub fn to_text(&self, seed: u64) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.m, seed);
        for layer in self.axes.chunks(self.n) {
            out.extend(layer.iter().map(|a| a.as_char()));
            out.push('\n');
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output, returning the ansatz and its seed.
    pub fn parse(text: &str) -> Result<(Self, u64)> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty ansatz file".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse { line: hline, msg };
        if fields.len() != 3 {
            return Err(parse_err(format!("expected header 'n m seed', got '{header}'")));
        }
        let n: usize = fields[0].parse().map_err(|_| parse_err("bad n".into()))?;
        let m: usize = fields[1].parse().map_err(|_| parse_err("bad m".into()))?;
        let seed: u64 = fields[2].parse().map_err(|_| parse_err("bad seed".into()))?;
        let mut axes = Vec::with_capacity(n * m);
        for _ in 0..m {
            let (lineno, row) =
                lines.next().ok_or(Error::Parse { line: hline, msg: format!("expected {m} layer lines") })?;
            if row.chars().count() != n {
                return Err(Error::Parse { line: lineno, msg: format!("expected {n} axis letters") });
            }
            for c in row.chars() {
                axes.push(Axis::from_char(c).ok_or(Error::Parse { line: lineno, msg: format!("invalid axis '{c}'") })?);
            }
        }
        if let Some((lineno, _)) = lines.next() {
            return Err(Error::Parse { line: lineno, msg: "trailing content".into() });
        }
        Ok((Self::new(n, m, axes)?, seed))
    }
}

impl fmt::Display for LayeredAnsatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, layer) in self.axes.chunks(self.n).enumerate() {
            if j > 0 {
                write!(f, "|")?;
            }
            for a in layer {
                write!(f, "{}", a.as_char())?;
            }
        }
        Ok(())
    }
}

/// `k = m (2n - 1)`.
pub fn gate_count(n: usize, m: usize) -> u64 {
    (m * (2 * n).saturating_sub(1)) as u64
}

/// Smallest layer count whose gate count reaches `k_target`.
pub fn layers_for_target_k(n: usize, k_target: u64) -> Result<usize> {
    if n == 0 {
        return Err(config("n must be >= 1"));
    }
    let per_layer = (2 * n - 1) as u64;
    Ok((k_target.div_ceil(per_layer)).max(1) as usize)
}

/// Uniform random axes and parameters in `[0, 2π)`.
pub fn random_ansatz<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<(LayeredAnsatz, ParamVector)> {
    if n == 0 || m == 0 {
        return Err(config("an ansatz needs n >= 1 qubits and m >= 1 layers"));
    }
    let axes = (0..n * m).map(|_| Axis::ALL[rng.gen_range(0..3)]).collect();
    let theta = (0..n * m).map(|_| rng.gen_range(0.0..TAU)).collect();
    Ok((LayeredAnsatz::new(n, m, axes)?, ParamVector(theta)))
}
