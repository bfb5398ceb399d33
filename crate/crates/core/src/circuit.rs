//! Gate set and circuit representation.
//!
//! Qubit ordering is little-endian: qubit `q` is bit `q` of a basis index.
//! Rotations are `R_a(θ) = exp(-iθσ_a/2)` and `Phase(λ) = diag(1, e^{iλ})`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::MAX_PURE_QUBITS;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    Phase,
    CX,
    CZ,
    CY,
}

impl GateKind {
    pub const ALL: [GateKind; 16] = [
        GateKind::I,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::H,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Phase,
        GateKind::CX,
        GateKind::CZ,
        GateKind::CY,
    ];

    pub fn num_qubits(self) -> usize {
        match self {
            GateKind::CX | GateKind::CZ | GateKind::CY => 2,
            _ => 1,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Phase => 1,
            _ => 0,
        }
    }

    pub fn is_parameterized(self) -> bool {
        self.num_params() == 1
    }

    /// Serialized name.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::I => "i",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Phase => "phase",
            GateKind::CX => "cx",
            GateKind::CZ => "cz",
            GateKind::CY => "cy",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A gate applied to one or two qubits. For two-qubit gates `qubits()[0]`
/// is the control and `qubits()[1]` the target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: [usize; 2],
    angle: f64,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize], params: &[f64]) -> Result<Gate> {
        if qubits.len() != kind.num_qubits() {
            return Err(Error::invalid(format!(
                "gate {kind} acts on {} qubit(s), got {}",
                kind.num_qubits(),
                qubits.len()
            )));
        }
        if params.len() != kind.num_params() {
            return Err(Error::invalid(format!(
                "gate {kind} takes {} parameter(s), got {}",
                kind.num_params(),
                params.len()
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::invalid(format!("gate {kind} needs two distinct qubits")));
        }
        if let Some(a) = params.first() {
            if !a.is_finite() {
                return Err(Error::invalid(format!("gate {kind} has non-finite angle")));
            }
        }
        let mut q = [0; 2];
        q[..qubits.len()].copy_from_slice(qubits);
        Ok(Gate { kind, qubits: q, angle: params.first().copied().unwrap_or(0.0) })
    }

    fn one(kind: GateKind, q: usize) -> Gate {
        Gate { kind, qubits: [q, 0], angle: 0.0 }
    }

    fn rot(kind: GateKind, q: usize, angle: f64) -> Gate {
        Gate { kind, qubits: [q, 0], angle }
    }

    fn two(kind: GateKind, control: usize, target: usize) -> Gate {
        assert_ne!(control, target, "two-qubit gate on a single qubit");
        Gate { kind, qubits: [control, target], angle: 0.0 }
    }

    pub fn i(q: usize) -> Gate {
        Gate::one(GateKind::I, q)
    }
    pub fn x(q: usize) -> Gate {
        Gate::one(GateKind::X, q)
    }
    pub fn y(q: usize) -> Gate {
        Gate::one(GateKind::Y, q)
    }
    pub fn z(q: usize) -> Gate {
        Gate::one(GateKind::Z, q)
    }
    pub fn h(q: usize) -> Gate {
        Gate::one(GateKind::H, q)
    }
    pub fn s(q: usize) -> Gate {
        Gate::one(GateKind::S, q)
    }
    pub fn sdg(q: usize) -> Gate {
        Gate::one(GateKind::Sdg, q)
    }
    pub fn t(q: usize) -> Gate {
        Gate::one(GateKind::T, q)
    }
    pub fn tdg(q: usize) -> Gate {
        Gate::one(GateKind::Tdg, q)
    }
    pub fn rx(q: usize, theta: f64) -> Gate {
        Gate::rot(GateKind::Rx, q, theta)
    }
    pub fn ry(q: usize, theta: f64) -> Gate {
        Gate::rot(GateKind::Ry, q, theta)
    }
    pub fn rz(q: usize, theta: f64) -> Gate {
        Gate::rot(GateKind::Rz, q, theta)
    }
    pub fn phase(q: usize, lambda: f64) -> Gate {
        Gate::rot(GateKind::Phase, q, lambda)
    }
    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::two(GateKind::CX, control, target)
    }
    pub fn cz(control: usize, target: usize) -> Gate {
        Gate::two(GateKind::CZ, control, target)
    }
    pub fn cy(control: usize, target: usize) -> Gate {
        Gate::two(GateKind::CY, control, target)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.num_qubits()]
    }

    pub fn params(&self) -> &[f64] {
        if self.kind.is_parameterized() {
            std::slice::from_ref(&self.angle)
        } else {
            &[]
        }
    }

    pub fn angle(&self) -> Option<f64> {
        self.kind.is_parameterized().then_some(self.angle)
    }

    /// Replaces the angle of a parameterized gate; no-op otherwise.
    pub fn set_angle(&mut self, angle: f64) {
        if self.kind.is_parameterized() {
            self.angle = angle;
        }
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().iter().copied().max().unwrap_or(0)
    }
}

/// Unitary of a gate. `Two` uses the local basis index
/// `b(qubits[0]) + 2 * b(qubits[1])`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateMatrix {
    Single([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

impl GateMatrix {
    pub fn dim(&self) -> usize {
        match self {
            GateMatrix::Single(_) => 2,
            GateMatrix::Two(_) => 4,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        match self {
            GateMatrix::Single(m) => m[r][c],
            GateMatrix::Two(m) => m[r][c],
        }
    }

    /// Largest elementwise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                let expect = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - expect).norm());
            }
        }
        worst
    }
}

fn diag(a: Complex64, b: Complex64) -> [[Complex64; 2]; 2] {
    [[a, ZERO], [ZERO, b]]
}

fn single_matrix(kind: GateKind, angle: f64) -> [[Complex64; 2]; 2] {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    match kind {
        GateKind::I => diag(ONE, ONE),
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Y => [[ZERO, -I], [I, ZERO]],
        GateKind::Z => diag(ONE, -ONE),
        GateKind::H => [[h, h], [h, -h]],
        GateKind::S => diag(ONE, I),
        GateKind::Sdg => diag(ONE, -I),
        GateKind::T => diag(ONE, Complex64::from_polar(1.0, FRAC_PI_4)),
        GateKind::Tdg => diag(ONE, Complex64::from_polar(1.0, -FRAC_PI_4)),
        GateKind::Rx => {
            let (s, c) = (angle / 2.0).sin_cos();
            let c = Complex64::new(c, 0.0);
            let ms = Complex64::new(0.0, -s);
            [[c, ms], [ms, c]]
        }
        GateKind::Ry => {
            let (s, c) = (angle / 2.0).sin_cos();
            [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
        }
        GateKind::Rz => diag(Complex64::from_polar(1.0, -angle / 2.0), Complex64::from_polar(1.0, angle / 2.0)),
        GateKind::Phase => diag(ONE, Complex64::from_polar(1.0, angle)),
        GateKind::CX => single_matrix(GateKind::X, 0.0),
        GateKind::CZ => single_matrix(GateKind::Z, 0.0),
        GateKind::CY => single_matrix(GateKind::Y, 0.0),
    }
}

/// Unitary matrix of `g`.
pub fn gate_matrix(g: &Gate) -> GateMatrix {
    let u = single_matrix(g.kind, g.angle);
    if g.kind.num_qubits() == 1 {
        return GateMatrix::Single(u);
    }
    // Controlled-U with the control on the low local bit.
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[2][2] = ONE;
    for (r, &lr) in [1usize, 3].iter().enumerate() {
        for (c, &lc) in [1usize, 3].iter().enumerate() {
            m[lr][lc] = u[r][c];
        }
    }
    GateMatrix::Two(m)
}

/// An ordered gate sequence on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Circuit> {
        Circuit::with_cap(n_qubits, gates, MAX_PURE_QUBITS)
    }

    pub fn with_cap(n_qubits: usize, gates: Vec<Gate>, cap: usize) -> Result<Circuit> {
        if n_qubits == 0 || n_qubits > cap {
            return Err(Error::invalid(format!("n_qubits must be in 1..={cap}, got {n_qubits}")));
        }
        if let Some(g) = gates.iter().find(|g| g.max_qubit() >= n_qubits) {
            return Err(Error::invalid(format!(
                "gate {} on qubits {:?} out of range for {n_qubits} qubits",
                g.kind,
                g.qubits()
            )));
        }
        Ok(Circuit { n_qubits, gates })
    }

    pub fn empty(n_qubits: usize) -> Result<Circuit> {
        Circuit::new(n_qubits, Vec::new())
    }

    /// `H(0)` followed by a CX chain: prepares the Bell/GHZ target.
    pub fn ghz(n_qubits: usize) -> Result<Circuit> {
        let mut gates = vec![Gate::h(0)];
        gates.extend((1..n_qubits).map(|q| Gate::cx(q - 1, q)));
        Circuit::new(n_qubits, gates)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Checked mutation of the gate list.
    pub fn with_gates(&self, gates: Vec<Gate>) -> Result<Circuit> {
        Circuit::new(self.n_qubits, gates)
    }

    pub(crate) fn from_parts_unchecked(n_qubits: usize, gates: Vec<Gate>) -> Circuit {
        debug_assert!(gates.iter().all(|g| g.max_qubit() < n_qubits));
        Circuit { n_qubits, gates }
    }

    pub fn depth(&self) -> usize {
        circuit_depth(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Circuit> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Number of layers under greedy left-alignment.
pub fn circuit_depth(c: &Circuit) -> usize {
    let mut front = vec![0usize; c.n_qubits];
    let mut depth = 0;
    for g in &c.gates {
        let layer = g.qubits().iter().map(|&q| front[q]).max().unwrap_or(0);
        for &q in g.qubits() {
            front[q] = layer + 1;
        }
        depth = depth.max(layer + 1);
    }
    depth
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRepr {
    k: String,
    q: Vec<usize>,
    #[serde(default)]
    p: Vec<f64>,
}

impl Serialize for Gate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GateRepr { k: self.kind.name().to_string(), q: self.qubits().to_vec(), p: self.params().to_vec() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Gate, D::Error> {
        let r = GateRepr::deserialize(d)?;
        let kind = GateKind::from_name(&r.k).ok_or_else(|| serde::de::Error::custom(format!("unknown gate kind {:?}", r.k)))?;
        Gate::new(kind, &r.q, &r.p).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Circuit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Circuit", 2)?;
        st.serialize_field("n", &self.n_qubits)?;
        st.serialize_field("gates", &self.gates)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Circuit, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            n: usize,
            gates: Vec<Gate>,
        }
        let raw = Raw::deserialize(d)?;
        Circuit::new(raw.n, raw.gates).map_err(serde::de::Error::custom)
    }
}
