//! Brute-force reference simulator: every gate is expanded to a full
//! `2^n × 2^n` matrix by Kronecker products of textbook 2×2 blocks and
//! multiplied onto the state. Shares no code with the library kernels.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use qfi_core::{Circuit, Gate};

pub type Mat = Vec<Vec<C>>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn identity(d: usize) -> Mat {
    (0..d).map(|r| (0..d).map(|k| if r == k { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()).collect()
}

/// `a ⊗ b` with `a` acting on the high-order bits.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (m, n) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); m * n]; m * n];
    for i in 0..m {
        for j in 0..m {
            for k in 0..n {
                for l in 0..n {
                    out[i * n + k][j * n + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let d = a.len();
    (0..d).map(|r| (0..d).map(|k| (0..d).map(|j| a[r][j] * b[j][k]).sum()).collect()).collect()
}

fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect()
}

/// Single-qubit block by gate name.
pub fn block(name: &str, theta: f64) -> Mat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let m = |a: C, b: C, d: C, e: C| vec![vec![a, b], vec![d, e]];
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let phase = |l: f64| m(one, z, z, C::from_polar(1.0, l));
    match name {
        "i" => identity(2),
        "x" => m(z, one, one, z),
        "y" => m(z, c(0.0, -1.0), c(0.0, 1.0), z),
        "z" => m(one, z, z, c(-1.0, 0.0)),
        "h" => m(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)),
        "s" => phase(std::f64::consts::FRAC_PI_2),
        "sdg" => phase(-std::f64::consts::FRAC_PI_2),
        "t" => phase(std::f64::consts::FRAC_PI_4),
        "tdg" => phase(-std::f64::consts::FRAC_PI_4),
        "rx" => m(c(ch, 0.0), c(0.0, -sh), c(0.0, -sh), c(ch, 0.0)),
        "ry" => m(c(ch, 0.0), c(-sh, 0.0), c(sh, 0.0), c(ch, 0.0)),
        "rz" => m(C::from_polar(1.0, -theta / 2.0), z, z, C::from_polar(1.0, theta / 2.0)),
        "phase" => phase(theta),
        other => panic!("no single-qubit block for {other}"),
    }
}

/// Full-register operator with `ops[q]` on qubit `q` (identity elsewhere).
fn tensor(n: usize, ops: &[(usize, Mat)]) -> Mat {
    let mut full = vec![vec![c(1.0, 0.0)]];
    for q in (0..n).rev() {
        let m = ops.iter().find(|(k, _)| *k == q).map_or_else(|| identity(2), |(_, m)| m.clone());
        full = kron(&full, &m);
    }
    full
}

pub fn gate_operator(n: usize, g: &Gate) -> Mat {
    let name = g.kind().name();
    let theta = g.angle().unwrap_or(0.0);
    let q = g.qubits();
    if q.len() == 1 {
        return tensor(n, &[(q[0], block(name, theta))]);
    }
    let target = match name {
        "cx" => block("x", 0.0),
        "cy" => block("y", 0.0),
        "cz" => block("z", 0.0),
        other => panic!("unknown two-qubit gate {other}"),
    };
    let p0 = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
    let p1 = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    add(&tensor(n, &[(q[0], p0)]), &tensor(n, &[(q[0], p1), (q[1], target)]))
}

/// Product of all gate operators (last gate leftmost).
pub fn circuit_operator(c: &Circuit) -> Mat {
    let d = 1 << c.n_qubits();
    c.gates().iter().fold(identity(d), |acc, g| matmul(&gate_operator(c.n_qubits(), g), &acc))
}

/// Final state from `|0…0⟩`: first column of the circuit operator.
pub fn simulate(c: &Circuit) -> Vec<C> {
    circuit_operator(c).iter().map(|row| row[0]).collect()
}
