//! High-precision arithmetic for polynomial extrapolation.
//!
//! Extrapolating an interpolant from nodes packed into a short prefix of
//! [0, 1] out to 1 amplifies value errors by an enormous condition factor
//! (see [`condition_factor`]); double precision is hopeless there, so node
//! values are computed and combined in software floats of configurable
//! precision. Only the final scalar answers return to f64.

use ndarray::Array2;
use num_complex::Complex64;
use rug::Float;
use std::f64::consts::PI;

use crate::circuit::Circuit;
use crate::error::{Error, Result};

/// Complex number with `rug::Float` components. Operations allocate at the
/// precision of the left operand.
#[derive(Debug, Clone)]
pub struct HComplex {
    pub re: Float,
    pub im: Float,
}

impl HComplex {
    pub fn zero(prec: u32) -> Self {
        HComplex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn one(prec: u32) -> Self {
        HComplex {
            re: Float::with_val(prec, 1),
            im: Float::new(prec),
        }
    }

    pub fn from_f64s(prec: u32, re: f64, im: f64) -> Self {
        HComplex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn from_c64(prec: u32, z: Complex64) -> Self {
        Self::from_f64s(prec, z.re, z.im)
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn conj(&self) -> Self {
        HComplex {
            re: self.re.clone(),
            im: Float::with_val(self.prec(), -&self.im),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let prec = self.prec();
        HComplex {
            re: Float::with_val(prec, &self.re + &other.re),
            im: Float::with_val(prec, &self.im + &other.im),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let prec = self.prec();
        HComplex {
            re: Float::with_val(prec, &self.re - &other.re),
            im: Float::with_val(prec, &self.im - &other.im),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec();
        let mut re = Float::with_val(prec, &self.re * &other.re);
        re -= Float::with_val(prec, &self.im * &other.im);
        let mut im = Float::with_val(prec, &self.re * &other.im);
        im += Float::with_val(prec, &self.im * &other.re);
        HComplex { re, im }
    }

    /// self += a * b, without allocating a temporary HComplex.
    pub fn accumulate(&mut self, a: &Self, b: &Self) {
        let prec = self.prec();
        self.re += Float::with_val(prec, &a.re * &b.re);
        self.re -= Float::with_val(prec, &a.im * &b.im);
        self.im += Float::with_val(prec, &a.re * &b.im);
        self.im += Float::with_val(prec, &a.im * &b.re);
    }

    pub fn scale(&self, factor: &Float) -> Self {
        let prec = self.prec();
        HComplex {
            re: Float::with_val(prec, &self.re * factor),
            im: Float::with_val(prec, &self.im * factor),
        }
    }

    pub fn norm_sqr(&self) -> Float {
        let prec = self.prec();
        let mut out = Float::with_val(prec, &self.re * &self.re);
        out += Float::with_val(prec, &self.im * &self.im);
        out
    }

    pub fn abs(&self) -> Float {
        self.norm_sqr().sqrt()
    }
}

/// e^{i phi} at the precision of `phi`.
pub fn hp_polar(phi: &Float) -> HComplex {
    let prec = phi.prec();
    let (sin, cos) = phi.clone().sin_cos(Float::new(prec));
    HComplex { re: cos, im: sin }
}

/// Order-K Taylor prefix of e^{-i x}, evaluated in high precision.
pub fn hp_taylor_prefix(x: &Float, order: usize) -> HComplex {
    let prec = x.prec();
    let mut term = HComplex::one(prec);
    let mut sum = term.clone();
    for j in 1..=order {
        // term *= -i x / j
        let scaled = Float::with_val(prec, x / j as u32);
        let next_re = Float::with_val(prec, &term.im * &scaled);
        let mut next_im = Float::with_val(prec, &term.re * &scaled);
        next_im = -next_im;
        term = HComplex {
            re: next_re,
            im: next_im,
        };
        sum = sum.add(&term);
    }
    sum
}

/// Dense square matrix of `HComplex` entries, row-major.
#[derive(Debug, Clone)]
pub struct HpMatrix {
    pub dim: usize,
    pub entries: Vec<HComplex>,
}

impl HpMatrix {
    pub fn promote(prec: u32, m: &Array2<Complex64>) -> Self {
        let dim = m.nrows();
        let entries = m.iter().map(|&z| HComplex::from_c64(prec, z)).collect();
        HpMatrix { dim, entries }
    }

    pub fn identity(prec: u32, dim: usize) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(if i == j {
                    HComplex::one(prec)
                } else {
                    HComplex::zero(prec)
                });
            }
        }
        HpMatrix { dim, entries }
    }

    pub fn at(&self, row: usize, col: usize) -> &HComplex {
        &self.entries[row * self.dim + col]
    }

    pub fn adjoint(&self) -> Self {
        let mut entries = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                entries.push(self.at(j, i).conj());
            }
        }
        HpMatrix {
            dim: self.dim,
            entries,
        }
    }

    pub fn dot(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let prec = self.entries[0].prec();
        let mut entries = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = HComplex::zero(prec);
                for k in 0..self.dim {
                    acc.accumulate(self.at(i, k), other.at(k, j));
                }
                entries.push(acc);
            }
        }
        HpMatrix {
            dim: self.dim,
            entries,
        }
    }

    /// self * diag(factors).
    pub fn scale_columns(&self, factors: &[HComplex]) -> Self {
        assert_eq!(factors.len(), self.dim);
        let mut entries = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for (j, factor) in factors.iter().enumerate() {
                entries.push(self.at(i, j).mul(factor));
            }
        }
        HpMatrix {
            dim: self.dim,
            entries,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HpGate {
    pub targets: Vec<usize>,
    pub matrix: HpMatrix,
}

/// A circuit with high-precision gate matrices, evaluated by the same
/// statevector sweep as the f64 engine.
#[derive(Debug, Clone)]
pub struct HpCircuit {
    pub n: usize,
    pub prec: u32,
    pub gates: Vec<HpGate>,
}

impl HpCircuit {
    pub fn promote(prec: u32, circuit: &Circuit) -> Result<Self> {
        circuit.validate()?;
        let gates = circuit
            .gates
            .iter()
            .map(|g| HpGate {
                targets: g.targets.clone(),
                matrix: HpMatrix::promote(prec, &g.matrix),
            })
            .collect();
        Ok(HpCircuit {
            n: circuit.n(),
            prec,
            gates,
        })
    }
}

/// Apply one gate to a high-precision statevector (qubit 0 = least
/// significant index bit, matching the f64 engine).
pub fn hp_apply_gate(state: &mut [HComplex], n: usize, gate: &HpGate) {
    let size = 1usize << n;
    debug_assert_eq!(state.len(), size);
    match gate.targets.len() {
        1 => {
            let mask = 1usize << gate.targets[0];
            let m = &gate.matrix;
            for i in 0..size {
                if i & mask != 0 {
                    continue;
                }
                let a = state[i].clone();
                let b = state[i | mask].clone();
                let mut new_a = m.at(0, 0).mul(&a);
                new_a.accumulate(m.at(0, 1), &b);
                let mut new_b = m.at(1, 0).mul(&a);
                new_b.accumulate(m.at(1, 1), &b);
                state[i] = new_a;
                state[i | mask] = new_b;
            }
        }
        2 => {
            let ma = 1usize << gate.targets[0];
            let mb = 1usize << gate.targets[1];
            let m = &gate.matrix;
            for i in 0..size {
                if i & (ma | mb) != 0 {
                    continue;
                }
                let idx = [i, i | ma, i | mb, i | ma | mb];
                let old: Vec<HComplex> = idx.iter().map(|&j| state[j].clone()).collect();
                for (row, &j) in idx.iter().enumerate() {
                    let mut acc = m.at(row, 0).mul(&old[0]);
                    for (col, o) in old.iter().enumerate().skip(1) {
                        acc.accumulate(m.at(row, col), o);
                    }
                    state[j] = acc;
                }
            }
        }
        _ => unreachable!("gate arity is validated to 1 or 2"),
    }
}

/// Amplitude <0...0| C |0...0> in high precision.
pub fn hp_zero_amplitude(circuit: &HpCircuit, prec: u32) -> HComplex {
    let size = 1usize << circuit.n;
    let mut state: Vec<HComplex> = (0..size).map(|_| HComplex::zero(prec)).collect();
    state[0] = HComplex::one(prec);
    for gate in &circuit.gates {
        hp_apply_gate(&mut state, circuit.n, gate);
    }
    state[0].clone()
}

/// p_0 = |<0|C|0>|^2 in high precision.
pub fn hp_p0(circuit: &HpCircuit, prec: u32) -> Float {
    hp_zero_amplitude(circuit, prec).norm_sqr()
}

/// Chebyshev points of the first kind mapped onto (0, theta_max), ascending.
/// None of them touches the interval ends, so every node carries nontrivial
/// information and theta = 0 is never wasted on the trivial circuit.
pub fn chebyshev_nodes(count: usize, theta_max: f64) -> Result<Vec<f64>> {
    check_node_args(count, theta_max)?;
    let mut nodes: Vec<f64> = (0..count)
        .map(|j| {
            let angle = (2 * j + 1) as f64 * PI / (2 * count) as f64;
            0.5 * theta_max * (1.0 + angle.cos())
        })
        .collect();
    nodes.reverse(); // the cosine ordering is descending
    Ok(nodes)
}

/// Evenly spaced nodes theta_max * (j+1)/(count+1), ascending; skips the
/// trivial 0 and stays strictly below theta_max, matching the half-open node
/// interval the reduction promises its oracle.
pub fn uniform_nodes(count: usize, theta_max: f64) -> Result<Vec<f64>> {
    check_node_args(count, theta_max)?;
    Ok((0..count)
        .map(|j| theta_max * (j + 1) as f64 / (count + 1) as f64)
        .collect())
}

fn check_node_args(count: usize, theta_max: f64) -> Result<()> {
    if count == 0 {
        return Err(Error::validation("node count must be positive"));
    }
    if !(theta_max > 0.0 && theta_max <= 1.0) {
        return Err(Error::validation(format!(
            "theta_max must lie in (0, 1], got {theta_max}"
        )));
    }
    Ok(())
}

/// Barycentric weights w_j = 1 / prod_{i != j} (x_j - x_i), computed in high
/// precision from the exact (promoted) f64 nodes.
pub fn barycentric_weights(prec: u32, nodes: &[f64]) -> Result<Vec<Float>> {
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if a == b {
                return Err(Error::validation("barycentric weights need distinct nodes"));
            }
        }
    }
    Ok(nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let mut prod = Float::with_val(prec, 1);
            for (i, &xi) in nodes.iter().enumerate() {
                if i != j {
                    prod *= Float::with_val(prec, xj) - xi;
                }
            }
            prod.recip()
        })
        .collect())
}

/// Second barycentric form: p(x) = sum_j (w_j/(x-x_j)) v_j / sum_j w_j/(x-x_j).
/// Exact (up to rounding) for the degree <= k-1 interpolant at every x,
/// inside or outside the node hull. At a node it returns that node's value.
pub fn barycentric_eval(
    nodes: &[f64],
    weights: &[Float],
    values: &[Float],
    x: f64,
    prec: u32,
) -> Result<Float> {
    if nodes.len() != weights.len() || nodes.len() != values.len() || nodes.is_empty() {
        return Err(Error::validation(
            "barycentric evaluation needs equal-length, nonempty inputs",
        ));
    }
    if let Some(j) = nodes.iter().position(|&xj| xj == x) {
        return Ok(values[j].clone());
    }
    let mut num = Float::new(prec);
    let mut den = Float::new(prec);
    for ((&xj, wj), vj) in nodes.iter().zip(weights).zip(values) {
        let diff = Float::with_val(prec, x) - xj;
        let term = Float::with_val(prec, wj / &diff);
        num += Float::with_val(prec, &term * vj);
        den += term;
    }
    if den == 0 {
        return Err(Error::validation("barycentric denominator vanished"));
    }
    Ok(num / den)
}

/// Error amplification of barycentric evaluation at x: perturbing each node
/// value by at most eps moves the result by at most this factor times eps.
/// Grows explosively when x extrapolates far beyond the node hull; the
/// returned f64 saturates to +inf if the true factor overflows.
pub fn condition_factor(nodes: &[f64], weights: &[Float], x: f64, prec: u32) -> Result<f64> {
    if nodes.len() != weights.len() || nodes.is_empty() {
        return Err(Error::validation(
            "condition factor needs equal-length, nonempty inputs",
        ));
    }
    if nodes.contains(&x) {
        return Ok(1.0);
    }
    let mut abs_sum = Float::new(prec);
    let mut den = Float::new(prec);
    for (&xj, wj) in nodes.iter().zip(weights) {
        let diff = Float::with_val(prec, x) - xj;
        let term = Float::with_val(prec, wj / &diff);
        abs_sum += Float::with_val(prec, term.abs_ref());
        den += term;
    }
    if den == 0 {
        return Err(Error::validation("barycentric denominator vanished"));
    }
    let factor = abs_sum / Float::with_val(prec, den.abs_ref());
    Ok(factor.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Architecture;
    use crate::ensemble::{sample_circuit, EnsembleSpec};
    use crate::rng;
    use crate::sim;
    use rand::Rng;

    const PREC: u32 = 256;

    #[test]
    fn hcomplex_matches_f64_arithmetic() {
        let mut rng = rng::stream(1, "hc-arith");
        for _ in 0..50 {
            let a = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let b = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            let ha = HComplex::from_c64(PREC, a);
            let hb = HComplex::from_c64(PREC, b);
            assert!((ha.mul(&hb).to_c64() - a * b).norm() < 1e-15);
            assert!((ha.add(&hb).to_c64() - (a + b)).norm() < 1e-15);
            assert!((ha.sub(&hb).to_c64() - (a - b)).norm() < 1e-15);
            assert!((ha.conj().to_c64() - a.conj()).norm() == 0.0);
            assert!((ha.norm_sqr().to_f64() - a.norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn polar_and_taylor_match_f64() {
        let phi = Float::with_val(PREC, 2.3);
        let hp = hp_polar(&phi);
        let want = Complex64::from_polar(1.0, 2.3);
        assert!((hp.to_c64() - want).norm() < 1e-15);

        let x = Float::with_val(PREC, 0.7);
        let hp_tp = hp_taylor_prefix(&x, 8).to_c64();
        // f64 reference
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for j in 1..=8 {
            term *= Complex64::new(0.0, -0.7) / j as f64;
            sum += term;
        }
        assert!((hp_tp - sum).norm() < 1e-14);
    }

    #[test]
    fn promoted_unitary_adjoint_is_inverse() {
        let u = crate::ensemble::haar_unitary(4, &mut rng::stream(2, "hp-adj")).unwrap();
        let m = HpMatrix::promote(PREC, &u);
        let prod = m.adjoint().dot(&m);
        let eye = HpMatrix::identity(PREC, 4);
        for (a, b) in prod.entries.iter().zip(&eye.entries) {
            assert!(a.sub(b).abs().to_f64() < 1e-14);
        }
    }

    #[test]
    fn hp_p0_matches_f64_simulation() {
        let arch = Architecture::line(3, 5).unwrap();
        let c = sample_circuit(&arch, &EnsembleSpec::Haar, 11).unwrap();
        let f64_p0 = sim::output_probability(&c, 0).unwrap();
        let hp_c = HpCircuit::promote(PREC, &c).unwrap();
        let hp_val = hp_p0(&hp_c, PREC).to_f64();
        assert!(
            (f64_p0 - hp_val).abs() < 1e-13,
            "f64 {f64_p0} vs hp {hp_val}"
        );
    }

    #[test]
    fn node_families_are_sane() {
        let cheb = chebyshev_nodes(9, 0.1).unwrap();
        assert_eq!(cheb.len(), 9);
        assert!(cheb.windows(2).all(|w| w[0] < w[1]));
        assert!(cheb.iter().all(|&x| x > 0.0 && x < 0.1));

        let uni = uniform_nodes(5, 0.1).unwrap();
        assert_eq!(uni.len(), 5);
        assert!(uni.windows(2).all(|w| w[0] < w[1]));
        assert!(uni[0] > 0.0 && uni[4] < 0.1);

        assert!(chebyshev_nodes(0, 0.1).is_err());
        assert!(uniform_nodes(3, 0.0).is_err());
        assert!(uniform_nodes(3, 1.5).is_err());
    }

    #[test]
    fn barycentric_reproduces_a_polynomial_under_extrapolation() {
        // f(x) = 3x^2 - 2x + 0.25 sampled on (0, 0.05), evaluated at 1.
        let nodes = chebyshev_nodes(5, 0.05).unwrap();
        let weights = barycentric_weights(PREC, &nodes).unwrap();
        let values: Vec<Float> = nodes
            .iter()
            .map(|&x| {
                let hx = Float::with_val(PREC, x);
                let mut v = Float::with_val(PREC, 3) * hx.clone() * hx.clone();
                v -= Float::with_val(PREC, 2) * hx;
                v += Float::with_val(PREC, 0.25);
                v
            })
            .collect();
        let got = barycentric_eval(&nodes, &weights, &values, 1.0, PREC).unwrap();
        let want = Float::with_val(PREC, 1.25);
        let err = Float::with_val(PREC, &got - &want).abs().to_f64();
        assert!(err < 1e-40, "extrapolation error {err}");
    }

    #[test]
    fn barycentric_returns_node_values_exactly() {
        let nodes = uniform_nodes(4, 0.8).unwrap();
        let weights = barycentric_weights(PREC, &nodes).unwrap();
        let values: Vec<Float> = (0..4)
            .map(|i| Float::with_val(PREC, i as f64 + 0.5))
            .collect();
        for (j, &x) in nodes.iter().enumerate() {
            let got = barycentric_eval(&nodes, &weights, &values, x, PREC).unwrap();
            assert_eq!(got, values[j]);
        }
    }

    #[test]
    fn degenerate_nodes_rejected() {
        assert!(barycentric_weights(PREC, &[0.1, 0.1, 0.2]).is_err());
    }

    #[test]
    fn extrapolation_conditioning_is_enormous() {
        // 37 Chebyshev nodes on (0, 1/30), evaluated at 1: the known
        // amplification is about 10^74. Pin the order of magnitude.
        let nodes = chebyshev_nodes(37, 1.0 / 30.0).unwrap();
        let weights = barycentric_weights(512, &nodes).unwrap();
        let kappa = condition_factor(&nodes, &weights, 1.0, 512).unwrap();
        assert!(kappa > 1e60 && kappa < 1e90, "condition factor {kappa:e}");
    }

    #[test]
    fn conditioning_inside_the_hull_is_modest() {
        let nodes = chebyshev_nodes(12, 1.0).unwrap();
        let weights = barycentric_weights(PREC, &nodes).unwrap();
        let kappa = condition_factor(&nodes, &weights, 0.5, PREC).unwrap();
        assert!(kappa < 50.0, "condition factor {kappa}");
    }
}
