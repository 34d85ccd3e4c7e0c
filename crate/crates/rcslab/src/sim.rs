//! Exact statevector simulation and the independent path-sum oracle.

use num_complex::Complex64;

use crate::circuit::{Architecture, Circuit, Gate};
use crate::dist::OutputDistribution;
use crate::error::{Error, Result};
use crate::util::kahan_sum;

/// Default qubit cap for dense simulation.
pub const DEFAULT_MAX_QUBITS: usize = 20;

/// Intermediate-string budget for the path sum: n(m-1) <= 30.
pub const PATHSUM_BIT_LIMIT: usize = 30;

/// Resource guard, overridable via RCSLAB_MAX_QUBITS. Unparseable values
/// fall back to the default.
pub fn max_qubits() -> usize {
    std::env::var("RCSLAB_MAX_QUBITS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

#[derive(Debug, Clone)]
pub struct Statevector {
    pub n: usize,
    pub amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// Basis state |x>.
    pub fn basis(n: usize, x: u64) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[x as usize] = Complex64::new(1.0, 0.0);
        Statevector { n, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        kahan_sum(self.amplitudes.iter().map(|a| a.norm_sqr()))
    }

    /// Squared magnitudes, not renormalized: non-unitary circuits produce
    /// an unnormalized vector on purpose.
    pub fn probabilities(&self) -> OutputDistribution {
        OutputDistribution::new(
            self.n,
            self.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
        )
    }
}

pub fn check_qubit_budget(n: usize) -> Result<()> {
    let cap = max_qubits();
    if n > cap {
        return Err(Error::resource(format!(
            "{n} qubits exceeds the cap of {cap}"
        )));
    }
    Ok(())
}

fn check_input(n: usize, x: u64, what: &str) -> Result<()> {
    if n < 64 && x >= (1u64 << n) {
        return Err(Error::validation(format!(
            "{what} {x:#x} is not an {n}-bit string"
        )));
    }
    Ok(())
}

/// Apply one gate in place.
pub fn apply_gate(amplitudes: &mut [Complex64], gate: &Gate) {
    let g = &gate.matrix;
    match gate.targets.as_slice() {
        [t] => {
            let mask = 1usize << t;
            for i in 0..amplitudes.len() {
                if i & mask == 0 {
                    let a0 = amplitudes[i];
                    let a1 = amplitudes[i | mask];
                    amplitudes[i] = g[[0, 0]] * a0 + g[[0, 1]] * a1;
                    amplitudes[i | mask] = g[[1, 0]] * a0 + g[[1, 1]] * a1;
                }
            }
        }
        [a, b] => {
            // Local bit 0 lives on the first listed target.
            let ma = 1usize << a;
            let mb = 1usize << b;
            for i in 0..amplitudes.len() {
                if i & (ma | mb) == 0 {
                    let idx = [i, i | ma, i | mb, i | ma | mb];
                    let old = [
                        amplitudes[idx[0]],
                        amplitudes[idx[1]],
                        amplitudes[idx[2]],
                        amplitudes[idx[3]],
                    ];
                    for (row, &slot) in idx.iter().enumerate() {
                        amplitudes[slot] = g[[row, 0]] * old[0]
                            + g[[row, 1]] * old[1]
                            + g[[row, 2]] * old[2]
                            + g[[row, 3]] * old[3];
                    }
                }
            }
        }
        _ => unreachable!("gate validation enforces 1 or 2 targets"),
    }
}

/// Evolve the basis state |input> through the circuit.
pub fn simulate(circuit: &Circuit, input: u64) -> Result<Statevector> {
    circuit.validate()?;
    check_qubit_budget(circuit.n())?;
    check_input(circuit.n(), input, "input")?;
    let mut state = Statevector::basis(circuit.n(), input);
    for gate in &circuit.gates {
        apply_gate(&mut state.amplitudes, gate);
    }
    Ok(state)
}

/// Single-gate transfer element <to|G_j|from> with the gate embedded on its
/// targets and identity elsewhere.
fn transfer(gate: &Gate, from: u64, to: u64) -> Complex64 {
    let mut target_mask = 0u64;
    let mut local_from = 0usize;
    let mut local_to = 0usize;
    for (k, &t) in gate.targets.iter().enumerate() {
        target_mask |= 1 << t;
        local_from |= (((from >> t) & 1) as usize) << k;
        local_to |= (((to >> t) & 1) as usize) << k;
    }
    if (from ^ to) & !target_mask != 0 {
        return Complex64::new(0.0, 0.0);
    }
    gate.matrix[[local_to, local_from]]
}

/// Feynman path sum: the amplitude <ym|C|y0> as an explicit sum over all
/// 2^{n(m-1)} intermediate basis-string sequences. Deliberately naive; it is
/// the independent oracle the statevector simulator is checked against.
pub fn amplitude_pathsum(circuit: &Circuit, y0: u64, ym: u64) -> Result<Complex64> {
    circuit.validate()?;
    let n = circuit.n();
    let m = circuit.m();
    check_input(n, y0, "y0")?;
    check_input(n, ym, "ym")?;
    let bits = n * (m - 1);
    if bits > PATHSUM_BIT_LIMIT {
        return Err(Error::resource(format!(
            "path sum needs 2^{bits} terms; limit is 2^{PATHSUM_BIT_LIMIT}"
        )));
    }
    let string_mask = (1u64 << n) - 1;
    let mut total = Complex64::new(0.0, 0.0);
    for path in 0u64..(1u64 << bits) {
        let mut product = Complex64::new(1.0, 0.0);
        let mut prev = y0;
        for j in 0..m {
            let next = if j + 1 == m {
                ym
            } else {
                (path >> (n * j)) & string_mask
            };
            product *= transfer(&circuit.gates[j], prev, next);
            if product == Complex64::new(0.0, 0.0) {
                break;
            }
            prev = next;
        }
        total += product;
    }
    Ok(total)
}

/// |<y|C|0^n>|^2; at y = 0^n this is the zero-string probability the
/// reduction pipeline targets.
pub fn output_probability(circuit: &Circuit, y: u64) -> Result<f64> {
    check_input(circuit.n(), y, "outcome")?;
    let state = simulate(circuit, 0)?;
    Ok(state.amplitudes[y as usize].norm_sqr())
}

pub fn full_distribution(circuit: &Circuit) -> Result<OutputDistribution> {
    let state = simulate(circuit, 0)?;
    Ok(state.probabilities())
}

/// Append one single-qubit slot per qubit: a bit flip where y has a 1 and an
/// identity elsewhere, so <z|C_y|0> = <z xor y|C|0> for all z while the
/// output architecture stays independent of y.
pub fn hide(circuit: &Circuit, y: u64) -> Result<Circuit> {
    let n = circuit.n();
    check_input(n, y, "hide string")?;
    let mut slots = circuit.architecture.gate_slots.clone();
    let mut gates = circuit.gates.clone();
    for q in 0..n {
        slots.push(vec![q]);
        if (y >> q) & 1 == 1 {
            gates.push(Gate::bit_flip(q));
        } else {
            gates.push(Gate::identity(vec![q]));
        }
    }
    let architecture = Architecture {
        n_qubits: n,
        gate_slots: slots,
    };
    Ok(Circuit {
        architecture,
        gates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn balanced_gate(target: usize) -> Gate {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = array![
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)]
        ];
        Gate::new_unitary(vec![target], m).unwrap()
    }

    #[test]
    fn identity_circuit_fixes_basis_states() {
        let arch = Architecture::new(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let c = Circuit::identity(arch);
        for input in 0..8u64 {
            let state = simulate(&c, input).unwrap();
            for (x, amp) in state.amplitudes.iter().enumerate() {
                let expected = if x as u64 == input { 1.0 } else { 0.0 };
                assert_eq!(amp.re, expected);
                assert_eq!(amp.im, 0.0);
            }
        }
    }

    #[test]
    fn balanced_gate_splits_mass_evenly() {
        let arch = Architecture::new(1, vec![vec![0]]).unwrap();
        let c = Circuit::new(arch, vec![balanced_gate(0)]).unwrap();
        let state = simulate(&c, 0).unwrap();
        assert!((state.amplitudes[0].norm_sqr() - 0.5).abs() < 1e-15);
        assert!((state.amplitudes[1].norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_balanced_gate_per_qubit_is_uniform() {
        let arch = Architecture::new(2, vec![vec![0], vec![1]]).unwrap();
        let c = Circuit::new(arch, vec![balanced_gate(0), balanced_gate(1)]).unwrap();
        let dist = full_distribution(&c).unwrap();
        for p in &dist.probs {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn pathsum_identity_cases() {
        let arch = Architecture::new(2, vec![vec![0, 1], vec![0, 1], vec![0, 1]]).unwrap();
        let c = Circuit::identity(arch);
        for y0 in 0..4u64 {
            for ym in 0..4u64 {
                let amp = amplitude_pathsum(&c, y0, ym).unwrap();
                let expected = if y0 == ym { 1.0 } else { 0.0 };
                assert!((amp.re - expected).abs() < 1e-15 && amp.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pathsum_guard_trips() {
        let arch = Architecture::line(8, 12).unwrap();
        let c = Circuit::identity(arch);
        assert!(matches!(
            amplitude_pathsum(&c, 0, 0),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn qubit_cap_enforced() {
        std::env::remove_var("RCSLAB_MAX_QUBITS");
        let arch = Architecture::line(DEFAULT_MAX_QUBITS + 1, 1).unwrap();
        let c = Circuit::identity(arch);
        assert!(matches!(simulate(&c, 0), Err(Error::Resource(_))));
    }

    #[test]
    fn hide_moves_point_mass() {
        let arch = Architecture::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        let c = Circuit::identity(arch);
        let y = 0b101u64;
        let hidden = hide(&c, y).unwrap();
        let dist = full_distribution(&hidden).unwrap();
        for (x, p) in dist.probs.iter().enumerate() {
            let expected = if x as u64 == y { 1.0 } else { 0.0 };
            assert!((p - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn hide_keeps_architecture_independent_of_string() {
        let arch = Architecture::new(2, vec![vec![0, 1]]).unwrap();
        let c = Circuit::identity(arch);
        let a = hide(&c, 0b00).unwrap();
        let b = hide(&c, 0b11).unwrap();
        assert_eq!(a.architecture, b.architecture);
        assert_eq!(a.m(), c.m() + 2);
    }

    #[test]
    fn disjoint_gates_commute() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let g0 = array![
            [Complex64::new(h, 0.0), Complex64::new(0.0, h)],
            [Complex64::new(0.0, h), Complex64::new(h, 0.0)]
        ];
        let g1 = array![
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        ];
        let a = Circuit::new(
            Architecture::new(3, vec![vec![0], vec![2]]).unwrap(),
            vec![
                Gate::new_unitary(vec![0], g0.clone()).unwrap(),
                Gate::new_unitary(vec![2], g1.clone()).unwrap(),
            ],
        )
        .unwrap();
        let b = Circuit::new(
            Architecture::new(3, vec![vec![2], vec![0]]).unwrap(),
            vec![
                Gate::new_unitary(vec![2], g1).unwrap(),
                Gate::new_unitary(vec![0], g0).unwrap(),
            ],
        )
        .unwrap();
        let sa = simulate(&a, 0b011).unwrap();
        let sb = simulate(&b, 0b011).unwrap();
        for (x, y) in sa.amplitudes.iter().zip(&sb.amplitudes) {
            assert!((x - y).norm() < 1e-15);
        }
    }
}
