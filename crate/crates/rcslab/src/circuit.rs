//! Architectures, gates, and circuits.
//!
//! An architecture is an ordered list of gate slots over n qubits; each slot
//! targets one or two distinct qubits. A circuit fills every slot with a
//! concrete complex matrix. Qubit 0 is the least significant bit of a basis
//! index, and a gate's first listed target is the least significant bit of
//! its local index; matrices are stored row-major over that local space.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit roundoff of f64 (half the machine epsilon).
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Max-norm defect tolerance for matrices flagged unitary.
pub const UNITARY_TOL: f64 = 10.0 * UNIT_ROUNDOFF;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub n_qubits: usize,
    /// Each slot is the ordered target list of one gate: length 1 or 2.
    pub gate_slots: Vec<Vec<usize>>,
}

impl Architecture {
    pub fn new(n_qubits: usize, gate_slots: Vec<Vec<usize>>) -> Result<Self> {
        let arch = Architecture {
            n_qubits,
            gate_slots,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::validation("architecture needs at least one qubit"));
        }
        if self.gate_slots.is_empty() {
            return Err(Error::validation(
                "architecture needs at least one gate slot",
            ));
        }
        for (j, slot) in self.gate_slots.iter().enumerate() {
            match slot.as_slice() {
                [q] => {
                    if *q >= self.n_qubits {
                        return Err(Error::validation(format!(
                            "slot {j}: target {q} out of range for {} qubits",
                            self.n_qubits
                        )));
                    }
                }
                [a, b] => {
                    if *a >= self.n_qubits || *b >= self.n_qubits {
                        return Err(Error::validation(format!(
                            "slot {j}: targets ({a},{b}) out of range for {} qubits",
                            self.n_qubits
                        )));
                    }
                    if a == b {
                        return Err(Error::validation(format!("slot {j}: duplicate target {a}")));
                    }
                }
                _ => {
                    return Err(Error::validation(format!(
                        "slot {j}: expected 1 or 2 targets, got {}",
                        slot.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n_qubits
    }

    /// Number of gate slots (circuit length m).
    pub fn m(&self) -> usize {
        self.gate_slots.len()
    }

    /// Nearest-neighbor brick pattern on a line: even layers pair (0,1),(2,3),...,
    /// odd layers pair (1,2),(3,4),.... A layer whose offset yields no pair
    /// falls back to offset 0 (the n = 2 case), and n = 1 emits a single-qubit
    /// slot per layer.
    pub fn line(n: usize, depth: usize) -> Result<Self> {
        if n == 0 || depth == 0 {
            return Err(Error::validation(
                "line architecture needs n >= 1 and depth >= 1",
            ));
        }
        let mut slots = Vec::new();
        for layer in 0..depth {
            if n == 1 {
                slots.push(vec![0]);
                continue;
            }
            let mut start = layer % 2;
            if start + 1 >= n {
                start = 0;
            }
            let mut i = start;
            while i + 1 < n {
                slots.push(vec![i, i + 1]);
                i += 2;
            }
        }
        Architecture::new(n, slots)
    }

    /// Line pattern truncated to exactly `m` slots.
    pub fn line_with_slots(n: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::validation("need at least one slot"));
        }
        // Slots per layer is at least 1, so m layers always suffice.
        let mut arch = Architecture::line(n, m)?;
        arch.gate_slots.truncate(m);
        Ok(arch)
    }

    /// Brick pattern on a rows x cols grid; qubit (r, c) has index r*cols + c.
    /// Layers cycle through four phases: horizontal pairs at even then odd
    /// column offset, vertical pairs at even then odd row offset. Phases that
    /// yield no pair on a degenerate grid are skipped; a 1x1 grid emits a
    /// single-qubit slot per layer.
    pub fn grid(rows: usize, cols: usize, depth: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || depth == 0 {
            return Err(Error::validation(
                "grid architecture needs rows, cols, depth >= 1",
            ));
        }
        let n = rows * cols;
        let mut slots = Vec::new();
        for layer in 0..depth {
            if n == 1 {
                slots.push(vec![0]);
                continue;
            }
            let mut layer_slots = Vec::new();
            for attempt in 0..4 {
                let phase = (layer + attempt) % 4;
                match phase {
                    0 | 1 => {
                        let offset = phase;
                        for r in 0..rows {
                            let mut c = offset;
                            while c + 1 < cols {
                                layer_slots.push(vec![r * cols + c, r * cols + c + 1]);
                                c += 2;
                            }
                        }
                    }
                    _ => {
                        let offset = phase - 2;
                        for c in 0..cols {
                            let mut r = offset;
                            while r + 1 < rows {
                                layer_slots.push(vec![r * cols + c, (r + 1) * cols + c]);
                                r += 2;
                            }
                        }
                    }
                }
                if !layer_slots.is_empty() {
                    break;
                }
            }
            slots.append(&mut layer_slots);
        }
        Architecture::new(n, slots)
    }
}

#[derive(Debug, Clone)]
pub struct Gate {
    pub targets: Vec<usize>,
    /// Row-major over the targets' joint space, dimension 2^|targets|.
    pub matrix: Array2<Complex64>,
    /// Cleared for intentionally non-unitary gates (truncated ensembles).
    pub unitary: bool,
}

impl Gate {
    pub fn new(targets: Vec<usize>, matrix: Array2<Complex64>, unitary: bool) -> Result<Self> {
        let gate = Gate {
            targets,
            matrix,
            unitary,
        };
        gate.validate()?;
        Ok(gate)
    }

    /// A gate whose matrix is expected to be unitary to working precision.
    pub fn new_unitary(targets: Vec<usize>, matrix: Array2<Complex64>) -> Result<Self> {
        Gate::new(targets, matrix, true)
    }

    pub fn identity(targets: Vec<usize>) -> Self {
        let dim = 1usize << targets.len();
        Gate {
            targets,
            matrix: Array2::eye(dim),
            unitary: true,
        }
    }

    /// Single-qubit bit flip.
    pub fn bit_flip(target: usize) -> Self {
        let mut m = Array2::zeros((2, 2));
        m[[0, 1]] = Complex64::new(1.0, 0.0);
        m[[1, 0]] = Complex64::new(1.0, 0.0);
        Gate {
            targets: vec![target],
            matrix: m,
            unitary: true,
        }
    }

    pub fn dim(&self) -> usize {
        1usize << self.targets.len()
    }

    /// Max-norm unitarity defect of the matrix.
    pub fn unitarity_defect(&self) -> f64 {
        let g = &self.matrix;
        let dim = g.nrows();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let mut dot = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    dot += g[[k, r]].conj() * g[[k, c]];
                }
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() || self.targets.len() > 2 {
            return Err(Error::validation(format!(
                "gate must target 1 or 2 qubits, got {}",
                self.targets.len()
            )));
        }
        if self.targets.len() == 2 && self.targets[0] == self.targets[1] {
            return Err(Error::validation("gate targets must be distinct"));
        }
        let dim = self.dim();
        if self.matrix.nrows() != dim || self.matrix.ncols() != dim {
            return Err(Error::validation(format!(
                "gate on {} targets needs a {dim}x{dim} matrix, got {}x{}",
                self.targets.len(),
                self.matrix.nrows(),
                self.matrix.ncols()
            )));
        }
        if self.unitary {
            let defect = self.unitarity_defect();
            if defect > UNITARY_TOL {
                return Err(Error::validation(format!(
                    "gate flagged unitary but defect {defect:.3e} exceeds {UNITARY_TOL:.3e}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Circuit {
    pub architecture: Architecture,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(architecture: Architecture, gates: Vec<Gate>) -> Result<Self> {
        let c = Circuit {
            architecture,
            gates,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        if self.gates.len() != self.architecture.gate_slots.len() {
            return Err(Error::validation(format!(
                "{} gates for {} slots",
                self.gates.len(),
                self.architecture.gate_slots.len()
            )));
        }
        for (j, (gate, slot)) in self
            .gates
            .iter()
            .zip(&self.architecture.gate_slots)
            .enumerate()
        {
            gate.validate()?;
            if &gate.targets != slot {
                return Err(Error::validation(format!(
                    "gate {j} targets {:?} do not match slot {:?}",
                    gate.targets, slot
                )));
            }
        }
        Ok(())
    }

    /// Identity gate in every slot.
    pub fn identity(architecture: Architecture) -> Self {
        let gates = architecture
            .gate_slots
            .iter()
            .map(|s| Gate::identity(s.clone()))
            .collect();
        Circuit {
            architecture,
            gates,
        }
    }

    pub fn n(&self) -> usize {
        self.architecture.n_qubits
    }

    pub fn m(&self) -> usize {
        self.gates.len()
    }
}

/// On-disk circuit form: {"n", "slots", "gates"} with row-major [re, im] entries.
#[derive(Serialize, Deserialize)]
struct CircuitFile {
    n: usize,
    slots: Vec<Vec<usize>>,
    gates: Vec<Vec<[f64; 2]>>,
}

impl Circuit {
    pub fn to_json(&self) -> String {
        let file = CircuitFile {
            n: self.n(),
            slots: self.architecture.gate_slots.clone(),
            gates: self
                .gates
                .iter()
                .map(|g| g.matrix.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("circuit serialization cannot fail")
    }

    /// The file format carries no unitary flag; it is re-derived from the
    /// loaded entries, so a round trip preserves it.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: CircuitFile = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("circuit JSON: {e}")))?;
        let architecture = Architecture::new(file.n, file.slots)?;
        if file.gates.len() != architecture.gate_slots.len() {
            return Err(Error::validation(format!(
                "{} gate matrices for {} slots",
                file.gates.len(),
                architecture.gate_slots.len()
            )));
        }
        let mut gates = Vec::with_capacity(file.gates.len());
        for (slot, entries) in architecture.gate_slots.iter().zip(file.gates) {
            let dim = 1usize << slot.len();
            if entries.len() != dim * dim {
                return Err(Error::validation(format!(
                    "gate on slot {slot:?} needs {} entries, got {}",
                    dim * dim,
                    entries.len()
                )));
            }
            let data: Vec<Complex64> = entries
                .iter()
                .map(|[re, im]| Complex64::new(*re, *im))
                .collect();
            let matrix = Array2::from_shape_vec((dim, dim), data).expect("shape checked above");
            let mut gate = Gate {
                targets: slot.clone(),
                matrix,
                unitary: false,
            };
            gate.unitary = gate.unitarity_defect() <= UNITARY_TOL;
            gates.push(gate);
        }
        Circuit::new(architecture, gates)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Circuit::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_brick_pattern() {
        let arch = Architecture::line(4, 3).unwrap();
        assert_eq!(
            arch.gate_slots,
            vec![vec![0, 1], vec![2, 3], vec![1, 2], vec![0, 1], vec![2, 3]]
        );
    }

    #[test]
    fn line_two_qubits_never_skips_layers() {
        let arch = Architecture::line(2, 3).unwrap();
        assert_eq!(arch.gate_slots, vec![vec![0, 1]; 3]);
    }

    #[test]
    fn line_single_qubit() {
        let arch = Architecture::line(1, 4).unwrap();
        assert_eq!(arch.gate_slots, vec![vec![0]; 4]);
    }

    #[test]
    fn line_with_slots_truncates() {
        let arch = Architecture::line_with_slots(4, 3).unwrap();
        assert_eq!(arch.gate_slots.len(), 3);
    }

    #[test]
    fn grid_phases_cover_both_directions() {
        let arch = Architecture::grid(2, 2, 4).unwrap();
        assert_eq!(arch.n(), 4);
        let horizontal = arch.gate_slots.iter().filter(|s| s[1] == s[0] + 1).count();
        let vertical = arch.gate_slots.iter().filter(|s| s[1] == s[0] + 2).count();
        assert!(horizontal > 0 && vertical > 0);
        arch.validate().unwrap();
    }

    #[test]
    fn rejects_bad_slots() {
        assert!(Architecture::new(2, vec![vec![0, 0]]).is_err());
        assert!(Architecture::new(2, vec![vec![2]]).is_err());
        assert!(Architecture::new(2, vec![vec![0, 1, 1]]).is_err());
        assert!(Architecture::new(2, vec![]).is_err());
    }

    #[test]
    fn unitary_flag_validated() {
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = Complex64::new(2.0, 0.0);
        m[[1, 1]] = Complex64::new(1.0, 0.0);
        assert!(Gate::new(vec![0], m.clone(), true).is_err());
        assert!(Gate::new(vec![0], m, false).is_ok());
    }

    #[test]
    fn json_round_trip_preserves_entries_and_flag() {
        let arch = Architecture::new(2, vec![vec![0], vec![0, 1]]).unwrap();
        let mut scaled = Array2::eye(4);
        scaled[[2, 2]] = Complex64::new(0.5, 0.25);
        let c = Circuit::new(
            arch,
            vec![
                Gate::bit_flip(0),
                Gate {
                    targets: vec![0, 1],
                    matrix: scaled,
                    unitary: false,
                },
            ],
        )
        .unwrap();
        let back = Circuit::from_json(&c.to_json()).unwrap();
        assert!(back.gates[0].unitary);
        assert!(!back.gates[1].unitary);
        for (a, b) in c.gates.iter().zip(&back.gates) {
            assert_eq!(a.matrix, b.matrix);
        }
    }

    #[test]
    fn mismatched_gate_targets_rejected() {
        let arch = Architecture::new(2, vec![vec![0, 1]]).unwrap();
        let gate = Gate::identity(vec![0]);
        assert!(Circuit::new(arch, vec![gate]).is_err());
    }
}
