//! Gate ensembles: Haar draws, the theta-perturbed family, the
//! (theta, K)-truncated family, coupled joint samples, and the recovery trick
//! that reconstructs the truncated partner from a perturbed circuit.
//!
//! Everything here runs through one spectral decomposition per unitary:
//! H = V diag(e^{i phi}) V* with eigenphases phi in [0, 2 pi). The perturbed
//! gate scales phases by 1 - theta; the truncated gate multiplies each
//! eigenvalue by the order-K Taylor prefix of e^{-i phi theta}, which keeps
//! every matrix entry an exact degree-K polynomial in theta.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::circuit::{Architecture, Circuit, Gate};
use crate::error::{Error, Result};
use crate::rng;

/// Unitarity tolerance for ensemble inputs (looser than the gate-flag check;
/// inputs may be products of several rounded unitaries).
const INPUT_UNITARY_TOL: f64 = 1e-8;

/// Max-norm distance between two matrices.
pub fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn adjoint(m: &Array2<Complex64>) -> Array2<Complex64> {
    m.t().mapv(|z| z.conj())
}

fn unitarity_defect(m: &Array2<Complex64>) -> f64 {
    let gram = adjoint(m).dot(m);
    let eye: Array2<Complex64> = Array2::eye(m.nrows());
    max_abs_diff(&gram, &eye)
}

/// One Newton-Schulz step U <- U (3I - U*U)/2. For a matrix that is unitary
/// up to a few ulps this squares the defect, landing it at the rounding
/// floor; entries move by no more than the defect itself.
pub fn polish_unitary(m: &Array2<Complex64>) -> Array2<Complex64> {
    let dim = m.nrows();
    let gram = adjoint(m).dot(m);
    let mut correction = -gram;
    for i in 0..dim {
        correction[[i, i]] += Complex64::new(3.0, 0.0);
    }
    m.dot(&correction).mapv(|z| z * 0.5)
}

/// Haar-distributed unitary of dimension 2 or 4: complex Gaussian matrix,
/// QR, then the diagonal phase correction that makes the factorization
/// unique (without it the draw is biased toward the QR convention).
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Array2<Complex64>> {
    use ndarray_linalg::QRSquare;
    if dim != 2 && dim != 4 {
        return Err(Error::validation(format!(
            "haar_unitary supports dim 2 or 4, got {dim}"
        )));
    }
    let ginibre = Array2::from_shape_fn((dim, dim), |_| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let (q, r) = ginibre
        .qr_square()
        .map_err(|e| Error::validation(format!("QR factorization failed: {e}")))?;
    let mut u = q;
    for (j, mut col) in u.columns_mut().into_iter().enumerate() {
        let rjj = r[[j, j]];
        let phase = if rjj.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            rjj / rjj.norm()
        };
        col.mapv_inplace(|z| z * phase);
    }
    Ok(polish_unitary(&u))
}

/// Spectral data of a unitary: orthonormal eigenvectors (columns) and
/// eigenphases in [0, 2 pi).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub vectors: Array2<Complex64>,
    pub phases: Vec<f64>,
}

impl EigenSystem {
    /// V diag(f(phi)) V*.
    pub fn synthesize(&self, f: impl Fn(f64) -> Complex64) -> Array2<Complex64> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.columns_mut().into_iter().enumerate() {
            let factor = f(self.phases[j]);
            col.mapv_inplace(|z| z * factor);
        }
        scaled.dot(&adjoint(&self.vectors))
    }

    pub fn unitary(&self) -> Array2<Complex64> {
        self.synthesize(|phi| Complex64::from_polar(1.0, phi))
    }
}

/// Eigendecompose a unitary. The general eigensolver does not promise
/// orthonormal vectors inside degenerate eigenspaces, so the columns are
/// re-orthonormalized (modified Gram-Schmidt, two passes); for a normal
/// matrix this stays within each eigenspace. The decomposition is verified
/// by reassembly before it is returned.
pub fn unitary_eigensystem(u: &Array2<Complex64>) -> Result<EigenSystem> {
    use ndarray_linalg::Eig;
    let defect = unitarity_defect(u);
    if defect > INPUT_UNITARY_TOL {
        return Err(Error::validation(format!(
            "matrix is not unitary (defect {defect:.3e})"
        )));
    }
    let (values, vectors): (Array1<Complex64>, Array2<Complex64>) = u
        .eig()
        .map_err(|e| Error::validation(format!("eigendecomposition failed: {e}")))?;
    let dim = u.nrows();
    let mut v = vectors;
    // Two MGS passes; vectors of well-separated eigenvalues are already
    // orthogonal to rounding, so this only cleans degenerate subspaces.
    for _ in 0..2 {
        for j in 0..dim {
            for i in 0..j {
                let mut proj = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    proj += v[[k, i]].conj() * v[[k, j]];
                }
                for k in 0..dim {
                    let vi = v[[k, i]];
                    v[[k, j]] -= proj * vi;
                }
            }
            let norm: f64 = (0..dim).map(|k| v[[k, j]].norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(Error::validation(
                    "degenerate eigenvector collapsed under orthogonalization",
                ));
            }
            for k in 0..dim {
                v[[k, j]] /= norm;
            }
        }
    }
    let phases: Vec<f64> = values
        .iter()
        .map(|lambda| {
            let phi = lambda.im.atan2(lambda.re);
            if phi < 0.0 {
                phi + TAU
            } else {
                phi
            }
        })
        .collect();
    let system = EigenSystem { vectors: v, phases };
    let rebuilt = system.unitary();
    let err = max_abs_diff(&rebuilt, u);
    if err > 1e-10 {
        return Err(Error::validation(format!(
            "eigendecomposition did not reproduce the input (error {err:.3e})"
        )));
    }
    Ok(system)
}

/// Hermitian generator h with eigenphases in [0, 2 pi), so exp(i h) = H.
pub fn principal_log(h_matrix: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let system = unitary_eigensystem(h_matrix)?;
    let log = system.synthesize(|phi| Complex64::new(phi, 0.0));
    // Force exact Hermitian symmetry; synthesis leaves ulp-level skew.
    let log_adj = adjoint(&log);
    Ok((&log + &log_adj).mapv(|z| z * 0.5))
}

/// Order-K Taylor prefix of e^{-i x}.
fn taylor_prefix(x: f64, order: usize) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let arg = Complex64::new(0.0, -x);
    for j in 1..=order {
        term = term * arg / j as f64;
        sum += term;
    }
    sum
}

/// H^{1-theta}: eigenphases scaled by 1 - theta.
pub fn perturbed_gate(h_matrix: &Array2<Complex64>, theta: f64) -> Result<Array2<Complex64>> {
    check_theta(theta)?;
    let system = unitary_eigensystem(h_matrix)?;
    Ok(perturbed_from_eigen(&system, theta))
}

pub(crate) fn perturbed_from_eigen(system: &EigenSystem, theta: f64) -> Array2<Complex64> {
    polish_unitary(&system.synthesize(|phi| Complex64::from_polar(1.0, phi * (1.0 - theta))))
}

/// H times the order-K Taylor prefix of e^{-i h theta}; each entry is an
/// exact degree-K polynomial in theta. Intentionally non-unitary.
pub fn truncated_gate(
    h_matrix: &Array2<Complex64>,
    theta: f64,
    order: usize,
) -> Result<Array2<Complex64>> {
    check_theta(theta)?;
    let system = unitary_eigensystem(h_matrix)?;
    Ok(truncated_from_eigen(&system, theta, order))
}

pub(crate) fn truncated_from_eigen(
    system: &EigenSystem,
    theta: f64,
    order: usize,
) -> Array2<Complex64> {
    system.synthesize(|phi| Complex64::from_polar(1.0, phi) * taylor_prefix(phi * theta, order))
}

/// Gate-level Taylor remainder bound: with eigenphases below 2 pi, the
/// truncated factor differs from e^{-i h theta} by at most
/// (2 pi theta)^{K+1}/(K+1)! times e^{2 pi theta} in operator norm.
pub fn taylor_remainder_bound(theta: f64, order: usize) -> f64 {
    let x = TAU * theta;
    let mut lead = 1.0f64;
    for j in 1..=(order + 1) {
        lead *= x / j as f64;
    }
    lead * x.exp()
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) || !theta.is_finite() {
        return Err(Error::validation(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EnsembleSpec {
    Haar,
    Perturbed { theta: f64 },
    Truncated { theta: f64, order: usize },
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EnsembleSpec::Haar => Ok(()),
            EnsembleSpec::Perturbed { theta } => check_theta(theta),
            EnsembleSpec::Truncated { theta, .. } => check_theta(theta),
        }
    }
}

/// Draw one circuit: an independent gate per slot, from per-slot RNG streams
/// so any parallel schedule sees the same circuit.
pub fn sample_circuit(arch: &Architecture, spec: &EnsembleSpec, seed: u64) -> Result<Circuit> {
    arch.validate()?;
    spec.validate()?;
    let mut gates = Vec::with_capacity(arch.m());
    for (j, slot) in arch.gate_slots.iter().enumerate() {
        let dim = 1usize << slot.len();
        let mut gate_rng = rng::indexed_stream(seed, "gate", j as u64);
        let haar = haar_unitary(dim, &mut gate_rng)?;
        let gate = match *spec {
            EnsembleSpec::Haar => Gate {
                targets: slot.clone(),
                matrix: haar,
                unitary: true,
            },
            EnsembleSpec::Perturbed { theta } => {
                let system = unitary_eigensystem(&haar)?;
                Gate {
                    targets: slot.clone(),
                    matrix: perturbed_from_eigen(&system, theta),
                    unitary: true,
                }
            }
            EnsembleSpec::Truncated { theta, order } => {
                let system = unitary_eigensystem(&haar)?;
                Gate {
                    targets: slot.clone(),
                    matrix: truncated_from_eigen(&system, theta, order),
                    unitary: false,
                }
            }
        };
        gates.push(gate);
    }
    Circuit::new(arch.clone(), gates)
}

/// A coupled pair over shared Haar draws: c1 scrambles C with perturbed
/// gates, c2 with truncated ones.
#[derive(Debug, Clone)]
pub struct JointCircuitSample {
    pub haar_draws: Vec<Array2<Complex64>>,
    pub c1: Circuit,
    pub c2: Circuit,
    pub theta: f64,
    pub order: usize,
}

/// Gate-wise scramble: slot j of c1 is C_j * perturbed(H_j, theta), slot j of
/// c2 is C_j * truncated(H_j, theta, K), with the same H_j in both.
pub fn scramble_joint(
    circuit: &Circuit,
    theta: f64,
    order: usize,
    seed: u64,
) -> Result<JointCircuitSample> {
    circuit.validate()?;
    check_theta(theta)?;
    let mut haar_draws = Vec::with_capacity(circuit.m());
    let mut gates1 = Vec::with_capacity(circuit.m());
    let mut gates2 = Vec::with_capacity(circuit.m());
    for (j, gate) in circuit.gates.iter().enumerate() {
        let mut gate_rng = rng::indexed_stream(seed, "joint-gate", j as u64);
        let haar = haar_unitary(gate.dim(), &mut gate_rng)?;
        let system = unitary_eigensystem(&haar)?;
        let scrambled = polish_unitary(&gate.matrix.dot(&perturbed_from_eigen(&system, theta)));
        let truncated = gate
            .matrix
            .dot(&truncated_from_eigen(&system, theta, order));
        gates1.push(Gate {
            targets: gate.targets.clone(),
            matrix: scrambled,
            unitary: true,
        });
        gates2.push(Gate {
            targets: gate.targets.clone(),
            matrix: truncated,
            unitary: false,
        });
        haar_draws.push(haar);
    }
    Ok(JointCircuitSample {
        haar_draws,
        c1: Circuit::new(circuit.architecture.clone(), gates1)?,
        c2: Circuit::new(circuit.architecture.clone(), gates2)?,
        theta,
        order,
    })
}

/// Rebuild c2 from (C, c1) alone: strip C_j, eigendecompose what remains,
/// stretch the phases by 1/(1-theta) to recover H_j's spectrum, and emit the
/// truncated gate from that spectrum directly.
///
/// Legal perturbed phases lie in [0, 2 pi (1-theta)); measured phases in the
/// dead zone above that are either boundary noise (lower half: the original
/// phase sat just below 2 pi) or wraparound noise from a phase at 0 that
/// crossed the branch cut (upper half), and fold accordingly. Re-taking a
/// principal log of a rebuilt H would turn that fold into a hard branch
/// flip, which is why the gate is synthesized from the stretched spectrum.
pub fn recover_truncated(
    circuit: &Circuit,
    c1: &Circuit,
    theta: f64,
    order: usize,
) -> Result<Circuit> {
    circuit.validate()?;
    c1.validate()?;
    check_theta(theta)?;
    if theta == 1.0 {
        return Err(Error::degenerate(
            "theta = 1 erases the Haar draw (every perturbed gate is the identity); H_j cannot be recovered",
        ));
    }
    if circuit.architecture != c1.architecture {
        return Err(Error::validation(
            "recover_truncated needs matching architectures",
        ));
    }
    let legal_max = TAU * (1.0 - theta);
    let dead_zone_mid = TAU * (1.0 - theta / 2.0);
    let mut gates = Vec::with_capacity(circuit.m());
    for (gate, scrambled) in circuit.gates.iter().zip(&c1.gates) {
        let residue = adjoint(&gate.matrix).dot(&scrambled.matrix);
        let system = unitary_eigensystem(&residue)?;
        let stretched: Vec<f64> = system
            .phases
            .iter()
            .map(|&psi| {
                if psi >= dead_zone_mid {
                    // Wraparound noise: a phase at 0 measured as 2 pi - eps.
                    0.0
                } else if psi >= legal_max {
                    // Boundary noise: the original phase sat just below 2 pi.
                    TAU * (1.0 - 1e-15)
                } else {
                    psi / (1.0 - theta)
                }
            })
            .collect();
        let recovered = EigenSystem {
            vectors: system.vectors,
            phases: stretched,
        };
        let truncated = gate
            .matrix
            .dot(&truncated_from_eigen(&recovered, theta, order));
        gates.push(Gate {
            targets: gate.targets.clone(),
            matrix: truncated,
            unitary: false,
        });
    }
    Circuit::new(circuit.architecture.clone(), gates)
}

/// Sidecar blob stored next to a serialized joint sample.
#[derive(Serialize, Deserialize)]
struct JointSidecar {
    theta: f64,
    order: usize,
    haar_draws: Vec<Vec<[f64; 2]>>,
}

impl JointCircuitSample {
    /// Write {prefix}-c1.json, {prefix}-c2.json, and {prefix}-joint.json.
    pub fn write_files(&self, prefix: &std::path::Path) -> Result<()> {
        let base = prefix.to_string_lossy();
        self.c1
            .write_file(std::path::Path::new(&format!("{base}-c1.json")))?;
        self.c2
            .write_file(std::path::Path::new(&format!("{base}-c2.json")))?;
        let sidecar = JointSidecar {
            theta: self.theta,
            order: self.order,
            haar_draws: self
                .haar_draws
                .iter()
                .map(|h| h.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        };
        let text =
            serde_json::to_string_pretty(&sidecar).expect("sidecar serialization cannot fail");
        std::fs::write(format!("{base}-joint.json"), text)?;
        Ok(())
    }

    pub fn read_files(prefix: &std::path::Path) -> Result<Self> {
        let base = prefix.to_string_lossy();
        let c1 = Circuit::read_file(std::path::Path::new(&format!("{base}-c1.json")))?;
        let c2 = Circuit::read_file(std::path::Path::new(&format!("{base}-c2.json")))?;
        let text = std::fs::read_to_string(format!("{base}-joint.json"))?;
        let sidecar: JointSidecar = serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("joint sidecar JSON: {e}")))?;
        let haar_draws = sidecar
            .haar_draws
            .iter()
            .zip(&c1.gates)
            .map(|(entries, gate)| {
                let dim = gate.dim();
                if entries.len() != dim * dim {
                    return Err(Error::validation(
                        "sidecar Haar draw has the wrong dimension",
                    ));
                }
                let data: Vec<Complex64> = entries
                    .iter()
                    .map(|[re, im]| Complex64::new(*re, *im))
                    .collect();
                Ok(Array2::from_shape_vec((dim, dim), data).expect("length checked above"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointCircuitSample {
            haar_draws,
            c1,
            c2,
            theta: sidecar.theta,
            order: sidecar.order,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim;
    use ndarray::array;

    fn haar(dim: usize, seed: u64) -> Array2<Complex64> {
        haar_unitary(dim, &mut rng::stream(seed, "test-haar")).unwrap()
    }

    #[test]
    fn haar_draws_are_unitary() {
        for seed in 0..20 {
            for dim in [2, 4] {
                let u = haar(dim, seed);
                assert!(
                    unitarity_defect(&u) <= 1e-12,
                    "defect {}",
                    unitarity_defect(&u)
                );
            }
        }
    }

    #[test]
    fn haar_rejects_other_dims() {
        assert!(haar_unitary(3, &mut rng::stream(0, "x")).is_err());
    }

    #[test]
    fn haar_first_moment() {
        let mut rng = rng::stream(5, "first-moment");
        let trials = 100_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let u = haar_unitary(2, &mut rng).unwrap();
            acc += u[[0, 0]].norm_sqr();
        }
        let mean = acc / trials as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean |U00|^2 = {mean}");
    }

    #[test]
    fn principal_log_identity_is_zero() {
        let eye: Array2<Complex64> = Array2::eye(2);
        let log = principal_log(&eye).unwrap();
        assert!(log.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn principal_log_phase_convention() {
        let m = array![
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)]
        ];
        let log = principal_log(&m).unwrap();
        assert!((log[[0, 0]].re - 0.0).abs() < 1e-12);
        assert!((log[[1, 1]].re - std::f64::consts::PI).abs() < 1e-12);
        assert!(log[[0, 1]].norm() < 1e-12 && log[[1, 0]].norm() < 1e-12);
    }

    #[test]
    fn principal_log_round_trip() {
        for seed in 0..10 {
            let u = haar(4, seed);
            let log = principal_log(&u).unwrap();
            let system = unitary_eigensystem(&u).unwrap();
            assert!(system.phases.iter().all(|&p| (0.0..TAU).contains(&p)));
            // exp(i h) via the spectral data of h itself.
            let herm_defect = max_abs_diff(&log, &adjoint(&log));
            assert!(herm_defect < 1e-13);
            let rebuilt = system.synthesize(|phi| Complex64::from_polar(1.0, phi));
            assert!(max_abs_diff(&rebuilt, &u) <= 1e-10);
        }
    }

    #[test]
    fn principal_log_rejects_non_unitary() {
        let m = array![
            [Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
        ];
        assert!(principal_log(&m).is_err());
    }

    #[test]
    fn perturbed_endpoints() {
        let u = haar(4, 3);
        assert!(max_abs_diff(&perturbed_gate(&u, 0.0).unwrap(), &u) <= 1e-12);
        let eye: Array2<Complex64> = Array2::eye(4);
        assert!(max_abs_diff(&perturbed_gate(&u, 1.0).unwrap(), &eye) <= 1e-12);
    }

    #[test]
    fn perturbed_half_squares_back() {
        for seed in 0..10 {
            let u = haar(4, 100 + seed);
            let half = perturbed_gate(&u, 0.5).unwrap();
            let squared = half.dot(&half);
            assert!(max_abs_diff(&squared, &u) <= 1e-10);
        }
    }

    #[test]
    fn perturbed_phases_live_below_the_cutoff() {
        let theta = 0.3;
        for seed in 0..10 {
            let u = haar(4, 200 + seed);
            let p = perturbed_gate(&u, theta).unwrap();
            let system = unitary_eigensystem(&p).unwrap();
            for &phi in &system.phases {
                assert!(
                    phi < TAU * (1.0 - theta) + 1e-9,
                    "phase {phi} breaches the zero-density region"
                );
            }
        }
    }

    #[test]
    fn truncated_endpoints_reproduce_h() {
        let u = haar(4, 7);
        assert!(max_abs_diff(&truncated_gate(&u, 0.0, 5).unwrap(), &u) <= 1e-12);
        assert!(max_abs_diff(&truncated_gate(&u, 0.7, 0).unwrap(), &u) <= 1e-12);
    }

    #[test]
    fn truncated_converges_within_taylor_bound() {
        let theta = 0.1;
        for seed in 0..5 {
            let u = haar(4, 300 + seed);
            let target = perturbed_gate(&u, theta).unwrap();
            let mut last = f64::INFINITY;
            for order in 1..=12 {
                let gap = max_abs_diff(&truncated_gate(&u, theta, order).unwrap(), &target);
                let bound = taylor_remainder_bound(theta, order);
                assert!(
                    gap <= bound,
                    "order {order}: gap {gap:.3e} above bound {bound:.3e}"
                );
                assert!(
                    gap <= last * 1.001,
                    "order {order}: gap {gap:.3e} grew from {last:.3e}"
                );
                last = gap;
            }
        }
    }

    #[test]
    fn truncated_entries_are_polynomial_in_theta() {
        // Coefficient matrices from K+1 evaluations at distinct thetas, then
        // compared against a direct evaluation elsewhere.
        let u = haar(2, 9);
        let order = 4;
        let nodes: Vec<f64> = (0..=order).map(|i| i as f64 / (order + 1) as f64).collect();
        let evals: Vec<Array2<Complex64>> = nodes
            .iter()
            .map(|&t| truncated_gate(&u, t, order).unwrap())
            .collect();
        let probe = 0.83;
        let direct = truncated_gate(&u, probe, order).unwrap();
        // Lagrange interpolation of each entry.
        let mut reconstructed: Array2<Complex64> = Array2::zeros((2, 2));
        for (i, &xi) in nodes.iter().enumerate() {
            let mut weight = 1.0;
            for (j, &xj) in nodes.iter().enumerate() {
                if i != j {
                    weight *= (probe - xj) / (xi - xj);
                }
            }
            reconstructed = reconstructed + evals[i].mapv(|z| z * weight);
        }
        assert!(max_abs_diff(&reconstructed, &direct) <= 1e-12);
    }

    #[test]
    fn sample_circuit_haar_gates_pass_unitarity() {
        let arch = Architecture::line(3, 4).unwrap();
        let c = sample_circuit(&arch, &EnsembleSpec::Haar, 21).unwrap();
        assert!(c.gates.iter().all(|g| g.unitary));
        c.validate().unwrap();
    }

    #[test]
    fn sample_circuit_perturbed_theta_one_is_identity() {
        let arch = Architecture::line(3, 4).unwrap();
        let c = sample_circuit(&arch, &EnsembleSpec::Perturbed { theta: 1.0 }, 22).unwrap();
        for gate in &c.gates {
            let eye: Array2<Complex64> = Array2::eye(gate.dim());
            assert!(max_abs_diff(&gate.matrix, &eye) <= 1e-12);
        }
    }

    #[test]
    fn sample_circuit_is_seed_deterministic() {
        let arch = Architecture::line(3, 4).unwrap();
        let a = sample_circuit(&arch, &EnsembleSpec::Haar, 5).unwrap();
        let b = sample_circuit(&arch, &EnsembleSpec::Haar, 5).unwrap();
        for (x, y) in a.gates.iter().zip(&b.gates) {
            assert_eq!(x.matrix, y.matrix);
        }
    }

    #[test]
    fn scramble_joint_theta_zero_collapses_the_pair() {
        let arch = Architecture::line(2, 3).unwrap();
        let c = sample_circuit(&arch, &EnsembleSpec::Haar, 31).unwrap();
        let joint = scramble_joint(&c, 0.0, 8, 32).unwrap();
        for (g1, g2) in joint.c1.gates.iter().zip(&joint.c2.gates) {
            assert!(max_abs_diff(&g1.matrix, &g2.matrix) <= 1e-12);
        }
        // Gate-wise product against the stored draws.
        for ((cg, hm), g1) in c.gates.iter().zip(&joint.haar_draws).zip(&joint.c1.gates) {
            assert!(max_abs_diff(&cg.matrix.dot(hm), &g1.matrix) <= 1e-12);
        }
    }

    #[test]
    fn scramble_joint_small_theta_probabilities_agree() {
        let arch = Architecture::line(2, 3).unwrap();
        let c = sample_circuit(&arch, &EnsembleSpec::Haar, 41).unwrap();
        let joint = scramble_joint(&c, 0.01, 10, 42).unwrap();
        let p1 = sim::output_probability(&joint.c1, 0).unwrap();
        let p2 = sim::output_probability(&joint.c2, 0).unwrap();
        assert!((p1 - p2).abs() <= 1e-12, "gap {}", (p1 - p2).abs());
    }

    #[test]
    fn recover_round_trip() {
        let arch = Architecture::line(2, 3).unwrap();
        let c = sample_circuit(&arch, &EnsembleSpec::Haar, 51).unwrap();
        for theta in [0.05, 0.3, 0.9] {
            let joint = scramble_joint(&c, theta, 6, 52).unwrap();
            let rebuilt = recover_truncated(&c, &joint.c1, theta, 6).unwrap();
            for (a, b) in rebuilt.gates.iter().zip(&joint.c2.gates) {
                assert!(
                    max_abs_diff(&a.matrix, &b.matrix) <= 1e-9,
                    "theta {theta}: {}",
                    max_abs_diff(&a.matrix, &b.matrix)
                );
            }
        }
    }

    #[test]
    fn recover_identity_circuit_theta_zero() {
        let arch = Architecture::line(2, 2).unwrap();
        let c = Circuit::identity(arch);
        let joint = scramble_joint(&c, 0.0, 4, 61).unwrap();
        let rebuilt = recover_truncated(&c, &joint.c1, 0.0, 4).unwrap();
        for (a, b) in rebuilt.gates.iter().zip(&joint.c1.gates) {
            assert!(max_abs_diff(&a.matrix, &b.matrix) <= 1e-12);
        }
    }

    #[test]
    fn recover_rejects_theta_one() {
        let arch = Architecture::line(2, 2).unwrap();
        let c = Circuit::identity(arch.clone());
        let joint = scramble_joint(&c, 0.5, 4, 62).unwrap();
        assert!(matches!(
            recover_truncated(&c, &joint.c1, 1.0, 4),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn recover_handles_phase_at_the_wrap_boundary() {
        // Hand-built H with an eigenphase just below 2 pi, so the perturbed
        // phase sits at the top of the legal range.
        let theta = 0.25;
        let phi_hot = TAU - 1e-6 / (1.0 - theta);
        let base = haar(2, 71);
        let system = unitary_eigensystem(&base).unwrap();
        let h = EigenSystem {
            vectors: system.vectors.clone(),
            phases: vec![phi_hot, 1.0],
        }
        .unitary();
        let arch = Architecture::new(1, vec![vec![0]]).unwrap();
        let c = Circuit::identity(arch.clone());
        // Build c1/c2 by hand from the fixed H rather than a random draw.
        let hsys = unitary_eigensystem(&h).unwrap();
        let c1 = Circuit::new(
            arch.clone(),
            vec![Gate {
                targets: vec![0],
                matrix: perturbed_from_eigen(&hsys, theta),
                unitary: true,
            }],
        )
        .unwrap();
        let expected = truncated_from_eigen(&hsys, theta, 6);
        let rebuilt = recover_truncated(&c, &c1, theta, 6).unwrap();
        assert!(
            max_abs_diff(&rebuilt.gates[0].matrix, &expected) <= 1e-6,
            "boundary gap {}",
            max_abs_diff(&rebuilt.gates[0].matrix, &expected)
        );
    }

    #[test]
    fn joint_sample_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let arch = Architecture::line(2, 2).unwrap();
        let c = sample_circuit(&arch, &EnsembleSpec::Haar, 81).unwrap();
        let joint = scramble_joint(&c, 0.2, 5, 82).unwrap();
        let prefix = dir.path().join("pair");
        joint.write_files(&prefix).unwrap();
        let back = JointCircuitSample::read_files(&prefix).unwrap();
        assert_eq!(back.theta, joint.theta);
        assert_eq!(back.order, joint.order);
        for (a, b) in back.haar_draws.iter().zip(&joint.haar_draws) {
            assert!(max_abs_diff(a, b) == 0.0);
        }
        for (a, b) in back.c2.gates.iter().zip(&joint.c2.gates) {
            assert_eq!(a.matrix, b.matrix);
            assert!(!a.unitary);
        }
    }

    #[test]
    fn left_invariance_statistic() {
        // |U_00|^2 samples with and without a fixed left factor; two-sample
        // KS below the 1% critical value for 10^4 draws per side.
        let v = haar(2, 91);
        let mut rng = rng::stream(92, "left-invariance");
        let draws = 10_000;
        let mut plain: Vec<f64> = Vec::with_capacity(draws);
        let mut shifted: Vec<f64> = Vec::with_capacity(draws);
        for _ in 0..draws {
            let u = haar_unitary(2, &mut rng).unwrap();
            plain.push(u[[0, 0]].norm_sqr());
            shifted.push(v.dot(&u)[[0, 0]].norm_sqr());
        }
        plain.sort_by(f64::total_cmp);
        shifted.sort_by(f64::total_cmp);
        let mut ks = 0.0f64;
        let (mut i, mut j) = (0usize, 0usize);
        while i < draws && j < draws {
            if plain[i] <= shifted[j] {
                i += 1;
            } else {
                j += 1;
            }
            ks = ks.max((i as f64 / draws as f64 - j as f64 / draws as f64).abs());
        }
        // c(0.01) sqrt(2/n) with c = 1.628.
        let critical = 1.628 * (2.0 / draws as f64).sqrt();
        assert!(ks <= critical, "KS {ks} above {critical}");
    }
}
