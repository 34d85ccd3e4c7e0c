//! Worst-to-average-case reduction for circuit output probabilities.
//!
//! For a fixed worst-case circuit C and fixed Haar draws {H_j}, the gate-wise
//! truncated scramble C'(theta) has entries that are degree-K polynomials in
//! theta, so q(theta) = p_0(C'(theta)) is a real polynomial of degree at most
//! 2mK. An oracle that answers p_0 on circuits drawn from the scramble
//! distribution is queried at nodes packed into [0, theta_max); fitting q
//! through those answers and evaluating at theta = 1 recovers p_0(C) up to
//! the truncation gap at full strength, because the scramble at theta = 1
//! restores C itself.
//!
//! The whole fit runs in high precision: the extrapolation to 1 amplifies
//! node errors by the barycentric condition factor, which is astronomically
//! large for tight node intervals, leaving double precision no usable digits.

use ndarray::Array2;
use num_complex::Complex64;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::ensemble::{
    haar_unitary, perturbed_from_eigen, truncated_from_eigen, unitary_eigensystem,
};
use crate::error::{Error, Result};
use crate::field::{Field, HpComplexField};
use crate::hp::{
    barycentric_eval, barycentric_weights, chebyshev_nodes, condition_factor, hp_p0, hp_polar,
    hp_taylor_prefix, uniform_nodes, HComplex, HpCircuit, HpGate, HpMatrix,
};
use crate::poly::bw_decode;
use crate::rng;
use crate::sim;

/// When interp_residual times the condition factor exceeds this, the report
/// raises its conditioning alert: extrapolated digits past this scale are
/// not trustworthy.
pub const CONDITIONING_ALERT_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeScheme {
    Chebyshev,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    /// Taylor truncation order K of the scrambled gates.
    pub k_order: usize,
    /// Nodes live in [0, theta_max); must be below 1.
    pub theta_max: f64,
    /// Number of oracle nodes k.
    pub num_points: usize,
    /// Mantissa bits for node values, weights, and the extrapolation.
    pub precision_bits: u32,
    pub node_scheme: NodeScheme,
    /// Fresh-scramble repetitions; the estimate is their median.
    pub repetitions: usize,
}

impl ReductionConfig {
    /// Defaults for an m-gate circuit: theta_max = 1/(10 m) keeps the nodes
    /// well inside the small-angle window while the Chebyshev layout keeps
    /// the condition factor as small as the interval allows; k = 2mK + 1 is
    /// the minimum for a noiseless fit.
    pub fn for_circuit(m: usize, k_order: usize) -> Self {
        ReductionConfig {
            k_order,
            theta_max: 1.0 / (10.0 * m.max(1) as f64),
            num_points: 2 * m * k_order + 1,
            precision_bits: 512,
            node_scheme: NodeScheme::Chebyshev,
            repetitions: 3,
        }
    }

    /// Degree bound of q for an m-gate circuit.
    pub fn degree(&self, m: usize) -> usize {
        2 * m * self.k_order
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        match self.node_scheme {
            NodeScheme::Chebyshev => chebyshev_nodes(self.num_points, self.theta_max),
            NodeScheme::Uniform => uniform_nodes(self.num_points, self.theta_max),
        }
    }

    pub fn validate(&self, m: usize, corruption_budget: usize) -> Result<()> {
        if !(self.theta_max > 0.0 && self.theta_max < 1.0) {
            return Err(Error::validation(format!(
                "theta_max must lie in (0, 1), got {}",
                self.theta_max
            )));
        }
        let needed = self.degree(m) + 2 * corruption_budget + 1;
        if self.num_points < needed {
            return Err(Error::validation(format!(
                "fitting degree {} with {corruption_budget} corruptions needs at least {needed} nodes, got {}",
                self.degree(m),
                self.num_points
            )));
        }
        if self.precision_bits < 64 {
            return Err(Error::validation(
                "precision below 64 bits cannot carry the fit",
            ));
        }
        if self.precision_bits > 1 << 20 {
            return Err(Error::resource(
                "precision beyond 2^20 bits is not supported",
            ));
        }
        if self.repetitions == 0 {
            return Err(Error::validation("at least one repetition is required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    /// Fitted polynomial evaluated at theta = 1 (median over repetitions).
    pub estimate: f64,
    /// p_0(C) simulated directly.
    pub direct_p0: f64,
    /// |q(1) - p_0(C)| on the first repetition's draws: what truncation
    /// alone costs at full strength, independent of the fit.
    pub truncation_gap: f64,
    /// Largest deviation of a fitted polynomial from the true q at a
    /// held-out probe point, across repetitions.
    pub interp_residual: f64,
    /// Barycentric error amplification from the nodes to theta = 1.
    pub condition_factor: f64,
    /// True when interp_residual * condition_factor exceeds the alert scale:
    /// the extrapolated value's error bar swamps the target accuracy.
    pub conditioning_alert: bool,
    pub notes: Vec<String>,
}

// ---------------------------------------------------------------------------
// The polynomial q as an evaluable object.

struct QPolyGate {
    targets: Vec<usize>,
    /// promote(C_j) * promote(V_j)
    a: HpMatrix,
    /// promote(V_j)^dagger
    b: HpMatrix,
    /// Eigenphases of H_j in [0, 2 pi), promoted.
    phases: Vec<Float>,
}

/// High-precision evaluator of q(theta) = p_0(C'(theta)) for fixed draws.
///
/// Gate j of C'(theta) is C_j V diag(e^{i phi} tau_K(phi theta)) V*, so its
/// entries are exact degree-K polynomials in theta with coefficients
/// determined by the (double-precision) spectral data. Promoting that data
/// once and evaluating the diagonal in software floats keeps every node
/// value on the *same* polynomial to within 2^-prec — which is what the
/// extrapolation's condition factor demands.
pub struct QPoly {
    n: usize,
    prec: u32,
    order: usize,
    gates: Vec<QPolyGate>,
}

impl QPoly {
    pub fn build(
        circuit: &Circuit,
        haar_draws: &[Array2<Complex64>],
        order: usize,
        prec: u32,
    ) -> Result<Self> {
        circuit.validate()?;
        sim::check_qubit_budget(circuit.n())?;
        if haar_draws.len() != circuit.m() {
            return Err(Error::validation(format!(
                "{} draws supplied for {} gate slots",
                haar_draws.len(),
                circuit.m()
            )));
        }
        let mut gates = Vec::with_capacity(circuit.m());
        for (gate, draw) in circuit.gates.iter().zip(haar_draws) {
            if draw.nrows() != gate.dim() || draw.ncols() != gate.dim() {
                return Err(Error::validation(
                    "draw dimension does not match its gate slot",
                ));
            }
            let system = unitary_eigensystem(draw)?;
            let v = HpMatrix::promote(prec, &system.vectors);
            let a = HpMatrix::promote(prec, &gate.matrix).dot(&v);
            let b = v.adjoint();
            let phases = system
                .phases
                .iter()
                .map(|&p| Float::with_val(prec, p))
                .collect();
            gates.push(QPolyGate {
                targets: gate.targets.clone(),
                a,
                b,
                phases,
            });
        }
        Ok(QPoly {
            n: circuit.n(),
            prec,
            order,
            gates,
        })
    }

    pub fn degree(&self) -> usize {
        2 * self.order * self.gates.len()
    }

    /// The truncated scramble C'(theta) with high-precision entries.
    pub fn truncated_circuit_at(&self, theta: f64) -> HpCircuit {
        let t = Float::with_val(self.prec, theta);
        let gates = self
            .gates
            .iter()
            .map(|g| {
                let factors: Vec<HComplex> = g
                    .phases
                    .iter()
                    .map(|phi| {
                        let arg = Float::with_val(self.prec, phi * &t);
                        hp_polar(phi).mul(&hp_taylor_prefix(&arg, self.order))
                    })
                    .collect();
                HpGate {
                    targets: g.targets.clone(),
                    matrix: g.a.scale_columns(&factors).dot(&g.b),
                }
            })
            .collect();
        HpCircuit {
            n: self.n,
            prec: self.prec,
            gates,
        }
    }

    /// q(theta) in high precision.
    pub fn value(&self, theta: f64) -> Float {
        hp_p0(&self.truncated_circuit_at(theta), self.prec)
    }
}

/// q(theta) for explicit draws; the standalone form of [`QPoly::value`].
pub fn evaluate_q(
    circuit: &Circuit,
    haar_draws: &[Array2<Complex64>],
    theta: f64,
    order: usize,
    prec: u32,
) -> Result<Float> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::validation(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    Ok(QPoly::build(circuit, haar_draws, order, prec)?.value(theta))
}

/// |p_0(perturbed scramble) - p_0(truncated scramble)| on shared draws, in
/// double precision: how much the order-K truncation moves the probability
/// at strength theta.
pub fn truncation_gap(
    circuit: &Circuit,
    haar_draws: &[Array2<Complex64>],
    theta: f64,
    order: usize,
) -> Result<f64> {
    circuit.validate()?;
    if haar_draws.len() != circuit.m() {
        return Err(Error::validation(format!(
            "{} draws supplied for {} gate slots",
            haar_draws.len(),
            circuit.m()
        )));
    }
    let mut perturbed_gates = Vec::with_capacity(circuit.m());
    let mut truncated_gates = Vec::with_capacity(circuit.m());
    for (gate, draw) in circuit.gates.iter().zip(haar_draws) {
        let system = unitary_eigensystem(draw)?;
        perturbed_gates.push(crate::circuit::Gate {
            targets: gate.targets.clone(),
            matrix: gate.matrix.dot(&perturbed_from_eigen(&system, theta)),
            unitary: true,
        });
        truncated_gates.push(crate::circuit::Gate {
            targets: gate.targets.clone(),
            matrix: gate
                .matrix
                .dot(&truncated_from_eigen(&system, theta, order)),
            unitary: false,
        });
    }
    let arch = circuit.architecture.clone();
    let p1 = sim::output_probability(&Circuit::new(arch.clone(), perturbed_gates)?, 0)?;
    let p2 = sim::output_probability(&Circuit::new(arch, truncated_gates)?, 0)?;
    Ok((p1 - p2).abs())
}

/// Circuit-level probability bound implied by the gate-level Taylor
/// remainder: with per-gate operator-norm gap delta, the amplitude moves by
/// at most m delta (1+delta)^{m-1} and the probability by a touch more.
pub fn truncation_probability_bound(m: usize, theta: f64, order: usize) -> f64 {
    let delta = crate::ensemble::taylor_remainder_bound(theta, order);
    let amp = m as f64 * delta * (1.0 + delta).powi(m.saturating_sub(1) as i32);
    (2.0 + amp) * amp
}

// ---------------------------------------------------------------------------
// Oracles.

/// Answers p_0 for circuits drawn from the truncated scramble distribution.
/// The harness never reveals which node a circuit corresponds to, mirroring
/// an average-case solver that only sees instances.
pub trait ProbOracle {
    fn p0(&mut self, circuit: &HpCircuit) -> Result<Float>;
    /// Maximum corrupted answers per batch of `num_points` queries this
    /// oracle is declared to produce. Nonzero budgets switch the fit from
    /// plain interpolation to error-correcting decoding.
    fn corruption_budget(&self) -> usize {
        0
    }
}

/// Noiseless oracle: simulates the circuit it is handed, at the circuit's
/// own precision.
pub struct ExactProbOracle;

impl ProbOracle for ExactProbOracle {
    fn p0(&mut self, circuit: &HpCircuit) -> Result<Float> {
        Ok(hp_p0(circuit, circuit.prec))
    }
}

/// Wraps the noiseless answer and corrupts exactly `budget` uniformly chosen
/// answers out of every window of `batch_size` consecutive calls, by adding
/// an offset in [0.1, 1). Deterministic in its seed.
pub struct CorruptingProbOracle {
    batch_size: usize,
    budget: usize,
    rng: rand_chacha::ChaCha12Rng,
    call_in_batch: usize,
    corrupt_now: Vec<bool>,
    pub corruptions: u64,
}

impl CorruptingProbOracle {
    pub fn new(batch_size: usize, budget: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 || budget > batch_size {
            return Err(Error::validation(
                "corruption budget cannot exceed the batch size",
            ));
        }
        Ok(CorruptingProbOracle {
            batch_size,
            budget,
            rng: rng::stream(seed, "prob-oracle-corruption"),
            call_in_batch: 0,
            corrupt_now: Vec::new(),
            corruptions: 0,
        })
    }
}

impl ProbOracle for CorruptingProbOracle {
    fn p0(&mut self, circuit: &HpCircuit) -> Result<Float> {
        use rand::seq::SliceRandom;
        use rand::Rng;
        if self.call_in_batch == 0 {
            let mut idx: Vec<usize> = (0..self.batch_size).collect();
            idx.shuffle(&mut self.rng);
            let mut plan = vec![false; self.batch_size];
            for &i in idx.iter().take(self.budget) {
                plan[i] = true;
            }
            self.corrupt_now = plan;
        }
        let mut value = hp_p0(circuit, circuit.prec);
        if self.corrupt_now[self.call_in_batch] {
            self.corruptions += 1;
            value += Float::with_val(circuit.prec, self.rng.gen_range(0.1..1.0));
        }
        self.call_in_batch = (self.call_in_batch + 1) % self.batch_size;
        Ok(value)
    }

    fn corruption_budget(&self) -> usize {
        self.budget
    }
}

// ---------------------------------------------------------------------------
// The reduction.

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Recover p_0(C) from an oracle for random scrambled circuits.
///
/// Per repetition: draw fresh {H_j}, query the oracle at every node, fit the
/// degree-2mK polynomial (plain barycentric interpolation for a noiseless
/// oracle, error-correcting decoding when a corruption budget is declared),
/// and evaluate the fit at theta = 1. The estimate is the median across
/// repetitions; the residual at a held-out probe point and the barycentric
/// condition factor quantify how trustworthy the extrapolation is, and a
/// decode failure is a hard error rather than a silently wrong answer.
pub fn worst_to_average(
    circuit: &Circuit,
    cfg: &ReductionConfig,
    oracle: &mut dyn ProbOracle,
    seed: u64,
) -> Result<ReductionReport> {
    circuit.validate()?;
    sim::check_qubit_budget(circuit.n())?;
    let m = circuit.m();
    let budget = oracle.corruption_budget();
    cfg.validate(m, budget)?;
    let prec = cfg.precision_bits;
    let degree = cfg.degree(m);
    let nodes = cfg.nodes()?;
    let weights = barycentric_weights(prec, &nodes)?;
    let kappa = condition_factor(&nodes, &weights, 1.0, prec)?;
    let direct_p0 = sim::output_probability(circuit, 0)?;
    // Held-out probe between the two central nodes (never a node itself).
    let probe = if nodes.len() >= 2 {
        Some(0.5 * (nodes[nodes.len() / 2 - 1] + nodes[nodes.len() / 2]))
    } else {
        None
    };

    let mut estimates = Vec::with_capacity(cfg.repetitions);
    let mut residuals = Vec::with_capacity(cfg.repetitions);
    let mut truncation_gap_at_one = 0.0f64;
    for rep in 0..cfg.repetitions {
        let draws: Vec<Array2<Complex64>> = circuit
            .gates
            .iter()
            .enumerate()
            .map(|(j, g)| {
                let mut gate_rng = rng::stream(seed, &format!("w2a-round-{rep}-gate-{j}"));
                haar_unitary(g.dim(), &mut gate_rng)
            })
            .collect::<Result<_>>()?;
        let qpoly = QPoly::build(circuit, &draws, cfg.k_order, prec)?;
        if rep == 0 {
            let q_at_one = qpoly.value(1.0);
            truncation_gap_at_one = Float::with_val(prec, &q_at_one - direct_p0).abs().to_f64();
        }
        let values: Vec<Float> = nodes
            .iter()
            .map(|&x| oracle.p0(&qpoly.truncated_circuit_at(x)))
            .collect::<Result<_>>()?;

        let (estimate_rep, residual_rep) = if budget == 0 {
            let at_one = barycentric_eval(&nodes, &weights, &values, 1.0, prec)?;
            let residual = match probe {
                Some(x) => {
                    let fitted = barycentric_eval(&nodes, &weights, &values, x, prec)?;
                    Float::with_val(prec, &fitted - &qpoly.value(x))
                        .abs()
                        .to_f64()
                }
                None => 0.0,
            };
            (at_one.to_f64(), residual)
        } else {
            let field = HpComplexField::new(prec);
            let xs: Vec<HComplex> = nodes
                .iter()
                .map(|&x| HComplex::from_f64s(prec, x, 0.0))
                .collect();
            let ys: Vec<HComplex> = values
                .iter()
                .map(|v| HComplex {
                    re: v.clone(),
                    im: Float::new(prec),
                })
                .collect();
            let fit = bw_decode(&field, &xs, &ys, degree, budget)?;
            let at_one = fit.eval(&field, &field.one());
            let residual = match probe {
                Some(x) => {
                    let fitted = fit.eval(&field, &HComplex::from_f64s(prec, x, 0.0));
                    let truth = HComplex {
                        re: qpoly.value(x),
                        im: Float::new(prec),
                    };
                    fitted.sub(&truth).abs().to_f64()
                }
                None => 0.0,
            };
            (at_one.re.to_f64(), residual)
        };
        estimates.push(estimate_rep);
        residuals.push(residual_rep);
    }

    let estimate = median(&mut estimates);
    let interp_residual = residuals.iter().cloned().fold(0.0, f64::max);
    let conditioning_alert = interp_residual * kappa > CONDITIONING_ALERT_SCALE;
    let mut notes = Vec::new();
    if conditioning_alert {
        notes.push(format!(
            "residual {interp_residual:.3e} times condition factor {kappa:.3e} exceeds {CONDITIONING_ALERT_SCALE:.1e}: extrapolated digits beyond that scale are unreliable"
        ));
    }
    Ok(ReductionReport {
        estimate,
        direct_p0,
        truncation_gap: truncation_gap_at_one,
        interp_residual,
        condition_factor: kappa,
        conditioning_alert,
        notes,
    })
}
