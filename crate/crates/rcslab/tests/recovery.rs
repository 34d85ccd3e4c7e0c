//! End-to-end recovery: at a sufficiently high truncation order the full
//! pipeline — scramble, query, fit, extrapolate — returns the target
//! probability to tight tolerance on the same circuit shape on which the
//! low-order acceptance criterion fails.

use rand::Rng;
use rcslab::circuit::Architecture;
use rcslab::ensemble::{sample_circuit, EnsembleSpec};
use rcslab::reduction::{worst_to_average, ExactProbOracle, ReductionConfig};
use rcslab::rng;

#[test]
fn end_to_end_recovery_at_high_truncation_order() {
    let arch = Architecture::line_with_slots(2, 3).unwrap();
    let mut deltas = Vec::with_capacity(20);
    for t in 0..20u64 {
        let circuit_seed = rng::indexed_stream(0xE2E, "recovery-circuit", t).gen::<u64>();
        let c = sample_circuit(&arch, &EnsembleSpec::Haar, circuit_seed).unwrap();
        let mut cfg = ReductionConfig::for_circuit(c.m(), 30);
        cfg.precision_bits = 2048;
        cfg.repetitions = 1;
        let mut oracle = ExactProbOracle;
        let w2a_seed = rng::indexed_stream(0xE2E, "recovery-w2a", t).gen::<u64>();
        let report = worst_to_average(&c, &cfg, &mut oracle, w2a_seed).unwrap();
        assert!(
            !report.conditioning_alert,
            "circuit {t}: unexpected conditioning alert"
        );
        deltas.push((report.estimate - report.direct_p0).abs());
    }
    let hits = deltas.iter().filter(|&&d| d <= 1e-6).count();
    let mut sorted = deltas;
    sorted.sort_by(f64::total_cmp);
    let median = (sorted[9] + sorted[10]) / 2.0;
    assert!(
        hits >= 19,
        "only {hits}/20 circuits recovered within 1e-6 (median |delta| = {median:.2e})"
    );
    assert!(median <= 1e-9, "median |delta| = {median:.2e} exceeds 1e-9");
}
