//! Verification measures over output distributions: cross-entropy scores,
//! heavy-output weight, Porter-Thomas shape diagnostics, spoofing
//! counterexamples, the depolarizing model, a classical count-based
//! imposter, and anti-concentration estimation.
//!
//! Conventions: logarithms are natural throughout; the cross-entropy
//! difference (CED) against a reference R is CE(U, R) - CE(D, R) where U is
//! uniform, so the reference itself scores ~1 on well-scrambled circuits,
//! uniform scores exactly 0, and the empirical estimator replaces the
//! uniform baseline with its analytic mean log N + gamma.

use serde::{Deserialize, Serialize};

use crate::circuit::Architecture;
use crate::dist::{OutputDistribution, SampleSet};
use crate::ensemble::{sample_circuit, EnsembleSpec};
use crate::error::{Error, Result};
use crate::rng;
use crate::sim;
use crate::util::kahan_sum;

/// Euler-Mascheroni constant: mean of -log(uniform-order-statistics) scale,
/// the analytic baseline for the empirical cross-entropy difference.
pub const EULER_GAMMA: f64 = 0.5772156649015329;

/// Exact-mode verification scores of a distribution against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    /// Cross entropy CE(D, R) = sum_x D(x) log(1/R(x)).
    pub ce: f64,
    /// Cross-entropy difference CE(U, R) - CE(D, R).
    pub ced: f64,
    /// Total variation distance (1/2) sum_x |D(x) - R(x)|.
    pub tv: f64,
    /// Weight D places on outcomes where R is at or above its heavy-output
    /// threshold ln2 / N.
    pub hog: f64,
    /// 0 in exact-distribution mode; set by empirical estimators.
    pub sample_count: usize,
}

fn check_same_size(d: &OutputDistribution, r: &OutputDistribution) -> Result<()> {
    if d.n != r.n {
        return Err(Error::validation(format!(
            "distributions live on different spaces: {} vs {} qubits",
            d.n, r.n
        )));
    }
    Ok(())
}

/// CE(D, R); an outcome with D > 0 but R = 0 makes it infinite, reported as
/// an error so it cannot be averaged away silently.
fn cross_entropy(d: &OutputDistribution, r: &OutputDistribution) -> Result<f64> {
    for (x, (&p, &q)) in d.probs.iter().zip(&r.probs).enumerate() {
        if p > 0.0 && q == 0.0 {
            return Err(Error::validation(format!(
                "cross entropy is infinite: reference vanishes at outcome {x:#x} which carries mass {p}"
            )));
        }
    }
    Ok(kahan_sum(d.probs.iter().zip(&r.probs).map(|(&p, &q)| {
        if p > 0.0 {
            -p * q.ln()
        } else {
            0.0
        }
    })))
}

/// Shannon entropy of D in nats.
pub fn entropy(d: &OutputDistribution) -> f64 {
    kahan_sum(
        d.probs
            .iter()
            .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 }),
    )
}

/// Exact CE / CED / TV / HOG of a distribution against a reference.
///
/// The reference must be strictly positive: the CED baseline is the cross
/// entropy of the uniform distribution against it, which is infinite as
/// soon as any outcome has zero reference mass.
pub fn divergences(
    d: &OutputDistribution,
    reference: &OutputDistribution,
) -> Result<MeasureReport> {
    check_same_size(d, reference)?;
    let uniform = OutputDistribution::uniform(d.n);
    let ce = cross_entropy(d, reference)?;
    let ce_uniform = cross_entropy(&uniform, reference)?;
    let tv = 0.5
        * kahan_sum(
            d.probs
                .iter()
                .zip(&reference.probs)
                .map(|(&p, &q)| (p - q).abs()),
        );
    Ok(MeasureReport {
        ce,
        ced: ce_uniform - ce,
        tv,
        hog: hog_score(d, reference)?,
        sample_count: 0,
    })
}

/// Plug-in cross-entropy-difference estimate from samples:
/// (log N + gamma) - (1/k) sum_i log(1/ideal(x_i)).
pub fn empirical_ced(samples: &SampleSet, ideal: &OutputDistribution) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::validation("cannot estimate from zero samples"));
    }
    if samples.n != ideal.n {
        return Err(Error::validation(format!(
            "samples are {}-bit strings but the ideal distribution is over {} qubits",
            samples.n, ideal.n
        )));
    }
    let mut total = 0.0;
    for &x in &samples.outcomes {
        let p = ideal.probs[x as usize];
        if p == 0.0 {
            return Err(Error::validation(format!(
                "empirical cross entropy is infinite: ideal probability of observed outcome {x:#x} is zero"
            )));
        }
        total += -p.ln();
    }
    let baseline = (ideal.size() as f64).ln() + EULER_GAMMA;
    Ok(baseline - total / samples.len() as f64)
}

/// Heavy-output threshold: the median of the Porter-Thomas law, ln2 / N.
pub fn heavy_threshold(n: usize) -> f64 {
    std::f64::consts::LN_2 / (1u64 << n) as f64
}

/// Weight D places on outcomes whose ideal probability is at or above the
/// heavy-output threshold.
pub fn hog_score(d: &OutputDistribution, ideal: &OutputDistribution) -> Result<f64> {
    check_same_size(d, ideal)?;
    let t = heavy_threshold(ideal.n);
    Ok(kahan_sum(
        d.probs
            .iter()
            .zip(&ideal.probs)
            .map(|(&p, &q)| if q >= t { p } else { 0.0 }),
    ))
}

/// Fraction of samples landing on heavy outcomes of the ideal distribution.
pub fn hog_empirical(samples: &SampleSet, ideal: &OutputDistribution) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::validation("cannot estimate from zero samples"));
    }
    if samples.n != ideal.n {
        return Err(Error::validation(
            "sample width does not match the ideal distribution",
        ));
    }
    let t = heavy_threshold(ideal.n);
    let heavy = samples
        .outcomes
        .iter()
        .filter(|&&x| ideal.probs[x as usize] >= t)
        .count();
    Ok(heavy as f64 / samples.len() as f64)
}

// ---------------------------------------------------------------------------
// Shape diagnostics.

/// Histogram of scaled probabilities q = N p(x) against the Porter-Thomas
/// density N e^{-qN} (i.e. e^{-q} in the scaled variable).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeHistogram {
    /// bins + 1 ascending edges starting at 0.
    pub bin_edges: Vec<f64>,
    /// Outcome counts per bin; sums to N.
    pub counts: Vec<u64>,
    /// Expected counts per bin under Porter-Thomas: N (e^{-lo} - e^{-hi}).
    pub pt_reference: Vec<f64>,
    /// Kolmogorov-Smirnov distance between the empirical CDF of q and
    /// 1 - e^{-q}.
    pub ks_distance: f64,
}

/// One-sample KS distance of the values against the CDF 1 - e^{-q}.
pub fn pt_ks_distance(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::validation(
            "KS distance of an empty sample is undefined",
        ));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &q) in v.iter().enumerate() {
        let f = 1.0 - (-q).exp();
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Bin the scaled probabilities of a normalized distribution and score the
/// fit against Porter-Thomas.
pub fn shape_histogram(d: &OutputDistribution, bins: usize) -> Result<ShapeHistogram> {
    if bins == 0 {
        return Err(Error::validation("at least one bin is required"));
    }
    d.validate()?;
    if !d.normalized {
        return Err(Error::validation(
            "shape analysis needs a normalized distribution",
        ));
    }
    let n_outcomes = d.size() as f64;
    let q: Vec<f64> = d.probs.iter().map(|&p| p * n_outcomes).collect();
    let q_top = q.iter().cloned().fold(1.0f64, f64::max);
    let bin_edges: Vec<f64> = (0..=bins).map(|i| q_top * i as f64 / bins as f64).collect();
    let mut counts = vec![0u64; bins];
    for &v in &q {
        let idx = ((v / q_top * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let pt_reference = (0..bins)
        .map(|i| n_outcomes * ((-bin_edges[i]).exp() - (-bin_edges[i + 1]).exp()))
        .collect();
    let ks_distance = pt_ks_distance(&q)?;
    Ok(ShapeHistogram {
        bin_edges,
        counts,
        pt_reference,
        ks_distance,
    })
}

// ---------------------------------------------------------------------------
// Spoofing constructions.

/// Concentrate each k-block of the probability-sorted middle region (the
/// band holding the central 99.9% of mass) onto the block's first element.
/// The result keeps cross-entropy scores nearly unchanged while sitting at
/// total variation distance about (1 - 1/k) x 0.999 from the ideal: a
/// distribution that passes CED verification yet is far from the target.
pub fn rescaled_counterexample(ideal: &OutputDistribution, k: usize) -> Result<OutputDistribution> {
    if k == 0 {
        return Err(Error::validation("block size must be at least 1"));
    }
    ideal.validate()?;
    let n_outcomes = ideal.size();
    let total: f64 = kahan_sum(ideal.probs.iter().cloned());
    let q_lo = 5e-4 * total;
    let q_hi = (1.0 - 5e-4) * total;
    // Sort outcomes by probability ascending, ties by index.
    let mut order: Vec<usize> = (0..n_outcomes).collect();
    order.sort_by(|&a, &b| ideal.probs[a].total_cmp(&ideal.probs[b]).then(a.cmp(&b)));
    // The region holds the outcomes lying wholly inside the [q_lo, q_hi]
    // band of cumulative mass.
    let mut region = Vec::new();
    let mut cum = 0.0;
    for &x in &order {
        let p = ideal.probs[x];
        if cum >= q_lo && cum + p <= q_hi {
            region.push(x);
        }
        cum += p;
    }
    if region.len() < k {
        return Err(Error::validation(format!(
            "block size {k} exceeds the {}-outcome middle region",
            region.len()
        )));
    }
    let mut probs = ideal.probs.clone();
    for block in region.chunks(k) {
        let mass: f64 = block.iter().map(|&x| ideal.probs[x]).sum();
        for &x in block {
            probs[x] = 0.0;
        }
        probs[block[0]] = mass;
    }
    Ok(OutputDistribution::new(ideal.n, probs))
}

/// alpha x ideal + (1 - alpha) x uniform, pointwise.
pub fn depolarize(ideal: &OutputDistribution, alpha: f64) -> Result<OutputDistribution> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::validation(format!(
            "mixing weight must lie in [0, 1], got {alpha}"
        )));
    }
    let u = 1.0 / ideal.size() as f64;
    Ok(OutputDistribution::new(
        ideal.n,
        ideal
            .probs
            .iter()
            .map(|&p| alpha * p + (1.0 - alpha) * u)
            .collect(),
    ))
}

/// Classical shape imposter: throw 2^m balls into 2^n bins with a uniform
/// random permutation of (n+m)-bit strings. Bin y receives the strings
/// (0^n, e) whose image lands in prefix y; probabilities are count / 2^m,
/// so bin counts follow Poisson(1) for n = m while the construction is a
/// trivially samplable classical distribution.
pub fn poisson_imposter(n: usize, m: usize, seed: u64) -> Result<OutputDistribution> {
    use rand::seq::SliceRandom;
    if n == 0 {
        return Err(Error::validation("at least one output bit is required"));
    }
    if n + m > 24 {
        return Err(Error::resource(format!(
            "permutation over 2^{} strings exceeds the 2^24 materialization cap",
            n + m
        )));
    }
    let total = 1usize << (n + m);
    let mut perm: Vec<u32> = (0..total as u32).collect();
    perm.shuffle(&mut rng::stream(seed, "poisson-imposter"));
    let mut counts = vec![0u64; 1 << n];
    // Input strings are (0^n, e): indices 0..2^m under the (x << m) | e
    // packing. The n-bit prefix of the image is its high bits.
    for &image in perm.iter().take(1usize << m) {
        counts[image as usize >> m] += 1;
    }
    let scale = 1.0 / (1u64 << m) as f64;
    Ok(OutputDistribution::new(
        n,
        counts.iter().map(|&c| c as f64 * scale).collect(),
    ))
}

/// Recover the ball counts behind an imposter distribution and histogram
/// them: slot k holds the number of bins with exactly k balls for
/// k < max_k, and the final slot pools counts >= max_k.
pub fn imposter_count_histogram(d: &OutputDistribution, m: usize, max_k: usize) -> Vec<u64> {
    let balls = (1u64 << m) as f64;
    let mut hist = vec![0u64; max_k + 1];
    for &p in &d.probs {
        let c = (p * balls).round() as usize;
        hist[c.min(max_k)] += 1;
    }
    hist
}

/// Chi-square goodness of fit verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiSquareFit {
    pub statistic: f64,
    pub dof: usize,
    /// Upper 1% critical value for this dof.
    pub critical_1pct: f64,
    pub rejected: bool,
}

/// Upper 1% quantiles of the chi-square distribution for dof 1..=10.
const CHI2_CRIT_1PCT: [f64; 10] = [
    6.6349, 9.2103, 11.3449, 13.2767, 15.0863, 16.8119, 18.4753, 20.0902, 21.6660, 23.2093,
];

/// Test a count histogram (last cell pooled as >= len-1) against Poisson
/// with mean 1, whose mass at k is 1/(k! e).
pub fn poisson1_chi_square(histogram: &[u64]) -> Result<ChiSquareFit> {
    if histogram.len() < 2 {
        return Err(Error::validation(
            "need at least two cells for a chi-square fit",
        ));
    }
    let dof = histogram.len() - 1;
    if dof > CHI2_CRIT_1PCT.len() {
        return Err(Error::validation(format!(
            "no critical value tabulated for {dof} degrees of freedom"
        )));
    }
    let n_bins: u64 = histogram.iter().sum();
    let inv_e = (-1.0f64).exp();
    let mut factorial = 1.0f64;
    let mut cells = Vec::with_capacity(histogram.len());
    let mut head_mass = 0.0;
    for k in 0..histogram.len() - 1 {
        if k > 0 {
            factorial *= k as f64;
        }
        let p = inv_e / factorial;
        head_mass += p;
        cells.push(p);
    }
    cells.push(1.0 - head_mass);
    let statistic = histogram
        .iter()
        .zip(&cells)
        .map(|(&obs, &p)| {
            let expected = n_bins as f64 * p;
            let diff = obs as f64 - expected;
            diff * diff / expected
        })
        .sum();
    let critical_1pct = CHI2_CRIT_1PCT[dof - 1];
    Ok(ChiSquareFit {
        statistic,
        dof,
        critical_1pct,
        rejected: statistic > critical_1pct,
    })
}

// ---------------------------------------------------------------------------
// Anti-concentration.

/// One anti-concentration trial: sample circuit `t` of the (seed, index)
/// stream and report whether its zero-outcome probability clears
/// 1/(kappa 2^n). Trials are independently seeded, so callers may run them
/// in any order or in parallel without changing the outcome.
pub fn anticoncentration_trial(
    arch: &Architecture,
    ensemble: &EnsembleSpec,
    kappa: f64,
    seed: u64,
    t: u64,
) -> Result<bool> {
    use rand::Rng;
    let threshold = 1.0 / (kappa * (1u64 << arch.n()) as f64);
    let trial_seed = rng::indexed_stream(seed, "anticoncentration-trial", t).gen::<u64>();
    let circuit = sample_circuit(arch, ensemble, trial_seed)?;
    Ok(sim::output_probability(&circuit, 0)? >= threshold)
}

pub fn check_anticoncentration_args(trials: usize, kappa: f64) -> Result<()> {
    if trials == 0 {
        return Err(Error::validation("at least one trial is required"));
    }
    if kappa.is_nan() || kappa <= 0.0 {
        return Err(Error::validation(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    Ok(())
}

/// Fraction of sampled circuits whose zero-outcome probability is at least
/// 1/(kappa 2^n). Under Porter-Thomas statistics this tends to e^{-1/kappa}.
pub fn anticoncentration_estimate(
    arch: &Architecture,
    ensemble: &EnsembleSpec,
    trials: usize,
    kappa: f64,
    seed: u64,
) -> Result<f64> {
    check_anticoncentration_args(trials, kappa)?;
    let mut hits = 0usize;
    for t in 0..trials {
        if anticoncentration_trial(arch, ensemble, kappa, seed, t as u64)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
