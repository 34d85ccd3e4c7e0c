//! Output distributions and outcome samples, with their on-disk forms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::util::kahan_sum;

/// Sum tolerance for the normalized flag: 10^3 units of roundoff.
pub const NORMALIZATION_TOL: f64 = 1e3 * crate::circuit::UNIT_ROUNDOFF;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub n: usize,
    /// Length 2^n, indexed by outcome; entries are nonnegative.
    pub probs: Vec<f64>,
    /// Set when the mass sums to 1 within tolerance. Distributions read off
    /// non-unitary circuits legitimately carry `false`.
    pub normalized: bool,
}

impl OutputDistribution {
    /// Wrap a probability vector, deriving the normalized flag.
    pub fn new(n: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), 1 << n);
        let total = kahan_sum(probs.iter().copied());
        let normalized = (total - 1.0).abs() <= NORMALIZATION_TOL;
        OutputDistribution {
            n,
            probs,
            normalized,
        }
    }

    pub fn uniform(n: usize) -> Self {
        let size = 1usize << n;
        OutputDistribution {
            n,
            probs: vec![1.0 / size as f64; size],
            normalized: true,
        }
    }

    pub fn point_mass(n: usize, x: u64) -> Self {
        let mut probs = vec![0.0; 1 << n];
        probs[x as usize] = 1.0;
        OutputDistribution {
            n,
            probs,
            normalized: true,
        }
    }

    pub fn size(&self) -> usize {
        self.probs.len()
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.probs.iter().copied())
    }

    pub fn validate(&self) -> Result<()> {
        if self.probs.len() != 1usize << self.n {
            return Err(Error::validation(format!(
                "distribution over {} qubits needs {} entries, got {}",
                self.n,
                1usize << self.n,
                self.probs.len()
            )));
        }
        if self.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::validation(
                "probabilities must be finite and nonnegative",
            ));
        }
        if self.normalized && (self.total_mass() - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::validation(
                "normalized flag set but mass does not sum to 1",
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("distribution serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut dist: OutputDistribution = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("distribution JSON: {e}")))?;
        // Trust the entries, not the stored flag.
        dist.normalized = (dist.total_mass() - 1.0).abs() <= NORMALIZATION_TOL;
        dist.validate()?;
        Ok(dist)
    }

    /// Two-column form: "index,value" with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,prob\n");
        for (i, p) in self.probs.iter().enumerate() {
            out.push_str(&format!("{i},{p:e}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub n: usize,
    pub outcomes: Vec<u64>,
    /// Seed the outcomes were drawn with (0 for sets read from disk).
    pub seed: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Newline-delimited file: "n=<qubits>" header, one outcome per line.
    /// Outcomes are written as bitstrings with qubit 0 leftmost; "0x"-prefixed
    /// hex is accepted on read.
    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for &x in &self.outcomes {
            for q in 0..self.n {
                out.push(if (x >> q) & 1 == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::validation("empty sample file"))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::validation("sample file must start with an n=<qubits> header"))?;
        if n == 0 || n > 64 {
            return Err(Error::validation(format!("unsupported qubit count {n}")));
        }
        let mut outcomes = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let x = if let Some(hex) = line.strip_prefix("0x") {
                u64::from_str_radix(hex, 16).map_err(|_| {
                    Error::validation(format!("line {}: bad hex outcome", lineno + 2))
                })?
            } else {
                if line.len() != n {
                    return Err(Error::validation(format!(
                        "line {}: expected {n} bits, got {}",
                        lineno + 2,
                        line.len()
                    )));
                }
                let mut x = 0u64;
                for (q, ch) in line.chars().enumerate() {
                    match ch {
                        '0' => {}
                        '1' => x |= 1 << q,
                        _ => {
                            return Err(Error::validation(format!(
                                "line {}: bitstrings may only contain 0 and 1",
                                lineno + 2
                            )))
                        }
                    }
                }
                x
            };
            if n < 64 && x >= (1u64 << n) {
                return Err(Error::validation(format!(
                    "line {}: outcome out of range",
                    lineno + 2
                )));
            }
            outcomes.push(x);
        }
        Ok(SampleSet {
            n,
            outcomes,
            seed: 0,
        })
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        SampleSet::from_text(&text)
    }
}

/// Draw k outcomes i.i.d. from the distribution, reproducibly in the seed.
pub fn sample_outcomes(dist: &OutputDistribution, k: usize, seed: u64) -> Result<SampleSet> {
    dist.validate()?;
    if !dist.normalized {
        return Err(Error::validation(
            "sampling needs a normalized distribution",
        ));
    }
    // Inverse-CDF draws: cumulative table once, then binary search per draw.
    let mut cumulative = Vec::with_capacity(dist.size());
    let mut acc = 0.0f64;
    for &p in &dist.probs {
        acc += p;
        cumulative.push(acc);
    }
    let total = *cumulative.last().expect("distributions are never empty");
    let mut rng = rng::stream(seed, "sample-outcomes");
    let mut outcomes = Vec::with_capacity(k);
    for _ in 0..k {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= u).min(dist.size() - 1);
        outcomes.push(idx as u64);
    }
    Ok(SampleSet {
        n: dist.n,
        outcomes,
        seed,
    })
}
