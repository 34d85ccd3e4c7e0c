/// Compensated summation. Distribution-wide sums (normalization checks,
/// divergences) run over up to 2^20 terms; naive accumulation error grows
/// with the term count while Kahan stays at a few ulps.
pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
