//! Polynomials over a [`Field`]: evaluation, arithmetic, Newton
//! interpolation, and Berlekamp-Welch decoding of polynomial values with a
//! bounded number of corruptions.

use crate::error::{Error, Result};
use crate::field::Field;

/// Dense polynomial, coefficients low-to-high. Trailing (effective) zeros
/// are tolerated; [`Polynomial::degree`] ignores them.
#[derive(Debug, Clone)]
pub struct Polynomial<E> {
    pub coeffs: Vec<E>,
}

impl<E: Clone + std::fmt::Debug> Polynomial<E> {
    pub fn new(coeffs: Vec<E>) -> Self {
        Polynomial { coeffs }
    }

    /// Degree after trimming effective zeros; None for the zero polynomial.
    pub fn degree<F: Field<Elem = E>>(&self, field: &F) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !field.is_zero(c))
    }

    /// Coefficient of x^idx (zero beyond the stored length).
    pub fn coeff<F: Field<Elem = E>>(&self, field: &F, idx: usize) -> E {
        self.coeffs
            .get(idx)
            .cloned()
            .unwrap_or_else(|| field.zero())
    }

    /// Horner evaluation.
    pub fn eval<F: Field<Elem = E>>(&self, field: &F, x: &E) -> E {
        let mut acc = field.zero();
        for c in self.coeffs.iter().rev() {
            acc = field.add(&field.mul(&acc, x), c);
        }
        acc
    }

    pub fn mul<F: Field<Elem = E>>(&self, field: &F, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Polynomial::new(vec![]);
        }
        let mut out = vec![field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = field.add(&out[i + j], &field.mul(a, b));
            }
        }
        Polynomial::new(out)
    }

    /// Quotient and remainder; the divisor's effective leading coefficient
    /// must be invertible.
    pub fn divmod<F: Field<Elem = E>>(&self, field: &F, divisor: &Self) -> Result<(Self, Self)> {
        let d_deg = divisor
            .degree(field)
            .ok_or_else(|| Error::validation("polynomial division by zero"))?;
        let lead_inv = field.inv(&divisor.coeffs[d_deg])?;
        let mut rem: Vec<E> = self.coeffs.clone();
        let n_deg = match self.degree(field) {
            Some(d) => d,
            None => return Ok((Polynomial::new(vec![]), Polynomial::new(vec![]))),
        };
        if n_deg < d_deg {
            return Ok((Polynomial::new(vec![]), self.clone()));
        }
        let mut quot = vec![field.zero(); n_deg - d_deg + 1];
        for shift in (0..=n_deg - d_deg).rev() {
            let factor = field.mul(&rem[d_deg + shift], &lead_inv);
            if field.is_zero(&factor) {
                continue;
            }
            quot[shift] = factor.clone();
            for (i, dc) in divisor.coeffs.iter().enumerate().take(d_deg + 1) {
                let delta = field.mul(&factor, dc);
                rem[i + shift] = field.sub(&rem[i + shift], &delta);
            }
        }
        rem.truncate(d_deg);
        Ok((Polynomial::new(quot), Polynomial::new(rem)))
    }
}

/// Interpolating polynomial through (xs[i], ys[i]) by divided differences,
/// expanded to monomial coefficients. Nodes must be pairwise distinct (in
/// the field's tolerance sense).
pub fn newton_interpolate<F: Field>(
    field: &F,
    xs: &[F::Elem],
    ys: &[F::Elem],
) -> Result<Polynomial<F::Elem>> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::validation(
            "interpolation needs equal-length, nonempty inputs",
        ));
    }
    for (i, a) in xs.iter().enumerate() {
        for b in &xs[i + 1..] {
            if field.eq(a, b) {
                return Err(Error::validation("interpolation nodes must be distinct"));
            }
        }
    }
    let k = xs.len();
    // Divided-difference table, in place.
    let mut dd: Vec<F::Elem> = ys.to_vec();
    for level in 1..k {
        for i in (level..k).rev() {
            let num = field.sub(&dd[i], &dd[i - 1]);
            let den = field.sub(&xs[i], &xs[i - level]);
            dd[i] = field.div(&num, &den)?;
        }
    }
    // Expand: p = dd[k-1]; p = p*(x - xs[j]) + dd[j] downward.
    let mut coeffs = vec![dd[k - 1].clone()];
    for j in (0..k - 1).rev() {
        // Multiply by (x - xs[j]).
        coeffs.insert(0, field.zero());
        let shifted: Vec<F::Elem> = coeffs.clone();
        for i in 0..coeffs.len() - 1 {
            let t = field.mul(&shifted[i + 1], &xs[j]);
            coeffs[i] = field.sub(&coeffs[i], &t);
        }
        coeffs[0] = field.add(&coeffs[0], &dd[j]);
    }
    Ok(Polynomial::new(coeffs))
}

/// Reduced row echelon form with pivoting by [`Field::magnitude`]. Returns
/// (pivot column of each pivot row, in order).
fn rref<F: Field>(field: &F, mat: &mut [Vec<F::Elem>]) -> Result<Vec<usize>> {
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    let mut pivots = Vec::new();
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(best) = (rank..rows)
            .filter(|&r| !field.is_zero(&mat[r][col]))
            .max_by(|&a, &b| {
                field
                    .magnitude(&mat[a][col])
                    .total_cmp(&field.magnitude(&mat[b][col]))
            })
        else {
            continue;
        };
        mat.swap(rank, best);
        let inv = field.inv(&mat[rank][col])?;
        for c in col..cols {
            mat[rank][c] = field.mul(&mat[rank][c], &inv);
        }
        for r in 0..rows {
            if r != rank && !field.is_zero(&mat[r][col]) {
                let factor = mat[r][col].clone();
                for c in col..cols {
                    let t = field.mul(&factor, &mat[rank][c]);
                    mat[r][c] = field.sub(&mat[r][c], &t);
                }
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    Ok(pivots)
}

/// Decode a degree <= d polynomial from values with at most e corruptions.
///
/// Solves the homogeneous system Q(x_i) = y_i E(x_i) with deg Q <= d + e and
/// deg E <= e over the given field, then divides. Needs at least d + 2e + 1
/// points; fails with a decode error if no consistent polynomial exists
/// (more corruptions than budgeted, or inconsistent data).
pub fn bw_decode<F: Field>(
    field: &F,
    xs: &[F::Elem],
    ys: &[F::Elem],
    d: usize,
    e: usize,
) -> Result<Polynomial<F::Elem>> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::validation(
            "decoding needs equal-length, nonempty inputs",
        ));
    }
    let k = xs.len();
    if k < d + 2 * e + 1 {
        return Err(Error::validation(format!(
            "decoding degree {d} with {e} corruptions needs at least {} points, got {k}",
            d + 2 * e + 1
        )));
    }
    let q_len = d + e + 1;
    let e_len = e + 1;
    let cols = q_len + e_len;
    let mut mat: Vec<Vec<F::Elem>> = Vec::with_capacity(k);
    for (x, y) in xs.iter().zip(ys) {
        let mut row = Vec::with_capacity(cols);
        let mut pow = field.one();
        for _ in 0..q_len {
            row.push(pow.clone());
            pow = field.mul(&pow, x);
        }
        let mut pow = field.one();
        for _ in 0..e_len {
            row.push(field.neg(&field.mul(y, &pow)));
            pow = field.mul(&pow, x);
        }
        mat.push(row);
    }
    let pivots = rref(field, &mut mat)?;
    let free_cols: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    if free_cols.is_empty() {
        return Err(Error::decode(
            "no nonzero solution: corruption count exceeds the budget",
        ));
    }
    // Try free columns E-side first; a kernel vector with E = 0 identically
    // cannot be divided and is skipped.
    for &fc in free_cols.iter().rev() {
        let mut vec_sol = vec![field.zero(); cols];
        vec_sol[fc] = field.one();
        for (row, &pc) in pivots.iter().enumerate() {
            vec_sol[pc] = field.neg(&mat[row][fc]);
        }
        let q_poly = Polynomial::new(vec_sol[..q_len].to_vec());
        let e_poly = Polynomial::new(vec_sol[q_len..].to_vec());
        if e_poly.degree(field).is_none() {
            continue;
        }
        let Ok((f, rem)) = q_poly.divmod(field, &e_poly) else {
            continue;
        };
        if rem.degree(field).is_some() {
            continue;
        }
        if f.degree(field).is_some_and(|deg| deg > d) {
            continue;
        }
        let disagreements = xs
            .iter()
            .zip(ys)
            .filter(|(x, y)| !field.eq(&f.eval(field, x), y))
            .count();
        if disagreements <= e {
            return Ok(f);
        }
    }
    Err(Error::decode(
        "no polynomial fits the values within the corruption budget",
    ))
}
