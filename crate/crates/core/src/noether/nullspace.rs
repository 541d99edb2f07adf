//! Numerical null spaces of collocation matrices and the post-processing that
//! turns null vectors into exact generator coefficients.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::registry::Registry;

/// Rank-revealing decomposition of a dense real matrix.
pub trait NullSpaceSolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Null space of `a`, treating spectrum values `≤ rel_tol · max` as zero.
    fn null_space(&self, a: &DMatrix<f64>, rel_tol: f64) -> NullSpace;
}

#[derive(Debug, Clone)]
pub struct NullSpace {
    /// Unit-norm vectors spanning the numerical null space.
    pub basis: Vec<Vec<f64>>,
    /// Singular values (or `|R_kk|` for QR), descending.
    pub spectrum: Vec<f64>,
    pub rank: usize,
    /// Ratio of the smallest retained to the largest discarded spectrum value;
    /// infinite when either side is empty or the discarded value is 0.
    pub gap: f64,
}

impl NullSpace {
    fn from_spectrum(spectrum: Vec<f64>, rank: usize, basis: Vec<Vec<f64>>) -> Self {
        let gap = match (rank.checked_sub(1).map(|i| spectrum[i]), spectrum.get(rank)) {
            (Some(kept), Some(&dropped)) if dropped > 0.0 => kept / dropped,
            _ => f64::INFINITY,
        };
        NullSpace {
            basis,
            spectrum,
            rank,
            gap,
        }
    }
}

fn numerical_rank(spectrum: &[f64], rel_tol: f64) -> usize {
    let max = spectrum.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    spectrum.iter().take_while(|&&s| s > rel_tol * max).count()
}

/// Pads with zero rows so that thin factorizations return a full set of
/// right singular vectors.
fn at_least_square(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() >= a.ncols() {
        a.clone()
    } else {
        a.clone().resize(a.ncols(), a.ncols(), 0.0)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SvdSolver;

impl NullSpaceSolver for SvdSolver {
    fn name(&self) -> &'static str {
        "svd"
    }

    fn null_space(&self, a: &DMatrix<f64>, rel_tol: f64) -> NullSpace {
        let n = a.ncols();
        if n == 0 {
            return NullSpace::from_spectrum(Vec::new(), 0, Vec::new());
        }
        let svd = at_least_square(a).svd(false, true);
        let spectrum: Vec<f64> = svd.singular_values.iter().copied().collect();
        let rank = numerical_rank(&spectrum, rel_tol);
        let v_t = svd.v_t.expect("requested V");
        let basis = (rank..n).map(|i| v_t.row(i).iter().copied().collect()).collect();
        NullSpace::from_spectrum(spectrum, rank, basis)
    }
}

/// Householder QR with column pivoting on the largest remaining column norm.
#[derive(Debug, Default, Clone, Copy)]
pub struct PivotedQrSolver;

impl NullSpaceSolver for PivotedQrSolver {
    fn name(&self) -> &'static str {
        "qr"
    }

    fn null_space(&self, a: &DMatrix<f64>, rel_tol: f64) -> NullSpace {
        let mut r = at_least_square(a);
        let (m, n) = r.shape();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut spectrum = Vec::with_capacity(n);

        for k in 0..n {
            let col_norm = |r: &DMatrix<f64>, j: usize| (k..m).map(|i| r[(i, j)].powi(2)).sum::<f64>();
            let pivot = (k..n)
                .max_by(|&x, &y| col_norm(&r, x).total_cmp(&col_norm(&r, y)))
                .expect("nonempty range");
            r.swap_columns(k, pivot);
            perm.swap(k, pivot);

            let norm = col_norm(&r, k).sqrt();
            if norm == 0.0 {
                spectrum.extend(std::iter::repeat_n(0.0, n - k));
                break;
            }
            let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
            let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|x| x * x).sum();
            for j in k..n {
                let dot: f64 = v.iter().enumerate().map(|(i, vi)| vi * r[(k + i, j)]).sum();
                let f = 2.0 * dot / vtv;
                for (i, vi) in v.iter().enumerate() {
                    r[(k + i, j)] -= f * vi;
                }
            }
            spectrum.push(alpha.abs());
        }

        let rank = numerical_rank(&spectrum, rel_tol);
        let mut basis = Vec::with_capacity(n - rank);
        for free in rank..n {
            let mut y = vec![0.0; rank];
            for i in (0..rank).rev() {
                let mut s = -r[(i, free)];
                for (j, yj) in y.iter().enumerate().skip(i + 1) {
                    s -= r[(i, j)] * yj;
                }
                y[i] = s / r[(i, i)];
            }
            let mut z = vec![0.0; n];
            for (i, yi) in y.iter().enumerate() {
                z[perm[i]] = *yi;
            }
            z[perm[free]] = 1.0;
            let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
            basis.push(z.into_iter().map(|x| x / norm).collect());
        }
        NullSpace::from_spectrum(spectrum, rank, basis)
    }
}

/// All built-in null-space strategies; `svd` is the default.
pub fn solvers() -> Registry<dyn NullSpaceSolver> {
    let mut r: Registry<dyn NullSpaceSolver> = Registry::new("null-space solver");
    r.register("svd", || Box::new(SvdSolver));
    r.register("qr", || Box::new(PivotedQrSolver));
    r
}

/// Reduced row echelon form of the rows of `vectors`, dropping rows that
/// become negligible. Gives a deterministic basis of their span.
pub fn rref(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = vectors.to_vec();
    let Some(n) = rows.first().map(Vec::len) else {
        return rows;
    };
    let scale = rows
        .iter()
        .flatten()
        .fold(0.0_f64, |m, x| m.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let mut lead = 0;
    for col in 0..n {
        if lead == rows.len() {
            break;
        }
        let (best, val) = (lead..rows.len())
            .map(|r| (r, rows[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if val <= tol * scale {
            for row in rows.iter_mut().skip(lead) {
                row[col] = 0.0;
            }
            continue;
        }
        rows.swap(lead, best);
        let p = rows[lead][col];
        for x in rows[lead].iter_mut() {
            *x /= p;
        }
        let pivot_row = rows[lead].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != lead {
                let f = row[col];
                for (x, pv) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pv;
                }
            }
        }
        lead += 1;
    }
    rows.truncate(lead);
    for row in rows.iter_mut() {
        for x in row.iter_mut() {
            if x.abs() <= tol {
                *x = 0.0;
            }
        }
    }
    rows
}

/// Scales `v` so its largest-magnitude entry is ±1, then fixes the sign so
/// that the first nonzero entry among `v[..time_len]` is negative, or, when
/// those are all zero, the first nonzero entry overall is positive.
pub fn normalize(v: &[f64], time_len: usize) -> Vec<f64> {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return v.to_vec();
    }
    let mut out: Vec<f64> = v.iter().map(|x| x / max).collect();
    let flip = match out[..time_len.min(out.len())].iter().find(|x| **x != 0.0) {
        Some(&lead) => lead > 0.0,
        None => out.iter().find(|x| **x != 0.0).is_some_and(|&x| x < 0.0),
    };
    if flip {
        for x in out.iter_mut() {
            *x = -*x;
        }
    }
    out
}

/// Nearest `p/q` with `q ≤ max_denominator` lying within `tol` of `x`,
/// preferring the smallest denominator.
pub fn rationalize(x: f64, max_denominator: u32, tol: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    (1..=max_denominator).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() <= tol).then(|| BigRational::new(BigInt::from(p as i64), BigInt::from(q)))
    })
}
