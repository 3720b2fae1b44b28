//! Symmetric banded storage and the generalized symmetric-definite
//! eigenproblem `H c = E S c`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix: element `(i, i - d)` for `d ≤ bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (i - j)
    }

    /// Element `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to `(i, j)`; callers pass each unordered pair once.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i.saturating_sub(self.bandwidth)..=i {
                let v = self.get(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// `x · A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            sum += self.get(i, i) * x[i] * y[i];
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                sum += a * (x[i] * y[j] + x[j] * y[i]);
            }
        }
        sum
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            out[i] += self.get(i, i) * x[i];
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                out[i] += a * x[j];
                out[j] += a * x[i];
            }
        }
        out
    }

    /// Cholesky factor `L` (`A = L Lᵀ`) in the same banded layout.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let p = self.bandwidth;
        let mut l = self.clone();
        for i in 0..self.n {
            let lo = i.saturating_sub(p);
            for j in lo..=i {
                let mut sum = self.get(i, j);
                let klo = lo.max(j.saturating_sub(p));
                for k in klo..j {
                    sum -= l.data[l.idx(i, k)] * l.data[l.idx(j, k)];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::Config(format!(
                            "matrix not positive definite (pivot {sum:e} at row {i})"
                        )));
                    }
                    let k = l.idx(i, i);
                    l.data[k] = sum.sqrt();
                } else {
                    let d = l.data[l.idx(j, j)];
                    let k = l.idx(i, j);
                    l.data[k] = sum / d;
                }
            }
        }
        Ok(BandedCholesky { l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedSym,
}

impl BandedCholesky {
    /// Solves `L x = b` in place.
    pub fn solve_lower(&self, b: &mut [f64]) {
        let l = &self.l;
        let p = l.bandwidth;
        for i in 0..l.n {
            let mut s = b[i];
            for k in i.saturating_sub(p)..i {
                s -= l.data[l.idx(i, k)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper(&self, b: &mut [f64]) {
        let l = &self.l;
        let p = l.bandwidth;
        for i in (0..l.n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + p + 1).min(l.n) {
                s -= l.data[l.idx(k, i)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
    }
}

/// All eigenpairs of `H c = E S c`, ascending, with `cᵀ S c = 1`.
///
/// Reduces to the standard form `L⁻¹ H L⁻ᵀ` using the banded Cholesky
/// factor of `S` and diagonalizes the dense reduced matrix.
pub fn generalized_eigen(h: &BandedSym, s: &BandedSym) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = h.dim();
    if s.dim() != n {
        return Err(Error::Config("H and S dimensions differ".into()));
    }
    let chol = s.cholesky()?;
    // Y = L⁻¹ H, column by column; H is symmetric so rows of Y^T are columns.
    let hd = h.to_dense();
    let mut y = DMatrix::<f64>::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.copy_from_slice(hd.column(j).as_slice());
        chol.solve_lower(&mut col);
        y.column_mut(j).copy_from_slice(&col);
    }
    // C = L⁻¹ Yᵀ
    let yt = y.transpose();
    let mut c = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        col.copy_from_slice(yt.column(j).as_slice());
        chol.solve_lower(&mut col);
        c.column_mut(j).copy_from_slice(&col);
    }
    let c = (&c + c.transpose()) * 0.5;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "reduced matrix contains non-finite entries".into(),
        ));
    }
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 0).ok_or_else(|| {
        Error::Numeric(format!("symmetric eigensolver did not converge (n = {n})"))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in order {
        values.push(eig.eigenvalues[k]);
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        chol.solve_upper(&mut v);
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// LU factorization with partial pivoting of the band matrix `H - σS`.
///
/// Row interchanges stay within the band, so `U` has at most `2p`
/// superdiagonals.
#[derive(Debug, Clone)]
pub struct ShiftedLu {
    n: usize,
    p: usize,
    // row i holds columns i - p ..= i + 2p
    rows: Vec<f64>,
    mult: Vec<f64>,
    piv: Vec<usize>,
}

impl ShiftedLu {
    pub fn new(h: &BandedSym, s: &BandedSym, sigma: f64) -> Self {
        let n = h.dim();
        let p = h.bandwidth().max(s.bandwidth());
        let w = 3 * p + 1;
        let mut lu = Self {
            n,
            p,
            rows: vec![0.0; n * w],
            mult: vec![0.0; n * p],
            piv: vec![0; n],
        };
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in i.saturating_sub(p)..(i + p + 1).min(n) {
                let v = h.get(i, j) - sigma * s.get(i, j);
                scale = scale.max(v.abs());
                *lu.at(i, j) = v;
            }
        }
        let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last = (k + p).min(n - 1);
            let mut r = k;
            let mut best = lu.at(k, k).abs();
            for i in k + 1..=last {
                let v = lu.at(i, k).abs();
                if v > best {
                    best = v;
                    r = i;
                }
            }
            lu.piv[k] = r;
            let cmax = (k + 2 * p).min(n - 1);
            if r != k {
                for c in k..=cmax {
                    let a = *lu.at(k, c);
                    let b = *lu.at(r, c);
                    *lu.at(k, c) = b;
                    *lu.at(r, c) = a;
                }
            }
            if lu.at(k, k).abs() < tiny {
                *lu.at(k, k) = tiny;
            }
            let d = *lu.at(k, k);
            for i in k + 1..=last {
                let m = *lu.at(i, k) / d;
                lu.mult[k * p + (i - k - 1)] = m;
                *lu.at(i, k) = 0.0;
                if m != 0.0 {
                    for c in k + 1..=cmax {
                        let u = *lu.at(k, c);
                        *lu.at(i, c) -= m * u;
                    }
                }
            }
        }
        lu
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        let w = 3 * self.p + 1;
        &mut self.rows[i * w + (j + self.p - i)]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        let w = 3 * self.p + 1;
        self.rows[i * w + (j + self.p - i)]
    }

    /// Solves `(H - σS) x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, p) = (self.n, self.p);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for i in k + 1..(k + p + 1).min(n) {
                b[i] -= self.mult[k * p + (i - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..(k + 2 * p + 1).min(n) {
                s -= self.get(k, c) * b[c];
            }
            b[k] = s / self.get(k, k);
        }
    }
}

/// Polishes an approximate eigenpair of `H c = E S c` by inverse iteration
/// on the banded pencil followed by a Rayleigh quotient.
///
/// The dense reduction carries an absolute error of order `ε‖L⁻¹HL⁻ᵀ‖`,
/// which is large next to trap-scale energies; the banded iteration only sees
/// local matrix entries.
pub fn refine_eigenpair(
    h: &BandedSym,
    s: &BandedSym,
    sigma: f64,
    guess: &[f64],
) -> (f64, Vec<f64>) {
    let lu = ShiftedLu::new(h, s, sigma);
    let mut c = guess.to_vec();
    for _ in 0..3 {
        let mut y = s.mul_vec(&c);
        lu.solve(&mut y);
        let norm = s.bilinear(&y, &y).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        c = y;
    }
    let sg = s.mul_vec(guess);
    if c.iter().zip(&sg).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
        c.iter_mut().for_each(|v| *v = -*v);
    }
    let e = h.bilinear(&c, &c) / s.bilinear(&c, &c);
    (e, c)
}

/// The `count` lowest eigenpairs, each polished by [`refine_eigenpair`].
pub fn lowest_eigenpairs(
    h: &BandedSym,
    s: &BandedSym,
    count: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    lowest_eigenpairs_by(h, s, |_| count)
}

/// As [`lowest_eigenpairs`] with the count chosen from the unrefined
/// ascending eigenvalues.
pub fn lowest_eigenpairs_by<F: FnOnce(&[f64]) -> usize>(
    h: &BandedSym,
    s: &BandedSym,
    pick: F,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (values, vectors) = generalized_eigen(h, s)?;
    let count = pick(&values).min(values.len());
    let mut out_e = Vec::with_capacity(count);
    let mut out_c = Vec::with_capacity(count);
    for (e0, c0) in values.into_iter().zip(vectors).take(count) {
        let (e, c) = refine_eigenpair(h, s, e0, &c0);
        out_e.push(e);
        out_c.push(c);
    }
    // two guesses collapsing onto one eigenvector means the dense estimate
    // could not separate the levels
    for i in 1..out_c.len() {
        let ov = s.bilinear(&out_c[i - 1], &out_c[i]).abs();
        if ov > 1e-6 {
            return Err(Error::Numeric(format!(
                "eigenpairs {} and {} coincide after refinement (E = {:e}, {:e}, overlap {ov:e}); \
                 move the inner wall outward or shrink the box",
                i - 1,
                i,
                out_e[i - 1],
                out_e[i]
            )));
        }
    }
    Ok((out_e, out_c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, p: usize, shift: f64) -> BandedSym {
        let mut a = BandedSym::zeros(n, p);
        for i in 0..n {
            a.add(i, i, shift + i as f64 * 0.1);
            for d in 1..=p.min(i) {
                a.add(
                    i,
                    i - d,
                    0.3 / (d as f64 + 1.0) * ((i * 7 + d) % 5) as f64 / 5.0,
                );
            }
        }
        a
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = sample(30, 4, 3.0);
        let chol = a.cholesky().unwrap();
        let dense = a.to_dense();
        // A x = b via L Lᵀ
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        chol.solve_lower(&mut x);
        chol.solve_upper(&mut x);
        let ax = &dense * nalgebra::DVector::from_vec(x);
        for i in 0..30 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn not_positive_definite_is_config_error() {
        let mut a = BandedSym::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        a.add(2, 2, 1.0);
        assert!(matches!(a.cholesky(), Err(Error::Config(_))));
    }

    #[test]
    fn generalized_pairs_satisfy_equation() {
        let h = sample(25, 3, -1.0);
        let s = sample(25, 3, 4.0);
        let (vals, vecs) = generalized_eigen(&h, &s).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for (e, c) in vals.iter().zip(&vecs) {
            let hc = h.mul_vec(c);
            let sc = s.mul_vec(c);
            for i in 0..25 {
                assert!((hc[i] - e * sc[i]).abs() < 1e-11);
            }
            assert!((s.bilinear(c, c) - 1.0).abs() < 1e-12);
        }
        assert!(s.bilinear(&vecs[0], &vecs[1]).abs() < 1e-12);
    }

    #[test]
    fn shifted_lu_solves_indefinite_system() {
        let h = sample(40, 3, -1.0);
        let s = sample(40, 3, 4.0);
        let lu = ShiftedLu::new(&h, &s, 0.37);
        let b: Vec<f64> = (0..40).map(|i| (0.3 * i as f64).cos()).collect();
        let mut x = b.clone();
        lu.solve(&mut x);
        let r: Vec<f64> = h
            .mul_vec(&x)
            .iter()
            .zip(s.mul_vec(&x))
            .map(|(a, b)| a - 0.37 * b)
            .collect();
        for i in 0..40 {
            assert!((r[i] - b[i]).abs() < 1e-10, "row {i}: {} vs {}", r[i], b[i]);
        }
    }

    #[test]
    fn refinement_keeps_exact_pairs() {
        let h = sample(30, 2, -2.0);
        let s = sample(30, 2, 3.0);
        let (e0, c0) = generalized_eigen(&h, &s).unwrap();
        let (e, c) = lowest_eigenpairs(&h, &s, 30).unwrap();
        for k in 0..30 {
            assert!((e[k] - e0[k]).abs() < 1e-12 * e0[k].abs().max(1.0));
            assert!((s.bilinear(&c[k], &c0[k]) - 1.0).abs() < 1e-10);
        }
    }
}
