//! Compressed-row kernels used inside the integrators.
//!
//! Operators are stored dense; the right-hand sides of the evolution
//! equations apply them through these row-compressed copies, which is where
//! nearly all of the integration time goes.

use num_complex::Complex64 as C64;

use super::CMatrix;

/// CSR matrix with complex entries.
#[derive(Clone, Debug)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    /// Keep every entry that is not exactly zero.
    pub fn from_dense(m: &CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Same sparsity pattern as `self`, values gathered from `m` (entries of
    /// `m` outside the pattern are ignored).
    fn gather(&self, m: &CMatrix) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.vals.len());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.push(m[(i, self.cols[k])]);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = A x`.
    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        matvec_with(self.n, &self.row_ptr, &self.cols, &self.vals, x, out)
    }

    /// `out = A X` for row-major `X` with `n` rows and `ncols` columns.
    pub fn mul_dense(&self, x: &[C64], ncols: usize, out: &mut [C64]) {
        mul_dense_with(self.n, &self.row_ptr, &self.cols, &self.vals, x, ncols, out)
    }
}

fn matvec_with(
    n: usize,
    row_ptr: &[usize],
    cols: &[usize],
    vals: &[C64],
    x: &[C64],
    out: &mut [C64],
) {
    for i in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for k in row_ptr[i]..row_ptr[i + 1] {
            acc += vals[k] * x[cols[k]];
        }
        out[i] = acc;
    }
}

fn mul_dense_with(
    n: usize,
    row_ptr: &[usize],
    cols: &[usize],
    vals: &[C64],
    x: &[C64],
    ncols: usize,
    out: &mut [C64],
) {
    for i in 0..n {
        let row_out = &mut out[i * ncols..(i + 1) * ncols];
        row_out.fill(C64::new(0.0, 0.0));
        for k in row_ptr[i]..row_ptr[i + 1] {
            let v = vals[k];
            let row_in = &x[cols[k] * ncols..(cols[k] + 1) * ncols];
            for (o, xi) in row_out.iter_mut().zip(row_in) {
                *o += v * xi;
            }
        }
    }
}

/// `A(t) = A_0 + sum_k c_k(t) A_k` on a shared sparsity pattern.
pub struct SparseSum {
    pattern: Csr,
    base: Vec<C64>,
    terms: Vec<(Box<dyn Fn(f64) -> C64 + Send + Sync>, Vec<C64>)>,
    scratch: Vec<C64>,
}

impl SparseSum {
    pub fn new(
        base: &CMatrix,
        terms: Vec<(Box<dyn Fn(f64) -> C64 + Send + Sync>, CMatrix)>,
    ) -> Self {
        let mut union = base.map(|v| C64::new(v.norm(), 0.0));
        for (_, m) in &terms {
            union += m.map(|v| C64::new(v.norm(), 0.0));
        }
        let pattern = Csr::from_dense(&union);
        let base_vals = pattern.gather(base);
        let terms = terms
            .into_iter()
            .map(|(c, m)| {
                let v = pattern.gather(&m);
                (c, v)
            })
            .collect();
        let scratch = base_vals.clone();
        Self {
            pattern,
            base: base_vals,
            terms,
            scratch,
        }
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn nnz(&self) -> usize {
        self.pattern.nnz()
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.terms.is_empty()
    }

    /// Evaluate the coefficients at time `t`.
    pub fn set_time(&mut self, t: f64) {
        if self.terms.is_empty() {
            return;
        }
        self.scratch.copy_from_slice(&self.base);
        for (coef, vals) in &self.terms {
            let c = coef(t);
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            for (s, v) in self.scratch.iter_mut().zip(vals) {
                *s += c * v;
            }
        }
    }

    fn values(&self) -> &[C64] {
        if self.terms.is_empty() {
            &self.base
        } else {
            &self.scratch
        }
    }

    /// `out = A(t) x` using the time last passed to [`SparseSum::set_time`].
    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        let p = &self.pattern;
        matvec_with(p.n, &p.row_ptr, &p.cols, self.values(), x, out)
    }

    pub fn mul_dense(&self, x: &[C64], ncols: usize, out: &mut [C64]) {
        let p = &self.pattern;
        mul_dense_with(p.n, &p.row_ptr, &p.cols, self.values(), x, ncols, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sparse(n: usize, seed: u64) -> CMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64 - 0.5
        };
        CMatrix::from_fn(n, n, |_, _| {
            let keep = next();
            if keep > 0.2 {
                C64::new(next(), next())
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn csr_matches_dense() {
        let a = random_sparse(7, 3);
        let x = random_sparse(7, 9);
        let csr = Csr::from_dense(&a);
        let xr: Vec<C64> = (0..7).flat_map(|i| (0..7).map(move |j| (i, j))).map(|(i, j)| x[(i, j)]).collect();
        let mut out = vec![C64::new(0.0, 0.0); 49];
        csr.mul_dense(&xr, 7, &mut out);
        let want = &a * &x;
        for i in 0..7 {
            for j in 0..7 {
                assert!((out[i * 7 + j] - want[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn sparse_sum_time_dependence() {
        let a0 = random_sparse(5, 1);
        let a1 = random_sparse(5, 2);
        let mut sum = SparseSum::new(&a0, vec![(Box::new(|t: f64| C64::new(t.cos(), t.sin())), a1.clone())]);
        let t = 0.7;
        sum.set_time(t);
        let x: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 1.0)).collect();
        let mut out = vec![C64::new(0.0, 0.0); 5];
        sum.matvec(&x, &mut out);
        let full = &a0 + &a1 * C64::new(t.cos(), t.sin());
        let xv = crate::quantum::CVector::from_vec(x);
        let want = full * xv;
        for k in 0..5 {
            assert!((out[k] - want[k]).norm() < 1e-13);
        }
    }
}
