//! Dense complex matrices and state vectors.
//!
//! Everything is stored row-major in a flat `Vec<Complex64>`. Matrices stay
//! small (a few thousand entries at most), so no sparsity or blocking is
//! attempted anywhere.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Diagonal matrix from real entries.
    pub fn diag_real(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |M - M†|` entrywise.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square(), "hermiticity of a non-square matrix");
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_deviation() <= tol
    }

    /// Kronecker product: `(a⊗b)[(i·r_b+k),(j·c_b+l)] = a[i,j]·b[k,l]`.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = ComplexMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Partial trace over the subsystems *not* listed in `keep`.
    ///
    /// `dims` gives the tensor factorization of the matrix, `keep` the
    /// (strictly increasing) indices of the subsystems to retain.
    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
        let total: usize = dims.iter().product();
        if !self.is_square() || total != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dims {:?} give total {}, matrix is {}x{}",
                dims, total, self.rows, self.cols
            )));
        }
        if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
            return Err(Error::DimensionMismatch(format!(
                "keep indices {:?} invalid for {} subsystems",
                keep,
                dims.len()
            )));
        }
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
        let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&t| dims[t]).collect();
        let kept_total: usize = kept_dims.iter().product::<usize>().max(1);
        let traced_total: usize = traced_dims.iter().product::<usize>().max(1);

        // Stride of each subsystem in the full index.
        let mut stride = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            stride[i] = stride[i + 1] * dims[i + 1];
        }

        // Maps a flat index over a dim list to its contribution to the full index.
        let compose = |flat: usize, sys: &[usize], sys_dims: &[usize]| -> usize {
            let mut rem = flat;
            let mut full = 0usize;
            for (pos, &s) in sys.iter().enumerate().rev() {
                let comp = rem % sys_dims[pos];
                rem /= sys_dims[pos];
                full += comp * stride[s];
            }
            full
        };

        let mut out = ComplexMatrix::zeros(kept_total, kept_total);
        for r in 0..kept_total {
            let r_base = compose(r, keep, &kept_dims);
            for c in 0..kept_total {
                let c_base = compose(c, keep, &kept_dims);
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..traced_total {
                    let t_off = compose(t, &traced, &traced_dims);
                    acc += self[(r_base + t_off, c_base + t_off)];
                }
                out[(r, c)] = acc;
            }
        }
        Ok(out)
    }

    /// Reorders tensor factors: output subsystem `i` is input subsystem `perm[i]`.
    pub fn permute_systems(&self, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
        let total: usize = dims.iter().product();
        if !self.is_square() || total != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dims {:?} give total {}, matrix is {}x{}",
                dims, total, self.rows, self.cols
            )));
        }
        let mut seen = vec![false; dims.len()];
        for &p in perm {
            if p >= dims.len() || seen[p] {
                return Err(Error::DimensionMismatch(format!(
                    "{:?} is not a permutation of {} subsystems",
                    perm,
                    dims.len()
                )));
            }
            seen[p] = true;
        }
        if perm.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation has length {}, need {}",
                perm.len(),
                dims.len()
            )));
        }

        let mut in_stride = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            in_stride[i] = in_stride[i + 1] * dims[i + 1];
        }
        let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();

        // index_map[out_index] = in_index
        let mut index_map = vec![0usize; total];
        for (out_idx, entry) in index_map.iter_mut().enumerate() {
            let mut rem = out_idx;
            let mut in_idx = 0usize;
            for slot in (0..out_dims.len()).rev() {
                let comp = rem % out_dims[slot];
                rem /= out_dims[slot];
                in_idx += comp * in_stride[perm[slot]];
            }
            *entry = in_idx;
        }

        let mut out = ComplexMatrix::zeros(total, total);
        for r in 0..total {
            for c in 0..total {
                out[(r, c)] = self[(index_map[r], index_map[c])];
            }
        }
        Ok(out)
    }

    /// Copies the `rows x cols` block with upper-left corner at `(row_off, col_off)`.
    pub fn block(&self, row_off: usize, col_off: usize, rows: usize, cols: usize) -> ComplexMatrix {
        assert!(
            row_off + rows <= self.rows && col_off + cols <= self.cols,
            "block out of range"
        );
        ComplexMatrix::from_fn(rows, cols, |i, j| self[(row_off + i, col_off + j)])
    }

    pub fn mul_vec(&self, v: &StateVector) -> StateVector {
        assert_eq!(
            self.cols,
            v.dim(),
            "dimension mismatch in matrix-vector product"
        );
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v.amplitudes()[j];
            }
            out[i] = acc;
        }
        StateVector::new(out)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "dimension mismatch in matrix product"
        );
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        // i-k-j loop order keeps both operands row-major friendly
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "dimension mismatch in matrix addition"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "dimension mismatch in matrix subtraction"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Complex column vector (ket).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    data: Vec<Complex64>,
}

impl StateVector {
    pub fn new(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    /// Computational basis state |index⟩ in the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut data = vec![Complex64::new(0.0, 0.0); dim];
        data[index] = Complex64::new(1.0, 0.0);
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > 1e-300, "cannot normalize the zero vector");
        Self {
            data: self.data.iter().map(|z| z / n).collect(),
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(
            self.dim(),
            other.dim(),
            "dimension mismatch in inner product"
        );
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |self⟩ ⊗ |other⟩.
    pub fn tensor(&self, other: &StateVector) -> Self {
        let mut data = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Self { data }
    }

    /// |self⟩⟨other|.
    pub fn outer(&self, other: &StateVector) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), other.dim(), |i, j| {
            self.data[i] * other.data[j].conj()
        })
    }

    /// |self⟩⟨self|.
    pub fn projector(&self) -> ComplexMatrix {
        self.outer(self)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }
}
