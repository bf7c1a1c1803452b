//! Dense tensors and the multilinear kernels the classifiers are built on.
//!
//! Every buffer uses first-index-fastest linearization: the entry at the
//! zero-based multi-index `(i_1, .., i_D)` lives at
//! `i_1 + p_1 * (i_2 + p_2 * (i_3 + ...))`. Vectorization is therefore a
//! plain view of the storage, and the vectorized rank-1 tensor
//! `w_1 ∘ w_2 ∘ .. ∘ w_D` equals the Kronecker product `w_D ⊗ .. ⊗ w_1`.

use std::borrow::Cow;

use ndarray::Array2;

use crate::error::{Error, Result};

fn check_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::Shape("tensor must have at least one mode".into()));
    }
    if let Some(mode) = shape.iter().position(|&p| p == 0) {
        return Err(Error::Shape(format!("mode {} has zero extent", mode + 1)));
    }
    Ok(())
}

/// A D-dimensional array of `f64` with first-index-fastest storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_shape(&shape)?;
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::Shape(format!(
                "buffer of length {} does not fit shape {:?} ({} entries)",
                data.len(),
                shape,
                len
            )));
        }
        Ok(Self { shape, data })
    }

    /// # Panics
    /// If `shape` is empty or has a zero extent.
    pub fn zeros(shape: &[usize]) -> Self {
        check_shape(shape).expect("invalid tensor shape");
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    /// Builds a tensor by evaluating `f` at every zero-based multi-index,
    /// visiting entries in storage order.
    ///
    /// # Panics
    /// If `shape` is empty or has a zero extent.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        check_shape(shape).expect("invalid tensor shape");
        let len: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for (i, &p) in idx.iter_mut().zip(shape) {
                *i += 1;
                if *i < p {
                    break;
                }
                *i = 0;
            }
        }
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Zero-based storage offset of a zero-based multi-index.
    ///
    /// # Panics
    /// If the index has the wrong arity or is out of range.
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index arity");
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &p) in idx.iter().zip(&self.shape) {
            assert!(i < p, "index {i} out of range for extent {p}");
            offset += i * stride;
            stride *= p;
        }
        offset
    }

    /// Inverse of [`DenseTensor::linear_index`].
    pub fn multi_index(&self, mut offset: usize) -> Vec<usize> {
        assert!(offset < self.data.len(), "offset out of range");
        self.shape
            .iter()
            .map(|&p| {
                let i = offset % p;
                offset /= p;
                i
            })
            .collect()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let offset = self.linear_index(idx);
        self.data[offset] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Frobenius inner product with a tensor of the same shape.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "inner product of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(dot(&self.data, &other.data))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One-based vectorization index of a one-based multi-index:
/// `j = 1 + Σ_d (i_d − 1) Π_{d' < d} p_{d'}`.
pub fn vec_index(multi: &[usize], shape: &[usize]) -> Result<usize> {
    if multi.len() != shape.len() {
        return Err(Error::Shape(format!(
            "index of arity {} for a {}-mode shape",
            multi.len(),
            shape.len()
        )));
    }
    let mut j = 1;
    let mut stride = 1;
    for (mode, (&i, &p)) in multi.iter().zip(shape).enumerate() {
        if i < 1 || i > p {
            return Err(Error::Bounds {
                mode: mode + 1,
                index: i,
                extent: p,
            });
        }
        j += (i - 1) * stride;
        stride *= p;
    }
    Ok(j)
}

pub fn vectorize(t: &DenseTensor) -> Vec<f64> {
    t.data.clone()
}

pub fn devectorize(shape: &[usize], v: Vec<f64>) -> Result<DenseTensor> {
    DenseTensor::new(shape.to_vec(), v)
}

fn split_at_mode(shape: &[usize], mode: usize) -> (usize, usize, usize) {
    let below = shape[..mode].iter().product();
    let above = shape[mode + 1..].iter().product();
    (below, shape[mode], above)
}

fn check_mode(ndim: usize, mode: usize) -> Result<()> {
    if mode >= ndim {
        return Err(Error::Bounds {
            mode: mode + 1,
            index: mode + 1,
            extent: ndim,
        });
    }
    Ok(())
}

/// Mode-`mode` unfolding (zero-based mode): a `p_mode × Π_{d≠mode} p_d`
/// matrix whose columns are the mode fibers, remaining modes ordered
/// first-index-fastest.
pub fn matricize(t: &DenseTensor, mode: usize) -> Result<Array2<f64>> {
    check_mode(t.ndim(), mode)?;
    let (below, extent, above) = split_at_mode(&t.shape, mode);
    let mut out = Array2::zeros((extent, below * above));
    for j in 0..above {
        for r in 0..extent {
            let base = below * (r + extent * j);
            for i in 0..below {
                out[[r, i + below * j]] = t.data[base + i];
            }
        }
    }
    Ok(out)
}

/// Inverse of [`matricize`].
pub fn fold(m: &Array2<f64>, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
    check_shape(shape)?;
    check_mode(shape.len(), mode)?;
    let (below, extent, above) = split_at_mode(shape, mode);
    if m.dim() != (extent, below * above) {
        return Err(Error::Shape(format!(
            "cannot fold a {:?} matrix into {:?} along mode {}",
            m.dim(),
            shape,
            mode + 1
        )));
    }
    let mut data = vec![0.0; below * extent * above];
    for j in 0..above {
        for r in 0..extent {
            let base = below * (r + extent * j);
            for i in 0..below {
                data[base + i] = m[[r, i + below * j]];
            }
        }
    }
    DenseTensor::new(shape.to_vec(), data)
}

/// `A ⊗ B`: the block matrix whose `(i, j)` block is `a_ij B`.
pub fn kronecker(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (m, n) = a.dim();
    let (p, q) = b.dim();
    let mut out = Array2::zeros((m * p, n * q));
    for i in 0..m {
        for j in 0..n {
            let aij = a[[i, j]];
            for r in 0..p {
                for s in 0..q {
                    out[[i * p + r, j * q + s]] = aij * b[[r, s]];
                }
            }
        }
    }
    out
}

/// Kronecker product of two vectors.
pub fn kronecker_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

/// Column-wise Kronecker product of two matrices with equal column counts.
pub fn khatri_rao(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let (m, n) = a.dim();
    let (p, q) = b.dim();
    if n != q {
        return Err(Error::Shape(format!(
            "Khatri-Rao product needs equal column counts, got {n} and {q}"
        )));
    }
    let mut out = Array2::zeros((m * p, n));
    for k in 0..n {
        for i in 0..m {
            let aik = a[[i, k]];
            for r in 0..p {
                out[[i * p + r, k]] = aik * b[[r, k]];
            }
        }
    }
    Ok(out)
}

/// `M_1 ⊙ M_2 ⊙ .. ⊙ M_n`, evaluated left to right.
pub fn khatri_rao_chain(mats: &[&Array2<f64>]) -> Result<Array2<f64>> {
    let (first, rest) = mats
        .split_first()
        .ok_or_else(|| Error::Shape("empty Khatri-Rao chain".into()))?;
    rest.iter()
        .try_fold((*first).clone(), |acc, m| khatri_rao(&acc, m))
}

/// `v_1 ∘ v_2 ∘ .. ∘ v_D`, the tensor with entries `Π_j v_j[i_j]`.
pub fn outer_product<V: AsRef<[f64]>>(vectors: &[V]) -> Result<DenseTensor> {
    let shape: Vec<usize> = vectors.iter().map(|v| v.as_ref().len()).collect();
    check_shape(&shape)?;
    // Grow the buffer one mode at a time; later modes vary slowest.
    let mut data = vec![1.0];
    for v in vectors {
        let v = v.as_ref();
        let mut next = Vec::with_capacity(data.len() * v.len());
        for &x in v {
            next.extend(data.iter().map(|&d| d * x));
        }
        data = next;
    }
    DenseTensor::new(shape, data)
}

/// Contracts mode `mode` of a first-index-fastest buffer against `w`.
fn contract_mode(data: &[f64], shape: &[usize], mode: usize, w: &[f64]) -> Vec<f64> {
    let (below, extent, above) = split_at_mode(shape, mode);
    debug_assert_eq!(w.len(), extent);
    let mut out = vec![0.0; below * above];
    for j in 0..above {
        let dst = &mut out[below * j..below * (j + 1)];
        for (t, &wt) in w.iter().enumerate() {
            let base = below * (t + extent * j);
            for (o, &x) in dst.iter_mut().zip(&data[base..base + below]) {
                *o += x * wt;
            }
        }
    }
    out
}

/// A bank of D factor matrices `W_l ∈ R^{p_l × K}` sharing the column
/// count K. Column `k` across all factors is the rank-1 tensor
/// `w_1^{(k)} ∘ .. ∘ w_D^{(k)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFactors {
    factors: Vec<Array2<f64>>,
}

impl CpFactors {
    pub fn new(factors: Vec<Array2<f64>>) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::Shape("a factor set needs at least one factor".into()))?;
        let k = first.ncols();
        if k == 0 {
            return Err(Error::Shape("factor matrices need at least one column".into()));
        }
        for (l, f) in factors.iter().enumerate() {
            if f.ncols() != k {
                return Err(Error::Shape(format!(
                    "factor {} has {} columns, expected {}",
                    l + 1,
                    f.ncols(),
                    k
                )));
            }
            if f.nrows() == 0 {
                return Err(Error::Shape(format!("factor {} has no rows", l + 1)));
            }
        }
        Ok(Self { factors })
    }

    pub fn zeros(shape: &[usize], rank: usize) -> Self {
        Self::new(shape.iter().map(|&p| Array2::zeros((p, rank))).collect())
            .expect("invalid factor shape")
    }

    pub fn ndim(&self) -> usize {
        self.factors.len()
    }

    pub fn rank(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn factor(&self, mode: usize) -> &Array2<f64> {
        &self.factors[mode]
    }

    pub fn factor_mut(&mut self, mode: usize) -> &mut Array2<f64> {
        &mut self.factors[mode]
    }

    pub fn factors(&self) -> &[Array2<f64>] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<Array2<f64>> {
        self.factors
    }

    pub fn column(&self, mode: usize, k: usize) -> Vec<f64> {
        self.factors[mode].column(k).to_vec()
    }

    /// The D factor columns of component `k`.
    pub fn component(&self, k: usize) -> Vec<Vec<f64>> {
        (0..self.ndim()).map(|l| self.column(l, k)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.rank() * self.shape().iter().sum::<usize>()
    }

    pub fn squared_norm(&self) -> f64 {
        self.factors
            .iter()
            .flat_map(|f| f.iter())
            .map(|v| v * v)
            .sum()
    }

    /// Rescales every component so that factors `1..D-1` have unit column
    /// norm, pushing the scale into the last factor. The rank-1 products
    /// are unchanged up to rounding; zero columns are left alone.
    pub fn normalize_columns(&mut self) {
        let d = self.ndim();
        for k in 0..self.rank() {
            let mut scale = 1.0;
            for f in &mut self.factors[..d - 1] {
                let mut col = f.column_mut(k);
                let norm = col.dot(&col).sqrt();
                if norm > 0.0 {
                    col /= norm;
                    scale *= norm;
                }
            }
            let mut last = self.factors[d - 1].column_mut(k);
            last *= scale;
        }
    }

    /// Rescales every component so that all of its factor columns share the
    /// same norm (the geometric mean of the original norms). This keeps the
    /// rank-1 products and minimizes the squared factor norm over all such
    /// rescalings.
    pub fn balance_columns(&mut self) {
        let d = self.ndim() as f64;
        for k in 0..self.rank() {
            let norms: Vec<f64> = self
                .factors
                .iter()
                .map(|f| {
                    let c = f.column(k);
                    c.dot(&c).sqrt()
                })
                .collect();
            if norms.contains(&0.0) {
                continue;
            }
            let target = norms.iter().map(|n| n.ln()).sum::<f64>() / d;
            let target = target.exp();
            for (f, n) in self.factors.iter_mut().zip(&norms) {
                let mut col = f.column_mut(k);
                col *= target / n;
            }
        }
    }

    fn check_input(&self, k: usize, x: &DenseTensor) -> Result<()> {
        if k >= self.rank() {
            return Err(Error::Shape(format!(
                "component {} requested from a rank-{} factor set",
                k + 1,
                self.rank()
            )));
        }
        let shape = self.shape();
        if shape != x.shape() {
            return Err(Error::Shape(format!(
                "factor rows {:?} do not match input shape {:?}",
                shape,
                x.shape()
            )));
        }
        Ok(())
    }
}

/// `Σ_k b_1^{(k)} ∘ .. ∘ b_D^{(k)}`.
pub fn cp_reconstruct(f: &CpFactors) -> DenseTensor {
    let shape = f.shape();
    let mut out = DenseTensor::zeros(&shape);
    for k in 0..f.rank() {
        let t = outer_product(&f.component(k)).expect("factor columns are nonempty");
        for (o, v) in out.data.iter_mut().zip(t.data) {
            *o += v;
        }
    }
    out
}

/// `X_(l) (w_D ⊙ .. ⊙ w_{l+1} ⊙ w_{l-1} ⊙ .. ⊙ w_1)` for component `k` of
/// `f` and zero-based mode `l`, computed by contracting every other mode
/// of `x` in turn. The Kronecker vector is never formed. For a one-mode
/// input the chain is empty and the result is `vec(x)`.
pub fn transformed_input(x: &DenseTensor, f: &CpFactors, k: usize, mode: usize) -> Result<Vec<f64>> {
    f.check_input(k, x)?;
    check_mode(x.ndim(), mode)?;
    let mut shape = x.shape.clone();
    let mut buf: Cow<[f64]> = Cow::Borrowed(&x.data);
    for d in (0..x.ndim()).rev() {
        if d == mode {
            continue;
        }
        let w = f.factors[d].column(k);
        let next = match w.as_slice() {
            Some(w) => contract_mode(&buf, &shape, d, w),
            None => contract_mode(&buf, &shape, d, &w.to_vec()),
        };
        buf = Cow::Owned(next);
        shape.remove(d);
    }
    Ok(buf.into_owned())
}

/// `⟨w_D^{(k)} ⊙ .. ⊙ w_1^{(k)}, vec(x)⟩`, evaluated through the transformed
/// input of the last mode.
pub fn cp_inner_product(f: &CpFactors, k: usize, x: &DenseTensor) -> Result<f64> {
    cp_inner_product_via(f, k, x, x.ndim().saturating_sub(1))
}

/// Same value as [`cp_inner_product`], computed as `⟨w_l^{(k)}, τ_{≠l}⟩`
/// for the given zero-based mode.
pub fn cp_inner_product_via(f: &CpFactors, k: usize, x: &DenseTensor, mode: usize) -> Result<f64> {
    let tau = transformed_input(x, f, k, mode)?;
    let w = f.factors[mode].column(k);
    Ok(w.iter().zip(&tau).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn vec_index_examples() {
        assert_eq!(vec_index(&[1, 1], &[2, 3]).unwrap(), 1);
        assert_eq!(vec_index(&[2, 1], &[2, 3]).unwrap(), 2);
        assert_eq!(vec_index(&[2, 3], &[2, 3]).unwrap(), 6);
    }

    #[test]
    fn vec_index_names_bad_mode() {
        match vec_index(&[1, 4], &[2, 3]) {
            Err(Error::Bounds { mode, index, extent }) => {
                assert_eq!((mode, index, extent), (2, 4, 3));
            }
            other => panic!("expected bounds error, got {other:?}"),
        }
        assert!(matches!(
            vec_index(&[0, 1], &[2, 3]),
            Err(Error::Bounds { mode: 1, .. })
        ));
    }

    #[test]
    fn vectorize_matrix_is_column_major() {
        // [[1,3],[2,4]] with rows along mode 1.
        let t = DenseTensor::from_fn(&[2, 2], |i| [[1.0, 3.0], [2.0, 4.0]][i[0]][i[1]]);
        assert_eq!(vectorize(&t), vec![1.0, 2.0, 3.0, 4.0]);
        let v = DenseTensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(vectorize(&v), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn matricize_matrix_modes() {
        let t = DenseTensor::from_fn(&[2, 3], |i| (10 * i[0] + i[1]) as f64);
        let m1 = matricize(&t, 0).unwrap();
        let m2 = matricize(&t, 1).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(m1[[r, c]], t.get(&[r, c]));
                assert_eq!(m2[[c, r]], t.get(&[r, c]));
            }
        }
        assert!(matches!(matricize(&t, 2), Err(Error::Bounds { .. })));
    }

    #[test]
    fn kronecker_examples() {
        let i2 = Array2::<f64>::eye(2);
        assert_eq!(kronecker(&i2, &i2), Array2::<f64>::eye(4));
        let k = kronecker(&array![[1.0, 2.0]], &array![[0.0, 1.0]]);
        assert_eq!(k, array![[0.0, 1.0, 0.0, 2.0]]);
        let k = kronecker(&Array2::zeros((3, 2)), &Array2::zeros((4, 5)));
        assert_eq!(k.dim(), (12, 10));
    }

    #[test]
    fn khatri_rao_examples() {
        let i2 = Array2::<f64>::eye(2);
        let kr = khatri_rao(&i2, &i2).unwrap();
        assert_eq!(kr, array![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]);
        let a = array![[1.0], [2.0]];
        let b = array![[3.0], [4.0], [5.0]];
        assert_eq!(khatri_rao(&a, &b).unwrap(), kronecker(&a, &b));
        assert!(matches!(
            khatri_rao(&Array2::zeros((2, 2)), &Array2::zeros((2, 3))),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn outer_product_examples() {
        let t = outer_product(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(t.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let t = outer_product(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(t.get(&[0, 0]), 3.0);
        assert_eq!(t.get(&[0, 1]), 4.0);
        assert_eq!(t.get(&[1, 0]), 6.0);
        assert_eq!(t.get(&[1, 1]), 8.0);
        assert!(outer_product::<Vec<f64>>(&[]).is_err());
        assert!(outer_product(&[vec![1.0], vec![]]).is_err());
    }

    #[test]
    fn cp_reconstruct_basis() {
        let mut f = CpFactors::zeros(&[2, 3, 2], 1);
        for l in 0..3 {
            f.factor_mut(l)[[0, 0]] = 1.0;
        }
        let t = cp_reconstruct(&f);
        assert_eq!(t.get(&[0, 0, 0]), 1.0);
        assert_eq!(t.as_slice().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn cp_reconstruct_two_orthogonal_components() {
        let f = CpFactors::new(vec![
            array![[1.0, 0.0], [0.0, 2.0]],
            array![[3.0, 0.0], [0.0, 1.0], [1.0, -1.0]],
        ])
        .unwrap();
        let t = cp_reconstruct(&f);
        for i in 0..2 {
            for j in 0..3 {
                let expected =
                    f.factor(0)[[i, 0]] * f.factor(1)[[j, 0]] + f.factor(0)[[i, 1]] * f.factor(1)[[j, 1]];
                assert_eq!(t.get(&[i, j]), expected);
            }
        }
    }

    #[test]
    fn cp_inner_product_all_ones() {
        let shape = [2, 3, 4];
        let f = CpFactors::new(shape.iter().map(|&p| Array2::ones((p, 1))).collect()).unwrap();
        let x = DenseTensor::from_fn(&shape, |_| 1.0);
        for l in 0..3 {
            assert_eq!(cp_inner_product_via(&f, 0, &x, l).unwrap(), 24.0);
        }
    }

    #[test]
    fn transformed_input_matrix_case() {
        // D = 2, mode 1: τ = X w_2.
        let x = DenseTensor::from_fn(&[3, 2], |i| (1 + i[0] + 3 * i[1]) as f64);
        let f = CpFactors::new(vec![Array2::ones((3, 1)), array![[2.0], [-1.0]]]).unwrap();
        let tau = transformed_input(&x, &f, 0, 0).unwrap();
        let expected: Vec<f64> = (0..3)
            .map(|r| 2.0 * x.get(&[r, 0]) - x.get(&[r, 1]))
            .collect();
        assert_eq!(tau, expected);
    }

    #[test]
    fn transformed_input_one_mode_is_identity() {
        let x = DenseTensor::new(vec![4], vec![1.0, -2.0, 3.5, 0.25]).unwrap();
        let f = CpFactors::new(vec![array![[9.0], [9.0], [9.0], [9.0]]]).unwrap();
        assert_eq!(transformed_input(&x, &f, 0, 0).unwrap(), vectorize(&x));
    }

    #[test]
    fn shape_errors() {
        let x = DenseTensor::zeros(&[2, 3]);
        let f = CpFactors::zeros(&[2, 4], 1);
        assert!(matches!(cp_inner_product(&f, 0, &x), Err(Error::Shape(_))));
        assert!(matches!(transformed_input(&x, &f, 0, 0), Err(Error::Shape(_))));
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
        assert!(CpFactors::new(vec![Array2::zeros((2, 2)), Array2::zeros((2, 3))]).is_err());
    }

    #[test]
    fn normalization_keeps_products() {
        let f0 = CpFactors::new(vec![
            array![[1.0, 0.5], [2.0, -1.0]],
            array![[3.0, 0.0], [0.0, 4.0], [1.0, 1.0]],
            array![[0.1, 2.0], [-0.3, 0.7]],
        ])
        .unwrap();
        let before = cp_reconstruct(&f0);
        for balanced in [false, true] {
            let mut f = f0.clone();
            if balanced {
                f.balance_columns();
            } else {
                f.normalize_columns();
            }
            let after = cp_reconstruct(&f);
            for (a, b) in before.as_slice().iter().zip(after.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
            if !balanced {
                for l in 0..2 {
                    for k in 0..2 {
                        let c = f.factor(l).column(k).to_owned();
                        assert!((c.dot(&c) - 1.0).abs() < 1e-12);
                    }
                }
            } else {
                assert!(f.squared_norm() <= f0.squared_norm());
            }
        }
    }
}
