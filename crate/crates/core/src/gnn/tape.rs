//! A small reverse-mode gradient tape over dense row-major matrices.
//!
//! Only the operations the GNN encoders need are provided. Every operation
//! appends a node holding its forward value; [`Tape::backward`] walks the
//! nodes in reverse and accumulates gradients.

use std::sync::Arc;

use crate::skipgram::{sg_pair_grad, sg_pair_loss};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other`.
    pub fn t_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "t_matmul shape");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let b_row = other.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_t shape");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = a.iter().zip(other.row(j)).map(|(x, y)| x * y).sum();
            }
        }
        out
    }

    fn add_assign(&mut self, other: &Matrix) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Compressed sparse rows with summed duplicate entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets. Entries are sorted by
    /// column inside each row and duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "sparse entry out of range");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        SparseMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// Row selector: output row `k` is input row `rows[k]`.
    pub fn selection(rows: &[usize], n_cols: usize) -> Self {
        let trips = rows.iter().enumerate().map(|(k, &r)| (k, r, 1.0)).collect();
        Self::from_triplets(rows.len(), n_cols, trips)
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row_entries(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                m.data[r * self.cols + c] += v;
            }
        }
        m
    }

    pub fn matmul(&self, dense: &Matrix) -> Matrix {
        assert_eq!(self.cols, dense.rows, "spmm shape");
        let mut out = Matrix::zeros(self.rows, dense.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * dense.cols..(r + 1) * dense.cols];
            for (c, v) in self.row_entries(r) {
                for (o, &x) in out_row.iter_mut().zip(dense.row(c)) {
                    *o += v * x;
                }
            }
        }
        out
    }

    /// `selfᵀ · dense`.
    fn t_matmul(&self, dense: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.cols, dense.cols);
        for r in 0..self.rows {
            let g = dense.row(r);
            for (c, v) in self.row_entries(r) {
                let out_row = &mut out.data[c * dense.cols..(c + 1) * dense.cols];
                for (o, &x) in out_row.iter_mut().zip(g) {
                    *o += v * x;
                }
            }
        }
        out
    }
}

/// One skip-gram example over rows of the scored matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SgSample {
    pub center: usize,
    pub context: usize,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Relu(Var),
    SpMM(Arc<SparseMatrix>, Var),
    RowNormalize(Var),
    SgLoss(Var, Arc<Vec<SgSample>>),
}

struct Node {
    op: Op,
    value: Matrix,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, value: Matrix) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn leaf(&mut self, m: Matrix) -> Var {
        self.push(Op::Leaf, m)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), v)
    }

    /// Adds a `1 × cols` bias row to every row of `a`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let mut v = self.value(a).clone();
        let b = self.value(bias);
        assert_eq!((b.rows, b.cols), (1, v.cols), "bias shape");
        for r in 0..v.rows {
            for (x, &y) in v.row_mut(r).iter_mut().zip(&b.data) {
                *x += y;
            }
        }
        self.push(Op::AddBias(a, bias), v)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(Op::Add(a, b), v)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for x in &mut v.data {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        self.push(Op::Relu(a), v)
    }

    pub fn spmm(&mut self, s: Arc<SparseMatrix>, a: Var) -> Var {
        let v = s.matmul(self.value(a));
        self.push(Op::SpMM(s, a), v)
    }

    /// Scales every row to unit L2 norm; zero rows stay zero.
    pub fn row_normalize(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for r in 0..v.rows {
            let row = v.row_mut(r);
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in row.iter_mut() {
                    *x /= norm;
                }
            }
        }
        self.push(Op::RowNormalize(a), v)
    }

    /// Mean skip-gram loss over `samples`, indexing rows of `h`.
    pub fn sg_loss(&mut self, h: Var, samples: Arc<Vec<SgSample>>) -> Var {
        let m = self.value(h);
        let mut total = 0.0;
        for s in samples.iter() {
            let negs: Vec<&[f64]> = s.negatives.iter().map(|&k| m.row(k)).collect();
            total += sg_pair_loss(m.row(s.center), m.row(s.context), &negs)
                .expect("rows share one width");
        }
        let mean = if samples.is_empty() { 0.0 } else { total / samples.len() as f64 };
        self.push(Op::SgLoss(h, samples), Matrix::from_vec(1, 1, vec![mean]))
    }

    /// Gradients of the scalar `loss` with respect to every node.
    pub fn backward(&self, loss: Var) -> Gradients {
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        let seed = &self.nodes[loss.0].value;
        assert_eq!((seed.rows, seed.cols), (1, 1), "backward needs a scalar");
        grads[loss.0] = Some(Matrix::from_vec(1, 1, vec![1.0]));

        fn acc(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(*b));
                    let gb = self.value(*a).t_matmul(&g);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddBias(a, bias) => {
                    let mut gb = Matrix::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for (x, &y) in gb.data.iter_mut().zip(g.row(r)) {
                            *x += y;
                        }
                    }
                    acc(&mut grads, *bias, gb);
                    acc(&mut grads, *a, g.clone());
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *b, g.clone());
                    acc(&mut grads, *a, g.clone());
                }
                Op::Relu(a) => {
                    let mut ga = g.clone();
                    for (x, &y) in ga.data.iter_mut().zip(&self.value(*a).data) {
                        if y <= 0.0 {
                            *x = 0.0;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::SpMM(s, a) => {
                    acc(&mut grads, *a, s.t_matmul(&g));
                }
                Op::RowNormalize(a) => {
                    let x = self.value(*a);
                    let y = &node.value;
                    let mut ga = Matrix::zeros(x.rows, x.cols);
                    for r in 0..x.rows {
                        let norm = x.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm == 0.0 {
                            continue;
                        }
                        let (yr, gr) = (y.row(r), g.row(r));
                        let proj: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((o, &yy), &gg) in ga.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *o = (gg - yy * proj) / norm;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::SgLoss(h, samples) => {
                    let m = self.value(*h);
                    let mut gh = Matrix::zeros(m.rows, m.cols);
                    if !samples.is_empty() {
                        let scale = g.data[0] / samples.len() as f64;
                        for s in samples.iter() {
                            let negs: Vec<&[f64]> = s.negatives.iter().map(|&k| m.row(k)).collect();
                            let sg = sg_pair_grad(m.row(s.center), m.row(s.context), &negs)
                                .expect("rows share one width");
                            axpy(gh.row_mut(s.center), scale, &sg.center);
                            axpy(gh.row_mut(s.context), scale, &sg.context);
                            for (&k, gn) in s.negatives.iter().zip(&sg.negatives) {
                                axpy(gh.row_mut(k), scale, gn);
                            }
                        }
                    }
                    acc(&mut grads, *h, gh);
                }
            }
            grads[idx] = Some(g);
        }
        Gradients { grads }
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yy, &xx) in y.iter_mut().zip(x) {
        *yy += a * xx;
    }
}

pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads[v.0].as_ref()
    }

    /// Gradient of `v`, or zeros shaped like `like` when `v` did not
    /// influence the loss.
    pub fn get_or_zeros(&self, v: Var, like: &Matrix) -> Matrix {
        self.get(v).cloned().unwrap_or_else(|| Matrix::zeros(like.rows, like.cols))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use rand::{Rng as _, SeedableRng};

    fn random(rng: &mut Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    /// Reduces `y` to the scalar `s · (y v)` with fixed random `s`, `v`.
    fn reduce(t: &mut Tape, y: Var, seed: u64) -> Var {
        let (rows, cols) = (t.value(y).rows, t.value(y).cols);
        let mut rng = Rng::seed_from_u64(seed);
        let v = t.leaf(random(&mut rng, cols, 1));
        let s = Arc::new(SparseMatrix::from_triplets(
            1,
            rows,
            (0..rows).map(|r| (0, r, rng.gen_range(-1.0..1.0))).collect(),
        ));
        let yv = t.matmul(y, v);
        t.spmm(s, yv)
    }

    fn check<F: Fn(&mut Tape, Var) -> Var>(input: Matrix, build: F) {
        let eval = |m: &Matrix| {
            let mut t = Tape::new();
            let x = t.leaf(m.clone());
            let y = build(&mut t, x);
            let l = reduce(&mut t, y, 99);
            t.value(l).data[0]
        };
        let mut t = Tape::new();
        let x = t.leaf(input.clone());
        let y = build(&mut t, x);
        let l = reduce(&mut t, y, 99);
        let g = t.backward(l).get_or_zeros(x, &input);
        let h = 1e-6;
        for i in 0..input.data.len() {
            let mut p = input.clone();
            let mut m = input.clone();
            p.data[i] += h;
            m.data[i] -= h;
            let fd = (eval(&p) - eval(&m)) / (2.0 * h);
            let a = g.data[i];
            assert!((a - fd).abs() / a.abs().max(fd.abs()).max(1e-6) < 1e-5, "{a} vs {fd}");
        }
    }

    #[test]
    fn matmul_relu_bias_normalize_gradients() {
        let mut rng = Rng::seed_from_u64(1);
        let w = random(&mut rng, 3, 4);
        let b = random(&mut rng, 1, 4);
        let s = Arc::new(SparseMatrix::from_triplets(
            5,
            5,
            vec![(0, 1, 0.5), (0, 2, 0.5), (1, 0, 1.0), (3, 3, 2.0), (4, 0, 0.3), (4, 4, 0.7)],
        ));
        check(random(&mut rng, 5, 3), move |t, x| {
            let wv = t.leaf(w.clone());
            let bv = t.leaf(b.clone());
            let sx = t.spmm(s.clone(), x);
            let h1 = t.matmul(x, wv);
            let h2 = t.matmul(sx, wv);
            let h = t.add(h1, h2);
            let hb = t.add_bias(h, bv);
            let r = t.relu(hb);
            t.row_normalize(r)
        });
    }

    #[test]
    fn weight_side_gradients() {
        let mut rng = Rng::seed_from_u64(4);
        let x = random(&mut rng, 4, 3);
        check(random(&mut rng, 3, 2), move |t, w| {
            let xv = t.leaf(x.clone());
            t.matmul(xv, w)
        });
    }

    #[test]
    fn sg_loss_gradient() {
        let mut rng = Rng::seed_from_u64(2);
        let input = random(&mut rng, 6, 4);
        let samples = Arc::new(vec![
            SgSample { center: 0, context: 1, negatives: vec![2, 3] },
            SgSample { center: 4, context: 4, negatives: vec![0, 5, 5] },
        ]);
        let loss_of = |m: &Matrix| {
            let mut t = Tape::new();
            let x = t.leaf(m.clone());
            let l = t.sg_loss(x, samples.clone());
            t.value(l).data[0]
        };
        let mut t = Tape::new();
        let x = t.leaf(input.clone());
        let l = t.sg_loss(x, samples.clone());
        let g = t.backward(l).get(x).unwrap().clone();
        for i in 0..input.data.len() {
            let mut p = input.clone();
            let mut m = input.clone();
            p.data[i] += 1e-6;
            m.data[i] -= 1e-6;
            let fd = (loss_of(&p) - loss_of(&m)) / 2e-6;
            assert!((g.data[i] - fd).abs() < 1e-8, "{} vs {fd}", g.data[i]);
        }
    }

    #[test]
    fn zero_row_normalizes_to_zero() {
        let mut t = Tape::new();
        let x = t.leaf(Matrix::from_vec(2, 2, vec![0.0, 0.0, 3.0, 4.0]));
        let y = t.row_normalize(x);
        assert_eq!(t.value(y).data, vec![0.0, 0.0, 0.6, 0.8]);
    }

    #[test]
    fn sparse_duplicates_sum() {
        let s = SparseMatrix::from_triplets(2, 2, vec![(1, 0, 1.0), (0, 1, 2.0), (1, 0, 0.5)]);
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.get(1, 0), 1.5);
        assert_eq!(s.to_dense().data, vec![0.0, 2.0, 1.5, 0.0]);
    }

    #[test]
    fn dense_products_agree() {
        let mut rng = Rng::seed_from_u64(8);
        let a = random(&mut rng, 3, 4);
        let b = random(&mut rng, 4, 2);
        let c = random(&mut rng, 3, 2);
        let ab = a.matmul(&b);
        let at_c = a.t_matmul(&c);
        let c_bt = c.matmul_t(&b);
        for i in 0..3 {
            for j in 0..2 {
                let e: f64 = (0..4).map(|k| a.data[i * 4 + k] * b.data[k * 2 + j]).sum();
                assert!((ab.data[i * 2 + j] - e).abs() < 1e-12);
            }
        }
        for i in 0..4 {
            for j in 0..2 {
                let e: f64 = (0..3).map(|k| a.data[k * 4 + i] * c.data[k * 2 + j]).sum();
                assert!((at_c.data[i * 2 + j] - e).abs() < 1e-12);
            }
        }
        for i in 0..3 {
            for j in 0..4 {
                let e: f64 = (0..2).map(|k| c.data[i * 2 + k] * b.data[j * 2 + k]).sum();
                assert!((c_bt.data[i * 4 + j] - e).abs() < 1e-12);
            }
        }
    }
}
