//! PCA of user embeddings: explained-variance curves, 2D projections and a
//! random-embedding control.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng as _;

use crate::dataset::Dataset;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng::{rng_from, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Orthonormal rows, by decreasing eigenvalue.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

/// Eigenvalues and eigenvectors (as columns of the returned row-major
/// `d × d` matrix) of a symmetric matrix, by cyclic Jacobi rotations.
pub fn symmetric_eigen(a: &[f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * d + j] * m[i * d + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * d + q] - m[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (mkp, mkq) = (m[k * d + p], m[k * d + q]);
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let (mpk, mqk) = (m[p * d + k], m[q * d + k]);
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let (vkp, vkq) = (v[k * d + p], v[k * d + q]);
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| m[i * d + i]).collect(), v)
}

/// Sample covariance (divisor `n - 1`) of the rows and their mean.
pub fn covariance(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; d * d];
    let mut centred = vec![0.0; d];
    for r in rows {
        for k in 0..d {
            centred[k] = r[k] - mean[k];
        }
        for i in 0..d {
            let ci = centred[i];
            for j in i..d {
                cov[i * d + j] += ci * centred[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / (n as f64 - 1.0);
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    (mean, cov)
}

/// Fits `k` principal components. Each component's largest-magnitude entry
/// is made positive.
pub fn pca_fit(rows: &[&[f64]], k: usize) -> Result<PcaModel> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid("PCA needs at least two rows"));
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("rows differ in length"));
    }
    if k > (n - 1).min(d) {
        return Err(Error::invalid(format!("k = {k} exceeds min(n - 1, d) = {}", (n - 1).min(d))));
    }
    let (mean, cov) = covariance(rows);
    let (values, vectors) = symmetric_eigen(&cov, d);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("data has zero variance"));
    }
    let mut components = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &c in order.iter().take(k) {
        let mut comp: Vec<f64> = (0..d).map(|r| vectors[r * d + c]).collect();
        let lead = comp.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            comp.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(comp);
        eigenvalues.push(clipped[c]);
    }
    let explained_variance_ratio = eigenvalues.iter().map(|v| v / total).collect();
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        explained_variance_ratio,
    })
}

/// Sum of the first `k` explained-variance ratios.
pub fn cev(model: &PcaModel, k: usize) -> Result<f64> {
    if k > model.components.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {} fitted components",
            model.components.len()
        )));
    }
    Ok(model.explained_variance_ratio[..k].iter().sum())
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Coordinates of `row` on every fitted component.
    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((a, x), m)| a * (x - m)).sum())
            .collect())
    }

    pub fn inverse_transform(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &z) in self.components.iter().zip(coords) {
            for (o, a) in out.iter_mut().zip(c) {
                *o += z * a;
            }
        }
        out
    }
}

/// `(x, y, tag)` on the first two components.
pub fn project2d(model: &PcaModel, rows: &[&[f64]], tags: &[String]) -> Result<Vec<(f64, f64, String)>> {
    if model.components.len() < 2 {
        return Err(Error::invalid("projection needs two components"));
    }
    if rows.len() != tags.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: tags.len(),
        });
    }
    rows.iter()
        .zip(tags)
        .map(|(r, t)| {
            let z = model.transform(r)?;
            Ok((z[0], z[1], t.clone()))
        })
        .collect()
}

pub fn write_projection(path: &Path, points: &[(f64, f64, String)]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x,y,tag")?;
    for (x, y, t) in points {
        writeln!(w, "{x},{y},{t}")?;
    }
    w.flush()?;
    Ok(())
}

/// Entries independent uniform in `[-1, 1]`.
pub fn random_embeddings(n: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = rng_from(&[stream::RANDOM_EMBEDDING, seed]);
    let values = (0..n * dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    EmbeddingMatrix::from_values(EmbeddingMatrix::index_ids(n), dim, values).expect("finite by construction")
}

pub const FAKE_ENGAGED: &str = "fake-engaged";
pub const FACTUAL_ONLY: &str = "factual-only";

/// Engaged users with a real (non-sentinel) embedding, tagged by whether
/// they engaged with at least one fake article.
pub fn engaged_user_groups(dataset: &Dataset, emb: &EmbeddingMatrix) -> Vec<(usize, String)> {
    let engaged = dataset.engaged_mask();
    let fake = dataset.fake_engaged_mask();
    (0..dataset.n_users())
        .filter(|&u| engaged[u] && !dataset.users.is_missing(u) && !emb.is_sentinel_row(u))
        .map(|u| (u, if fake[u] { FAKE_ENGAGED } else { FACTUAL_ONLY }.to_string()))
        .collect()
}

/// Users engaged with either article, tagged by article id (users shared by
/// both get `a+b`).
pub fn article_pair_groups(
    dataset: &Dataset,
    emb: &EmbeddingMatrix,
    first: &str,
    second: &str,
) -> Result<Vec<(usize, String)>> {
    let a = dataset.article(first)?;
    let b = dataset.article(second)?;
    let mut out = Vec::new();
    for u in 0..dataset.n_users() {
        let in_a = a.engaged_users.binary_search(&u).is_ok();
        let in_b = b.engaged_users.binary_search(&u).is_ok();
        if !(in_a || in_b) || dataset.users.is_missing(u) || emb.is_sentinel_row(u) {
            continue;
        }
        let tag = match (in_a, in_b) {
            (true, true) => format!("{first}+{second}"),
            (true, false) => first.to_string(),
            _ => second.to_string(),
        };
        out.push((u, tag));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(rng: &mut Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn as_rows(data: &[Vec<f64>]) -> Vec<&[f64]> {
        data.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn rank_one_line() {
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let m = pca_fit(&as_rows(&data), 2).unwrap();
        assert!((m.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        assert!(m.explained_variance_ratio[1].abs() < 1e-12);
        assert!((cev(&m, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(m.components[0][1] > 0.0);
    }

    #[test]
    fn isotropic_gaussian() {
        let mut rng = Rng::seed_from_u64(1);
        let data: Vec<Vec<f64>> = (0..20_000).map(|_| vec![normal(&mut rng), normal(&mut rng)]).collect();
        let m = pca_fit(&as_rows(&data), 2).unwrap();
        assert!((m.explained_variance_ratio[0] - 0.5).abs() < 0.02);
        assert!((m.explained_variance_ratio[1] - 0.5).abs() < 0.02);
    }

    #[test]
    fn against_dense_eigensolver() {
        let mut rng = Rng::seed_from_u64(4);
        for _ in 0..20 {
            let data: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let rows = as_rows(&data);
            let m = pca_fit(&rows, 3).unwrap();
            let (_, cov) = covariance(&rows);
            let mut expected: Vec<f64> = nalgebra::SymmetricEigen::new(nalgebra::DMatrix::from_row_slice(3, 3, &cov))
                .eigenvalues
                .iter()
                .copied()
                .collect();
            expected.sort_by(|a, b| b.total_cmp(a));
            for (a, b) in m.eigenvalues.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
            assert!((cev(&m, 3).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn structural_invariants() {
        let mut rng = Rng::seed_from_u64(8);
        let data: Vec<Vec<f64>> = (0..30).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let rows = as_rows(&data);
        let m = pca_fit(&rows, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let d: f64 = m.components[i].iter().zip(&m.components[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-8);
            }
        }
        assert!(m.explained_variance_ratio.windows(2).all(|w| w[0] >= w[1]));
        let mut prev = 0.0;
        for k in 0..=5 {
            let c = cev(&m, k).unwrap();
            assert!(c >= prev - 1e-15);
            prev = c;
        }
        assert!((prev - 1.0).abs() < 1e-8);
        for r in &rows {
            let back = m.inverse_transform(&m.transform(r).unwrap());
            for (a, b) in back.iter().zip(r.iter()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
        assert_eq!(cev(&m, 0).unwrap(), 0.0);
        assert!(cev(&m, 6).is_err());
    }

    #[test]
    fn fit_errors() {
        let data = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]];
        assert!(pca_fit(&as_rows(&data), 1).is_err());
        let data = vec![vec![1.0, 2.0], vec![0.0, 2.0]];
        assert!(pca_fit(&as_rows(&data), 2).is_err());
        assert!(pca_fit(&as_rows(&data[..1]), 1).is_err());
    }

    #[test]
    fn projection_properties() {
        let mut rng = Rng::seed_from_u64(10);
        let data: Vec<Vec<f64>> = (0..20).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let rows = as_rows(&data);
        let m = pca_fit(&rows, 2).unwrap();
        let tags: Vec<String> = (0..20).map(|i| format!("t{i}")).collect();
        let pts = project2d(&m, &rows, &tags).unwrap();
        let centre = project2d(&m, &[m.mean.as_slice()], &["mean".into()]).unwrap();
        assert!(centre[0].0.abs() < 1e-12 && centre[0].1.abs() < 1e-12);
        for i in 0..20 {
            for j in 0..20 {
                let dp = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
                let dx: f64 = data[i].iter().zip(&data[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!(dp <= dx + 1e-12);
            }
        }
        assert_eq!(pts[3].2, "t3");
        assert!(project2d(&m, &[&[1.0][..]], &["x".into()]).is_err());
    }

    #[test]
    fn separated_groups_project_apart() {
        let mut rng = Rng::seed_from_u64(12);
        let mut data = Vec::new();
        let mut tags = Vec::new();
        for g in 0..2 {
            for _ in 0..20 {
                let base = if g == 0 { 1.0 } else { -1.0 };
                data.push((0..6).map(|_| base + 0.1 * normal(&mut rng)).collect::<Vec<_>>());
                tags.push(format!("g{g}"));
            }
        }
        let rows = as_rows(&data);
        let m = pca_fit(&rows, 2).unwrap();
        let pts = project2d(&m, &rows, &tags).unwrap();
        let centroid = |g: &str| {
            let sel: Vec<_> = pts.iter().filter(|p| p.2 == g).collect();
            let n = sel.len() as f64;
            (sel.iter().map(|p| p.0).sum::<f64>() / n, sel.iter().map(|p| p.1).sum::<f64>() / n)
        };
        let spread = |g: &str| {
            let c = centroid(g);
            let sel: Vec<_> = pts.iter().filter(|p| p.2 == g).collect();
            sel.iter().map(|p| ((p.0 - c.0).powi(2) + (p.1 - c.1).powi(2)).sqrt()).sum::<f64>() / sel.len() as f64
        };
        let (a, b) = (centroid("g0"), centroid("g1"));
        let between = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        assert!(between > spread("g0") && between > spread("g1"));
    }

    #[test]
    fn random_control() {
        let a = random_embeddings(50, 4, 3);
        assert_eq!(a, random_embeddings(50, 4, 3));
        assert!(a.values().iter().all(|v| (-1.0..=1.0).contains(v)));
        let big = random_embeddings(2000, 10, 1);
        let mean = big.values().iter().sum::<f64>() / big.values().len() as f64;
        assert!(mean.abs() < 3.0 / (20_000f64).sqrt());
    }

    #[test]
    fn isotropic_control_cev_is_k_over_d() {
        // Sample-covariance spectrum spreads by about 2 sqrt(d / n) around the
        // true value, which bounds how far the top half can drift from 1/2.
        let (n, d, k) = (10_000, 100, 50);
        let emb = random_embeddings(n, d, 11);
        let rows: Vec<&[f64]> = (0..n).map(|i| emb.row(i)).collect();
        let model = pca_fit(&rows, k).unwrap();
        let share = cev(&model, k).unwrap();
        let spread = 2.0 * (d as f64 / n as f64).sqrt();
        assert!((share - 0.5).abs() < spread / 2.0, "cev {share}");
    }
}
