//! Jordan structure of scale matrices (row-vector convention) and extension
//! of finite kernel vectors of `T - λI` to kernel vectors of `L - λI`.

use crate::admissible::AdmissibleChain;
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::linalg::{
    column_space, condition_number, eigenvalues, norm2, null_space, singular_values,
};
use crate::scalar::{cabs, cre, eps, real, to_f64, CMat, CVec, Cx, Real};
use crate::scale_matrix::{Mask, ScaleMatrix};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug)]
pub struct JordanOptions {
    /// Rank threshold for `(T - λI)^k`, relative to `max(1, ‖T - λI‖)^k`.
    pub rank_tol: f64,
    /// Eigenvalues within `cluster_tol · (1 + |λ|)` are merged.
    pub cluster_tol: f64,
}

impl JordanOptions {
    /// Defaults suited to the precision of `T`.
    pub fn for_precision<T: Real>() -> Self {
        let e = to_f64(eps::<T>());
        JordanOptions {
            rank_tol: (100.0 * e.powf(2.0 / 3.0)).max(1e-9),
            cluster_tol: (10.0 * e.sqrt()).max(1e-5),
        }
    }
}

impl Default for JordanOptions {
    fn default() -> Self {
        Self::for_precision::<f64>()
    }
}

/// `v_1, …, v_ℓ` with `v_1 (T - λI) = 0` and `v_{t+1} (T - λI) = v_t`.
#[derive(Clone, Debug)]
pub struct JordanChain<T: Real> {
    pub vectors: Vec<CVec<T>>,
}

impl<T: Real> JordanChain<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct EigenCluster<T: Real> {
    /// Mean of the merged eigenvalues (exactly 0 for the zero cluster).
    pub value: Cx<T>,
    pub multiplicity: usize,
    /// `dim ker (T - λI)^k` for `k = 1, 2, …` up to stabilization.
    pub staircase: Vec<usize>,
    /// Longest chains first.
    pub chains: Vec<JordanChain<T>>,
}

impl<T: Real> EigenCluster<T> {
    pub fn chain_lengths(&self) -> Vec<usize> {
        self.chains.iter().map(JordanChain::len).collect()
    }

    pub fn is_semisimple(&self) -> bool {
        self.chains.iter().all(|c| c.len() == 1)
    }
}

/// Position of a basis row: cluster, chain within the cluster, depth (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RowLabel {
    pub cluster: usize,
    pub chain: usize,
    pub depth: usize,
}

#[derive(Clone, Debug)]
pub struct JordanDecomposition<T: Real> {
    pub index: Vec<Point>,
    pub clusters: Vec<EigenCluster<T>>,
    /// Rows are the chain vectors, cluster by cluster, chain by chain,
    /// `v_1` first. With this ordering `B T B^{-1}` is lower bidiagonal.
    pub basis: CMat<T>,
    pub rows: Vec<RowLabel>,
    pub rank_tol: T,
    pub cluster_tol: T,
    pub condition: T,
}

impl<T: Real> JordanDecomposition<T> {
    pub fn size(&self) -> usize {
        self.index.len()
    }

    /// Cluster whose value is within the clustering tolerance of `lambda`.
    pub fn find(&self, lambda: Cx<T>) -> Option<usize> {
        let tol = self.cluster_tol * real::<T>(10.0);
        self.clusters
            .iter()
            .position(|c| cabs(c.value - lambda) <= tol * (T::one() + cabs(lambda)))
    }

    pub fn eigenvalues(&self) -> Vec<Cx<T>> {
        self.clusters.iter().map(|c| c.value).collect()
    }

    /// Row vector of the basis.
    pub fn row(&self, i: usize) -> CVec<T> {
        self.basis.row(i).transpose()
    }

    /// Multiplicity of the zero eigenvalue.
    pub fn zero_multiplicity(&self) -> usize {
        self.clusters
            .iter()
            .filter(|c| cabs(c.value) == T::zero())
            .map(|c| c.multiplicity)
            .sum()
    }

    /// Largest `‖v_t (T - λI) - v_{t-1}‖` over all chain vectors, relative to
    /// `max(1, ‖T‖)`.
    pub fn chain_residual(&self, t: &CMat<T>) -> T {
        let scale = norm2(t).max(T::one());
        let mut worst = T::zero();
        for c in &self.clusters {
            let n = shifted_transpose(t, c.value);
            for chain in &c.chains {
                for (k, v) in chain.vectors.iter().enumerate() {
                    let mut r = &n * v;
                    if k > 0 {
                        r -= &chain.vectors[k - 1];
                    }
                    let e = r.norm() / scale;
                    if e > worst {
                        worst = e;
                    }
                }
            }
        }
        worst
    }

    /// `‖B T B^{-1} - J‖_max` with `J` the lower-bidiagonal Jordan form.
    pub fn similarity_residual(&self, t: &CMat<T>) -> T {
        let n = self.size();
        let inv = match self.basis.clone().try_inverse() {
            Some(m) => m,
            None => return real::<T>(f64::INFINITY),
        };
        let j = &self.basis * t * inv;
        let mut worst = T::zero();
        for r in 0..n {
            for c in 0..n {
                let lr = self.rows[r];
                let expect = if r == c {
                    self.clusters[lr.cluster].value
                } else if c + 1 == r
                    && self.rows[c].cluster == lr.cluster
                    && self.rows[c].chain == lr.chain
                {
                    cre(T::one())
                } else {
                    cre(T::zero())
                };
                let e = cabs(j[(r, c)] - expect);
                if e > worst {
                    worst = e;
                }
            }
        }
        worst
    }
}

/// `(T - λI)^T` (plain transpose): columns act as row vectors on the left.
fn shifted_transpose<T: Real>(t: &CMat<T>, lambda: Cx<T>) -> CMat<T> {
    let mut n = t.transpose();
    for i in 0..n.nrows() {
        n[(i, i)] -= lambda;
    }
    n
}

fn staircase<T: Real>(n: &CMat<T>, tol: T, max_len: usize) -> Vec<usize> {
    let size = n.nrows();
    let scale = norm2(n).max(T::one());
    let mut out: Vec<usize> = Vec::new();
    let mut power = CMat::identity(size, size);
    let mut thresh = tol;
    for _ in 0..max_len.min(size).max(1) {
        power = n * &power;
        thresh *= scale;
        let s = singular_values(&power);
        let nullity = s.iter().filter(|&&x| x <= thresh).count();
        if let Some(&prev) = out.last() {
            if nullity <= prev {
                break;
            }
        }
        out.push(nullity);
    }
    out
}

/// Largest modulus (relative to `max(1, ‖T‖)`) a computed eigenvalue of a
/// nilpotent block may drift to.
const ZERO_SPREAD: f64 = 1e-2;

/// Eigenvalue clusters, largest modulus first.
fn cluster_eigenvalues<T: Real>(t: &CMat<T>, opts: &JordanOptions) -> Vec<(Cx<T>, usize)> {
    let ctol = real::<T>(opts.cluster_tol);
    let mut ev = eigenvalues(t);
    // The zero eigenvalue's algebraic multiplicity is decided by the rank of
    // powers of T rather than by eigenvalue proximity: nilpotent blocks
    // scatter computed eigenvalues far more than the rank tolerance.
    // Only computed eigenvalues below `ZERO_SPREAD` can belong to it.
    let scale = norm2(t).max(T::one());
    let candidates = ev
        .iter()
        .filter(|z| cabs(**z) <= real::<T>(ZERO_SPREAD) * scale)
        .count();
    let zeros = if candidates == 0 {
        0
    } else {
        let stairs = staircase(&t.transpose(), real::<T>(opts.rank_tol), candidates);
        stairs.last().copied().unwrap_or(0).min(candidates)
    };
    ev.sort_by(|a, b| {
        cabs(*a)
            .partial_cmp(&cabs(*b))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let rest: Vec<Cx<T>> = ev.split_off(zeros.min(ev.len()));
    let mut out: Vec<(Cx<T>, usize)> = Vec::new();
    if zeros > 0 {
        out.push((cre(T::zero()), zeros));
    }
    // greedy single-linkage union
    let mut groups: Vec<Vec<Cx<T>>> = Vec::new();
    for z in rest {
        let mut hit: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| {
                g.iter()
                    .any(|w| cabs(*w - z) <= ctol * (T::one() + cabs(z)))
            })
            .map(|(i, _)| i)
            .collect();
        if hit.is_empty() {
            groups.push(vec![z]);
        } else {
            let first = hit.remove(0);
            for &i in hit.iter().rev() {
                let g = groups.remove(i);
                groups[first].extend(g);
            }
            groups[first].push(z);
        }
    }
    for g in groups {
        let n = g.len();
        let sum = g.iter().fold(cre(T::zero()), |a, b| a + *b);
        let mut mean = sum / cre(real::<T>(n as f64));
        if cabs(mean) <= ctol {
            mean = cre(T::zero());
        }
        if mean.im.abs() <= ctol * (T::one() + cabs(mean)) {
            mean.im = T::zero();
        }
        out.push((mean, n));
    }
    // merge a snapped-to-zero cluster into the zero cluster
    let mut merged: Vec<(Cx<T>, usize)> = Vec::new();
    for (v, n) in out {
        if let Some(e) = merged.iter_mut().find(|(w, _)| *w == v) {
            e.1 += n;
        } else {
            merged.push((v, n));
        }
    }
    merged.sort_by(|a, b| {
        let key = |z: &Cx<T>| (to_f64(cabs(*z)), to_f64(z.re), to_f64(z.im));
        key(&b.0)
            .partial_cmp(&key(&a.0))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    merged
}

/// Reduced row echelon form of the rows of `m` (partial pivoting), giving a
/// canonical basis of their span.
fn canonical_rows<T: Real>(m: &CMat<T>, tol: T) -> Vec<CVec<T>> {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (mut best, mut best_abs) = (r, T::zero());
        for i in r..rows {
            let v = cabs(a[(i, c)]);
            if v > best_abs {
                best = i;
                best_abs = v;
            }
        }
        // small pivots would amplify rounding in the other rows
        let remaining = (r..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| cabs(a[(i, j)]))
            .fold(T::zero(), |x, y| if y > x { y } else { x });
        if best_abs <= tol || best_abs < remaining * real::<T>(1e-3) {
            continue;
        }
        a.swap_rows(r, best);
        let p = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                if cabs(f) > T::zero() {
                    for j in 0..cols {
                        let sub = f * a[(r, j)];
                        a[(i, j)] -= sub;
                    }
                }
            }
        }
        r += 1;
    }
    (0..r).map(|i| a.row(i).transpose()).collect()
}

fn hstack<T: Real>(rows: usize, parts: &[CVec<T>]) -> CMat<T> {
    if parts.is_empty() {
        CMat::zeros(rows, 0)
    } else {
        CMat::from_columns(parts)
    }
}

fn cols_of<T: Real>(m: &CMat<T>) -> Vec<CVec<T>> {
    (0..m.ncols()).map(|j| m.column(j).into_owned()).collect()
}

fn chains_for<T: Real>(
    t: &CMat<T>,
    lambda: Cx<T>,
    stairs: &[usize],
    rank_tol: T,
) -> Vec<JordanChain<T>> {
    let size = t.nrows();
    let n = shifted_transpose(t, lambda);
    let scale = norm2(&n).max(T::one());
    let p = stairs.len();
    // kernels[k] = ker N^k, k = 0..=p
    let mut kernels: Vec<CMat<T>> = vec![CMat::zeros(size, 0)];
    let mut power = CMat::identity(size, size);
    let mut thresh = rank_tol;
    for _ in 0..p {
        power = &n * &power;
        thresh *= scale;
        kernels.push(null_space(&power, thresh));
    }
    let count = |k: usize| -> usize {
        if k == 0 {
            0
        } else if k > p {
            stairs[p - 1]
        } else {
            stairs[k - 1]
        }
    };
    let mut chains: Vec<JordanChain<T>> = Vec::new();
    let basis_tol = real::<T>(1e-6);
    for k in (1..=p).rev() {
        let at_least_k = count(k) - count(k - 1);
        let above = count(k + 1) - count(k);
        let new = at_least_k.saturating_sub(above);
        if new == 0 {
            continue;
        }
        // level-k vectors of the chains already found
        let mut spanning = cols_of(&kernels[k - 1]);
        for c in &chains {
            let l = c.len();
            spanning.push(c.vectors[k - 1].clone());
            debug_assert!(l > k);
        }
        let q = column_space(&hstack(size, &spanning), basis_tol);
        let kk = &kernels[k];
        let complement = kk - &q * (q.adjoint() * kk);
        let dirs = column_space(&complement, basis_tol);
        let take = new.min(dirs.ncols());
        let candidates = dirs.columns(0, take).into_owned();
        let tops = canonical_rows(&candidates.transpose(), basis_tol);
        for u in tops.into_iter().take(new) {
            let mut vectors = vec![u];
            for _ in 1..k {
                let next = &n * vectors.last().expect("nonempty");
                vectors.push(next);
            }
            vectors.reverse();
            chains.push(JordanChain { vectors });
        }
    }
    for c in &mut chains {
        normalize_chain(c);
    }
    chains.sort_by_key(|c| std::cmp::Reverse(c.len()));
    chains
}

/// Scales a chain so that its largest entry has modulus 1 and the largest
/// entry of the eigenvector is real positive.
fn normalize_chain<T: Real>(c: &mut JordanChain<T>) {
    let v1 = &c.vectors[0];
    let mut arg = 0;
    for i in 0..v1.len() {
        if cabs(v1[i]) > cabs(v1[arg]) * (T::one() + real::<T>(1e-9)) {
            arg = i;
        }
    }
    let phase = v1[arg] / cre(cabs(v1[arg]));
    let biggest = c
        .vectors
        .iter()
        .flat_map(|v| v.iter().map(|z| cabs(*z)))
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let f = phase * cre(biggest);
    for v in &mut c.vectors {
        for z in v.iter_mut() {
            *z /= f;
            if z.im.abs() <= eps::<T>() * real::<T>(16.0) {
                z.im = T::zero();
            }
        }
    }
}

/// Jordan decomposition of a scale matrix, in the row-vector convention.
pub fn eigen_jordan<T: Real>(
    t: &ScaleMatrix<T>,
    opts: &JordanOptions,
) -> Result<JordanDecomposition<T>> {
    jordan_of_matrix(&t.entries, t.index.clone(), opts)
}

/// Jordan decomposition of a square matrix whose rows and columns are
/// labelled by `index`.
pub fn jordan_of_matrix<T: Real>(
    m: &CMat<T>,
    index: Vec<Point>,
    opts: &JordanOptions,
) -> Result<JordanDecomposition<T>> {
    let size = m.nrows();
    let rank_tol = real::<T>(opts.rank_tol);
    let clusters_raw = cluster_eigenvalues(m, opts);
    let mut clusters = Vec::new();
    for (lambda, mult) in clusters_raw {
        let n = shifted_transpose(m, lambda);
        let base = staircase(&n, rank_tol, mult);
        let low = staircase(&n, rank_tol * real::<T>(0.1), mult);
        let high = staircase(&n, rank_tol * real::<T>(10.0), mult);
        if base.last().copied() != Some(mult) || low != base || high != base {
            return Err(Error::IllConditioned {
                eigenvalue: format!("{}{:+}i", to_f64(lambda.re), to_f64(lambda.im)),
                multiplicity: mult,
                at_tol: base,
                at_low: low,
                at_high: high,
            });
        }
        let chains = chains_for(m, lambda, &base, rank_tol);
        clusters.push(EigenCluster {
            value: lambda,
            multiplicity: mult,
            staircase: base,
            chains,
        });
    }
    let mut rows = Vec::with_capacity(size);
    let mut vecs = Vec::with_capacity(size);
    for (ci, c) in clusters.iter().enumerate() {
        for (hi, chain) in c.chains.iter().enumerate() {
            for (k, v) in chain.vectors.iter().enumerate() {
                rows.push(RowLabel {
                    cluster: ci,
                    chain: hi,
                    depth: k + 1,
                });
                vecs.push(v.transpose());
            }
        }
    }
    let basis = if vecs.is_empty() {
        CMat::zeros(0, 0)
    } else {
        CMat::from_rows(&vecs)
    };
    let condition = condition_number(&basis);
    Ok(JordanDecomposition {
        index,
        clusters,
        basis,
        rows,
        rank_tol,
        cluster_tol: real::<T>(opts.cluster_tol),
        condition,
    })
}

/// Serializable view of a Jordan decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct JordanReport {
    pub index: Vec<Point>,
    pub clusters: Vec<ClusterReport>,
    pub condition: f64,
    pub rank_tol: f64,
    pub cluster_tol: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub eigenvalue: [f64; 2],
    pub multiplicity: usize,
    pub staircase: Vec<usize>,
    pub chain_lengths: Vec<usize>,
    /// Chain vectors, `v_1` first, entries as `[re, im]`.
    pub chains: Vec<Vec<Vec<[f64; 2]>>>,
}

impl<T: Real> JordanDecomposition<T> {
    pub fn report(&self) -> JordanReport {
        let pair = |z: &Cx<T>| [to_f64(z.re), to_f64(z.im)];
        JordanReport {
            index: self.index.clone(),
            clusters: self
                .clusters
                .iter()
                .map(|c| ClusterReport {
                    eigenvalue: pair(&c.value),
                    multiplicity: c.multiplicity,
                    staircase: c.staircase.clone(),
                    chain_lengths: c.chain_lengths(),
                    chains: c
                        .chains
                        .iter()
                        .map(|ch| {
                            ch.vectors
                                .iter()
                                .map(|v| v.iter().map(pair).collect())
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
            condition: to_f64(self.condition),
            rank_tol: to_f64(self.rank_tol),
            cluster_tol: to_f64(self.cluster_tol),
        }
    }
}

/// Finitely supported row vector indexed by lattice points.
pub type SparseVec<T> = BTreeMap<Point, Cx<T>>;

/// `u (L - λI)`.
pub fn apply_shifted<T: Real>(u: &SparseVec<T>, mask: &Mask<T>, lambda: Cx<T>) -> SparseVec<T> {
    let mut out: SparseVec<T> = BTreeMap::new();
    for (i, ui) in u {
        for (j, c) in mask.l_row(i) {
            *out.entry(j).or_insert_with(|| cre(T::zero())) += *ui * c;
        }
    }
    if lambda != cre(T::zero()) {
        for (i, ui) in u {
            *out.entry(i.clone()).or_insert_with(|| cre(T::zero())) -= lambda * *ui;
        }
    }
    out
}

/// `u (L - λI)^r`.
pub fn apply_shifted_pow<T: Real>(
    u: &SparseVec<T>,
    mask: &Mask<T>,
    lambda: Cx<T>,
    r: usize,
) -> SparseVec<T> {
    let mut cur = u.clone();
    for _ in 0..r {
        cur = apply_shifted(&cur, mask, lambda);
    }
    cur
}

/// A kernel vector of `(L - λI)^r` known on a finite window.
#[derive(Clone, Debug)]
pub struct ExtendedVector<T: Real> {
    pub values: SparseVec<T>,
    /// Window on which `values` are defined, in canonical order.
    pub window: Vec<Point>,
    pub lambda: Cx<T>,
    pub order: usize,
    pub source: Vec<Point>,
    pub source_index: usize,
    pub target_index: usize,
}

impl<T: Real> ExtendedVector<T> {
    pub fn get(&self, k: &Point) -> Option<Cx<T>> {
        self.values.get(k).copied()
    }

    /// `max_{j ∈ window} |[Y (L - λI)^r]_j|` relative to `max(1, ‖Y‖_∞)`.
    ///
    /// Entries of `Y (L - λI)^r` on the window only involve `Y` on the
    /// window, so the truncation is exact there.
    pub fn window_residual(&self, mask: &Mask<T>) -> T {
        let w = apply_shifted_pow(&self.values, mask, self.lambda, self.order);
        let scale = self
            .values
            .values()
            .map(|z| cabs(*z))
            .fold(T::one(), |a, b| if b > a { b } else { a });
        self.window
            .iter()
            .map(|j| w.get(j).map(|z| cabs(*z)).unwrap_or_else(T::zero))
            .fold(T::zero(), |a, b| if b > a { b } else { a })
            / scale
    }
}

/// Coordinates of a sparse vector on `omega` (canonical order).
pub fn restrict_sparse<T: Real>(
    y: &SparseVec<T>,
    window: &[Point],
    omega: &[Point],
) -> Result<CVec<T>> {
    let inside: std::collections::BTreeSet<&Point> = window.iter().collect();
    let mut out = CVec::zeros(omega.len());
    for (i, p) in omega.iter().enumerate() {
        if !inside.contains(p) {
            return Err(Error::WindowTooSmall(format!(
                "{p:?} lies outside the window"
            )));
        }
        out[i] = y.get(p).copied().unwrap_or_else(|| cre(T::zero()));
    }
    Ok(out)
}

/// Restriction `P_Ω Y`.
pub fn restrict<T: Real>(y: &ExtendedVector<T>, omega: &[Point]) -> Result<CVec<T>> {
    restrict_sparse(&y.values, &y.window, omega)
}

/// Extends `v ∈ ker (T_{Ω_source} - λI)^r` ring by ring along the chain,
/// `y_j = -[(y|_{Ω_k})(L - λI)^r]_j / (-λ)^r` for `j ∈ Ω_{k+1} \ Ω_k`.
#[allow(clippy::too_many_arguments)]
pub fn extend_kernel_vector<T: Real>(
    mask: &Mask<T>,
    v: &CVec<T>,
    lambda: Cx<T>,
    r: usize,
    chain: &AdmissibleChain,
    source_index: usize,
    target_index: usize,
    tol: T,
) -> Result<ExtendedVector<T>> {
    if cabs(lambda) == T::zero() {
        return Err(Error::ZeroEigenvalue);
    }
    assert!(
        source_index <= target_index && target_index < chain.len(),
        "chain index out of range"
    );
    let source = chain.set(source_index).to_vec();
    assert_eq!(
        v.len(),
        source.len(),
        "vector length must match the source set"
    );
    let mut y: SparseVec<T> = source.iter().cloned().zip(v.iter().copied()).collect();

    let w = apply_shifted_pow(&y, mask, lambda, r);
    let scale = v
        .iter()
        .map(|z| cabs(*z))
        .fold(T::one(), |a, b| if b > a { b } else { a });
    let residual = source
        .iter()
        .map(|j| w.get(j).map(|z| cabs(*z)).unwrap_or_else(T::zero))
        .fold(T::zero(), |a, b| if b > a { b } else { a })
        / scale;
    if residual > tol {
        return Err(Error::NotInKernel {
            residual: to_f64(residual),
            tol: to_f64(tol),
        });
    }

    let denom = (-lambda).powi(r as i32);
    for k in source_index..target_index {
        let w = apply_shifted_pow(&y, mask, lambda, r);
        let ring: Vec<Point> = chain
            .set(k + 1)
            .iter()
            .filter(|p| !y.contains_key(*p))
            .cloned()
            .collect();
        for j in ring {
            let wj = w.get(&j).copied().unwrap_or_else(|| cre(T::zero()));
            y.insert(j, -wj / denom);
        }
    }
    Ok(ExtendedVector {
        values: y,
        window: chain.set(target_index).to_vec(),
        lambda,
        order: r,
        source,
        source_index,
        target_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admissible::admissible_chain;
    use crate::attractor::adapted_norm;
    use crate::scale_matrix::build_t;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d4() -> Mask<f64> {
        let s = 3f64.sqrt();
        Mask::from_1d(
            0,
            &[
                (1.0 + s) / 4.0,
                (3.0 + s) / 4.0,
                (3.0 - s) / 4.0,
                (1.0 - s) / 4.0,
            ],
            2,
        )
        .unwrap()
    }

    fn chain_of(mask: &Mask<f64>, extra: usize) -> AdmissibleChain {
        let n = adapted_norm::<f64>(&mask.dilation).unwrap();
        admissible_chain(&mask.support(), &mask.dilation, &mask.digits, &n, extra)
    }

    fn has(vals: &[Cx<f64>], z: f64, tol: f64) -> bool {
        vals.iter().any(|v| (v - cre(z)).norm() <= tol)
    }

    #[test]
    fn d4_spectrum() {
        let m = d4();
        let chain = chain_of(&m, 0);
        let t = build_t(&m, chain.omega_prime());
        assert_eq!(t.size(), 5);
        let j = eigen_jordan(&t, &JordanOptions::default()).unwrap();
        let ev = j.eigenvalues();
        assert!(has(&ev, 1.0, 1e-9));
        assert!(has(&ev, 0.5, 1e-9));
        assert!(has(&ev, (1.0 + 3f64.sqrt()) / 4.0, 1e-9));
        assert_eq!(j.clusters.iter().map(|c| c.multiplicity).sum::<usize>(), 5);
        assert!(j.chain_residual(&t.entries) < 1e-10);
        assert!(j.similarity_residual(&t.entries) < 1e-8);
    }

    #[test]
    fn one_third_mask_has_defective_block() {
        let m = Mask::<f64>::from_1d(0, &[1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0], 2).unwrap();
        let chain = chain_of(&m, 0);
        let t = build_t(&m, chain.omega_prime());
        let j = eigen_jordan(&t, &JordanOptions::default()).unwrap();
        let third = j.find(cre(1.0 / 3.0)).expect("1/3 present");
        // 1/3 has algebraic multiplicity 3 on this window: one block of size 2, one of size 1
        assert_eq!(j.clusters[third].chain_lengths(), vec![2, 1]);
        assert!(j.find(cre(1.0)).is_some());
        let nonzero: Vec<_> = j.clusters.iter().filter(|c| c.value.norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 2);
        assert!(j.chain_residual(&t.entries) < 1e-9);
    }

    #[test]
    fn haar_spectrum_and_extension() {
        let m = Mask::<f64>::from_1d(0, &[1.0, 1.0], 2).unwrap();
        let chain = chain_of(&m, 6);
        let t = build_t(&m, chain.omega_prime());
        let j = eigen_jordan(&t, &JordanOptions::default()).unwrap();
        let one = j.find(cre(1.0)).unwrap();
        assert_eq!(j.clusters[one].chain_lengths(), vec![1, 1]);
        assert_eq!(j.zero_multiplicity(), 1);

        // canonical order of {-1,0,1} is 0, -1, 1
        let v = CVec::from_vec(vec![cre(1.0), cre(1.0), cre(0.0)]);
        let y = extend_kernel_vector(&m, &v, cre(1.0), 1, &chain, chain.n0, chain.len() - 1, 1e-9)
            .unwrap();
        for (p, val) in &y.values {
            let expect = if p.0[0] <= 0 { 1.0 } else { 0.0 };
            assert_eq!(val.re, expect, "{p:?}");
        }
        assert!(y.values.len() > 5);
        let v = CVec::from_vec(vec![cre(0.0), cre(0.0), cre(1.0)]);
        let y = extend_kernel_vector(&m, &v, cre(1.0), 1, &chain, chain.n0, chain.len() - 1, 1e-9)
            .unwrap();
        for (p, val) in &y.values {
            let expect = if p.0[0] >= 1 { 1.0 } else { 0.0 };
            assert_eq!(val.re, expect, "{p:?}");
        }
        assert!(matches!(
            extend_kernel_vector(&m, &v, cre(0.0), 1, &chain, chain.n0, chain.len() - 1, 1e-9),
            Err(Error::ZeroEigenvalue)
        ));
        let bad = CVec::from_vec(vec![cre(1.0), cre(0.0), cre(0.0)]);
        assert!(matches!(
            extend_kernel_vector(
                &m,
                &bad,
                cre(1.0),
                1,
                &chain,
                chain.n0,
                chain.len() - 1,
                1e-9
            ),
            Err(Error::NotInKernel { .. })
        ));
    }

    #[test]
    fn extension_round_trip_and_window_residual() {
        let m = d4();
        let chain = chain_of(&m, 8);
        let t = build_t(&m, chain.omega_prime());
        let j = eigen_jordan(&t, &JordanOptions::default()).unwrap();
        for c in &j.clusters {
            if c.value.norm() == 0.0 {
                continue;
            }
            for ch in &c.chains {
                for (k, v) in ch.vectors.iter().enumerate() {
                    let y = extend_kernel_vector(
                        &m,
                        v,
                        c.value,
                        k + 1,
                        &chain,
                        chain.n0,
                        chain.len() - 1,
                        1e-9,
                    )
                    .unwrap();
                    assert_eq!(&restrict(&y, chain.omega_prime()).unwrap(), v);
                    assert!(y.window_residual(&m) < 1e-9);
                    // every intermediate restriction is a finite kernel vector
                    for i in chain.n0..chain.len() {
                        let ti = build_t(&m, chain.set(i));
                        let yi = restrict(&y, chain.set(i)).unwrap();
                        let ni = shifted_transpose(&ti.entries, c.value);
                        let mut w = yi.clone();
                        for _ in 0..=k {
                            w = &ni * w;
                        }
                        assert!(w.norm() < 1e-9 * (1.0 + yi.norm()));
                    }
                }
            }
        }
    }

    #[test]
    fn restriction_of_larger_kernel_vectors() {
        // random masks: kernel vectors of a bigger section restrict to kernel
        // vectors of a smaller one
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let c: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.2).collect();
            let m = Mask::<f64>::from_1d(0, &c, 2).unwrap();
            let chain = chain_of(&m, 3);
            let small = chain.omega_prime();
            let big_t = build_t(&m, chain.last());
            let j = match eigen_jordan(&big_t, &JordanOptions::default()) {
                Ok(j) => j,
                Err(_) => continue,
            };
            for cl in &j.clusters {
                for ch in &cl.chains {
                    for (k, v) in ch.vectors.iter().enumerate() {
                        let y: SparseVec<f64> =
                            big_t.index.iter().cloned().zip(v.iter().copied()).collect();
                        let yi = restrict_sparse(&y, &big_t.index, small).unwrap();
                        let ti = build_t(&m, small);
                        let n = shifted_transpose(&ti.entries, cl.value);
                        let mut w = yi.clone();
                        for _ in 0..=k {
                            w = &n * w;
                        }
                        assert!(w.norm() <= 1e-9 * (1.0 + yi.norm()), "{}", w.norm());
                    }
                }
            }
        }
        let zero: SparseVec<f64> = BTreeMap::new();
        let window: Vec<Point> = vec![Point(vec![0]), Point(vec![1])];
        assert_eq!(
            restrict_sparse(&zero, &window, &window).unwrap(),
            CVec::zeros(2)
        );
        assert!(matches!(
            restrict_sparse(&zero, &window, &[Point(vec![5])]),
            Err(Error::WindowTooSmall(_))
        ));
    }

    #[test]
    fn off_ring_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let c: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            let m = Mask::<f64>::from_1d(-1, &c, 2).unwrap();
            let chain = chain_of(&m, 4);
            let lambda = cre(0.7);
            for r in 1..=3 {
                for k in 0..chain.len() - 1 {
                    let inner = chain.set(k);
                    for j in chain.set(k + 1) {
                        // [(L - λI)^r]_{ij} for i outside Ω_k via unit row vectors
                        for i in -25i64..25 {
                            let ip = Point(vec![i]);
                            if inner.contains(&ip) {
                                continue;
                            }
                            let e: SparseVec<f64> = [(ip.clone(), cre(1.0))].into_iter().collect();
                            let row = apply_shifted_pow(&e, &m, lambda, r);
                            let got = row.get(j).copied().unwrap_or(cre(0.0));
                            let expect = if &ip == j {
                                (-lambda).powi(r as i32)
                            } else {
                                cre(0.0)
                            };
                            assert!((got - expect).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ill_conditioned_is_reported() {
        // a coupling right at the rank threshold: block or no block?
        let t: DMatrix<f64> = DMatrix::from_row_slice(2, 2, &[0.5, 2e-9, 0.0, 0.5]);
        let mut st = build_t(
            &Mask::<f64>::from_1d(0, &[1.0, 1.0], 2).unwrap(),
            &[Point(vec![0]), Point(vec![1])],
        );
        st.entries = t.map(cre);
        let r = eigen_jordan(&st, &JordanOptions::default());
        assert!(matches!(r, Err(Error::IllConditioned { .. })), "{r:?}");
    }

    #[test]
    fn scale_consistency() {
        let m = d4();
        let chain = chain_of(&m, 3);
        let a = eigen_jordan(&build_t(&m, chain.omega_prime()), &JordanOptions::default()).unwrap();
        let b = eigen_jordan(&build_t(&m, chain.last()), &JordanOptions::default()).unwrap();
        for z in a.eigenvalues() {
            if z.norm() > 0.0 {
                assert!(b.find(z).is_some(), "{z}");
            }
        }
    }
}
