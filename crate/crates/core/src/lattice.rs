//! Lattice points, dilation matrices, digit sets and A-adic addresses.
//!
//! Every lattice point is carried as its exact integer coordinate vector in
//! the generator basis `G`; the dilation is carried as the integer matrix
//! `M = G^{-1} A G` acting on those coordinates. Real embeddings are produced
//! on demand.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

/// A lattice point in integer coordinates.
///
/// `Ord` is the canonical point order: sup-norm first, then lexicographic on
/// the coordinates. `BTreeSet<Point>` therefore iterates in canonical order.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<i64>);

impl Point {
    pub fn new(coords: Vec<i64>) -> Self {
        Point(coords)
    }

    pub fn zero(dim: usize) -> Self {
        Point(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn sup_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Point {
        Point(self.0.iter().map(|a| -a).collect())
    }

    /// Coordinates converted to `T`.
    pub fn to_real<T: Real>(&self) -> Vec<T> {
        self.0.iter().map(|&c| real::<T>(c as f64)).collect()
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sup_norm()
            .cmp(&other.sup_norm())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i64>> for Point {
    fn from(v: Vec<i64>) -> Self {
        Point(v)
    }
}

/// Orders a finite set of points canonically (sup-norm, then lexicographic).
pub fn order_points<'a, I>(points: I) -> Vec<Point>
where
    I: IntoIterator<Item = &'a Point>,
{
    let set: BTreeSet<Point> = points.into_iter().cloned().collect();
    set.into_iter().collect()
}

/// Square integer matrix acting on lattice coordinates.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct IntMatrix {
    dim: usize,
    /// Row-major entries.
    entries: Vec<i64>,
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidDilation(format!(
                "matrix must be square and non-empty, got {} rows",
                dim
            )));
        }
        Ok(IntMatrix {
            dim,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        IntMatrix { dim, entries }
    }

    pub fn scalar(dim: usize, s: i64) -> Self {
        let mut m = Self::identity(dim);
        for e in m.entries.iter_mut() {
            *e *= s;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn apply(&self, p: &Point) -> Point {
        let d = self.dim;
        Point(
            (0..d)
                .map(|i| (0..d).map(|j| self.get(i, j) * p.0[j]).sum())
                .collect(),
        )
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.dim;
        let mut entries = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                entries[i * d + j] = (0..d).map(|k| self.get(i, k) * other.get(k, j)).sum();
            }
        }
        IntMatrix { dim: d, entries }
    }

    pub fn pow(&self, r: usize) -> IntMatrix {
        let mut out = IntMatrix::identity(self.dim);
        for _ in 0..r {
            out = out.mul(self);
        }
        out
    }

    /// Exact determinant (Bareiss fraction-free elimination).
    pub fn det(&self) -> i64 {
        let d = self.dim;
        let mut a: Vec<i128> = self.entries.iter().map(|&x| x as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..d {
            if a[k * d + k] == 0 {
                match (k + 1..d).find(|&r| a[r * d + k] != 0) {
                    Some(r) => {
                        for c in 0..d {
                            a.swap(k * d + c, r * d + c);
                        }
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..d {
                for j in k + 1..d {
                    a[i * d + j] =
                        (a[i * d + j] * a[k * d + k] - a[i * d + k] * a[k * d + j]) / prev;
                }
            }
            prev = a[k * d + k];
        }
        (sign * a[d * d - 1]) as i64
    }

    /// Adjugate matrix, so that `M * adj(M) = det(M) I`.
    pub fn adjugate(&self) -> IntMatrix {
        let d = self.dim;
        if d == 1 {
            return IntMatrix::identity(1);
        }
        let mut entries = vec![0; d * d];
        for i in 0..d {
            for j in 0..d {
                let minor: Vec<Vec<i64>> = (0..d)
                    .filter(|&r| r != j)
                    .map(|r| (0..d).filter(|&c| c != i).map(|c| self.get(r, c)).collect())
                    .collect();
                let m = IntMatrix::from_rows(&minor).expect("square minor").det();
                entries[i * d + j] = if (i + j) % 2 == 0 { m } else { -m };
            }
        }
        IntMatrix { dim: d, entries }
    }

    pub fn to_real<T: Real>(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| real::<T>(self.get(i, j) as f64))
    }
}

/// The lattice `Γ = G Z^d` with generator columns `G`.
#[derive(Clone, Debug)]
pub struct Lattice<T: Real> {
    generators: DMatrix<T>,
}

impl<T: Real> Lattice<T> {
    pub fn new(generators: DMatrix<T>) -> Result<Self> {
        if !generators.is_square() || generators.nrows() == 0 {
            return Err(Error::InvalidLattice(
                "generator matrix must be square".into(),
            ));
        }
        let det = generators.clone().determinant();
        if det.abs() <= real::<T>(1e-12) {
            return Err(Error::InvalidLattice(format!(
                "generators are singular (det {det})"
            )));
        }
        Ok(Lattice { generators })
    }

    pub fn standard(dim: usize) -> Self {
        Lattice {
            generators: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.generators.nrows()
    }

    pub fn generators(&self) -> &DMatrix<T> {
        &self.generators
    }

    /// Embeds real lattice coordinates `u` as the point `G u` of `R^d`.
    pub fn embed(&self, u: &[T]) -> Vec<T> {
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).fold(T::zero(), |acc, j| acc + self.generators[(i, j)] * u[j]))
            .collect()
    }

    /// Integer coordinates of an embedded point, or `NotALatticePoint`.
    pub fn coordinates_of(&self, x: &[T]) -> Result<Point> {
        let inv = self
            .generators
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidLattice("singular generators".into()))?;
        let d = self.dim();
        let mut out = Vec::with_capacity(d);
        for i in 0..d {
            let u = (0..d).fold(T::zero(), |acc, j| acc + inv[(i, j)] * x[j]);
            let r = u.round();
            if (u - r).abs() > real::<T>(1e-9) * (T::one() + u.abs()) {
                return Err(Error::NotALatticePoint(
                    x.iter().map(|v| crate::scalar::to_f64(*v)).collect(),
                ));
            }
            out.push(crate::scalar::to_f64(r) as i64);
        }
        Ok(Point(out))
    }
}

/// Dilation in lattice coordinates: an integer matrix `M` with `|det M| = m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dilation {
    matrix: IntMatrix,
    adjugate: IntMatrix,
    det: i64,
}

impl Dilation {
    /// Builds a dilation from its integer matrix in lattice coordinates.
    ///
    /// Expansiveness is not checked here; see [`crate::attractor::adapted_norm`].
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        let det = matrix.det();
        if det.abs() < 2 {
            return Err(Error::InvalidDilation(format!(
                "|det| must be at least 2, got {det}"
            )));
        }
        let adjugate = matrix.adjugate();
        Ok(Dilation {
            matrix,
            adjugate,
            det,
        })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(IntMatrix::from_rows(rows)?)
    }

    /// Conjugates a real dilation `A` into lattice coordinates, requiring
    /// `G^{-1} A G` to be integral within `1e-9`.
    pub fn from_real<T: Real>(a: &DMatrix<T>, lattice: &Lattice<T>) -> Result<Self> {
        let g = lattice.generators();
        if a.shape() != g.shape() {
            return Err(Error::InvalidDilation(
                "dimension mismatch with lattice".into(),
            ));
        }
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidLattice("singular generators".into()))?;
        let conj = &ginv * a * g;
        let d = a.nrows();
        let mut rows = vec![vec![0i64; d]; d];
        for i in 0..d {
            for j in 0..d {
                let v = conj[(i, j)];
                let r = v.round();
                if (v - r).abs() > real::<T>(1e-9) {
                    return Err(Error::InvalidDilation(format!(
                        "A does not map the lattice into itself: entry ({i},{j}) of G^-1 A G is {v}"
                    )));
                }
                rows[i][j] = crate::scalar::to_f64(r) as i64;
            }
        }
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    /// `m = |det M|`, the number of digits.
    pub fn m(&self) -> usize {
        self.det.unsigned_abs() as usize
    }

    pub fn apply(&self, p: &Point) -> Point {
        self.matrix.apply(p)
    }

    /// `M^r p`.
    pub fn apply_pow(&self, p: &Point, r: usize) -> Point {
        let mut q = p.clone();
        for _ in 0..r {
            q = self.matrix.apply(&q);
        }
        q
    }

    /// `M^{-1} p` when it is a lattice point.
    pub fn try_div(&self, p: &Point) -> Option<Point> {
        let v = self.adjugate.apply(p);
        let mut out = Vec::with_capacity(v.0.len());
        for c in v.0 {
            if c % self.det != 0 {
                return None;
            }
            out.push(c / self.det);
        }
        Some(Point(out))
    }

    /// Real matrix `M` in lattice coordinates.
    pub fn to_real<T: Real>(&self) -> DMatrix<T> {
        self.matrix.to_real()
    }

    /// Real matrix `M^{-1}` in lattice coordinates.
    pub fn inverse_real<T: Real>(&self) -> DMatrix<T> {
        let det = real::<T>(self.det as f64);
        self.adjugate.to_real::<T>().map(|x| x / det)
    }

    /// `M^{-r}` applied to an integer vector, in real lattice coordinates.
    pub fn contract<T: Real>(&self, p: &Point, r: usize) -> Vec<T> {
        let inv = self.inverse_real::<T>();
        let mut v: Vec<T> = p.to_real();
        let d = self.dim();
        for _ in 0..r {
            v = (0..d)
                .map(|i| (0..d).fold(T::zero(), |acc, j| acc + inv[(i, j)] * v[j]))
                .collect();
        }
        v
    }
}

/// Which coset convention a decomposition uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    /// `k = M q + d`.
    Plus,
    /// `k = M q - d`.
    Minus,
}

/// A full set of coset representatives of `Γ / MΓ`, containing 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitSet {
    digits: Vec<Point>,
}

impl DigitSet {
    pub fn new(digits: Vec<Point>, dilation: &Dilation) -> Result<Self> {
        let d = dilation.dim();
        if digits.len() != dilation.m() {
            return Err(Error::InvalidDigitSet(format!(
                "expected {} digits (|det A|), got {}",
                dilation.m(),
                digits.len()
            )));
        }
        if digits.iter().any(|p| p.dim() != d) {
            return Err(Error::InvalidDigitSet("digit dimension mismatch".into()));
        }
        if !digits.iter().any(Point::is_zero) {
            return Err(Error::InvalidDigitSet("0 must be a digit".into()));
        }
        for (i, a) in digits.iter().enumerate() {
            for b in &digits[i + 1..] {
                if dilation.try_div(&a.sub(b)).is_some() {
                    return Err(Error::InvalidDigitSet(format!(
                        "digits {a:?} and {b:?} are congruent modulo A"
                    )));
                }
            }
        }
        Ok(DigitSet { digits })
    }

    /// The standard digit set `{0, 1, ..., m-1}` for a one-dimensional dilation.
    pub fn standard_1d(dilation: &Dilation) -> Result<Self> {
        Self::new(
            (0..dilation.m() as i64).map(|k| Point(vec![k])).collect(),
            dilation,
        )
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[Point] {
        &self.digits
    }

    pub fn get(&self, i: usize) -> &Point {
        &self.digits[i]
    }

    pub fn zero_index(&self) -> usize {
        self.digits
            .iter()
            .position(Point::is_zero)
            .expect("0 is a digit")
    }
}

/// Splits `k` as `M q + d_i` (plus) or `M q - d_i` (minus).
pub fn coset_decompose(
    k: &Point,
    dilation: &Dilation,
    digits: &DigitSet,
    sign: Sign,
) -> Result<(usize, Point)> {
    let mut found = None;
    for (i, d) in digits.digits().iter().enumerate() {
        let shifted = match sign {
            Sign::Plus => k.sub(d),
            Sign::Minus => k.add(d),
        };
        if let Some(q) = dilation.try_div(&shifted) {
            if found.is_some() {
                return Err(Error::InvalidDigitSet(format!(
                    "{k:?} lies in more than one coset"
                )));
            }
            found = Some((i, q));
        }
    }
    found.ok_or_else(|| Error::InvalidDigitSet(format!("{k:?} lies in no coset")))
}

/// Peels `r` digits off `eta`: returns `(d_1..d_r, q)` with
/// `eta = d_r + M d_{r-1} + ... + M^{r-1} d_1 + M^r q`.
pub fn address(
    eta: &Point,
    r: usize,
    dilation: &Dilation,
    digits: &DigitSet,
) -> Result<(Vec<usize>, Point)> {
    let mut rev = Vec::with_capacity(r);
    let mut cur = eta.clone();
    for _ in 0..r {
        let (i, q) = coset_decompose(&cur, dilation, digits, Sign::Plus)?;
        rev.push(i);
        cur = q;
    }
    rev.reverse();
    Ok((rev, cur))
}

/// Depth-`r` digit expansion `γ = d_r + M d_{r-1} + ... + M^{r-1} d_1`.
///
/// Fails with `NotInTile` when the final quotient is not zero.
pub fn digit_expansion(
    gamma: &Point,
    r: usize,
    dilation: &Dilation,
    digits: &DigitSet,
) -> Result<Vec<usize>> {
    let (ds, q) = address(gamma, r, dilation, digits)?;
    if !q.is_zero() {
        return Err(Error::NotInTile {
            point: gamma.0.clone(),
            depth: r,
            quotient: q.0,
        });
    }
    Ok(ds)
}

/// Horner re-evaluation of a digit string: `Σ_j M^{r-j} d_j`.
pub fn compose_digits(expansion: &[usize], dilation: &Dilation, digits: &DigitSet) -> Point {
    let mut acc = Point::zero(dilation.dim());
    for &i in expansion {
        acc = dilation.apply(&acc).add(digits.get(i));
    }
    acc
}

/// All points of `G_r = D + M D + ... + M^{r-1} D` (a complete residue
/// system modulo `M^r`), in canonical order.
pub fn depth_digits(r: usize, dilation: &Dilation, digits: &DigitSet) -> Vec<Point> {
    let mut level = vec![Point::zero(dilation.dim())];
    for _ in 0..r {
        let mut next = Vec::with_capacity(level.len() * digits.len());
        for g in &level {
            let mg = dilation.apply(g);
            for d in digits.digits() {
                next.push(mg.add(d));
            }
        }
        level = next;
    }
    order_points(level.iter())
}
