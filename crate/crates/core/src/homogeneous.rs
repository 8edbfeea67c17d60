//! Homogeneous local basis `h = v Φ` attached to Jordan chains of `T`,
//! checks of `(D_M - λI)^r h = 0` with `D_M h(x) = h(M^{-1}x)`, local
//! dimension and reconstruction of shift-invariant functions.

use crate::analysis::Analysis;
use crate::cascade::{GridFunction, PhiGrid};
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::linalg::singular_values;
use crate::scalar::{cabs, cre, real, to_f64, CMat, CVec, Cx, Real};
use crate::spectral::{extend_kernel_vector, ExtendedVector, JordanDecomposition, RowLabel};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Tolerance for the kernel precondition when extending basis rows.
const KERNEL_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct HomogeneousElement<T: Real> {
    pub lambda: Cx<T>,
    /// Depth in the Jordan chain; `(D_M - λI)^order h = 0`.
    pub order: usize,
    /// Row of the Jordan basis.
    pub row: usize,
    pub label: RowLabel,
    /// Coefficients over `Ω_{Λ'}` (the scale matrix index).
    pub vector: CVec<T>,
    /// Kernel vector of `(L - λI)^order` on the widest chain set; absent for
    /// `λ = 0`.
    pub extension: Option<ExtendedVector<T>>,
    /// `h` at the grid points of `Q`, in grid address order.
    pub on_tile: Vec<Cx<T>>,
}

fn dot<T: Real>(v: &CVec<T>, w: &CVec<T>) -> Cx<T> {
    v.iter()
        .zip(w.iter())
        .fold(cre(T::zero()), |a, (x, y)| a + *x * *y)
}

fn check_grid_index<T: Real>(a: &Analysis<T>) {
    assert_eq!(
        a.grid.omega, a.t.index,
        "grid and scale matrix must share the index set"
    );
}

/// One element per row of the Jordan basis, grouped by eigenvalue.
pub fn basis_from_jordan<T: Real>(a: &Analysis<T>) -> Result<Vec<HomogeneousElement<T>>> {
    check_grid_index(a);
    let j = &a.jordan;
    (0..j.rows.len())
        .into_par_iter()
        .map(|row| {
            let label = j.rows[row];
            let lambda = j.clusters[label.cluster].value;
            let vector = j.row(row);
            let extension = if cabs(lambda) == T::zero() {
                None
            } else {
                Some(extend_kernel_vector(
                    &a.mask,
                    &vector,
                    lambda,
                    label.depth,
                    &a.chain,
                    a.source_index(),
                    a.target_index(),
                    real::<T>(KERNEL_TOL),
                )?)
            };
            let on_tile = a.grid.values.iter().map(|phi| dot(&vector, phi)).collect();
            Ok(HomogeneousElement {
                lambda,
                order: label.depth,
                row,
                label,
                vector,
                extension,
                on_tile,
            })
        })
        .collect()
}

impl<T: Real> HomogeneousElement<T> {
    /// `h(M^{-r} η)` at grid resolution `r`. Off the tile this is
    /// `Σ_ω y_{ω-q} φ(x_0 + ω)` for `η = γ + M^r q`, `x_0 = M^{-r} γ`.
    pub fn eval(&self, a: &Analysis<T>, eta: &Point) -> Result<Cx<T>> {
        let (i, q) = a.grid.split(eta, &a.mask);
        if q.is_zero() {
            return Ok(self.on_tile[i]);
        }
        let ext = self.extension.as_ref().ok_or(Error::ZeroEigenvalue)?;
        let phi = &a.grid.values[i];
        let mut acc = cre(T::zero());
        for (j, w) in a.grid.omega.iter().enumerate() {
            let k = w.sub(&q);
            match ext.get(&k) {
                Some(y) => acc += y * phi[j],
                None => {
                    return Err(Error::WindowTooSmall(format!(
                        "coefficient {k:?} lies outside the extension window"
                    )))
                }
            }
        }
        Ok(acc)
    }

    /// Grid values over `∪_{q ∈ shifts} (Q + q)`, skipping points outside
    /// the extension window.
    pub fn grid_function(&self, a: &Analysis<T>, shifts: &[Point]) -> GridFunction<T> {
        let mr = a.mask.dilation.matrix().pow(a.grid.resolution);
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut boundary = Vec::new();
        for q in shifts {
            let off = mr.apply(q);
            for (i, g) in a.grid.addresses.iter().enumerate() {
                let eta = g.add(&off);
                if let Ok(v) = self.eval(a, &eta) {
                    points.push(eta);
                    values.push(v);
                    boundary.push(a.grid.boundary[i]);
                }
            }
        }
        GridFunction {
            resolution: a.grid.resolution,
            points,
            values,
            boundary,
        }
    }
}

/// Lattice shifts `q` for which `h` is evaluable on all of `Q + q`: the
/// extension window must contain `Ω_{Λ'} - q`.
pub fn evaluable_shifts<T: Real>(a: &Analysis<T>) -> Vec<Point> {
    let window: BTreeSet<&Point> = a.chain.last().iter().collect();
    a.chain
        .last()
        .iter()
        .filter(|q| a.grid.omega.iter().all(|w| window.contains(&w.sub(q))))
        .cloned()
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassCheck {
    /// `residuals[i]` is the relative residual at order `i + 1`.
    pub residuals: Vec<f64>,
    /// Smallest order whose residual is within tolerance.
    pub minimal_order: Option<usize>,
    pub points: usize,
}

impl ClassCheck {
    pub fn at(&self, order: usize) -> f64 {
        self.residuals[order - 1]
    }
}

/// Test points `ξ` at grid resolution `R` with `M^k ξ` (`k ≤ max_order`)
/// inside `∪_q (Q + q)` for evaluable shifts `q`.
pub fn class_test_points<T: Real>(a: &Analysis<T>, max_order: usize) -> Vec<Point> {
    let big_r = a.grid.resolution;
    if max_order > big_r {
        return Vec::new();
    }
    let dil = &a.mask.dilation;
    let coarse = crate::lattice::depth_digits(big_r - max_order, dil, &a.mask.digits);
    let shift = dil.matrix().pow(big_r - max_order);
    let mut out = Vec::with_capacity(coarse.len());
    for q in evaluable_shifts(a) {
        let off = shift.apply(&q);
        for g in &coarse {
            out.push(g.add(&off));
        }
    }
    out
}

/// Relative residuals of `Σ_{k=0}^{r} C(r,k) (-λ)^k h(M^k y)` for
/// `r = 1..=max_order` over grid points `y = M^{-R} ξ`, divided by
/// `1 + max |h|`. Points whose orbit touches a flagged or unevaluable grid
/// point are skipped.
pub fn verify_class<T: Real>(
    el: &HomogeneousElement<T>,
    a: &Analysis<T>,
    max_order: usize,
    test_points: &[Point],
    tol: f64,
) -> Result<ClassCheck> {
    if cabs(el.lambda) == T::zero() {
        return Err(Error::ZeroEigenvalue);
    }
    let dil = &a.mask.dilation;
    let orbits: Vec<Vec<Cx<T>>> = test_points
        .par_iter()
        .filter_map(|xi| {
            let mut vals = Vec::with_capacity(max_order + 1);
            let mut p = xi.clone();
            for _ in 0..=max_order {
                if a.grid.boundary_at(&p, &a.mask) {
                    return None;
                }
                vals.push(el.eval(a, &p).ok()?);
                p = dil.apply(&p);
            }
            Some(vals)
        })
        .collect();
    if orbits.is_empty() {
        return Err(Error::NoTestPoints);
    }
    let hmax = orbits
        .iter()
        .flat_map(|o| o.iter().map(|z| to_f64(cabs(*z))))
        .fold(0.0, f64::max);
    let neg = -el.lambda;
    let mut residuals = Vec::with_capacity(max_order);
    for r in 1..=max_order {
        let mut worst = 0.0f64;
        for o in &orbits {
            let mut acc = cre(T::zero());
            for (k, h) in o.iter().take(r + 1).enumerate() {
                acc += cre(real::<T>(binomial(r, k))) * neg.powi(k as i32) * *h;
            }
            worst = worst.max(to_f64(cabs(acc)));
        }
        residuals.push(worst / (1.0 + hmax));
    }
    let minimal_order = residuals.iter().position(|&x| x <= tol).map(|i| i + 1);
    Ok(ClassCheck {
        residuals,
        minimal_order,
        points: orbits.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Toward the origin: `h(x) = -Σ_{k=1}^r C(r,k) (-λ)^k h(M^k x)`.
    Inward,
    /// Away from the origin; divides by `(-λ)^r`.
    Outward,
}

/// Index `j` of the shell `M^j C`, `C = MV \ V`, `V` the adapted-norm ball
/// of radius `rho`, containing the nonzero point `x` (lattice coordinates).
pub fn shell_index<T: Real>(a: &Analysis<T>, x: &[T], rho: T) -> i64 {
    let inv = a.mask.dilation.inverse_real::<T>();
    let m = a.mask.dilation.to_real::<T>();
    let apply = |mat: &nalgebra::DMatrix<T>, v: &[T]| -> Vec<T> {
        (mat * nalgebra::DVector::from_column_slice(v))
            .as_slice()
            .to_vec()
    };
    // find j with ‖M^{-j} x‖ > rho >= ‖M^{-j-1} x‖
    let mut j = 0i64;
    let mut cur = x.to_vec();
    if a.norm.norm(&cur) > rho {
        loop {
            let next = apply(&inv, &cur);
            if a.norm.norm(&next) <= rho {
                return j;
            }
            cur = next;
            j += 1;
        }
    }
    loop {
        cur = apply(&m, &cur);
        j -= 1;
        if a.norm.norm(&cur) > rho {
            return j;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnnulusCheck {
    pub target_shell: i64,
    pub points: usize,
    /// Largest `|propagated - direct|` relative to `1 + max |h|`.
    pub max_discrepancy: f64,
    /// `h(0)`, reported when `λ ≠ 1` (the class forces it to vanish).
    pub h_at_zero: Option<[f64; 2]>,
}

/// Propagates `h` from the shells `a_shell..=a_shell+r` one shell inward
/// (to `a_shell - 1`) or outward (to `a_shell + r + 1`) with the class
/// recursion, and compares with direct evaluation.
pub fn annulus_propagate<T: Real>(
    el: &HomogeneousElement<T>,
    a: &Analysis<T>,
    rho: T,
    a_shell: i64,
    direction: Direction,
) -> Result<AnnulusCheck> {
    let lambda = el.lambda;
    if direction == Direction::Outward && cabs(lambda) == T::zero() {
        return Err(Error::ZeroEigenvalue);
    }
    let r = el.order;
    let dil = &a.mask.dilation;
    let big_r = a.grid.resolution;
    let target = match direction {
        Direction::Inward => a_shell - 1,
        Direction::Outward => a_shell + r as i64 + 1,
    };
    let mr = dil.matrix().pow(big_r);
    let mut candidates = Vec::new();
    for q in evaluable_shifts(a) {
        let off = mr.apply(&q);
        for g in &a.grid.addresses {
            candidates.push(g.add(&off));
        }
    }
    let neg = -lambda;
    let results: Vec<(T, T)> = candidates
        .par_iter()
        .filter_map(|eta| {
            if eta.is_zero() {
                return None;
            }
            let x = dil.contract::<T>(eta, big_r);
            if shell_index(a, &x, rho) != target {
                return None;
            }
            if a.grid.boundary_at(eta, &a.mask) {
                return None;
            }
            let direct = el.eval(a, eta).ok()?;
            let mut acc = cre(T::zero());
            let mut hmax = cabs(direct);
            match direction {
                Direction::Inward => {
                    let mut p = eta.clone();
                    for k in 1..=r {
                        p = dil.apply(&p);
                        if a.grid.boundary_at(&p, &a.mask) {
                            return None;
                        }
                        let h = el.eval(a, &p).ok()?;
                        hmax = hmax.max(cabs(h));
                        acc -= cre(real::<T>(binomial(r, k))) * neg.powi(k as i32) * h;
                    }
                }
                Direction::Outward => {
                    // M^{-j} η must stay on the grid for j ≤ r
                    let mut p = eta.clone();
                    let mut inner = Vec::with_capacity(r);
                    for _ in 0..r {
                        p = dil.try_div(&p)?;
                        inner.push(p.clone());
                    }
                    for (idx, pj) in inner.iter().enumerate() {
                        let j = idx + 1;
                        if a.grid.boundary_at(pj, &a.mask) {
                            return None;
                        }
                        let h = el.eval(a, pj).ok()?;
                        hmax = hmax.max(cabs(h));
                        acc -= cre(real::<T>(binomial(r, r - j))) * neg.powi((r - j) as i32) * h;
                    }
                    acc /= neg.powi(r as i32);
                }
            }
            Some((cabs(acc - direct), hmax))
        })
        .collect();
    let hmax = results.iter().map(|x| to_f64(x.1)).fold(0.0, f64::max);
    let worst = results.iter().map(|x| to_f64(x.0)).fold(0.0, f64::max);
    let h_at_zero = if cabs(lambda - cre(T::one())) > a.jordan.cluster_tol {
        let z = el.on_tile[a
            .grid
            .position(&Point::zero(dil.dim()))
            .expect("0 is a grid address")];
        Some([to_f64(z.re), to_f64(z.im)])
    } else {
        None
    };
    Ok(AnnulusCheck {
        target_shell: target,
        points: results.len(),
        max_discrepancy: worst / (1.0 + hmax),
        h_at_zero,
    })
}

/// Unflagged grid rows × translates `φ(· + ω)`.
pub fn translate_columns<T: Real>(grid: &PhiGrid<T>) -> CMat<T> {
    let rows: Vec<usize> = (0..grid.len()).filter(|&i| !grid.boundary[i]).collect();
    CMat::from_fn(rows.len(), grid.omega.len(), |r, c| grid.values[rows[r]][c])
}

/// Unflagged grid rows × basis elements.
pub fn basis_columns<T: Real>(grid: &PhiGrid<T>, elements: &[HomogeneousElement<T>]) -> CMat<T> {
    let rows: Vec<usize> = (0..grid.len()).filter(|&i| !grid.boundary[i]).collect();
    CMat::from_fn(rows.len(), elements.len(), |r, c| {
        elements[c].on_tile[rows[r]]
    })
}

/// Numerical rank with threshold `tol · σ_max`.
pub fn local_dimension<T: Real>(columns: &CMat<T>, tol: f64) -> usize {
    let s = singular_values(columns);
    let Some(&top) = s.first() else { return 0 };
    if top == T::zero() {
        return 0;
    }
    s.iter().filter(|&&x| x > real::<T>(tol) * top).count()
}

/// `m_n - r_0`: size of `T` minus the multiplicity of the zero eigenvalue.
pub fn spectral_dimension<T: Real>(j: &JordanDecomposition<T>) -> usize {
    j.size() - j.zero_multiplicity()
}

/// `sup |Σ_k v_k φ(x + k)|` over unflagged grid points of `Q`.
pub fn zero_eigen_check<T: Real>(v: &CVec<T>, grid: &PhiGrid<T>) -> T {
    (0..grid.len())
        .filter(|&i| !grid.boundary[i])
        .map(|i| cabs(dot(v, &grid.values[i])))
        .fold(T::zero(), |a, b| if b > a { b } else { a })
}

/// `β_t = ᾱ_t B^{-1}` with `ᾱ_t = (α_{ω+t})_{ω ∈ Ω}`, for every shift `t`
/// touched by the support of `α`.
///
/// With these, `Σ_k α_k φ(x_0 - t + k) = β_t · (B Φ(x_0))` for `x_0 ∈ Q`.
pub fn reconstruct_coeffs<T: Real>(
    alpha: &BTreeMap<Point, Cx<T>>,
    jordan: &JordanDecomposition<T>,
) -> Result<BTreeMap<Point, CVec<T>>> {
    if jordan.condition > real::<T>(1e12) {
        return Err(Error::SingularBasis(to_f64(jordan.condition)));
    }
    let inv = jordan
        .basis
        .clone()
        .try_inverse()
        .ok_or(Error::SingularBasis(f64::INFINITY))?;
    let inv_t = inv.transpose();
    let omega = &jordan.index;
    let mut shifts = BTreeSet::new();
    for k in alpha.keys() {
        for w in omega {
            shifts.insert(k.sub(w));
        }
    }
    let mut out = BTreeMap::new();
    for t in shifts {
        let bar = CVec::from_iterator(
            omega.len(),
            omega.iter().map(|w| {
                alpha
                    .get(&w.add(&t))
                    .copied()
                    .unwrap_or_else(|| cre(T::zero()))
            }),
        );
        out.insert(t, &inv_t * bar);
    }
    Ok(out)
}

/// Largest difference between `Σ_k α_k φ(x + k)` and the reassembled
/// `β_t · h(x_0)` over all grid points `x = x_0 - t`, relative to
/// `1 + max |f|`.
pub fn reconstruction_residual<T: Real>(
    alpha: &BTreeMap<Point, Cx<T>>,
    beta: &BTreeMap<Point, CVec<T>>,
    elements: &[HomogeneousElement<T>],
    grid: &PhiGrid<T>,
) -> T {
    let omega = &grid.omega;
    let mut worst = T::zero();
    let mut fmax = T::zero();
    for (t, b) in beta {
        let bar: Vec<Cx<T>> = omega
            .iter()
            .map(|w| {
                alpha
                    .get(&w.add(t))
                    .copied()
                    .unwrap_or_else(|| cre(T::zero()))
            })
            .collect();
        for i in 0..grid.len() {
            let direct = bar
                .iter()
                .zip(grid.values[i].iter())
                .fold(cre(T::zero()), |acc, (x, y)| acc + *x * *y);
            let rebuilt = elements
                .iter()
                .fold(cre(T::zero()), |acc, e| acc + b[e.row] * e.on_tile[i]);
            let d = cabs(direct - rebuilt);
            if d > worst {
                worst = d;
            }
            if cabs(direct) > fmax {
                fmax = cabs(direct);
            }
        }
    }
    worst / (T::one() + fmax)
}

/// JSON view of a basis element.
#[derive(Clone, Debug, Serialize)]
pub struct ElementReport {
    pub eigenvalue: [f64; 2],
    pub order: usize,
    pub vector: Vec<[f64; 2]>,
    pub class: Option<ClassCheck>,
    pub zero_check: Option<f64>,
}

impl<T: Real> HomogeneousElement<T> {
    pub fn report(&self, class: Option<ClassCheck>, zero_check: Option<f64>) -> ElementReport {
        ElementReport {
            eigenvalue: [to_f64(self.lambda.re), to_f64(self.lambda.im)],
            order: self.order,
            vector: self
                .vector
                .iter()
                .map(|z| [to_f64(z.re), to_f64(z.im)])
                .collect(),
            class,
            zero_check,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalysisOptions;
    use crate::fixtures::{d4, haar, one_third};
    use crate::linalg::lstsq;
    use crate::scale_matrix::Mask;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn analyze(mask: Mask<f64>, resolution: usize) -> Analysis<f64> {
        Analysis::new(
            mask,
            AnalysisOptions {
                resolution,
                n_extra: 6,
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn x_of(a: &Analysis<f64>, i: usize) -> f64 {
        a.grid.addresses[i].0[0] as f64 / 2f64.powi(a.grid.resolution as i32)
    }

    #[test]
    fn haar_basis() {
        let a = analyze(haar(), 4);
        let els = basis_from_jordan(&a).unwrap();
        assert_eq!(els.len(), 3);
        let ones: Vec<&HomogeneousElement<f64>> = els
            .iter()
            .filter(|e| (e.lambda - cre(1.0)).norm() < 1e-9)
            .collect();
        assert_eq!(ones.len(), 2);
        // one element is the Heaviside function (1 on Q), the other vanishes on Q
        let mut kinds: Vec<f64> = ones.iter().map(|e| e.on_tile[0].re).collect();
        kinds.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(kinds, vec![0.0, 1.0]);
        let heaviside = ones.iter().find(|e| e.on_tile[0].re == 1.0).unwrap();
        assert!(heaviside.on_tile.iter().all(|z| z.re == 1.0));
        // extension: 1 on x ≥ 0 and 0 on x < 0
        for eta in -40i64..40 {
            let v = heaviside.eval(&a, &Point(vec![eta])).unwrap();
            assert_eq!(v.re, if eta >= 0 { 1.0 } else { 0.0 }, "{eta}");
        }
        // the λ = 0 element vanishes on Q
        let zero = els.iter().find(|e| e.lambda.norm() == 0.0).unwrap();
        assert!(zero_eigen_check(&zero.vector, &a.grid) < 1e-15);
        assert!(zero.extension.is_none());
        assert_eq!(local_dimension(&translate_columns(&a.grid), 1e-6), 1);
        assert_eq!(local_dimension(&basis_columns(&a.grid, &els), 1e-6), 1);
        assert_eq!(spectral_dimension(&a.jordan), 2);
    }

    #[test]
    fn d4_basis_shapes() {
        let a = analyze(d4(), 8);
        let els = basis_from_jordan(&a).unwrap();
        let one = els
            .iter()
            .find(|e| (e.lambda - cre(1.0)).norm() < 1e-9)
            .unwrap();
        let half = els
            .iter()
            .find(|e| (e.lambda - cre(0.5)).norm() < 1e-9)
            .unwrap();
        let c0 = els
            .iter()
            .find(|e| (e.lambda - cre((1.0 + 3f64.sqrt()) / 4.0)).norm() < 1e-9)
            .unwrap();
        // λ = 1: constant on Q
        let k = one.on_tile[0];
        for (i, z) in one.on_tile.iter().enumerate() {
            if !a.grid.boundary[i] {
                assert!((z - k).norm() < 1e-10);
            }
        }
        // λ = 1/2: affine on Q
        let xs: Vec<f64> = (0..a.grid.len()).map(|i| x_of(&a, i)).collect();
        let design = CMat::from_fn(
            xs.len(),
            2,
            |r, c| if c == 0 { cre(1.0) } else { cre(xs[r]) },
        );
        let rhs = CVec::from_iterator(xs.len(), half.on_tile.iter().copied());
        let fit = lstsq(&design, &rhs, 1e-14);
        assert!(
            (&design * &fit - &rhs)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
                < 1e-9
        );
        assert!(fit[1].norm() > 1e-3);
        // c0 element is not a polynomial of degree ≤ 1
        let rhs = CVec::from_iterator(xs.len(), c0.on_tile.iter().copied());
        let fit = lstsq(&design, &rhs, 1e-14);
        assert!(
            (&design * &fit - &rhs)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
                > 1e-3
        );

        assert_eq!(local_dimension(&translate_columns(&a.grid), 1e-6), 3);
        assert_eq!(local_dimension(&basis_columns(&a.grid, &els), 1e-6), 3);
    }

    #[test]
    fn class_membership() {
        for mask in [d4(), haar(), one_third()] {
            let a = analyze(mask, 8);
            let els = basis_from_jordan(&a).unwrap();
            for e in els.iter().filter(|e| e.lambda.norm() > 0.0) {
                let pts = class_test_points(&a, e.order + 1);
                let c = verify_class(e, &a, e.order + 1, &pts, 1e-6).unwrap();
                assert!(c.at(e.order) <= 1e-6, "{:?} {c:?}", e.lambda);
                assert!(c.points > 0);
            }
        }
    }

    #[test]
    fn order_two_element_is_sharp() {
        let a = analyze(one_third(), 8);
        let els = basis_from_jordan(&a).unwrap();
        let deep = els.iter().find(|e| e.order == 2).unwrap();
        let pts = class_test_points(&a, 2);
        let c = verify_class(deep, &a, 2, &pts, 1e-6).unwrap();
        assert!(c.at(2) <= 1e-6, "{c:?}");
        assert!(c.at(1) >= 1e-2, "{c:?}");
        assert_eq!(c.minimal_order, Some(2));
    }

    #[test]
    fn random_combinations_stay_in_class() {
        let a = analyze(one_third(), 8);
        let els = basis_from_jordan(&a).unwrap();
        let third: Vec<&HomogeneousElement<f64>> = els
            .iter()
            .filter(|e| (e.lambda - cre(1.0 / 3.0)).norm() < 1e-6)
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w: Vec<f64> = third.iter().map(|_| rng.random::<f64>() - 0.5).collect();
        let mut combo = third[0].clone();
        combo.order = third.iter().map(|e| e.order).max().unwrap();
        combo.on_tile = (0..a.grid.len())
            .map(|i| {
                third
                    .iter()
                    .zip(&w)
                    .fold(cre(0.0), |acc, (e, c)| acc + e.on_tile[i] * *c)
            })
            .collect();
        let mut ext = third[0].extension.clone().unwrap();
        for (k, v) in ext.values.iter_mut() {
            *v = third.iter().zip(&w).fold(cre(0.0), |acc, (e, c)| {
                acc + e.extension.as_ref().unwrap().get(k).unwrap() * *c
            });
        }
        combo.extension = Some(ext);
        let pts = class_test_points(&a, combo.order);
        let c = verify_class(&combo, &a, combo.order, &pts, 1e-6).unwrap();
        assert!(c.at(combo.order) <= 1e-6);
    }

    #[test]
    fn trivial_class_cases() {
        let a = analyze(d4(), 8);
        let els = basis_from_jordan(&a).unwrap();
        let one = els
            .iter()
            .find(|e| (e.lambda - cre(1.0)).norm() < 1e-9)
            .unwrap();
        let pts = class_test_points(&a, 1);
        assert!(verify_class(one, &a, 1, &pts, 1e-6).unwrap().at(1) < 1e-10);
        assert!(matches!(
            verify_class(one, &a, 1, &[], 1e-6),
            Err(Error::NoTestPoints)
        ));
    }

    #[test]
    fn annulus_recursions() {
        let a = analyze(one_third(), 10);
        let els = basis_from_jordan(&a).unwrap();
        let rho = 0.7;
        for e in els.iter().filter(|e| e.lambda.norm() > 0.0) {
            for shell in -2..=0 {
                let inward = annulus_propagate(e, &a, rho, shell, Direction::Inward).unwrap();
                assert!(inward.points > 0);
                assert!(inward.max_discrepancy <= 1e-6, "{inward:?}");
                let outward = annulus_propagate(e, &a, rho, shell - 3, Direction::Outward).unwrap();
                assert!(outward.points > 0);
                assert!(outward.max_discrepancy <= 1e-6, "{outward:?}");
            }
            if (e.lambda - cre(1.0)).norm() > 1e-6 {
                let r = annulus_propagate(e, &a, rho, 0, Direction::Inward).unwrap();
                let z = r.h_at_zero.unwrap();
                assert!(z[0].abs() < 1e-9 && z[1].abs() < 1e-9);
            }
        }

        let h = analyze(haar(), 6);
        let els = basis_from_jordan(&h).unwrap();
        let zero = els.iter().find(|e| e.lambda.norm() == 0.0).unwrap();
        assert!(matches!(
            annulus_propagate(zero, &h, 0.7, 0, Direction::Outward),
            Err(Error::ZeroEigenvalue)
        ));
    }

    #[test]
    fn linear_independence_of_extended_functions() {
        for mask in [d4(), one_third()] {
            let a = analyze(mask, 6);
            let els: Vec<_> = basis_from_jordan(&a)
                .unwrap()
                .into_iter()
                .filter(|e| e.lambda.norm() > 0.0)
                .collect();
            let shifts = evaluable_shifts(&a);
            let grids: Vec<GridFunction<f64>> =
                els.iter().map(|e| e.grid_function(&a, &shifts)).collect();
            let n = grids[0].values.len();
            let m = CMat::from_fn(n, els.len(), |r, c| grids[c].values[r]);
            assert_eq!(local_dimension(&m, 1e-9), els.len());
        }
    }

    #[test]
    fn basis_is_jordan_times_translates() {
        let a = analyze(d4(), 6);
        let els = basis_from_jordan(&a).unwrap();
        for (i, phi) in a.grid.values.iter().enumerate() {
            let h = &a.jordan.basis * phi;
            for e in &els {
                assert!((h[e.row] - e.on_tile[i]).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn reconstruction() {
        let a = analyze(d4(), 6);
        let els = basis_from_jordan(&a).unwrap();
        let delta: BTreeMap<Point, Cx<f64>> = [(Point(vec![0]), cre(1.0))].into_iter().collect();
        let beta = reconstruct_coeffs(&delta, &a.jordan).unwrap();
        assert!(reconstruction_residual(&delta, &beta, &els, &a.grid) <= 1e-10);

        let zero: BTreeMap<Point, Cx<f64>> = (0..3).map(|k| (Point(vec![k]), cre(0.0))).collect();
        let beta = reconstruct_coeffs(&zero, &a.jordan).unwrap();
        assert!(beta.values().all(|b| b.iter().all(|z| z.norm() == 0.0)));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let alpha: BTreeMap<Point, Cx<f64>> = (-2..3)
                .map(|k| (Point(vec![k]), cre(rng.random::<f64>() * 2.0 - 1.0)))
                .collect();
            let beta = reconstruct_coeffs(&alpha, &a.jordan).unwrap();
            assert!(reconstruction_residual(&alpha, &beta, &els, &a.grid) <= 1e-8);
        }
    }

    #[test]
    fn zero_eigenvalue_elements_vanish() {
        // five taps with the sum rules; the top row of T on the window is zero
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let base = [0.25, 0.5, 0.5, 0.5, 0.25];
        let mut c: Vec<f64> = base
            .iter()
            .map(|x| x + 0.05 * (rng.random::<f64>() - 0.5))
            .collect();
        // restore Σ_even = Σ_odd = 1
        let even = c[0] + c[2] + c[4];
        let odd = c[1] + c[3];
        for (i, x) in c.iter_mut().enumerate() {
            *x /= if i % 2 == 0 { even } else { odd };
        }
        let a = analyze(Mask::from_1d(0, &c, 2).unwrap(), 8);
        assert!(a.jordan.zero_multiplicity() > 0);
        let els = basis_from_jordan(&a).unwrap();
        for e in els.iter().filter(|e| e.lambda.norm() == 0.0) {
            assert!(zero_eigen_check(&e.vector, &a.grid) <= 1e-8);
        }
    }
}
