//! Lifted matrices `Z_[s]` on degree-`s` monomials, the spectral necessary
//! condition for accuracy, and a constructive polynomial-reproduction test.

use crate::analysis::Analysis;
use crate::error::Result;
use crate::lattice::{Dilation, Point};
use crate::linalg::lstsq;
use crate::scalar::{cabs, cre, real, to_f64, CMat, CVec, Cx, Real};
use crate::spectral::{jordan_of_matrix, JordanDecomposition, JordanOptions};
use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Multi-indices of degree `s` in `d` variables, graded-lex descending:
/// `(s,0,..), (s-1,1,..), ..., (0,..,s)`.
pub fn multi_indices(d: usize, s: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return if s == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    if d == 1 {
        return vec![vec![s]];
    }
    let mut out = Vec::new();
    for first in (0..=s).rev() {
        for mut rest in multi_indices(d - 1, s - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `C(s + d - 1, d - 1)`.
pub fn lifted_size(d: usize, s: usize) -> usize {
    if d == 0 {
        return usize::from(s == 0);
    }
    let (n, k) = (s + d - 1, d - 1);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128) as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedMatrix<S> {
    pub s: usize,
    pub indices: Vec<Vec<usize>>,
    /// `entries[a][b]` is the coefficient of `x^β_b` in `(Zx)^α_a`.
    pub entries: Vec<Vec<S>>,
}

impl<S: Clone + Num> LiftedMatrix<S> {
    pub fn size(&self) -> usize {
        self.indices.len()
    }

    pub fn mul(&self, other: &LiftedMatrix<S>) -> LiftedMatrix<S> {
        let n = self.size();
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (0..n).fold(S::zero(), |acc, k| {
                            acc + self.entries[i][k].clone() * other.entries[k][j].clone()
                        })
                    })
                    .collect()
            })
            .collect();
        LiftedMatrix {
            s: self.s,
            indices: self.indices.clone(),
            entries,
        }
    }

    pub fn map<R, F: Fn(&S) -> R>(&self, f: F) -> LiftedMatrix<R> {
        LiftedMatrix {
            s: self.s,
            indices: self.indices.clone(),
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(&f).collect())
                .collect(),
        }
    }
}

type Poly<S> = BTreeMap<Vec<usize>, S>;

fn poly_mul_linear<S: Clone + Num>(p: &Poly<S>, row: &[S]) -> Poly<S> {
    let mut out: Poly<S> = BTreeMap::new();
    for (exp, c) in p {
        for (j, z) in row.iter().enumerate() {
            if z.is_zero() {
                continue;
            }
            let mut e = exp.clone();
            e[j] += 1;
            let term = c.clone() * z.clone();
            let slot = out.entry(e).or_insert_with(S::zero);
            *slot = slot.clone() + term;
        }
    }
    out
}

/// `Z_[s]`: row `α` holds the expansion of `Π_i (Σ_j z_ij x_j)^{α_i}` in the
/// monomials `x^β`, `|β| = s`.
pub fn lift_matrix<S: Clone + Num>(z: &[Vec<S>], s: usize) -> LiftedMatrix<S> {
    let d = z.len();
    let indices = multi_indices(d, s);
    let entries = indices
        .iter()
        .map(|alpha| {
            let mut p: Poly<S> = BTreeMap::new();
            p.insert(vec![0; d], S::one());
            for (i, &a) in alpha.iter().enumerate() {
                for _ in 0..a {
                    p = poly_mul_linear(&p, &z[i]);
                }
            }
            indices
                .iter()
                .map(|beta| p.get(beta).cloned().unwrap_or_else(S::zero))
                .collect()
        })
        .collect();
    LiftedMatrix {
        s,
        indices,
        entries,
    }
}

/// `(A^{-1})_[s]` computed exactly as `adj(A)_[s] / det(A)^s`.
pub fn inverse_lift_exact(a: &Dilation, s: usize) -> LiftedMatrix<Ratio<i64>> {
    let adj = a.matrix().adjugate();
    let det = a.det();
    let rows: Vec<Vec<Ratio<i64>>> = adj
        .rows()
        .iter()
        .map(|r| r.iter().map(|&x| Ratio::new(x, det)).collect())
        .collect();
    lift_matrix(&rows, s)
}

/// Eigenvalues `η^α` of `(A^{-1})_[s]` together with their Jordan structure.
pub fn inverse_lift_spectrum<T: Real>(a: &Dilation, s: usize) -> Result<JordanDecomposition<T>> {
    let lifted = inverse_lift_exact(a, s);
    let n = lifted.size();
    let m = CMat::from_fn(n, n, |i, j| {
        cre(real::<T>(
            lifted.entries[i][j].to_f64().expect("finite ratio"),
        ))
    });
    let index = lifted
        .indices
        .iter()
        .map(|al| Point(al.iter().map(|&x| x as i64).collect()))
        .collect();
    jordan_of_matrix(&m, index, &JordanOptions::for_precision::<T>())
}

/// Eigenvalue matching tolerance for spectral comparisons.
const MATCH_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct BlockMatch {
    pub eigenvalue: [f64; 2],
    /// Block order in `(A^{-1})_[s]`.
    pub lift_order: usize,
    /// Order of the block of `T` assigned to it.
    pub matched_order: Option<usize>,
    /// Other unused blocks of the same order that could have been taken.
    pub ties: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeMatch {
    pub s: usize,
    pub blocks: Vec<BlockMatch>,
    pub ok: bool,
}

/// Largest `κ ≤ s_max + 1` such that for all `s < κ` every Jordan block of
/// `(A^{-1})_[s]` finds a block of `T` at the same eigenvalue with order at
/// least as large. Blocks of `T` are consumed largest first across degrees.
pub fn accuracy_necessary<T: Real>(
    jordan: &JordanDecomposition<T>,
    a: &Dilation,
    s_max: usize,
) -> Result<(usize, Vec<DegreeMatch>)> {
    let tol = real::<T>(MATCH_TOL);
    let mut pool: Vec<(Cx<T>, Vec<usize>)> = jordan
        .clusters
        .iter()
        .map(|c| (c.value, c.chain_lengths()))
        .collect();
    let mut evidence = Vec::new();
    let mut kappa = s_max + 1;
    for s in 0..=s_max {
        let lift = inverse_lift_spectrum::<T>(a, s)?;
        let mut blocks = Vec::new();
        let mut ok = true;
        for c in &lift.clusters {
            let mut wanted = c.chain_lengths();
            wanted.sort_unstable_by(|x, y| y.cmp(x));
            let slot = pool
                .iter_mut()
                .find(|(v, _)| cabs(*v - c.value) <= tol * (T::one() + cabs(c.value)));
            for l in wanted {
                let (matched_order, ties) = match slot {
                    Some((_, ref mut avail)) => {
                        avail.sort_unstable_by(|x, y| y.cmp(x));
                        match avail.iter().position(|&x| x >= l) {
                            Some(_) => {
                                let taken = avail.remove(0);
                                let ties = avail.iter().filter(|&&x| x == taken).count();
                                (Some(taken), ties)
                            }
                            None => (None, 0),
                        }
                    }
                    None => (None, 0),
                };
                ok &= matched_order.is_some();
                blocks.push(BlockMatch {
                    eigenvalue: [to_f64(c.value.re), to_f64(c.value.im)],
                    lift_order: l,
                    matched_order,
                    ties,
                });
            }
        }
        evidence.push(DegreeMatch { s, blocks, ok });
        if !ok {
            kappa = s;
            break;
        }
    }
    Ok((kappa, evidence))
}

#[derive(Clone, Debug, Serialize)]
pub struct MonomialFit {
    pub alpha: Vec<usize>,
    /// Worst relative residual of the fits on each tile separately.
    pub tile_residual: f64,
    /// Relative residual of one coefficient sequence fitted on all tiles.
    pub joint_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeFit {
    pub s: usize,
    pub monomials: Vec<MonomialFit>,
    pub ok: bool,
}

impl DegreeFit {
    pub fn worst(&self) -> f64 {
        self.monomials
            .iter()
            .map(|m| m.tile_residual.max(m.joint_residual))
            .fold(0.0, f64::max)
    }
}

/// Tiles `Q + γ` with `γ ∈ {0, ±e_i}`.
fn neighbour_tiles(d: usize) -> Vec<Point> {
    let mut out = vec![Point::zero(d)];
    for i in 0..d {
        for sgn in [1, -1] {
            let mut e = vec![0; d];
            e[i] = sgn;
            out.push(Point(e));
        }
    }
    out
}

fn rel_residual<T: Real>(a: &CMat<T>, y: &CVec<T>, b: &CVec<T>) -> f64 {
    let r = a * y - b;
    let rmax = r.iter().map(|z| to_f64(cabs(*z))).fold(0.0, f64::max);
    let bmax = b.iter().map(|z| to_f64(cabs(*z))).fold(0.0, f64::max);
    rmax / bmax.max(1e-300)
}

/// Polynomial reproduction test: for every `|α| = s` look for coefficients
/// `y` with `Σ_k y_k φ(x + k) = x^α` at the unflagged grid points of `Q`
/// and of its neighbours `Q ± e_i`, first tile by tile and then with a
/// single sequence on the union. Degree `s` is accepted when every residual
/// is within `tol`; `κ` is the first rejected degree.
pub fn accuracy_constructive<T: Real>(
    a: &Analysis<T>,
    s_max: usize,
    tol: f64,
) -> (usize, Vec<DegreeFit>) {
    let grid = &a.grid;
    let d = a.mask.dim();
    let big_r = grid.resolution;
    let rows: Vec<usize> = (0..grid.len()).filter(|&i| !grid.boundary[i]).collect();
    let coords: Vec<Vec<T>> = rows
        .iter()
        .map(|&i| a.mask.dilation.contract::<T>(&grid.addresses[i], big_r))
        .collect();
    let tiles = neighbour_tiles(d);
    // unknowns y_k for k ∈ Ω - γ
    let mut window: BTreeMap<Point, usize> = BTreeMap::new();
    for g in &tiles {
        for w in &grid.omega {
            let k = w.sub(g);
            let n = window.len();
            window.entry(k).or_insert(n);
        }
    }
    let ncol = window.len();
    let nw = grid.omega.len();
    let local = CMat::from_fn(rows.len(), nw, |r, c| grid.values[rows[r]][c]);
    let mut joint = CMat::zeros(rows.len() * tiles.len(), ncol);
    for (ti, g) in tiles.iter().enumerate() {
        for (c, w) in grid.omega.iter().enumerate() {
            let col = window[&w.sub(g)];
            for r in 0..rows.len() {
                joint[(ti * rows.len() + r, col)] = local[(r, c)];
            }
        }
    }
    let rcond = real::<T>(1e-10);
    let mut fits = Vec::new();
    let mut kappa = s_max + 1;
    for s in 0..=s_max {
        let monomials: Vec<MonomialFit> = multi_indices(d, s)
            .into_par_iter()
            .map(|alpha| {
                let mono = |x: &[T], g: &Point| -> Cx<T> {
                    let mut v = T::one();
                    for (i, &p) in alpha.iter().enumerate() {
                        v *= (x[i] + real::<T>(g.0[i] as f64)).powi(p as i32);
                    }
                    cre(v)
                };
                let mut tile_residual = 0.0f64;
                let mut b_all = CVec::zeros(rows.len() * tiles.len());
                for (ti, g) in tiles.iter().enumerate() {
                    let b = CVec::from_iterator(rows.len(), coords.iter().map(|x| mono(x, g)));
                    let y = lstsq(&local, &b, rcond);
                    tile_residual = tile_residual.max(rel_residual(&local, &y, &b));
                    b_all.rows_mut(ti * rows.len(), rows.len()).copy_from(&b);
                }
                let y = lstsq(&joint, &b_all, rcond);
                MonomialFit {
                    alpha,
                    tile_residual,
                    joint_residual: rel_residual(&joint, &y, &b_all),
                }
            })
            .collect();
        let ok = monomials
            .iter()
            .all(|m| m.tile_residual <= tol && m.joint_residual <= tol);
        fits.push(DegreeFit { s, monomials, ok });
        if !ok {
            kappa = s;
            break;
        }
    }
    (kappa, fits)
}

#[derive(Clone, Debug, Serialize)]
pub struct Containment {
    /// `η^α` for `|α| < κ` that were looked up.
    pub required: Vec<[f64; 2]>,
    pub missing: Vec<[f64; 2]>,
}

impl Containment {
    pub fn ok(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Checks that every eigenvalue of `(A^{-1})_[s]`, `s < κ`, is an
/// eigenvalue of `T`.
pub fn eta_containment<T: Real>(
    jordan: &JordanDecomposition<T>,
    a: &Dilation,
    kappa: usize,
) -> Result<Containment> {
    let tol = real::<T>(MATCH_TOL);
    let spectrum = jordan.eigenvalues();
    let mut required = Vec::new();
    let mut missing = Vec::new();
    for s in 0..kappa {
        for c in inverse_lift_spectrum::<T>(a, s)?.clusters {
            let z = [to_f64(c.value.re), to_f64(c.value.im)];
            required.push(z);
            if !spectrum
                .iter()
                .any(|v| cabs(*v - c.value) <= tol * (T::one() + cabs(c.value)))
            {
                missing.push(z);
            }
        }
    }
    Ok(Containment { required, missing })
}

#[derive(Clone, Debug, Serialize)]
pub struct AccuracyReport {
    pub kappa_necessary: usize,
    pub kappa_constructive: usize,
    pub necessary: Vec<DegreeMatch>,
    pub constructive: Vec<DegreeFit>,
    pub containment: Containment,
    /// `max |Σ_ω φ(x+ω) - 1|` off boundaries, when `κ ≥ 1`.
    pub partition_of_unity: Option<f64>,
}

pub fn accuracy_report<T: Real>(a: &Analysis<T>, s_max: usize, tol: f64) -> Result<AccuracyReport> {
    let (kappa_necessary, necessary) = accuracy_necessary(&a.jordan, &a.mask.dilation, s_max)?;
    let (kappa_constructive, constructive) = accuracy_constructive(a, s_max, tol);
    let containment = eta_containment(&a.jordan, &a.mask.dilation, kappa_constructive)?;
    let partition_of_unity =
        (kappa_constructive >= 1).then(|| to_f64(a.grid.partition_of_unity_error()));
    Ok(AccuracyReport {
        kappa_necessary,
        kappa_constructive,
        necessary,
        constructive,
        containment,
        partition_of_unity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalysisOptions;
    use crate::fixtures::{d4, haar, one_third, quincunx_haar};
    use crate::scale_matrix::Mask;
    use proptest::prelude::*;

    fn analyze(mask: Mask<f64>, resolution: usize) -> Analysis<f64> {
        Analysis::new(
            mask,
            AnalysisOptions {
                resolution,
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn r(n: i64) -> Ratio<i64> {
        Ratio::from_integer(n)
    }

    #[test]
    fn index_order_and_size() {
        assert_eq!(
            multi_indices(2, 2),
            vec![vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(
            multi_indices(3, 1),
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
        );
        for d in 1..=4 {
            for s in 0..=6 {
                assert_eq!(multi_indices(d, s).len(), lifted_size(d, s));
            }
        }
        assert_eq!(lifted_size(3, 4), 15);
    }

    #[test]
    fn diagonal_and_identity_lifts() {
        let z = vec![vec![r(2), r(0)], vec![r(0), r(3)]];
        let l = lift_matrix(&z, 2);
        let expect = vec![
            vec![r(4), r(0), r(0)],
            vec![r(0), r(6), r(0)],
            vec![r(0), r(0), r(9)],
        ];
        assert_eq!(l.entries, expect);
        let id = vec![
            vec![r(1), r(0), r(0)],
            vec![r(0), r(1), r(0)],
            vec![r(0), r(0), r(1)],
        ];
        let l = lift_matrix(&id, 3);
        for (i, row) in l.entries.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                assert_eq!(*x, r(i64::from(i == j)));
            }
        }
    }

    #[test]
    fn exact_inverse_lift() {
        let a = Dilation::from_rows(&[vec![1, 1], vec![-1, 1]]).unwrap();
        for s in 0..=4 {
            let inv = inverse_lift_exact(&a, s);
            let ints: Vec<Vec<Ratio<i64>>> = a
                .matrix()
                .rows()
                .iter()
                .map(|r| r.iter().map(|&x| Ratio::from_integer(x)).collect())
                .collect();
            let fwd = lift_matrix(&ints, s);
            let prod = fwd.mul(&inv);
            for (i, row) in prod.entries.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    assert_eq!(*x, r(i64::from(i == j)));
                }
            }
        }
    }

    #[test]
    fn inverse_lift_spectra() {
        let two = Dilation::from_rows(&[vec![2]]).unwrap();
        for s in 0..5 {
            let j = inverse_lift_spectrum::<f64>(&two, s).unwrap();
            assert_eq!(j.clusters.len(), 1);
            assert!((j.clusters[0].value.re - 0.5f64.powi(s as i32)).abs() < 1e-14);
        }
        let q = Dilation::from_rows(&[vec![1, 1], vec![-1, 1]]).unwrap();
        let j = inverse_lift_spectrum::<f64>(&q, 1).unwrap();
        let mut ev = j.eigenvalues();
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((ev[0] - Cx::new(0.5, -0.5)).norm() < 1e-12);
        assert!((ev[1] - Cx::new(0.5, 0.5)).norm() < 1e-12);
        let twice = Dilation::from_rows(&[vec![2, 0], vec![0, 2]]).unwrap();
        let j = inverse_lift_spectrum::<f64>(&twice, 2).unwrap();
        assert_eq!(j.clusters.len(), 1);
        assert_eq!(j.clusters[0].multiplicity, 3);
        assert!((j.clusters[0].value.re - 0.25).abs() < 1e-14);
        // a shear gives a nontrivial Jordan block
        let shear = Dilation::from_rows(&[vec![2, 1], vec![0, 2]]).unwrap();
        let j = inverse_lift_spectrum::<f64>(&shear, 2).unwrap();
        assert_eq!(j.clusters[0].chain_lengths(), vec![3]);
    }

    fn mat(d: usize, v: &[f64]) -> Vec<Vec<f64>> {
        (0..d).map(|i| v[i * d..(i + 1) * d].to_vec()).collect()
    }

    fn dmat(z: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
        let d = z.len();
        nalgebra::DMatrix::from_fn(d, d, |i, j| z[i][j])
    }

    fn max_diff(a: &LiftedMatrix<f64>, b: &LiftedMatrix<f64>) -> f64 {
        a.entries
            .iter()
            .flatten()
            .zip(b.entries.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn scale(a: &LiftedMatrix<f64>) -> f64 {
        a.entries
            .iter()
            .flatten()
            .map(|x| x.abs())
            .fold(1.0, f64::max)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn lift_is_a_homomorphism(d in 1usize..=3, s in 0usize..=4, v in prop::collection::vec(-2.0f64..2.0, 18)) {
            let z = mat(d, &v[..d * d]);
            let u = mat(d, &v[9..9 + d * d]);
            let zu = dmat(&z) * dmat(&u);
            let zu: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| zu[(i, j)]).collect()).collect();
            let lhs = lift_matrix(&zu, s);
            let rhs = lift_matrix(&z, s).mul(&lift_matrix(&u, s));
            prop_assert_eq!(lhs.size(), lifted_size(d, s));
            prop_assert!(max_diff(&lhs, &rhs) <= 1e-10 * scale(&lhs).max(scale(&rhs)));
        }

        #[test]
        fn lift_of_inverse_is_inverse(d in 1usize..=3, s in 0usize..=4, v in prop::collection::vec(-1.0f64..1.0, 9)) {
            // diagonally dominant keeps the inverse well conditioned
            let mut z = mat(d, &v[..d * d]);
            for (i, row) in z.iter_mut().enumerate() {
                row[i] += 3.0;
            }
            let inv = dmat(&z).try_inverse().unwrap();
            let inv: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| inv[(i, j)]).collect()).collect();
            let prod = lift_matrix(&z, s).mul(&lift_matrix(&inv, s));
            let id = prod.map(|_| 0.0);
            let id = LiftedMatrix { entries: (0..id.size()).map(|i| (0..id.size()).map(|j| f64::from(u8::from(i == j))).collect()).collect(), ..id };
            prop_assert!(max_diff(&prod, &id) <= 1e-10 * scale(&lift_matrix(&z, s)) * scale(&lift_matrix(&inv, s)));
        }

        #[test]
        fn lift_acts_on_monomials(d in 1usize..=3, s in 0usize..=4, v in prop::collection::vec(-1.5f64..1.5, 12)) {
            let z = mat(d, &v[..d * d]);
            let x = &v[9..9 + d];
            let zx: Vec<f64> = (0..d).map(|i| (0..d).map(|j| z[i][j] * x[j]).sum()).collect();
            let l = lift_matrix(&z, s);
            let pow = |p: &[f64], a: &[usize]| a.iter().zip(p).map(|(&k, &b)| b.powi(k as i32)).product::<f64>();
            for (row, alpha) in l.entries.iter().zip(&l.indices) {
                let lhs: f64 = row.iter().zip(&l.indices).map(|(c, beta)| c * pow(x, beta)).sum();
                prop_assert!((lhs - pow(&zx, alpha)).abs() <= 1e-10 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn necessary_accuracy() {
        let two = Dilation::from_rows(&[vec![2]]).unwrap();
        for (mask, expect) in [(d4(), 2), (one_third(), 1), (haar(), 1)] {
            let a = analyze(mask, 4);
            let (k, ev) = accuracy_necessary(&a.jordan, &two, 4).unwrap();
            assert_eq!(k, expect, "{ev:?}");
            assert!(!ev.last().unwrap().ok);
        }
    }

    #[test]
    fn constructive_accuracy() {
        let a = analyze(d4(), 8);
        let (k, fits) = accuracy_constructive(&a, 3, 1e-6);
        assert_eq!(k, 2);
        assert!(fits[0].worst() <= 1e-6 && fits[1].worst() <= 1e-6);
        assert!(fits[2].worst() >= 1e-2, "{:?}", fits[2]);

        for mask in [haar(), one_third()] {
            let a = analyze(mask, 8);
            let (k, fits) = accuracy_constructive(&a, 3, 1e-6);
            assert_eq!(k, 1, "{fits:?}");
            assert!(fits[1].worst() >= 1e-2);
        }
    }

    #[test]
    fn reports_and_containment() {
        for (mask, kappa) in [(d4(), 2), (one_third(), 1), (haar(), 1)] {
            let a = analyze(mask, 8);
            let rep = accuracy_report(&a, 3, 1e-6).unwrap();
            assert_eq!(rep.kappa_constructive, kappa);
            assert!(rep.kappa_constructive <= rep.kappa_necessary);
            assert!(rep.containment.ok());
            assert_eq!(rep.containment.required.len(), kappa);
            assert!(rep.partition_of_unity.unwrap() <= 1e-8);
        }
    }

    #[test]
    fn quincunx_accuracy() {
        let a = analyze(quincunx_haar(), 10);
        let rep = accuracy_report(&a, 2, 1e-6).unwrap();
        assert!(rep.kappa_constructive >= 1);
        assert!(rep.kappa_constructive <= rep.kappa_necessary);
        assert!(rep.containment.ok());
    }

    #[test]
    fn half_eigenvector_is_linear() {
        // the extended λ = 1/2 kernel vector of D4 samples a degree-1 polynomial
        let a = analyze(d4(), 4);
        let els = crate::homogeneous::basis_from_jordan(&a).unwrap();
        let half = els
            .iter()
            .find(|e| (e.lambda - cre(0.5)).norm() < 1e-9)
            .unwrap();
        let y = half.extension.as_ref().unwrap();
        let pts: Vec<(f64, Cx<f64>)> = y.values.iter().map(|(k, v)| (k.0[0] as f64, *v)).collect();
        let design = CMat::from_fn(
            pts.len(),
            2,
            |r, c| if c == 0 { cre(1.0) } else { cre(pts[r].0) },
        );
        let rhs = CVec::from_iterator(pts.len(), pts.iter().map(|p| p.1));
        let fit = lstsq(&design, &rhs, 1e-14);
        let res = (&design * &fit - &rhs)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(res <= 1e-8, "{res}");
    }
}
