//! Values of the refinable function on `M`-adic grids, via the lattice
//! 1-eigenvector of `T` and products of digit matrices.

use crate::error::{Error, Result};
use crate::lattice::{address, depth_digits, Dilation, IntMatrix, Lattice, Point};
use crate::linalg::null_space;
use crate::scalar::{cabs, cre, real, to_f64, CMat, CVec, Cx, Real};
use crate::scale_matrix::{build_t_digit, Mask, ScaleMatrix};
use crate::spectral::JordanDecomposition;
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::Write;

/// `u` with `T u = u` and `Σ u_k = 1`, i.e. `u_k = φ(k)`.
///
/// When 1 is a semisimple eigenvalue of multiplicity above one, `u` is the
/// spectral projection of `e_0` onto the eigenspace: the limit of the
/// cascade iteration `T^n e_0`.
pub fn phi_lattice_values<T: Real>(
    t: &ScaleMatrix<T>,
    jordan: &JordanDecomposition<T>,
) -> Result<CVec<T>> {
    let one = cre(T::one());
    let ci = jordan
        .find(one)
        .ok_or_else(|| Error::DegenerateEigenvalue("1 is not an eigenvalue of T".into()))?;
    let cluster = &jordan.clusters[ci];
    if !cluster.is_semisimple() {
        return Err(Error::DegenerateEigenvalue(format!(
            "eigenvalue 1 is defective (Jordan chains {:?})",
            cluster.chain_lengths()
        )));
    }
    let size = t.size();
    let mut shifted = t.entries.clone();
    for i in 0..size {
        shifted[(i, i)] -= cluster.value;
    }
    let scale = crate::linalg::norm2(&t.entries).max(T::one());
    let right = null_space(&shifted, jordan.rank_tol * scale);
    if right.ncols() != cluster.multiplicity {
        return Err(Error::DegenerateEigenvalue(format!(
            "eigenspace of 1 has dimension {} but multiplicity {}",
            right.ncols(),
            cluster.multiplicity
        )));
    }
    let u = if cluster.multiplicity == 1 {
        right.column(0).into_owned()
    } else {
        let zero = t
            .position(&Point::zero(t.index[0].dim()))
            .ok_or_else(|| Error::DegenerateEigenvalue("0 is not in the index set".into()))?;
        // rows: left eigenvectors
        let left = CMat::from_rows(
            &cluster
                .chains
                .iter()
                .map(|c| c.vectors[0].transpose())
                .collect::<Vec<_>>(),
        );
        let gram = &left * &right;
        let inv = gram.try_inverse().ok_or_else(|| {
            Error::DegenerateEigenvalue("eigenspace projection is singular".into())
        })?;
        let e0 = left.column(zero).into_owned();
        &right * (inv * e0)
    };
    let sum = u.iter().fold(cre(T::zero()), |a, b| a + *b);
    let umax = u
        .iter()
        .map(|z| cabs(*z))
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    if cabs(sum) <= real::<T>(1e-10) * umax {
        return Err(Error::DegenerateEigenvalue(format!(
            "eigenvector of 1 sums to zero (raw vector {:?})",
            u.iter()
                .map(|z| [to_f64(z.re), to_f64(z.im)])
                .collect::<Vec<_>>()
        )));
    }
    let mut u = u / sum;
    for z in u.iter_mut() {
        if z.im.abs() <= real::<T>(1e-14) * umax / cabs(sum) {
            z.im = T::zero();
        }
    }
    Ok(u)
}

/// `(T)_{d_1} ⋯ (T)_{d_r} base`: `Φ` at `M^{-r} γ` for the digit string
/// `d_1 … d_r` of `γ`.
pub fn eval_phi_vector<T: Real>(
    digits: &[usize],
    digit_matrices: &[ScaleMatrix<T>],
    base: &CVec<T>,
) -> CVec<T> {
    let mut v = base.clone();
    for &d in digits.iter().rev() {
        v = &digit_matrices[d].entries * v;
    }
    v
}

/// `Φ(x) = {φ(x + ω)}_{ω ∈ Ω}` for every `x = M^{-r} γ`, `γ ∈ G_r`, i.e.
/// every depth-`r` point of the tile `Q`.
#[derive(Clone, Debug)]
pub struct PhiGrid<T: Real> {
    pub resolution: usize,
    /// `Ω`, canonical order.
    pub omega: Vec<Point>,
    /// `G_r`, canonical order.
    pub addresses: Vec<Point>,
    pub values: Vec<CVec<T>>,
    /// True when `M^{-r} γ` also lies in another translate `Q + k`.
    pub boundary: Vec<bool>,
    lookup: HashMap<Point, usize>,
    omega_pos: HashMap<Point, usize>,
    mr: IntMatrix,
}

#[derive(Clone, Copy, Debug)]
pub struct GridOptions {
    /// Maximum number of stored values `m^r |Ω|`.
    pub cap: u128,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { cap: 1 << 24 }
    }
}

/// Evaluates `Φ` on the depth-`r` grid of `Q` over the index set `omega`,
/// starting from the lattice values `base` given on `base_index`.
///
/// `omega` must contain `base_index`, which must cover the support of `φ`
/// (any admissible set containing `Ω_{Λ'}` does).
pub fn eval_phi_grid<T: Real>(
    mask: &Mask<T>,
    omega: &[Point],
    base_index: &[Point],
    base: &CVec<T>,
    tile_points: &[Point],
    r: usize,
    opts: GridOptions,
) -> Result<PhiGrid<T>> {
    let m = mask.dilation.m() as u128;
    let needed = m
        .saturating_pow(r as u32)
        .saturating_mul(omega.len() as u128);
    if needed > opts.cap {
        return Err(Error::BudgetExceeded {
            what: "phi grid",
            needed,
            cap: opts.cap,
        });
    }
    let digit_mats: Vec<ScaleMatrix<T>> = mask
        .digits
        .digits()
        .iter()
        .map(|d| build_t_digit(mask, omega, d))
        .collect();
    let index = digit_mats[0].index.clone();
    let omega_pos: HashMap<Point, usize> = index
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();
    let mut u = CVec::zeros(index.len());
    for (p, v) in base_index.iter().zip(base.iter()) {
        let i = *omega_pos.get(p).ok_or_else(|| {
            Error::WindowTooSmall(format!("{p:?} of the base set is not in the grid window"))
        })?;
        u[i] = *v;
    }

    let dil = &mask.dilation;
    let zero_digit = mask.digits.zero_index();
    let mut level: Vec<(Point, CVec<T>)> = vec![(Point::zero(dil.dim()), u.clone())];
    for t in 1..=r {
        let shifts: Vec<Point> = mask
            .digits
            .digits()
            .iter()
            .map(|d| dil.apply_pow(d, t - 1))
            .collect();
        let next: Vec<Vec<(Point, CVec<T>)>> = level
            .par_iter()
            .map(|(g, v)| {
                (0..shifts.len())
                    .map(|di| {
                        let gamma = shifts[di].add(g);
                        // the all-zero string keeps the exact base vector
                        let val = if di == zero_digit && g.is_zero() {
                            u.clone()
                        } else {
                            &digit_mats[di].entries * v
                        };
                        (gamma, val)
                    })
                    .collect()
            })
            .collect();
        level = next.into_iter().flatten().collect();
    }
    level.sort_by(|a, b| a.0.cmp(&b.0));
    let (addresses, values): (Vec<Point>, Vec<CVec<T>>) = level.into_iter().unzip();
    if values
        .iter()
        .any(|v| v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())))
    {
        return Err(Error::DegenerateEigenvalue("non-finite grid value".into()));
    }
    let lookup = addresses
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();
    let mr = dil.matrix().pow(r);
    let mut grid = PhiGrid {
        resolution: r,
        omega: index,
        addresses,
        values,
        boundary: Vec::new(),
        lookup,
        omega_pos,
        mr,
    };
    grid.boundary = grid
        .addresses
        .par_iter()
        .map(|g| is_shared_point(g, r, mask, tile_points))
        .collect();
    Ok(grid)
}

/// Whether `M^{-r} γ` (with `γ ∈ G_r`) also lies in `Q + k` for some `k ≠ 0`.
///
/// `M^{-r} η ∈ Q` exactly when `η ∈ G_r + (Q ∩ Γ)`; `tile_points` is `Q ∩ Γ`.
pub fn is_shared_point<T: Real>(
    gamma: &Point,
    r: usize,
    mask: &Mask<T>,
    tile_points: &[Point],
) -> bool {
    tile_points.iter().any(|w| {
        let (_, q) =
            address(&gamma.sub(w), r, &mask.dilation, &mask.digits).expect("complete digit set");
        !q.is_zero()
    })
}

impl<T: Real> PhiGrid<T> {
    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn position(&self, gamma: &Point) -> Option<usize> {
        self.lookup.get(gamma).copied()
    }

    pub fn omega_position(&self, p: &Point) -> Option<usize> {
        self.omega_pos.get(p).copied()
    }

    /// Splits `η = γ + M^r q` with `γ ∈ G_r`.
    pub fn split(&self, eta: &Point, mask: &Mask<T>) -> (usize, Point) {
        let (ds, q) = address(eta, self.resolution, &mask.dilation, &mask.digits)
            .expect("complete digit set");
        let gamma = eta.sub(&self.mr.apply(&q));
        debug_assert_eq!(
            crate::lattice::compose_digits(&ds, &mask.dilation, &mask.digits),
            gamma
        );
        let i = self.position(&gamma).expect("grid holds all of G_r");
        (i, q)
    }

    /// `φ(M^{-r} η + k)`; zero when `q + k` falls outside `Ω` (outside the
    /// support of `φ`).
    pub fn phi_at(&self, eta: &Point, k: &Point, mask: &Mask<T>) -> Cx<T> {
        let (i, q) = self.split(eta, mask);
        match self.omega_position(&q.add(k)) {
            Some(j) => self.values[i][j],
            None => cre(T::zero()),
        }
    }

    /// Boundary flag of the grid point `M^{-r} η`.
    pub fn boundary_at(&self, eta: &Point, mask: &Mask<T>) -> bool {
        let (i, _) = self.split(eta, mask);
        self.boundary[i]
    }

    /// Largest `|φ(x) - Σ_k c_k φ(Mx - k)|` over grid points `x` whose own
    /// flag and whose right-hand-side flags are clear, relative to
    /// `max |φ|`.
    pub fn refinement_residual(&self, mask: &Mask<T>) -> T {
        let dil = &mask.dilation;
        let coeffs: Vec<(Point, Cx<T>)> = mask
            .coefficients()
            .iter()
            .map(|(k, c)| (k.clone(), *c))
            .collect();
        let scale = self.max_abs().max(real::<T>(1e-300));
        let worst = (0..self.len())
            .into_par_iter()
            .filter(|&i| !self.boundary[i])
            .map(|i| {
                let mg = dil.apply(&self.addresses[i]);
                if self.boundary_at(&mg, mask) {
                    return T::zero();
                }
                let mut e = T::zero();
                for (j, w) in self.omega.iter().enumerate() {
                    let lhs = self.values[i][j];
                    let mw = dil.apply(w);
                    let rhs = coeffs.iter().fold(cre(T::zero()), |acc, (k, c)| {
                        acc + *c * self.phi_at(&mg, &mw.sub(k), mask)
                    });
                    let d = cabs(lhs - rhs);
                    if d > e {
                        e = d;
                    }
                }
                e
            })
            .reduce(T::zero, |a, b| if b > a { b } else { a });
        worst / scale
    }

    /// Largest `|Σ_ω φ(x + ω) - 1|` over unflagged grid points.
    pub fn partition_of_unity_error(&self) -> T {
        let one = cre(T::one());
        (0..self.len())
            .filter(|&i| !self.boundary[i])
            .map(|i| cabs(self.values[i].iter().fold(cre(T::zero()), |a, b| a + *b) - one))
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .flat_map(|v| v.iter().map(|z| cabs(*z)))
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Flattens to `φ` itself on `∪_ω (Q + ω)`.
    pub fn to_grid_function(&self) -> GridFunction<T> {
        let mut points = Vec::with_capacity(self.len() * self.omega.len());
        let mut values = Vec::with_capacity(points.capacity());
        let mut boundary = Vec::with_capacity(points.capacity());
        for (i, g) in self.addresses.iter().enumerate() {
            for (j, w) in self.omega.iter().enumerate() {
                points.push(g.add(&self.mr.apply(w)));
                values.push(self.values[i][j]);
                boundary.push(self.boundary[i]);
            }
        }
        GridFunction {
            resolution: self.resolution,
            points,
            values,
            boundary,
        }
    }
}

/// Complex values at grid points `M^{-r} η` (stored by numerator `η`).
#[derive(Clone, Debug)]
pub struct GridFunction<T: Real> {
    pub resolution: usize,
    pub points: Vec<Point>,
    pub values: Vec<Cx<T>>,
    pub boundary: Vec<bool>,
}

impl<T: Real> GridFunction<T> {
    /// Columns `x_1..x_d, re, im, boundary` in embedded coordinates.
    pub fn write_csv<W: Write>(
        &self,
        dilation: &Dilation,
        lattice: &Lattice<T>,
        mut w: W,
    ) -> std::io::Result<()> {
        let d = lattice.dim();
        let mut header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
        header.extend(["re".to_string(), "im".to_string(), "boundary".to_string()]);
        writeln!(w, "{}", header.join(","))?;
        for ((p, v), b) in self.points.iter().zip(&self.values).zip(&self.boundary) {
            let x = lattice.embed(&dilation.contract::<T>(p, self.resolution));
            let mut row: Vec<String> = x.iter().map(|c| format!("{}", to_f64(*c))).collect();
            row.push(format!("{}", to_f64(v.re)));
            row.push(format!("{}", to_f64(v.im)));
            row.push(if *b { "1".into() } else { "0".into() });
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// All of `G_r` (the depth-`r` points of `Q`), re-exported for callers that
/// build grids by hand.
pub fn tile_addresses<T: Real>(mask: &Mask<T>, r: usize) -> Vec<Point> {
    depth_digits(r, &mask.dilation, &mask.digits)
}
