//! Refinement masks and the finite sections `T = [c_{Mi-j}]` of the
//! bi-infinite operator `L`.

use crate::error::{Error, Result};
use crate::lattice::{coset_decompose, order_points, DigitSet, Dilation, Lattice, Point, Sign};
use crate::scalar::{cre, real, to_f64, CMat, Cx, Real};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::io::Write;

/// Finitely supported refinement coefficients `c_k` together with the
/// geometry they refer to.
#[derive(Clone, Debug)]
pub struct Mask<T: Real> {
    coefficients: BTreeMap<Point, Cx<T>>,
    pub dilation: Dilation,
    pub lattice: Lattice<T>,
    pub digits: DigitSet,
}

/// Coefficient sums relevant to the existence of a nontrivial solution and to
/// constant reproduction. Reported, never enforced.
#[derive(Clone, Debug, Serialize)]
pub struct SumRuleReport {
    /// `Σ_k c_k`, expected `|det M|`.
    pub total: [f64; 2],
    pub expected_total: f64,
    /// `Σ_{k ≡ d mod M} c_k` for each digit `d`, expected 1.
    pub coset_sums: Vec<[f64; 2]>,
    pub total_ok: bool,
    pub cosets_ok: bool,
}

impl<T: Real> Mask<T> {
    pub fn new(
        coefficients: impl IntoIterator<Item = (Point, Cx<T>)>,
        dilation: Dilation,
        lattice: Lattice<T>,
        digits: DigitSet,
    ) -> Result<Self> {
        let d = dilation.dim();
        if lattice.dim() != d || digits.get(0).dim() != d {
            return Err(Error::InvalidProblem(
                "dimension mismatch between lattice, dilation and digits".into(),
            ));
        }
        let mut map = BTreeMap::new();
        for (k, c) in coefficients {
            if k.dim() != d {
                return Err(Error::InvalidProblem(format!(
                    "mask point {k:?} has wrong dimension"
                )));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidProblem(format!(
                    "coefficient at {k:?} is not finite"
                )));
            }
            if map.insert(k.clone(), c).is_some() {
                return Err(Error::InvalidProblem(format!(
                    "mask point {k:?} given twice"
                )));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidProblem("mask has no coefficients".into()));
        }
        Ok(Mask {
            coefficients: map,
            dilation,
            lattice,
            digits,
        })
    }

    /// One-dimensional mask on `Z` with `c_k = values[k - first]`.
    pub fn from_1d(first: i64, values: &[f64], scale: i64) -> Result<Self> {
        let dilation = Dilation::from_rows(&[vec![scale]])?;
        let digits = DigitSet::standard_1d(&dilation)?;
        let coeffs = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (Point(vec![first + i as i64]), cre(real::<T>(v))));
        Mask::new(coeffs, dilation, Lattice::standard(1), digits)
    }

    pub fn dim(&self) -> usize {
        self.dilation.dim()
    }

    /// `c_k`, zero outside the support.
    pub fn coeff(&self, k: &Point) -> Cx<T> {
        self.coefficients
            .get(k)
            .copied()
            .unwrap_or_else(|| cre(T::zero()))
    }

    /// Support `Λ` in canonical order.
    pub fn support(&self) -> Vec<Point> {
        order_points(self.coefficients.keys())
    }

    pub fn coefficients(&self) -> &BTreeMap<Point, Cx<T>> {
        &self.coefficients
    }

    pub fn sum_rules(&self, tol: f64) -> SumRuleReport {
        let mut total = Cx::<T>::new(T::zero(), T::zero());
        let mut cosets = vec![Cx::<T>::new(T::zero(), T::zero()); self.digits.len()];
        for (k, c) in &self.coefficients {
            total += *c;
            let (i, _) = coset_decompose(k, &self.dilation, &self.digits, Sign::Plus)
                .expect("digit set covers every coset");
            cosets[i] += *c;
        }
        let pair = |z: Cx<T>| [to_f64(z.re), to_f64(z.im)];
        let m = self.dilation.m() as f64;
        let total_ok = (to_f64(total.re) - m).abs() <= tol * m && to_f64(total.im).abs() <= tol * m;
        let cosets_ok = cosets
            .iter()
            .all(|z| (to_f64(z.re) - 1.0).abs() <= tol && to_f64(z.im).abs() <= tol);
        SumRuleReport {
            total: pair(total),
            expected_total: m,
            coset_sums: cosets.into_iter().map(pair).collect(),
            total_ok,
            cosets_ok,
        }
    }

    /// `L_{ij} = c_{Mi - j}`.
    pub fn l_entry(&self, i: &Point, j: &Point) -> Cx<T> {
        self.coeff(&self.dilation.apply(i).sub(j))
    }

    /// `c_{Mi - j + d}`.
    pub fn l_entry_shifted(&self, i: &Point, j: &Point, d: &Point) -> Cx<T> {
        self.coeff(&self.dilation.apply(i).sub(j).add(d))
    }

    /// Nonzero entries of row `i` of `L`: pairs `(j, c_{Mi-j})`.
    pub fn l_row(&self, i: &Point) -> Vec<(Point, Cx<T>)> {
        let mi = self.dilation.apply(i);
        self.coefficients
            .iter()
            .map(|(k, c)| (mi.sub(k), *c))
            .collect()
    }
}

/// A finite section of `L` (or of its digit-shifted variant) over an ordered
/// index set.
#[derive(Clone, Debug)]
pub struct ScaleMatrix<T: Real> {
    pub index: Vec<Point>,
    pub entries: CMat<T>,
    pub digit_shift: Option<Point>,
    position: HashMap<Point, usize>,
}

impl<T: Real> ScaleMatrix<T> {
    fn assemble(index: Vec<Point>, entries: CMat<T>, digit_shift: Option<Point>) -> Self {
        let position = index
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        ScaleMatrix {
            index,
            entries,
            digit_shift,
            position,
        }
    }

    pub fn size(&self) -> usize {
        self.index.len()
    }

    pub fn position(&self, p: &Point) -> Option<usize> {
        self.position.get(p).copied()
    }

    /// Row-major CSV with a header listing the index set in order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let label = |p: &Point| {
            let parts: Vec<String> = p.0.iter().map(|v| v.to_string()).collect();
            if parts.len() == 1 {
                parts[0].clone()
            } else {
                format!("({})", parts.join(" "))
            }
        };
        let header: Vec<String> = self.index.iter().map(label).collect();
        writeln!(w, "index,{}", header.join(","))?;
        for (r, p) in self.index.iter().enumerate() {
            let row: Vec<String> = (0..self.size())
                .map(|c| format_complex(self.entries[(r, c)]))
                .collect();
            writeln!(w, "{},{}", label(p), row.join(","))?;
        }
        Ok(())
    }
}

/// `re` for real values, `re+imi` otherwise.
pub fn format_complex<T: Real>(z: Cx<T>) -> String {
    let (re, im) = (to_f64(z.re), to_f64(z.im));
    if im == 0.0 {
        format!("{re}")
    } else if im < 0.0 {
        format!("{re}{im}i")
    } else {
        format!("{re}+{im}i")
    }
}

/// `T = [c_{Mi-j}]_{i,j ∈ Ω}` with `Ω` in canonical order.
pub fn build_t<T: Real>(mask: &Mask<T>, omega: &[Point]) -> ScaleMatrix<T> {
    let index = order_points(omega.iter());
    let n = index.len();
    let entries = CMat::from_fn(n, n, |r, c| mask.l_entry(&index[r], &index[c]));
    ScaleMatrix::assemble(index, entries, None)
}

/// `(T)_d = [c_{Mi-j+d}]_{i,j ∈ Ω}`.
pub fn build_t_digit<T: Real>(mask: &Mask<T>, omega: &[Point], d: &Point) -> ScaleMatrix<T> {
    let index = order_points(omega.iter());
    let n = index.len();
    let entries = CMat::from_fn(n, n, |r, c| mask.l_entry_shifted(&index[r], &index[c], d));
    ScaleMatrix::assemble(index, entries, Some(d.clone()))
}
