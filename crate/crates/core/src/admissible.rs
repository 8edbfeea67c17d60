//! Lattice points of attractors and chains of admissible index sets.

use crate::attractor::AdaptedNorm;
use crate::lattice::{order_points, DigitSet, Dilation, Point};
use crate::scalar::{to_f64, Real};
use serde::Serialize;
use std::collections::BTreeSet;

/// `w_H(S) ∩ Γ = M^{-1}(S + H) ∩ Γ`.
pub fn contract_step(s: &BTreeSet<Point>, h: &[Point], dilation: &Dilation) -> BTreeSet<Point> {
    let mut out = BTreeSet::new();
    for a in s {
        for b in h {
            if let Some(q) = dilation.try_div(&a.add(b)) {
                out.insert(q);
            }
        }
    }
    out
}

/// Lattice points with adapted norm at most `radius`.
pub fn lattice_ball<T: Real>(radius: T, dim: usize, norm: &AdaptedNorm<T>) -> BTreeSet<Point> {
    // ‖x‖_2 ≤ ‖x‖_*, so the ball sits inside the coordinate box of the same radius.
    let bound = to_f64(radius).floor().max(0.0) as i64;
    let mut out = BTreeSet::new();
    let mut k = vec![-bound; dim];
    loop {
        let p = Point(k.clone());
        if norm.norm_point(&p) <= radius {
            out.insert(p);
        }
        let mut i = 0;
        while i < dim {
            k[i] += 1;
            if k[i] <= bound {
                break;
            }
            k[i] = -bound;
            i += 1;
        }
        if i == dim {
            return out;
        }
    }
}

/// `ε = max_h ‖h‖_* (1 + 1e-6)`.
fn spread<T: Real>(h: &[Point], norm: &AdaptedNorm<T>) -> T {
    let m = h
        .iter()
        .map(|p| norm.norm_point(p))
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    m * crate::scalar::real::<T>(1.0 + 1e-6)
}

/// Radius of a ball mapped into itself by `w_H`, slightly above `ε/(1/θ - 1)`.
fn seed_radius<T: Real>(eps: T, norm: &AdaptedNorm<T>) -> T {
    let delta0 = eps / (T::one() / norm.theta() - T::one());
    delta0 * crate::scalar::real::<T>(1.01)
}

/// Distinct sets of the decreasing iteration `S_{j+1} = w_H(S_j) ∩ Γ`
/// starting from `start`, ending at the greatest fixed point.
fn descend(start: BTreeSet<Point>, h: &[Point], dilation: &Dilation) -> Vec<BTreeSet<Point>> {
    let mut seq = vec![start];
    loop {
        let last = seq.last().expect("nonempty");
        let next: BTreeSet<Point> = contract_step(last, h, dilation)
            .intersection(last)
            .cloned()
            .collect();
        if &next == last {
            return seq;
        }
        seq.push(next);
    }
}

/// `Ω_H = K_H ∩ Γ`, as the greatest fixed point of `S ↦ M^{-1}(S + H) ∩ Γ`.
pub fn omega_of<T: Real>(h: &[Point], dilation: &Dilation, norm: &AdaptedNorm<T>) -> Vec<Point> {
    assert!(!h.is_empty(), "omega of an empty set");
    let eps = spread(h, norm);
    let ball = lattice_ball(seed_radius(eps, norm), dilation.dim(), norm);
    let seq = descend(ball, h, dilation);
    order_points(seq.last().expect("nonempty").iter())
}

/// Whether `M^{-1}(Ω + H) ∩ Γ ⊆ Ω`.
pub fn is_admissible(omega: &[Point], h: &[Point], dilation: &Dilation) -> bool {
    let set: BTreeSet<Point> = omega.iter().cloned().collect();
    contract_step(&set, h, dilation).is_subset(&set)
}

/// Strictly increasing chain `Ω_0 ⊂ … ⊂ Ω_N` of `Λ`-admissible sets with
/// `w_Λ(Ω_{i+1}) ∩ Γ ⊆ Ω_i`, passing through `Ω_{Λ'}` at index `n0`.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibleChain {
    /// Each set in canonical point order.
    pub sets: Vec<Vec<Point>>,
    pub n0: usize,
    pub h: Vec<Point>,
    pub h_prime: Vec<Point>,
}

/// Outcome of one invariant check.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

/// `Λ - D`.
pub fn difference_set(lambda: &[Point], digits: &DigitSet) -> Vec<Point> {
    let mut out = BTreeSet::new();
    for l in lambda {
        for d in digits.digits() {
            out.insert(l.sub(d));
        }
    }
    order_points(out.iter())
}

/// Builds the chain from `Ω_Λ` up to `Ω_{Λ'}` and then `n_extra` further
/// sets: first the intermediate sets of the `Λ'` fixed-point iteration, then
/// adapted-norm balls of radius `δ_{n+1} = δ_n/θ - ε`.
pub fn admissible_chain<T: Real>(
    lambda: &[Point],
    dilation: &Dilation,
    digits: &DigitSet,
    norm: &AdaptedNorm<T>,
    n_extra: usize,
) -> AdmissibleChain {
    assert!(!lambda.is_empty(), "empty mask support");
    let h_prime = difference_set(lambda, digits);
    let eps = spread(&h_prime, norm);
    let mut delta = seed_radius(eps, norm);
    let ball = lattice_ball(delta, dilation.dim(), norm);
    let outer = descend(ball, &h_prime, dilation);
    let omega_prime = outer.last().expect("nonempty").clone();
    let inner = descend(omega_prime, lambda, dilation);

    let mut sets: Vec<BTreeSet<Point>> = inner.into_iter().rev().collect();
    let n0 = sets.len() - 1;
    let mut remaining = n_extra;
    for s in outer.into_iter().rev().skip(1) {
        if remaining == 0 {
            break;
        }
        sets.push(s);
        remaining -= 1;
    }
    while remaining > 0 {
        delta = delta / norm.theta() - eps;
        let ball = lattice_ball(delta, dilation.dim(), norm);
        if ball.len() > sets.last().expect("nonempty").len() {
            sets.push(ball);
            remaining -= 1;
        }
    }
    AdmissibleChain {
        sets: sets.iter().map(|s| order_points(s.iter())).collect(),
        n0,
        h: order_points(lambda.iter()),
        h_prime,
    }
}

impl AdmissibleChain {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, i: usize) -> &[Point] {
        &self.sets[i]
    }

    pub fn last(&self) -> &[Point] {
        self.sets.last().expect("nonempty chain")
    }

    /// `Ω_{Λ'}`.
    pub fn omega_prime(&self) -> &[Point] {
        &self.sets[self.n0]
    }

    /// Checks every chain invariant.
    pub fn verify(&self, dilation: &Dilation) -> Vec<InvariantCheck> {
        let as_set = |v: &[Point]| -> BTreeSet<Point> { v.iter().cloned().collect() };
        let mut out = Vec::new();

        let bad: Vec<usize> = (0..self.len())
            .filter(|&i| !is_admissible(&self.sets[i], &self.h, dilation))
            .collect();
        out.push(InvariantCheck {
            name: "admissible".into(),
            ok: bad.is_empty(),
            detail: format!("sets failing: {bad:?}"),
        });

        let bad: Vec<usize> = (0..self.len().saturating_sub(1))
            .filter(|&i| {
                let image = contract_step(&as_set(&self.sets[i + 1]), &self.h, dilation);
                !image.is_subset(&as_set(&self.sets[i]))
            })
            .collect();
        out.push(InvariantCheck {
            name: "contraction into predecessor".into(),
            ok: bad.is_empty(),
            detail: format!("pairs failing: {bad:?}"),
        });

        let bad: Vec<usize> = (0..self.len().saturating_sub(1))
            .filter(|&i| {
                let a = as_set(&self.sets[i]);
                let b = as_set(&self.sets[i + 1]);
                !(a.is_subset(&b) && a.len() < b.len())
            })
            .collect();
        out.push(InvariantCheck {
            name: "strict inclusion".into(),
            ok: bad.is_empty(),
            detail: format!("pairs failing: {bad:?}"),
        });

        let bad: Vec<usize> = (self.n0..self.len())
            .filter(|&i| !is_admissible(&self.sets[i], &self.h_prime, dilation))
            .collect();
        out.push(InvariantCheck {
            name: "difference-set admissible beyond n0".into(),
            ok: bad.is_empty(),
            detail: format!("sets failing: {bad:?}"),
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractor::{adapted_norm, attractor_cloud, CloudOptions};

    fn pts(v: &[i64]) -> Vec<Point> {
        order_points(v.iter().map(|&k| Point(vec![k])).collect::<Vec<_>>().iter())
    }

    fn dyadic() -> (Dilation, DigitSet, AdaptedNorm<f64>) {
        let a = Dilation::from_rows(&[vec![2]]).unwrap();
        let d = DigitSet::standard_1d(&a).unwrap();
        let n = adapted_norm::<f64>(&a).unwrap();
        (a, d, n)
    }

    #[test]
    fn omega_examples() {
        let (a, _, n) = dyadic();
        assert_eq!(omega_of(&pts(&[0, 1, 2, 3]), &a, &n), pts(&[0, 1, 2, 3]));
        assert_eq!(
            omega_of(&pts(&[-1, 0, 1, 2, 3]), &a, &n),
            pts(&[-1, 0, 1, 2, 3])
        );
        assert_eq!(omega_of(&pts(&[0]), &a, &n), pts(&[0]));
    }

    #[test]
    fn admissibility_examples() {
        let (a, _, _) = dyadic();
        let h = pts(&[0, 1, 2, 3]);
        assert!(is_admissible(&pts(&[0, 1, 2, 3]), &h, &a));
        assert!(!is_admissible(&pts(&[0, 1]), &h, &a));
        // admissible for a superset implies admissible for the subset
        let hp = pts(&[-1, 0, 1, 2, 3]);
        assert!(is_admissible(&pts(&[-1, 0, 1, 2, 3]), &hp, &a));
        assert!(is_admissible(&pts(&[-1, 0, 1, 2, 3]), &h, &a));
    }

    #[test]
    fn chain_examples() {
        let (a, d, n) = dyadic();
        let c = admissible_chain(&pts(&[0, 1, 2, 3]), &a, &d, &n, 0);
        assert_eq!(c.set(0), &pts(&[0, 1, 2, 3])[..]);
        assert_eq!(c.omega_prime(), &pts(&[-1, 0, 1, 2, 3])[..]);
        assert!(c.n0 >= 1);
        assert_eq!(c.len(), c.n0 + 1);

        let c = admissible_chain(&pts(&[0, 1]), &a, &d, &n, 0);
        assert_eq!(c.set(0), &pts(&[0, 1])[..]);
        assert_eq!(c.omega_prime(), &pts(&[-1, 0, 1])[..]);
    }

    #[test]
    fn chain_invariants_and_growth() {
        let (a, d, n) = dyadic();
        let c = admissible_chain(&pts(&[0, 1, 2, 3]), &a, &d, &n, 12);
        assert_eq!(c.len(), c.n0 + 13);
        for check in c.verify(&a) {
            assert!(check.ok, "{check:?}");
        }
        let last = c.last();
        assert!(last.iter().any(|p| p.0[0] <= -10) && last.iter().any(|p| p.0[0] >= 10));

        let q = Dilation::from_rows(&[vec![1, 1], vec![-1, 1]]).unwrap();
        let dq = DigitSet::new(vec![Point(vec![0, 0]), Point(vec![1, 0])], &q).unwrap();
        let nq = adapted_norm::<f64>(&q).unwrap();
        let lambda: Vec<Point> = [[0, 0], [1, 0], [0, 1], [1, 1]]
            .iter()
            .map(|v| Point(v.to_vec()))
            .collect();
        let c = admissible_chain(&lambda, &q, &dq, &nq, 6);
        for check in c.verify(&q) {
            assert!(check.ok, "{check:?}");
        }
    }

    #[test]
    fn omega_contains_cloud_lattice_points() {
        let q = Dilation::from_rows(&[vec![1, 1], vec![-1, 1]]).unwrap();
        let nq = adapted_norm::<f64>(&q).unwrap();
        let h: Vec<Point> = [[0, 0], [1, 0], [0, 1], [-1, 1]]
            .iter()
            .map(|v| Point(v.to_vec()))
            .collect();
        let omega: BTreeSet<Point> = omega_of(&h, &q, &nq).into_iter().collect();
        assert!(is_admissible(
            &omega.iter().cloned().collect::<Vec<_>>(),
            &h,
            &q
        ));
        let r = 10;
        let cloud = attractor_cloud(&h, r, &q, &nq, CloudOptions::default()).unwrap();
        // exact lattice points of the cloud: numerators divisible by M^r
        let mr = q.matrix().pow(r);
        let mr_dil = Dilation::new(mr).unwrap();
        for eta in &cloud.numerators {
            if let Some(k) = mr_dil.try_div(eta) {
                assert!(omega.contains(&k), "{k:?}");
            }
        }
    }
}
