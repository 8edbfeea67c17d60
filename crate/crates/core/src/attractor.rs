//! Attractors `K_H = Σ_{j≥1} M^{-j} H`, the tile `Q = K_D`, and a numerical
//! check of the tile property.

use crate::error::{Error, Result};
use crate::lattice::{DigitSet, Dilation, Lattice, Point};
use crate::linalg::real_eigenvalues;
use crate::scalar::{cabs, real, to_f64, Real};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use std::io::Write;

/// A norm in which `M^{-1}` is a strict contraction:
/// `‖x‖_* = max_{0≤i<p} c^i ‖M^{-i} x‖_2`, with `‖M^{-1} x‖_* ≤ θ ‖x‖_*`.
#[derive(Clone, Debug)]
pub struct AdaptedNorm<T: Real> {
    power: usize,
    scale: T,
    theta: T,
    inverse_powers: Vec<DMatrix<T>>,
}

impl<T: Real> AdaptedNorm<T> {
    pub fn power(&self) -> usize {
        self.power
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// Contraction factor `θ < 1`.
    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn norm(&self, x: &[T]) -> T {
        let mut best = T::zero();
        let mut ci = T::one();
        for m in &self.inverse_powers {
            let v = m * nalgebra::DVector::from_column_slice(x);
            let n = ci * v.norm();
            if n > best {
                best = n;
            }
            ci *= self.scale;
        }
        best
    }

    pub fn norm_point(&self, p: &Point) -> T {
        self.norm(&p.to_real::<T>())
    }
}

/// Builds the adapted norm for a dilation.
///
/// `p` is the smallest power with `‖M^{-p}‖_2 < 1`; with `c = ‖M^{-p}‖_2^{-1/p}`
/// the contraction factor is `θ = ‖M^{-p}‖_2^{1/p}`.
pub fn adapted_norm<T: Real>(dilation: &Dilation) -> Result<AdaptedNorm<T>> {
    let m = dilation.to_real::<T>();
    let min_mod = real_eigenvalues(&m)
        .into_iter()
        .map(cabs)
        .fold(real::<T>(f64::INFINITY), |a, b| if b < a { b } else { a });
    let rho_inv = T::one() / min_mod;
    if rho_inv >= T::one() - real::<T>(1e-12) {
        return Err(Error::NotExpansive(to_f64(rho_inv)));
    }
    let inv = dilation.inverse_real::<T>();
    let mut powers = vec![DMatrix::identity(dilation.dim(), dilation.dim())];
    let mut cur = inv.clone();
    for p in 1..=100_000usize {
        let n = cur.clone().svd(false, false).singular_values.max();
        if n < T::one() {
            let theta = n.powf(T::one() / real::<T>(p as f64));
            return Ok(AdaptedNorm {
                power: p,
                scale: T::one() / theta,
                theta,
                inverse_powers: powers,
            });
        }
        powers.push(cur.clone());
        cur = &cur * &inv;
    }
    Err(Error::NotExpansive(to_f64(rho_inv)))
}

/// Finite approximation of an attractor at depth `r`.
#[derive(Clone, Debug)]
pub struct AttractorCloud<T: Real> {
    /// Integer numerators `η`, the cloud points being `M^{-depth} η`.
    pub numerators: Vec<Point>,
    /// Points in real lattice coordinates.
    pub points: Vec<Vec<T>>,
    pub depth: usize,
    /// Every point of the attractor lies within this distance (adapted norm)
    /// of the cloud, and vice versa.
    pub hausdorff_bound: T,
    /// True when the cloud is a uniform sample of digit strings.
    pub sampled: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct CloudOptions {
    /// Maximum number of cloud points.
    pub cap: usize,
    /// Sample digit strings uniformly (with this seed) when the cap is hit.
    pub sample_seed: Option<u64>,
}

impl Default for CloudOptions {
    fn default() -> Self {
        CloudOptions {
            cap: 1 << 22,
            sample_seed: None,
        }
    }
}

/// Depth-`r` partial sums `Σ_{j=1}^r M^{-j} h_j`, `h_j ∈ H`.
///
/// Points are deduplicated exactly on their integer numerators.
pub fn attractor_cloud<T: Real>(
    h: &[Point],
    r: usize,
    dilation: &Dilation,
    norm: &AdaptedNorm<T>,
    opts: CloudOptions,
) -> Result<AttractorCloud<T>> {
    assert!(!h.is_empty(), "attractor of an empty set");
    assert!(r >= 1, "depth must be at least 1");
    let radius = h
        .iter()
        .map(|p| norm.norm_point(p))
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let theta = norm.theta();
    let hausdorff_bound = radius * theta.powi(r as i32) / (T::one() - theta);

    let mut level: Vec<Point> = h.to_vec();
    level.sort();
    level.dedup();
    let mut sampled = false;
    for step in 1..r {
        let mut next = HashSet::with_capacity(level.len() * h.len());
        for g in &level {
            let mg = dilation.apply(g);
            for hh in h {
                next.insert(mg.add(hh));
            }
            if next.len() > opts.cap {
                break;
            }
        }
        if next.len() > opts.cap {
            match opts.sample_seed {
                Some(seed) => {
                    level = sample_strings(h, r, dilation, opts.cap, seed);
                    sampled = true;
                    break;
                }
                None => {
                    return Err(Error::BudgetExceeded {
                        what: "attractor cloud",
                        needed: (h.len() as u128).saturating_pow((step + 1) as u32),
                        cap: opts.cap as u128,
                    })
                }
            }
        }
        level = next.into_iter().collect();
    }
    level.sort();
    let points = level
        .par_iter()
        .map(|p| dilation.contract::<T>(p, r))
        .collect();
    Ok(AttractorCloud {
        numerators: level,
        points,
        depth: r,
        hausdorff_bound,
        sampled,
    })
}

fn sample_strings(
    h: &[Point],
    r: usize,
    dilation: &Dilation,
    count: usize,
    seed: u64,
) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = HashSet::with_capacity(count);
    for _ in 0..count {
        let mut acc = Point::zero(dilation.dim());
        for _ in 0..r {
            acc = dilation.apply(&acc).add(&h[rng.random_range(0..h.len())]);
        }
        out.insert(acc);
    }
    out.into_iter().collect()
}

impl<T: Real> AttractorCloud<T> {
    /// Writes one row per point with embedded coordinates `x_1..x_d`.
    pub fn write_csv<W: Write>(&self, lattice: &Lattice<T>, mut w: W) -> std::io::Result<()> {
        let d = lattice.dim();
        let header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for p in &self.points {
            let x = lattice.embed(p);
            let row: Vec<String> = x.iter().map(|v| format!("{}", to_f64(*v))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Covering multiplicity statistics of `{Q + k}`.
#[derive(Clone, Debug, Serialize)]
pub struct MultiplicityStats {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    pub samples: usize,
}

/// Uniform grid hash over cloud points for radius queries.
struct CloudIndex<'a, T: Real> {
    cell: T,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    points: &'a [Vec<T>],
}

impl<'a, T: Real> CloudIndex<'a, T> {
    fn new(points: &'a [Vec<T>], cell: T) -> Self {
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        CloudIndex {
            cell,
            buckets,
            points,
        }
    }

    fn key(p: &[T], cell: T) -> Vec<i64> {
        p.iter()
            .map(|&x| to_f64((x / cell).floor()) as i64)
            .collect()
    }

    fn within(&self, q: &[T], radius: T) -> bool {
        let base = Self::key(q, self.cell);
        let d = base.len();
        let r2 = radius * radius;
        let mut offset = vec![-1i64; d];
        loop {
            let key: Vec<i64> = base.iter().zip(&offset).map(|(a, b)| a + b).collect();
            if let Some(ids) = self.buckets.get(&key) {
                for &i in ids {
                    let dist2 = self.points[i]
                        .iter()
                        .zip(q)
                        .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b));
                    if dist2 <= r2 {
                        return true;
                    }
                }
            }
            let mut k = 0;
            while k < d {
                offset[k] += 1;
                if offset[k] <= 1 {
                    break;
                }
                offset[k] = -1;
                k += 1;
            }
            if k == d {
                return false;
            }
        }
    }
}

/// Estimates the covering multiplicity of the lattice translates of `Q`.
///
/// For each random `x` in the unit cell, a translate `Q + k` is counted when
/// `x - k` survives `refine_depth` rounds of the digit recursion
/// `z ↦ M z - d` (a point of `Q` always has a child in `Q`, which stays in
/// the bounding ball) and the surviving leaves lie within the cloud's
/// Hausdorff bound of the depth-`r` cloud.
pub fn tile_multiplicity<T: Real>(
    q_cloud: &AttractorCloud<T>,
    dilation: &Dilation,
    digits: &DigitSet,
    norm: &AdaptedNorm<T>,
    sample_count: usize,
    refine_depth: usize,
    seed: u64,
) -> MultiplicityStats {
    let d = dilation.dim();
    let bound = q_cloud.hausdorff_bound;
    let slack = real::<T>(1e-9);
    let cloud_radius = q_cloud
        .points
        .iter()
        .map(|p| norm.norm(p))
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let digit_radius = digits
        .digits()
        .iter()
        .map(|p| norm.norm_point(p))
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let theta = norm.theta();
    let series_radius = digit_radius * theta / (T::one() - theta);
    let rho = {
        let c = cloud_radius + bound;
        (if c < series_radius { c } else { series_radius }) * (T::one() + slack) + slack
    };
    let leaf_radius = bound * (T::one() + slack) + slack;
    let cell = if leaf_radius > real::<T>(1e-12) {
        leaf_radius
    } else {
        real::<T>(1e-12)
    };
    let index = CloudIndex::new(&q_cloud.points, cell);

    let m = dilation.to_real::<T>();
    let digit_real: Vec<Vec<T>> = digits.digits().iter().map(|p| p.to_real()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<T>> = (0..sample_count)
        .map(|_| (0..d).map(|_| real::<T>(rng.random::<f64>())).collect())
        .collect();

    let member = |y: Vec<T>| -> bool {
        if norm.norm(&y) > rho {
            return false;
        }
        let mut states = vec![y];
        for _ in 0..refine_depth {
            let mut next = Vec::new();
            for z in &states {
                let mz: Vec<T> = (0..d)
                    .map(|i| (0..d).fold(T::zero(), |acc, j| acc + m[(i, j)] * z[j]))
                    .collect();
                for dg in &digit_real {
                    let c: Vec<T> = mz.iter().zip(dg).map(|(a, b)| *a - *b).collect();
                    if norm.norm(&c) <= rho {
                        next.push(c);
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            states = next;
        }
        states.iter().any(|z| index.within(z, leaf_radius))
    };

    let counts: Vec<usize> = samples
        .par_iter()
        .map(|x| {
            let lo: Vec<i64> = x.iter().map(|&v| to_f64((v - rho).ceil()) as i64).collect();
            let hi: Vec<i64> = x
                .iter()
                .map(|&v| to_f64((v + rho).floor()) as i64)
                .collect();
            let mut count = 0;
            let mut k = lo.clone();
            loop {
                let y: Vec<T> = x
                    .iter()
                    .zip(&k)
                    .map(|(a, b)| *a - real::<T>(*b as f64))
                    .collect();
                if member(y) {
                    count += 1;
                }
                let mut i = 0;
                while i < d {
                    k[i] += 1;
                    if k[i] <= hi[i] {
                        break;
                    }
                    k[i] = lo[i];
                    i += 1;
                }
                if i == d {
                    break;
                }
            }
            count
        })
        .collect();

    let total: usize = counts.iter().sum();
    MultiplicityStats {
        mean: if counts.is_empty() {
            0.0
        } else {
            total as f64 / counts.len() as f64
        },
        min: counts.iter().copied().min().unwrap_or(0),
        max: counts.iter().copied().max().unwrap_or(0),
        samples: counts.len(),
    }
}

/// Hausdorff distance (Euclidean, lattice coordinates) between two finite
/// point sets, by brute force.
pub fn hausdorff_distance<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    let directed = |x: &[Vec<T>], y: &[Vec<T>]| -> T {
        x.iter()
            .map(|p| {
                y.iter()
                    .map(|q| {
                        p.iter()
                            .zip(q)
                            .fold(T::zero(), |acc, (u, v)| acc + (*u - *v) * (*u - *v))
                            .sqrt()
                    })
                    .fold(real::<T>(f64::INFINITY), |s, t| if t < s { t } else { s })
            })
            .fold(T::zero(), |s, t| if t > s { t } else { s })
    };
    let ab = directed(a, b);
    let ba = directed(b, a);
    if ab > ba {
        ab
    } else {
        ba
    }
}
