//! The standard pipeline from a mask to grid values of `φ`.

use crate::admissible::{admissible_chain, omega_of, AdmissibleChain};
use crate::attractor::{adapted_norm, AdaptedNorm};
use crate::cascade::{eval_phi_grid, phi_lattice_values, GridOptions, PhiGrid};
use crate::error::Result;
use crate::lattice::Point;
use crate::scalar::{CVec, Real};
use crate::scale_matrix::{build_t, Mask, ScaleMatrix};
use crate::spectral::{eigen_jordan, JordanDecomposition, JordanOptions};

#[derive(Clone, Copy, Debug)]
pub struct AnalysisOptions {
    /// Grid resolution `r` (points `M^{-r} Γ`).
    pub resolution: usize,
    /// Sets appended to the chain after `Ω_{Λ'}`.
    pub n_extra: usize,
    pub jordan: JordanOptions,
    pub grid: GridOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            resolution: 8,
            n_extra: 4,
            jordan: JordanOptions::default(),
            grid: GridOptions::default(),
        }
    }
}

/// Everything derived from a mask that the later stages share. The scale
/// matrix and its Jordan data live on `Ω_{Λ'}`.
#[derive(Clone, Debug)]
pub struct Analysis<T: Real> {
    pub mask: Mask<T>,
    pub norm: AdaptedNorm<T>,
    pub chain: AdmissibleChain,
    pub t: ScaleMatrix<T>,
    pub jordan: JordanDecomposition<T>,
    /// `φ(k)` for `k` in `t.index`.
    pub lattice_values: CVec<T>,
    /// `Q ∩ Γ`.
    pub tile_points: Vec<Point>,
    pub grid: PhiGrid<T>,
    pub options: AnalysisOptions,
}

impl<T: Real> Analysis<T> {
    pub fn new(mask: Mask<T>, options: AnalysisOptions) -> Result<Self> {
        let norm = adapted_norm::<T>(&mask.dilation)?;
        let chain = admissible_chain(
            &mask.support(),
            &mask.dilation,
            &mask.digits,
            &norm,
            options.n_extra,
        );
        let t = build_t(&mask, chain.omega_prime());
        let jordan = eigen_jordan(&t, &options.jordan)?;
        let lattice_values = phi_lattice_values(&t, &jordan)?;
        let tile_points = omega_of(mask.digits.digits(), &mask.dilation, &norm);
        let grid = eval_phi_grid(
            &mask,
            chain.omega_prime(),
            &t.index,
            &lattice_values,
            &tile_points,
            options.resolution,
            options.grid,
        )?;
        Ok(Analysis {
            mask,
            norm,
            chain,
            t,
            jordan,
            lattice_values,
            tile_points,
            grid,
            options,
        })
    }

    /// Chain index of `Ω_{Λ'}`.
    pub fn source_index(&self) -> usize {
        self.chain.n0
    }

    /// Last chain index (the widest extension window).
    pub fn target_index(&self) -> usize {
        self.chain.len() - 1
    }
}
