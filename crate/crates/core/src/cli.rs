//! Problem files and the `analyze`, `eval` and `verify` commands.

use crate::accuracy::{accuracy_report, AccuracyReport};
use crate::analysis::{Analysis, AnalysisOptions};
use crate::attractor::{
    adapted_norm, attractor_cloud, tile_multiplicity, CloudOptions, MultiplicityStats,
};
use crate::error::{Error, Result};
use crate::expr;
use crate::homogeneous::{
    basis_columns, basis_from_jordan, class_test_points, evaluable_shifts, local_dimension,
    reconstruct_coeffs, reconstruction_residual, spectral_dimension, translate_columns,
    verify_class, zero_eigen_check, ElementReport, HomogeneousElement,
};
use crate::lattice::{DigitSet, Dilation, Lattice, Point};
use crate::scalar::{cre, CMat, Cx};
use crate::scale_matrix::{format_complex, Mask};
use crate::spectral::restrict;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// A real number given either literally or as an expression string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64> {
        match self {
            Scalar::Number(x) => Ok(*x),
            Scalar::Expr(s) => expr::eval(s),
        }
    }
}

/// A mask coefficient: a real scalar or `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(Scalar),
    Complex([Scalar; 2]),
}

impl Coefficient {
    pub fn value(&self) -> Result<Cx<f64>> {
        match self {
            Coefficient::Real(s) => Ok(cre(s.value()?)),
            Coefficient::Complex([re, im]) => Ok(Cx::new(re.value()?, im.value()?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskEntry {
    pub point: Vec<i64>,
    pub coeff: Coefficient,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_extra: Option<usize>,
    /// Relative tolerance for class residuals and polynomial fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Highest polynomial degree tried by the accuracy tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<usize>,
    /// Random points used by the tile multiplicity estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile_samples: Option<usize>,
    /// Depth of the attractor cloud for that estimate; the digit recursion
    /// runs twice as deep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile_depth: Option<usize>,
}

/// Contents of a problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// Lattice generators, one vector per entry; the standard lattice when
    /// omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Vec<Vec<f64>>>,
    /// Integer dilation matrix in lattice coordinates, by rows.
    pub dilation: Vec<Vec<i64>>,
    pub digits: Vec<Vec<i64>>,
    pub mask: Vec<MaskEntry>,
    #[serde(default)]
    pub options: ProblemOptions,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem specs serialize")
    }

    pub fn build_mask(&self) -> Result<Mask<f64>> {
        let dilation = Dilation::from_rows(&self.dilation)?;
        let d = dilation.dim();
        let lattice = match &self.lattice {
            None => Lattice::standard(d),
            Some(gens) => {
                if gens.len() != d || gens.iter().any(|g| g.len() != d) {
                    return Err(Error::InvalidProblem(format!(
                        "lattice must list {d} generators of length {d}"
                    )));
                }
                Lattice::new(DMatrix::from_fn(d, d, |i, j| gens[j][i]))?
            }
        };
        let digits = DigitSet::new(self.digits.iter().cloned().map(Point).collect(), &dilation)?;
        let coeffs = self
            .mask
            .iter()
            .map(|e| Ok((Point(e.point.clone()), e.coeff.value()?)))
            .collect::<Result<Vec<_>>>()?;
        Mask::new(coeffs, dilation, lattice, digits)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "refinery",
    version,
    about = "Analyse refinable functions on lattices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Spectrum, admissible chain, accuracy and a text summary.
    Analyze(Common),
    /// Grid values as CSV.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "phi")]
        what: What,
    },
    /// Runs the invariant suite and prints PASS/FAIL per check.
    Verify(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Problem file (JSON).
    pub spec: PathBuf,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub n_extra: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum What {
    Phi,
    Basis,
    Attractor,
}

/// Exit status of a command.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input, or a resource budget exceeded.
    Input(String),
    /// The mask violates a modelling assumption (no tile, degenerate 1).
    Model(String),
    /// An invariant check failed.
    Invariant(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Model(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Model(m) | Failure::Invariant(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DegenerateEigenvalue(_) | Error::IllConditioned { .. } => Failure::Model(msg),
            Error::NotInKernel { .. }
            | Error::WindowTooSmall(_)
            | Error::NoTestPoints
            | Error::SingularBasis(_)
            | Error::ZeroEigenvalue
            | Error::NotInTile { .. } => Failure::Invariant(msg),
            _ => Failure::Input(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Largest tolerated `|mean multiplicity - 1|`.
const TILE_TOL: f64 = 0.05;
const ALGEBRAIC_TOL: f64 = 1e-8;

/// Problem file merged with command-line overrides.
pub struct Problem {
    pub spec: ProblemSpec,
    pub mask: Mask<f64>,
    pub resolution: usize,
    pub n_extra: usize,
    pub tol: f64,
    pub seed: u64,
    pub s_max: usize,
    pub tile_samples: usize,
    pub tile_depth: usize,
}

impl Problem {
    pub fn load(common: &Common) -> Result<Self> {
        let spec = ProblemSpec::load(&common.spec)?;
        let mask = spec.build_mask()?;
        let o = &spec.options;
        let m = mask.dilation.m() as f64;
        let tile_depth = o
            .tile_depth
            .unwrap_or((16.0 / m.log2()).floor().max(1.0) as usize);
        Ok(Problem {
            resolution: common.resolution.or(o.resolution).unwrap_or(8),
            n_extra: common.n_extra.or(o.n_extra).unwrap_or(4),
            tol: common.tol.or(o.tol).unwrap_or(1e-6),
            seed: common.seed.or(o.seed).unwrap_or(0),
            s_max: o.s_max.unwrap_or(3),
            tile_samples: o.tile_samples.unwrap_or(10_000),
            tile_depth,
            spec,
            mask,
        })
    }

    pub fn tile_check(&self) -> Result<MultiplicityStats> {
        let norm = adapted_norm::<f64>(&self.mask.dilation)?;
        let cloud = attractor_cloud(
            self.mask.digits.digits(),
            self.tile_depth,
            &self.mask.dilation,
            &norm,
            CloudOptions {
                sample_seed: Some(self.seed),
                ..Default::default()
            },
        )?;
        Ok(tile_multiplicity(
            &cloud,
            &self.mask.dilation,
            &self.mask.digits,
            &norm,
            self.tile_samples,
            2 * self.tile_depth,
            self.seed,
        ))
    }

    pub fn analysis(&self) -> Result<Analysis<f64>> {
        Analysis::new(
            self.mask.clone(),
            AnalysisOptions {
                resolution: self.resolution,
                n_extra: self.n_extra,
                ..Default::default()
            },
        )
    }
}

fn tile_ok(s: &MultiplicityStats) -> bool {
    (s.mean - 1.0).abs() <= TILE_TOL
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Input(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn tile_line(s: &MultiplicityStats, depth: usize) -> String {
    format!(
        "tile multiplicity: mean {:.4} min {} max {} ({} samples, cloud depth {depth}, recursion depth {})",
        s.mean,
        s.min,
        s.max,
        s.samples,
        2 * depth
    )
}

pub fn summary_text(
    a: &Analysis<f64>,
    acc: &AccuracyReport,
    tile: &MultiplicityStats,
    depth: usize,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scale matrix size: {}", a.t.size());
    let _ = writeln!(out, "eigenvalues:");
    let _ = writeln!(out, "  {:<28} {:>5}  chains", "value", "mult");
    for c in &a.jordan.clusters {
        let _ = writeln!(
            out,
            "  {:<28} {:>5}  {:?}",
            format_complex(c.value),
            c.multiplicity,
            c.chain_lengths()
        );
    }
    let _ = writeln!(
        out,
        "local dimension: {}",
        local_dimension(&translate_columns(&a.grid), 1e-6)
    );
    let _ = writeln!(
        out,
        "spectral dimension (size minus zero multiplicity): {}",
        spectral_dimension(&a.jordan)
    );
    let _ = writeln!(out, "accuracy (necessary): {}", acc.kappa_necessary);
    let _ = writeln!(out, "accuracy (constructive): {}", acc.kappa_constructive);
    let _ = writeln!(out, "{}", tile_line(tile, depth));
    out
}

pub fn cmd_analyze(common: &Common) -> std::result::Result<(), Failure> {
    let p = Problem::load(common)?;
    fs::create_dir_all(&common.out_dir)?;
    let tile = p.tile_check()?;
    if !tile_ok(&tile) {
        let text = format!("{}\ntile check failed\n", tile_line(&tile, p.tile_depth));
        fs::write(common.out_dir.join("summary.txt"), &text)?;
        return Err(Failure::Model(format!(
            "digit set does not give a tile: mean multiplicity {:.4}",
            tile.mean
        )));
    }
    let a = p.analysis()?;
    let acc = accuracy_report(&a, p.s_max, p.tol)?;
    write_json(&common.out_dir.join("jordan.json"), &a.jordan.report())?;
    write_json(&common.out_dir.join("chain.json"), &a.chain)?;
    write_json(&common.out_dir.join("accuracy.json"), &acc)?;
    let text = summary_text(&a, &acc, &tile, p.tile_depth);
    fs::write(common.out_dir.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn element_reports(
    a: &Analysis<f64>,
    els: &[HomogeneousElement<f64>],
    tol: f64,
) -> Vec<ElementReport> {
    els.iter()
        .map(|e| {
            if e.lambda.norm() == 0.0 {
                e.report(None, Some(zero_eigen_check(&e.vector, &a.grid)))
            } else {
                let pts = class_test_points(a, e.order);
                e.report(verify_class(e, a, e.order, &pts, tol).ok(), None)
            }
        })
        .collect()
}

pub fn cmd_eval(common: &Common, what: What) -> std::result::Result<(), Failure> {
    let p = Problem::load(common)?;
    fs::create_dir_all(&common.out_dir)?;
    let lattice = &p.mask.lattice;
    let dil = &p.mask.dilation;
    match what {
        What::Phi => {
            let a = p.analysis()?;
            let f = fs::File::create(common.out_dir.join("phi.csv"))?;
            a.grid
                .to_grid_function()
                .write_csv(dil, lattice, BufWriter::new(f))?;
        }
        What::Basis => {
            let a = p.analysis()?;
            let els = basis_from_jordan(&a)?;
            let shifts = evaluable_shifts(&a);
            for (i, e) in els.iter().enumerate() {
                let g = if e.extension.is_some() {
                    e.grid_function(&a, &shifts)
                } else {
                    e.grid_function(&a, &[Point::zero(dil.dim())])
                };
                let f = fs::File::create(common.out_dir.join(format!("basis_{i}.csv")))?;
                g.write_csv(dil, lattice, BufWriter::new(f))?;
            }
            write_json(
                &common.out_dir.join("basis.json"),
                &element_reports(&a, &els, p.tol),
            )?;
        }
        What::Attractor => {
            let norm = adapted_norm::<f64>(dil)?;
            let cloud = attractor_cloud(
                p.mask.digits.digits(),
                p.resolution,
                dil,
                &norm,
                CloudOptions {
                    sample_seed: common.seed.or(p.spec.options.seed),
                    ..Default::default()
                },
            )?;
            let f = fs::File::create(common.out_dir.join("attractor.csv"))?;
            cloud.write_csv(lattice, BufWriter::new(f))?;
        }
    }
    Ok(())
}

/// One line of the invariant suite.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        ok,
        detail: detail.into(),
    }
}

fn bound(name: &str, value: f64, tol: f64) -> Check {
    check(name, value <= tol, format!("{value:.3e} <= {tol:.1e}"))
}

/// Invariants of every stage for one problem.
pub fn invariant_suite(p: &Problem, a: &Analysis<f64>) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for c in a.chain.verify(&a.mask.dilation) {
        out.push(check(format!("chain: {}", c.name), c.ok, c.detail));
    }
    let t = &a.t.entries;
    out.push(bound(
        "jordan: chain relations",
        a.jordan.chain_residual(t),
        ALGEBRAIC_TOL,
    ));
    out.push(bound(
        "jordan: similarity",
        a.jordan.similarity_residual(t),
        ALGEBRAIC_TOL,
    ));
    let scale = 1.0 + a.grid.max_abs();
    out.push(bound(
        "cascade: refinement equation",
        a.grid.refinement_residual(&a.mask),
        1e-9,
    ));
    let els = basis_from_jordan(a)?;
    let mut ext_worst = 0.0f64;
    let mut restrict_exact = true;
    for e in &els {
        if let Some(y) = &e.extension {
            ext_worst = ext_worst.max(y.window_residual(&a.mask));
            restrict_exact &= restrict(y, &a.t.index)? == e.vector;
        }
    }
    out.push(check(
        "extension: restriction round trip",
        restrict_exact,
        "exact",
    ));
    out.push(bound("extension: window residual", ext_worst, 1e-9));
    let mut homog = 0.0f64;
    for (i, phi) in a.grid.values.iter().enumerate() {
        if a.grid.boundary[i] {
            continue;
        }
        let h = &a.jordan.basis * phi;
        for e in &els {
            homog = homog.max((h[e.row] - e.on_tile[i]).norm());
        }
    }
    out.push(bound(
        "basis: equals B times translates",
        homog,
        1e-10 * scale,
    ));
    for e in &els {
        let name = format!("class: {} order {}", format_complex(e.lambda), e.order);
        if e.lambda.norm() == 0.0 {
            out.push(bound(
                &name,
                zero_eigen_check(&e.vector, &a.grid),
                ALGEBRAIC_TOL,
            ));
        } else {
            let pts = class_test_points(a, e.order);
            let c = verify_class(e, a, e.order, &pts, p.tol)?;
            out.push(bound(&name, c.at(e.order), p.tol));
        }
    }
    let dim_t = local_dimension(&translate_columns(&a.grid), 1e-6);
    let dim_b = local_dimension(&basis_columns(&a.grid, &els), 1e-6);
    out.push(check(
        "local dimension: translates vs basis",
        dim_t == dim_b,
        format!("{dim_t} vs {dim_b}"),
    ));
    let support_check = {
        let shifts = evaluable_shifts(a);
        let live: Vec<&HomogeneousElement<f64>> =
            els.iter().filter(|e| e.extension.is_some()).collect();
        if live.is_empty() {
            None
        } else {
            let grids: Vec<_> = live.iter().map(|e| e.grid_function(a, &shifts)).collect();
            let n = grids[0].values.len();
            let m = CMat::from_fn(n, live.len(), |r, c| grids[c].values[r]);
            Some((local_dimension(&m, 1e-9), live.len()))
        }
    };
    if let Some((rank, n)) = support_check {
        out.push(check(
            "basis: linear independence",
            rank == n,
            format!("rank {rank} of {n}"),
        ));
    }
    let delta = [(Point::zero(a.mask.dim()), cre(1.0))]
        .into_iter()
        .collect();
    let beta = reconstruct_coeffs(&delta, &a.jordan)?;
    out.push(bound(
        "reconstruction: generator",
        reconstruction_residual(&delta, &beta, &els, &a.grid),
        1e-10,
    ));
    let acc = accuracy_report(a, p.s_max, p.tol)?;
    out.push(check(
        "accuracy: constructive <= necessary",
        acc.kappa_constructive <= acc.kappa_necessary,
        format!("{} <= {}", acc.kappa_constructive, acc.kappa_necessary),
    ));
    out.push(check(
        "accuracy: eigenvalue containment",
        acc.containment.ok(),
        format!("missing {:?}", acc.containment.missing),
    ));
    if let Some(pu) = acc.partition_of_unity {
        out.push(bound("cascade: partition of unity", pu, ALGEBRAIC_TOL));
    }
    Ok(out)
}

fn print_check(c: &Check) {
    println!(
        "{} {}: {}",
        if c.ok { "PASS" } else { "FAIL" },
        c.name,
        c.detail
    );
}

pub fn cmd_verify(common: &Common) -> std::result::Result<(), Failure> {
    let p = Problem::load(common)?;
    let tile = p.tile_check()?;
    let tile_check = check(
        "tile multiplicity",
        tile_ok(&tile),
        tile_line(&tile, p.tile_depth),
    );
    print_check(&tile_check);
    if !tile_check.ok {
        return Err(Failure::Model("digit set does not give a tile".into()));
    }
    let a = p.analysis()?;
    let checks = invariant_suite(&p, &a)?;
    let mut failed = Vec::new();
    for c in &checks {
        print_check(c);
        if !c.ok {
            failed.push(c.name.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(format!("failed: {}", failed.join("; "))))
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let res = match &cli.command {
        Command::Analyze(c) => cmd_analyze(c),
        Command::Eval { common, what } => cmd_eval(common, *what),
        Command::Verify(c) => cmd_verify(c),
    };
    match res {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}
