//! Exact enumeration of activation regions and decision-boundary pieces inside a
//! bounded window, and the grid-gradient approximation.
//!
//! The exact counter sweeps the network unit by unit. Every live region carries the
//! inequality system that defines it and the affine map computed by the layers
//! processed so far; for each feature of the next unit, the region is intersected
//! with the set where that feature beats all others by at least `margin`, and the
//! feasible pieces replace the parent.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::InitSpec;
use crate::feas::{is_feasible, prune_redundant, FeasOptions, InequalitySystem, Row};
use crate::net::{AffineMap, Network};
use crate::scalar::{dot, Scalar};

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Window(Vec<(f64, f64)>);

impl Window {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("window needs at least one interval"));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!("window interval {i} is [{lo}, {hi}]")));
            }
        }
        Ok(Window(bounds))
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Window::new(vec![(lo, hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn center<T: Scalar>(&self) -> Vec<T> {
        self.0.iter().map(|&(lo, hi)| T::of(0.5 * (lo + hi))).collect()
    }

    /// The `2 · dim` rows `x_i ≤ hi_i`, `−x_i ≤ −lo_i`.
    pub fn rows<T: Scalar>(&self) -> Vec<Row<T>> {
        let d = self.dim();
        let mut rows = Vec::with_capacity(2 * d);
        for (i, &(lo, hi)) in self.0.iter().enumerate() {
            let mut a = vec![T::zero(); d];
            a[i] = T::one();
            rows.push(Row::le(a.clone(), T::of(hi)));
            a[i] = -T::one();
            rows.push(Row::le(a, T::of(-lo)));
        }
        rows
    }

    /// Replicate a single interval up to `dim` coordinates; other lengths must match.
    pub fn fit_to(&self, dim: usize) -> Result<Window> {
        match self.dim() {
            d if d == dim => Ok(self.clone()),
            1 => Window::new(vec![self.0[0]; dim]),
            d => Err(Error::invalid(format!("window has {d} intervals, input dimension is {dim}"))),
        }
    }

    fn check_dim(&self, n0: usize) -> Result<()> {
        if self.dim() != n0 {
            return Err(Error::Shape {
                what: "window",
                layer: None,
                unit: None,
                expected: n0,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<(f64, f64)>> for Window {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        Window::new(v)
    }
}

impl From<Window> for Vec<(f64, f64)> {
    fn from(w: Window) -> Self {
        w.0
    }
}

/// Parses `lo:hi[,lo:hi…]`.
impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |part: &str| -> Result<(f64, f64)> {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("window interval `{part}` is not lo:hi")))?;
            let num = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad number `{t}` in window")))
            };
            Ok((num(lo)?, num(hi)?))
        };
        Window::new(s.split(',').map(parse).collect::<Result<_>>()?)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (lo, hi)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{lo}:{hi}")?;
        }
        Ok(())
    }
}

/// An activation region (possibly partial: only units processed so far are fixed).
#[derive(Clone, Debug)]
pub struct Region<T> {
    /// Selected feature per processed unit, layer-major.
    pub pattern: Vec<usize>,
    pub sys: InequalitySystem<T>,
    /// Map from the input to the output of the last completed layer.
    pub layer_map: AffineMap<T>,
    /// Selected features of the layer in progress, pulled back to the input.
    pub next_layer_rows: Vec<(Vec<T>, T)>,
    /// A point satisfying `sys`.
    pub witness: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub regions: u64,
    pub db_pieces: Option<u64>,
    pub lp_calls: u64,
    /// Feasibility checks that broke down and were counted as feasible.
    #[serde(default)]
    pub lp_breakdowns: u64,
    pub wall_time_s: f64,
    pub seed: Option<u64>,
    pub window: Window,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumOptions {
    /// Strict inequalities are realized as `≤ … − margin`.
    pub margin: f64,
    pub feas: FeasOptions,
    /// Remove redundant rows from every new region's system.
    pub prune: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            margin: 1e-6,
            feas: FeasOptions::default(),
            prune: false,
        }
    }
}

impl EnumOptions {
    pub fn for_scalar<T: Scalar>() -> Self {
        EnumOptions {
            feas: FeasOptions::for_scalar::<T>(),
            ..Self::default()
        }
    }
}

/// Result of a full sweep.
#[derive(Clone, Debug)]
pub struct Enumeration<T> {
    pub report: CountReport,
    pub regions: Vec<Region<T>>,
    /// Region count after each processed unit.
    pub trace: Vec<usize>,
}

#[derive(Default)]
struct Tally {
    lp_calls: u64,
    breakdowns: u64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.lp_calls += o.lp_calls;
        self.breakdowns += o.breakdowns;
    }
}

/// Feasibility check that never fails: numerical breakdown counts as feasible.
fn check<T: Scalar>(sys: &InequalitySystem<T>, fallback: &[T], opts: &EnumOptions, tally: &mut Tally) -> Option<Vec<T>> {
    tally.lp_calls += 1;
    match is_feasible(sys, &opts.feas) {
        Ok(r) => r.witness,
        Err(e) => {
            log::warn!("treating region as feasible after solver failure: {e}");
            tally.breakdowns += 1;
            Some(fallback.to_vec())
        }
    }
}

fn split_region<T: Scalar>(
    region: &Region<T>,
    unit: &[crate::net::Feature<T>],
    opts: &EnumOptions,
) -> Result<(Vec<Region<T>>, Tally)> {
    let mut tally = Tally::default();
    let margin = T::of(opts.margin);
    let pulled: Vec<(Vec<T>, T)> = unit.iter().map(|f| region.layer_map.pull_back(&f.w, f.b)).collect();
    let mut children = Vec::new();
    for (j0, (gj, hj)) in pulled.iter().enumerate() {
        let rows: Vec<Row<T>> = pulled
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j0)
            .map(|(_, (gi, hi))| {
                let a = gi.iter().zip(gj).map(|(&p, &q)| p - q).collect();
                Row::le(a, *hj - *hi - margin)
            })
            .collect();
        let holds_at_parent = rows.iter().all(|r| dot(&r.a, &region.witness) <= r.b);
        let mut sys = region.sys.with_rows(rows)?;
        let witness = if holds_at_parent {
            Some(region.witness.clone())
        } else {
            check(&sys, &region.witness, opts, &mut tally)
        };
        let Some(witness) = witness else { continue };
        if opts.prune && !holds_at_parent {
            sys = prune_redundant(&sys, T::zero(), &opts.feas)?;
        }
        let mut pattern = region.pattern.clone();
        pattern.push(j0);
        let mut next_layer_rows = region.next_layer_rows.clone();
        next_layer_rows.push((gj.clone(), *hj));
        children.push(Region {
            pattern,
            sys,
            layer_map: region.layer_map.clone(),
            next_layer_rows,
            witness,
        });
    }
    Ok((children, tally))
}

/// Enumerate every activation region meeting the window.
pub fn enumerate_regions<T: Scalar>(net: &Network<T>, window: &Window, opts: &EnumOptions) -> Result<Enumeration<T>> {
    let start = Instant::now();
    let arch = net.arch();
    window.check_dim(arch.n0)?;
    let root = Region {
        pattern: Vec::new(),
        sys: InequalitySystem::new(arch.n0).with_rows(window.rows())?,
        layer_map: AffineMap::identity(arch.n0),
        next_layer_rows: Vec::new(),
        witness: window.center(),
    };
    let mut regions = vec![root];
    let mut tally = Tally::default();
    let mut trace = Vec::with_capacity(arch.total_units());
    for layer in &net.params().hidden {
        for unit in layer {
            let parts: Vec<(Vec<Region<T>>, Tally)> = regions
                .par_iter()
                .map(|r| split_region(r, unit, opts))
                .collect::<Result<_>>()?;
            regions = Vec::with_capacity(parts.iter().map(|p| p.0.len()).sum());
            for (children, t) in parts {
                tally.add(&t);
                regions.extend(children);
            }
            trace.push(regions.len());
        }
        for r in &mut regions {
            r.layer_map = AffineMap::from_rows(arch.n0, std::mem::take(&mut r.next_layer_rows));
        }
    }
    Ok(Enumeration {
        report: CountReport {
            regions: regions.len() as u64,
            db_pieces: None,
            lp_calls: tally.lp_calls,
            lp_breakdowns: tally.breakdowns,
            wall_time_s: start.elapsed().as_secs_f64(),
            seed: None,
            window: window.clone(),
            init: None,
        },
        regions,
        trace,
    })
}

/// Number of activation regions meeting the window.
pub fn count_regions_exact<T: Scalar>(net: &Network<T>, window: &Window, opts: &EnumOptions) -> Result<CountReport> {
    Ok(enumerate_regions(net, window, opts)?.report)
}

/// Count feasible (region, class pair) combinations where the two classes tie and
/// beat every other class by at least `margin`.
pub fn count_db_pieces<T: Scalar>(net: &Network<T>, enumeration: &mut Enumeration<T>, opts: &EnumOptions) -> Result<u64> {
    let start = Instant::now();
    let m = net.arch().out_dim;
    if m < 2 {
        return Err(Error::invalid("decision boundary needs at least two outputs"));
    }
    let out = &net.params().output;
    let out_map = AffineMap::from_rows(
        net.arch().last_width(),
        out.weights.iter().cloned().zip(out.b.iter().copied()),
    );
    let margin = T::of(opts.margin);
    let per_region: Vec<(u64, Tally)> = enumeration
        .regions
        .par_iter()
        .map(|region| {
            let f = out_map.compose(&region.layer_map);
            let mut tally = Tally::default();
            let mut pieces = 0;
            for i in 0..m {
                for j in i + 1..m {
                    let oi = f.row(i);
                    let diff = oi.iter().zip(f.row(j)).map(|(&a, &b)| a - b).collect();
                    let mut rows = vec![Row::eq(diff, f.c[j] - f.c[i])];
                    for k in (0..m).filter(|&k| k != i && k != j) {
                        let a = f.row(k).iter().zip(oi).map(|(&a, &b)| a - b).collect();
                        rows.push(Row::le(a, f.c[i] - f.c[k] - margin));
                    }
                    let sys = region.sys.with_rows(rows)?;
                    if check(&sys, &region.witness, opts, &mut tally).is_some() {
                        pieces += 1;
                    }
                }
            }
            Ok((pieces, tally))
        })
        .collect::<Result<_>>()?;
    let mut pieces = 0;
    let report = &mut enumeration.report;
    for (p, t) in per_region {
        pieces += p;
        report.lp_calls += t.lp_calls;
        report.lp_breakdowns += t.breakdowns;
    }
    report.db_pieces = Some(pieces);
    report.wall_time_s += start.elapsed().as_secs_f64();
    Ok(pieces)
}

/// Regions and decision-boundary pieces in one report.
pub fn count_db_exact<T: Scalar>(net: &Network<T>, window: &Window, opts: &EnumOptions) -> Result<CountReport> {
    let mut e = enumerate_regions(net, window, opts)?;
    count_db_pieces(net, &mut e, opts)?;
    Ok(e.report)
}

pub const DEFAULT_GRID_CAP: usize = 4_000_000;

/// Row-major lattice of `grid_pts` points per axis, first coordinate slowest.
#[derive(Clone, Debug)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
    total: usize,
}

impl Grid {
    pub fn new(window: &Window, grid_pts: usize, cap: usize) -> Result<Self> {
        if grid_pts < 2 {
            return Err(Error::invalid("grid needs at least 2 points per axis"));
        }
        let points = (grid_pts as f64).powi(window.dim() as i32);
        if points > cap as f64 {
            return Err(Error::GridCap { points, cap });
        }
        let axes = window
            .bounds()
            .iter()
            .map(|&(lo, hi)| {
                (0..grid_pts)
                    .map(|i| lo + (hi - lo) * i as f64 / (grid_pts - 1) as f64)
                    .collect()
            })
            .collect();
        Ok(Grid { axes, total: points as usize })
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.axes.len()];
        for (d, axis) in self.axes.iter().enumerate().rev() {
            p[d] = axis[idx % axis.len()];
            idx /= axis.len();
        }
        p
    }
}

fn gradient_key<T: Scalar>(g: &[T]) -> Vec<i64> {
    g.iter().map(|v| (v.to_f64_lossy() / 1e-9).round() as i64).collect()
}

/// Distinct-gradient labels over a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    pub grid: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_labels: usize,
}

impl RegionMap {
    /// CSV with header `y1,…,y{n0},label`, one row per grid point in grid order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dim = self.grid.first().map_or(0, Vec::len);
        let header: Vec<String> = (1..=dim).map(|i| format!("y{i}")).collect();
        writeln!(out, "{},label", header.join(","))?;
        for (p, l) in self.grid.iter().zip(&self.labels) {
            for v in p {
                write!(out, "{v},")?;
            }
            writeln!(out, "{l}")?;
        }
        Ok(())
    }
}

/// Label every grid point by its gradient of the summed outputs (rounded to 1e−9),
/// numbering distinct gradients in first-visit order.
pub fn export_region_map<T: Scalar>(net: &Network<T>, window: &Window, grid_pts: usize, cap: usize) -> Result<RegionMap> {
    window.check_dim(net.arch().n0)?;
    let grid = Grid::new(window, grid_pts, cap)?;
    let keys: Vec<Vec<i64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x: Vec<T> = grid.point(i).into_iter().map(T::of).collect();
            net.sum_gradient(&x).map(|g| gradient_key(&g))
        })
        .collect::<Result<_>>()?;
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    let labels = keys
        .into_iter()
        .map(|k| {
            let next = seen.len();
            *seen.entry(k).or_insert(next)
        })
        .collect();
    Ok(RegionMap {
        grid: (0..grid.len()).map(|i| grid.point(i)).collect(),
        labels,
        n_labels: seen.len(),
    })
}

/// Number of distinct summed-output gradients over the grid.
pub fn count_regions_grid<T: Scalar>(net: &Network<T>, window: &Window, grid_pts: usize, cap: usize) -> Result<usize> {
    window.check_dim(net.arch().n0)?;
    let grid = Grid::new(window, grid_pts, cap)?;
    let keys: Vec<Vec<i64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x: Vec<T> = grid.point(i).into_iter().map(T::of).collect();
            net.sum_gradient(&x).map(|g| gradient_key(&g))
        })
        .collect::<Result<_>>()?;
    let distinct: std::collections::HashSet<Vec<i64>> = keys.into_iter().collect();
    Ok(distinct.len())
}
