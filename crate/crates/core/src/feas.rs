//! Feasibility of linear systems `a · x ≤ b` / `a · x = b` over free `x ∈ ℝ^d`.
//!
//! The solver is a phase-one primal simplex in dictionary form. Free variables are
//! split as `x = x⁺ − x⁻` and a single artificial `t ≥ 0` relaxes every row to
//! `a · x − t ≤ b`; one pivot makes the start feasible, then `t` is minimized with
//! Bland's rule. Equality rows enter as the pair `a · x ≤ b`, `−a · x ≤ −b`, so at
//! `t = 0` they hold exactly.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row<T> {
    pub a: Vec<T>,
    pub b: T,
    pub kind: RowKind,
}

impl<T: Scalar> Row<T> {
    pub fn le(a: Vec<T>, b: T) -> Self {
        Row { a, b, kind: RowKind::Le }
    }

    pub fn eq(a: Vec<T>, b: T) -> Self {
        Row { a, b, kind: RowKind::Eq }
    }
}

#[derive(Debug)]
struct Chunk<T> {
    rows: Vec<Row<T>>,
    prev: Option<Arc<Chunk<T>>>,
}

/// Append-only system of linear rows. Extending returns a new system that shares
/// all earlier rows with its parent.
#[derive(Clone, Debug)]
pub struct InequalitySystem<T> {
    dim: usize,
    len: usize,
    tail: Option<Arc<Chunk<T>>>,
}

impl<T: Scalar> InequalitySystem<T> {
    pub fn new(dim: usize) -> Self {
        InequalitySystem { dim, len: 0, tail: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn with_row(&self, a: Vec<T>, b: T, kind: RowKind) -> Result<Self> {
        self.with_rows(vec![Row { a, b, kind }])
    }

    pub fn with_rows(&self, rows: Vec<Row<T>>) -> Result<Self> {
        for r in &rows {
            if r.a.len() != self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    found: r.a.len(),
                });
            }
            if !r.a.iter().all(|v| v.is_finite()) || !r.b.is_finite() {
                return Err(Error::NonFinite("inequality row".into()));
            }
        }
        if rows.is_empty() {
            return Ok(self.clone());
        }
        Ok(InequalitySystem {
            dim: self.dim,
            len: self.len + rows.len(),
            tail: Some(Arc::new(Chunk {
                rows,
                prev: self.tail.clone(),
            })),
        })
    }

    /// Rows in insertion order.
    pub fn rows(&self) -> Vec<&Row<T>> {
        let mut chunks = Vec::new();
        let mut cur = self.tail.as_deref();
        while let Some(c) = cur {
            chunks.push(c);
            cur = c.prev.as_deref();
        }
        chunks.iter().rev().flat_map(|c| c.rows.iter()).collect()
    }

    /// Largest violation of any row at `x` (0 when all rows hold).
    pub fn max_violation(&self, x: &[T]) -> T {
        self.rows().into_iter().fold(T::zero(), |acc, r| {
            let d = dot(&r.a, x) - r.b;
            let v = match r.kind {
                RowKind::Le => d,
                RowKind::Eq => d.abs(),
            };
            acc.max(v)
        })
    }

    /// Plain-text dump, one row per line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for r in self.rows() {
            for v in &r.a {
                let _ = write!(s, "{v} ");
            }
            let op = match r.kind {
                RowKind::Le => "<=",
                RowKind::Eq => "==",
            };
            let _ = writeln!(s, "{op} {}", r.b);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasOptions {
    pub pivot_tol: f64,
    pub feas_tol: f64,
    pub max_rows: usize,
    pub max_pivots: usize,
}

impl FeasOptions {
    pub fn for_scalar<T: Scalar>() -> Self {
        FeasOptions {
            pivot_tol: T::PIVOT_TOL,
            feas_tol: T::FEAS_TOL,
            ..Self::default()
        }
    }
}

impl Default for FeasOptions {
    fn default() -> Self {
        FeasOptions {
            pivot_tol: 1e-9,
            feas_tol: 1e-7,
            max_rows: 100_000,
            max_pivots: 50_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityResult<T> {
    pub status: Status,
    /// Present iff `status == Feasible`.
    pub witness: Option<Vec<T>>,
}

impl<T> FeasibilityResult<T> {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }
}

/// Decide whether some `x` satisfies every row of `sys`.
pub fn is_feasible<T: Scalar>(sys: &InequalitySystem<T>, opts: &FeasOptions) -> Result<FeasibilityResult<T>> {
    if sys.len() > opts.max_rows {
        return Err(Error::TooManyRows {
            rows: sys.len(),
            max: opts.max_rows,
        });
    }
    let mut rows: Vec<(&[T], T, bool)> = Vec::with_capacity(sys.len() + 4);
    for r in sys.rows() {
        rows.push((&r.a, r.b, false));
        if r.kind == RowKind::Eq {
            rows.push((&r.a, r.b, true));
        }
    }
    Dictionary::new(sys.dim(), &rows).solve(opts, sys.len())
}

/// Phase-one dictionary. Variable ids: `0..d` are `x⁺`, `d..2d` are `x⁻`, `2d` is `t`,
/// `2d + 1 + i` is the slack of row `i`.
struct Dictionary<T> {
    d: usize,
    m: usize,
    /// `basis[i]` is the variable expressed by row `i`.
    basis: Vec<usize>,
    /// `nonbasic[j]` is the variable in column `j`.
    nonbasic: Vec<usize>,
    beta: Vec<T>,
    /// Row-major `m × (2d + 1)`: `x_basis[i] = beta[i] + Σ_j alpha[i][j] · x_nonbasic[j]`.
    alpha: Vec<T>,
    /// Objective `z = z0 + Σ_j cost[j] · x_nonbasic[j]`, maximized; `z = −t`.
    cost: Vec<T>,
}

impl<T: Scalar> Dictionary<T> {
    fn new(d: usize, rows: &[(&[T], T, bool)]) -> Self {
        let m = rows.len();
        let n = 2 * d + 1;
        let mut alpha = vec![T::zero(); m * n];
        let mut beta = Vec::with_capacity(m);
        for (i, &(a, b, negate)) in rows.iter().enumerate() {
            let s = if negate { -T::one() } else { T::one() };
            let r = &mut alpha[i * n..(i + 1) * n];
            for k in 0..d {
                r[k] = -s * a[k];
                r[d + k] = s * a[k];
            }
            r[2 * d] = T::one();
            beta.push(s * b);
        }
        let mut cost = vec![T::zero(); n];
        cost[2 * d] = -T::one();
        Dictionary {
            d,
            m,
            basis: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            beta,
            alpha,
            cost,
        }
    }

    fn cols(&self) -> usize {
        2 * self.d + 1
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let n = self.cols();
        let piv = self.alpha[r * n + s];
        let inv = T::one() / piv;
        // Solve row r for the entering variable.
        self.beta[r] = -self.beta[r] * inv;
        for j in 0..n {
            if j != s {
                self.alpha[r * n + j] = -self.alpha[r * n + j] * inv;
            }
        }
        self.alpha[r * n + s] = inv;
        let beta_r = self.beta[r];
        let (before, rest) = self.alpha.split_at_mut(r * n);
        let (row_r, after) = rest.split_at_mut(n);
        let substitute = |row: &mut [T], beta: &mut T| {
            let coef = row[s];
            if coef == T::zero() {
                return;
            }
            *beta += coef * beta_r;
            for j in 0..n {
                if j != s {
                    row[j] += coef * row_r[j];
                }
            }
            row[s] = coef * row_r[s];
        };
        for (i, row) in before.chunks_mut(n).enumerate() {
            let mut b = self.beta[i];
            substitute(row, &mut b);
            self.beta[i] = b;
        }
        for (off, row) in after.chunks_mut(n).enumerate() {
            let i = r + 1 + off;
            let mut b = self.beta[i];
            substitute(row, &mut b);
            self.beta[i] = b;
        }
        let cs = self.cost[s];
        if cs != T::zero() {
            for j in 0..n {
                if j != s {
                    self.cost[j] += cs * row_r[j];
                }
            }
            self.cost[s] = cs * row_r[s];
        }
        std::mem::swap(&mut self.basis[r], &mut self.nonbasic[s]);
    }

    fn t_value(&self) -> T {
        let t = 2 * self.d;
        self.basis
            .iter()
            .position(|&v| v == t)
            .map_or(T::zero(), |i| self.beta[i].max(T::zero()))
    }

    fn witness(&self) -> Vec<T> {
        let mut vals = vec![T::zero(); 2 * self.d];
        for (i, &v) in self.basis.iter().enumerate() {
            if v < 2 * self.d {
                vals[v] = self.beta[i];
            }
        }
        (0..self.d).map(|k| vals[k] - vals[self.d + k]).collect()
    }

    fn feasible(&self) -> FeasibilityResult<T> {
        FeasibilityResult {
            status: Status::Feasible,
            witness: Some(self.witness()),
        }
    }

    fn solve(mut self, opts: &FeasOptions, sys_rows: usize) -> Result<FeasibilityResult<T>> {
        let tol = T::of(opts.pivot_tol);
        let t_col = 2 * self.d;
        // x = 0 already satisfies every row.
        let worst = (0..self.m).min_by(|&a, &b| {
            self.beta[a]
                .partial_cmp(&self.beta[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let Some(worst) = worst.filter(|&i| self.beta[i] < T::zero()) else {
            return Ok(self.feasible());
        };
        self.pivot(worst, t_col);

        let n = self.cols();
        for _ in 0..opts.max_pivots {
            if !self.basis.contains(&t_col) {
                return Ok(self.feasible());
            }
            // Bland: smallest variable id with improving reduced cost.
            let entering = (0..n)
                .filter(|&j| self.cost[j] > tol)
                .min_by_key(|&j| self.nonbasic[j]);
            let Some(s) = entering else {
                return Ok(if self.t_value() <= T::of(opts.feas_tol) {
                    self.feasible()
                } else {
                    FeasibilityResult {
                        status: Status::Infeasible,
                        witness: None,
                    }
                });
            };
            let ratio = |i: usize| self.beta[i].max(T::zero()) / -self.alpha[i * n + s];
            let candidates: Vec<usize> = (0..self.m).filter(|&i| self.alpha[i * n + s] < -tol).collect();
            let best = candidates.iter().map(|&i| ratio(i)).fold(T::infinity(), T::min);
            let leave = candidates
                .into_iter()
                .filter(|&i| ratio(i) <= best + tol)
                .min_by_key(|&i| self.basis[i])
                .map(|i| (i, ()));
            let Some((r, _)) = leave else {
                return Err(Error::Numerical {
                    rows: sys_rows,
                    reason: "unbounded phase-one direction",
                });
            };
            self.pivot(r, s);
        }
        Err(Error::Numerical {
            rows: sys_rows,
            reason: "pivot limit reached",
        })
    }
}

/// Drop rows implied by the others. Each candidate row is tested by asking whether
/// the remaining system still admits a point that violates it by more than `slack`.
pub fn prune_redundant<T: Scalar>(sys: &InequalitySystem<T>, slack: T, opts: &FeasOptions) -> Result<InequalitySystem<T>> {
    let mut kept: Vec<Row<T>> = sys.rows().into_iter().cloned().collect();
    let mut i = 0;
    while i < kept.len() {
        if kept[i].kind == RowKind::Eq {
            i += 1;
            continue;
        }
        let mut others: Vec<Row<T>> = kept.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, r)| r.clone()).collect();
        let r = &kept[i];
        others.push(Row::le(r.a.iter().map(|&v| -v).collect(), -(r.b + slack)));
        let test = InequalitySystem::new(sys.dim()).with_rows(others)?;
        if is_feasible(&test, opts)?.is_feasible() {
            i += 1;
        } else {
            kept.remove(i);
        }
    }
    InequalitySystem::new(sys.dim()).with_rows(kept)
}
