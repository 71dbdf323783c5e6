//! Maxout network definition and evaluation.
//!
//! A network maps `x ∈ ℝ^{n0}` through `L` layers of rank-`K` maxout units and a
//! final linear output layer. On every activation region the map is affine; the
//! helpers here recover that affine map from an activation pattern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    pub n0: usize,
    pub widths: Vec<usize>,
    pub rank: usize,
    pub out_dim: usize,
}

impl Architecture {
    pub fn new(n0: usize, widths: Vec<usize>, rank: usize, out_dim: usize) -> Result<Self> {
        let arch = Architecture {
            n0,
            widths,
            rank,
            out_dim,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 || self.rank == 0 || self.out_dim == 0 {
            return Err(Error::invalid("n0, rank and out_dim must be positive"));
        }
        if let Some(l) = self.widths.iter().position(|&w| w == 0) {
            return Err(Error::invalid(format!("hidden layer {l} has width 0")));
        }
        Ok(())
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    /// Total number of maxout units `N`.
    pub fn total_units(&self) -> usize {
        self.widths.iter().sum()
    }

    /// Input dimension of hidden layer `l` (0-based), or of the output layer when `l == depth()`.
    pub fn fan_in(&self, l: usize) -> usize {
        if l == 0 {
            self.n0
        } else {
            self.widths[l - 1]
        }
    }

    /// Width of the last hidden layer (`n0` when there are none).
    pub fn last_width(&self) -> usize {
        self.fan_in(self.depth())
    }
}

/// One pre-activation feature `w · x + b` of a maxout unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Feature<T> {
    pub w: Vec<T>,
    pub b: T,
}

impl<T: Scalar> Feature<T> {
    #[inline]
    pub fn eval(&self, x: &[T]) -> T {
        dot(&self.w, x) + self.b
    }
}

/// Features of a single maxout unit.
pub type Unit<T> = Vec<Feature<T>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct OutputLayer<T> {
    #[serde(rename = "W")]
    pub weights: Vec<Vec<T>>,
    pub b: Vec<T>,
}

/// Raw weights and biases: `hidden[layer][unit][feature]` plus the linear output layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Parameters<T> {
    pub hidden: Vec<Vec<Unit<T>>>,
    pub output: OutputLayer<T>,
}

impl<T: Scalar> Parameters<T> {
    pub fn cast<U: Scalar>(&self) -> Parameters<U> {
        let c = |v: T| U::of(v.to_f64_lossy());
        Parameters {
            hidden: self
                .hidden
                .iter()
                .map(|layer| {
                    layer
                        .iter()
                        .map(|unit| {
                            unit.iter()
                                .map(|f| Feature {
                                    w: f.w.iter().map(|&v| c(v)).collect(),
                                    b: c(f.b),
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            output: OutputLayer {
                weights: self
                    .output
                    .weights
                    .iter()
                    .map(|row| row.iter().map(|&v| c(v)).collect())
                    .collect(),
                b: self.output.b.iter().map(|&v| c(v)).collect(),
            },
        }
    }

    /// Every feature of every hidden unit, in layer/unit order.
    pub fn features_mut(&mut self) -> impl Iterator<Item = &mut Feature<T>> {
        self.hidden.iter_mut().flatten().flatten()
    }
}

fn check_shapes<T: Scalar>(arch: &Architecture, params: &Parameters<T>) -> Result<()> {
    let shape = |what, layer, unit, expected, found| Error::Shape {
        what,
        layer,
        unit,
        expected,
        found,
    };
    if params.hidden.len() != arch.depth() {
        return Err(shape("hidden layers", None, None, arch.depth(), params.hidden.len()));
    }
    let finite = |v: T| v.is_finite();
    for (l, layer) in params.hidden.iter().enumerate() {
        if layer.len() != arch.widths[l] {
            return Err(shape("layer width", Some(l), None, arch.widths[l], layer.len()));
        }
        let fan_in = arch.fan_in(l);
        for (u, unit) in layer.iter().enumerate() {
            if unit.len() != arch.rank {
                return Err(shape("unit rank", Some(l), Some(u), arch.rank, unit.len()));
            }
            for f in unit {
                if f.w.len() != fan_in {
                    return Err(shape("feature weights", Some(l), Some(u), fan_in, f.w.len()));
                }
                if !f.w.iter().all(|&v| finite(v)) || !finite(f.b) {
                    return Err(Error::NonFinite(format!("layer {l}, unit {u}")));
                }
            }
        }
    }
    let out = &params.output;
    let l = arch.depth();
    if out.weights.len() != arch.out_dim {
        return Err(shape("output rows", Some(l), None, arch.out_dim, out.weights.len()));
    }
    if out.b.len() != arch.out_dim {
        return Err(shape("output bias", Some(l), None, arch.out_dim, out.b.len()));
    }
    for (i, row) in out.weights.iter().enumerate() {
        if row.len() != arch.last_width() {
            return Err(shape("output weights", Some(l), Some(i), arch.last_width(), row.len()));
        }
        if !row.iter().all(|&v| finite(v)) || !finite(out.b[i]) {
            return Err(Error::NonFinite(format!("output row {i}")));
        }
    }
    Ok(())
}

/// Activation pattern of a 0-partial region: for each hidden unit (layer-major order)
/// the 0-based index of the feature attaining the maximum.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActivationPattern(pub Vec<usize>);

impl ActivationPattern {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Affine map `x ↦ A x + c` with `A` stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap<T> {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> AffineMap<T> {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![T::zero(); n * n];
        for i in 0..n {
            a[i * n + i] = T::one();
        }
        AffineMap {
            rows: n,
            cols: n,
            a,
            c: vec![T::zero(); n],
        }
    }

    /// Build from `(row, offset)` pairs.
    pub fn from_rows(cols: usize, rows: impl IntoIterator<Item = (Vec<T>, T)>) -> Self {
        let mut a = Vec::new();
        let mut c = Vec::new();
        for (row, off) in rows {
            debug_assert_eq!(row.len(), cols);
            a.extend(row);
            c.push(off);
        }
        AffineMap {
            rows: c.len(),
            cols,
            a,
            c,
        }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.rows).map(|i| dot(self.row(i), x) + self.c[i]).collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap<T>) -> AffineMap<T> {
        assert_eq!(self.cols, inner.rows, "affine maps do not compose");
        let mut a = vec![T::zero(); self.rows * inner.cols];
        let mut c = self.c.clone();
        for i in 0..self.rows {
            for k in 0..self.cols {
                let s = self.a[i * self.cols + k];
                if s == T::zero() {
                    continue;
                }
                for j in 0..inner.cols {
                    a[i * inner.cols + j] += s * inner.a[k * inner.cols + j];
                }
                c[i] += s * inner.c[k];
            }
        }
        AffineMap {
            rows: self.rows,
            cols: inner.cols,
            a,
            c,
        }
    }

    /// Pull the affine function `w · y + b` back through this map: returns `(Aᵀ w, w · c + b)`.
    pub fn pull_back(&self, w: &[T], b: T) -> (Vec<T>, T) {
        let mut g = vec![T::zero(); self.cols];
        for (i, &wi) in w.iter().enumerate() {
            for (gj, &aij) in g.iter_mut().zip(self.row(i)) {
                *gj += wi * aij;
            }
        }
        (g, dot(w, &self.c) + b)
    }

    pub fn matrix(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Architecture and parameters checked against each other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "NetworkFile<T>", into = "NetworkFile<T>")]
pub struct Network<T> {
    arch: Architecture,
    params: Parameters<T>,
}

/// On-disk JSON layout.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct NetworkFile<T> {
    n0: usize,
    widths: Vec<usize>,
    rank: usize,
    out_dim: usize,
    hidden: Vec<Vec<Unit<T>>>,
    output: OutputLayer<T>,
}

impl<T: Scalar> TryFrom<NetworkFile<T>> for Network<T> {
    type Error = Error;

    fn try_from(f: NetworkFile<T>) -> Result<Self> {
        Network::new(
            Architecture::new(f.n0, f.widths, f.rank, f.out_dim)?,
            Parameters {
                hidden: f.hidden,
                output: f.output,
            },
        )
    }
}

impl<T: Scalar> From<Network<T>> for NetworkFile<T> {
    fn from(n: Network<T>) -> Self {
        NetworkFile {
            n0: n.arch.n0,
            widths: n.arch.widths,
            rank: n.arch.rank,
            out_dim: n.arch.out_dim,
            hidden: n.params.hidden,
            output: n.params.output,
        }
    }
}

impl<T: Scalar> Network<T> {
    pub fn new(arch: Architecture, params: Parameters<T>) -> Result<Self> {
        arch.validate()?;
        check_shapes(&arch, &params)?;
        Ok(Network { arch, params })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &Parameters<T> {
        &self.params
    }

    pub fn into_parts(self) -> (Architecture, Parameters<T>) {
        (self.arch, self.params)
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            arch: self.arch.clone(),
            params: self.params.cast(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.arch.n0 {
            return Err(Error::Shape {
                what: "input",
                layer: None,
                unit: None,
                expected: self.arch.n0,
                found: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("input".into()));
        }
        Ok(())
    }

    /// Run the hidden layers, recording the argmax feature of every unit.
    fn hidden_pass(&self, x: &[T], pattern: &mut Vec<usize>) -> Vec<T> {
        let mut cur = x.to_vec();
        for layer in &self.params.hidden {
            let next = layer
                .iter()
                .map(|unit| {
                    let (k, v) = argmax(unit, &cur);
                    pattern.push(k);
                    v
                })
                .collect();
            cur = next;
        }
        cur
    }

    fn output(&self, h: &[T]) -> Vec<T> {
        let out = &self.params.output;
        out.weights
            .iter()
            .zip(&out.b)
            .map(|(row, &b)| dot(row, h) + b)
            .collect()
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let mut pattern = Vec::with_capacity(self.arch.total_units());
        let h = self.hidden_pass(x, &mut pattern);
        Ok(self.output(&h))
    }

    /// Outputs of every hidden layer (post-activation), first layer first.
    pub fn hidden_activations(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut out = Vec::with_capacity(self.arch.depth());
        for layer in &self.params.hidden {
            cur = layer.iter().map(|unit| argmax(unit, &cur).1).collect();
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Argmax feature per unit; ties go to the smallest feature index.
    pub fn activation_pattern(&self, x: &[T]) -> Result<ActivationPattern> {
        self.check_input(x)?;
        let mut pattern = Vec::with_capacity(self.arch.total_units());
        self.hidden_pass(x, &mut pattern);
        Ok(ActivationPattern(pattern))
    }

    fn check_pattern(&self, pattern: &ActivationPattern) -> Result<()> {
        if pattern.len() != self.arch.total_units() {
            return Err(Error::Shape {
                what: "activation pattern",
                layer: None,
                unit: None,
                expected: self.arch.total_units(),
                found: pattern.len(),
            });
        }
        if let Some(&k) = pattern.0.iter().find(|&&k| k >= self.arch.rank) {
            return Err(Error::invalid(format!(
                "feature index {k} out of range for rank {}",
                self.arch.rank
            )));
        }
        Ok(())
    }

    /// Affine map computed by the hidden layers when every unit uses the feature the
    /// pattern selects.
    pub fn hidden_affine_map(&self, pattern: &ActivationPattern) -> Result<AffineMap<T>> {
        self.check_pattern(pattern)?;
        let mut map = AffineMap::identity(self.arch.n0);
        let mut idx = 0;
        for (l, layer) in self.params.hidden.iter().enumerate() {
            let fan_in = self.arch.fan_in(l);
            let selected = AffineMap::from_rows(
                fan_in,
                layer.iter().map(|unit| {
                    let f = &unit[pattern.0[idx]];
                    idx += 1;
                    (f.w.clone(), f.b)
                }),
            );
            map = selected.compose(&map);
        }
        Ok(map)
    }

    fn output_map(&self) -> AffineMap<T> {
        let out = &self.params.output;
        AffineMap::from_rows(
            self.arch.last_width(),
            out.weights.iter().cloned().zip(out.b.iter().copied()),
        )
    }

    /// Affine function `ℝ^{n0} → ℝ^M` the network computes on the region with this pattern.
    pub fn region_affine_map(&self, pattern: &ActivationPattern) -> Result<AffineMap<T>> {
        Ok(self.output_map().compose(&self.hidden_affine_map(pattern)?))
    }

    /// Jacobian `M × n0` at `x`, using the tie-broken pattern on boundaries.
    pub fn gradient(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        let pattern = self.activation_pattern(x)?;
        Ok(self.region_affine_map(&pattern)?.matrix())
    }

    /// Gradient of the summed outputs at `x`, by back-propagation through the
    /// selected features.
    pub fn sum_gradient(&self, x: &[T]) -> Result<Vec<T>> {
        let pattern = self.activation_pattern(x)?;
        let out = &self.params.output;
        let mut v = vec![T::zero(); self.arch.last_width()];
        for row in &out.weights {
            for (vi, &w) in v.iter_mut().zip(row) {
                *vi += w;
            }
        }
        let mut sel = pattern.0.iter().rev();
        for (l, layer) in self.params.hidden.iter().enumerate().rev() {
            let mut prev = vec![T::zero(); self.arch.fan_in(l)];
            let chosen: Vec<usize> = sel.by_ref().take(layer.len()).copied().collect();
            for ((unit, &k), &vi) in layer.iter().rev().zip(&chosen).zip(v.iter().rev()) {
                for (p, &w) in prev.iter_mut().zip(&unit[k].w) {
                    *p += vi * w;
                }
            }
            v = prev;
        }
        Ok(v)
    }

    /// Restrict the network to the plane through three points, re-parametrized by
    /// `y ↦ v0 + v1 y1 + v2 y2` with `v0` the centroid and `(v1, v2)` the Gram–Schmidt
    /// basis of `span{p2 − p1, p3 − p1}` (`v1` along `p2 − p1`).
    pub fn slice(&self, p1: &[T], p2: &[T], p3: &[T]) -> Result<(Network<T>, SliceBasis<T>)> {
        for p in [p1, p2, p3] {
            self.check_input(p)?;
        }
        let basis = SliceBasis::through(p1, p2, p3)?;
        let embed = basis.map();
        let fold = |f: &Feature<T>| {
            let (w, b) = embed.pull_back(&f.w, f.b);
            Feature { w, b }
        };
        let mut params = self.params.clone();
        if let Some(first) = params.hidden.first_mut() {
            for unit in first.iter_mut() {
                for f in unit.iter_mut() {
                    *f = fold(f);
                }
            }
        } else {
            let out = &mut params.output;
            for (row, b) in out.weights.iter_mut().zip(out.b.iter_mut()) {
                let (w, c) = embed.pull_back(row, *b);
                *row = w;
                *b = c;
            }
        }
        let arch = Architecture {
            n0: 2,
            ..self.arch.clone()
        };
        Ok((Network::new(arch, params)?, basis))
    }
}

/// Affine parametrization of a 2-plane in input space.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceBasis<T> {
    pub v0: Vec<T>,
    pub v1: Vec<T>,
    pub v2: Vec<T>,
}

impl<T: Scalar> SliceBasis<T> {
    pub fn through(p1: &[T], p2: &[T], p3: &[T]) -> Result<Self> {
        let n = p1.len();
        let three = T::of(3.0);
        let v0: Vec<T> = (0..n).map(|i| (p1[i] + p2[i] + p3[i]) / three).collect();
        let u1: Vec<T> = (0..n).map(|i| p2[i] - p1[i]).collect();
        let u2: Vec<T> = (0..n).map(|i| p3[i] - p1[i]).collect();
        let n1 = dot(&u1, &u1).sqrt();
        let scale = n1.max(dot(&u2, &u2).sqrt());
        let tiny = T::epsilon() * T::of(64.0);
        if n1 <= tiny * scale || scale == T::zero() {
            return Err(Error::Collinear);
        }
        let v1: Vec<T> = u1.iter().map(|&v| v / n1).collect();
        let proj = dot(&u2, &v1);
        let r: Vec<T> = u2.iter().zip(&v1).map(|(&a, &b)| a - proj * b).collect();
        let n2 = dot(&r, &r).sqrt();
        if n2 <= tiny * scale {
            return Err(Error::Collinear);
        }
        let v2 = r.iter().map(|&v| v / n2).collect();
        Ok(SliceBasis { v0, v1, v2 })
    }

    /// The map `ℝ² → ℝ^{n0}`.
    pub fn map(&self) -> AffineMap<T> {
        let n = self.v0.len();
        AffineMap::from_rows(2, (0..n).map(|i| (vec![self.v1[i], self.v2[i]], self.v0[i])))
    }

    pub fn point(&self, y: [T; 2]) -> Vec<T> {
        self.map().apply(&y)
    }
}

#[inline]
fn argmax<T: Scalar>(unit: &[Feature<T>], x: &[T]) -> (usize, T) {
    let mut best = (0, unit[0].eval(x));
    for (k, f) in unit.iter().enumerate().skip(1) {
        let v = f.eval(x);
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}
