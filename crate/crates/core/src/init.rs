//! Parameter samplers and deterministic constructions.
//!
//! Every draw comes from a stream keyed by `(seed, purpose, layer, unit, feature)`,
//! so sampling is reproducible and independent of evaluation order.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Architecture, Feature, Network, OutputLayer, Parameters, Unit};
use crate::rng::stream;
use crate::scalar::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ReluHe,
    MaxoutHe,
    Sphere,
    ManyRegions,
    /// Parallel-hyperplane layer attaining the maximal count (one hidden layer only).
    Construction,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistShape {
    #[default]
    Normal,
    Uniform,
}

/// Re-centering of each unit at a random point `c`: `b_k ← b_k + ⟨w_k, c⟩`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteinwartShift {
    #[default]
    Off,
    /// `c` uniform in `[−1, 1]^{fan-in}`.
    Cube,
    /// `c` a uniformly random convex combination of these input points, mapped
    /// through the preceding layers.
    Data(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub scheme: Scheme,
    #[serde(default)]
    pub dist_shape: DistShape,
    #[serde(default)]
    pub zero_bias: bool,
    #[serde(default)]
    pub steinwart_shift: SteinwartShift,
    /// Std of the Gaussian perturbation added under `ManyRegions`.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl InitSpec {
    pub fn new(scheme: Scheme) -> Self {
        InitSpec {
            scheme,
            dist_shape: DistShape::Normal,
            zero_bias: false,
            steinwart_shift: SteinwartShift::Off,
            noise: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, arch: &Architecture) -> Result<()> {
        arch.validate()?;
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(format!("noise must be finite and ≥ 0, got {}", self.noise)));
        }
        let name = || format!("{:?}", self.scheme);
        match self.scheme {
            Scheme::MaxoutHe | Scheme::ManyRegions => {
                maxout_he_std(arch.rank, 1, self.dist_shape)?;
            }
            Scheme::Construction if arch.depth() != 1 => {
                return Err(Error::Unsupported {
                    scheme: name(),
                    rank: arch.rank,
                    detail: "construction needs exactly one hidden layer",
                });
            }
            _ => {}
        }
        if let SteinwartShift::Data(points) = &self.steinwart_shift {
            if points.is_empty() || points.iter().any(|p| p.len() != arch.n0 || !p.iter().all(|v| v.is_finite())) {
                return Err(Error::invalid(format!(
                    "steinwart data must be non-empty finite points of dimension {}",
                    arch.n0
                )));
            }
        }
        Ok(())
    }
}

const TAG_PARAM: u64 = 0;
const TAG_SHIFT: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_UNIT: u64 = 3;

/// Weight std of maxout-He for rank `K` and fan-in `n`.
///
/// Normal: the tabulated constants for `K ≤ 5` (`K = 1` is the linear case `1/n`).
/// Uniform: `Var = 1 / (12 n (1/4 − K/((K+2)(K+1))))` for any `K`.
pub fn maxout_he_std(k: usize, n: usize, shape: DistShape) -> Result<f64> {
    let n = n as f64;
    let pi = std::f64::consts::PI;
    let s3 = 3f64.sqrt();
    let var = match shape {
        DistShape::Normal => match k {
            1 | 2 => 1.0 / n,
            3 => 2.0 * pi / ((s3 + 2.0 * pi) * n),
            4 => pi / ((s3 + pi) * n),
            5 => 0.5555 / n,
            _ => {
                return Err(Error::Unsupported {
                    scheme: "MaxoutHe".into(),
                    rank: k,
                    detail: "normal maxout-He is tabulated for K ≤ 5; use the uniform shape",
                })
            }
        },
        DistShape::Uniform => {
            let k = k as f64;
            1.0 / (12.0 * n * (0.25 - k / ((k + 2.0) * (k + 1.0))))
        }
    };
    Ok(var.sqrt())
}

/// ReLU-He std `√(2/n)`.
pub fn relu_he_std(n: usize) -> f64 {
    (2.0 / n as f64).sqrt()
}

fn draw(rng: &mut ChaCha8Rng, std: f64, shape: DistShape) -> f64 {
    match shape {
        DistShape::Normal => std * gauss(rng),
        DistShape::Uniform => {
            let a = 3f64.sqrt() * std;
            rng.gen_range(-a..=a)
        }
    }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| gauss(rng)).collect()
}

fn iid_unit(rng: &mut ChaCha8Rng, k: usize, fan_in: usize, std: f64, shape: DistShape) -> Unit<f64> {
    (0..k)
        .map(|_| Feature {
            w: (0..fan_in).map(|_| draw(rng, std, shape)).collect(),
            b: draw(rng, std, shape),
        })
        .collect()
}

/// Features on the upper unit half-sphere, all biases lowered by `1/√(K n)`.
fn sphere_unit(rng: &mut ChaCha8Rng, k: usize, fan_in: usize) -> Unit<f64> {
    let c = 1.0 / ((k * fan_in) as f64).sqrt();
    (0..k)
        .map(|_| {
            let mut v = normal_vec(rng, fan_in + 1);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            let b = v.pop().unwrap().abs();
            Feature { w: v, b: b - c }
        })
        .collect()
}

/// `w_i = v cos(πi/K)`, `b_i = sin(πi/K)`, `i = 1..K`, re-centered at `offset`
/// (so the unit computes `x ↦ g(x + offset)`).
pub fn many_regions_unit(v: &[f64], k: usize, offset: Option<&[f64]>) -> Unit<f64> {
    let shift = offset.map_or(0.0, |s| dot(v, s));
    (1..=k)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / k as f64;
            Feature {
                w: v.iter().map(|&x| x * t.cos()).collect(),
                b: t.sin() + t.cos() * shift,
            }
        })
        .collect()
}

/// How [`construct_unit_rank_k`] disables the surplus features.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankVariant {
    /// Surplus features copy the first one with bias lowered by 1.
    Collapse,
    /// Surplus features sit at the mean of the active ones, perturbed by tiny
    /// generic noise, with a bias 1 below the smallest active bias.
    Generic,
}

/// A rank-`K` unit whose first `k` features all attain a region and whose other
/// features never win on `‖x‖∞ ≤ 10⁶`.
pub fn construct_unit_rank_k(n0: usize, k_total: usize, k: usize, variant: RankVariant, seed: u64) -> Result<Unit<f64>> {
    if n0 == 0 || k == 0 || k > k_total {
        return Err(Error::invalid(format!("need n0 ≥ 1 and 1 ≤ k ≤ K, got n0={n0}, k={k}, K={k_total}")));
    }
    let mut rng = stream(seed, &[TAG_UNIT]);
    let mut unit = sphere_unit(&mut rng, k, n0);
    let min_b = unit.iter().map(|f| f.b).fold(f64::INFINITY, f64::min);
    let mean: Vec<f64> = (0..n0).map(|d| unit.iter().map(|f| f.w[d]).sum::<f64>() / k as f64).collect();
    for _ in k..k_total {
        let extra = match variant {
            RankVariant::Collapse => Feature {
                w: unit[0].w.clone(),
                b: unit[0].b - 1.0,
            },
            RankVariant::Generic => Feature {
                w: mean.iter().map(|&m| m + rng.gen_range(-1e-9..1e-9)).collect(),
                b: min_b - 1.0 + rng.gen_range(0.0..1e-3),
            },
        };
        unit.push(extra);
    }
    Ok(unit)
}

/// One layer whose unit `i` has `k_i − 1` parallel breakpoint hyperplanes:
/// `w_ij = (j/k_i) v_i`, `b_ij = −(j/k_i + ε_i)²` with `v_i` standard normal and
/// `ε_i ~ U[0, 1)`. Units are padded to rank `max k_i` with dominated copies.
pub fn construct_layer_parallel(n0: usize, ks: &[usize], seed: u64) -> Result<Vec<Unit<f64>>> {
    if n0 == 0 || ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("need n0 ≥ 1 and a non-empty list of k_i ≥ 1"));
    }
    let rank = *ks.iter().max().unwrap();
    Ok(ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut rng = stream(seed, &[TAG_UNIT, i as u64]);
            let v = normal_vec(&mut rng, n0);
            let eps: f64 = rng.gen_range(0.0..1.0);
            let mut unit: Unit<f64> = (1..=k)
                .map(|j| {
                    let s = j as f64 / k as f64;
                    Feature {
                        w: v.iter().map(|x| s * x).collect(),
                        b: -(s + eps).powi(2),
                    }
                })
                .collect();
            let pad = Feature {
                w: unit[0].w.clone(),
                b: unit[0].b - 1.0,
            };
            unit.resize(rank, pad);
            unit
        })
        .collect())
}

/// Per-unit shift center for the Steinwart re-centering of layer `l`.
fn shift_center(spec: &InitSpec, l: usize, u: usize, fan_in: usize, hidden: &[Vec<Unit<f64>>]) -> Option<Vec<f64>> {
    let mut rng = stream(spec.seed, &[TAG_SHIFT, l as u64, u as u64]);
    match &spec.steinwart_shift {
        SteinwartShift::Off => None,
        SteinwartShift::Cube => Some((0..fan_in).map(|_| rng.gen_range(-1.0..=1.0)).collect()),
        SteinwartShift::Data(points) => {
            let weights: Vec<f64> = points.iter().map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = weights.iter().sum();
            let mut c = vec![0.0; points[0].len()];
            for (p, wt) in points.iter().zip(&weights) {
                for (ci, &pi) in c.iter_mut().zip(p) {
                    *ci += wt / total * pi;
                }
            }
            for layer in hidden {
                c = layer
                    .iter()
                    .map(|unit| unit.iter().map(|f| f.eval(&c)).fold(f64::NEG_INFINITY, f64::max))
                    .collect();
            }
            Some(c)
        }
    }
}

fn hidden_layer(spec: &InitSpec, arch: &Architecture, l: usize) -> Result<Vec<Unit<f64>>> {
    let fan_in = arch.fan_in(l);
    let k = arch.rank;
    let width = arch.widths[l];
    if spec.scheme == Scheme::Construction {
        return construct_layer_parallel(fan_in, &vec![k; width], crate::rng::derive(spec.seed, &[TAG_PARAM, l as u64]));
    }
    (0..width)
        .map(|u| {
            let mut rng = stream(spec.seed, &[TAG_PARAM, l as u64, u as u64]);
            Ok(match spec.scheme {
                Scheme::ReluHe => iid_unit(&mut rng, k, fan_in, relu_he_std(fan_in), spec.dist_shape),
                Scheme::MaxoutHe => {
                    iid_unit(&mut rng, k, fan_in, maxout_he_std(k, fan_in, spec.dist_shape)?, spec.dist_shape)
                }
                Scheme::Sphere => sphere_unit(&mut rng, k, fan_in),
                Scheme::ManyRegions => {
                    let std = maxout_he_std(k, fan_in, spec.dist_shape)?;
                    let v: Vec<f64> = (0..fan_in).map(|_| draw(&mut rng, std, spec.dist_shape)).collect();
                    let offset: Vec<f64> = (0..fan_in).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                    let mut unit = many_regions_unit(&v, k, Some(&offset));
                    if spec.noise > 0.0 {
                        for (j, f) in unit.iter_mut().enumerate() {
                            let mut nr = stream(spec.seed, &[TAG_NOISE, l as u64, u as u64, j as u64]);
                            f.w.iter_mut().for_each(|x| *x += spec.noise * gauss(&mut nr));
                            f.b += spec.noise * gauss(&mut nr);
                        }
                    }
                    unit
                }
                Scheme::Construction => unreachable!(),
            })
        })
        .collect()
}

fn output_layer(spec: &InitSpec, arch: &Architecture) -> Result<OutputLayer<f64>> {
    let fan_in = arch.last_width();
    let m = arch.out_dim;
    if spec.scheme == Scheme::Construction {
        return Ok(OutputLayer {
            weights: vec![vec![1.0; fan_in]; m],
            b: vec![0.0; m],
        });
    }
    let std = match spec.scheme {
        Scheme::ReluHe => relu_he_std(fan_in),
        _ => maxout_he_std(arch.rank, fan_in, spec.dist_shape).or_else(|_| maxout_he_std(arch.rank, fan_in, DistShape::Uniform))?,
    };
    let l = arch.depth() as u64;
    let rows: Vec<(Vec<f64>, f64)> = (0..m)
        .map(|i| {
            let mut rng = stream(spec.seed, &[TAG_PARAM, l, i as u64]);
            let w = (0..fan_in).map(|_| draw(&mut rng, std, spec.dist_shape)).collect();
            (w, draw(&mut rng, std, spec.dist_shape))
        })
        .collect();
    let (weights, b) = rows.into_iter().unzip();
    Ok(OutputLayer { weights, b })
}

/// Sample parameters for `arch` under `spec`.
pub fn sample(arch: &Architecture, spec: &InitSpec) -> Result<Parameters<f64>> {
    spec.validate(arch)?;
    let mut hidden: Vec<Vec<Unit<f64>>> = Vec::with_capacity(arch.depth());
    for l in 0..arch.depth() {
        let mut layer = hidden_layer(spec, arch, l)?;
        for (u, unit) in layer.iter_mut().enumerate() {
            if let Some(c) = shift_center(spec, l, u, arch.fan_in(l), &hidden) {
                for f in unit.iter_mut() {
                    f.b += dot(&f.w, &c);
                }
            }
        }
        hidden.push(layer);
    }
    let mut params = Parameters {
        hidden,
        output: output_layer(spec, arch)?,
    };
    if spec.zero_bias {
        params.features_mut().for_each(|f| f.b = 0.0);
        params.output.b.iter_mut().for_each(|b| *b = 0.0);
    }
    Ok(params)
}

/// [`sample`] wrapped into a checked network.
pub fn sample_network(arch: &Architecture, spec: &InitSpec) -> Result<Network<f64>> {
    Network::new(arch.clone(), sample(arch, spec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{count_regions_exact, EnumOptions, Window};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn single_layer(n0: usize, units: Vec<Unit<f64>>) -> Network<f64> {
        let arch = Architecture::new(n0, vec![units.len()], units[0].len(), 1).unwrap();
        let output = OutputLayer {
            weights: vec![vec![1.0; units.len()]],
            b: vec![0.0],
        };
        Network::new(arch, Parameters { hidden: vec![units], output }).unwrap()
    }

    fn regions(net: &Network<f64>, half: f64) -> u64 {
        let w = Window::cube(net.arch().n0, -half, half).unwrap();
        count_regions_exact(net, &w, &EnumOptions::default()).unwrap().regions
    }

    fn binom(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn maxout_he_table() {
        let pi = std::f64::consts::PI;
        let n = 100;
        assert_relative_eq!(maxout_he_std(2, n, DistShape::Normal).unwrap(), 0.1, max_relative = 1e-15);
        assert_relative_eq!(
            maxout_he_std(3, n, DistShape::Normal).unwrap(),
            (2.0 * pi / ((3f64.sqrt() + 2.0 * pi) * 100.0)).sqrt()
        );
        assert_relative_eq!(maxout_he_std(5, n, DistShape::Normal).unwrap(), (0.005555f64).sqrt());
        assert!(matches!(maxout_he_std(6, n, DistShape::Normal), Err(Error::Unsupported { rank: 6, .. })));
        assert_relative_eq!(maxout_he_std(2, n, DistShape::Uniform).unwrap(), 0.1, max_relative = 1e-12);
        assert!(maxout_he_std(9, n, DistShape::Uniform).unwrap() > 0.0);
    }

    #[test]
    fn sampled_std_matches_scheme() {
        let arch = Architecture::new(100, vec![200], 2, 1).unwrap();
        for (shape, tol) in [(DistShape::Normal, 0.01), (DistShape::Uniform, 0.01)] {
            let spec = InitSpec {
                dist_shape: shape,
                ..InitSpec::new(Scheme::MaxoutHe).with_seed(3)
            };
            let p = sample(&arch, &spec).unwrap();
            let ws: Vec<f64> = p.hidden[0].iter().flatten().flat_map(|f| f.w.clone()).collect();
            let var = ws.iter().map(|w| w * w).sum::<f64>() / ws.len() as f64;
            assert!((var.sqrt() - 0.1).abs() < tol, "{shape:?}: {}", var.sqrt());
            if shape == DistShape::Uniform {
                assert!(ws.iter().all(|w| w.abs() <= 3f64.sqrt() * 0.1));
            }
        }
        let p = sample(&arch, &InitSpec::new(Scheme::ReluHe).with_seed(3)).unwrap();
        let ws: Vec<f64> = p.hidden[0].iter().flatten().flat_map(|f| f.w.clone()).collect();
        let std = (ws.iter().map(|w| w * w).sum::<f64>() / ws.len() as f64).sqrt();
        assert!((std - 0.02f64.sqrt()).abs() < 0.003);
    }

    #[test]
    fn sampling_is_reproducible_and_seeded() {
        let arch = Architecture::new(3, vec![4, 4], 3, 2).unwrap();
        let spec = InitSpec::new(Scheme::MaxoutHe).with_seed(9);
        assert_eq!(sample(&arch, &spec).unwrap(), sample(&arch, &spec).unwrap());
        assert_ne!(sample(&arch, &spec).unwrap(), sample(&arch, &spec.clone().with_seed(10)).unwrap());
    }

    #[test]
    fn unsupported_combinations() {
        let arch = Architecture::new(2, vec![3], 7, 1).unwrap();
        assert!(matches!(
            sample(&arch, &InitSpec::new(Scheme::MaxoutHe)),
            Err(Error::Unsupported { rank: 7, .. })
        ));
        let spec = InitSpec {
            dist_shape: DistShape::Uniform,
            ..InitSpec::new(Scheme::MaxoutHe)
        };
        assert!(sample(&arch, &spec).is_ok());
        let deep = Architecture::new(2, vec![3, 3], 2, 1).unwrap();
        assert!(sample(&deep, &InitSpec::new(Scheme::Construction)).is_err());
        let bad_noise = InitSpec {
            noise: -1.0,
            ..InitSpec::new(Scheme::ManyRegions)
        };
        assert!(sample(&deep, &bad_noise).is_err());
    }

    #[test]
    fn sphere_features_lie_on_upper_half_sphere() {
        let (n, k) = (4, 3);
        let arch = Architecture::new(n, vec![10], k, 1).unwrap();
        let p = sample(&arch, &InitSpec::new(Scheme::Sphere).with_seed(1)).unwrap();
        let c = 1.0 / ((k * n) as f64).sqrt();
        for f in p.hidden[0].iter().flatten() {
            let b = f.b + c;
            assert!(b >= 0.0);
            let norm = (f.w.iter().map(|x| x * x).sum::<f64>() + b * b).sqrt();
            assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn sphere_units_attain_every_feature() {
        for k in 2..=5 {
            for seed in 0..30 {
                let arch = Architecture::new(2, vec![1], k, 1).unwrap();
                let net = sample_network(&arch, &InitSpec::new(Scheme::Sphere).with_seed(seed)).unwrap();
                assert_eq!(regions(&net, 1e4), k as u64, "K={k} seed={seed}");
            }
        }
    }

    #[test]
    fn maxout_he_preserves_activation_norm() {
        let width = 50;
        for k in 2..=5 {
            let arch = Architecture::new(width, vec![width; 5], k, 1).unwrap();
            let net = sample_network(&arch, &InitSpec::new(Scheme::MaxoutHe).with_seed(k as u64)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let (mut first, mut last) = (0.0, 0.0);
            for _ in 0..1000 {
                let x = normal_vec(&mut rng, width);
                let acts = net.hidden_activations(&x).unwrap();
                let sq = |v: &Vec<f64>| v.iter().map(|a| a * a).sum::<f64>();
                first += sq(&acts[0]);
                last += sq(&acts[4]);
            }
            let ratio = last / first;
            assert!((0.5..=2.0).contains(&ratio), "K={k}: ratio {ratio}");
        }
    }

    #[test]
    fn many_regions_layer_is_maximal() {
        for (n0, n1, k) in [(1, 1, 3), (2, 3, 2), (2, 3, 3), (2, 2, 4)] {
            let arch = Architecture::new(n0, vec![n1], k, 1).unwrap();
            let want: u64 = (0..=n0 as u64).map(|j| binom(n1 as u64, j) * (k as u64 - 1).pow(j as u32)).sum();
            for seed in 0..3 {
                let net = sample_network(&arch, &InitSpec::new(Scheme::ManyRegions).with_seed(seed)).unwrap();
                assert_eq!(regions(&net, 1e3), want, "n0={n0} n1={n1} K={k} seed={seed}");
            }
        }
    }

    #[test]
    fn many_regions_without_offset_share_a_point_for_odd_rank() {
        // For odd K every unit has a breakpoint hyperplane through the origin.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let units = (0..3).map(|_| many_regions_unit(&normal_vec(&mut rng, 2), 3, None)).collect();
        assert_eq!(regions(&single_layer(2, units), 1e3), 18);
    }

    #[test]
    fn many_regions_noise_is_applied() {
        let arch = Architecture::new(2, vec![3], 3, 1).unwrap();
        let base = sample(&arch, &InitSpec::new(Scheme::ManyRegions).with_seed(2)).unwrap();
        let spec = InitSpec {
            noise: 1e-3,
            ..InitSpec::new(Scheme::ManyRegions).with_seed(2)
        };
        let noisy = sample(&arch, &spec).unwrap();
        let d = (base.hidden[0][0][0].b - noisy.hidden[0][0][0].b).abs();
        assert!(d > 0.0 && d < 1e-2);
    }

    #[test]
    fn steinwart_shift_translates_the_unit() {
        let arch = Architecture::new(2, vec![1], 3, 1).unwrap();
        let base = InitSpec::new(Scheme::MaxoutHe).with_seed(4);
        let shifted = InitSpec {
            steinwart_shift: SteinwartShift::Cube,
            ..base.clone()
        };
        let f = sample_network(&arch, &base).unwrap();
        let g = sample_network(&arch, &shifted).unwrap();
        let c = shift_center(&shifted, 0, 0, 2, &[]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let xc: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a + b).collect();
            assert_eq!(g.gradient(&x).unwrap(), f.gradient(&xc).unwrap());
            assert_relative_eq!(g.forward(&x).unwrap()[0], f.forward(&xc).unwrap()[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn steinwart_data_shift_stays_in_hull() {
        let arch = Architecture::new(2, vec![3, 2], 2, 1).unwrap();
        let spec = InitSpec {
            steinwart_shift: SteinwartShift::Data(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]),
            ..InitSpec::new(Scheme::MaxoutHe).with_seed(8)
        };
        let c = shift_center(&spec, 0, 1, 2, &[]).unwrap();
        assert!(c[0] >= 0.0 && c[1] >= 0.0 && c[0] + c[1] <= 1.0 + 1e-12);
        assert!(sample(&arch, &spec).is_ok());
        let bad = InitSpec {
            steinwart_shift: SteinwartShift::Data(vec![vec![0.0]]),
            ..spec
        };
        assert!(sample(&arch, &bad).is_err());
    }

    #[test]
    fn zero_bias_clears_every_bias() {
        let arch = Architecture::new(2, vec![3, 3], 3, 2).unwrap();
        let spec = InitSpec {
            zero_bias: true,
            steinwart_shift: SteinwartShift::Cube,
            ..InitSpec::new(Scheme::Sphere)
        };
        let p = sample(&arch, &spec).unwrap();
        assert!(p.hidden.iter().flatten().flatten().all(|f| f.b == 0.0));
        assert!(p.output.b.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn spec_json_names() {
        let spec = InitSpec {
            steinwart_shift: SteinwartShift::Data(vec![vec![1.0]]),
            ..InitSpec::new(Scheme::ManyRegions)
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains(r#""scheme":"many-regions""#) && s.contains(r#""data":[[1.0]]"#), "{s}");
        let back: InitSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        let short: InitSpec = serde_json::from_str(r#"{"scheme":"maxout-he"}"#).unwrap();
        assert_eq!(short, InitSpec::new(Scheme::MaxoutHe));
        assert_eq!(serde_json::to_string(&SteinwartShift::Cube).unwrap(), r#""cube""#);
    }

    #[test]
    fn rank_k_units() {
        for variant in [RankVariant::Collapse, RankVariant::Generic] {
            let unit = construct_unit_rank_k(1, 3, 1, variant, 0).unwrap();
            assert_eq!(regions(&single_layer(1, vec![unit]), 1e3), 1);
            let unit = construct_unit_rank_k(1, 3, 2, variant, 1).unwrap();
            assert_eq!(regions(&single_layer(1, vec![unit]), 1e3), 2);
            let unit = construct_unit_rank_k(2, 4, 3, variant, 2).unwrap();
            assert_eq!(unit.len(), 4);
            assert_eq!(regions(&single_layer(2, vec![unit]), 1e3), 3);
        }
        assert!(construct_unit_rank_k(2, 3, 4, RankVariant::Collapse, 0).is_err());
    }

    #[test]
    fn parallel_layer_counts() {
        for (n0, ks, want) in [(2, vec![3, 3], 9), (2, vec![2, 2, 2], 7), (1, vec![4], 4), (2, vec![3, 2, 4], 1 + 6 + 11)] {
            for seed in 0..3 {
                let layer = construct_layer_parallel(n0, &ks, seed).unwrap();
                assert_eq!(regions(&single_layer(n0, layer), 1e4), want, "ks={ks:?} seed={seed}");
            }
        }
    }

    #[test]
    fn construction_scheme_matches_layer_formula() {
        let arch = Architecture::new(2, vec![4], 3, 1).unwrap();
        let net = sample_network(&arch, &InitSpec::new(Scheme::Construction).with_seed(1)).unwrap();
        assert_eq!(regions(&net, 1e4), 1 + 4 * 2 + 6 * 4);
    }
}
