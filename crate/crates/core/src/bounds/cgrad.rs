use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::{count_regions_exact, EnumOptions, Window};
use crate::error::{Error, Result};
use crate::net::{Architecture, Feature, Network, OutputLayer, Parameters};
use crate::rng::stream;

/// Monte Carlo evaluation of the gradient-moment bound
/// `(c/n0)^{1/2} (M (M+t)^{t/2−1})^{1/t} Π_l E[((c/n_l) Σ_{i≤n_l} m_i)^{t/2}]^{1/t}`,
/// where `m_i` is the maximum of `K` iid `χ²_{n_{l−1}}` variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgradEstimate {
    pub bound: f64,
    /// `(c/n0)^{1/2}`.
    pub input_factor: f64,
    /// `(M (M+t)^{t/2−1})^{1/t}`.
    pub chi_factor: f64,
    /// Per hidden layer, the estimated expectation before taking the `t`-th root.
    pub layer_moments: Vec<f64>,
    pub samples: usize,
}

pub const MIN_CGRAD_SAMPLES: usize = 10_000;
const BLOCK: usize = 1024;

fn layer_moment(fan_in: usize, width: usize, k: usize, c: f64, t: f64, samples: usize, seed: u64, layer: usize) -> f64 {
    let chi = ChiSquared::new(fan_in as f64).expect("positive degrees of freedom");
    let blocks = samples.div_ceil(BLOCK);
    let sums: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, &[layer as u64, b as u64]);
            let count = BLOCK.min(samples - b * BLOCK);
            (0..count)
                .map(|_| {
                    let total: f64 = (0..width)
                        .map(|_| (0..k).map(|_| chi.sample(&mut rng)).fold(f64::NEG_INFINITY, f64::max))
                        .sum();
                    (c / width as f64 * total).powf(t / 2.0)
                })
                .sum()
        })
        .collect();
    sums.iter().sum::<f64>() / samples as f64
}

/// Estimate the bound for weights with variance `c / fan_in`, moment order `t`.
pub fn estimate_cgrad_bound(arch: &Architecture, c: f64, t: f64, samples: usize, seed: u64) -> Result<CgradEstimate> {
    arch.validate()?;
    if samples < MIN_CGRAD_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_CGRAD_SAMPLES} samples, got {samples}")));
    }
    if !(c > 0.0 && c.is_finite() && t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("c and t must be positive and finite"));
    }
    let m = arch.out_dim as f64;
    let input_factor = (c / arch.n0 as f64).sqrt();
    let chi_factor = (m * (m + t).powf(t / 2.0 - 1.0)).powf(1.0 / t);
    let layer_moments: Vec<f64> = arch
        .widths
        .iter()
        .enumerate()
        .map(|(l, &w)| layer_moment(arch.fan_in(l), w, arch.rank, c, t, samples, seed, l))
        .collect();
    let bound = input_factor * chi_factor * layer_moments.iter().map(|e| e.powf(1.0 / t)).product::<f64>();
    Ok(CgradEstimate {
        bound,
        input_factor,
        chi_factor,
        layer_moments,
        samples,
    })
}

/// Mean and spread of the region count of one rank-`K` unit with iid standard
/// normal parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub k: usize,
    pub mean: f64,
    pub std: f64,
    pub counts: Vec<u64>,
}

pub fn single_unit_expected_scan(n0: usize, ks: &[usize], trials: usize, window: &Window, seed: u64) -> Result<Vec<ScanRow>> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let opts = EnumOptions::default();
    ks.iter()
        .map(|&k| {
            let arch = Architecture::new(n0, vec![1], k, 1)?;
            let counts: Vec<u64> = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = stream(seed, &[k as u64, trial as u64]);
                    let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
                    let unit = (0..k)
                        .map(|_| Feature {
                            w: (0..n0).map(|_| g()).collect(),
                            b: g(),
                        })
                        .collect();
                    let params = Parameters {
                        hidden: vec![vec![unit]],
                        output: OutputLayer {
                            weights: vec![vec![1.0]],
                            b: vec![0.0],
                        },
                    };
                    let net = Network::new(arch.clone(), params)?;
                    Ok(count_regions_exact(&net, window, &opts)?.regions)
                })
                .collect::<Result<_>>()?;
            let mean = counts.iter().sum::<u64>() as f64 / trials as f64;
            let var = if trials > 1 {
                counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
            } else {
                0.0
            };
            Ok(ScanRow {
                k,
                mean,
                std: var.sqrt(),
                counts,
            })
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_second_moment_is_exact() {
        // With K = 1, t = 2 the layer expectation is c · n_{l−1}.
        let arch = Architecture::new(3, vec![5, 4], 1, 2).unwrap();
        let c = 1.5;
        let est = estimate_cgrad_bound(&arch, c, 2.0, 100_000, 1).unwrap();
        for (l, &e) in est.layer_moments.iter().enumerate() {
            let want = c * arch.fan_in(l) as f64;
            assert!((e / want - 1.0).abs() < 0.02, "layer {l}: {e} vs {want}");
        }
        assert!((est.chi_factor - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn no_hidden_layers_leaves_chi_factor() {
        let arch = Architecture::new(4, vec![], 2, 3).unwrap();
        let est = estimate_cgrad_bound(&arch, 2.0, 4.0, 10_000, 0).unwrap();
        assert!(est.layer_moments.is_empty());
        let chi = (3.0f64 * 7.0).powf(0.25);
        assert!((est.bound - (0.5f64).sqrt() * chi).abs() < 1e-12);
    }

    #[test]
    fn estimate_is_reproducible_and_grows_with_rank() {
        let a2 = Architecture::new(2, vec![6, 6], 2, 1).unwrap();
        let a4 = Architecture::new(2, vec![6, 6], 4, 1).unwrap();
        let x = estimate_cgrad_bound(&a2, 1.0, 2.0, 20_000, 7).unwrap();
        let y = estimate_cgrad_bound(&a2, 1.0, 2.0, 20_000, 7).unwrap();
        assert_eq!(x.bound.to_bits(), y.bound.to_bits());
        assert!(estimate_cgrad_bound(&a4, 1.0, 2.0, 20_000, 7).unwrap().bound > x.bound);
        assert!(estimate_cgrad_bound(&a2, 1.0, 2.0, 100, 7).is_err());
    }

    #[test]
    fn single_unit_scan() {
        let w = Window::cube(1, -1e4, 1e4).unwrap();
        let rows = single_unit_expected_scan(1, &[1, 2, 4], 20, &w, 3).unwrap();
        assert_eq!(rows[0].mean, 1.0);
        assert_eq!(rows[0].std, 0.0);
        assert_eq!(rows[1].mean, 2.0);
        assert!(rows[2].mean >= rows[1].mean);
        assert!(rows[2].counts.iter().all(|&c| (1..=4).contains(&c)));
    }
}
