use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::net::{Architecture, Feature, Network, OutputLayer, Parameters};

/// Network with iid uniform(−1, 1) weights and biases.
pub fn random_net(rng: &mut ChaCha8Rng, n0: usize, widths: &[usize], k: usize, m: usize) -> Network<f64> {
    let arch = Architecture::new(n0, widths.to_vec(), k, m).unwrap();
    let mut u = || rng.gen_range(-1.0..1.0);
    let mut hidden = Vec::new();
    for (l, &w) in widths.iter().enumerate() {
        let fan = arch.fan_in(l);
        hidden.push(
            (0..w)
                .map(|_| {
                    (0..k)
                        .map(|_| Feature {
                            w: (0..fan).map(|_| u()).collect(),
                            b: u(),
                        })
                        .collect()
                })
                .collect(),
        );
    }
    let last = arch.last_width();
    let weights = (0..m).map(|_| (0..last).map(|_| u()).collect()).collect();
    let b = (0..m).map(|_| u()).collect();
    Network::new(arch, Parameters { hidden, output: OutputLayer { weights, b } }).unwrap()
}

/// Single-unit network with identity output.
pub fn single_unit(features: &[(&[f64], f64)]) -> Network<f64> {
    let n0 = features[0].0.len();
    let arch = Architecture::new(n0, vec![1], features.len(), 1).unwrap();
    let unit = features.iter().map(|(w, b)| Feature { w: w.to_vec(), b: *b }).collect();
    Network::new(
        arch,
        Parameters {
            hidden: vec![vec![unit]],
            output: OutputLayer { weights: vec![vec![1.0]], b: vec![0.0] },
        },
    )
    .unwrap()
}
