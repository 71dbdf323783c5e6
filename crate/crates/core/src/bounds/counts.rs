use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn pow(base: u64, exp: u64) -> BigUint {
    num_traits::pow(BigUint::from(base), exp as usize)
}

/// `C(rK, 2r) · C(N, r) · K^{N−r}`; zero for `r > N`.
pub fn trivial_pattern_bound(n: u64, k: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    binomial(r * k, 2 * r) * binomial(n, r) * pow(k, n - r)
}

/// Number of `r`-partial activation patterns of `N` rank-`K` units: the
/// coefficient of `z^r` in `(Σ_{j<K} C(K, 1+j) z^j)^N`.
pub fn exact_pattern_count(n: u64, k: u64, r: u64) -> BigUint {
    let per_unit: Vec<BigUint> = (0..k).map(|j| binomial(k, j + 1)).collect();
    let r = r as usize;
    let mut poly = vec![BigUint::zero(); r + 1];
    poly[0] = BigUint::one();
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); r + 1];
        for (d, c) in poly.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            for (j, w) in per_unit.iter().enumerate().take(r + 1 - d) {
                next[d + j] += c * w;
            }
        }
        poly = next;
    }
    poly.swap_remove(r)
}

/// Generic single-layer ReLU lower bounds: `(Σ_{j≤n0} C(n1, j), C(n1−1, n0))`
/// (all regions, bounded regions).
pub fn generic_lower_bound(n0: u64, n1: u64) -> (BigUint, BigUint) {
    let regions = (0..=n0).map(|j| binomial(n1, j)).sum();
    let bounded = if n1 == 0 { BigUint::zero() } else { binomial(n1 - 1, n0) };
    (regions, bounded)
}

/// `Σ_{j≤n0} e_j(k_1 − 1, …, k_{n1} − 1)` with `e_j` the elementary symmetric
/// polynomial.
pub fn layer_positive_measure_count(n0: u64, ks: &[u64]) -> Result<BigUint> {
    if ks.contains(&0) {
        return Err(Error::invalid("every k_i must be at least 1"));
    }
    let top = (n0 as usize).min(ks.len());
    let mut e = vec![BigUint::zero(); top + 1];
    e[0] = BigUint::one();
    for &k in ks {
        for j in (1..=top).rev() {
            let add = &e[j - 1] * (k - 1);
            e[j] += add;
        }
    }
    Ok(e.into_iter().sum())
}

fn even_quotient(width: u64, n: u64, layer: usize) -> Result<u64> {
    if n == 0 || !width.is_multiple_of(n) || !(width / n).is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "layer {layer}: width {width} must be an even multiple of {n}"
        )));
    }
    Ok(width / n)
}

/// `Π_l Π_{i≤n0} ((n_l/n0)(k_{li} − 1) + 1)`; each `n_l/n0` must be an even integer.
pub fn deep_grid_count(n0: u64, k_matrix: &[Vec<u64>], widths: &[u64]) -> Result<BigUint> {
    if k_matrix.len() != widths.len() {
        return Err(Error::invalid("need one row of k values per layer"));
    }
    let mut acc = BigUint::one();
    for (l, (ks, &w)) in k_matrix.iter().zip(widths).enumerate() {
        let q = even_quotient(w, n0, l)?;
        if ks.len() != n0 as usize || ks.contains(&0) {
            return Err(Error::invalid(format!("layer {l}: need {n0} values k ≥ 1")));
        }
        for &k in ks {
            acc *= q * (k - 1) + 1;
        }
    }
    Ok(acc)
}

/// `Σ_{j≤n0} C(n1, j)(K−1)^j`.
pub fn max_regions_shallow(n0: u64, n1: u64, k: u64) -> BigUint {
    (0..=n0).map(|j| binomial(n1, j) * pow(k.saturating_sub(1), j)).sum()
}

/// `(Π_l ((n_l/n)(K−1) + 1)^n, Π_l Σ_{j≤e_l} C(n_l, j)(K−1)^j)` with
/// `e_l = min(n0, n_1, …, n_{l−1})`; requires `n ≤ n0` and even `n_l/n`.
pub fn max_regions_deep_bounds(n0: u64, widths: &[u64], k: u64, n: u64) -> Result<(BigUint, BigUint)> {
    if n == 0 || n > n0 {
        return Err(Error::invalid(format!("need 1 ≤ n ≤ n0, got n={n}, n0={n0}")));
    }
    let mut lower = BigUint::one();
    let mut upper = BigUint::one();
    let mut e = n0;
    for (l, &w) in widths.iter().enumerate() {
        let q = even_quotient(w, n, l)?;
        lower *= pow(q * (k - 1) + 1, n);
        upper *= max_regions_shallow(e, w, k);
        e = e.min(w);
    }
    Ok((lower, upper))
}
