use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::counts::binomial;
use crate::error::{Error, Result};

/// Constants and sizes the expected-complexity bounds depend on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub c_grad: f64,
    pub c_bias: f64,
    /// Number of outputs (classes).
    pub m: u64,
    pub n0: u64,
    /// Total number of maxout units.
    pub n: u64,
    pub k: u64,
    pub r: u64,
}

impl BoundParams {
    /// `T = 2⁵ C_grad C_bias`.
    pub fn t(&self) -> f64 {
        32.0 * self.c_grad * self.c_bias
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_grad > 0.0 && self.c_grad.is_finite() && self.c_bias > 0.0 && self.c_bias.is_finite()) {
            return Err(Error::invalid("C_grad and C_bias must be positive and finite"));
        }
        if self.n0 == 0 || self.k == 0 {
            return Err(Error::invalid("n0 and K must be positive"));
        }
        if self.r > self.n0 {
            return Err(Error::invalid(format!("r = {} exceeds n0 = {}", self.r, self.n0)));
        }
        Ok(())
    }

    fn cc(&self) -> f64 {
        self.c_grad * self.c_bias
    }
}

fn require_delta(delta_ok: bool) -> Result<()> {
    if delta_ok {
        Ok(())
    } else {
        Err(Error::invalid("this bound holds only for cubes with side above δ0; pass the assertion flag"))
    }
}

/// `ln C(n, k)`; `-∞` when `k > n`.
fn ln_binom(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if n > 1000 {
        let lg = |x: u64| libm::lgamma(x as f64 + 1.0);
        lg(n) - lg(k) - lg(n - k)
    } else {
        binomial(n, k).to_f64().unwrap_or(f64::INFINITY).ln()
    }
}

/// One factor of a bound formula.
#[derive(Clone, Copy)]
enum F {
    Pow(f64, u64),
    Binom(u64, u64),
    InvFactorial(u64),
    InvPow(f64, u64),
}

impl F {
    fn direct(self) -> f64 {
        match self {
            F::Pow(b, e) => b.powi(e as i32),
            F::InvPow(b, e) => 1.0 / b.powi(e as i32),
            F::Binom(n, k) if n <= 1000 => binomial(n, k).to_f64().unwrap_or(f64::INFINITY),
            F::Binom(n, k) => ln_binom(n, k).exp(),
            F::InvFactorial(n) => 1.0 / (1..=n).map(|i| i as f64).product::<f64>(),
        }
    }

    fn ln(self) -> f64 {
        match self {
            F::Pow(b, e) => e as f64 * b.ln(),
            F::InvPow(b, e) => -(e as f64) * b.ln(),
            F::Binom(n, k) => ln_binom(n, k),
            F::InvFactorial(n) => -libm::lgamma(n as f64 + 1.0),
        }
    }
}

/// Product of the factors, in plain arithmetic when it stays finite and in log
/// space otherwise (saturating to `+∞`).
fn product(factors: &[F]) -> f64 {
    let direct: f64 = factors.iter().map(|f| f.direct()).product();
    if direct.is_finite() && (direct > 0.0 || factors.iter().any(|f| f.ln() == f64::NEG_INFINITY)) {
        return direct;
    }
    let ln: f64 = factors.iter().map(|f| f.ln()).sum();
    if ln.is_nan() {
        f64::INFINITY
    } else {
        ln.exp()
    }
}

fn big_to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

/// Expected number of `r`-partial activation regions per unit volume of a cube
/// of side above `δ0`: `C(rK, 2r) C(N, r) K^{N−r}` for `N ≤ n0`, otherwise
/// `(TKN)^{n0} C(n0 K, 2 n0) / ((2K)^r n0!)`.
pub fn expected_regions_upper(bp: &BoundParams, delta_ok: bool) -> Result<f64> {
    bp.validate()?;
    require_delta(delta_ok)?;
    let (n0, n, k, r) = (bp.n0, bp.n, bp.k, bp.r);
    if n <= n0 {
        return Ok(big_to_f64(&super::trivial_pattern_bound(n, k, r)));
    }
    Ok(product(&[
        F::Pow(bp.t() * (k * n) as f64, n0),
        F::Binom(n0 * k, 2 * n0),
        F::InvPow((2 * k) as f64, r),
        F::InvFactorial(n0),
    ]))
}

/// Expected `(n0 − r)`-volume of the non-linear locus per unit volume:
/// `(2 C_grad C_bias)^r C(rK, 2r) C(N, r)`.
pub fn volume_upper(bp: &BoundParams) -> Result<f64> {
    bp.validate()?;
    let (n, k, r) = (bp.n, bp.k, bp.r);
    Ok(product(&[F::Pow(2.0 * bp.cc(), r), F::Binom(r * k, 2 * r), F::Binom(n, r)]))
}

/// Number of `r`-partial decision-boundary patterns:
/// `Σ_{i=1}^{min(M−1, r)} C(M, i+1) C(K(r−i), 2(r−i)) C(N, r−i) K^{N−r+i}`.
pub fn db_pattern_bound(n: u64, k: u64, r: u64, m: u64) -> BigUint {
    let top = m.saturating_sub(1).min(r);
    (1..=top)
        .filter(|&i| r - i <= n)
        .map(|i| {
            binomial(m, i + 1)
                * binomial(k * (r - i), 2 * (r - i))
                * binomial(n, r - i)
                * num_traits::pow(BigUint::from(k), (n - (r - i)) as usize)
        })
        .fold(BigUint::zero(), |a, b| a + b)
}

/// Expected number of linear pieces of the decision boundary per unit volume:
/// `C(M, 2) K^N` for `N ≤ n0`, otherwise
/// `(2⁴ C_grad C_bias)^{n0} (2KN)^{n0−1} / (n0−1)! · C(M, 2) · C(K(n0−1), 2(n0−1))`.
pub fn db_expected_upper(bp: &BoundParams, delta_ok: bool) -> Result<f64> {
    bp.validate()?;
    require_delta(delta_ok)?;
    let (n0, n, k, m) = (bp.n0, bp.n, bp.k, bp.m);
    if n <= n0 {
        return Ok(product(&[F::Binom(m, 2), F::Pow(k as f64, n)]));
    }
    Ok(product(&[
        F::Pow(16.0 * bp.cc(), n0),
        F::Pow((2 * k * n) as f64, n0 - 1),
        F::InvFactorial(n0 - 1),
        F::Binom(m, 2),
        F::Binom(k * (n0 - 1), 2 * (n0 - 1)),
    ]))
}

/// Expected `(n0 − r)`-volume of the decision boundary's `r`-skeleton per unit
/// volume: `(2 C_grad C_bias)^r Σ_{i=1}^{min(M−1, r)} C(M, i+1) C(K(r−i), 2(r−i)) C(N, r−i)`.
pub fn db_volume_upper(bp: &BoundParams) -> Result<f64> {
    bp.validate()?;
    let (n, k, r, m) = (bp.n, bp.k, bp.r, bp.m);
    let sum: f64 = (1..=m.saturating_sub(1).min(r))
        .map(|i| product(&[F::Binom(m, i + 1), F::Binom(k * (r - i), 2 * (r - i)), F::Binom(n, r - i)]))
        .sum();
    Ok(product(&[F::Pow(2.0 * bp.cc(), r)]) * sum)
}

/// Lower bound on the expected distance to the decision boundary,
/// `c / (2 C_grad C_bias M^{m+1} m)` with `m = min(M − 1, n0)`. The universal
/// constant `c` is left to the caller.
pub fn db_distance_lower(bp: &BoundParams, c: f64) -> Result<f64> {
    bp.validate()?;
    if bp.m < 2 {
        return Err(Error::invalid("distance to the decision boundary needs M ≥ 2"));
    }
    let mm = (bp.m - 1).min(bp.n0);
    Ok(c / (2.0 * bp.cc() * (bp.m as f64).powi(mm as i32 + 1) * mm as f64))
}

/// Expected number of activation regions of a zero-bias network:
/// `K^N` for `N ≤ n0`, otherwise `2 n0 (T′KN)^{n0−1} C(K(n0−1), 2(n0−1)) / (n0−1)!`.
pub fn zero_bias_upper(n0: u64, n: u64, k: u64, t_prime: f64) -> Result<f64> {
    if n0 == 0 || k == 0 || !(t_prime > 0.0) {
        return Err(Error::invalid("need n0 ≥ 1, K ≥ 1 and T′ > 0"));
    }
    if n <= n0 {
        return Ok(product(&[F::Pow(k as f64, n)]));
    }
    Ok(product(&[
        F::Pow((2 * n0) as f64, 1),
        F::Pow(t_prime * (k * n) as f64, n0 - 1),
        F::Binom(k * (n0 - 1), 2 * (n0 - 1)),
        F::InvFactorial(n0 - 1),
    ]))
}

/// Density supremum of `N(0, s²)` biases: `1 / (s √(2π))`.
pub fn c_bias_normal(std: f64) -> f64 {
    1.0 / (std * (2.0 * std::f64::consts::PI).sqrt())
}
