//! Name → value table of every calculator that applies to an architecture.

use maxreg::bounds::{self, BigUint, BoundParams};
use maxreg::init::DistShape;
use maxreg::net::Architecture;
use serde_json::{Map, Number, Value};

use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum Entry {
    Int(BigUint),
    Real(f64),
}

impl Entry {
    fn to_json(&self) -> Value {
        match self {
            Entry::Int(v) => match u64::try_from(v) {
                Ok(small) => Value::from(small),
                Err(_) => Value::String(v.to_string()),
            },
            Entry::Real(x) => Number::from_f64(*x).map_or_else(|| Value::String(x.to_string()), Value::Number),
        }
    }
}

impl std::fmt::Display for Entry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Entry::Int(v) => write!(f, "{v}"),
            Entry::Real(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsInput {
    pub arch: Architecture,
    pub c_grad: f64,
    pub c_bias: f64,
    pub r: u64,
    /// Caller's assertion that the cube side exceeds `δ0`.
    pub delta_ok: bool,
    /// Universal constant of the distance bound.
    pub c: Option<f64>,
    /// `T′` of the zero-bias bound.
    pub t_prime: Option<f64>,
}

pub fn bounds_table(input: &BoundsInput) -> Result<Vec<(String, Entry)>> {
    let arch = &input.arch;
    let (n0, n, k, m) = (
        arch.n0 as u64,
        arch.total_units() as u64,
        arch.rank as u64,
        arch.out_dim as u64,
    );
    let r = input.r;
    let bp = BoundParams {
        c_grad: input.c_grad,
        c_bias: input.c_bias,
        m,
        n0,
        n,
        k,
        r,
    };
    bp.validate()?;
    let mut out: Vec<(String, Entry)> = Vec::new();
    let int = |name: &str, v: BigUint, out: &mut Vec<(String, Entry)>| out.push((name.into(), Entry::Int(v)));
    int("trivial_pattern_bound", bounds::trivial_pattern_bound(n, k, r), &mut out);
    int("exact_pattern_count", bounds::exact_pattern_count(n, k, r), &mut out);
    if let Some(&n1) = arch.widths.first() {
        let (regions, bounded) = bounds::generic_lower_bound(n0, n1 as u64);
        int("generic_lower_bound.regions", regions, &mut out);
        int("generic_lower_bound.bounded", bounded, &mut out);
        if arch.depth() == 1 {
            int("max_regions_shallow", bounds::max_regions_shallow(n0, n1 as u64, k), &mut out);
        }
        let widths: Vec<u64> = arch.widths.iter().map(|&w| w as u64).collect();
        if let Ok((lo, hi)) = bounds::max_regions_deep_bounds(n0, &widths, k, n0) {
            int("max_regions_deep.lower", lo, &mut out);
            int("max_regions_deep.upper", hi, &mut out);
        }
    }
    let mut real = |name: &str, v: f64| out.push((name.into(), Entry::Real(v)));
    real("T", bp.t());
    if input.delta_ok {
        real("expected_regions_upper", bounds::expected_regions_upper(&bp, true)?);
    }
    real("volume_upper", bounds::volume_upper(&bp)?);
    if m >= 2 {
        if input.delta_ok {
            real("db_expected_upper", bounds::db_expected_upper(&bp, true)?);
        }
        real("db_volume_upper", bounds::db_volume_upper(&bp)?);
        if let Some(c) = input.c {
            real("db_distance_lower", bounds::db_distance_lower(&bp, c)?);
        }
    }
    if let Some(tp) = input.t_prime {
        real("zero_bias_upper", bounds::zero_bias_upper(n0, n, k, tp)?);
    }
    if let Ok(std) = bounds::maxout_he_std(arch.rank, arch.n0, DistShape::Normal) {
        real("maxout_he_std.first_layer", std);
    }
    if m >= 2 && r >= 1 {
        out.push(("db_pattern_bound".into(), Entry::Int(bounds::db_pattern_bound(n, k, r, m))));
    }
    Ok(out)
}

pub fn to_json(table: &[(String, Entry)]) -> Value {
    Value::Object(table.iter().map(|(k, v)| (k.clone(), v.to_json())).collect::<Map<_, _>>())
}

pub fn to_text(table: &[(String, Entry)]) -> String {
    let width = table.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    table.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}
