//! Thin wrappers over `libm` so the crate stays `no_std`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `ln Σ exp(v)` over the finite entries; `-inf` when every entry is `-inf`.
pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let total: f64 = values.map(|v| exp(v - max)).sum();
    max + ln(total)
}

/// Softmax of `logits`, written into `out`. Returns `false` when every logit
/// is `-inf` (no mass anywhere).
pub fn softmax_into(logits: &[f64], out: &mut [f64]) -> bool {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return false;
    }
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = exp(l - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    true
}

/// Number of unordered pairs among `n` individuals.
pub fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + ln_1p(exp(lo - hi))
}
