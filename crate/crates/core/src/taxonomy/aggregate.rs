use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("cannot aggregate an empty list of importance measures")]
    Empty,
}

/// Averaging aggregation of importance measures: the arithmetic mean.
///
/// The sum is computed exactly (correctly rounded), so the result does not
/// depend on the order of `measures`. The quotient is clamped into
/// `[min, max]` of the inputs, which keeps idempotence and compensativeness
/// exact under floating-point rounding.
pub fn aggregate(measures: &[f64]) -> Result<f64, AggregateError> {
    if measures.is_empty() {
        return Err(AggregateError::Empty);
    }
    let (lo, hi) = measures
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let mean = exact_sum(measures.iter().copied()) / measures.len() as f64;
    Ok(mean.clamp(lo, hi))
}

/// Correctly rounded floating-point sum (Shewchuk's partials).
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }

    // Round the partials to a single double, honouring half-even ties.
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        let yr = x - hi;
        if y == yr {
            hi = x;
        }
    }
    hi
}
