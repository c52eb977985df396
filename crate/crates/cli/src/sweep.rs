use anyhow::{bail, Context, Result};

/// Parses `start:step:stop` (inclusive) or `a,b,c`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step.is_nan() || step <= 0.0 {
                bail!("grid step must be positive, got {step}");
            }
            if stop < start {
                bail!("grid stop {stop} is below start {start}");
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // rounding to 1e-9 keeps 0.1-style steps from printing as 0.30000000000000004
            Ok((0..n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => bail!("expected start:step:stop or a comma list, got {s:?}"),
    }
}

fn num(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("not a number: {s:?}"))?;
    if !v.is_finite() {
        bail!("not a finite number: {s:?}");
    }
    Ok(v)
}

/// Parses a non-negative integer written plainly or as `1e6`.
pub fn parse_count(s: &str) -> Result<u64> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    let v = num(s)?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        bail!("not a non-negative integer: {s:?}");
    }
    Ok(v as u64)
}
