//! Parsing of numeric grids given on the command line or in a config file.

/// A real number, optionally written as a fraction `a/b`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (parse_plain(a)?, parse_plain(b)?);
            if b == 0.0 {
                return Err(format!("zero denominator in `{s}`"));
            }
            a / b
        }
        None => parse_plain(s)?,
    };
    Ok(value)
}

fn parse_plain(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// A comma-separated list of numbers, or `start:stop:count`.
pub fn parse_float_grid(s: &str) -> Result<Vec<f64>, String> {
    let grid = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(format!("range `{s}` must look like start:stop:count"));
        };
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("point count `{count}` is not a non-negative integer"))?;
        linspace(parse_number(start)?, parse_number(stop)?, count)
    } else {
        s.split(',').map(parse_number).collect::<Result<_, _>>()?
    };
    check_monotone(&grid, s)?;
    Ok(grid)
}

fn parse_pool(s: &str) -> Result<usize, String> {
    let s = s.trim();
    let bad = || format!("`{s}` is not a pool size");
    match s.split_once('^') {
        Some(("2", e)) => {
            let e: u32 = e.trim().parse().map_err(|_| bad())?;
            1usize.checked_shl(e).filter(|_| e < usize::BITS).ok_or_else(bad)
        }
        Some(_) => Err(format!("`{s}`: only powers of two may be written with `^`")),
        None => s.parse().map_err(|_| bad()),
    }
}

/// Pool sizes: a comma-separated list of integers and `2^k` terms, or the
/// power-of-two range `2^a..2^b`.
pub fn parse_pool_grid(s: &str) -> Result<Vec<usize>, String> {
    let grid: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let exp = |t: &str| -> Result<u32, String> {
            match t.trim().strip_prefix("2^") {
                Some(e) => e.trim().parse().map_err(|_| format!("bad exponent in `{t}`")),
                None => Err(format!("range ends must be powers of two written 2^k, got `{t}`")),
            }
        };
        let (a, b) = (exp(lo)?, exp(hi)?);
        if b >= usize::BITS {
            return Err(format!("2^{b} is too large"));
        }
        (a..=b).map(|e| 1usize << e).collect()
    } else {
        s.split(',').map(parse_pool).collect::<Result<_, _>>()?
    };
    let as_f: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    check_monotone(&as_f, s)?;
    Ok(grid)
}

/// Non-empty and strictly increasing or strictly decreasing.
pub fn check_monotone(grid: &[f64], text: &str) -> Result<(), String> {
    if grid.is_empty() {
        return Err(format!("grid `{text}` is empty"));
    }
    let up = grid.windows(2).all(|w| w[0] < w[1]);
    let down = grid.windows(2).all(|w| w[0] > w[1]);
    if up || down {
        Ok(())
    } else {
        Err(format!("grid `{text}` is not strictly monotone"))
    }
}
