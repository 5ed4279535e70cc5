//! Parameter grids given as `lo:hi:step`, a comma list, or one value.

/// Grid values are rounded to this many decimals so that `0:1:0.1` yields
/// `0.3` rather than `0.30000000000000004`.
const DECIMALS: i32 = 12;

fn tidy(v: f64) -> f64 {
    let scale = 10f64.powi(DECIMALS);
    (v * scale).round() / scale
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Parsed grid, in the order given.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (number(lo)?, number(hi)?, number(step)?);
            if step <= 0.0 {
                return Err("step must be positive".into());
            }
            if hi < lo {
                return Err("grid end lies below its start".into());
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| tidy(lo + i as f64 * step)).collect()
        }
        [single] => single.split(',').map(number).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("expected lo:hi:step or a comma list, got `{s}`")),
    };
    if values.is_empty() {
        return Err("grid is empty".into());
    }
    Ok(values)
}

/// A grid whose values must all lie in [0, 1].
pub fn parse_unit_grid(s: &str) -> Result<Grid, String> {
    let values = parse_grid(s)?;
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(format!("{v} outside [0, 1]")),
        None => Ok(Grid(values)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_grid("0:1:0.1").unwrap().len(), 11);
        assert_eq!(parse_grid("0:1:0.1").unwrap()[3], 0.3);
        assert_eq!(parse_grid("0:1:0.05").unwrap().len(), 21);
        assert_eq!(parse_grid("0.1:0.9:0.1").unwrap().len(), 9);
        assert_eq!(parse_grid("0.5").unwrap(), [0.5]);
        assert_eq!(parse_grid("0.1,0.4").unwrap(), [0.1, 0.4]);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in ["", "1:0:0.1", "0:1:0", "0:1", "a:b:c", "0:1:-1"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
        assert!(parse_unit_grid("0:2:0.5").is_err());
    }
}
