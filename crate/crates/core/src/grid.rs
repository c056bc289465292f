//! Abscissa grids.
//!
//! Text forms accepted by [`Grid::parse`]:
//!
//! * `dyadic:lo:hi`: every power of two in [lo, hi]
//! * `geometric:lo:hi:m`: ratio 2^{1/m}; integer grids round and deduplicate
//! * `list:a,b,c`: explicit points
//! * `linear:lo:hi:count`

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Grid {
    Dyadic { lo: f64, hi: f64 },
    Geometric { lo: f64, hi: f64, per_octave: u32 },
    Linear { lo: f64, hi: f64, count: usize },
    List(Vec<f64>),
}

impl Grid {
    pub fn dyadic(lo: f64, hi: f64) -> Self {
        Grid::Dyadic { lo, hi }
    }

    pub fn geometric(lo: f64, hi: f64, per_octave: u32) -> Self {
        Grid::Geometric { lo, hi, per_octave }
    }

    /// Real-valued abscissas, strictly increasing.
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match *self {
            Grid::Dyadic { lo, hi } => {
                check_range(lo, hi, true)?;
                let j0 = lo.log2().ceil() as i32;
                let j1 = hi.log2().floor() as i32;
                let mut v: Vec<f64> = (j0..=j1).map(|j| 2f64.powi(j)).collect();
                v.retain(|&x| x >= lo && x <= hi);
                v
            }
            Grid::Geometric { lo, hi, per_octave } => {
                check_range(lo, hi, true)?;
                if per_octave == 0 {
                    return Err(LabError::InvalidInput(
                        "geometric grid needs per_octave >= 1".into(),
                    ));
                }
                let m = per_octave as f64;
                let j0 = (lo.log2() * m - 1e-9).ceil() as i64;
                let j1 = (hi.log2() * m + 1e-9).floor() as i64;
                (j0..=j1).map(|j| 2f64.powf(j as f64 / m)).collect()
            }
            Grid::Linear { lo, hi, count } => {
                check_range(lo, hi, false)?;
                match count {
                    0 => Vec::new(),
                    1 => vec![lo],
                    _ => (0..count)
                        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                        .collect(),
                }
            }
            Grid::List(ref v) => v.clone(),
        };
        if pts.is_empty() {
            return Err(LabError::InvalidInput(format!("grid {self} is empty")));
        }
        if pts.iter().any(|x| !x.is_finite()) || pts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidInput(format!(
                "grid {self} is not strictly increasing"
            )));
        }
        Ok(pts)
    }

    /// Integer abscissas (step counts): rounded, deduplicated, nonnegative.
    pub fn integer_points(&self) -> Result<Vec<u64>> {
        let mut v: Vec<u64> = self
            .points()?
            .into_iter()
            .map(|x| {
                if x < 0.0 {
                    Err(LabError::InvalidInput(format!("negative step index {x}")))
                } else {
                    Ok(x.round() as u64)
                }
            })
            .collect::<Result<_>>()?;
        v.dedup();
        Ok(v)
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.parse()
    }
}

fn check_range(lo: f64, hi: f64, positive: bool) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo || (positive && lo <= 0.0) {
        return Err(LabError::InvalidInput(format!(
            "bad grid range [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn num(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| LabError::Parse(format!("not a number: \"{s}\"")))
}

impl FromStr for Grid {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["dyadic", lo, hi] => Ok(Grid::Dyadic { lo: num(lo)?, hi: num(hi)? }),
            ["geometric", lo, hi, m] => Ok(Grid::Geometric {
                lo: num(lo)?,
                hi: num(hi)?,
                per_octave: m
                    .trim()
                    .parse()
                    .map_err(|_| LabError::Parse(format!("bad per-octave count \"{m}\"")))?,
            }),
            ["linear", lo, hi, n] => Ok(Grid::Linear {
                lo: num(lo)?,
                hi: num(hi)?,
                count: n
                    .trim()
                    .parse()
                    .map_err(|_| LabError::Parse(format!("bad count \"{n}\"")))?,
            }),
            ["list", items] => Ok(Grid::List(items.split(',').map(num).collect::<Result<_>>()?)),
            _ => Err(LabError::Parse(format!(
                "unrecognized grid \"{s}\" (expected dyadic:lo:hi, geometric:lo:hi:m, linear:lo:hi:n or list:a,b,...)"
            ))),
        }
    }
}

impl TryFrom<String> for Grid {
    type Error = LabError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Grid> for String {
    fn from(g: Grid) -> String {
        g.to_string()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Dyadic { lo, hi } => write!(f, "dyadic:{lo}:{hi}"),
            Grid::Geometric { lo, hi, per_octave } => write!(f, "geometric:{lo}:{hi}:{per_octave}"),
            Grid::Linear { lo, hi, count } => write!(f, "linear:{lo}:{hi}:{count}"),
            Grid::List(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "list:{}", items.join(","))
            }
        }
    }
}

/// Dyadic step counts 1, 2, 4, ... up to `max`, plus `max` itself.
pub fn dyadic_steps(max: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut n = 1u64;
    while n <= max {
        v.push(n);
        n = match n.checked_mul(2) {
            Some(m) => m,
            None => break,
        };
    }
    if v.last() != Some(&max) && max > 0 {
        v.push(max);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_one_to_a_million_has_twenty_points() {
        let g: Grid = "dyadic:1:1e6".parse().unwrap();
        let p = g.points().unwrap();
        assert_eq!(p.len(), 20);
        assert_eq!(p[0], 1.0);
        assert_eq!(*p.last().unwrap(), 524_288.0);
    }

    #[test]
    fn geometric_contains_octaves() {
        let p = Grid::geometric(1.0, 16.0, 4).points().unwrap();
        assert_eq!(p.len(), 17);
        assert!((p[4] - 2.0).abs() < 1e-12);
        assert!((p[16] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn integer_points_deduplicate() {
        let p = Grid::geometric(1.0, 8.0, 8).integer_points().unwrap();
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p[0], 1);
        assert_eq!(*p.last().unwrap(), 8);
    }

    #[test]
    fn parse_and_display_agree() {
        for s in [
            "dyadic:1:1000000",
            "geometric:100:100000:4",
            "linear:0:1:5",
            "list:1,2,3.5",
        ] {
            let g: Grid = s.parse().unwrap();
            let again: Grid = g.to_string().parse().unwrap();
            assert_eq!(g, again);
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!("dyadic:1".parse::<Grid>().is_err());
        assert!("list:1,x".parse::<Grid>().is_err());
        assert!(Grid::List(vec![2.0, 1.0]).points().is_err());
        assert!(Grid::dyadic(0.0, 4.0).points().is_err());
    }

    #[test]
    fn dyadic_steps_include_max() {
        assert_eq!(dyadic_steps(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(dyadic_steps(8), vec![1, 2, 4, 8]);
    }
}
