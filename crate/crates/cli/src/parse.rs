//! Command-line value syntax: states, grids and the thread-count variable.

use hyperbessel::hypergroup::{FanPoint, HeisPoint};

/// `tau=<real>,k=<int>` or `y1=<real>`.
pub fn parse_state(s: &str) -> Result<FanPoint, String> {
    let mut tau = None;
    let mut k = None;
    let mut y1 = None;
    for part in s.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("state field '{part}' is not key=value"))?;
        match key.trim() {
            "tau" => tau = Some(parse_real(value)?),
            "k" => {
                k = Some(
                    value
                        .trim()
                        .parse::<u32>()
                        .map_err(|_| format!("k must be a nonnegative integer, got '{value}'"))?,
                )
            }
            "y1" => y1 = Some(parse_real(value)?),
            other => return Err(format!("unknown state field '{other}'")),
        }
    }
    let point = match (tau, k, y1) {
        (Some(tau), Some(k), None) => FanPoint::discrete(tau, k),
        (None, None, Some(y1)) => FanPoint::continuous(y1),
        _ => return Err(format!("state '{s}' must be tau=<real>,k=<int> or y1=<real>")),
    };
    point.map_err(|e| e.to_string())
}

pub fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

/// A list of reals given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// Laguerre hypergroup points given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Points(pub Vec<HeisPoint>);

/// A comma-separated list, or `start:stop:count` with both ends included.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    grid_values(s).map(Grid)
}

fn grid_values(s: &str) -> Result<Vec<f64>, String> {
    let fields: Vec<&str> = s.split(':').collect();
    match fields.as_slice() {
        [single] => single.split(',').map(parse_real).collect(),
        [start, stop, count] => {
            let a = parse_real(start)?;
            let b = parse_real(stop)?;
            let n: usize = count
                .trim()
                .parse()
                .map_err(|_| format!("grid count must be a positive integer, got '{count}'"))?;
            match n {
                0 => Err("grid count must be positive".into()),
                1 => Ok(vec![a]),
                _ => Ok((0..n)
                    .map(|i| {
                        if i == n - 1 {
                            b
                        } else {
                            a + (b - a) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect()),
            }
        }
        _ => Err(format!("grid '{s}' must be a list or start:stop:count")),
    }
}

/// `x:w` pairs separated by commas, e.g. `0.5:1,1.2:-0.3`.
pub fn parse_heis_points(s: &str) -> Result<Points, String> {
    s.split(',')
        .map(|pair| {
            let (x, w) = pair
                .split_once(':')
                .ok_or_else(|| format!("point '{pair}' must be x:w"))?;
            HeisPoint::new(parse_real(x)?, parse_real(w)?).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()
        .map(Points)
}

/// Value of `HYPERBESSEL_THREADS`, if set.
pub fn thread_count(var: Option<String>) -> Result<Option<usize>, String> {
    match var {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("HYPERBESSEL_THREADS must be a positive integer, got '{v}'")),
        },
    }
}
