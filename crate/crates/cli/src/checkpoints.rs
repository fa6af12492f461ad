//! Checkpoint grids: explicit indices and named generators.
//!
//! | generator             | expands to                                              |
//! |-----------------------|---------------------------------------------------------|
//! | `dyadic`              | `1, 2, 4, ...` up to `n_max`                            |
//! | `log-spaced(k)`       | `k` geometric points in `[10, n_max / separation]`      |
//! | `log-range(lo,hi,k)`  | `k` geometric points in `[lo, hi]`                      |
//!
//! A list mixes generators and integers; the result is their sorted union.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckpointItem {
    Index(usize),
    Generator(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckpointSpec {
    One(CheckpointItem),
    Many(Vec<CheckpointItem>),
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        CheckpointSpec::One(CheckpointItem::Generator("log-spaced(20)".into()))
    }
}

fn geometric(lo: usize, hi: usize, k: usize) -> Result<Vec<usize>, String> {
    if lo == 0 || lo > hi {
        return Err(format!("empty geometric range [{lo}, {hi}]"));
    }
    if k == 0 {
        return Err("a geometric grid needs at least one point".into());
    }
    if k == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi as f64 / lo as f64).ln();
    let mut out: Vec<usize> = (0..k)
        .map(|i| {
            let x = lo as f64 * (ratio * i as f64 / (k - 1) as f64).exp();
            (x.round() as usize).clamp(lo, hi)
        })
        .collect();
    out.dedup();
    Ok(out)
}

fn parse_args(inner: &str, want: usize, name: &str) -> Result<Vec<usize>, String> {
    let args: Result<Vec<usize>, _> = inner.split(',').map(|a| a.trim().parse::<usize>()).collect();
    match args {
        Ok(a) if a.len() == want => Ok(a),
        _ => Err(format!("`{name}` takes {want} non-negative integer argument(s)")),
    }
}

fn expand_generator(text: &str, n_max: usize, separation: usize) -> Result<Vec<usize>, String> {
    let text = text.trim();
    if text == "dyadic" {
        return Ok(std::iter::successors(Some(1usize), |&n| n.checked_mul(2))
            .take_while(|&n| n <= n_max)
            .collect());
    }
    let (name, inner) = text
        .strip_suffix(')')
        .and_then(|t| t.split_once('('))
        .ok_or_else(|| format!("unknown checkpoint generator `{text}`"))?;
    match name.trim() {
        "log-spaced" => {
            let k = parse_args(inner, 1, "log-spaced")?[0];
            let hi = n_max / separation.max(1);
            if hi < 10 {
                return Err(format!(
                    "log-spaced needs n_max / separation_factor >= 10 (got {hi})"
                ));
            }
            geometric(10, hi, k)
        }
        "log-range" => {
            let a = parse_args(inner, 3, "log-range")?;
            if a[1] > n_max {
                return Err(format!("log-range end {} exceeds n_max = {n_max}", a[1]));
            }
            geometric(a[0], a[1], a[2])
        }
        other => Err(format!("unknown checkpoint generator `{other}`")),
    }
}

impl CheckpointSpec {
    /// Sorted, deduplicated checkpoints, all within `[0, n_max]`.
    pub fn expand(&self, n_max: usize, separation: usize) -> Result<Vec<usize>, String> {
        let items: &[CheckpointItem] = match self {
            CheckpointSpec::One(item) => std::slice::from_ref(item),
            CheckpointSpec::Many(items) => items,
        };
        let mut out = Vec::new();
        for item in items {
            match item {
                CheckpointItem::Index(n) if *n > n_max => {
                    return Err(format!("checkpoint {n} exceeds n_max = {n_max}"))
                }
                CheckpointItem::Index(n) => out.push(*n),
                CheckpointItem::Generator(g) => out.extend(expand_generator(g, n_max, separation)?),
            }
        }
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err("checkpoint list is empty".into());
        }
        Ok(out)
    }
}
