//! Rank-based comparison of algorithms: Kruskal-Wallis omnibus test and
//! Dunn's pairwise z-test with a Bonferroni-corrected threshold.
//!
//! Lower values are better (the samples are total offline errors).

use std::fmt;

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KruskalWallis {
    pub h: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Midranks of `values` (1-based) and the tie term `sum(t^3 - t)`.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

struct Pooled {
    mean_ranks: Vec<f64>,
    sizes: Vec<usize>,
    n: usize,
    ties: f64,
}

fn pool(groups: &[&[f64]]) -> Result<Pooled> {
    if groups.len() < 2 {
        return Err(Error::invalid("need at least two groups"));
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(Error::invalid("every group must be nonempty"));
    }
    let values: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("samples must not contain NaN"));
    }
    let (ranks, ties) = midranks(&values);
    let mut mean_ranks = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for g in groups {
        let sum: f64 = ranks[offset..offset + g.len()].iter().sum();
        mean_ranks.push(sum / g.len() as f64);
        offset += g.len();
    }
    Ok(Pooled {
        mean_ranks,
        sizes: groups.iter().map(|g| g.len()).collect(),
        n: values.len(),
        ties,
    })
}

/// H statistic with tie correction; p from the chi-square upper tail with
/// `groups - 1` degrees of freedom. If every value is identical, `H = 0` and
/// `p = 1`.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<KruskalWallis> {
    let pooled = pool(groups)?;
    let df = groups.len() - 1;
    let n = pooled.n as f64;
    let correction = 1.0 - pooled.ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KruskalWallis {
            h: 0.0,
            p_value: 1.0,
            df,
        });
    }
    let grand = (n + 1.0) / 2.0;
    let between: f64 = pooled
        .mean_ranks
        .iter()
        .zip(&pooled.sizes)
        .map(|(r, &s)| s as f64 * (r - grand).powi(2))
        .sum();
    let h = (12.0 / (n * (n + 1.0)) * between / correction).max(0.0);
    let p_value = if h == 0.0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, h / 2.0)
    };
    Ok(KruskalWallis { h, p_value, df })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Better,
    Worse,
    NoDifference,
}

impl Label {
    pub fn symbol(self) -> char {
        match self {
            Label::Better => '+',
            Label::Worse => '-',
            Label::NoDifference => '*',
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Dunn's test for every ordered pair of groups.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub names: Vec<String>,
    /// `labels[a][b]` compares group `a` against group `b`.
    pub labels: Vec<Vec<Label>>,
    pub z: Vec<Vec<f64>>,
    pub p_values: Vec<Vec<f64>>,
    pub threshold: f64,
}

impl LabelMatrix {
    pub fn get(&self, a: usize, b: usize) -> Label {
        self.labels[a][b]
    }

    pub fn is_antisymmetric(&self) -> bool {
        let k = self.names.len();
        (0..k).all(|a| {
            self.labels[a][a] == Label::NoDifference
                && (0..k).all(|b| {
                    matches!(
                        (self.labels[a][b], self.labels[b][a]),
                        (Label::Better, Label::Worse)
                            | (Label::Worse, Label::Better)
                            | (Label::NoDifference, Label::NoDifference)
                    )
                })
        })
    }

    /// Row `a` in `X^(l)` notation, e.g. `2^(*), 3^(-), 4^(-)`, where `X` is
    /// the caller-supplied tag of each other group.
    pub fn render_row(&self, a: usize, tags: &[String]) -> String {
        (0..self.names.len())
            .filter(|&b| b != a)
            .map(|b| format!("{}^({})", tags[b], self.labels[a][b]))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

pub fn pairwise_labels(groups: &[(&str, &[f64])], family_alpha: f64) -> Result<LabelMatrix> {
    if !(family_alpha > 0.0 && family_alpha < 1.0) {
        return Err(Error::invalid("family alpha must lie in (0, 1)"));
    }
    let samples: Vec<&[f64]> = groups.iter().map(|(_, g)| *g).collect();
    let pooled = pool(&samples)?;
    let k = groups.len();
    let n = pooled.n as f64;
    let pairs = (k * (k - 1) / 2) as f64;
    let threshold = family_alpha / pairs;
    let variance = n * (n + 1.0) / 12.0 - pooled.ties / (12.0 * (n - 1.0));

    let mut labels = vec![vec![Label::NoDifference; k]; k];
    let mut z = vec![vec![0.0; k]; k];
    let mut p_values = vec![vec![1.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            if a == b || variance <= 0.0 {
                continue;
            }
            let se =
                (variance * (1.0 / pooled.sizes[a] as f64 + 1.0 / pooled.sizes[b] as f64)).sqrt();
            let zab = (pooled.mean_ranks[a] - pooled.mean_ranks[b]) / se;
            let p = erfc(zab.abs() / std::f64::consts::SQRT_2);
            z[a][b] = zab;
            p_values[a][b] = p;
            if p < threshold {
                labels[a][b] = if zab < 0.0 {
                    Label::Better
                } else {
                    Label::Worse
                };
            }
        }
    }
    Ok(LabelMatrix {
        names: groups.iter().map(|(n, _)| n.to_string()).collect(),
        labels,
        z,
        p_values,
        threshold,
    })
}
