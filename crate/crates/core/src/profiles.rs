//! Functional profile data: T treatments, r_i replicate curves each, n
//! samples per curve.

use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// How curves whose length is not a power of two are extended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PadMode {
    None,
    Zero,
    /// Append the reversed tail: `y[n-1], y[n-2], ...`.
    #[default]
    Reflect,
}

impl FromStr for PadMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "zero" => Ok(Self::Zero),
            "reflect" => Ok(Self::Reflect),
            other => domain(format!("unknown pad mode `{other}`")),
        }
    }
}

/// Treatment cross-covariance handling in the variance normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoPolicy {
    /// Treatments sampled independently: ρ_ij = 0.
    #[default]
    Zero,
    /// Sample covariance of the group-mean curves across time points.
    Empirical,
}

impl FromStr for RhoPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "empirical" => Ok(Self::Empirical),
            other => domain(format!("unknown rho policy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreatmentGroup {
    pub label: String,
    pub replicate_ids: Vec<String>,
    /// One curve per replicate, each of the set's common length.
    pub curves: Vec<Vec<f64>>,
}

impl TreatmentGroup {
    pub fn new(label: impl Into<String>, curves: Vec<Vec<f64>>) -> Self {
        let replicate_ids = (1..=curves.len()).map(|i| i.to_string()).collect();
        Self {
            label: label.into(),
            replicate_ids,
            curves,
        }
    }

    pub fn replicates(&self) -> usize {
        self.curves.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSet {
    groups: Vec<TreatmentGroup>,
    length: usize,
    padded_from: Option<usize>,
}

impl ProfileSet {
    /// Validate and, if needed, pad to the next power of two.
    pub fn new(mut groups: Vec<TreatmentGroup>, pad: PadMode) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::Input(format!(
                "need at least 2 treatments, got {}",
                groups.len()
            )));
        }
        let length = match groups.first().and_then(|g| g.curves.first()) {
            Some(c) => c.len(),
            None => return Err(Error::Input(format!("treatment `{}` has no replicates", groups[0].label))),
        };
        if length == 0 {
            return Err(Error::Input("curves are empty".into()));
        }
        for g in &groups {
            if g.curves.is_empty() {
                return Err(Error::Input(format!("treatment `{}` has no replicates", g.label)));
            }
            if g.replicate_ids.len() != g.curves.len() {
                return Err(Error::Input(format!(
                    "treatment `{}`: {} replicate ids for {} curves",
                    g.label,
                    g.replicate_ids.len(),
                    g.curves.len()
                )));
            }
            for c in &g.curves {
                if c.len() != length {
                    return Err(Error::Input(format!(
                        "treatment `{}`: curve of length {} where {length} expected",
                        g.label,
                        c.len()
                    )));
                }
                if let Some(v) = c.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Input(format!("treatment `{}`: non-finite value {v}", g.label)));
                }
            }
        }
        let mut padded_from = None;
        if !length.is_power_of_two() {
            let target = length.next_power_of_two();
            match pad {
                PadMode::None => return Err(Error::NotPowerOfTwo(length)),
                PadMode::Zero => {
                    for c in groups.iter_mut().flat_map(|g| g.curves.iter_mut()) {
                        c.resize(target, 0.0);
                    }
                }
                PadMode::Reflect => {
                    for c in groups.iter_mut().flat_map(|g| g.curves.iter_mut()) {
                        let extra: Vec<f64> = c.iter().rev().take(target - length).copied().collect();
                        c.extend(extra);
                    }
                }
            }
            padded_from = Some(length);
        }
        Ok(Self {
            length: groups[0].curves[0].len(),
            groups,
            padded_from,
        })
    }

    pub fn groups(&self) -> &[TreatmentGroup] {
        &self.groups
    }

    /// T
    pub fn treatments(&self) -> usize {
        self.groups.len()
    }

    pub fn replicate_counts(&self) -> Vec<usize> {
        self.groups.iter().map(TreatmentGroup::replicates).collect()
    }

    /// n, after any padding.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn padded_from(&self) -> Option<usize> {
        self.padded_from
    }

    /// Same data with the treatments reordered: `order[k]` is the index of
    /// the group placed at position k.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.groups.len()];
        if order.len() != self.groups.len() || order.iter().any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::Input("treatment order is not a permutation".into()));
        }
        Ok(Self {
            groups: order.iter().map(|&i| self.groups[i].clone()).collect(),
            length: self.length,
            padded_from: self.padded_from,
        })
    }

    /// Add `offset[k]` to sample k of every curve.
    pub fn shifted(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.length {
            return Err(Error::Input("offset curve has the wrong length".into()));
        }
        let mut out = self.clone();
        for c in out.groups.iter_mut().flat_map(|g| g.curves.iter_mut()) {
            for (v, o) in c.iter_mut().zip(offset) {
                *v += o;
            }
        }
        Ok(out)
    }
}

/// Parse the profile CSV: header `treatment,replicate,x1..xn`, one curve per
/// row. Treatments are ordered by first appearance.
pub fn load_profiles<R: Read>(source: R, pad: PadMode) -> Result<ProfileSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.len() < 3
        || !headers[0].eq_ignore_ascii_case("treatment")
        || !headers[1].eq_ignore_ascii_case("replicate")
    {
        return Err(Error::Input(
            "header must start with `treatment,replicate` followed by sample columns".into(),
        ));
    }
    let width = headers.len();
    let mut groups: Vec<TreatmentGroup> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => Error::Input(format!("ragged row {}: {e}", row + 2)),
            _ => Error::Csv(e),
        })?;
        if record.len() != width {
            return Err(Error::Input(format!(
                "ragged row {}: {} fields where {width} expected",
                row + 2,
                record.len()
            )));
        }
        let values = record
            .iter()
            .skip(2)
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>().map_err(|_| {
                    Error::Input(format!("row {}, column {}: `{cell}` is not a number", row + 2, col + 3))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = &record[0];
        let group = match groups.iter_mut().position(|g| g.label == label) {
            Some(i) => &mut groups[i],
            None => {
                groups.push(TreatmentGroup {
                    label: label.to_string(),
                    replicate_ids: Vec::new(),
                    curves: Vec::new(),
                });
                groups.last_mut().unwrap()
            }
        };
        group.replicate_ids.push(record[1].to_string());
        group.curves.push(values);
    }
    ProfileSet::new(groups, pad)
}

pub fn load_profiles_path(path: impl AsRef<Path>, pad: PadMode) -> Result<ProfileSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    load_profiles(std::io::BufReader::new(file), pad)
}

/// Sum whose rounding does not depend on the order of the terms, so that
/// relabeling treatments reproduces results bit for bit.
pub(crate) fn order_free_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = terms.collect();
    v.sort_by(f64::total_cmp);
    v.iter().fold(0.0, |acc, x| acc + x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    /// T × n replicate averages Ȳ_i.
    pub group_means: Vec<Vec<f64>>,
    /// Unweighted average of the group means, Ȳ_..
    pub grand_mean: Vec<f64>,
    /// Pooled σ̂² with divisor Σ(r_i - 1)·n; zero when that divisor is zero.
    pub residual_variance: f64,
    pub residual_df: usize,
    /// T × T, symmetric; the diagonal is not used.
    pub cross_covariances: Vec<Vec<f64>>,
    pub rho_policy: RhoPolicy,
}

pub fn summarize(ps: &ProfileSet, rho: RhoPolicy) -> GroupSummary {
    let n = ps.length();
    let t = ps.treatments();
    let group_means: Vec<Vec<f64>> = ps
        .groups()
        .iter()
        .map(|g| {
            let r = g.replicates() as f64;
            let mut mean = vec![0.0; n];
            for c in &g.curves {
                for (m, v) in mean.iter_mut().zip(c) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= r);
            mean
        })
        .collect();
    let grand_mean: Vec<f64> = (0..n)
        .map(|k| order_free_sum(group_means.iter().map(|m| m[k])) / t as f64)
        .collect();

    let ss = order_free_sum(ps.groups().iter().zip(&group_means).map(|(g, mean)| {
        g.curves
            .iter()
            .map(|c| c.iter().zip(mean).map(|(v, m)| (v - m).powi(2)).sum::<f64>())
            .sum::<f64>()
    }));
    let residual_df = ps.replicate_counts().iter().map(|r| r - 1).sum::<usize>() * n;
    let residual_variance = if residual_df > 0 { ss / residual_df as f64 } else { 0.0 };

    let mut cross_covariances = vec![vec![0.0; t]; t];
    if rho == RhoPolicy::Empirical && n > 1 {
        let centered: Vec<Vec<f64>> = group_means
            .iter()
            .map(|m| {
                let mu = m.iter().sum::<f64>() / n as f64;
                m.iter().map(|v| v - mu).collect()
            })
            .collect();
        for i in 0..t {
            for j in 0..t {
                let cov = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum::<f64>()
                    / (n - 1) as f64;
                cross_covariances[i][j] = cov;
            }
        }
    }
    GroupSummary {
        group_means,
        grand_mean,
        residual_variance,
        residual_df,
        cross_covariances,
        rho_policy: rho,
    }
}

/// Estimated variance of `Ȳ_i. - Ȳ_..` at one sample point:
///
/// `σ̂² [ (1/r_i)(t-2)/t + (1/t²) Σ_j 1/r_j ] - (2/t) ρ̄_i`
///
/// where ρ̄_i averages ρ_ij over j ≠ i.
pub fn gamma_hat(gs: &GroupSummary, ps: &ProfileSet, i: usize) -> Result<f64> {
    let t = ps.treatments();
    if i >= t {
        return Err(Error::Input(format!("treatment index {i} out of range")));
    }
    let tf = t as f64;
    let r = ps.replicate_counts();
    let inv_sum = order_free_sum(r.iter().map(|&rj| 1.0 / rj as f64));
    let rho_bar = order_free_sum((0..t).filter(|&j| j != i).map(|j| gs.cross_covariances[i][j])) / (tf - 1.0);
    let value = gs.residual_variance
        * ((1.0 / r[i] as f64) * (tf - 2.0) / tf + inv_sum / (tf * tf))
        - 2.0 / tf * rho_bar;
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidNormalizer { treatment: i, value })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub gamma_hat: Vec<f64>,
    pub sigma_sq: f64,
    pub rho_policy: RhoPolicy,
}

/// γ̂_i for every treatment; fails on the first non-positive normalizer.
pub fn estimate_variance(gs: &GroupSummary, ps: &ProfileSet) -> Result<VarianceEstimate> {
    let gamma_hat = (0..ps.treatments())
        .map(|i| gamma_hat(gs, ps, i))
        .collect::<Result<_>>()?;
    Ok(VarianceEstimate {
        gamma_hat,
        sigma_sq: gs.residual_variance,
        rho_policy: gs.rho_policy,
    })
}

/// `(Ȳ_i. - Ȳ_..) / √γ̂_i`
pub fn standardized_contrast(gs: &GroupSummary, ve: &VarianceEstimate, i: usize) -> Result<Vec<f64>> {
    let gamma = *ve
        .gamma_hat
        .get(i)
        .ok_or_else(|| Error::Input(format!("treatment index {i} out of range")))?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidNormalizer { treatment: i, value: gamma });
    }
    let scale = gamma.sqrt().recip();
    Ok(gs.group_means[i]
        .iter()
        .zip(&gs.grand_mean)
        .map(|(m, g)| (m - g) * scale)
        .collect())
}
