//! Monte Carlo engine: end-to-end null simulation, sampling from a null law
//! and adequacy diagnostics comparing the two.

pub mod rng;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::NullLaw;
use crate::dwt::Wavelet;
use crate::error::{domain, Error, Result};
use crate::kappa::{compute_kappa, TestConfig};
use crate::profiles::{PadMode, ProfileSet, TreatmentGroup};
use crate::shrink::partition_counts;

pub use rng::{open_unit, substream, Normals};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub treatments: usize,
    pub replicates: usize,
    pub n: usize,
    pub wavelet: Wavelet,
    /// Thresholded levels l_t; `None` means all detail levels.
    pub levels: Option<usize>,
    pub reps: usize,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            treatments: 3,
            replicates: 10,
            n: 256,
            wavelet: Wavelet::Haar,
            levels: None,
            reps: 2000,
            seed: 20240917,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return domain("reps must be at least 1");
        }
        if self.treatments < 2 {
            return domain(format!("need at least 2 treatments, got {}", self.treatments));
        }
        if self.replicates < 2 {
            return domain(format!(
                "need at least 2 replicates per treatment to estimate the noise, got {}",
                self.replicates
            ));
        }
        self.config().levels_for(self.n)?;
        Ok(())
    }

    /// Pipeline configuration used for every simulated dataset.
    pub fn config(&self) -> TestConfig {
        TestConfig {
            wavelet: self.wavelet,
            levels: self.levels,
            ..TestConfig::default()
        }
    }

    /// `(n - n_t, n_t)` per treatment.
    pub fn slots(&self) -> Result<(usize, usize)> {
        partition_counts(self.n, self.config().levels_for(self.n)?)
    }
}

/// Dataset number `rep`: i.i.d. N(0, 1) noise around a zero common mean,
/// plus `effects[i]` on every curve of treatment i when given.
pub fn simulate_dataset(spec: &SimSpec, rep: u64, effects: Option<&[Vec<f64>]>) -> Result<ProfileSet> {
    if let Some(e) = effects {
        if e.len() != spec.treatments || e.iter().any(|c| c.len() != spec.n) {
            return Err(Error::Input("effects must be one curve of length n per treatment".into()));
        }
    }
    let mut normals = Normals::new(substream(spec.seed, rep));
    let groups = (0..spec.treatments)
        .map(|i| {
            let curves = (0..spec.replicates)
                .map(|_| {
                    let mut c = vec![0.0; spec.n];
                    normals.fill(&mut c);
                    if let Some(e) = effects {
                        c.iter_mut().zip(&e[i]).for_each(|(v, m)| *v += m);
                    }
                    c
                })
                .collect();
            TreatmentGroup::new(format!("t{}", i + 1), curves)
        })
        .collect();
    ProfileSet::new(groups, PadMode::None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSample {
    pub kappa: f64,
    /// Survivor count per treatment.
    pub survivors: Vec<usize>,
}

/// Run the full κ pipeline on `spec.reps` simulated datasets. Output order is
/// replication order regardless of scheduling.
pub fn simulate(spec: &SimSpec, effects: Option<&[Vec<f64>]>) -> Result<Vec<SimSample>> {
    spec.validate()?;
    let cfg = spec.config();
    (0..spec.reps as u64)
        .into_par_iter()
        .map(|rep| {
            let ps = simulate_dataset(spec, rep, effects)?;
            let k = compute_kappa(&ps, &cfg)?;
            Ok(SimSample {
                kappa: k.value,
                survivors: k.per_treatment.iter().map(|t| t.survivors).collect(),
            })
        })
        .collect()
}

/// Samples of κ under the null hypothesis of equal mean curves.
pub fn simulate_null(spec: &SimSpec) -> Result<Vec<SimSample>> {
    simulate(spec, None)
}

const DRAW_CHUNK: usize = 1024;

/// `count` inverse-CDF draws from `law`. Chunk c of 1024 draws uses stream c,
/// so the sequence does not depend on thread scheduling.
pub fn sample_kappa_dist(law: &dyn NullLaw, count: usize, seed: u64) -> Result<Vec<f64>> {
    let chunks = count.div_ceil(DRAW_CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let len = DRAW_CHUNK.min(count - c * DRAW_CHUNK);
            (0..len).map(|_| law.quantile(open_unit(&mut rng))).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.concat())
}

/// 1% critical value of the one-sample Kolmogorov-Smirnov distance.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// `sup |F_n - F|` for a continuous reference law.
pub fn ks_distance(samples: &[f64], law: &dyn NullLaw) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = law.cdf(x)?;
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Interpolated empirical quantile of sorted data.
fn empirical_quantile(sorted: &[f64], u: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * u;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentGap {
    pub analytic: f64,
    pub empirical: f64,
    /// analytic - empirical
    pub gap: f64,
    /// Standard error of the empirical value.
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentGaps {
    pub mean: MomentGap,
    pub variance: MomentGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileRow {
    pub level: f64,
    pub analytic: f64,
    pub empirical: f64,
}

/// Pooled survivor counts from a simulation, for comparison with π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivorTally {
    pub survivors: usize,
    pub slots: usize,
    pub expected_rate: f64,
}

impl SurvivorTally {
    pub fn from_samples(samples: &[SimSample], p_slots: usize, expected_rate: f64) -> Self {
        let survivors = samples.iter().flat_map(|s| &s.survivors).sum();
        let slots = samples.iter().map(|s| s.survivors.len() * p_slots).sum();
        Self {
            survivors,
            slots,
            expected_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivorRate {
    pub empirical: f64,
    pub expected: f64,
    /// Binomial standard error of the empirical rate under the expected one.
    pub std_error: f64,
}

pub const QUANTILE_LEVELS: [f64; 3] = [0.90, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdequacyReport {
    pub law: String,
    pub samples: usize,
    pub ks_distance: f64,
    pub ks_critical_1pct: f64,
    pub moment_gaps: MomentGaps,
    pub quantile_table: Vec<QuantileRow>,
    pub survivor_rate: Option<SurvivorRate>,
}

/// Compare samples with an analytic law. Reports distances only; judging
/// them is left to the caller.
pub fn adequacy(samples: &[f64], law: &dyn NullLaw, survivors: Option<SurvivorTally>) -> Result<AdequacyReport> {
    if samples.is_empty() {
        return Err(Error::Input("adequacy needs at least one sample".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = if samples.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
    let gap = |analytic: f64, empirical: f64, std_error: f64| MomentGap {
        analytic,
        empirical,
        gap: analytic - empirical,
        std_error,
    };
    let moment_gaps = MomentGaps {
        mean: gap(law.mean(), mean, (var / n).sqrt()),
        variance: gap(law.variance(), var, ((m4 - m2 * m2).max(0.0) / n).sqrt()),
    };

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile_table = QUANTILE_LEVELS
        .iter()
        .map(|&u| {
            Ok(QuantileRow {
                level: u,
                analytic: law.quantile(u)?,
                empirical: empirical_quantile(&sorted, u),
            })
        })
        .collect::<Result<_>>()?;

    let survivor_rate = survivors.filter(|t| t.slots > 0).map(|t| {
        let p = t.expected_rate;
        SurvivorRate {
            empirical: t.survivors as f64 / t.slots as f64,
            expected: p,
            std_error: (p * (1.0 - p) / t.slots as f64).sqrt(),
        }
    });

    Ok(AdequacyReport {
        law: law.name(),
        samples: samples.len(),
        ks_distance: ks_distance(&sorted, law)?,
        ks_critical_1pct: ks_critical_1pct(samples.len()),
        moment_gaps,
        quantile_table,
        survivor_rate,
    })
}
