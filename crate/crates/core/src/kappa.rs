//! The pooled statistic κ and the hypothesis test built on it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{binomial_df, pi_nonzero, ChiSquared, DfMode, KappaDist, NormalLaw, NullLaw, Quadrature};
use crate::dwt::{dwt_forward, dyadic_levels, Wavelet};
use crate::error::{domain, Error, Result};
use crate::profiles::{
    estimate_variance, order_free_sum, standardized_contrast, summarize, ProfileSet, RhoPolicy, VarianceEstimate,
};
use crate::shrink::{hard_threshold, partition_counts, ThresholdPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    /// Convolution law with slot-count p.
    #[default]
    Exact,
    Normal,
    Chisq,
    BinomNormal,
    BinomChisq,
}

impl TestMethod {
    pub const ALL: [TestMethod; 5] = [
        Self::Exact,
        Self::Normal,
        Self::Chisq,
        Self::BinomNormal,
        Self::BinomChisq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Normal => "normal",
            Self::Chisq => "chisq",
            Self::BinomNormal => "binom-normal",
            Self::BinomChisq => "binom-chisq",
        }
    }

    /// Uses the expected survivor count rather than the slot count for p.
    pub fn is_binomial(self) -> bool {
        matches!(self, Self::BinomNormal | Self::BinomChisq)
    }
}

impl FromStr for TestMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown test method `{s}`")))
    }
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub wavelet: Wavelet,
    /// Thresholded detail levels l_t; `None` means all of them.
    pub levels: Option<usize>,
    pub method: TestMethod,
    pub alpha: f64,
    pub df_mode: DfMode,
    pub rho_policy: RhoPolicy,
    /// Absolute quadrature tolerance; `None` keeps the library default.
    pub quad_tol: Option<f64>,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            wavelet: Wavelet::Haar,
            levels: None,
            method: TestMethod::Exact,
            alpha: 0.05,
            df_mode: DfMode::Fractional,
            rho_policy: RhoPolicy::Zero,
            quad_tol: None,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if let Some(tol) = self.quad_tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return domain(format!("quadrature tolerance must be positive, got {tol}"));
            }
        }
        Ok(())
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quad_tol.map(Quadrature::with_abs_tol).unwrap_or_default()
    }

    /// l_t for signals of length n.
    pub fn levels_for(&self, n: usize) -> Result<usize> {
        let total = dyadic_levels(n).ok_or(Error::NotPowerOfTwo(n))?;
        let levels = self.levels.unwrap_or(total);
        partition_counts(n, levels)?;
        Ok(levels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreatmentTerm {
    pub label: String,
    /// Thresholded slots n - n_t.
    pub p_slots: usize,
    /// Unthresholded slots n_t.
    pub q_slots: usize,
    pub survivors: usize,
    pub kept_energy: f64,
    pub unthresholded_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaStatistic {
    pub value: f64,
    /// Pooled truncated df; fractional for the binomial methods.
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub levels: usize,
    pub per_treatment: Vec<TreatmentTerm>,
}

/// Sum of the squared kept and unthresholded coefficients over treatments.
pub fn pool(terms: &[crate::shrink::ShrunkCoefficients]) -> f64 {
    order_free_sum(terms.iter().map(|s| s.energy()))
}

/// `(p, q)` for the configured method: p is `T (n - n_t)` or, for the
/// binomial methods, `T (n - n_t) π`; q is `T n_t`.
pub fn degrees(cfg: &TestConfig, treatments: usize, n: usize) -> Result<(f64, f64)> {
    let levels = cfg.levels_for(n)?;
    let (p_slots, q_slots) = partition_counts(n, levels)?;
    let p = if cfg.method.is_binomial() {
        binomial_df(treatments, n, levels)?
    } else {
        (treatments * p_slots) as f64
    };
    Ok((p, (treatments * q_slots) as f64))
}

/// Everything the pipeline produces on the way to κ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub statistic: KappaStatistic,
    pub variance: VarianceEstimate,
    pub residual_df: usize,
}

pub fn analyze(ps: &ProfileSet, cfg: &TestConfig) -> Result<Analysis> {
    cfg.validate()?;
    let n = ps.length();
    let levels = cfg.levels_for(n)?;
    let plan = ThresholdPlan::universal(n, levels)?;
    let filter = cfg.wavelet.filter();
    let gs = summarize(ps, cfg.rho_policy);
    let ve = estimate_variance(&gs, ps)?;

    let mut shrunk = Vec::with_capacity(ps.treatments());
    let mut per_treatment = Vec::with_capacity(ps.treatments());
    for (i, group) in ps.groups().iter().enumerate() {
        let contrast = standardized_contrast(&gs, &ve, i)?;
        let d = dwt_forward(&contrast, &filter, 0)?;
        let s = hard_threshold(&d, &plan)?;
        per_treatment.push(TreatmentTerm {
            label: group.label.clone(),
            p_slots: plan.p_slots(),
            q_slots: plan.q_slots(),
            survivors: s.survivors,
            kept_energy: s.kept_energy(),
            unthresholded_energy: s.unthresholded_energy(),
        });
        shrunk.push(s);
    }
    let (p, q) = degrees(cfg, ps.treatments(), n)?;
    Ok(Analysis {
        statistic: KappaStatistic {
            value: pool(&shrunk),
            p,
            q,
            lambda: plan.lambda,
            levels,
            per_treatment,
        },
        variance: ve,
        residual_df: gs.residual_df,
    })
}

pub fn compute_kappa(ps: &ProfileSet, cfg: &TestConfig) -> Result<KappaStatistic> {
    Ok(analyze(ps, cfg)?.statistic)
}

/// The reference law for `method` with pooled degrees `(p, q)`.
pub fn null_law(
    method: TestMethod,
    p: f64,
    q: f64,
    lambda: f64,
    df_mode: DfMode,
    quad: Quadrature,
) -> Result<Box<dyn NullLaw>> {
    let d = KappaDist::with_quadrature(p, q, lambda, quad)?;
    Ok(match method {
        TestMethod::Exact => Box::new(d),
        TestMethod::Normal | TestMethod::BinomNormal => Box::new(NormalLaw::matching(&d)?),
        TestMethod::Chisq | TestMethod::BinomChisq => Box::new(ChiSquared::matching(&d, df_mode)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawSummary {
    pub name: String,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub sigma_sq: f64,
    pub residual_df: usize,
    pub gamma_hat: Vec<f64>,
    pub survivors: Vec<usize>,
    /// Null probability that one coefficient survives thresholding.
    pub survivor_probability: f64,
    pub rho_policy: RhoPolicy,
    pub treatments: usize,
    pub length: usize,
    pub padded_from: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub method: TestMethod,
    pub wavelet: Wavelet,
    pub alpha: f64,
    pub df_mode: DfMode,
    pub statistic: KappaStatistic,
    pub null_law: LawSummary,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub diagnostics: Diagnostics,
}

/// Decide from the p-value and pull the critical value onto the same side
/// of κ, so `reject == (κ > critical) == (p < α)` holds exactly even where
/// the quantile and tail evaluations round differently.
fn decide(kappa: f64, critical: f64, p_value: f64, alpha: f64) -> (f64, bool) {
    let reject = p_value < alpha;
    let critical = match (reject, kappa > critical) {
        (true, false) => kappa.next_down(),
        (false, true) => kappa,
        _ => critical,
    };
    (critical, reject)
}

pub fn run_test(ps: &ProfileSet, cfg: &TestConfig) -> Result<TestReport> {
    let analysis = analyze(ps, cfg)?;
    let st = &analysis.statistic;
    let law = null_law(cfg.method, st.p, st.q, st.lambda, cfg.df_mode, cfg.quadrature())?;
    let critical = law.quantile(1.0 - cfg.alpha)?;
    let p_value = law.sf(st.value)?.clamp(0.0, 1.0);
    let (critical_value, reject) = decide(st.value, critical, p_value, cfg.alpha);
    let n = ps.length();
    Ok(TestReport {
        method: cfg.method,
        wavelet: cfg.wavelet,
        alpha: cfg.alpha,
        df_mode: cfg.df_mode,
        null_law: LawSummary {
            name: law.name(),
            mean: law.mean(),
            variance: law.variance(),
        },
        critical_value,
        p_value,
        reject,
        diagnostics: Diagnostics {
            sigma_sq: analysis.variance.sigma_sq,
            residual_df: analysis.residual_df,
            gamma_hat: analysis.variance.gamma_hat.clone(),
            survivors: st.per_treatment.iter().map(|t| t.survivors).collect(),
            survivor_probability: pi_nonzero(n)?,
            rho_policy: cfg.rho_policy,
            treatments: ps.treatments(),
            length: n,
            padded_from: ps.padded_from(),
        },
        statistic: analysis.statistic,
    })
}
