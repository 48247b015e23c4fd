//! Hard (VisuShrink) thresholding and the thresholded / unthresholded
//! coefficient partition.

use serde::Serialize;

use crate::dwt::Decomposition;
use crate::error::{domain, Error, Result};

/// Standard-normal consistency constant for the median absolute deviation.
pub const MAD_CONSTANT: f64 = 0.6745;

/// Robust noise scale: `median(|d|) / 0.6745` over the finest details.
pub fn mad_sigma(finest_details: &[f64]) -> Result<f64> {
    if finest_details.is_empty() {
        return domain("MAD of an empty coefficient block");
    }
    let mut mags: Vec<f64> = finest_details.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let mid = mags.len() / 2;
    let median = if mags.len() % 2 == 0 {
        0.5 * (mags[mid - 1] + mags[mid])
    } else {
        mags[mid]
    };
    Ok(median / MAD_CONSTANT)
}

/// `σ √(2 ln n)`
pub fn universal_threshold(sigma: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return domain("universal threshold needs n >= 1");
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return domain(format!("noise scale must be finite and >= 0, got {sigma}"));
    }
    Ok(sigma * (2.0 * (n as f64).ln()).sqrt())
}

/// `(p_slots, q_slots) = (n - n/2^l_t, n/2^l_t)` for `n = 2^J`, `1 <= l_t <= J`.
pub fn partition_counts(n: usize, levels: usize) -> Result<(usize, usize)> {
    let total = crate::dwt::dyadic_levels(n).ok_or(Error::NotPowerOfTwo(n))?;
    if levels == 0 || levels > total {
        return Err(Error::LevelOutOfRange {
            level: levels,
            max: total,
        });
    }
    let unthresholded = n >> levels;
    Ok((n - unthresholded, unthresholded))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdPlan {
    /// Threshold in the units of the coefficients; may be +∞ (kill all).
    pub lambda: f64,
    /// Number of finest detail levels subject to thresholding (l_t).
    pub levels: usize,
    /// Signal length n.
    pub n: usize,
}

impl ThresholdPlan {
    pub fn new(n: usize, levels: usize, lambda: f64) -> Result<Self> {
        partition_counts(n, levels)?;
        if !(lambda >= 0.0) {
            return domain(format!("threshold must be >= 0, got {lambda}"));
        }
        Ok(Self { lambda, levels, n })
    }

    /// Universal threshold for unit-variance coefficients: λ = √(2 ln n).
    pub fn universal(n: usize, levels: usize) -> Result<Self> {
        Self::new(n, levels, universal_threshold(1.0, n)?)
    }

    pub fn p_slots(&self) -> usize {
        self.n - self.q_slots()
    }

    /// n_t: coefficients exempt from thresholding.
    pub fn q_slots(&self) -> usize {
        self.n >> self.levels
    }

    fn check(&self, d: &Decomposition) -> Result<()> {
        if d.len() != self.n {
            return Err(Error::Input(format!(
                "plan is for length {}, decomposition has length {}",
                self.n,
                d.len()
            )));
        }
        if d.details().len() < self.levels {
            return Err(Error::Input(format!(
                "plan thresholds {} levels but the decomposition has only {} detail levels",
                self.levels,
                d.details().len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrunkCoefficients {
    /// Thresholded-region coefficients with |θ| > λ, in flattened order.
    pub kept: Vec<f64>,
    pub survivors: usize,
    /// The n_t coefficients exempt from thresholding, in flattened order.
    pub unthresholded: Vec<f64>,
    pub p_slots: usize,
}

impl ShrunkCoefficients {
    pub fn kept_energy(&self) -> f64 {
        self.kept.iter().fold(0.0, |acc, v| acc + v * v)
    }

    pub fn unthresholded_energy(&self) -> f64 {
        self.unthresholded.iter().fold(0.0, |acc, v| acc + v * v)
    }

    pub fn energy(&self) -> f64 {
        self.kept_energy() + self.unthresholded_energy()
    }
}

/// Keep-kill rule: a thresholded-region coefficient survives iff |θ| > λ.
/// Detail levels coarser than the `l_t` finest, and the scaling block, pass
/// through into `unthresholded`.
pub fn hard_threshold(d: &Decomposition, plan: &ThresholdPlan) -> Result<ShrunkCoefficients> {
    plan.check(d)?;
    let (thresholded, rest) = d.details().split_at(plan.levels);
    let kept: Vec<f64> = thresholded
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.abs() > plan.lambda)
        .collect();
    let mut unthresholded: Vec<f64> = rest.iter().flatten().copied().collect();
    unthresholded.extend_from_slice(d.scaling());
    Ok(ShrunkCoefficients {
        survivors: kept.len(),
        kept,
        unthresholded,
        p_slots: plan.p_slots(),
    })
}

/// The same rule applied in place of a decomposition: killed coefficients
/// become zero, everything else is untouched.
pub fn shrink_decomposition(d: &Decomposition, plan: &ThresholdPlan) -> Result<Decomposition> {
    plan.check(d)?;
    let mut out = d.clone();
    for block in out.details_mut().iter_mut().take(plan.levels) {
        for v in block.iter_mut() {
            if v.abs() <= plan.lambda {
                *v = 0.0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// n = 8, J = 3, full transform; only the finest level is thresholded.
    fn sample() -> Decomposition {
        Decomposition::from_blocks(
            3,
            0,
            vec![vec![3.0, 0.5, -2.0, 0.1], vec![0.2, -5.0], vec![0.3]],
            vec![1.5],
        )
        .unwrap()
    }

    #[test]
    fn mad_examples() {
        assert!((mad_sigma(&[2.0, -2.0, 2.0]).unwrap() - 2.0 / 0.6745).abs() < 1e-15);
        assert!(mad_sigma(&[]).is_err());
    }

    #[test]
    fn universal_threshold_examples() {
        assert!((universal_threshold(1.0, 1024).unwrap() - 3.723_297_411_059_034).abs() < 1e-12);
        assert_eq!(universal_threshold(1.0, 1).unwrap(), 0.0);
        assert_eq!(universal_threshold(0.0, 512).unwrap(), 0.0);
        assert!(universal_threshold(1.0, 0).is_err());
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition_counts(256, 3).unwrap(), (224, 32));
        assert_eq!(partition_counts(8, 3).unwrap(), (7, 1));
        assert!(partition_counts(8, 0).is_err());
        assert!(partition_counts(8, 4).is_err());
        assert!(partition_counts(12, 1).is_err());
    }

    #[test]
    fn keep_kill_rule() {
        let plan = ThresholdPlan::new(8, 1, 1.0).unwrap();
        let s = hard_threshold(&sample(), &plan).unwrap();
        assert_eq!(s.kept, vec![3.0, -2.0]);
        assert_eq!(s.survivors, 2);
        assert_eq!(s.unthresholded, vec![0.2, -5.0, 0.3, 1.5]);
        assert_eq!(s.p_slots, 4);
    }

    #[test]
    fn zero_and_infinite_thresholds() {
        let mut d = sample();
        d.details_mut()[0][1] = 0.0;
        let s = hard_threshold(&d, &ThresholdPlan::new(8, 3, 0.0).unwrap()).unwrap();
        // Exact zeros die even at λ = 0.
        assert_eq!(s.survivors, 6);
        let s = hard_threshold(&d, &ThresholdPlan::new(8, 3, f64::INFINITY).unwrap()).unwrap();
        assert_eq!(s.survivors, 0);
        assert_eq!(s.unthresholded, vec![1.5]);
    }

    #[test]
    fn tie_at_threshold_dies() {
        let d = Decomposition::from_blocks(1, 0, vec![vec![2.0]], vec![0.0]).unwrap();
        let s = hard_threshold(&d, &ThresholdPlan::new(2, 1, 2.0).unwrap()).unwrap();
        assert_eq!(s.survivors, 0);
    }

    #[test]
    fn plan_mismatch_is_an_error() {
        let plan = ThresholdPlan::new(16, 2, 1.0).unwrap();
        assert!(hard_threshold(&sample(), &plan).is_err());
        let partial = Decomposition::from_blocks(3, 2, vec![vec![0.0; 4]], vec![0.0; 4]).unwrap();
        assert!(hard_threshold(&partial, &ThresholdPlan::new(8, 2, 1.0).unwrap()).is_err());
    }

    #[test]
    fn shrink_is_idempotent() {
        let plan = ThresholdPlan::new(8, 2, 1.0).unwrap();
        let once = shrink_decomposition(&sample(), &plan).unwrap();
        let twice = shrink_decomposition(&once, &plan).unwrap();
        assert_eq!(once, twice);
        assert_eq!(
            hard_threshold(&once, &plan).unwrap(),
            hard_threshold(&sample(), &plan).unwrap()
        );
    }
}
