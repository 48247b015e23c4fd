//! Orthonormal periodic discrete wavelet transform (pyramid algorithm).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

// Daubechies extremal-phase low-pass taps, 4 and 8 coefficients.
const D4: [f64; 4] = [
    0.482_962_913_144_534_143_37,
    0.836_516_303_737_807_905_58,
    0.224_143_868_042_013_381_03,
    -0.129_409_522_551_260_381_17,
];
const D8: [f64; 8] = [
    0.230_377_813_308_896_500_86,
    0.714_846_570_552_915_647_09,
    0.630_880_767_929_858_907_88,
    -0.027_983_769_416_859_854_211,
    -0.187_034_811_719_093_084_08,
    0.030_841_381_835_560_763_627,
    0.032_883_011_666_885_199_735,
    -0.010_597_401_785_069_032_105,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    #[default]
    Haar,
    D4,
    D8,
}

impl Wavelet {
    pub fn name(self) -> &'static str {
        match self {
            Wavelet::Haar => "haar",
            Wavelet::D4 => "d4",
            Wavelet::D8 => "d8",
        }
    }

    pub fn filter(self) -> WaveletFilter {
        let low: Vec<f64> = match self {
            Wavelet::Haar => vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            Wavelet::D4 => D4.to_vec(),
            Wavelet::D8 => D8.to_vec(),
        };
        WaveletFilter::from_low_pass(self, low)
    }
}

impl FromStr for Wavelet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(Wavelet::Haar),
            "d4" => Ok(Wavelet::D4),
            "d8" => Ok(Wavelet::D8),
            other => Err(Error::UnknownFilter(other.to_string())),
        }
    }
}

impl fmt::Display for Wavelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Quadrature-mirror filter pair: `high[k] = (-1)^k low[L-1-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    pub wavelet: Wavelet,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl WaveletFilter {
    fn from_low_pass(wavelet: Wavelet, low: Vec<f64>) -> Self {
        let len = low.len();
        let high = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * low[len - 1 - k]
            })
            .collect();
        Self { wavelet, low, high }
    }

    pub fn len(&self) -> usize {
        self.low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low.is_empty()
    }
}

/// Look up a filter by name (`haar`, `d4`, `d8`).
pub fn make_filter(name: &str) -> Result<WaveletFilter> {
    Ok(name.parse::<Wavelet>()?.filter())
}

/// Multilevel DWT output for a length `n = 2^J` signal.
///
/// `details[0]` is the finest block `W_{J-1}` (length n/2), `details[1]` is
/// `W_{J-2}`, and so on down to `W_{j0}`. `scaling` is `V_{j0}`, of length
/// `n / 2^{J-j0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    levels: usize,
    coarsest: usize,
    details: Vec<Vec<f64>>,
    scaling: Vec<f64>,
}

impl Decomposition {
    /// Assemble from blocks, checking every block length against `n = 2^levels`.
    pub fn from_blocks(
        levels: usize,
        coarsest: usize,
        details: Vec<Vec<f64>>,
        scaling: Vec<f64>,
    ) -> Result<Self> {
        if coarsest > levels {
            return Err(Error::LevelOutOfRange {
                level: coarsest,
                max: levels,
            });
        }
        if details.len() != levels - coarsest {
            return Err(Error::Input(format!(
                "expected {} detail blocks, got {}",
                levels - coarsest,
                details.len()
            )));
        }
        let n = 1usize << levels;
        for (i, block) in details.iter().enumerate() {
            let want = n >> (i + 1);
            if block.len() != want {
                return Err(Error::Input(format!(
                    "detail block for level {} has length {}, expected {want}",
                    levels - 1 - i,
                    block.len()
                )));
            }
        }
        let want = n >> (levels - coarsest);
        if scaling.len() != want {
            return Err(Error::Input(format!(
                "scaling block has length {}, expected {want}",
                scaling.len()
            )));
        }
        Ok(Self {
            levels,
            coarsest,
            details,
            scaling,
        })
    }

    /// J, where the signal length is 2^J.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// j0, the coarsest retained level.
    pub fn coarsest(&self) -> usize {
        self.coarsest
    }

    pub fn len(&self) -> usize {
        1 << self.levels
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Detail blocks, finest first.
    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    pub fn details_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.details
    }

    /// Detail block `W_j` for `j0 <= j < J`.
    pub fn detail(&self, level: usize) -> Option<&[f64]> {
        if level < self.coarsest || level >= self.levels {
            return None;
        }
        Some(&self.details[self.levels - 1 - level])
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    /// `[W_{J-1}, W_{J-2}, ..., W_{j0}, V_{j0}]`
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for block in &self.details {
            out.extend_from_slice(block);
        }
        out.extend_from_slice(&self.scaling);
        out
    }

    pub fn energy(&self) -> f64 {
        self.details
            .iter()
            .flatten()
            .chain(&self.scaling)
            .map(|v| v * v)
            .sum()
    }
}

/// `Some(J)` if `n = 2^J`.
pub fn dyadic_levels(n: usize) -> Option<usize> {
    if n.is_power_of_two() {
        Some(n.trailing_zeros() as usize)
    } else {
        None
    }
}

/// One analysis step with periodic wrap: returns (approximation, detail).
fn analysis_step(signal: &[f64], filter: &WaveletFilter) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (m, (&h, &g)) in filter.low.iter().zip(&filter.high).enumerate() {
            let y = signal[(2 * k + m) % n];
            a += h * y;
            d += g * y;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], filter: &WaveletFilter) -> Vec<f64> {
    let n = 2 * approx.len();
    let mut out = vec![0.0; n];
    for k in 0..approx.len() {
        for (m, (&h, &g)) in filter.low.iter().zip(&filter.high).enumerate() {
            out[(2 * k + m) % n] += h * approx[k] + g * detail[k];
        }
    }
    out
}

/// Forward transform down to level `coarsest` (j0). `j0 = 0` is the full DWT.
pub fn dwt_forward(signal: &[f64], filter: &WaveletFilter, coarsest: usize) -> Result<Decomposition> {
    let levels = dyadic_levels(signal.len()).ok_or(Error::NotPowerOfTwo(signal.len()))?;
    if levels == 0 || coarsest >= levels {
        return Err(Error::LevelOutOfRange {
            level: coarsest,
            max: levels.saturating_sub(1),
        });
    }
    let mut details = Vec::with_capacity(levels - coarsest);
    let mut current = signal.to_vec();
    for _ in coarsest..levels {
        let (approx, detail) = analysis_step(&current, filter);
        details.push(detail);
        current = approx;
    }
    Ok(Decomposition {
        levels,
        coarsest,
        details,
        scaling: current,
    })
}

pub fn dwt_inverse(d: &Decomposition, filter: &WaveletFilter) -> Result<Vec<f64>> {
    // Revalidate: the blocks are reachable through details_mut.
    let d = Decomposition::from_blocks(d.levels, d.coarsest, d.details.clone(), d.scaling.clone())?;
    let mut current = d.scaling;
    for detail in d.details.iter().rev() {
        current = synthesis_step(&current, detail, filter);
    }
    Ok(current)
}
