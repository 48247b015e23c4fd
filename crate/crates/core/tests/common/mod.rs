//! Independent reference computations for the test suites. Nothing here
//! calls into the library's numerics.
#![allow(dead_code)]

use statrs::function::gamma::ln_gamma;

/// Tanh-sinh quadrature of `f` on `[a, b]`. The integrand receives the
/// abscissa together with its distances to both ends, so endpoint
/// singularities can be evaluated without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let node = |t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // distance from the nearer end: half * (1 - tanh|u|)
        let gap = (b - a) / (1.0 + (2.0 * u.abs()).exp());
        if gap <= 0.0 {
            return 0.0;
        }
        let (x, da, db) = if u >= 0.0 { (b - gap, b - a - gap, gap) } else { (a + gap, gap, b - a - gap) };
        let v = f(x, da, db);
        if v.is_finite() { half * w * v } else { 0.0 }
    };
    let mut h = 0.5;
    let mut prev = f64::NAN;
    loop {
        let steps = (4.0 / h) as i64;
        let sum: f64 = (-steps..=steps).map(|k| node(k as f64 * h)).sum::<f64>() * h;
        if (sum - prev).abs() <= 1e-15 * sum.abs().max(1e-300) || h < 1.0 / 512.0 {
            return sum;
        }
        prev = sum;
        h *= 0.5;
    }
}

/// `∫_a^∞ f`, via `x = a + u / (1 - u)`.
pub fn tanh_sinh_inf<F: Fn(f64) -> f64>(f: F, a: f64) -> f64 {
    tanh_sinh(
        |u, du, dv| {
            let x = a + u / dv;
            let jac = 1.0 / (dv * dv);
            let _ = du;
            f(x) * jac
        },
        0.0,
        1.0,
    )
}

/// Tanh-sinh over [a, b] split at the given interior points.
pub fn tanh_sinh_split<F: Fn(f64) -> f64>(f: F, points: &[f64]) -> f64 {
    points.windows(2).map(|w| tanh_sinh(|x, _, _| f(x), w[0], w[1])).sum()
}

pub fn ln_chisq_pdf(df: f64, x: f64) -> f64 {
    let k = 0.5 * df;
    (k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)
}

pub fn chisq_pdf(df: f64, x: f64) -> f64 {
    if x <= 0.0 { 0.0 } else { ln_chisq_pdf(df, x).exp() }
}

/// χ²_p conditioned on exceeding `pλ²`, convolved with χ²_q, evaluated by
/// direct numerical integration. The truncated normalizer is itself
/// integrated rather than taken from an incomplete gamma function.
pub struct ConvolutionOracle {
    p: f64,
    q: f64,
    c: f64,
    ln_ref: f64,
    norm: f64,
}

impl ConvolutionOracle {
    pub fn new(p: f64, q: f64, lambda: f64) -> Self {
        let c = p * lambda * lambda;
        // scale by the χ²_p log-density at the mode of the truncated part
        let anchor = c.max((p - 2.0).max(1e-3));
        let ln_ref = ln_chisq_pdf(p, anchor);
        let g = |x: f64| (ln_chisq_pdf(p, x) - ln_ref).exp();
        let norm = if c > 0.0 {
            tanh_sinh_inf(g, c)
        } else {
            tanh_sinh(|x, _, _| g(x), 0.0, anchor) + tanh_sinh_inf(g, anchor)
        };
        Self { p, q, c, ln_ref, norm }
    }

    pub fn pdf(&self, s: f64) -> f64 {
        if s <= self.c {
            return 0.0;
        }
        let (p, q, ln_ref) = (self.p, self.q, self.ln_ref);
        let num = tanh_sinh(
            |x, _, to_s| (ln_chisq_pdf(p, x) - ln_ref + ln_chisq_pdf(q, to_s)).exp(),
            self.c,
            s,
        );
        num / self.norm
    }
}

/// `Q(s, x)` for moderate arguments by quadrature of the gamma density.
pub fn upper_gamma_by_quadrature(s: f64, x: f64) -> f64 {
    let ln_g = ln_gamma(s);
    tanh_sinh_inf(|t| ((s - 1.0) * t.ln() - t - ln_g).exp(), x)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// erf by the positive-term series `2/√π e^{-x²} Σ 2^n x^{2n+1} / (2n+1)!!`,
/// accurate to a few ulps for |x| <= 6.
pub fn erf_series(x: f64) -> f64 {
    let (ax, sign) = (x.abs(), x.signum());
    let mut term = ax;
    let mut sum = ax;
    let mut n = 0.0;
    while term > 1e-18 * sum {
        n += 1.0;
        term *= 2.0 * ax * ax / (2.0 * n + 1.0);
        sum += term;
    }
    sign * 2.0 / std::f64::consts::PI.sqrt() * (-ax * ax).exp() * sum
}

/// `1 - Φ(x)`: series below 3, Laplace's continued fraction for the Mills
/// ratio above, so the upper tail keeps full relative accuracy.
pub fn norm_sf(x: f64) -> f64 {
    if x > 3.0 {
        let mut frac = x;
        for k in (1..=300).rev() {
            frac = x + k as f64 / frac;
        }
        norm_pdf(x) / frac
    } else if x < -3.0 {
        1.0 - norm_sf(-x)
    } else {
        0.5 - 0.5 * erf_series(x / std::f64::consts::SQRT_2)
    }
}

pub fn sample_mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Standard error of the sample variance, from the fourth central moment.
pub fn var_std_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    ((m4 - m2 * m2) / n).sqrt()
}

/// Small deterministic generator for test fixtures (SplitMix64).
pub struct Fixture(pub u64);

impl Fixture {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let (u1, u2) = (self.uniform(), self.uniform());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
