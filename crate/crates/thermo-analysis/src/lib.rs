//! Bounds on entropy production, heat and work from energy-change statistics,
//! and classification of the thermal operation mode.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThermoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid statistics: {0}")]
    Statistics(String),
    #[error("temperature convention violated: beta1 = {beta1} > beta2 = {beta2}")]
    Convention { beta1: f64, beta2: f64 },
    #[error("sign pattern ({0:+}, {1:+}, {2:+}) is not an allowed operation mode")]
    Inconsistent(i8, i8, i8),
}

pub type Result<T> = std::result::Result<T, ThermoError>;

/// `g(x) = x artanh(x)`; infinite at `|x| = 1`.
pub fn g_func(x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(ThermoError::Domain(format!("g needs |x| <= 1, got {x}")));
    }
    if x.abs() == 1.0 {
        return Ok(f64::INFINITY);
    }
    let a = x.abs();
    Ok(a * a.atanh())
}

/// `f(x) = tanh²(x/2)`.
pub fn f_func(x: f64) -> f64 {
    (x / 2.0).tanh().powi(2)
}

/// `h(x) = x tanh(x/2)`.
pub fn h_func(x: f64) -> f64 {
    x * (x / 2.0).tanh()
}

/// Nonnegative root of `h(x) = y`.
pub fn h_inverse(y: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(ThermoError::Domain(format!("h_inverse needs y >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(f64::INFINITY);
    }
    // h is increasing on [0, ∞) with h(x) >= x - 2
    let mut lo = 0.0;
    let mut hi = (y + 2.0).max(2.0 * y.sqrt()).max(1.0);
    while h_func(hi) < y {
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = h_func(x) - y;
        if fx == 0.0 {
            break;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let t = (x / 2.0).tanh();
        let dh = t + x * 0.5 * (1.0 - t * t);
        let newton = x - fx / dh;
        x = if dh > 0.0 && newton >= lo && newton <= hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * x {
            break;
        }
    }
    Ok(x)
}

/// Denominator used to normalize the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentConvention {
    #[default]
    SecondMoment,
    Variance,
}

/// Sample moments of the processor energy change `ΔE₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyStatistics {
    pub n_samples: usize,
    pub mean: f64,
    pub second_moment: f64,
    /// Population variance, `second_moment - mean²`.
    pub variance: f64,
    /// Chain length used for per-spin reporting.
    pub chain_length: usize,
    /// Report per-spin values doubled.
    #[serde(default)]
    pub per_spin_doubled: bool,
}

impl EnergyStatistics {
    pub fn from_samples(samples: &[f64], chain_length: usize) -> Result<Self> {
        if samples.len() < 2 {
            return Err(ThermoError::Statistics(format!("need at least 2 samples, got {}", samples.len())));
        }
        if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
            return Err(ThermoError::Statistics(format!("non-finite sample {x}")));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let second_moment = samples.iter().map(|x| x * x).sum::<f64>() / n;
        let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Ok(EnergyStatistics {
            n_samples: samples.len(),
            mean,
            second_moment,
            variance,
            chain_length,
            per_spin_doubled: false,
        })
    }

    /// From weighted outcomes `(value, probability)`; `n_samples` is nominal.
    pub fn from_distribution(outcomes: &[(f64, f64)], n_samples: usize, chain_length: usize) -> Self {
        let mean: f64 = outcomes.iter().map(|(x, p)| x * p).sum();
        let second_moment: f64 = outcomes.iter().map(|(x, p)| x * x * p).sum();
        let variance: f64 = outcomes.iter().map(|(x, p)| (x - mean).powi(2) * p).sum();
        EnergyStatistics { n_samples, mean, second_moment, variance, chain_length, per_spin_doubled: false }
    }

    pub fn from_moments(n_samples: usize, mean: f64, second_moment: f64, chain_length: usize) -> Result<Self> {
        if n_samples < 2 {
            return Err(ThermoError::Statistics("n_samples must be at least 2".into()));
        }
        if !(second_moment + 1e-12 * second_moment.abs() >= mean * mean) {
            return Err(ThermoError::Statistics(format!(
                "second moment {second_moment} below squared mean {}",
                mean * mean
            )));
        }
        Ok(EnergyStatistics {
            n_samples,
            mean,
            second_moment,
            variance: (second_moment - mean * mean).max(0.0),
            chain_length,
            per_spin_doubled: false,
        })
    }

    pub fn denominator(&self, convention: MomentConvention) -> f64 {
        match convention {
            MomentConvention::SecondMoment => self.second_moment,
            MomentConvention::Variance => self.variance,
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance / (self.n_samples as f64 - 1.0).max(1.0)).sqrt()
    }

    fn per_spin_factor(&self) -> f64 {
        let f = if self.per_spin_doubled { 2.0 } else { 1.0 };
        f / self.chain_length.max(1) as f64
    }

    pub fn mean_per_spin(&self) -> f64 {
        self.mean * self.per_spin_factor()
    }

    /// `var(ΔE₁)/l`, the extensive variance normalized by chain length.
    pub fn variance_per_spin(&self) -> f64 {
        self.variance * self.per_spin_factor()
    }
}

/// Flags attached to bounds computed from degenerate statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFlag {
    #[default]
    Ok,
    /// All samples zero: ratio undefined, bound set to 0.
    Degenerate,
    /// Deterministic nonzero change: `|ratio| = 1`, bound infinite.
    Saturated,
}

/// Lower bound on `⟨Σ⟩` with its data flag.
pub fn sigma_bound_flagged(st: &EnergyStatistics, convention: MomentConvention) -> (f64, DataFlag) {
    let denom = st.denominator(convention);
    if denom <= 0.0 {
        return if st.mean == 0.0 {
            (0.0, DataFlag::Degenerate)
        } else {
            (f64::INFINITY, DataFlag::Saturated)
        };
    }
    let r = st.mean / denom.sqrt();
    if r.abs() >= 1.0 {
        return (f64::INFINITY, DataFlag::Saturated);
    }
    (2.0 * g_func(r).expect("|r| < 1"), DataFlag::Ok)
}

/// `2 g(mean/√denominator)`.
pub fn sigma_bound(st: &EnergyStatistics, convention: MomentConvention) -> f64 {
    sigma_bound_flagged(st, convention).0
}

/// Lower bounds with their inputs echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoBounds {
    pub sigma_lower: f64,
    /// Lower bound on heat released to the environment, `-⟨Q⟩ = ⟨ΔE₂⟩`.
    pub heat_out_lower: f64,
    pub work_lower: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub convention: MomentConvention,
    pub flag: DataFlag,
    pub statistics: EnergyStatistics,
}

pub fn heat_work_bounds(
    st: &EnergyStatistics,
    beta1: f64,
    beta2: f64,
    convention: MomentConvention,
) -> Result<ThermoBounds> {
    if !(beta2 > 0.0) || !beta2.is_finite() {
        return Err(ThermoError::Domain(format!("beta2 must be positive, got {beta2}")));
    }
    if !(beta1 >= 0.0) {
        return Err(ThermoError::Domain(format!("beta1 must be >= 0, got {beta1}")));
    }
    if beta1 > beta2 {
        return Err(ThermoError::Convention { beta1, beta2 });
    }
    let (sigma_lower, flag) = sigma_bound_flagged(st, convention);
    let ratio = beta1 / beta2;
    let heat_out_lower = sigma_lower / beta2 - ratio * st.mean;
    let work_lower = sigma_lower / beta2 + (1.0 - ratio) * st.mean;
    Ok(ThermoBounds {
        sigma_lower,
        heat_out_lower,
        work_lower,
        beta1,
        beta2,
        convention,
        flag,
        statistics: st.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperationMode {
    Refrigerator,
    Engine,
    Accelerator,
    Heater,
    Indeterminate,
}

impl OperationMode {
    pub fn label(&self) -> &'static str {
        match self {
            OperationMode::Refrigerator => "R",
            OperationMode::Engine => "E",
            OperationMode::Accelerator => "A",
            OperationMode::Heater => "H",
            OperationMode::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for OperationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Mode from the signs of `(⟨ΔE₁⟩, ⟨ΔE₂⟩, ⟨W⟩)`.
pub fn classify_mode(mean_de1: f64, mean_de2: f64, mean_w: f64, eps: f64) -> Result<OperationMode> {
    if [mean_de1, mean_de2, mean_w].iter().any(|x| x.abs() <= eps) {
        return Ok(OperationMode::Indeterminate);
    }
    match (sign(mean_de1), sign(mean_de2), sign(mean_w)) {
        (1, -1, 1) => Ok(OperationMode::Refrigerator),
        (-1, 1, -1) => Ok(OperationMode::Engine),
        (-1, 1, 1) => Ok(OperationMode::Accelerator),
        (1, 1, 1) => Ok(OperationMode::Heater),
        (a, b, c) => Err(ThermoError::Inconsistent(a, b, c)),
    }
}

/// Mode certified by the lower bounds alone.
pub fn classify_from_bounds(st: &EnergyStatistics, bounds: &ThermoBounds, eps: f64) -> OperationMode {
    let both_positive = bounds.heat_out_lower > eps && bounds.work_lower > eps;
    if both_positive && st.mean < -eps {
        OperationMode::Accelerator
    } else if both_positive && st.mean > eps {
        OperationMode::Heater
    } else {
        OperationMode::Indeterminate
    }
}

/// Default sign tolerance: three standard errors when samples exist.
pub fn default_eps(st: &EnergyStatistics) -> f64 {
    if st.n_samples >= 2 && st.variance > 0.0 {
        3.0 * st.stderr()
    } else {
        1e-9
    }
}

/// `⟨Σ⟩ = β₁⟨ΔE₁⟩ + β₂⟨ΔE₂⟩`.
pub fn clausius_sigma(mean_de1: f64, mean_de2: f64, beta1: f64, beta2: f64) -> f64 {
    beta1 * mean_de1 + beta2 * mean_de2
}

/// `⟨W⟩ = ⟨ΔE₁⟩ + ⟨ΔE₂⟩`.
pub fn first_law_work(mean_de1: f64, mean_de2: f64) -> f64 {
    mean_de1 + mean_de2
}

/// Flat report for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n_samples: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub convention: MomentConvention,
    pub sigma_lower: f64,
    pub heat_out_lower: f64,
    pub work_lower: f64,
    pub flag: DataFlag,
    pub eps: f64,
    pub mode: OperationMode,
}

pub fn bounds_report(
    st: &EnergyStatistics,
    beta1: f64,
    beta2: f64,
    convention: MomentConvention,
    eps: Option<f64>,
) -> Result<BoundsReport> {
    let b = heat_work_bounds(st, beta1, beta2, convention)?;
    let eps = eps.unwrap_or_else(|| default_eps(st));
    let mode = classify_from_bounds(st, &b, eps);
    Ok(BoundsReport {
        n_samples: st.n_samples,
        mean: st.mean,
        second_moment: st.second_moment,
        variance: st.variance,
        beta1,
        beta2,
        convention,
        sigma_lower: b.sigma_lower,
        heat_out_lower: b.heat_out_lower,
        work_lower: b.work_lower,
        flag: b.flag,
        eps,
        mode,
    })
}
