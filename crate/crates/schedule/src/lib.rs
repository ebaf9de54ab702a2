//! Annealing schedules `t -> s_t` on `[0, τ]`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("invalid schedule parameter: {0}")]
    Parameter(String),
    #[error("time {t} outside [0, {tau}]")]
    Range { t: f64, tau: f64 },
}

pub type Result<T> = std::result::Result<T, ScheduleError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Forward,
    Reverse,
    Constant,
    Custom,
}

/// Piecewise-linear schedule through `breakpoints`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub tau: f64,
    pub breakpoints: Vec<(f64, f64)>,
    pub kind: ScheduleKind,
    /// Physical duration label such as "100 us"; never enters the dynamics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_tau: Option<String>,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(ScheduleError::Parameter(format!("tau must be positive and finite, got {tau}")))
    }
}

fn check_s(name: &str, s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(ScheduleError::Parameter(format!("{name} = {s} outside [0, 1]")))
    }
}

impl Schedule {
    /// General constructor; validates ordering and ranges.
    pub fn new(tau: f64, breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        check_tau(tau)?;
        if breakpoints.len() < 2 {
            return Err(ScheduleError::Parameter("need at least two breakpoints".into()));
        }
        if breakpoints[0].0 != 0.0 || breakpoints[breakpoints.len() - 1].0 != tau {
            return Err(ScheduleError::Parameter("breakpoints must start at 0 and end at tau".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(ScheduleError::Parameter("breakpoint times must increase strictly".into()));
        }
        for &(_, s) in &breakpoints {
            check_s("s", s)?;
        }
        Ok(Schedule { tau, breakpoints, kind: ScheduleKind::Custom, nominal_tau: None })
    }

    pub fn with_nominal_tau(mut self, label: impl Into<String>) -> Self {
        self.nominal_tau = Some(label.into());
        self
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0].1
    }

    pub fn end(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1].1
    }

    /// Interpolated `s_t`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.tau).contains(&t) {
            return Err(ScheduleError::Range { t, tau: self.tau });
        }
        Ok(self.eval_clamped(t))
    }

    /// Like `evaluate` but clamps `t` into `[0, τ]`.
    pub fn eval_clamped(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.tau);
        let k = self.breakpoints.partition_point(|&(bt, _)| bt <= t);
        if k == 0 {
            return self.start();
        }
        let (t0, s0) = self.breakpoints[k - 1];
        if t == t0 || k == self.breakpoints.len() {
            return s0;
        }
        let (t1, s1) = self.breakpoints[k];
        let u = (t - t0) / (t1 - t0);
        s0 * (1.0 - u) + s1 * u
    }

    /// `s_0 = s_τ`.
    pub fn is_cyclic(&self) -> bool {
        self.start() == self.end()
    }

    /// `s_t = s_{τ-t}` for all `t`, within `tol`.
    pub fn is_time_symmetric(&self, tol: f64) -> bool {
        self.breakpoints
            .iter()
            .all(|&(t, s)| (self.eval_clamped(self.tau - t) - s).abs() <= tol)
    }

    /// Largest `|ds/dt|` over the segments.
    pub fn max_slope(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    }

    /// Smallest value of `s` reached.
    pub fn min_s(&self) -> f64 {
        self.breakpoints.iter().map(|b| b.1).fold(f64::INFINITY, f64::min)
    }
}

/// Starts at 1, dips linearly to `s_bar` at `τ/2` and returns to 1.
pub fn reverse_schedule(tau: f64, s_bar: f64) -> Result<Schedule> {
    check_tau(tau)?;
    check_s("s_bar", s_bar)?;
    Ok(Schedule {
        tau,
        breakpoints: vec![(0.0, 1.0), (tau / 2.0, s_bar), (tau, 1.0)],
        kind: ScheduleKind::Reverse,
        nominal_tau: None,
    })
}

/// Linear ramp `s_t = t/τ`.
pub fn forward_schedule(tau: f64) -> Result<Schedule> {
    check_tau(tau)?;
    Ok(Schedule { tau, breakpoints: vec![(0.0, 0.0), (tau, 1.0)], kind: ScheduleKind::Forward, nominal_tau: None })
}

/// Holds `s_t = s0`.
pub fn constant_schedule(tau: f64, s0: f64) -> Result<Schedule> {
    check_tau(tau)?;
    check_s("s0", s0)?;
    Ok(Schedule { tau, breakpoints: vec![(0.0, s0), (tau, s0)], kind: ScheduleKind::Constant, nominal_tau: None })
}

/// Config-file form of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleSpec {
    Forward { tau: f64 },
    Reverse { tau: f64, s_bar: f64 },
    Constant { tau: f64, s0: f64 },
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<Schedule> {
        match *self {
            ScheduleSpec::Forward { tau } => forward_schedule(tau),
            ScheduleSpec::Reverse { tau, s_bar } => reverse_schedule(tau, s_bar),
            ScheduleSpec::Constant { tau, s0 } => constant_schedule(tau, s0),
        }
    }

    pub fn tau(&self) -> f64 {
        match *self {
            ScheduleSpec::Forward { tau } | ScheduleSpec::Reverse { tau, .. } | ScheduleSpec::Constant { tau, .. } => tau,
        }
    }
}
