//! Experiment pipelines.

use std::path::Path;

use ft_oracle::{bound_chain, joint_tpm_distribution, random_model, tur_check, verify_mvft};
use ising_model::IsingProblem;
use open_dynamics::{gibbs_state, run_ensemble, EnsembleResult};
use rayon::prelude::*;
use schedule::{constant_schedule, reverse_schedule, ScheduleSpec};
use serde::Serialize;
use temp_estimate::{estimate_beta, likelihood_curve, plateau_estimate, SampleSet, SearchInterval};
use thermo_analysis::{
    bounds_report, clausius_sigma, BoundsReport, DataFlag, EnergyStatistics, MomentConvention, OperationMode,
};

use crate::config::{ExperimentConfig, SweepVariable, DEFAULT_TAU};
use crate::samples::{chain_length_of, group_by_s_bar, SampleGroup, SampleRecord};
use crate::{HarnessError, Result};

fn default_reverse() -> ScheduleSpec {
    ScheduleSpec::Reverse { tau: DEFAULT_TAU, s_bar: 0.5 }
}

/// Energy statistics, optionally with the doubled per-spin convention.
fn stats(values: &[f64], l: usize, doubled: bool) -> Result<EnergyStatistics> {
    let mut st = EnergyStatistics::from_samples(values, l)
        .map_err(|e| HarnessError::Numerical(format!("ensemble statistics: {e}")))?;
    st.per_spin_doubled = doubled;
    Ok(st)
}

fn per_spin(cfg: &ExperimentConfig, l: usize) -> f64 {
    let f = if cfg.analysis.per_spin_doubled { 2.0 } else { 1.0 };
    f / l as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub gamma_t: f64,
    pub n_samples: usize,
    pub mean_energy_per_spin: f64,
    pub stderr_per_spin: f64,
    pub gibbs_energy_per_spin: f64,
}

/// Mean measured energy after holding `s = s0` for each time in the sweep,
/// starting from the preparation ensemble.
pub fn run_decay_experiment(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<DecayRow>> {
    let p = cfg.problem.build(base, None)?;
    let spec = cfg.schedule_spec(ScheduleSpec::Constant { tau: 100.0, s0: 1.0 });
    let (tau_ref, s0) = match spec {
        ScheduleSpec::Constant { tau, s0 } => (tau, s0),
        _ => return Err(HarnessError::Config("decay needs a constant schedule".into())),
    };
    let times = match cfg.sweep.variable()? {
        (SweepVariable::Tau, t) => t.to_vec(),
        _ => return Err(HarnessError::Config("decay sweeps tau (the holding times)".into())),
    };
    if times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(HarnessError::Config("decay times must be finite and >= 0".into()));
    }
    let bath = cfg.bath.spec(tau_ref)?;
    let prep = cfg.preparation.spec();
    let l = p.n;
    let scale = per_spin(cfg, l);
    let h = ising_model::dense_hamiltonian(&p, s0)?;
    let gibbs = gibbs_state(&p, s0, bath.beta2)?.expectation(&h) * scale;
    let dt = cfg.integrator.dt;

    let rows: Vec<Result<DecayRow>> = times
        .par_iter()
        .map(|&t| {
            let energies: Vec<f64> = if t == 0.0 {
                boltzmann_sampler::draw_initial_configs(&p, &prep)?
                    .iter()
                    .flat_map(|c| {
                        let e = ising_model::classical_energy(&p, c).expect("sized configuration");
                        std::iter::repeat_n(e, prep.repeats_per_config)
                    })
                    .collect()
            } else {
                let sch = constant_schedule(t, s0)?;
                run_ensemble(&p, &sch, &prep, &bath, dt)?.samples.iter().map(|s| s.e_final).collect()
            };
            let st = stats(&energies, l, false)?;
            Ok(DecayRow {
                t,
                gamma_t: bath.gamma_rate * t,
                n_samples: st.n_samples,
                mean_energy_per_spin: st.mean * scale,
                stderr_per_spin: st.stderr() * scale,
                gibbs_energy_per_spin: gibbs,
            })
        })
        .collect();
    rows.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub s_bar: f64,
    pub tau: f64,
    pub gamma_tau: f64,
    pub n_samples: usize,
    pub mean_de1_per_spin: f64,
    pub var_per_spin: f64,
    pub mean_final_per_spin: f64,
    pub var_final_per_spin: f64,
    pub sigma_lower: f64,
    pub heat_out_lower: f64,
    pub work_lower: f64,
    pub mode: OperationMode,
    pub avg_work: f64,
    pub avg_heat_in: f64,
    /// `β₁⟨ΔE₁⟩ - β₂⟨Q⟩` from the integrated averages.
    pub mean_sigma: f64,
    pub first_law_residual: f64,
    /// Standard error of the sampled `⟨ΔE₁⟩`, total units.
    pub stderr_de1: f64,
}

/// One evaluated sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub row: SweepRow,
    pub report: BoundsReport,
    pub de1: EnergyStatistics,
    pub final_energy: EnergyStatistics,
    pub ensemble: EnsembleResult,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub points: Vec<SweepPoint>,
}

impl SweepOutput {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.points.iter().map(|p| p.row.clone()).collect()
    }

    pub fn sample_records(&self) -> Vec<SampleRecord> {
        self.points
            .iter()
            .flat_map(|pt| {
                pt.ensemble.samples.iter().enumerate().map(move |(k, s)| SampleRecord {
                    run_id: k as u64,
                    s_bar: pt.row.s_bar,
                    e_initial: s.e_initial,
                    e_final: s.e_final,
                    final_bits: s.final_config.to_bits(),
                })
            })
            .collect()
    }
}

/// Runs one reverse anneal and analyses its samples.
pub fn sweep_point(
    cfg: &ExperimentConfig,
    p: &IsingProblem,
    s_bar: f64,
    tau: f64,
    gamma_tau: Option<f64>,
) -> Result<SweepPoint> {
    let sch = reverse_schedule(tau, s_bar)?;
    let mut bath_cfg = cfg.bath.clone();
    if let Some(gt) = gamma_tau {
        bath_cfg.gamma_rate = None;
        bath_cfg.gamma_tau = Some(gt);
    }
    let bath = bath_cfg.spec(tau)?;
    let prep = cfg.preparation.spec();
    let ensemble = run_ensemble(p, &sch, &prep, &bath, cfg.integrator.dt)?;
    let l = p.n;
    let doubled = cfg.analysis.per_spin_doubled;
    let de: Vec<f64> = ensemble.samples.iter().map(|s| s.delta_e1).collect();
    let fin: Vec<f64> = ensemble.samples.iter().map(|s| s.e_final).collect();
    let de1 = stats(&de, l, doubled)?;
    let final_energy = stats(&fin, l, doubled)?;
    let (beta1, beta2) = cfg.analysis_betas();
    let report = bounds_report(&de1, beta1, beta2, cfg.analysis.convention, cfg.analysis.eps)?;
    let rec = ensemble.record;
    let row = SweepRow {
        s_bar,
        tau,
        gamma_tau: bath.gamma_rate * tau,
        n_samples: de1.n_samples,
        mean_de1_per_spin: de1.mean_per_spin(),
        var_per_spin: de1.variance_per_spin(),
        mean_final_per_spin: final_energy.mean_per_spin(),
        var_final_per_spin: final_energy.variance_per_spin(),
        sigma_lower: report.sigma_lower,
        heat_out_lower: report.heat_out_lower,
        work_lower: report.work_lower,
        mode: report.mode,
        avg_work: rec.avg_work,
        avg_heat_in: rec.avg_heat_in,
        mean_sigma: clausius_sigma(rec.avg_delta_e1, -rec.avg_heat_in, beta1, beta2),
        first_law_residual: rec.first_law_residual(),
        stderr_de1: de1.stderr(),
    };
    Ok(SweepPoint { row, report, de1, final_energy, ensemble })
}

/// Reverse anneals over the configured sweep; points are assembled in sweep
/// order whatever the execution order.
pub fn run_reverse_sweep(cfg: &ExperimentConfig, base: &Path) -> Result<SweepOutput> {
    let p = cfg.problem.build(base, None)?;
    let (tau0, s_bar0) = match cfg.schedule_spec(default_reverse()) {
        ScheduleSpec::Reverse { tau, s_bar } => (tau, s_bar),
        _ => return Err(HarnessError::Config("reverse-sweep needs a reverse schedule".into())),
    };
    let (var, values) = cfg.sweep.variable()?;
    let points: Vec<(f64, f64, Option<f64>)> = values
        .iter()
        .map(|&v| match var {
            SweepVariable::SBar => (v, tau0, None),
            SweepVariable::Tau => (s_bar0, v, None),
            SweepVariable::GammaTau => (s_bar0, tau0, Some(v)),
        })
        .collect();
    let results: Vec<Result<SweepPoint>> =
        points.par_iter().map(|&(s_bar, tau, gt)| sweep_point(cfg, &p, s_bar, tau, gt)).collect();
    Ok(SweepOutput { points: results.into_iter().collect::<Result<_>>()? })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub s: f64,
    pub eigenvalues: Vec<f64>,
    /// Gap inside the symmetry sector of the ground state.
    pub gap: f64,
}

pub fn run_spectrum_report(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<SpectrumRow>> {
    let p = cfg.problem.build(base, None)?;
    let k = cfg.spectrum.s_points;
    if k < 2 {
        return Err(HarnessError::Config("spectrum.s_points must be at least 2".into()));
    }
    let grid: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
    let spectra = match cfg.spectrum.lowest {
        Some(m) => ising_model::spectrum_lowest(&p, &grid, m, &Default::default())?,
        None => ising_model::spectrum(&p, &grid)?,
    };
    spectra
        .into_iter()
        .map(|sp| {
            let gap = if p.n <= ising_model::MAX_DENSE_SPINS { ising_model::sector_gap(&p, sp.s)? } else { sp.gap() };
            Ok(SpectrumRow { s: sp.s, eigenvalues: sp.eigenvalues, gap })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "FlatAnalysisRow")]
pub struct AnalysisRow {
    pub s_bar: f64,
    pub report: BoundsReport,
}

#[derive(Serialize)]
struct FlatAnalysisRow {
    s_bar: f64,
    n_samples: usize,
    mean: f64,
    second_moment: f64,
    variance: f64,
    beta1: f64,
    beta2: f64,
    convention: MomentConvention,
    sigma_lower: f64,
    heat_out_lower: f64,
    work_lower: f64,
    flag: DataFlag,
    eps: f64,
    mode: OperationMode,
}

impl From<AnalysisRow> for FlatAnalysisRow {
    fn from(a: AnalysisRow) -> Self {
        let r = a.report;
        FlatAnalysisRow {
            s_bar: a.s_bar,
            n_samples: r.n_samples,
            mean: r.mean,
            second_moment: r.second_moment,
            variance: r.variance,
            beta1: r.beta1,
            beta2: r.beta2,
            convention: r.convention,
            sigma_lower: r.sigma_lower,
            heat_out_lower: r.heat_out_lower,
            work_lower: r.work_lower,
            flag: r.flag,
            eps: r.eps,
            mode: r.mode,
        }
    }
}

/// Bounds report per `s̄` group of sample records.
pub fn analyze(
    records: Vec<SampleRecord>,
    chain_length: Option<usize>,
    beta1: f64,
    beta2: f64,
    cfg: &ExperimentConfig,
) -> Result<Vec<AnalysisRow>> {
    if records.len() < 2 {
        return Err(HarnessError::Data(format!("need at least 2 samples, got {}", records.len())));
    }
    let l = chain_length.or_else(|| chain_length_of(&records)).unwrap_or(1);
    group_by_s_bar(records)
        .iter()
        .map(|g| {
            let mut st = g.statistics(l)?;
            st.per_spin_doubled = cfg.analysis.per_spin_doubled;
            let report = bounds_report(&st, beta1, beta2, cfg.analysis.convention, cfg.analysis.eps)?;
            Ok(AnalysisRow { s_bar: g.s_bar, report })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub s_bar: f64,
    pub n_samples: usize,
    pub beta_hat: f64,
    pub lambda: f64,
    pub at_edge: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateauRow {
    pub s_cut: f64,
    pub n_points: usize,
    pub beta_plateau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub s_bar: f64,
    pub beta: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutput {
    pub rows: Vec<EstimateRow>,
    pub plateau: Option<PlateauRow>,
    pub curve: Vec<CurveRow>,
}

/// `β̂` per `s̄` from the final configurations, and the plateau mean.
pub fn estimate_temperatures(records: Vec<SampleRecord>, cfg: &ExperimentConfig, base: &Path) -> Result<EstimateOutput> {
    if records.is_empty() {
        return Err(HarnessError::Data("sample file has no rows".into()));
    }
    let n_bits = chain_length_of(&records)
        .ok_or_else(|| HarnessError::Data("estimate-beta needs final_bits in the sample file".into()))?;
    let p = cfg.problem.build(base, Some(n_bits))?;
    if p.n != n_bits {
        return Err(HarnessError::Data(format!("final_bits have {n_bits} spins, problem has {}", p.n)));
    }
    let interval = SearchInterval { beta_min: 0.0, beta_max: cfg.estimate.beta_max };
    let groups: Vec<SampleGroup> = group_by_s_bar(records);
    let mut rows = Vec::with_capacity(groups.len());
    let mut curve = Vec::new();
    for g in &groups {
        let ss = SampleSet::new(p.clone(), g.configurations()?)?;
        let est = estimate_beta(&ss, interval)?;
        rows.push(EstimateRow { s_bar: g.s_bar, n_samples: ss.len(), beta_hat: est.beta, lambda: est.lambda, at_edge: est.at_edge() });
        let m = cfg.estimate.curve_points;
        if m >= 2 {
            let betas: Vec<f64> = (0..m).map(|i| cfg.estimate.beta_max * i as f64 / (m - 1) as f64).collect();
            curve.extend(likelihood_curve(&ss, &betas).into_iter().map(|(beta, lambda)| CurveRow { s_bar: g.s_bar, beta, lambda }));
        }
    }
    let per: Vec<(f64, f64)> = rows.iter().map(|r| (r.s_bar, r.beta_hat)).collect();
    let s_cut = cfg.estimate.s_cut;
    let plateau = plateau_estimate(&per, s_cut).ok().map(|beta_plateau| PlateauRow {
        s_cut,
        n_points: per.iter().filter(|(s, _)| *s <= s_cut + 1e-12).count(),
        beta_plateau,
    });
    Ok(EstimateOutput { rows, plateau, curve })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtRow {
    pub seed: u64,
    pub n_outcomes: usize,
    pub max_violation: f64,
    pub max_sigma_form_violation: f64,
    pub mean_de1: f64,
    pub mean_de2: f64,
    pub mean_sigma: f64,
    pub sigma_lower: f64,
    pub tur_slack: f64,
    pub heat_out_lower: f64,
    pub work_lower: f64,
    pub exact_work: f64,
    pub passed: bool,
}

pub const FT_TOL: f64 = 1e-8;

/// Fluctuation-theorem and bound checks on random composites.
pub fn run_ft_verify(cfg: &ExperimentConfig, base_seed: u64) -> Result<Vec<FtRow>> {
    let ft = &cfg.ft;
    if ft.beta1 > ft.beta2 {
        return Err(HarnessError::Config(format!("ft: beta1 = {} exceeds beta2 = {}", ft.beta1, ft.beta2)));
    }
    let seeds: Vec<u64> = (0..ft.seeds).map(|k| base_seed.wrapping_add(k)).collect();
    let rows: Vec<Result<FtRow>> = seeds
        .par_iter()
        .map(|&seed| {
            let m = random_model(ft.n_sys, ft.n_bath, ft.beta1, ft.beta2, seed)?;
            let dist = joint_tpm_distribution(&m)?;
            let rep = verify_mvft(&dist, ft.beta1, ft.beta2);
            let tur = tur_check(&dist, ft.beta1, ft.beta2);
            let chain = bound_chain(&dist, ft.beta1, ft.beta2)?;
            let passed = rep.holds(FT_TOL)
                && rep.clausius_holds(1e-10)
                && tur.g_form_holds(1e-12)
                && tur.f_form_holds(1e-12)
                && chain.holds(1e-12);
            Ok(FtRow {
                seed,
                n_outcomes: dist.len(),
                max_violation: rep.max_violation,
                max_sigma_form_violation: rep.max_sigma_form_violation,
                mean_de1: rep.mean_de1,
                mean_de2: rep.mean_de2,
                mean_sigma: rep.mean_sigma,
                sigma_lower: tur.sigma_lower,
                tur_slack: tur.slack,
                heat_out_lower: chain.heat_out_lower,
                work_lower: chain.work_lower,
                exact_work: chain.exact_work,
                passed,
            })
        })
        .collect();
    rows.into_iter().collect()
}

