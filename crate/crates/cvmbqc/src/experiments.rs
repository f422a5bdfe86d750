//! Monte Carlo drivers. Trial `t` always draws from `stream(seed, t)`, and
//! results are gathered in trial order, so output does not depend on the
//! number of worker threads.

use cvmbqc_core::fock;
use cvmbqc_core::nogo::{self, ControlScanConfig, ControlScanResult, GaussianWireSpec, HomodyneFamily};
use cvmbqc_core::rng::{derive_seed, stream};
use cvmbqc_core::scheme::{self, GrowthMode, SchemeParameters};
use cvmbqc_core::stats::{self, LineFit};
use cvmbqc_core::su2::{self, phase_gate};
use cvmbqc_core::wire::{self, CorrelationState, DiscreteBasis, Measurement};
use cvmbqc_core::{Error, C64};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig, GrowthModeArg};
use crate::output::Table;

const Z95: f64 = 1.959_963_984_540_054;

/// Everything an experiment produces.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    /// Extra JSON documents, written as `<name>.json`.
    pub documents: Vec<(String, serde_json::Value)>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub type Outcome<T> = Result<T, Error>;

/// Runs `f(t)` for every trial in parallel, keeping trial order.
pub fn par_trials<T: Send>(trials: usize, f: impl Fn(u64) -> Outcome<T> + Sync + Send) -> Outcome<Vec<T>> {
    (0..trials as u64).into_par_iter().map(f).collect()
}

fn mean_ci(xs: &[f64]) -> (f64, f64, f64) {
    let m = stats::mean(xs);
    let se = stats::std_error(xs);
    (m, m - Z95 * se, m + Z95 * se)
}

pub fn run(cfg: &ExperimentConfig) -> Outcome<Report> {
    match cfg.experiment {
        Experiment::Compile => compile(cfg),
        Experiment::Couple => couple(cfg),
        Experiment::Readout => readout(cfg),
        Experiment::Transport => transport(cfg),
        Experiment::NogoScan => nogo_scan(cfg),
        Experiment::WeakCompile => weak_compile(cfg),
        Experiment::Truncation => truncation(cfg),
        Experiment::ErrorGrowth => error_growth(cfg),
        Experiment::FailureBound => failure_bound(cfg),
    }
}

/// Step counts of Haar-random compiles; trial `t` uses the same target and
/// random numbers for every tolerance.
pub fn compile_steps(p: &SchemeParameters, eps: f64, trials: usize, seed: u64) -> Outcome<Vec<usize>> {
    par_trials(trials, |t| {
        let mut rng = stream(seed, t);
        let target = su2::haar_unitary(&mut rng);
        Ok(scheme::compile_gate(p, &target, &mut rng, eps)?.step_count())
    })
}

fn compile(cfg: &ExperimentConfig) -> Outcome<Report> {
    let p = cfg.scheme();
    let p_floor = scheme::p_floor(&p);
    let mut summary =
        Table::new("compile_summary", &["alpha", "theta", "eps", "trials", "mean_steps", "p_floor", "ci_low", "ci_high"]);
    let mut traces = Table::new(
        "compile_traces",
        &["eps", "trial", "step", "x", "intended_n", "observed_n", "applied", "residual", "target"],
    );
    for &eps in &cfg.eps {
        let runs = par_trials(cfg.trials, |t| {
            let mut rng = stream(cfg.seed, t);
            let target = su2::haar_unitary(&mut rng);
            scheme::compile_gate(&p, &target, &mut rng, eps)
        })?;
        let steps: Vec<f64> = runs.iter().map(|r| r.step_count() as f64).collect();
        let (m, lo, hi) = mean_ci(&steps);
        summary.push(vec![
            p.alpha.into(),
            p.theta.into(),
            eps.into(),
            cfg.trials.into(),
            m.into(),
            p_floor.into(),
            lo.into(),
            hi.into(),
        ]);
        if cfg.traces {
            for (trial, run) in runs.iter().enumerate() {
                let target = flat_json(&run.target.to_flat());
                for (k, s) in run.steps.iter().enumerate() {
                    traces.push(vec![
                        eps.into(),
                        trial.into(),
                        k.into(),
                        s.x.into(),
                        s.intended_n.into(),
                        s.observed_n.into(),
                        flat_json(&s.applied.to_flat()).into(),
                        s.residual.into(),
                        target.clone().into(),
                    ]);
                }
            }
        }
    }
    let mut tables = vec![summary];
    if cfg.traces {
        tables.push(traces);
    }
    Ok(Report { tables, documents: Vec::new() })
}

/// Gate entries as a JSON array `[re00, im00, re01, im01, …]`.
fn flat_json(v: &[f64; 8]) -> String {
    serde_json::to_string(v).expect("finite floats encode")
}

/// Per-trial coupling outcomes from Haar-random two-qubit states.
pub fn coupling_trials(p: &SchemeParameters, trials: usize, seed: u64) -> Outcome<Vec<scheme::CouplingOutcome>> {
    par_trials(trials, |t| {
        let mut rng = stream(seed, t);
        let state = CorrelationState::haar(4, &mut rng);
        scheme::couple_wires(p, &state, &mut rng)
    })
}

fn couple(cfg: &ExperimentConfig) -> Outcome<Report> {
    let p = cfg.scheme();
    let runs = coupling_trials(&p, cfg.trials, cfg.seed)?;
    let mut per_trial = Table::new("couple_trials", &["trial", "n1", "n2", "entangling"]);
    for (t, r) in runs.iter().enumerate() {
        per_trial.push(vec![t.into(), r.n1.into(), r.n2.into(), r.entangling.into()]);
    }
    let odd = runs.iter().filter(|r| r.entangling).count();
    let analytic = scheme::cz_success_probability(&p);
    let sigma = (analytic * (1.0 - analytic) / cfg.trials as f64).sqrt();
    let freq = odd as f64 / cfg.trials as f64;
    let mut summary =
        Table::new("couple_summary", &["alpha", "theta", "trials", "odd", "frequency", "analytic", "summation", "sigma", "z"]);
    summary.push(vec![
        p.alpha.into(),
        p.theta.into(),
        cfg.trials.into(),
        odd.into(),
        freq.into(),
        analytic.into(),
        scheme::cz_success_probability_by_summation(&p).into(),
        sigma.into(),
        ((freq - analytic) / sigma).into(),
    ]);
    Ok(Report { tables: vec![summary, per_trial], documents: Vec::new() })
}

pub fn initialization_trials(p: &SchemeParameters, trials: usize, seed: u64) -> Outcome<Vec<scheme::Initialization>> {
    par_trials(trials, |t| {
        let mut rng = stream(seed, t);
        let start = CorrelationState::haar(2, &mut rng);
        scheme::initialize(p, &start, &mut rng)
    })
}

fn readout(cfg: &ExperimentConfig) -> Outcome<Report> {
    let p = cfg.scheme();
    let runs = initialization_trials(&p, cfg.trials, cfg.seed)?;
    let mut per_trial = Table::new("readout_trials", &["trial", "bit", "repetitions", "compile_steps", "fidelity"]);
    for (t, r) in runs.iter().enumerate() {
        per_trial.push(vec![
            t.into(),
            (r.readout.bit as usize).into(),
            r.readout.repetitions.into(),
            r.readout.compile_steps.into(),
            r.fidelity.into(),
        ]);
    }
    let reps: Vec<f64> = runs.iter().map(|r| r.readout.repetitions as f64).collect();
    let (m, lo, hi) = mean_ci(&reps);
    let min_fid = runs.iter().map(|r| r.fidelity).fold(1.0, f64::min);
    let mut summary =
        Table::new("readout_summary", &["alpha", "theta", "trials", "mean_repetitions", "ci_low", "ci_high", "min_fidelity"]);
    summary.push(vec![p.alpha.into(), p.theta.into(), cfg.trials.into(), m.into(), lo.into(), hi.into(), min_fid.into()]);
    Ok(Report { tables: vec![summary, per_trial], documents: Vec::new() })
}

/// Displaced photon counting at the centre shift on the oracle wire.
pub fn unitary_transport_basis(p: &SchemeParameters) -> Outcome<DiscreteBasis> {
    let w = scheme::scheme_wire(p)?;
    let shift = fock::displacement_op(C64::new(p.centre_shift(), 0.0), p.n_max);
    let rows: Vec<Vec<C64>> = (0..=p.n_max).map(|n| shift.row(n)).collect();
    DiscreteBasis::from_rows(&w, "displaced-number", &rows)
}

/// Non-unitary wire with singular ratio 0.9 and fixed Haar rotations.
pub fn nonunitary_transport_basis(seed: u64) -> Outcome<DiscreteBasis> {
    let mut rng = stream(derive_seed(seed, 0x7472_616e), 0);
    let (u0, u1) = (su2::haar_unitary(&mut rng), su2::haar_unitary(&mut rng));
    Ok(DiscreteBasis::computational(&wire::synthetic_nonunitary_wire(&u0, &u1, 0.9)?))
}

/// Mean conditioned fidelity per step over trajectories run in parallel.
pub fn mean_transport(basis: &(dyn Measurement + Sync), steps: usize, trajectories: usize, seed: u64) -> Outcome<Vec<f64>> {
    let all = par_trials(trajectories, |t| wire::transport_trajectory(basis, steps, &mut stream(seed, t)))?;
    let mut mean = vec![0.0; steps + 1];
    for traj in &all {
        for (m, f) in mean.iter_mut().zip(traj) {
            *m += f;
        }
    }
    Ok(mean.into_iter().map(|m| m / trajectories as f64).collect())
}

fn transport(cfg: &ExperimentConfig) -> Outcome<Report> {
    let p = cfg.scheme();
    let unitary = unitary_transport_basis(&p)?;
    let nonunitary = nonunitary_transport_basis(cfg.seed)?;
    let f_u = mean_transport(&unitary, cfg.steps, cfg.trials.min(16), cfg.seed)?;
    let f_n = mean_transport(&nonunitary, cfg.steps, cfg.trials, derive_seed(cfg.seed, 1))?;
    let mut table = Table::new(
        "transport",
        &["step", "unitary_mean_f", "nonunitary_mean_f", "log_mean_f", "mean_one_minus_f", "log_mean_one_minus_f"],
    );
    for (n, (u, f)) in f_u.iter().zip(&f_n).enumerate() {
        table.push(vec![n.into(), (*u).into(), (*f).into(), f.ln().into(), (1.0 - f).into(), (1.0 - f).ln().into()]);
    }
    let fit = decay_fit(&f_n);
    let channel = nonunitary.channel();
    let mut blind = Table::new("transport_blind", &["step", "blind_fidelity"]);
    for n in [1, 2, 5, 10, 20, 50, 100, 200].into_iter().filter(|&n| n <= cfg.steps) {
        blind.push(vec![n.into(), wire::blind_fidelity(&channel, n).into()]);
    }
    let doc = json!({
        "nonunitary_log_mean_f_slope": fit.slope,
        "nonunitary_log_mean_f_r_squared": fit.r_squared,
        "unitary_max_deviation": f_u.iter().map(|f| (1.0 - f).abs()).fold(0.0, f64::max),
    });
    Ok(Report { tables: vec![table, blind], documents: vec![("transport_fit".into(), doc)] })
}

/// Line fit of `ln E[f]` against the step index, skipping step 0.
pub fn decay_fit(mean_f: &[f64]) -> LineFit {
    let xs: Vec<f64> = (1..mean_f.len()).map(|n| n as f64).collect();
    let ys: Vec<f64> = mean_f[1..].iter().map(|f| f.ln()).collect();
    stats::linear_fit(&xs, &ys)
}

/// Control scans for `targets` reachable phase gates, one per worker.
pub fn control_scans(targets: usize, samples: usize, seed: u64) -> Outcome<Vec<(su2::Gate2, ControlScanResult)>> {
    let family = HomodyneFamily::new(nogo::two_basis_wire()?);
    par_trials(targets, |t| {
        let target = nogo::reachable_target(&mut stream(derive_seed(seed, 0x7461_7267), t));
        let cfg = ControlScanConfig::standard(samples, derive_seed(seed, t));
        Ok((target, nogo::control_scan(&family, &target, &cfg)?))
    })
}

fn nogo_scan(cfg: &ExperimentConfig) -> Outcome<Report> {
    let scans = control_scans(cfg.targets, cfg.samples, cfg.seed)?;
    let mut table = Table::new(
        "nogo_scan",
        &["target", "epsilon", "p_hat", "ci_low", "ci_high", "theta_argmax", "hits", "sparse"],
    );
    let mut fits = Vec::new();
    for (t, (target, res)) in scans.iter().enumerate() {
        for i in 0..res.eps.len() {
            table.push(vec![
                t.into(),
                res.eps[i].into(),
                res.p_hat[i].into(),
                res.ci_low[i].into(),
                res.ci_high[i].into(),
                res.theta_argmax[i].into(),
                res.hits[i].into(),
                res.sparse[i].into(),
            ]);
        }
        fits.push(json!({
            "target": t,
            "target_phase": (target.0[1][1] / target.0[0][0]).arg(),
            "lambda": res.lambda(),
            "lambda_ci": res.lambda_ci().map(|(a, b)| [a, b]),
            "prefactor": res.prefactor(),
            "r_squared": res.fit.map(|f| f.r_squared),
        }));
    }
    let doc = json!({ "samples": cfg.samples, "fits": fits });
    Ok(Report { tables: vec![table], documents: vec![("nogo_fit".into(), doc)] })
}

/// Steps taken by the weak compiler on uniformly random phase targets.
pub fn weak_steps(eps: f64, trials: usize, seed: u64) -> Outcome<Vec<usize>> {
    par_trials(trials, |t| {
        let mut rng = stream(seed, t);
        let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let spec = GaussianWireSpec::for_phase(phi);
        Ok(nogo::weak_phase_compiler(&spec, phi, eps, &mut rng)?.step_count())
    })
}

/// Scheme-compiler steps for the same kind of phase targets.
pub fn scheme_phase_steps(p: &SchemeParameters, eps: f64, trials: usize, seed: u64) -> Outcome<Vec<usize>> {
    par_trials(trials, |t| {
        let mut rng = stream(seed, t);
        let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        Ok(scheme::compile_gate(p, &phase_gate(phi), &mut rng, eps)?.step_count())
    })
}

/// Fit of `ln(mean steps)` against `ln(1/ε)`.
pub fn cost_exponent(eps: &[f64], means: &[f64]) -> LineFit {
    let xs: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    stats::linear_fit(&xs, &ys)
}

fn weak_compile(cfg: &ExperimentConfig) -> Outcome<Report> {
    let mut table = Table::new("weak_compile", &["eps", "trials", "mean_steps", "ci_low", "ci_high"]);
    let mut means = Vec::new();
    for &eps in &cfg.eps {
        let steps: Vec<f64> = weak_steps(eps, cfg.trials, cfg.seed)?.into_iter().map(|s| s as f64).collect();
        let (m, lo, hi) = mean_ci(&steps);
        means.push(m);
        table.push(vec![eps.into(), cfg.trials.into(), m.into(), lo.into(), hi.into()]);
    }
    let fit = cost_exponent(&cfg.eps, &means);
    let smallest = cfg.eps.iter().copied().fold(f64::INFINITY, f64::min);
    let scheme_steps: Vec<f64> =
        scheme_phase_steps(&cfg.scheme(), smallest, cfg.trials, cfg.seed)?.into_iter().map(|s| s as f64).collect();
    let doc = json!({
        "exponent": fit.slope,
        "exponent_se": fit.slope_se,
        "smallest_eps": smallest,
        "scheme_mean_steps": stats::mean(&scheme_steps),
    });
    Ok(Report { tables: vec![table], documents: vec![("weak_compile_fit".into(), doc)] })
}

fn truncation(cfg: &ExperimentConfig) -> Outcome<Report> {
    let n_mean = cfg.alpha * cfg.alpha;
    let cert = fock::truncation_bound(n_mean, 1, cfg.n_max)?;
    let measured = fock::coherent_truncation_distance(C64::new(cfg.alpha, 0.0), cfg.n_max);
    let mut table = Table::new("truncation", &["alpha", "n_mean", "modes", "n_max", "bound", "measured"]);
    table.push(vec![
        cfg.alpha.into(),
        n_mean.into(),
        1usize.into(),
        cfg.n_max.into(),
        cert.trace_norm_bound.into(),
        measured.into(),
    ]);
    Ok(Report { tables: vec![table], documents: Vec::new() })
}

pub fn growth_trials(eps: f64, n: usize, mode: GrowthMode, trials: usize, seed: u64) -> Outcome<Vec<scheme::ErrorGrowth>> {
    par_trials(trials, |t| scheme::error_growth(eps, n, mode, &mut stream(seed, t)))
}

fn error_growth(cfg: &ExperimentConfig) -> Outcome<Report> {
    let modes: &[(GrowthMode, &str)] = match cfg.mode {
        GrowthModeArg::Both => &[(GrowthMode::Unitary, "unitary"), (GrowthMode::Nonunitary, "nonunitary")],
        GrowthModeArg::Unitary => &[(GrowthMode::Unitary, "unitary")],
        GrowthModeArg::Nonunitary => &[(GrowthMode::Nonunitary, "nonunitary")],
    };
    let mut table = Table::new("error_growth", &["mode", "eps", "n", "trial", "measured", "bound", "linear"]);
    for &eps in &cfg.eps {
        for &(mode, label) in modes {
            for (t, g) in growth_trials(eps, cfg.steps, mode, cfg.trials, cfg.seed)?.iter().enumerate() {
                table.push(vec![
                    label.into(),
                    eps.into(),
                    cfg.steps.into(),
                    t.into(),
                    g.measured.into(),
                    g.bound.into(),
                    g.linear.into(),
                ]);
            }
        }
    }
    Ok(Report { tables: vec![table], documents: Vec::new() })
}

/// Block success probabilities of Haar-random targets, and `p₀ = p_floor⁴`.
pub fn block_pool(p: &SchemeParameters, size: usize, seed: u64) -> Outcome<(Vec<f64>, f64)> {
    let pool = par_trials(size, |t| scheme::block_success_probability(p, &su2::haar_unitary(&mut stream(seed, t))))?;
    Ok((pool, scheme::p_floor(p).powi(4)))
}

/// Failure count of the blocked layout over `trials` samples.
pub fn layout_failures(n_gates: usize, k_spacing: usize, pool: &[f64], trials: usize, seed: u64) -> Outcome<usize> {
    let fails = par_trials(trials, |t| Ok(scheme::simulate_layout_failure(n_gates, k_spacing, pool, &mut stream(seed, t))))?;
    Ok(fails.into_iter().filter(|&f| f).count())
}

fn failure_bound(cfg: &ExperimentConfig) -> Outcome<Report> {
    let p = cfg.scheme();
    let (pool, p0) = block_pool(&p, 2000, derive_seed(cfg.seed, 0x706f_6f6c))?;
    let mut table =
        Table::new("failure_bound", &["n_gates", "k_spacing", "p0", "trials", "failures", "frequency", "ci_high", "bound"]);
    for &n in &cfg.n_gates {
        for &k in &cfg.k_spacing {
            let cell_seed = derive_seed(cfg.seed, (n as u64) << 32 | k as u64);
            let failures = layout_failures(n, k, &pool, cfg.trials, cell_seed)?;
            let (_, hi) = stats::wilson_interval(failures as u64, cfg.trials as u64, Z95);
            table.push(vec![
                n.into(),
                k.into(),
                p0.into(),
                cfg.trials.into(),
                failures.into(),
                (failures as f64 / cfg.trials as f64).into(),
                hi.into(),
                scheme::nonadaptive_failure_bound(n, k, p0)?.into(),
            ]);
        }
    }
    Ok(Report { tables: vec![table], documents: Vec::new() })
}

/// Convenience for callers that only need one float column.
pub fn column(report: &Report, table: &str, name: &str) -> Vec<f64> {
    report.table(table).map(|t| t.floats(name)).unwrap_or_default()
}
