//! Time integration drivers: the first-order backward scheme, the two-step
//! second-order scheme with positivity-preserving extrapolation, and the
//! trajectory orchestration.

use crate::diagnostics::{
    discrete_energy, dissipation_functional, electrostatic_energy_charge_form,
    electrostatic_energy_gradient_form, extrema, total_mass, StepReport,
};
use crate::error::Error;
use crate::grid::Field;
use crate::model::{ProblemSpec, State};
use crate::nonlinear::{NonlinearSystem, SolverConfig};
use crate::scalar::Real;

/// Time discretization choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// First-order backward scheme (mass conservative, positivity preserving,
    /// energy dissipative).
    BackwardEuler,
    /// Second-order two-step scheme (mass conservative, positivity
    /// preserving; energy decrease observed but not proven).
    Bdf2,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::BackwardEuler => write!(f, "be"),
            Scheme::Bdf2 => write!(f, "bdf2"),
        }
    }
}

/// Positivity-preserving extrapolation `2 c^n - c^{n-1}` switched to the
/// harmonic form `1 / (2/c^n - 1/c^{n-1})` wherever the linear branch could
/// lose positivity (`c^n < c^{n-1}`). Both branches agree at `c^n = c^{n-1}`.
pub fn extrapolate<T: Real>(cn: &Field<T>, cnm1: &Field<T>) -> Result<Field<T>, Error> {
    extrapolate_ratio(cn, cnm1, T::one())
}

/// Extrapolation over a step of `ratio * dt` after a step of `dt`:
/// linear branch `(1 + r) c^n - r c^{n-1}`, harmonic branch
/// `1 / ((1 + r)/c^n - r/c^{n-1})`.
pub(crate) fn extrapolate_ratio<T: Real>(
    cn: &Field<T>,
    cnm1: &Field<T>,
    ratio: T,
) -> Result<Field<T>, Error> {
    for (what, f) in [("c^n", cn), ("c^{n-1}", cnm1)] {
        let min = f.min();
        if !(min > T::zero()) {
            return Err(Error::NonPositive {
                what: format!("extrapolation input {what}"),
                min: min.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let one = T::one();
    let out = cn.zip_with(cnm1, |a, b| {
        if a >= b {
            (one + ratio) * a - ratio * b
        } else {
            ((one + ratio) / a - ratio / b).recip()
        }
    })?;
    debug_assert!(out.min() > T::zero());
    Ok(out)
}

fn build_report<T: Real>(
    prev: &State<T>,
    next: &State<T>,
    mobility: &[Field<T>],
    spec: &ProblemSpec<T>,
    dt_eff: T,
    stats: crate::nonlinear::NewtonStats,
) -> Result<StepReport<T>, Error> {
    let energy_prev = discrete_energy(prev, spec)?;
    let energy = discrete_energy(next, spec)?;
    let dissipation = dissipation_functional(next, mobility, spec)?;
    let mut mass = Vec::with_capacity(spec.n_species());
    let mut min = Vec::with_capacity(spec.n_species());
    let mut max = Vec::with_capacity(spec.n_species());
    for c in &next.c {
        mass.push(total_mass(c));
        let (lo, hi) = extrema(c);
        min.push(lo);
        max.push(hi);
    }
    Ok(StepReport {
        step: 0,
        t: next.t,
        mass,
        energy,
        electro_grad: electrostatic_energy_gradient_form(next, spec),
        electro_charge: electrostatic_energy_charge_form(next, spec)?,
        min,
        max,
        newton_iters: stats.iterations,
        gmres_max: stats.max_gmres_iterations,
        halvings: stats.halvings,
        dissipation_slack: energy - energy_prev + dt_eff * dissipation,
    })
}

/// One step of the first-order backward scheme.
pub fn step_be<T: Real>(
    state: &State<T>,
    dt: T,
    spec: &ProblemSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<(State<T>, StepReport<T>), Error> {
    let sys = NonlinearSystem::backward_euler(spec, state, dt)?;
    let (mut next, stats) = sys.newton_solve(state, cfg)?;
    next.t = state.t + dt;
    let report = build_report(state, &next, &state.c, spec, dt, stats)?;
    Ok((next, report))
}

/// One step of the second-order two-step scheme with uniform spacing.
///
/// Energy decrease is monitored through the report but not asserted: it is
/// observed, not proven, for this scheme.
pub fn step_bdf2<T: Real>(
    state_n: &State<T>,
    state_nm1: &State<T>,
    dt: T,
    spec: &ProblemSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<(State<T>, StepReport<T>), Error> {
    step_bdf2_ratio(state_n, state_nm1, dt, T::one(), spec, cfg)
}

/// Two-step scheme over a final step of `ratio * dt`; used by [`run`] to land
/// exactly on the requested final time.
fn step_bdf2_ratio<T: Real>(
    state_n: &State<T>,
    state_nm1: &State<T>,
    dt: T,
    ratio: T,
    spec: &ProblemSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<(State<T>, StepReport<T>), Error> {
    let mobility: Vec<Field<T>> = state_n
        .c
        .iter()
        .zip(&state_nm1.c)
        .map(|(cn, cnm1)| extrapolate_ratio(cn, cnm1, ratio))
        .collect::<Result<_, _>>()?;
    let sys = NonlinearSystem::bdf2(spec, state_n, state_nm1, dt, ratio, mobility)?;
    let (mut next, stats) = sys.newton_solve(state_n, cfg)?;
    let dt_eff = ratio * dt;
    next.t = state_n.t + dt_eff;
    let report = build_report(state_n, &next, sys.mobility(), spec, dt_eff, stats)?;
    Ok((next, report))
}

/// Consumer of per-step output.
pub trait StepSink<T: Real> {
    fn on_step(&mut self, report: &StepReport<T>, state: &State<T>) -> Result<(), Error>;
}

/// Discards all output.
pub struct NoSink;

impl<T: Real> StepSink<T> for NoSink {
    fn on_step(&mut self, _report: &StepReport<T>, _state: &State<T>) -> Result<(), Error> {
        Ok(())
    }
}

/// Outcome of a trajectory run.
#[derive(Debug, Clone)]
pub struct RunSummary<T> {
    pub final_state: State<T>,
    /// State one step before the final one (when at least two steps ran).
    pub penultimate_state: Option<State<T>>,
    pub reports: Vec<StepReport<T>>,
}

/// Advances the problem from `t = 0` to `t_end`.
///
/// The two-step scheme bootstraps its first step with one backward-Euler
/// step. When `t_end` is not an integer multiple of `dt` the final step is
/// shortened to land exactly on `t_end`.
pub fn run<T: Real, S: StepSink<T>>(
    spec: &ProblemSpec<T>,
    scheme: Scheme,
    dt: T,
    t_end: T,
    cfg: &SolverConfig<T>,
    sink: &mut S,
) -> Result<RunSummary<T>, Error> {
    let issues = spec.validate();
    if !issues.is_empty() {
        return Err(Error::InvalidSpec(issues));
    }
    if !(dt > T::zero()) || !(t_end >= dt) {
        return Err(Error::InvalidSpec(vec![format!(
            "need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}"
        )]));
    }

    let ratio = (t_end / dt).to_f64().unwrap_or(f64::NAN);
    let rounded = ratio.round();
    let (n_full, final_ratio) = if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
        (rounded as usize, None)
    } else {
        let n = ratio.floor() as usize;
        let rem = t_end - T::from_usize(n).unwrap() * dt;
        (n, Some(rem / dt))
    };

    let mut state = spec.initial_state()?;
    let mut previous: Option<State<T>> = None;
    let mut reports = Vec::new();
    let mut step_index = 0usize;

    let advance = |state: &mut State<T>,
                       previous: &mut Option<State<T>>,
                       step_index: &mut usize,
                       reports: &mut Vec<StepReport<T>>,
                       sink: &mut S,
                       ratio: Option<T>|
     -> Result<(), Error> {
        *step_index += 1;
        let step_result = match (scheme, previous.as_ref()) {
            (Scheme::BackwardEuler, _) | (Scheme::Bdf2, None) => {
                let h = match ratio {
                    // a shortened first step is plain backward Euler
                    Some(r) => r * dt,
                    None => dt,
                };
                step_be(state, h, spec, cfg)
            }
            (Scheme::Bdf2, Some(prev)) => {
                step_bdf2_ratio(state, prev, dt, ratio.unwrap_or_else(T::one), spec, cfg)
            }
        };
        let (next, mut report) = step_result.map_err(|e| Error::StepFailed {
            step: *step_index,
            source: Box::new(e),
        })?;
        report.step = *step_index;
        sink.on_step(&report, &next)?;
        reports.push(report);
        *previous = Some(std::mem::replace(state, next));
        Ok(())
    };

    for _ in 0..n_full {
        advance(
            &mut state,
            &mut previous,
            &mut step_index,
            &mut reports,
            sink,
            None,
        )?;
    }
    if let Some(r) = final_ratio {
        advance(
            &mut state,
            &mut previous,
            &mut step_index,
            &mut reports,
            sink,
            Some(r),
        )?;
    }

    Ok(RunSummary {
        final_state: state,
        penultimate_state: previous,
        reports,
    })
}
