//! Calibration strategies over parameter spaces: exhaustive grid search,
//! random search, and Gaussian-process Bayesian optimization with the
//! expected-improvement acquisition. Minimization convention throughout;
//! negate the objective to maximize.

mod gp;

pub use gp::{expected_improvement, std_normal_cdf, std_normal_pdf, GpHyper, GpModel};

use crate::error::{Result, SimError};
use crate::params::{cartesian, sample_point, validate_space, ParamMap, ParamValue, ParameterSpec};
use crate::rng::Rng;

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub params: ParamMap,
    pub value: f64,
}

fn checked_eval<F>(objective: &mut F, params: &ParamMap) -> Result<Trial>
where
    F: FnMut(&ParamMap) -> f64,
{
    let value = objective(params);
    if !value.is_finite() {
        return Err(SimError::NonFiniteObjective(value));
    }
    Ok(Trial {
        params: params.clone(),
        value,
    })
}

fn best_of(trace: &[Trial]) -> Trial {
    let mut best = &trace[0];
    for trial in &trace[1..] {
        // strict comparison: ties keep the earliest evaluation
        if trial.value < best.value {
            best = trial;
        }
    }
    best.clone()
}

/// Evaluate every Cartesian point of a discrete space, in cartesian order.
/// Returns the minimum (earliest on ties) and the full trace.
pub fn grid_search<F>(space: &[ParameterSpec], mut objective: F) -> Result<(Trial, Vec<Trial>)>
where
    F: FnMut(&ParamMap) -> f64,
{
    let points = cartesian(space)?;
    let mut trace = Vec::with_capacity(points.len());
    for params in &points {
        trace.push(checked_eval(&mut objective, params)?);
    }
    Ok((best_of(&trace), trace))
}

/// Sample `n_iter` points independently (each spec draws once per
/// iteration, in spec order) and evaluate them.
pub fn random_search<F>(
    space: &[ParameterSpec],
    mut objective: F,
    n_iter: usize,
    rng: &mut Rng,
) -> Result<(Trial, Vec<Trial>)>
where
    F: FnMut(&ParamMap) -> f64,
{
    if n_iter == 0 {
        return Err(SimError::InvalidArgument("n_iter must be >= 1".into()));
    }
    validate_space(space)?;
    let mut trace = Vec::with_capacity(n_iter);
    for _ in 0..n_iter {
        let params = sample_point(space, rng);
        trace.push(checked_eval(&mut objective, &params)?);
    }
    Ok((best_of(&trace), trace))
}

/// Coordinate of a parameter value inside the unit cube spanned by its spec.
fn unit_coord(spec: &ParameterSpec, value: ParamValue) -> f64 {
    match spec {
        ParameterSpec::FloatRange { lo, hi, .. } => (value.as_f64() - lo) / (hi - lo),
        ParameterSpec::IntRange { lo, hi, .. } => {
            if hi == lo {
                0.0
            } else {
                (value.as_f64() - *lo as f64) / (*hi - *lo) as f64
            }
        }
        ParameterSpec::Sample { .. } => unreachable!("rejected before scaling"),
    }
}

fn unit_coords(space: &[ParameterSpec], params: &ParamMap) -> Vec<f64> {
    space
        .iter()
        .map(|spec| unit_coord(spec, params[spec.name()]))
        .collect()
}

/// Map a raw unit-cube sample onto concrete parameter values (floats scale
/// linearly, integer ranges discretize to the nearest step index below).
fn candidate_params(space: &[ParameterSpec], raw: &[f64]) -> ParamMap {
    space
        .iter()
        .zip(raw)
        .map(|(spec, &u)| {
            let value = match spec {
                ParameterSpec::FloatRange { lo, hi, .. } => ParamValue::Float(lo + u * (hi - lo)),
                ParameterSpec::IntRange { lo, step, .. } => {
                    let count = spec.cardinality().unwrap();
                    let idx = ((u * count as f64) as usize).min(count - 1);
                    ParamValue::Int(lo + idx as i64 * step)
                }
                ParameterSpec::Sample { .. } => unreachable!("rejected before sampling"),
            };
            (spec.name().to_string(), value)
        })
        .collect()
}

/// Uniform candidates scored per round of the Bayesian optimizer.
const ACQUISITION_CANDIDATES: usize = 1000;

/// Bayesian optimization: `n_init` random points, then `n_iter` rounds of
/// fit-score-evaluate. Each round fits the GP on all trials so far (inputs
/// scaled to the unit cube, targets standardized), scores expected
/// improvement at 1000 uniform candidates, and evaluates the objective at
/// the argmax (ties keep the earliest candidate). The space may contain
/// only `FloatRange` and `IntRange` specs. Returns the overall best and the
/// full trace of length `n_init + n_iter`.
pub fn bayes_opt<F>(
    space: &[ParameterSpec],
    mut objective: F,
    n_init: usize,
    n_iter: usize,
    rng: &mut Rng,
    hyper: GpHyper,
) -> Result<(Trial, Vec<Trial>)>
where
    F: FnMut(&ParamMap) -> f64,
{
    if n_init == 0 {
        return Err(SimError::InvalidArgument("n_init must be >= 1".into()));
    }
    validate_space(space)?;
    if let Some(spec) = space
        .iter()
        .find(|s| matches!(s, ParameterSpec::Sample { .. }))
    {
        return Err(SimError::InvalidArgument(format!(
            "sample list `{}` has no unit-cube embedding; use IntRange or FloatRange",
            spec.name()
        )));
    }

    let mut trace = Vec::with_capacity(n_init + n_iter);
    let mut coords = Vec::with_capacity(n_init + n_iter);
    for _ in 0..n_init {
        let params = sample_point(space, rng);
        coords.push(unit_coords(space, &params));
        trace.push(checked_eval(&mut objective, &params)?);
    }

    for _ in 0..n_iter {
        // standardize targets so the fixed hyperparameters behave across
        // objective scales
        let n = trace.len() as f64;
        let mean = trace.iter().map(|t| t.value).sum::<f64>() / n;
        let var = trace.iter().map(|t| (t.value - mean).powi(2)).sum::<f64>() / n;
        let sd = if var.sqrt() < 1e-12 { 1.0 } else { var.sqrt() };
        let targets: Vec<f64> = trace.iter().map(|t| (t.value - mean) / sd).collect();
        let best_std = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let model = GpModel::fit(&coords, &targets, hyper)?;

        let mut chosen: Option<(f64, ParamMap, Vec<f64>)> = None;
        let mut raw = vec![0.0; space.len()];
        for _ in 0..ACQUISITION_CANDIDATES {
            for slot in raw.iter_mut() {
                *slot = rng.uniform();
            }
            let params = candidate_params(space, &raw);
            let point = unit_coords(space, &params);
            let (mu, variance) = model.predict(&point)?;
            let ei = expected_improvement(mu, variance, best_std)?;
            // strictly-greater keeps the earliest candidate on ties
            if chosen.as_ref().map(|(best_ei, _, _)| ei > *best_ei).unwrap_or(true) {
                chosen = Some((ei, params, point));
            }
        }
        let (_, params, point) = chosen.expect("at least one candidate");
        coords.push(point);
        trace.push(checked_eval(&mut objective, &params)?);
    }

    Ok((best_of(&trace), trace))
}
