//! Replicated parameter sweeps with deterministic per-run seeding.
//!
//! Every (combo, replication) pair is one independent run. Its seed is the
//! flat-index-th output of a master generator seeded with the plan's base
//! seed, so seeds depend only on (base_seed, combo_index, replication) and
//! never on scheduling. `run_parallel` fans runs out across a thread pool
//! (with the `parallel` feature) and assembles results in flat-index order,
//! which makes its output byte-identical to the serial runner's.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::model::{run_model, Model, World};
use crate::params::{cartesian, ParamMap, ParamValue, ParameterSpec};
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub space: Vec<ParameterSpec>,
    pub replications: usize,
    pub steps: u64,
    pub base_seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(SimError::InvalidArgument("replications must be >= 1".into()));
        }
        Ok(())
    }

    /// Per-run seeds in flat (combo_index * replications + replication)
    /// order, precomputed from one master stream.
    pub fn seeds(&self, runs: usize) -> Vec<u64> {
        let mut master = Rng::new(self.base_seed);
        (0..runs).map(|_| master.next_u64()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResultColumn {
    U64(Vec<u64>),
    I64(Vec<i64>),
    F64(Vec<f64>),
}

impl ResultColumn {
    fn len(&self) -> usize {
        match self {
            ResultColumn::U64(v) => v.len(),
            ResultColumn::I64(v) => v.len(),
            ResultColumn::F64(v) => v.len(),
        }
    }

    fn format(&self, row: usize) -> String {
        match self {
            ResultColumn::U64(v) => v[row].to_string(),
            ResultColumn::I64(v) => v[row].to_string(),
            ResultColumn::F64(v) => v[row].to_string(),
        }
    }
}

/// Columnar sweep results: combo_index, replication, seed, one column per
/// parameter, and one f64 column per summary metric. One row per run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    names: Vec<String>,
    cols: Vec<ResultColumn>,
}

impl ResultsTable {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> usize {
        self.cols.first().map(|c| c.len()).unwrap_or(0)
    }

    pub fn column(&self, name: &str) -> Result<&ResultColumn> {
        let idx = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| SimError::UnknownAttribute(name.to_string()))?;
        Ok(&self.cols[idx])
    }

    /// CSV rendering: header of column names, one line per run. Floats use
    /// the shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for row in 0..self.rows() {
            let line: Vec<String> = self.cols.iter().map(|c| c.format(row)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Summary of one finished run: the final value of each collected metric.
type RunSummary = Vec<(String, f64)>;

struct RunJob<'a> {
    combo_index: usize,
    replication: usize,
    params: &'a ParamMap,
    seed: u64,
}

fn execute_one<M, F>(factory: &F, plan: &ExperimentPlan, job: &RunJob<'_>) -> Result<RunSummary>
where
    M: Model,
    F: Fn(&ParamMap) -> Result<(M, World)>,
{
    let wrap = |source: SimError| SimError::RunFailed {
        combo_index: job.combo_index,
        replication: job.replication,
        source: Box::new(source),
    };
    let (mut model, mut world) = factory(job.params).map_err(wrap)?;
    let result = run_model(&mut model, &mut world, job.params, plan.steps, job.seed).map_err(wrap)?;
    Ok(result
        .metrics
        .names()
        .iter()
        .map(|name| {
            let last = result
                .metrics
                .last(name)
                .expect("own column")
                .expect("steps >= 1 when metrics exist");
            (name.clone(), last)
        })
        .collect())
}

fn assemble(
    combos: &[ParamMap],
    space: &[ParameterSpec],
    plan: &ExperimentPlan,
    seeds: &[u64],
    summaries: Vec<RunSummary>,
) -> Result<ResultsTable> {
    let runs = summaries.len();
    let metric_names: Vec<String> = summaries
        .first()
        .map(|s| s.iter().map(|(n, _)| n.clone()).collect())
        .unwrap_or_default();
    for summary in &summaries {
        if summary.len() != metric_names.len()
            || summary.iter().zip(&metric_names).any(|((n, _), e)| n != e)
        {
            return Err(SimError::MetricMismatch(
                "runs disagree on summary metric names".into(),
            ));
        }
    }
    let mut names = vec!["combo_index".to_string(), "replication".to_string(), "seed".to_string()];
    let mut cols = vec![
        ResultColumn::U64(Vec::with_capacity(runs)),
        ResultColumn::U64(Vec::with_capacity(runs)),
        ResultColumn::U64(Vec::with_capacity(runs)),
    ];
    for spec in space {
        names.push(spec.name().to_string());
        cols.push(match spec {
            ParameterSpec::FloatRange { .. } => ResultColumn::F64(Vec::with_capacity(runs)),
            ParameterSpec::Sample { values, .. } => match values[0] {
                ParamValue::Int(_) => ResultColumn::I64(Vec::with_capacity(runs)),
                ParamValue::Float(_) => ResultColumn::F64(Vec::with_capacity(runs)),
            },
            ParameterSpec::IntRange { .. } => ResultColumn::I64(Vec::with_capacity(runs)),
        });
    }
    for name in &metric_names {
        names.push(name.clone());
        cols.push(ResultColumn::F64(Vec::with_capacity(runs)));
    }

    for (flat, summary) in summaries.into_iter().enumerate() {
        let combo_index = flat / plan.replications;
        let replication = flat % plan.replications;
        let mut col = 0usize;
        let push_u64 = |cols: &mut Vec<ResultColumn>, idx: usize, v: u64| {
            if let ResultColumn::U64(c) = &mut cols[idx] {
                c.push(v);
            }
        };
        push_u64(&mut cols, col, combo_index as u64);
        col += 1;
        push_u64(&mut cols, col, replication as u64);
        col += 1;
        push_u64(&mut cols, col, seeds[flat]);
        col += 1;
        for spec in space {
            let value = combos[combo_index][spec.name()];
            match (&mut cols[col], value) {
                (ResultColumn::I64(c), ParamValue::Int(v)) => c.push(v),
                (ResultColumn::F64(c), ParamValue::Float(v)) => c.push(v),
                (ResultColumn::F64(c), ParamValue::Int(v)) => c.push(v as f64),
                _ => {
                    return Err(SimError::MetricMismatch(format!(
                        "parameter `{}` changed kind across combos",
                        spec.name()
                    )))
                }
            }
            col += 1;
        }
        for (_, value) in summary {
            if let ResultColumn::F64(c) = &mut cols[col] {
                c.push(value);
            }
            col += 1;
        }
    }
    Ok(ResultsTable { names, cols })
}

/// Run every (combo, replication) serially in flat order.
pub fn run_experiment<M, F>(factory: F, plan: &ExperimentPlan) -> Result<ResultsTable>
where
    M: Model,
    F: Fn(&ParamMap) -> Result<(M, World)>,
{
    plan.validate()?;
    let combos = cartesian(&plan.space)?;
    let runs = combos.len() * plan.replications;
    let seeds = plan.seeds(runs);
    let mut summaries = Vec::with_capacity(runs);
    for (flat, &seed) in seeds.iter().enumerate() {
        let combo_index = flat / plan.replications;
        let job = RunJob {
            combo_index,
            replication: flat % plan.replications,
            params: &combos[combo_index],
            seed,
        };
        summaries.push(execute_one(&factory, plan, &job)?);
    }
    assemble(&combos, &plan.space, plan, &seeds, summaries)
}

/// Run the same plan on up to `workers` threads. Seeds are precomputed
/// serially and results assembled in flat order, so the table equals
/// `run_experiment`'s output for any worker count. Without the `parallel`
/// feature this falls back to the serial runner.
pub fn run_parallel<M, F>(factory: F, plan: &ExperimentPlan, workers: usize) -> Result<ResultsTable>
where
    M: Model,
    F: Fn(&ParamMap) -> Result<(M, World)> + Sync,
{
    if workers == 0 {
        return Err(SimError::InvalidArgument("workers must be >= 1".into()));
    }
    plan.validate()?;

    #[cfg(feature = "parallel")]
    {
        let combos = cartesian(&plan.space)?;
        let runs = combos.len() * plan.replications;
        let seeds = plan.seeds(runs);
        let jobs: Vec<RunJob<'_>> = seeds
            .iter()
            .enumerate()
            .map(|(flat, &seed)| RunJob {
                combo_index: flat / plan.replications,
                replication: flat % plan.replications,
                params: &combos[flat / plan.replications],
                seed,
            })
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| SimError::InvalidArgument(format!("thread pool: {e}")))?;
        // Collect every outcome before surfacing the failure with the
        // lowest flat index, so errors are deterministic too.
        let outcomes: Vec<Result<RunSummary>> = pool.install(|| {
            jobs.par_iter()
                .map(|job| execute_one(&factory, plan, job))
                .collect()
        });
        let mut summaries = Vec::with_capacity(runs);
        for outcome in outcomes {
            summaries.push(outcome?);
        }
        assemble(&combos, &plan.space, plan, &seeds, summaries)
    }

    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        run_experiment(factory, plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::SimError;
    use crate::population::{AggregateKind, Population};
    use crate::rng::Rng;
    use crate::value::{AttributeType, Value};

    /// Stochastic toy model: each agent gains a random amount scaled by the
    /// `gain` parameter each step.
    struct NoisyGain;

    impl Model for NoisyGain {
        fn setup(&mut self, world: &mut World, _: &ParamMap, _: &mut Rng) -> Result<()> {
            world.population_mut().add_agents(8, &[])?;
            Ok(())
        }

        fn step(&mut self, _: u64, world: &mut World, params: &ParamMap, rng: &mut Rng) -> Result<()> {
            let gain = params["gain"].as_i64().unwrap();
            let noise = rng.below(100) as i64;
            world
                .population_mut()
                .update_column(&["v"], "v", move |v| Value::Int(v[0].int() + gain * noise))?;
            Ok(())
        }

        fn collect(&self, _: u64, world: &World) -> Vec<(String, f64)> {
            let total = world
                .population()
                .aggregate("v", AggregateKind::Sum)
                .unwrap()
                .int() as f64;
            vec![("total".into(), total)]
        }
    }

    fn factory(_: &ParamMap) -> Result<(NoisyGain, World)> {
        let pop = Population::new(&[("v", AttributeType::Int64)])?;
        Ok((NoisyGain, World::new(pop)))
    }

    fn plan() -> ExperimentPlan {
        ExperimentPlan {
            space: vec![
                ParameterSpec::Sample {
                    name: "gain".into(),
                    values: vec![ParamValue::Int(1), ParamValue::Int(2)],
                },
                ParameterSpec::IntRange {
                    name: "unused".into(),
                    lo: 0,
                    hi: 3,
                    step: 1,
                },
            ],
            replications: 2,
            steps: 5,
            base_seed: 99,
        }
    }

    #[test]
    fn row_count_is_combos_times_replications() {
        let table = run_experiment(factory, &plan()).unwrap();
        assert_eq!(table.rows(), 16);
        assert_eq!(
            table.names()[..5],
            ["combo_index", "replication", "seed", "gain", "unused"]
        );
        assert_eq!(*table.names().last().unwrap(), "total");
    }

    #[test]
    fn same_plan_twice_is_identical() {
        assert_eq!(
            run_experiment(factory, &plan()).unwrap(),
            run_experiment(factory, &plan()).unwrap()
        );
    }

    #[test]
    fn replications_differ_generically() {
        let table = run_experiment(factory, &plan()).unwrap();
        let (seeds, totals) = match (table.column("seed").unwrap(), table.column("total").unwrap()) {
            (ResultColumn::U64(s), ResultColumn::F64(t)) => (s.clone(), t.clone()),
            _ => unreachable!(),
        };
        assert_ne!(seeds[0], seeds[1], "replications get distinct seeds");
        assert_ne!(totals[0], totals[1], "stochastic model diverges across seeds");
    }

    #[test]
    fn seeds_depend_only_on_flat_index() {
        let p = plan();
        let seeds = p.seeds(16);
        let mut master = Rng::new(p.base_seed);
        for &s in &seeds {
            assert_eq!(s, master.next_u64());
        }
    }

    #[test]
    fn parallel_equals_serial_for_any_worker_count() {
        let serial = run_experiment(factory, &plan()).unwrap();
        for workers in [1, 2, 4] {
            let parallel = run_parallel(factory, &plan(), workers).unwrap();
            assert_eq!(parallel, serial, "workers={workers}");
        }
    }

    #[test]
    fn worker_failure_identifies_run() {
        let failing = |params: &ParamMap| -> Result<(NoisyGain, World)> {
            if params["gain"] == ParamValue::Int(2) {
                return Err(SimError::InvalidArgument("boom".into()));
            }
            factory(params)
        };
        let err = run_parallel(failing, &plan(), 2).unwrap_err();
        match err {
            SimError::RunFailed {
                combo_index,
                replication,
                ..
            } => {
                // first gain=2 combo in cartesian order
                assert_eq!(combo_index, 4);
                assert_eq!(replication, 0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_round_trips_shape() {
        let table = run_experiment(factory, &plan()).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), table.names().join(","));
        assert_eq!(lines.count(), table.rows());
    }
}
