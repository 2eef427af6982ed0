//! Experiment harness: seeded replicate runs, aggregation and CSV output.
//!
//! The seed of replicate `i` is `seed_base + i`; it seeds both the
//! environment and, on a separate stream, the agent's action choices.
//! Every configuration of an experiment sees the same seeds.

pub mod config;
pub mod report;

pub use config::{CompareAgent, CompareSpec, ExperimentSpec, GridsSpec, HarnessConfig, NamedStrategy, NamedTree, StrategiesSpec, SweepSpec};
pub use report::{emit_plot_script, median, write_aggregate, AggregateRow, Summary};

use crate::agents::{
    build_agent, run_episode, train_offline, AgentConfig, AgentError, AgentKind, MdpDtAgent, Mode, RunMetrics, TracePoint,
};
use crate::env::{action_rng, generate_dataset, ClusterEnv, EnvConfig};
use crate::model::log::{read_log, write_log};
use crate::model::ModelError;
use crate::split::CriterionConfig;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("config has no [{0}] section")]
    MissingSection(&'static str),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Metrics of one replicate of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub keys: Vec<String>,
    pub replicate: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
    /// Standard deviation of the cluster size over the evaluation.
    pub vms_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub key_names: Vec<&'static str>,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Reward,
    Splits,
    States,
    Accuracy,
    VmsSd,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Reward, Metric::Splits, Metric::States, Metric::Accuracy, Metric::VmsSd];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Reward => "reward",
            Metric::Splits => "splits",
            Metric::States => "states",
            Metric::Accuracy => "accuracy",
            Metric::VmsSd => "vms_sd",
        }
    }

    pub fn of(self, o: &Outcome) -> Option<f64> {
        match self {
            Metric::Reward => Some(o.metrics.total_reward),
            Metric::Splits => Some(o.metrics.splits_total as f64),
            Metric::States => Some(o.metrics.final_states as f64),
            Metric::Accuracy => o.metrics.accuracy(),
            Metric::VmsSd => Some(o.vms_sd),
        }
    }
}

impl ExperimentResult {
    /// Configurations in first-seen order.
    pub fn groups(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = Vec::new();
        for o in &self.outcomes {
            if !out.contains(&o.keys) {
                out.push(o.keys.clone());
            }
        }
        out
    }

    pub fn values(&self, keys: &[&str], metric: Metric) -> Vec<f64> {
        self.outcomes
            .iter()
            .filter(|o| o.keys.iter().map(String::as_str).eq(keys.iter().copied()))
            .filter_map(|o| metric.of(o))
            .collect()
    }

    pub fn summary(&self, keys: &[&str], metric: Metric) -> Option<Summary> {
        Summary::of(&self.values(keys, metric))
    }

    pub fn aggregate(&self, metric: Metric) -> Vec<AggregateRow> {
        self.groups()
            .into_iter()
            .map(|keys| {
                let k: Vec<&str> = keys.iter().map(String::as_str).collect();
                let summary = self.summary(&k, metric);
                AggregateRow { keys, summary }
            })
            .collect()
    }

    /// Writes `replicates.csv` plus one aggregate CSV per metric and returns
    /// their paths.
    pub fn write(&self, dir: &Path, metrics: &[Metric]) -> Result<Vec<PathBuf>, HarnessError> {
        std::fs::create_dir_all(dir)?;
        let raw = dir.join("replicates.csv");
        let mut w = csv::Writer::from_path(&raw)?;
        let mut header: Vec<&str> = self.key_names.clone();
        header.extend(["replicate", "seed", "reward", "splits_total", "splits_correct", "accuracy", "final_states", "vms_sd"]);
        w.write_record(&header)?;
        for o in &self.outcomes {
            let mut rec = o.keys.clone();
            rec.push(o.replicate.to_string());
            rec.push(o.seed.to_string());
            rec.push(o.metrics.total_reward.to_string());
            rec.push(o.metrics.splits_total.to_string());
            rec.push(o.metrics.splits_correct.to_string());
            rec.push(o.metrics.accuracy().map(|a| a.to_string()).unwrap_or_default());
            rec.push(o.metrics.final_states.to_string());
            rec.push(o.vms_sd.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        let mut paths = vec![raw];
        for &m in metrics {
            let p = dir.join(format!("{}.csv", m.name()));
            write_aggregate(&p, &self.key_names, &self.aggregate(m))?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Runs `f(0..n)` on up to `parallel` threads; results keep index order.
pub fn par_map<T, F>(n: usize, parallel: usize, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync + Send,
{
    if parallel <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Online training with e-greedy actions followed by greedy evaluation in
/// the same environment.
pub fn run_online(
    env_cfg: &EnvConfig,
    agent_cfg: &AgentConfig,
    kind: AgentKind,
    train_steps: usize,
    eval_steps: usize,
    seed: u64,
) -> Result<(RunMetrics, Vec<TracePoint>), HarnessError> {
    let mut env = ClusterEnv::new(env_cfg.clone(), seed);
    let mut rng = action_rng(seed);
    let mut agent = build_agent(kind, agent_cfg, env.space(), env.num_actions())?;
    run_episode(
        agent.as_mut(),
        &mut env,
        train_steps,
        Mode::Train {
            epsilon: agent_cfg.epsilon,
        },
        &mut rng,
        None,
    )?;
    let mut trace = Vec::with_capacity(eval_steps);
    let metrics = run_episode(agent.as_mut(), &mut env, eval_steps, Mode::Eval, &mut rng, Some(&mut trace))?;
    Ok((metrics, trace))
}

fn vms_sd(trace: &[TracePoint]) -> f64 {
    sd(&trace.iter().map(|p| p.vms as f64).collect::<Vec<_>>())
}

/// One online experiment per configuration, all sharing the replicate seeds.
fn run_configs(
    cfg: &HarnessConfig,
    key_names: Vec<&'static str>,
    configs: Vec<(Vec<String>, AgentConfig)>,
    parallel: usize,
) -> Result<ExperimentResult, HarnessError> {
    let e = &cfg.experiment;
    let reps = e.replicates;
    let outcomes = par_map(configs.len() * reps, parallel, |job| {
        let (keys, agent_cfg) = &configs[job / reps];
        let replicate = job % reps;
        let seed = e.seed_base + replicate as u64;
        let (metrics, trace) = run_online(&cfg.env, agent_cfg, AgentKind::MdpDt, e.train_steps, e.eval_steps, seed)?;
        Ok(Outcome {
            keys: keys.clone(),
            replicate,
            seed,
            metrics,
            vms_sd: vms_sd(&trace),
        })
    })?;
    Ok(ExperimentResult { key_names, outcomes })
}

/// Accuracy, split count and reward over criteria × tests × margins.
pub fn run_sweep(cfg: &HarnessConfig, parallel: usize) -> Result<ExperimentResult, HarnessError> {
    let sweep = cfg.sweep.as_ref().ok_or(HarnessError::MissingSection("sweep"))?;
    let mut configs = Vec::new();
    for &criterion in &sweep.criteria {
        for &test in &sweep.tests {
            for &margin in &sweep.margins {
                let mut a = cfg.agent.clone();
                a.criterion = CriterionConfig {
                    criterion,
                    test,
                    max_type_i_error: margin,
                };
                configs.push((vec![criterion.name().to_string(), test.name().to_string(), margin.to_string()], a));
            }
        }
    }
    run_configs(cfg, vec!["criterion", "test", "margin"], configs, parallel)
}

pub fn run_strategies(cfg: &HarnessConfig, parallel: usize) -> Result<ExperimentResult, HarnessError> {
    let spec = cfg.strategies.as_ref().ok_or(HarnessError::MissingSection("strategies"))?;
    let configs = spec
        .entries
        .iter()
        .map(|e| {
            let mut a = cfg.agent.clone();
            a.strategy = e.strategy;
            (vec![e.name.clone()], a)
        })
        .collect();
    run_configs(cfg, vec!["strategy"], configs, parallel)
}

pub fn run_grids(cfg: &HarnessConfig, parallel: usize) -> Result<ExperimentResult, HarnessError> {
    let spec = cfg.grids.as_ref().ok_or(HarnessError::MissingSection("grids"))?;
    let configs = spec
        .trees
        .iter()
        .map(|t| {
            let mut a = cfg.agent.clone();
            a.initial_tree = t.tree.clone();
            (vec![t.name.clone()], a)
        })
        .collect();
    run_configs(cfg, vec!["tree"], configs, parallel)
}

/// Offline training of every listed agent on the same random-action
/// dataset, then greedy evaluation under `compare.eval_profile`.
pub fn run_compare(cfg: &HarnessConfig, parallel: usize) -> Result<(ExperimentResult, Vec<(String, Vec<TracePoint>)>), HarnessError> {
    let spec = cfg.compare.as_ref().ok_or(HarnessError::MissingSection("compare"))?;
    let e = &cfg.experiment;
    let reps = e.replicates;
    let eval_env = EnvConfig {
        profile: spec.eval_profile,
        ..cfg.env.clone()
    };
    let per_rep = par_map(reps, parallel, |replicate| {
        let seed = e.seed_base + replicate as u64;
        let log = generate_dataset(&cfg.env, spec.dataset_size, seed);
        let mut rows = Vec::new();
        for a in &spec.agents {
            let agent_cfg = AgentConfig {
                initial_tree: a.initial_tree.clone(),
                ..cfg.agent.clone()
            };
            let (metrics, trace) = offline_then_eval(&eval_env, &agent_cfg, a.kind, &log, e.eval_steps, seed)?;
            rows.push((
                Outcome {
                    keys: vec![a.name.clone()],
                    replicate,
                    seed,
                    metrics,
                    vms_sd: vms_sd(&trace),
                },
                trace,
            ));
        }
        Ok(rows)
    })?;
    let mut outcomes = Vec::new();
    let mut traces = Vec::new();
    for (i, rows) in per_rep.into_iter().enumerate() {
        for (o, trace) in rows {
            if i == 0 {
                traces.push((o.keys[0].clone(), trace));
            }
            outcomes.push(o);
        }
    }
    // group by agent, then replicate
    outcomes.sort_by_key(|o| {
        let pos = spec.agents.iter().position(|a| a.name == o.keys[0]).unwrap_or(usize::MAX);
        (pos, o.replicate)
    });
    Ok((
        ExperimentResult {
            key_names: vec!["agent"],
            outcomes,
        },
        traces,
    ))
}

/// Trains `kind` offline on `log`, then evaluates greedily for `eval_steps`
/// in a fresh environment.
pub fn offline_then_eval(
    env_cfg: &EnvConfig,
    agent_cfg: &AgentConfig,
    kind: AgentKind,
    log: &[crate::model::Experience],
    eval_steps: usize,
    seed: u64,
) -> Result<(RunMetrics, Vec<TracePoint>), HarnessError> {
    let mut env = ClusterEnv::new(env_cfg.clone(), seed);
    let mut rng = action_rng(seed);
    let mut agent = build_agent(kind, agent_cfg, env.space(), env.num_actions())?;
    train_offline(agent.as_mut(), log)?;
    let mut trace = Vec::with_capacity(eval_steps);
    let metrics = run_episode(agent.as_mut(), &mut env, eval_steps, Mode::Eval, &mut rng, Some(&mut trace))?;
    Ok((metrics, trace))
}

pub fn write_dataset(cfg: &HarnessConfig, out: &Path) -> Result<PathBuf, HarnessError> {
    let spec = cfg.dataset.as_ref().ok_or(HarnessError::MissingSection("dataset"))?;
    std::fs::create_dir_all(out)?;
    let log = generate_dataset(&cfg.env, spec.size, cfg.experiment.seed_base);
    let path = out.join("dataset.jsonl");
    write_log(std::io::BufWriter::new(std::fs::File::create(&path)?), &cfg.env.space(), &log)?;
    Ok(path)
}

/// Offline MDP_DT training from a log file. Writes the agent checkpoint
/// and the split journal.
pub fn train_from_log(cfg: &HarnessConfig, log_path: &Path, out: &Path) -> Result<MdpDtAgent, HarnessError> {
    let space = cfg.env.space();
    let log = read_log(std::io::BufReader::new(std::fs::File::open(log_path)?), &space)?;
    let mut agent = MdpDtAgent::new(AgentKind::MdpDt, &cfg.agent, &space, cfg.env.actions.len())?;
    train_offline(&mut agent, &log)?;
    std::fs::create_dir_all(out)?;
    serde_json::to_writer(std::io::BufWriter::new(std::fs::File::create(out.join("checkpoint.json"))?), &agent.checkpoint())?;
    agent
        .splitter()
        .journal()
        .write(std::io::BufWriter::new(std::fs::File::create(out.join("journal.jsonl"))?))?;
    Ok(agent)
}

/// Writes the per-agent evaluation traces as `trace_<agent>.csv`.
pub fn write_traces(dir: &Path, traces: &[(String, Vec<TracePoint>)]) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, trace) in traces {
        let p = dir.join(format!("trace_{name}.csv"));
        report::write_records(&p, trace)?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[experiment]
name = "unit"
seed_base = 7
replicates = 1
train_steps = 200
eval_steps = 50

[env]
min_vms = 1
max_vms = 20
initial_vms = 10
actions = [-1, 0, 1]
capacity_per_vm = 10.0
cost_per_vm = 3.0
uniform_noise = 4
integer_noise = 3
integer_noise_max = 9
profile = { kind = "sinusoid", baseline = 50.0, amplitude = 50.0, period = 250.0 }
read = { baseline = 0.75, amplitude = 0.25, period = 340.0 }

[agent]
gamma = 0.85
alpha = 0.1
epsilon = 0.3
update = { kind = "prioritized_sweeping", threshold = 1e-5, max_backups = 1000 }
criterion = { criterion = "parameter_test", test = "mann_whitney", max_type_i_error = 0.002 }
strategy = { kind = "default" }
initial_tree = { kind = "single_root" }

[sweep]
criteria = ["parameter_test"]
tests = ["mann_whitney"]
margins = [0.002]

[compare]
dataset_size = 100
eval_profile = { kind = "sinusoid", baseline = 50.0, amplitude = 50.0, period = 250.0 }
agents = [
  { name = "a", kind = "mdp_dt", initial_tree = { kind = "single_root" } },
  { name = "b", kind = "mdp_dt", initial_tree = { kind = "single_root" } },
]
"#;

    #[test]
    fn single_replicate_single_value_sweep() {
        let cfg = HarnessConfig::parse(SMALL).unwrap();
        let r = run_sweep(&cfg, 1).unwrap();
        assert_eq!(r.outcomes.len(), 1);
        let dir = tempfile::tempdir().unwrap();
        r.write(dir.path(), &[Metric::Reward]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("reward.csv")).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().contains(",1,"));
    }

    #[test]
    fn identical_agents_identical_rows() {
        let cfg = HarnessConfig::parse(SMALL).unwrap();
        let (r, traces) = run_compare(&cfg, 1).unwrap();
        assert_eq!(r.outcomes[0].metrics, r.outcomes[1].metrics);
        assert_eq!(traces[0].1, traces[1].1);
    }

    #[test]
    fn parallel_matches_sequential() {
        let mut cfg = HarnessConfig::parse(SMALL).unwrap();
        cfg.experiment.replicates = 3;
        assert_eq!(run_sweep(&cfg, 1).unwrap(), run_sweep(&cfg, 3).unwrap());
    }

    #[test]
    fn config_errors_name_the_field() {
        let bad = SMALL.replace("replicates = 1", "replicates = 0");
        match HarnessConfig::parse(&bad) {
            Err(HarnessError::InvalidConfig { field, .. }) => assert_eq!(field, "experiment.replicates"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = SMALL.replace("gamma = 0.85", "");
        let err = HarnessConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
        let bad = SMALL.replace("margins = [0.002]", "margins = [0.002, 0.002]");
        assert!(HarnessConfig::parse(&bad).is_err());
        let cfg = HarnessConfig::parse(SMALL).unwrap();
        assert!(matches!(run_grids(&cfg, 1), Err(HarnessError::MissingSection("grids"))));
    }
}
