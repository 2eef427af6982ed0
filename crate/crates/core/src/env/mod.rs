//! Simulated elastic cluster.
//!
//! The cluster serves a time-varying load whose read fraction also varies.
//! Each step the agent adds or removes VMs; the reward is the served load
//! minus a per-VM cost, evaluated after the action. Besides the three
//! relevant measurements (`vms`, `load`, `read_pct`) every observation
//! carries noise dimensions that are resampled each step.

use crate::model::{ActionId, Experience};
use crate::tree::{Measurement, ParamKind, Parameter, ParameterSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Measurements whose splits count as correct.
pub const RELEVANT_PARAMS: [&str; 3] = ["vms", "load", "read_pct"];

/// Incoming-load generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadProfile {
    /// `baseline + amplitude·sin(2πt/period)`.
    Sinusoid { baseline: f64, amplitude: f64, period: f64 },
    /// A sinusoid whose amplitude itself swings between 0 and `amplitude`
    /// with period `amplitude_period`.
    VariableAmplitudeSinusoid {
        baseline: f64,
        amplitude: f64,
        period: f64,
        amplitude_period: f64,
    },
    /// Same shape as `Sinusoid`; kept separate so configs can name it.
    SlowSinusoid { baseline: f64, amplitude: f64, period: f64 },
    /// `high` for the first `duty` fraction of each period, `low` otherwise.
    SquarePulse { low: f64, high: f64, period: f64, duty: f64 },
}

impl WorkloadProfile {
    pub const PAPER_SINUSOID: WorkloadProfile = WorkloadProfile::Sinusoid {
        baseline: 50.0,
        amplitude: 50.0,
        period: 250.0,
    };

    pub fn load(&self, t: u64) -> f64 {
        let t = t as f64;
        let raw = match *self {
            WorkloadProfile::Sinusoid {
                baseline,
                amplitude,
                period,
            }
            | WorkloadProfile::SlowSinusoid {
                baseline,
                amplitude,
                period,
            } => baseline + amplitude * (2.0 * PI * t / period).sin(),
            WorkloadProfile::VariableAmplitudeSinusoid {
                baseline,
                amplitude,
                period,
                amplitude_period,
            } => {
                let a = amplitude * 0.5 * (1.0 + (2.0 * PI * t / amplitude_period).sin());
                baseline + a * (2.0 * PI * t / period).sin()
            }
            WorkloadProfile::SquarePulse { low, high, period, duty } => {
                if (t % period) < duty * period {
                    high
                } else {
                    low
                }
            }
        };
        raw.max(0.0)
    }

    pub fn validate(&self) -> Result<(), String> {
        let periods: &[f64] = match self {
            WorkloadProfile::Sinusoid { period, .. } | WorkloadProfile::SlowSinusoid { period, .. } => &[*period],
            WorkloadProfile::VariableAmplitudeSinusoid {
                period, amplitude_period, ..
            } => &[*period, *amplitude_period],
            WorkloadProfile::SquarePulse { period, duty, .. } => {
                if !(0.0..=1.0).contains(duty) {
                    return Err("square pulse duty must lie in [0, 1]".into());
                }
                &[*period]
            }
        };
        if periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err("profile periods must be positive".into());
        }
        Ok(())
    }
}

/// Read fraction `baseline + amplitude·sin(2πt/period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadProfile {
    pub baseline: f64,
    pub amplitude: f64,
    pub period: f64,
}

impl ReadProfile {
    pub const STANDARD: ReadProfile = ReadProfile {
        baseline: 0.75,
        amplitude: 0.25,
        period: 340.0,
    };

    pub fn fraction(&self, t: u64) -> f64 {
        self.baseline + self.amplitude * (2.0 * PI * t as f64 / self.period).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub profile: WorkloadProfile,
    pub read: ReadProfile,
    pub min_vms: i64,
    pub max_vms: i64,
    pub initial_vms: i64,
    /// VM deltas, one per action id.
    pub actions: Vec<i64>,
    pub capacity_per_vm: f64,
    pub cost_per_vm: f64,
    pub uniform_noise: usize,
    pub integer_noise: usize,
    /// Integer noise takes values `0..=integer_noise_max`.
    pub integer_noise_max: u32,
}

impl EnvConfig {
    /// The simulator of the study: three actions, 1 to 20 VMs, four uniform
    /// and three integer noise dimensions.
    pub fn standard() -> Self {
        EnvConfig {
            profile: WorkloadProfile::PAPER_SINUSOID,
            read: ReadProfile::STANDARD,
            min_vms: 1,
            max_vms: 20,
            initial_vms: 10,
            actions: vec![-1, 0, 1],
            capacity_per_vm: 10.0,
            cost_per_vm: 3.0,
            uniform_noise: 4,
            integer_noise: 3,
            integer_noise_max: 9,
        }
    }

    /// Five actions: add or remove one or two VMs, or do nothing.
    pub fn extended_actions(mut self) -> Self {
        self.actions = vec![-2, -1, 0, 1, 2];
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        self.profile.validate()?;
        if self.min_vms < 1 || self.min_vms > self.max_vms {
            return Err("need 1 <= min_vms <= max_vms".into());
        }
        if !(self.min_vms..=self.max_vms).contains(&self.initial_vms) {
            return Err("initial_vms outside [min_vms, max_vms]".into());
        }
        if self.actions.is_empty() {
            return Err("at least one action is required".into());
        }
        if !(self.read.period.is_finite() && self.read.period > 0.0) {
            return Err("read period must be positive".into());
        }
        Ok(())
    }

    pub fn space(&self) -> ParameterSpace {
        let mut params = vec![
            Parameter {
                name: "vms".into(),
                kind: ParamKind::DiscreteInteger,
            },
            Parameter {
                name: "load".into(),
                kind: ParamKind::Continuous,
            },
            Parameter {
                name: "read_pct".into(),
                kind: ParamKind::Continuous,
            },
        ];
        for i in 0..self.uniform_noise {
            params.push(Parameter {
                name: format!("noise_u{i}"),
                kind: ParamKind::Continuous,
            });
        }
        for i in 0..self.integer_noise {
            params.push(Parameter {
                name: format!("noise_i{i}"),
                kind: ParamKind::DiscreteInteger,
            });
        }
        ParameterSpace::new(params).expect("generated names are unique")
    }

    pub fn load(&self, t: u64) -> f64 {
        self.profile.load(t)
    }

    pub fn read_fraction(&self, t: u64) -> f64 {
        self.read.fraction(t)
    }

    /// Reward of running `vms` machines at step `t`.
    pub fn reward(&self, t: u64, vms: i64) -> f64 {
        let v = vms as f64;
        let capacity = self.capacity_per_vm * v * self.read_fraction(t);
        capacity.min(self.load(t)) - self.cost_per_vm * v
    }

    /// Best cluster size for step `t` and its reward; ties pick the smaller size.
    pub fn optimal_static_reward(&self, t: u64) -> (i64, f64) {
        let mut best = (self.min_vms, self.reward(t, self.min_vms));
        for v in self.min_vms + 1..=self.max_vms {
            let r = self.reward(t, v);
            if r > best.1 {
                best = (v, r);
            }
        }
        best
    }
}

/// A running simulator instance.
#[derive(Debug, Clone)]
pub struct ClusterEnv {
    cfg: EnvConfig,
    space: ParameterSpace,
    t: u64,
    vms: i64,
    rng: ChaCha8Rng,
    current: Measurement,
}

impl ClusterEnv {
    pub fn new(cfg: EnvConfig, seed: u64) -> Self {
        let space = cfg.space();
        let mut env = ClusterEnv {
            vms: cfg.initial_vms,
            cfg,
            space,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            current: Measurement(Vec::new()),
        };
        env.current = env.measure();
        env
    }

    fn measure(&mut self) -> Measurement {
        let mut v = Vec::with_capacity(self.space.len());
        v.push(self.vms as f64);
        v.push(self.cfg.load(self.t));
        v.push(100.0 * self.cfg.read_fraction(self.t));
        for _ in 0..self.cfg.uniform_noise {
            v.push(self.rng.gen::<f64>());
        }
        for _ in 0..self.cfg.integer_noise {
            v.push(f64::from(self.rng.gen_range(0..=self.cfg.integer_noise_max)));
        }
        Measurement(v)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn num_actions(&self) -> usize {
        self.cfg.actions.len()
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn vms(&self) -> i64 {
        self.vms
    }

    pub fn observe(&self) -> &Measurement {
        &self.current
    }

    /// Applies action `a`, advances time and returns the new measurement and
    /// the reward.
    pub fn step(&mut self, a: ActionId) -> (Measurement, f64) {
        let delta = self.cfg.actions[a];
        self.vms = (self.vms + delta).clamp(self.cfg.min_vms, self.cfg.max_vms);
        self.t += 1;
        let reward = self.cfg.reward(self.t, self.vms);
        self.current = self.measure();
        (self.current.clone(), reward)
    }

    /// Steps and packages the transition as an experience.
    pub fn step_experience(&mut self, a: ActionId) -> Experience {
        let m = self.current.clone();
        let (m_next, reward) = self.step(a);
        Experience {
            m,
            action: a,
            m_next,
            reward,
        }
    }
}

/// The RNG used for action choices belonging to run `seed`; independent of
/// the environment's own stream.
pub fn action_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// `n` experiences collected under uniformly random actions.
pub fn generate_dataset(cfg: &EnvConfig, n: usize, seed: u64) -> Vec<Experience> {
    let mut env = ClusterEnv::new(cfg.clone(), seed);
    let mut rng = action_rng(seed);
    (0..n)
        .map(|_| {
            let a = rng.gen_range(0..env.num_actions());
            env.step_experience(a)
        })
        .collect()
}
