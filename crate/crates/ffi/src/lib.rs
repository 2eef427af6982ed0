//! C ABI over the `mdpdt` library.
//!
//! Every function returns an [`MdpdtStatus`]. On failure a message is kept
//! per thread and can be read with [`mdpdt_last_error`]. Handles are opaque
//! and must be released with the matching `_free` function.

use mdpdt::agents::{build_agent, run_episode, train_offline, Agent, AgentKind, Mode};
use mdpdt::env::{action_rng, ClusterEnv};
use mdpdt::harness::{HarnessConfig, HarnessError};
use mdpdt::model::log::read_log;
use mdpdt::stats::{StatsError, TwoSampleTest};
use rand_chacha::ChaCha8Rng;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdpdtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientSample = 3,
    DegenerateVariance = 4,
    Config = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdpdtTest {
    StudentT = 0,
    Welch = 1,
    MannWhitney = 2,
    KolmogorovSmirnov = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdpdtAgentKind {
    MdpDt = 0,
    StaticMdp = 1,
    Qdt = 2,
    QLearning = 3,
}

/// Result of a two-sample test. `degrees_of_freedom` is NaN for the rank
/// and distribution tests.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MdpdtTestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub degrees_of_freedom: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MdpdtRunMetrics {
    pub steps: usize,
    pub total_reward: f64,
    pub splits_total: usize,
    pub splits_correct: usize,
    pub final_states: usize,
}

/// A parsed experiment configuration.
pub struct MdpdtConfig {
    inner: HarnessConfig,
}

/// A simulated cluster.
pub struct MdpdtEnv {
    inner: ClusterEnv,
}

/// An agent together with the RNG driving its exploration.
pub struct MdpdtAgent {
    inner: Box<dyn Agent>,
    rng: ChaCha8Rng,
    space: mdpdt::tree::ParameterSpace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(MdpdtStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(MdpdtStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(msg: impl Into<String>) -> Self {
        Failure(MdpdtStatus::InvalidArgument, msg.into())
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        let status = match e {
            StatsError::InsufficientSample { .. } => MdpdtStatus::InsufficientSample,
            StatsError::DegenerateVariance => MdpdtStatus::DegenerateVariance,
            StatsError::NonFinite => MdpdtStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let status = match e {
            HarnessError::Io(_) => MdpdtStatus::Io,
            _ => MdpdtStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

impl From<mdpdt::agents::AgentError> for Failure {
    fn from(e: mdpdt::agents::AgentError) -> Self {
        Failure(MdpdtStatus::InvalidArgument, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MdpdtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            MdpdtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MdpdtStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn mdpdt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Runs a two-sample test on `a[0..na]` and `b[0..nb]`.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` readable doubles; `out_result` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_two_sample_test(
    test: MdpdtTest,
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out_result: *mut MdpdtTestOutcome,
) -> MdpdtStatus {
    guard(|| {
        let (a, b) = (slice(a, na, "a")?, slice(b, nb, "b")?);
        let out_result = out(out_result, "out_result")?;
        if a.is_empty() || b.is_empty() {
            return Err(Failure(MdpdtStatus::InsufficientSample, "empty sample".into()));
        }
        let t = match test {
            MdpdtTest::StudentT => TwoSampleTest::StudentT,
            MdpdtTest::Welch => TwoSampleTest::Welch,
            MdpdtTest::MannWhitney => TwoSampleTest::MannWhitney,
            MdpdtTest::KolmogorovSmirnov => TwoSampleTest::KolmogorovSmirnov,
        };
        let r = t.run(a, b)?;
        *out_result = MdpdtTestOutcome {
            statistic: r.statistic,
            p_value: r.p_value,
            degrees_of_freedom: r.degrees_of_freedom.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Parses a TOML experiment configuration from a string.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out_config` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_config_parse(toml: *const c_char, out_config: *mut *mut MdpdtConfig) -> MdpdtStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        let cfg = HarnessConfig::parse(text(toml, "toml")?)?;
        *slot = Box::into_raw(Box::new(MdpdtConfig { inner: cfg }));
        Ok(())
    })
}

/// Loads a TOML experiment configuration from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_config` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_config_load(path: *const c_char, out_config: *mut *mut MdpdtConfig) -> MdpdtStatus {
    guard(|| {
        let slot = out(out_config, "out_config")?;
        let cfg = HarnessConfig::load(std::path::Path::new(text(path, "path")?))?;
        *slot = Box::into_raw(Box::new(MdpdtConfig { inner: cfg }));
        Ok(())
    })
}

/// # Safety
/// `config` must come from `mdpdt_config_parse`/`mdpdt_config_load` or be null.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_config_free(config: *mut MdpdtConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Creates the simulated cluster described by `config`.
///
/// # Safety
/// `config` must be a live handle; `out_env` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_env_new(config: *const MdpdtConfig, seed: u64, out_env: *mut *mut MdpdtEnv) -> MdpdtStatus {
    guard(|| {
        let cfg = config.as_ref().ok_or_else(|| Failure::null("config"))?;
        let slot = out(out_env, "out_env")?;
        *slot = Box::into_raw(Box::new(MdpdtEnv {
            inner: ClusterEnv::new(cfg.inner.env.clone(), seed),
        }));
        Ok(())
    })
}

/// # Safety
/// `env` must come from `mdpdt_env_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_env_free(env: *mut MdpdtEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Number of measurement parameters and of actions.
///
/// # Safety
/// `env` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_env_dims(env: *const MdpdtEnv, out_params: *mut usize, out_actions: *mut usize) -> MdpdtStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| Failure::null("env"))?;
        *out(out_params, "out_params")? = env.inner.space().len();
        *out(out_actions, "out_actions")? = env.inner.num_actions();
        Ok(())
    })
}

/// Copies the current measurement into `buf`, which must hold at least
/// as many values as `mdpdt_env_dims` reports.
///
/// # Safety
/// `env` must be a live handle; `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_env_observe(env: *const MdpdtEnv, buf: *mut f64, len: usize) -> MdpdtStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| Failure::null("env"))?;
        let m = env.inner.observe();
        if len < m.len() {
            return Err(Failure::invalid(format!("buffer holds {len} values, measurement has {}", m.len())));
        }
        if buf.is_null() {
            return Err(Failure::null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, m.len()).copy_from_slice(&m.0);
        Ok(())
    })
}

/// Applies `action` and writes the reward.
///
/// # Safety
/// `env` must be a live handle; `out_reward` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_env_step(env: *mut MdpdtEnv, action: usize, out_reward: *mut f64) -> MdpdtStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| Failure::null("env"))?;
        let reward = out(out_reward, "out_reward")?;
        if action >= env.inner.num_actions() {
            return Err(Failure::invalid(format!("action {action} out of range")));
        }
        *reward = env.inner.step(action).1;
        Ok(())
    })
}

/// Creates an agent from the `[agent]` section of `config`.
///
/// # Safety
/// `config` must be a live handle; `out_agent` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_agent_new(
    config: *const MdpdtConfig,
    kind: MdpdtAgentKind,
    seed: u64,
    out_agent: *mut *mut MdpdtAgent,
) -> MdpdtStatus {
    guard(|| {
        let cfg = &config.as_ref().ok_or_else(|| Failure::null("config"))?.inner;
        let slot = out(out_agent, "out_agent")?;
        let kind = match kind {
            MdpdtAgentKind::MdpDt => AgentKind::MdpDt,
            MdpdtAgentKind::StaticMdp => AgentKind::StaticMdp,
            MdpdtAgentKind::Qdt => AgentKind::Qdt,
            MdpdtAgentKind::QLearning => AgentKind::QLearning,
        };
        let space = cfg.env.space();
        let inner = build_agent(kind, &cfg.agent, &space, cfg.env.actions.len())?;
        *slot = Box::into_raw(Box::new(MdpdtAgent {
            inner,
            rng: action_rng(seed),
            space,
        }));
        Ok(())
    })
}

/// # Safety
/// `agent` must come from `mdpdt_agent_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_agent_free(agent: *mut MdpdtAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Runs `steps` sense-act steps. With `train` non-zero the agent explores
/// with probability `epsilon` and learns; otherwise it acts greedily and
/// learns nothing.
///
/// # Safety
/// `agent` and `env` must be live handles; `out_metrics` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_agent_run(
    agent: *mut MdpdtAgent,
    env: *mut MdpdtEnv,
    steps: usize,
    train: i32,
    epsilon: f64,
    out_metrics: *mut MdpdtRunMetrics,
) -> MdpdtStatus {
    guard(|| {
        let agent = agent.as_mut().ok_or_else(|| Failure::null("agent"))?;
        let env = env.as_mut().ok_or_else(|| Failure::null("env"))?;
        let metrics = out(out_metrics, "out_metrics")?;
        if env.inner.num_actions() != agent.inner.num_actions() || env.inner.space() != &agent.space {
            return Err(Failure::invalid("agent and environment disagree on measurements or actions"));
        }
        let mode = if train != 0 {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(Failure::invalid("epsilon must lie in [0, 1]"));
            }
            Mode::Train { epsilon }
        } else {
            Mode::Eval
        };
        let m = run_episode(agent.inner.as_mut(), &mut env.inner, steps, mode, &mut agent.rng, None)?;
        *metrics = MdpdtRunMetrics {
            steps: m.steps,
            total_reward: m.total_reward,
            splits_total: m.splits_total,
            splits_correct: m.splits_correct,
            final_states: m.final_states,
        };
        Ok(())
    })
}

/// Replays an experience log file through the agent's learning machinery.
///
/// # Safety
/// `agent` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_agent_train_file(agent: *mut MdpdtAgent, path: *const c_char, out_splits: *mut usize) -> MdpdtStatus {
    guard(|| {
        let agent = agent.as_mut().ok_or_else(|| Failure::null("agent"))?;
        let path = text(path, "path")?;
        let file = std::fs::File::open(path).map_err(|e| Failure(MdpdtStatus::Io, format!("{path}: {e}")))?;
        let log = read_log(BufReader::new(file), &agent.space).map_err(|e| Failure(MdpdtStatus::Io, e.to_string()))?;
        let splits = train_offline(agent.inner.as_mut(), &log)?;
        if let Some(s) = out_splits.as_mut() {
            *s = splits;
        }
        Ok(())
    })
}

/// Current number of abstract states.
///
/// # Safety
/// `agent` must be a live handle; `out_states` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mdpdt_agent_num_states(agent: *const MdpdtAgent, out_states: *mut usize) -> MdpdtStatus {
    guard(|| {
        let agent = agent.as_ref().ok_or_else(|| Failure::null("agent"))?;
        *out(out_states, "out_states")? = agent.inner.num_states();
        Ok(())
    })
}
