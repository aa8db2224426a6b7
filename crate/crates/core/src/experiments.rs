//! Parameter sweeps behind the figures, emitted as long-format CSV.
//!
//! Every row carries the full parameter tuple and the root seed. Columns:
//! `experiment, grid_index, epsilon, theta, omega, n, m, sensitive, metric,
//! estimate, stderr, status, seed`.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    prefix_window_sweep_mc, robustness_experiment, window_leakage_exact, window_leakage_mc, MismatchPair,
    WindowMode, WindowPolicy,
};
use crate::bounds::{lp_optimal_rate, upper_bound_rate, LpStatus};
use crate::distributions::{read_panel, AnyModel, HmmModel, MarkovChainModel, SequenceModel};
use crate::error::{Error, Result};
use crate::hmm_mechanism::{hmm_rate_mc, hmm_upper_bound_rate, RateEstimator};
use crate::mechanism::achievable_rate_exact;
use crate::ordering::{best_ordering_exhaustive, min_hitting_set_bruteforce, HittingSetInstance};
use crate::seeding::{run_rng, Estimate};
use crate::sequence::{parse_symbols, Alphabet, ProcessingOrder, SensitiveSet, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fig3,
    Fig4,
    Fig5,
    Robustness,
    Hardness,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Fig5 => "fig5",
            ExperimentKind::Robustness => "robustness",
            ExperimentKind::Hardness => "hardness",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    #[default]
    Count,
    ReleaseProbability,
}

fn default_sensitive() -> Vec<usize> {
    vec![1]
}

fn default_alphabet() -> usize {
    2
}

/// One experiment. Unless a panel is given, a fresh `m x n` panel is drawn
/// from the seed for every grid point (and every instance, for `fig5`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub panel_path: Option<PathBuf>,
    #[serde(default)]
    pub panel: Option<Vec<String>>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default = "default_alphabet")]
    pub alphabet: usize,
    /// 1-based.
    #[serde(default = "default_sensitive")]
    pub sensitive: Vec<usize>,
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
    #[serde(default)]
    pub omega: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    /// Instances per grid point (`fig5`, `robustness`, `hardness`).
    #[serde(default)]
    pub instances: Option<usize>,
    /// Length panels are cut to (`fig5`); epsilon and theta are not rescaled.
    #[serde(default)]
    pub truncate: Option<usize>,
    /// Number of sets (`hardness`).
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub estimator: EstimatorChoice,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub experiment: &'static str,
    pub grid_index: usize,
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    pub omega: Option<usize>,
    pub n: usize,
    pub m: usize,
    /// 1-based, `;`-separated.
    pub sensitive: String,
    pub metric: &'static str,
    pub estimate: f64,
    pub stderr: f64,
    pub status: String,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        Ok((cfg, path.parent().map(Path::to_path_buf).unwrap_or_default()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::input("runs must be at least 1"));
        }
        let needs_params = matches!(
            self.experiment,
            ExperimentKind::Fig3 | ExperimentKind::Fig4 | ExperimentKind::Fig5
        );
        if needs_params && (self.epsilon.is_empty() || self.theta.is_empty()) {
            return Err(Error::input("epsilon and theta grids must be non-empty"));
        }
        if self.experiment == ExperimentKind::Fig3 && self.omega.is_empty() {
            return Err(Error::input("omega grid must be non-empty"));
        }
        if self.experiment == ExperimentKind::Robustness && self.epsilon.is_empty() {
            return Err(Error::input("robustness needs a perturbation grid in epsilon"));
        }
        if self.panel_path.is_some() && self.panel.is_some() {
            return Err(Error::input("give at most one of panel_path and panel"));
        }
        Ok(())
    }
}

/// Sub-seed for grid point `g`, disjoint from the per-run streams.
pub fn derive_seed(seed: u64, g: usize) -> u64 {
    run_rng(seed, (1u64 << 40) + g as u64).next_u64()
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    base_dir: &'a Path,
    rows: Vec<ExperimentRow>,
}

struct Point {
    grid_index: usize,
    epsilon: Option<f64>,
    theta: Option<f64>,
    omega: Option<usize>,
    n: usize,
    m: usize,
}

impl Ctx<'_> {
    fn push(&mut self, p: &Point, metric: &'static str, est: f64, stderr: f64, status: &str) {
        self.rows.push(ExperimentRow {
            experiment: self.cfg.experiment.name(),
            grid_index: p.grid_index,
            epsilon: p.epsilon,
            theta: p.theta,
            omega: p.omega,
            n: p.n,
            m: p.m,
            sensitive: self
                .cfg
                .sensitive
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            metric,
            estimate: est,
            stderr,
            status: status.to_string(),
            seed: self.cfg.seed,
        });
    }

    fn push_estimate(&mut self, p: &Point, metric: &'static str, e: &Estimate) {
        self.push(p, metric, e.mean, e.stderr, "ok");
    }

    fn push_error(&mut self, p: &Point, metric: &'static str, err: &Error) {
        self.push(p, metric, f64::NAN, f64::NAN, status_of(err));
    }

    fn panel(&self, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<Symbol>>> {
        let cfg = self.cfg;
        match (&cfg.panel_path, &cfg.panel) {
            (Some(p), _) => read_panel(self.base_dir.join(p)),
            (None, Some(rows)) => rows.iter().map(|r| parse_symbols(r)).collect(),
            (None, None) => {
                let (m, n) = cfg
                    .m
                    .zip(cfg.n)
                    .ok_or_else(|| Error::input("give a panel or both m and n"))?;
                Ok(HmmModel::<f64>::random_panel(m, n, Alphabet::new(cfg.alphabet)?, rng))
            }
        }
    }

    fn hmm(&self, rng: &mut ChaCha8Rng, epsilon: f64, theta: f64) -> Result<HmmModel<f64>> {
        HmmModel::new(self.panel(rng)?, Alphabet::new(self.cfg.alphabet)?, epsilon, theta)
    }

    fn sensitive(&self, n: usize) -> Result<SensitiveSet> {
        SensitiveSet::from_one_based(&self.cfg.sensitive, n)
    }

    fn estimator(&self) -> RateEstimator {
        match self.cfg.estimator {
            EstimatorChoice::Count => RateEstimator::Count,
            EstimatorChoice::ReleaseProbability => RateEstimator::ReleaseProbability,
        }
    }

    fn param_grid(&self) -> Vec<(f64, f64)> {
        let cfg = self.cfg;
        cfg.theta
            .iter()
            .flat_map(|&t| cfg.epsilon.iter().map(move |&e| (e, t)))
            .collect()
    }
}

pub fn status_of(err: &Error) -> &'static str {
    match err {
        Error::Capacity { .. } => "capacity",
        Error::Numerical(_) => "numerical",
        Error::ImpossibleContext(_) => "impossible",
        Error::DegenerateSensitive => "degenerate",
        _ => "error",
    }
}

/// Runs the configured experiment; rows come out in grid order.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Vec<ExperimentRow>> {
    cfg.validate()?;
    let mut ctx = Ctx {
        cfg,
        base_dir,
        rows: Vec::new(),
    };
    match cfg.experiment {
        ExperimentKind::Fig3 => fig3(&mut ctx)?,
        ExperimentKind::Fig4 => fig4(&mut ctx)?,
        ExperimentKind::Fig5 => fig5(&mut ctx)?,
        ExperimentKind::Robustness => robustness(&mut ctx)?,
        ExperimentKind::Hardness => hardness(&mut ctx)?,
    }
    Ok(ctx.rows)
}

/// Window threshold: leakage below this counts as hidden.
pub const LEAKAGE_THRESHOLD: f64 = 0.01;

fn fig3(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    for (g, (eps, theta)) in ctx.param_grid().into_iter().enumerate() {
        let seed = derive_seed(cfg.seed, g);
        let hmm = ctx.hmm(&mut run_rng(seed, 0), eps, theta)?;
        let (n, m) = (hmm.n(), hmm.m());
        let mut point = Point {
            grid_index: g,
            epsilon: Some(eps),
            theta: Some(theta),
            omega: None,
            n,
            m,
        };
        let k = ctx.sensitive(n)?;
        match hmm_rate_mc(&hmm, &k, cfg.runs, seed, ctx.estimator()) {
            Ok(e) => ctx.push(&point, "mechanism_erasure_rate", 1.0 - e.mean, e.stderr, "ok"),
            Err(err) => ctx.push_error(&point, "mechanism_erasure_rate", &err),
        }
        if k.positions() != [0] {
            ctx.push(&point, "window_leakage", f64::NAN, f64::NAN, "unsupported_sensitive_set");
            continue;
        }
        let sweep = prefix_window_sweep_mc(&hmm, &cfg.omega, cfg.runs, seed ^ 1)?;
        let mut threshold = None;
        for (&w, est) in cfg.omega.iter().zip(&sweep) {
            point.omega = Some(w);
            ctx.push_estimate(&point, "window_leakage", est);
            if threshold.is_none() && est.mean < LEAKAGE_THRESHOLD {
                threshold = Some(w);
            }
        }
        point.omega = threshold;
        match threshold {
            Some(w) => ctx.push(&point, "window_threshold_fraction", w as f64 / n as f64, 0.0, "ok"),
            None => ctx.push(&point, "window_threshold_fraction", f64::NAN, f64::NAN, "not_reached"),
        }
    }
    Ok(())
}

fn fig4(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    for (g, (eps, theta)) in ctx.param_grid().into_iter().enumerate() {
        let seed = derive_seed(cfg.seed, g);
        let hmm = ctx.hmm(&mut run_rng(seed, 0), eps, theta)?;
        let point = Point {
            grid_index: g,
            epsilon: Some(eps),
            theta: Some(theta),
            omega: None,
            n: hmm.n(),
            m: hmm.m(),
        };
        let k = ctx.sensitive(hmm.n())?;
        let rate = hmm_rate_mc(&hmm, &k, cfg.runs, seed, ctx.estimator());
        let bound = hmm_upper_bound_rate(&hmm, &k);
        match &rate {
            Ok(e) => ctx.push_estimate(&point, "mechanism_rate", e),
            Err(err) => ctx.push_error(&point, "mechanism_rate", err),
        }
        match &bound {
            Ok(b) => ctx.push(&point, "upper_bound", *b, 0.0, "ok"),
            Err(err) => ctx.push_error(&point, "upper_bound", err),
        }
        if let (Ok(e), Ok(b)) = (&rate, &bound) {
            ctx.push(&point, "gap", b - e.mean, e.stderr, "ok");
        }
    }
    Ok(())
}

fn fig5(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let instances = cfg.instances.unwrap_or(1);
    let cut = cfg.truncate.unwrap_or(6);
    let mut g = 0;
    for (eps, theta) in ctx.param_grid() {
        for _ in 0..instances {
            let seed = derive_seed(cfg.seed, g);
            let hmm = ctx.hmm(&mut run_rng(seed, 0), eps, theta)?.truncated(cut)?;
            let point = Point {
                grid_index: g,
                epsilon: Some(eps),
                theta: Some(theta),
                omega: None,
                n: hmm.n(),
                m: hmm.m(),
            };
            g += 1;
            let k = ctx.sensitive(hmm.n())?;
            match achievable_rate_exact(&hmm, &k, &ProcessingOrder::linear(hmm.n())) {
                Ok(r) => ctx.push(&point, "mechanism_rate", r, 0.0, "ok"),
                Err(err) => ctx.push_error(&point, "mechanism_rate", &err),
            }
            let lp = lp_optimal_rate(&hmm, &k)?;
            let status = match lp.status {
                LpStatus::Optimal => "ok",
                LpStatus::Infeasible => "infeasible",
                LpStatus::Capacity => "capacity",
                LpStatus::Numerical => "numerical",
            };
            ctx.push(&point, "lp_rate", lp.optimal_rate, 0.0, status);
            match upper_bound_rate(&hmm, &k) {
                Ok(b) => ctx.push(&point, "upper_bound", b, 0.0, "ok"),
                Err(err) => ctx.push_error(&point, "upper_bound", &err),
            }
        }
    }
    Ok(())
}

/// Random binary chain, and a copy with every probability moved by up to `delta`.
pub fn perturbed_markov_pair(
    n: usize,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<(MarkovChainModel<f64>, MarkovChainModel<f64>)> {
    use rand::Rng;
    let mut draw = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let a = draw(0.05, 0.95);
    let stay = [draw(0.05, 0.95), draw(0.05, 0.95)];
    let p = MarkovChainModel::new(
        n,
        Alphabet::BINARY,
        vec![a, 1.0 - a],
        vec![stay[0], 1.0 - stay[0], 1.0 - stay[1], stay[1]],
    )?;
    let mut nudge = |v: f64| (v + draw(-delta, delta)).clamp(0.01, 0.99);
    let b = nudge(a);
    let qs = [nudge(stay[0]), nudge(stay[1])];
    let q = MarkovChainModel::new(
        n,
        Alphabet::BINARY,
        vec![b, 1.0 - b],
        vec![qs[0], 1.0 - qs[0], 1.0 - qs[1], qs[1]],
    )?;
    Ok((p, q))
}

fn robustness(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let n = cfg.n.unwrap_or(4);
    let instances = cfg.instances.unwrap_or(10);
    let k = ctx.sensitive(n)?;
    let mut g = 0;
    for &delta in &cfg.epsilon {
        for _ in 0..instances {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, g));
            let (p, q) = perturbed_markov_pair(n, delta, &mut rng)?;
            let point = Point {
                grid_index: g,
                epsilon: Some(delta),
                theta: None,
                omega: None,
                n,
                m: 0,
            };
            g += 1;
            let pair = MismatchPair::new(&p, &q)?;
            match robustness_experiment(&pair, &k, &ProcessingOrder::linear(n)) {
                Ok(r) => {
                    let status = if r.leakage_bits <= r.kl_bound_bits + 1e-9 { "ok" } else { "violated" };
                    ctx.push(&point, "leakage_bits", r.leakage_bits, 0.0, status);
                    ctx.push(&point, "kl_bound_bits", r.kl_bound_bits, 0.0, status);
                }
                Err(err) => ctx.push_error(&point, "leakage_bits", &err),
            }
        }
    }
    Ok(())
}

fn hardness(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let m = cfg.m.unwrap_or(5);
    let k = cfg.k.unwrap_or(3);
    for g in 0..cfg.instances.unwrap_or(10) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, g));
        let inst = HittingSetInstance::random(m, k, &mut rng)?;
        let point = Point {
            grid_index: g,
            epsilon: None,
            theta: None,
            omega: None,
            n: m + k,
            m,
        };
        let (e, _) = best_ordering_exhaustive(&inst)?;
        let (h, _) = min_hitting_set_bruteforce(&inst)?;
        let status = if e == h { "ok" } else { "mismatch" };
        ctx.push(&point, "e_star", e as f64, 0.0, status);
        ctx.push(&point, "h_star", h as f64, 0.0, status);
    }
    Ok(())
}

/// One row of a window-baseline sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRow {
    pub experiment: &'static str,
    pub omega: usize,
    pub erasure_rate: f64,
    pub leakage: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Normalized leakage of the window baseline for every `omega`.
///
/// HMMs are sampled (`samples` draws per window; prefix windows with `K = {1}`
/// share one sweep), other models are enumerated and report `stderr = 0`.
pub fn window_rows(
    model: &AnyModel,
    k: &SensitiveSet,
    mode: WindowMode,
    omegas: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<WindowRow>> {
    let n = model.len();
    let experiment = match mode {
        WindowMode::Prefix => "window_prefix",
        WindowMode::Radius => "window_radius",
    };
    let estimates: Vec<Estimate> = match model.as_hmm() {
        Some(hmm) if mode == WindowMode::Prefix && k.positions() == [0] => {
            prefix_window_sweep_mc(hmm, omegas, samples, seed)?
        }
        Some(hmm) => omegas
            .iter()
            .enumerate()
            .map(|(j, &w)| window_leakage_mc(hmm, k, &WindowPolicy { mode, omega: w }, samples, derive_seed(seed, j)))
            .collect::<Result<_>>()?,
        None => omegas
            .iter()
            .map(|&w| {
                let leak = window_leakage_exact(model, k, &WindowPolicy { mode, omega: w })?;
                Ok(Estimate { mean: leak, stderr: 0.0, runs: 0 })
            })
            .collect::<Result<_>>()?,
    };
    omegas
        .iter()
        .zip(estimates)
        .map(|(&w, e)| {
            let erased = WindowPolicy { mode, omega: w }.erased(n, k)?;
            Ok(WindowRow {
                experiment,
                omega: w,
                erasure_rate: erased.iter().filter(|&&b| b).count() as f64 / n as f64,
                leakage: e.mean,
                stderr: e.stderr,
                seed,
            })
        })
        .collect()
}

pub fn write_csv<R: Serialize, W: Write>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    fn csv_of(c: &ExperimentConfig) -> String {
        let rows = run_experiment(c, Path::new(".")).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn fig4_rows_respect_the_bound_and_repeat() {
        let c = cfg(r#"{"experiment":"fig4","m":8,"n":20,"epsilon":[0.05,0.3],"theta":[0.01],"runs":300,"seed":5}"#);
        let rows = run_experiment(&c, Path::new(".")).unwrap();
        assert_eq!(rows.len(), 6);
        for pair in rows.chunks(3) {
            assert_eq!(pair[0].metric, "mechanism_rate");
            assert!(pair[0].estimate <= pair[1].estimate + 3.0 * pair[0].stderr);
        }
        let a = csv_of(&c);
        assert_eq!(a, csv_of(&c));
        assert!(a.starts_with("experiment,grid_index,epsilon,theta,omega,n,m,sensitive,metric,estimate,stderr,status,seed\n"));
    }

    #[test]
    fn fig5_rows_are_sandwiched() {
        let c = cfg(r#"{"experiment":"fig5","m":20,"n":30,"epsilon":[0.05],"theta":[0.01],"runs":1,"seed":2,"instances":2}"#);
        let rows = run_experiment(&c, Path::new(".")).unwrap();
        for inst in rows.chunks(3) {
            let (r, lp, b) = (inst[0].estimate, inst[1].estimate, inst[2].estimate);
            assert_eq!(inst[1].status, "ok");
            assert!(r <= lp + 1e-7 && lp <= b + 1e-7, "{r} {lp} {b}");
        }
    }

    #[test]
    fn fig3_small_sweep() {
        let c = cfg(r#"{"experiment":"fig3","m":5,"n":12,"epsilon":[0.1],"theta":[0.05],"omega":[0,2,6,12],"runs":200,"seed":1}"#);
        let rows = run_experiment(&c, Path::new(".")).unwrap();
        assert_eq!(rows[0].metric, "mechanism_erasure_rate");
        let leak: Vec<f64> = rows.iter().filter(|r| r.metric == "window_leakage").map(|r| r.estimate).collect();
        assert_eq!(leak.len(), 4);
        assert!((leak[0] - 1.0).abs() < 1e-9, "{leak:?}");
        assert!(leak[3].abs() < 0.1 && leak[1] >= leak[2] - 0.05, "{leak:?}");
        assert_eq!(rows.last().unwrap().metric, "window_threshold_fraction");
    }

    #[test]
    fn robustness_and_hardness_rows() {
        let c = cfg(r#"{"experiment":"robustness","n":3,"epsilon":[0.1],"runs":1,"seed":3,"instances":5}"#);
        assert!(run_experiment(&c, Path::new(".")).unwrap().iter().all(|r| r.status == "ok"));
        let c = cfg(r#"{"experiment":"hardness","m":4,"k":3,"runs":1,"seed":3,"instances":5}"#);
        assert!(run_experiment(&c, Path::new(".")).unwrap().iter().all(|r| r.status == "ok"));
    }

    #[test]
    fn window_rows_exact_and_sampled() {
        let chain = AnyModel::Markov(MarkovChainModel::binary_symmetric(4, 0.8).unwrap());
        let k = SensitiveSet::new(vec![0], 4).unwrap();
        let rows = window_rows(&chain, &k, WindowMode::Radius, &[0, 1, 3], 10, 0).unwrap();
        assert_eq!(rows[0].erasure_rate, 0.25);
        assert!(rows[0].leakage > rows[1].leakage && rows[2].leakage.abs() < 1e-12);
        let hmm = AnyModel::Hmm(HmmModel::new(vec![vec![0, 1, 1], vec![1, 1, 0]], Alphabet::BINARY, 0.1, 0.05).unwrap());
        let k = SensitiveSet::new(vec![1], 3).unwrap();
        let rows = window_rows(&hmm, &k, WindowMode::Radius, &[0], 4000, 1).unwrap();
        let exact = window_leakage_exact(&hmm, &k, &WindowPolicy::radius(0)).unwrap();
        assert!((rows[0].leakage - exact).abs() < 4.0 * rows[0].stderr + 1e-9, "{rows:?} {exact}");
    }

    #[test]
    fn invalid_configs() {
        let c = cfg(r#"{"experiment":"fig4","m":3,"n":4,"epsilon":[],"theta":[0.1],"runs":1,"seed":0}"#);
        assert!(run_experiment(&c, Path::new(".")).is_err());
        let c = cfg(r#"{"experiment":"fig4","m":3,"n":4,"epsilon":[0.1],"theta":[0.1],"runs":0,"seed":0}"#);
        assert!(run_experiment(&c, Path::new(".")).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"fig9","runs":1,"seed":0}"#).is_err());
    }
}
