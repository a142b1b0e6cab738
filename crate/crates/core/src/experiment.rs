//! Experiment configuration: where the topology comes from, which
//! algorithm runs on which graph, and the problem to solve.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{default_k_max, design_graph_with, sweep_k_with, DesignResult};
use crate::error::{Error, Result};
use crate::graph::{parse_edge_list, BaseTopology, UndirectedGraph};
use crate::mixing::{metropolis_hastings, uniform_column_stochastic};
use crate::schedule::{build_conflict_graph_with, greedy_color};
use crate::sim::{run_experiment, Algorithm, Experiment, ProblemSpec, Trace};
use crate::topology::GeneratorSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySource {
    File(PathBuf),
    Generator(String),
}

impl TopologySource {
    pub fn load(&self) -> Result<BaseTopology> {
        match self {
            TopologySource::File(path) => {
                BaseTopology::parse_edge_list(&std::fs::read_to_string(path)?)
            }
            TopologySource::Generator(spec) => spec.parse::<GeneratorSpec>()?.build(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub trace: Option<PathBuf>,
    pub design: Option<PathBuf>,
}

fn default_t_planned() -> usize {
    10_000
}

fn default_max_iters() -> usize {
    100_000
}

/// One simulation run, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologySource,
    /// Edge list of the interference graph, if it differs from the base.
    #[serde(default)]
    pub interference: Option<PathBuf>,
    pub algorithm: Algorithm,
    /// Run SGP on the full base topology instead of a designed graph.
    /// D-PSGD always runs on the base topology.
    #[serde(default)]
    pub vanilla: bool,
    /// Fixed number of distance-reducing edges; sweeps when absent.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub skip_step4: bool,
    #[serde(default)]
    pub problem: ProblemSpec,
    /// Step size; defaults to `sqrt(n / t_planned)`.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_t_planned")]
    pub t_planned: usize,
    pub eps: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub seed: u64,
    /// Standard deviation of the initial parameters; zero starts every
    /// node at the origin.
    #[serde(default)]
    pub init_spread: f64,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.max_iters == 0 || self.t_planned == 0 {
            return Err(Error::Config(
                "max_iters and t_planned must be positive".into(),
            ));
        }
        if let Some(eta) = self.eta {
            if !(eta >= 0.0) {
                return Err(Error::Config(format!(
                    "eta must be non-negative, got {eta}"
                )));
            }
        }
        if self.init_spread < 0.0 {
            return Err(Error::Config("init_spread must be non-negative".into()));
        }
        Ok(())
    }

    pub fn arm(&self) -> Arm {
        match (self.algorithm, self.vanilla) {
            (Algorithm::Sgp, false) => Arm::SgpDesigned,
            (Algorithm::Sgp, true) => Arm::SgpVanilla,
            (Algorithm::Dpsgd, _) => Arm::DpsgdVanilla,
        }
    }
}

/// Algorithm and graph combination being compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    SgpDesigned,
    DpsgdVanilla,
    SgpVanilla,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::SgpDesigned, Arm::DpsgdVanilla, Arm::SgpVanilla];

    pub fn name(self) -> &'static str {
        match self {
            Arm::SgpDesigned => "sgp-designed",
            Arm::DpsgdVanilla => "dpsgd-vanilla",
            Arm::SgpVanilla => "sgp-vanilla",
        }
    }
}

/// Base and interference graphs named by a configuration.
pub fn load_topologies(cfg: &ExperimentConfig) -> Result<(BaseTopology, UndirectedGraph)> {
    let base = cfg.topology.load()?;
    let interference = match &cfg.interference {
        Some(path) => {
            let g = parse_edge_list(&std::fs::read_to_string(path)?)?;
            if g.n() != base.n() {
                return Err(Error::DimensionMismatch {
                    expected: base.n(),
                    got: g.n(),
                });
            }
            g
        }
        None => base.graph().clone(),
    };
    Ok((base, interference))
}

/// A design as a configuration asks for it: fixed `k`, or the best `K`
/// of a sweep.
pub fn design_for(
    cfg: &ExperimentConfig,
    base: &BaseTopology,
    interference: &UndirectedGraph,
) -> Result<DesignResult> {
    match cfg.k {
        Some(k) => design_graph_with(base, interference, k, cfg.skip_step4),
        None => {
            let k_max = cfg.k_max.unwrap_or_else(|| default_k_max(base));
            let sweep = sweep_k_with(base, interference, k_max, cfg.skip_step4)?;
            Ok(sweep.best().clone())
        }
    }
}

pub struct Prepared {
    pub arm: Arm,
    pub experiment: Experiment,
    pub design: Option<DesignResult>,
}

fn initial_point(cfg: &ExperimentConfig, n: usize) -> Vec<DVector<f64>> {
    let d = cfg.problem.d;
    if cfg.init_spread == 0.0 {
        return vec![DVector::zeros(d); n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_1417);
    let scale = cfg.init_spread / (d as f64).sqrt();
    (0..n)
        .map(|_| {
            DVector::from_fn(d, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
        })
        .collect()
}

/// Builds the simulation for one arm.
pub fn prepare(
    cfg: &ExperimentConfig,
    base: &BaseTopology,
    interference: &UndirectedGraph,
    arm: Arm,
) -> Result<Prepared> {
    cfg.validate()?;
    let n = base.n();
    let problems = cfg.problem.generate(n, cfg.seed)?;
    let full_tau = || -> Result<usize> {
        let full = base.full_digraph();
        Ok(greedy_color(&build_conflict_graph_with(&full, base, interference)?).tau())
    };
    let (algorithm, mixing, slots_per_iter, design) = match arm {
        Arm::SgpDesigned => {
            let design = design_for(cfg, base, interference)?;
            let mixing = uniform_column_stochastic(&design.g_a);
            (Algorithm::Sgp, mixing, design.tau, Some(design))
        }
        Arm::SgpVanilla => (
            Algorithm::Sgp,
            uniform_column_stochastic(&base.full_digraph()),
            full_tau()?,
            None,
        ),
        Arm::DpsgdVanilla => (
            Algorithm::Dpsgd,
            metropolis_hastings(base),
            full_tau()?,
            None,
        ),
    };
    let eta = cfg
        .eta
        .unwrap_or_else(|| (n as f64 / cfg.t_planned as f64).sqrt());
    Ok(Prepared {
        arm,
        experiment: Experiment {
            algorithm,
            mixing,
            slots_per_iter,
            x0: initial_point(cfg, n),
            problems,
            eta,
            eps: cfg.eps,
            max_iters: cfg.max_iters,
            seed: cfg.seed,
        },
        design,
    })
}

pub struct RunOutput {
    pub arm: Arm,
    pub trace: Trace,
    pub design: Option<DesignResult>,
}

/// Runs the arm selected by the configuration.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let (base, interference) = load_topologies(cfg)?;
    run_arm(cfg, &base, &interference, cfg.arm())
}

fn run_arm(
    cfg: &ExperimentConfig,
    base: &BaseTopology,
    interference: &UndirectedGraph,
    arm: Arm,
) -> Result<RunOutput> {
    let prepared = prepare(cfg, base, interference, arm)?;
    Ok(RunOutput {
        arm,
        trace: run_experiment(&prepared.experiment)?,
        design: prepared.design,
    })
}

/// Runs all three arms on the same problem, in parallel; output order is
/// [`Arm::ALL`].
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>> {
    let (base, interference) = load_topologies(cfg)?;
    Arm::ALL
        .par_iter()
        .map(|&arm| run_arm(cfg, &base, &interference, arm))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{"topology": {"generator": "windmill:2,4"}, "algorithm": "sgp", "eps": 1e-3, "seed": 3}"#
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_json(minimal()).unwrap();
        assert_eq!(cfg.arm(), Arm::SgpDesigned);
        assert_eq!(cfg.max_iters, 100_000);
        assert_eq!(cfg.problem.d, 10);
        assert_eq!(cfg.k, None);
    }

    #[test]
    fn missing_fields_are_errors() {
        for text in [
            r#"{"algorithm": "sgp", "eps": 1e-3, "seed": 3}"#,
            r#"{"topology": {"generator": "windmill:2,4"}, "algorithm": "sgp", "seed": 3}"#,
            r#"{"topology": {"generator": "windmill:2,4"}, "algorithm": "sgp", "eps": 1e-3}"#,
        ] {
            assert!(
                matches!(ExperimentConfig::from_json(text), Err(Error::Json(_))),
                "{text}"
            );
        }
        let two_sources = r#"{"topology": {"generator": "windmill:2,4", "file": "x"}, "algorithm": "sgp", "eps": 1e-3, "seed": 3}"#;
        assert!(ExperimentConfig::from_json(two_sources).is_err());
        let bad_eps = r#"{"topology": {"generator": "windmill:2,4"}, "algorithm": "sgp", "eps": 0, "seed": 3}"#;
        assert!(matches!(
            ExperimentConfig::from_json(bad_eps),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn arms_use_their_own_graphs() {
        let cfg = ExperimentConfig::from_json(minimal()).unwrap();
        let (base, interference) = load_topologies(&cfg).unwrap();
        let designed = prepare(&cfg, &base, &interference, Arm::SgpDesigned).unwrap();
        let vanilla = prepare(&cfg, &base, &interference, Arm::SgpVanilla).unwrap();
        let dpsgd = prepare(&cfg, &base, &interference, Arm::DpsgdVanilla).unwrap();
        let design = designed.design.unwrap();
        assert_eq!(designed.experiment.slots_per_iter, design.tau);
        assert_eq!(
            vanilla.experiment.slots_per_iter,
            dpsgd.experiment.slots_per_iter
        );
        assert!(design.tau < vanilla.experiment.slots_per_iter);
        assert_eq!(dpsgd.experiment.algorithm, Algorithm::Dpsgd);
        assert_eq!(designed.experiment.problems, dpsgd.experiment.problems);
    }

    #[test]
    fn comparison_is_deterministic() {
        let mut cfg = ExperimentConfig::from_json(minimal()).unwrap();
        cfg.max_iters = 50;
        cfg.eta = Some(0.3);
        cfg.problem.noise_sigma = 0.1;
        let a = run_comparison(&cfg).unwrap();
        let b = run_comparison(&cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.arm, y.arm);
            assert_eq!(x.trace, y.trace);
        }
        assert_eq!(
            a.iter().map(|r| r.arm).collect::<Vec<_>>(),
            Arm::ALL.to_vec()
        );
    }
}
