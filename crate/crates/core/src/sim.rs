//! Stochastic gradient push and D-PSGD on synthetic decentralized
//! problems, with slot-accounted convergence traces.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixing::MixingMatrix;
use crate::theory::ProblemConstants;

/// Smooth local loss of one node.
#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    /// `½‖A x − b‖²`.
    Quadratic { a: DMatrix<f64>, b: DVector<f64> },
    /// Mean logistic loss over rows of `features` with ±1 `labels`, plus
    /// `reg/2 ‖x‖²`.
    Logistic {
        features: DMatrix<f64>,
        labels: DVector<f64>,
        reg: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalProblem {
    pub objective: Objective,
    /// Standard deviation of the additive gradient noise; `E‖ξ‖² = σ²`.
    pub noise_sigma: f64,
}

impl LocalProblem {
    pub fn dim(&self) -> usize {
        match &self.objective {
            Objective::Quadratic { a, .. } => a.ncols(),
            Objective::Logistic { features, .. } => features.ncols(),
        }
    }

    pub fn loss(&self, x: &DVector<f64>) -> f64 {
        match &self.objective {
            Objective::Quadratic { a, b } => 0.5 * (a * x - b).norm_squared(),
            Objective::Logistic {
                features,
                labels,
                reg,
            } => {
                let margins = features * x;
                let m = labels.len() as f64;
                let data: f64 = margins
                    .iter()
                    .zip(labels.iter())
                    .map(|(&z, &y)| softplus(-y * z))
                    .sum();
                data / m + 0.5 * reg * x.norm_squared()
            }
        }
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.objective {
            Objective::Quadratic { a, b } => a.tr_mul(&(a * x - b)),
            Objective::Logistic {
                features,
                labels,
                reg,
            } => {
                let margins = features * x;
                let m = labels.len() as f64;
                let weights = DVector::from_iterator(
                    labels.len(),
                    margins
                        .iter()
                        .zip(labels.iter())
                        .map(|(&z, &y)| -y * sigmoid(-y * z) / m),
                );
                features.tr_mul(&weights) + x * *reg
            }
        }
    }

    /// Gradient plus the noise drawn for `(seed, node, t)`.
    pub fn stochastic_grad(
        &self,
        x: &DVector<f64>,
        seed: u64,
        node: usize,
        t: usize,
    ) -> DVector<f64> {
        let mut g = self.grad(x);
        if self.noise_sigma > 0.0 {
            let mut rng = noise_rng(seed, node, t);
            let scale = self.noise_sigma / (g.len() as f64).sqrt();
            for v in g.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += scale * z;
            }
        }
        g
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream per `(seed, node, t)`, so evaluation order never
/// changes the draws.
fn noise_rng(seed: u64, node: usize, t: usize) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ node as u64) ^ t as u64);
    ChaCha8Rng::seed_from_u64(key)
}

/// Local problems of all nodes; the global loss is their mean.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSet {
    pub problems: Vec<LocalProblem>,
}

impl ProblemSet {
    pub fn new(problems: Vec<LocalProblem>) -> Result<Self> {
        let d = problems.first().map_or(0, LocalProblem::dim);
        if problems.is_empty() {
            return Err(Error::Domain("no local problems".into()));
        }
        if let Some(p) = problems.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
        Ok(ProblemSet { problems })
    }

    pub fn n(&self) -> usize {
        self.problems.len()
    }

    pub fn dim(&self) -> usize {
        self.problems[0].dim()
    }

    pub fn loss(&self, x: &DVector<f64>) -> f64 {
        self.problems.iter().map(|p| p.loss(x)).sum::<f64>() / self.n() as f64
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        for p in &self.problems {
            g += p.grad(x);
        }
        g / self.n() as f64
    }

    /// Closed-form minimizer of the mean quadratic loss.
    pub fn minimizer(&self) -> Result<DVector<f64>> {
        let d = self.dim();
        let mut h = DMatrix::zeros(d, d);
        let mut r = DVector::zeros(d);
        for p in &self.problems {
            match &p.objective {
                Objective::Quadratic { a, b } => {
                    h += a.tr_mul(a);
                    r += a.tr_mul(b);
                }
                Objective::Logistic { .. } => return Err(Error::UnsupportedProblem),
            }
        }
        h.lu()
            .solve(&r)
            .ok_or_else(|| Error::Domain("quadratic problem has no unique minimizer".into()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    #[default]
    Quadratic,
    Logistic,
}

/// Recipe for a reproducible synthetic problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub d: usize,
    pub noise_sigma: f64,
    /// Scale of the node-specific offsets that make local optima differ.
    pub heterogeneity: f64,
    /// Scale of per-node Hessian perturbations around the identity.
    pub hessian_spread: f64,
    /// Scale of the shared target.
    pub target_scale: f64,
    /// Samples per node for the logistic kind.
    pub samples: usize,
    pub reg: f64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec {
            kind: ProblemKind::Quadratic,
            d: 10,
            noise_sigma: 0.0,
            heterogeneity: 0.01,
            hessian_spread: 0.0,
            target_scale: 0.2,
            samples: 20,
            reg: 0.01,
        }
    }
}

impl ProblemSpec {
    pub fn generate(&self, n: usize, seed: u64) -> Result<ProblemSet> {
        if self.d == 0 || n == 0 {
            return Err(Error::Domain(
                "dimension and node count must be positive".into(),
            ));
        }
        if self.noise_sigma < 0.0 || self.heterogeneity < 0.0 || self.hessian_spread < 0.0 {
            return Err(Error::Domain("problem scales must be non-negative".into()));
        }
        let d = self.d;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gaussian = |len: usize, scale: f64| -> DVector<f64> {
            DVector::from_fn(len, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
        };
        let unit = 1.0 / (d as f64).sqrt();
        let shared = gaussian(d, self.target_scale * unit);
        let problems = match self.kind {
            ProblemKind::Quadratic => (0..n)
                .map(|_| {
                    let noise = gaussian(d * d, self.hessian_spread * unit);
                    let a = DMatrix::identity(d, d)
                        + DMatrix::from_column_slice(d, d, noise.as_slice());
                    let b = &shared + gaussian(d, self.heterogeneity * unit);
                    LocalProblem {
                        objective: Objective::Quadratic { a, b },
                        noise_sigma: self.noise_sigma,
                    }
                })
                .collect(),
            ProblemKind::Logistic => {
                if self.samples == 0 {
                    return Err(Error::Domain("logistic problems need samples".into()));
                }
                (0..n)
                    .map(|_| {
                        let truth = &shared + gaussian(d, self.heterogeneity * unit);
                        let cells = gaussian(self.samples * d, 1.0);
                        let features = DMatrix::from_row_slice(self.samples, d, cells.as_slice());
                        let labels =
                            (&features * &truth).map(|z| if z >= 0.0 { 1.0 } else { -1.0 });
                        LocalProblem {
                            objective: Objective::Logistic {
                                features,
                                labels,
                                reg: self.reg,
                            },
                            noise_sigma: self.noise_sigma,
                        }
                    })
                    .collect()
            }
        };
        ProblemSet::new(problems)
    }
}

/// Push-sum state: numerators `x_i` and weights `w_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SgpState {
    pub x: Vec<DVector<f64>>,
    pub w: Vec<f64>,
    pub t: usize,
}

impl SgpState {
    pub fn new(x0: Vec<DVector<f64>>) -> Self {
        let n = x0.len();
        SgpState {
            x: x0,
            w: vec![1.0; n],
            t: 0,
        }
    }

    pub fn average(&self) -> DVector<f64> {
        average(&self.x)
    }
}

pub fn average(x: &[DVector<f64>]) -> DVector<f64> {
    let mut s = DVector::zeros(x.first().map_or(0, DVector::len));
    for v in x {
        s += v;
    }
    s / x.len().max(1) as f64
}

/// De-biased parameters `z_i = x_i / w_i`.
pub fn debias(state: &SgpState) -> Result<Vec<DVector<f64>>> {
    state
        .x
        .iter()
        .zip(&state.w)
        .enumerate()
        .map(|(i, (x, &w))| {
            if w > 0.0 {
                Ok(x / w)
            } else {
                Err(Error::NonPositiveWeight { node: i, value: w })
            }
        })
        .collect()
}

/// Work above which per-node gradients are computed on the thread pool.
const PARALLEL_WORK: usize = 1 << 14;

/// Noisy local gradients at `points[j]`, node by node. The draws depend
/// only on `(seed, j, t)`, so both paths give identical results.
pub(crate) fn local_gradients(
    problems: &ProblemSet,
    points: &[DVector<f64>],
    seed: u64,
    t: usize,
    parallel: bool,
) -> Vec<DVector<f64>> {
    let eval = |(j, p): (usize, &LocalProblem)| p.stochastic_grad(&points[j], seed, j, t);
    if parallel {
        problems.problems.par_iter().enumerate().map(eval).collect()
    } else {
        problems.problems.iter().enumerate().map(eval).collect()
    }
}

fn check_dims(n: usize, d: usize, w_mat: &MixingMatrix, problems: &ProblemSet) -> Result<()> {
    if w_mat.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w_mat.n(),
        });
    }
    if problems.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: problems.n(),
        });
    }
    if problems.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: problems.dim(),
        });
    }
    Ok(())
}

/// One push-sum iteration: every node steps from its de-biased point,
/// then numerators and weights are mixed.
pub fn sgp_step(
    state: &SgpState,
    w_mat: &MixingMatrix,
    problems: &ProblemSet,
    eta: f64,
    seed: u64,
) -> Result<SgpState> {
    let n = state.x.len();
    let d = state.x.first().map_or(0, DVector::len);
    check_dims(n, d, w_mat, problems)?;
    if state.w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: state.w.len(),
        });
    }
    let z = debias(state)?;
    let grads = local_gradients(problems, &z, seed, state.t, n * d >= PARALLEL_WORK);
    let y: Vec<DVector<f64>> = state
        .x
        .iter()
        .zip(&grads)
        .map(|(x, g)| x - g * eta)
        .collect();
    Ok(SgpState {
        x: w_mat.mix(&y),
        w: w_mat.apply(&state.w),
        t: state.t + 1,
    })
}

/// One D-PSGD iteration with a symmetric doubly stochastic matrix.
pub fn dpsgd_step(
    x: &[DVector<f64>],
    t: usize,
    w_mat: &MixingMatrix,
    problems: &ProblemSet,
    eta: f64,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let asym = w_mat.asymmetry();
    if asym > 1e-12 {
        return Err(Error::AsymmetricInput(asym));
    }
    let n = x.len();
    let d = x.first().map_or(0, DVector::len);
    check_dims(n, d, w_mat, problems)?;
    let grads = local_gradients(problems, x, seed, t, n * d >= PARALLEL_WORK);
    let y: Vec<DVector<f64>> = x.iter().zip(&grads).map(|(x, g)| x - g * eta).collect();
    Ok(w_mat.mix(&y))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sgp,
    Dpsgd,
}

/// Everything needed to run one simulation.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub algorithm: Algorithm,
    pub mixing: MixingMatrix,
    pub slots_per_iter: usize,
    pub problems: ProblemSet,
    pub x0: Vec<DVector<f64>>,
    pub eta: f64,
    pub eps: f64,
    pub max_iters: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub slots: usize,
    pub grad_norm_sq: f64,
    pub running_avg_grad_norm_sq: f64,
    pub consensus_err: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub slots_per_iter: usize,
    pub records: Vec<TraceRecord>,
    /// Iterations needed for the running average to reach `ε`.
    pub converged_at: Option<usize>,
}

pub const TRACE_HEADER: &str =
    "iter,slots,grad_norm_sq,running_avg_grad_norm_sq,consensus_err,loss";

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn slots_to_converge(&self) -> Option<usize> {
        self.converged_at.map(|t| t * self.slots_per_iter)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(TRACE_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e}\n",
                r.iter,
                r.slots,
                r.grad_norm_sq,
                r.running_avg_grad_norm_sq,
                r.consensus_err,
                r.loss
            ));
        }
        s
    }
}

const DIVERGENCE_LOSS: f64 = 1e12;

/// Runs until the running average of `‖∇f(x̄_t)‖²` reaches `ε` or
/// `max_iters` iterations have been recorded.
pub fn run_experiment(exp: &Experiment) -> Result<Trace> {
    let n = exp.problems.n();
    if exp.x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: exp.x0.len(),
        });
    }
    if !(exp.eps > 0.0) {
        return Err(Error::Domain(format!(
            "epsilon must be positive, got {}",
            exp.eps
        )));
    }
    if !(exp.eta >= 0.0) {
        return Err(Error::Domain(format!(
            "step size must be non-negative, got {}",
            exp.eta
        )));
    }
    if let Some(s) = exp
        .mixing
        .column_sums()
        .iter()
        .find(|s| (*s - 1.0).abs() > 1e-9)
    {
        return Err(Error::Domain(format!(
            "mixing matrix has a column summing to {s}"
        )));
    }
    if exp.algorithm == Algorithm::Dpsgd {
        let asym = exp.mixing.asymmetry();
        if asym > 1e-12 {
            return Err(Error::AsymmetricInput(asym));
        }
    }

    let mut trace = Trace {
        slots_per_iter: exp.slots_per_iter,
        ..Trace::default()
    };
    let mut sgp = SgpState::new(exp.x0.clone());
    let mut sum = 0.0;
    for t in 0..exp.max_iters {
        let xbar = sgp.average();
        let points = match exp.algorithm {
            Algorithm::Sgp => debias(&sgp)?,
            Algorithm::Dpsgd => sgp.x.clone(),
        };
        let consensus_err = points
            .iter()
            .map(|p| (p - &xbar).norm())
            .fold(0.0, f64::max);
        let grad_norm_sq = exp.problems.grad(&xbar).norm_squared();
        let loss = exp.problems.loss(&xbar);
        sum += grad_norm_sq;
        let avg = sum / (t + 1) as f64;
        trace.records.push(TraceRecord {
            iter: t,
            slots: (t + 1) * exp.slots_per_iter,
            grad_norm_sq,
            running_avg_grad_norm_sq: avg,
            consensus_err,
            loss,
        });
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Diverged {
                iteration: t,
                loss,
                trace: Box::new(trace),
            });
        }
        if avg <= exp.eps {
            trace.converged_at = Some(t + 1);
            break;
        }
        sgp = match exp.algorithm {
            Algorithm::Sgp => sgp_step(&sgp, &exp.mixing, &exp.problems, exp.eta, exp.seed)?,
            Algorithm::Dpsgd => SgpState {
                x: dpsgd_step(&sgp.x, sgp.t, &exp.mixing, &exp.problems, exp.eta, exp.seed)?,
                w: sgp.w,
                t: sgp.t + 1,
            },
        };
    }
    Ok(trace)
}

/// Constants of a quadratic problem set: exact smoothness and optimum,
/// heterogeneity estimated as the largest dispersion seen at
/// `sample_points` random points around the optimum.
pub fn measure_constants<R: Rng>(
    problems: &ProblemSet,
    x0: &[DVector<f64>],
    sample_points: usize,
    rng: &mut R,
) -> Result<ProblemConstants> {
    let mut l: f64 = 0.0;
    for p in &problems.problems {
        match &p.objective {
            Objective::Quadratic { a, .. } => {
                let h = a.tr_mul(a);
                l = l.max(h.symmetric_eigenvalues().max());
            }
            Objective::Logistic { .. } => return Err(Error::UnsupportedProblem),
        }
    }
    let x_star = problems.minimizer()?;
    let d = problems.dim();
    let n = problems.n();
    let dispersion = |x: &DVector<f64>| {
        let g = problems.grad(x);
        problems
            .problems
            .iter()
            .map(|p| (p.grad(x) - &g).norm_squared())
            .sum::<f64>()
            / n as f64
    };
    let mut zeta2 = dispersion(&x_star);
    for _ in 0..sample_points {
        let x = &x_star
            + DVector::from_fn(d, |_, _| {
                let z: f64 = StandardNormal.sample(rng);
                z
            });
        zeta2 = zeta2.max(dispersion(&x));
    }
    let sigma2 = problems
        .problems
        .iter()
        .map(|p| p.noise_sigma * p.noise_sigma)
        .fold(0.0, f64::max);
    Ok(ProblemConstants {
        l,
        sigma2,
        zeta2,
        n,
        f0: problems.loss(&average(x0)),
        f_star: problems.loss(&x_star),
        x0_max_norm: x0.iter().map(DVector::norm).fold(0.0, f64::max),
    })
}
