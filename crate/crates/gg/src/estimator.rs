//! Monte Carlo estimators for braid-averaged invariants of sphere
//! isotopies.
//!
//! For an isotopy `f` and an `n`-point sample `x`, the pipeline value is
//! `q(gamma(f, x))` for a braid invariant `q`; averaging over uniform
//! `x` gives the estimate `Phi_n(f)`, and a difference quotient over a
//! power schedule gives the homogenized `PhiBar_n(f)`.
//!
//! Sampling is deterministic and embarrassingly parallel: sample `k`
//! draws from ChaCha stream `k + 1` of the experiment seed (stream 0 is
//! reserved for the shared basepoint tuple), so results are bitwise
//! reproducible at any worker count, and reusing one seed across related
//! runs pairs them through common random numbers.
//!
//! The truncating mode zeroes every sample with at least two points
//! outside the declared support: such samples trace braids with two free
//! strands, the stratum on which the modeled quasimorphism family
//! vanishes identically. Estimates record the mode because the truncated
//! and raw estimators are genuinely different functionals.

use crate::braid::{is_probably_reducible, DEFAULT_ENTROPY_ITERS};
use crate::dynamics::{DiffeoTrace, DynamicsError};
use crate::quasimorphism::{QuasimorphismError, QuasimorphismSpec};
use crate::sphere::{uniform_sample, ConfigTuple, SpherePoint, SphericalCap, DELTA_COLLISION};
use crate::trace::{
    braid_positions, build_loops, default_pole, extract_braid, gamma, suggested_time_steps,
    TraceError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Degenerate-draw attempts per sample before the run is abandoned.
pub const MAX_SAMPLE_RETRIES: usize = 64;

/// Retry fraction above which an estimate carries a warning.
pub const RETRY_WARNING_FRACTION: f64 = 0.01;

/// Basepoints double as loop anchors near the projection; keep them clear
/// of the pole by this chordal margin.
const BASEPOINT_POLE_CLEARANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("truncation or a synthetic observable requires a support cap")]
    NoSupportDeclared,
    #[error("stratified sampling requires truncation and exactly one support cap")]
    StratifiedUnsupported,
    #[error("power schedule must contain at least two strictly increasing entries")]
    BadSchedule,
    #[error("sample {sample} stayed degenerate after {MAX_SAMPLE_RETRIES} retries")]
    RetriesExhausted { sample: usize },
    #[error("could not draw a valid basepoint tuple")]
    BasepointRejected,
    #[error("scaling fit needs at least 3 distinct epsilon values")]
    IllConditionedFit,
    #[error("support caps overlap or touch (gap {gap:.4})")]
    SupportsOverlap { gap: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Quasimorphism(#[from] QuasimorphismError),
}

/// Whether samples on the structurally-vanishing stratum are zeroed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    None,
    EnforceReducibleVanishing,
}

impl TruncationMode {
    fn enforced(self) -> bool {
        matches!(self, TruncationMode::EnforceReducibleVanishing)
    }
}

/// How configuration tuples are drawn.
///
/// `Stratified` splits the sample budget between the all-inside and
/// one-outside strata of a single support cap and recombines with the
/// exact binomial stratum probabilities. Under truncation the remaining
/// strata contribute exactly zero, so the estimand is unchanged while the
/// variance stops being dominated by the tiny stratum probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Uniform,
    Stratified,
}

/// Per-sample functional fed to the Monte Carlo average.
///
/// `Braid` runs the full pipeline (trace loops, extract, evaluate).
/// `Synthetic` replaces it with a closed-form stand-in depending only on
/// how many sample points lie in the support: `all_inside` when every
/// point is covered, `one_outside` when exactly one is not, zero
/// otherwise, scaled by the power so that homogenization passes through
/// unchanged. Its expectation is analytically integrable, which makes it
/// the calibration target for the scaling fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    Braid(QuasimorphismSpec),
    Synthetic { all_inside: f64, one_outside: f64 },
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Braid(q) => write!(f, "{q}"),
            Observable::Synthetic {
                all_inside,
                one_outside,
            } => write!(f, "synthetic({all_inside},{one_outside})"),
        }
    }
}

/// One Monte Carlo estimate with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GGEstimate {
    pub value: f64,
    /// Sample standard deviation over sqrt(sample count).
    pub stderr: f64,
    pub samples: usize,
    pub n: usize,
    pub observable: String,
    pub truncation: TruncationMode,
    pub sampling: Sampling,
    pub seed: u64,
    /// Degenerate draws that were resampled.
    pub retries: usize,
    pub warnings: Vec<String>,
}

/// Optional knobs shared by the estimate entry points.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Projection pole override; default is derived from the support.
    pub pole: Option<SpherePoint>,
    /// Draw the basepoint tuple outside the support caps.
    pub basepoint_outside_support: bool,
}

enum Failure {
    Retry,
    Fatal(EstimatorError),
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Dynamics(d) => Failure::Fatal(EstimatorError::Dynamics(d)),
            _ => Failure::Retry,
        }
    }
}

struct PowerRun {
    power: u32,
    trace: DiffeoTrace,
    steps: usize,
}

/// Everything fixed across the samples of one estimate.
struct Plan {
    runs: Vec<PowerRun>,
    weights: Vec<f64>,
    observable: Observable,
    caps: Vec<SphericalCap>,
    enforce: bool,
    pole: SpherePoint,
    z: ConfigTuple,
    n: usize,
}

fn outside_count(caps: &[SphericalCap], x: &ConfigTuple) -> usize {
    x.points()
        .iter()
        .filter(|p| !caps.iter().any(|c| c.contains(p)))
        .count()
}

impl Plan {
    fn build(
        f: &DiffeoTrace,
        observable: &Observable,
        n: usize,
        powers: &[u32],
        weights: Vec<f64>,
        mode: TruncationMode,
        opts: &RunOptions,
        seed: u64,
    ) -> Result<Plan, EstimatorError> {
        assert!(n >= 2, "configuration tuples need at least two points");
        let caps = f.support_caps();
        let needs_caps = mode.enforced() || matches!(observable, Observable::Synthetic { .. });
        if needs_caps && caps.is_empty() {
            return Err(EstimatorError::NoSupportDeclared);
        }
        let pole = opts.pole.unwrap_or_else(|| default_pole(f));
        let avoid: &[SphericalCap] = if opts.basepoint_outside_support {
            &caps
        } else {
            &[]
        };
        let z = draw_basepoint(seed, n, &pole, avoid)?;
        let runs = powers
            .iter()
            .map(|&p| {
                let trace = f.power(p);
                let steps = suggested_time_steps(trace.leg_count());
                PowerRun {
                    power: p,
                    trace,
                    steps,
                }
            })
            .collect();
        Ok(Plan {
            runs,
            weights,
            observable: observable.clone(),
            caps,
            enforce: mode.enforced(),
            pole,
            z,
            n,
        })
    }

    fn evaluate(&self, x: &ConfigTuple) -> Result<f64, Failure> {
        let outside = outside_count(&self.caps, x);
        if self.enforce && outside >= 2 {
            return Ok(0.0);
        }
        match &self.observable {
            Observable::Synthetic {
                all_inside,
                one_outside,
            } => {
                let base = match outside {
                    0 => *all_inside,
                    1 => *one_outside,
                    _ => 0.0,
                };
                Ok(self
                    .runs
                    .iter()
                    .zip(&self.weights)
                    .map(|(r, w)| w * f64::from(r.power) * base)
                    .sum())
            }
            Observable::Braid(q) => {
                let mut acc = 0.0;
                for (run, w) in self.runs.iter().zip(&self.weights) {
                    let word = gamma(&run.trace, x, &self.z, &self.pole, run.steps)?;
                    let v = q.evaluate_f64(&word).map_err(|e| {
                        Failure::Fatal(EstimatorError::Quasimorphism(e))
                    })?;
                    acc += w * v;
                }
                Ok(acc)
            }
        }
    }
}

enum Draw {
    Uniform,
    /// `outside` points from the cap complement, the rest from the cap.
    CapStratum { cap: SphericalCap, outside: usize },
}

impl Draw {
    fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> Result<ConfigTuple, Failure> {
        match self {
            Draw::Uniform => uniform_sample(rng, n, DELTA_COLLISION).map_err(|_| Failure::Retry),
            Draw::CapStratum { cap, outside } => {
                debug_assert!(*outside <= 1);
                let out_idx = if *outside == 1 {
                    Some(rng.random_range(0..n))
                } else {
                    None
                };
                let complement = cap.complement();
                let points = (0..n)
                    .map(|i| {
                        if Some(i) == out_idx {
                            complement.sample_uniform(rng)
                        } else {
                            cap.sample_uniform(rng)
                        }
                    })
                    .collect();
                ConfigTuple::new(points, DELTA_COLLISION).map_err(|_| Failure::Retry)
            }
        }
    }
}

/// Runs `count` samples on streams `stream_base + 1 ..= stream_base + count`
/// and returns the per-sample values in index order plus the total retry
/// count. Parallel over samples, deterministic in the seed alone.
fn mc_values(
    plan: &Plan,
    draw: &Draw,
    count: usize,
    seed: u64,
    stream_base: u64,
) -> Result<(Vec<f64>, usize), EstimatorError> {
    let results: Vec<(f64, usize)> = (0..count)
        .into_par_iter()
        .map(|k| -> Result<(f64, usize), EstimatorError> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base + k as u64 + 1);
            let mut retries = 0usize;
            while retries < MAX_SAMPLE_RETRIES {
                let x = match draw.sample(&mut rng, plan.n) {
                    Ok(x) => x,
                    Err(Failure::Retry) => {
                        retries += 1;
                        continue;
                    }
                    Err(Failure::Fatal(e)) => return Err(e),
                };
                match plan.evaluate(&x) {
                    Ok(v) => return Ok((v, retries)),
                    Err(Failure::Retry) => retries += 1,
                    Err(Failure::Fatal(e)) => return Err(e),
                }
            }
            Err(EstimatorError::RetriesExhausted { sample: k })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let retries = results.iter().map(|r| r.1).sum();
    Ok((results.into_iter().map(|r| r.0).collect(), retries))
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// The shared basepoint tuple of an experiment: ChaCha stream 0 of the
/// seed, rejecting tuples that sit on the projection pole or (when
/// `avoid` is nonempty) touch a support cap.
pub fn draw_basepoint(
    seed: u64,
    n: usize,
    pole: &SpherePoint,
    avoid: &[SphericalCap],
) -> Result<ConfigTuple, EstimatorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    for _ in 0..10_000 {
        let Ok(z) = uniform_sample(&mut rng, n, DELTA_COLLISION) else {
            continue;
        };
        let near_pole = z
            .points()
            .iter()
            .any(|p| p.chordal_distance(pole) < BASEPOINT_POLE_CLEARANCE);
        let in_support = z
            .points()
            .iter()
            .any(|p| avoid.iter().any(|c| c.contains(p)));
        if !near_pole && !in_support {
            return Ok(z);
        }
    }
    Err(EstimatorError::BasepointRejected)
}

fn finish(
    value: f64,
    stderr: f64,
    samples: usize,
    n: usize,
    observable: &Observable,
    mode: TruncationMode,
    sampling: Sampling,
    seed: u64,
    retries: usize,
) -> GGEstimate {
    let mut warnings = Vec::new();
    if n < 4 {
        warnings.push(format!(
            "n = {n} is a debugging regime; the structural vanishing argument wants n >= 4"
        ));
    }
    if retries as f64 > RETRY_WARNING_FRACTION * samples as f64 {
        warnings.push(format!(
            "{retries} degenerate-sample retries exceed {:.0}% of {samples} samples",
            RETRY_WARNING_FRACTION * 100.0
        ));
    }
    GGEstimate {
        value,
        stderr,
        samples,
        n,
        observable: observable.to_string(),
        truncation: mode,
        sampling,
        seed,
        retries,
        warnings,
    }
}

/// Dispatches a plan over the sampling scheme and reduces to an estimate.
fn run_plan(
    plan: &Plan,
    samples: usize,
    sampling: Sampling,
    mode: TruncationMode,
    seed: u64,
) -> Result<GGEstimate, EstimatorError> {
    assert!(samples >= 1, "need at least one sample");
    match sampling {
        Sampling::Uniform => {
            let (values, retries) = mc_values(plan, &Draw::Uniform, samples, seed, 0)?;
            let (mean, se) = mean_stderr(&values);
            Ok(finish(
                mean, se, samples, plan.n, &plan.observable, mode, sampling, seed, retries,
            ))
        }
        Sampling::Stratified => {
            if !plan.enforce || plan.caps.len() != 1 {
                return Err(EstimatorError::StratifiedUnsupported);
            }
            let cap = plan.caps[0];
            let a = cap.area();
            let n = plan.n;
            let p_all = a.powi(n as i32);
            let p_one = n as f64 * a.powi(n as i32 - 1) * (1.0 - a);
            let n_all = samples / 2;
            let n_one = samples - n_all;
            let (v_all, r_all) = mc_values(
                plan,
                &Draw::CapStratum { cap, outside: 0 },
                n_all,
                seed,
                0,
            )?;
            let (v_one, r_one) = mc_values(
                plan,
                &Draw::CapStratum { cap, outside: 1 },
                n_one,
                seed,
                n_all as u64,
            )?;
            let (m_all, se_all) = mean_stderr(&v_all);
            let (m_one, se_one) = mean_stderr(&v_one);
            let value = p_all * m_all + p_one * m_one;
            let stderr = (p_all * p_all * se_all * se_all + p_one * p_one * se_one * se_one)
                .sqrt();
            Ok(finish(
                value,
                stderr,
                samples,
                n,
                &plan.observable,
                mode,
                sampling,
                seed,
                r_all + r_one,
            ))
        }
    }
}

/// Monte Carlo mean of the per-sample observable for `f` itself.
pub fn estimate_phi(
    f: &DiffeoTrace,
    observable: &Observable,
    n: usize,
    samples: usize,
    mode: TruncationMode,
    seed: u64,
) -> Result<GGEstimate, EstimatorError> {
    estimate_phi_with(
        f,
        observable,
        n,
        samples,
        mode,
        Sampling::Uniform,
        &RunOptions::default(),
        seed,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_phi_with(
    f: &DiffeoTrace,
    observable: &Observable,
    n: usize,
    samples: usize,
    mode: TruncationMode,
    sampling: Sampling,
    opts: &RunOptions,
    seed: u64,
) -> Result<GGEstimate, EstimatorError> {
    let plan = Plan::build(f, observable, n, &[1], vec![1.0], mode, opts, seed)?;
    run_plan(&plan, samples, sampling, mode, seed)
}

/// Homogenized estimate: the difference quotient of the observable
/// between the two largest schedule powers, sample by sample, so the
/// powers share their random numbers.
pub fn estimate_phi_bar(
    f: &DiffeoTrace,
    observable: &Observable,
    n: usize,
    samples: usize,
    schedule: &[u32],
    mode: TruncationMode,
    seed: u64,
) -> Result<GGEstimate, EstimatorError> {
    estimate_phi_bar_with(
        f,
        observable,
        n,
        samples,
        schedule,
        mode,
        Sampling::Uniform,
        &RunOptions::default(),
        seed,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_phi_bar_with(
    f: &DiffeoTrace,
    observable: &Observable,
    n: usize,
    samples: usize,
    schedule: &[u32],
    mode: TruncationMode,
    sampling: Sampling,
    opts: &RunOptions,
    seed: u64,
) -> Result<GGEstimate, EstimatorError> {
    if schedule.len() < 2 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EstimatorError::BadSchedule);
    }
    let p1 = schedule[schedule.len() - 2];
    let p2 = schedule[schedule.len() - 1];
    let d = f64::from(p2 - p1);
    let plan = Plan::build(
        f,
        observable,
        n,
        &[p1, p2],
        vec![-1.0 / d, 1.0 / d],
        mode,
        opts,
        seed,
    )?;
    run_plan(&plan, samples, sampling, mode, seed)
}

/// Structural audit of the vanishing stratum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VanishingReport {
    /// Samples with at least two points outside the support.
    pub considered: usize,
    /// Samples with fewer than two points outside (not in the stratum).
    pub excluded: usize,
    /// Considered samples whose outside-strand sub-braid did not vanish.
    pub delete_violations: usize,
    /// Considered samples flagged reducible-or-periodic.
    pub flagged: usize,
    pub flagged_fraction: f64,
    /// Mean |observable| over considered braids: the raw invariant need
    /// not vanish on the stratum, which is what truncation is for.
    pub mean_abs_value: f64,
    pub retries: usize,
}

/// Audits `samples` uniform draws of the vanishing stratum: every sample
/// with at least two points outside the support must have a trivial
/// outside-strand sub-braid, and the reducibility heuristic should flag
/// it. The basepoint is drawn outside the support so outside strands are
/// genuinely untouched loops.
pub fn vanishing_experiment(
    f: &DiffeoTrace,
    q: &QuasimorphismSpec,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<VanishingReport, EstimatorError> {
    assert!(n >= 3, "the reducibility heuristic needs n >= 3");
    let caps = f.support_caps();
    if caps.is_empty() {
        return Err(EstimatorError::NoSupportDeclared);
    }
    let pole = default_pole(f);
    let z = draw_basepoint(seed, n, &pole, &caps)?;
    let steps = suggested_time_steps(f.leg_count());

    enum Outcome {
        Excluded,
        Considered {
            violation: bool,
            flagged: bool,
            abs_value: f64,
        },
    }

    let results: Vec<(Outcome, usize)> = (0..samples)
        .into_par_iter()
        .map(|k| -> Result<(Outcome, usize), EstimatorError> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64 + 1);
            let mut retries = 0usize;
            while retries < MAX_SAMPLE_RETRIES {
                let Ok(x) = uniform_sample(&mut rng, n, DELTA_COLLISION) else {
                    retries += 1;
                    continue;
                };
                let outside: Vec<usize> = (0..n)
                    .filter(|&i| !caps.iter().any(|c| c.contains(x.point(i))))
                    .collect();
                if outside.len() < 2 {
                    return Ok((Outcome::Excluded, retries));
                }
                let loops = match build_loops(f, &x, &z) {
                    Ok(l) => l,
                    Err(TraceError::Dynamics(d)) => return Err(d.into()),
                    Err(_) => {
                        retries += 1;
                        continue;
                    }
                };
                let rank = match braid_positions(&loops, &pole) {
                    Ok(r) => r,
                    Err(_) => {
                        retries += 1;
                        continue;
                    }
                };
                let word = match extract_braid(&loops, &pole, steps) {
                    Ok(w) => w,
                    Err(TraceError::Dynamics(d)) => return Err(d.into()),
                    Err(_) => {
                        retries += 1;
                        continue;
                    }
                };
                let keep: Vec<usize> = outside.iter().map(|&i| rank[i]).collect();
                let violation = !word.delete_strands(&keep).reduced().is_empty();
                let flagged = is_probably_reducible(&word, DEFAULT_ENTROPY_ITERS).flagged;
                let abs_value = q.evaluate_f64(&word)?.abs();
                return Ok((
                    Outcome::Considered {
                        violation,
                        flagged,
                        abs_value,
                    },
                    retries,
                ));
            }
            Err(EstimatorError::RetriesExhausted { sample: k })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = VanishingReport {
        considered: 0,
        excluded: 0,
        delete_violations: 0,
        flagged: 0,
        flagged_fraction: 0.0,
        mean_abs_value: 0.0,
        retries: 0,
    };
    for (outcome, retries) in results {
        report.retries += retries;
        match outcome {
            Outcome::Excluded => report.excluded += 1,
            Outcome::Considered {
                violation,
                flagged,
                abs_value,
            } => {
                report.considered += 1;
                report.delete_violations += usize::from(violation);
                report.flagged += usize::from(flagged);
                report.mean_abs_value += abs_value;
            }
        }
    }
    if report.considered > 0 {
        report.flagged_fraction = report.flagged as f64 / report.considered as f64;
        report.mean_abs_value /= report.considered as f64;
    }
    Ok(report)
}

/// One grid cell of a support-shrinking experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCell {
    pub epsilon: f64,
    pub phibar: f64,
    pub stderr: f64,
    pub fitted_model_value: f64,
    pub residual: f64,
}

/// Weighted least-squares fit of the support-shrinking model
/// `phibar(eps) = eps^n A + n eps^(n-1) (1 - eps a) B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub n: usize,
    /// Total support area at eps = 1.
    pub area: f64,
    pub cells: Vec<ScalingCell>,
    pub coeff_a: f64,
    pub coeff_b: f64,
    pub err_a: f64,
    pub err_b: f64,
    /// L2 residual relative to the L2 size of the estimates.
    pub residual_norm: f64,
}

impl ScalingFit {
    pub fn model_value(n: usize, area: f64, coeff_a: f64, coeff_b: f64, eps: f64) -> f64 {
        let k = n as i32;
        eps.powi(k) * coeff_a + n as f64 * eps.powi(k - 1) * (1.0 - eps * area) * coeff_b
    }

    /// CSV rows of the grid, one line per epsilon.
    pub fn csv(&self) -> String {
        let mut out = String::from("epsilon,phibar,stderr,fitted_model_value,residual\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.epsilon, c.phibar, c.stderr, c.fitted_model_value, c.residual
            ));
        }
        out
    }
}

/// Fits (A, B) to estimate triples `(epsilon, value, stderr)` by weighted
/// least squares in the exact two-parameter model. Weights are inverse
/// variances with a tiny floor so exactly-resolved cells stay finite.
pub fn fit_scaling_model(
    n: usize,
    area: f64,
    points: &[(f64, f64, f64)],
) -> Result<ScalingFit, EstimatorError> {
    let mut eps_seen: Vec<f64> = Vec::new();
    for &(e, _, _) in points {
        if !eps_seen.iter().any(|&x| x == e) {
            eps_seen.push(e);
        }
    }
    if eps_seen.len() < 3 {
        return Err(EstimatorError::IllConditionedFit);
    }
    let scale = points
        .iter()
        .map(|p| p.1.abs())
        .fold(1.0f64, f64::max);
    let floor = 1e-12 * scale;
    let k = n as i32;
    let basis = |e: f64| (e.powi(k), n as f64 * e.powi(k - 1) * (1.0 - e * area));
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(e, y, se) in points {
        let w = 1.0 / (se * se + floor * floor);
        let (g1, g2) = basis(e);
        s11 += w * g1 * g1;
        s12 += w * g1 * g2;
        s22 += w * g2 * g2;
        b1 += w * g1 * y;
        b2 += w * g2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-12 * s11.abs().max(s22.abs()).powi(2) {
        return Err(EstimatorError::IllConditionedFit);
    }
    let coeff_a = (s22 * b1 - s12 * b2) / det;
    let coeff_b = (s11 * b2 - s12 * b1) / det;
    let err_a = (s22 / det).max(0.0).sqrt();
    let err_b = (s11 / det).max(0.0).sqrt();
    let mut rr = 0.0;
    let mut yy = 0.0;
    let cells: Vec<ScalingCell> = points
        .iter()
        .map(|&(e, y, se)| {
            let fitted = ScalingFit::model_value(n, area, coeff_a, coeff_b, e);
            let residual = y - fitted;
            rr += residual * residual;
            yy += y * y;
            ScalingCell {
                epsilon: e,
                phibar: y,
                stderr: se,
                fitted_model_value: fitted,
                residual,
            }
        })
        .collect();
    Ok(ScalingFit {
        n,
        area,
        cells,
        coeff_a,
        coeff_b,
        err_a,
        err_b,
        residual_norm: rr.sqrt() / yy.sqrt().max(f64::MIN_POSITIVE),
    })
}

/// Homogenized estimates across a support-shrinking grid, one per ratio,
/// all cells on the same seed (common random numbers). Truncation is
/// forced on, since shrinking only has the modeled effect on the
/// truncated functional.
#[allow(clippy::too_many_arguments)]
pub fn scaling_estimates(
    f: &DiffeoTrace,
    observable: &Observable,
    n: usize,
    eps_grid: &[f64],
    samples: usize,
    schedule: &[u32],
    sampling: Sampling,
    seed: u64,
) -> Result<Vec<(f64, GGEstimate)>, EstimatorError> {
    if f.support_caps().is_empty() {
        return Err(EstimatorError::NoSupportDeclared);
    }
    let mut out = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        assert!(eps > 0.0 && eps <= 1.0, "epsilon must lie in (0, 1]");
        let f_eps = f.rescale_support(eps)?;
        let est = estimate_phi_bar_with(
            &f_eps,
            observable,
            n,
            samples,
            schedule,
            TruncationMode::EnforceReducibleVanishing,
            sampling,
            &RunOptions::default(),
            seed,
        )?;
        out.push((eps, est));
    }
    Ok(out)
}

/// Estimates the homogenized observable across a support-shrinking grid
/// and fits the scaling model. The grid needs at least three distinct
/// ratios.
#[allow(clippy::too_many_arguments)]
pub fn scaling_experiment(
    f: &DiffeoTrace,
    observable: &Observable,
    n: usize,
    eps_grid: &[f64],
    samples: usize,
    schedule: &[u32],
    sampling: Sampling,
    seed: u64,
) -> Result<ScalingFit, EstimatorError> {
    let area: f64 = f.support_caps().iter().map(|c| c.area()).sum();
    let cells = scaling_estimates(f, observable, n, eps_grid, samples, schedule, sampling, seed)?;
    let points: Vec<(f64, f64, f64)> = cells
        .iter()
        .map(|(eps, est)| (*eps, est.value, est.stderr))
        .collect();
    fit_scaling_model(n, area, &points)
}

/// Paired check that the homogenized observable adds across disjointly
/// supported factors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdditivityReport {
    pub composed: GGEstimate,
    pub first: GGEstimate,
    pub second: GGEstimate,
    pub gap: f64,
    pub combined_stderr: f64,
    pub within_tolerance: bool,
}

/// Estimates `PhiBar(f1 f2) - PhiBar(f1) - PhiBar(f2)` with one seed,
/// one basepoint, and one projection pole across all three runs, and
/// compares the gap against three combined standard errors. A factor
/// with no declared support (an identity filler) is estimated without
/// truncation and imposes no disjointness constraint.
#[allow(clippy::too_many_arguments)]
pub fn additivity_experiment(
    f1: &DiffeoTrace,
    f2: &DiffeoTrace,
    observable: &Observable,
    n: usize,
    samples: usize,
    schedule: &[u32],
    seed: u64,
) -> Result<AdditivityReport, EstimatorError> {
    let caps1 = f1.support_caps();
    let caps2 = f2.support_caps();
    let gap = caps1
        .iter()
        .flat_map(|a| caps2.iter().map(move |b| a.gap_to(b)))
        .fold(f64::INFINITY, f64::min);
    if gap <= 0.0 {
        return Err(EstimatorError::SupportsOverlap { gap });
    }
    let composite = f1.then(f2);
    // One pole chosen for the union keeps the three runs comparable and
    // their random numbers common.
    let opts = RunOptions {
        pole: Some(default_pole(&composite)),
        basepoint_outside_support: false,
    };
    let run = |f: &DiffeoTrace| {
        let mode = if f.support_caps().is_empty() {
            TruncationMode::None
        } else {
            TruncationMode::EnforceReducibleVanishing
        };
        estimate_phi_bar_with(
            f,
            observable,
            n,
            samples,
            schedule,
            mode,
            Sampling::Uniform,
            &opts,
            seed,
        )
    };
    let composed = run(&composite)?;
    let first = run(f1)?;
    let second = run(f2)?;
    let gap_value = (composed.value - first.value - second.value).abs();
    let combined = (composed.stderr * composed.stderr
        + first.stderr * first.stderr
        + second.stderr * second.stderr)
        .sqrt();
    Ok(AdditivityReport {
        within_tolerance: gap_value <= 3.0 * combined,
        gap: gap_value,
        combined_stderr: combined,
        composed,
        first,
        second,
    })
}
