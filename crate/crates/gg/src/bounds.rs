//! Entropy-norm bound certificates for lattice words in disjointly
//! supported twists.
//!
//! An embedding places `m` congruent twist generators on pairwise
//! disjoint caps; a lattice vector `k` selects the composition
//! `J(k) = f_1^{k_1} ... f_m^{k_m}`. Because every factor is the time-1
//! map of an autonomous flow, spelling `J(k)` letter by letter certifies
//! the upper bound `|k|_1` on its word norm in entropy-zero generators.
//! The lower bound divides quasimorphism values by defect bounds:
//! `|q(g)| <= D ||g||` for a homogeneous quasimorphism vanishing on the
//! generating set, so `|q(J(k))| / D` is a norm lower bound.
//!
//! Composite functional values are predicted from per-generator
//! estimates by additivity across disjoint supports, which keeps every
//! certificate formula exactly linear under integer scalings of `k`. The
//! defects are sampled maxima, lower bounds for the true defects, so the
//! quotient bounds are heuristic in the upward direction; each
//! certificate spells out its assumptions.

use crate::dynamics::{compose, twist_strength_for_rotation, DiffeoTrace, DynamicsError,
    HamiltonianSystem};
use crate::estimator::{
    estimate_phi_bar, EstimatorError, GGEstimate, Observable, TruncationMode,
};
use crate::quasimorphism::{empirical_defect, random_word, QuasimorphismError, QuasimorphismSpec};
use crate::sphere::{fibonacci_points, SpherePoint, SphericalCap};
use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Minimum geodesic gap between placed support caps.
pub const DEFAULT_PLACEMENT_MARGIN: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("cannot place {m} disjoint caps of area {area} (need area < 1/m and margin {DEFAULT_PLACEMENT_MARGIN})")]
    PlacementFailed { m: usize, area: f64 },
    #[error("lattice vector has length {got}, embedding has {expected} generators")]
    BadDimension { expected: usize, got: usize },
    #[error("estimate table row {row} has {got} entries, embedding has {expected} generators")]
    MissingEstimate { row: usize, expected: usize, got: usize },
    #[error("defect lower bound for row {row} is negative")]
    NegativeDefect { row: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Quasimorphism(#[from] QuasimorphismError),
}

/// A family of `m` disjointly supported twist generators, each conjugate
/// to one reference twist by a rotation.
#[derive(Debug, Clone)]
pub struct EmbeddingSpec {
    m: usize,
    cap_area: f64,
    turns: f64,
    step: f64,
    systems: Vec<HamiltonianSystem>,
    caps: Vec<SphericalCap>,
    /// Smallest geodesic gap between distinct caps; absent for m = 1.
    margin: Option<f64>,
    quasimorphisms: Vec<QuasimorphismSpec>,
}

fn rotation_taking_north_to(center: &SpherePoint) -> Rotation3<f64> {
    Rotation3::rotation_between(&Vector3::z(), &center.vec()).unwrap_or_else(|| {
        Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::x()), PI)
    })
}

/// Places `m` caps of the given area on golden-spiral centers and fills
/// them with rotated copies of one positive twist making `turns` full
/// rotations at the reference radius. Fails if the area budget `1/m` or
/// the pairwise disjointness margin cannot be met.
pub fn build_embedding(
    m: usize,
    cap_area: f64,
    turns: f64,
    step: f64,
) -> Result<EmbeddingSpec, BoundsError> {
    assert!(m >= 1, "an embedding needs at least one generator");
    assert!(cap_area > 0.0, "cap area must be positive");
    if cap_area >= 1.0 / m as f64 {
        return Err(BoundsError::PlacementFailed { m, area: cap_area });
    }
    let centers = fibonacci_points(m);
    let caps: Vec<SphericalCap> = centers
        .iter()
        .map(|c| SphericalCap::new(*c, cap_area))
        .collect();
    let mut margin = None;
    for i in 0..m {
        for j in (i + 1)..m {
            let gap = caps[i].gap_to(&caps[j]);
            if gap < DEFAULT_PLACEMENT_MARGIN {
                return Err(BoundsError::PlacementFailed { m, area: cap_area });
            }
            margin = Some(margin.map_or(gap, |g: f64| g.min(gap)));
        }
    }
    let north_cap = SphericalCap::new(SpherePoint::from_coords(0.0, 0.0, 1.0), cap_area);
    let strength = twist_strength_for_rotation(&north_cap, 0.3, TAU * turns);
    let reference = HamiltonianSystem::twist_map(north_cap, strength);
    let systems = centers
        .iter()
        .map(|c| reference.conjugate_by_rotation(&rotation_taking_north_to(c)))
        .collect();
    Ok(EmbeddingSpec {
        m,
        cap_area,
        turns,
        step,
        systems,
        caps,
        margin,
        quasimorphisms: vec![QuasimorphismSpec::Signature; m],
    })
}

impl EmbeddingSpec {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn caps(&self) -> &[SphericalCap] {
        self.caps
            .as_slice()
    }

    pub fn margin(&self) -> Option<f64> {
        self.margin
    }

    pub fn quasimorphisms(&self) -> &[QuasimorphismSpec] {
        &self.quasimorphisms
    }

    /// Swaps the functional attached to each row; the list length must
    /// equal the generator count.
    pub fn with_quasimorphisms(mut self, q: Vec<QuasimorphismSpec>) -> EmbeddingSpec {
        assert_eq!(q.len(), self.m, "one functional per generator");
        self.quasimorphisms = q;
        self
    }

    /// The `i`-th generator as a single-factor trace.
    pub fn generator(&self, i: usize) -> Result<DiffeoTrace, BoundsError> {
        Ok(compose(&[self.systems[i].clone()], &[1], self.step)?)
    }

    /// SHA-256 over the placement and generator parameters; ties
    /// certificates to the embedding that produced them.
    pub fn config_digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.m.to_le_bytes());
        h.update(self.cap_area.to_le_bytes());
        h.update(self.turns.to_le_bytes());
        h.update(self.step.to_le_bytes());
        for q in &self.quasimorphisms {
            h.update(q.to_string().as_bytes());
        }
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Composes the embedding generators with the exponents in `k`.
pub fn evaluate_j(spec: &EmbeddingSpec, k: &[i64]) -> Result<DiffeoTrace, BoundsError> {
    if k.len() != spec.m {
        return Err(BoundsError::BadDimension {
            expected: spec.m,
            got: k.len(),
        });
    }
    let mut systems = Vec::new();
    let mut exps = Vec::new();
    for (sys, &ki) in spec.systems.iter().zip(k) {
        if ki != 0 {
            systems.push(sys.clone());
            exps.push(ki);
        }
    }
    if systems.is_empty() {
        systems.push(HamiltonianSystem::Constant { value: 0.0 });
        exps.push(1);
    }
    Ok(compose(&systems, &exps, spec.step)?)
}

/// Measured inputs for one certificate row: a functional, its value on
/// every generator, and a sampled defect lower bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorRow {
    pub quasimorphism: String,
    /// Homogenized estimate of this functional on each generator, in
    /// generator order.
    pub on_generators: Vec<GGEstimate>,
    /// Largest additivity violation found while sampling word pairs; a
    /// lower bound for the true defect, exactly zero for homomorphisms.
    pub defect_lower_bound: f64,
    pub defect_trials: usize,
}

/// Estimates the full functional-by-generator value matrix and samples
/// per-row defect bounds. All estimates share the seed, so rows are
/// paired through common random numbers.
pub fn measure_generator_rows(
    spec: &EmbeddingSpec,
    n: usize,
    samples: usize,
    schedule: &[u32],
    defect_trials: usize,
    seed: u64,
) -> Result<Vec<GeneratorRow>, BoundsError> {
    let mut rows = Vec::with_capacity(spec.m);
    for (i, q) in spec.quasimorphisms.iter().enumerate() {
        let mut on_generators = Vec::with_capacity(spec.m);
        for j in 0..spec.m {
            let g = spec.generator(j)?;
            let est = estimate_phi_bar(
                &g,
                &Observable::Braid(q.clone()),
                n,
                samples,
                schedule,
                TruncationMode::EnforceReducibleVanishing,
                seed,
            )?;
            on_generators.push(est);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX - i as u64);
        let defect = empirical_defect(q, defect_trials, || {
            let len_u = rng.random_range(4..=16);
            let len_v = rng.random_range(4..=16);
            (
                random_word(&mut rng, n, len_u),
                random_word(&mut rng, n, len_v),
            )
        })?;
        rows.push(GeneratorRow {
            quasimorphism: q.to_string(),
            on_generators,
            defect_lower_bound: defect,
            defect_trials,
        });
    }
    Ok(rows)
}

/// One row of the lower-bound side of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundContribution {
    pub quasimorphism: String,
    /// Predicted functional value on the composition: the k-weighted sum
    /// of the per-generator values.
    pub predicted_value: f64,
    pub defect_lower_bound: f64,
    /// `|predicted| / defect`; absent in homomorphism mode (zero sampled
    /// defect), where the predicted value itself is the exact content.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectEntry {
    pub quasimorphism: String,
    pub lower_bound: f64,
    pub trials: usize,
}

/// Two-sided norm certificate for one lattice vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingCertificate {
    pub k: Vec<i64>,
    pub l1_norm: u64,
    /// Best available norm lower bound; absent when the certificate only
    /// carries the upper side.
    pub lower: Option<f64>,
    /// Letter-count norm upper bound; absent when the certificate only
    /// carries the lower side.
    pub upper: Option<f64>,
    pub per_generator: Vec<BoundContribution>,
    /// `|k|_1 / (m * normalized_defect)`.
    pub aggregated_bound: Option<f64>,
    /// Worst defect of the diagonal-normalized functionals: the largest
    /// `defect / |value on own generator|` over rows with positive
    /// sampled defect.
    pub normalized_defect: Option<f64>,
    pub defect_table: Vec<DefectEntry>,
    pub estimates: Vec<GeneratorRow>,
    /// The composition spelled letter by letter; each letter is the
    /// time-1 map of an autonomous flow.
    pub factorization_witness: Vec<String>,
    pub assumptions: Vec<String>,
    pub seeds: Vec<u64>,
    pub config_digest: String,
}

impl EmbeddingCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

fn l1(k: &[i64]) -> u64 {
    k.iter().map(|&x| x.unsigned_abs()).sum()
}

fn check_dimension(spec: &EmbeddingSpec, k: &[i64]) -> Result<(), BoundsError> {
    if k.len() != spec.m {
        return Err(BoundsError::BadDimension {
            expected: spec.m,
            got: k.len(),
        });
    }
    Ok(())
}

const LOWER_ASSUMPTIONS: [&str; 3] = [
    "composite functional values are predicted from per-generator estimates by additivity \
     across disjoint supports",
    "defect values are sampled lower bounds for the true defects, so quotient bounds are \
     heuristic upward and exact only relative to the sampled defects",
    "per-generator values and their errors are Monte Carlo estimates at the recorded seeds",
];

const UPPER_ASSUMPTION: &str =
    "each witness letter is the time-1 map of an autonomous flow and is charged norm one";

/// Assembles the lower-bound side: per-row quotient bounds from the
/// predicted composite values, plus the aggregated `|k|_1` bound through
/// the worst diagonal-normalized defect. Every reported number is
/// exactly linear under integer scalings of `k`.
pub fn lower_bound_certificate(
    spec: &EmbeddingSpec,
    k: &[i64],
    rows: &[GeneratorRow],
) -> Result<EmbeddingCertificate, BoundsError> {
    check_dimension(spec, k)?;
    let mut per_generator = Vec::with_capacity(rows.len());
    let mut normalized_defect: Option<f64> = None;
    let mut seeds = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if row.on_generators.len() != spec.m {
            return Err(BoundsError::MissingEstimate {
                row: i,
                expected: spec.m,
                got: row.on_generators.len(),
            });
        }
        if row.defect_lower_bound < 0.0 {
            return Err(BoundsError::NegativeDefect { row: i });
        }
        for est in &row.on_generators {
            if !seeds.contains(&est.seed) {
                seeds.push(est.seed);
            }
        }
        let predicted: f64 = row
            .on_generators
            .iter()
            .zip(k)
            .map(|(est, &ki)| ki as f64 * est.value)
            .sum();
        let bound = if row.defect_lower_bound > 0.0 {
            Some(predicted.abs() / row.defect_lower_bound)
        } else {
            None
        };
        if row.defect_lower_bound > 0.0 && i < spec.m {
            let diag = row.on_generators[i].value.abs();
            if diag > 0.0 {
                let nd = row.defect_lower_bound / diag;
                normalized_defect = Some(normalized_defect.map_or(nd, |d: f64| d.max(nd)));
            }
        }
        per_generator.push(BoundContribution {
            quasimorphism: row.quasimorphism.clone(),
            predicted_value: predicted,
            defect_lower_bound: row.defect_lower_bound,
            bound,
        });
    }
    let aggregated_bound =
        normalized_defect.map(|d| l1(k) as f64 / (spec.m as f64 * d));
    let lower = per_generator
        .iter()
        .filter_map(|c| c.bound)
        .chain(aggregated_bound)
        .fold(0.0f64, f64::max);
    Ok(EmbeddingCertificate {
        k: k.to_vec(),
        l1_norm: l1(k),
        lower: Some(lower),
        upper: None,
        per_generator,
        aggregated_bound,
        normalized_defect,
        defect_table: rows
            .iter()
            .map(|r| DefectEntry {
                quasimorphism: r.quasimorphism.clone(),
                lower_bound: r.defect_lower_bound,
                trials: r.defect_trials,
            })
            .collect(),
        estimates: rows.to_vec(),
        factorization_witness: Vec::new(),
        assumptions: LOWER_ASSUMPTIONS.iter().map(|s| s.to_string()).collect(),
        seeds,
        config_digest: spec.config_digest(),
    })
}

/// Assembles the upper-bound side: the composition spelled as `|k|_1`
/// letters, each an autonomous time-1 map, certifies norm at most
/// `|k|_1`.
pub fn upper_bound_certificate(
    spec: &EmbeddingSpec,
    k: &[i64],
) -> Result<EmbeddingCertificate, BoundsError> {
    check_dimension(spec, k)?;
    let mut witness = Vec::with_capacity(l1(k) as usize);
    for (i, &ki) in k.iter().enumerate() {
        let letter = if ki > 0 {
            format!("generator {}", i + 1)
        } else {
            format!("generator {} inverse", i + 1)
        };
        for _ in 0..ki.unsigned_abs() {
            witness.push(letter.clone());
        }
    }
    Ok(EmbeddingCertificate {
        k: k.to_vec(),
        l1_norm: l1(k),
        lower: None,
        upper: Some(witness.len() as f64),
        per_generator: Vec::new(),
        aggregated_bound: None,
        normalized_defect: None,
        defect_table: Vec::new(),
        estimates: Vec::new(),
        factorization_witness: witness,
        assumptions: vec![UPPER_ASSUMPTION.to_string()],
        seeds: Vec::new(),
        config_digest: spec.config_digest(),
    })
}

/// Both sides in one certificate, for report output.
pub fn full_certificate(
    spec: &EmbeddingSpec,
    k: &[i64],
    rows: &[GeneratorRow],
) -> Result<EmbeddingCertificate, BoundsError> {
    let mut cert = lower_bound_certificate(spec, k, rows)?;
    let upper = upper_bound_certificate(spec, k)?;
    cert.upper = upper.upper;
    cert.factorization_witness = upper.factorization_witness;
    cert.assumptions.extend(upper.assumptions);
    Ok(cert)
}
