//! Braid-valued quasimorphism estimates for Hamiltonian flows on the 2-sphere.
//!
//! The pipeline: autonomous Hamiltonian systems supported in spherical caps
//! ([`dynamics`]) are flowed to time 1; the trajectories of an n-point
//! configuration are closed up into loops in configuration space and the
//! resulting spherical braid is read off by crossing detection ([`trace`]);
//! computable quasimorphisms on braid words (link signature of the trace
//! closure, linking numbers, exponent sum; [`quasimorphism`], [`braid`])
//! are averaged over uniform configurations by a seeded Monte Carlo harness
//! ([`estimator`]); and the resulting per-generator estimates and defect
//! bounds are assembled into entropy-norm lower/upper bound certificates for
//! products of disjointly supported twists ([`bounds`]).
//!
//! All sampling is deterministic given a seed, independent of worker count.
//! Area on the sphere is normalized to one throughout.

pub mod bounds;
pub mod braid;
pub mod dynamics;
pub mod estimator;
pub mod experiment;
pub mod quasimorphism;
pub mod sphere;
pub mod trace;
