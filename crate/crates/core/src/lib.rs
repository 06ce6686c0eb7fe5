//! Infinitesimal isometries of piecewise-smooth periodic surfaces.
//!
//! The crate discretizes one period of a parametric surface, solves for the
//! rotation fields `w` of its infinitesimal isometries (`D_x w = w₂∧x₁ − w₁∧x₂ = 0`
//! with crease admissibility), and maps them to effective membrane strains `E`
//! and effective bending strains `χ`. Closed-form modes for the classical
//! corrugated, eggbox, Miura-like and translation surfaces are provided as
//! independent oracles, together with the thin-walled section warping used as
//! the motivating example.
//!
//! Everything here is `no_std` + `alloc`; file formats and the command line
//! live in the `corruga` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod chart;
mod error;
pub mod grid;
mod math;
pub mod oracle;
pub mod solver;
pub mod strains;
mod tensor;
mod vec3;
pub mod warping;

pub use chart::{
    Family, Junction, JunctionKind, PanelSelector, PeriodGeometry, Profile, ProfileKind, Side,
    SpaceCurve, SurfaceChart,
};
pub use error::{Error, Result};
pub use grid::PeriodicGrid;
pub use strains::{EffectiveBending, EffectiveStrain, StrainSpaces};
pub use solver::{
    assemble_system, nullspace, recover_deflection, ConstraintSystem, DeflectionField, ModeClass,
    NullSpace, RotationMode, ThresholdPolicy,
};
pub use tensor::Sym2;
pub use vec3::Vec3;
