//! Separable isogenies from explicit kernels, homomorphism lattices and
//! their degree form.

mod hom;
mod kernels;
mod velu;

pub use hom::{
    action_in_bases, action_matrix, coprime_iso_check, crt_combine, degree_of_hom, hom_lattice,
    hom_tower, pairing_scale, CoprimeReport, CrtReport, DegreeReport, HomElement, HomLattice,
    HomTowerReport, LatticeHandle,
    LevelMeasurement, LevelReading, Morphism, SaturationCheck, TorsionMap,
};
pub use kernels::{cyclic_kernels, stable_subgroups, subgroup_lattices};
pub use velu::{velu, Isogeny};
