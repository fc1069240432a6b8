//! Minimizing even-degree forms on the unit sphere through dsos/sdsos
//! restrictions and column generation.

pub mod amgm;
pub mod basis;
pub mod gram;
pub mod master;
pub mod oracle;

pub use amgm::{amgm_separation, AmgmCut, DEFAULT_NODE_CAP};
pub use basis::{basis_size, sphere_multiplier, MonomialBasis, Poly};
pub use gram::GramMap;
pub use master::{
    cg_polymin, dsos_bound, poly_bound, r_dsos_bound, r_sdsos_bound, sdsos_bound, PolyBound,
    PolyMaster, DEFAULT_GRAM_CAP,
};
pub use oracle::sphere_min_oracle;
