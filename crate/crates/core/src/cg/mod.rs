//! Column generation engine and the SDP master.

pub mod engine;
pub mod sdp;

pub use engine::{
    price_eig, price_triples, price_triples_excluding, run, Certificate, CgConfig, CgRun, CgTrace,
    Direction, IterRecord, Master, MasterSolution, Mode, Pricing, Termination,
};
pub use sdp::{assemble_dual_matrix, solve_master_lp, solve_master_socp, SdpMaster, SdpProblem};
