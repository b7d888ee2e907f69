//! The recurrent structure-detail super-resolution model.

mod config;
mod count;
mod decompose;
mod network;
mod params;

pub use config::{BlockVariant, InputMode, ModelConfig};
pub use count::{block_param_count, mac_estimate, param_count};
pub use decompose::{decompose, structure, structure_plans};
pub use network::{parameter_shapes, step_pairs, Bound, CellOutput, RecurrentState, Rsdn, StateVars, StepVars};
pub use params::{ConvLayer, ParamStore};
