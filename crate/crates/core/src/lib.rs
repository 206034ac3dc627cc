//! Bimanual in-hand pose estimation from end-effector wrenches.
//!
//! A tool held in one gripper is poked by a probe held in the other. Two
//! coupled particle filters estimate where each object sits in its gripper:
//! an outer filter over pose pairs and, for every hypothesis, an inner contact
//! filter that localises the touch point on each object.

pub mod cpf;
pub mod geometry;
pub mod memory;
pub mod model;
pub mod par;
pub mod resample;
pub mod rng;
pub mod scope;
pub mod segmentation;
pub mod sim;
pub mod wrench;

pub use cpf::{cpfgrasp_run, ClpInit, ContactBelief, ContactParticle, CpfParams};
pub use geometry::{Pose2, Solid, TriMesh};
pub use memory::MemoryState;
pub use model::ObjectModel;
pub use par::Exec;
pub use wrench::{SensorNoise, Wrench, WrenchNorm};
pub use scope::{FilterConfig, LossWeights, OppPair};
