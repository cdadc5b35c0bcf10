pub mod camera;
pub mod config;
pub mod depth;
pub mod error;
pub mod geom;
pub mod heatmap;
pub mod hypothesis;
pub mod io;
pub mod keypoint;
pub mod layout;
pub mod mask;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use keypoint::{Keypoint, KeypointSet};
pub use mask::SegMask;
pub use model::{Group, Label, RoomType, Size};
