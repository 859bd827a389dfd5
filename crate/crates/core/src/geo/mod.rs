//! Geodetic conversions, cameras, condition projection, and viewpoint
//! planning.

mod camera;
mod condition;
mod geodetic;
mod planner;

pub use camera::{
    look_at, read_camera_json, unproject, write_camera_json, CameraPose, CameraRecord, Intrinsics,
};
pub use condition::{
    depth_to_condition_voxels, expand_condition_plane, lift_semantic_plane, nadir_pose,
};
pub use geodetic::{
    ecef_to_enu, enu_to_ecef, geodetic_to_ecef, geodetic_to_enu, WGS84_FLATTENING,
    WGS84_SEMI_MAJOR_M,
};
pub use planner::{
    ada_level_plan, building_spiral_plan, top_pose_plan, AdaLevelParams, SpiralParams,
    TopPoseParams,
};
