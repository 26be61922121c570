//! Blind unfolding: an LMS predictor learns the input statistics while the
//! resolution is steered towards the largest value the predictor supports.

mod codec;
mod config;
mod steps;

pub use codec::{apply_resolution_update, lms_fixed_resolution, run_codec, BlindCodec, CodecState};
pub use config::AdcConfig;
pub use steps::{
    blind_unfold_step, lms_update, overload_detect, predict_asymptotics, resolution_decision,
    select_learning_rate, steady_state_detect, update_sigma_p, Asymptotics, LongTermResidual,
    ResidualWindow, RunningMeanSquare,
};
