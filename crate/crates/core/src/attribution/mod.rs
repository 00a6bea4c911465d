//! Pixel attributions for the image CNN and the channel ranking built on them.

mod deeplift;
mod ranking;
mod shapley;

pub use deeplift::{deeplift_attribute, deepshap_attribute, DeepShapExplainer, RESCALE_EPS};
pub use ranking::{global_importance, rank_channels, ChannelRanking, RankedChannel};
pub use shapley::{exact_shapley, MAX_EXACT_PLAYERS};
