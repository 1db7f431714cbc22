//! From-scratch two-layer LSTM predictor with a dense softmax head.

mod arch;
mod lstm;
mod train;

pub use arch::{
    init_params, Architecture, LayerLayout, ParamLayout, ParamVector, GATES, INIT_RANGE,
};
pub use lstm::{
    argmax, backward, cross_entropy, forward, lstm_cell_step, predict, softmax, window_loss,
    Backprop, ForwardOutput, LayerState, LstmLayer, LstmState, PROB_FLOOR,
};
pub use train::{
    evaluate, predict_dataset, train, EpochMetrics, Evaluation, TrainConfig, TrainOutcome,
    DEFAULT_CLIP_NORM, LR_BIG, LR_SMALL,
};
