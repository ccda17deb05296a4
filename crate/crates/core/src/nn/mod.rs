//! Neural feature extractors: the ANN, RNN and CNN stacks with reverse-mode
//! gradients, Adam training and a binary model container.

mod layers;
mod model;
mod real;
mod serialize;
mod spec;
mod tensor;
mod train;

pub use layers::{conv_extent, elu, pool_extent, Cache, Conv2d, Dense, Layer, Recurrent};
pub use model::{
    softmax, softmax_cross_entropy, ForwardOutput, Gradients, HeadFeatures, Mode, NetModel, Trace, TrainingMeta,
};
pub use real::Real;
pub use serialize::{decode, encode, load, save, ModelFile, FORMAT_VERSION, MAGIC};
pub(crate) use serialize::Reader;
pub use spec::{
    reference_table, LayerSpec, NetworkKind, NetworkSpec, Padding, SpecOptions, TableEntry, TableRow, ANN_TABLE,
    CNN_TABLE, RNN_TABLE,
};
pub use tensor::Tensor;
pub use train::{train_network, Optimizer, OptimizerState, TrainConfig};
