mod container;
mod pnm;

pub use container::{
    load_models, load_tensor, read_models_from, read_tensor_from, save_models, save_tensor, write_models_to,
    write_tensor_to, ModelSet, FORMAT_VERSION, MODEL_MAGIC, TENSOR_MAGIC,
};
pub use pnm::{read_pnm, read_pnm_from, write_pnm, write_pnm_to, PnmImage};
