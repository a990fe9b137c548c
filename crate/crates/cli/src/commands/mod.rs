pub mod features;
pub mod filterbank;
pub mod masks;
pub mod model;
pub mod rank;
pub mod scatter;
pub mod synth;
