//! Radix-based top-k selection over 32-bit and 16-bit keys, with batched
//! scheduling, an aligned-load cost model and optional input scaling.

pub mod batch;
pub mod datagen;
pub mod dataset;
pub mod engine;
pub mod error;
pub(crate) mod exec;
pub mod keycodec;
pub mod memory;
pub mod oracle;
pub mod scaling;
pub mod value;

pub use batch::{batch_topk, BatchInput, BatchOptions, BatchOutput, ScheduleStats};
pub use datagen::{generate, Distribution, DistributionSpec};
pub use dataset::{read_batch, read_dataset, write_batch, write_dataset, Dataset};
pub use engine::{
    topk, topk_instrumented, AtomicsMode, BufferPolicy, EngineConfig, Instrumentation,
    InstrumentationSnapshot, Pivot, RadixTopK, TopKResult,
};
pub use error::{Result, TopKError};
pub use keycodec::{decode_key, encode_key, DigitWindow, RadixKey, SelectionOrder};
pub use oracle::{oracle_kth, oracle_topk};
pub use scaling::{scaled_topk, ScaleMode, ScalePolicy, ScaledTopK};
pub use value::{DType, RadixValue};

pub type TopKF32 = TopKResult<f32>;
pub type TopKU32 = TopKResult<u32>;
pub type TopKF16 = TopKResult<half::f16>;
pub type BatchF32 = BatchInput<f32>;
pub type BatchU32 = BatchInput<u32>;
pub type BatchF16 = BatchInput<half::f16>;

pub use half::f16;
