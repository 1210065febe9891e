use anyhow::{bail, Result};
use radix_topk::scaling::{scaled_topk_instrumented, ScaledTopK};
use radix_topk::{
    f16, topk_instrumented, EngineConfig, Instrumentation, RadixValue, ScaleMode, ScalePolicy,
    SelectionOrder,
};
use serde_json::Value;

/// Element types the harness can run, including the float-only scaling path.
pub trait CliValue: RadixValue {
    fn select(
        input: &[Self],
        k: usize,
        order: SelectionOrder,
        cfg: &EngineConfig,
        policy: ScalePolicy,
        instr: &Instrumentation,
    ) -> Result<ScaledTopK<Self>>;

    /// `input[i] - by`, the domain a scaled run selects in.
    fn shifted(input: &[Self], by: Self) -> Vec<Self>;

    fn to_json(self) -> Value {
        match self.to_f64() {
            Some(v) if v.is_finite() => serde_json::json!(v),
            Some(v) if v > 0.0 => Value::String("inf".into()),
            _ => Value::String("-inf".into()),
        }
    }
}

macro_rules! float_value {
    ($t:ty) => {
        impl CliValue for $t {
            fn select(
                input: &[Self],
                k: usize,
                order: SelectionOrder,
                cfg: &EngineConfig,
                policy: ScalePolicy,
                instr: &Instrumentation,
            ) -> Result<ScaledTopK<Self>> {
                Ok(scaled_topk_instrumented(
                    input, k, order, cfg, policy, instr,
                )?)
            }

            fn shifted(input: &[Self], by: Self) -> Vec<Self> {
                input.iter().map(|&x| x - by).collect()
            }
        }
    };
}

float_value!(f32);
float_value!(f16);

impl CliValue for u32 {
    fn select(
        input: &[Self],
        k: usize,
        order: SelectionOrder,
        cfg: &EngineConfig,
        policy: ScalePolicy,
        instr: &Instrumentation,
    ) -> Result<ScaledTopK<Self>> {
        if policy.mode != ScaleMode::Off {
            bail!("scaling needs floating-point input");
        }
        Ok(ScaledTopK {
            result: topk_instrumented(input, k, order, cfg, instr)?,
            scale: None,
            restarted: false,
        })
    }

    fn shifted(input: &[Self], by: Self) -> Vec<Self> {
        input.iter().map(|&x| x.wrapping_sub(by)).collect()
    }

    fn to_json(self) -> Value {
        Value::from(self)
    }
}
