//! Subtract a randomly drawn input element before selecting, so values that
//! share their leading digits spread out over the first histogram.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{
    count_bins, filter, run_task, validate_input, EngineConfig, Histogram, Instrumentation,
    SelectionState, TopKResult,
};
use crate::error::{Result, TopKError};
use crate::exec::run_workers;
use crate::keycodec::{encode_all, DigitWindow, SelectionOrder};
use crate::value::RadixValue;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    #[default]
    Off,
    Always,
    /// Run the first pass unscaled; restart with scaling if the target bin
    /// kept more than `trigger_fraction` of the candidates.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalePolicy {
    pub mode: ScaleMode,
    pub trigger_fraction: f64,
    pub seed: u64,
}

impl Default for ScalePolicy {
    fn default() -> Self {
        ScalePolicy {
            mode: ScaleMode::Off,
            trigger_fraction: 0.5,
            seed: 0,
        }
    }
}

impl ScalePolicy {
    pub fn new(mode: ScaleMode, trigger_fraction: f64, seed: u64) -> Result<Self> {
        if !(trigger_fraction > 0.0 && trigger_fraction <= 1.0) {
            return Err(TopKError::InvalidConfig(format!(
                "trigger fraction {trigger_fraction} not in (0, 1]"
            )));
        }
        Ok(ScalePolicy {
            mode,
            trigger_fraction,
            seed,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaleDraw<T> {
    pub value: T,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledTopK<T> {
    /// Values and indices refer to the original input.
    pub result: TopKResult<T>,
    /// The subtracted element, when scaling was applied.
    pub scale: Option<ScaleDraw<T>>,
    /// Adaptive mode discarded its unscaled first pass.
    pub restarted: bool,
}

/// Uniformly random element of `input`.
pub fn draw_scale<T: Copy, R: Rng + ?Sized>(input: &[T], rng: &mut R) -> Result<ScaleDraw<T>> {
    if input.is_empty() {
        return Err(TopKError::EmptyInput);
    }
    let index = rng.random_range(0..input.len());
    Ok(ScaleDraw {
        value: input[index],
        index,
    })
}

/// `input[i] - shift` for every element, split across the worker grid.
pub fn subtract_all<T: RadixValue + Float>(input: &[T], shift: T, cfg: &EngineConfig) -> Vec<T> {
    let chunk = input.len().div_ceil(cfg.grid_size).max(1);
    run_workers(cfg.grid_size, |w| {
        let lo = (w * chunk).min(input.len());
        let hi = ((w + 1) * chunk).min(input.len());
        input[lo..hi].iter().map(|&x| x - shift).collect::<Vec<T>>()
    })
    .concat()
}

/// Histogram of the most significant digit, as the first radix pass sees it.
pub fn first_pass_histogram<T: RadixValue>(
    input: &[T],
    order: SelectionOrder,
    cfg: &EngineConfig,
) -> Result<Histogram> {
    if input.is_empty() {
        return Err(TopKError::EmptyInput);
    }
    let keys = encode_all(input, order);
    count_bins(
        &keys,
        DigitWindow::first(T::WIDTH, cfg.digit_bits),
        cfg,
        &Instrumentation::new(cfg.grid_size),
    )
}

pub fn scaled_topk<T: RadixValue + Float>(
    input: &[T],
    k: usize,
    order: SelectionOrder,
    cfg: &EngineConfig,
    policy: ScalePolicy,
) -> Result<ScaledTopK<T>> {
    let instr = Instrumentation::new(cfg.grid_size);
    scaled_topk_instrumented(input, k, order, cfg, policy, &instr)
}

pub fn scaled_topk_instrumented<T: RadixValue + Float>(
    input: &[T],
    k: usize,
    order: SelectionOrder,
    cfg: &EngineConfig,
    policy: ScalePolicy,
    instr: &Instrumentation,
) -> Result<ScaledTopK<T>> {
    cfg.validate(T::elem_bytes())?;
    validate_input(input, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    match policy.mode {
        ScaleMode::Off => Ok(ScaledTopK {
            result: run_task(input, 0, false, k, order, cfg, instr)?,
            scale: None,
            restarted: false,
        }),
        ScaleMode::Always => run_scaled(input, k, order, cfg, &mut rng, instr, false),
        ScaleMode::Adaptive => {
            let keys = encode_all(input, order);
            let mut state = SelectionState::new(&keys, k, T::WIDTH, cfg.digit_bits)?;
            if state.is_live() {
                let pass = state.step(cfg, instr)?;
                let kept = pass.histogram.counts()[pass.bin] as f64;
                if kept > policy.trigger_fraction * pass.scanned as f64 {
                    drop(state);
                    return run_scaled(input, k, order, cfg, &mut rng, instr, true);
                }
            }
            while state.is_live() {
                state.step(cfg, instr)?;
            }
            let pivot = state.pivot();
            drop(state);
            Ok(ScaledTopK {
                result: filter(input, pivot, k, order, cfg, instr)?,
                scale: None,
                restarted: false,
            })
        }
    }
}

fn run_scaled<T: RadixValue + Float>(
    input: &[T],
    k: usize,
    order: SelectionOrder,
    cfg: &EngineConfig,
    rng: &mut ChaCha8Rng,
    instr: &Instrumentation,
    restarted: bool,
) -> Result<ScaledTopK<T>> {
    let draw = draw_scale(input, rng)?;
    let shifted = subtract_all(input, draw.value, cfg);
    if shifted.iter().any(|v| RadixValue::is_nan(*v)) {
        // only an infinite draw can produce inf - inf; select unscaled
        return Ok(ScaledTopK {
            result: run_task(input, 0, false, k, order, cfg, instr)?,
            scale: None,
            restarted,
        });
    }
    let on_shifted = run_task(&shifted, 0, false, k, order, cfg, instr)?;
    drop(shifted);
    let indices = on_shifted.indices;
    let values: Vec<T> = indices.iter().map(|&i| input[i]).collect();
    let pivot = *values.last().expect("k >= 1");
    Ok(ScaledTopK {
        result: TopKResult {
            values,
            indices,
            pivot,
        },
        scale: Some(draw),
        restarted,
    })
}
