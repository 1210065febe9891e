use proptest::prelude::*;
use radix_topk::memory::{load_plan, task_transactions, transaction_count, Load};
use radix_topk::{
    batch_topk, oracle_topk, topk, topk_instrumented, AtomicsMode, BatchInput, BatchOptions,
    BufferPolicy, EngineConfig, Instrumentation, RadixValue, SelectionOrder, TopKResult,
};

fn config() -> impl Strategy<Value = EngineConfig> {
    (
        1u32..=16,
        1usize..300,
        1usize..6,
        prop_oneof![
            Just(BufferPolicy::Naive),
            Just(BufferPolicy::FlushEfficient)
        ],
        prop_oneof![Just(AtomicsMode::Hierarchical), Just(AtomicsMode::Global)],
        prop_oneof![Just(64usize), Just(4096)],
    )
        .prop_map(|(d, block, grid, buffer, atomics, ceiling)| {
            EngineConfig::default()
                .with_digit_bits(d)
                .with_block_size(block)
                .with_grid_size(grid)
                .with_buffer_policy(buffer)
                .with_atomics(atomics)
                .with_filter_capacity_ceiling(ceiling)
        })
}

fn order() -> impl Strategy<Value = SelectionOrder> {
    prop_oneof![
        Just(SelectionOrder::Largest),
        Just(SelectionOrder::Smallest)
    ]
}

/// Few distinct values so that ties at the pivot are common.
fn clustered_f32() -> impl Strategy<Value = Vec<f32>> {
    prop_oneof![
        prop::collection::vec(
            any::<f32>().prop_filter("not NaN", |v| !v.is_nan()),
            1..2000
        ),
        prop::collection::vec((-4i32..4).prop_map(|v| v as f32 * 0.5), 1..2000),
        prop::collection::vec(
            prop_oneof![
                Just(0.0f32),
                Just(-0.0),
                Just(f32::INFINITY),
                Just(f32::NEG_INFINITY),
                Just(1.0)
            ],
            1..500
        ),
    ]
}

fn bits_equal<T: RadixValue>(a: &TopKResult<T>, b: &TopKResult<T>) -> bool {
    a.indices == b.indices
        && a.values
            .iter()
            .zip(&b.values)
            .all(|(x, y)| x.to_ordered_bits() == y.to_ordered_bits())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn f32_matches_oracle(input in clustered_f32(), kf in 0.0f64..1.0, order in order(), cfg in config()) {
        let k = 1 + (kf * input.len() as f64) as usize % input.len();
        let got = topk(&input, k, order, &cfg).unwrap();
        prop_assert!(bits_equal(&got, &oracle_topk(&input, k, order).unwrap()));
    }

    #[test]
    fn u32_matches_oracle(input in prop::collection::vec(prop_oneof![any::<u32>(), 0u32..5], 1..3000), kf in 0.0f64..1.0, order in order(), cfg in config()) {
        let k = 1 + (kf * input.len() as f64) as usize % input.len();
        let got = topk(&input, k, order, &cfg).unwrap();
        prop_assert!(bits_equal(&got, &oracle_topk(&input, k, order).unwrap()));
    }

    #[test]
    fn f16_matches_oracle(raw in prop::collection::vec(any::<u16>(), 1..2000), kf in 0.0f64..1.0, order in order(), cfg in config()) {
        let input: Vec<half::f16> = raw.into_iter().map(half::f16::from_bits).filter(|v| !v.is_nan()).collect();
        prop_assume!(!input.is_empty());
        let d = cfg.digit_bits.min(8);
        let cfg = cfg.with_digit_bits(d);
        let k = 1 + (kf * input.len() as f64) as usize % input.len();
        let got = topk(&input, k, order, &cfg).unwrap();
        prop_assert!(bits_equal(&got, &oracle_topk(&input, k, order).unwrap()));
    }

    #[test]
    fn permutation_keeps_selected_values(input in clustered_f32(), kf in 0.0f64..1.0, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let k = 1 + (kf * input.len() as f64) as usize % input.len();
        let cfg = EngineConfig::default().with_grid_size(3).with_block_size(64);
        let mut shuffled = input.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        let a = topk(&input, k, SelectionOrder::Largest, &cfg).unwrap();
        let b = topk(&shuffled, k, SelectionOrder::Largest, &cfg).unwrap();
        prop_assert_eq!(bits(&a.values), bits(&b.values));
    }

    #[test]
    fn pass_count_within_window_bound(input in prop::collection::vec(any::<u32>(), 2..2000), d in 1u32..=16) {
        let cfg = EngineConfig::default().with_digit_bits(d).with_grid_size(2).with_block_size(128);
        let instr = Instrumentation::new(2);
        topk_instrumented(&input, 1 + input.len() / 3, SelectionOrder::Largest, &cfg, &instr).unwrap();
        prop_assert!(instr.snapshot().passes <= 32u64.div_ceil(d as u64));
    }

    #[test]
    fn batch_toggles_agree(
        tasks in prop::collection::vec(prop::collection::vec(-50i32..50, 1..700), 1..8),
        kfs in prop::collection::vec(0.0f64..1.0, 8),
        cfg in config(),
    ) {
        let ks: Vec<usize> = tasks.iter().zip(&kfs).map(|(t, f)| 1 + (f * t.len() as f64) as usize % t.len()).collect();
        let tasks: Vec<Vec<f32>> = tasks.into_iter().map(|t| t.into_iter().map(|v| v as f32 / 8.0).collect()).collect();
        let batch = BatchInput::from_tasks(tasks, ks.clone()).unwrap();
        let mut first: Option<Vec<TopKResult<f32>>> = None;
        for rescheduling in [false, true] {
            for padding in [false, true] {
                let instr = Instrumentation::new(cfg.grid_size);
                let out = batch_topk(&batch, SelectionOrder::Largest, &cfg, BatchOptions { rescheduling, padding }, &instr).unwrap();
                if rescheduling {
                    let deepest = out.schedule.passes_per_task.iter().max().unwrap().saturating_sub(1);
                    prop_assert_eq!(out.schedule.dispatch_rounds, deepest);
                }
                for (i, r) in out.results.iter().enumerate() {
                    prop_assert!(bits_equal(r, &oracle_topk(batch.task(i), ks[i], SelectionOrder::Largest).unwrap()));
                }
                match &first {
                    None => first = Some(out.results),
                    Some(f) => prop_assert_eq!(f, &out.results),
                }
            }
        }
    }

    #[test]
    fn padding_never_costs_more(
        lengths in prop::collection::vec(1usize..100, 1..10),
        elem in prop_oneof![Just(2usize), Just(4)],
        pack in prop_oneof![Just(4usize), Just(8), Just(16), Just(32)],
    ) {
        let offsets: Vec<usize> = lengths.iter().scan(0, |acc, &l| { let o = *acc; *acc += l; Some(o) }).collect();
        let on = transaction_count(&offsets, &lengths, elem, pack, true);
        let off = transaction_count(&offsets, &lengths, elem, pack, false);
        prop_assert!(on <= off);
        let per_pack = pack / elem;
        if offsets.iter().all(|o| o % per_pack == 0) {
            prop_assert_eq!(on, off);
        }
    }

    #[test]
    fn load_plan_is_legal_and_complete(offset in 0usize..200, len in 1usize..200, padding in any::<bool>()) {
        let (elem, pack) = (4, 16);
        let per_pack = pack / elem;
        let plan = load_plan(offset, len, elem, pack, padding);
        let mut covered = Vec::new();
        for load in &plan {
            match *load {
                Load::Pack { start, skip } => {
                    prop_assert_eq!(start % per_pack, 0);
                    prop_assert!(start + per_pack <= offset + len);
                    covered.extend(start + skip..start + per_pack);
                }
                Load::Scalar(i) => covered.push(i),
            }
        }
        prop_assert_eq!(covered, (offset..offset + len).collect::<Vec<_>>());
        prop_assert_eq!(plan.len() as u64, task_transactions(offset, len, elem, pack, padding));
    }
}

#[test]
fn nan_is_rejected() {
    let cfg = EngineConfig::default().with_grid_size(2);
    let err = topk(&[1.0f32, f32::NAN, 2.0], 1, SelectionOrder::Largest, &cfg).unwrap_err();
    assert!(err.to_string().contains('1'), "{err}");
}

#[test]
fn k_bounds() {
    let cfg = EngineConfig::default().with_grid_size(2);
    assert!(topk(&[1u32, 2], 0, SelectionOrder::Largest, &cfg).is_err());
    assert!(topk(&[1u32, 2], 3, SelectionOrder::Largest, &cfg).is_err());
    assert!(topk::<u32>(&[], 1, SelectionOrder::Largest, &cfg).is_err());
}
