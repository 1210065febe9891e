//! Order-preserving key encoding and digit extraction.

use serde::{Deserialize, Serialize};

use crate::value::RadixValue;

/// Unsigned bit pattern whose unsigned order is the selection order.
///
/// Keys narrower than 32 bits occupy the low bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct RadixKey(pub u32);

impl RadixKey {
    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionOrder {
    #[default]
    Largest,
    Smallest,
}

#[inline]
fn width_mask(width: u32) -> u32 {
    if width >= 32 {
        u32::MAX
    } else {
        (1u32 << width) - 1
    }
}

#[inline]
pub fn encode_key<T: RadixValue>(value: T, order: SelectionOrder) -> RadixKey {
    let bits = value.to_ordered_bits();
    match order {
        SelectionOrder::Largest => RadixKey(bits),
        SelectionOrder::Smallest => RadixKey(!bits & width_mask(T::WIDTH)),
    }
}

#[inline]
pub fn decode_key<T: RadixValue>(key: RadixKey, order: SelectionOrder) -> T {
    let bits = match order {
        SelectionOrder::Largest => key.0,
        SelectionOrder::Smallest => !key.0 & width_mask(T::WIDTH),
    };
    T::from_ordered_bits(bits)
}

pub fn encode_all<T: RadixValue>(values: &[T], order: SelectionOrder) -> Vec<RadixKey> {
    values.iter().map(|&v| encode_key(v, order)).collect()
}

/// Bit range `[low, high)` examined by one radix pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DigitWindow {
    low: u32,
    high: u32,
    digit_bits: u32,
}

impl DigitWindow {
    /// Most significant window of a `key_width`-bit key.
    pub fn first(key_width: u32, digit_bits: u32) -> Self {
        assert!(digit_bits >= 1 && (1..=32).contains(&key_width));
        DigitWindow {
            low: key_width.saturating_sub(digit_bits),
            high: key_width,
            digit_bits,
        }
    }

    /// The next less significant window, or `None` once the key is exhausted.
    pub fn advance(self) -> Option<Self> {
        if self.high <= self.digit_bits {
            return None;
        }
        Some(DigitWindow {
            low: self.low.saturating_sub(self.digit_bits),
            high: self.high - self.digit_bits,
            digit_bits: self.digit_bits,
        })
    }

    pub fn low(self) -> u32 {
        self.low
    }

    pub fn high(self) -> u32 {
        self.high
    }

    /// Configured digit width `d`; the histogram always has `2^d` bins.
    pub fn digit_bits(self) -> u32 {
        self.digit_bits
    }

    /// Bits actually covered, narrower than `d` on the last pass when the key
    /// width is not a multiple of `d`.
    pub fn span(self) -> u32 {
        self.high - self.low
    }

    pub fn radix(self) -> usize {
        1usize << self.digit_bits
    }

    /// All windows from most to least significant.
    pub fn sequence(key_width: u32, digit_bits: u32) -> impl Iterator<Item = DigitWindow> {
        std::iter::successors(Some(Self::first(key_width, digit_bits)), |w| w.advance())
    }

    /// Number of windows needed to cover a key.
    pub fn pass_count(key_width: u32, digit_bits: u32) -> u32 {
        key_width.div_ceil(digit_bits)
    }
}

#[inline]
pub fn extract_digit(key: RadixKey, window: DigitWindow) -> usize {
    ((key.0 >> window.low) & width_mask(window.span())) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use half::f16;
    use proptest::prelude::*;

    #[test]
    fn f32_sign_handling() {
        let l = SelectionOrder::Largest;
        assert_eq!(encode_key(0.0f32, l), RadixKey(0x8000_0000));
        assert_eq!(encode_key(-0.0f32, l), RadixKey(0x7FFF_FFFF));
        assert_eq!(encode_key(1.0f32, l), RadixKey(0xBF80_0000));
        assert_eq!(encode_key(-1.0f32, l), RadixKey(0x407F_FFFF));
        assert!(encode_key(-0.0f32, l) < encode_key(0.0f32, l));
    }

    #[test]
    fn decode_examples() {
        let l = SelectionOrder::Largest;
        let z: f32 = decode_key(RadixKey(0x8000_0000), l);
        assert_eq!(z.to_bits(), 0);
        assert_eq!(decode_key::<f32>(RadixKey(0xBF80_0000), l), 1.0);
        assert_eq!(decode_key::<u32>(RadixKey(12345), l), 12345);
    }

    #[test]
    fn unsigned_identity() {
        for x in [0u32, 1, 77, u32::MAX] {
            assert_eq!(encode_key(x, SelectionOrder::Largest), RadixKey(x));
            assert_eq!(encode_key(x, SelectionOrder::Smallest), RadixKey(!x));
        }
    }

    #[test]
    fn smallest_is_complement_for_f16() {
        let v = f16::from_f32(3.5);
        let l = encode_key(v, SelectionOrder::Largest).0;
        let s = encode_key(v, SelectionOrder::Smallest).0;
        assert_eq!(l ^ s, 0xFFFF);
        assert_eq!(decode_key::<f16>(RadixKey(s), SelectionOrder::Smallest), v);
    }

    #[test]
    fn window_sequence_32_by_12() {
        let ws: Vec<(u32, u32)> = DigitWindow::sequence(32, 12)
            .map(|w| (w.low(), w.high()))
            .collect();
        assert_eq!(ws, vec![(20, 32), (8, 20), (0, 8)]);
        assert_eq!(DigitWindow::pass_count(32, 12), 3);
        assert_eq!(DigitWindow::sequence(16, 8).count(), 2);
        assert_eq!(DigitWindow::sequence(32, 16).count(), 2);
        assert_eq!(DigitWindow::sequence(4, 2).count(), 2);
    }

    #[test]
    fn digit_of_adversarial_value() {
        // 128.65 has raw bits 0x4300A666: exponent 0x86, top fraction bits 000.
        let key = encode_key(128.65f32, SelectionOrder::Largest);
        assert_eq!(key, RadixKey(0xC300_A666));
        assert_eq!(extract_digit(key, DigitWindow::first(32, 12)), 0xC30);
    }

    #[test]
    fn digit_edge_cases() {
        for w in DigitWindow::sequence(32, 12) {
            assert_eq!(extract_digit(RadixKey(0), w), 0);
        }
        // 4-bit toy key 7 = 0b0111, top 2-bit digit is 1.
        assert_eq!(extract_digit(RadixKey(0b0111), DigitWindow::first(4, 2)), 1);
        // residual 8-bit window keeps the digit in the low bits
        let last = DigitWindow::sequence(32, 12).last().unwrap();
        assert_eq!(extract_digit(RadixKey(0xDEAD_BEEF), last), 0xEF);
    }

    fn ordered_f32() -> impl Strategy<Value = f32> {
        any::<u32>()
            .prop_map(f32::from_bits)
            .prop_filter("not NaN", |v| !v.is_nan())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(4096))]

        #[test]
        fn encoding_is_monotone(a in ordered_f32(), b in ordered_f32()) {
            let la = encode_key(a, SelectionOrder::Largest);
            let lb = encode_key(b, SelectionOrder::Largest);
            let sa = encode_key(a, SelectionOrder::Smallest);
            let sb = encode_key(b, SelectionOrder::Smallest);
            prop_assert_eq!(la.cmp(&lb), a.total_cmp(&b));
            prop_assert_eq!(sa.cmp(&sb), b.total_cmp(&a));
            if a < b {
                prop_assert!(la < lb);
                prop_assert!(sa > sb);
            }
        }

        #[test]
        fn round_trip_is_bit_exact(a in ordered_f32()) {
            for order in [SelectionOrder::Largest, SelectionOrder::Smallest] {
                let back: f32 = decode_key(encode_key(a, order), order);
                prop_assert_eq!(back.to_bits(), a.to_bits());
            }
        }

        #[test]
        fn digits_reassemble_key(bits in any::<u32>(), d in 1u32..=16) {
            let key = RadixKey(bits);
            let mut rebuilt = 0u32;
            for w in DigitWindow::sequence(32, d) {
                rebuilt |= (extract_digit(key, w) as u32) << w.low();
            }
            prop_assert_eq!(rebuilt, bits);
        }
    }

    #[test]
    fn monotone_over_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 100_000 {
            let a = f32::from_bits(rng.random());
            let b = f32::from_bits(rng.random());
            if a.is_nan() || b.is_nan() || (a == 0.0 && b == 0.0) {
                continue;
            }
            let l = SelectionOrder::Largest;
            let s = SelectionOrder::Smallest;
            assert_eq!(a <= b, encode_key(a, l) <= encode_key(b, l));
            assert_eq!(a <= b, encode_key(a, s) >= encode_key(b, s));
            checked += 1;
        }
    }
}
