//! Bitonic sorting networks for short key arrays.

/// Longest input handled by [`sort_small`]. Past this the library sort is
/// faster on the hosts measured.
pub const MAX_LEN: usize = 16;

/// Sorts up to [`MAX_LEN`] keys ascending.
///
/// The input is padded to the next power of two with sentinels and run
/// through a fixed network for that size.
pub fn sort_small<T: Copy + Ord + Sentinel>(keys: &mut [T]) {
    match keys.len() {
        0 | 1 => {}
        2 => padded::<T, 2>(keys),
        3 | 4 => padded::<T, 4>(keys),
        5..=8 => padded::<T, 8>(keys),
        9..=16 => padded::<T, 16>(keys),
        n => panic!("sort_small takes at most {MAX_LEN} keys, got {n}"),
    }
}

#[inline(always)]
fn padded<T: Copy + Ord + Sentinel, const P: usize>(keys: &mut [T]) {
    let n = keys.len();
    let mut buf = [T::SENTINEL; P];
    buf[..n].copy_from_slice(keys);
    network(&mut buf);
    keys.copy_from_slice(&buf[..n]);
}

#[inline(always)]
fn compare_exchange<T: Copy + Ord>(a: &mut [T], i: usize, l: usize) {
    let (x, y) = (a[i], a[l]);
    a[i] = x.min(y);
    a[l] = x.max(y);
}

/// Bitonic sort with every comparator ascending: each merge starts by
/// comparing mirrored positions instead of sorting half the block
/// descending.
#[inline(always)]
fn network<T: Copy + Ord, const P: usize>(a: &mut [T; P]) {
    let mut k = 2;
    while k <= P {
        for base in (0..P).step_by(k) {
            for t in 0..k / 2 {
                compare_exchange(a, base + t, base + k - 1 - t);
            }
        }
        let mut j = k / 4;
        while j > 0 {
            for base in (0..P).step_by(2 * j) {
                for i in base..base + j {
                    compare_exchange(a, i, i + j);
                }
            }
            j /= 2;
        }
        k *= 2;
    }
}

/// A value that compares greater than or equal to every real key.
pub trait Sentinel {
    const SENTINEL: Self;
}

impl Sentinel for u64 {
    const SENTINEL: Self = u64::MAX;
}

impl<L: crate::index::ColIndex> Sentinel for (L, u32) {
    const SENTINEL: Self = (L::MAX, u32::MAX);
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_library_sort(mut keys in proptest::collection::vec((0u32..50, any::<u32>()), 0..=MAX_LEN)) {
            keys.sort_unstable();
            keys.dedup();
            let mut shuffled: Vec<(u32, u32)> = keys.iter().rev().copied().collect();
            let r = shuffled.len() / 3;
            shuffled.rotate_left(r);
            sort_small(&mut shuffled);
            prop_assert_eq!(shuffled, keys);
        }

        #[test]
        fn packed_keys_with_duplicates(mut keys in proptest::collection::vec(0u64..20, 0..=MAX_LEN)) {
            let mut want = keys.clone();
            want.sort_unstable();
            sort_small(&mut keys);
            prop_assert_eq!(keys, want);
        }
    }
}
