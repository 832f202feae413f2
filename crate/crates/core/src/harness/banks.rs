//! Filter banks for grid runs, keyed by `(size, bits)`.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::learn::{learn_filterbank, CorpusKind, FilterBank, DEFAULT_PATCH_COUNT};

pub trait BankSource: Sync {
    fn bank(&self, size: usize, bits: usize) -> Result<Arc<FilterBank>>;
}

type Slot = Arc<OnceLock<Result<Arc<FilterBank>, String>>>;

/// Learns banks on first use and memoizes them. Concurrent requests for
/// the same shape wait for one learner instead of duplicating the work.
pub struct LearnedBanks {
    images: Vec<GrayImage>,
    kind: CorpusKind,
    description: String,
    patches: usize,
    seed: u64,
    cache: Mutex<BTreeMap<(usize, usize), Slot>>,
}

impl LearnedBanks {
    pub fn new(images: Vec<GrayImage>, kind: CorpusKind, description: impl Into<String>, seed: u64) -> Self {
        Self {
            images,
            kind,
            description: description.into(),
            patches: DEFAULT_PATCH_COUNT,
            seed,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    /// Patch count; raised per shape to the `10 * size^2` minimum.
    pub fn with_patches(mut self, patches: usize) -> Self {
        self.patches = patches;
        self
    }

    pub fn patches_for(&self, size: usize) -> usize {
        self.patches.max(10 * size * size)
    }
}

impl BankSource for LearnedBanks {
    fn bank(&self, size: usize, bits: usize) -> Result<Arc<FilterBank>> {
        let slot = self.cache.lock().expect("bank cache poisoned").entry((size, bits)).or_default().clone();
        slot.get_or_init(|| {
            log::info!("learning {size}x{size} bank with {bits} bits from {}", self.description);
            learn_filterbank(&self.images, size, bits, self.patches_for(size), self.seed)
                .map(|b| Arc::new(b.with_source(self.kind, self.description.clone())))
                .map_err(|e| e.to_string())
        })
        .clone()
        .map_err(|e| Error::Shared(format!("filter learning failed for {size}x{size}/{bits}: {e}")))
    }
}

/// Pre-built banks, e.g. loaded from files.
#[derive(Default)]
pub struct FixedBanks {
    banks: BTreeMap<(usize, usize), Arc<FilterBank>>,
}

impl FixedBanks {
    pub fn new(banks: impl IntoIterator<Item = FilterBank>) -> Self {
        Self {
            banks: banks.into_iter().map(|b| ((b.size(), b.bits()), Arc::new(b))).collect(),
        }
    }
}

impl BankSource for FixedBanks {
    fn bank(&self, size: usize, bits: usize) -> Result<Arc<FilterBank>> {
        self.banks
            .get(&(size, bits))
            .cloned()
            .ok_or_else(|| Error::InvalidParameter(format!("no {size}x{size} bank with {bits} bits was provided")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::synthetic_eye_images;

    #[test]
    fn learned_banks_are_cached() {
        let images = synthetic_eye_images(3, 64, 1).unwrap();
        let src = LearnedBanks::new(images, CorpusKind::Eye, "synthetic eyes", 4).with_patches(500);
        let a = src.bank(3, 4).unwrap();
        let b = src.bank(3, 4).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!((a.size(), a.bits(), a.source, a.seed), (3, 4, CorpusKind::Eye, 4));
        assert!(src.bank(3, 9).is_err());
        assert!(src.bank(3, 9).is_err());
    }

    #[test]
    fn fixed_banks_lookup() {
        let bank = FilterBank::from_filters(3, &[vec![1.0; 9]]).unwrap();
        let src = FixedBanks::new([bank]);
        assert!(src.bank(3, 1).is_ok());
        assert!(src.bank(5, 1).is_err());
    }
}
