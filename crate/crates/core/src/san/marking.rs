use std::fmt;

use super::{PlaceId, SanError};

/// Token assignment over every place of a model.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Box<[u32]>);

impl Marking {
    pub fn new(tokens: Vec<u32>) -> Self {
        Marking(tokens.into_boxed_slice())
    }

    pub fn zeros(places: usize) -> Self {
        Marking(vec![0; places].into_boxed_slice())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[u32] {
        &self.0
    }

    /// Token count of `place`. Panics on an out-of-range id; models check
    /// their references at construction time.
    #[inline]
    pub fn get(&self, place: PlaceId) -> u32 {
        self.0[place.0]
    }

    #[inline]
    pub fn set(&mut self, place: PlaceId, tokens: u32) {
        self.0[place.0] = tokens;
    }

    pub fn add(&mut self, place: PlaceId, tokens: u32) -> Result<(), SanError> {
        let slot = self
            .0
            .get_mut(place.0)
            .ok_or(SanError::UnknownPlace(place))?;
        *slot = slot.checked_add(tokens).ok_or(SanError::TokenOverflow {
            place,
            cap: u32::MAX,
        })?;
        Ok(())
    }

    pub fn take(&mut self, place: PlaceId, tokens: u32) -> Result<(), SanError> {
        let slot = self
            .0
            .get_mut(place.0)
            .ok_or(SanError::UnknownPlace(place))?;
        if *slot < tokens {
            return Err(SanError::TokenUnderflow {
                place,
                have: *slot,
                need: tokens,
            });
        }
        *slot -= tokens;
        Ok(())
    }

    /// Stable 64-bit FNV-1a hash of the token vector, used in traces.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.0.iter() {
            for b in t.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

impl fmt::Debug for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl From<Vec<u32>> for Marking {
    fn from(v: Vec<u32>) -> Self {
        Marking::new(v)
    }
}
