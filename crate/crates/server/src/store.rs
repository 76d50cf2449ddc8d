//! In-memory dataset sessions with least-recently-used eviction.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use phasefit_core::dataio::Dataset;
use sha2::{Digest, Sha256};

struct Slot {
    data: Arc<Dataset>,
    last_used: u64,
}

struct Inner {
    slots: HashMap<String, Slot>,
    clock: u64,
}

/// Uploaded datasets keyed by the SHA-256 of their bytes. Lost on restart.
pub struct SessionStore {
    capacity: usize,
    inner: Mutex<Inner>,
}

pub fn dataset_id(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..12])
}

impl SessionStore {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), inner: Mutex::new(Inner { slots: HashMap::new(), clock: 0 }) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `data` under `id`, evicting the least recently used entry when full.
    pub fn insert(&self, id: String, data: Dataset) -> Arc<Dataset> {
        let mut inner = self.inner.lock().unwrap();
        inner.clock += 1;
        let now = inner.clock;
        if let Some(slot) = inner.slots.get_mut(&id) {
            slot.last_used = now;
            return slot.data.clone();
        }
        if inner.slots.len() >= self.capacity {
            let oldest = inner.slots.iter().min_by_key(|(_, s)| s.last_used).map(|(k, _)| k.clone());
            if let Some(k) = oldest {
                inner.slots.remove(&k);
            }
        }
        let data = Arc::new(data);
        inner.slots.insert(id, Slot { data: data.clone(), last_used: now });
        data
    }

    pub fn get(&self, id: &str) -> Option<Arc<Dataset>> {
        let mut inner = self.inner.lock().unwrap();
        inner.clock += 1;
        let now = inner.clock;
        inner.slots.get_mut(id).map(|slot| {
            slot.last_used = now;
            slot.data.clone()
        })
    }
}
