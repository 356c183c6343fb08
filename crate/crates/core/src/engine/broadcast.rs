use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::engine::codec;
use crate::error::{Error, Result};

/// Read-only payloads replicated to every worker before a job runs.
///
/// Each name can be written once per epoch; [`BroadcastStore::advance_epoch`]
/// clears the store so iterative solvers can publish a fresh version.
#[derive(Debug, Default, Clone)]
pub struct BroadcastStore {
    epoch: u64,
    entries: HashMap<String, Arc<[u8]>>,
}

impl BroadcastStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn broadcast(&mut self, name: impl Into<String>, payload: Vec<u8>) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::DuplicateBroadcast(name));
        }
        self.entries.insert(name, payload.into());
        Ok(())
    }

    pub fn broadcast_value<T: Serialize + ?Sized>(
        &mut self,
        name: impl Into<String>,
        value: &T,
    ) -> Result<()> {
        self.broadcast(name, codec::encode(value))
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.entries.get(name).map(|p| &p[..])
    }

    pub fn advance_epoch(&mut self) {
        self.entries.clear();
        self.epoch += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_once_per_epoch() {
        let mut s = BroadcastStore::new();
        s.broadcast("c", vec![1, 2]).unwrap();
        assert!(matches!(
            s.broadcast("c", vec![3]),
            Err(Error::DuplicateBroadcast(n)) if n == "c"
        ));
        assert_eq!(s.get("c"), Some(&[1u8, 2][..]));
        s.advance_epoch();
        assert_eq!(s.get("c"), None);
        s.broadcast("c", vec![3]).unwrap();
        assert_eq!(s.epoch(), 1);
    }
}
