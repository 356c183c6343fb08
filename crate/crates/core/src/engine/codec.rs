//! Wire encoding for keys and payloads.
//!
//! Integers are encoded big-endian with fixed width, so for unsigned
//! integers and tuples of them, byte-lexicographic order equals numeric
//! order. The engine sorts keys (and values within a key group) by bytes.

use bincode::Options;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;

fn options() -> impl Options {
    bincode::DefaultOptions::new()
        .with_big_endian()
        .with_fixint_encoding()
}

pub fn encode<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    options()
        .serialize(value)
        .expect("in-memory serialization of plain data cannot fail")
}

pub fn decode<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    Ok(options().deserialize(bytes)?)
}
