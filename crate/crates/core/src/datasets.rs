//! Bundled fullerene adjacency tables.

use crate::error::{Error, Result};
use crate::io::{parse_adjacency, AdjacencyList};

const C60: &str = include_str!("../data/c60.adj");
const C100: &str = include_str!("../data/c100.adj");

pub const NAMES: [&str; 2] = ["C60", "C100"];

pub fn builtin_dataset(name: &str) -> Result<AdjacencyList> {
    let text = match name.to_ascii_uppercase().as_str() {
        "C60" => C60,
        "C100" => C100,
        _ => return Err(Error::UnknownDataset(name.to_string())),
    };
    parse_adjacency(text)
}
