pub mod cover;
pub mod exact;
pub mod extremal;
pub mod families;
pub mod graph;
pub mod harness;
pub mod matching;
