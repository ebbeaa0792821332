//! Core of the citytrail location-based quiz game: geodesy, content packs,
//! the per-session game engine and the account/result store.

pub mod content;
pub mod engine;
pub mod geo;
pub mod persistence;

pub use content::{ContentPack, Difficulty};
pub use engine::{Session, TriggerEvent};
pub use geo::GeoPoint;
