pub mod clock;
pub mod collab;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod ntml;
pub mod planar;
pub mod scenario;
pub mod schedule;
pub mod time;
pub mod tmi;
pub mod trajectory;
