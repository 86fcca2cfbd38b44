//! Slow, independent reference implementations for test assertions, plus
//! seeded instance generators shared by the test suites. Nothing here calls
//! into the engine's algorithms; only plain data types are shared.

pub mod capture;
pub mod gen;
pub mod lifecycle;
pub mod rbs;
pub mod scan;
