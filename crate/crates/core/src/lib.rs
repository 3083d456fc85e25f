//! Scheduling and simulation of concurrent directional transmissions in a
//! mmWave WLAN where wireless nodes may bypass their access point and talk
//! directly to each other.

pub mod engine;
pub mod fixture;
pub mod golden;
pub mod model;
pub mod optimal;
pub mod parallel;
pub mod pathsel;
pub mod radio;
pub mod scenario;
pub mod sched;
pub mod topology;
pub mod traffic;
