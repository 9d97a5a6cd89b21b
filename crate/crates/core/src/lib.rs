pub mod config;
pub mod content;
pub mod game;
pub mod rng;
pub mod strategy;
pub mod protocol;
pub mod server;
pub mod bots;
pub mod cli;
