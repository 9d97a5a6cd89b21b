//! Lobbies, game sessions, logs and the network front end.

pub mod hub;
pub mod lobby;
pub mod log;
pub mod net;
pub mod session;

pub use hub::{ConnId, Delivery, Hub};
pub use lobby::{Lobby, LobbyError, Member};
pub use log::{replay, LogHeader, ReplayError, ReplayReport, SessionLog};
pub use net::{serve, ServeOptions};
pub use session::{Outbound, Session};
