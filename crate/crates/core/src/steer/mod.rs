//! Live steering over TCP: decimated snapshots out, commands in.

pub mod protocol;
mod server;

pub use protocol::{decode, encode, FullState, MassPosition, Message, ProtocolError, Snapshot, PROTOCOL_VERSION};
pub use server::{serve, ServeConfig, ServeError, Server};
