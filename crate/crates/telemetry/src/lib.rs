//! Channel-based telemetry: durable per-channel logs, feed queries, CSV
//! export, and the setpoint and actuator endpoints wired to each
//! channel's controller.

pub mod channel;
pub mod http;
pub mod service;
pub mod store;

pub use channel::{ChannelConfig, TelemetryConfig};
pub use http::router;
pub use service::{
    ActuatorView, ActuatorsView, AlertRecord, ChannelSink, ControlPlane, FeedFilter, Mode,
    TelemetryError, TelemetryService,
};
pub use store::{ChannelLog, Entry, FieldValues, StoreError, FIELD_COUNT};
