use serde::{Deserialize, Serialize};

use crate::protocol::ServerMetrics;

/// Per-session client counters and timing buckets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientMetrics {
    /// Requests sent, excluding `connect`, `stats`, `reset_stats` and `shutdown`.
    pub messages_sent: u64,
    pub creates_sent: u64,
    pub stores_sent: u64,
    pub deletes_sent: u64,
    pub fetches_sent: u64,
    pub reduces_sent: u64,
    pub cache_hits_expr: u64,
    pub cache_hits_reduce: u64,
    pub freelist_hits: u64,
    pub buffer_peak: u64,
    /// Fresh server arrays allocated on behalf of this session.
    pub arrays_created: u64,
    pub arrays_deleted: u64,
    /// Client time not spent marshalling or waiting on the wire.
    pub overhead_ns: u64,
    pub marshal_ns: u64,
    /// Round-trip time minus server-reported processing time.
    pub transport_ns: u64,
    /// Server processing time reported in replies to this session.
    pub server_parse_ns: u64,
    pub server_create_ns: u64,
    pub server_delete_ns: u64,
    pub server_compute_ns: u64,
}

/// Client counters merged with the latest server snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub client: ClientMetrics,
    pub server: Option<ServerMetrics>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }
}
