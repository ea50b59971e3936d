use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

/// How envelope timestamps and reply timeouts are produced.
///
/// In simulated mode timestamps are a pure function of the tick, so logs of
/// identical runs are byte-identical, and replies are awaited indefinitely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    Simulated,
    WallClock,
}

/// Default reply timeout in wall-clock mode.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

impl ClockMode {
    pub fn timestamp(self, tick: u64) -> DateTime<Utc> {
        match self {
            ClockMode::Simulated => {
                let epoch = Utc
                    .with_ymd_and_hms(2024, 1, 1, 0, 0, 0)
                    .single()
                    .expect("fixed epoch");
                epoch + chrono::Duration::seconds(i64::try_from(tick).unwrap_or(i64::MAX / 2))
            }
            ClockMode::WallClock => Utc::now(),
        }
    }

    pub fn default_timeout(self) -> Option<Duration> {
        match self {
            ClockMode::Simulated => None,
            ClockMode::WallClock => Some(DEFAULT_TIMEOUT),
        }
    }
}
