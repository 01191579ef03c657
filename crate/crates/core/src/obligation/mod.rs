//! Events, event schemes, duty instantiation and duty states.
//!
//! A [`SimulationState`] walks one history of a policy graph event by
//! event. Processing an event that instantiates the start scheme of a
//! generic obligation issues a duty to every principal the obligation
//! applies to; a later event instantiating the end scheme closes the duty's
//! interval. [`DutyState`] is then pending, fulfilled or violated.

mod event;
mod state;

pub use event::{event_matches_scheme, Event, EventScheme, VAR_PREFIX};
pub use state::{link_event, Duty, DutyState, SimulationState, StepReport};

use thiserror::Error;

use crate::policy::PolicyError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObligationError {
    #[error("scheme `{scheme}` uses undeclared variable `{var}`")]
    UndeclaredVariable { scheme: String, var: String },

    #[error("no duty with id {0}")]
    UnknownDuty(usize),

    #[error("event `{event}` at time {time} precedes the last event (time {last})")]
    TimeRegression { event: String, time: i64, last: i64 },

    #[error("event id `{0}` is already used by a different event")]
    DuplicateEvent(String),

    #[error("event `{next}` is scheduled next; process it before adding new events")]
    ScheduledEventsPending { next: String },

    #[error("no scheduled event left to process")]
    NothingScheduled,

    #[error(transparent)]
    Policy(#[from] PolicyError),
}
