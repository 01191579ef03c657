//! Policy files, visual attributes, views, exports and duty reports.

mod duties;
mod file;
mod view;
mod visual;

pub use duties::{query_duties, DutyEntry, DutyFilter, DutyReport};
pub use file::{load_policy, load_simulation, save_policy, PolicyFile};
pub use view::{export_dot, export_json, export_view, AttrMatch, EdgeExport, GraphExport, NodeExport, PortExport, ViewFilter};
pub use visual::{
    color_classes, compute_visuals, membership, port_labels, EdgeColor, EdgeVisual, NodeColor, NodeVisual, Shape,
    Visuals,
};

use thiserror::Error;

use crate::obligation::ObligationError;
use crate::policy::PolicyError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkspaceError {
    #[error("cannot parse policy file: {0}")]
    Parse(String),

    #[error("`{entity}`: {reason}")]
    Type { entity: String, reason: String },

    #[error("unknown view `{0}`")]
    BadView(String),

    #[error(transparent)]
    Policy(#[from] PolicyError),

    #[error(transparent)]
    Obligation(#[from] ObligationError),
}
