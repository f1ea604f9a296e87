use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    /// A right-hand side produced NaN or infinity.
    #[error("integration failed at t = {t}: component {component} is not finite")]
    NonFinite { t: f64, component: usize },

    #[error("capability exceeded: {0}")]
    Capability(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
