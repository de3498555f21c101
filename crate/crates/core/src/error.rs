use core::fmt;

/// Failure modes shared by every numerical operation in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// The evaluation point lies outside the operation's domain.
    Domain {
        op: &'static str,
        reason: &'static str,
    },
    /// A quadrature or tail estimate did not reach the requested accuracy.
    Accuracy {
        op: &'static str,
        achieved: f64,
        requested: f64,
    },
    /// The ODE integrator could not continue past `time`.
    Integration { time: f64 },
    /// The orbit did not escape within the time budget.
    Divergence { time: f64 },
    /// The Borel cutoff search found a violating sample above the budget.
    Construction { level: usize, f: f64, weighted: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::Domain { op, reason } => write!(f, "{op}: point outside domain ({reason})"),
            Error::Accuracy {
                op,
                achieved,
                requested,
            } => write!(
                f,
                "{op}: accuracy {achieved:.3e} not within requested {requested:.3e}"
            ),
            Error::Integration { time } => write!(f, "integration failed at t = {time}"),
            Error::Divergence { time } => write!(f, "orbit did not escape by t = {time}"),
            Error::Construction { level, f: fv, weighted } => write!(
                f,
                "cutoff construction failed at level {level}: sample with f = {fv} has weighted derivative {weighted:.3e}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

pub(crate) fn domain(op: &'static str, reason: &'static str) -> Error {
    Error::Domain { op, reason }
}
