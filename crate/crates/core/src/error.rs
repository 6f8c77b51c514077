use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A profile must contain at least one agent.
    EmptyProfile,
    /// A location, facility position or parameter fell outside its domain.
    Domain {
        what: &'static str,
        value: f64,
    },
    /// Agent index out of range for a profile of `n` agents.
    AgentIndex {
        index: usize,
        n: usize,
    },
    /// The log-Nash derivative is undefined because some utility is zero.
    SingularPoint {
        y: f64,
    },
    /// Bisection ran out of iterations; `[lo, hi]` is the last bracket.
    Convergence {
        lo: f64,
        hi: f64,
        iterations: usize,
    },
    /// Neither side of the middle agent passed the three-agent sign tests.
    InconsistentThreeAgentCase {
        x1: f64,
        x2: f64,
        x3: f64,
    },
    InvalidConfig(&'static str),
    UnknownMechanism(String),
    UnknownFamily(String),
    UnknownObjective(String),
    /// The family cannot be generated with the requested size.
    FamilySize {
        family: &'static str,
        size: usize,
    },
    EmptyInput(&'static str),
}

impl Error {
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::Convergence { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyProfile => write!(f, "profile has no agents"),
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::AgentIndex { index, n } => {
                write!(f, "agent index {index} out of range for {n} agents")
            }
            Error::SingularPoint { y } => {
                write!(
                    f,
                    "log-Nash derivative undefined at y = {y}: some utility is zero"
                )
            }
            Error::Convergence { lo, hi, iterations } => write!(
                f,
                "solver did not converge after {iterations} iterations; best bracket [{lo}, {hi}]"
            ),
            Error::InconsistentThreeAgentCase { x1, x2, x3 } => write!(
                f,
                "three-agent classification inconsistent for ({x1}, {x2}, {x3})"
            ),
            Error::InvalidConfig(msg) => write!(f, "invalid solver configuration: {msg}"),
            Error::UnknownMechanism(name) => write!(f, "unknown mechanism `{name}`"),
            Error::UnknownFamily(name) => write!(f, "unknown profile family `{name}`"),
            Error::UnknownObjective(name) => write!(f, "unknown objective `{name}`"),
            Error::FamilySize { family, size } => {
                write!(f, "family `{family}` cannot be generated with size {size}")
            }
            Error::EmptyInput(what) => write!(f, "{what} must not be empty"),
        }
    }
}

impl core::error::Error for Error {}
