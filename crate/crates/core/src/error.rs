use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown project `{0}`")]
    UnknownProject(String),
    #[error("project index {0} out of range")]
    ProjectIndex(usize),
    #[error("cost scheme column for project `{project}` sums to {sum}, expected 1")]
    RowSum { project: String, sum: f64 },
    #[error("invalid cost scheme: {0}")]
    InvalidScheme(String),
    #[error("negative component {value} at index {index}")]
    NegativeComponent { index: usize, value: f64 },
    #[error("gradient undefined on the boundary of the orthant (component {0} is zero)")]
    BoundaryGradient(usize),
    #[error("invalid coalition: {0}")]
    InvalidCoalition(String),
    #[error("coalition cannot cover its cost share at project `{project}` (shortfall {shortfall})")]
    Unaffordable { project: String, shortfall: f64 },
    #[error("net endowment of agent {agent} is negative at project `{project}`")]
    NegativeNetEndowment { agent: usize, project: String },
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error("enumeration too large: {0}")]
    EnumerationCap(String),
    #[error("hypothesis unmet: {0}")]
    Hypothesis(String),
    #[error("gradients of agents {first} and {second} are not proportional at project `{project}` (gap {gap})")]
    NonProportional { project: String, first: usize, second: usize, gap: f64 },
    #[error("allocation is not feasible (residual {0})")]
    Infeasible(f64),
    #[error("allocation is not Pareto optimal")]
    NotParetoOptimal,
    #[error("alpha out of [0,1]: {0}")]
    AlphaRange(f64),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("resize failed: {0}")]
    Resize(String),
}

pub type Result<T> = std::result::Result<T, Error>;
