use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid angular momentum: {0}")]
    AngularMomentum(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("singular coherence system (Gamma and gamma0 both zero)")]
    SingularSystem,

    #[error("quadrature did not converge: achieved relative error {achieved:.3e} > tolerance {tolerance:.3e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("pulse energy reaches the edge of the time grid ({fraction:.3e} of output energy within the outer 2%); enlarge grid")]
    GridAliasing { fraction: f64 },

    #[error("degenerate output pulse: transmitted energy fraction {0:.3e} too small to define a delay")]
    DegenerateOutput(f64),

    #[error("no control Rabi frequency in [{lo:.3e}, {hi:.3e}] rad/s gives delay {target:.3e} s (achievable {min_delay:.3e}..{max_delay:.3e} s)")]
    Bracket {
        target: f64,
        lo: f64,
        hi: f64,
        min_delay: f64,
        max_delay: f64,
    },

    #[error("tomography failed: {0}")]
    Tomography(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
