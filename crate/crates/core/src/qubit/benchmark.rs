use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tail mass of the photon-number distribution left out of the sums.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// How the memory efficiency constrains the measure-and-prepare strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EfficiencyConstraint {
    /// The cheater must answer with probability eta * (1 - p0), the rate of
    /// a memory of efficiency eta fed with the same pulses.
    #[default]
    NonVacuum,
    /// Answer probability equals eta itself.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    /// Best classical conditional fidelity.
    pub bound: f64,
    /// Set when the constraint asked for more answers than there are
    /// non-vacuum pulses; `bound` is then the unconstrained value.
    pub infeasible: bool,
    /// Largest photon number kept in the sums.
    pub n_max: usize,
}

/// Optimal measure-and-prepare fidelity for N identical qubits.
pub fn fidelity_n(n: usize) -> f64 {
    (n as f64 + 1.0) / (n as f64 + 2.0)
}

/// Poisson probabilities p_0..p_{n_max}, truncated once the remaining tail
/// mass is below [`TAIL_TOLERANCE`].
pub fn poisson_distribution(nbar: f64) -> Vec<f64> {
    let mut p = vec![(-nbar).exp()];
    let mut cum = p[0];
    let mut n = 0usize;
    while 1.0 - cum > TAIL_TOLERANCE || (n as f64) < nbar {
        n += 1;
        let next = p[n - 1] * nbar / n as f64;
        p.push(next);
        cum += next;
        if n > 100_000 {
            break;
        }
    }
    p
}

/// Greedy optimum for an explicit photon-number distribution `p[N]`:
/// since (N+1)/(N+2) grows with N, the cheater answers on the largest
/// photon numbers first and partially on the marginal one until the answer
/// mass reaches `mass`.
pub fn benchmark_for_distribution(p: &[f64], mass: f64) -> BenchmarkResult {
    let available: f64 = p.iter().skip(1).sum();
    let n_max = p.len().saturating_sub(1);
    if mass >= available {
        let num: f64 = p.iter().enumerate().skip(1).map(|(n, &q)| q * fidelity_n(n)).sum();
        return BenchmarkResult {
            bound: num / available,
            infeasible: mass > available * (1.0 + 1e-12),
            n_max,
        };
    }
    let mut left = mass;
    let mut num = 0.0;
    for n in (1..p.len()).rev() {
        let take = p[n].min(left);
        num += take * fidelity_n(n);
        left -= take;
        if left <= 0.0 {
            break;
        }
    }
    BenchmarkResult {
        bound: num / mass,
        infeasible: false,
        n_max,
    }
}

/// Classical benchmark for a weak coherent input with mean photon number
/// `nbar` and a memory of efficiency `efficiency`.
pub fn classical_benchmark(nbar: f64, efficiency: f64, constraint: EfficiencyConstraint) -> Result<BenchmarkResult> {
    if !(nbar.is_finite() && nbar > 0.0) {
        return Err(Error::InvalidConfig("benchmark mean photon number must be > 0".into()));
    }
    if !(efficiency.is_finite() && efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::InvalidConfig("benchmark efficiency must be in (0, 1]".into()));
    }
    let p = poisson_distribution(nbar);
    let non_vacuum = -(-nbar).exp_m1();
    let mass = match constraint {
        EfficiencyConstraint::NonVacuum => efficiency * non_vacuum,
        EfficiencyConstraint::Absolute => efficiency,
    };
    // Renormalize the kept terms to the exact non-vacuum mass so the
    // unconstrained limit is not biased by the truncation.
    let kept: f64 = p.iter().skip(1).sum();
    let scaled: Vec<f64> = p
        .iter()
        .enumerate()
        .map(|(n, &q)| if n == 0 { q } else { q * non_vacuum / kept })
        .collect();
    Ok(benchmark_for_distribution(&scaled, mass))
}
