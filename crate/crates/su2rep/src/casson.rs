//! The signed count of irreducible orbit charts: solve the variety, chart
//! every rigid orbit, count each chart's perturbed zeros, and combine the
//! signs into one integer invariant (reported doubled to stay exact).

use kuranishi::vfc::perturb_and_count;
use kuranishi::{Error, Result};
use serde::Serialize;

use crate::local::{local_chart, LocalChartOpts};
use crate::presentation::GroupPresentation;
use crate::solve::{solve_reps, RepOrbit, SolveOpts};

#[derive(Debug, Clone)]
pub struct CassonOpts {
    pub starts: usize,
    pub seed: u64,
    /// Orientation bit per orbit, +1 or -1; defaults to all +1.
    pub bits: Option<Vec<i8>>,
    /// Global orientation of the ambient pairing.
    pub sigma: i8,
}

impl Default for CassonOpts {
    fn default() -> Self {
        CassonOpts { starts: 100_000, seed: 0, bits: None, sigma: 1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CassonReport {
    pub orbits: Vec<RepOrbit>,
    /// Signed chart count per orbit, same order.
    pub counts: Vec<i64>,
    /// Twice the invariant; the invariant itself is `lambda2 / 2`.
    pub lambda2: i64,
    pub warnings: Vec<String>,
}

impl CassonReport {
    pub fn n(&self) -> usize {
        self.orbits.len()
    }
}

/// Counts irreducible orbits of a balanced homology-sphere presentation
/// and combines their chart counts. The orbit list must be stable across
/// three consecutive solver seeds or the run is rejected.
pub fn casson_count(p: &GroupPresentation, opts: &CassonOpts) -> Result<CassonReport> {
    if opts.sigma != 1 && opts.sigma != -1 {
        return Err(Error::invalid(
            "$.sigma",
            format!("sigma must be +1 or -1, got {}", opts.sigma),
        ));
    }
    let homology = p.homology_sphere_check()?;
    if !homology.homology_sphere {
        return Err(Error::invalid(
            "$.relators",
            format!(
                "abelianization determinant {} is not +-1; the signed orbit count is only \
                 an invariant for integral homology spheres",
                homology.det
            ),
        ));
    }

    let mut primary = None;
    let mut fingerprints: Vec<Vec<Vec<f64>>> = Vec::new();
    for (k, seed) in (opts.seed..opts.seed + 3).enumerate() {
        let report = solve_reps(p, SolveOpts {
            starts: opts.starts,
            seed,
            allow_positive_dim: false,
        })?;
        fingerprints.push(report.orbits.iter().map(|o| o.fingerprint.clone()).collect());
        if k == 0 {
            primary = Some(report);
        }
    }
    if fingerprints[1] != fingerprints[0] || fingerprints[2] != fingerprints[0] {
        return Err(Error::Other(format!(
            "unstable orbit count across seeds {}..={}: {} / {} / {} orbits",
            opts.seed,
            opts.seed + 2,
            fingerprints[0].len(),
            fingerprints[1].len(),
            fingerprints[2].len()
        )));
    }
    let mut report = primary.expect("seed loop ran");

    let n = report.orbits.len();
    let bits = match &opts.bits {
        None => vec![1i8; n],
        Some(b) => {
            if b.len() != n {
                return Err(Error::dim("orientation bits", n, b.len()));
            }
            if let Some(bad) = b.iter().find(|&&v| v != 1 && v != -1) {
                return Err(Error::invalid(
                    "$.bits",
                    format!("orientation bits must be +1 or -1, got {bad}"),
                ));
            }
            b.clone()
        }
    };

    let mut counts = Vec::with_capacity(n);
    let mut lambda2 = 0i64;
    for (orbit, &bit) in report.orbits.iter_mut().zip(&bits) {
        let chart = local_chart(p, &orbit.representative, 1, LocalChartOpts::default())?;
        let count = perturb_and_count(&chart, 1e-3, 0, 0.1)?;
        if !count.certified() {
            return Err(Error::Other(format!(
                "chart '{}' kept degenerate zeros through its perturbations",
                chart.id
            )));
        }
        orbit.orientation_bit = bit;
        let signed = bit as i64 * count.value;
        lambda2 += signed;
        counts.push(signed);
    }
    lambda2 *= opts.sigma as i64;

    Ok(CassonReport { orbits: report.orbits, counts, lambda2, warnings: report.warnings })
}
