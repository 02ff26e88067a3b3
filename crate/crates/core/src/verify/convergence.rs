//! Thermostatic value functions against the junction limit as thresholds vanish.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::hjb::{dirichlet_field, solve_thermostatic, FieldKind, ValueField};
use crate::junction::{JunctionReport, Sigma};
use crate::model::{JunctionKind, Scenario, ThermostatConfig};
use crate::scalar::Real;

/// How the thresholds shrink with `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdFamily {
    /// `(-eps, eps)` on two branches.
    Twofold,
    /// `(eps, eps, eps)`.
    Uniform,
    /// `eps^2` on the given branch, `eps` on the other two.
    Squared(i32),
}

impl ThresholdFamily {
    /// The four threefold families whose limits are compared.
    pub const CANONICAL: [ThresholdFamily; 4] = [
        ThresholdFamily::Uniform,
        ThresholdFamily::Squared(1),
        ThresholdFamily::Squared(2),
        ThresholdFamily::Squared(3),
    ];

    pub fn default_for(kind: JunctionKind) -> Self {
        match kind {
            JunctionKind::Twofold => ThresholdFamily::Twofold,
            JunctionKind::Threefold => ThresholdFamily::Uniform,
        }
    }

    pub fn config<T: Real>(self, eps: T) -> ThermostatConfig<T> {
        match self {
            ThresholdFamily::Twofold => ThermostatConfig::twofold(eps),
            ThresholdFamily::Uniform => ThermostatConfig::uniform(eps),
            ThresholdFamily::Squared(k) => {
                let mut t = [eps; 3];
                if (1..=3).contains(&k) {
                    t[(k - 1) as usize] = eps * eps;
                }
                ThermostatConfig::threefold(t)
            }
        }
    }

    /// Pair of branches cycling in the limit, for the squared families.
    pub fn sigma(self) -> Option<Sigma> {
        match self {
            ThresholdFamily::Twofold => None,
            ThresholdFamily::Uniform => Some(Sigma::S123),
            ThresholdFamily::Squared(1) => Some(Sigma::S23),
            ThresholdFamily::Squared(2) => Some(Sigma::S13),
            ThresholdFamily::Squared(_) => Some(Sigma::S12),
        }
    }

    fn check(self, s: &Scenario<impl Real>) -> Result<()> {
        let ok = match self {
            ThresholdFamily::Twofold => s.kind() == JunctionKind::Twofold,
            ThresholdFamily::Uniform => s.kind() == JunctionKind::Threefold,
            ThresholdFamily::Squared(k) => s.kind() == JunctionKind::Threefold && (1..=3).contains(&k),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("family {self} does not fit a {:?} scenario", s.kind())))
        }
    }
}

impl std::fmt::Display for ThresholdFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ThresholdFamily::Twofold => f.write_str("twofold"),
            ThresholdFamily::Uniform => f.write_str("uniform"),
            ThresholdFamily::Squared(k) => write!(f, "squared{k}"),
        }
    }
}

impl std::str::FromStr for ThresholdFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "twofold" => Ok(ThresholdFamily::Twofold),
            "uniform" => Ok(ThresholdFamily::Uniform),
            "squared1" => Ok(ThresholdFamily::Squared(1)),
            "squared2" => Ok(ThresholdFamily::Squared(2)),
            "squared3" => Ok(ThresholdFamily::Squared(3)),
            other => Err(Error::InvalidArgument(format!(
                "unknown threshold family `{other}` (twofold, uniform, squared1, squared2, squared3)"
            ))),
        }
    }
}

/// Junction value the family converges to: the convexified value of its
/// cycle, unless a state constraint is cheaper. `report` must contain the
/// threefold ingredients (either threefold mode).
pub fn family_limit<T: Real>(family: ThresholdFamily, report: &JunctionReport<T>) -> Result<(T, Vec<String>)> {
    let cycle = match family.sigma() {
        None => report
            .u0_twofold
            .as_ref()
            .map(|u| ("u0".to_string(), u.value))
            .ok_or_else(|| Error::InvalidArgument("report has no twofold value".into()))?,
        Some(Sigma::S123) => report
            .u123
            .as_ref()
            .map(|u| ("u123".to_string(), u.value))
            .ok_or_else(|| Error::InvalidArgument("report has no three-branch value".into()))?,
        Some(sigma) => report
            .u_pair
            .iter()
            .find(|(i, j, _)| Sigma::pair(*i, *j) == Some(sigma))
            .map(|(_, _, u)| (format!("u{sigma}"), u.value))
            .ok_or_else(|| Error::InvalidArgument(format!("report has no pair value {sigma}")))?,
    };
    let mut all = vec![cycle];
    all.extend(report.v_sc.iter().map(|(id, v)| (format!("V_sc({id})"), *v)));
    let best = all.iter().map(|a| a.1).fold(T::infinity(), T::min);
    let tie = T::lit(crate::junction::TIE_TOL) * best.abs().max(T::one());
    let sources = all.into_iter().filter(|a| (a.1 - best).abs() <= tie).map(|a| a.0).collect();
    Ok((best, sources))
}

/// Minimum of the limits of the canonical threefold families, with each
/// family's limit.
pub fn liminf_over_families<T: Real>(report: &JunctionReport<T>) -> Result<(T, Vec<(ThresholdFamily, T)>)> {
    let limits = ThresholdFamily::CANONICAL
        .iter()
        .map(|&f| family_limit(f, report).map(|(v, _)| (f, v)))
        .collect::<Result<Vec<_>>>()?;
    let min = limits.iter().map(|l| l.1).fold(T::infinity(), T::min);
    Ok((min, limits))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub family: ThresholdFamily,
    pub epsilons: Vec<f64>,
    /// `sup |V_eps - V_limit|` over the nodes at or beyond the junction.
    pub sup_errors: Vec<f64>,
    /// `max_{i,j} |V_eps(0, i) - V_eps(0, j)|`.
    pub junction_gap: Vec<f64>,
    /// `V_eps(0, i)` per branch id.
    pub junction_values: Vec<Vec<(i32, f64)>>,
    pub limit_value: f64,
    /// Junction ingredients attaining the limit value.
    pub limit_sources: Vec<String>,
    /// Least-squares slope of `log sup_error` against `log eps`; `None` with
    /// fewer than two positive errors.
    pub empirical_order: Option<f64>,
    pub outer_iterations: Vec<usize>,
}

impl ConvergenceStudy {
    pub fn errors_decreasing(&self) -> bool {
        self.sup_errors.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn gap_decreasing(&self) -> bool {
        self.junction_gap.windows(2).all(|w| w[1] <= w[0])
    }

    /// `max_i |V_eps(0, i) - limit|` per eps.
    pub fn junction_errors(&self) -> Vec<f64> {
        self.junction_values
            .iter()
            .map(|vals| vals.iter().map(|(_, v)| (v - self.limit_value).abs()).fold(0.0, f64::max))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,sup_error,junction_gap\n");
        for ((e, err), gap) in self.epsilons.iter().zip(&self.sup_errors).zip(&self.junction_gap) {
            out.push_str(&format!("{e},{err},{gap}\n"));
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let v = json!({
            "family": self.family.to_string(),
            "epsilons": self.epsilons,
            "limit_value": self.limit_value,
            "limit_sources": self.limit_sources,
            "empirical_order": self.empirical_order,
            "junction_values": self.junction_values,
            "outer_iterations": self.outer_iterations,
            "verdicts": {
                "errors_decreasing": self.errors_decreasing(),
                "gap_decreasing": self.gap_decreasing(),
            },
        });
        serde_json::to_string_pretty(&v).expect("plain json") + "\n"
    }
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solves the thermostatic problem for every `eps` (in parallel) and measures
/// the distance to the limit field of `family`. The ingredients are taken
/// from `report`; `epsilons` must be strictly decreasing.
pub fn run_convergence<T: Real>(
    s: &Scenario<T>,
    family: ThresholdFamily,
    report: &JunctionReport<T>,
    epsilons: &[T],
    tol: T,
) -> Result<ConvergenceStudy> {
    family.check(s)?;
    if epsilons.is_empty() || epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("epsilons must be nonempty and strictly decreasing".into()));
    }
    let (limit, sources) = family_limit(family, report)?;
    let limit_field = dirichlet_field(s, &vec![limit.min(s.value_bound()); s.num_branches()], tol, FieldKind::Limit)?;

    let solved: Vec<ValueField<T>> = epsilons
        .par_iter()
        .map(|&e| solve_thermostatic(s, &family.config(e), tol))
        .collect::<Result<Vec<_>>>()?;

    let mut sup_errors = Vec::new();
    let mut junction_gap = Vec::new();
    let mut junction_values = Vec::new();
    let mut outer_iterations = Vec::new();
    for v in &solved {
        sup_errors.push(v.sup_distance(&limit_field)?.to_f64_lossy());
        let vals = v
            .branches
            .iter()
            .map(|b| (b.id, b.at(T::zero()).to_f64_lossy()))
            .collect::<Vec<_>>();
        let gap = vals
            .iter()
            .flat_map(|a| vals.iter().map(move |b| (a.1 - b.1).abs()))
            .fold(0.0, f64::max);
        junction_gap.push(gap);
        junction_values.push(vals);
        outer_iterations.push(v.meta.iterations);
    }
    let eps: Vec<f64> = epsilons.iter().map(|e| e.to_f64_lossy()).collect();
    let empirical_order = loglog_slope(&eps, &sup_errors);
    Ok(ConvergenceStudy {
        family,
        epsilons: eps,
        sup_errors,
        junction_gap,
        junction_values,
        limit_value: limit.to_f64_lossy(),
        limit_sources: sources,
        empirical_order,
        outer_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [0.4, 0.2, 0.1, 0.05];
        let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&[0.1], &[1.0]), None);
        assert_eq!(loglog_slope(&[0.2, 0.1], &[0.0, 0.0]), None);
    }

    #[test]
    fn squared_family_thresholds() {
        let c: ThermostatConfig<f64> = ThresholdFamily::Squared(2).config(0.1);
        assert_eq!(c.thresholds, vec![0.1, 0.1 * 0.1, 0.1]);
        assert_eq!(ThresholdFamily::Squared(2).sigma(), Some(Sigma::S13));
        assert_eq!("squared3".parse::<ThresholdFamily>().unwrap(), ThresholdFamily::Squared(3));
        assert!("squared4".parse::<ThresholdFamily>().is_err());
    }
}
