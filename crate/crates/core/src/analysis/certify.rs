use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interaction::{DobrushinReport, Interaction};
use crate::twolayer::fields;

/// Dobrushin certificate for `νS(t)` under independent flips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolvedCertificate {
    pub t: f64,
    pub delta: f64,
    /// The report of `U_ν`. Constrained Hamiltonians differ from `U_ν` only
    /// in single-site terms, which the norm ignores, so it holds for every
    /// conditioning layer and every time.
    pub report: DobrushinReport,
    /// True when the evolved measure is Gibbs at every time. False is
    /// inconclusive, not a disproof.
    pub certified_for_all_t: bool,
}

pub fn dobrushin_evolved(u_nu: &Interaction, t: f64, delta: f64) -> Result<EvolvedCertificate> {
    fields(t, delta)?;
    let report = u_nu.translation_part().dobrushin()?;
    Ok(EvolvedCertificate {
        t,
        delta,
        certified_for_all_t: report.satisfied,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ising_certificates() {
        let c = dobrushin_evolved(&Interaction::ising(0.2, 0.1, 2).unwrap(), 1.0, 1.0).unwrap();
        assert!((c.report.norm - 1.6).abs() < 1e-12 && c.certified_for_all_t);
        let c = dobrushin_evolved(&Interaction::ising(0.3, 0.0, 2).unwrap(), 1.0, 0.5).unwrap();
        assert!((c.report.norm - 2.4).abs() < 1e-12 && !c.certified_for_all_t);
        assert!(
            dobrushin_evolved(&Interaction::zero(3), 2.0, 1.0)
                .unwrap()
                .certified_for_all_t
        );
    }

    #[test]
    fn invalid_time_is_rejected() {
        assert!(dobrushin_evolved(&Interaction::zero(2), 0.0, 1.0).is_err());
    }
}
