//! Propagation of the forced set through the nonlinearity:
//! `Z^{n+1} = Z^n + {j + k : j in Z^0, k in Z^n, c_{j,k} != 0, j + k in lattice}`.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::models::{structure_coefficient, GnseConfig, ModelError, Wavevector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZnPropagation {
    /// `Z^0, Z^1, ...` up to and including the fixpoint (no repeats).
    pub sets: Vec<BTreeSet<Wavevector>>,
    /// The fixpoint is the whole truncated lattice.
    pub full: bool,
}

impl ZnPropagation {
    pub fn fixpoint(&self) -> &BTreeSet<Wavevector> {
        self.sets.last().expect("at least Z^0")
    }

    /// `{step, size}` per set plus the missing modes.
    pub fn summary_json(&self, cfg: &GnseConfig) -> serde_json::Value {
        let missing: Vec<String> = cfg
            .lattice()
            .modes()
            .iter()
            .filter(|k| !self.fixpoint().contains(k))
            .map(|k| k.to_string())
            .collect();
        serde_json::json!({
            "N": cfg.truncation,
            "r": crate::rational::format_rational(&cfg.aspect),
            "sizes": self.sets.iter().map(|s| s.len()).collect::<Vec<_>>(),
            "full": self.full,
            "missing": missing,
        })
    }
}

pub fn zn_propagation(cfg: &GnseConfig) -> Result<ZnPropagation, ModelError> {
    cfg.validate()?;
    let lattice = cfg.lattice();
    let r = &cfg.aspect;
    let z0: Vec<Wavevector> = cfg.forced_set().into_iter().collect();
    let mut sets = vec![z0.iter().copied().collect::<BTreeSet<_>>()];
    loop {
        let cur = sets.last().unwrap();
        let mut next = cur.clone();
        for &k in cur {
            for &j in &z0 {
                let l = j + k;
                if lattice.contains(l) && !structure_coefficient(j, k, r).is_zero() {
                    next.insert(l);
                }
            }
        }
        if next.len() == cur.len() {
            break;
        }
        sets.push(next);
    }
    let full = sets.last().unwrap().len() == lattice.len();
    Ok(ZnPropagation { sets, full })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ForcedMode;
    use crate::rational::int;

    fn cfg(n: usize, modes: &[(i64, i64)]) -> GnseConfig {
        GnseConfig::new(
            n,
            int(1),
            modes.iter().map(|&(a, b)| ForcedMode::unit(Wavevector(a, b))).collect(),
        )
    }

    #[test]
    fn axis_modes_stall() {
        let z = zn_propagation(&cfg(3, &[(1, 0), (0, 1)])).unwrap();
        assert!(!z.full);
        assert_eq!(z.sets.len(), 1);
        assert_eq!(z.fixpoint().len(), 4);
    }

    #[test]
    fn diagonal_mode_unlocks_growth() {
        let z = zn_propagation(&cfg(4, &[(1, 0), (0, 1), (1, 1)])).unwrap();
        assert!(z.sets[1].contains(&Wavevector(2, 1)));
        assert!(z.full);
    }
}
