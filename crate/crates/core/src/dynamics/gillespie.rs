use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gibbs::replica_rng;
use crate::lattice::Configuration;

use super::RateSpec;

/// One spin flip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(rename = "t")]
    pub time: f64,
    pub site: usize,
}

/// A piecewise-constant spin path on `[0, horizon]`, stored as its flips.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub initial: Configuration,
    pub horizon: f64,
    /// Strictly increasing times in `(0, horizon]`.
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn new(initial: Configuration, horizon: f64, events: Vec<Event>) -> Result<Self> {
        let mut last = 0.0;
        for e in &events {
            initial.lattice().check_site(e.site)?;
            if !(e.time > last) || e.time > horizon {
                return Err(invalid(format!(
                    "event times must increase strictly inside (0, {horizon}], got {} after {last}",
                    e.time
                )));
            }
            last = e.time;
        }
        Ok(Trajectory {
            initial,
            horizon,
            events,
        })
    }

    /// `N^y_t`: flips at `site` up to the horizon.
    pub fn count(&self, site: usize) -> usize {
        self.events.iter().filter(|e| e.site == site).count()
    }

    /// Configuration at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Configuration {
        let mut c = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            c.spins_mut()[e.site] *= -1;
        }
        c
    }

    pub fn final_state(&self) -> Configuration {
        self.state_at(self.horizon)
    }

    /// The same jump times started from `initial` with `site` flipped.
    pub fn flipped_at(&self, site: usize) -> Result<Trajectory> {
        Ok(Trajectory {
            initial: self.initial.flip(site)?,
            horizon: self.horizon,
            events: self.events.clone(),
        })
    }

    /// One JSON object `{"t":…,"site":…}` per line.
    pub fn write_json_lines<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Exact continuous-time simulation of the flip process on the rate volume
/// up to `t`. Only rates touched by a flip are recomputed.
pub fn gillespie_simulate(
    initial: &Configuration,
    rates: &RateSpec,
    t: f64,
    seed: u64,
) -> Result<Trajectory> {
    gillespie_replica(initial, rates, t, seed, 0)
}

/// As [`gillespie_simulate`], on the RNG stream of replica `replica`.
pub fn gillespie_replica(
    initial: &Configuration,
    rates: &RateSpec,
    t: f64,
    seed: u64,
    replica: usize,
) -> Result<Trajectory> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!("horizon must be finite and >= 0, got {t}")));
    }
    if initial.lattice() != rates.lattice() {
        return Err(Error::Mismatch(
            "initial configuration lives on another lattice".into(),
        ));
    }
    let mut rng = replica_rng(seed, replica);
    let sites = rates.volume().sites().to_vec();
    let mut state = initial.clone();
    let spins = state.spins_mut();
    // the outside of the volume is frozen at the rate boundary
    for (s, b) in spins.iter_mut().zip(rates.base().spins()) {
        *s = *b;
    }
    for &x in &sites {
        spins[x] = initial.get(x);
    }
    let start = state.clone();
    let position = |x: usize| sites.binary_search(&x).expect("site in volume");
    let dependents: Vec<Vec<usize>> = sites
        .iter()
        .map(|&x| rates.dependents(x).into_iter().map(position).collect())
        .collect();
    let mut c: Vec<f64> = sites
        .iter()
        .map(|&x| rates.rate(state.spins(), x))
        .collect();
    let mut total: f64 = c.iter().sum();
    let mut now = 0.0;
    let mut events = Vec::new();
    let mut since_resum = 0usize;
    loop {
        if total <= 0.0 {
            break;
        }
        let u: f64 = rng.random();
        now += -(1.0 - u).ln() / total;
        if now > t {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pos = c.len() - 1;
        for (i, &r) in c.iter().enumerate() {
            if target < r {
                pos = i;
                break;
            }
            target -= r;
        }
        let x = sites[pos];
        state.spins_mut()[x] *= -1;
        events.push(Event { time: now, site: x });
        for &p in &dependents[pos] {
            let r = rates.rate(state.spins(), sites[p]);
            total += r - c[p];
            c[p] = r;
        }
        since_resum += 1;
        if since_resum == 1024 {
            // bound the drift of the running total
            total = c.iter().sum();
            since_resum = 0;
        }
    }
    Ok(Trajectory {
        initial: start,
        horizon: t,
        events,
    })
}
