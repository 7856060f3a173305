use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::state::State;

/// Tolerance on total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Atoms lighter than this are dropped after a propagation step.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

/// One `{state, weight}` record of the JSON form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub state: State,
    pub weight: f64,
}

/// Finitely supported probability measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDistribution {
    atoms: BTreeMap<State, f64>,
    pruned_mass: f64,
}

impl SparseDistribution {
    pub fn new(atoms: impl IntoIterator<Item = (State, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (state, w) in atoms {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "weight {w} at {state} is not positive"
                )));
            }
            if map.insert(state.clone(), w).is_some() {
                return Err(Error::InvalidDistribution(format!("duplicate atom {state}")));
            }
        }
        let dist = SparseDistribution {
            atoms: map,
            pruned_mass: 0.0,
        };
        dist.check_mass()?;
        Ok(dist)
    }

    pub fn dirac(state: State) -> Self {
        let mut atoms = BTreeMap::new();
        atoms.insert(state, 1.0);
        SparseDistribution {
            atoms,
            pruned_mass: 0.0,
        }
    }

    /// Builds from accumulated weights, pruning atoms below
    /// [`PRUNE_THRESHOLD`] and renormalizing when anything was pruned.
    pub(crate) fn from_accumulated(mut atoms: BTreeMap<State, f64>, carried_pruned: f64) -> Self {
        let mut pruned = 0.0;
        atoms.retain(|_, w| {
            if *w < PRUNE_THRESHOLD {
                pruned += *w;
                false
            } else {
                true
            }
        });
        if pruned > 0.0 {
            let total: f64 = atoms.values().sum();
            if total > 0.0 {
                atoms.values_mut().for_each(|w| *w /= total);
            }
        }
        SparseDistribution {
            atoms,
            pruned_mass: carried_pruned + pruned,
        }
    }

    pub fn check_mass(&self) -> Result<()> {
        let total = self.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} differs from 1 by more than {MASS_TOLERANCE}"
            )));
        }
        Ok(())
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&State, f64)> + '_ {
        self.atoms.iter().map(|(s, &w)| (s, w))
    }

    pub fn weight(&self, state: &State) -> f64 {
        self.atoms.get(state).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.values().sum()
    }

    /// Mass removed by pruning over the propagation history.
    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    pub fn support(&self) -> impl Iterator<Item = &State> + '_ {
        self.atoms.keys()
    }

    /// Probability of the set `{s : pred(s)}`.
    pub fn mass_where(&self, mut pred: impl FnMut(&State) -> bool) -> f64 {
        self.atoms
            .iter()
            .filter(|(s, _)| pred(s))
            .map(|(_, w)| w)
            .sum()
    }

    /// `⟨f, μ⟩`; fails on the first non-finite `f` value.
    pub fn integrate(&self, f: impl Fn(&State) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (s, &w) in &self.atoms {
            let v = f(s);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    state: s.clone(),
                    value: v,
                });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Convex combination `Σ c_k μ_k`; coefficients must sum to one.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a SparseDistribution)>) -> Result<Self> {
        let mut acc: BTreeMap<State, f64> = BTreeMap::new();
        let mut coeff_total = 0.0;
        let mut pruned = 0.0;
        for (c, d) in parts {
            coeff_total += c;
            pruned += c * d.pruned_mass;
            for (s, w) in d.atoms() {
                *acc.entry(s.clone()).or_insert(0.0) += c * w;
            }
        }
        if (coeff_total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "mixture coefficients sum to {coeff_total}"
            )));
        }
        acc.retain(|_, w| *w > 0.0);
        Ok(SparseDistribution {
            atoms: acc,
            pruned_mass: pruned,
        })
    }

    /// Image measure under `g`, merging atoms that land on the same state.
    pub fn map_states(&self, g: impl Fn(&State) -> State) -> Self {
        let mut acc: BTreeMap<State, f64> = BTreeMap::new();
        for (s, w) in self.atoms() {
            *acc.entry(g(s)).or_insert(0.0) += w;
        }
        SparseDistribution {
            atoms: acc,
            pruned_mass: self.pruned_mass,
        }
    }

    pub fn records(&self) -> Vec<AtomRecord> {
        self.atoms()
            .map(|(s, w)| AtomRecord {
                state: s.clone(),
                weight: w,
            })
            .collect()
    }
}

impl Serialize for SparseDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.records().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SparseDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<AtomRecord>::deserialize(deserializer)?;
        SparseDistribution::new(records.into_iter().map(|r| (r.state, r.weight)))
            .map_err(serde::de::Error::custom)
    }
}

/// Where an empirical measure came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub samples: usize,
    pub seed: Option<u64>,
}

/// Weighted sample cloud; repeated states are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    points: Vec<AtomRecord>,
    provenance: Provenance,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<(State, f64)>, provenance: Provenance) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("empty empirical measure".into()));
        }
        let mut total = 0.0;
        for (s, w) in &points {
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "weight {w} at {s} is not positive"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(EmpiricalMeasure {
            points: points
                .into_iter()
                .map(|(state, weight)| AtomRecord { state, weight })
                .collect(),
            provenance,
        })
    }

    /// Equal weights `1/N` on the samples.
    pub fn from_samples(samples: Vec<State>, seed: Option<u64>) -> Result<Self> {
        let n = samples.len();
        let w = 1.0 / n as f64;
        let points = samples.into_iter().map(|s| (s, w)).collect::<Vec<_>>();
        // 1/N summed N times can miss 1 by a few ulps
        let mut m = Self::new_unchecked_mass(points, Provenance { samples: n, seed })?;
        let total: f64 = m.points.iter().map(|p| p.weight).sum();
        m.points.iter_mut().for_each(|p| p.weight /= total);
        Ok(m)
    }

    fn new_unchecked_mass(points: Vec<(State, f64)>, provenance: Provenance) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("empty empirical measure".into()));
        }
        Ok(EmpiricalMeasure {
            points: points
                .into_iter()
                .map(|(state, weight)| AtomRecord { state, weight })
                .collect(),
            provenance,
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Common view over finitely supported measures for the transport solvers.
pub trait DiscreteMeasure {
    fn points(&self) -> Vec<(&State, f64)>;
}

impl DiscreteMeasure for SparseDistribution {
    fn points(&self) -> Vec<(&State, f64)> {
        self.atoms().collect()
    }
}

impl DiscreteMeasure for EmpiricalMeasure {
    fn points(&self) -> Vec<(&State, f64)> {
        self.points.iter().map(|p| (&p.state, p.weight)).collect()
    }
}
