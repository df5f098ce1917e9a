//! Marginal histograms with atom detection.
//!
//! Backends hand over one `(value-bits, weight)` entry per positive-weight
//! node or particle, in a deterministic global order. Entries are grouped by
//! bitwise-identical value; any group holding at least `atom_threshold` of
//! the normalized weight is reported as an atom, everything else is folded
//! into equal-width bins over the requested range. Atom mass is *not*
//! double-counted into bins, so bins + atoms + out-of-range mass sum to 1 up
//! to rounding.

use serde::Serialize;

use crate::sum::Kahan;
use crate::{Backend, Diagnostics};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramAtom {
    pub value: f64,
    pub mass: f64,
}

/// A marginal distribution over one real fluent after an action sequence.
#[derive(Clone, Debug, Serialize)]
pub struct Histogram {
    pub fluent: String,
    pub range: (f64, f64),
    pub bins: Vec<HistogramBin>,
    pub atoms: Vec<HistogramAtom>,
    /// Normalized mass falling outside the requested range (and not in an
    /// atom).
    pub outside_mass: f64,
    pub gamma: f64,
    pub backend: Backend,
    pub diagnostics: Diagnostics,
}

impl Histogram {
    /// Total reported mass: bins plus atoms (excludes `outside_mass`).
    pub fn reported_mass(&self) -> f64 {
        self.bins.iter().map(|b| b.mass).sum::<f64>()
            + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    fluent: String,
    range: (f64, f64),
    n_bins: usize,
    atom_threshold: f64,
    mut entries: Vec<(u64, f64)>,
    raw_gamma: f64,
    display_gamma: f64,
    backend: Backend,
    diagnostics: Diagnostics,
) -> Histogram {
    let (lo, hi) = range;
    let width = (hi - lo) / n_bins as f64;

    // Group by bitwise-identical value. The sort is stable, so weights
    // within a group keep their deterministic backend order.
    entries.sort_by_key(|e| e.0);
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < entries.len() {
        let bits = entries[i].0;
        let mut mass = Kahan::default();
        while i < entries.len() && entries[i].0 == bits {
            mass.add(entries[i].1);
            i += 1;
        }
        groups.push((f64::from_bits(bits), mass.value()));
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut bins = vec![0.0f64; n_bins];
    let mut atoms = Vec::new();
    let mut outside = 0.0f64;
    for (value, mass) in groups {
        let normalized = mass / raw_gamma;
        if normalized >= atom_threshold {
            atoms.push(HistogramAtom { value, mass: normalized });
            continue;
        }
        if value < lo || value > hi {
            outside += normalized;
            continue;
        }
        let k = (((value - lo) / width) as usize).min(n_bins - 1);
        bins[k] += normalized;
    }

    let bins = bins
        .into_iter()
        .enumerate()
        .map(|(k, mass)| HistogramBin {
            lo: lo + k as f64 * width,
            hi: lo + (k + 1) as f64 * width,
            mass,
        })
        .collect();

    Histogram {
        fluent,
        range,
        bins,
        atoms,
        outside_mass: outside,
        gamma: display_gamma,
        backend,
        diagnostics,
    }
}
