//! Diagrams `(Γ_n, E_n)`, their constraints, and depth-first enumeration.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::Volume;
use crate::certificates::BoundParameters;
use crate::error::{Error, Result};
use crate::generators::InteractionFamily;

/// Interaction supports `Γ_1..Γ_n` and excited sets `E_1..E_{n+1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagram {
    pub gammas: Vec<Volume>,
    pub ees: Vec<Volume>,
}

impl Diagram {
    pub fn order(&self) -> usize {
        self.gammas.len()
    }

    /// `D = ∪ Γ_i`.
    pub fn domain(&self) -> Volume {
        self.gammas.iter().fold(Volume::empty(), |acc, g| acc.union(g))
    }

    /// `E_{n+1} = ∅`: the term survives the infinite-time limit.
    pub fn is_stationary(&self) -> bool {
        self.ees.last().is_some_and(Volume::is_empty)
    }
}

/// Checks the compatibility constraints of `diag` for an observable on `x`.
///
/// # Errors
/// `ConstraintViolation` naming the first failed rule.
pub fn check_diagram(diag: &Diagram, x: &Volume) -> Result<()> {
    let n = diag.order();
    if n == 0 {
        return Err(Error::ConstraintViolation("order must be at least 1"));
    }
    if diag.ees.len() != n + 1 {
        return Err(Error::ConstraintViolation("need exactly n+1 excited sets"));
    }
    if !diag.ees[0].is_subset(x) {
        return Err(Error::ConstraintViolation("E_1 must lie in the observable support"));
    }
    for i in 0..n {
        let (gamma, e, next) = (&diag.gammas[i], &diag.ees[i], &diag.ees[i + 1]);
        if gamma.is_empty() || !gamma.is_connected() {
            return Err(Error::ConstraintViolation("interaction support must be non-empty and connected"));
        }
        if e.is_empty() {
            return Err(Error::ConstraintViolation("E_i must be non-empty for i <= n"));
        }
        if !e.intersects(gamma) {
            return Err(Error::ConstraintViolation("E_i must meet Gamma_i"));
        }
        if next.difference(gamma) != e.difference(gamma) {
            return Err(Error::ConstraintViolation("E_{i+1} and E_i must agree outside Gamma_i"));
        }
    }
    Ok(())
}

/// Emitted diagrams, each with its majorant weight, plus the majorant mass
/// of everything cut by the weight floor.
#[derive(Debug, Clone, Default)]
pub struct Enumeration {
    pub diagrams: Vec<(Diagram, f64)>,
    pub pruned_mass: f64,
}

impl Enumeration {
    pub fn len(&self) -> usize {
        self.diagrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagrams.is_empty()
    }

    /// Stationary diagrams only, in emission order.
    pub fn stationary(&self) -> impl Iterator<Item = &(Diagram, f64)> {
        self.diagrams.iter().filter(|(d, _)| d.is_stationary())
    }
}

/// Sum of the cb-norms of the terms on each distinct support touching `set`.
fn candidate_supports(fam: &InteractionFamily, set: &Volume) -> Vec<(Volume, f64)> {
    let mut grouped: BTreeMap<Volume, f64> = BTreeMap::new();
    for t in fam.terms_touching(set) {
        *grouped.entry(t.support().clone()).or_insert(0.0) += t.cb_norm();
    }
    grouped.into_iter().collect()
}

struct Walker<'a> {
    fam: &'a InteractionFamily,
    params: &'a BoundParameters,
    n_max: usize,
    floor: f64,
    by_order: Vec<Vec<(Diagram, f64)>>,
    pruned: f64,
    supports: BTreeMap<Volume, Vec<(Volume, f64)>>,
}

impl Walker<'_> {
    fn step_weight(&self, gamma: &Volume, cb: f64, e: &Volume) -> f64 {
        let p = self.params;
        (gamma.len() as f64 / p.l_dprime).exp() * cb / ((p.g - p.g_prime) * e.len() as f64)
    }

    fn prune(&mut self, w: f64) {
        if w > 0.0 {
            let r = self.params.ratio();
            self.pruned += if r < 1.0 { w / (1.0 - r) } else { f64::INFINITY };
        }
    }

    fn descend(&mut self, gammas: &mut Vec<Volume>, ees: &mut Vec<Volume>, weight: f64) {
        let e = ees.last().cloned().unwrap_or_default();
        let candidates = match self.supports.get(&e) {
            Some(c) => c.clone(),
            None => {
                let c = candidate_supports(self.fam, &e);
                self.supports.insert(e.clone(), c.clone());
                c
            }
        };
        for (gamma, cb) in candidates {
            let w = weight * self.step_weight(&gamma, cb, &e);
            let kept = e.difference(&gamma);
            for s in gamma.subsets() {
                let next = kept.union(&s);
                if !(w > self.floor) {
                    self.prune(w);
                    continue;
                }
                gammas.push(gamma.clone());
                ees.push(next.clone());
                let order = gammas.len();
                self.by_order[order - 1].push((Diagram { gammas: gammas.clone(), ees: ees.clone() }, w));
                if order < self.n_max && !next.is_empty() {
                    self.descend(gammas, ees, w);
                }
                gammas.pop();
                ees.pop();
            }
        }
    }
}

/// All diagrams of order `1..=n_max` for an observable on `x` whose
/// majorant weight `Π e^{|Γ_i|/l″} ‖V(Γ_i)‖_cb / ((g−g′)|E_i|)` exceeds
/// `weight_floor`. Emission is by order, then lexicographic in
/// `(E_1, Γ_1, E_2, …)`. A cut node contributes `w/(1−r)` to the pruned
/// mass, bounding its whole subtree.
pub fn enumerate_diagrams(
    x: &Volume,
    fam: &InteractionFamily,
    n_max: usize,
    weight_floor: f64,
    params: &BoundParameters,
) -> Enumeration {
    let mut walker = Walker {
        fam,
        params,
        n_max,
        floor: weight_floor,
        by_order: alloc::vec![Vec::new(); n_max],
        pruned: 0.0,
        supports: BTreeMap::new(),
    };
    if n_max == 0 {
        return Enumeration::default();
    }
    for e1 in x.subsets().into_iter().filter(|e| !e.is_empty()) {
        let mut gammas = Vec::new();
        let mut ees = alloc::vec![e1];
        walker.descend(&mut gammas, &mut ees, 1.0);
    }
    Enumeration { diagrams: walker.by_order.into_iter().flatten().collect(), pruned_mass: walker.pruned }
}
