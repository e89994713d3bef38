use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// A point of the lattice `Z^d`.
///
/// The derived ordering is lexicographic in the coordinates; it fixes the
/// order of tensor factors everywhere in the crate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site(Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        let coords = coords.into();
        assert!(!coords.is_empty(), "a site needs at least one coordinate");
        Site(coords)
    }

    /// Site of the one-dimensional lattice.
    pub fn on_line(x: i64) -> Self {
        Site(vec![x])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn lattice_dim(&self) -> usize {
        self.0.len()
    }

    /// Graph distance in the nearest-neighbour lattice (the l¹ distance).
    pub fn distance(&self, other: &Site) -> u64 {
        debug_assert_eq!(self.0.len(), other.0.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.abs_diff(*b))
            .sum()
    }

    pub fn offset(&self, by: &[i64]) -> Site {
        debug_assert_eq!(self.0.len(), by.len());
        Site(self.0.iter().zip(by).map(|(a, b)| a + b).collect())
    }

    /// Difference vector `self - origin`.
    pub fn relative_to(&self, origin: &Site) -> Vec<i64> {
        self.0.iter().zip(&origin.0).map(|(a, b)| a - b).collect()
    }

    pub fn neighbors(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.0.len()).flat_map(move |axis| {
            [-1i64, 1].into_iter().map(move |step| {
                let mut c = self.0.clone();
                c[axis] += step;
                Site(c)
            })
        })
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [x] = self.0.as_slice() {
            return write!(f, "{x}");
        }
        write!(f, "(")?;
        for (k, x) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// A finite set of sites, kept sorted and free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Volume {
    sites: Vec<Site>,
}

impl Volume {
    pub fn new(sites: impl IntoIterator<Item = Site>) -> Self {
        let mut sites: Vec<Site> = sites.into_iter().collect();
        sites.sort();
        sites.dedup();
        Volume { sites }
    }

    pub fn empty() -> Self {
        Volume::default()
    }

    pub fn singleton(site: Site) -> Self {
        Volume { sites: vec![site] }
    }

    /// The sites `first, first+1, …, first+len-1` of `Z`.
    pub fn chain(first: i64, len: usize) -> Self {
        Volume::new((0..len as i64).map(|k| Site::on_line(first + k)))
    }

    /// Chain of `len` sites around the origin; for even `len` the extra
    /// site sits on the positive side.
    pub fn centered_chain(len: usize) -> Self {
        let first = -(((len as i64) - 1) / 2);
        Volume::chain(first, len)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Site> {
        self.sites.iter()
    }

    pub fn first(&self) -> Option<&Site> {
        self.sites.first()
    }

    pub fn position(&self, site: &Site) -> Option<usize> {
        self.sites.binary_search(site).ok()
    }

    pub fn contains(&self, site: &Site) -> bool {
        self.position(site).is_some()
    }

    pub fn is_subset(&self, other: &Volume) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    pub fn is_disjoint(&self, other: &Volume) -> bool {
        self.sites.iter().all(|s| !other.contains(s))
    }

    pub fn intersects(&self, other: &Volume) -> bool {
        !self.is_disjoint(other)
    }

    pub fn union(&self, other: &Volume) -> Volume {
        Volume::new(self.sites.iter().chain(&other.sites).cloned())
    }

    pub fn intersection(&self, other: &Volume) -> Volume {
        Volume {
            sites: self.sites.iter().filter(|s| other.contains(s)).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &Volume) -> Volume {
        Volume {
            sites: self.sites.iter().filter(|s| !other.contains(s)).cloned().collect(),
        }
    }

    pub fn translate(&self, by: &[i64]) -> Volume {
        Volume {
            sites: self.sites.iter().map(|s| s.offset(by)).collect(),
        }
    }

    /// Positions of `self`'s sites inside `outer`, or `None` if not contained.
    pub fn positions_in(&self, outer: &Volume) -> Option<Vec<usize>> {
        self.sites.iter().map(|s| outer.position(s)).collect()
    }

    /// Connectedness under nearest-neighbour adjacency. The empty set is not connected.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.sites.first() else {
            return false;
        };
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([start.clone()]);
        seen.insert(start.clone());
        while let Some(s) = queue.pop_front() {
            for n in s.neighbors() {
                if self.contains(&n) && seen.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == self.sites.len()
    }

    /// Minimal pairwise graph distance; `u64::MAX` when either set is empty.
    pub fn distance(&self, other: &Volume) -> u64 {
        let mut best = u64::MAX;
        for a in &self.sites {
            for b in &other.sites {
                best = best.min(a.distance(b));
            }
        }
        best
    }

    /// Distance from `self` to the complement of `outer` in `Z^d`.
    pub fn distance_to_complement(&self, outer: &Volume) -> u64 {
        if self.sites.iter().any(|s| !outer.contains(s)) {
            return 0;
        }
        let mut seen: BTreeSet<Site> = self.sites.iter().cloned().collect();
        let mut frontier: Vec<Site> = self.sites.clone();
        let mut depth = 0;
        while !frontier.is_empty() {
            depth += 1;
            let mut next = Vec::new();
            for s in &frontier {
                for n in s.neighbors() {
                    if !outer.contains(&n) {
                        return depth;
                    }
                    if seen.insert(n.clone()) {
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        u64::MAX
    }

    /// Largest pairwise distance inside the set.
    pub fn diameter(&self) -> u64 {
        let mut best = 0;
        for a in &self.sites {
            for b in &self.sites {
                best = best.max(a.distance(b));
            }
        }
        best
    }

    /// All subsets, ordered by the volume ordering.
    pub fn subsets(&self) -> Vec<Volume> {
        let n = self.sites.len();
        assert!(n < 24, "subset enumeration of {n} sites");
        let mut out: Vec<Volume> = (0u32..1 << n)
            .map(|mask| Volume {
                sites: (0..n).filter(|k| mask >> k & 1 == 1).map(|k| self.sites[k].clone()).collect(),
            })
            .collect();
        out.sort();
        out
    }
}

impl fmt::Display for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.sites.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<Site> for Volume {
    fn from_iter<T: IntoIterator<Item = Site>>(iter: T) -> Self {
        Volume::new(iter)
    }
}

impl<'a> IntoIterator for &'a Volume {
    type Item = &'a Site;
    type IntoIter = core::slice::Iter<'a, Site>;

    fn into_iter(self) -> Self::IntoIter {
        self.sites.iter()
    }
}
