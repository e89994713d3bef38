use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{DigitKernel, LocalSuperoperator, Volume};
use crate::error::{Error, Result};
use crate::generators::{InteractionFamily, SiteGenerators};
use crate::linalg::{self, CMatrix, C64, ZERO};

/// Dense matrices are only formed up to this dimension.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Free,
    Interaction,
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub support: Volume,
    pub kind: TermKind,
}

/// Optional boundary perturbation acting outside a bulk volume.
#[derive(Debug, Clone, Copy)]
pub struct Boundary<'a> {
    pub bulk: &'a Volume,
    pub terms: &'a InteractionFamily,
}

/// `L = Σ G(x) + Σ_{Γ⊆Λ} V(Γ) (+ Σ_{Γ⊆Λ∖Λ_bulk} W(Γ))`, applied matrix-free.
#[derive(Debug, Clone)]
pub struct FiniteVolumeGenerator {
    volume: Volume,
    bulk_volume: Volume,
    q: usize,
    catalog: Vec<CatalogEntry>,
    terms: Vec<LocalSuperoperator>,
    kernels: Vec<DigitKernel>,
    /// Sum of the single-site terms at each site, in volume order.
    site_parts: Vec<CMatrix>,
    norm_bound: f64,
}

/// Assembles the generator of `volume`.
///
/// # Errors
/// `SupportOverflow` when a finite-family term straddles the volume edge;
/// `BoundaryInsideBulk` when a boundary term touches the bulk.
pub fn assemble(
    volume: &Volume,
    generators: &SiteGenerators,
    interactions: &InteractionFamily,
    boundary: Option<Boundary<'_>>,
) -> Result<FiniteVolumeGenerator> {
    if volume.is_empty() {
        return Err(Error::InvalidArgument("empty volume".into()));
    }
    let q = generators.q();
    let mut catalog = Vec::new();
    let mut terms = Vec::new();
    let mut push = |map: LocalSuperoperator, kind| {
        catalog.push(CatalogEntry { support: map.support().clone(), kind });
        terms.push(map);
    };

    for x in volume {
        push(generators.at(x)?, TermKind::Free);
    }
    for t in interactions.terms_outside(volume) {
        if t.support().intersects(volume) {
            return Err(Error::SupportOverflow(format!("{}", t.support())));
        }
    }
    for t in interactions.terms_within(volume) {
        push(t.map().clone(), TermKind::Interaction);
    }

    let bulk_volume = match boundary {
        None => volume.clone(),
        Some(b) => {
            if !b.bulk.is_subset(volume) {
                return Err(Error::SupportNotContained { inner: format!("{}", b.bulk), outer: format!("{volume}") });
            }
            let ring = volume.difference(b.bulk);
            for t in b.terms.terms_outside(&ring) {
                if t.support().intersects(b.bulk) {
                    return Err(Error::BoundaryInsideBulk(format!("{}", t.support())));
                }
                if t.support().intersects(volume) {
                    return Err(Error::SupportOverflow(format!("{}", t.support())));
                }
            }
            for t in b.terms.terms_within(&ring) {
                push(t.map().clone(), TermKind::Boundary);
            }
            b.bulk.clone()
        }
    };

    FiniteVolumeGenerator::from_terms(volume.clone(), bulk_volume, q, catalog, terms)
}

impl FiniteVolumeGenerator {
    fn from_terms(
        volume: Volume,
        bulk_volume: Volume,
        q: usize,
        catalog: Vec<CatalogEntry>,
        terms: Vec<LocalSuperoperator>,
    ) -> Result<Self> {
        let mut site_parts = vec![CMatrix::zeros(q * q, q * q); volume.len()];
        // Fold every term into the first multi-site term that covers it, so
        // one pass over the vector handles several catalog entries.
        let mut merged: Vec<LocalSuperoperator> = Vec::new();
        let mut singles: Vec<&LocalSuperoperator> = Vec::new();
        for t in &terms {
            if t.support().len() == 1 {
                let k = volume.position(&t.support().sites()[0]).expect("term inside volume");
                site_parts[k] += t.matrix();
                singles.push(t);
            } else if let Some(m) = merged.iter_mut().find(|m| m.support() == t.support()) {
                *m = m.add(t)?;
            } else {
                merged.push(t.clone());
            }
        }
        for s in singles {
            if let Some(m) = merged.iter_mut().find(|m| s.support().is_subset(m.support())) {
                *m = m.add(s)?;
            } else if let Some(m) = merged.iter_mut().find(|m| m.support() == s.support()) {
                *m = m.add(s)?;
            } else {
                merged.push(s.clone());
            }
        }
        let kernels = merged.iter().map(|m| m.kernel_in(&volume)).collect::<Result<Vec<_>>>()?;
        let norm_bound = kernels.iter().map(|k| linalg::inf_norm(k.matrix()).max(linalg::one_norm(k.matrix()))).sum();
        Ok(FiniteVolumeGenerator { volume, bulk_volume, q, catalog, terms, kernels, site_parts, norm_bound })
    }

    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn bulk_volume(&self) -> &Volume {
        &self.bulk_volume
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn catalog(&self) -> &[CatalogEntry] {
        &self.catalog
    }

    /// The individual terms, in catalog order.
    pub fn terms(&self) -> &[LocalSuperoperator] {
        &self.terms
    }

    /// Hilbert space dimension `q^|Λ|`.
    pub fn hilbert_dim(&self) -> usize {
        self.q.pow(self.volume.len() as u32)
    }

    /// Superoperator dimension `q^{2|Λ|}`.
    pub fn dim(&self) -> usize {
        self.q.pow(2 * self.volume.len() as u32)
    }

    /// Upper bound on the induced 1- and ∞-norms of the generator matrix.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub(crate) fn site_parts(&self) -> &[CMatrix] {
        &self.site_parts
    }

    /// `out = L x` on column-stacked vectors.
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        for k in &self.kernels {
            k.apply_add(x, out);
        }
    }

    /// `out = L* x`, the Schrödinger-picture generator.
    pub fn apply_adjoint(&self, x: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        for k in &self.kernels {
            k.apply_adjoint_add(x, out);
        }
    }

    /// Dense matrix of `L`.
    ///
    /// # Errors
    /// `InvalidArgument` above [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<CMatrix> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::InvalidArgument(format!("dense matrix of dimension {n}")));
        }
        let mut m = CMatrix::zeros(n, n);
        for k in &self.kernels {
            m += k.to_dense();
        }
        Ok(m)
    }

    /// `‖L(1)‖` in the Euclidean norm of the vectorization.
    pub fn identity_residual(&self) -> f64 {
        let id = crate::algebra::vectorize(&CMatrix::identity(self.hilbert_dim(), self.hilbert_dim()));
        let mut out = vec![ZERO; self.dim()];
        self.apply(id.as_slice(), &mut out);
        out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, LocalOperator, Site};
    use crate::generators::{build_lindblad, LindbladSpec};
    use crate::linalg::c;
    use rand::SeedableRng;

    fn ising_parts(h: f64, j: f64) -> (SiteGenerators, InteractionFamily) {
        let on0 = |m| LocalOperator::on_site(Site::on_line(0), m).unwrap();
        let g = build_lindblad(&LindbladSpec::new(on0(pauli::sigma_z() * c(h, 0.0)), vec![on0(pauli::sigma_minus())])).unwrap();
        let xx = LocalOperator::product(&[(Site::on_line(0), pauli::sigma_x()), (Site::on_line(1), pauli::sigma_x())])
            .unwrap()
            .scale(c(j, 0.0));
        let fam = InteractionFamily::translation_invariant(vec![LocalSuperoperator::commutator(&xx)]).unwrap();
        (SiteGenerators::Uniform(g), fam)
    }

    #[test]
    fn single_site_volume_is_the_site_generator() {
        let (g, _) = ising_parts(0.3, 0.0);
        let gen = assemble(&Volume::chain(0, 1), &g, &InteractionFamily::empty(), None).unwrap();
        let SiteGenerators::Uniform(single) = &g else { unreachable!() };
        assert_eq!(&gen.to_dense().unwrap(), single.matrix());
    }

    #[test]
    fn matrix_equals_sum_of_embedded_terms() {
        let (g, fam) = ising_parts(0.3, 0.05);
        let volume = Volume::chain(0, 3);
        let gen = assemble(&volume, &g, &fam, None).unwrap();
        assert_eq!(gen.catalog().len(), 5);
        let mut want = CMatrix::zeros(64, 64);
        for t in gen.terms() {
            want += t.embed(&volume).unwrap().matrix();
        }
        let got = gen.to_dense().unwrap();
        assert!((got - &want).norm() < 1e-13);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = linalg::random_matrix(64, 1, &mut rng);
        let mut y = vec![ZERO; 64];
        gen.apply_adjoint(x.as_slice(), &mut y);
        let y_want = want.adjoint() * &x;
        assert!(y.iter().zip(y_want.iter()).all(|(a, b)| (a - b).norm() < 1e-13));
    }

    #[test]
    fn four_site_chain_annihilates_identity() {
        let (g, fam) = ising_parts(0.3, 0.05);
        let gen = assemble(&Volume::chain(0, 4), &g, &fam, None).unwrap();
        assert_eq!(gen.dim(), 256);
        assert!(gen.identity_residual() < 1e-12);
    }

    #[test]
    fn boundary_terms_must_stay_outside_the_bulk() {
        let (g, _) = ising_parts(0.3, 0.0);
        let pin = LocalSuperoperator::sandwich(&LocalOperator::on_site(Site::on_line(1), pauli::sigma_plus()).unwrap());
        let pin = pin.sub(&LocalSuperoperator::from_map(Volume::chain(1, 1), 2, |x| {
            let p = pauli::sigma_minus() * pauli::sigma_plus();
            (&p * x + x * &p) * c(0.5, 0.0)
        }))
        .unwrap();
        let w = InteractionFamily::finite(vec![pin]).unwrap();
        let outer = Volume::chain(0, 3);
        let bulk = Volume::chain(0, 1);
        let gen = assemble(&outer, &g, &InteractionFamily::empty(), Some(Boundary { bulk: &bulk, terms: &w })).unwrap();
        assert_eq!(gen.catalog().iter().filter(|e| e.kind == TermKind::Boundary).count(), 1);
        let bulk = Volume::chain(0, 2);
        let err = assemble(&outer, &g, &InteractionFamily::empty(), Some(Boundary { bulk: &bulk, terms: &w })).unwrap_err();
        assert!(matches!(err, Error::BoundaryInsideBulk(_)));
    }

    #[test]
    fn straddling_finite_term_overflows() {
        let (g, fam) = ising_parts(0.3, 0.05);
        let finite = fam.restrict(&Volume::chain(0, 3));
        let err = assemble(&Volume::chain(0, 2), &g, &finite, None).unwrap_err();
        assert!(matches!(err, Error::SupportOverflow(_)));
    }
}
