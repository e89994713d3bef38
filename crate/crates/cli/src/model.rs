//! Models built from manifest blocks.

use std::collections::BTreeMap;

use weakqms_core::algebra::{pauli, LocalOperator, LocalSuperoperator, Site, Volume};
use weakqms_core::finite_volume::LatticeModel;
use weakqms_core::generators::{build_lindblad, spectral_profile, InteractionFamily, LindbladSpec, ProfileSet};
use weakqms_core::linalg::{CMatrix, C64};
use weakqms_core::models::{ising_model, HeatBathChain};

use crate::error::CliError;
use crate::manifest::{Factor, MatrixSpec, ModelBlock};

/// Everything a command needs to know about the model.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub lattice: LatticeModel,
    pub profiles: ProfileSet,
    pub interactions: InteractionFamily,
    /// The finite volume the model lives on.
    pub volume: Volume,
    pub q: usize,
    /// Present for the heat-bath preset.
    pub heatbath: Option<HeatBathChain>,
}

fn matrix(spec: &MatrixSpec, dim: usize, what: &str) -> Result<CMatrix, CliError> {
    if spec.len() != dim || spec.iter().any(|row| row.len() != dim) {
        return Err(CliError::Manifest(format!("{what} must be {dim}x{dim}")));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| C64::new(spec[i][j][0], spec[i][j][1])))
}

fn explicit(
    n: usize,
    q: usize,
    hamiltonian: &MatrixSpec,
    kraus: &[MatrixSpec],
    bond: Option<&MatrixSpec>,
) -> Result<BuiltModel, CliError> {
    if n == 0 || q < 2 {
        return Err(CliError::Manifest("explicit models need n >= 1 and q >= 2".into()));
    }
    let origin = Site::on_line(0);
    let on0 = |m: &MatrixSpec, what: &str| -> Result<LocalOperator, CliError> {
        Ok(LocalOperator::on_site(origin.clone(), matrix(m, q, what)?)?)
    };
    let ops = kraus.iter().map(|k| on0(k, "kraus operator")).collect::<Result<Vec<_>, _>>()?;
    let spec = LindbladSpec::new(on0(hamiltonian, "hamiltonian")?, ops);
    let profiles = ProfileSet::Uniform(spectral_profile(&build_lindblad(&spec)?)?);
    let interactions = match bond {
        Some(b) => {
            let pair = Volume::chain(0, 2);
            let h = LocalOperator::new(pair, q, matrix(b, q * q, "bond hamiltonian")?)?;
            InteractionFamily::translation_invariant(vec![LocalSuperoperator::commutator(&h)])?
        }
        None => InteractionFamily::empty(),
    };
    let lattice = LatticeModel::new(profiles.generators(), interactions.clone());
    Ok(BuiltModel { lattice, profiles, interactions, volume: Volume::centered_chain(n), q, heatbath: None })
}

fn heatbath(chain: HeatBathChain) -> Result<BuiltModel, CliError> {
    let lattice = chain.model()?;
    let profiles = (1..=chain.n())
        .map(|x| Ok((HeatBathChain::site(x), spectral_profile(&chain.site_generator(x)?)?)))
        .collect::<Result<BTreeMap<_, _>, weakqms_core::Error>>()?;
    let interactions = lattice.interactions.clone();
    Ok(BuiltModel {
        lattice,
        profiles: ProfileSet::PerSite(profiles),
        interactions,
        volume: chain.volume(),
        q: 2,
        heatbath: Some(chain),
    })
}

pub fn build_model(block: &ModelBlock) -> Result<BuiltModel, CliError> {
    match block {
        ModelBlock::Ising { h, j, n } => {
            let m = ising_model(*h, *j, *n)?;
            Ok(BuiltModel {
                lattice: m.lattice_model(),
                profiles: m.profiles,
                interactions: m.interactions,
                volume: m.volume,
                q: 2,
                heatbath: None,
            })
        }
        ModelBlock::Heatbath { n, h, gamma, j, temperature, temperatures, kms_s } => {
            let temps = match (temperature, temperatures) {
                (Some(t), None) => vec![*t; *n],
                (None, Some(ts)) if ts.len() == *n => ts.clone(),
                (None, Some(ts)) => {
                    return Err(CliError::Manifest(format!("{} temperatures for {n} sites", ts.len())))
                }
                _ => return Err(CliError::Manifest("give exactly one of temperature and temperatures".into())),
            };
            let mut chain = HeatBathChain::new(temps, *h, *gamma, *j)?;
            if let Some(s) = kms_s {
                chain.kms_s = *s;
            }
            heatbath(chain)
        }
        ModelBlock::Explicit { n, q, hamiltonian, kraus, bond_hamiltonian } => {
            explicit(*n, *q, hamiltonian, kraus, bond_hamiltonian.as_ref())
        }
    }
}

/// The single-site matrix named by `op`.
pub fn named_operator(op: &str, q: usize) -> Result<CMatrix, CliError> {
    if op == "id" {
        return Ok(CMatrix::identity(q, q));
    }
    if q != 2 {
        return Err(CliError::Manifest(format!("operator {op:?} needs a qubit site")));
    }
    Ok(match op {
        "x" => pauli::sigma_x(),
        "y" => pauli::sigma_y(),
        "z" => pauli::sigma_z(),
        "plus" => pauli::sigma_plus(),
        "minus" => pauli::sigma_minus(),
        "up" => pauli::spin_up(),
        "down" => pauli::spin_down(),
        _ => return Err(CliError::Manifest(format!("unknown operator {op:?}"))),
    })
}

pub fn observable(factors: &[Factor], q: usize) -> Result<LocalOperator, CliError> {
    if factors.is_empty() {
        return Err(CliError::Manifest("observable needs at least one factor".into()));
    }
    let parts = factors
        .iter()
        .map(|f| Ok((Site::on_line(f.site), named_operator(&f.op, q)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(LocalOperator::product(&parts)?)
}
