//! Machine-readable report types shared by the CLI and the Python bindings.
//! Field order is fixed and all maps are ordered, so serialization of the
//! deterministic section is byte-stable for a given seed.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::continuum::{ChangeOfVariablesReport, ContinuumReport};
use crate::finder::{Sector, StructureConstants, SymmetryBasis};

#[derive(Debug, Clone, Serialize)]
pub struct AnsatzReport {
    pub deg_x: u32,
    pub deg_t: u32,
    pub deg_u: u32,
    pub registered: Vec<String>,
    pub size: usize,
    pub active_coefficients: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldReport {
    pub name: String,
    pub sector: Sector,
    pub field: String,
    pub constraint_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub finite_basis: Vec<String>,
    pub expansion_basis: Vec<String>,
    /// entries `(i, j, coefficients over the expansion basis)` for `i < j`
    pub brackets: Vec<(usize, usize, Vec<f64>)>,
    pub closure_residual: f64,
    pub bracket_reexpansion_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinderReport {
    pub scheme: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub samples: usize,
    pub attempts: usize,
    pub ansatz: AnsatzReport,
    pub singular_values: Vec<f64>,
    pub dimension: usize,
    pub finite_dimension: usize,
    pub superposition_dimension: usize,
    pub fields: Vec<FieldReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub held_out_samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleVerifyReport {
    pub scheme: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub fields: Vec<(String, f64)>,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    pub scheme: String,
    pub params: BTreeMap<String, f64>,
    pub lambda: f64,
    pub substeps: usize,
    pub grid_window: (i64, i64, i64, i64),
    pub initial_residual: f64,
    /// `(field name, max residual after transforming)` per field
    pub results: Vec<(String, f64)>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeReport {
    pub scheme: String,
    pub params: BTreeMap<String, f64>,
    pub seed_params: BTreeMap<String, f64>,
    pub window: (i64, i64, i64, i64),
    pub onshell_residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub scheme: String,
    pub params: BTreeMap<String, f64>,
    pub continuum: ContinuumReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub change_of_variables: Option<ChangeOfVariablesReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BracketReport {
    /// `(left, right, bracket)` as DSL triples.
    pub brackets: Vec<(String, String, String)>,
    pub reexpansion_residuals: Vec<f64>,
}

pub fn finder_report(
    scheme_id: &str,
    params: &BTreeMap<String, f64>,
    seed: u64,
    basis: &SymmetryBasis,
    second_coord: char,
    structure: Option<&StructureConstants>,
    verification: Option<VerificationReport>,
) -> FinderReport {
    let registered: Vec<String> = basis
        .basis
        .functions()
        .iter()
        .filter_map(|f| match f {
            crate::symmetry::BasisFunction::Registered { name, .. } => Some(name.clone()),
            _ => None,
        })
        .collect();
    FinderReport {
        scheme: scheme_id.to_string(),
        params: params.clone(),
        seed,
        samples: basis.samples,
        attempts: basis.attempts,
        ansatz: AnsatzReport {
            deg_x: basis.basis.deg_x,
            deg_t: basis.basis.deg_t,
            deg_u: basis.basis.deg_u,
            registered,
            size: basis.basis.len(),
            active_coefficients: basis.active_columns,
        },
        singular_values: basis.singular_values.clone(),
        dimension: basis.dimension(),
        finite_dimension: basis.finite_dimension(),
        superposition_dimension: basis.superposition_dimension(),
        fields: basis
            .fields
            .iter()
            .zip(&basis.names)
            .zip(&basis.sectors)
            .zip(&basis.constraint_residuals)
            .map(|(((f, name), sector), resid)| FieldReport {
                name: name.clone(),
                sector: *sector,
                field: f.to_dsl(second_coord),
                constraint_residual: *resid,
            })
            .collect(),
        structure: structure.map(|sc| StructureReport {
            finite_basis: sc.finite_names.clone(),
            expansion_basis: sc.all_names.clone(),
            brackets: {
                let mut out = Vec::new();
                for i in 0..sc.finite_names.len() {
                    for j in (i + 1)..sc.finite_names.len() {
                        if let Some(c) = &sc.constants[i][j] {
                            out.push((i, j, c.clone()));
                        }
                    }
                }
                out
            },
            closure_residual: sc.closure_residual,
            bracket_reexpansion_max: sc.bracket_reexpansion_max,
        }),
        verification,
    }
}
