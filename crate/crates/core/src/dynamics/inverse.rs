use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::DynamicsError;
use crate::jets::GermJet;
use crate::normalform::{
    default_table_bound, is_normal_form, poincare_dulac_normalize, resonant_coefficients,
    NormalizeOptions, WeightedOrder,
};
use crate::resonance::ResonanceStructure;
use crate::shadow::{build_shadow, certify, directors, s_values};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InverseCheck {
    /// `max |a⁻_{K,j} + a_{K,j}/λ_j²|` over `|K| = k0`.
    pub deviation: f64,
    pub compared: usize,
    pub k0: WeightedOrder,
    pub inverse_k0: WeightedOrder,
    /// `ζ = e^{iπ/k0}`, so `ζ^{k0} = −1`.
    pub zeta: Complex64,
    pub direction: Option<Vec<Complex64>>,
    pub rotated_direction: Option<Vec<Complex64>>,
    pub inverse_directors: Vec<Complex64>,
    pub inverse_s_values: Vec<Complex64>,
    pub inverse_parabolically_attracting: bool,
}

/// Compares the weighted-order coefficients of `F⁻¹` with `−a/λ²` and
/// re-certifies `F⁻¹` at `ζv` for the chosen direction `v` of `F`.
/// A germ not yet in normal form is normalized first.
pub fn inverse_germ_check(
    f: &GermJet,
    structure: &ResonanceStructure,
    order: usize,
) -> Result<InverseCheck, DynamicsError> {
    let order = order.min(f.order());
    let nf = if is_normal_form(f, structure).is_normal_form {
        f.truncated(order)
    } else {
        poincare_dulac_normalize(f, structure, order, NormalizeOptions::default())?.normal_form
    };
    let inverse = nf.invert(order)?;
    let bound = default_table_bound(structure, order);
    let table = resonant_coefficients(&nf, structure, bound)?;
    let inverse_table = resonant_coefficients(&inverse, structure, bound)?;
    let k0 = table.k0();
    let mut report = InverseCheck {
        deviation: 0.0,
        compared: 0,
        k0,
        inverse_k0: inverse_table.k0(),
        zeta: Complex64::new(1.0, 0.0),
        direction: None,
        rotated_direction: None,
        inverse_directors: Vec::new(),
        inverse_s_values: Vec::new(),
        inverse_parabolically_attracting: false,
    };
    let WeightedOrder::Finite(k) = k0 else {
        return Ok(report);
    };
    let mut keys: Vec<_> = table.at_degree(k).map(|(q, j, _)| (q.clone(), j)).collect();
    keys.extend(inverse_table.at_degree(k).map(|(q, j, _)| (q.clone(), j)));
    keys.sort();
    keys.dedup();
    for (q, j) in &keys {
        let lambda = table.lambdas()[*j];
        let expected = -table.get(q, *j) / (lambda * lambda);
        report.deviation = report
            .deviation
            .max((inverse_table.get(q, *j) - expected).norm());
    }
    report.compared = keys.len();

    let shadow = build_shadow(&table, structure)?;
    let cert = certify(&shadow);
    let Some(chosen) = cert.chosen() else {
        return Ok(report);
    };
    report.zeta = Complex64::from_polar(1.0, PI / k as f64);
    let rotated: Vec<Complex64> = chosen.v.iter().map(|x| x * report.zeta).collect();
    let inverse_shadow = build_shadow(&inverse_table, structure)?;
    let dirs = directors(&inverse_shadow, &rotated)?;
    let s = s_values(&inverse_table, k, &rotated);
    report.inverse_parabolically_attracting =
        dirs.iter().all(|d| d.re > 0.0) && !s.is_empty() && s.iter().all(|x| x.re < 0.0);
    report.inverse_directors = dirs;
    report.inverse_s_values = s;
    report.direction = Some(chosen.v.clone());
    report.rotated_direction = Some(rotated);
    Ok(report)
}
