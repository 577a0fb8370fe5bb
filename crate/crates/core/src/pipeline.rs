//! End-to-end runs on a germ document: analysis, certification, basin
//! simulation, Fatou estimation and flower coverage.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::document::{DocumentError, GermSpecDocument};
use crate::dynamics::{
    basin_sampler, estimate_fatou, flower_coverage, inverse_germ_check, iterate_orbit,
    verify_basin, verify_petals, BasinParams, CompiledGerm, DynamicsError, FatouEstimate,
    FatouOptions, FlowerOptions, FlowerReport, InverseCheck, OrbitTrace, ParabolicFrame,
    PetalSurvey, VerifyOptions,
};
use crate::jets::GermJet;
use crate::multi_index::MultiIndex;
use crate::normalform::{
    default_table_bound, is_normal_form, poincare_dulac_normalize, remainder_order,
    resonant_coefficients, NormalFormError, NormalizationResult, NormalizeOptions,
    ResonantCoefficientTable, WeightedOrder,
};
use crate::resonance::{
    check_m_resonant, default_degree_bound, resonance_lattice, EigenvalueSpec, ResonanceError,
    ResonanceStructure,
};
use crate::shadow::{
    build_shadow, certify, semiconjugacy_residual, CertificationReport, ParabolicShadow,
    ShadowError,
};

pub const DEFAULT_BASIN_SAMPLES: usize = 200;
pub const DEFAULT_FATOU_SEEDS: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 100_000;
/// Orbits written out as CSV by `simulate`.
pub const ORBIT_DUMPS: usize = 3;
const MONOID_SAMPLE: usize = 20;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Resonance(#[from] ResonanceError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
    #[error(transparent)]
    Shadow(#[from] ShadowError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("nothing to certify: weighted order is infinite")]
    NothingToCertify,
    #[error("no parabolically attracting direction")]
    NotParabolic,
}

impl PipelineError {
    /// 2 for input and usage errors, 3 for unmet preconditions.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Document(_) | PipelineError::Usage(_) => 2,
            PipelineError::Dynamics(DynamicsError::PetalOutOfRange { .. }) => 2,
            _ => 3,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Document(DocumentError::Parse { .. }) => "parse-error",
            PipelineError::Document(_) => "schema-error",
            PipelineError::Usage(_) => "usage",
            PipelineError::Resonance(e) => e.code(),
            PipelineError::NormalForm(e) => e.code(),
            PipelineError::Shadow(e) => e.code(),
            PipelineError::Dynamics(e) => e.code(),
            PipelineError::NothingToCertify => "nothing-to-certify",
            PipelineError::NotParabolic => "not-parabolic",
        }
    }
}

/// Command line overrides; `None` falls back to the document options.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub bound: Option<usize>,
    pub order: Option<usize>,
    pub petal: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
}

pub struct Analysis {
    pub document: GermSpecDocument,
    pub spec: EigenvalueSpec,
    pub germ: GermJet,
    pub structure: ResonanceStructure,
    pub lattice: Vec<Vec<i64>>,
    pub order: usize,
    pub input_is_normal_form: bool,
    pub normalization: NormalizationResult<Complex64>,
    pub table: ResonantCoefficientTable,
    pub remainder_order: Option<u32>,
    settings: Settings,
}

pub fn analyze(document: GermSpecDocument, settings: &Settings) -> Result<Analysis, PipelineError> {
    let spec = document.eigenvalue_spec()?;
    let germ = document.germ(&spec)?;
    let order = settings
        .order
        .or(document.options.jet_order)
        .unwrap_or(document.jet.order);
    if order == 0 || order > germ.order() {
        return Err(PipelineError::Usage(format!(
            "jet order {order} must be in 1..={}",
            germ.order()
        )));
    }
    let bound = match settings.bound.or(document.options.degree_bound) {
        Some(b) => b,
        None => default_degree_bound(&spec)?,
    };
    let structure = check_m_resonant(&spec, bound)?;
    let lattice = resonance_lattice(&spec)?;
    let input_is_normal_form = is_normal_form(&germ, &structure).is_normal_form;
    let normalization =
        poincare_dulac_normalize(&germ, &structure, order, NormalizeOptions::default())?;
    let table = resonant_coefficients(
        &normalization.normal_form,
        &structure,
        default_table_bound(&structure, order),
    )?;
    let remainder_order = remainder_order(&normalization.normal_form, &structure);
    Ok(Analysis {
        document,
        spec,
        germ,
        structure,
        lattice,
        order,
        input_is_normal_form,
        normalization,
        table,
        remainder_order,
        settings: settings.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEntry {
    #[serde(rename = "K")]
    pub k: MultiIndex,
    /// 1-based component.
    pub j: usize,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub name: Option<String>,
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub degree_bound: usize,
    pub jet_order: usize,
    pub lattice_basis: Vec<Vec<i64>>,
    pub generators: Vec<MultiIndex>,
    pub monoid_size: usize,
    pub monoid_sample: Vec<MultiIndex>,
    pub input_is_normal_form: bool,
    pub smallest_divisor: Option<f64>,
    pub weighted_order: WeightedOrder,
    pub remainder_order: Option<u32>,
    pub resonant_table: Vec<TableEntry>,
}

impl Analysis {
    pub fn normal_form(&self) -> &GermJet {
        &self.normalization.normal_form
    }

    pub fn k0(&self) -> WeightedOrder {
        self.table.k0()
    }

    pub fn report(&self) -> AnalyzeReport {
        AnalyzeReport {
            name: self.document.name.clone(),
            n: self.structure.n(),
            r: self.structure.r(),
            m: self.structure.m(),
            degree_bound: self.structure.degree_bound(),
            jet_order: self.order,
            lattice_basis: self.lattice.clone(),
            generators: self.structure.generators().to_vec(),
            monoid_size: self.structure.monoid().len(),
            monoid_sample: self
                .structure
                .monoid()
                .iter()
                .take(MONOID_SAMPLE)
                .cloned()
                .collect(),
            input_is_normal_form: self.input_is_normal_form,
            smallest_divisor: self
                .normalization
                .divisor_log
                .iter()
                .map(|d| d.modulus)
                .min_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal)),
            weighted_order: self.table.k0(),
            remainder_order: self.remainder_order,
            resonant_table: self
                .table
                .entries()
                .map(|(k, j, value)| TableEntry {
                    k: k.clone(),
                    j: j + 1,
                    value,
                })
                .collect(),
        }
    }

    pub fn shadow(&self) -> Result<ParabolicShadow, PipelineError> {
        match self.table.k0() {
            WeightedOrder::Infinite => Err(PipelineError::NothingToCertify),
            WeightedOrder::Finite(_) => Ok(build_shadow(&self.table, &self.structure)?),
        }
    }

    pub fn certify(&self) -> Result<CertifyReport, PipelineError> {
        let shadow = self.shadow()?;
        let certification = certify(&shadow);
        let components = shadow
            .components()
            .iter()
            .map(|c| c.iter().map(|(q, v)| (q.clone(), *v)).collect())
            .collect();
        Ok(CertifyReport {
            m: shadow.m(),
            k0: shadow.k0(),
            generators: self.structure.generators().to_vec(),
            shadow: components,
            semiconjugacy_residual: semiconjugacy_residual(
                self.normal_form(),
                &self.structure,
                &shadow,
            ),
            certification,
        })
    }

    fn chosen_frame(&self) -> Result<(CertifyReport, ParabolicFrame, BasinParams), PipelineError> {
        let report = self.certify()?;
        let chosen = report
            .certification
            .chosen()
            .ok_or(PipelineError::NotParabolic)?
            .clone();
        let k0 = report.k0;
        let frame = ParabolicFrame::new(chosen.v.clone(), k0);
        let mut params = BasinParams::for_direction(&chosen, &self.structure, k0);
        params.remainder_order = self.remainder_order;
        let b = &self.document.options.basin;
        if let Some(x) = b.radius {
            params.radius = x;
        }
        if let Some(x) = b.cone {
            params.cone = x;
        }
        if let Some(x) = b.epsilon {
            params.epsilon = x;
        }
        if let Some(x) = b.beta {
            params.beta = x;
        }
        if let Some(p) = self.settings.petal.or(b.petal) {
            if p == 0 || p > k0 as usize {
                return Err(DynamicsError::PetalOutOfRange { petal: p, k0 }.into());
            }
            params.petal = p;
        }
        Ok((report, frame, params))
    }

    fn seed(&self) -> u64 {
        self.settings
            .seed
            .or(self.document.options.rng_seed)
            .unwrap_or(0)
    }

    fn fatou_options(&self) -> FatouOptions {
        let defaults = FatouOptions::default();
        FatouOptions {
            burn_in: self.document.options.burn_in.unwrap_or(defaults.burn_in),
            horizon: self.document.options.horizon.unwrap_or(defaults.horizon),
            ..defaults
        }
    }

    /// Basin statistics over the selected petal (all petals by default),
    /// a Fatou estimate and a few full orbits.
    pub fn simulate(&self) -> Result<SimulateReport, PipelineError> {
        let (cert, frame, params) = self.chosen_frame()?;
        let germ = CompiledGerm::new(self.normal_form());
        let options = VerifyOptions {
            count: self
                .settings
                .samples
                .or(self.document.options.samples)
                .unwrap_or(DEFAULT_BASIN_SAMPLES),
            max_iter: self
                .settings
                .max_iter
                .or(self.document.options.max_iter)
                .unwrap_or(DEFAULT_MAX_ITER),
            rng_seed: self.seed(),
            ..VerifyOptions::default()
        };
        let selected = self.settings.petal.or(self.document.options.basin.petal);
        let survey = match selected {
            Some(_) => {
                let stats = verify_basin(&germ, &params, &self.structure, &frame, &options)?;
                PetalSurvey {
                    k0: cert.k0,
                    sector_swaps: stats.sector_swaps,
                    disjoint: true,
                    petals: vec![stats],
                }
            }
            None => verify_petals(&germ, &params, &self.structure, &frame, &options)?,
        };
        let first = &survey.petals[0];
        let fatou = self
            .fatou_from(&germ, &first.params, &frame)
            .map_err(|e| e.to_string());
        let orbits: Vec<OrbitTrace> = first
            .seeds
            .iter()
            .take(ORBIT_DUMPS)
            .map(|s| {
                iterate_orbit(
                    &germ,
                    &s.z0,
                    options.max_iter,
                    options.escape_radius,
                    &self.structure,
                    &frame,
                )
            })
            .collect();
        let mut checks = Vec::new();
        for stats in &survey.petals {
            let p = stats.petal;
            checks.push(Check::at_least(
                format!("petal {p} converged fraction"),
                stats.converged_fraction,
                1.0,
            ));
            checks.push(Check::at_least(
                format!("petal {p} U-progress fraction"),
                stats.u_progress_fraction,
                0.99,
            ));
            checks.push(Check::below(
                format!("petal {p} max terminal residual"),
                stats.max_terminal_residual,
                1e-3,
            ));
        }
        checks.push(Check::flag(
            "petals disjoint",
            survey.disjoint && survey.sector_swaps == 0,
        ));
        match &fatou {
            Ok(est) => checks.push(Check::below(
                "Fatou semiconjugacy residual".into(),
                est.semiconjugacy_residual,
                1e-6,
            )),
            Err(_) => checks.push(Check::flag("Fatou estimate", false)),
        }
        Ok(SimulateReport {
            k0: cert.k0,
            direction: frame.v().to_vec(),
            params,
            basin: survey,
            fatou,
            orbits,
            checks,
        })
    }

    fn fatou_from(
        &self,
        germ: &CompiledGerm,
        params: &BasinParams,
        frame: &ParabolicFrame,
    ) -> Result<FatouEstimate, DynamicsError> {
        let count = self
            .document
            .options
            .fatou_seeds
            .unwrap_or(DEFAULT_FATOU_SEEDS);
        let seeds = basin_sampler(params, &self.structure, frame, count, self.seed())?;
        estimate_fatou(germ, &self.structure, frame, &seeds, &self.fatou_options())
    }

    pub fn fatou(&self) -> Result<FatouReport, PipelineError> {
        let (cert, frame, params) = self.chosen_frame()?;
        let germ = CompiledGerm::new(self.normal_form());
        let estimate = self.fatou_from(&germ, &params, &frame)?;
        let checks = vec![Check::below(
            "Fatou semiconjugacy residual".into(),
            estimate.semiconjugacy_residual,
            1e-6,
        )];
        Ok(FatouReport {
            k0: cert.k0,
            direction: frame.v().to_vec(),
            params,
            options: self.fatou_options(),
            estimate,
            checks,
        })
    }

    pub fn flower(&self) -> Result<FlowerRun, PipelineError> {
        let defaults = FlowerOptions::default();
        let f = &self.document.options.flower;
        let options = FlowerOptions {
            radius: f.radius.unwrap_or(defaults.radius),
            samples: self
                .settings
                .samples
                .or(f.samples)
                .unwrap_or(defaults.samples),
            budget: f.budget.unwrap_or(defaults.budget),
            trap: f.trap.unwrap_or(defaults.trap),
            rng_seed: self.seed(),
            ..defaults
        };
        let report = flower_coverage(self.normal_form(), &self.structure, &options)?;
        let checks = vec![
            Check::at_least("coverage".into(), report.coverage, 0.99),
            Check::at_least(
                "stability under half budget".into(),
                report.stability_agreement,
                0.999,
            ),
            Check::flag(
                "hyperplane points are linearizable leaves",
                report.hyperplane_linearizable == report.hyperplane_points,
            ),
        ];
        Ok(FlowerRun {
            options,
            report,
            checks,
        })
    }

    pub fn inverse_check(&self) -> Result<InverseCheck, PipelineError> {
        Ok(inverse_germ_check(&self.germ, &self.structure, self.order)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub m: usize,
    pub k0: u32,
    pub generators: Vec<MultiIndex>,
    /// `H_t` as `(exponent, coefficient)` lists.
    pub shadow: Vec<Vec<(MultiIndex, Complex64)>>,
    pub semiconjugacy_residual: f64,
    pub certification: CertificationReport,
}

/// One threshold evaluated for `--strict`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
}

impl Check {
    fn at_least(name: String, value: f64, threshold: f64) -> Self {
        Check {
            name,
            passed: value >= threshold,
            value: Some(value),
            threshold: Some(threshold),
        }
    }

    fn below(name: String, value: f64, threshold: f64) -> Self {
        Check {
            name,
            passed: value < threshold,
            value: Some(value),
            threshold: Some(threshold),
        }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            passed,
            value: None,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub k0: u32,
    pub direction: Vec<Complex64>,
    pub params: BasinParams,
    pub basin: PetalSurvey,
    pub fatou: Result<FatouEstimate, String>,
    #[serde(skip)]
    pub orbits: Vec<OrbitTrace>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FatouReport {
    pub k0: u32,
    pub direction: Vec<Complex64>,
    pub params: BasinParams,
    pub options: FatouOptions,
    pub estimate: FatouEstimate,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowerRun {
    pub options: FlowerOptions,
    pub report: FlowerReport,
    pub checks: Vec<Check>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::bundled;

    fn ex1a_text() -> &'static str {
        bundled("ex1a").unwrap()
    }

    fn run(text: &str, settings: &Settings) -> Result<Analysis, PipelineError> {
        analyze(GermSpecDocument::from_json(text)?, settings)
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        let err = run("{\"version\": 1,", &Settings::default()).err().unwrap();
        assert_eq!((err.code(), err.exit_code()), ("parse-error", 2));
    }

    #[test]
    fn unknown_version_is_a_schema_error() {
        let text = ex1a_text().replacen("\"version\": 1,", "\"version\": 2,", 1);
        let err = run(&text, &Settings::default()).err().unwrap();
        assert_eq!((err.code(), err.exit_code()), ("schema-error", 2));
    }

    #[test]
    fn order_outside_the_jet_is_a_usage_error() {
        let settings = Settings {
            order: Some(40),
            ..Settings::default()
        };
        let err = run(ex1a_text(), &settings).err().unwrap();
        assert_eq!((err.code(), err.exit_code()), ("usage", 2));
    }

    #[test]
    fn petal_beyond_k0_is_a_usage_error() {
        let settings = Settings {
            petal: Some(5),
            ..Settings::default()
        };
        let err = run(ex1a_text(), &settings)
            .unwrap()
            .simulate()
            .err()
            .unwrap();
        assert_eq!((err.code(), err.exit_code()), ("petal-out-of-range", 2));
    }

    #[test]
    fn linear_germ_has_nothing_to_certify() {
        let start = ex1a_text().find("\"terms\"").unwrap();
        let end = start + ex1a_text()[start..].find(']').unwrap();
        let end = end + ex1a_text()[end..].find("\n    ]").unwrap() + 6;
        let text = format!(
            "{}\"terms\": []{}",
            &ex1a_text()[..start],
            &ex1a_text()[end..]
        );
        let a = run(&text, &Settings::default()).unwrap();
        assert_eq!(a.k0(), WeightedOrder::Infinite);
        let err = a.certify().err().unwrap();
        assert_eq!((err.code(), err.exit_code()), ("nothing-to-certify", 3));
        assert!(err.to_string().contains("nothing to certify"));
    }

    #[test]
    fn flower_needs_a_one_resonant_germ() {
        let err = run(ex1a_text(), &Settings::default())
            .unwrap()
            .flower()
            .err()
            .unwrap();
        assert_eq!((err.code(), err.exit_code()), ("not-one-resonant", 3));
    }

    #[test]
    fn analyze_report_lists_the_generators() {
        let a = run(ex1a_text(), &Settings::default()).unwrap();
        assert_eq!(a.structure.m(), 2);
        assert!(a.input_is_normal_form);
        assert_eq!(a.k0(), WeightedOrder::Finite(1));
        let json = serde_json::to_string(&a.report()).unwrap();
        assert!(
            json.contains("[2,3,0]") && json.contains("[0,2,5]"),
            "{json}"
        );
    }
}
