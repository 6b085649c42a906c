//! Library side of the `raule` command line. Each `cmd_*` function takes
//! plain arguments and returns a [`Report`]; the binary only parses flags,
//! prints and maps [`Report::exit_code`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::dataset::{diagnostics, load_csv, CsvOptions, KappaBasis, LabeledDataset};
use crate::dominance::{check, DominanceVerdict, Theorem};
use crate::error::{Error, Result};
use crate::estimators::{estimate_from, EstimatorKind, EstimatorSpec, InfoSpectrum};
use crate::model::{irls_fit, log_likelihood, FitOptions, FittedLogit, LinearRestriction};
use crate::records::{simulation_config_from, simulation_record, Record, ScenarioFile};
use crate::risk::{d_sweep, RiskScenario};
use crate::simulation::{
    run_simulation, standard_restriction, table_suite, BetaDesign, SimulationConfig,
    SimulationResult, SuiteGrid, DEFAULT_D_GRID,
};
use crate::table::{real_full, Cell, Format, OutputTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Numerical warning such as non-convergence; exit code 2.
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub title: String,
    pub table: OutputTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub sections: Vec<Section>,
    pub warnings: Vec<String>,
    pub status: Status,
}

impl Report {
    fn new() -> Self {
        Report {
            sections: Vec::new(),
            warnings: Vec::new(),
            status: Status::Ok,
        }
    }

    fn add(&mut self, title: impl Into<String>, table: OutputTable) {
        self.sections.push(Section {
            title: title.into(),
            table,
        });
    }

    fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn section(&self, title: &str) -> Option<&OutputTable> {
        self.sections
            .iter()
            .find(|s| s.title == title)
            .map(|s| &s.table)
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::Warning => 2,
        }
    }

    /// A single-section report renders as bare CSV so it can be re-read;
    /// several sections are separated by `# title` lines.
    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        let bare = format == Format::Csv && self.sections.len() == 1;
        for (i, s) in self.sections.iter().enumerate() {
            if !bare {
                if i > 0 {
                    out.push('\n');
                }
                match format {
                    Format::Csv => {
                        let _ = writeln!(out, "# {}", s.title);
                    }
                    Format::Text => {
                        let _ = writeln!(out, "{}\n", s.title);
                    }
                }
            }
            out.push_str(&s.table.render(format));
        }
        out
    }
}

/// Where a restriction comes from on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RestrictionArgs {
    /// Inline `H`, rows separated by `;`.
    pub h_mat: Option<String>,
    /// Inline `h`; zeros when omitted.
    pub h_vec: Option<String>,
    /// Record file with `[H]` and optional `[h]` blocks.
    pub file: Option<PathBuf>,
}

impl RestrictionArgs {
    pub fn resolve(&self) -> Result<Option<LinearRestriction>> {
        if let Some(path) = &self.file {
            if self.h_mat.is_some() {
                return Err(Error::InvalidParameter(
                    "give the restriction inline or by file, not both".into(),
                ));
            }
            let rec = Record::load(path)?;
            return crate::records::restriction_from(&rec);
        }
        let Some(h) = &self.h_mat else {
            if self.h_vec.is_some() {
                return Err(Error::InvalidParameter("--h given without --H".into()));
            }
            return Ok(None);
        };
        let h_mat = crate::records::parse_matrix(h)?;
        let h_vec = match &self.h_vec {
            Some(s) => {
                DVector::from_vec(crate::records::parse_row(s).map_err(Error::InvalidParameter)?)
            }
            None => DVector::zeros(h_mat.nrows()),
        };
        LinearRestriction::new(h_mat, h_vec).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataArgs {
    pub csv: PathBuf,
    pub csv_options: CsvOptions,
    pub fit: FitOptions,
}

impl DataArgs {
    pub fn new(csv: impl Into<PathBuf>) -> Self {
        DataArgs {
            csv: csv.into(),
            csv_options: CsvOptions::default(),
            fit: FitOptions::default(),
        }
    }
}

/// Fit, keeping a non-converged partial fit as a warning.
fn fit_labeled(
    labeled: &LabeledDataset,
    opts: &FitOptions,
    report: &mut Report,
) -> Result<FittedLogit> {
    let fit = match irls_fit(&labeled.data, opts) {
        Ok(fit) => fit,
        Err(Error::NotConverged(fit)) => {
            report.status = Status::Warning;
            report.warn(format!(
                "IRLS did not converge in {} iterations (last step {:e}); coefficients are the last iterate",
                fit.iterations, fit.final_step
            ));
            *fit
        }
        Err(e) => return Err(e),
    };
    if fit.clamped_rows > 0 {
        report.status = Status::Warning;
        report.warn(format!(
            "{} fitted probabilities sit on the clamp; the data look separated and no finite MLE exists",
            fit.clamped_rows
        ));
    }
    Ok(fit)
}

fn coefficient_table(names: &[String], beta: &DVector<f64>) -> Result<OutputTable> {
    let mut t = OutputTable::new(["term", "estimate"]);
    for (name, &b) in names.iter().zip(beta.iter()) {
        t.push(vec![name.as_str().into(), b.into()])?;
    }
    Ok(t)
}

fn diagnostics_sections(
    labeled: &LabeledDataset,
    basis: KappaBasis,
    report: &mut Report,
) -> Result<()> {
    let names = labeled.predictor_names();
    if names.is_empty() {
        return Ok(());
    }
    let diag = match diagnostics(&labeled.data, basis) {
        Ok(d) => d,
        Err(Error::ConstantColumn(c)) => {
            report.warn(format!("diagnostics skipped: {c} is constant"));
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let mut cols = vec![String::new()];
    cols.extend(names.iter().cloned());
    let mut corr = OutputTable::new(cols);
    for (i, name) in names.iter().enumerate() {
        let mut row: Vec<Cell> = vec![name.as_str().into()];
        row.extend((0..names.len()).map(|j| Cell::Real(diag.correlation[(i, j)])));
        corr.push(row)?;
    }
    report.add("correlation", corr);

    let mut summary = OutputTable::new(["quantity", "value"]);
    let basis_name = match basis {
        KappaBasis::Correlation => "correlation",
        KappaBasis::CrossProduct => "cross-product",
    };
    summary.push(vec!["kappa_basis".into(), basis_name.into()])?;
    summary.push(vec!["kappa".into(), diag.kappa.into()])?;
    for (i, &l) in diag.eigenvalues.iter().enumerate() {
        summary.push(vec![format!("eigenvalue_{}", i + 1).into(), l.into()])?;
    }
    report.add("collinearity", summary);
    Ok(())
}

/// Load, fit by IRLS and report coefficients, convergence and diagnostics.
/// Exit status 2 when IRLS stops at `max_iter` or probabilities are clamped.
pub fn cmd_fit(args: &DataArgs, basis: KappaBasis) -> Result<Report> {
    let labeled = load_csv(&args.csv, &args.csv_options)?;
    let mut report = Report::new();
    let fit = fit_labeled(&labeled, &args.fit, &mut report)?;
    report.add(
        "coefficients",
        coefficient_table(&labeled.column_names, &fit.beta_mle)?,
    );
    let mut summary = OutputTable::new(["quantity", "value"]);
    summary.push(vec!["n".into(), labeled.data.n().into()])?;
    summary.push(vec!["iterations".into(), fit.iterations.into()])?;
    summary.push(vec!["converged".into(), fit.converged.into()])?;
    summary.push(vec!["final_step".into(), fit.final_step.into()])?;
    summary.push(vec![
        "log_likelihood".into(),
        log_likelihood(&labeled.data, &fit.beta_mle).into(),
    ])?;
    summary.push(vec!["clamped_rows".into(), fit.clamped_rows.into()])?;
    report.add("fit", summary);
    diagnostics_sections(&labeled, basis, &mut report)?;
    Ok(report)
}

pub fn cmd_diagnostics(csv: &Path, csv_options: &CsvOptions, basis: KappaBasis) -> Result<Report> {
    let labeled = load_csv(csv, csv_options)?;
    let mut report = Report::new();
    if labeled.predictor_names().is_empty() {
        return Err(Error::InvalidDataset("no predictor columns".into()));
    }
    // a constant column is an error here, not a warning
    diagnostics(&labeled.data, basis)?;
    diagnostics_sections(&labeled, basis, &mut report)?;
    Ok(report)
}

/// Specs in row order: d-free kinds once, the others once per d.
pub fn expand_specs(kinds: &[EstimatorKind], d_values: &[f64]) -> Result<Vec<EstimatorSpec>> {
    let mut specs = Vec::new();
    for &kind in kinds {
        if kind.uses_d() {
            if d_values.is_empty() {
                return Err(Error::InvalidParameter(format!("{kind} needs --d")));
            }
            for &d in d_values {
                specs.push(EstimatorSpec::at(kind, d)?);
            }
        } else {
            specs.push(EstimatorSpec::new(kind, None)?);
        }
    }
    Ok(specs)
}

pub fn cmd_estimate(
    args: &DataArgs,
    kinds: &[EstimatorKind],
    d_values: &[f64],
    restriction: &RestrictionArgs,
) -> Result<Report> {
    let restriction = restriction.resolve()?;
    if let Some(kind) = kinds.iter().find(|k| k.is_restricted()) {
        if restriction.is_none() {
            return Err(Error::MissingRestriction(format!(
                "{kind} (pass --H \"r11,r12;r21,r22\" or --restriction-file)"
            )));
        }
    }
    let labeled = load_csv(&args.csv, &args.csv_options)?;
    let mut report = Report::new();
    let fit = fit_labeled(&labeled, &args.fit, &mut report)?;
    let spectrum = InfoSpectrum::new(&fit.info, &args.fit.tolerance)?;

    let mut cols = vec!["estimator".to_owned(), "d".to_owned()];
    cols.extend(labeled.column_names.iter().cloned());
    let mut t = OutputTable::new(cols);
    for spec in expand_specs(kinds, d_values)? {
        let est = estimate_from(&spectrum, &fit.beta_mle, spec, restriction.as_ref())?;
        let mut row: Vec<Cell> = vec![spec.kind.name().into(), spec.d.into()];
        row.extend(est.beta.iter().map(|&b| Cell::Real(b)));
        t.push(row)?;
    }
    report.add("estimates", t);
    Ok(report)
}

/// Truth used by plug-in risk evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PlugInTruth {
    /// β̂_RMLE when a restriction is given, otherwise β̂_MLE.
    #[default]
    Restricted,
    Mle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RiskSource {
    Scenario(PathBuf),
    PlugIn {
        data: DataArgs,
        restriction: RestrictionArgs,
        truth: PlugInTruth,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskArgs {
    pub source: RiskSource,
    pub kinds: Vec<EstimatorKind>,
    /// Overrides the scenario's own grid when non-empty.
    pub d_grid: Vec<f64>,
    pub plot_data: Option<PathBuf>,
    /// Save the evaluated scenario for replay.
    pub write_scenario: Option<PathBuf>,
}

/// (d, estimator, mse) sweep. In plug-in mode the estimates at each d are
/// appended as extra columns.
pub fn cmd_risk(args: &RiskArgs) -> Result<Report> {
    let mut report = Report::new();
    let mut plug_in_fit: Option<(DVector<f64>, InfoSpectrum)> = None;
    let (scenario_file, names) = match &args.source {
        RiskSource::Scenario(path) => (ScenarioFile::load(path)?, Vec::new()),
        RiskSource::PlugIn {
            data,
            restriction,
            truth,
        } => {
            let labeled = load_csv(&data.csv, &data.csv_options)?;
            let fit = fit_labeled(&labeled, &data.fit, &mut report)?;
            let restriction = restriction.resolve()?;
            let spectrum = InfoSpectrum::new(&fit.info, &data.fit.tolerance)?;
            let beta = match (&restriction, truth) {
                (Some(r), PlugInTruth::Restricted) => spectrum.restricted(&fit.beta_mle, r)?,
                _ => fit.beta_mle.clone(),
            };
            plug_in_fit = Some((fit.beta_mle.clone(), spectrum));
            (
                ScenarioFile {
                    info: fit.info,
                    restriction,
                    beta,
                    d_grid: Vec::new(),
                },
                labeled.column_names,
            )
        }
    };

    let mut scenario_file = scenario_file;
    if !args.d_grid.is_empty() {
        scenario_file.d_grid = args.d_grid.clone();
    }
    if scenario_file.d_grid.is_empty() {
        scenario_file.d_grid = DEFAULT_D_GRID.to_vec();
    }
    if let Some(path) = &args.write_scenario {
        scenario_file.save(path)?;
    }
    let kinds: Vec<EstimatorKind> = match (&args.kinds[..], &scenario_file.restriction) {
        ([], Some(_)) => EstimatorKind::TABLE.to_vec(),
        ([], None) => vec![EstimatorKind::Mle, EstimatorKind::Aule, EstimatorKind::Le],
        (k, _) => k.to_vec(),
    };
    let scenario = RiskScenario::new(
        scenario_file.info.clone(),
        scenario_file.restriction.clone(),
        scenario_file.beta.clone(),
    )?;
    if scenario.restriction_violated() {
        report.warn(
            "the truth violates the restriction; restricted estimators carry the linearized bias",
        );
    }
    let rows = d_sweep(&scenario, &kinds, &scenario_file.d_grid)?;

    let mut cols = vec!["d".to_owned(), "estimator".to_owned(), "mse".to_owned()];
    if plug_in_fit.is_some() {
        cols.extend(names.iter().cloned());
    }
    let mut t = OutputTable::new(cols);
    for row in &rows {
        let mut cells: Vec<Cell> = vec![
            row.d.into(),
            row.report.spec.kind.name().into(),
            row.report.mse.into(),
        ];
        if let Some((beta_mle, spectrum)) = &plug_in_fit {
            let spec = EstimatorSpec::at(row.report.spec.kind, row.d)?;
            let est = estimate_from(spectrum, beta_mle, spec, scenario_file.restriction.as_ref())?;
            cells.extend(est.beta.iter().map(|&b| Cell::Real(b)));
        }
        t.push(cells)?;
    }
    report.add("risk", t);

    if let Some(path) = &args.plot_data {
        fs::write(
            path,
            plot_data(&kinds, &scenario_file.d_grid, &rows)?.to_csv(),
        )?;
    }
    Ok(report)
}

/// Two columns per estimator series: `d_<kind>`, `mse_<kind>`.
fn plot_data(
    kinds: &[EstimatorKind],
    d_grid: &[f64],
    rows: &[crate::risk::SweepRow],
) -> Result<OutputTable> {
    let mut cols = Vec::new();
    for k in kinds {
        cols.push(format!("d_{}", k.name()));
        cols.push(format!("mse_{}", k.name()));
    }
    let mut t = OutputTable::new(cols);
    for (i, &d) in d_grid.iter().enumerate() {
        let mut cells = Vec::new();
        for j in 0..kinds.len() {
            cells.push(Cell::Real(d));
            cells.push(Cell::Real(rows[i * kinds.len() + j].report.mse));
        }
        t.push(cells)?;
    }
    Ok(t)
}

fn witness_text(v: &DominanceVerdict) -> String {
    v.witnesses
        .iter()
        .map(|(k, x)| format!("{k}={}", real_full(*x)))
        .collect::<Vec<_>>()
        .join(";")
}

/// One row per theorem and d. A theorem whose inequality is undefined for the
/// scenario (all restricted dispersion terms zero) is reported as such.
pub fn cmd_dominance(scenario: &Path, d_values: &[f64]) -> Result<Report> {
    let file = ScenarioFile::load(scenario)?;
    let d_values = if d_values.is_empty() {
        if file.d_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "no d given and the scenario has none".into(),
            ));
        }
        file.d_grid.clone()
    } else {
        d_values.to_vec()
    };
    if file.restriction.is_none() {
        return Err(Error::MissingRestriction(
            "dominance checks (scenario has no [H] block)".into(),
        ));
    }
    let scenario = RiskScenario::new(file.info, file.restriction, file.beta)?;
    let mut report = Report::new();
    if scenario.restriction_violated() {
        report.warn("the truth violates the restriction; the theorems assume it holds");
    }
    let mut t = OutputTable::new([
        "theorem",
        "comparison",
        "d",
        "applicable",
        "condition_holds",
        "lhs",
        "rhs",
        "delta_psd",
        "witnesses",
    ]);
    for &d in &d_values {
        for theorem in Theorem::ALL {
            match check(theorem, &scenario, d) {
                Ok(v) => t.push(vec![
                    theorem.id().into(),
                    theorem.comparison().into(),
                    d.into(),
                    v.applicable.into(),
                    v.condition_holds.into(),
                    v.lhs.into(),
                    v.rhs.into(),
                    v.delta_psd.into(),
                    witness_text(&v).into(),
                ])?,
                Err(Error::DegenerateTerms) => t.push(vec![
                    theorem.id().into(),
                    theorem.comparison().into(),
                    d.into(),
                    false.into(),
                    "undefined".into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    "all a_ii vanish".into(),
                ])?,
                Err(e) => return Err(e),
            }
        }
    }
    report.add("dominance", t);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateArgs {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub reps: usize,
    /// Required: there is no clock-seeded fallback.
    pub seed: Option<u64>,
    pub d_grid: Vec<f64>,
    pub table_suite: bool,
    pub threads: Option<usize>,
    pub beta_design: BetaDesign,
    pub fixed_design: bool,
    /// Empty means the four table estimators.
    pub kinds: Vec<EstimatorKind>,
    /// Overrides the H₁/H₂ default.
    pub restriction: RestrictionArgs,
    /// Long layout: one row per cell with its standard error.
    pub long: bool,
    /// Replay a saved simulation record; other run flags are ignored.
    pub replay: Option<PathBuf>,
    /// Save the run's replay record (single runs only).
    pub record: Option<PathBuf>,
}

impl Default for SimulateArgs {
    fn default() -> Self {
        SimulateArgs {
            n: 200,
            p: 4,
            rho: 0.9,
            reps: 2000,
            seed: None,
            d_grid: DEFAULT_D_GRID.to_vec(),
            table_suite: false,
            threads: None,
            beta_design: BetaDesign::Equal,
            fixed_design: false,
            kinds: Vec::new(),
            restriction: RestrictionArgs::default(),
            long: false,
            replay: None,
            record: None,
        }
    }
}

impl SimulateArgs {
    pub fn config(&self) -> Result<SimulationConfig> {
        if let Some(path) = &self.replay {
            return simulation_config_from(&Record::load(path)?);
        }
        let seed = self.seed.ok_or_else(|| {
            Error::InvalidParameter("simulate requires --seed (no implicit seeding)".into())
        })?;
        let restriction = match self.restriction.resolve()? {
            Some(r) => r,
            None => standard_restriction(self.p).map_err(|_| {
                Error::MissingRestriction(format!(
                    "simulation with p = {} (only p = 4 and p = 8 have a default; pass --H)",
                    self.p
                ))
            })?,
        };
        let config = SimulationConfig {
            n: self.n,
            p: self.p,
            rho: self.rho,
            d_grid: self.d_grid.clone(),
            reps: self.reps,
            seed,
            restriction,
            beta_design: self.beta_design,
            fixed_design: self.fixed_design,
            estimator_kinds: if self.kinds.is_empty() {
                EstimatorKind::TABLE.to_vec()
            } else {
                self.kinds.clone()
            },
            fit: FitOptions::default(),
        };
        config.validate()?;
        Ok(config)
    }
}

fn wide_columns(d_grid: &[f64]) -> Vec<String> {
    let mut cols: Vec<String> = ["n", "p", "gamma", "estimator"].map(String::from).to_vec();
    cols.extend(d_grid.iter().map(|d| format!("d={}", real_full(*d))));
    cols.push("completed".into());
    cols.push("skipped".into());
    cols
}

fn push_wide(t: &mut OutputTable, res: &SimulationResult) -> Result<()> {
    let c = &res.config;
    for &kind in &c.estimator_kinds {
        let mut row: Vec<Cell> = vec![c.n.into(), c.p.into(), c.rho.into(), kind.name().into()];
        let mut completed = 0;
        for &d in &c.d_grid {
            let cell = res
                .cell(kind, d)
                .ok_or_else(|| Error::InvalidParameter(format!("missing cell {kind} d={d}")))?;
            completed = cell.completed;
            row.push(cell.mse.into());
        }
        row.push(completed.into());
        row.push(res.skipped.into());
        t.push(row)?;
    }
    Ok(())
}

fn push_long(t: &mut OutputTable, res: &SimulationResult) -> Result<()> {
    let c = &res.config;
    for cell in &res.cells {
        t.push(vec![
            c.n.into(),
            c.p.into(),
            c.rho.into(),
            cell.spec.kind.name().into(),
            cell.spec.d.into(),
            cell.mse.into(),
            cell.se.into(),
            cell.completed.into(),
            res.skipped.into(),
        ])?;
    }
    Ok(())
}

const LONG_COLUMNS: [&str; 9] = [
    "n",
    "p",
    "gamma",
    "estimator",
    "d",
    "mse",
    "se",
    "completed",
    "skipped",
];

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Single run (one row per estimator, one column per d) or the full
/// six-table suite in the same wide layout, one block per correlation level.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<Report> {
    let mut report = Report::new();
    let results: Vec<SimulationResult> = if args.table_suite && args.replay.is_none() {
        let seed = args.seed.ok_or_else(|| {
            Error::InvalidParameter("simulate requires --seed (no implicit seeding)".into())
        })?;
        let mut grid = SuiteGrid::standard(args.reps);
        grid.d_grid = args.d_grid.clone();
        let tables = in_pool(args.threads, || table_suite(seed, &grid))??;
        tables.into_iter().flat_map(|t| t.blocks).collect()
    } else {
        let config = args.config()?;
        if let Some(path) = &args.record {
            simulation_record(&config).save(path)?;
        }
        vec![in_pool(args.threads, || run_simulation(&config))??]
    };

    let skipped: usize = results.iter().map(|r| r.skipped).sum();
    if skipped > 0 {
        report.warn(format!(
            "{skipped} replications skipped (non-convergence or singular information)"
        ));
    }
    let mut t = if args.long {
        OutputTable::new(LONG_COLUMNS)
    } else {
        OutputTable::new(wide_columns(&results[0].config.d_grid))
    };
    for res in &results {
        if args.long {
            push_long(&mut t, res)?;
        } else {
            push_wide(&mut t, res)?;
        }
    }
    report.add("simulation", t);
    Ok(report)
}

/// Writes the bundled synthetic municipalities dataset.
pub fn cmd_generate(out: &Path, seed: u64) -> Result<Report> {
    let data = crate::dataset::synthetic_municipalities(seed)?;
    crate::dataset::save_csv(out, &data)?;
    let mut report = Report::new();
    let mut t = OutputTable::new(["file", "rows", "seed"]);
    t.push(vec![
        out.display().to_string().into(),
        data.data.n().into(),
        Cell::Text(seed.to_string()),
    ])?;
    report.add("generated", t);
    Ok(report)
}
