//! Model training, grid search and cross-validated noise experiments.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cv::{flip_labels, fold_pairs, kfold, stratified_split};
use super::io::{load_csv, CsvOptions, RawData};
use crate::baselines::{cart_train, AxisTree, CartParams};
use crate::data::{normalize_features, Dataset, Scaling};
use crate::formulation::{build_octsvm_model, build_resvm_model, extract_tree, ModelConfig};
use crate::par::{map_slice, Exec};
use crate::solver::{branch_and_bound, Budget, SolveStatus};
use crate::tree::{TreeClassifier, TreeTopology};
use crate::OctError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Octsvm,
    Resvm,
    Cart,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Octsvm => "OCTSVM",
            Method::Resvm => "RESVM",
            Method::Cart => "CART",
        })
    }
}

impl FromStr for Method {
    type Err = OctError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "octsvm" => Ok(Method::Octsvm),
            "resvm" => Ok(Method::Resvm),
            "cart" => Ok(Method::Cart),
            _ => Err(OctError::Invalid(format!("unknown method {s:?}"))),
        }
    }
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Hyper {
    Octsvm { c1: f64, c2: f64, c3: f64 },
    Resvm { c1: f64, c2: f64 },
    Cart { alpha: f64 },
}

impl Hyper {
    pub fn method(&self) -> Method {
        match self {
            Hyper::Octsvm { .. } => Method::Octsvm,
            Hyper::Resvm { .. } => Method::Resvm,
            Hyper::Cart { .. } => Method::Cart,
        }
    }

    /// Preference key among equally accurate points: smaller complexity
    /// cost (`c3` or `α`) first, then smaller `c2`, then smaller `c1`.
    fn simplicity_key(&self) -> [f64; 3] {
        match *self {
            Hyper::Octsvm { c1, c2, c3 } => [c3, c2, c1],
            Hyper::Resvm { c1, c2 } => [0.0, c2, c1],
            Hyper::Cart { alpha } => [alpha, 0.0, 0.0],
        }
    }
}

impl fmt::Display for Hyper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyper::Octsvm { c1, c2, c3 } => write!(f, "c1={c1};c2={c2};c3={c3}"),
            Hyper::Resvm { c1, c2 } => write!(f, "c1={c1};c2={c2}"),
            Hyper::Cart { alpha } => write!(f, "alpha={alpha}"),
        }
    }
}

/// Grids per hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub c3: Vec<f64>,
    pub alpha: Vec<f64>,
}

fn powers(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|i| 10f64.powi(i)).collect()
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            c1: powers(-5, 5),
            c2: powers(-5, 5),
            c3: powers(-2, 2),
            alpha: powers(-5, 5),
        }
    }
}

impl Grids {
    pub fn points(&self, method: Method) -> Vec<Hyper> {
        let mut out = Vec::new();
        match method {
            Method::Octsvm => {
                for &c1 in &self.c1 {
                    for &c2 in &self.c2 {
                        for &c3 in &self.c3 {
                            out.push(Hyper::Octsvm { c1, c2, c3 });
                        }
                    }
                }
            }
            Method::Resvm => {
                for &c1 in &self.c1 {
                    for &c2 in &self.c2 {
                        out.push(Hyper::Resvm { c1, c2 });
                    }
                }
            }
            Method::Cart => out.extend(self.alpha.iter().map(|&alpha| Hyper::Cart { alpha })),
        }
        out
    }
}

/// Everything besides the hyperparameters needed to train one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub octsvm_depth: usize,
    pub cart_depth: usize,
    pub coef_bound: f64,
    pub min_leaf_fraction: f64,
    pub budget: Budget,
    pub exec: Exec,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            octsvm_depth: 2,
            cart_depth: 3,
            coef_bound: 10.0,
            min_leaf_fraction: 0.05,
            budget: Budget::default().with_time_limit(30.0).with_gap(0.05),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Tree(TreeClassifier),
    Cart(AxisTree),
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64]) -> Result<i8, OctError> {
        match self {
            TrainedModel::Tree(t) => t.predict(x),
            TrainedModel::Cart(t) => crate::baselines::cart_predict(t, x),
        }
    }

    /// Percentage of correctly classified observations.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64, OctError> {
        let mut correct = 0usize;
        for i in 0..data.len() {
            if self.predict(data.row(i))? == data.labels[i] {
                correct += 1;
            }
        }
        Ok(100.0 * correct as f64 / data.len().max(1) as f64)
    }
}

/// A trained model plus how the solver finished.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub model: TrainedModel,
    pub status: Option<SolveStatus>,
    pub gap: Option<f64>,
    pub objective: Option<f64>,
}

/// Train one model on normalized data. OCTSVM and RE-SVM models on
/// single-class data reduce to a constant classifier.
pub fn train_model(
    data: &Dataset,
    hyper: &Hyper,
    settings: &TrainSettings,
) -> Result<Trained, OctError> {
    let single_class = data.require_both_classes().is_err();
    let p = data.num_features();
    let solve_tree = |model: crate::formulation::MinlpModel| -> Result<Trained, OctError> {
        let result = branch_and_bound(&model, &settings.budget);
        let sol = result.incumbent.as_ref().ok_or_else(|| {
            OctError::Infeasible(format!("no incumbent found ({:?})", result.status))
        })?;
        Ok(Trained {
            model: TrainedModel::Tree(extract_tree(&model, sol)?),
            status: Some(result.status),
            gap: Some(result.gap),
            objective: Some(sol.objective),
        })
    };
    match *hyper {
        Hyper::Octsvm { c1, c2, c3 } => {
            let topo = TreeTopology::new(settings.octsvm_depth);
            if single_class {
                let t = TreeClassifier::constant(topo, p, data.majority_label());
                return Ok(Trained {
                    model: TrainedModel::Tree(t),
                    status: None,
                    gap: None,
                    objective: None,
                });
            }
            let config = ModelConfig {
                coef_bound: settings.coef_bound,
                ..ModelConfig::with_costs(c1, c2, c3, settings.octsvm_depth)
            };
            solve_tree(build_octsvm_model(data, &topo, &config)?)
        }
        Hyper::Resvm { c1, c2 } => {
            if single_class {
                let t = TreeClassifier::constant(TreeTopology::new(0), p, data.majority_label());
                return Ok(Trained {
                    model: TrainedModel::Tree(t),
                    status: None,
                    gap: None,
                    objective: None,
                });
            }
            solve_tree(build_resvm_model(data, c1, c2, settings.coef_bound)?)
        }
        Hyper::Cart { alpha } => {
            let params = CartParams {
                max_depth: settings.cart_depth,
                min_leaf_fraction: settings.min_leaf_fraction,
                alpha,
                exec: settings.exec,
            };
            Ok(Trained {
                model: TrainedModel::Cart(cart_train(data, &params)?),
                status: None,
                gap: None,
                objective: None,
            })
        }
    }
}

/// A trained model with the scaling of its training data, as stored on
/// disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub hyper: Hyper,
    pub scaling: Scaling,
    pub model: TrainedModel,
    pub status: Option<SolveStatus>,
    pub gap: Option<f64>,
    pub objective: Option<f64>,
}

impl ModelFile {
    pub fn new(hyper: Hyper, scaling: Scaling, trained: Trained) -> ModelFile {
        ModelFile {
            hyper,
            scaling,
            model: trained.model,
            status: trained.status,
            gap: trained.gap,
            objective: trained.objective,
        }
    }

    /// Predict a row given in the original (unscaled) feature units.
    pub fn predict_raw(&self, x: &[f64]) -> Result<i8, OctError> {
        self.model.predict(&self.scaling.apply(x)?)
    }

    pub fn to_json(&self) -> Result<String, OctError> {
        serde_json::to_string_pretty(self).map_err(|e| OctError::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<ModelFile, OctError> {
        serde_json::from_str(text).map_err(|e| OctError::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub hyper: Hyper,
    pub validation_accuracy: Option<f64>,
    pub trained: Trained,
}

/// Pick the grid point with the best accuracy on a stratified 25% hold-out
/// of `train` (ties: smaller `c3`/`α`, then `c2`, then `c1`) and retrain it
/// on all of `train`. A single-point grid is trained once, directly. When a
/// class is too small to be split, the hold-out is empty and accuracy is
/// measured on the fitting part.
pub fn grid_search(
    train: &Dataset,
    points: &[Hyper],
    settings: &TrainSettings,
    seed: u64,
) -> Result<GridOutcome, OctError> {
    if points.is_empty() {
        return Err(OctError::Invalid("empty hyperparameter grid".into()));
    }
    if points.len() == 1 {
        let trained = train_model(train, &points[0], settings)?;
        return Ok(GridOutcome {
            hyper: points[0],
            validation_accuracy: None,
            trained,
        });
    }
    let (fit_idx, val_idx) = stratified_split(&train.labels, 0.75, seed);
    let fit = train.subset(&fit_idx);
    let val = if val_idx.is_empty() {
        fit.clone()
    } else {
        train.subset(&val_idx)
    };
    let scores = map_slice(settings.exec, points, |h| {
        train_model(&fit, h, settings).and_then(|t| t.model.accuracy(&val))
    });
    let mut best: Option<(f64, usize)> = None;
    for (k, score) in scores.iter().enumerate() {
        let Ok(acc) = score else { continue };
        let better = match best {
            None => true,
            Some((b, j)) => {
                *acc > b || (*acc == b && points[k].simplicity_key() < points[j].simplicity_key())
            }
        };
        if better {
            best = Some((*acc, k));
        }
    }
    let Some((acc, k)) = best else {
        let diag: Vec<String> = points
            .iter()
            .zip(&scores)
            .map(|(h, s)| {
                format!(
                    "{h}: {}",
                    s.as_ref()
                        .err()
                        .map(ToString::to_string)
                        .unwrap_or_default()
                )
            })
            .collect();
        return Err(OctError::Infeasible(format!(
            "every grid point failed: {}",
            diag.join("; ")
        )));
    };
    let trained = train_model(train, &points[k], settings)?;
    Ok(GridOutcome {
        hyper: points[k],
        validation_accuracy: Some(acc),
        trained,
    })
}

fn default_methods() -> Vec<Method> {
    vec![Method::Octsvm, Method::Cart]
}
fn default_flips() -> Vec<f64> {
    vec![0.0, 0.2, 0.3, 0.4]
}
fn default_folds() -> usize {
    4
}
fn default_replications() -> usize {
    4
}
fn default_true() -> bool {
    true
}
fn default_octsvm_depth() -> usize {
    2
}
fn default_cart_depth() -> usize {
    3
}
fn default_coef_bound() -> f64 {
    10.0
}
fn default_min_leaf() -> f64 {
    0.05
}
fn default_time_limit() -> Option<f64> {
    Some(30.0)
}
fn default_gap() -> f64 {
    0.05
}
fn default_c12() -> Vec<f64> {
    powers(-5, 5)
}
fn default_c3() -> Vec<f64> {
    powers(-2, 2)
}

/// A label-noise experiment. Read from TOML; every key is optional except
/// `dataset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dataset: PathBuf,
    /// Name used in reports; defaults to the file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_flips")]
    pub flip_fractions: Vec<f64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// One seed per replication; defaults to `0..replications`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Train on one fold and test on the others (`true`), or the usual
    /// train on `k − 1` folds.
    #[serde(default = "default_true")]
    pub train_on_one_fold: bool,
    #[serde(default = "default_c12")]
    pub c1_grid: Vec<f64>,
    #[serde(default = "default_c12")]
    pub c2_grid: Vec<f64>,
    #[serde(default = "default_c3")]
    pub c3_grid: Vec<f64>,
    #[serde(default = "default_c12")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_octsvm_depth")]
    pub octsvm_depth: usize,
    #[serde(default = "default_cart_depth")]
    pub cart_depth: usize,
    #[serde(default = "default_coef_bound")]
    pub coef_bound: f64,
    #[serde(default = "default_min_leaf")]
    pub min_leaf_fraction: f64,
    /// Wall-clock limit per solve; `0` in a spec file removes it.
    #[serde(default = "default_time_limit")]
    pub time_limit_secs: Option<f64>,
    #[serde(default)]
    pub node_limit: Option<u64>,
    #[serde(default = "default_gap")]
    pub gap: f64,
    #[serde(default)]
    pub label_column: Option<usize>,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub exec: Exec,
}

impl ExperimentSpec {
    pub fn new(dataset: impl Into<PathBuf>) -> ExperimentSpec {
        toml::from_str::<ExperimentSpec>(&format!(
            "dataset = {:?}",
            dataset.into().display().to_string()
        ))
        .expect("defaults parse")
    }

    pub fn from_toml(text: &str) -> Result<ExperimentSpec, OctError> {
        let mut spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| OctError::Parse(e.to_string()))?;
        if spec.time_limit_secs == Some(0.0) {
            spec.time_limit_secs = None;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<ExperimentSpec, OctError> {
        let mut spec = ExperimentSpec::from_toml(&std::fs::read_to_string(path)?)?;
        if spec.dataset.is_relative() {
            if let Some(dir) = path.parent() {
                spec.dataset = dir.join(&spec.dataset);
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), OctError> {
        let bad = |m: &str| Err(OctError::Invalid(m.to_string()));
        if self.methods.is_empty() {
            return bad("no methods");
        }
        if self.flip_fractions.is_empty()
            || self.flip_fractions.iter().any(|f| !(0.0..0.5).contains(f))
        {
            return bad("flip fractions must be nonempty and lie in [0, 0.5)");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.replications == 0
            || (!self.seeds.is_empty() && self.seeds.len() != self.replications)
        {
            return bad("need one seed per replication");
        }
        if [
            &self.c1_grid,
            &self.c2_grid,
            &self.c3_grid,
            &self.alpha_grid,
        ]
        .iter()
        .any(|g| g.is_empty())
        {
            return bad("grids must be nonempty");
        }
        if self.time_limit_secs.is_none() && self.node_limit.is_none() {
            return bad("set a time limit, a node limit, or both");
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.replications as u64).collect()
        } else {
            self.seeds.clone()
        }
    }

    pub fn grids(&self) -> Grids {
        Grids {
            c1: self.c1_grid.clone(),
            c2: self.c2_grid.clone(),
            c3: self.c3_grid.clone(),
            alpha: self.alpha_grid.clone(),
        }
    }

    pub fn settings(&self) -> TrainSettings {
        TrainSettings {
            octsvm_depth: self.octsvm_depth,
            cart_depth: self.cart_depth,
            coef_bound: self.coef_bound,
            min_leaf_fraction: self.min_leaf_fraction,
            budget: Budget {
                time_limit_secs: self.time_limit_secs,
                node_limit: self.node_limit,
                gap: self.gap,
                ..Budget::default()
            },
            exec: self.exec,
        }
    }

    /// Without a time limit every solve is node-limited, so results are
    /// reproducible and wall times are left out of the report.
    pub fn deterministic(&self) -> bool {
        self.time_limit_secs.is_none()
    }

    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            label_column: self.label_column,
            has_header: self.has_header,
            ..CsvOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub method: Method,
    pub flip_percent: f64,
    pub replication: usize,
    pub fold: usize,
    pub accuracy_percent: Option<f64>,
    pub solve_gap: Option<f64>,
    pub wall_time_secs: Option<f64>,
    pub hyper: Option<Hyper>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub method: Method,
    /// `None` for the average over all flip levels.
    pub flip_percent: Option<f64>,
    pub mean_accuracy: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub record_timing: bool,
}

impl Report {
    /// Mean accuracy per (dataset, method, flip level) and per (dataset,
    /// method) over all levels. Failed cells are left out.
    pub fn aggregates(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(String, Method)> = self
            .rows
            .iter()
            .map(|r| (r.dataset.clone(), r.method))
            .collect();
        keys.sort();
        keys.dedup();
        let mut out = Vec::new();
        for (dataset, method) in keys {
            let rows: Vec<&ReportRow> = self
                .rows
                .iter()
                .filter(|r| r.dataset == dataset && r.method == method)
                .collect();
            let mut flips: Vec<f64> = rows.iter().map(|r| r.flip_percent).collect();
            flips.sort_by(f64::total_cmp);
            flips.dedup();
            let mean = |sel: &dyn Fn(&ReportRow) -> bool| -> (f64, usize) {
                let acc: Vec<f64> = rows
                    .iter()
                    .filter(|r| sel(r))
                    .filter_map(|r| r.accuracy_percent)
                    .collect();
                (
                    if acc.is_empty() {
                        f64::NAN
                    } else {
                        acc.iter().sum::<f64>() / acc.len() as f64
                    },
                    acc.len(),
                )
            };
            for f in flips {
                let (m, c) = mean(&|r| r.flip_percent == f);
                out.push(AggregateRow {
                    dataset: dataset.clone(),
                    method,
                    flip_percent: Some(f),
                    mean_accuracy: m,
                    cells: c,
                });
            }
            let (m, c) = mean(&|_| true);
            out.push(AggregateRow {
                dataset: dataset.clone(),
                method,
                flip_percent: None,
                mean_accuracy: m,
                cells: c,
            });
        }
        out
    }

    /// Mean accuracy of `method` over all successful cells.
    pub fn mean_accuracy(&self, method: Method) -> Option<f64> {
        let acc: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method)
            .filter_map(|r| r.accuracy_percent)
            .collect();
        (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64)
    }
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a combined word.
    let mut z = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Cell {
    replication: usize,
    seed: u64,
    flip_index: usize,
    fraction: f64,
    fold: usize,
    method: Method,
    train: Vec<usize>,
    test: Vec<usize>,
}

/// Scaled training part with flipped labels, scaled test part with the
/// original labels, and the noise seed used for the flips.
fn cell_data(cell: &Cell, raw: &RawData) -> Result<(Dataset, Dataset, u64), OctError> {
    let train_raw = raw.subset(&cell.train);
    let clean = normalize_features(&train_raw.features, train_raw.labels.clone())?;
    let noise_seed = mix(cell.seed, (cell.flip_index as u64) << 32 | cell.fold as u64);
    let train = flip_labels(&clean, cell.fraction, noise_seed)?;
    let test = scaled_subset(raw, &cell.test, &clean.scaling)?;
    Ok((train, test, noise_seed))
}

fn run_cell(cell: &Cell, raw: &RawData, spec: &ExperimentSpec, name: &str) -> ReportRow {
    let start = std::time::Instant::now();
    let mut row = ReportRow {
        dataset: name.to_string(),
        method: cell.method,
        flip_percent: 100.0 * cell.fraction,
        replication: cell.replication,
        fold: cell.fold,
        accuracy_percent: None,
        solve_gap: None,
        wall_time_secs: None,
        hyper: None,
        error: None,
    };
    let outcome = (|| -> Result<(f64, GridOutcome), OctError> {
        let (train, test, noise_seed) = cell_data(cell, raw)?;
        let points = spec.grids().points(cell.method);
        let grid_seed = mix(noise_seed, cell.method as u64 + 1);
        let outcome = grid_search(&train, &points, &spec.settings(), grid_seed)?;
        Ok((outcome.trained.model.accuracy(&test)?, outcome))
    })();
    match outcome {
        Ok((acc, outcome)) => {
            row.accuracy_percent = Some(acc);
            row.solve_gap = outcome.trained.gap;
            row.hyper = Some(outcome.hyper);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    if !spec.deterministic() {
        row.wall_time_secs = Some(start.elapsed().as_secs_f64());
    }
    row
}

fn scaled_subset(raw: &RawData, idx: &[usize], scaling: &Scaling) -> Result<Dataset, OctError> {
    let rows = idx
        .iter()
        .map(|&i| scaling.apply(&raw.features[i]))
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::from_normalized(&rows, idx.iter().map(|&i| raw.labels[i]).collect())
}

fn cells(spec: &ExperimentSpec, n: usize) -> Result<Vec<Cell>, OctError> {
    let mut cells = Vec::new();
    for (replication, seed) in spec.seeds().into_iter().enumerate() {
        let folds = kfold(n, spec.folds, seed)?;
        let pairs = fold_pairs(&folds, spec.train_on_one_fold);
        for (flip_index, &fraction) in spec.flip_fractions.iter().enumerate() {
            for (fold, (train, test)) in pairs.iter().enumerate() {
                for &method in &spec.methods {
                    cells.push(Cell {
                        replication,
                        seed,
                        flip_index,
                        fraction,
                        fold,
                        method,
                        train: train.clone(),
                        test: test.clone(),
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// Run every (replication × flip level × fold × method) cell on `raw`.
/// Features are min-max scaled on each training part, only training labels
/// are flipped, and failures are recorded in the row instead of aborting.
pub fn run_experiment_on(
    spec: &ExperimentSpec,
    raw: &RawData,
    name: &str,
) -> Result<Report, OctError> {
    spec.validate()?;
    let cells = cells(spec, raw.len())?;
    let mut rows = map_slice(spec.exec, &cells, |c| run_cell(c, raw, spec, name));
    rows.sort_by(|a, b| {
        (&a.dataset, a.method, a.replication, a.fold)
            .cmp(&(&b.dataset, b.method, b.replication, b.fold))
            .then(a.flip_percent.total_cmp(&b.flip_percent))
    });
    Ok(Report {
        rows,
        record_timing: !spec.deterministic(),
    })
}

/// Load the dataset named in `spec` and run the experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Report, OctError> {
    let raw = load_csv(&spec.dataset, &spec.csv_options())?;
    let name = spec.name.clone().unwrap_or_else(|| {
        spec.dataset
            .file_stem()
            .map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned())
    });
    run_experiment_on(spec, &raw, &name)
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.digits$}"))
}

/// Per-cell table as delimited text.
pub fn rows_to_csv(report: &Report, delimiter: u8) -> Result<String, OctError> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(Vec::new());
    let mut header = vec![
        "dataset",
        "method",
        "flip_percent",
        "replication",
        "fold",
        "accuracy_percent",
        "solve_gap",
    ];
    if report.record_timing {
        header.push("wall_time_secs");
    }
    header.extend(["hyperparameters", "error"]);
    w.write_record(&header)
        .map_err(|e| OctError::Parse(e.to_string()))?;
    for r in &report.rows {
        let mut rec = vec![
            r.dataset.clone(),
            r.method.to_string(),
            format!("{:.0}", r.flip_percent),
            (r.replication + 1).to_string(),
            (r.fold + 1).to_string(),
            fmt_opt(r.accuracy_percent, 2),
            fmt_opt(r.solve_gap, 6),
        ];
        if report.record_timing {
            rec.push(fmt_opt(r.wall_time_secs, 3));
        }
        rec.push(r.hyper.map_or_else(String::new, |h| h.to_string()));
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)
            .map_err(|e| OctError::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| OctError::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| OctError::Parse(e.to_string()))
}

/// Aggregate accuracies laid out with one line per flip level and an
/// "Average" line per (dataset, method).
pub fn aggregate_table(report: &Report) -> String {
    let mut out = format!(
        "{:<16} {:<8} {:>6} {:>10} {:>6}\n",
        "dataset", "method", "flip%", "accuracy", "cells"
    );
    for a in report.aggregates() {
        let flip = a
            .flip_percent
            .map_or_else(|| "Average".to_string(), |f| format!("{f:.0}"));
        out.push_str(&format!(
            "{:<16} {:<8} {:>6} {:>10.2} {:>6}\n",
            a.dataset,
            a.method.to_string(),
            flip,
            a.mean_accuracy,
            a.cells
        ));
    }
    out
}

/// Path of the aggregate table written next to a per-cell report.
pub fn summary_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".summary.txt");
    PathBuf::from(s)
}

/// Write the per-cell table to `path` and the aggregate table to
/// [`summary_path`]`(path)`. Output bytes depend only on the report.
pub fn write_report(report: &Report, path: &Path, delimiter: u8) -> Result<Vec<PathBuf>, OctError> {
    if report.rows.is_empty() {
        return Err(OctError::Invalid("empty report".into()));
    }
    std::fs::write(path, rows_to_csv(report, delimiter)?)?;
    let summary = summary_path(path);
    std::fs::write(&summary, aggregate_table(report))?;
    Ok(vec![path.to_path_buf(), summary])
}
