//! Seeded experiment runs comparing LASS against label propagation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::datasets::{blobs, choose, load_csv_dataset, multitag, two_moons, BlobSpec, Dataset, MultitagSpec};
use super::metrics::{argmax_error, precision_recall_f1, top_t_set_error};
use crate::error::{LassError, Result};
use crate::graph::{build_knn_graph, connected_components, laplacian, GraphLaplacian, Kernel};
use crate::lass::{solve, Problem, RhoPolicy, SolverConfig};
use crate::ssl::{class_mass_normalize, harmonic_solve, labels_from_affinities, LabeledSplit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    TwoMoons {
        n: usize,
        noise: f64,
    },
    Blobs {
        n: usize,
        classes: usize,
        dim: usize,
        radius: f64,
        std: f64,
    },
    Multitag {
        n: usize,
        categories: usize,
        clusters: usize,
        dim: usize,
        min_tags: usize,
        max_tags: usize,
        popularity: f64,
        spread: f64,
        std: f64,
        keep: f64,
    },
    Csv {
        points: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        categories: Option<usize>,
    },
}

impl DatasetConfig {
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetConfig::TwoMoons { n, noise } => two_moons(*n, *noise, seed),
            &DatasetConfig::Blobs { n, classes, dim, radius, std } => {
                blobs(&BlobSpec { n, classes, dim, radius, std }, seed)
            }
            &DatasetConfig::Multitag {
                n,
                categories,
                clusters,
                dim,
                min_tags,
                max_tags,
                popularity,
                spread,
                std,
                keep,
            } => multitag(
                &MultitagSpec { n, categories, clusters, dim, min_tags, max_tags, popularity, spread, std, keep },
                seed,
            ),
            DatasetConfig::Csv { points, labels, categories } => load_csv_dataset(points, labels, *categories),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub k: usize,
    pub kernel: Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Protocol {
    /// A few labeled items per class; LASS sees `+1` on the labeled class.
    Classification { labels_per_class: Vec<usize> },
    /// Train items get `+1` on some true tags and `-1` on non-tags drawn from
    /// the most frequent categories; test items get nothing.
    Tagging {
        positive_tags: Vec<usize>,
        #[serde(default = "default_negative_tags")]
        negative_tags: usize,
        #[serde(default = "default_negative_pool")]
        negative_pool: usize,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        #[serde(default = "default_annotation_length")]
        annotation_length: usize,
    },
}

fn default_negative_tags() -> usize {
    5
}
fn default_negative_pool() -> usize {
    20
}
fn default_test_fraction() -> f64 {
    0.25
}
fn default_annotation_length() -> usize {
    5
}

impl Protocol {
    fn sweep(&self) -> &[usize] {
        match self {
            Protocol::Classification { labels_per_class } => labels_per_class,
            Protocol::Tagging { positive_tags, .. } => positive_tags,
        }
    }

    fn sweep_name(&self) -> &'static str {
        match self {
            Protocol::Classification { .. } => "labels_per_class",
            Protocol::Tagging { .. } => "positive_tags",
        }
    }

    fn primary_metric(&self) -> &'static str {
        match self {
            Protocol::Classification { .. } => "error",
            Protocol::Tagging { .. } => "f1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lass,
    /// Harmonic function on `D - W`.
    Ssl,
    /// Harmonic function followed by class mass normalization.
    Ssl1,
    /// Harmonic function on the normalized Laplacian.
    Ssl2,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lass => "lass",
            Method::Ssl => "ssl",
            Method::Ssl1 => "ssl1",
            Method::Ssl2 => "ssl2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub graph: GraphConfig,
    pub protocol: Protocol,
    pub methods: Vec<Method>,
    pub lambda_grid: Vec<f64>,
    /// Weight given to zero affinities when SSL labels are built from
    /// affinities. Ignored by the classification protocol.
    #[serde(default = "default_epsilon_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default = "default_rho")]
    pub rho: RhoPolicy,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    /// The holdout is rotated over this many disjoint folds and the
    /// validation loss averaged.
    #[serde(default = "default_validation_folds")]
    pub validation_folds: usize,
    pub runs: usize,
    pub seed: u64,
}

fn default_epsilon_grid() -> Vec<f64> {
    vec![0.0]
}
fn default_rho() -> RhoPolicy {
    RhoPolicy::Auto
}
fn default_tol() -> f64 {
    1e-5
}
fn default_max_iterations() -> usize {
    100_000
}
fn default_validation_fraction() -> f64 {
    0.2
}
fn default_validation_folds() -> usize {
    5
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(LassError::invalid("runs must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(LassError::invalid("methods must not be empty"));
        }
        if self.lambda_grid.is_empty() || self.epsilon_grid.is_empty() {
            return Err(LassError::invalid("grids must not be empty"));
        }
        if self.lambda_grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(LassError::invalid("lambda grid values must be finite and nonnegative"));
        }
        if self.epsilon_grid.iter().any(|e| !(0.0..1.0).contains(e)) {
            return Err(LassError::invalid("epsilon grid values must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(LassError::invalid("validation fraction must lie in [0, 1)"));
        }
        if self.validation_folds == 0 {
            return Err(LassError::invalid("validation folds must be at least 1"));
        }
        if self.protocol.sweep().is_empty() {
            return Err(LassError::invalid(format!("{} must not be empty", self.protocol.sweep_name())));
        }
        if let Protocol::Tagging { test_fraction, annotation_length, .. } = self.protocol {
            if !(test_fraction > 0.0 && test_fraction < 1.0) {
                return Err(LassError::invalid("test fraction must lie in (0, 1)"));
            }
            if annotation_length == 0 {
                return Err(LassError::invalid("annotation length must be at least 1"));
            }
        }
        self.solver().validate()
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig { rho: self.rho, tol: self.tol, max_iterations: self.max_iterations, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub k: usize,
    pub edges: usize,
    pub components: usize,
}

/// One method on one run. Failed runs carry `error` and no metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sweep: usize,
    pub run: usize,
    pub method: Method,
    /// Selected λ for LASS, selected ε for SSL variants on tagging data.
    pub selected: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep: usize,
    pub method: Method,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub graph: GraphSummary,
    pub sweep_name: String,
    pub notes: Vec<String>,
    pub summary: Vec<SummaryRow>,
    pub runs: Vec<RunRecord>,
}

impl ExperimentReport {
    pub fn summary_for(&self, sweep: usize, method: Method, metric: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.sweep == sweep && r.method == method && r.metric == metric)
    }

    pub fn runs_csv(&self) -> String {
        let metrics = self.metric_names();
        let mut out = format!("{},run,method,selected,converged,{},error\n", self.sweep_name, metrics.join(","));
        for r in &self.runs {
            let _ = write!(
                out,
                "{},{},{},{},{},",
                r.sweep,
                r.run,
                r.method.name(),
                r.selected.map(|v| v.to_string()).unwrap_or_default(),
                r.converged.map(|v| v.to_string()).unwrap_or_default()
            );
            for m in &metrics {
                let _ = write!(out, "{},", r.metrics.get(m).map(|v| v.to_string()).unwrap_or_default());
            }
            let _ = writeln!(out, "{}", r.error.as_deref().map(csv_quote).unwrap_or_default());
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{},method,metric,mean,std,runs,excluded\n", self.sweep_name);
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.sweep,
                s.method.name(),
                s.metric,
                s.mean,
                s.std,
                s.runs,
                s.excluded
            );
        }
        out
    }

    /// Whitespace-separated columns: sweep value, then mean and std of
    /// `metric` for each method.
    pub fn gnuplot_data(&self, metric: &str) -> String {
        let mut out = format!("# {}", self.sweep_name);
        for m in &self.config.methods {
            let _ = write!(out, " {0}_mean {0}_std", m.name());
        }
        out.push('\n');
        for &s in self.config.protocol.sweep() {
            let _ = write!(out, "{s}");
            for &m in &self.config.methods {
                match self.summary_for(s, m, metric) {
                    Some(row) => {
                        let _ = write!(out, " {} {}", row.mean, row.std);
                    }
                    None => out.push_str(" nan nan"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Writes `runs.csv`, `summary.csv`, `summary.json` and one `.dat` file
    /// per metric.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = vec![
            (dir.join("runs.csv"), self.runs_csv()),
            (dir.join("summary.csv"), self.summary_csv()),
            (dir.join("summary.json"), serde_json::to_string_pretty(self)? + "\n"),
        ];
        for m in self.metric_names() {
            files.push((dir.join(format!("curve_{m}.dat")), self.gnuplot_data(&m)));
        }
        for (path, text) in &files {
            std::fs::write(path, text)?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }

    fn metric_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.runs.iter().flat_map(|r| r.metrics.keys().cloned()).collect();
        names.sort();
        names.dedup();
        names
    }
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Supervision for one run: affinity rows for some items, plus the items
/// on which the final predictions are scored.
struct Supervision {
    rows: Vec<(usize, Vec<f64>)>,
    eval: Vec<usize>,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    data: &'a Dataset,
    l: &'a GraphLaplacian,
    l_norm: Option<&'a GraphLaplacian>,
    frequent: &'a [usize],
}

/// Generates the dataset, builds its graph and runs every method on
/// `runs` seeded partitions per sweep value.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let data = cfg.dataset.generate(cfg.seed)?;
    run_on_dataset(cfg, &data)
}

/// Same as [`run_experiment`] on an already loaded dataset.
pub fn run_on_dataset(cfg: &ExperimentConfig, data: &Dataset) -> Result<ExperimentReport> {
    cfg.validate()?;
    let w = build_knn_graph(data.points.view(), cfg.graph.k, cfg.graph.kernel)?;
    let l = laplacian(&w, false);
    let l_norm = cfg.methods.contains(&Method::Ssl2).then(|| laplacian(&w, true));
    let counts = data.category_counts();
    let mut by_freq: Vec<usize> = (0..data.k).collect();
    by_freq.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let ctx = Context { cfg, data, l: &l, l_norm: l_norm.as_ref(), frequent: &by_freq };

    let jobs: Vec<(usize, usize)> =
        cfg.protocol.sweep().iter().flat_map(|&s| (0..cfg.runs).map(move |r| (s, r))).collect();
    let mut runs: Vec<RunRecord> = jobs
        .par_iter()
        .enumerate()
        .map(|(slot, &(s, r))| ctx.run_once(s, r, (slot / cfg.runs) as u64))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    runs.sort_by(|a, b| (a.sweep, a.run, a.method).cmp(&(b.sweep, b.run, b.method)));

    let summary = summarize(cfg, &runs);
    let graph = GraphSummary {
        n: data.n(),
        k: data.k,
        edges: w.num_edges(),
        components: connected_components(&w).count(),
    };
    let notes = vec![
        "categories and items are 0-based".to_string(),
        "precision, recall and F1 are macro-averaged over test items".to_string(),
        format!(
            "grid search holds out {}% of supervised items per run (at least one, stratified by class for \
             classification), rotated over up to {} disjoint folds; ties go to the smaller value",
            cfg.validation_fraction * 100.0,
            cfg.validation_folds
        ),
        "ssl1 priors are the category frequencies of the labeled rows".to_string(),
        "std is the sample standard deviation over non-excluded runs".to_string(),
    ];
    Ok(ExperimentReport {
        config: cfg.clone(),
        graph,
        sweep_name: cfg.protocol.sweep_name().to_string(),
        notes,
        summary,
        runs,
    })
}

fn summarize(cfg: &ExperimentConfig, runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &s in cfg.protocol.sweep() {
        for &m in &cfg.methods {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.sweep == s && r.method == m).collect();
            let excluded = mine.iter().filter(|r| r.error.is_some()).count();
            let mut names: Vec<String> = mine.iter().flat_map(|r| r.metrics.keys().cloned()).collect();
            names.sort();
            names.dedup();
            if names.is_empty() {
                names.push(cfg.protocol.primary_metric().to_string());
            }
            for metric in names {
                let vals: Vec<f64> = mine.iter().filter_map(|r| r.metrics.get(&metric).copied()).collect();
                let (mean, std) = mean_std(&vals);
                rows.push(SummaryRow { sweep: s, method: m, metric, mean, std, runs: vals.len(), excluded });
            }
        }
    }
    rows
}

fn mean_std(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Outcome of fitting one method with one parameter value.
struct Fit {
    z: Array2<f64>,
    converged: Option<bool>,
    warm: Option<(Array2<f64>, Array2<f64>)>,
}

impl Context<'_> {
    fn run_once(&self, sweep: usize, run: usize, stream: u64) -> Result<Vec<RunRecord>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed.wrapping_add(1).wrapping_add(run as u64));
        rng.set_stream(stream);
        let sup = self.supervise(sweep, &mut rng);
        let folds = self.folds(&sup, &mut rng);

        Ok(self
            .cfg
            .methods
            .iter()
            .map(|&method| {
                let outcome = self.select_and_fit(method, &sup, &folds).and_then(|(selected, fit)| {
                    Ok((selected, self.score(&fit.z, &sup.eval)?, fit.converged))
                });
                match outcome {
                    Ok((selected, metrics, converged)) => {
                        RunRecord { sweep, run, method, selected, metrics, converged, error: None }
                    }
                    Err(e) => RunRecord {
                        sweep,
                        run,
                        method,
                        selected: None,
                        metrics: BTreeMap::new(),
                        converged: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect())
    }

    /// Disjoint holdout folds over the supervised items. Classification folds
    /// are stratified so every class keeps the same number of labels.
    fn folds(&self, sup: &Supervision, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
        let frac = self.cfg.validation_fraction;
        let mut groups: Vec<Vec<usize>> = match self.cfg.protocol {
            Protocol::Classification { .. } => {
                let mut by_class = vec![Vec::new(); self.data.k];
                for (i, g) in &sup.rows {
                    let c = g.iter().position(|&v| v > 0.0).expect("classification rows have a +1");
                    by_class[c].push(*i);
                }
                by_class.retain(|items| items.len() >= 2);
                by_class
            }
            Protocol::Tagging { .. } => vec![sup.rows.iter().map(|(i, _)| *i).collect()],
        };
        groups.retain(|items| items.len() >= 2);
        if groups.is_empty() || frac == 0.0 {
            return Vec::new();
        }
        let mut count = self.cfg.validation_folds;
        let mut sizes = Vec::with_capacity(groups.len());
        for items in &mut groups {
            items.shuffle(rng);
            let m = items.len();
            let hold = ((frac * m as f64).round() as usize).clamp(1, m - 1);
            count = count.min(m / hold);
            sizes.push(hold);
        }
        (0..count)
            .map(|f| {
                let mut fold: Vec<usize> =
                    groups.iter().zip(&sizes).flat_map(|(items, &h)| items[f * h..(f + 1) * h].iter().copied()).collect();
                fold.sort_unstable();
                fold
            })
            .collect()
    }

    fn supervise(&self, sweep: usize, rng: &mut ChaCha8Rng) -> Supervision {
        let data = self.data;
        let k = data.k;
        match &self.cfg.protocol {
            Protocol::Classification { .. } => {
                let classes = data.classes();
                let mut rows = Vec::new();
                for c in 0..k {
                    let members: Vec<usize> = (0..data.n()).filter(|&i| classes[i] == c).collect();
                    for i in choose(&members, sweep, rng) {
                        let mut g = vec![0.0; k];
                        g[c] = 1.0;
                        rows.push((i, g));
                    }
                }
                rows.sort_by_key(|(i, _)| *i);
                let mut labeled = vec![false; data.n()];
                rows.iter().for_each(|(i, _)| labeled[*i] = true);
                let eval = (0..data.n()).filter(|&i| !labeled[i]).collect();
                Supervision { rows, eval }
            }
            Protocol::Tagging { negative_tags, negative_pool, test_fraction, .. } => {
                let all: Vec<usize> = (0..data.n()).collect();
                let n_test = ((test_fraction * data.n() as f64).round() as usize).clamp(1, data.n() - 1);
                let mut test = choose(&all, n_test, rng);
                test.sort_unstable();
                let mut is_test = vec![false; data.n()];
                test.iter().for_each(|&i| is_test[i] = true);
                let pool = &self.frequent[..(*negative_pool).min(k)];
                let mut rows = Vec::new();
                for i in (0..data.n()).filter(|&i| !is_test[i]) {
                    let truth = &data.truth[i];
                    let mut g = vec![0.0; k];
                    for c in choose(truth, sweep, rng) {
                        g[c] = 1.0;
                    }
                    let candidates: Vec<usize> = pool.iter().copied().filter(|c| !truth.contains(c)).collect();
                    for c in choose(&candidates, *negative_tags, rng) {
                        g[c] = -1.0;
                    }
                    rows.push((i, g));
                }
                Supervision { rows, eval: test }
            }
        }
    }

    /// Grid search over the holdout folds, then a final fit on all supervision.
    ///
    /// For LASS the full fit at each grid value doubles as the warm start of
    /// its fold fits.
    fn select_and_fit(&self, method: Method, sup: &Supervision, folds: &[Vec<usize>]) -> Result<(Option<f64>, Fit)> {
        let grid: Vec<f64> = match (method, &self.cfg.protocol) {
            (Method::Lass, _) => sorted(&self.cfg.lambda_grid),
            (_, Protocol::Tagging { .. }) => sorted(&self.cfg.epsilon_grid),
            (_, Protocol::Classification { .. }) => {
                return Ok((None, self.fit(method, 0.0, sup, &[], None)?));
            }
        };
        if grid.len() == 1 || folds.is_empty() {
            return Ok((Some(grid[0]), self.fit(method, grid[0], sup, &[], None)?));
        }
        let mut best: Option<(f64, f64, Fit)> = None;
        for &value in &grid {
            let full = self.fit(method, value, sup, &[], None);
            let warm = full.as_ref().ok().and_then(|f| f.warm.as_ref());
            let mut loss = 0.0;
            for holdout in folds {
                loss += match self.fit(method, value, sup, holdout, warm) {
                    Ok(fit) => self.validation_loss(&fit.z, holdout)?,
                    Err(_) => f64::INFINITY,
                };
            }
            let loss = loss / folds.len() as f64;
            if let Ok(full) = full {
                if best.as_ref().is_none_or(|(_, l, _)| loss < *l) {
                    best = Some((value, loss, full));
                }
            }
        }
        match best {
            Some((value, _, fit)) => Ok((Some(value), fit)),
            None => self.fit(method, grid[0], sup, &[], None).map(|f| (Some(grid[0]), f)),
        }
    }

    /// Fits `method` using the supervision of every item not in `hidden`.
    fn fit(
        &self,
        method: Method,
        param: f64,
        sup: &Supervision,
        hidden: &[usize],
        warm: Option<&(Array2<f64>, Array2<f64>)>,
    ) -> Result<Fit> {
        let n = self.data.n();
        let k = self.data.k;
        let mut g = Array2::zeros((n, k));
        for (i, row) in &sup.rows {
            if !hidden.contains(i) {
                g.row_mut(*i).assign(&ndarray::ArrayView1::from(row.as_slice()));
            }
        }
        if method == Method::Lass {
            let p = Problem::new(self.l.clone(), g, param)?;
            let sol = solve(&p, &self.cfg.solver(), warm.map(|(y, u)| (y.view(), u.view())))?;
            let converged = Some(sol.diagnostics.converged);
            return Ok(Fit { z: sol.z, converged, warm: sol.warm });
        }
        let labels = labels_from_affinities(g.view(), param)?;
        let split = LabeledSplit::new(n, labels.rows.clone(), labels.z.clone())?;
        let l = match method {
            Method::Ssl2 => self.l_norm.expect("normalized laplacian built when ssl2 is requested"),
            _ => self.l,
        };
        let mut z_u = harmonic_solve(l, &split)?;
        if method == Method::Ssl1 {
            let mass = labels.z.sum_axis(Axis(0));
            let total = mass.sum();
            let priors: Vec<f64> = mass.iter().map(|m| (m / total).max(1e-12)).collect();
            let s: f64 = priors.iter().sum();
            let priors: Vec<f64> = priors.iter().map(|p| p / s).collect();
            z_u = class_mass_normalize(z_u.view(), &priors)?.0;
        }
        let z = split.assemble(z_u.view())?;
        Ok(Fit { z, converged: None, warm: None })
    }

    fn validation_loss(&self, z: &Array2<f64>, items: &[usize]) -> Result<f64> {
        let metrics = self.score(z, items)?;
        Ok(match self.cfg.protocol {
            Protocol::Classification { .. } => metrics["error"],
            Protocol::Tagging { .. } => 1.0 - metrics["f1"],
        })
    }

    fn score(&self, z: &Array2<f64>, items: &[usize]) -> Result<BTreeMap<String, f64>> {
        let pred = z.select(Axis(0), items);
        let truth: Vec<Vec<usize>> = items.iter().map(|&i| self.data.truth[i].clone()).collect();
        let mut out = BTreeMap::new();
        match self.cfg.protocol {
            Protocol::Classification { .. } => {
                let classes: Vec<usize> = truth.iter().map(|t| t[0]).collect();
                out.insert("error".to_string(), argmax_error(pred.view(), &classes)?);
            }
            Protocol::Tagging { annotation_length, .. } => {
                let (p, r, f) = precision_recall_f1(pred.view(), &truth, annotation_length)?;
                out.insert("precision".to_string(), p);
                out.insert("recall".to_string(), r);
                out.insert("f1".to_string(), f);
                out.insert("top_t_error".to_string(), top_t_set_error(pred.view(), &truth)?);
            }
        }
        Ok(out)
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}
