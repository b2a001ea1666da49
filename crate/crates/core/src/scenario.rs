//! Scenario files and the pipelines driven by them.
//!
//! A scenario is a TOML or JSON document (chosen by file extension, JSON
//! for `.json` and TOML otherwise). Every section except `cps`, `window`
//! and `radii` is optional.
//!
//! ```toml
//! name = "fibonacci"
//! seed = 20240601                 # required for generic draws and probes
//! radii = [100.0, 1000.0, 10000.0]  # strictly increasing half-widths
//! output_dir = "out/fibonacci"
//! criteria = ["density", "cpp"]   # default: every criterion
//!
//! [cps]
//! preset = "fibonacci"            # or: d = 1, m = 1, basis = [[..], [..]]
//! [cps.witness]                   # finite injectivity and density searches
//! injectivity_radius = 1000
//!
//! [window]
//! preset = "fibonacci"            # or boxes = [[lo.., hi..], ..]
//! point_free = []                 # boxes that only hold off the star set
//! include = []                    # override points
//! exclude = []
//! [window.counterexample]         # replaces the window by a Borel B_a
//! gamma = { rule = "bernoulli", p = 0.5, seed = 7 }
//! a = 0.809
//! search_range = 20.0
//!
//! [params]
//! mode = "generic"                # or "fixed" with s = [..], t = [..]
//!
//! [spectrum]
//! k_max = 5.0
//! threshold = 1e-3
//! top = 5                         # 0 checks every listed peak
//! non_dual = 5
//! frequencies = []                # extra frequencies for `fbcoeff`
//! oracle_radius = 50              # 0 skips the brute-force peak check
//!
//! [autocorrelation]
//! max_range = 10.0
//!
//! [torus]
//! draws = 20
//! radius = 1000.0
//! coarse_radius = 100.0
//!
//! [translation]
//! count = 10
//! radius = 1000.0
//! inner = [[1e-9, 0.3]]           # subwindow U for the decomposition check
//!
//! [birkhoff]
//! step = 0.0375
//! kernels = [{ center = [0.0], halfwidth = 0.4, shape = "box" }]
//!
//! [tolerances]
//! density = 1e-2
//! autocorrelation = 5e-3
//! cpp = 2e-2
//! non_dual = 1e-2
//! birkhoff = 2e-2
//!
//! [expect]
//! cpp = "expected-fail"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::averaging::{
    autocorrelation_estimate, birkhoff_product_average, convergence_scan, fourier_bohr_estimate,
    Kernel, KernelShape, ScanOp,
};
use crate::cps::{make_cps_from_rows, Cps, WitnessConfig};
use crate::diffraction::{
    cpp_check, predicted_autocorrelation, predicted_diffraction, predicted_fourier_bohr,
    ComparisonReport, ComparisonRow, DiffractionSpectrum, DualMatch, Peak,
};
use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::modelset::{
    cut_project, decompose, make_borel_counterexample, BorelCounterexample, GammaRule, Patch,
};
use crate::output::{self, Artifact, TorusRecovery, TOOL_VERSION};
use crate::provenance::full_digest;
use crate::torus::{fundamental_domain_draw, recover_parameters};
use crate::window::{measure, Window};
use crate::{lattice_density, Complex64, TAU};

/// RNG streams split off the scenario seed.
const STREAM_PARAMS: u64 = 0;
const STREAM_NON_DUAL: u64 = 1;
const STREAM_TORUS: u64 = 2;
const STREAM_BIRKHOFF: u64 = 3;
const STREAM_TRANSLATION: u64 = 4;

/// Every criterion `verify` knows, in report order.
pub const CRITERIA: [&str; 10] = [
    "density",
    "autocorrelation",
    "cpp",
    "fourier_bohr",
    "non_dual",
    "spectrum_oracle",
    "translation",
    "neutrality",
    "torus",
    "genericity",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub radii: Vec<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub criteria: Option<Vec<String>>,
    pub cps: CpsConfig,
    pub window: WindowConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub autocorrelation: AutocorrelationConfig,
    #[serde(default)]
    pub torus: TorusConfig,
    #[serde(default)]
    pub translation: TranslationConfig,
    #[serde(default)]
    pub birkhoff: BirkhoffConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub expect: BTreeMap<String, Expectation>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpsConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    /// Basis rows, physical rows first; column `j` is the `j`-th generator.
    #[serde(default)]
    pub basis: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub witness: WitnessConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(default)]
    pub preset: Option<String>,
    /// Half-open boxes as flat `[lo.., hi..]` arrays.
    #[serde(default)]
    pub boxes: Vec<Vec<f64>>,
    #[serde(default)]
    pub point_free: Vec<Vec<f64>>,
    #[serde(default)]
    pub include: Vec<Vec<f64>>,
    #[serde(default)]
    pub exclude: Vec<Vec<f64>>,
    #[serde(default)]
    pub counterexample: Option<CounterexampleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub gamma: GammaRule,
    /// Target measure of `B_a`.
    pub a: f64,
    #[serde(default = "default_search_range")]
    pub search_range: f64,
}

fn default_search_range() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    #[default]
    Fixed,
    Generic,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default)]
    pub mode: ParamMode,
    #[serde(default)]
    pub s: Option<Vec<f64>>,
    #[serde(default)]
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub k_max: f64,
    pub threshold: f64,
    pub top: usize,
    pub non_dual: usize,
    pub frequencies: Vec<Vec<f64>>,
    pub oracle_radius: i64,
    pub dual_match: DualMatch,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            k_max: 5.0,
            threshold: 1e-3,
            top: 5,
            non_dual: 5,
            frequencies: Vec::new(),
            oracle_radius: 50,
            dual_match: DualMatch::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutocorrelationConfig {
    pub max_range: f64,
}

impl Default for AutocorrelationConfig {
    fn default() -> Self {
        Self { max_range: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusConfig {
    pub draws: usize,
    pub radius: f64,
    pub coarse_radius: f64,
}

impl Default for TorusConfig {
    fn default() -> Self {
        Self {
            draws: 20,
            radius: 1e3,
            coarse_radius: 1e2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslationConfig {
    pub count: usize,
    pub radius: f64,
    /// Largest integer coordinate of the lattice translates.
    pub coordinate_range: i64,
    pub inner: Vec<Vec<f64>>,
}

impl Default for TranslationConfig {
    fn default() -> Self {
        Self {
            count: 10,
            radius: 1e3,
            coordinate_range: 40,
            inner: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BirkhoffConfig {
    pub kernels: Vec<Kernel>,
    /// Sample step; defaults to an eighth of the narrowest kernel.
    pub step: Option<f64>,
}

impl Default for BirkhoffConfig {
    fn default() -> Self {
        Self {
            kernels: vec![
                Kernel {
                    center: vec![0.0],
                    halfwidth: 0.4,
                    shape: KernelShape::Box,
                },
                Kernel {
                    center: vec![1.0],
                    halfwidth: 0.3,
                    shape: KernelShape::Triangle,
                },
                Kernel {
                    center: vec![1.0 + TAU],
                    halfwidth: 0.3,
                    shape: KernelShape::Triangle,
                },
            ],
            step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub density: f64,
    pub autocorrelation: f64,
    pub cpp: f64,
    pub non_dual: f64,
    pub birkhoff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            density: 1e-2,
            autocorrelation: 5e-3,
            cpp: 2e-2,
            non_dual: 1e-2,
            birkhoff: 2e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    #[default]
    Pass,
    ExpectedFail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    ExpectedFail,
    /// Marked expected-fail but passed.
    UnexpectedPass,
    /// The computation itself failed.
    Error,
}

impl Verdict {
    pub fn ok(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::ExpectedFail)
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::ExpectedFail => "EXPECTED-FAIL",
            Verdict::UnexpectedPass => "UNEXPECTED-PASS",
            Verdict::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub verdict: Verdict,
    /// Worst observed error, when the criterion has one.
    pub metric: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub config_hash: String,
    pub tool_version: String,
    /// Artifact names per command, relative to the output directory.
    pub artifacts: BTreeMap<String, Vec<String>>,
    pub criteria: Vec<CriterionResult>,
    /// Hash of this manifest with the field itself left empty.
    pub manifest_hash: String,
}

impl RunManifest {
    pub fn all_ok(&self) -> bool {
        self.criteria.iter().all(|c| c.verdict.ok())
    }

    fn seal(mut self) -> Result<Self> {
        self.manifest_hash.clear();
        let bytes = serde_json::to_vec(&self).map_err(|e| Error::Io(e.to_string()))?;
        self.manifest_hash = full_digest(&bytes);
        Ok(self)
    }
}

impl ScenarioConfig {
    /// Parse `text`; `json` selects the format.
    pub fn parse(text: &str, json: bool) -> Result<Self> {
        let cfg: ScenarioConfig = if json {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => Error::Config(locate(text, &msg)),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, json).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Schema checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::Config(
                "`radii` must list at least one radius".into(),
            ));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Config("`radii` entries must be positive".into()));
        }
        if self.radii.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Config("`radii` must be strictly increasing".into()));
        }
        if let Some(list) = &self.criteria {
            if let Some(bad) = list.iter().find(|c| !CRITERIA.contains(&c.as_str())) {
                return Err(Error::Config(format!(
                    "unknown criterion `{bad}` in `criteria`"
                )));
            }
        }
        if let Some(bad) = self.expect.keys().find(|c| !CRITERIA.contains(&c.as_str())) {
            return Err(Error::Config(format!(
                "unknown criterion `{bad}` in `expect`"
            )));
        }
        if self.params.mode == ParamMode::Generic
            && (self.params.s.is_some() || self.params.t.is_some())
        {
            return Err(Error::Config(
                "`params.s`/`params.t` are only read in fixed mode".into(),
            ));
        }
        let (d, m) = self.dims()?;
        if let Some(rows) = &self.cps.basis {
            if rows.len() != d + m {
                return Err(Error::Config(format!(
                    "`basis` has {} rows, expected {}",
                    rows.len(),
                    d + m
                )));
            }
            if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d + m) {
                return Err(Error::Config(format!(
                    "`basis` row {} has {} entries, expected {}",
                    i + 1,
                    r.len(),
                    d + m
                )));
            }
        }
        for (key, list) in [
            ("boxes", &self.window.boxes),
            ("point_free", &self.window.point_free),
        ] {
            if let Some(b) = list.iter().find(|b| b.len() != 2 * m) {
                return Err(Error::Config(format!(
                    "`{key}` entry {b:?} needs {} numbers ([lo.., hi..])",
                    2 * m
                )));
            }
        }
        for (key, list) in [
            ("include", &self.window.include),
            ("exclude", &self.window.exclude),
        ] {
            if let Some(p) = list.iter().find(|p| p.len() != m) {
                return Err(Error::Config(format!(
                    "`{key}` point {p:?} needs {m} coordinates"
                )));
            }
        }
        for (key, v, dim) in [("s", &self.params.s, d), ("t", &self.params.t, m)] {
            if let Some(v) = v {
                if v.len() != dim {
                    return Err(Error::Config(format!("`{key}` needs {dim} coordinates")));
                }
            }
        }
        if self.window.preset.is_some() && !self.window.boxes.is_empty() {
            return Err(Error::Config(
                "`window.preset` and `window.boxes` are exclusive".into(),
            ));
        }
        if let Some(p) = &self.window.preset {
            if p != "fibonacci" && p != "empty" {
                return Err(Error::Config(format!("unknown window `preset` \"{p}\"")));
            }
        }
        if self.seed.is_none() {
            let needs = [
                (
                    self.params.mode == ParamMode::Generic,
                    "params.mode = \"generic\"",
                ),
                (
                    self.enabled("non_dual") && self.spectrum.non_dual > 0,
                    "non_dual",
                ),
                (self.enabled("torus") && self.torus.draws > 0, "torus"),
                (self.enabled("genericity"), "genericity"),
                (
                    self.enabled("translation") && self.translation.count > 0,
                    "translation",
                ),
            ];
            if let Some((_, what)) = needs.iter().find(|(n, _)| *n) {
                return Err(Error::Config(format!("`seed` is required by {what}")));
            }
        }
        Ok(())
    }

    fn dims(&self) -> Result<(usize, usize)> {
        match (&self.cps.preset, self.cps.d, self.cps.m, &self.cps.basis) {
            (Some(p), None, None, None) if p == "fibonacci" => Ok((1, 1)),
            (Some(p), _, _, _) if p != "fibonacci" => {
                Err(Error::Config(format!("unknown cps `preset` \"{p}\"")))
            }
            (Some(_), ..) => Err(Error::Config(
                "cps `preset` excludes `d`, `m` and `basis`".into(),
            )),
            (None, Some(d), Some(m), Some(_)) if d > 0 && m > 0 => Ok((d, m)),
            _ => Err(Error::Config(
                "cps needs `preset` or positive `d`, `m` and `basis`".into(),
            )),
        }
    }

    pub fn enabled(&self, criterion: &str) -> bool {
        self.criteria
            .as_ref()
            .is_none_or(|list| list.iter().any(|c| c == criterion))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        full_digest(&serde_json::to_vec(self).expect("config serializes"))
    }
}

/// Append the line of the first mention of the backquoted key in `msg`.
fn locate(text: &str, msg: &str) -> String {
    let key = msg
        .split('`')
        .nth(1)
        .map(|k| k.rsplit('.').next().unwrap_or(k));
    let line = key.and_then(|k| {
        text.lines()
            .position(|l| {
                let l = l.trim_start().trim_start_matches('"');
                l.starts_with(k)
                    && l[k.len()..]
                        .trim_start()
                        .trim_start_matches('"')
                        .trim_start()
                        .starts_with(['=', ':'])
            })
            .map(|i| i + 1)
    });
    match line {
        Some(n) => format!("{msg} (line {n})"),
        None => msg.to_string(),
    }
}

/// A validated scenario with its scheme, window and parameters built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub config_hash: String,
    pub cps: Cps,
    pub window: Window,
    pub counterexample: Option<BorelCounterexample>,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let config_hash = config.hash();
        let (d, m) = config.dims()?;
        let cps = match &config.cps.basis {
            None => {
                let tau = TAU;
                let rows = vec![vec![1.0, tau], vec![1.0, 1.0 - tau]];
                make_cps_from_rows(1, 1, &rows, &config.cps.witness)?
            }
            Some(rows) => make_cps_from_rows(d, m, rows, &config.cps.witness)?,
        };
        let flat = |list: &[Vec<f64>]| -> Result<Vec<Aabb>> {
            list.iter().map(|b| Aabb::from_flat(b)).collect()
        };
        let geometric = match config.window.preset.as_deref() {
            Some("fibonacci") if m == 1 => vec![Aabb::interval(-1.0, TAU - 1.0)],
            Some("fibonacci") => {
                return Err(Error::Config("the fibonacci window needs m = 1".into()))
            }
            _ => flat(&config.window.boxes)?,
        };
        let base = Window::new(
            m,
            geometric,
            flat(&config.window.point_free)?,
            config.window.include.clone(),
            config.window.exclude.clone(),
        )?;

        let (s, t) = match config.params.mode {
            ParamMode::Fixed => (
                config.params.s.clone().unwrap_or_else(|| vec![0.0; d]),
                config.params.t.clone().unwrap_or_else(|| vec![0.0; m]),
            ),
            ParamMode::Generic => {
                fundamental_domain_draw(&cps, &mut stream(config.seed, STREAM_PARAMS))
            }
        };

        let (window, counterexample) = match &config.window.counterexample {
            None => (base, None),
            Some(cx) => {
                let r = *config.radii.last().expect("validated");
                let ex = make_borel_counterexample(
                    &cps,
                    &base,
                    &cx.gamma,
                    cx.a,
                    &Aabb::centered(d, r),
                    cx.search_range,
                )?;
                (ex.window.clone(), Some(ex))
            }
        };
        Ok(Self {
            config,
            config_hash,
            cps,
            window,
            counterexample,
            s,
            t,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(ScenarioConfig::load(path)?)
    }

    fn d(&self) -> usize {
        self.cps.d()
    }

    fn m(&self) -> usize {
        self.cps.m()
    }

    fn cut(&self, w: &Window, s: &[f64], t: &[f64], r: f64) -> Result<Patch> {
        cut_project(&self.cps, w, s, t, &Aabb::centered(self.d(), r))
    }

    /// Patches at the scenario parameters, one per radius.
    pub fn patches(&self) -> Result<Vec<Patch>> {
        self.config
            .radii
            .iter()
            .map(|&r| self.cut(&self.window, &self.s, &self.t, r))
            .collect()
    }

    fn largest(&self) -> Result<Patch> {
        self.cut(
            &self.window,
            &self.s,
            &self.t,
            *self.config.radii.last().expect("validated"),
        )
    }

    /// `cmd_generate`: CSV and JSON per radius.
    pub fn generate(&self) -> Result<Vec<Artifact>> {
        let mut out = Vec::new();
        for p in self.patches()? {
            let stem = format!("patch_R{}", p.half_width());
            out.push(Artifact::new(
                format!("{stem}.csv"),
                output::patch_csv(&p, self.m(), &self.config_hash)?,
            ));
            out.push(Artifact::new(
                format!("{stem}.json"),
                output::patch_json(&p, &self.window, &self.config_hash)?,
            ));
        }
        Ok(out)
    }

    fn density_table(&self) -> Result<crate::averaging::ConvergenceTable> {
        let pred = lattice_density(&self.cps) * measure(&self.window);
        convergence_scan(
            &ScanOp::Density,
            &self.patches()?,
            Complex64::new(pred, 0.0),
        )
    }

    pub fn density_scan(&self) -> Result<Vec<Artifact>> {
        let table = self.density_table()?;
        Ok(vec![Artifact::new(
            "density_convergence.csv",
            output::convergence_csv(&table, &self.config_hash)?,
        )])
    }

    fn autocorrelation_report(&self) -> Result<ComparisonReport> {
        let max_range = self.config.autocorrelation.max_range;
        let p = self.largest()?;
        let emp = autocorrelation_estimate(&p, &self.cps, max_range)?;
        let pred = predicted_autocorrelation(&self.cps, &self.window, max_range)?;
        let mut keys: Vec<&Vec<i64>> = emp.coefficients.keys().chain(pred.keys()).collect();
        keys.sort();
        keys.dedup();
        let tol = self.config.tolerances.autocorrelation;
        let rows = keys
            .into_iter()
            .map(|n| {
                ComparisonRow::real(
                    format!("n={n:?}"),
                    pred.get(n).map_or(0.0, |c| c.value),
                    emp.value(n),
                    tol,
                )
            })
            .collect();
        Ok(ComparisonReport {
            predicted_source: format!("dens(L)·c_W(z⋆), window {}", self.window.id()),
            empirical_source: format!("η over R = {}", p.half_width()),
            rows,
        })
    }

    pub fn autocorr(&self) -> Result<Vec<Artifact>> {
        let report = self.autocorrelation_report()?;
        Ok(vec![
            Artifact::new(
                "autocorrelation.csv",
                output::report_csv(&report, &self.config_hash)?,
            ),
            Artifact::new(
                "autocorrelation.txt",
                output::report_summary("autocorrelation", &report, &self.config_hash),
            ),
        ])
    }

    fn spectrum(&self) -> Result<DiffractionSpectrum> {
        predicted_diffraction(
            &self.cps,
            &self.window,
            self.config.spectrum.k_max,
            self.config.spectrum.threshold,
        )
    }

    pub fn diffract(&self) -> Result<Vec<Artifact>> {
        Ok(vec![Artifact::new(
            "spectrum.csv",
            output::spectrum_csv(&self.spectrum()?, &self.config_hash)?,
        )])
    }

    /// Peaks checked by the CPP and phase criteria: nonnegative frequencies,
    /// strongest first, `top` of them or all when `top` is zero.
    fn checked_peaks(&self, spectrum: &DiffractionSpectrum) -> Vec<Peak> {
        let keep = |p: &Peak| p.k.iter().all(|&k| k >= 0.0);
        let count = match self.config.spectrum.top {
            0 => usize::MAX,
            n => n,
        };
        spectrum
            .strongest(count, keep)
            .into_iter()
            .cloned()
            .collect()
    }

    fn cpp_reports(&self, patch: &Patch) -> Result<(ComparisonReport, ComparisonReport)> {
        let spectrum = self.spectrum()?;
        let peaks = self.checked_peaks(&spectrum);
        let tol = self.config.tolerances.cpp;
        let fbs = peaks
            .iter()
            .map(|p| fourier_bohr_estimate(patch, &p.k))
            .collect::<Result<Vec<_>>>()?;
        let sub = DiffractionSpectrum {
            peaks: peaks.clone(),
            ..spectrum
        };
        let mut cpp = cpp_check(&sub, &fbs, tol)?;
        cpp.empirical_source = format!("|a(k)|² over R = {}", patch.half_width());
        let mut rows = Vec::with_capacity(peaks.len());
        for (p, fb) in peaks.iter().zip(&fbs) {
            let pred = predicted_fourier_bohr(
                &self.cps,
                &self.window,
                &patch.s,
                &patch.t,
                &p.k,
                &self.config.spectrum.dual_match,
            )?;
            rows.push(ComparisonRow::new(
                format!("k={:?}", p.k),
                pred,
                fb.value,
                tol,
            ));
        }
        let phase = ComparisonReport {
            predicted_source: "dens(L)·e^{2πi(k·s + l·t)}·1̂_W(−l)".into(),
            empirical_source: format!("a(k) over R = {}", patch.half_width()),
            rows,
        };
        Ok((cpp, phase))
    }

    fn non_dual_frequencies(&self) -> Vec<Vec<f64>> {
        let mut rng = stream(self.config.seed, STREAM_NON_DUAL);
        let k_max = self.config.spectrum.k_max;
        (0..self.config.spectrum.non_dual)
            .map(|_| (0..self.d()).map(|_| rng.gen_range(0.0..k_max)).collect())
            .collect()
    }

    /// Fourier–Bohr comparisons at configured, non-dual and peak
    /// frequencies.
    fn non_dual_report(&self, patch: &Patch) -> Result<ComparisonReport> {
        let tol = self.config.tolerances.non_dual;
        let mut rows = Vec::new();
        for k in self.non_dual_frequencies() {
            let pred = predicted_fourier_bohr(
                &self.cps,
                &self.window,
                &patch.s,
                &patch.t,
                &k,
                &self.config.spectrum.dual_match,
            )?;
            let emp = fourier_bohr_estimate(patch, &k)?;
            let mut row = ComparisonRow::new(format!("k={k:?}"), pred, emp.value, tol);
            if pred != Complex64::new(0.0, 0.0) {
                row.label.push_str(" (dual)");
            }
            rows.push(row);
        }
        Ok(ComparisonReport {
            predicted_source: "a(k) = 0 off the dual projection".into(),
            empirical_source: format!("a(k) over R = {}", patch.half_width()),
            rows,
        })
    }

    pub fn fbcoeff(&self) -> Result<Vec<Artifact>> {
        let patch = self.largest()?;
        let (cpp, phase) = self.cpp_reports(&patch)?;
        let non_dual = self.non_dual_report(&patch)?;
        let tol = self.config.tolerances.cpp;
        let mut extra = ComparisonReport {
            predicted_source: phase.predicted_source.clone(),
            empirical_source: phase.empirical_source.clone(),
            rows: Vec::new(),
        };
        for k in &self.config.spectrum.frequencies {
            if k.len() != self.d() {
                return Err(Error::Config(format!(
                    "frequency {k:?} needs {} coordinates",
                    self.d()
                )));
            }
            let pred = predicted_fourier_bohr(
                &self.cps,
                &self.window,
                &patch.s,
                &patch.t,
                k,
                &self.config.spectrum.dual_match,
            )?;
            let emp = fourier_bohr_estimate(&patch, k)?;
            extra
                .rows
                .push(ComparisonRow::new(format!("k={k:?}"), pred, emp.value, tol));
        }
        let h = &self.config_hash;
        let mut out = vec![
            Artifact::new("cpp.csv", output::report_csv(&cpp, h)?),
            Artifact::new("fourier_bohr.csv", output::report_csv(&phase, h)?),
            Artifact::new("non_dual.csv", output::report_csv(&non_dual, h)?),
        ];
        if !extra.rows.is_empty() {
            out.push(Artifact::new(
                "frequencies.csv",
                output::report_csv(&extra, h)?,
            ));
        }
        let mut summary = output::report_summary("consistent phase property", &cpp, h);
        summary.push_str(&output::report_summary(
            "fourier-bohr coefficients",
            &phase,
            h,
        ));
        summary.push_str(&output::report_summary(
            "non-dual frequencies",
            &non_dual,
            h,
        ));
        out.push(Artifact::new("fourier_bohr.txt", summary));
        Ok(out)
    }

    /// Seeded draws `(s0, t0)` and their recoveries at two radii.
    fn torus_recoveries(&self) -> Result<Vec<(TorusRecovery, TorusRecovery)>> {
        let cfg = &self.config.torus;
        let mut rng = stream(self.config.seed, STREAM_TORUS);
        let mut out = Vec::with_capacity(cfg.draws);
        for _ in 0..cfg.draws {
            let (s0, t0) = fundamental_domain_draw(&self.cps, &mut rng);
            let mut pair = Vec::with_capacity(2);
            for r in [cfg.radius, cfg.coarse_radius] {
                let p = self.cut(&self.window, &s0, &t0, r)?;
                let recovered = recover_parameters(&p, &self.cps, &self.window)?;
                let contains_draw = recovered.contains_class(&self.cps, &s0, &t0)?;
                pair.push(TorusRecovery {
                    radius: r,
                    s0: s0.clone(),
                    t0: t0.clone(),
                    recovered,
                    contains_draw,
                });
            }
            let coarse = pair.pop().expect("two radii");
            let fine = pair.pop().expect("two radii");
            out.push((fine, coarse));
        }
        Ok(out)
    }

    pub fn torus_recover(&self) -> Result<Vec<Artifact>> {
        let mut recoveries = Vec::new();
        // the scenario's own parameters first
        let p = self.largest()?;
        let own = recover_parameters(&p, &self.cps, &self.window)?;
        let contains_draw = own.contains_class(&self.cps, &self.s, &self.t)?;
        recoveries.push(TorusRecovery {
            radius: p.half_width(),
            s0: self.s.clone(),
            t0: self.t.clone(),
            recovered: own,
            contains_draw,
        });
        if self.config.seed.is_some() {
            for (fine, coarse) in self.torus_recoveries()? {
                recoveries.push(fine);
                recoveries.push(coarse);
            }
        }
        Ok(vec![Artifact::new(
            "torus.json",
            output::torus_json(&recoveries, &self.config_hash)?,
        )])
    }

    /// `Γ`, `B_a` and the t = 0 comparisons for a counterexample scenario.
    pub fn borel_demo(&self) -> Result<Vec<Artifact>> {
        let ex = self.counterexample.as_ref().ok_or_else(|| {
            Error::Config("borel-demo needs a `window.counterexample` section".into())
        })?;
        let h = &self.config_hash;
        let zero_s = vec![0.0; self.d()];
        let zero_t = vec![0.0; self.m()];
        let r = *self.config.radii.last().expect("validated");
        let at_zero = self.cut(&self.window, &zero_s, &zero_t, r)?;
        let dens = lattice_density(&self.cps);
        let rho = crate::averaging::density_estimate(&at_zero)?;
        let tol = self.config.tolerances.density;
        let report = ComparisonReport {
            predicted_source: "dens(L)·θ(B_a)".into(),
            empirical_source: format!("Γ = cut at s = t = 0, R = {r}"),
            rows: vec![
                ComparisonRow::real("density", dens * measure(&self.window), rho, tol),
                ComparisonRow::real(
                    "gamma_size",
                    ex.gamma.len() as f64,
                    at_zero.len() as f64,
                    0.0,
                ),
            ],
        };
        let (cpp, _) = self.cpp_reports(&at_zero)?;
        let auto = {
            let max_range = self.config.autocorrelation.max_range;
            let emp = autocorrelation_estimate(&at_zero, &self.cps, max_range)?;
            let pred = predicted_autocorrelation(&self.cps, &self.window, max_range)?;
            let mut keys: Vec<&Vec<i64>> = emp.coefficients.keys().chain(pred.keys()).collect();
            keys.sort();
            keys.dedup();
            ComparisonReport {
                predicted_source: "dens(L)·c_{B_a}(z⋆)".into(),
                empirical_source: "η of Γ".into(),
                rows: keys
                    .into_iter()
                    .map(|n| {
                        ComparisonRow::real(
                            format!("n={n:?}"),
                            pred.get(n).map_or(0.0, |c| c.value),
                            emp.value(n),
                            self.config.tolerances.autocorrelation,
                        )
                    })
                    .collect(),
            }
        };
        let mut summary = output::report_summary("Borel window at t = 0: density", &report, h);
        summary.push_str(&output::report_summary(
            "Borel window at t = 0: autocorrelation",
            &auto,
            h,
        ));
        summary.push_str(&output::report_summary(
            "Borel window at t = 0: CPP",
            &cpp,
            h,
        ));
        Ok(vec![
            Artifact::new("gamma.csv", output::patch_csv(&at_zero, self.m(), h)?),
            Artifact::new(
                "borel_window.json",
                output::json_document(&serde_json::json!({
                    "config_hash": h,
                    "tool_version": TOOL_VERSION,
                    "cube": ex.cube,
                    "measure": measure(&self.window),
                    "window": self.window,
                }))?,
            ),
            Artifact::new("borel_density.csv", output::report_csv(&report, h)?),
            Artifact::new("borel_autocorrelation.csv", output::report_csv(&auto, h)?),
            Artifact::new("borel_cpp.csv", output::report_csv(&cpp, h)?),
            Artifact::new("borel.txt", summary),
        ])
    }

    /// Run every enabled criterion; module errors are recorded per
    /// criterion and the remaining ones still run.
    pub fn verify(&self) -> Result<(RunManifest, Vec<Artifact>)> {
        let mut artifacts: BTreeMap<String, Vec<Artifact>> = BTreeMap::new();
        let mut criteria = Vec::new();
        let largest = self.largest();
        for name in CRITERIA {
            if !self.config.enabled(name) {
                continue;
            }
            let outcome = match &largest {
                Err(e) => Err(e.clone()),
                Ok(p) => self.run_criterion(name, p, &mut artifacts),
            };
            let expect = self.config.expect.get(name).copied().unwrap_or_default();
            let result = match outcome {
                Ok(o) => CriterionResult {
                    name: name.into(),
                    verdict: match (o.pass, expect) {
                        (true, Expectation::Pass) => Verdict::Pass,
                        (false, Expectation::Pass) => Verdict::Fail,
                        (false, Expectation::ExpectedFail) => Verdict::ExpectedFail,
                        (true, Expectation::ExpectedFail) => Verdict::UnexpectedPass,
                    },
                    metric: o.metric,
                    tolerance: o.tolerance,
                    detail: o.detail,
                },
                Err(e) => CriterionResult {
                    name: name.into(),
                    verdict: Verdict::Error,
                    metric: None,
                    tolerance: None,
                    detail: e.to_string(),
                },
            };
            criteria.push(result);
        }

        let mut summary = format!(
            "scenario: {}\nconfig_hash: {}\ntool_version: {TOOL_VERSION}\n",
            self.config.name, self.config_hash
        );
        for c in &criteria {
            summary.push_str(&format!(
                "[{}] {}: {}\n",
                c.verdict.label(),
                c.name,
                c.detail
            ));
        }
        let ok = criteria.iter().all(|c| c.verdict.ok());
        summary.push_str(if ok {
            "verdict: OK\n"
        } else {
            "verdict: FAILED\n"
        });
        artifacts
            .entry("verify".into())
            .or_default()
            .push(Artifact::new("summary.txt", summary));

        let mut names: BTreeMap<String, Vec<String>> = artifacts
            .iter()
            .map(|(cmd, list)| (cmd.clone(), list.iter().map(|a| a.name.clone()).collect()))
            .collect();
        names
            .entry("verify".into())
            .or_default()
            .push("manifest.json".into());
        let manifest = RunManifest {
            name: self.config.name.clone(),
            config_hash: self.config_hash.clone(),
            tool_version: TOOL_VERSION.into(),
            artifacts: names,
            criteria,
            manifest_hash: String::new(),
        }
        .seal()?;
        let mut files: Vec<Artifact> = artifacts.into_values().flatten().collect();
        files.push(Artifact::new(
            "manifest.json",
            output::json_document(&manifest)?,
        ));
        Ok((manifest, files))
    }

    fn run_criterion(
        &self,
        name: &str,
        patch: &Patch,
        artifacts: &mut BTreeMap<String, Vec<Artifact>>,
    ) -> Result<Outcome> {
        let h = &self.config_hash;
        let tol = &self.config.tolerances;
        let mut emit =
            |cmd: &str, a: Artifact| artifacts.entry(cmd.to_string()).or_default().push(a);
        match name {
            "density" => {
                let table = self.density_table()?;
                emit(
                    "density-scan",
                    Artifact::new(
                        "density_convergence.csv",
                        output::convergence_csv(&table, h)?,
                    ),
                );
                let err = table.final_error().unwrap_or(f64::INFINITY);
                Ok(Outcome::metric(
                    err < tol.density && table.error_tail_non_increasing,
                    err,
                    tol.density,
                    format!(
                        "final error {err:.3e}, errors non-increasing in R: {}",
                        table.error_tail_non_increasing
                    ),
                ))
            }
            "autocorrelation" => {
                let report = self.autocorrelation_report()?;
                emit(
                    "autocorr",
                    Artifact::new("autocorrelation.csv", output::report_csv(&report, h)?),
                );
                Ok(Outcome::report(
                    &report,
                    tol.autocorrelation,
                    "lattice differences",
                ))
            }
            "cpp" | "fourier_bohr" => {
                let (cpp, phase) = self.cpp_reports(patch)?;
                let (report, file) = if name == "cpp" {
                    (cpp, "cpp.csv")
                } else {
                    (phase, "fourier_bohr.csv")
                };
                emit(
                    "fbcoeff",
                    Artifact::new(file, output::report_csv(&report, h)?),
                );
                Ok(Outcome::report(&report, tol.cpp, "peaks"))
            }
            "non_dual" => {
                let report = self.non_dual_report(patch)?;
                emit(
                    "fbcoeff",
                    Artifact::new("non_dual.csv", output::report_csv(&report, h)?),
                );
                if let Some(row) = report.rows.iter().find(|r| r.label.ends_with("(dual)")) {
                    return Err(Error::Config(format!(
                        "seeded frequency {} lies on the dual projection",
                        row.label
                    )));
                }
                Ok(Outcome::report(&report, tol.non_dual, "frequencies"))
            }
            "spectrum_oracle" => {
                let spectrum = self.spectrum()?;
                emit(
                    "diffract",
                    Artifact::new("spectrum.csv", output::spectrum_csv(&spectrum, h)?),
                );
                let radius = self.config.spectrum.oracle_radius;
                let cube = (2 * radius as u128 + 1).pow((self.d() + self.m()) as u32);
                if radius <= 0 || cube > 100_000 {
                    return Err(Error::Config(format!(
                        "spectrum.oracle_radius = {radius} gives a cube of {cube} points (allowed 1..=100000)"
                    )));
                }
                let oracle = crate::oracle::scan_peaks(
                    &self.cps,
                    &self.window,
                    self.config.spectrum.k_max,
                    self.config.spectrum.threshold,
                    radius,
                );
                let same = oracle == spectrum.peaks;
                Ok(Outcome::flag(
                    same,
                    format!(
                        "{} predicted peaks, {} from the integer-cube scan, equal: {same}",
                        spectrum.peaks.len(),
                        oracle.len()
                    ),
                ))
            }
            "translation" => self.translation_outcome(),
            "neutrality" => {
                let plain = self.window.with_overrides(Vec::new(), Vec::new())?;
                let max_range = self.config.autocorrelation.max_range;
                let same = predicted_autocorrelation(&self.cps, &self.window, max_range)?
                    == predicted_autocorrelation(&self.cps, &plain, max_range)?
                    && self.spectrum()?
                        == predicted_diffraction(
                            &self.cps,
                            &plain,
                            self.config.spectrum.k_max,
                            self.config.spectrum.threshold,
                        )?
                    && measure(&self.window) == measure(&plain);
                Ok(Outcome::flag(
                    same,
                    format!(
                        "{} override points; predictions bitwise equal without them: {same}",
                        self.window.include_points().len() + self.window.exclude_points().len()
                    ),
                ))
            }
            "torus" => {
                let pairs = self.torus_recoveries()?;
                let mut flat = Vec::with_capacity(2 * pairs.len());
                let mut good = 0;
                let mut shrink = true;
                for (fine, coarse) in pairs {
                    if fine.contains_draw && fine.recovered.verified {
                        good += 1;
                    }
                    shrink &= fine.recovered.max_width() <= coarse.recovered.max_width();
                    flat.push(fine);
                    flat.push(coarse);
                }
                emit(
                    "torus-recover",
                    Artifact::new("torus.json", output::torus_json(&flat, h)?),
                );
                let draws = self.config.torus.draws;
                Ok(Outcome::flag(
                    good == draws && shrink,
                    format!("{good}/{draws} draws recovered and verified, feasible boxes shrink with R: {shrink}"),
                ))
            }
            "genericity" => {
                let kernels = &self.config.birkhoff.kernels;
                let step = self.config.birkhoff.step.unwrap_or_else(|| {
                    kernels
                        .iter()
                        .map(|k| k.halfwidth)
                        .fold(f64::INFINITY, f64::min)
                        / 8.0
                });
                let mut rng = stream(self.config.seed, STREAM_BIRKHOFF);
                let r = *self.config.radii.last().expect("validated");
                let mut avg = [0.0; 2];
                for v in &mut avg {
                    let (s, t) = fundamental_domain_draw(&self.cps, &mut rng);
                    *v = birkhoff_product_average(
                        &self.cut(&self.window, &s, &t, r)?,
                        kernels,
                        step,
                    )?;
                }
                let gap = (avg[0] - avg[1]).abs();
                // two zero averages agree vacuously: the kernels see no configuration
                let degenerate = avg.iter().all(|&a| a == 0.0);
                Ok(Outcome::metric(
                    gap < tol.birkhoff && !degenerate,
                    gap,
                    tol.birkhoff,
                    format!("averages {:.6} and {:.6}, gap {gap:.3e}", avg[0], avg[1]),
                ))
            }
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }

    fn translation_outcome(&self) -> Result<Outcome> {
        let cfg = &self.config.translation;
        let region = Aabb::centered(self.d(), cfg.radius);
        let zs = vec![0.0; self.d()];
        let zt = vec![0.0; self.m()];
        let base = cut_project(&self.cps, &self.window, &zs, &zt, &region)?;
        let base_coords = base.coordinate_set();
        let mut rng = stream(self.config.seed, STREAM_TRANSLATION);
        let range = cfg.coordinate_range;
        let mut exact = 0;
        for _ in 0..cfg.count {
            let u: Vec<i64> = (0..self.d() + self.m())
                .map(|_| rng.gen_range(-range..=range))
                .collect();
            let lp = self.cps.point(&u);
            let a = cut_project(&self.cps, &self.window, &lp.x, &lp.x_star, &region)?;
            let same = a
                .points
                .iter()
                .map(|p| &p.x)
                .eq(base.points.iter().map(|p| &p.x));
            let b = cut_project(
                &self.cps,
                &self.window,
                &zs,
                &lp.x_star,
                &region.translate(&lp.x),
            )?;
            let shifted: Vec<Vec<i64>> = base_coords
                .iter()
                .map(|n| n.iter().zip(&u).map(|(a, b)| a + b).collect())
                .collect();
            if same && b.coordinate_set() == shifted {
                exact += 1;
            }
        }
        let mut detail = format!("{exact}/{} lattice translates exact", cfg.count);
        let mut pass = exact == cfg.count;
        if !cfg.inner.is_empty() {
            let boxes = cfg
                .inner
                .iter()
                .map(|b| Aabb::from_flat(b))
                .collect::<Result<Vec<_>>>()?;
            let u = Window::from_boxes(self.m(), boxes)?;
            let k = self.window.l1_class();
            let (rest, inner) = decompose(&self.cps, &k, &u, &region)?;
            let full = cut_project(&self.cps, &k, &zs, &zt, &region)?.coordinate_set();
            let mut union = rest.coordinate_set();
            union.extend(inner.coordinate_set());
            union.sort();
            let disjoint = union.windows(2).all(|p| p[0] != p[1]);
            let partition = disjoint && union == full;
            pass &= partition;
            detail.push_str(&format!(
                "; decomposition into {} + {} points is an exact partition: {partition}",
                rest.len(),
                inner.len()
            ));
        }
        Ok(Outcome::flag(pass, detail))
    }
}

struct Outcome {
    pass: bool,
    metric: Option<f64>,
    tolerance: Option<f64>,
    detail: String,
}

impl Outcome {
    fn flag(pass: bool, detail: String) -> Self {
        Self {
            pass,
            metric: None,
            tolerance: None,
            detail,
        }
    }

    fn metric(pass: bool, metric: f64, tolerance: f64, detail: String) -> Self {
        Self {
            pass,
            metric: Some(metric),
            tolerance: Some(tolerance),
            detail,
        }
    }

    fn report(report: &ComparisonReport, tolerance: f64, what: &str) -> Self {
        let worst = report.max_error();
        let failures = report.failures().count();
        Self::metric(
            !report.rows.is_empty() && failures == 0,
            worst,
            tolerance,
            format!(
                "{} {what}, {failures} outside {tolerance:.0e}, max error {worst:.3e}",
                report.rows.len()
            ),
        )
    }
}

/// Stream `index` of the ChaCha generator seeded with `seed`.
fn stream(seed: Option<u64>, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
    rng.set_stream(index);
    rng
}
