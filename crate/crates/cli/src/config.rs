//! Run configuration: a TOML document with one section per subcommand.
//!
//! Every table rejects unknown keys. Missing keys take the defaults below.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use fdareg::estimator::{BandwidthGrid, CvSpec, DistanceKind};
use fdareg::forecast::IngestOptions;
use fdareg::semimetric::LocatorKind;
use fdareg::simulate::{DgpConfig, EstimatorSpec, RegressionTarget, WienerConfig};
use fdareg::{KernelSpec, Method, ResponseTransform};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory; not part of the configuration hash.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Directory relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    pub flc: Tuning,
    pub fll: Tuning,
    pub simulate: SimulateSection,
    pub ratecheck: RatecheckSection,
    pub forecast: ForecastSection,
    pub cv: CvSection,
    pub diagnose: DiagnoseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: None,
            base_dir: PathBuf::new(),
            flc: Tuning::default(),
            fll: Tuning::default(),
            simulate: SimulateSection::default(),
            ratecheck: RatecheckSection::default(),
            forecast: ForecastSection::default(),
            cv: CvSection::default(),
            diagnose: DiagnoseSection::default(),
        }
    }
}

/// Overrides applied to the default cross-validation setup of one method.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tuning {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<DistanceKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locator: Option<LocatorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<BandwidthGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_d: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_beta: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<ResponseTransform>,
}

impl Tuning {
    pub fn cv_spec(&self, method: Method) -> CvSpec {
        let mut spec = CvSpec::new(method);
        if let Some(k) = self.kernel {
            spec.kernel = k;
        }
        if let Some(d) = self.distance {
            spec.distance = d;
        }
        if let Some(l) = self.locator {
            spec.locator = l;
        }
        if let Some(b) = &self.bandwidths {
            spec.bandwidths = b.clone();
        }
        if let Some(r) = &self.r_d {
            spec.r_d = r.clone();
        }
        if let Some(r) = &self.r_beta {
            spec.r_beta = r.clone();
        }
        if let Some(t) = self.transform {
            spec.transform = t;
        }
        spec
    }

    fn validate(&self, what: &str) -> Result<()> {
        let check_dims = |v: &Option<Vec<usize>>, key: &str| -> Result<()> {
            if let Some(v) = v {
                ensure!(!v.is_empty(), "{what}.{key} must not be empty");
                ensure!(
                    v.iter().all(|r| *r >= 1),
                    "{what}.{key} entries must be >= 1"
                );
            }
            Ok(())
        };
        check_dims(&self.r_d, "r_d")?;
        check_dims(&self.r_beta, "r_beta")?;
        match &self.bandwidths {
            Some(BandwidthGrid::DistanceQuantiles(q)) => ensure!(
                !q.is_empty() && q.iter().all(|q| *q > 0.0 && *q <= 1.0),
                "{what}.bandwidths quantiles must be nonempty and lie in (0, 1]"
            ),
            Some(BandwidthGrid::Explicit(h)) => ensure!(
                !h.is_empty() && h.iter().all(|h| *h > 0.0 && h.is_finite()),
                "{what}.bandwidths values must be nonempty, positive and finite"
            ),
            None => {}
        }
        if let Some(t) = self.transform {
            t.validate().with_context(|| format!("{what}.transform"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub n: usize,
    pub replicates: usize,
    pub alphas: Vec<f64>,
    pub grid_points: usize,
    pub truncation: usize,
    pub u_variance: f64,
    pub target: RegressionTarget,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            n: 100,
            replicates: 50,
            alphas: vec![0.0, 1.0 / 3.0, 2.0 / 3.0],
            grid_points: 100,
            truncation: 100,
            u_variance: 0.01,
            target: RegressionTarget::default(),
        }
    }
}

impl SimulateSection {
    pub fn dgp(&self, n: usize, alpha: f64, seed: u64) -> Result<DgpConfig> {
        let grid = std::sync::Arc::new(fdareg::curve::make_uniform_grid(self.grid_points)?);
        let dgp = DgpConfig {
            n,
            ar_alpha: alpha,
            u_variance: self.u_variance,
            wiener: WienerConfig::new(grid, self.truncation)?,
            target: self.target,
            seed,
        };
        dgp.validate()?;
        Ok(dgp)
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.n >= 3, "simulate.n must be at least 3");
        ensure!(self.replicates >= 1, "simulate.replicates must be positive");
        ensure!(!self.alphas.is_empty(), "simulate.alphas must not be empty");
        ensure!(
            self.grid_points >= 1,
            "simulate.grid_points must be positive"
        );
        for a in &self.alphas {
            self.dgp(self.n, *a, 0).context("simulate")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Flc,
    Fll,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatecheckSection {
    pub n: Vec<usize>,
    pub replicates: usize,
    pub alphas: Vec<f64>,
    pub methods: Vec<MethodName>,
}

impl Default for RatecheckSection {
    fn default() -> Self {
        Self {
            n: vec![50, 100, 200, 400],
            replicates: 20,
            alphas: vec![0.0],
            methods: vec![MethodName::Flc, MethodName::Fll],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSection {
    pub input: Option<PathBuf>,
    pub window: usize,
    pub cv_refresh: usize,
    pub gw_level: f64,
    pub ingest: IngestOptions,
}

impl Default for ForecastSection {
    fn default() -> Self {
        Self {
            input: None,
            window: 1081,
            cv_refresh: 250,
            gw_level: 0.05,
            ingest: IngestOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSection {
    /// Functional sample CSV (`response,t1,...,tp`).
    pub input: Option<PathBuf>,
    pub methods: Vec<MethodName>,
}

impl Default for CvSection {
    fn default() -> Self {
        Self {
            input: None,
            methods: vec![MethodName::Flc, MethodName::Fll],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseSection {
    /// Functional sample CSV; when absent a sample is simulated from `[simulate]`.
    pub input: Option<PathBuf>,
    pub r: usize,
    pub quantiles: Vec<f64>,
    /// Index of the curve the balls are centered on.
    pub center: usize,
    /// Number of equally spaced radii up to the largest pairwise distance.
    pub radii: usize,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        Self {
            input: None,
            r: 3,
            quantiles: (1..=20).map(|k| k as f64 * 0.05).collect(),
            center: 0,
            radii: 50,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base_dir = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Ok(cfg)
    }

    pub fn flc_spec(&self) -> EstimatorSpec {
        EstimatorSpec {
            name: "FLC".into(),
            cv: self.flc.cv_spec(Method::Flc),
        }
    }

    pub fn fll_spec(&self) -> EstimatorSpec {
        EstimatorSpec {
            name: "FLL".into(),
            cv: self.fll.cv_spec(Method::Fll),
        }
    }

    pub fn spec_for(&self, m: MethodName) -> EstimatorSpec {
        match m {
            MethodName::Flc => self.flc_spec(),
            MethodName::Fll => self.fll_spec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.flc.validate("flc")?;
        self.fll.validate("fll")?;
        self.simulate.validate()?;

        let rc = &self.ratecheck;
        ensure!(rc.n.len() >= 3, "ratecheck.n needs at least 3 sample sizes");
        ensure!(
            rc.n.windows(2).all(|w| w[1] > w[0]) && rc.n[0] >= 3,
            "ratecheck.n must be increasing and at least 3"
        );
        ensure!(rc.replicates >= 1, "ratecheck.replicates must be positive");
        ensure!(!rc.alphas.is_empty(), "ratecheck.alphas must not be empty");
        ensure!(
            !rc.methods.is_empty(),
            "ratecheck.methods must not be empty"
        );
        for a in &rc.alphas {
            self.simulate.dgp(rc.n[0], *a, 0).context("ratecheck")?;
        }

        let fc = &self.forecast;
        ensure!(
            fc.window >= fdareg::forecast::MIN_WINDOW,
            "forecast.window must be at least {}",
            fdareg::forecast::MIN_WINDOW
        );
        ensure!(fc.cv_refresh >= 1, "forecast.cv_refresh must be positive");
        ensure!(
            fc.gw_level > 0.0 && fc.gw_level < 1.0,
            "forecast.gw_level must lie in (0, 1)"
        );

        ensure!(!self.cv.methods.is_empty(), "cv.methods must not be empty");

        let dg = &self.diagnose;
        ensure!(dg.r >= 1, "diagnose.r must be >= 1");
        ensure!(dg.radii >= 1, "diagnose.radii must be positive");
        ensure!(
            !dg.quantiles.is_empty() && dg.quantiles.iter().all(|q| *q > 0.0 && *q <= 1.0),
            "diagnose.quantiles must be nonempty and lie in (0, 1]"
        );
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> Result<String> {
        let canonical = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&canonical)))
    }

    /// Resolves an input path against the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn require_input(&self, input: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        match input {
            Some(p) => Ok(self.resolve(p)),
            None => bail!("{key} is required for this command"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("sede = 3").is_err());
        assert!(toml::from_str::<RunConfig>("[simulate]\nnn = 3").is_err());
        assert!(toml::from_str::<RunConfig>("[fll]\nkernal = \"cubic\"").is_err());
    }

    #[test]
    fn overrides_and_ranges() {
        let cfg: RunConfig = toml::from_str(
            "seed = 9\n[fll]\nkernel = \"cubic\"\nr_beta = [1]\n\
             bandwidths = { kind = \"explicit\", values = [0.5, 1.0] }\n",
        )
        .unwrap();
        let spec = cfg.fll.cv_spec(Method::Fll);
        assert_eq!(spec.kernel, KernelSpec::Cubic);
        assert_eq!(spec.r_beta, vec![1]);
        assert_eq!(spec.bandwidths, BandwidthGrid::Explicit(vec![0.5, 1.0]));
        cfg.validate().unwrap();

        let bad: RunConfig = toml::from_str("[simulate]\nalphas = [1.0]").unwrap();
        assert!(bad.validate().is_err());
        let bad: RunConfig = toml::from_str("[ratecheck]\nn = [10, 20]").unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn hash_ignores_out_and_tracks_seed() {
        let a = RunConfig::default();
        let b = RunConfig {
            out: Some("elsewhere".into()),
            ..RunConfig::default()
        };
        let c = RunConfig {
            seed: 2,
            ..RunConfig::default()
        };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
