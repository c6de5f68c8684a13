//! Asymmetric kernels supported on `[0, 1]`, each normalized to unit mass.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    /// `1` on `[0, 1]`.
    Uniform,
    /// `2(1 − u)`.
    Triangle,
    /// `(3/2)(1 − u²)`.
    #[default]
    Quadratic,
    /// `(4/3)(1 − u³)`.
    Cubic,
}

impl KernelSpec {
    pub const ALL: [KernelSpec; 4] = [
        KernelSpec::Uniform,
        KernelSpec::Triangle,
        KernelSpec::Quadratic,
        KernelSpec::Cubic,
    ];

    /// `K(u)`; zero outside the closed interval `[0, 1]`.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self {
            KernelSpec::Uniform => 1.0,
            KernelSpec::Triangle => 2.0 * (1.0 - u),
            KernelSpec::Quadratic => 1.5 * (1.0 - u * u),
            KernelSpec::Cubic => (4.0 / 3.0) * (1.0 - u * u * u),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelSpec::Uniform => "uniform",
            KernelSpec::Triangle => "triangle",
            KernelSpec::Quadratic => "quadratic",
            KernelSpec::Cubic => "cubic",
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KernelSpec::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown kernel {s:?}")))
    }
}

pub fn kernel_eval(spec: KernelSpec, u: f64) -> f64 {
    spec.eval(u)
}

/// Kernel class with respect to the usual asymmetric-kernel conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelType {
    /// Bounded away from zero on `[0, 1]`.
    TypeI,
    /// `K(1) = 0` and nonincreasing on `[0, 1]`.
    TypeII,
    Unclassified,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub kernel: KernelSpec,
    pub integral: f64,
    pub integral_ok: bool,
    pub nonnegative: bool,
    pub kernel_type: KernelType,
    pub failures: Vec<String>,
}

impl KernelReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

const SIMPSON_PANELS: usize = 10_000;
const SCAN_POINTS: usize = 10_000;

fn simpson(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let n = if panels.is_multiple_of(2) {
        panels
    } else {
        panels + 1
    };
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Checks unit mass, nonnegativity and the type I / type II classification.
pub fn kernel_validate(spec: KernelSpec) -> KernelReport {
    let integral = simpson(|u| spec.eval(u), SIMPSON_PANELS);
    let integral_ok = (integral - 1.0).abs() <= 1e-6;

    let scan: Vec<f64> = (0..=SCAN_POINTS)
        .map(|i| spec.eval(i as f64 / SCAN_POINTS as f64))
        .collect();
    let nonnegative = scan.iter().all(|k| *k >= 0.0);
    let infimum = scan.iter().cloned().fold(f64::INFINITY, f64::min);
    let nonincreasing = scan.windows(2).all(|w| w[1] <= w[0]);

    let kernel_type = if infimum > 0.0 {
        KernelType::TypeI
    } else if spec.eval(1.0) == 0.0 && nonincreasing {
        KernelType::TypeII
    } else {
        KernelType::Unclassified
    };

    let mut failures = Vec::new();
    if !integral_ok {
        failures.push(format!("integral over [0,1] is {integral}, expected 1"));
    }
    if !nonnegative {
        failures.push("kernel takes negative values".to_string());
    }
    if kernel_type == KernelType::Unclassified {
        failures.push("kernel is neither type I nor type II".to_string());
    }
    KernelReport {
        kernel: spec,
        integral,
        integral_ok,
        nonnegative,
        kernel_type,
        failures,
    }
}
