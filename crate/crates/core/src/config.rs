use serde::{Deserialize, Serialize};

/// Numeric thresholds shared by every construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Preactivations at or below this count as zero output.
    pub activation: f64,
    /// Singular values below `rank * sigma_max` are dropped.
    pub rank: f64,
    /// Margin every constructed preactivation keeps from zero.
    pub margin: f64,
    /// Largest accepted interpolation residual.
    pub exactness: f64,
    /// Optimal LP margin above which sets count as separable.
    pub lp_feasibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            activation: 1e-9,
            rank: 1e-9,
            margin: 1e-6,
            exactness: 1e-8,
            lp_feasibility: 1e-7,
        }
    }
}

/// Perturbation settings for hyperplane bundles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BundleConfig {
    /// Explicit perturbation seeds; empty means `default_epsilons(n)`.
    pub epsilons: Vec<f64>,
    pub margin: f64,
    /// How many times the perturbation-to-base ratio may be halved.
    pub max_halvings: usize,
}

impl Default for BundleConfig {
    fn default() -> Self {
        BundleConfig {
            epsilons: Vec::new(),
            margin: 1e-6,
            max_halvings: 60,
        }
    }
}

impl BundleConfig {
    /// Seeds for dimension `n`: i/(n+1) for i = 1..=n.
    pub fn default_epsilons(n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
    }

    pub fn epsilons_for(&self, n: usize) -> Vec<f64> {
        if self.epsilons.len() >= n {
            self.epsilons[..n].to_vec()
        } else {
            Self::default_epsilons(n)
        }
    }
}

/// Global settings, loadable from a JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub tolerances: Tolerances,
    pub bundle: BundleConfig,
    pub seed: u64,
    /// Hyperplane count cap for brute-force region enumeration.
    pub region_cap: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tolerances: Tolerances::default(),
            bundle: BundleConfig::default(),
            seed: 7,
            region_cap: 12,
        }
    }
}
