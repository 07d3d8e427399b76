//! Argument types, file formats and report builders behind the `admnet`
//! binary.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Subcommand};

#[derive(Args, Debug, serde::Serialize)]
pub struct FiniteArgs {
    /// Network file (JSON).
    #[arg(long)]
    pub network: PathBuf,
    /// Source vertex name.
    #[arg(long)]
    pub source: String,
    /// Grounded vertex names, separated by `,` or `;`.
    #[arg(long, default_value = "")]
    pub boundary: String,
    /// Frequency `RE,IM`.
    #[arg(long, allow_hyphen_values = true)]
    pub s: String,
    /// complex, t=T, tilde or check.
    #[arg(long, default_value = "complex")]
    pub kind: String,
    /// Series argument `RE,IM`.
    #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
    pub z: String,
    /// Also sum the first-passage power series.
    #[arg(long)]
    pub series: bool,
    /// Monte Carlo walks from every interior vertex (stochastic kinds).
    #[arg(long)]
    pub mc_walks: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct InfiniteArgs {
    /// Generator URI, e.g. `line`, `tree:b=2`, `freegroup:k=2:assign=s,1/s`.
    #[arg(long)]
    pub generator: String,
    /// Source vertex code; defaults to the generator root.
    #[arg(long)]
    pub source: Option<String>,
    /// Frequencies `RE,IM` separated by `;`.
    #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
    pub s: String,
    #[arg(long, default_value_t = 30)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 250_000)]
    pub max_vertices: usize,
    /// Extra grounded vertex codes separated by `;`.
    #[arg(long, default_value = "")]
    pub grounded: String,
    /// Classify with the comparison kinds of every frequency.
    #[arg(long)]
    pub classify: bool,
    /// Infinite kernels on a window of vertices.
    #[arg(long)]
    pub kernels: bool,
    /// Window vertex codes separated by `;`.
    #[arg(long, default_value = "")]
    pub window: String,
    /// Energy of the exhaustion potentials.
    #[arg(long)]
    pub energy: bool,
}

#[derive(Args, Debug, serde::Serialize)]
pub struct TreeArgs {
    /// Tree generator URI, e.g. `tree:b=2`.
    #[arg(long)]
    pub generator: String,
    #[arg(long, allow_hyphen_values = true)]
    pub s: String,
    /// complex, t=T, tilde or check.
    #[arg(long, default_value = "complex")]
    pub kind: String,
    /// Series argument `RE,IM`; kernels at `z = 1` come from exhaustion.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[command(subcommand)]
    #[serde(skip)]
    pub action: TreeAction,
}

#[derive(Subcommand, Debug, Clone, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeAction {
    /// `K(x, xi)` for an end approximated by the ray prefix `xi`.
    Martin {
        #[arg(long)]
        x: String,
        #[arg(long)]
        xi: String,
    },
    /// Boundary distribution of a harmonic function given on the truncation.
    Represent {
        #[arg(long)]
        h: PathBuf,
    },
    /// `int K(x, .) d nu` for a distribution given on depth-`depth` arcs.
    Integrate {
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        x: String,
    },
}

#[derive(Args, Debug, serde::Serialize)]
pub struct FreeGroupArgs {
    #[arg(long)]
    pub k: usize,
    /// Edge symbols per generator, cycled: `1`, `s` or `1/s`.
    #[arg(long, default_value = "s,1/s")]
    pub assign: String,
    /// Angles `A0:A1:STEP` for `s = e^{i alpha}`.
    #[arg(long, default_value = "0:1.5:0.1", allow_hyphen_values = true)]
    pub alpha_grid: String,
}
